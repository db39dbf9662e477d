use std::sync::OnceLock;

pub type Rgb = [u8; 3];

static TABLE: OnceLock<[Rgb; 256]> = OnceLock::new();

/// The fixed 256-entry blue -> green -> red lookup table in `data/colormap.txt`.
pub fn colormap() -> &'static [Rgb; 256] {
    TABLE.get_or_init(|| {
        let mut table = [[0u8; 3]; 256];
        let rows = include_str!("../../data/colormap.txt")
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let mut n = 0;
        for (slot, line) in table.iter_mut().zip(rows) {
            let mut it = line.split_whitespace().map(|v| v.parse::<u8>().expect("colormap entry"));
            *slot = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
            n += 1;
        }
        assert_eq!(n, 256, "colormap must have 256 entries");
        table
    })
}

/// Table index for a relevance in `[0, 1]`: `round(255 * s)`.
pub fn colormap_index(s: f64) -> usize {
    (s.clamp(0.0, 1.0) * 255.0).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_blue_and_red() {
        let t = colormap();
        assert_eq!(t[0], [0, 0, 255]);
        assert_eq!(t[255], [255, 0, 0]);
        assert_eq!(t[127], [0, 255, 0]);
        assert_eq!(colormap_index(0.5), 128);
        assert_eq!(colormap_index(2.0), 255);
    }
}
