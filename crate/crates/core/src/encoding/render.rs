use std::io::Cursor;

use image::{ImageFormat, Rgb as Pixel, RgbImage};
use serde::{Deserialize, Serialize};

use crate::data::SaliencyMap;
use crate::scalar::Scalar;

use super::colormap::{colormap, colormap_index};
use super::EncodingError;

pub const DEFAULT_BLEND: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Rendering {
    #[default]
    HeatmapOverlay,
    BlurMask,
}

impl std::str::FromStr for Rendering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heatmap" | "heatmap_overlay" => Ok(Self::HeatmapOverlay),
            "blur" | "blur_mask" => Ok(Self::BlurMask),
            other => Err(format!("unknown rendering `{other}` (heatmap|blur)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedExplanation {
    pub pixels: RgbImage,
    pub rendering: Rendering,
}

impl RenderedExplanation {
    pub fn to_png(&self) -> Result<Vec<u8>, EncodingError> {
        encode_png(&self.pixels)
    }
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>, EncodingError> {
    let mut buf = Cursor::new(Vec::new());
    image.write_to(&mut buf, ImageFormat::Png).map_err(|e| EncodingError::Image(e.to_string()))?;
    Ok(buf.into_inner())
}

fn check_dims<T: Scalar>(image: &RgbImage, saliency: &SaliencyMap<T>) -> Result<(), EncodingError> {
    if image.width() as usize != saliency.width() || image.height() as usize != saliency.height() {
        return Err(EncodingError::DimMismatch {
            image: image.dimensions(),
            saliency: (saliency.width(), saliency.height()),
        });
    }
    if !saliency.is_unit_range() {
        return Err(EncodingError::OutOfRange);
    }
    Ok(())
}

fn to_channel(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// `pixel = (1 - blend) * image + blend * colormap(saliency)`, rounded per channel.
///
/// The saliency must already be in `[0, 1]`.
pub fn render_heatmap<T: Scalar>(
    image: &RgbImage,
    saliency: &SaliencyMap<T>,
    blend: f64,
) -> Result<RenderedExplanation, EncodingError> {
    if !(0.0..=1.0).contains(&blend) {
        return Err(EncodingError::Blend(blend));
    }
    check_dims(image, saliency)?;
    let table = colormap();
    let mut out = RgbImage::new(image.width(), image.height());
    for (x, y, px) in image.enumerate_pixels() {
        let color = table[colormap_index(saliency.get(x as usize, y as usize).as_f64())];
        let mut blended = [0u8; 3];
        for c in 0..3 {
            blended[c] = to_channel((1.0 - blend) * f64::from(px[c]) + blend * f64::from(color[c]));
        }
        out.put_pixel(x, y, Pixel(blended));
    }
    Ok(RenderedExplanation { pixels: out, rendering: Rendering::HeatmapOverlay })
}

/// Element-wise product of the image with the saliency, broadcast over channels.
pub fn render_blur<T: Scalar>(image: &RgbImage, saliency: &SaliencyMap<T>) -> Result<RenderedExplanation, EncodingError> {
    check_dims(image, saliency)?;
    let mut out = RgbImage::new(image.width(), image.height());
    for (x, y, px) in image.enumerate_pixels() {
        let s = saliency.get(x as usize, y as usize).as_f64();
        out.put_pixel(x, y, Pixel([0, 1, 2].map(|c| to_channel(f64::from(px[c]) * s))));
    }
    Ok(RenderedExplanation { pixels: out, rendering: Rendering::BlurMask })
}

pub fn render<T: Scalar>(
    image: &RgbImage,
    saliency: &SaliencyMap<T>,
    rendering: Rendering,
    blend: f64,
) -> Result<RenderedExplanation, EncodingError> {
    match rendering {
        Rendering::HeatmapOverlay => render_heatmap(image, saliency, blend),
        Rendering::BlurMask => render_blur(image, saliency),
    }
}
