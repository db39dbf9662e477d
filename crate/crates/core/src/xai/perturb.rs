use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

use super::XaiError;

/// How a perturbed pixel is produced. Magnitudes are fractions of the 0..=255 range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Adds `U(-amplitude, amplitude) * 255` per channel, then clips.
    UniformNoise { amplitude: f64 },
    /// Adds `N(0, sigma^2) * 255` per channel, then clips.
    GaussianNoise { sigma: f64 },
    /// Sets the pixel to zero.
    BlackPatch,
}

impl PerturbationKind {
    pub const DEFAULT_UNIFORM: Self = Self::UniformNoise { amplitude: 1.0 };
    pub const DEFAULT_GAUSSIAN: Self = Self::GaussianNoise { sigma: 0.1 };

    pub fn name(&self) -> &'static str {
        match self {
            Self::UniformNoise { .. } => "uniform_noise",
            Self::GaussianNoise { .. } => "gaussian_noise",
            Self::BlackPatch => "black_patch",
        }
    }
}

impl std::str::FromStr for PerturbationKind {
    type Err = XaiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" | "uniform_noise" => Ok(Self::DEFAULT_UNIFORM),
            "gaussian" | "gaussian_noise" => Ok(Self::DEFAULT_GAUSSIAN),
            "black" | "black_patch" => Ok(Self::BlackPatch),
            other => Err(XaiError::Invalid(format!("unknown perturbation '{other}'"))),
        }
    }
}

/// A perturbation kind plus the seed its noise is drawn from.
///
/// For a given `(seed, sample)` the noise is one fixed field over the image:
/// stream `derive(seed, sample)` is consumed pixel by pixel in row-major order,
/// three channels each. Perturbing a subset of pixels applies that field to the
/// subset only, so nested subsets see consistent values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationStrategy {
    pub kind: PerturbationKind,
    pub seed: u64,
}

impl PerturbationStrategy {
    pub fn new(kind: PerturbationKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn check(&self) -> Result<(), XaiError> {
        let ok = match self.kind {
            PerturbationKind::UniformNoise { amplitude } => amplitude.is_finite() && amplitude >= 0.0,
            PerturbationKind::GaussianNoise { sigma } => sigma.is_finite() && sigma >= 0.0,
            PerturbationKind::BlackPatch => true,
        };
        if ok {
            Ok(())
        } else {
            Err(XaiError::Invalid(format!("bad perturbation magnitude in {:?}", self.kind)))
        }
    }

    /// The perturbed value of every pixel of `image`, row-major.
    pub fn field(&self, image: &RgbImage, sample: u64) -> Vec<[u8; 3]> {
        let mut rng = SeededRng::stream(self.seed, sample);
        image
            .pixels()
            .map(|px| {
                let mut out = [0u8; 3];
                for (c, v) in px.0.iter().enumerate() {
                    out[c] = match self.kind {
                        PerturbationKind::UniformNoise { amplitude } => {
                            clip(*v as f64 + rng.uniform(-amplitude, amplitude) * 255.0)
                        }
                        PerturbationKind::GaussianNoise { sigma } => clip(*v as f64 + rng.normal() * sigma * 255.0),
                        PerturbationKind::BlackPatch => 0,
                    };
                }
                out
            })
            .collect()
    }

    /// Copy of `image` with every pixel perturbed.
    pub fn perturb_all(&self, image: &RgbImage, sample: u64) -> RgbImage {
        let field = self.field(image, sample);
        let mut out = image.clone();
        for (px, value) in out.pixels_mut().zip(field) {
            px.0 = value;
        }
        out
    }
}

/// Copy of `image` with the row-major pixel indices in `pixels` replaced from `field`.
pub(crate) fn apply_field(image: &RgbImage, field: &[[u8; 3]], pixels: &[usize]) -> RgbImage {
    let mut out = image.clone();
    let width = image.width() as usize;
    for &p in pixels {
        out.put_pixel((p % width) as u32, (p / width) as u32, image::Rgb(field[p]));
    }
    out
}

fn clip(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
