//! Scalar abstraction shared by the numeric modules.
//!
//! Metrics, losses and the scoring network are written once against
//! [`Scalar`] and instantiated for `f32` (the on-disk checkpoint precision)
//! and `f64` (gradient checks, oracles).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by every numeric routine in the crate.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; exact for values representable in `Self`.
    fn of(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar always converts to f64")
    }

    /// Conversion used when writing little-endian `f32` blobs.
    fn as_f32(self) -> f32 {
        self.to_f32().expect("Scalar always converts to f32")
    }

    fn of_usize(value: usize) -> Self {
        Self::of(value as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().copied().sum::<T>() / T::of_usize(values.len()))
}

/// Mean and population standard deviation.
pub fn mean_std<T: Scalar>(values: &[T]) -> Option<(T, T)> {
    let m = mean(values)?;
    let var = values.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::of_usize(values.len());
    Some((m, var.sqrt()))
}

/// Round half away from zero, which is what `Float::round` does.
pub fn round_half_away<T: Scalar>(value: T) -> T {
    value.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_of_constant_is_zero_spread() {
        let (m, s) = mean_std(&[2.0f64, 2.0, 2.0]).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(s, 0.0);
        assert!(mean::<f32>(&[]).is_none());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(round_half_away(2.5f64), 3.0);
        assert_eq!(round_half_away(-2.5f64), -3.0);
        assert_eq!(round_half_away(1.49f32), 1.0);
    }
}
