use serde::{Deserialize, Serialize};

use super::ChainError;
use crate::image_io::Signal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionKind {
    Mse,
    Rmse,
    Psnr,
}

impl DistortionKind {
    /// Maps an MSE to this kind. PSNR of a zero MSE is `+inf`.
    pub fn from_mse(self, mse: f64, peak: f64) -> f64 {
        match self {
            DistortionKind::Mse => mse,
            DistortionKind::Rmse => mse.sqrt(),
            DistortionKind::Psnr => {
                if mse == 0.0 {
                    f64::INFINITY
                } else {
                    10.0 * (peak * peak / mse).log10()
                }
            }
        }
    }
}

/// Sum of squared sample differences and the sample count.
pub fn squared_error(a: &Signal, b: &Signal) -> Result<(f64, usize), ChainError> {
    match (a, b) {
        (Signal::Image(x), Signal::Image(y))
            if (x.width(), x.height(), x.channels()) == (y.width(), y.height(), y.channels()) =>
        {
            let sse: u64 = x
                .samples()
                .iter()
                .zip(y.samples())
                .map(|(&p, &q)| {
                    let d = i64::from(p) - i64::from(q);
                    (d * d) as u64
                })
                .sum();
            Ok((sse as f64, x.samples().len()))
        }
        (Signal::Source(x), Signal::Source(y)) if x.len() == y.len() => {
            let sse = x
                .values()
                .iter()
                .zip(y.values())
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            Ok((sse, x.len()))
        }
        _ => Err(ChainError::DimensionMismatch),
    }
}

pub fn mse_to(a: &Signal, b: &Signal) -> Result<f64, ChainError> {
    let (sse, n) = squared_error(a, b)?;
    Ok(sse / n as f64)
}

/// MSE, RMSE, or PSNR with peak 255 for images and 1 for sources.
pub fn distortion(a: &Signal, b: &Signal, kind: DistortionKind) -> Result<f64, ChainError> {
    Ok(kind.from_mse(mse_to(a, b)?, a.peak()))
}

fn image_sse(a: &Signal, b: &Signal) -> Option<u128> {
    match (a, b) {
        (Signal::Image(x), Signal::Image(y)) => Some(
            x.samples()
                .iter()
                .zip(y.samples())
                .map(|(&p, &q)| {
                    let d = i128::from(p) - i128::from(q);
                    (d * d) as u128
                })
                .sum(),
        ),
        _ => None,
    }
}

/// `rmse(x, chain) <= rmse(x, single) + rmse(single, chain)`.
///
/// For images this is decided in exact integer arithmetic on the squared
/// error sums (the common `1/N` cancels): with `a = sse(x, chain)`,
/// `b = sse(x, single)`, `c = sse(single, chain)` the bound is
/// `a <= b + c` or `(a - b - c)^2 <= 4bc`. Sources compare in floating point.
pub fn rmse_triangle_holds(
    x: &Signal,
    single: &Signal,
    chain: &Signal,
) -> Result<bool, ChainError> {
    for (p, q) in [(x, chain), (x, single), (single, chain)] {
        squared_error(p, q)?;
    }
    match (
        image_sse(x, chain),
        image_sse(x, single),
        image_sse(single, chain),
    ) {
        (Some(a), Some(b), Some(c)) => {
            if a <= b + c {
                return Ok(true);
            }
            let excess = a - b - c;
            Ok(excess * excess <= 4 * b * c)
        }
        _ => {
            let lhs = distortion(x, chain, DistortionKind::Rmse)?;
            let rhs = distortion(x, single, DistortionKind::Rmse)?
                + distortion(single, chain, DistortionKind::Rmse)?;
            Ok(lhs <= rhs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_io::{ImageBuffer, SourceVector};
    use proptest::prelude::*;

    fn gray(s: Vec<u8>) -> Signal {
        Signal::Image(ImageBuffer::new(2, 2, 1, s).unwrap())
    }

    #[test]
    fn zero_and_single_pixel_cases() {
        let a = gray(vec![10, 20, 30, 40]);
        assert_eq!(distortion(&a, &a, DistortionKind::Mse).unwrap(), 0.0);
        assert_eq!(
            distortion(&a, &a, DistortionKind::Psnr).unwrap(),
            f64::INFINITY
        );
        let b = gray(vec![26, 20, 30, 40]);
        assert_eq!(distortion(&a, &b, DistortionKind::Mse).unwrap(), 64.0);
        assert_eq!(distortion(&a, &b, DistortionKind::Rmse).unwrap(), 8.0);
        // 10 log10(65025 / 64) = 30.0690...
        let psnr = distortion(&a, &b, DistortionKind::Psnr).unwrap();
        assert!((psnr - 30.069_003_868_840_234).abs() < 1e-9, "{psnr}");
    }

    #[test]
    fn source_peak_is_one() {
        let a = Signal::Source(SourceVector::new(vec![0.5, 0.5]).unwrap());
        let b = Signal::Source(SourceVector::new(vec![0.6, 0.4]).unwrap());
        let psnr = distortion(&a, &b, DistortionKind::Psnr).unwrap();
        assert!((psnr - 20.0).abs() < 1e-9);
    }

    #[test]
    fn mismatch_rejected() {
        let a = gray(vec![0; 4]);
        let b = Signal::Image(ImageBuffer::new(4, 1, 1, vec![0; 4]).unwrap());
        assert!(matches!(
            distortion(&a, &b, DistortionKind::Mse),
            Err(ChainError::DimensionMismatch)
        ));
        let s = Signal::Source(SourceVector::new(vec![0.0; 4]).unwrap());
        assert!(distortion(&a, &s, DistortionKind::Mse).is_err());
    }

    proptest! {
        #[test]
        fn rmse_triangle_always_holds(
            x in proptest::collection::vec(any::<u8>(), 16),
            y in proptest::collection::vec(any::<u8>(), 16),
            z in proptest::collection::vec(any::<u8>(), 16),
        ) {
            let mk = |v: Vec<u8>| Signal::Image(ImageBuffer::new(4, 4, 1, v).unwrap());
            prop_assert!(rmse_triangle_holds(&mk(x), &mk(y), &mk(z)).unwrap());
        }
    }

    #[test]
    fn mse_itself_is_not_a_metric() {
        // x=0, single=1, chain=2 on one pixel: MSE 4 > 1 + 1, RMSE 2 <= 1 + 1.
        let mk = |v| Signal::Image(ImageBuffer::new(1, 1, 1, vec![v]).unwrap());
        let (x, s, c) = (mk(0), mk(1), mk(2));
        let m = |a, b| distortion(a, b, DistortionKind::Mse).unwrap();
        assert!(m(&x, &c) > m(&x, &s) + m(&s, &c));
        assert!(rmse_triangle_holds(&x, &s, &c).unwrap());
    }
}
