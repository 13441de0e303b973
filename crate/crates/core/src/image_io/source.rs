use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Generator behind [`generate_uniform_source`], recorded in report provenance.
pub const UNIFORM_SOURCE_RNG: &str =
    "ChaCha20Rng::seed_from_u64 (rand_chacha 0.9), Rng::random::<f64>";

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("source length must be at least 1")]
    Empty,
    #[error("source value {value} at index {index} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
}

/// A 1-D toy signal with every value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceVector {
    values: Vec<f64>,
}

impl SourceVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SourceError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(SourceError::OutOfRange { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `n` iid draws from U[0, 1). Equal `(n, seed)` give bitwise-equal output.
pub fn generate_uniform_source(n: usize, seed: u64) -> Result<SourceVector, SourceError> {
    if n == 0 {
        return Err(SourceError::Empty);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.random::<f64>()).collect();
    Ok(SourceVector { values })
}

/// Evenly spaced grid `i / (n - 1)` covering both endpoints of `[0, 1]`.
pub fn uniform_grid(n: usize) -> Result<SourceVector, SourceError> {
    match n {
        0 => Err(SourceError::Empty),
        1 => Ok(SourceVector { values: vec![0.5] }),
        _ => {
            let last = (n - 1) as f64;
            Ok(SourceVector {
                values: (0..n).map(|i| i as f64 / last).collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = generate_uniform_source(5, 42).unwrap();
        let b = generate_uniform_source(5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_uniform_source(5, 43).unwrap());
        assert!(a.values().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn mean_within_standard_error() {
        let n = 100_000;
        let src = generate_uniform_source(n, 7).unwrap();
        let mean = src.values().iter().sum::<f64>() / n as f64;
        // Var[U(0,1)] = 1/12.
        let se = (1.0 / (12.0 * n as f64)).sqrt();
        assert!((mean - 0.5).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn zero_length_rejected() {
        assert_eq!(generate_uniform_source(0, 1), Err(SourceError::Empty));
        assert!(matches!(
            SourceVector::new(vec![0.2, 1.5]),
            Err(SourceError::OutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn grid_hits_endpoints() {
        let g = uniform_grid(5).unwrap();
        assert_eq!(g.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
