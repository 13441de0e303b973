use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::ChainError;
use crate::codec::QualityLevel;

/// Stream derivation behind [`trial_rng`], recorded in report provenance.
pub const TRIAL_RNG: &str =
    "ChaCha20Rng (rand_chacha 0.9), key = LE u64 [master_seed, q_min, k, item], stream = trial";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// `k` iid uniform draws from `[q_min, q_max]`.
    Literal,
    /// As `Literal`, then one uniformly chosen position is set to `q_min`,
    /// so the sequence minimum is exactly `q_min`.
    ForcedMin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualitySequence {
    pub levels: Vec<QualityLevel>,
    pub mode: SamplingMode,
    pub q_min: QualityLevel,
    pub q_max: QualityLevel,
}

impl QualitySequence {
    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn minimum(&self) -> QualityLevel {
        *self.levels.iter().min().expect("nonempty sequence")
    }
}

/// Independent generator for one `(item, trial)` pair of one grid cell.
/// The result depends only on its arguments, never on scheduling.
pub fn trial_rng(
    master_seed: u64,
    q_min: QualityLevel,
    k: usize,
    item: usize,
    trial: usize,
) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in
        key.chunks_exact_mut(8)
            .zip([master_seed, u64::from(q_min.index()), k as u64, item as u64])
    {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(trial as u64);
    rng
}

pub fn sample_quality_sequence<R: Rng + ?Sized>(
    q_min: QualityLevel,
    q_max: QualityLevel,
    k: usize,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<QualitySequence, ChainError> {
    if k == 0 {
        return Err(ChainError::Sequence("k must be at least 1".into()));
    }
    if q_min.index() == 0 || q_min > q_max {
        return Err(ChainError::Sequence(format!(
            "need 1 <= q_min <= q_max, got {q_min}..{q_max}"
        )));
    }
    let mut levels: Vec<QualityLevel> = (0..k)
        .map(|_| QualityLevel::new(rng.random_range(q_min.index()..=q_max.index())))
        .collect();
    if mode == SamplingMode::ForcedMin {
        let pos = rng.random_range(0..k);
        levels[pos] = q_min;
    }
    Ok(QualitySequence {
        levels,
        mode,
        q_min,
        q_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: fn(u32) -> QualityLevel = QualityLevel::new;

    #[test]
    fn degenerate_support_is_constant() {
        let mut rng = trial_rng(1, Q(4), 7, 0, 0);
        for mode in [SamplingMode::Literal, SamplingMode::ForcedMin] {
            let s = sample_quality_sequence(Q(4), Q(4), 7, mode, &mut rng).unwrap();
            assert!(s.levels.iter().all(|&l| l == Q(4)));
        }
    }

    #[test]
    fn literal_frequencies_are_uniform() {
        let mut rng = trial_rng(99, Q(1), 1, 0, 0);
        let draws = 100_000;
        let s =
            sample_quality_sequence(Q(2), Q(6), draws, SamplingMode::Literal, &mut rng).unwrap();
        let p = 1.0 / 5.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for level in 2..=6 {
            let count = s.levels.iter().filter(|l| l.index() == level).count() as f64;
            assert!(
                (count - draws as f64 * p).abs() <= 5.0 * sd,
                "level {level}: {count}"
            );
        }
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let draw = |item, trial| {
            let mut rng = trial_rng(5, Q(2), 10, item, trial);
            sample_quality_sequence(Q(2), Q(8), 10, SamplingMode::Literal, &mut rng).unwrap()
        };
        assert_eq!(draw(0, 0), draw(0, 0));
        assert_ne!(draw(0, 0), draw(0, 1));
        assert_ne!(draw(0, 0), draw(1, 0));
    }

    #[test]
    fn bad_arguments() {
        let mut rng = trial_rng(0, Q(1), 1, 0, 0);
        assert!(sample_quality_sequence(Q(3), Q(2), 4, SamplingMode::Literal, &mut rng).is_err());
        assert!(sample_quality_sequence(Q(1), Q(2), 0, SamplingMode::Literal, &mut rng).is_err());
        assert!(sample_quality_sequence(Q(0), Q(2), 3, SamplingMode::Literal, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn forced_min_contains_minimum(seed in any::<u64>(), lo in 1u32..8, span in 0u32..8, k in 1usize..60) {
            let mut rng = trial_rng(seed, Q(lo), k, 0, 0);
            let s = sample_quality_sequence(Q(lo), Q(lo + span), k, SamplingMode::ForcedMin, &mut rng).unwrap();
            prop_assert_eq!(s.k(), k);
            prop_assert_eq!(s.minimum(), Q(lo));
            prop_assert!(s.levels.iter().all(|&l| l >= Q(lo) && l <= Q(lo + span)));
        }
    }
}
