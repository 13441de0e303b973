use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::chain::{mse_to, ChainError, DistortionKind};
use crate::codec::{Codec, QualityLevel};
use crate::image_io::Signal;
use crate::report::float;

pub const MAX_ENUMERATED_SEQUENCES: u128 = 1_000_000;

/// Worst and mean deviation in one distortion kind. For PSNR the worst
/// value is the smallest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindDeviation {
    pub kind: DistortionKind,
    #[serde(with = "float")]
    pub worst: f64,
    #[serde(with = "float")]
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub codec_id: String,
    pub max_len: usize,
    pub inputs: usize,
    pub sequences: usize,
    pub deviations: Vec<KindDeviation>,
    /// Largest MSE over constant sequences only (plain idempotence).
    #[serde(with = "float")]
    pub idempotence_max_mse: f64,
    /// `(input, sequence)` attaining the largest MSE, if any is nonzero.
    pub witness: Option<(usize, Vec<QualityLevel>)>,
}

impl DeviationReport {
    pub fn max_mse(&self) -> f64 {
        self.deviations
            .iter()
            .find(|d| d.kind == DistortionKind::Mse)
            .map(|d| d.worst)
            .expect("MSE always reported")
    }

    pub fn is_strongly_idempotent(&self) -> bool {
        self.max_mse() == 0.0
    }
}

fn sequence_count(levels: u32, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..max_len {
        power = power.saturating_mul(u128::from(levels));
        total = total.saturating_add(power);
    }
    total
}

struct Deviation {
    sequence: Vec<QualityLevel>,
    mse: f64,
}

/// Depth-first over all sequences with a shared prefix, so each sequence
/// costs one reconstruction.
fn walk(
    codec: &dyn Codec,
    singles: &[Signal],
    current: &Signal,
    prefix: &mut Vec<QualityLevel>,
    max_len: usize,
    out: &mut Vec<Deviation>,
) -> Result<(), ChainError> {
    let minimum = *prefix.iter().min().expect("nonempty prefix");
    out.push(Deviation {
        sequence: prefix.clone(),
        mse: mse_to(&singles[minimum.index() as usize - 1], current)?,
    });
    if prefix.len() == max_len {
        return Ok(());
    }
    for q in 1..=codec.levels() {
        let level = QualityLevel::new(q);
        let next = codec
            .reconstruct(current, level)
            .map_err(|source| ChainError::Stage {
                stage: prefix.len(),
                level,
                source,
            })?;
        prefix.push(level);
        walk(codec, singles, &next.signal, prefix, max_len, out)?;
        prefix.pop();
    }
    Ok(())
}

/// Runs every quality sequence of length `1..=max_len` on every input and
/// compares the chain output with single-pass reconstruction at the
/// sequence minimum.
pub fn verify_strong_idempotence(
    codec: &dyn Codec,
    inputs: &[Signal],
    max_len: usize,
) -> Result<DeviationReport, ProtocolError> {
    if max_len == 0 || inputs.is_empty() {
        return Err(ProtocolError::Config(
            "need max_len >= 1 and at least one input".into(),
        ));
    }
    let count = sequence_count(codec.levels(), max_len);
    if count > MAX_ENUMERATED_SEQUENCES {
        return Err(ProtocolError::EnumerationTooLarge {
            count,
            limit: MAX_ENUMERATED_SEQUENCES,
        });
    }

    let jobs: Vec<(usize, u32)> = (0..inputs.len())
        .flat_map(|i| (1..=codec.levels()).map(move |q| (i, q)))
        .collect();
    let per_job: Vec<Vec<Deviation>> = jobs
        .par_iter()
        .map(|&(i, first)| {
            let x = &inputs[i];
            let singles: Vec<Signal> = (1..=codec.levels())
                .map(|q| codec.reconstruct(x, QualityLevel::new(q)).map(|r| r.signal))
                .collect::<Result<_, _>>()?;
            let start = singles[first as usize - 1].clone();
            let mut prefix = vec![QualityLevel::new(first)];
            let mut out = Vec::new();
            walk(codec, &singles, &start, &mut prefix, max_len, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_, ChainError>>()?;

    let peak = inputs[0].peak();
    let mut worst: Option<(usize, &Deviation)> = None;
    let mut idempotence_max_mse = 0.0f64;
    let mut all_mse = Vec::new();
    for (&(input, _), devs) in jobs.iter().zip(&per_job) {
        for d in devs {
            all_mse.push(d.mse);
            if d.sequence.windows(2).all(|w| w[0] == w[1]) {
                idempotence_max_mse = idempotence_max_mse.max(d.mse);
            }
            if d.mse > worst.map_or(0.0, |(_, w)| w.mse) {
                worst = Some((input, d));
            }
        }
    }
    let n = all_mse.len() as f64;
    let deviations = [
        DistortionKind::Mse,
        DistortionKind::Rmse,
        DistortionKind::Psnr,
    ]
    .into_iter()
    .map(|kind| {
        let values: Vec<f64> = all_mse.iter().map(|&m| kind.from_mse(m, peak)).collect();
        let worst = match kind {
            DistortionKind::Psnr => values.iter().copied().fold(f64::INFINITY, f64::min),
            _ => values.iter().copied().fold(0.0, f64::max),
        };
        KindDeviation {
            kind,
            worst,
            mean: values.iter().sum::<f64>() / n,
        }
    })
    .collect();

    Ok(DeviationReport {
        codec_id: codec.id().to_string(),
        max_len,
        inputs: inputs.len(),
        sequences: count as usize,
        deviations,
        idempotence_max_mse,
        witness: worst.map(|(i, d)| (i, d.sequence.clone())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{BlockDctCodec, ScalarCodec};
    use crate::image_io::{synth, uniform_grid};

    fn grid() -> Vec<Signal> {
        vec![Signal::Source(uniform_grid(2001).unwrap())]
    }

    #[test]
    fn counts_sequences() {
        assert_eq!(sequence_count(3, 4), 120);
        assert_eq!(sequence_count(8, 1), 8);
        assert_eq!(sequence_count(u32::MAX, 40), u128::MAX);
    }

    #[test]
    fn nested_has_zero_deviation() {
        let rep = verify_strong_idempotence(&ScalarCodec::nested(3).unwrap(), &grid(), 4).unwrap();
        assert_eq!(rep.sequences, 120);
        assert!(rep.is_strongly_idempotent());
        assert_eq!(rep.idempotence_max_mse, 0.0);
        assert_eq!(rep.witness, None);
    }

    #[test]
    fn midpoint_has_witness() {
        let rep =
            verify_strong_idempotence(&ScalarCodec::midpoint(3).unwrap(), &grid(), 4).unwrap();
        assert!(rep.max_mse() >= 1.0 / 64.0);
        // Idempotent at a fixed level even though not strongly so.
        assert_eq!(rep.idempotence_max_mse, 0.0);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn length_one_is_always_zero() {
        let imgs = vec![Signal::Image(synth::scene(16, 16, 1))];
        let rep = verify_strong_idempotence(&BlockDctCodec::default(), &imgs, 1).unwrap();
        assert_eq!(rep.max_mse(), 0.0);
        let rep =
            verify_strong_idempotence(&ScalarCodec::midpoint(3).unwrap(), &grid(), 1).unwrap();
        assert_eq!(rep.max_mse(), 0.0);
    }

    #[test]
    fn guard_rejects_huge_enumerations() {
        assert!(matches!(
            verify_strong_idempotence(&ScalarCodec::nested(3).unwrap(), &grid(), 13),
            Err(ProtocolError::EnumerationTooLarge { .. })
        ));
    }
}
