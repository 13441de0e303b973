use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metric::{mse_to, rmse_triangle_holds, DistortionKind};
use super::sequence::{sample_quality_sequence, trial_rng, SamplingMode};
use super::{compress_chain, ChainError};
use crate::codec::{Codec, QualityLevel, Reconstruction};
use crate::image_io::{Dataset, Signal};
use crate::report::float;

/// Where each trial's quality sequence comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SequencePlan {
    Sample(SamplingMode),
    /// Every trial uses this exact sequence; `k` must equal its length.
    Fixed(Vec<QualityLevel>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonteCarloSpec {
    pub q_min: QualityLevel,
    pub k: usize,
    /// Trials per dataset item.
    pub b: usize,
    pub plan: SequencePlan,
    pub master_seed: u64,
}

/// Everything measured on one `(item, trial)` pair. Distortions are kept
/// as MSE; other kinds derive from it.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMetrics {
    pub item: usize,
    pub trial: usize,
    pub sequence: Vec<QualityLevel>,
    /// `mse(f(x, q_min), chain)`.
    pub rho_mse: f64,
    /// `mse(x, f(x, q_min))`.
    pub single_mse: f64,
    /// `mse(x, chain)`.
    pub chain_mse: f64,
    pub single_bpp: f64,
    pub single_bits: f64,
    pub final_bpp: f64,
    pub final_bits: f64,
    pub rmse_triangle_holds: bool,
    pub peak: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sample_std: f64,
    pub std_err: f64,
}

/// Mean, `n - 1` sample deviation and `sample_std / sqrt(n)`, summed in
/// slice order. With a non-finite mean the spread is NaN.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            n,
            mean: f64::NAN,
            sample_std: f64::NAN,
            std_err: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if !mean.is_finite() {
        return Summary {
            n,
            mean,
            sample_std: f64::NAN,
            std_err: f64::NAN,
        };
    }
    let sample_std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary {
        n,
        mean,
        sample_std,
        std_err: sample_std / (n as f64).sqrt(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub q_min: QualityLevel,
    pub k: usize,
    pub b: usize,
    pub distortion_kind: DistortionKind,
    /// Number of `(item, trial)` pairs averaged.
    pub samples: usize,
    #[serde(with = "float")]
    pub mean: f64,
    #[serde(with = "float")]
    pub sample_std: f64,
    #[serde(with = "float")]
    pub std_err: f64,
    #[serde(with = "float::option_vec")]
    pub per_trial: Option<Vec<f64>>,
}

impl RhoEstimate {
    pub fn from_pairs(spec: &MonteCarloSpec, kind: DistortionKind, pairs: &[PairMetrics]) -> Self {
        let values: Vec<f64> = pairs
            .iter()
            .map(|p| kind.from_mse(p.rho_mse, p.peak))
            .collect();
        let s = summarize(&values);
        Self {
            q_min: spec.q_min,
            k: spec.k,
            b: spec.b,
            distortion_kind: kind,
            samples: s.n,
            mean: s.mean,
            sample_std: s.sample_std,
            std_err: s.std_err,
            per_trial: Some(values),
        }
    }
}

fn check_compatible(signals: &[Signal], codec: &dyn Codec) -> Result<(), ChainError> {
    match signals.iter().find(|s| s.kind() != codec.capability()) {
        Some(s) => Err(ChainError::Incompatible {
            codec: codec.id().to_string(),
            item_kind: s.kind(),
        }),
        None => Ok(()),
    }
}

/// Runs every `(item, trial)` pair of one `(q_min, k)` cell. Pairs run in
/// parallel; the result is ordered by `(item, trial)` and independent of
/// scheduling because each pair owns its RNG stream.
pub fn run_pairs(
    signals: &[Signal],
    codec: &dyn Codec,
    spec: &MonteCarloSpec,
) -> Result<Vec<PairMetrics>, ChainError> {
    check_compatible(signals, codec)?;
    codec.check_level(spec.q_min)?;
    let q_max = QualityLevel::new(codec.levels());
    if spec.k == 0 || spec.b == 0 {
        return Err(ChainError::Sequence("k and b must be positive".into()));
    }
    if let SequencePlan::Fixed(levels) = &spec.plan {
        if levels.len() != spec.k {
            return Err(ChainError::Sequence(format!(
                "fixed sequence has length {}, k = {}",
                levels.len(),
                spec.k
            )));
        }
        for &l in levels {
            codec.check_level(l)?;
        }
    }

    let singles: Vec<Reconstruction> = signals
        .par_iter()
        .enumerate()
        .map(|(item, x)| {
            codec
                .reconstruct(x, spec.q_min)
                .map_err(|source| ChainError::Single { item, source })
        })
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, usize)> = (0..signals.len())
        .flat_map(|i| (0..spec.b).map(move |t| (i, t)))
        .collect();
    jobs.par_iter()
        .map(|&(item, trial)| {
            let wrap = |source: ChainError| ChainError::Pair {
                item,
                trial,
                source: Box::new(source),
            };
            let sequence = match &spec.plan {
                SequencePlan::Fixed(levels) => levels.clone(),
                SequencePlan::Sample(mode) => {
                    let mut rng = trial_rng(spec.master_seed, spec.q_min, spec.k, item, trial);
                    sample_quality_sequence(spec.q_min, q_max, spec.k, *mode, &mut rng)
                        .map_err(wrap)?
                        .levels
                }
            };
            let x = &signals[item];
            let single = &singles[item];
            let chain = compress_chain(x, &sequence, codec).map_err(wrap)?;
            Ok(PairMetrics {
                item,
                trial,
                rho_mse: mse_to(&single.signal, &chain.final_signal).map_err(wrap)?,
                single_mse: mse_to(x, &single.signal).map_err(wrap)?,
                chain_mse: mse_to(x, &chain.final_signal).map_err(wrap)?,
                single_bpp: single.bpp(),
                single_bits: single.bits,
                final_bpp: chain.final_bpp(),
                final_bits: chain.final_bits,
                rmse_triangle_holds: rmse_triangle_holds(x, &single.signal, &chain.final_signal)
                    .map_err(wrap)?,
                peak: x.peak(),
                sequence,
            })
        })
        .collect()
}

/// Monte Carlo estimate of `rho(q_min, k)` over all `(item, trial)` pairs,
/// with a fresh quality sequence per pair.
pub fn estimate_rho(
    ds: &Dataset,
    codec: &dyn Codec,
    spec: &MonteCarloSpec,
    kind: DistortionKind,
) -> Result<RhoEstimate, ChainError> {
    let pairs = run_pairs(&ds.signals(), codec, spec)?;
    Ok(RhoEstimate::from_pairs(spec, kind, &pairs))
}
