//! Re-compression chains and the Monte Carlo estimate of
//! `rho(q_min, k) = E[d(f(x, q_min), f(...f(x, q_1)..., q_k))]`.

mod estimate;
mod metric;
mod sequence;

pub use estimate::{
    estimate_rho, run_pairs, summarize, MonteCarloSpec, PairMetrics, RhoEstimate, SequencePlan,
    Summary,
};
pub use metric::{distortion, mse_to, rmse_triangle_holds, squared_error, DistortionKind};
pub use sequence::{sample_quality_sequence, trial_rng, QualitySequence, SamplingMode, TRIAL_RNG};

use thiserror::Error;

use crate::codec::{Codec, CodecError, QualityLevel};
use crate::image_io::Signal;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("signals differ in kind or dimensions")]
    DimensionMismatch,
    #[error("invalid quality sequence: {0}")]
    Sequence(String),
    #[error("chain stage {stage} (level {level}) failed: {source}")]
    Stage {
        stage: usize,
        level: QualityLevel,
        source: CodecError,
    },
    #[error("single-pass reconstruction of item {item} failed: {source}")]
    Single { item: usize, source: CodecError },
    #[error("item {item}, trial {trial}: {source}")]
    Pair {
        item: usize,
        trial: usize,
        source: Box<ChainError>,
    },
    #[error("codec {codec} cannot process {item_kind:?} datasets")]
    Incompatible {
        codec: String,
        item_kind: crate::image_io::SignalKind,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult {
    pub final_signal: Signal,
    pub stage_bpp: Vec<f64>,
    /// Size of the last stage's bitstream in bits.
    pub final_bits: f64,
}

impl ChainResult {
    pub fn stage_count(&self) -> usize {
        self.stage_bpp.len()
    }

    pub fn final_bpp(&self) -> f64 {
        *self
            .stage_bpp
            .last()
            .expect("chains have at least one stage")
    }
}

/// `y_0 = x`, `y_i = f(y_{i-1}, q_i)`.
pub fn compress_chain(
    x: &Signal,
    seq: &[QualityLevel],
    codec: &dyn Codec,
) -> Result<ChainResult, ChainError> {
    if seq.is_empty() {
        return Err(ChainError::Sequence(
            "chain needs at least one stage".into(),
        ));
    }
    let mut current = x.clone();
    let mut stage_bpp = Vec::with_capacity(seq.len());
    let mut final_bits = 0.0;
    for (stage, &level) in seq.iter().enumerate() {
        let r = codec
            .reconstruct(&current, level)
            .map_err(|source| ChainError::Stage {
                stage,
                level,
                source,
            })?;
        stage_bpp.push(r.bpp());
        final_bits = r.bits;
        current = r.signal;
    }
    Ok(ChainResult {
        final_signal: current,
        stage_bpp,
        final_bits,
    })
}
