//! End-to-end evaluation: dataset, `(q_min, k)` grid, per-cell Monte Carlo,
//! aggregation into an [`EvalReport`].

mod config;
mod run;
mod verify;

pub use config::{EvalConfig, DEFAULT_B, DEFAULT_K_LIST};
pub use run::{
    compute_rd_curves, run_protocol, theorem1_check, DatasetEcho, EvalReport, Provenance, RdCurve,
    RdCurves, RdPoint, Theorem1Record, DECISIONS,
};
pub use verify::{
    verify_strong_idempotence, DeviationReport, KindDeviation, MAX_ENUMERATED_SEQUENCES,
};

use thiserror::Error;

use crate::chain::ChainError;
use crate::codec::{CodecError, QualityLevel};
use crate::image_io::DatasetError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("codec setup failed: {0}")]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("cell q_min={q_min}, k={k}: {source}")]
    Cell {
        q_min: QualityLevel,
        k: usize,
        source: ChainError,
    },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("{count} quality sequences exceed the enumeration limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },
}

impl ProtocolError {
    /// Whether the failure is in the inputs rather than during execution.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            ProtocolError::Config(_)
                | ProtocolError::Dataset(_)
                | ProtocolError::EnumerationTooLarge { .. }
                | ProtocolError::Chain(ChainError::Incompatible { .. } | ChainError::Sequence(_))
                | ProtocolError::Cell {
                    source: ChainError::Incompatible { .. } | ChainError::Sequence(_),
                    ..
                }
                | ProtocolError::Codec(CodecError::Config(_))
                | ProtocolError::Codec(CodecError::Ladder(_))
                | ProtocolError::Codec(CodecError::External(
                    crate::codec::ExternalError::SpecFile { .. }
                ))
        )
    }
}
