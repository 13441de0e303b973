//! The codec abstraction `f(x, q)` and the built-in codecs.
//!
//! Every codec exposes a ladder of quality levels `1..=Q`, where a higher
//! index means higher quality regardless of the codec's native knob.
//!
//! All rounding to integers in this crate is half-away-from-zero
//! ([`f64::round`]); idempotence is rounding-sensitive so there is exactly
//! one rule.

pub mod dct;
pub mod external;
mod ladder;
mod scalar;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image_io::{PnmError, Signal, SignalKind};

pub use dct::{
    block_decode, block_encode, dct2_8x8, scale_quant_table, BlockDctCodec, DctDirection,
};
pub use external::{external_reconstruct, ExternalCodec, ExternalCodecSpec, ExternalError};
pub use ladder::{
    build_midpoint_ladder, build_nested_ladder, quantize_nearest, CodebookLadder, LadderError,
    LadderKind, MAX_MIDPOINT_LEVELS, MAX_NESTED_LEVELS,
};
pub use scalar::ScalarCodec;

/// Index into a codec's quality ladder, `1..=Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QualityLevel(u32);

impl QualityLevel {
    pub const fn new(index: u32) -> Self {
        Self(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_valid_for(self, levels: u32) -> bool {
        (1..=levels).contains(&self.0)
    }
}

impl fmt::Display for QualityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for QualityLevel {
    fn from(v: u32) -> Self {
        Self(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SignalDims {
    Image {
        width: usize,
        height: usize,
        channels: usize,
    },
    Source {
        len: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitstreamMeta {
    pub codec_id: String,
    pub quality: QualityLevel,
    pub dims: SignalDims,
}

/// Encoded payload plus its information-theoretic size. `payload` carries
/// its own header, so it decodes without outside context.
#[derive(Clone, Debug, PartialEq)]
pub struct Bitstream {
    pub payload: Vec<u8>,
    pub bits_used: f64,
    pub meta: BitstreamMeta,
}

/// Output of one encode/decode round trip.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub signal: Signal,
    pub bits: f64,
}

impl Reconstruction {
    /// Bits per pixel (per sample for 1-D sources).
    pub fn bpp(&self) -> f64 {
        self.bits / self.signal.pixel_count() as f64
    }
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("quality level {level} outside ladder 1..={levels}")]
    InvalidLevel { level: QualityLevel, levels: u32 },
    #[error("codec {codec} operates on {expected:?} signals, got {got:?}")]
    SignalKind {
        codec: String,
        expected: SignalKind,
        got: SignalKind,
    },
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("corrupt bitstream: {0}")]
    Corrupt(String),
    #[error("invalid codec configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ladder(#[from] LadderError),
    #[error(transparent)]
    External(#[from] ExternalError),
    #[error(transparent)]
    Pnm(#[from] PnmError),
}

/// Quality ladder as echoed into reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LadderEcho {
    Scalar {
        kind: LadderKind,
        codewords: Vec<Vec<f64>>,
    },
    BlockDct {
        native_qualities: Vec<u8>,
    },
    External {
        quality_map: Vec<String>,
    },
}

/// A deterministic reconstruction map `f(x, q)`.
pub trait Codec: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;

    /// Ladder size `Q`.
    fn levels(&self) -> u32;

    fn capability(&self) -> SignalKind;

    fn ladder(&self) -> LadderEcho;

    fn reconstruct(&self, x: &Signal, q: QualityLevel) -> Result<Reconstruction, CodecError>;

    fn check_level(&self, q: QualityLevel) -> Result<(), CodecError> {
        if q.is_valid_for(self.levels()) {
            Ok(())
        } else {
            Err(CodecError::InvalidLevel {
                level: q,
                levels: self.levels(),
            })
        }
    }

    fn check_signal(&self, x: &Signal) -> Result<(), CodecError> {
        if x.kind() == self.capability() {
            Ok(())
        } else {
            Err(CodecError::SignalKind {
                codec: self.id().to_string(),
                expected: self.capability(),
                got: x.kind(),
            })
        }
    }
}

pub type CodecHandle = Arc<dyn Codec>;

fn default_scalar_levels() -> u32 {
    3
}

/// Serializable recipe for constructing a codec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodecConfig {
    Nested {
        #[serde(default = "default_scalar_levels")]
        levels: u32,
    },
    Midpoint {
        #[serde(default = "default_scalar_levels")]
        levels: u32,
    },
    Dct {
        #[serde(default = "dct::default_native_qualities")]
        native_qualities: Vec<u8>,
    },
    External {
        spec: ExternalCodecSpec,
    },
}

impl CodecConfig {
    /// Parses the command-line codec id grammar: `nested[:Q]`,
    /// `midpoint[:Q]`, `dct`, or `external:PATH` (PATH names an
    /// [`ExternalCodecSpec`] JSON document).
    pub fn from_id(id: &str) -> Result<Self, CodecError> {
        let (head, arg) = match id.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (id, None),
        };
        let levels = |arg: Option<&str>| -> Result<u32, CodecError> {
            arg.map_or(Ok(default_scalar_levels()), |a| {
                a.parse()
                    .map_err(|_| CodecError::Config(format!("bad level count in {id:?}")))
            })
        };
        match head {
            "nested" => Ok(Self::Nested {
                levels: levels(arg)?,
            }),
            "midpoint" => Ok(Self::Midpoint {
                levels: levels(arg)?,
            }),
            "dct" if arg.is_none() => Ok(Self::Dct {
                native_qualities: dct::default_native_qualities(),
            }),
            "external" => {
                let path = arg.ok_or_else(|| {
                    CodecError::Config("external codec needs external:PATH".into())
                })?;
                Ok(Self::External {
                    spec: ExternalCodecSpec::from_file(std::path::Path::new(path))?,
                })
            }
            _ => Err(CodecError::Config(format!("unknown codec id {id:?}"))),
        }
    }

    pub fn build(&self) -> Result<CodecHandle, CodecError> {
        Ok(match self {
            Self::Nested { levels } => Arc::new(ScalarCodec::nested(*levels)?),
            Self::Midpoint { levels } => Arc::new(ScalarCodec::midpoint(*levels)?),
            Self::Dct { native_qualities } => {
                Arc::new(BlockDctCodec::new(native_qualities.clone())?)
            }
            Self::External { spec } => Arc::new(ExternalCodec::new(spec.clone())?),
        })
    }
}
