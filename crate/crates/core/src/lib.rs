//! Measurement of re-compression stability for lossy codecs.
//!
//! A codec `f(x, q)` is *strongly idempotent* when any chain of
//! re-compressions `f(...f(f(x, q_1), q_2)..., q_k)` reconstructs exactly
//! `f(x, min q_i)`. This crate provides
//!
//! * reference codecs: a nested scalar quantizer that is strongly
//!   idempotent, a midpoint scalar quantizer that is not, a JPEG-style
//!   block-DCT image codec, and an adapter for command-line codecs;
//! * the Monte Carlo estimator of `rho(q_min, k)`, the expected distortion
//!   between single-pass and chained reconstructions;
//! * an evaluation driver producing JSON/CSV reports and SVG RD figures.

pub mod chain;
pub mod codec;
pub mod image_io;
pub mod protocol;
pub mod report;

pub use chain::{compress_chain, estimate_rho, DistortionKind, RhoEstimate, SamplingMode};
pub use codec::{Codec, CodecConfig, CodecHandle, QualityLevel};
pub use image_io::{Dataset, ImageBuffer, Signal, SourceVector};
pub use protocol::{run_protocol, EvalConfig, EvalReport};
