use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalConfig, ProtocolError};
use crate::chain::{
    mse_to, run_pairs, summarize, ChainError, DistortionKind, MonteCarloSpec, PairMetrics,
    RhoEstimate, SamplingMode, SequencePlan, TRIAL_RNG,
};
use crate::codec::{Codec, LadderEcho, QualityLevel};
use crate::image_io::{Dataset, UNIFORM_SOURCE_RNG};
use crate::report::float;

/// Behavioural choices echoed into every report.
pub const DECISIONS: [&str; 8] = [
    "rho averages d(single, chain) over all (item, trial) pairs; every pair draws its own quality sequence",
    "forced-min sampling overwrites one uniformly chosen position with q_min; literal sampling does not",
    "scalar quantizer ties go to the larger codeword; nested ladders quantize by descent from the top level",
    "nested payloads are packed at the coarsest level holding every codeword in use",
    "integer rounding is half away from zero",
    "rd_multi bpp is the final chain stage's bpp; PSNR and MSE are measured against the original",
    "theorem-1 check passes when mean_chain >= mean_single - 3 * sqrt(se_single^2 + se_chain^2)",
    "non-finite floats serialize as the strings \"inf\", \"-inf\" and \"nan\"",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub level: QualityLevel,
    #[serde(with = "float")]
    pub mean_bpp: f64,
    #[serde(with = "float")]
    pub mean_psnr: f64,
    #[serde(with = "float")]
    pub mean_mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    pub k: usize,
    pub points: Vec<RdPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdCurves {
    pub rd_single: Vec<RdPoint>,
    pub rd_multi: Vec<RdPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Record {
    pub q_min: QualityLevel,
    pub k: usize,
    pub b: usize,
    /// `E[mse(x, f(x, q_min))]`.
    #[serde(with = "float")]
    pub mean_single: f64,
    /// `E[mse(x, chain)]`.
    #[serde(with = "float")]
    pub mean_chain: f64,
    #[serde(with = "float")]
    pub std_err_single: f64,
    #[serde(with = "float")]
    pub std_err_chain: f64,
    #[serde(with = "float")]
    pub combined_std_err: f64,
    pub satisfied: bool,
}

impl Theorem1Record {
    pub fn from_pairs(spec: &MonteCarloSpec, pairs: &[PairMetrics]) -> Self {
        let single = summarize(&pairs.iter().map(|p| p.single_mse).collect::<Vec<_>>());
        let chain = summarize(&pairs.iter().map(|p| p.chain_mse).collect::<Vec<_>>());
        let combined = (single.std_err * single.std_err + chain.std_err * chain.std_err).sqrt();
        Self {
            q_min: spec.q_min,
            k: spec.k,
            b: spec.b,
            mean_single: single.mean,
            mean_chain: chain.mean,
            std_err_single: single.std_err,
            std_err_chain: chain.std_err,
            combined_std_err: combined,
            satisfied: chain.mean >= single.mean - 3.0 * combined,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEcho {
    pub source_path: String,
    pub item_names: Vec<String>,
    pub skipped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub trial_rng: String,
    pub source_rng: String,
}

impl Provenance {
    pub fn current() -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            trial_rng: TRIAL_RNG.into(),
            source_rng: UNIFORM_SOURCE_RNG.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// The configuration with every default filled in; feeding it back to
    /// [`run_protocol`] reproduces the report.
    pub config: EvalConfig,
    pub codec_id: String,
    pub ladder: LadderEcho,
    pub dataset: DatasetEcho,
    pub decisions: Vec<String>,
    pub provenance: Provenance,
    /// One estimate per `(k, q_min)`, `k` outermost.
    pub grid: Vec<RhoEstimate>,
    pub rd_single: Vec<RdPoint>,
    pub rd_multi: Vec<RdCurve>,
    pub theorem1: Vec<Theorem1Record>,
}

impl EvalReport {
    pub fn cell(&self, q_min: QualityLevel, k: usize) -> Option<&RhoEstimate> {
        self.grid.iter().find(|c| c.q_min == q_min && c.k == k)
    }
}

fn rd_single_points(ds: &Dataset, codec: &dyn Codec) -> Result<Vec<RdPoint>, ChainError> {
    let signals = ds.signals();
    (1..=codec.levels())
        .map(QualityLevel::new)
        .map(|level| {
            let per_item: Vec<(f64, f64, f64)> = signals
                .par_iter()
                .map(|x| {
                    let r = codec.reconstruct(x, level)?;
                    let mse = mse_to(x, &r.signal)?;
                    Ok((r.bpp(), mse, DistortionKind::Psnr.from_mse(mse, x.peak())))
                })
                .collect::<Result<_, ChainError>>()?;
            Ok(rd_point(level, &per_item))
        })
        .collect()
}

fn rd_point(level: QualityLevel, samples: &[(f64, f64, f64)]) -> RdPoint {
    let mean =
        |f: fn(&(f64, f64, f64)) -> f64| summarize(&samples.iter().map(f).collect::<Vec<_>>()).mean;
    RdPoint {
        level,
        mean_bpp: mean(|s| s.0),
        mean_mse: mean(|s| s.1),
        mean_psnr: mean(|s| s.2),
    }
}

// Trials are averaged per item first so that chains which always reproduce
// the single pass give bit-identical points.
fn rd_multi_point(q_min: QualityLevel, pairs: &[PairMetrics]) -> RdPoint {
    let samples: Vec<(f64, f64, f64)> = pairs
        .chunk_by(|a, b| a.item == b.item)
        .map(|trials| {
            let mean = |f: &dyn Fn(&PairMetrics) -> f64| {
                let v: Vec<f64> = trials.iter().map(f).collect();
                if v.iter().all(|&x| x == v[0]) {
                    v[0]
                } else {
                    summarize(&v).mean
                }
            };
            (
                mean(&|p| p.final_bpp),
                mean(&|p| p.chain_mse),
                mean(&|p| DistortionKind::Psnr.from_mse(p.chain_mse, p.peak)),
            )
        })
        .collect();
    rd_point(q_min, &samples)
}

/// Single-pass and multi-round RD curves over the whole ladder. The
/// multi-round point for `q_min` averages `b` sampled chains per item.
pub fn compute_rd_curves(
    ds: &Dataset,
    codec: &dyn Codec,
    k: usize,
    b: usize,
    mode: SamplingMode,
    master_seed: u64,
) -> Result<RdCurves, ProtocolError> {
    let rd_single = rd_single_points(ds, codec)?;
    let signals = ds.signals();
    let rd_multi = (1..=codec.levels())
        .map(QualityLevel::new)
        .map(|q_min| {
            let spec = MonteCarloSpec {
                q_min,
                k,
                b,
                plan: SequencePlan::Sample(mode),
                master_seed,
            };
            let pairs = run_pairs(&signals, codec, &spec)
                .map_err(|source| ProtocolError::Cell { q_min, k, source })?;
            Ok(rd_multi_point(q_min, &pairs))
        })
        .collect::<Result<_, ProtocolError>>()?;
    Ok(RdCurves {
        rd_single,
        rd_multi,
    })
}

/// Compares `E[mse(x, f(x, q_min))]` with `E[mse(x, chain)]` over all
/// `(item, trial)` pairs, with a 3-standard-error one-sided slack.
pub fn theorem1_check(
    ds: &Dataset,
    codec: &dyn Codec,
    spec: &MonteCarloSpec,
) -> Result<Theorem1Record, ProtocolError> {
    let pairs = run_pairs(&ds.signals(), codec, spec).map_err(|source| ProtocolError::Cell {
        q_min: spec.q_min,
        k: spec.k,
        source,
    })?;
    Ok(Theorem1Record::from_pairs(spec, &pairs))
}

pub fn run_protocol(cfg: &EvalConfig) -> Result<EvalReport, ProtocolError> {
    let codec = cfg.codec.build()?;
    let cfg = cfg.resolve(codec.as_ref())?;
    let ds = Dataset::open(&cfg.dataset)?;
    let signals = ds.signals();
    let q_min_list = cfg.q_min_list.clone().expect("resolved");

    let mut grid = Vec::new();
    let mut theorem1 = Vec::new();
    let mut rd_multi = Vec::new();
    for &k in &cfg.k_list {
        let mut points = Vec::new();
        for &q_min in &q_min_list {
            info!("cell q_min={q_min} k={k}");
            let spec = MonteCarloSpec {
                q_min,
                k,
                b: cfg.b,
                plan: SequencePlan::Sample(cfg.mode),
                master_seed: cfg.master_seed,
            };
            let pairs = run_pairs(&signals, codec.as_ref(), &spec)
                .map_err(|source| ProtocolError::Cell { q_min, k, source })?;
            grid.push(RhoEstimate::from_pairs(&spec, cfg.distortion, &pairs));
            theorem1.push(Theorem1Record::from_pairs(&spec, &pairs));
            points.push(rd_multi_point(q_min, &pairs));
        }
        rd_multi.push(RdCurve { k, points });
    }
    let rd_single = rd_single_points(&ds, codec.as_ref())?;

    Ok(EvalReport {
        codec_id: codec.id().to_string(),
        ladder: codec.ladder(),
        dataset: DatasetEcho {
            source_path: ds.source_path.clone(),
            item_names: ds.item_names.clone(),
            skipped: ds.warnings.iter().map(|w| w.file.clone()).collect(),
        },
        decisions: DECISIONS.iter().map(|s| s.to_string()).collect(),
        provenance: Provenance::current(),
        config: cfg,
        grid,
        rd_single,
        rd_multi,
        theorem1,
    })
}
