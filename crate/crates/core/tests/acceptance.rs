//! Acceptance suite. One line per criterion; nonzero exit if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use idemlab::chain::{
    compress_chain, estimate_rho, mse_to, run_pairs, sample_quality_sequence, trial_rng,
    DistortionKind, MonteCarloSpec, PairMetrics, RhoEstimate, SamplingMode, SequencePlan,
};
use idemlab::codec::{
    BlockDctCodec, Codec, CodecConfig, ExternalCodecSpec, QualityLevel, ScalarCodec,
};
use idemlab::image_io::{
    generate_uniform_source, serialize_pnm, synth, uniform_grid, Dataset, Signal,
};
use idemlab::protocol::{
    compute_rd_curves, run_protocol, verify_strong_idempotence, EvalConfig, Theorem1Record,
};
use idemlab::report::to_json;

const SCENE_COUNT: usize = 3;
const SCENE_W: usize = 256;
const SCENE_H: usize = 192;
const SCENE_SEED: u64 = 2024;

// Mean level-8 PSNR of the DCT codec on the scene set, measured once.
const FROZEN_DCT_TOP_PSNR: f64 = 40.7342;
const FROZEN_TOLERANCE_DB: f64 = 0.05;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn(&mut Context) -> Outcome;

/// Scene files on disk plus the pairs of criterion 4, reused by 5 and 6.
struct Context {
    scenes_dir: tempfile::TempDir,
    theorem_pairs: Vec<(QualityLevel, MonteCarloSpec, Vec<PairMetrics>)>,
}

impl Context {
    fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        for (name, img) in synth::scenes(SCENE_COUNT, SCENE_W, SCENE_H, SCENE_SEED) {
            std::fs::write(dir.path().join(name), serialize_pnm(&img)).expect("write scene");
        }
        Self {
            scenes_dir: dir,
            theorem_pairs: Vec::new(),
        }
    }

    fn scenes(&self) -> Dataset {
        Dataset::open(&self.scenes_dir.path().to_string_lossy()).expect("scene dataset")
    }

    fn theorem_pairs(&mut self) -> &[(QualityLevel, MonteCarloSpec, Vec<PairMetrics>)] {
        if self.theorem_pairs.is_empty() {
            let ds = self.scenes();
            let codec = BlockDctCodec::default();
            for q in 1..=codec.levels() {
                let q_min = QualityLevel::new(q);
                let spec = forced_min(q_min, 10, 10);
                let pairs = run_pairs(&ds.signals(), &codec, &spec).expect("dct pairs");
                self.theorem_pairs.push((q_min, spec, pairs));
            }
        }
        &self.theorem_pairs
    }
}

fn forced_min(q_min: QualityLevel, k: usize, b: usize) -> MonteCarloSpec {
    MonteCarloSpec {
        q_min,
        k,
        b,
        plan: SequencePlan::Sample(SamplingMode::ForcedMin),
        master_seed: 0,
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.1?}, limit {limit:?}"))
    }
}

fn exhaustive_nested(_: &mut Context) -> Outcome {
    let start = Instant::now();
    let codec = ScalarCodec::nested(3).unwrap();
    let inputs = [Signal::Source(uniform_grid(10_000).unwrap())];
    let rep = verify_strong_idempotence(&codec, &inputs, 4).unwrap();
    if let Err(e) = within(start.elapsed(), Duration::from_secs(60)) {
        return Outcome::Fail(e);
    }
    if rep.sequences != 120 {
        return Outcome::Fail(format!("{} sequences enumerated", rep.sequences));
    }
    match rep.max_mse() {
        0.0 => Outcome::Pass(format!(
            "max deviation 0 over 120 sequences in {:.1?}",
            start.elapsed()
        )),
        d => Outcome::Fail(format!("max deviation {d}")),
    }
}

fn midpoint_witness(_: &mut Context) -> Outcome {
    let codec = ScalarCodec::midpoint(3).unwrap();
    let spec = MonteCarloSpec {
        q_min: QualityLevel::new(1),
        k: 2,
        b: 1,
        plan: SequencePlan::Fixed(vec![QualityLevel::new(1), QualityLevel::new(3)]),
        master_seed: 0,
    };
    let sets = [
        ("grid", uniform_grid(10_000).unwrap()),
        ("random", generate_uniform_source(5_000, 11).unwrap()),
        ("single", uniform_grid(1).unwrap()),
    ];
    for (name, src) in sets {
        let ds = Dataset::from_source(name, src);
        let rho = estimate_rho(&ds, &codec, &spec, DistortionKind::Mse).unwrap();
        if rho.mean != 0.015625 {
            return Outcome::Fail(format!("rho on {name} inputs = {}", rho.mean));
        }
    }
    let inputs = [Signal::Source(uniform_grid(10_000).unwrap())];
    let rep = verify_strong_idempotence(&codec, &inputs, 4).unwrap();
    if rep.max_mse() > 0.0 {
        Outcome::Pass(format!(
            "rho = 1/64 on 3 input sets, sweep deviation {}",
            rep.max_mse()
        ))
    } else {
        Outcome::Fail("verify sweep found no deviation".into())
    }
}

fn nested_grid_zero(_: &mut Context) -> Outcome {
    let start = Instant::now();
    let cfg = EvalConfig::new(CodecConfig::Nested { levels: 3 }, "uniform:10000");
    let rep = run_protocol(&cfg).unwrap();
    if let Err(e) = within(start.elapsed(), Duration::from_secs(60)) {
        return Outcome::Fail(e);
    }
    if rep.grid.len() != 6 {
        return Outcome::Fail(format!("{} grid cells", rep.grid.len()));
    }
    match rep.grid.iter().find(|c| c.mean != 0.0) {
        None => Outcome::Pass(format!("6 cells, all means 0, {:.1?}", start.elapsed())),
        Some(c) => Outcome::Fail(format!("q_min={} k={} mean {}", c.q_min, c.k, c.mean)),
    }
}

fn theorem1_dct(ctx: &mut Context) -> Outcome {
    let start = Instant::now();
    let cells = ctx.theorem_pairs();
    if let Err(e) = within(start.elapsed(), Duration::from_secs(600)) {
        return Outcome::Fail(e);
    }
    let mut worst = f64::INFINITY;
    for (q_min, spec, pairs) in cells {
        let rec = Theorem1Record::from_pairs(spec, pairs);
        if !rec.satisfied {
            return Outcome::Fail(format!(
                "q_min={q_min}: chain {} < single {} - 3*{}",
                rec.mean_chain, rec.mean_single, rec.combined_std_err
            ));
        }
        worst = worst.min(rec.mean_chain - rec.mean_single);
    }
    Outcome::Pass(format!(
        "8 cells satisfied, smallest chain-single gap {worst:.4}, {:.1?}",
        start.elapsed()
    ))
}

fn k_growth(ctx: &mut Context) -> Outcome {
    let ds = ctx.scenes();
    let codec = BlockDctCodec::default();
    let mut lines = Vec::new();
    for (q_min, spec, pairs) in ctx.theorem_pairs() {
        let r10 = RhoEstimate::from_pairs(spec, DistortionKind::Mse, pairs);
        let r50 = estimate_rho(
            &ds,
            &codec,
            &forced_min(*q_min, 50, 10),
            DistortionKind::Mse,
        )
        .unwrap();
        let se = r10.std_err.hypot(r50.std_err);
        lines.push(format!("{q_min}:{:.2}->{:.2}", r10.mean, r50.mean));
        if r50.mean < r10.mean - 3.0 * se {
            return Outcome::Fail(format!(
                "q_min={q_min}: rho(50) {} < rho(10) {} - 3*{se}",
                r50.mean, r10.mean
            ));
        }
    }
    Outcome::Pass(lines.join(" "))
}

fn rmse_triangle(ctx: &mut Context) -> Outcome {
    let mut count = 0;
    for (q_min, _, pairs) in ctx.theorem_pairs() {
        for p in pairs {
            if !p.rmse_triangle_holds {
                return Outcome::Fail(format!("q_min={q_min} item {} trial {}", p.item, p.trial));
            }
            count += 1;
        }
    }
    Outcome::Pass(format!("{count} pairs"))
}

fn nested_bitrate(_: &mut Context) -> Outcome {
    let mut checked = 0;
    for levels in [3, 5] {
        let codec = ScalarCodec::nested(levels).unwrap();
        let src = generate_uniform_source(10_000, 3).unwrap();
        let x = Signal::Source(src.clone());
        let q_max = QualityLevel::new(levels);
        for q in 1..=levels {
            let q_min = QualityLevel::new(q);
            let single = codec.reconstruct(&x, q_min).unwrap();
            let single_src = single.signal.as_source().unwrap();
            let reference = codec.encode(single_src, q_min).unwrap();
            for trial in 0..20 {
                let mut rng = trial_rng(0, q_min, 10, 0, trial);
                let seq =
                    sample_quality_sequence(q_min, q_max, 10, SamplingMode::ForcedMin, &mut rng)
                        .unwrap();
                let chain = compress_chain(&x, &seq.levels, &codec).unwrap();
                let again = codec
                    .encode(chain.final_signal.as_source().unwrap(), q_min)
                    .unwrap();
                if again.payload != reference.payload {
                    return Outcome::Fail(format!("Q={levels} q_min={q}: payloads differ"));
                }
                if chain.final_bits != single.bits {
                    return Outcome::Fail(format!(
                        "Q={levels} q_min={q}: final-stage bits {} vs {}",
                        chain.final_bits, single.bits
                    ));
                }
                checked += 1;
            }
        }
    }
    Outcome::Pass(format!("{checked} chains byte-identical"))
}

fn evaluate_once(config: &Path, out: &Path, threads: usize) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_idemlab"))
        .arg("evaluate")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism(ctx: &mut Context) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = EvalConfig::new(
        CodecConfig::from_id("dct").unwrap(),
        ctx.scenes_dir.path().to_string_lossy(),
    );
    cfg.k_list = vec![4];
    cfg.b = 3;
    cfg.master_seed = 7;
    let config: PathBuf = dir.path().join("eval.json");
    std::fs::write(&config, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();

    let mut reports = Vec::new();
    for (i, threads) in [1, 4, 4].into_iter().enumerate() {
        match evaluate_once(
            &config,
            &dir.path().join(format!("report{i}.json")),
            threads,
        ) {
            Ok(bytes) => reports.push(bytes),
            Err(e) => return Outcome::Fail(format!("evaluate failed: {e}")),
        }
    }
    if reports.windows(2).any(|w| w[0] != w[1]) {
        return Outcome::Fail("CLI reports differ between runs".into());
    }

    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| to_json(&run_protocol(&cfg).unwrap()))
    };
    if in_pool(1) != in_pool(4) {
        return Outcome::Fail("library reports differ between 1 and 4 threads".into());
    }
    Outcome::Pass(format!(
        "3 CLI runs and 2 pool sizes identical, {} bytes",
        reports[0].len()
    ))
}

fn dct_sanity(ctx: &mut Context) -> Outcome {
    let signals = ctx.scenes().signals();
    let codec = BlockDctCodec::default();
    let mut means = Vec::new();
    for q in 1..=codec.levels() {
        let mut per_image = Vec::new();
        for x in &signals {
            let r = codec.reconstruct(x, QualityLevel::new(q)).unwrap();
            per_image.push(DistortionKind::Psnr.from_mse(mse_to(x, &r.signal).unwrap(), x.peak()));
        }
        means.push(per_image);
    }
    for img in 0..signals.len() {
        let curve: Vec<f64> = means.iter().map(|m| m[img]).collect();
        if !curve.windows(2).all(|w| w[0] < w[1]) {
            return Outcome::Fail(format!("image {img} PSNR not monotone: {curve:?}"));
        }
        if curve[curve.len() - 1] < 30.0 {
            return Outcome::Fail(format!(
                "image {img} level-8 PSNR {}",
                curve[curve.len() - 1]
            ));
        }
    }
    let top = means[means.len() - 1].iter().sum::<f64>() / signals.len() as f64;
    if top < FROZEN_DCT_TOP_PSNR - FROZEN_TOLERANCE_DB {
        return Outcome::Fail(format!(
            "mean level-8 PSNR {top} below frozen {FROZEN_DCT_TOP_PSNR}"
        ));
    }
    let summary: Vec<String> = means
        .iter()
        .map(|m| format!("{:.2}", m.iter().sum::<f64>() / m.len() as f64))
        .collect();
    Outcome::Pass(format!(
        "mean PSNR by level [{}], level 8 {top:.4}",
        summary.join(", ")
    ))
}

const PIL_SCRIPT: &str = r#"import sys
from PIL import Image

mode, src, dst = sys.argv[1], sys.argv[2], sys.argv[3]
img = Image.open(src)
if mode == "encode":
    img.save(dst, format="JPEG", quality=int(sys.argv[4]))
else:
    img.convert("L").save(dst, format="PPM")
"#;

fn external_jpeg(_: &mut Context) -> Outcome {
    let pil = Command::new("python3").args(["-c", "import PIL"]).output();
    if !matches!(pil, Ok(ref o) if o.status.success()) {
        return Outcome::Skip("python3 with Pillow not available".into());
    }
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("pil_jpeg.py");
    std::fs::write(&script, PIL_SCRIPT).unwrap();
    let script = script.to_string_lossy();
    let spec = ExternalCodecSpec {
        encode_cmd: format!("python3 {script} encode {{input}} {{output}} {{quality}}"),
        decode_cmd: format!("python3 {script} decode {{input}} {{output}}"),
        quality_map: ["5", "15", "25", "35", "45", "55", "65", "75"]
            .map(String::from)
            .to_vec(),
        timeout_s: 30.0,
        encoded_ext: "jpg".into(),
    };
    let codec = CodecConfig::External { spec }.build().unwrap();
    let ds = Dataset::from_images("synthetic", synth::scenes(2, 128, 96, SCENE_SEED));
    let curves = match compute_rd_curves(&ds, codec.as_ref(), 10, 2, SamplingMode::ForcedMin, 0) {
        Ok(c) => c,
        Err(e) => return Outcome::Skip(format!("external codec unusable: {e}")),
    };
    for (s, m) in curves.rd_single.iter().zip(&curves.rd_multi) {
        if m.mean_psnr > s.mean_psnr {
            return Outcome::Fail(format!(
                "q_min={}: multi-round {} dB above single-pass {} dB",
                s.level, m.mean_psnr, s.mean_psnr
            ));
        }
    }
    let gaps: Vec<String> = curves
        .rd_single
        .iter()
        .zip(&curves.rd_multi)
        .map(|(s, m)| format!("{:.2}", s.mean_psnr - m.mean_psnr))
        .collect();
    Outcome::Pass(format!("single minus multi PSNR [{}] dB", gaps.join(", ")))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        (
            "nested codec is strongly idempotent over all sequences",
            exhaustive_nested,
        ),
        (
            "midpoint chain (1, 3) has rho exactly 1/64",
            midpoint_witness,
        ),
        ("nested protocol grid is identically zero", nested_grid_zero),
        (
            "block-DCT single pass beats chains within 3 SE",
            theorem1_dct,
        ),
        ("block-DCT rho does not shrink from k=10 to k=50", k_growth),
        ("RMSE triangle bound on every pair", rmse_triangle),
        ("nested chains re-encode byte-identically", nested_bitrate),
        ("evaluate reports are byte-identical", determinism),
        ("block-DCT quality ladder sanity", dct_sanity),
        (
            "external JPEG multi-round curve below single pass",
            external_jpeg,
        ),
    ];

    let mut ctx = Context::new();
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome =
            panic::catch_unwind(AssertUnwindSafe(|| check(&mut ctx))).unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::Fail(format!("panicked: {msg}"))
            });
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Skip(d) => ("SKIP", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {name} ({detail})", i + 1);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
