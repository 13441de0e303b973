use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use idemlab::chain::{MonteCarloSpec, SamplingMode, SequencePlan};
use idemlab::codec::{CodecConfig, QualityLevel, ScalarCodec};
use idemlab::image_io::{generate_uniform_source, uniform_grid, Dataset, Signal, SignalKind};
use idemlab::protocol::{
    compute_rd_curves, run_protocol, theorem1_check, verify_strong_idempotence, DeviationReport,
    EvalConfig, ProtocolError,
};
use idemlab::report::{emit_report, render_svg, ReportFormat};

#[derive(Parser)]
#[command(
    name = "idemlab",
    version,
    about = "Multi-round re-compression stability lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LadderArg {
    Nested,
    Midpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Literal,
    ForcedMin,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Literal => SamplingMode::Literal,
            ModeArg::ForcedMin => SamplingMode::ForcedMin,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a scalar ladder and sweep every quality sequence up to length 4.
    ToyDemo {
        #[arg(long)]
        levels: u32,
        #[arg(long, value_enum)]
        ladder: LadderArg,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the full protocol from a JSON config and write a report.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// Render single-pass and multi-round RD curves to SVG.
    RdCurve {
        #[arg(long)]
        codec: String,
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, value_enum, default_value = "forced-min")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare single-pass and chained distortion against the original.
    #[command(name = "check-theorem1")]
    CheckTheorem1 {
        #[arg(long)]
        codec: String,
        #[arg(long)]
        dataset: String,
        #[arg(long = "qmin")]
        q_min: u32,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, value_enum, default_value = "forced-min")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive strong-idempotence sweep of a scalar codec on a uniform grid.
    Verify {
        #[arg(long)]
        codec: String,
        #[arg(long)]
        max_len: usize,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
    Verification(String),
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn codec_from_id(id: &str) -> Result<(CodecConfig, idemlab::CodecHandle), Failure> {
    let cfg = CodecConfig::from_id(id).map_err(config_err)?;
    let codec = cfg.build().map_err(config_err)?;
    Ok((cfg, codec))
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn print_deviations(rep: &DeviationReport) {
    print_json(rep);
    println!(
        "max MSE deviation {} over {} sequences: {}",
        rep.max_mse(),
        rep.sequences,
        if rep.is_strongly_idempotent() {
            "strongly idempotent on these inputs"
        } else {
            "NOT strongly idempotent"
        }
    );
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ToyDemo {
            levels,
            ladder,
            n,
            seed,
        } => {
            let codec = match ladder {
                LadderArg::Nested => ScalarCodec::nested(levels),
                LadderArg::Midpoint => ScalarCodec::midpoint(levels),
            }
            .map_err(config_err)?;
            for (i, level) in codec.ladder().levels().iter().enumerate() {
                println!("level {}: {:?}", i + 1, level);
            }
            let src = generate_uniform_source(n, seed).map_err(config_err)?;
            let rep = verify_strong_idempotence(&codec, &[Signal::Source(src)], 4)?;
            print_deviations(&rep);
            Ok(())
        }
        Command::Evaluate {
            config,
            out,
            format,
        } => {
            let cfg = EvalConfig::from_file(&config)?;
            let rep = run_protocol(&cfg)?;
            print_json(&rep.config);
            write_file(&out, &emit_report(&rep, format))
        }
        Command::RdCurve {
            codec,
            dataset,
            k,
            b,
            mode,
            seed,
            out,
        } => {
            let (codec_cfg, handle) = codec_from_id(&codec)?;
            let ds = Dataset::open(&dataset).map_err(config_err)?;
            let mode = SamplingMode::from(mode);
            print_json(&json!({
                "codec": codec_cfg, "dataset": ds.source_path, "k": k, "b": b,
                "mode": mode, "master_seed": seed,
            }));
            let curves = compute_rd_curves(&ds, handle.as_ref(), k, b, mode, seed)?;
            let title = format!("{} RD curves, k={k}, b={b}", handle.id());
            let svg = render_svg(&curves.rd_single, &curves.rd_multi, &title)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            write_file(&out, &svg)
        }
        Command::CheckTheorem1 {
            codec,
            dataset,
            q_min,
            k,
            b,
            mode,
            seed,
        } => {
            let (_, handle) = codec_from_id(&codec)?;
            let ds = Dataset::open(&dataset).map_err(config_err)?;
            let q_min = QualityLevel::new(q_min);
            handle.check_level(q_min).map_err(config_err)?;
            let spec = MonteCarloSpec {
                q_min,
                k,
                b,
                plan: SequencePlan::Sample(mode.into()),
                master_seed: seed,
            };
            let record = theorem1_check(&ds, handle.as_ref(), &spec)?;
            print_json(&record);
            if record.satisfied {
                Ok(())
            } else {
                Err(Failure::Verification(
                    "single-pass distortion exceeds chained distortion".into(),
                ))
            }
        }
        Command::Verify {
            codec,
            max_len,
            grid,
        } => {
            let (_, handle) = codec_from_id(&codec)?;
            if handle.capability() != SignalKind::Source {
                return Err(Failure::Config(format!(
                    "verify sweeps scalar codecs only; {codec} is an image codec"
                )));
            }
            let inputs = [Signal::Source(uniform_grid(grid).map_err(config_err)?)];
            let rep = verify_strong_idempotence(handle.as_ref(), &inputs, max_len)?;
            print_deviations(&rep);
            if rep.is_strongly_idempotent() {
                Ok(())
            } else {
                let witness = rep
                    .witness
                    .as_ref()
                    .map(|(_, seq)| {
                        let seq: Vec<String> = seq.iter().map(ToString::to_string).collect();
                        format!(" at sequence [{}]", seq.join(", "))
                    })
                    .unwrap_or_default();
                Err(Failure::Verification(format!(
                    "MSE deviation {}{witness}",
                    rep.max_mse()
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(4)
        }
    }
}
