//! Adapter that runs user-supplied encoder/decoder command lines.
//!
//! Each call gets a fresh temporary directory holding `input.pgm|ppm`,
//! `encoded.<ext>` and `decoded.pgm|ppm`. Command templates are split on
//! whitespace and `{input}`, `{output}` and `{quality}` are substituted
//! literally inside each argument; no shell is involved.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Codec, CodecError, LadderEcho, QualityLevel, Reconstruction};
use crate::image_io::{parse_pnm, serialize_pnm, ImageBuffer, Signal, SignalKind};

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("cannot read codec spec {path}: {reason}")]
    SpecFile { path: PathBuf, reason: String },
    #[error("{stage} command is empty")]
    EmptyCommand { stage: &'static str },
    #[error("failed to launch {stage} command {program:?}: {source}")]
    Spawn {
        stage: &'static str,
        program: String,
        source: std::io::Error,
    },
    #[error("{stage} command exited with {status}: {stderr}")]
    Exit {
        stage: &'static str,
        status: ExitStatus,
        stderr: String,
    },
    #[error("{stage} command exceeded {timeout_s}s timeout")]
    Timeout { stage: &'static str, timeout_s: f64 },
    #[error("decoded image is {got_w}x{got_h}x{got_c}, expected {want_w}x{want_h}x{want_c}")]
    DimsMismatch {
        want_w: usize,
        want_h: usize,
        want_c: usize,
        got_w: usize,
        got_h: usize,
        got_c: usize,
    },
    #[error("temporary file I/O failed: {0}")]
    Io(#[from] std::io::Error),
}

fn default_encoded_ext() -> String {
    "bin".into()
}

/// Command-line codec description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalCodecSpec {
    pub encode_cmd: String,
    pub decode_cmd: String,
    /// Native quality parameter for ladder levels `1..=Q`, in order.
    pub quality_map: Vec<String>,
    pub timeout_s: f64,
    /// Extension of the intermediate encoded file, for tools that sniff it.
    #[serde(default = "default_encoded_ext")]
    pub encoded_ext: String,
}

impl ExternalCodecSpec {
    pub fn from_file(path: &Path) -> Result<Self, ExternalError> {
        let spec_err = |reason: String| ExternalError::SpecFile {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| spec_err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| spec_err(e.to_string()))
    }

    fn validate(&self) -> Result<(), CodecError> {
        if self.quality_map.is_empty() {
            return Err(CodecError::Config("quality_map must not be empty".into()));
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err(CodecError::Config("timeout_s must be positive".into()));
        }
        if self.encoded_ext.is_empty() || self.encoded_ext.contains(['/', '\\']) {
            return Err(CodecError::Config(
                "encoded_ext must be a bare extension".into(),
            ));
        }
        Ok(())
    }
}

fn expand(template: &str, input: &Path, output: &Path, quality: &str) -> Vec<String> {
    template
        .split_whitespace()
        .map(|tok| {
            tok.replace("{input}", &input.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
                .replace("{quality}", quality)
        })
        .collect()
}

fn run_with_timeout(
    stage: &'static str,
    argv: &[String],
    cwd: &Path,
    timeout: Duration,
    timeout_s: f64,
) -> Result<(), ExternalError> {
    let (program, args) = argv
        .split_first()
        .ok_or(ExternalError::EmptyCommand { stage })?;
    let mut child = Command::new(program)
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| ExternalError::Spawn {
            stage,
            program: program.clone(),
            source,
        })?;

    // Drain both pipes so a chatty tool cannot block on a full buffer.
    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::Timeout { stage, timeout_s });
        }
        thread::sleep(Duration::from_millis(2));
    };
    let out = out_reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    if status.success() {
        Ok(())
    } else {
        let mut diag = String::from_utf8_lossy(&err).trim().to_string();
        if diag.is_empty() {
            diag = String::from_utf8_lossy(&out).trim().to_string();
        }
        Err(ExternalError::Exit {
            stage,
            status,
            stderr: diag,
        })
    }
}

/// Round-trips `img` through the external tools at ladder level `q`.
/// Returns the decoded image and `8 * encoded_bytes / (width * height)`.
pub fn external_reconstruct(
    img: &ImageBuffer,
    q: QualityLevel,
    spec: &ExternalCodecSpec,
) -> Result<(ImageBuffer, f64), CodecError> {
    spec.validate()?;
    let levels = spec.quality_map.len() as u32;
    if !q.is_valid_for(levels) {
        return Err(CodecError::InvalidLevel { level: q, levels });
    }
    let quality = &spec.quality_map[q.index() as usize - 1];
    let ext = if img.channels() == 3 { "ppm" } else { "pgm" };

    let dir = tempfile::Builder::new()
        .prefix("idemlab-ext-")
        .tempdir()
        .map_err(ExternalError::Io)?;
    let input = dir.path().join(format!("input.{ext}"));
    let encoded = dir.path().join(format!("encoded.{}", spec.encoded_ext));
    let decoded = dir.path().join(format!("decoded.{ext}"));
    std::fs::write(&input, serialize_pnm(img)).map_err(ExternalError::Io)?;

    let timeout = Duration::from_secs_f64(spec.timeout_s);
    run_with_timeout(
        "encode",
        &expand(&spec.encode_cmd, &input, &encoded, quality),
        dir.path(),
        timeout,
        spec.timeout_s,
    )?;
    let encoded_bytes = std::fs::metadata(&encoded)
        .map_err(ExternalError::Io)?
        .len();
    run_with_timeout(
        "decode",
        &expand(&spec.decode_cmd, &encoded, &decoded, quality),
        dir.path(),
        timeout,
        spec.timeout_s,
    )?;
    let out = parse_pnm(&std::fs::read(&decoded).map_err(ExternalError::Io)?)?;
    if (out.width(), out.height(), out.channels()) != (img.width(), img.height(), img.channels()) {
        return Err(ExternalError::DimsMismatch {
            want_w: img.width(),
            want_h: img.height(),
            want_c: img.channels(),
            got_w: out.width(),
            got_h: out.height(),
            got_c: out.channels(),
        }
        .into());
    }
    let bpp = 8.0 * encoded_bytes as f64 / img.pixel_count() as f64;
    Ok((out, bpp))
}

#[derive(Clone, Debug)]
pub struct ExternalCodec {
    spec: ExternalCodecSpec,
}

impl ExternalCodec {
    pub fn new(spec: ExternalCodecSpec) -> Result<Self, CodecError> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &ExternalCodecSpec {
        &self.spec
    }
}

impl Codec for ExternalCodec {
    fn id(&self) -> &str {
        "external"
    }

    fn levels(&self) -> u32 {
        self.spec.quality_map.len() as u32
    }

    fn capability(&self) -> SignalKind {
        SignalKind::Image
    }

    fn ladder(&self) -> LadderEcho {
        LadderEcho::External {
            quality_map: self.spec.quality_map.clone(),
        }
    }

    fn reconstruct(&self, x: &Signal, q: QualityLevel) -> Result<Reconstruction, CodecError> {
        self.check_signal(x)?;
        let img = x.as_image().expect("checked kind");
        let (out, bpp) = external_reconstruct(img, q, &self.spec)?;
        Ok(Reconstruction {
            bits: bpp * img.pixel_count() as f64,
            signal: Signal::Image(out),
        })
    }
}
