use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use thiserror::Error;

use super::{generate_uniform_source, parse_pnm, ImageBuffer, Signal, SourceError, SourceVector};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset directory {path} not readable: {source}")]
    Directory {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no loadable PNM images in {0}")]
    NoImages(PathBuf),
    #[error("bad synthetic dataset locator {0:?}, expected uniform:N[:SEED]")]
    Locator(String),
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// A file skipped while loading a directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadWarning {
    pub file: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetItems {
    Images(Vec<ImageBuffer>),
    Source(SourceVector),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub items: DatasetItems,
    pub source_path: String,
    pub item_names: Vec<String>,
    pub warnings: Vec<LoadWarning>,
}

impl Dataset {
    pub fn from_images(source_path: impl Into<String>, named: Vec<(String, ImageBuffer)>) -> Self {
        let mut named = named;
        named.sort_by(|a, b| a.0.cmp(&b.0));
        let (item_names, images) = named.into_iter().unzip();
        Self {
            items: DatasetItems::Images(images),
            source_path: source_path.into(),
            item_names,
            warnings: Vec::new(),
        }
    }

    pub fn from_source(source_path: impl Into<String>, src: SourceVector) -> Self {
        let source_path = source_path.into();
        Self {
            items: DatasetItems::Source(src),
            item_names: vec![source_path.clone()],
            source_path,
            warnings: Vec::new(),
        }
    }

    /// Opens either a directory of PNM files or a synthetic uniform source
    /// written as `uniform:N` or `uniform:N:SEED` (seed defaults to 0).
    pub fn open(locator: &str) -> Result<Self, DatasetError> {
        match locator.strip_prefix("uniform:") {
            Some(rest) => {
                let bad = || DatasetError::Locator(locator.to_string());
                let mut parts = rest.split(':');
                let n: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                let seed: u64 = match parts.next() {
                    Some(s) => s.parse().map_err(|_| bad())?,
                    None => 0,
                };
                if parts.next().is_some() {
                    return Err(bad());
                }
                let src = generate_uniform_source(n, seed)?;
                Ok(Self::from_source(format!("uniform:{n}:{seed}"), src))
            }
            None => load_dataset(Path::new(locator)),
        }
    }

    pub fn len(&self) -> usize {
        match &self.items {
            DatasetItems::Images(v) => v.len(),
            DatasetItems::Source(_) => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Items as codec inputs, in dataset order.
    pub fn signals(&self) -> Vec<Signal> {
        match &self.items {
            DatasetItems::Images(v) => v.iter().cloned().map(Signal::Image).collect(),
            DatasetItems::Source(s) => vec![Signal::Source(s.clone())],
        }
    }
}

/// Loads every PNM file in `path`, sorted by file name. Files that fail to
/// parse are skipped and recorded in [`Dataset::warnings`].
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let dir_err = |source| DatasetError::Directory {
        path: path.to_path_buf(),
        source,
    };
    let mut entries = Vec::new();
    for entry in fs::read_dir(path).map_err(dir_err)? {
        let entry = entry.map_err(dir_err)?;
        if entry.file_type().map_err(dir_err)?.is_file() {
            entries.push(entry.path());
        }
    }
    entries.sort();

    let mut named = Vec::new();
    let mut warnings = Vec::new();
    for file in entries {
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parsed = fs::read(&file)
            .map_err(|e| e.to_string())
            .and_then(|bytes| parse_pnm(&bytes).map_err(|e| e.to_string()));
        match parsed {
            Ok(img) => named.push((name, img)),
            Err(reason) => {
                warn!("skipping {}: {reason}", file.display());
                warnings.push(LoadWarning { file: name, reason });
            }
        }
    }
    if named.is_empty() {
        return Err(DatasetError::NoImages(path.to_path_buf()));
    }
    let mut ds = Dataset::from_images(path.display().to_string(), named);
    ds.warnings = warnings;
    Ok(ds)
}
