//! Binary PGM (`P5`) and PPM (`P6`) with maxval 255.

use super::{ImageBuffer, ImageError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnmError {
    #[error("not a binary PGM/PPM file (magic {0:?})")]
    BadMagic(String),
    #[error("malformed PNM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    Maxval(u64),
    #[error("truncated pixel data: expected {expected} bytes, found {got}")]
    Truncated { expected: usize, got: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, PnmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::MalformedHeader(format!("missing {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse()
            .map_err(|_| PnmError::MalformedHeader(format!("{what} out of range: {text}")))
    }
}

pub fn parse_pnm(bytes: &[u8]) -> Result<ImageBuffer, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        other => {
            let magic = String::from_utf8_lossy(other.unwrap_or(bytes)).into_owned();
            return Err(PnmError::BadMagic(magic));
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !cur
        .bytes
        .get(cur.pos)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(PnmError::MalformedHeader("no separator after magic".into()));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(PnmError::Maxval(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match cur.bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(PnmError::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let width =
        usize::try_from(width).map_err(|_| PnmError::MalformedHeader("width too large".into()))?;
    let height = usize::try_from(height)
        .map_err(|_| PnmError::MalformedHeader("height too large".into()))?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| PnmError::MalformedHeader("dimensions overflow".into()))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            got: raster.len(),
        });
    }
    Ok(ImageBuffer::new(
        width,
        height,
        channels,
        raster[..expected].to_vec(),
    )?)
}

pub fn serialize_pnm(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let header = format!("{magic}\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.samples().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.samples());
    out
}
