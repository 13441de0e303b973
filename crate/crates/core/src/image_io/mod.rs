//! Signals consumed and produced by codecs: 8-bit rasters, 1-D sources on
//! the unit interval, and the datasets built from them.

mod dataset;
mod pnm;
mod source;
pub mod synth;

pub use dataset::{load_dataset, Dataset, DatasetError, DatasetItems, LoadWarning};
pub use pnm::{parse_pnm, serialize_pnm, PnmError};
pub use source::{
    generate_uniform_source, uniform_grid, SourceError, SourceVector, UNIFORM_SOURCE_RNG,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("unsupported channel count {0}, expected 1 or 3")]
    Channels(usize),
    #[error("sample buffer holds {got} values, expected {expected}")]
    SampleCount { expected: usize, got: usize },
}

/// Row-major, channel-interleaved 8-bit raster with 1 (gray) or 3 (RGB)
/// channels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<u8>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::Channels(channels));
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(ImageError::SampleCount {
                expected,
                got: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    /// Image filled with one value in every sample.
    pub fn filled(
        width: usize,
        height: usize,
        channels: usize,
        value: u8,
    ) -> Result<Self, ImageError> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// Copies one channel out as a `width * height` plane.
    pub fn plane(&self, channel: usize) -> Vec<u8> {
        self.samples
            .iter()
            .skip(channel)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    /// Inverse of [`ImageBuffer::plane`]: interleaves planes into a buffer.
    pub fn from_planes(
        width: usize,
        height: usize,
        planes: &[Vec<u8>],
    ) -> Result<Self, ImageError> {
        let channels = planes.len();
        let n = width * height;
        let mut samples = vec![0u8; n * channels];
        for (c, plane) in planes.iter().enumerate() {
            if plane.len() != n {
                return Err(ImageError::SampleCount {
                    expected: n,
                    got: plane.len(),
                });
            }
            for (i, &v) in plane.iter().enumerate() {
                samples[i * channels + c] = v;
            }
        }
        Self::new(width, height, channels, samples)
    }
}

/// Anything a codec can take as input: an image or a 1-D toy source.
#[derive(Clone, Debug, PartialEq)]
pub enum Signal {
    Image(ImageBuffer),
    Source(SourceVector),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalKind {
    Image,
    Source,
}

impl Signal {
    pub fn kind(&self) -> SignalKind {
        match self {
            Signal::Image(_) => SignalKind::Image,
            Signal::Source(_) => SignalKind::Source,
        }
    }

    /// Number of pixels (images) or samples (sources); the denominator of bpp.
    pub fn pixel_count(&self) -> usize {
        match self {
            Signal::Image(img) => img.pixel_count(),
            Signal::Source(src) => src.len(),
        }
    }

    /// Peak value used for PSNR.
    pub fn peak(&self) -> f64 {
        match self {
            Signal::Image(_) => 255.0,
            Signal::Source(_) => 1.0,
        }
    }

    pub fn as_image(&self) -> Option<&ImageBuffer> {
        match self {
            Signal::Image(img) => Some(img),
            Signal::Source(_) => None,
        }
    }

    pub fn as_source(&self) -> Option<&SourceVector> {
        match self {
            Signal::Source(src) => Some(src),
            Signal::Image(_) => None,
        }
    }
}

impl From<ImageBuffer> for Signal {
    fn from(img: ImageBuffer) -> Self {
        Signal::Image(img)
    }
}

impl From<SourceVector> for Signal {
    fn from(src: SourceVector) -> Self {
        Signal::Source(src)
    }
}
