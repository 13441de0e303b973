//! JPEG-style block transform codec: 8x8 orthonormal DCT, scaled Annex K
//! luminance quantization, channels coded independently. The rate is the
//! zero-order entropy of the quantized indices per coefficient position;
//! no entropy coder is run.

use std::sync::OnceLock;

use super::{
    Bitstream, BitstreamMeta, Codec, CodecError, LadderEcho, QualityLevel, Reconstruction,
    SignalDims,
};
use crate::image_io::{ImageBuffer, Signal, SignalKind};

const MAGIC: &[u8; 2] = b"BD";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 2 + 1 + 4 + 4 + 1 + 1 + 1;

/// ITU-T T.81 Annex K.1 luminance quantization table, row-major.
pub const BASE_LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

pub fn default_native_qualities() -> Vec<u8> {
    vec![5, 15, 25, 35, 45, 55, 65, 75]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DctDirection {
    Forward,
    Inverse,
}

pub type Block = [[f64; 8]; 8];

fn basis() -> &'static Block {
    static BASIS: OnceLock<Block> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut c = [[0.0; 8]; 8];
        for (u, row) in c.iter_mut().enumerate() {
            let alpha = if u == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
            for (x, v) in row.iter_mut().enumerate() {
                *v = alpha * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        c
    })
}

/// Orthonormal 2-D DCT-II (forward) or DCT-III (inverse).
pub fn dct2_8x8(block: &Block, direction: DctDirection) -> Block {
    let c = basis();
    // Forward: C B C^T. Inverse: C^T F C.
    let mut tmp = [[0.0; 8]; 8];
    let mut out = [[0.0; 8]; 8];
    match direction {
        DctDirection::Forward => {
            for u in 0..8 {
                for x in 0..8 {
                    tmp[u][x] = (0..8).map(|y| c[u][y] * block[y][x]).sum();
                }
            }
            for u in 0..8 {
                for v in 0..8 {
                    out[u][v] = (0..8).map(|x| tmp[u][x] * c[v][x]).sum();
                }
            }
        }
        DctDirection::Inverse => {
            for y in 0..8 {
                for v in 0..8 {
                    tmp[y][v] = (0..8).map(|u| c[u][y] * block[u][v]).sum();
                }
            }
            for y in 0..8 {
                for x in 0..8 {
                    out[y][x] = (0..8).map(|v| tmp[y][v] * c[v][x]).sum();
                }
            }
        }
    }
    out
}

/// libjpeg-style quality scaling of [`BASE_LUMA_TABLE`].
pub fn scale_quant_table(native_quality: u8) -> Result<[u16; 64], CodecError> {
    if !(1..=100).contains(&native_quality) {
        return Err(CodecError::Config(format!(
            "native quality {native_quality} outside 1..=100"
        )));
    }
    let q = u32::from(native_quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut table = [0u16; 64];
    for (t, &base) in table.iter_mut().zip(BASE_LUMA_TABLE.iter()) {
        *t = ((u32::from(base) * scale + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(table)
}

#[derive(Clone, Debug)]
pub struct BlockDctCodec {
    native_qualities: Vec<u8>,
}

impl BlockDctCodec {
    /// `native_qualities[i]` is the native quality of ladder level `i + 1`;
    /// it must be strictly increasing within `1..=100`.
    pub fn new(native_qualities: Vec<u8>) -> Result<Self, CodecError> {
        if native_qualities.is_empty() || native_qualities.len() > 255 {
            return Err(CodecError::Config("DCT ladder needs 1..=255 levels".into()));
        }
        for &q in &native_qualities {
            scale_quant_table(q)?;
        }
        if !native_qualities.windows(2).all(|w| w[0] < w[1]) {
            return Err(CodecError::Config(
                "DCT native qualities must be strictly increasing".into(),
            ));
        }
        Ok(Self { native_qualities })
    }

    pub fn native_quality(&self, q: QualityLevel) -> Result<u8, CodecError> {
        self.check_level(q)?;
        Ok(self.native_qualities[q.index() as usize - 1])
    }
}

impl Default for BlockDctCodec {
    fn default() -> Self {
        Self::new(default_native_qualities()).expect("default ladder is valid")
    }
}

impl Codec for BlockDctCodec {
    fn id(&self) -> &str {
        "dct"
    }

    fn levels(&self) -> u32 {
        self.native_qualities.len() as u32
    }

    fn capability(&self) -> SignalKind {
        SignalKind::Image
    }

    fn ladder(&self) -> LadderEcho {
        LadderEcho::BlockDct {
            native_qualities: self.native_qualities.clone(),
        }
    }

    fn reconstruct(&self, x: &Signal, q: QualityLevel) -> Result<Reconstruction, CodecError> {
        self.check_signal(x)?;
        let native = self.native_quality(q)?;
        let bs = block_encode(x.as_image().expect("checked kind"), q, native)?;
        Ok(Reconstruction {
            signal: Signal::Image(block_decode(&bs)?),
            bits: bs.bits_used,
        })
    }
}

fn blocks_along(n: usize) -> usize {
    n.div_ceil(8)
}

/// Encodes every channel: edge-replicate to a multiple of 8, shift by -128,
/// transform, divide by the scaled table and round to integer indices.
///
/// `bits_used` sums, over channels and the 64 coefficient positions,
/// `block_count * H(position histogram)`.
pub fn block_encode(
    img: &ImageBuffer,
    q: QualityLevel,
    native_quality: u8,
) -> Result<Bitstream, CodecError> {
    let table = scale_quant_table(native_quality)?;
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let (bw, bh) = (blocks_along(w), blocks_along(h));
    let block_count = bw * bh;

    let mut payload = Vec::with_capacity(HEADER_LEN + channels * block_count * 128);
    payload.extend_from_slice(MAGIC);
    payload.push(VERSION);
    payload.extend_from_slice(&(w as u32).to_le_bytes());
    payload.extend_from_slice(&(h as u32).to_le_bytes());
    payload.push(channels as u8);
    payload.push(q.index() as u8);
    payload.push(native_quality);

    let mut bits_used = 0.0;
    for c in 0..channels {
        let plane = img.plane(c);
        let mut indices = Vec::with_capacity(block_count * 64);
        for by in 0..bh {
            for bx in 0..bw {
                let mut block = [[0.0; 8]; 8];
                for (y, row) in block.iter_mut().enumerate() {
                    let sy = (by * 8 + y).min(h - 1);
                    for (x, v) in row.iter_mut().enumerate() {
                        let sx = (bx * 8 + x).min(w - 1);
                        *v = f64::from(plane[sy * w + sx]) - 128.0;
                    }
                }
                let coeffs = dct2_8x8(&block, DctDirection::Forward);
                for (k, &step) in table.iter().enumerate() {
                    let idx = (coeffs[k / 8][k % 8] / f64::from(step)).round() as i16;
                    indices.push(idx);
                }
            }
        }
        bits_used += position_entropy_bits(&indices, block_count);
        for idx in indices {
            payload.extend_from_slice(&idx.to_le_bytes());
        }
    }

    Ok(Bitstream {
        payload,
        bits_used,
        meta: BitstreamMeta {
            codec_id: "dct".into(),
            quality: q,
            dims: SignalDims::Image {
                width: w,
                height: h,
                channels,
            },
        },
    })
}

/// Sum over coefficient positions of `N * H`, which equals
/// `N log2 N - sum_v n_v log2 n_v` for each position's histogram.
fn position_entropy_bits(indices: &[i16], block_count: usize) -> f64 {
    let n = block_count as f64;
    let mut column = Vec::with_capacity(block_count);
    let mut bits = 0.0;
    for k in 0..64 {
        column.clear();
        column.extend(indices.iter().skip(k).step_by(64).copied());
        column.sort_unstable();
        let mut acc = n * n.log2();
        for run in column.chunk_by(|a, b| a == b) {
            let cnt = run.len() as f64;
            acc -= cnt * cnt.log2();
        }
        // A constant column gives exactly zero; clamp float residue.
        bits += acc.max(0.0);
    }
    bits
}

/// Dequantizes, inverse-transforms, shifts back by +128, rounds and
/// clamps to `[0, 255]`, and crops the padding.
pub fn block_decode(bs: &Bitstream) -> Result<ImageBuffer, CodecError> {
    decode_payload(&bs.payload)
}

pub(crate) fn decode_payload(payload: &[u8]) -> Result<ImageBuffer, CodecError> {
    let corrupt = |m: &str| CodecError::Corrupt(m.to_string());
    if payload.len() < HEADER_LEN || &payload[..2] != MAGIC {
        return Err(corrupt("missing block-DCT header"));
    }
    if payload[2] != VERSION {
        return Err(corrupt("unsupported block-DCT version"));
    }
    let w = u32::from_le_bytes(payload[3..7].try_into().expect("4 bytes")) as usize;
    let h = u32::from_le_bytes(payload[7..11].try_into().expect("4 bytes")) as usize;
    let channels = payload[11] as usize;
    let native = payload[13];
    if w == 0 || h == 0 || !(channels == 1 || channels == 3) {
        return Err(corrupt("bad dimensions in header"));
    }
    let table = scale_quant_table(native).map_err(|_| corrupt("bad native quality"))?;
    let (bw, bh) = (blocks_along(w), blocks_along(h));
    let body = &payload[HEADER_LEN..];
    if body.len() != channels * bw * bh * 64 * 2 {
        return Err(corrupt("index data length mismatch"));
    }

    let mut indices = body
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]));
    let mut planes = Vec::with_capacity(channels);
    for _ in 0..channels {
        let mut plane = vec![0u8; w * h];
        for by in 0..bh {
            for bx in 0..bw {
                let mut coeffs = [[0.0; 8]; 8];
                for (k, &step) in table.iter().enumerate() {
                    let idx = indices.next().expect("length checked");
                    coeffs[k / 8][k % 8] = f64::from(idx) * f64::from(step);
                }
                let block = dct2_8x8(&coeffs, DctDirection::Inverse);
                for (y, row) in block.iter().enumerate() {
                    let py = by * 8 + y;
                    if py >= h {
                        break;
                    }
                    for (x, &v) in row.iter().enumerate() {
                        let px = bx * 8 + x;
                        if px >= w {
                            break;
                        }
                        plane[py * w + px] = (v + 128.0).round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
        }
        planes.push(plane);
    }
    ImageBuffer::from_planes(w, h, &planes).map_err(|e| CodecError::Corrupt(e.to_string()))
}
