use super::ladder::{build_midpoint_ladder, build_nested_ladder, quantize_nearest};
use super::{
    Bitstream, BitstreamMeta, CodebookLadder, Codec, CodecError, LadderEcho, LadderKind,
    QualityLevel, Reconstruction, SignalDims,
};
use crate::image_io::{Signal, SignalKind, SourceVector};

const MAGIC: &[u8; 2] = b"SQ";
const HEADER_LEN: usize = 2 + 1 + 1 + 1 + 1 + 8;

/// Scalar quantizer over a [`CodebookLadder`], one value at a time.
///
/// Midpoint ladders quantize straight to the nearest codeword of level `q`.
/// Nested ladders snap to the top level and then descend one level at a
/// time, taking the nearest codeword at each step. Descent makes `f(., q)`
/// factor through every finer level, so chained reconstruction collapses to
/// the chain minimum. Direct nearest-codeword quantization does not have
/// that property for every nested ladder: under `{1/8, 5/8}` inside
/// `{1/8, 3/8, 5/8, 7/8}`, 0.3 goes to 1/8 directly but to 3/8 and then 5/8
/// through the top level.
///
/// Nested payloads are packed at the coarsest level whose codebook holds
/// every codeword in use, so re-encoding `f(x, q)` at any `q' >= q` costs
/// exactly what encoding it at `q` does.
#[derive(Clone, Debug)]
pub struct ScalarCodec {
    id: &'static str,
    ladder: CodebookLadder,
    // descent[q - 1][i]: level-q index reached from top-level index i.
    descent: Vec<Vec<usize>>,
    // birth[q - 1][i]: first level containing codeword i of level q.
    birth: Vec<Vec<u32>>,
}

impl ScalarCodec {
    pub fn nested(levels: u32) -> Result<Self, CodecError> {
        Ok(Self::from_ladder(build_nested_ladder(levels)?))
    }

    pub fn midpoint(levels: u32) -> Result<Self, CodecError> {
        Ok(Self::from_ladder(build_midpoint_ladder(levels)?))
    }

    pub fn from_ladder(ladder: CodebookLadder) -> Self {
        let top = ladder.len();
        let mut descent = vec![Vec::new(); top as usize];
        if ladder.kind() == LadderKind::Nested {
            descent[top as usize - 1] = (0..ladder.level(top).len()).collect();
            for q in (1..top).rev() {
                let finer = ladder.level(q + 1);
                let map: Vec<usize> = descent[q as usize]
                    .iter()
                    .map(|&i| {
                        quantize_nearest(finer[i], ladder.level(q))
                            .expect("codewords lie in [0, 1]")
                            .0
                    })
                    .collect();
                descent[q as usize - 1] = map;
            }
        }
        let birth = (1..=top)
            .map(|q| {
                ladder
                    .level(q)
                    .iter()
                    .map(|c| match ladder.kind() {
                        LadderKind::Midpoint => q,
                        LadderKind::Nested => (1..=q)
                            .find(|&l| ladder.level(l).contains(c))
                            .expect("codeword is in its own level"),
                    })
                    .collect()
            })
            .collect();
        let id = match ladder.kind() {
            LadderKind::Nested => "nested",
            LadderKind::Midpoint => "midpoint",
        };
        Self {
            id,
            ladder,
            descent,
            birth,
        }
    }

    pub fn ladder(&self) -> &CodebookLadder {
        &self.ladder
    }

    fn quantize(&self, x: f64, q: u32) -> Result<usize, CodecError> {
        match self.ladder.kind() {
            LadderKind::Midpoint => Ok(quantize_nearest(x, self.ladder.level(q))?.0),
            LadderKind::Nested => {
                let (top, _) = quantize_nearest(x, self.ladder.level(self.ladder.len()))?;
                Ok(self.descent[q as usize - 1][top])
            }
        }
    }

    pub fn encode(&self, src: &SourceVector, q: QualityLevel) -> Result<Bitstream, CodecError> {
        self.check_level(q)?;
        let indices = src
            .values()
            .iter()
            .map(|&x| self.quantize(x, q.index()))
            .collect::<Result<Vec<_>, _>>()?;
        let births = &self.birth[q.index() as usize - 1];
        let coded = indices.iter().map(|&i| births[i]).max().unwrap_or(1);
        let fine = self.ladder.level(q.index());
        let coarse = self.ladder.level(coded);
        let width = coded - 1;
        let mut payload = Vec::with_capacity(HEADER_LEN + (src.len() * width as usize).div_ceil(8));
        payload.extend_from_slice(MAGIC);
        payload.push(match self.ladder.kind() {
            LadderKind::Midpoint => 0,
            LadderKind::Nested => 1,
        });
        payload.push(self.ladder.len() as u8);
        payload.push(q.index() as u8);
        payload.push(coded as u8);
        payload.extend_from_slice(&(src.len() as u64).to_le_bytes());

        let mut writer = BitWriter::new(payload);
        for &i in &indices {
            let idx = if coded == q.index() {
                i
            } else {
                coarse
                    .iter()
                    .position(|&c| c == fine[i])
                    .expect("codeword present at its birth level and above")
            };
            writer.write(idx as u64, width);
        }
        Ok(Bitstream {
            payload: writer.finish(),
            bits_used: (src.len() as u64 * width as u64) as f64,
            meta: BitstreamMeta {
                codec_id: self.id.to_string(),
                quality: q,
                dims: SignalDims::Source { len: src.len() },
            },
        })
    }

    pub fn decode(&self, payload: &[u8]) -> Result<SourceVector, CodecError> {
        let corrupt = |m: &str| CodecError::Corrupt(m.to_string());
        if payload.len() < HEADER_LEN || &payload[..2] != MAGIC {
            return Err(corrupt("missing scalar header"));
        }
        let kind = match payload[2] {
            0 => LadderKind::Midpoint,
            1 => LadderKind::Nested,
            _ => return Err(corrupt("unknown ladder kind")),
        };
        if kind != self.ladder.kind() || u32::from(payload[3]) != self.ladder.len() {
            return Err(corrupt("bitstream was produced by a different ladder"));
        }
        let q = u32::from(payload[4]);
        if !(1..=self.ladder.len()).contains(&q) {
            return Err(corrupt("quality level out of range"));
        }
        let coded = u32::from(payload[5]);
        if !(1..=q).contains(&coded) || (kind == LadderKind::Midpoint && coded != q) {
            return Err(corrupt("coded level out of range"));
        }
        let n = u64::from_le_bytes(payload[6..14].try_into().expect("8 bytes")) as usize;
        let width = coded - 1;
        let body = &payload[HEADER_LEN..];
        if (body.len() as u64) * 8 < n as u64 * width as u64 {
            return Err(corrupt("truncated index data"));
        }
        let codewords = self.ladder.level(coded);
        let mut reader = BitReader {
            bytes: body,
            pos: 0,
        };
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let idx = reader.read(width) as usize;
            values.push(
                *codewords
                    .get(idx)
                    .ok_or_else(|| corrupt("index out of range"))?,
            );
        }
        SourceVector::new(values).map_err(|e| CodecError::Corrupt(e.to_string()))
    }
}

impl Codec for ScalarCodec {
    fn id(&self) -> &str {
        self.id
    }

    fn levels(&self) -> u32 {
        self.ladder.len()
    }

    fn capability(&self) -> SignalKind {
        SignalKind::Source
    }

    fn ladder(&self) -> LadderEcho {
        LadderEcho::Scalar {
            kind: self.ladder.kind(),
            codewords: self.ladder.levels().to_vec(),
        }
    }

    fn reconstruct(&self, x: &Signal, q: QualityLevel) -> Result<Reconstruction, CodecError> {
        self.check_signal(x)?;
        let src = x.as_source().expect("checked kind");
        let bs = self.encode(src, q)?;
        Ok(Reconstruction {
            signal: Signal::Source(self.decode(&bs.payload)?),
            bits: bs.bits_used,
        })
    }
}

/// MSB-first bit packing.
struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        Self {
            out,
            acc: 0,
            filled: 0,
        }
    }

    fn write(&mut self, value: u64, width: u32) {
        for bit in (0..width).rev() {
            self.acc = (self.acc << 1) | ((value >> bit) & 1);
            self.filled += 1;
            if self.filled == 8 {
                self.out.push(self.acc as u8);
                self.acc = 0;
                self.filled = 0;
            }
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.out.push((self.acc << (8 - self.filled)) as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn read(&mut self, width: u32) -> u64 {
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | u64::from(bit);
            self.pos += 1;
        }
        v
    }
}
