//! Scalar codebook ladders for the 1-D uniform source on `[0, 1]`.
//!
//! Level `q` of either ladder kind holds `2^(q-1)` codewords. The top level
//! is always the midpoint codebook `(2i - 1) / 2^Q`; the kinds differ in how
//! the coarser levels are chosen.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::CodecError;

/// Nested design runs an `O(n^2 m)` subset search per level.
pub const MAX_NESTED_LEVELS: u32 = 10;
pub const MAX_MIDPOINT_LEVELS: u32 = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LadderError {
    #[error("ladder needs at least one level")]
    NoLevels,
    #[error("{kind:?} ladder supports at most {max} levels, got {levels}")]
    TooManyLevels {
        kind: LadderKind,
        levels: u32,
        max: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    /// Every coarser codebook is a subset of every finer one.
    Nested,
    /// Each level is the midpoint codebook of its own size.
    Midpoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodebookLadder {
    kind: LadderKind,
    levels: Vec<Vec<f64>>,
}

impl CodebookLadder {
    pub fn kind(&self) -> LadderKind {
        self.kind
    }

    pub fn len(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Codewords of level `q` (1-based). Panics when `q` is out of range.
    pub fn level(&self, q: u32) -> &[f64] {
        &self.levels[q as usize - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }
}

fn check_levels(kind: LadderKind, levels: u32, max: u32) -> Result<(), LadderError> {
    if levels == 0 {
        Err(LadderError::NoLevels)
    } else if levels > max {
        Err(LadderError::TooManyLevels { kind, levels, max })
    } else {
        Ok(())
    }
}

fn midpoint_codebook(q: u32) -> Vec<f64> {
    let denom = (1u64 << q) as f64;
    (1..=(1u64 << (q - 1)))
        .map(|i| (2 * i - 1) as f64 / denom)
        .collect()
}

pub fn build_midpoint_ladder(levels: u32) -> Result<CodebookLadder, LadderError> {
    check_levels(LadderKind::Midpoint, levels, MAX_MIDPOINT_LEVELS)?;
    Ok(CodebookLadder {
        kind: LadderKind::Midpoint,
        levels: (1..=levels).map(midpoint_codebook).collect(),
    })
}

/// Builds the nested ladder top-down: level `Q` is the midpoint codebook and
/// each coarser level is the half-size subset of the level above with the
/// smallest expected squared error under nearest-codeword quantization of a
/// uniform source. Ties go to the lexicographically smallest index set.
///
/// Expected error is integrated exactly. Codewords at the top level are odd
/// multiples of `1/2^Q`; in those units the error of a selection, scaled by
/// `12 * 2^(3Q)`, is the integer
/// `4 c_1^3 + sum (c_{j+1} - c_j)^3 + 4 (2^Q - c_m)^3`.
pub fn build_nested_ladder(levels: u32) -> Result<CodebookLadder, LadderError> {
    check_levels(LadderKind::Nested, levels, MAX_NESTED_LEVELS)?;
    let span = 1u64 << levels;
    let mut chosen: Vec<u64> = (1..=(1u64 << (levels - 1))).map(|i| 2 * i - 1).collect();
    let mut units = vec![chosen.clone()];
    for q in (1..levels).rev() {
        let keep = 1usize << (q - 1);
        let picks = optimal_subset(&chosen, keep, span);
        chosen = picks.into_iter().map(|i| chosen[i]).collect();
        units.push(chosen.clone());
    }
    units.reverse();
    let denom = span as f64;
    Ok(CodebookLadder {
        kind: LadderKind::Nested,
        levels: units
            .into_iter()
            .map(|l| l.into_iter().map(|c| c as f64 / denom).collect())
            .collect(),
    })
}

/// Scaled integer error of a selection of the integer positions in `points`.
#[cfg(test)]
fn scaled_selection_error(points: &[u64], span: u64) -> u128 {
    let cube = |d: u64| (d as u128).pow(3);
    let first = *points.first().expect("nonempty selection");
    let last = *points.last().expect("nonempty selection");
    let inner: u128 = points.windows(2).map(|w| cube(w[1] - w[0])).sum();
    4 * cube(first) + inner + 4 * cube(span - last)
}

/// Indices of the `keep`-element subset of sorted `points` minimising
/// [`scaled_selection_error`], lexicographically smallest among optima.
fn optimal_subset(points: &[u64], keep: usize, span: u64) -> Vec<usize> {
    let n = points.len();
    let cube = |d: u64| (d as u128).pow(3);
    // tail[r][j]: cheapest way to finish when j is selected and r selections
    // (j included) remain, right-edge cell included.
    let mut tail = vec![vec![u128::MAX; n]; keep + 1];
    for j in 0..n {
        tail[1][j] = 4 * cube(span - points[j]);
    }
    for r in 2..=keep {
        for j in 0..n {
            let mut best = u128::MAX;
            for next in j + 1..n {
                if tail[r - 1][next] == u128::MAX {
                    continue;
                }
                best = best.min(cube(points[next] - points[j]) + tail[r - 1][next]);
            }
            tail[r][j] = best;
        }
    }
    let total = |j: usize| tail[keep][j].saturating_add(4 * cube(points[j]));
    let optimum = (0..n).map(total).min().expect("nonempty");
    let mut picks = Vec::with_capacity(keep);
    let mut j = (0..n)
        .find(|&j| total(j) == optimum)
        .expect("optimum attained");
    picks.push(j);
    for r in (1..keep).rev() {
        let need = tail[r + 1][j];
        let next = (j + 1..n)
            .find(|&k| tail[r][k] != u128::MAX && cube(points[k] - points[j]) + tail[r][k] == need)
            .expect("optimum attained");
        picks.push(next);
        j = next;
    }
    picks
}

/// Nearest codeword to `x`; a point equidistant between two codewords goes
/// to the larger one.
pub fn quantize_nearest(x: f64, codewords: &[f64]) -> Result<(usize, f64), CodecError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CodecError::OutOfRange(x));
    }
    assert!(!codewords.is_empty(), "empty codebook");
    // Number of cell boundaries (midpoints between neighbours) at or below x.
    let (mut lo, mut hi) = (0usize, codewords.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if (codewords[mid] + codewords[mid + 1]) / 2.0 <= x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    Ok((lo, codewords[lo]))
}
