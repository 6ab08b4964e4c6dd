use alloc::vec;
use alloc::vec::Vec;

use super::AlignmentSet;
use crate::{Error, Result};

/// Longest sentence the reordering oracle accepts.
pub const MAX_SENTENCE_LEN: usize = 512;

/// How several sure-aligned target indices collapse to one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Arithmetic mean.
    #[default]
    Mean,
    /// Smallest aligned target index.
    Min,
    /// Largest aligned target index.
    Max,
}

/// One target-side key per source token, plus 2-D prefix counts of
/// pairwise orderings so that the discordance between two adjacent blocks
/// is an O(1) lookup.
#[derive(Debug, Clone)]
pub struct PairPreference {
    t: Vec<f64>,
    // greater[x * (n + 1) + y] = #{a < x, b < y : t[a] > t[b]}
    greater: Vec<u32>,
    less: Vec<u32>,
}

impl PairPreference {
    /// Builds the tables for keys `t`.
    pub fn from_positions(t: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n > MAX_SENTENCE_LEN {
            return Err(Error::Capacity {
                what: "sentence length",
                got: n,
                limit: MAX_SENTENCE_LEN,
            });
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("representative positions"));
        }
        let w = n + 1;
        let mut greater = vec![0u32; w * w];
        let mut less = vec![0u32; w * w];
        for a in 0..n {
            let mut row_gt = 0;
            let mut row_lt = 0;
            for b in 0..n {
                row_gt += u32::from(t[a] > t[b]);
                row_lt += u32::from(t[a] < t[b]);
                greater[(a + 1) * w + b + 1] = greater[a * w + b + 1] + row_gt;
                less[(a + 1) * w + b + 1] = less[a * w + b + 1] + row_lt;
            }
        }
        Ok(Self { t, greater, less })
    }

    /// Number of source tokens.
    pub fn len(&self) -> usize {
        self.t.len()
    }

    /// True for an empty sentence.
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Representative target position of each source token.
    pub fn positions(&self) -> &[f64] {
        &self.t
    }

    fn block(table: &[u32], w: usize, i: usize, k: usize, j: usize) -> u64 {
        let at = |x: usize, y: usize| u64::from(table[x * w + y]);
        (at(k, j) + at(i, k)) - (at(i, j) + at(k, k))
    }

    /// Cost of a straight merge of `[i, k)` and `[k, j)`: pairs with the
    /// left token's key above the right token's.
    pub fn cost_straight(&self, i: usize, k: usize, j: usize) -> u64 {
        Self::block(&self.greater, self.t.len() + 1, i, k, j)
    }

    /// Cost of an inverted merge of `[i, k)` and `[k, j)`: pairs with the
    /// left token's key below the right token's.
    pub fn cost_inverted(&self, i: usize, k: usize, j: usize) -> u64 {
        Self::block(&self.less, self.t.len() + 1, i, k, j)
    }
}

/// [`representative_positions_with`] using the mean rule.
pub fn representative_positions(a: &AlignmentSet) -> Result<PairPreference> {
    representative_positions_with(a, Aggregation::Mean)
}

/// Target key for each source token from its sure links.
///
/// Unaligned tokens copy the key of the nearest aligned token to the left,
/// else to the right, else get 0.
pub fn representative_positions_with(
    a: &AlignmentSet,
    rule: Aggregation,
) -> Result<PairPreference> {
    let n = a.n_src();
    let mut t: Vec<Option<f64>> = (0..n)
        .map(|s| {
            let targets = a.sure_targets(s);
            if targets.is_empty() {
                return None;
            }
            Some(match rule {
                Aggregation::Mean => {
                    targets.iter().map(|&x| x as f64).sum::<f64>() / targets.len() as f64
                }
                Aggregation::Min => targets[0] as f64,
                Aggregation::Max => targets[targets.len() - 1] as f64,
            })
        })
        .collect();
    let mut last = None;
    for v in t.iter_mut() {
        match v {
            Some(x) => last = Some(*x),
            None => *v = last,
        }
    }
    let mut next = None;
    for v in t.iter_mut().rev() {
        match v {
            Some(x) => next = Some(*x),
            None => *v = next,
        }
    }
    PairPreference::from_positions(t.into_iter().map(|v| v.unwrap_or(0.0)).collect())
}
