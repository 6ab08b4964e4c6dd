use alloc::vec;

use super::{apply_tree, BtgTree, Orientation, PairPreference, Permutation};
use crate::{Error, Result};

/// Output of [`btg_oracle_reorder`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reordering {
    /// Minimum-discordance BTG tree.
    pub tree: BtgTree,
    /// Reordering induced by the tree.
    pub permutation: Permutation,
    /// Number of token pairs left out of target order.
    pub cost: u64,
}

#[derive(Clone, Copy)]
struct Choice {
    split: usize,
    orientation: Orientation,
}

/// Finds a BTG tree minimizing pairwise discordance with the target keys.
///
/// CKY over spans `[i, j)`: a span's cost is the best over split points `k`
/// and orientations of `best[i][k] + best[k][j] + merge cost`, with merge
/// costs read in O(1) from the preference tables (O(n³) overall). Among
/// equal-cost options straight wins over inverted, then the leftmost split.
pub fn btg_oracle_reorder(pref: &PairPreference) -> Result<Reordering> {
    let n = pref.len();
    if n == 0 {
        return Err(Error::Config("cannot reorder an empty sentence".into()));
    }
    let w = n + 1;
    let mut best = vec![0u64; w * w];
    let mut choice = vec![
        Choice {
            split: 0,
            orientation: Orientation::Straight
        };
        w * w
    ];
    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut top = u64::MAX;
            let mut pick = Choice {
                split: i + 1,
                orientation: Orientation::Straight,
            };
            for orientation in [Orientation::Straight, Orientation::Inverted] {
                for k in i + 1..j {
                    let merge = match orientation {
                        Orientation::Straight => pref.cost_straight(i, k, j),
                        Orientation::Inverted => pref.cost_inverted(i, k, j),
                    };
                    let c = best[i * w + k] + best[k * w + j] + merge;
                    if c < top {
                        top = c;
                        pick = Choice { split: k, orientation };
                    }
                }
            }
            best[i * w + j] = top;
            choice[i * w + j] = pick;
        }
    }
    let tree = build(&choice, w, 0, n)?;
    let permutation = apply_tree(&tree);
    Ok(Reordering {
        tree,
        permutation,
        cost: best[n],
    })
}

fn build(choice: &[Choice], w: usize, i: usize, j: usize) -> Result<BtgTree> {
    if j - i == 1 {
        return Ok(BtgTree::leaf(i));
    }
    let c = choice[i * w + j];
    let left = build(choice, w, i, c.split)?;
    let right = build(choice, w, c.split, j)?;
    BtgTree::node(c.orientation, left, right)
}
