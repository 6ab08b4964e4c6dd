use alloc::format;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use rand::Rng as _;

use crate::btg::{sample_btg_permutation, AlignmentSet, Permutation};
use crate::rng::{derive_indexed, rng_from_seed};
use crate::{Error, Result};

/// One copy-translation example: the target is the source reordered by a
/// BTG permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticPair {
    /// Source tokens.
    pub src: Vec<usize>,
    /// Target tokens, `src` in the order of `perm`.
    pub tgt: Vec<usize>,
    /// Gold reordering; `perm.positions()[i]` is the target slot of source
    /// token `i`.
    pub perm: Permutation,
    /// Gold alignment, sure links `(i, slot of i)`.
    pub alignment: AlignmentSet,
    /// Seed this pair was drawn from.
    pub seed: u64,
}

impl SyntheticPair {
    /// Builds the pair for given source tokens and reordering.
    pub fn new(src: Vec<usize>, perm: Permutation, seed: u64) -> Result<Self> {
        let tgt = perm.apply(&src)?;
        let n = src.len();
        let alignment = AlignmentSet::from_sure(n, n, perm.positions().iter().copied().enumerate())?;
        Ok(Self {
            src,
            tgt,
            perm,
            alignment,
            seed,
        })
    }

    /// Sentence length.
    pub fn len(&self) -> usize {
        self.src.len()
    }

    /// Whether the pair is empty (never true for generated pairs).
    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Draws `n_pairs` examples. Lengths are uniform over `lengths`, tokens
/// uniform over `0..vocab`, reorderings from random BTG trees whose nodes
/// invert with probability `p_invert`. Pair `i` depends only on `seed` and
/// `i`.
pub fn gen_dataset(
    n_pairs: usize,
    lengths: RangeInclusive<usize>,
    vocab: usize,
    p_invert: f64,
    seed: u64,
) -> Result<Vec<SyntheticPair>> {
    if vocab < 2 {
        return Err(Error::Config(format!("vocabulary must have at least 2 tokens, got {vocab}")));
    }
    if *lengths.start() < 2 || lengths.start() > lengths.end() {
        return Err(Error::Config(format!(
            "length range {}..={} must be non-empty and start at 2 or more",
            lengths.start(),
            lengths.end()
        )));
    }
    (0..n_pairs)
        .map(|i| {
            let pair_seed = derive_indexed(seed, "pair", i as u64);
            let mut rng = rng_from_seed(pair_seed);
            let len = rng.gen_range(lengths.clone());
            let src = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
            let (_, perm) = sample_btg_permutation(len, p_invert, derive_indexed(pair_seed, "tree", 0))?;
            SyntheticPair::new(src, perm, pair_seed)
        })
        .collect()
}
