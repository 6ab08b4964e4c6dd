//! Bracketing transduction grammar (BTG) reordering.
//!
//! Word alignments are reduced to one representative target position per
//! source token ([`representative_positions`]). [`btg_oracle_reorder`] then
//! finds, by a CKY dynamic program over source spans, the binary tree of
//! straight/inverted merges whose induced source order has the fewest
//! pairwise inversions against those target positions. The tree's leaf
//! order is the cross-lingual position vector `pos_XL`.

mod alignment;
mod enumerate;
mod oracle;
mod permutation;
mod preference;
mod tree;

pub use alignment::{parse_pharaoh, parse_pharaoh_source_bounded, AlignmentSet};
pub use enumerate::{enumerate_btg_permutations, sample_btg_permutation, MAX_ENUMERATION_LEN};
pub use oracle::{btg_oracle_reorder, Reordering};
pub use permutation::Permutation;
pub use preference::{
    representative_positions, representative_positions_with, Aggregation, PairPreference,
    MAX_SENTENCE_LEN,
};
pub use tree::{apply_tree, BtgTree, Orientation};
