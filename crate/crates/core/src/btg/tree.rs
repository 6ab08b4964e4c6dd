use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{PairPreference, Permutation};
use crate::{Error, Result};

/// Orientation of an internal BTG node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// `[A B]`: children keep their order.
    Straight,
    /// `<A B>`: children swap.
    Inverted,
}

impl Orientation {
    /// The other orientation.
    pub fn flipped(self) -> Self {
        match self {
            Self::Straight => Self::Inverted,
            Self::Inverted => Self::Straight,
        }
    }
}

/// Binary BTG tree over a contiguous source span.
///
/// Constructors only build trees whose internal spans are the
/// concatenation of their children's spans.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BtgTree {
    /// A single source token.
    Leaf(usize),
    /// A merge of two adjacent spans.
    Node {
        /// Straight or inverted.
        orientation: Orientation,
        /// Covered source span `[lo, hi)`.
        span: (usize, usize),
        /// Subtree over `[lo, mid)`.
        left: Box<BtgTree>,
        /// Subtree over `[mid, hi)`.
        right: Box<BtgTree>,
    },
}

impl BtgTree {
    /// Leaf for source token `index`.
    pub fn leaf(index: usize) -> Self {
        Self::Leaf(index)
    }

    /// Merges two adjacent subtrees.
    pub fn node(orientation: Orientation, left: BtgTree, right: BtgTree) -> Result<Self> {
        let (llo, lhi) = left.span();
        let (rlo, rhi) = right.span();
        if lhi != rlo {
            return Err(Error::Validation(format!(
                "spans [{llo}, {lhi}) and [{rlo}, {rhi}) are not adjacent"
            )));
        }
        Ok(Self::Node {
            orientation,
            span: (llo, rhi),
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    /// Shorthand for a straight node.
    pub fn straight(left: BtgTree, right: BtgTree) -> Result<Self> {
        Self::node(Orientation::Straight, left, right)
    }

    /// Shorthand for an inverted node.
    pub fn inverted(left: BtgTree, right: BtgTree) -> Result<Self> {
        Self::node(Orientation::Inverted, left, right)
    }

    /// Covered source span `[lo, hi)`.
    pub fn span(&self) -> (usize, usize) {
        match self {
            Self::Leaf(i) => (*i, *i + 1),
            Self::Node { span, .. } => *span,
        }
    }

    /// Number of leaves.
    pub fn len(&self) -> usize {
        let (lo, hi) = self.span();
        hi - lo
    }

    /// Always false: a tree has at least one leaf.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Internal node orientations in pre-order.
    pub fn orientations(&self) -> Vec<Orientation> {
        let mut out = Vec::new();
        self.visit_pre(&mut |t| {
            if let Self::Node { orientation, .. } = t {
                out.push(*orientation);
            }
        });
        out
    }

    fn visit_pre(&self, f: &mut impl FnMut(&BtgTree)) {
        f(self);
        if let Self::Node { left, right, .. } = self {
            left.visit_pre(f);
            right.visit_pre(f);
        }
    }

    /// Same shape with every orientation swapped.
    pub fn flipped(&self) -> Self {
        match self {
            Self::Leaf(i) => Self::Leaf(*i),
            Self::Node {
                orientation,
                span,
                left,
                right,
            } => Self::Node {
                orientation: orientation.flipped(),
                span: *span,
                left: Box::new(left.flipped()),
                right: Box::new(right.flipped()),
            },
        }
    }

    /// Total merge cost of this tree under `pref`.
    pub fn cost(&self, pref: &PairPreference) -> u64 {
        match self {
            Self::Leaf(_) => 0,
            Self::Node {
                orientation,
                span,
                left,
                right,
            } => {
                let mid = left.span().1;
                let here = match orientation {
                    Orientation::Straight => pref.cost_straight(span.0, mid, span.1),
                    Orientation::Inverted => pref.cost_inverted(span.0, mid, span.1),
                };
                here + left.cost(pref) + right.cost(pref)
            }
        }
    }

    /// Source indices in reordered (target-side) order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        self.emit(&mut out);
        out
    }

    fn emit(&self, out: &mut Vec<usize>) {
        match self {
            Self::Leaf(i) => out.push(*i),
            Self::Node {
                orientation: Orientation::Straight,
                left,
                right,
                ..
            } => {
                left.emit(out);
                right.emit(out);
            }
            Self::Node {
                orientation: Orientation::Inverted,
                left,
                right,
                ..
            } => {
                right.emit(out);
                left.emit(out);
            }
        }
    }

    /// Bracketed form: `[a b]` for straight nodes, `<a b>` for inverted
    /// ones, source indices at the leaves.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_bracketed(&mut out);
        out
    }

    fn write_bracketed(&self, out: &mut String) {
        match self {
            Self::Leaf(i) => out.push_str(&format!("{i}")),
            Self::Node {
                orientation,
                left,
                right,
                ..
            } => {
                let (open, close) = match orientation {
                    Orientation::Straight => ('[', ']'),
                    Orientation::Inverted => ('<', '>'),
                };
                out.push(open);
                left.write_bracketed(out);
                out.push(' ');
                right.write_bracketed(out);
                out.push(close);
            }
        }
    }
}

/// Permutation produced by reading the tree's leaves left-to-right under
/// straight nodes and right-to-left under inverted ones.
///
/// Indices are relative to the tree's span start, so a root over `[0, n)`
/// yields a permutation of `0..n`.
pub fn apply_tree(tree: &BtgTree) -> Permutation {
    let lo = tree.span().0;
    let order = tree.leaf_order().into_iter().map(|i| i - lo).collect();
    Permutation::from_order(order).expect("contiguous tree spans always form a bijection")
}
