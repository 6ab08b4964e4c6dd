use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{apply_tree, BtgTree, Orientation, Permutation};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Largest `n` accepted by [`enumerate_btg_permutations`].
pub const MAX_ENUMERATION_LEN: usize = 8;

/// Every permutation of `0..n` that some BTG tree realizes (the separable
/// permutations: 1, 2, 6, 22, 90, … for n = 1, 2, 3, 4, 5, …).
pub fn enumerate_btg_permutations(n: usize) -> Result<BTreeSet<Permutation>> {
    if n == 0 {
        return Err(Error::Config("enumeration needs n >= 1".into()));
    }
    if n > MAX_ENUMERATION_LEN {
        return Err(Error::Capacity {
            what: "enumeration length",
            got: n,
            limit: MAX_ENUMERATION_LEN,
        });
    }
    // by_len[m] holds the realizable orders of a span of m tokens starting at 0.
    let mut by_len: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(), [vec![0]].into()];
    for m in 2..=n {
        let mut set = BTreeSet::new();
        for k in 1..m {
            for left in &by_len[k] {
                for right in &by_len[m - k] {
                    let shifted: Vec<usize> = right.iter().map(|&r| r + k).collect();
                    let mut straight = left.clone();
                    straight.extend_from_slice(&shifted);
                    set.insert(straight);
                    let mut inverted = shifted;
                    inverted.extend_from_slice(left);
                    set.insert(inverted);
                }
            }
        }
        by_len.push(set);
    }
    by_len[n]
        .iter()
        .map(|o| Permutation::from_order(o.clone()))
        .collect()
}

/// Random BTG tree over `n` leaves: shape uniform over all binary trees
/// (Rémy's algorithm), each internal node inverted with probability
/// `p_invert`. Deterministic in `seed`.
pub fn sample_btg_permutation(
    n: usize,
    p_invert: f64,
    seed: u64,
) -> Result<(BtgTree, Permutation)> {
    if n == 0 {
        return Err(Error::Config("cannot sample a tree with zero leaves".into()));
    }
    if !(0.0..=1.0).contains(&p_invert) {
        return Err(Error::Config(format!("p_invert must lie in [0, 1], got {p_invert}")));
    }
    let mut rng = rng_from_seed(seed);

    // Arena of nodes; children == None marks a leaf.
    let mut children: Vec<Option<(usize, usize)>> = vec![None];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut root = 0;
    for _ in 1..n {
        let target = rng.gen_range(0..children.len());
        let leaf_on_left = rng.gen_bool(0.5);
        let leaf = children.len();
        children.push(None);
        parent.push(None);
        let inner = children.len();
        children.push(Some(if leaf_on_left {
            (leaf, target)
        } else {
            (target, leaf)
        }));
        parent.push(parent[target]);
        match parent[target] {
            None => root = inner,
            Some(p) => {
                let (l, r) = children[p].expect("parent is internal");
                children[p] = Some(if l == target { (inner, r) } else { (l, inner) });
            }
        }
        parent[target] = Some(inner);
        parent[leaf] = Some(inner);
    }

    let mut next_leaf = 0;
    let tree = label(&children, root, &mut next_leaf, &mut || {
        if rng.gen::<f64>() < p_invert {
            Orientation::Inverted
        } else {
            Orientation::Straight
        }
    })?;
    let perm = apply_tree(&tree);
    Ok((tree, perm))
}

fn label(
    children: &[Option<(usize, usize)>],
    node: usize,
    next_leaf: &mut usize,
    orient: &mut impl FnMut() -> Orientation,
) -> Result<BtgTree> {
    match children[node] {
        None => {
            let t = BtgTree::leaf(*next_leaf);
            *next_leaf += 1;
            Ok(t)
        }
        Some((l, r)) => {
            let o = orient();
            let left = label(children, l, next_leaf, orient)?;
            let right = label(children, r, next_leaf, orient)?;
            BtgTree::node(o, left, right)
        }
    }
}
