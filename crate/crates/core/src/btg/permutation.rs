use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A bijection on `0..n`, stored in both directions.
///
/// `order()[k]` is the source index placed at reordered slot `k`;
/// `positions()[i]` is the slot of source token `i` (its `pos_XL`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation {
    order: Vec<usize>,
    slots: Vec<usize>,
}

impl Permutation {
    /// Identity on `0..n`.
    pub fn identity(n: usize) -> Self {
        let order: Vec<usize> = (0..n).collect();
        Self {
            slots: order.clone(),
            order,
        }
    }

    /// Builds from slot → source index.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let slots = invert(&order)?;
        Ok(Self { order, slots })
    }

    /// Builds from source index → slot (`pos_XL`).
    pub fn from_positions(positions: Vec<usize>) -> Result<Self> {
        let order = invert(&positions)?;
        Ok(Self {
            order,
            slots: positions,
        })
    }

    /// Slot → source index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Source index → slot.
    pub fn positions(&self) -> &[usize] {
        &self.slots
    }

    /// Length.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    /// True for the empty permutation.
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// True when every token keeps its slot.
    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(k, &i)| k == i)
    }

    /// Exchanges the slots of source tokens `a` and `b`.
    pub fn swap_tokens(&mut self, a: usize, b: usize) {
        let (sa, sb) = (self.slots[a], self.slots[b]);
        self.slots.swap(a, b);
        self.order[sa] = b;
        self.order[sb] = a;
    }

    /// Applies the reordering to a token sequence: output slot `k` holds
    /// `items[order[k]]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.len() {
            return Err(Error::Validation(format!(
                "sequence of length {} reordered by permutation of length {}",
                items.len(),
                self.len()
            )));
        }
        Ok(self.order.iter().map(|&i| items[i].clone()).collect())
    }

    /// Number of pairs emitted in the opposite order of the key `t`
    /// (`t[earlier] > t[later]`); ties cost nothing.
    pub fn discordance(&self, t: &[f64]) -> u64 {
        let mut count = 0;
        for (x, &a) in self.order.iter().enumerate() {
            for &b in &self.order[x + 1..] {
                if t[a] > t[b] {
                    count += 1;
                }
            }
        }
        count
    }
}

fn invert(map: &[usize]) -> Result<Vec<usize>> {
    let n = map.len();
    let mut inv = vec![usize::MAX; n];
    for (k, &i) in map.iter().enumerate() {
        if i >= n {
            return Err(Error::Validation(format!(
                "index {i} out of range for permutation of length {n}"
            )));
        }
        if inv[i] != usize::MAX {
            return Err(Error::Validation(format!("index {i} repeated in permutation")));
        }
        inv[i] = k;
    }
    Ok(inv)
}
