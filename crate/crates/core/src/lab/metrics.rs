use alloc::collections::BTreeMap;
use crate::btg::{AlignmentSet, Permutation};
use crate::numkit::Matrix;
use crate::xlsan::Model;
use crate::{Error, Result};

use super::SyntheticPair;

/// Alignment error rate with precision and recall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AerScore {
    /// `1 − (|A∩S| + |A∩P|) / (|A| + |S|)`.
    pub aer: f64,
    /// `|A∩P| / |A|`, or 1 when `A` is empty.
    pub precision: f64,
    /// `|A∩S| / |S|`.
    pub recall: f64,
}

/// Link counts behind an [`AerScore`]; summing them over sentences gives
/// corpus-level scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignmentCounts {
    /// `|A|`.
    pub hyp: usize,
    /// `|S|`.
    pub sure: usize,
    /// `|A∩S|`.
    pub hyp_sure: usize,
    /// `|A∩P|`.
    pub hyp_possible: usize,
}

impl AlignmentCounts {
    /// Counts for one hypothesis against one reference.
    pub fn of(hyp: &AlignmentSet, reference: &AlignmentSet) -> Self {
        let links = hyp.sure();
        Self {
            hyp: links.len(),
            sure: reference.sure().len(),
            hyp_sure: links.intersection(reference.sure()).count(),
            hyp_possible: links.intersection(reference.possible()).count(),
        }
    }

    /// Scores; fails when the reference has no sure links.
    pub fn score(&self) -> Result<AerScore> {
        if self.sure == 0 {
            return Err(Error::Validation("reference has no sure links; recall is undefined".into()));
        }
        let precision = if self.hyp == 0 {
            1.0
        } else {
            self.hyp_possible as f64 / self.hyp as f64
        };
        Ok(AerScore {
            aer: 1.0 - (self.hyp_sure + self.hyp_possible) as f64 / (self.hyp + self.sure) as f64,
            precision,
            recall: self.hyp_sure as f64 / self.sure as f64,
        })
    }
}

impl core::ops::AddAssign for AlignmentCounts {
    fn add_assign(&mut self, o: Self) {
        self.hyp += o.hyp;
        self.sure += o.sure;
        self.hyp_sure += o.hyp_sure;
        self.hyp_possible += o.hyp_possible;
    }
}

/// AER, precision and recall of hypothesis links (the sure set of `hyp`)
/// against the sure/possible links of `reference`.
pub fn aer(hyp: &AlignmentSet, reference: &AlignmentSet) -> Result<AerScore> {
    AlignmentCounts::of(hyp, reference).score()
}

/// One link per target position: the argmax over sources of the
/// head-averaged weights (`T_tgt × T_src` each). Ties go to the smallest
/// source index.
pub fn alignment_from_weights(heads: &[Matrix]) -> Result<AlignmentSet> {
    let first = heads
        .first()
        .ok_or_else(|| Error::Validation("no attention heads to average".into()))?;
    let (n_tgt, n_src) = first.shape();
    let mut mean = Matrix::zeros(n_tgt, n_src);
    for h in heads {
        mean.add_assign(h)?;
    }
    let mean = mean.scale(1.0 / heads.len() as f64);
    let mut out = AlignmentSet::new(n_src, n_tgt);
    for t in 0..n_tgt {
        let row = mean.row(t);
        let mut best = 0;
        for (s, &w) in row.iter().enumerate() {
            if w > row[best] {
                best = s;
            }
        }
        out.insert_sure(best, t)?;
    }
    Ok(out)
}

/// Alignment read off the cross-attention of the penultimate decoder layer
/// (the only layer for one-layer decoders), teacher-forced on `tgt`.
pub fn extract_alignment(
    model: &Model,
    src: &[usize],
    tgt: &[usize],
    perm: Option<&Permutation>,
) -> Result<AlignmentSet> {
    let enc = model.encoder_forward(src, perm)?;
    let out = model.decoder_forward(tgt, &enc)?;
    let layer = out.cross_weights.len().saturating_sub(2);
    alignment_from_weights(&out.cross_weights[layer])
}

/// Best token accuracy attainable without any source order information.
///
/// Knowing only the bag of source tokens and the target prefix, every
/// ordering of the remaining tokens is equally likely (source tokens are
/// drawn i.i.d.), so the best guess is the most frequent remaining token.
/// Returns the mean over all target positions of `max count / remaining`.
pub fn position_free_ceiling(pairs: &[SyntheticPair]) -> f64 {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for p in pairs {
        let mut left: BTreeMap<usize, usize> = BTreeMap::new();
        for &t in &p.tgt {
            *left.entry(t).or_default() += 1;
        }
        for (k, &t) in p.tgt.iter().enumerate() {
            let most = left.values().copied().max().unwrap_or(0);
            total += most as f64 / (p.tgt.len() - k) as f64;
            tokens += 1;
            let c = left.get_mut(&t).expect("token still present");
            *c -= 1;
            if *c == 0 {
                left.remove(&t);
            }
        }
    }
    if tokens == 0 {
        0.0
    } else {
        total / tokens as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::gen_dataset;
    use crate::xlsan::{ModelConfig, Variant};
    use proptest::prelude::*;

    fn links(a: &AlignmentSet) -> Vec<(usize, usize)> {
        a.sure().iter().copied().collect()
    }

    fn set(n: usize, sure: &[(usize, usize)], possible: &[(usize, usize)]) -> AlignmentSet {
        let mut a = AlignmentSet::from_sure(n, n, sure.iter().copied()).unwrap();
        for &(s, t) in possible {
            a.insert_possible(s, t).unwrap();
        }
        a
    }

    #[test]
    fn worked_example() {
        let r = set(3, &[(0, 0), (1, 1)], &[(2, 2)]);
        let h = set(3, &[(0, 0), (2, 2)], &[]);
        let s = aer(&h, &r).unwrap();
        assert_eq!(s.aer, 0.25);
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
    }

    #[test]
    fn perfect_disjoint_and_empty() {
        let r = set(3, &[(0, 1), (1, 0), (2, 2)], &[]);
        let perfect = aer(&r, &r).unwrap();
        assert_eq!((perfect.aer, perfect.precision, perfect.recall), (0.0, 1.0, 1.0));
        let off = set(3, &[(0, 0), (1, 1)], &[]);
        let bad = aer(&off, &r).unwrap();
        assert_eq!((bad.aer, bad.precision, bad.recall), (1.0, 0.0, 0.0));
        let empty = aer(&AlignmentSet::new(3, 3), &r).unwrap();
        assert_eq!((empty.aer, empty.precision, empty.recall), (1.0, 1.0, 0.0));
        assert!(aer(&r, &AlignmentSet::new(3, 3)).is_err());
    }

    #[test]
    fn gold_alignments_score_zero() {
        for p in gen_dataset(30, 2..=10, 9, 0.5, 1).unwrap() {
            assert_eq!(aer(&p.alignment, &p.alignment).unwrap().aer, 0.0);
        }
    }

    #[test]
    fn uniform_attention_aligns_to_first_source() {
        let w = Matrix::filled(4, 3, 1.0 / 3.0);
        let a = alignment_from_weights(&[w.clone(), w]).unwrap();
        assert_eq!(links(&a), vec![(0, 0), (0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn one_hot_attention_is_read_back() {
        let mut w = Matrix::zeros(3, 3);
        for (t, s) in [(0, 2), (1, 0), (2, 1)] {
            w.set(t, s, 1.0);
        }
        let a = alignment_from_weights(&[w]).unwrap();
        assert_eq!(links(&a), vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn heads_are_averaged() {
        let a = Matrix::from_rows(&[[0.6, 0.4]]).unwrap();
        let b = Matrix::from_rows(&[[0.0, 1.0]]).unwrap();
        assert_eq!(links(&alignment_from_weights(&[a, b]).unwrap()), vec![(1, 0)]);
    }

    #[test]
    fn model_alignment_has_one_link_per_target() {
        let cfg = ModelConfig {
            d_model: 8,
            heads: 2,
            d_ff: 8,
            vocab: 6,
            variant: Variant::HeadXl,
            ..ModelConfig::default()
        };
        let m = Model::new(cfg).unwrap();
        for p in gen_dataset(10, 2..=7, 6, 0.5, 2).unwrap() {
            let a = extract_alignment(&m, &p.src, &p.tgt, Some(&p.perm)).unwrap();
            assert_eq!(a.sure().len(), p.len());
            let mut tgts: Vec<usize> = a.sure().iter().map(|l| l.1).collect();
            tgts.dedup();
            assert_eq!(tgts.len(), p.len());
        }
    }

    #[test]
    fn ceiling_on_hand_cases() {
        let p = |src: Vec<usize>| SyntheticPair::new(src.clone(), Permutation::identity(src.len()), 0).unwrap();
        // Distinct tokens: 1/3, 1/2, 1.
        let distinct = position_free_ceiling(&[p(vec![0, 1, 2])]);
        assert!((distinct - (1.0 / 3.0 + 0.5 + 1.0) / 3.0).abs() < 1e-15);
        // [a a b]: 2/3, then remaining {a, b} → 1/2, then 1.
        let rep = position_free_ceiling(&[p(vec![4, 4, 5])]);
        assert!((rep - (2.0 / 3.0 + 0.5 + 1.0) / 3.0).abs() < 1e-15);
        assert_eq!(position_free_ceiling(&[p(vec![1, 1])]), 1.0);
    }

    fn arb_case() -> impl Strategy<Value = (AlignmentSet, AlignmentSet, (usize, usize))> {
        (2usize..6).prop_flat_map(|n| {
            let link = (0..n, 0..n);
            (
                proptest::collection::btree_set(link.clone(), 1..8),
                proptest::collection::btree_set(link.clone(), 0..6),
                proptest::collection::btree_set(link.clone(), 0..6),
                link,
            )
                .prop_map(move |(s, extra, h, add)| {
                    let mut r = AlignmentSet::from_sure(n, n, s).unwrap();
                    for (a, b) in extra {
                        r.insert_possible(a, b).unwrap();
                    }
                    (AlignmentSet::from_sure(n, n, h).unwrap(), r, add)
                })
        })
    }

    proptest! {
        #[test]
        fn scores_stay_in_unit_interval((h, r, _) in arb_case()) {
            let s = aer(&h, &r).unwrap();
            for v in [s.aer, s.precision, s.recall] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn aer_is_monotone((h, r, link) in arb_case()) {
            let base = aer(&h, &r).unwrap().aer;
            let mut more = h.clone();
            more.insert_sure(link.0, link.1).unwrap();
            let after = aer(&more, &r).unwrap().aer;
            if r.sure().contains(&link) {
                prop_assert!(after <= base + 1e-15);
            } else if !r.possible().contains(&link) {
                prop_assert!(after >= base - 1e-15);
            }
        }
    }
}
