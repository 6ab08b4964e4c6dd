use proptest::prelude::*;
use xlpe_core::btg::{sample_btg_permutation, Permutation};
use xlpe_core::numkit::Matrix;
use xlpe_core::posenc::{absolute_pe, fuse_inxl, inject_noise, noise_swap_count, xl_pe, FusionParams, FusionShape};

/// Direct evaluation of the sinusoid at one coordinate.
fn oracle(pos: f64, dim: usize, d: usize) -> f64 {
    let i = (dim / 2) as f64;
    let angle = pos / 10000f64.powf(2.0 * i / d as f64);
    if dim % 2 == 0 {
        angle.sin()
    } else {
        angle.cos()
    }
}

fn arb_perm() -> impl Strategy<Value = Permutation> {
    (1usize..40, 0.0f64..=1.0, any::<u64>()).prop_map(|(n, p, s)| sample_btg_permutation(n, p, s).unwrap().1)
}

#[test]
fn spot_values_match_direct_evaluation() {
    for &d in &[2, 4, 8, 64, 512] {
        let pe = absolute_pe(50, d).unwrap();
        for pos in [0, 1, 7, 49] {
            for dim in (0..d).step_by((d / 8).max(1)) {
                let got = pe.values().get(pos, dim);
                assert!((got - oracle(pos as f64, dim, d)).abs() <= 1e-12, "d={d} pos={pos} dim={dim}");
            }
        }
    }
}

proptest! {
    #[test]
    fn xl_of_identity_is_absolute(n in 1usize..64, half in 1usize..32) {
        let d = 2 * half;
        let a = absolute_pe(n, d).unwrap();
        let x = xl_pe(&Permutation::identity(n), d).unwrap();
        prop_assert!(a.values().bit_eq(x.values()));
    }

    #[test]
    fn row_norms_are_half_the_width(perm in arb_perm(), half in 1usize..64) {
        let d = 2 * half;
        let pe = xl_pe(&perm, d).unwrap();
        for r in 0..pe.len() {
            let sq: f64 = pe.values().row(r).iter().map(|v| v * v).sum();
            prop_assert!((sq - d as f64 / 2.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn xl_rows_are_absolute_rows_at_the_token_slot(perm in arb_perm()) {
        let a = absolute_pe(perm.len(), 16).unwrap();
        let x = xl_pe(&perm, 16).unwrap();
        for (i, &slot) in perm.positions().iter().enumerate() {
            prop_assert_eq!(x.values().row(i), a.values().row(slot));
        }
    }

    #[test]
    fn fused_entries_stay_inside_the_open_unit_interval(
        perm in arb_perm(),
        // |PE·U + PE·V| <= 16 here; f64 tanh rounds to exactly ±1 beyond about 19.
        u in prop::collection::vec(-1.0f64..1.0, 64),
        v in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let params = FusionParams {
            u: Matrix::new(8, 8, u).unwrap(),
            v: Matrix::new(8, 8, v).unwrap(),
        };
        prop_assert_eq!(params.shape(), FusionShape::Full);
        let a = absolute_pe(perm.len(), 8).unwrap();
        let x = xl_pe(&perm, 8).unwrap();
        let f = fuse_inxl(&a, &x, &params).unwrap();
        prop_assert!(f.values().data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn noise_touches_exactly_the_declared_slots(perm in arb_perm(), ratio in 0.0f64..=1.0, seed in any::<u64>()) {
        let noisy = inject_noise(&perm, ratio, seed).unwrap();
        let changed = perm.positions().iter().zip(noisy.positions()).filter(|(a, b)| a != b).count();
        prop_assert_eq!(changed, 2 * noise_swap_count(perm.len(), ratio));
        prop_assert_eq!(inject_noise(&perm, ratio, seed).unwrap(), noisy);
    }
}
