//! Randomized invariants: ring laws on general elements, monotonicity of the
//! category bound, additivity of index jumps, homogeneity and lens invariance
//! of `F_t`.

use std::sync::OnceLock;

use lenstrans::cohomology::{index_jump, ls_bound, IndexWindow, RingClass, RingElement};
use lenstrans::dynamics::{build_lift, factorize, HamiltonianTerm, IsotopyStep};
use lenstrans::genfun::{GFProblem, GeneratingChain};
use lenstrans::geometry::LensSetting;
use nalgebra::DVector;
use proptest::prelude::*;

fn element(p: u32, big_n: usize, coeffs: &[i64]) -> RingElement {
    RingClass::basis(p, big_n)
        .unwrap()
        .into_iter()
        .zip(coeffs)
        .fold(RingElement::zero(p, big_n).unwrap(), |acc, (u, &c)| {
            acc.add(&RingElement::from(u).scale(c)).unwrap()
        })
}

fn ring_case() -> impl Strategy<Value = (u32, usize, Vec<i64>, Vec<i64>, Vec<i64>)> {
    (prop::sample::select(vec![3u32, 5, 7]), 1usize..=8).prop_flat_map(|(p, big_n)| {
        let c = prop::collection::vec(-20i64..20, 2 * big_n);
        (Just(p), Just(big_n), c.clone(), c.clone(), c)
    })
}

fn diagonal_problem() -> &'static GFProblem {
    static PROBLEM: OnceLock<GFProblem> = OnceLock::new();
    PROBLEM.get_or_init(|| {
        let setting = LensSetting::uniform(2, 3).unwrap();
        let steps = [IsotopyStep::new(HamiltonianTerm::diagonal(vec![0.15, 0.35]), 1.0)];
        GFProblem::new(factorize(&build_lift(&setting, &steps).unwrap(), 0.1).unwrap()).unwrap()
    })
}

fn chain(problem: &GFProblem, entries: &[f64]) -> GeneratingChain {
    let flat = DVector::from_fn(problem.dim(), |i, _| entries[i % entries.len()] + 0.01 * i as f64);
    GeneratingChain::from_flat(problem.n(), &flat).unwrap()
}

/// Shifts of the diagonal map's eigenvalues: the index is undefined there.
fn away_from_discriminant(t: f64) -> bool {
    [0.15, 0.35]
        .iter()
        .all(|s| ((t - s).rem_euclid(1.0) - 0.5).abs() < 0.5 - 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws((p, big_n, a, b, c) in ring_case()) {
        let (x, y, z) = (element(p, big_n, &a), element(p, big_n, &b), element(p, big_n, &c));
        prop_assert_eq!(x.mul(&y.mul(&z).unwrap()).unwrap(), x.mul(&y).unwrap().mul(&z).unwrap());
        prop_assert_eq!(
            x.mul(&y.add(&z).unwrap()).unwrap(),
            x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap()
        );
        prop_assert!(x.bockstein().bockstein().is_zero());
        prop_assert_eq!(element(p, big_n, &a.iter().map(|v| v + p as i64).collect::<Vec<_>>()), x);
    }

    #[test]
    fn ls_bound_grows_with_the_window(a in 0usize..20, len in 0usize..20, extra in 0usize..6, p in prop::sample::select(vec![3u32, 5, 7])) {
        let big_n = 24;
        let narrow = ls_bound(&IndexWindow::new(a, a + len, p, big_n).unwrap());
        let wide = ls_bound(&IndexWindow::new(a, a + len + extra, p, big_n).unwrap());
        prop_assert!(narrow <= wide);
        prop_assert!(narrow <= len);
        // Shifting by an even amount keeps the parity, hence the bound.
        let shifted = ls_bound(&IndexWindow::new(a + 2, a + 2 + len, p, big_n).unwrap());
        prop_assert_eq!(narrow, shifted);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn index_jumps_add_up(t0 in -0.9f64..2.9, t1 in -0.9f64..2.9, t2 in -0.9f64..2.9) {
        prop_assume!([t0, t1, t2].into_iter().all(away_from_discriminant));
        let p = diagonal_problem();
        let j01 = index_jump(p, t0, t1).unwrap().jump;
        let j12 = index_jump(p, t1, t2).unwrap().jump;
        let j02 = index_jump(p, t0, t2).unwrap().jump;
        prop_assert_eq!(j01 + j12, j02);
        prop_assert_eq!(index_jump(p, t0, t0).unwrap().jump, 0);
    }

    #[test]
    fn generating_function_is_two_homogeneous_and_lens_invariant(
        entries in prop::collection::vec(-1.0f64..1.0, 8),
        s in 0.1f64..5.0,
        t in -0.5f64..1.5,
    ) {
        let p = diagonal_problem();
        let c = chain(p, &entries);
        let f = p.value(t, &c).unwrap();
        let fs = p.value(t, &c.scale(s)).unwrap();
        prop_assert!((fs - s * s * f).abs() <= 1e-9 * (1.0 + (s * s * f).abs()));
        let g = p.value(t, &c.lens_apply(p.setting(), 1)).unwrap();
        prop_assert!((g - f).abs() <= 1e-9 * (1.0 + f.abs()));
    }
}
