//! End-to-end solver behavior on the catalog maps, at reduced grid sizes.

use std::f64::consts::PI;

use lenstrans::dynamics::{build_lift, factorize, HamiltonianTerm, HomogeneousMap, IsotopyStep};
use lenstrans::genfun::GFProblem;
use lenstrans::geometry::{lens_apply, ComplexVector, LensSetting};
use lenstrans::solve::{
    count_time_shifts, crosscheck, direct_scan, genfun_scan, verdict, GenfunScanSettings, ScanSettings, Status,
    FAMILY_SEPARATION,
};
use num_complex::Complex64;

fn setting() -> LensSetting {
    LensSetting::uniform(2, 3).unwrap()
}

fn diagonal() -> Vec<IsotopyStep> {
    vec![IsotopyStep::new(HamiltonianTerm::diagonal(vec![0.15, 0.35]), 1.0)]
}

/// Diagonal rotation plus two perturbations that each break one Reeb circle.
fn broken_circles() -> HomogeneousMap {
    let mut steps = diagonal();
    steps.push(IsotopyStep::new(
        HamiltonianTerm::resonant(0.02, Complex64::new(1.0, 0.0), vec![3, 0], vec![0, 0]),
        1.0,
    ));
    steps.push(IsotopyStep::new(
        HamiltonianTerm::resonant(0.02, Complex64::new(0.0, 1.0), vec![0, 3], vec![0, 0]),
        1.0,
    ));
    build_lift(&setting(), &steps).unwrap()
}

fn small_grid(points: usize, taus: usize) -> ScanSettings {
    let mut s = ScanSettings::for_dimension(2);
    s.sphere_points = points;
    s.tau_samples = taus;
    s
}

fn residual(map: &HomogeneousMap, p: &ComplexVector, tau: f64) -> f64 {
    (&map.apply(p).unwrap() - &p.rotate(2.0 * PI * tau)).norm()
}

#[test]
fn diagonal_records_lie_on_the_coordinate_circles() {
    let map = build_lift(&setting(), &diagonal()).unwrap();
    let out = direct_scan(&map, &small_grid(16, 16));
    assert!(!out.records.is_empty());
    for r in &out.records {
        assert!(r.residual <= 1e-8);
        assert!((r.p.norm() - 1.0).abs() <= 1e-12);
        // Each hit is an eigenvector: all weight in one coordinate.
        let w0 = r.p.entry(0).norm();
        let w1 = r.p.entry(1).norm();
        assert!(w0.min(w1) <= 1e-6, "{:?}", r.p);
        let expected = if w0 > w1 { 0.15 } else { 0.35 };
        assert!((r.tau - expected).abs() <= 1e-8);
    }
    let spectrum = count_time_shifts(&out.records, 1e-5);
    let v = verdict(&spectrum, &out.records, map.setting());
    assert_eq!(v.clusters, 2);
    assert_eq!(v.status, Status::Attention);
    assert!(v.non_isolated && !v.degenerate);
    assert!(v.shapes.iter().all(|s| s.span_dim == 1));
}

#[test]
fn identity_is_degenerate() {
    let map = HomogeneousMap::identity(setting());
    let out = direct_scan(&map, &small_grid(16, 4));
    let spectrum = count_time_shifts(&out.records, 1e-5);
    assert_eq!(spectrum.len(), 1);
    assert!(spectrum.clusters[0].center.min(1.0 - spectrum.clusters[0].center) <= 1e-8);
    let v = verdict(&spectrum, &out.records, map.setting());
    assert!(v.degenerate);
    assert_eq!(v.shapes[0].span_dim, 2);
}

#[test]
fn broken_circles_give_exactly_four_isolated_shifts() {
    let map = broken_circles();
    let out = direct_scan(&map, &small_grid(16, 16));
    let spectrum = count_time_shifts(&out.records, 1e-5);
    let v = verdict(&spectrum, &out.records, map.setting());
    assert_eq!(v.clusters, 4, "{:?}", spectrum.centers());
    assert_eq!(v.status, Status::Pass);
    assert!(!v.non_isolated);
    // Shifts sit ε/π on either side of the unperturbed ones.
    let offset = 0.02 / PI;
    let expected = [0.15 - offset, 0.15 + offset, 0.35 - offset, 0.35 + offset];
    for (c, e) in spectrum.centers().iter().zip(expected) {
        assert!((c - e).abs() <= 5e-4, "{c} vs {e}");
    }
    for r in &out.records {
        assert!(residual(&map, &r.p, r.tau) <= 1e-8);
    }
}

#[test]
fn lens_images_of_records_are_translated_points() {
    let map = broken_circles();
    let out = direct_scan(&map, &small_grid(8, 8));
    assert!(!out.records.is_empty());
    for r in &out.records {
        for g in 1..3 {
            let q = lens_apply(map.setting(), &r.p, g);
            assert!(residual(&map, &q, r.tau) <= 1e-8);
        }
        // Reeb translates are not: the circles are broken.
        let q = r.p.rotate(0.5);
        assert!(residual(&map, &q, r.tau) > FAMILY_SEPARATION);
    }
}

#[test]
fn scans_do_not_depend_on_the_thread_count() {
    let map = build_lift(&setting(), &diagonal()).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| direct_scan(&map, &small_grid(12, 8)))
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.records, b.records);
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn both_solvers_agree_on_the_diagonal_map() {
    let map = build_lift(&setting(), &diagonal()).unwrap();
    let direct = direct_scan(&map, &small_grid(16, 16));
    let problem = GFProblem::new(factorize(&map, 0.1).unwrap()).unwrap();
    let mut g = GenfunScanSettings::for_dimension(2);
    g.sphere_points = 8;
    g.t_samples = 4;
    let out = genfun_scan(&problem, &g).unwrap();
    assert!(!out.hits.is_empty());
    for h in &out.hits {
        assert!(h.value.abs() <= 1e-9);
        assert!(h.closure_defect <= 1e-7);
        assert!(h.closure_defect <= h.bound_constant * h.grad_norm + 1e-12);
    }
    let cc = crosscheck(map.setting(), &direct.records, &out.records(), 1e-6);
    assert!(cc.agrees(), "{cc:?}");
    assert!(cc.max_discrepancy <= 1e-6);
}
