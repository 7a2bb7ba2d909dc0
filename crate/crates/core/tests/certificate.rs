use std::sync::Arc;

use approx::assert_relative_eq;
use lingrad_core::certificate::{
    verify_analytic, verify_least_gradient, verify_scalar, AnalyticPair, CertificateKind,
    Tolerances,
};
use lingrad_core::energy::{DualField, Field};
use lingrad_core::gallery;

/// ROF annulus reference pair with `u` shifted by `delta`.
fn shifted(delta: f64) -> (gallery::GalleryCase, AnalyticPair) {
    let case = gallery::rof_annulus_counterexample().unwrap();
    let base = case.pair.clone().unwrap();
    let u = base.u.clone();
    let pair = AnalyticPair {
        u: Arc::new(move |x| u(x).into_iter().map(|v| v + delta).collect()),
        ..base
    };
    (case, pair)
}

#[test]
fn divergence_residual_tracks_a_primal_shift() {
    let area = 0.75 * std::f64::consts::PI;
    for delta in [1e-2, 1e-3, 1e-5] {
        let (case, pair) = shifted(delta);
        let rep = verify_analytic(
            &case.problem,
            &pair,
            CertificateKind::Scalar,
            &Tolerances::default(),
            10_000,
            2000,
        )
        .unwrap();
        assert_relative_eq!(rep.r_div.l1, delta * area, max_relative = 1e-6);
    }
}

#[test]
fn shifts_above_the_tolerance_are_detected() {
    let tol = Tolerances::uniform(1e-6);
    let area = 0.75 * std::f64::consts::PI;
    let (case, pair) = shifted(4.0 * tol.div / area);
    let rep = verify_analytic(
        &case.problem,
        &pair,
        CertificateKind::Scalar,
        &tol,
        10_000,
        2000,
    )
    .unwrap();
    assert!(!rep.overall_pass);
    assert!(rep.failures().contains(&"r_div"));

    let (case, pair) = shifted(0.25 * tol.div / area);
    let rep = verify_analytic(
        &case.problem,
        &pair,
        CertificateKind::Scalar,
        &tol,
        10_000,
        2000,
    )
    .unwrap();
    assert!(!rep.failures().contains(&"r_div"), "{:?}", rep.failures());
}

#[test]
fn dual_range_condition_on_a_radial_grid_field() {
    let case = gallery::annulus_least_gradient().unwrap();
    let spec = case.spec(64).unwrap();
    let u = Field::zeros(&spec.domain, 1);
    let z = DualField::from_fn(&spec.domain, 1, |x| {
        let s = 0.97 / (x[0] * x[0] + x[1] * x[1]).sqrt();
        vec![-s * x[0], -s * x[1]]
    })
    .unwrap();
    let tol = Tolerances::uniform(1e-6);
    let rep = verify_least_gradient(&spec, &u, &z, &tol).unwrap();
    assert!(rep.r_range.l1 <= 1e-12, "{:?}", rep.r_range);
    assert!(rep.r_subdiff.l1 <= 1e-12);

    let mut z2 = z.clone();
    z2.cell_values_mut().iter_mut().for_each(|v| *v *= 2.0);
    let rep2 = verify_least_gradient(&spec, &u, &z2, &tol).unwrap();
    assert!(rep2.r_range.l1 > 0.1, "{}", rep2.r_range.l1);
    assert!(!rep2.overall_pass);
}

#[test]
fn constant_pair_passes_the_scalar_certificate() {
    let case = gallery::disk_bv_attainment().unwrap();
    let spec = case.spec(32).unwrap();
    let spec = spec.with_u0(vec![0.7; spec.u0.len()]).unwrap();
    let u = Field::from_scalar_fn(&spec.domain, |_| 0.7);
    let z = DualField::zeros(&spec.domain, 1);
    let rep = verify_scalar(&spec, &u, &z, &Tolerances::uniform(1e-12)).unwrap();
    assert!(rep.overall_pass, "{:?}", rep.failures());
}
