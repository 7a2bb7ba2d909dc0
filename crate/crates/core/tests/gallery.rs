use approx::assert_relative_eq;
use lingrad_core::certificate::Tolerances;
use lingrad_core::gallery::{self, build_bad_f0, check_bad_grad, Expected, EPS_MAX};
use lingrad_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [(); 4].map(|_| rng.gen_range(-2.0..2.0))
}

#[test]
fn bad_norm_is_homogeneous_and_subadditive() {
    let f0 = build_bad_f0(EPS_MAX).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let x = random_matrix(&mut rng);
        let y = random_matrix(&mut rng);
        let t = rng.gen_range(0.1..10.0);
        let fx = f0.value(&x).unwrap();
        let fy = f0.value(&y).unwrap();
        let tx = x.map(|v| t * v);
        assert_relative_eq!(f0.value(&tx).unwrap(), t * fx, max_relative = 1e-10);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        assert!(f0.value(&sum).unwrap() <= fx + fy + 1e-10 * (fx + fy));
    }
}

#[test]
fn bad_norm_gradient_on_the_rank_one_cone() {
    let f0 = build_bad_f0(EPS_MAX).unwrap();
    for a in [-2.0, -0.5, 0.3, 1.0, 4.0] {
        for k in -4..=4 {
            let b = 0.45 * EPS_MAX * a * k as f64 / 4.0;
            let defect = check_bad_grad(&f0, a, b).unwrap();
            assert!(defect < 1e-10, "a={a} b={b}: {defect:e}");
        }
    }
    assert!(matches!(
        check_bad_grad(&f0, 1.0, EPS_MAX),
        Err(Error::Domain(_))
    ));
}

#[test]
fn squared_dual_norm_is_uniformly_convex() {
    for eps in [EPS_MAX, EPS_MAX / 2.0, EPS_MAX / 8.0] {
        let m = build_bad_f0(eps).unwrap().convexity_margin(2000);
        assert!(m > 0.0, "eps={eps}: margin {m}");
    }
}

#[test]
fn eps_outside_the_calibrated_range_is_rejected() {
    for eps in [0.0, -1e-3, 2.0 * EPS_MAX, f64::NAN] {
        assert!(build_bad_f0(eps).is_err(), "eps={eps}");
    }
}

#[test]
fn every_reference_pair_certifies() {
    for name in gallery::CASE_NAMES {
        let case = gallery::by_name(name).unwrap();
        if case.pair.is_none() {
            assert!(matches!(
                case.verify_reference(&Tolerances::uniform(1e-8)),
                Err(Error::Unsupported(_))
            ));
            continue;
        }
        let rep = case.verify_reference(&Tolerances::uniform(1e-8)).unwrap();
        if let Expected {
            certificate_pass: Some(pass),
            ..
        } = case.expected
        {
            assert_eq!(rep.overall_pass, pass, "{name}: {:?}", rep.failures());
        }
    }
}

#[test]
fn reference_energies_match_closed_forms() {
    let pi = std::f64::consts::PI;
    let e = |name: &str| gallery::by_name(name).unwrap().expected.energy.unwrap();
    assert_relative_eq!(e("annulus_least_gradient"), 2.0 * pi, max_relative = 1e-14);
    assert_relative_eq!(
        e("rof_annulus"),
        16.0 * pi / 9.0 * (2f64.ln() - 0.625) + 4.0 * pi / 3.0,
        max_relative = 1e-14
    );
    assert_relative_eq!(e("rof_ball"), 24.0 * pi, max_relative = 1e-14);
}
