use approx::assert_relative_eq;
use lingrad_core::convex::make_tv;
use lingrad_core::energy::{relaxed_energy, ProblemSpec};
use lingrad_core::gallery;
use lingrad_core::geometry::{build_domain, Shape};
use lingrad_core::solver::{operator_norm_bound, solve, solve_from, SolverConfig};
use lingrad_core::Error;

fn disk(nx: usize, u0: impl Fn(&[f64]) -> f64, lambda: f64) -> ProblemSpec {
    let dom = build_domain(Shape::Disk { r: 1.0 }, nx).unwrap();
    ProblemSpec::from_fns(
        make_tv(1, 2).unwrap(),
        dom,
        |x| vec![u0(x)],
        |_| vec![0.0],
        |x| vec![x[0]],
        |_| lambda,
    )
    .unwrap()
}

#[test]
fn oversized_steps_never_report_convergence() {
    let spec = disk(32, |x| x[0] * x[1], 0.0);
    let l = operator_norm_bound(2, spec.domain.h());
    for (tau, sigma) in [(3.0, 3.0), (300.0, 0.03), (10.0, 10.0)] {
        let cfg = SolverConfig {
            tau: Some(tau / l),
            sigma: Some(sigma / l),
            enforce_step_bound: false,
            max_iters: 3000,
            ..SolverConfig::default()
        };
        match solve(&spec, &cfg) {
            Err(Error::Instability { .. }) => {}
            Ok(res) => assert!(!res.converged, "tau*L={tau}, sigma*L={sigma}"),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let spec = disk(32, |x| x[0].signum(), 0.5);
    let cfg = SolverConfig {
        max_iters: 400,
        ..SolverConfig::default()
    };
    let a = solve(&spec, &cfg).unwrap();
    let b = solve(&spec, &cfg).unwrap();
    assert_eq!(a.u, b.u);
    assert_eq!(a.z, b.z);
    assert_eq!(a.history, b.history);
}

#[test]
fn best_gap_decreases_along_the_run() {
    let spec = disk(48, |x| x[1].signum(), 0.0);
    let res = solve(
        &spec,
        &SolverConfig {
            gap_tol: 1e-6,
            max_iters: 50_000,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    assert!(res.converged);
    let gaps = res.gap_history();
    let quarter = gaps.len().div_ceil(4);
    let best: Vec<f64> = gaps
        .chunks(quarter)
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    assert!(best.windows(2).all(|w| w[1] <= w[0]), "{best:?}");
    assert!(res.gap.relative <= 1e-6);
}

#[test]
fn warm_start_from_a_solution_converges_to_the_same_energy() {
    let spec = disk(32, |x| x[0], 1.0);
    let cfg = SolverConfig {
        gap_tol: 1e-6,
        max_iters: 50_000,
        ..SolverConfig::default()
    };
    let cold = solve(&spec, &cfg).unwrap();
    let warm = solve_from(&spec, &cfg, Some(&cold.u)).unwrap();
    assert!(warm.converged);
    assert!(
        warm.iterations <= cold.iterations,
        "{} vs {}",
        warm.iterations,
        cold.iterations
    );
    assert_relative_eq!(
        relaxed_energy(&spec, &warm.u).unwrap(),
        relaxed_energy(&spec, &cold.u).unwrap(),
        max_relative = 1e-4
    );
}

#[test]
fn balanced_steps_keep_the_step_bound() {
    let cfg = SolverConfig::default();
    let l = operator_norm_bound(2, 0.05);
    for s in [1e-6, 0.25, 1.0, 7.0, 1e9] {
        let (tau, sigma) = cfg.balanced_steps(2, 0.05, s).unwrap();
        assert_relative_eq!(tau * sigma * l * l, 0.99 * 0.99, max_relative = 1e-12);
    }
    assert_eq!(
        cfg.balanced_steps(2, 0.05, 0.0).unwrap(),
        cfg.steps(2, 0.05).unwrap()
    );
    let fixed = SolverConfig {
        tau: Some(0.01),
        sigma: Some(0.02),
        ..cfg
    };
    assert_eq!(fixed.balanced_steps(2, 0.05, 4.0).unwrap(), (0.01, 0.02));
}

#[test]
fn rof_annulus_energy_approaches_the_closed_form() {
    let case = gallery::rof_annulus_counterexample().unwrap();
    let spec = case.spec(64).unwrap();
    let res = solve(
        &spec,
        &SolverConfig {
            gap_tol: 1e-6,
            max_iters: 50_000,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    assert!(res.converged);
    let exact = case.expected.energy.unwrap();
    let e = relaxed_energy(&spec, &res.u).unwrap();
    assert!((e - exact).abs() < 0.02 * exact, "{e} vs {exact}");
}
