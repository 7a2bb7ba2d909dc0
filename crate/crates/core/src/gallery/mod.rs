//! Ready-to-run explicit examples and counterexamples with closed-form
//! reference fields and expected outcomes.

pub mod bad_f0;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use bad_f0::{
    bad_f0_integrand, build_bad_f0, check_bad_grad, empirical_eps_max, BadF0, EPS_MAX,
};

use crate::certificate::{
    evaluate, AnalyticPair, CertificateKind, CertificateReport, ContinuumProblem, SampleSet,
    ScalarFn, Tolerances, VectorFn, DEFAULT_SEED,
};
use crate::convex::{make_tv, make_weighted_tv, Integrand};
use crate::energy::{Field, ProblemSpec};
use crate::error::{Error, Result};
use crate::geometry::{build_domain, QuadratureNode, Shape};
use crate::linalg::norm;

/// Interior and boundary sample counts of the analytic certificates.
pub const ANALYTIC_SAMPLES: usize = 10_000;

/// Outcome a case is expected to show.
#[derive(Clone, Debug, PartialEq)]
pub struct Expected {
    /// Whether minimizers attain the boundary datum.
    pub attains_trace: Option<bool>,
    /// Minimal relaxed energy.
    pub energy: Option<f64>,
    /// Where `energy` comes from.
    pub energy_source: &'static str,
    /// Whether the reference pair passes its certificate.
    pub certificate_pass: Option<bool>,
}

/// How analytic samples are placed.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Sampling {
    Uniform,
    /// Half the samples in the strip `|x₂| < half_width`, where the
    /// reference fields live.
    Strip {
        half_width: f64,
    },
}

#[derive(Clone)]
pub struct GalleryCase {
    pub name: &'static str,
    pub summary: &'static str,
    pub problem: ContinuumProblem,
    pub reference_u: Option<VectorFn>,
    pub reference_z: Option<VectorFn>,
    /// Closed-form certificate data, when `u` has no jump part.
    pub pair: Option<AnalyticPair>,
    pub kind: CertificateKind,
    pub expected: Expected,
    pub default_nx: usize,
    sampling: Sampling,
}

impl std::fmt::Debug for GalleryCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GalleryCase")
            .field("name", &self.name)
            .field("problem", &self.problem)
            .field("kind", &self.kind)
            .field("expected", &self.expected)
            .finish_non_exhaustive()
    }
}

impl GalleryCase {
    /// Grid problem at resolution `nx`.
    pub fn spec(&self, nx: usize) -> Result<ProblemSpec> {
        let p = &self.problem;
        let domain = build_domain(p.shape.clone(), nx)?;
        ProblemSpec::from_fns(
            p.integrand.clone(),
            domain,
            |x| (p.u0)(x),
            |x| (p.g)(x),
            |x| (p.hbar)(x),
            |x| (p.lambda)(x),
        )
    }

    /// Reference `u` sampled at the cell centers of `spec`.
    pub fn reference_field(&self, spec: &ProblemSpec) -> Option<Result<Field>> {
        let u = self.reference_u.as_ref()?;
        Some(Field::from_fn(&spec.domain, spec.n(), |x| u(x)))
    }

    /// Analytic sample set of the reference pair.
    pub fn samples(&self, n_interior: usize, n_boundary: usize) -> Result<SampleSet> {
        let pair = self.pair.as_ref().ok_or_else(|| {
            Error::Unsupported(format!("case {} has no closed-form certificate", self.name))
        })?;
        match self.sampling {
            Sampling::Uniform => {
                SampleSet::from_analytic(&self.problem, pair, n_interior, n_boundary, DEFAULT_SEED)
            }
            Sampling::Strip { half_width } => {
                let (points, nodes) = strip_samples(half_width, n_interior, n_boundary);
                SampleSet::from_points(&self.problem, pair, points, nodes)
            }
        }
    }

    /// Certificate of the reference pair at `ANALYTIC_SAMPLES` points.
    pub fn verify_reference(&self, tol: &Tolerances) -> Result<CertificateReport> {
        let samples = self.samples(ANALYTIC_SAMPLES, ANALYTIC_SAMPLES)?;
        evaluate(&self.problem.integrand, &samples, self.kind, tol)
    }
}

/// Stratified samples of the unit disk: half in `|x₂| < s`, half outside;
/// boundary nodes likewise split between the arcs inside and outside the
/// strip.
fn strip_samples(
    s: f64,
    n_interior: usize,
    n_boundary: usize,
) -> (Vec<(Vec<f64>, f64)>, Vec<QuadratureNode>) {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let strip_area = 2.0 * (s * (1.0 - s * s).sqrt() + s.asin());
    let n_in = n_interior / 2;
    let n_out = n_interior - n_in;
    let mut points = Vec::with_capacity(n_interior);
    while points.len() < n_in {
        let p = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-s..s)];
        if norm(&p) < 1.0 {
            points.push((p, strip_area / n_in as f64));
        }
    }
    while points.len() < n_interior {
        let p = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if norm(&p) < 1.0 && p[1].abs() >= s {
            points.push((p, (PI - strip_area) / n_out as f64));
        }
    }
    let alpha = s.asin();
    let arcs = [
        (-alpha, alpha),
        (PI - alpha, PI + alpha),
        (alpha, PI - alpha),
        (PI + alpha, 2.0 * PI - alpha),
    ];
    let per_arc = (n_boundary / 4).max(2);
    let mut nodes = Vec::with_capacity(4 * per_arc);
    for (t0, t1) in arcs {
        let w = (t1 - t0) / per_arc as f64;
        for i in 0..per_arc {
            let t = t0 + (i as f64 + 0.5) * w;
            let (sn, cs) = t.sin_cos();
            nodes.push(QuadratureNode {
                point: vec![cs, sn],
                normal: vec![cs, sn],
                weight: w,
            });
        }
    }
    (points, nodes)
}

fn vfn(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> VectorFn {
    Arc::new(f)
}

fn sfn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

fn constant(n: usize, v: f64) -> VectorFn {
    vfn(move |_| vec![v; n])
}

fn radius(x: &[f64]) -> f64 {
    norm(x)
}

/// `Ω = B₂∖B₁`, TV, `u₀ = 1` on the inner and `0` on the outer circle.
/// Minimizing sequences tend to `0`, which pays the full inner penalty.
pub fn annulus_least_gradient() -> Result<GalleryCase> {
    let problem = ContinuumProblem {
        integrand: make_tv(1, 2)?,
        shape: Shape::Annulus {
            r_in: 1.0,
            r_out: 2.0,
        },
        u0: vfn(|x| vec![if radius(x) < 1.5 { 1.0 } else { 0.0 }]),
        g: constant(1, 0.0),
        hbar: constant(1, 0.0),
        lambda: sfn(|_| 0.0),
    };
    // Divergence-free radial field with |z| = 1/|x| ≤ 1.
    let z = vfn(|x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        vec![-x[0] / r2, -x[1] / r2]
    });
    Ok(GalleryCase {
        name: "annulus_least_gradient",
        summary: "least gradient on B2\\B1 with u0 = 1 inside, 0 outside",
        problem,
        reference_u: Some(constant(1, 0.0)),
        reference_z: Some(z.clone()),
        pair: Some(AnalyticPair {
            u: constant(1, 0.0),
            grad_u: constant(2, 0.0),
            z,
            div_z: Some(constant(1, 0.0)),
        }),
        kind: CertificateKind::LeastGradient,
        expected: Expected {
            attains_trace: Some(false),
            energy: Some(2.0 * PI),
            energy_source: "boundary penalty of u = 0: length of the inner circle",
            certificate_pass: Some(true),
        },
        default_nx: 128,
        sampling: Sampling::Uniform,
    })
}

/// ROF on `B₁∖B_{1/2}` with `λ = 1`, `h̄ = u₀ = 4/(3|x|) − 4/3`; the
/// minimizer `u = 0` misses the datum on the inner circle.
pub fn rof_annulus_counterexample() -> Result<GalleryCase> {
    let datum = |x: &[f64]| 4.0 / (3.0 * radius(x)) - 4.0 / 3.0;
    let problem = ContinuumProblem {
        integrand: make_tv(1, 2)?,
        shape: Shape::Annulus {
            r_in: 0.5,
            r_out: 1.0,
        },
        u0: vfn(move |x| vec![datum(x)]),
        g: constant(1, 0.0),
        hbar: vfn(move |x| vec![datum(x)]),
        lambda: sfn(|_| 1.0),
    };
    let z = vfn(|x| {
        let r = radius(x);
        vec![
            2.0 / 3.0 * x[0] - 4.0 / 3.0 * x[0] / r,
            2.0 / 3.0 * x[1] - 4.0 / 3.0 * x[1] / r,
        ]
    });
    // ½∫h̄² + ∫_{|x|=1/2} |u₀|.
    let energy = 16.0 * PI / 9.0 * (2f64.ln() - 0.625) + 4.0 * PI / 3.0;
    Ok(GalleryCase {
        name: "rof_annulus",
        summary: "ROF on B1\\B_{1/2}, h = u0 = 4/(3r) - 4/3; u = 0 misses the inner datum",
        problem,
        reference_u: Some(constant(1, 0.0)),
        reference_z: Some(z.clone()),
        pair: Some(AnalyticPair {
            u: constant(1, 0.0),
            grad_u: constant(2, 0.0),
            z,
            div_z: Some(vfn(|x| vec![4.0 / 3.0 - 4.0 / (3.0 * radius(x))])),
        }),
        kind: CertificateKind::Scalar,
        expected: Expected {
            attains_trace: Some(false),
            energy: Some(energy),
            energy_source: "relaxed energy of u = 0",
            certificate_pass: Some(true),
        },
        default_nx: 128,
        sampling: Sampling::Uniform,
    })
}

/// ROF on the unit ball of `ℝ³` with `u₀ = 0`, `h̄ = (1+t)·2/|x|`, `λ = 1`;
/// the minimizer `u = 2t/|x|` does not vanish on the sphere.
pub fn rof_ball_counterexample(t: f64) -> Result<GalleryCase> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t must be positive, got {t}"
        )));
    }
    let dm1 = 2.0;
    let problem = ContinuumProblem {
        integrand: make_tv(1, 3)?,
        shape: Shape::Ball3 { r: 1.0 },
        u0: constant(1, 0.0),
        g: constant(1, 0.0),
        hbar: vfn(move |x| vec![(1.0 + t) * dm1 / radius(x)]),
        lambda: sfn(|_| 1.0),
    };
    let u = vfn(move |x| vec![t * dm1 / radius(x)]);
    let z = vfn(|x| {
        let r = radius(x);
        x.iter().map(|v| -v / r).collect()
    });
    // ∫|∇u| + ∫_{S²}|u| + ½∫(u − h̄)² = 8πt + 8πt + 8π.
    let energy = 16.0 * PI * t + 8.0 * PI;
    Ok(GalleryCase {
        name: "rof_ball",
        summary: "ROF on the unit ball in R^3, u0 = 0, h = (1+t) div(x/|x|); u = t div(x/|x|)",
        problem,
        reference_u: Some(u.clone()),
        reference_z: Some(z.clone()),
        pair: Some(AnalyticPair {
            u,
            grad_u: vfn(move |x| {
                let r = radius(x);
                x.iter().map(|v| -t * dm1 * v / (r * r * r)).collect()
            }),
            z,
            div_z: Some(vfn(move |x| vec![-dm1 / radius(x)])),
        }),
        kind: CertificateKind::Scalar,
        expected: Expected {
            attains_trace: Some(false),
            energy: Some(energy),
            energy_source: "relaxed energy of u = 2t/|x|",
            certificate_pass: Some(true),
        },
        default_nx: 0,
        sampling: Sampling::Uniform,
    })
}

/// Endpoint slopes within this fraction of `max a` count as zero.
const SLOPE_MARGIN: f64 = 1e-8;

/// A weight `a` on `[0, 1]` with its derivative.
#[derive(Clone)]
pub struct Weight1d {
    pub a: ScalarFn,
    pub a_prime: ScalarFn,
    pub label: String,
}

impl Weight1d {
    /// `a` with its derivative by fourth-order central differences.
    pub fn from_fn(label: impl Into<String>, a: ScalarFn) -> Self {
        let f = a.clone();
        let a_prime = sfn(move |x| {
            let s = 1e-3;
            let at = |t: f64| f(&[x[0] + t * s]);
            (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * s)
        });
        Self {
            a,
            a_prime,
            label: label.into(),
        }
    }

    /// `a(x) = 2 + (x − 1/2)²`.
    pub fn default_weight() -> Self {
        Self {
            a: sfn(|x| 2.0 + (x[0] - 0.5).powi(2)),
            a_prime: sfn(|x| 2.0 * (x[0] - 0.5)),
            label: "2 + (x - 1/2)^2".into(),
        }
    }

    /// `(min a, max a)` over `[0, 1]` after checking `a > 0`,
    /// `a′(0) < 0` and `a′(1) > 0`.
    pub fn admissible_range(&self) -> Result<(f64, f64)> {
        let samples = 2001;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..samples {
            let x = i as f64 / (samples - 1) as f64;
            let v = (self.a)(&[x]);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight {} is not positive at x = {x}: {v}",
                    self.label
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let (d0, d1) = ((self.a_prime)(&[0.0]), (self.a_prime)(&[1.0]));
        let margin = SLOPE_MARGIN * hi.max(1.0);
        if d0.is_nan() || d0 >= -margin {
            return Err(Error::InvalidParameter(format!(
                "weight {} needs a'(0) < 0 (curvature -a'(0) > 0 at 0), got a'(0) = {d0}",
                self.label
            )));
        }
        if d1.is_nan() || d1 <= margin {
            return Err(Error::InvalidParameter(format!(
                "weight {} needs a'(1) > 0 (curvature at 1), got a'(1) = {d1}",
                self.label
            )));
        }
        Ok((lo, hi))
    }
}

/// `Ω = (0,1)`, `f = a(x)|ξ|`, `g = a′`, `u₀(0) = −1`, `u₀(1) = 1`;
/// `u = 0` is a minimizer certified by `z = a`.
pub fn weighted_tv_1d(weight: Weight1d) -> Result<GalleryCase> {
    let (lo, hi) = weight.admissible_range()?;
    let integrand: Integrand = make_weighted_tv(weight.a.clone(), lo, hi, 1)?;
    let a = weight.a.clone();
    let ap = weight.a_prime.clone();
    let ap2 = ap.clone();
    let problem = ContinuumProblem {
        integrand,
        shape: Shape::Interval { a: 0.0, b: 1.0 },
        u0: vfn(|x| vec![if x[0] < 0.5 { -1.0 } else { 1.0 }]),
        g: vfn(move |x| vec![ap(x)]),
        hbar: constant(1, 0.0),
        lambda: sfn(|_| 0.0),
    };
    let z = vfn(move |x| vec![a(x)]);
    let energy = (weight.a)(&[0.0]) + (weight.a)(&[1.0]);
    Ok(GalleryCase {
        name: "weighted_tv_1d",
        summary: "f = a(x)|u'| on (0,1), g = a', u0(0) = -1, u0(1) = 1; u = 0 with z = a",
        problem,
        reference_u: Some(constant(1, 0.0)),
        reference_z: Some(z.clone()),
        pair: Some(AnalyticPair {
            u: constant(1, 0.0),
            grad_u: constant(1, 0.0),
            z,
            div_z: Some(vfn(move |x| vec![ap2(x)])),
        }),
        kind: CertificateKind::Scalar,
        expected: Expected {
            attains_trace: Some(false),
            energy: Some(energy),
            energy_source: "boundary penalty of u = 0: a(0) + a(1)",
            certificate_pass: Some(true),
        },
        default_nx: 64,
        sampling: Sampling::Uniform,
    })
}

/// `(1 − s²)³` on `|s| < 1`.
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let b = 1.0 - s * s;
        b * b * b
    }
}

/// The data bump `η` (support `|s| < ε/8`) and the dual cut-off `η̄`
/// (`1` on `|s| ≤ ε/8`, support `|s| < ε/4`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct T3Bumps {
    pub eta_width: f64,
}

impl T3Bumps {
    pub fn for_eps(eps: f64) -> Self {
        Self {
            eta_width: eps / 8.0,
        }
    }

    pub fn eta(&self, s: f64) -> f64 {
        bump(s / self.eta_width)
    }

    pub fn eta_bar(&self, s: f64) -> f64 {
        let w = self.eta_width;
        if s.abs() <= w {
            1.0
        } else {
            bump((s.abs() - w) / w)
        }
    }
}

/// `𝔤(x₂) = x₁ (x⊗e₁) / f₀(x⊗x)` at the boundary point `x = (√(1−x₂²), x₂)`.
pub fn t3_g(f0: &BadF0, x2: f64) -> Result<[f64; 4]> {
    let x1 = (1.0 - x2 * x2).sqrt();
    let xx = [x1 * x1, x1 * x2, x2 * x1, x2 * x2];
    let v = f0.value(&xx)?;
    Ok([x1 * x1 / v, 0.0, x1 * x2 / v, 0.0])
}

/// `Ω = B₁ ⊂ ℝ²`, `n = 2`, `f = f₀`, `u₀ = 𝟙_{x₁>0} η(x₂) x`; `u = 0` is a
/// minimizer certified by `z = η̄(x₂)𝔤(x₂)` although `u₀ ≠ 0`.
pub fn t3_counterexample(f0: &BadF0) -> Result<GalleryCase> {
    let bumps = T3Bumps::for_eps(f0.eps);
    if 2.0 * bumps.eta_width >= f0.eps / 4.0 + 1e-15 {
        return Err(Error::InvalidParameter("bump wider than eps/4".into()));
    }
    let integrand = bad_f0_integrand(f0)?;
    let problem = ContinuumProblem {
        integrand,
        shape: Shape::Disk { r: 1.0 },
        u0: vfn(move |x| {
            let s = if x[0] > 0.0 { bumps.eta(x[1]) } else { 0.0 };
            vec![s * x[0], s * x[1]]
        }),
        g: constant(2, 0.0),
        hbar: constant(2, 0.0),
        lambda: sfn(|_| 0.0),
    };
    let f0c = f0.clone();
    let z = vfn(move |x| {
        let cut = bumps.eta_bar(x[1]);
        if cut == 0.0 {
            return vec![0.0; 4];
        }
        match t3_g(&f0c, x[1]) {
            Ok(g) => g.iter().map(|v| cut * v).collect(),
            Err(_) => vec![f64::NAN; 4],
        }
    });
    Ok(GalleryCase {
        name: "t3_counterexample",
        summary: "vectorial norm f0 on B1, u0 = 1{x1>0} eta(x2) x; u = 0 is a minimizer",
        problem,
        reference_u: Some(constant(2, 0.0)),
        reference_z: Some(z.clone()),
        pair: Some(AnalyticPair {
            u: constant(2, 0.0),
            grad_u: constant(4, 0.0),
            z,
            div_z: None,
        }),
        kind: CertificateKind::Vector,
        expected: Expected {
            attains_trace: Some(false),
            energy: None,
            energy_source: "",
            certificate_pass: Some(true),
        },
        default_nx: 64,
        sampling: Sampling::Strip {
            half_width: f0.eps / 2.0,
        },
    })
}

/// `Ω = B₁`, TV, `u₀ = 𝟙_{x₂>0}`: positive mean curvature, so minimizers
/// attain the datum; the minimal energy is the chord length 2.
pub fn disk_bv_attainment() -> Result<GalleryCase> {
    let problem = ContinuumProblem {
        integrand: make_tv(1, 2)?,
        shape: Shape::Disk { r: 1.0 },
        u0: vfn(|x| vec![if x[1] > 0.0 { 1.0 } else { 0.0 }]),
        g: constant(1, 0.0),
        hbar: constant(1, 0.0),
        lambda: sfn(|_| 0.0),
    };
    Ok(GalleryCase {
        name: "disk_bv",
        summary: "least gradient on B1 with the half-circle indicator datum",
        problem,
        reference_u: Some(vfn(|x| vec![if x[1] > 0.0 { 1.0 } else { 0.0 }])),
        reference_z: Some(vfn(|_| vec![0.0, 1.0])),
        pair: None,
        kind: CertificateKind::LeastGradient,
        expected: Expected {
            attains_trace: Some(true),
            energy: Some(2.0),
            energy_source: "length of the chord {x2 = 0}",
            certificate_pass: Some(true),
        },
        default_nx: 128,
        sampling: Sampling::Uniform,
    })
}

/// Default parameter for `t3_counterexample`.
pub const DEFAULT_EPS: f64 = bad_f0::EPS_MAX;

/// Case names accepted by [`by_name`].
pub const CASE_NAMES: [&str; 6] = [
    "annulus_least_gradient",
    "rof_annulus",
    "rof_ball",
    "weighted_tv_1d",
    "t3_counterexample",
    "disk_bv",
];

/// A case with default parameters.
pub fn by_name(name: &str) -> Result<GalleryCase> {
    match name {
        "annulus_least_gradient" => annulus_least_gradient(),
        "rof_annulus" => rof_annulus_counterexample(),
        "rof_ball" => rof_ball_counterexample(1.0),
        "weighted_tv_1d" => weighted_tv_1d(Weight1d::default_weight()),
        "t3_counterexample" => t3_counterexample(&build_bad_f0(DEFAULT_EPS)?),
        "disk_bv" => disk_bv_attainment(),
        other => Err(Error::InvalidParameter(format!(
            "unknown gallery case '{other}'; known: {}",
            CASE_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datum_plug_ins() {
        let c = rof_annulus_counterexample().unwrap();
        assert!(((c.problem.u0)(&[0.5, 0.0])[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((c.problem.u0)(&[0.0, 1.0])[0].abs() < 1e-15);
        let b = rof_ball_counterexample(0.5).unwrap();
        let u = b.reference_u.as_ref().unwrap();
        assert!((u(&[1.0, 0.0, 0.0])[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight_admissibility() {
        let reject = |label: &str, a: fn(f64) -> f64| {
            let w = Weight1d::from_fn(label, Arc::new(move |x: &[f64]| a(x[0])));
            assert!(weighted_tv_1d(w).is_err(), "{label} should be rejected");
        };
        reject("1 + sin(pi x)/2", |x| 1.0 + (PI * x).sin() / 2.0);
        reject("2 - cos(pi x)", |x| 2.0 - (PI * x).cos());
        reject("3 + sin(pi (x - 1/2))", |x| 3.0 + (PI * (x - 0.5)).sin());
        assert!(weighted_tv_1d(Weight1d::default_weight()).is_ok());
    }

    #[test]
    fn unknown_case_is_rejected() {
        assert!(by_name("nope").is_err());
        for name in CASE_NAMES {
            assert_eq!(by_name(name).unwrap().name, name);
        }
    }

    #[test]
    fn t3_datum_vanishes_on_the_left() {
        let c = t3_counterexample(&build_bad_f0(DEFAULT_EPS).unwrap()).unwrap();
        assert_eq!((c.problem.u0)(&[-1.0, 0.0]), vec![0.0, 0.0]);
        let right = (c.problem.u0)(&[1.0, 0.0]);
        assert_eq!(right, vec![1.0, 0.0]);
    }

    #[test]
    fn t3_g_matches_closed_form() {
        // On the cone f₀(x⊗x) = x₁, so 𝔤 = x⊗e₁.
        let f0 = build_bad_f0(DEFAULT_EPS).unwrap();
        let x2 = 1e-3;
        let g = t3_g(&f0, x2).unwrap();
        let x1 = (1.0 - x2 * x2).sqrt();
        assert!((g[0] - x1).abs() < 1e-10 && (g[2] - x2).abs() < 1e-10);
    }
}
