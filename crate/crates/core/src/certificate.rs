//! Quantitative residuals of the subdifferential characterization of
//! minimizers, for grid fields and for closed-form candidate pairs.
//!
//! Conditions, with `Δ = div z − (λ(u − h̄) + g)`:
//!
//! * `r_div`: `Σ w |Δ|`.
//! * `r_subdiff`: `Σ w (f(x,∇u) + f*(x,z) − ⟨z,∇u⟩)` on cells with `|∇u| ≤ J`.
//! * `r_singular_surrogate`: `Σ w [f^∞(x,∇u/|∇u|)|∇u| − ⟨z,∇u⟩]₊` on cells
//!   with `|∇u| > J`. This is a surrogate: the singular part of `Du` has no
//!   exact grid counterpart.
//! * `r_range`: measure of the set where `f*(x,z)` is infinite or exceeds
//!   `10·C₁²`.
//! * `r_boundary`: `Σ_b w_b |⟨[z,ν], u₀ − u⟩ − f^∞(x,(u₀ − u)⊗ν)|`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::convex::{sign_set_distance, Integrand, MatrixArg};
use crate::energy::{discrete_divergence, discrete_gradient, DualField, Field, ProblemSpec};
use crate::error::{shape_err, Error, Result};
use crate::geometry::{QuadratureNode, Shape};
use crate::linalg::{dot, norm, pairwise_sum};

pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Seed of the analytic interior sampler.
pub const DEFAULT_SEED: u64 = 0x6c67_7264;

/// Characterization being checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    Scalar,
    Vector,
    /// `‖z‖∞ ≤ 1`, `div z = 0`, `⟨z,∇u⟩ = |∇u|`, `[z,ν] ∈ sgn(u₀ − u)`.
    LeastGradient,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::Scalar => "scalar",
            CertificateKind::Vector => "vector",
            CertificateKind::LeastGradient => "least_gradient",
        }
    }
}

impl std::fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CertificateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(CertificateKind::Scalar),
            "vector" => Ok(CertificateKind::Vector),
            "least_gradient" | "least-gradient" => Ok(CertificateKind::LeastGradient),
            other => Err(Error::InvalidParameter(format!(
                "unknown certificate kind '{other}'; expected scalar, vector or least_gradient"
            ))),
        }
    }
}

/// One aggregated residual.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Residual {
    /// Weighted sum of the pointwise defect.
    pub l1: f64,
    /// Largest pointwise defect.
    pub max: f64,
    /// Location of `max`.
    pub worst: Option<Vec<f64>>,
}

impl Residual {
    fn aggregate(terms: &[(f64, f64)], points: impl Fn(usize) -> Vec<f64>) -> Self {
        let weighted: Vec<f64> = terms.iter().map(|(w, v)| w * v).collect();
        let mut max = 0.0;
        let mut worst = None;
        for (i, &(_, v)) in terms.iter().enumerate() {
            if v > max || (v.is_nan() && !max.is_nan()) {
                max = v;
                worst = Some(i);
            }
        }
        Self {
            l1: pairwise_sum(&weighted),
            max,
            worst: worst.map(points),
        }
    }
}

/// Per-condition pass thresholds on the aggregated residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub div: f64,
    pub subdiff: f64,
    pub singular: f64,
    pub range: f64,
    pub boundary: f64,
    /// `|u − u₀|` at or below this counts as attained on the boundary.
    pub tie: f64,
}

impl Tolerances {
    pub fn uniform(t: f64) -> Self {
        Self {
            div: t,
            subdiff: t,
            singular: t,
            range: t,
            boundary: t,
            tie: 1e-9,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::uniform(1e-6)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    pub r_div: Residual,
    pub r_subdiff: Residual,
    pub r_singular_surrogate: Residual,
    pub r_range: Residual,
    pub r_boundary: Residual,
    pub tolerances: Tolerances,
    pub overall_pass: bool,
    pub interior_samples: usize,
    pub boundary_samples: usize,
}

impl CertificateReport {
    /// `(key, condition label, residual, tolerance)` in report order.
    pub fn entries(&self) -> [(&'static str, &'static str, &Residual, f64); 5] {
        let t = &self.tolerances;
        let labels = match self.kind {
            CertificateKind::Scalar => ["cs1", "cs2", "cs3 (surrogate)", "cs4", "cs5"],
            CertificateKind::Vector => ["cv1", "cv2", "cv3 (surrogate)", "cv4", "cv5"],
            CertificateKind::LeastGradient => ["gv2", "gv3", "gv3 (jump cells)", "gv1", "gv4"],
        };
        [
            ("r_div", labels[0], &self.r_div, t.div),
            ("r_subdiff", labels[1], &self.r_subdiff, t.subdiff),
            (
                "r_singular_surrogate",
                labels[2],
                &self.r_singular_surrogate,
                t.singular,
            ),
            ("r_range", labels[3], &self.r_range, t.range),
            ("r_boundary", labels[4], &self.r_boundary, t.boundary),
        ]
    }

    /// Keys of the residuals above tolerance.
    pub fn failures(&self) -> Vec<&'static str> {
        self.entries()
            .iter()
            .filter(|(_, _, r, t)| r.l1.is_nan() || r.l1 > *t)
            .map(|e| e.0)
            .collect()
    }

    /// Largest aggregated residual.
    pub fn max_l1(&self) -> f64 {
        self.entries().iter().map(|e| e.2.l1).fold(0.0, f64::max)
    }
}

/// Interior evaluation point of a candidate pair.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorSample {
    pub x: Vec<f64>,
    pub weight: f64,
    pub u: Vec<f64>,
    /// `n·d`, row-major.
    pub grad_u: Vec<f64>,
    pub z: Vec<f64>,
    pub div_z: Vec<f64>,
    pub g: Vec<f64>,
    pub hbar: Vec<f64>,
    pub lambda: f64,
}

/// Boundary evaluation point of a candidate pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySample {
    pub x: Vec<f64>,
    pub normal: Vec<f64>,
    pub weight: f64,
    /// Inner trace of `u`.
    pub u: Vec<f64>,
    pub u0: Vec<f64>,
    /// Normal trace `[z,ν]`.
    pub trace: Vec<f64>,
}

/// Evaluation points with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub n: usize,
    pub d: usize,
    pub interior: Vec<InteriorSample>,
    pub boundary: Vec<BoundarySample>,
    /// Gradient norm above which a cell counts as a jump cell.
    pub jump_threshold: f64,
}

/// Continuum problem data in closed form.
#[derive(Clone)]
pub struct ContinuumProblem {
    pub integrand: Integrand,
    pub shape: Shape,
    pub u0: VectorFn,
    pub g: VectorFn,
    pub hbar: VectorFn,
    pub lambda: ScalarFn,
}

impl std::fmt::Debug for ContinuumProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContinuumProblem")
            .field("integrand", &self.integrand)
            .field("shape", &self.shape)
            .finish_non_exhaustive()
    }
}

/// Closed-form candidate `(u, z)`.
#[derive(Clone)]
pub struct AnalyticPair {
    pub u: VectorFn,
    pub grad_u: VectorFn,
    pub z: VectorFn,
    /// Symbolic divergence; finite differences of `z` when absent.
    pub div_z: Option<VectorFn>,
}

impl std::fmt::Debug for AnalyticPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticPair")
            .field("symbolic_div", &self.div_z.is_some())
            .finish_non_exhaustive()
    }
}

/// Row-wise divergence of `z: ℝᵈ → ℝ^{n×d}` by fourth-order central
/// differences with step `step`.
pub fn fd_divergence(
    z: &dyn Fn(&[f64]) -> Vec<f64>,
    n: usize,
    d: usize,
    x: &[f64],
    step: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let mut p = x.to_vec();
    for k in 0..d {
        let mut at = |s: f64| {
            p[k] = x[k] + s * step;
            let v = z(&p);
            p[k] = x[k];
            v
        };
        let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
        for (r, o) in out.iter_mut().enumerate() {
            let i = r * d + k;
            *o += (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * step);
        }
    }
    out
}

/// Default finite-difference step for `fd_divergence` on a shape.
pub fn fd_step(shape: &Shape) -> f64 {
    1e-3 * shape.diameter()
}

impl SampleSet {
    /// Cell centers and boundary faces of a discrete pair; `J = 10/h`.
    pub fn from_grid(spec: &ProblemSpec, u: &Field, z: &DualField) -> Result<Self> {
        let dom = &spec.domain;
        let n = spec.n();
        let d = dom.dim();
        u.check_finite(dom)?;
        z.check_compatible(dom)?;
        if u.channels() != n {
            return Err(shape_err(n, u.channels()));
        }
        if z.channels() != n {
            return Err(shape_err(n, z.channels()));
        }
        let grad = discrete_gradient(dom, u)?;
        let div = discrete_divergence(dom, z)?;
        let hd = dom.cell_volume();
        let interior = dom
            .cells()
            .iter()
            .map(|&c| InteriorSample {
                x: dom.center(c)[..d].to_vec(),
                weight: hd,
                u: u.at(c),
                grad_u: grad.at(c).to_vec(),
                z: z.at(c).to_vec(),
                div_z: div.at(c),
                g: spec.g.at(c),
                hbar: spec.h.at(c),
                lambda: spec.lambda.get(0, c),
            })
            .collect();
        let boundary = dom
            .boundary_faces()
            .iter()
            .enumerate()
            .map(|(b, f)| BoundarySample {
                x: f.point[..d].to_vec(),
                normal: f.normal[..d].to_vec(),
                weight: f.weight,
                u: u.at(f.cell),
                u0: spec.u0_at(b).to_vec(),
                trace: z.trace(b).to_vec(),
            })
            .collect();
        Ok(Self {
            n,
            d,
            interior,
            boundary,
            jump_threshold: 10.0 / dom.h(),
        })
    }

    /// Seeded uniform interior samples and a deterministic boundary
    /// quadrature of the continuum shape; no jump cells.
    pub fn from_analytic(
        problem: &ContinuumProblem,
        pair: &AnalyticPair,
        n_interior: usize,
        n_boundary: usize,
        seed: u64,
    ) -> Result<Self> {
        let shape = &problem.shape;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = shape.volume() / n_interior.max(1) as f64;
        let points = (0..n_interior)
            .map(|_| (shape.sample_interior(&mut rng), w))
            .collect();
        Self::from_points(problem, pair, points, shape.boundary_quadrature(n_boundary))
    }

    /// Samples at given weighted interior points and boundary nodes.
    pub fn from_points(
        problem: &ContinuumProblem,
        pair: &AnalyticPair,
        points: Vec<(Vec<f64>, f64)>,
        nodes: Vec<QuadratureNode>,
    ) -> Result<Self> {
        let shape = &problem.shape;
        let n = problem.integrand.n_rows();
        let d = problem.integrand.n_cols();
        if shape.dim() != d {
            return Err(shape_err(d, shape.dim()));
        }
        let step = fd_step(shape);
        let interior: Vec<InteriorSample> = points
            .into_par_iter()
            .map(|(x, weight)| {
                let div_z = match &pair.div_z {
                    Some(f) => f(&x),
                    None => fd_divergence(pair.z.as_ref(), n, d, &x, step),
                };
                InteriorSample {
                    weight,
                    u: (pair.u)(&x),
                    grad_u: (pair.grad_u)(&x),
                    z: (pair.z)(&x),
                    div_z,
                    g: (problem.g)(&x),
                    hbar: (problem.hbar)(&x),
                    lambda: (problem.lambda)(&x),
                    x,
                }
            })
            .collect();
        let boundary = nodes
            .into_par_iter()
            .map(|q| {
                let zx = (pair.z)(&q.point);
                let trace = (0..n)
                    .map(|r| dot(&zx[r * d..(r + 1) * d], &q.normal))
                    .collect();
                BoundarySample {
                    u: (pair.u)(&q.point),
                    u0: (problem.u0)(&q.point),
                    trace,
                    x: q.point,
                    normal: q.normal,
                    weight: q.weight,
                }
            })
            .collect();
        let set = Self {
            n,
            d,
            interior,
            boundary,
            jump_threshold: f64::INFINITY,
        };
        set.check_shapes()?;
        Ok(set)
    }

    fn check_shapes(&self) -> Result<()> {
        let (n, d) = (self.n, self.d);
        for s in &self.interior {
            for (got, want) in [
                (s.u.len(), n),
                (s.grad_u.len(), n * d),
                (s.z.len(), n * d),
                (s.div_z.len(), n),
                (s.g.len(), n),
                (s.hbar.len(), n),
            ] {
                if got != want {
                    return Err(shape_err(want, got));
                }
            }
        }
        for s in &self.boundary {
            if s.u.len() != n || s.u0.len() != n || s.trace.len() != n {
                return Err(shape_err(n, s.u.len()));
            }
        }
        Ok(())
    }
}

/// Evaluate the five residuals of `kind` over a sample set.
pub fn evaluate(
    integrand: &Integrand,
    samples: &SampleSet,
    kind: CertificateKind,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    let (n, d) = (samples.n, samples.d);
    if integrand.n_rows() != n || integrand.n_cols() != d {
        return Err(shape_err(
            format!("{}x{}", integrand.n_rows(), integrand.n_cols()),
            format!("{n}x{d}"),
        ));
    }
    samples.check_shapes()?;
    let model = integrand.model();
    let f_max = 10.0 * integrand.growth_constant().powi(2);
    let jump = samples.jump_threshold;

    // (div, subdiff, singular, range) pointwise defects per interior sample.
    let cell_terms: Vec<[f64; 4]> = samples
        .interior
        .par_iter()
        .map(|s| -> Result<[f64; 4]> {
            let x = &s.x[..];
            let target: Vec<f64> = (0..n)
                .map(|r| match kind {
                    CertificateKind::LeastGradient => 0.0,
                    _ => s.lambda * (s.u[r] - s.hbar[r]) + s.g[r],
                })
                .collect();
            let r_div = crate::linalg::dist(&s.div_z, &target);
            let gnorm = norm(&s.grad_u);
            let pairing = dot(&s.z, &s.grad_u);
            Ok(match kind {
                CertificateKind::LeastGradient => {
                    let defect = (gnorm - pairing).max(0.0);
                    let (ac, sing) = if gnorm > jump {
                        (0.0, defect)
                    } else {
                        (defect, 0.0)
                    };
                    [r_div, ac, sing, (norm(&s.z) - 1.0).max(0.0)]
                }
                _ => {
                    let conj = model.conjugate(x, &s.z);
                    let in_range = conj.is_finite() && conj <= f_max;
                    let range = if in_range { 0.0 } else { 1.0 };
                    if gnorm > jump {
                        let unit: Vec<f64> = s.grad_u.iter().map(|v| v / gnorm).collect();
                        let rec = model.recession_value(x, &unit)?;
                        [r_div, 0.0, (rec * gnorm - pairing).max(0.0), range]
                    } else {
                        let fy = if conj.is_finite() {
                            (model.value(x, &s.grad_u) + conj - pairing).max(0.0)
                        } else {
                            model.dual_range_excess(x, &s.z).max(0.0)
                        };
                        [r_div, fy, 0.0, range]
                    }
                }
            })
        })
        .collect::<Result<_>>()?;

    let bnd_terms: Vec<f64> = samples
        .boundary
        .par_iter()
        .map(|s| -> Result<f64> {
            let a: Vec<f64> = s.u0.iter().zip(&s.u).map(|(u0, u)| u0 - u).collect();
            Ok(match kind {
                CertificateKind::LeastGradient => {
                    let t = if a[0].abs() <= tol.tie { 0.0 } else { a[0] };
                    sign_set_distance(s.trace[0], t)
                }
                _ => {
                    let xi = MatrixArg::rank_one(&a, &s.normal);
                    let rec = model.recession_value(&s.x, xi.as_slice())?;
                    (dot(&s.trace, &a) - rec).abs()
                }
            })
        })
        .collect::<Result<_>>()?;

    let ipoint = |i: usize| samples.interior[i].x.clone();
    let column = |k: usize| -> Vec<(f64, f64)> {
        samples
            .interior
            .iter()
            .zip(&cell_terms)
            .map(|(s, t)| (s.weight, t[k]))
            .collect()
    };
    let r_div = Residual::aggregate(&column(0), ipoint);
    let r_subdiff = Residual::aggregate(&column(1), ipoint);
    let r_singular_surrogate = Residual::aggregate(&column(2), ipoint);
    let r_range = Residual::aggregate(&column(3), ipoint);
    let bcol: Vec<(f64, f64)> = samples
        .boundary
        .iter()
        .zip(&bnd_terms)
        .map(|(s, &v)| (s.weight, v))
        .collect();
    let r_boundary = Residual::aggregate(&bcol, |i| samples.boundary[i].x.clone());
    let mut report = CertificateReport {
        kind,
        r_div,
        r_subdiff,
        r_singular_surrogate,
        r_range,
        r_boundary,
        tolerances: *tol,
        overall_pass: false,
        interior_samples: samples.interior.len(),
        boundary_samples: samples.boundary.len(),
    };
    report.overall_pass = report.failures().is_empty();
    Ok(report)
}

/// Scalar characterization for a discrete pair.
pub fn verify_scalar(
    spec: &ProblemSpec,
    u: &Field,
    z: &DualField,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    if spec.n() != 1 {
        return Err(shape_err(1, spec.n()));
    }
    evaluate(
        &spec.integrand,
        &SampleSet::from_grid(spec, u, z)?,
        CertificateKind::Scalar,
        tol,
    )
}

/// Vectorial characterization for a discrete pair.
pub fn verify_vector(
    spec: &ProblemSpec,
    u: &Field,
    z: &DualField,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    check_vector_integrand(&spec.integrand)?;
    evaluate(
        &spec.integrand,
        &SampleSet::from_grid(spec, u, z)?,
        CertificateKind::Vector,
        tol,
    )
}

fn check_vector_integrand(f: &Integrand) -> Result<()> {
    if f.n_rows() > 1 && f.x_dependent() {
        return Err(Error::Unsupported(
            "vectorial certificates require an autonomous integrand".into(),
        ));
    }
    Ok(())
}

/// Least-gradient conditions for a discrete pair.
pub fn verify_least_gradient(
    spec: &ProblemSpec,
    u: &Field,
    z: &DualField,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    if spec.integrand.name() != "tv" || spec.n() != 1 {
        return Err(Error::Unsupported(format!(
            "least-gradient certificate needs scalar tv, got {}",
            spec.integrand.name()
        )));
    }
    let dom = &spec.domain;
    if dom
        .cells()
        .iter()
        .any(|&c| spec.g.get(0, c) != 0.0 || spec.lambda.get(0, c) != 0.0)
    {
        return Err(Error::Unsupported(
            "least-gradient certificate needs g = 0 and lambda = 0".into(),
        ));
    }
    evaluate(
        &spec.integrand,
        &SampleSet::from_grid(spec, u, z)?,
        CertificateKind::LeastGradient,
        tol,
    )
}

/// Certificate of a closed-form pair on the continuum shape.
pub fn verify_analytic(
    problem: &ContinuumProblem,
    pair: &AnalyticPair,
    kind: CertificateKind,
    tol: &Tolerances,
    n_interior: usize,
    n_boundary: usize,
) -> Result<CertificateReport> {
    if kind == CertificateKind::Vector {
        check_vector_integrand(&problem.integrand)?;
    }
    let samples = SampleSet::from_analytic(problem, pair, n_interior, n_boundary, DEFAULT_SEED)?;
    evaluate(&problem.integrand, &samples, kind, tol)
}

/// `‖[z,ν] − D_ξf^∞(x,(u₀ − u)⊗ν)ν‖` on boundary samples with
/// `|u − u₀| > tie`, zero elsewhere.
pub fn boundary_gradient_condition_samples(
    integrand: &Integrand,
    samples: &SampleSet,
    tie: f64,
) -> Result<Vec<f64>> {
    let (n, d) = (samples.n, samples.d);
    samples
        .boundary
        .iter()
        .map(|s| {
            let a: Vec<f64> = s.u0.iter().zip(&s.u).map(|(u0, u)| u0 - u).collect();
            if norm(&a) <= tie {
                return Ok(0.0);
            }
            let xi = MatrixArg::rank_one(&a, &s.normal);
            let g = integrand.recession_gradient(&s.x, &xi)?;
            let diff: Vec<f64> = (0..n)
                .map(|r| s.trace[r] - dot(&g.as_slice()[r * d..(r + 1) * d], &s.normal))
                .collect();
            Ok(norm(&diff))
        })
        .collect()
}

/// Per-face residual of the boundary gradient condition for a discrete pair.
pub fn boundary_gradient_condition(
    spec: &ProblemSpec,
    u: &Field,
    z: &DualField,
) -> Result<Vec<f64>> {
    let tie = 1e-9 * (1.0 + spec.max_abs_u0());
    boundary_gradient_condition_samples(&spec.integrand, &SampleSet::from_grid(spec, u, z)?, tie)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{make_tv, make_vector_tv};
    use crate::geometry::build_domain;

    fn zero_spec(n: usize) -> ProblemSpec {
        let dom = build_domain(Shape::Disk { r: 1.0 }, 24).unwrap();
        let f = if n == 1 {
            make_tv(1, 2)
        } else {
            make_vector_tv(n, 2)
        }
        .unwrap();
        ProblemSpec::from_fns(
            f,
            dom,
            |_| vec![0.0; n],
            |_| vec![0.0; n],
            |_| vec![0.0; n],
            |_| 0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_pair_has_zero_residuals() {
        let spec = zero_spec(2);
        let u = Field::zeros(&spec.domain, 2);
        let z = DualField::zeros(&spec.domain, 2);
        let rep = verify_vector(&spec, &u, &z, &Tolerances::uniform(0.0)).unwrap();
        assert!(rep.overall_pass, "{rep:?}");
        assert_eq!(rep.max_l1(), 0.0);
    }

    #[test]
    fn constant_vector_datum() {
        let dom = build_domain(Shape::Disk { r: 1.0 }, 24).unwrap();
        let c = [0.3, -1.2];
        let spec = ProblemSpec::from_fns(
            make_vector_tv(2, 2).unwrap(),
            dom,
            |_| c.to_vec(),
            |_| vec![0.0; 2],
            |_| vec![0.0; 2],
            |_| 0.0,
        )
        .unwrap();
        let u = Field::from_fn(&spec.domain, 2, |_| c.to_vec()).unwrap();
        let z = DualField::zeros(&spec.domain, 2);
        let rep = verify_vector(&spec, &u, &z, &Tolerances::uniform(0.0)).unwrap();
        assert!(rep.overall_pass, "{rep:?}");
    }

    #[test]
    fn scalar_rejects_vector_problem() {
        let spec = zero_spec(2);
        let u = Field::zeros(&spec.domain, 2);
        let z = DualField::zeros(&spec.domain, 2);
        assert!(matches!(
            verify_scalar(&spec, &u, &z, &Tolerances::default()),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn fd_divergence_matches_symbolic() {
        let z = |x: &[f64]| vec![x[0] * x[0] * x[1], (x[1] * 3.0).sin()];
        let x = [0.3, -0.7];
        let div = fd_divergence(&z, 1, 2, &x, 1e-3);
        let exact = 2.0 * x[0] * x[1] + 3.0 * (3.0 * x[1]).cos();
        assert!((div[0] - exact).abs() < 1e-10, "{}", div[0] - exact);
    }

    #[test]
    fn boundary_condition_detects_defect() {
        let spec = ProblemSpec::from_fns(
            make_tv(1, 2).unwrap(),
            build_domain(Shape::Disk { r: 1.0 }, 24).unwrap(),
            |_| vec![1.0],
            |_| vec![0.0],
            |_| vec![0.0],
            |_| 0.0,
        )
        .unwrap();
        let u = Field::zeros(&spec.domain, 1);
        let mut z = DualField::zeros(&spec.domain, 1);
        z.boundary_values_mut().iter_mut().for_each(|v| *v = 1.0);
        let ok = boundary_gradient_condition(&spec, &u, &z).unwrap();
        assert!(ok.iter().all(|v| *v < 1e-12));
        let delta = 0.125;
        z.boundary_values_mut()
            .iter_mut()
            .for_each(|v| *v = 1.0 - delta);
        let bad = boundary_gradient_condition(&spec, &u, &z).unwrap();
        assert!(bad.iter().all(|v| (v - delta).abs() < 1e-12));
    }

    #[test]
    fn faces_with_attained_datum_are_zero() {
        let spec = zero_spec(1);
        let u = Field::zeros(&spec.domain, 1);
        let z = DualField::zeros(&spec.domain, 1);
        let res = boundary_gradient_condition(&spec, &u, &z).unwrap();
        assert!(res.iter().all(|v| *v == 0.0));
    }
}
