//! Convex integrands with linear growth.
//!
//! An [`Integrand`] wraps an [`IntegrandModel`] and validates shapes. The
//! model trait has slice-based evaluators for the solver hot path; the
//! wrapper exposes [`MatrixArg`]-based operations for everything else.
//!
//! Models only need `value` and `gradient`. Recession, conjugate, prox and
//! the boundary dual section fall back to numerical procedures.

mod builtin;
mod numeric;

use std::fmt;
use std::sync::Arc;

use crate::error::{shape_err, Error, Result};
use crate::linalg::{dot, norm};

pub use builtin::{
    make_area, make_hencky, make_tv, make_vector_tv, make_weighted_tv, AreaModel, HenckyModel,
    TvModel, WeightedTvModel,
};
pub use numeric::{richardson_recession, RICHARDSON_TOL};

/// Scalar field over a spatial point.
pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An `n × d` real matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixArg {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixArg {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(shape_err(rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// A `1 × d` matrix, the scalar-problem gradient slot.
    pub fn vector(data: &[f64]) -> Self {
        Self {
            rows: 1,
            cols: data.len(),
            data: data.to_vec(),
        }
    }

    /// The rank-one matrix `a ⊗ ν`.
    pub fn rank_one(a: &[f64], nu: &[f64]) -> Self {
        let mut data = Vec::with_capacity(a.len() * nu.len());
        for ai in a {
            for nj in nu {
                data.push(ai * nj);
            }
        }
        Self {
            rows: a.len(),
            cols: nu.len(),
            data,
        }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn dot(&self, other: &MatrixArg) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * t).collect(),
        }
    }
}

/// The set of admissible boundary dual values `ζ ∈ ℝⁿ` for a face with
/// outward normal ν, i.e. `{ζ : ⟨ζ, a⟩ ≤ f^∞(x, a ⊗ ν) ∀a}`.
#[derive(Clone, Debug, PartialEq)]
pub enum DualSection {
    /// Scalar case: the closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Centered Euclidean ball.
    Ball { radius: f64 },
    /// Convex polygon in ℝ², vertices in counter-clockwise order.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl DualSection {
    /// Euclidean projection, in place.
    pub fn project(&self, zeta: &mut [f64]) {
        match self {
            DualSection::Interval { lo, hi } => zeta[0] = zeta[0].clamp(*lo, *hi),
            DualSection::Ball { radius } => {
                let r = norm(zeta);
                if r > *radius {
                    let s = radius / r;
                    zeta.iter_mut().for_each(|v| *v *= s);
                }
            }
            DualSection::Polygon { vertices } => {
                let p = [zeta[0], zeta[1]];
                let q = project_polygon(vertices, p);
                zeta[0] = q[0];
                zeta[1] = q[1];
            }
        }
    }

    /// Support function `sup_{ζ ∈ S} ⟨ζ, a⟩`.
    pub fn support(&self, a: &[f64]) -> f64 {
        match self {
            DualSection::Interval { lo, hi } => (hi * a[0]).max(lo * a[0]),
            DualSection::Ball { radius } => radius * norm(a),
            DualSection::Polygon { vertices } => vertices
                .iter()
                .map(|v| v[0] * a[0] + v[1] * a[1])
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn project_polygon(vertices: &[[f64; 2]], p: [f64; 2]) -> [f64; 2] {
    let m = vertices.len();
    let mut inside = true;
    for k in 0..m {
        let a = vertices[k];
        let b = vertices[(k + 1) % m];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross < 0.0 {
            inside = false;
            break;
        }
    }
    if inside {
        return p;
    }
    let mut best = vertices[0];
    let mut best_d = f64::INFINITY;
    for k in 0..m {
        let a = vertices[k];
        let b = vertices[(k + 1) % m];
        let e = [b[0] - a[0], b[1] - a[1]];
        let len2 = e[0] * e[0] + e[1] * e[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [a[0] + t * e[0], a[1] + t * e[1]];
        let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// Number of directions used to build polygonal dual sections.
pub const SECTION_DIRECTIONS: usize = 64;

/// Evaluators of a convex integrand `f(x, ξ)`, `ξ ∈ ℝ^{n×d}` row-major.
///
/// All slices passed to the evaluators have the model's dimensions; the
/// [`Integrand`] wrapper checks this before dispatching.
pub trait IntegrandModel: Send + Sync {
    fn name(&self) -> String;

    /// `(n, d)`.
    fn dims(&self) -> (usize, usize);

    fn growth_constant(&self) -> f64;

    fn x_dependent(&self) -> bool {
        false
    }

    fn homogeneous(&self) -> bool {
        false
    }

    fn value(&self, x: &[f64], xi: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()>;

    fn recession_value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        richardson_recession(|t| self.value(x, &scale(xi, t)), xi)
    }

    fn recession_gradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        numeric::recession_gradient_fd(self, x, xi, out)
    }

    /// `f*(x, z)`, `+∞` outside the closed dual range.
    fn conjugate(&self, x: &[f64], z: &[f64]) -> f64 {
        numeric::conjugate_ascent(self, x, z)
    }

    /// How far `z` lies outside the closed dual range; `≤ 0` inside.
    fn dual_range_excess(&self, x: &[f64], z: &[f64]) -> f64 {
        numeric::support_excess(self, x, z)
    }

    /// `argmin_z ½|z − ζ|² + τ f*(x, z)`.
    fn prox_conjugate(&self, x: &[f64], zeta: &[f64], tau: f64, out: &mut [f64]) -> Result<()> {
        numeric::prox_conjugate_moreau(self, x, zeta, tau, out)
    }

    /// Analytic quantitative-Fenchel constant, if known.
    fn fenchel_constant(&self) -> Option<f64> {
        None
    }

    fn dual_section(&self, x: &[f64], nu: &[f64]) -> Result<DualSection> {
        numeric::sampled_section(self, x, nu)
    }
}

pub(crate) fn scale(xi: &[f64], t: f64) -> Vec<f64> {
    xi.iter().map(|v| v * t).collect()
}

/// A convex integrand: model plus its calibrated Fenchel constant.
#[derive(Clone)]
pub struct Integrand {
    model: Arc<dyn IntegrandModel>,
    fenchel: f64,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.model.dims();
        f.debug_struct("Integrand")
            .field("name", &self.model.name())
            .field("n_rows", &n)
            .field("n_cols", &d)
            .field("growth_constant", &self.model.growth_constant())
            .field("fenchel_constant", &self.fenchel)
            .finish()
    }
}

impl Integrand {
    /// Wrap a model, calibrating the Fenchel constant by sampling when the
    /// model does not supply one.
    pub fn new(model: Arc<dyn IntegrandModel>) -> Result<Self> {
        let (n, d) = model.dims();
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter(
                "integrand dimensions must be positive".into(),
            ));
        }
        let c1 = model.growth_constant();
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(Error::InvalidParameter(format!("growth constant {c1}")));
        }
        let fenchel = match model.fenchel_constant() {
            Some(c) => c,
            None => numeric::calibrate_fenchel(model.as_ref(), 2000)?,
        };
        Ok(Self { model, fenchel })
    }

    pub fn from_model<M: IntegrandModel + 'static>(model: M) -> Result<Self> {
        Self::new(Arc::new(model))
    }

    pub fn model(&self) -> &dyn IntegrandModel {
        self.model.as_ref()
    }

    pub fn name(&self) -> String {
        self.model.name()
    }

    pub fn n_rows(&self) -> usize {
        self.model.dims().0
    }

    pub fn n_cols(&self) -> usize {
        self.model.dims().1
    }

    pub fn len(&self) -> usize {
        let (n, d) = self.model.dims();
        n * d
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn growth_constant(&self) -> f64 {
        self.model.growth_constant()
    }

    pub fn x_dependent(&self) -> bool {
        self.model.x_dependent()
    }

    pub fn homogeneous(&self) -> bool {
        self.model.homogeneous()
    }

    pub fn fenchel_constant(&self) -> f64 {
        self.fenchel
    }

    fn check(&self, m: &MatrixArg) -> Result<()> {
        let (n, d) = self.model.dims();
        if m.rows != n || m.cols != d {
            return Err(shape_err(
                format!("{n}x{d}"),
                format!("{}x{}", m.rows, m.cols),
            ));
        }
        Ok(())
    }

    /// `f(x, ξ)`.
    pub fn eval(&self, x: &[f64], xi: &MatrixArg) -> Result<f64> {
        self.check(xi)?;
        Ok(self.model.value(x, &xi.data))
    }

    /// `D_ξ f(x, ξ)`.
    pub fn gradient(&self, x: &[f64], xi: &MatrixArg) -> Result<MatrixArg> {
        self.check(xi)?;
        let mut out = vec![0.0; xi.data.len()];
        self.model.gradient(x, &xi.data, &mut out)?;
        Ok(MatrixArg::from_raw(xi.rows, xi.cols, out))
    }

    /// `f^∞(x, ξ)`.
    pub fn recession(&self, x: &[f64], xi: &MatrixArg) -> Result<f64> {
        self.check(xi)?;
        self.model.recession_value(x, &xi.data)
    }

    /// `D_ξ f^∞(x, ξ)`, `ξ ≠ 0`.
    pub fn recession_gradient(&self, x: &[f64], xi: &MatrixArg) -> Result<MatrixArg> {
        self.check(xi)?;
        if xi.norm() == 0.0 {
            return Err(Error::SingularPoint("recession gradient at xi = 0".into()));
        }
        let mut out = vec![0.0; xi.data.len()];
        self.model.recession_gradient(x, &xi.data, &mut out)?;
        Ok(MatrixArg::from_raw(xi.rows, xi.cols, out))
    }

    /// `f*(x, ξ*)`.
    pub fn conjugate(&self, x: &[f64], xistar: &MatrixArg) -> Result<f64> {
        self.check(xistar)?;
        Ok(self.model.conjugate(x, &xistar.data))
    }

    pub fn dual_range_excess(&self, x: &[f64], z: &MatrixArg) -> Result<f64> {
        self.check(z)?;
        Ok(self.model.dual_range_excess(x, &z.data))
    }

    /// Resolvent of `τ ∂f*`.
    pub fn prox_conjugate(&self, x: &[f64], zeta: &MatrixArg, tau: f64) -> Result<MatrixArg> {
        self.check(zeta)?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        let mut out = vec![0.0; zeta.data.len()];
        self.model.prox_conjugate(x, &zeta.data, tau, &mut out)?;
        Ok(MatrixArg::from_raw(zeta.rows, zeta.cols, out))
    }

    /// `⟨D f^∞(x,v) − v*, v⟩ − C |D f^∞(x,v) − v*|²`.
    pub fn quant_fenchel_margin(&self, x: &[f64], v: &MatrixArg, vstar: &MatrixArg) -> Result<f64> {
        self.check(v)?;
        self.check(vstar)?;
        if (v.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "v must be a unit matrix, |v| = {}",
                v.norm()
            )));
        }
        let excess = self.model.dual_range_excess(x, &vstar.data);
        if excess > 1e-8 {
            return Err(Error::Domain(format!(
                "v* lies outside the dual range by {excess:.3e}"
            )));
        }
        let g = self.recession_gradient(x, v)?;
        let diff: Vec<f64> = g.data.iter().zip(&vstar.data).map(|(a, b)| a - b).collect();
        Ok(dot(&diff, &v.data) - self.fenchel * dot(&diff, &diff))
    }

    /// Fenchel-Young gap `f(x,ξ) + f*(x,z) − ⟨z,ξ⟩`.
    pub fn subdiff_residual(&self, x: &[f64], xi: &MatrixArg, z: &MatrixArg) -> Result<f64> {
        self.check(xi)?;
        self.check(z)?;
        Ok(self.model.value(x, &xi.data) + self.model.conjugate(x, &z.data) - z.dot(xi))
    }

    /// Admissible boundary dual values for outward normal `nu`.
    pub fn dual_section(&self, x: &[f64], nu: &[f64]) -> Result<DualSection> {
        if nu.len() != self.n_cols() {
            return Err(shape_err(self.n_cols(), nu.len()));
        }
        self.model.dual_section(x, nu)
    }
}

/// Distance from `v` to the unit-ball sign set `sgn(t)`, used for the
/// least-gradient boundary condition.
pub fn sign_set_distance(value: f64, t: f64) -> f64 {
    if t > 0.0 {
        (value - 1.0).abs()
    } else if t < 0.0 {
        (value + 1.0).abs()
    } else if value.abs() <= 1.0 {
        0.0
    } else {
        value.abs() - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_arg_validates_shape() {
        assert!(MatrixArg::new(2, 2, vec![1.0; 3]).is_err());
        assert!(MatrixArg::new(1, 2, vec![f64::NAN, 0.0]).is_err());
        let m = MatrixArg::rank_one(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(m.as_slice(), &[3.0, 4.0, 6.0, 8.0]);
        assert_eq!(m.get(1, 0), 6.0);
    }

    #[test]
    fn interval_section_projects() {
        let s = DualSection::Interval { lo: -1.0, hi: 2.0 };
        let mut z = [3.0];
        s.project(&mut z);
        assert_eq!(z[0], 2.0);
        assert_eq!(s.support(&[-1.0]), 1.0);
    }

    #[test]
    fn polygon_projection_matches_square() {
        let s = DualSection::Polygon {
            vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        };
        let mut z = [3.0, 0.5];
        s.project(&mut z);
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 0.5).abs() < 1e-15);
        let mut w = [0.2, -0.3];
        s.project(&mut w);
        assert_eq!(w, [0.2, -0.3]);
    }

    #[test]
    fn sign_set_distance_cases() {
        assert_eq!(sign_set_distance(1.0, 2.0), 0.0);
        assert_eq!(sign_set_distance(0.5, -1.0), 1.5);
        assert_eq!(sign_set_distance(0.5, 0.0), 0.0);
    }
}
