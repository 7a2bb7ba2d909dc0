//! Fields on the staggered grid, the discrete gradient/divergence pair, and
//! the relaxed energy.
//!
//! The dual field is stored cell-collocated: cell `c` holds the `n × d`
//! values on its forward faces. Boundary faces carry a separate `n`-vector
//! `ζ_b`, the normal trace `[z, ν]` at that face, so that
//!
//! `⟨Gu, z⟩ hᵈ + ⟨u, div z⟩ hᵈ = Σ_b w_b ⟨u_c, ζ_b⟩`
//!
//! holds exactly.

use rayon::prelude::*;

use crate::convex::{Integrand, MatrixArg};
use crate::error::{shape_err, Error, Result};
use crate::geometry::GridDomain;
use crate::linalg::pairwise_sum;

/// `n`-channel cell field; index `ch·nx·ny + i·ny + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    n: usize,
    nx: usize,
    ny: usize,
    h: f64,
    data: Vec<f64>,
}

impl Field {
    pub fn new(n: usize, nx: usize, ny: usize, h: f64, data: Vec<f64>) -> Result<Self> {
        if n == 0 || nx == 0 || ny == 0 {
            return Err(Error::InvalidField(
                "field dimensions must be positive".into(),
            ));
        }
        if data.len() != n * nx * ny {
            return Err(shape_err(n * nx * ny, data.len()));
        }
        Ok(Self { n, nx, ny, h, data })
    }

    pub fn zeros(domain: &GridDomain, n: usize) -> Self {
        Self {
            n,
            nx: domain.nx(),
            ny: domain.ny(),
            h: domain.h(),
            data: vec![0.0; n * domain.n_cells_total()],
        }
    }

    /// Sample `f` at inside cell centers; outside cells are zero.
    pub fn from_fn(domain: &GridDomain, n: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut out = Self::zeros(domain, n);
        let d = domain.dim();
        let total = domain.n_cells_total();
        for &c in domain.cells() {
            let v = f(&domain.center(c)[..d]);
            if v.len() != n {
                return Err(shape_err(n, v.len()));
            }
            for (ch, val) in v.into_iter().enumerate() {
                out.data[ch * total + c] = val;
            }
        }
        Ok(out)
    }

    /// Scalar variant of [`Field::from_fn`].
    pub fn from_scalar_fn(domain: &GridDomain, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(domain, 1, |x| vec![f(x)]).expect("scalar closure has one channel")
    }

    pub fn channels(&self) -> usize {
        self.n
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, ch: usize, flat: usize) -> f64 {
        self.data[ch * self.nx * self.ny + flat]
    }

    pub fn set(&mut self, ch: usize, flat: usize, v: f64) {
        let total = self.nx * self.ny;
        self.data[ch * total + flat] = v;
    }

    /// Channel values at cell `flat`.
    pub fn at(&self, flat: usize) -> Vec<f64> {
        (0..self.n).map(|ch| self.get(ch, flat)).collect()
    }

    pub fn check_compatible(&self, domain: &GridDomain) -> Result<()> {
        if self.nx != domain.nx() || self.ny != domain.ny() {
            return Err(shape_err(
                format!("{}x{}", domain.nx(), domain.ny()),
                format!("{}x{}", self.nx, self.ny),
            ));
        }
        Ok(())
    }

    /// Rejects non-finite values on inside cells.
    pub fn check_finite(&self, domain: &GridDomain) -> Result<()> {
        self.check_compatible(domain)?;
        for &c in domain.cells() {
            for ch in 0..self.n {
                if !self.get(ch, c).is_finite() {
                    let (i, j) = domain.ij(c);
                    return Err(Error::InvalidField(format!(
                        "non-finite value at cell ({i}, {j}), channel {ch}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Max absolute value over inside cells.
    pub fn max_abs(&self, domain: &GridDomain) -> f64 {
        domain
            .cells()
            .iter()
            .flat_map(|&c| (0..self.n).map(move |ch| (ch, c)))
            .map(|(ch, c)| self.get(ch, c).abs())
            .fold(0.0, f64::max)
    }
}

/// `n × d` dual field on faces plus boundary normal traces.
#[derive(Clone, Debug, PartialEq)]
pub struct DualField {
    n: usize,
    d: usize,
    /// `flat·n·d + r·d + k`: value on the forward face of `flat` along `k`.
    cells: Vec<f64>,
    /// `b·n + r`: normal trace at boundary face `b`.
    boundary: Vec<f64>,
}

impl DualField {
    pub fn zeros(domain: &GridDomain, n: usize) -> Self {
        let d = domain.dim();
        Self {
            n,
            d,
            cells: vec![0.0; domain.n_cells_total() * n * d],
            boundary: vec![0.0; domain.boundary_faces().len() * n],
        }
    }

    pub fn from_parts(
        domain: &GridDomain,
        n: usize,
        cells: Vec<f64>,
        boundary: Vec<f64>,
    ) -> Result<Self> {
        let d = domain.dim();
        if cells.len() != domain.n_cells_total() * n * d {
            return Err(shape_err(domain.n_cells_total() * n * d, cells.len()));
        }
        if boundary.len() != domain.boundary_faces().len() * n {
            return Err(shape_err(domain.boundary_faces().len() * n, boundary.len()));
        }
        Ok(Self {
            n,
            d,
            cells,
            boundary,
        })
    }

    /// Sample a continuous field `z(x) ∈ ℝ^{n×d}`: each face component at
    /// its face center, boundary traces `z(y_b)ν_b` at the projected points.
    pub fn from_fn(domain: &GridDomain, n: usize, z: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let d = domain.dim();
        let h = domain.h();
        let mut out = Self::zeros(domain, n);
        for &c in domain.cells() {
            for k in 0..d {
                if domain.neighbor(c, k, 1).is_none() {
                    continue;
                }
                let mut p = domain.center(c);
                p[k] += 0.5 * h;
                let v = z(&p[..d]);
                if v.len() != n * d {
                    return Err(shape_err(n * d, v.len()));
                }
                for r in 0..n {
                    out.cells[c * n * d + r * d + k] = v[r * d + k];
                }
            }
        }
        for (b, face) in domain.boundary_faces().iter().enumerate() {
            let v = z(&face.point[..d]);
            if v.len() != n * d {
                return Err(shape_err(n * d, v.len()));
            }
            for r in 0..n {
                out.boundary[b * n + r] = (0..d).map(|k| v[r * d + k] * face.normal[k]).sum();
            }
        }
        Ok(out)
    }

    pub fn channels(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cell_values(&self) -> &[f64] {
        &self.cells
    }

    pub fn cell_values_mut(&mut self) -> &mut [f64] {
        &mut self.cells
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary
    }

    pub fn boundary_values_mut(&mut self) -> &mut [f64] {
        &mut self.boundary
    }

    /// The `n × d` block at cell `flat`.
    pub fn at(&self, flat: usize) -> &[f64] {
        let m = self.n * self.d;
        &self.cells[flat * m..(flat + 1) * m]
    }

    /// Normal trace at boundary face `b`.
    pub fn trace(&self, b: usize) -> &[f64] {
        &self.boundary[b * self.n..(b + 1) * self.n]
    }

    pub fn check_compatible(&self, domain: &GridDomain) -> Result<()> {
        if self.d != domain.dim()
            || self.cells.len() != domain.n_cells_total() * self.n * self.d
            || self.boundary.len() != domain.boundary_faces().len() * self.n
        {
            return Err(shape_err(
                "dual field matching the domain",
                "mismatched dual field",
            ));
        }
        Ok(())
    }

    /// `max_c |z(c)|` over inside cells.
    pub fn max_norm(&self, domain: &GridDomain) -> f64 {
        domain
            .cells()
            .iter()
            .map(|&c| crate::linalg::norm(self.at(c)))
            .fold(0.0, f64::max)
    }
}

/// A discretized variational problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub integrand: Integrand,
    pub domain: GridDomain,
    /// `b·n + r`: boundary datum at face `b`.
    pub u0: Vec<f64>,
    pub g: Field,
    pub h: Field,
    pub lambda: Field,
}

impl ProblemSpec {
    pub fn new(
        integrand: Integrand,
        domain: GridDomain,
        u0: Vec<f64>,
        g: Field,
        h: Field,
        lambda: Field,
    ) -> Result<Self> {
        let n = integrand.n_rows();
        if integrand.n_cols() != domain.dim() {
            return Err(shape_err(
                format!("integrand with d = {}", domain.dim()),
                format!("d = {}", integrand.n_cols()),
            ));
        }
        if u0.len() != n * domain.boundary_faces().len() {
            return Err(shape_err(n * domain.boundary_faces().len(), u0.len()));
        }
        if u0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("boundary datum is not finite".into()));
        }
        for (name, f, ch) in [("g", &g, n), ("h", &h, n), ("lambda", &lambda, 1)] {
            if f.channels() != ch {
                return Err(shape_err(
                    format!("{name} with {ch} channels"),
                    f.channels(),
                ));
            }
            f.check_finite(&domain)?;
        }
        if domain.cells().iter().any(|&c| lambda.get(0, c) < 0.0) {
            return Err(Error::InvalidParameter("lambda must be nonnegative".into()));
        }
        Ok(Self {
            integrand,
            domain,
            u0,
            g,
            h,
            lambda,
        })
    }

    /// Build from closures: `u0` at boundary points, the rest at cell centers.
    pub fn from_fns(
        integrand: Integrand,
        domain: GridDomain,
        u0: impl Fn(&[f64]) -> Vec<f64>,
        g: impl Fn(&[f64]) -> Vec<f64>,
        h: impl Fn(&[f64]) -> Vec<f64>,
        lambda: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let n = integrand.n_rows();
        let d = domain.dim();
        let mut u0v = Vec::with_capacity(n * domain.boundary_faces().len());
        for face in domain.boundary_faces() {
            let v = u0(&face.point[..d]);
            if v.len() != n {
                return Err(shape_err(n, v.len()));
            }
            u0v.extend(v);
        }
        let gf = Field::from_fn(&domain, n, g)?;
        let hf = Field::from_fn(&domain, n, h)?;
        let lf = Field::from_scalar_fn(&domain, lambda);
        Self::new(integrand, domain, u0v, gf, hf, lf)
    }

    pub fn n(&self) -> usize {
        self.integrand.n_rows()
    }

    /// Boundary datum at face `b`.
    pub fn u0_at(&self, b: usize) -> &[f64] {
        let n = self.n();
        &self.u0[b * n..(b + 1) * n]
    }

    pub fn max_abs_u0(&self) -> f64 {
        self.u0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The same problem with the boundary datum replaced.
    pub fn with_u0(&self, u0: Vec<f64>) -> Result<Self> {
        Self::new(
            self.integrand.clone(),
            self.domain.clone(),
            u0,
            self.g.clone(),
            self.h.clone(),
            self.lambda.clone(),
        )
    }
}

/// Forward differences on interior faces; zero on boundary faces.
pub fn discrete_gradient(domain: &GridDomain, u: &Field) -> Result<DualField> {
    u.check_compatible(domain)?;
    let n = u.channels();
    let d = domain.dim();
    let h = domain.h();
    let mut out = DualField::zeros(domain, n);
    for &c in domain.cells() {
        for k in 0..d {
            if let Some(nb) = domain.neighbor(c, k, 1) {
                for r in 0..n {
                    out.cells[c * n * d + r * d + k] = (u.get(r, nb) - u.get(r, c)) / h;
                }
            }
        }
    }
    Ok(out)
}

/// Divergence including boundary fluxes; the negative adjoint of
/// [`discrete_gradient`] up to the boundary pairing.
pub fn discrete_divergence(domain: &GridDomain, z: &DualField) -> Result<Field> {
    z.check_compatible(domain)?;
    let n = z.channels();
    let mut out = Field::zeros(domain, n);
    let mut buf = vec![0.0; n];
    for &c in domain.cells() {
        divergence_at(domain, z, c, &mut buf);
        for (r, v) in buf.iter().enumerate() {
            out.set(r, c, *v);
        }
    }
    Ok(out)
}

/// Divergence at one inside cell, written into `out` (length `n`).
pub(crate) fn divergence_at(domain: &GridDomain, z: &DualField, c: usize, out: &mut [f64]) {
    let n = z.n;
    let d = z.d;
    let h = domain.h();
    let hd = domain.cell_volume();
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..d {
        if domain.neighbor(c, k, 1).is_some() {
            for (r, o) in out.iter_mut().enumerate() {
                *o += z.cells[c * n * d + r * d + k] / h;
            }
        }
        if let Some(nb) = domain.neighbor(c, k, -1) {
            for (r, o) in out.iter_mut().enumerate() {
                *o -= z.cells[nb * n * d + r * d + k] / h;
            }
        }
    }
    for &b in domain.faces_of_cell(c) {
        let w = domain.boundary_faces()[b].weight;
        for (r, o) in out.iter_mut().enumerate() {
            *o += w * z.boundary[b * n + r] / hd;
        }
    }
}

/// `Σ hᵈ Σ_c |Gu(c)|`.
pub fn total_variation(domain: &GridDomain, u: &Field) -> Result<f64> {
    let g = discrete_gradient(domain, u)?;
    let hd = domain.cell_volume();
    let terms: Vec<f64> = domain
        .cells()
        .iter()
        .map(|&c| hd * crate::linalg::norm(g.at(c)))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `Σ hᵈ (g·u + λ/2 |u − h|²)`.
pub fn lower_order_energy(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    u.check_compatible(&spec.domain)?;
    if u.channels() != spec.n() {
        return Err(shape_err(spec.n(), u.channels()));
    }
    let hd = spec.domain.cell_volume();
    let n = spec.n();
    let terms: Vec<f64> = spec
        .domain
        .cells()
        .iter()
        .map(|&c| {
            let lam = spec.lambda.get(0, c);
            let mut acc = 0.0;
            for r in 0..n {
                let ur = u.get(r, c);
                let diff = ur - spec.h.get(r, c);
                acc += spec.g.get(r, c) * ur + 0.5 * lam * diff * diff;
            }
            hd * acc
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Per-term breakdown of the relaxed energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub bulk: f64,
    pub boundary: f64,
    pub lower_order: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.bulk + self.boundary + self.lower_order
    }
}

/// Bulk, boundary-penalty and lower-order parts of the relaxed energy.
pub fn energy_parts(spec: &ProblemSpec, u: &Field) -> Result<EnergyParts> {
    let dom = &spec.domain;
    u.check_finite(dom)?;
    if u.channels() != spec.n() {
        return Err(shape_err(spec.n(), u.channels()));
    }
    let n = spec.n();
    let d = dom.dim();
    let hd = dom.cell_volume();
    let grad = discrete_gradient(dom, u)?;
    let f = &spec.integrand;
    let bulk_terms: Vec<f64> = dom
        .cells()
        .par_iter()
        .map(|&c| hd * f.model().value(&dom.center(c)[..d], grad.at(c)))
        .collect();
    let faces = dom.boundary_faces();
    let bterms: Vec<f64> = (0..faces.len())
        .into_par_iter()
        .map(|b| {
            let face = &faces[b];
            let a: Vec<f64> = (0..n)
                .map(|r| spec.u0[b * n + r] - u.get(r, face.cell))
                .collect();
            let xi = MatrixArg::rank_one(&a, &face.normal[..d]);
            f.model()
                .recession_value(&face.point[..d], xi.as_slice())
                .map(|v| face.weight * v)
        })
        .collect::<Result<_>>()?;
    Ok(EnergyParts {
        bulk: pairwise_sum(&bulk_terms),
        boundary: pairwise_sum(&bterms),
        lower_order: lower_order_energy(spec, u)?,
    })
}

/// `Σ hᵈ f(x, Gu) + Σ_b w_b f^∞(y_b, (u₀ − u_c)⊗ν_b) + lower order`.
pub fn relaxed_energy(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(energy_parts(spec, u)?.total())
}

/// `|⟨u, div z⟩ + ⟨z, Gu⟩ − Σ_b w_b ⟨u_c, ζ_b⟩|` with cell-measure weights.
pub fn gauss_green_residual(domain: &GridDomain, u: &Field, z: &DualField) -> Result<f64> {
    let (lhs, rhs) = gauss_green_terms(domain, u, z)?;
    Ok((lhs - rhs).abs())
}

/// The two sides `(⟨u, div z⟩ + ⟨z, Gu⟩, Σ_b w_b ⟨u_c, ζ_b⟩)`.
pub fn gauss_green_terms(domain: &GridDomain, u: &Field, z: &DualField) -> Result<(f64, f64)> {
    if u.channels() != z.channels() {
        return Err(shape_err(z.channels(), u.channels()));
    }
    let n = u.channels();
    let hd = domain.cell_volume();
    let div = discrete_divergence(domain, z)?;
    let grad = discrete_gradient(domain, u)?;
    let cell_terms: Vec<f64> = domain
        .cells()
        .iter()
        .map(|&c| {
            let mut acc = 0.0;
            for r in 0..n {
                acc += u.get(r, c) * div.get(r, c);
            }
            acc += crate::linalg::dot(grad.at(c), z.at(c));
            hd * acc
        })
        .collect();
    let bterms: Vec<f64> = domain
        .boundary_faces()
        .iter()
        .enumerate()
        .map(|(b, face)| {
            face.weight
                * (0..n)
                    .map(|r| u.get(r, face.cell) * z.boundary[b * n + r])
                    .sum::<f64>()
        })
        .collect();
    Ok((pairwise_sum(&cell_terms), pairwise_sum(&bterms)))
}

/// Pointwise `T_b(u) = min(b, max(u, −b))` of a scalar field.
pub fn truncate(u: &Field, b: f64) -> Result<Field> {
    if u.channels() != 1 {
        return Err(Error::Unsupported(
            "truncation of vector-valued fields".into(),
        ));
    }
    if b.is_nan() || b < 0.0 {
        return Err(Error::InvalidParameter(format!("truncation level {b} < 0")));
    }
    let mut out = u.clone();
    out.data.iter_mut().for_each(|v| *v = v.clamp(-b, b));
    Ok(out)
}

/// Truncate a vector of boundary samples.
pub fn truncate_values(values: &[f64], b: f64) -> Vec<f64> {
    values.iter().map(|v| v.clamp(-b, b)).collect()
}
