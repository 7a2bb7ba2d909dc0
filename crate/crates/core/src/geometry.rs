//! Analytic shapes, masked cell grids with staggered boundary faces, and the
//! generalized boundary mean curvature.
//!
//! Cells are indexed row-major, `flat = i·ny + j`, with `i` along x. A face of
//! cell `c` along axis `k` on side `s = ±1` is a boundary face when `c` is
//! inside and its neighbour `c + s·e_k` is outside (or off the grid).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::convex::{Integrand, MatrixArg};
use crate::error::{Error, Result};

/// Analytic domains with closed-form signed distance (negative inside).
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Disk {
        r: f64,
    },
    Annulus {
        r_in: f64,
        r_out: f64,
    },
    Rectangle {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    Interval {
        a: f64,
        b: f64,
    },
    /// Ball in ℝ³ centered at the origin; curvature queries only.
    Ball3 {
        r: f64,
    },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            Shape::Ball3 { .. } => 3,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disk { r } | Shape::Ball3 { r } => r > 0.0 && r.is_finite(),
            Shape::Annulus { r_in, r_out } => r_in > 0.0 && r_in < r_out && r_out.is_finite(),
            Shape::Rectangle { x0, x1, y0, y1 } => x0 < x1 && y0 < y1,
            Shape::Interval { a, b } => a < b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("degenerate shape {self}")))
        }
    }

    /// `𝔡̃(y)`: negative inside, zero on the boundary.
    pub fn signed_distance(&self, y: &[f64]) -> f64 {
        match *self {
            Shape::Disk { r } | Shape::Ball3 { r } => radius(y) - r,
            Shape::Annulus { r_in, r_out } => {
                let rr = radius(y);
                (rr - r_out).max(r_in - rr)
            }
            Shape::Rectangle { x0, x1, y0, y1 } => {
                let qx = (x0 - y[0]).max(y[0] - x1);
                let qy = (y0 - y[1]).max(y[1] - y1);
                if qx <= 0.0 && qy <= 0.0 {
                    qx.max(qy)
                } else {
                    (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt()
                }
            }
            Shape::Interval { a, b } => (a - y[0]).max(y[0] - b),
        }
    }

    /// `∇𝔡̃(y)`, a unit vector away from the medial set.
    pub fn sd_gradient(&self, y: &[f64]) -> Vec<f64> {
        match *self {
            Shape::Disk { .. } | Shape::Ball3 { .. } => radial_unit(y),
            Shape::Annulus { r_in, r_out } => {
                let rr = radius(y);
                let u = radial_unit(y);
                if rr - r_out >= r_in - rr {
                    u
                } else {
                    u.iter().map(|v| -v).collect()
                }
            }
            Shape::Rectangle { x0, x1, y0, y1 } => {
                let (dx, sx) = if x0 - y[0] > y[0] - x1 {
                    (x0 - y[0], -1.0)
                } else {
                    (y[0] - x1, 1.0)
                };
                let (dy, sy) = if y0 - y[1] > y[1] - y1 {
                    (y0 - y[1], -1.0)
                } else {
                    (y[1] - y1, 1.0)
                };
                if dx > 0.0 && dy > 0.0 {
                    let n = (dx * dx + dy * dy).sqrt();
                    vec![sx * dx / n, sy * dy / n]
                } else if dx >= dy {
                    vec![sx, 0.0]
                } else {
                    vec![0.0, sy]
                }
            }
            Shape::Interval { a, b } => {
                if a - y[0] > y[0] - b {
                    vec![-1.0]
                } else {
                    vec![1.0]
                }
            }
        }
    }

    /// Connected boundary component containing the boundary point `y`.
    pub fn boundary_component(&self, y: &[f64]) -> usize {
        match *self {
            Shape::Annulus { r_in, r_out } => usize::from(radius(y) < 0.5 * (r_in + r_out)),
            Shape::Interval { a, b } => usize::from(y[0] > 0.5 * (a + b)),
            _ => 0,
        }
    }

    /// Axis-aligned box `(x0, x1, y0, y1)`; `y` extent is `(0, 0)` in 1D.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Disk { r } | Shape::Ball3 { r } => (-r, r, -r, r),
            Shape::Annulus { r_out, .. } => (-r_out, r_out, -r_out, r_out),
            Shape::Rectangle { x0, x1, y0, y1 } => (x0, x1, y0, y1),
            Shape::Interval { a, b } => (a, b, 0.0, 0.0),
        }
    }

    pub fn diameter(&self) -> f64 {
        let (x0, x1, y0, y1) = self.bounds();
        match self {
            Shape::Ball3 { r } => 2.0 * r,
            _ => ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt(),
        }
    }

    /// Lebesgue measure of the shape.
    pub fn volume(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Shape::Disk { r } => PI * r * r,
            Shape::Annulus { r_in, r_out } => PI * (r_out * r_out - r_in * r_in),
            Shape::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
            Shape::Interval { a, b } => b - a,
            Shape::Ball3 { r } => 4.0 / 3.0 * PI * r.powi(3),
        }
    }

    /// A uniformly distributed interior point.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            Shape::Interval { a, b } => vec![rng.gen_range(a..b)],
            Shape::Ball3 { r } => loop {
                let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-r..r)).collect();
                if radius(&p) < r {
                    return p;
                }
            },
            _ => {
                let (x0, x1, y0, y1) = self.bounds();
                loop {
                    let p = vec![rng.gen_range(x0..x1), rng.gen_range(y0..y1)];
                    if self.signed_distance(&p) < 0.0 {
                        return p;
                    }
                }
            }
        }
    }

    /// Deterministic boundary quadrature with about `count` nodes: points,
    /// outward normals and weights summing to the boundary measure.
    pub fn boundary_quadrature(&self, count: usize) -> Vec<QuadratureNode> {
        use std::f64::consts::PI;
        let count = count.max(8);
        let circle = |r: f64, k: usize, outward: f64, out: &mut Vec<QuadratureNode>| {
            for i in 0..k {
                let t = 2.0 * PI * (i as f64 + 0.5) / k as f64;
                let (s, c) = t.sin_cos();
                out.push(QuadratureNode {
                    point: vec![r * c, r * s],
                    normal: vec![outward * c, outward * s],
                    weight: 2.0 * PI * r / k as f64,
                });
            }
        };
        let mut out = Vec::with_capacity(count);
        match *self {
            Shape::Disk { r } => circle(r, count, 1.0, &mut out),
            Shape::Annulus { r_in, r_out } => {
                let k_in = ((count as f64 * r_in / (r_in + r_out)).round() as usize).max(4);
                circle(r_out, count.saturating_sub(k_in).max(4), 1.0, &mut out);
                circle(r_in, k_in, -1.0, &mut out);
            }
            Shape::Rectangle { x0, x1, y0, y1 } => {
                let per = (x1 - x0 + y1 - y0) * 2.0 / count as f64;
                let edges = [
                    ([x0, y0], [x1, y0], [0.0, -1.0]),
                    ([x1, y0], [x1, y1], [1.0, 0.0]),
                    ([x1, y1], [x0, y1], [0.0, 1.0]),
                    ([x0, y1], [x0, y0], [-1.0, 0.0]),
                ];
                for (a, b, nrm) in edges {
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    let k = ((len / per).round() as usize).max(1);
                    for i in 0..k {
                        let t = (i as f64 + 0.5) / k as f64;
                        out.push(QuadratureNode {
                            point: vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                            normal: nrm.to_vec(),
                            weight: len / k as f64,
                        });
                    }
                }
            }
            Shape::Interval { a, b } => {
                for (p, nrm) in [(a, -1.0), (b, 1.0)] {
                    out.push(QuadratureNode {
                        point: vec![p],
                        normal: vec![nrm],
                        weight: 1.0,
                    });
                }
            }
            Shape::Ball3 { r } => {
                // Fibonacci sphere.
                let golden = PI * (3.0 - 5f64.sqrt());
                for i in 0..count {
                    let zc = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let rho = (1.0 - zc * zc).sqrt();
                    let (s, c) = (golden * i as f64).sin_cos();
                    let nrm = vec![rho * c, rho * s, zc];
                    out.push(QuadratureNode {
                        point: nrm.iter().map(|v| r * v).collect(),
                        normal: nrm,
                        weight: 4.0 * PI * r * r / count as f64,
                    });
                }
            }
        }
        out
    }
}

/// A boundary quadrature node of an analytic shape.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureNode {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    pub weight: f64,
}

fn radius(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn radial_unit(y: &[f64]) -> Vec<f64> {
    let r = radius(y);
    if r == 0.0 {
        let mut e = vec![0.0; y.len()];
        e[0] = 1.0;
        return e;
    }
    y.iter().map(|v| v / r).collect()
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Disk { r } => write!(f, "disk {r}"),
            Shape::Annulus { r_in, r_out } => write!(f, "annulus {r_in} {r_out}"),
            Shape::Rectangle { x0, x1, y0, y1 } => write!(f, "rect {x0} {x1} {y0} {y1}"),
            Shape::Interval { a, b } => write!(f, "interval {a} {b}"),
            Shape::Ball3 { r } => write!(f, "ball3 {r}"),
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    /// `disk r`, `annulus r_in r_out`, `rect [x0 x1 y0 y1]`, `interval a b`,
    /// `ball3 r`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind = parts
            .next()
            .ok_or_else(|| Error::Format("empty shape".into()))?;
        let nums: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad number '{p}' in shape '{s}'")))
            })
            .collect::<Result<_>>()?;
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::Format(format!(
                    "shape '{kind}' takes {k} parameters, got {}",
                    nums.len()
                )))
            }
        };
        let shape = match kind {
            "disk" => {
                want(1)?;
                Shape::Disk { r: nums[0] }
            }
            "annulus" => {
                want(2)?;
                Shape::Annulus {
                    r_in: nums[0],
                    r_out: nums[1],
                }
            }
            "rect" | "rectangle" => {
                if nums.is_empty() {
                    Shape::Rectangle {
                        x0: 0.0,
                        x1: 1.0,
                        y0: 0.0,
                        y1: 1.0,
                    }
                } else {
                    want(4)?;
                    Shape::Rectangle {
                        x0: nums[0],
                        x1: nums[1],
                        y0: nums[2],
                        y1: nums[3],
                    }
                }
            }
            "interval" => {
                want(2)?;
                Shape::Interval {
                    a: nums[0],
                    b: nums[1],
                }
            }
            "ball3" => {
                want(1)?;
                Shape::Ball3 { r: nums[0] }
            }
            other => return Err(Error::Format(format!("unknown shape '{other}'"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// A boundary face of the staggered grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace {
    /// Flat index of the adjacent inside cell.
    pub cell: usize,
    /// Face axis `k`.
    pub axis: usize,
    /// `+1` for the forward face of `cell`, `−1` for the backward face.
    pub side: i8,
    /// Projection of the face center onto `∂Ω`.
    pub point: [f64; 2],
    /// Outward unit normal at `point`.
    pub normal: [f64; 2],
    /// `h^{d−1} |ν · e_k|`.
    pub weight: f64,
    pub component: usize,
}

/// Masked square-cell grid over an analytic shape.
#[derive(Clone, Debug)]
pub struct GridDomain {
    shape: Shape,
    dim: usize,
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    inside: Vec<bool>,
    cells: Vec<usize>,
    faces: Vec<BoundaryFace>,
    face_offsets: Vec<usize>,
    face_index: Vec<usize>,
}

/// Minimum accepted resolution.
pub const MIN_RESOLUTION: usize = 16;

/// Build the grid for `shape` with `nx` cells along x.
pub fn build_domain(shape: Shape, nx: usize) -> Result<GridDomain> {
    shape.validate()?;
    if nx < MIN_RESOLUTION {
        return Err(Error::Resolution(format!(
            "resolution {nx} below minimum {MIN_RESOLUTION}"
        )));
    }
    if shape.dim() == 3 {
        return Err(Error::Unsupported(
            "three-dimensional shapes support curvature queries only".into(),
        ));
    }
    let dim = shape.dim();
    let (x0, x1, y0, y1) = shape.bounds();
    let h = (x1 - x0) / nx as f64;
    let ny = if dim == 1 {
        1
    } else {
        let m = (y1 - y0) / h;
        let ny = m.round();
        if (m - ny).abs() > 1e-9 * m.max(1.0) || ny < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "bounds {}x{} do not admit square cells with nx = {nx}",
                x1 - x0,
                y1 - y0
            )));
        }
        ny as usize
    };
    let origin = [x0, if dim == 1 { 0.0 } else { y0 }];
    let mut dom = GridDomain {
        shape,
        dim,
        nx,
        ny,
        h,
        origin,
        inside: vec![false; nx * ny],
        cells: Vec::new(),
        faces: Vec::new(),
        face_offsets: Vec::new(),
        face_index: Vec::new(),
    };
    for i in 0..nx {
        for j in 0..ny {
            let c = dom.center(i * ny + j);
            if dom.shape.signed_distance(&c[..dim]) < 0.0 {
                dom.inside[i * ny + j] = true;
                dom.cells.push(i * ny + j);
            }
        }
    }
    if dom.cells.is_empty() {
        return Err(Error::Resolution(format!(
            "no cell centers inside {} at nx = {nx}",
            dom.shape
        )));
    }
    let hd1 = h.powi(dim as i32 - 1);
    let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    for &c in &dom.cells {
        for axis in 0..dim {
            for side in [-1i8, 1] {
                if dom.neighbor(c, axis, side).is_some() {
                    continue;
                }
                let mut fc = dom.center(c);
                fc[axis] += 0.5 * side as f64 * h;
                let y = &fc[..dim];
                let sd = dom.shape.signed_distance(y);
                let gsd = dom.shape.sd_gradient(y);
                let mut point = [0.0; 2];
                for k in 0..dim {
                    point[k] = y[k] - sd * gsd[k];
                }
                let nu = dom.shape.sd_gradient(&point[..dim]);
                let mut normal = [0.0; 2];
                normal[..dim].copy_from_slice(&nu);
                let weight = hd1 * normal[axis].abs();
                let component = dom.shape.boundary_component(&point[..dim]);
                per_cell[c].push(dom.faces.len());
                dom.faces.push(BoundaryFace {
                    cell: c,
                    axis,
                    side,
                    point,
                    normal,
                    weight,
                    component,
                });
            }
        }
    }
    dom.face_offsets.push(0);
    for list in &per_cell {
        dom.face_index.extend_from_slice(list);
        dom.face_offsets.push(dom.face_index.len());
    }
    Ok(dom)
}

impl GridDomain {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_cells_total(&self) -> usize {
        self.nx * self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `h^d`, the cell measure.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn is_inside(&self, flat: usize) -> bool {
        self.inside[flat]
    }

    pub fn inside_mask(&self) -> &[bool] {
        &self.inside
    }

    /// Flat indices of inside cells, ascending.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    /// Indices into [`Self::boundary_faces`] adjacent to cell `flat`.
    pub fn faces_of_cell(&self, flat: usize) -> &[usize] {
        &self.face_index[self.face_offsets[flat]..self.face_offsets[flat + 1]]
    }

    pub fn ij(&self, flat: usize) -> (usize, usize) {
        (flat / self.ny, flat % self.ny)
    }

    /// Cell center; the second coordinate is 0 in 1D.
    pub fn center(&self, flat: usize) -> [f64; 2] {
        let (i, j) = self.ij(flat);
        let y = if self.dim == 1 {
            0.0
        } else {
            self.origin[1] + (j as f64 + 0.5) * self.h
        };
        [self.origin[0] + (i as f64 + 0.5) * self.h, y]
    }

    /// Inside neighbour across the face `(axis, side)`, if any.
    pub fn neighbor(&self, flat: usize, axis: usize, side: i8) -> Option<usize> {
        let (i, j) = self.ij(flat);
        let (ni, nj) = match (axis, side) {
            (0, 1) if i + 1 < self.nx => (i + 1, j),
            (0, -1) if i > 0 => (i - 1, j),
            (1, 1) if j + 1 < self.ny => (i, j + 1),
            (1, -1) if j > 0 => (i, j - 1),
            _ => return None,
        };
        let n = ni * self.ny + nj;
        self.inside[n].then_some(n)
    }

    /// Number of boundary components present among the faces.
    pub fn n_components(&self) -> usize {
        self.faces
            .iter()
            .map(|f| f.component + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn total_boundary_weight(&self) -> f64 {
        self.faces.iter().map(|f| f.weight).sum()
    }

    pub fn component_weight(&self, component: usize) -> f64 {
        self.faces
            .iter()
            .filter(|f| f.component == component)
            .map(|f| f.weight)
            .sum()
    }

    pub fn signed_distance(&self, y: &[f64]) -> f64 {
        self.shape.signed_distance(&y[..self.dim])
    }
}

/// Outward unit normal at a point within `h` of `∂Ω`.
pub fn boundary_normal(domain: &GridDomain, point: &[f64]) -> Result<Vec<f64>> {
    let d = domain.dim();
    if point.len() < d {
        return Err(crate::error::shape_err(d, point.len()));
    }
    let y = &point[..d];
    let sd = domain.shape().signed_distance(y);
    if sd.abs() > domain.h() {
        return Err(Error::Domain(format!(
            "point is {:.3e} from the boundary, more than h = {:.3e}",
            sd.abs(),
            domain.h()
        )));
    }
    Ok(domain.shape().sd_gradient(y))
}

/// Finite-difference step used for curvature on a grid.
pub fn curvature_step(domain: &GridDomain) -> f64 {
    domain.h().max(1e-4 * domain.shape().diameter())
}

/// Generalized mean curvature at a boundary point of an analytic shape,
/// with finite-difference step `h_fd`.
pub fn shape_mean_curvature(f: &Integrand, shape: &Shape, x: &[f64], h_fd: f64) -> Result<f64> {
    if f.n_rows() != 1 {
        return Err(Error::Unsupported(
            "generalized mean curvature needs a scalar integrand".into(),
        ));
    }
    let d = shape.dim();
    if f.n_cols() != d || x.len() < d {
        return Err(crate::error::shape_err(d, f.n_cols().min(x.len())));
    }
    let x = &x[..d];
    let sd = shape.signed_distance(x);
    let tol = h_fd.max(1e-9 * shape.diameter());
    if sd.abs() > tol {
        return Err(Error::Domain(format!(
            "point is {:.3e} from the boundary",
            sd.abs()
        )));
    }
    // div_y D_ξ f^∞(y, s·ν(y)) by central differences.
    let div = |s: f64| -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..d {
            let mut vals = [0.0; 2];
            for (slot, sign) in [(0usize, 1.0), (1usize, -1.0)] {
                let mut y = x.to_vec();
                y[k] += sign * h_fd;
                let nu: Vec<f64> = shape.sd_gradient(&y).iter().map(|v| s * v).collect();
                let g = f.recession_gradient(&y, &MatrixArg::vector(&nu))?;
                vals[slot] = g.as_slice()[k];
            }
            acc += (vals[0] - vals[1]) / (2.0 * h_fd);
        }
        Ok(acc)
    };
    Ok((-div(-1.0)?).min(div(1.0)?))
}

/// Generalized mean curvature at a boundary point of the domain.
pub fn generalized_mean_curvature(f: &Integrand, domain: &GridDomain, x: &[f64]) -> Result<f64> {
    shape_mean_curvature(f, domain.shape(), x, curvature_step(domain))
}

/// Per-face `H(y_b) − sup_{|center − y_b| ≤ 3h} |g| − c`.
pub fn curvature_condition_margin(
    f: &Integrand,
    g: &dyn Fn(&[f64]) -> f64,
    domain: &GridDomain,
    c: f64,
) -> Result<Vec<f64>> {
    let d = domain.dim();
    let radius = 3.0 * domain.h();
    let mut out = Vec::with_capacity(domain.boundary_faces().len());
    for face in domain.boundary_faces() {
        let hf = generalized_mean_curvature(f, domain, &face.point[..d])?;
        let mut gsup: f64 = 0.0;
        for &cell in domain.cells() {
            let ctr = domain.center(cell);
            let dist: f64 = (0..d)
                .map(|k| (ctr[k] - face.point[k]).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist <= radius {
                gsup = gsup.max(g(&ctr[..d]).abs());
            }
        }
        out.push(hf - gsup - c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{make_tv, make_weighted_tv};
    use std::sync::Arc;

    #[test]
    fn parses_shapes() {
        assert_eq!("disk 1.0".parse::<Shape>().unwrap(), Shape::Disk { r: 1.0 });
        assert_eq!(
            "rect".parse::<Shape>().unwrap(),
            Shape::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0
            }
        );
        assert!("annulus 1 0.5".parse::<Shape>().is_err());
        assert!("blob 1".parse::<Shape>().is_err());
    }

    #[test]
    fn interval_has_two_faces() {
        let dom = build_domain(Shape::Interval { a: 0.0, b: 1.0 }, 64).unwrap();
        let faces = dom.boundary_faces();
        assert_eq!(faces.len(), 2);
        let mut normals: Vec<f64> = faces.iter().map(|f| f.normal[0]).collect();
        normals.sort_by(f64::total_cmp);
        assert_eq!(normals, vec![-1.0, 1.0]);
        assert!(faces.iter().all(|f| f.weight == 1.0));
    }

    #[test]
    fn disk_weights_approach_perimeter() {
        let dom = build_domain(Shape::Disk { r: 1.0 }, 64).unwrap();
        let n = dom.boundary_faces().len() as f64;
        assert!((4.0 * 64.0 * 0.7..=4.0 * 64.0 * 1.3).contains(&n), "{n}");
        let w = dom.total_boundary_weight();
        assert!((w / (2.0 * std::f64::consts::PI) - 1.0).abs() < 0.05, "{w}");
    }

    #[test]
    fn annulus_has_two_loops() {
        let dom = build_domain(
            Shape::Annulus {
                r_in: 0.5,
                r_out: 1.0,
            },
            128,
        )
        .unwrap();
        assert_eq!(dom.n_components(), 2);
        let pi = std::f64::consts::PI;
        assert!((dom.component_weight(1) / pi - 1.0).abs() < 0.05);
        assert!((dom.component_weight(0) / (2.0 * pi) - 1.0).abs() < 0.05);
    }

    #[test]
    fn normals_are_outward_unit() {
        let dom = build_domain(
            Shape::Annulus {
                r_in: 0.5,
                r_out: 1.0,
            },
            64,
        )
        .unwrap();
        for f in dom.boundary_faces() {
            let n = (f.normal[0].powi(2) + f.normal[1].powi(2)).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            let p = [
                f.point[0] + 0.5 * dom.h() * f.normal[0],
                f.point[1] + 0.5 * dom.h() * f.normal[1],
            ];
            assert!(dom.signed_distance(&p) > 0.0);
        }
    }

    #[test]
    fn boundary_normal_examples() {
        let dom = build_domain(Shape::Disk { r: 1.0 }, 64).unwrap();
        assert_eq!(boundary_normal(&dom, &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let n = boundary_normal(&dom, &[s, s]).unwrap();
        assert!((n[0] - s).abs() < 1e-15 && (n[1] - s).abs() < 1e-15);
        assert!(matches!(
            boundary_normal(&dom, &[0.0, 0.0]),
            Err(Error::Domain(_))
        ));
        let ann = build_domain(
            Shape::Annulus {
                r_in: 0.5,
                r_out: 1.0,
            },
            64,
        )
        .unwrap();
        assert_eq!(boundary_normal(&ann, &[0.5, 0.0]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn curvature_of_circle_and_sphere() {
        let tv = make_tv(1, 2).unwrap();
        let dom = build_domain(Shape::Disk { r: 1.0 }, 64).unwrap();
        let hf = generalized_mean_curvature(&tv, &dom, &[0.0, 1.0]).unwrap();
        assert!((hf - 1.0).abs() <= 5.0 * curvature_step(&dom), "{hf}");
        let tv3 = make_tv(1, 3).unwrap();
        let h3 =
            shape_mean_curvature(&tv3, &Shape::Ball3 { r: 1.0 }, &[0.0, 0.0, 1.0], 1e-3).unwrap();
        assert!((h3 - 2.0).abs() < 1e-5, "{h3}");
    }

    #[test]
    fn inner_annulus_curvature_is_negative() {
        let tv = make_tv(1, 2).unwrap();
        let dom = build_domain(
            Shape::Annulus {
                r_in: 1.0,
                r_out: 2.0,
            },
            128,
        )
        .unwrap();
        let hf = generalized_mean_curvature(&tv, &dom, &[1.0, 0.0]).unwrap();
        assert!((hf + 1.0).abs() < 1e-3, "{hf}");
        let m = curvature_condition_margin(&tv, &|_| 0.0, &dom, 0.0).unwrap();
        for (f, v) in dom.boundary_faces().iter().zip(&m) {
            if f.component == 1 {
                assert!(*v < 0.0);
            } else {
                assert!(*v > 0.0);
            }
        }
    }

    #[test]
    fn weighted_curvature_on_interval() {
        let f = make_weighted_tv(Arc::new(|x: &[f64]| 1.0 + x[0]), 1.0, 2.0, 1).unwrap();
        let dom = build_domain(Shape::Interval { a: 0.0, b: 1.0 }, 64).unwrap();
        let hf = generalized_mean_curvature(&f, &dom, &[1.0]).unwrap();
        assert!((hf - 1.0).abs() < 1e-9, "{hf}");
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(matches!(
            build_domain(Shape::Disk { r: 1.0 }, 8),
            Err(Error::Resolution(_))
        ));
    }
}
