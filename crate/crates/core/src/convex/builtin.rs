//! Built-in integrands with closed-form recession, conjugate and prox.

use std::sync::Arc;

use super::{DualSection, Integrand, IntegrandModel, SpatialFn};
use crate::error::{Error, Result};
use crate::linalg::norm;

/// Slack accepted on dual-ball membership before reporting `+∞`.
const BALL_SLACK: f64 = 1e-12;

fn unit_gradient(xi: &[f64], out: &mut [f64], scale: f64) -> Result<()> {
    let r = norm(xi);
    if r == 0.0 {
        return Err(Error::SingularPoint("gradient of a norm at xi = 0".into()));
    }
    for (o, v) in out.iter_mut().zip(xi) {
        *o = scale * v / r;
    }
    Ok(())
}

fn project_ball(zeta: &[f64], radius: f64, out: &mut [f64]) {
    let r = norm(zeta);
    let s = if r > radius { radius / r } else { 1.0 };
    for (o, v) in out.iter_mut().zip(zeta) {
        *o = s * v;
    }
}

fn ball_section(n: usize, radius: f64) -> DualSection {
    if n == 1 {
        DualSection::Interval {
            lo: -radius,
            hi: radius,
        }
    } else {
        DualSection::Ball { radius }
    }
}

/// `f(ξ) = |ξ|` (Frobenius norm) on `ℝ^{n×d}`.
#[derive(Clone, Debug)]
pub struct TvModel {
    pub n: usize,
    pub d: usize,
}

impl IntegrandModel for TvModel {
    fn name(&self) -> String {
        if self.n == 1 {
            "tv".into()
        } else {
            format!("vector_tv:{}", self.n)
        }
    }
    fn dims(&self) -> (usize, usize) {
        (self.n, self.d)
    }
    fn growth_constant(&self) -> f64 {
        1.0
    }
    fn homogeneous(&self) -> bool {
        true
    }
    fn value(&self, _x: &[f64], xi: &[f64]) -> f64 {
        norm(xi)
    }
    fn gradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        unit_gradient(xi, out, 1.0)
    }
    fn recession_value(&self, _x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(norm(xi))
    }
    fn recession_gradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        unit_gradient(xi, out, 1.0)
    }
    fn conjugate(&self, _x: &[f64], z: &[f64]) -> f64 {
        if norm(z) <= 1.0 + BALL_SLACK {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn dual_range_excess(&self, _x: &[f64], z: &[f64]) -> f64 {
        norm(z) - 1.0
    }
    fn prox_conjugate(&self, _x: &[f64], zeta: &[f64], _tau: f64, out: &mut [f64]) -> Result<()> {
        project_ball(zeta, 1.0, out);
        Ok(())
    }
    fn fenchel_constant(&self) -> Option<f64> {
        Some(0.5)
    }
    fn dual_section(&self, _x: &[f64], _nu: &[f64]) -> Result<DualSection> {
        Ok(ball_section(self.n, 1.0))
    }
}

/// `f(x, ξ) = a(x)|ξ|` with `a_min ≤ a ≤ a_max`, `a_min > 0`.
#[derive(Clone)]
pub struct WeightedTvModel {
    pub weight: SpatialFn,
    pub a_min: f64,
    pub a_max: f64,
    pub d: usize,
}

impl IntegrandModel for WeightedTvModel {
    fn name(&self) -> String {
        "weighted_tv".into()
    }
    fn dims(&self) -> (usize, usize) {
        (1, self.d)
    }
    fn growth_constant(&self) -> f64 {
        self.a_max.max(1.0 / self.a_min)
    }
    fn x_dependent(&self) -> bool {
        true
    }
    fn homogeneous(&self) -> bool {
        true
    }
    fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        (self.weight)(x) * norm(xi)
    }
    fn gradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        unit_gradient(xi, out, (self.weight)(x))
    }
    fn recession_value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(self.value(x, xi))
    }
    fn recession_gradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        self.gradient(x, xi, out)
    }
    fn conjugate(&self, x: &[f64], z: &[f64]) -> f64 {
        if norm(z) <= (self.weight)(x) * (1.0 + BALL_SLACK) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn dual_range_excess(&self, x: &[f64], z: &[f64]) -> f64 {
        norm(z) - (self.weight)(x)
    }
    fn prox_conjugate(&self, x: &[f64], zeta: &[f64], _tau: f64, out: &mut [f64]) -> Result<()> {
        project_ball(zeta, (self.weight)(x), out);
        Ok(())
    }
    fn fenchel_constant(&self) -> Option<f64> {
        Some(0.5 / self.a_max)
    }
    fn dual_section(&self, x: &[f64], _nu: &[f64]) -> Result<DualSection> {
        Ok(ball_section(1, (self.weight)(x)))
    }
}

/// `f(ξ) = √(1 + |ξ|²)`.
#[derive(Clone, Debug)]
pub struct AreaModel {
    pub d: usize,
}

/// Sampled infimum of the Fenchel ratio for the strictly convex built-ins
/// is 1/2; the calibrated constant keeps a 10% margin.
const CALIBRATED_FENCHEL: f64 = 0.45;

impl IntegrandModel for AreaModel {
    fn name(&self) -> String {
        "area".into()
    }
    fn dims(&self) -> (usize, usize) {
        (1, self.d)
    }
    fn growth_constant(&self) -> f64 {
        1.0
    }
    fn value(&self, _x: &[f64], xi: &[f64]) -> f64 {
        let r = norm(xi);
        (1.0 + r * r).sqrt()
    }
    fn gradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        let r = norm(xi);
        let s = (1.0 + r * r).sqrt();
        for (o, v) in out.iter_mut().zip(xi) {
            *o = v / s;
        }
        Ok(())
    }
    fn recession_value(&self, _x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(norm(xi))
    }
    fn recession_gradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        unit_gradient(xi, out, 1.0)
    }
    fn conjugate(&self, _x: &[f64], z: &[f64]) -> f64 {
        let r = norm(z);
        if r <= 1.0 + BALL_SLACK {
            -(1.0 - r.min(1.0).powi(2)).sqrt()
        } else {
            f64::INFINITY
        }
    }
    fn dual_range_excess(&self, _x: &[f64], z: &[f64]) -> f64 {
        norm(z) - 1.0
    }
    fn prox_conjugate(&self, _x: &[f64], zeta: &[f64], tau: f64, out: &mut [f64]) -> Result<()> {
        let rho = norm(zeta);
        if rho == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return Ok(());
        }
        let r = area_prox_radius(rho, tau)?;
        for (o, v) in out.iter_mut().zip(zeta) {
            *o = r * v / rho;
        }
        Ok(())
    }
    fn fenchel_constant(&self) -> Option<f64> {
        Some(CALIBRATED_FENCHEL)
    }
    fn dual_section(&self, _x: &[f64], _nu: &[f64]) -> Result<DualSection> {
        Ok(ball_section(1, 1.0))
    }
}

/// Root `r ∈ [0, 1)` of `r + τ r / √(1 − r²) = ρ`, safeguarded Newton.
pub(crate) fn area_prox_radius(rho: f64, tau: f64) -> Result<f64> {
    let phi = |r: f64| r + tau * r / (1.0 - r * r).sqrt() - rho;
    let mut lo = 0.0_f64;
    let mut hi = rho.min(1.0);
    let mut r = 0.5 * hi;
    for _ in 0..100 {
        let f = phi(r);
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let s = 1.0 - r * r;
        let df = 1.0 + tau / (s * s.sqrt());
        let mut next = r - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-15 * (1.0 + r) || hi - lo <= 1e-16 {
            return Ok(next);
        }
        r = next;
    }
    Err(Error::ProxFailure { iterations: 100 })
}

/// Convex envelope of `min(|ξ|², |ξ|)`: `|ξ|²` for `|ξ| ≤ 1/2`, `|ξ| − 1/4`
/// beyond.
#[derive(Clone, Debug)]
pub struct HenckyModel {
    pub d: usize,
}

impl IntegrandModel for HenckyModel {
    fn name(&self) -> String {
        "hencky".into()
    }
    fn dims(&self) -> (usize, usize) {
        (1, self.d)
    }
    fn growth_constant(&self) -> f64 {
        1.0
    }
    fn value(&self, _x: &[f64], xi: &[f64]) -> f64 {
        let r = norm(xi);
        if r <= 0.5 {
            r * r
        } else {
            r - 0.25
        }
    }
    fn gradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        let r = norm(xi);
        let s = if r <= 0.5 { 2.0 } else { 1.0 / r };
        for (o, v) in out.iter_mut().zip(xi) {
            *o = s * v;
        }
        Ok(())
    }
    fn recession_value(&self, _x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(norm(xi))
    }
    fn recession_gradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        unit_gradient(xi, out, 1.0)
    }
    fn conjugate(&self, _x: &[f64], z: &[f64]) -> f64 {
        let r = norm(z);
        if r <= 1.0 + BALL_SLACK {
            0.25 * r.min(1.0).powi(2)
        } else {
            f64::INFINITY
        }
    }
    fn dual_range_excess(&self, _x: &[f64], z: &[f64]) -> f64 {
        norm(z) - 1.0
    }
    fn prox_conjugate(&self, _x: &[f64], zeta: &[f64], tau: f64, out: &mut [f64]) -> Result<()> {
        let rho = norm(zeta);
        let r = (rho / (1.0 + 0.5 * tau)).min(1.0);
        let s = if rho > 0.0 { r / rho } else { 0.0 };
        for (o, v) in out.iter_mut().zip(zeta) {
            *o = s * v;
        }
        Ok(())
    }
    fn fenchel_constant(&self) -> Option<f64> {
        Some(CALIBRATED_FENCHEL)
    }
    fn dual_section(&self, _x: &[f64], _nu: &[f64]) -> Result<DualSection> {
        Ok(ball_section(1, 1.0))
    }
}

fn wrap<M: IntegrandModel + 'static>(m: M) -> Integrand {
    Integrand::new(Arc::new(m)).expect("built-in integrands carry valid constants")
}

/// Total variation `|ξ|` for `n × d` gradients.
pub fn make_tv(n: usize, d: usize) -> Result<Integrand> {
    check_dims(n, d)?;
    Ok(wrap(TvModel { n, d }))
}

/// Vectorial total variation with the Frobenius norm.
pub fn make_vector_tv(n: usize, d: usize) -> Result<Integrand> {
    make_tv(n, d)
}

/// Area integrand `√(1 + |ξ|²)`.
pub fn make_area(d: usize) -> Result<Integrand> {
    check_dims(1, d)?;
    Ok(wrap(AreaModel { d }))
}

/// Hencky-type integrand (see [`HenckyModel`]).
pub fn make_hencky(d: usize) -> Result<Integrand> {
    check_dims(1, d)?;
    Ok(wrap(HenckyModel { d }))
}

/// Weighted total variation `a(x)|ξ|`; `a` must satisfy
/// `0 < a_min ≤ a(x) ≤ a_max` on the region of interest.
pub fn make_weighted_tv(weight: SpatialFn, a_min: f64, a_max: f64, d: usize) -> Result<Integrand> {
    check_dims(1, d)?;
    if !(a_min > 0.0 && a_max >= a_min && a_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weight bounds must satisfy 0 < a_min <= a_max, got [{a_min}, {a_max}]"
        )));
    }
    Ok(wrap(WeightedTvModel {
        weight,
        a_min,
        a_max,
        d,
    }))
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 || d > 3 {
        return Err(Error::InvalidParameter(format!(
            "unsupported integrand dimensions n = {n}, d = {d}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::MatrixArg;

    #[test]
    fn closed_form_values() {
        let tv = make_tv(1, 2).unwrap();
        let area = make_area(2).unwrap();
        let hencky = make_hencky(2).unwrap();
        let x = [0.0, 0.0];
        assert_eq!(tv.eval(&x, &MatrixArg::vector(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(area.eval(&x, &MatrixArg::vector(&[0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(
            hencky.eval(&x, &MatrixArg::vector(&[0.5, 0.0])).unwrap(),
            0.25
        );
        assert_eq!(
            area.recession(&x, &MatrixArg::vector(&[3.0, 4.0])).unwrap(),
            5.0
        );
    }

    #[test]
    fn tv_gradient_is_singular_at_zero() {
        let tv = make_tv(1, 2).unwrap();
        let err = tv.gradient(&[0.0, 0.0], &MatrixArg::vector(&[0.0, 0.0]));
        assert!(matches!(err, Err(Error::SingularPoint(_))));
    }

    #[test]
    fn area_prox_solves_radial_equation() {
        let r = area_prox_radius(2.0, 1.0).unwrap();
        assert!((r + r / (1.0 - r * r).sqrt() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_tv_scales_gradient() {
        let f = make_weighted_tv(Arc::new(|_: &[f64]| 2.0), 2.0, 2.0, 2).unwrap();
        let g = f
            .recession_gradient(&[0.3, 0.1], &MatrixArg::vector(&[1.0, 0.0]))
            .unwrap();
        assert_eq!(g.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(make_tv(0, 2).is_err());
        assert!(make_weighted_tv(Arc::new(|_: &[f64]| 1.0), 0.0, 1.0, 1).is_err());
    }
}
