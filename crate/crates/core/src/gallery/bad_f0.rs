//! The norm `f₀` on `ℝ^{2×2}` whose gradient is degenerate along
//! `(ae₁+be₂)⊗(ae₁+be₂)`, defined as the dual of
//! `f₀*(x) = √(Ax·x + 𝔮(x))`.
//!
//! Matrices are row-major `[x₁₁, x₁₂, x₂₁, x₂₂]`, `x_ij` the `e_i⊗e_j`
//! component.

use nalgebra::{Matrix4, Vector4};

use crate::convex::{Integrand, IntegrandModel};
use crate::error::{Error, Result};
use crate::linalg::norm;

pub const NEWTON_ITERS: usize = 50;
pub const NEWTON_TOL: f64 = 1e-12;

const I11: usize = 0;
const I21: usize = 2;
const I22: usize = 3;

/// Cut-off `χ(ρ)` of the sphere distance `ρ` to `±e₁⊗e₁`: `1` for
/// `ρ ≤ inner`, `(1 − s²)³` with `s = (ρ − inner)/(outer − inner)` between,
/// `0` beyond `outer`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    fn eval(&self, rho: f64) -> (f64, f64) {
        if rho <= self.inner {
            (1.0, 0.0)
        } else if rho >= self.outer {
            (0.0, 0.0)
        } else {
            let w = self.outer - self.inner;
            let s = (rho - self.inner) / w;
            let b = 1.0 - s * s;
            (b * b * b, -6.0 * s * b * b / w)
        }
    }
}

/// Parameters and evaluators of `f₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct BadF0 {
    pub eps: f64,
    pub q_cutoff: Cutoff,
    /// Row-major `4×4` matrix of `x ↦ Ax` in the component order above.
    pub a: [[f64; 4]; 4],
}

/// `A x = x + x₂₁e₁⊗e₂ + x₁₂e₂⊗e₁ + x₁₂e₁⊗e₂`.
fn a_matrix() -> [[f64; 4]; 4] {
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 2.0, 1.0, 0.0],
        [0.0, 1.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn mat(a: &[[f64; 4]; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[i][j])
}

/// First rung of the calibration ladder in [`empirical_eps_max`].
pub const EPS_LADDER_START: f64 = 1e-2;

/// Largest accepted `eps`: the value [`empirical_eps_max`] returns.
pub const EPS_MAX: f64 = 5e-3;

/// Construct `f₀` for `0 < eps ≤ EPS_MAX`.
pub fn build_bad_f0(eps: f64) -> Result<BadF0> {
    if !(eps > 0.0 && eps <= EPS_MAX) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, {EPS_MAX}] for f0* to stay convex, got {eps}"
        )));
    }
    Ok(unchecked(eps))
}

fn unchecked(eps: f64) -> BadF0 {
    BadF0 {
        eps,
        q_cutoff: Cutoff {
            inner: 10.0 * eps,
            outer: 20.0 * eps,
        },
        a: a_matrix(),
    }
}

impl BadF0 {
    pub fn apply_a(&self, x: &[f64]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, row) in self.a.iter().enumerate() {
            out[i] = row.iter().zip(x).map(|(a, v)| a * v).sum();
        }
        out
    }

    /// `𝔮(x)` and `D𝔮(x)`.
    pub fn q_with_grad(&self, x: &[f64]) -> (f64, [f64; 4]) {
        let r = norm(x);
        if r == 0.0 || x[I11] == 0.0 {
            return (0.0, [0.0; 4]);
        }
        let c = (x[I11].abs() / r).min(1.0);
        let rho = (2.0 - 2.0 * c).max(0.0).sqrt();
        let (chi, dchi) = self.q_cutoff.eval(rho);
        if chi == 0.0 {
            return (0.0, [0.0; 4]);
        }
        let (x11, x21, x22) = (x[I11], x[I21], x[I22]);
        let p = 2.0 * x21 * x21 * x22 / x11;
        let mut dp = [0.0; 4];
        dp[I11] = -p / x11;
        dp[I21] = 4.0 * x21 * x22 / x11;
        dp[I22] = 2.0 * x21 * x21 / x11;
        let mut grad = [0.0; 4];
        for j in 0..4 {
            grad[j] = chi * dp[j];
        }
        if dchi != 0.0 {
            // dρ/dc = −1/ρ, dc/dx = sgn(x₁₁)e₁₁/r − |x₁₁|x/r³.
            let mut dc = [0.0; 4];
            for j in 0..4 {
                dc[j] = -x[I11].abs() * x[j] / (r * r * r);
            }
            dc[I11] += x[I11].signum() / r;
            for j in 0..4 {
                grad[j] += p * dchi * (-1.0 / rho) * dc[j];
            }
        }
        (chi * p, grad)
    }

    pub fn q(&self, x: &[f64]) -> f64 {
        self.q_with_grad(x).0
    }

    /// `f₀*(x)`.
    pub fn dual_norm(&self, x: &[f64]) -> f64 {
        let ax = self.apply_a(x);
        let quad: f64 = ax.iter().zip(x).map(|(a, v)| a * v).sum();
        (quad + self.q(x)).max(0.0).sqrt()
    }

    /// `D(½ f₀*²)(y) = Ay + ½D𝔮(y)`.
    pub fn dual_half_sq_grad(&self, y: &[f64]) -> [f64; 4] {
        let ay = self.apply_a(y);
        let (_, dq) = self.q_with_grad(y);
        let mut out = [0.0; 4];
        for j in 0..4 {
            out[j] = ay[j] + 0.5 * dq[j];
        }
        out
    }

    fn jacobian(&self, y: &[f64; 4]) -> Matrix4<f64> {
        let step = 1e-6 * norm(y).max(1e-300);
        let mut jac = Matrix4::zeros();
        for k in 0..4 {
            let mut yp = *y;
            let mut ym = *y;
            yp[k] += step;
            ym[k] -= step;
            let (fp, fm) = (self.dual_half_sq_grad(&yp), self.dual_half_sq_grad(&ym));
            for i in 0..4 {
                jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        jac
    }

    /// Solve `D(½f₀*²)(y) = ξ`, i.e. `y = D(½f₀²)(ξ)`, by damped Newton
    /// from `A⁻¹ξ`.
    pub fn invert_gradient(&self, xi: &[f64]) -> Result<[f64; 4]> {
        let scale = norm(xi);
        if scale == 0.0 {
            return Ok([0.0; 4]);
        }
        let target = Vector4::from_column_slice(xi);
        let ainv = mat(&self.a)
            .try_inverse()
            .ok_or_else(|| Error::NewtonFailure("A is singular".into()))?;
        let seed = ainv * target;
        let mut y = [seed[0], seed[1], seed[2], seed[3]];
        let resid = |y: &[f64; 4]| -> Vector4<f64> {
            Vector4::from_column_slice(&self.dual_half_sq_grad(y)) - target
        };
        let mut r = resid(&y);
        for _ in 0..NEWTON_ITERS {
            if r.norm() <= NEWTON_TOL * scale {
                return Ok(y);
            }
            let step = self
                .jacobian(&y)
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::NewtonFailure("singular Jacobian".into()))?;
            let mut t = 1.0;
            loop {
                let trial = [
                    y[0] - t * step[0],
                    y[1] - t * step[1],
                    y[2] - t * step[2],
                    y[3] - t * step[3],
                ];
                let rt = resid(&trial);
                if rt.norm() < r.norm() || t < 1e-6 {
                    y = trial;
                    r = rt;
                    break;
                }
                t *= 0.5;
            }
        }
        if r.norm() <= 1e3 * NEWTON_TOL * scale {
            return Ok(y);
        }
        Err(Error::NewtonFailure(format!(
            "gradient inversion stalled at residual {:.3e} (eps = {}); try a smaller eps",
            r.norm() / scale,
            self.eps
        )))
    }

    /// `f₀(ξ) = f₀*(y)` with `y = D(½f₀²)(ξ)`, and `D f₀(ξ) = y / f₀(ξ)`.
    pub fn value_and_grad(&self, xi: &[f64]) -> Result<(f64, [f64; 4])> {
        match self.invert_gradient(xi) {
            Ok(y) => {
                let v = self.dual_norm(&y);
                if v == 0.0 {
                    return Ok((0.0, [0.0; 4]));
                }
                Ok((v, [y[0] / v, y[1] / v, y[2] / v, y[3] / v]))
            }
            Err(e) => self.projected_ascent(xi).ok_or(e),
        }
    }

    /// Fallback `sup {⟨ξ, x*⟩ : f₀*(x*) ≤ 1}` by normalized gradient ascent.
    fn projected_ascent(&self, xi: &[f64]) -> Option<(f64, [f64; 4])> {
        let mut x = [xi[0], xi[1], xi[2], xi[3]];
        let mut best = (f64::NEG_INFINITY, x);
        for _ in 0..5000 {
            let s = self.dual_norm(&x);
            if s == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|v| *v /= s);
            let val: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
            if val > best.0 {
                best = (val, x);
            }
            let g = self.dual_half_sq_grad(&x);
            let along: f64 = g.iter().zip(xi).map(|(a, b)| a * b).sum();
            let gg: f64 = g.iter().map(|v| v * v).sum();
            for j in 0..4 {
                x[j] += 0.1 * (xi[j] - along / gg * g[j]);
            }
        }
        Some(best).filter(|b| b.0.is_finite())
    }

    pub fn value(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.value_and_grad(xi)?.0)
    }

    pub fn gradient(&self, xi: &[f64]) -> Result<[f64; 4]> {
        Ok(self.value_and_grad(xi)?.1)
    }

    /// Smallest eigenvalue of `D²(½f₀*²)` over sampled points near
    /// `e₁⊗e₁`, where the correction `𝔮` is active.
    pub fn convexity_margin(&self, samples: usize) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst = f64::INFINITY;
        for k in 0..samples {
            let spread = self.q_cutoff.outer * 1.2;
            let mut y = [1.0, 0.0, 0.0, 0.0];
            for v in y.iter_mut().skip(1) {
                *v = rng.gen_range(-spread..spread);
            }
            if k % 2 == 1 {
                y[I11] = -1.0;
            }
            let jac = self.jacobian(&y);
            let sym = (jac + jac.transpose()) * 0.5;
            let ev = sym.symmetric_eigenvalues().min();
            worst = worst.min(ev);
        }
        worst
    }
}

/// Largest `eps` in the ladder `EPS_LADDER_START·2⁻ᵏ` whose `f₀*²` passes
/// the sampled convexity test.
pub fn empirical_eps_max(samples: usize) -> Option<f64> {
    (0..8)
        .map(|k| EPS_LADDER_START / 2f64.powi(k))
        .find(|&eps| unchecked(eps).convexity_margin(samples) > 0.0)
}

/// `‖Df₀(X) − a(ae₁+be₂)⊗e₁ / f₀(X)‖` with `X = (ae₁+be₂)⊗(ae₁+be₂)`,
/// for `|b| < (ε/2)|a|`.
pub fn check_bad_grad(f0: &BadF0, a: f64, b: f64) -> Result<f64> {
    if !(a != 0.0 && b.abs() < 0.5 * f0.eps * a.abs()) {
        return Err(Error::Domain(format!(
            "(a, b) = ({a}, {b}) lies outside the cone |b| < (eps/2)|a|"
        )));
    }
    let x = [a * a, a * b, b * a, b * b];
    let (v, g) = f0.value_and_grad(&x)?;
    let expect = [a * a / v, 0.0, a * b / v, 0.0];
    let diff: Vec<f64> = g.iter().zip(&expect).map(|(p, q)| p - q).collect();
    Ok(norm(&diff))
}

/// Growth constant of `f₀`: `f₀*` lies between `0.61|x|` and `1.62|x|`
/// up to the `O(ε³)` correction.
const BAD_F0_GROWTH: f64 = 2.0;

/// Slack on the dual-ball indicator `f₀* ≤ 1`.
const DUAL_SLACK: f64 = 1e-9;

impl IntegrandModel for BadF0 {
    fn name(&self) -> String {
        "bad_f0".into()
    }

    fn dims(&self) -> (usize, usize) {
        (2, 2)
    }

    fn growth_constant(&self) -> f64 {
        BAD_F0_GROWTH
    }

    fn homogeneous(&self) -> bool {
        true
    }

    fn value(&self, _x: &[f64], xi: &[f64]) -> f64 {
        BadF0::value(self, xi).unwrap_or(f64::NAN)
    }

    fn gradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        if norm(xi) == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        out.copy_from_slice(&BadF0::gradient(self, xi)?);
        Ok(())
    }

    fn recession_value(&self, _x: &[f64], xi: &[f64]) -> Result<f64> {
        BadF0::value(self, xi)
    }

    fn recession_gradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        IntegrandModel::gradient(self, x, xi, out)
    }

    fn conjugate(&self, _x: &[f64], z: &[f64]) -> f64 {
        if self.dual_norm(z) <= 1.0 + DUAL_SLACK {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn dual_range_excess(&self, _x: &[f64], z: &[f64]) -> f64 {
        self.dual_norm(z) - 1.0
    }

    /// Projection onto `{f₀* ≤ 1}`: tangential steps on the dual unit
    /// sphere until `ζ − y` is normal to it.
    fn prox_conjugate(&self, _x: &[f64], zeta: &[f64], _tau: f64, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(zeta);
        if self.dual_norm(zeta) <= 1.0 {
            return Ok(());
        }
        let mut y = [zeta[0], zeta[1], zeta[2], zeta[3]];
        for _ in 0..200 {
            let s = self.dual_norm(&y);
            y.iter_mut().for_each(|v| *v /= s);
            let g = self.dual_half_sq_grad(&y);
            let gg: f64 = g.iter().map(|v| v * v).sum();
            let mut diff = [0.0; 4];
            for j in 0..4 {
                diff[j] = zeta[j] - y[j];
            }
            let along: f64 = diff.iter().zip(&g).map(|(a, b)| a * b).sum();
            let mut tangential = 0.0;
            for j in 0..4 {
                diff[j] -= along / gg * g[j];
                tangential += diff[j] * diff[j];
            }
            if tangential.sqrt() <= 1e-13 * norm(zeta) {
                break;
            }
            for j in 0..4 {
                y[j] += 0.5 * diff[j];
            }
        }
        let s = self.dual_norm(&y);
        for j in 0..4 {
            out[j] = y[j] / s;
        }
        Ok(())
    }
}

/// `f₀` as an integrand.
pub fn bad_f0_integrand(f0: &BadF0) -> Result<Integrand> {
    Integrand::from_model(f0.clone())
}
