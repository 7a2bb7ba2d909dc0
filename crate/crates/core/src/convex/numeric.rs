//! Numerical fallbacks for integrands that only supply value and gradient.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DualSection, IntegrandModel, SECTION_DIRECTIONS};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, unit_directions};

/// Relative tolerance between successive Richardson extrapolants.
pub const RICHARDSON_TOL: f64 = 1e-6;

/// `lim f(tξ)/t` by Richardson extrapolation at `t ∈ {2^8, 2^10, 2^12}`.
///
/// `value_at(t)` must return `f(x, tξ)`.
pub fn richardson_recession(value_at: impl Fn(f64) -> f64, xi: &[f64]) -> Result<f64> {
    if norm(xi) == 0.0 {
        return Ok(0.0);
    }
    let ts = [256.0, 1024.0, 4096.0];
    let phi: Vec<f64> = ts.iter().map(|&t| value_at(t) / t).collect();
    let first = (4.0 * phi[1] - phi[0]) / 3.0;
    let second = (4.0 * phi[2] - phi[1]) / 3.0;
    if !(first.is_finite() && second.is_finite()) {
        return Err(Error::NonConvergentRecession { first, second });
    }
    let scale = second.abs().max(first.abs()).max(1e-300);
    if (first - second).abs() > RICHARDSON_TOL * scale {
        return Err(Error::NonConvergentRecession { first, second });
    }
    Ok(second)
}

/// Central differences of the recession function, corrected so that the
/// Euler identity `⟨g, ξ⟩ = f^∞(ξ)` holds exactly.
pub fn recession_gradient_fd<M: IntegrandModel + ?Sized>(
    m: &M,
    x: &[f64],
    xi: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let r = norm(xi);
    if r == 0.0 {
        return Err(Error::SingularPoint("recession gradient at xi = 0".into()));
    }
    let delta = 1e-5 * r;
    let mut probe = xi.to_vec();
    for k in 0..xi.len() {
        probe[k] = xi[k] + delta;
        let fp = m.recession_value(x, &probe)?;
        probe[k] = xi[k] - delta;
        let fm = m.recession_value(x, &probe)?;
        probe[k] = xi[k];
        out[k] = (fp - fm) / (2.0 * delta);
    }
    let f0 = m.recession_value(x, xi)?;
    let fix = (f0 - dot(out, xi)) / (r * r);
    for (o, v) in out.iter_mut().zip(xi) {
        *o += fix * v;
    }
    Ok(())
}

/// `sup_e ⟨z, e⟩ − f^∞(x, e)` over sampled unit directions `e`, including
/// `z/|z|`.
pub fn support_excess<M: IntegrandModel + ?Sized>(m: &M, x: &[f64], z: &[f64]) -> f64 {
    let dim = z.len();
    let mut best = f64::NEG_INFINITY;
    let zn = norm(z);
    let mut dirs = unit_directions(dim, 64);
    if zn > 0.0 {
        dirs.push(z.iter().map(|v| v / zn).collect());
    }
    for e in &dirs {
        if let Ok(fe) = m.recession_value(x, e) {
            best = best.max(dot(z, e) - fe);
        }
    }
    best
}

/// `sup_ξ ⟨z, ξ⟩ − f(x, ξ)` by projected gradient ascent from 8 starts.
pub fn conjugate_ascent<M: IntegrandModel + ?Sized>(m: &M, x: &[f64], z: &[f64]) -> f64 {
    let dim = z.len();
    if m.dual_range_excess(x, z) > 1e-9 * (1.0 + norm(z)) {
        return f64::INFINITY;
    }
    const RADIUS: f64 = 1e6;
    let psi = |xi: &[f64]| dot(z, xi) - m.value(x, xi);
    let mut best = psi(&vec![0.0; dim]);
    let mut grad = vec![0.0; dim];
    for start in unit_directions(dim, 8) {
        let mut xi = start;
        let mut val = psi(&xi);
        let mut alpha = 1.0;
        for _ in 0..200 {
            if m.gradient(x, &xi, &mut grad).is_err() {
                break;
            }
            let dir: Vec<f64> = z.iter().zip(&grad).map(|(a, b)| a - b).collect();
            if norm(&dir) < 1e-14 {
                break;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let mut cand: Vec<f64> = xi.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                let cn = norm(&cand);
                if cn > RADIUS {
                    cand.iter_mut().for_each(|v| *v *= RADIUS / cn);
                }
                let cv = psi(&cand);
                if cv > val {
                    xi = cand;
                    val = cv;
                    accepted = true;
                    alpha *= 2.0;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.max(val);
    }
    best
}

/// Moreau identity `prox_{τf*}(ζ) = ζ − τ prox_{f/τ}(ζ/τ)` with a damped
/// Newton inner solve.
pub fn prox_conjugate_moreau<M: IntegrandModel + ?Sized>(
    m: &M,
    x: &[f64],
    zeta: &[f64],
    tau: f64,
    out: &mut [f64],
) -> Result<()> {
    const MAX_ITER: usize = 100;
    let dim = zeta.len();
    let v: Vec<f64> = zeta.iter().map(|a| a / tau).collect();
    // minimize φ(ξ) = f(ξ) + τ/2 |ξ − v|²
    let phi = |xi: &[f64]| {
        let d2: f64 = xi.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        m.value(x, xi) + 0.5 * tau * d2
    };
    let mut xi = v.clone();
    let mut g = vec![0.0; dim];
    let mut gp = vec![0.0; dim];
    let mut converged = false;
    for _ in 0..MAX_ITER {
        m.gradient(x, &xi, &mut g)?;
        let grad: Vec<f64> = (0..dim).map(|k| g[k] + tau * (xi[k] - v[k])).collect();
        let gnorm = norm(&grad);
        if gnorm <= 1e-11 * (1.0 + norm(zeta)) {
            converged = true;
            break;
        }
        let h = 1e-6 * (1.0 + norm(&xi));
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        let mut probe = xi.clone();
        for j in 0..dim {
            probe[j] = xi[j] + h;
            m.gradient(x, &probe, &mut gp)?;
            probe[j] = xi[j];
            for i in 0..dim {
                hess[(i, j)] = (gp[i] - g[i]) / h;
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5 + DMatrix::identity(dim, dim) * tau;
        let rhs = DVector::from_vec(grad.clone());
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => rhs.clone() / tau,
        };
        let current = phi(&xi);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = (0..dim).map(|k| xi[k] - t * step[k]).collect();
            if phi(&cand) <= current - 1e-4 * t * dot(&grad, step.as_slice()) {
                xi = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // Accept the gradient-consistent fixed point if the line search
            // stalls at roundoff level.
            if gnorm <= 1e-8 * (1.0 + norm(zeta)) {
                converged = true;
            }
            break;
        }
    }
    if !converged {
        return Err(Error::ProxFailure {
            iterations: MAX_ITER,
        });
    }
    for k in 0..dim {
        out[k] = zeta[k] - tau * xi[k];
    }
    Ok(())
}

/// The boundary dual section from the support function `a ↦ f^∞(x, a⊗ν)`.
pub fn sampled_section<M: IntegrandModel + ?Sized>(
    m: &M,
    x: &[f64],
    nu: &[f64],
) -> Result<DualSection> {
    let (n, _) = m.dims();
    let support = |a: &[f64]| {
        let xi = super::MatrixArg::rank_one(a, nu);
        m.recession_value(x, xi.as_slice())
    };
    match n {
        1 => Ok(DualSection::Interval {
            lo: -support(&[-1.0])?,
            hi: support(&[1.0])?,
        }),
        2 => {
            let dirs = unit_directions(2, SECTION_DIRECTIONS);
            let mut lines = Vec::with_capacity(dirs.len());
            for a in &dirs {
                lines.push((a[0], a[1], support(a)?));
            }
            Ok(DualSection::Polygon {
                vertices: polygon_from_halfplanes(&lines),
            })
        }
        _ => Err(Error::Unsupported(format!(
            "boundary dual section for n = {n} requires an analytic section"
        ))),
    }
}

fn intersect(l1: (f64, f64, f64), l2: (f64, f64, f64)) -> Option<[f64; 2]> {
    let det = l1.0 * l2.1 - l1.1 * l2.0;
    if det.abs() < 1e-14 {
        return None;
    }
    Some([
        (l1.2 * l2.1 - l1.1 * l2.2) / det,
        (l1.0 * l2.2 - l1.2 * l2.0) / det,
    ])
}

fn feasible(lines: &[(f64, f64, f64)], p: [f64; 2]) -> bool {
    lines
        .iter()
        .all(|l| l.0 * p[0] + l.1 * p[1] <= l.2 + 1e-10 * (1.0 + l.2.abs()))
}

/// Vertices (counter-clockwise) of `∩ {p : a·p ≤ c}` for angularly sorted
/// half-planes `(a₀, a₁, c)`.
pub(crate) fn polygon_from_halfplanes(lines: &[(f64, f64, f64)]) -> Vec<[f64; 2]> {
    let k = lines.len();
    let mut pts: Vec<[f64; 2]> = (0..k)
        .filter_map(|i| intersect(lines[i], lines[(i + 1) % k]))
        .collect();
    if !pts.iter().all(|&p| feasible(lines, p)) {
        pts.clear();
        for i in 0..k {
            for j in i + 1..k {
                if let Some(p) = intersect(lines[i], lines[j]) {
                    if feasible(lines, p) {
                        pts.push(p);
                    }
                }
            }
        }
    }
    let c = pts
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
    let c = [
        c[0] / pts.len().max(1) as f64,
        c[1] / pts.len().max(1) as f64,
    ];
    pts.sort_by(|p, q| {
        let a = (p[1] - c[1]).atan2(p[0] - c[0]);
        let b = (q[1] - c[1]).atan2(q[0] - c[0]);
        a.total_cmp(&b)
    });
    pts.dedup_by(|p, q| (p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
    pts
}

/// `0.9 · min ⟨D−v*, v⟩ / |D−v*|²` over random unit `v` and dual-range `v*`.
pub fn calibrate_fenchel<M: IntegrandModel + ?Sized>(m: &M, samples: usize) -> Result<f64> {
    let (n, d) = m.dims();
    let dim = n * d;
    let x = vec![0.0; d];
    let mut rng = ChaCha8Rng::seed_from_u64(0xfe_c4e1);
    let unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim)
                .map(|_| crate::linalg::rand_distr_like::gaussian(rng))
                .collect();
            let r = norm(&v);
            if r > 1e-8 {
                return v.iter().map(|a| a / r).collect();
            }
        }
    };
    let mut ratio_min = f64::INFINITY;
    let mut dv = vec![0.0; dim];
    let mut dw = vec![0.0; dim];
    for _ in 0..samples {
        let v = unit(&mut rng);
        let w = unit(&mut rng);
        m.recession_gradient(&x, &v, &mut dv)?;
        m.recession_gradient(&x, &w, &mut dw)?;
        let s: f64 = if rng.gen_bool(0.3) { 1.0 } else { rng.gen() };
        let diff: Vec<f64> = dv.iter().zip(&dw).map(|(a, b)| a - s * b).collect();
        let d2 = dot(&diff, &diff);
        if d2 < 1e-18 {
            continue;
        }
        ratio_min = ratio_min.min(dot(&diff, &v) / d2);
    }
    if !(ratio_min.is_finite() && ratio_min > 0.0) {
        return Err(Error::Domain(format!(
            "no positive Fenchel constant found (sampled ratio {ratio_min:.3e})"
        )));
    }
    Ok(0.9 * ratio_min)
}
