//! Small dense helpers on `f64` slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise summation; deterministic for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Deterministic unit directions in `dim` dimensions.
///
/// For `dim == 2` these are equally spaced on the circle; otherwise they are
/// drawn from a fixed-seed Gaussian and normalized.
pub fn unit_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    use rand_distr_like::gaussian;
    match dim {
        0 => Vec::new(),
        1 => (0..count)
            .map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }])
            .collect(),
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_d1c7 + dim as u64);
            (0..count)
                .map(|_| loop {
                    let v: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
                    let n = norm(&v);
                    if n > 1e-8 {
                        break v.iter().map(|x| x / n).collect();
                    }
                })
                .collect()
        }
    }
}

pub(crate) mod rand_distr_like {
    use rand::Rng;

    /// Standard normal sample via Box-Muller.
    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
