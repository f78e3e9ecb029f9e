//! Exact variate generators used by the catalog samplers.
//!
//! All generators draw only uniforms from the supplied stream, so a sample is
//! a deterministic function of the stream state.

use rand::distributions::Open01;
use rand::{Rng, RngCore};

/// Uniform on the open interval (0, 1).
#[inline]
pub fn uniform_open(rng: &mut dyn RngCore) -> f64 {
    rng.sample(Open01)
}

/// Standard exponential by inversion.
#[inline]
pub fn standard_exponential(rng: &mut dyn RngCore) -> f64 {
    -uniform_open(rng).ln()
}

/// Standard normal by the Marsaglia polar method.
pub fn standard_normal(rng: &mut dyn RngCore) -> f64 {
    loop {
        let u = 2.0 * uniform_open(rng) - 1.0;
        let v = 2.0 * uniform_open(rng) - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Gamma variate with the given shape and unit scale (Marsaglia–Tsang squeeze,
/// with the `U^{1/k}` boost for shapes below one).
pub fn standard_gamma(shape: f64, rng: &mut dyn RngCore) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let g = standard_gamma(shape + 1.0, rng);
        return g * uniform_open(rng).powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = uniform_open(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Inverse Gaussian variate with the given mean and shape
/// (Michael, Schucany and Haas transformation with a uniform correction).
pub fn inverse_gaussian(mean: f64, shape: f64, rng: &mut dyn RngCore) -> f64 {
    let nu = standard_normal(rng);
    let y = nu * nu;
    let my = mean * y;
    let x = mean + mean * my / (2.0 * shape) - mean / (2.0 * shape) * (4.0 * shape * my + my * my).sqrt();
    if uniform_open(rng) <= mean / (mean + x) {
        x
    } else {
        mean * mean / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn normal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..200_000).map(|_| standard_normal(&mut rng)).collect();
        let (m, v) = mean_var(&xs);
        assert!(m.abs() < 4.0 / (xs.len() as f64).sqrt());
        assert!((v - 1.0).abs() < 0.02);
    }

    #[test]
    fn gamma_moments_small_and_large_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &k in &[0.3, 1.0, 2.0, 7.5] {
            let xs: Vec<f64> = (0..200_000).map(|_| standard_gamma(k, &mut rng)).collect();
            let (m, v) = mean_var(&xs);
            let se = (k / xs.len() as f64).sqrt();
            assert!((m - k).abs() < 4.0 * se, "k={k} mean={m}");
            assert!((v / k - 1.0).abs() < 0.05, "k={k} var={v}");
        }
    }

    #[test]
    fn inverse_gaussian_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mu, lam) = (1.5, 2.0);
        let xs: Vec<f64> = (0..200_000).map(|_| inverse_gaussian(mu, lam, &mut rng)).collect();
        let (m, v) = mean_var(&xs);
        let var = mu.powi(3) / lam;
        assert!((m - mu).abs() < 4.0 * (var / xs.len() as f64).sqrt());
        assert!((v / var - 1.0).abs() < 0.05);
    }
}
