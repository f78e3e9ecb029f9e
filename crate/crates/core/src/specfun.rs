//! Gamma-family special functions and central / noncentral chi-square numerics.
//!
//! The noncentral chi-square here is the Poisson mixture
//! `G_{m,λ}(x) = Σ_j e^{-λ} λ^j / j! · G_{m+2j}(x)`, whose mean is `m + 2λ`.
//! That is the convention in which the limiting moment generating function of
//! the test statistics reads `(1-2t)^{-m/2} exp{2tλ/(1-2t)}`.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const MAX_ITER: usize = 10_000;

/// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma function `P(a, x)`.
///
/// Series for `x < a + 1`, Lentz continued fraction for the complement otherwise.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() || x.is_nan() {
        return Err(Error::domain(format!("gamma_p: need a > 0, got a={a}, x={x}")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        Ok(1.0 - gamma_q_fraction(a, x)?)
    }
}

fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

fn gamma_p_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            return Ok((sum * log_prefactor(a, x).exp()).min(1.0));
        }
    }
    Err(Error::Numerical(format!("gamma_p series did not converge (a={a}, x={x})")))
}

fn gamma_q_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            return Ok((log_prefactor(a, x).exp() * h).clamp(0.0, 1.0));
        }
    }
    Err(Error::Numerical(format!("gamma_q continued fraction did not converge (a={a}, x={x})")))
}

/// Degrees of freedom and noncentrality of a (possibly noncentral) chi-square law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareParams {
    df: f64,
    noncentrality: f64,
}

impl ChiSquareParams {
    pub fn new(df: f64, noncentrality: f64) -> Result<Self> {
        if !(df > 0.0) || !df.is_finite() {
            return Err(Error::domain(format!("degrees of freedom must be positive and finite, got {df}")));
        }
        if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
            return Err(Error::domain(format!("noncentrality must be finite and >= 0, got {noncentrality}")));
        }
        Ok(Self { df, noncentrality })
    }

    pub fn central(df: f64) -> Result<Self> {
        Self::new(df, 0.0)
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn noncentrality(&self) -> f64 {
        self.noncentrality
    }
}

fn check_df(df: f64) -> Result<()> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::domain(format!("degrees of freedom must be positive and finite, got {df}")));
    }
    Ok(())
}

/// CDF of the central chi-square distribution, `P(df/2, x/2)`.
pub fn central_chisq_cdf(df: f64, x: f64) -> Result<f64> {
    check_df(df)?;
    if x.is_nan() {
        return Err(Error::domain("chi-square cdf evaluated at NaN"));
    }
    gamma_p(0.5 * df, 0.5 * x)
}

/// Density of the central chi-square distribution; zero for `x <= 0` except
/// the `df = 2` boundary value 1/2.
pub fn central_chisq_pdf(df: f64, x: f64) -> Result<f64> {
    check_df(df)?;
    if x.is_nan() {
        return Err(Error::domain("chi-square pdf evaluated at NaN"));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    let a = 0.5 * df;
    if x == 0.0 {
        return Ok(match a.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 0.5,
            _ => 0.0,
        });
    }
    Ok(((a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)).exp())
}

/// Truncation target for the Poisson tail mass dropped on each side of the mode.
const POISSON_TAIL: f64 = 1e-15;

/// Sum `Σ_j w_j f(j)` over Poisson(λ) weights `w_j`, starting at the mode and
/// walking outward until the bound on the remaining tail mass falls below
/// [`POISSON_TAIL`]. `f` must be bounded by 1 in absolute value for the bound
/// to control the truncation error directly.
fn poisson_mixture<F>(lambda: f64, mut f: F) -> Result<f64>
where
    F: FnMut(u64) -> Result<f64>,
{
    if lambda == 0.0 {
        return f(0);
    }
    let mode = lambda.floor() as u64;
    let log_weight = |j: u64| -lambda + j as f64 * lambda.ln() - ln_gamma(j as f64 + 1.0);
    let w_mode = log_weight(mode).exp();

    let mut sum = w_mode * f(mode)?;

    // Upward: w_{j+1}/w_j = λ/(j+1) < 1 beyond the mode.
    let mut w = w_mode;
    let mut j = mode;
    loop {
        j += 1;
        w *= lambda / j as f64;
        sum += w * f(j)?;
        let r = lambda / (j + 1) as f64;
        if w * r / (1.0 - r) < POISSON_TAIL {
            break;
        }
    }

    // Downward: w_{j-1}/w_j = j/λ <= 1 below the mode.
    let mut w = w_mode;
    let mut j = mode;
    while j > 0 {
        w *= j as f64 / lambda;
        j -= 1;
        sum += w * f(j)?;
        let r = j as f64 / lambda;
        if r < 1.0 && w * r / (1.0 - r) < POISSON_TAIL {
            break;
        }
    }
    Ok(sum)
}

/// CDF `G_{m,λ}(x)` of the noncentral chi-square (Poisson-λ mixture convention).
pub fn nc_chisq_cdf(params: ChiSquareParams, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("noncentral chi-square cdf evaluated at NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let df = params.df;
    let cdf = poisson_mixture(params.noncentrality, |j| central_chisq_cdf(df + 2.0 * j as f64, x))?;
    Ok(cdf.clamp(0.0, 1.0))
}

/// Density `g_{m,λ}(x)` of the noncentral chi-square, for `x > 0`.
pub fn nc_chisq_pdf(params: ChiSquareParams, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("noncentral chi-square pdf needs finite x > 0, got {x}")));
    }
    let df = params.df;
    poisson_mixture(params.noncentrality, |j| central_chisq_pdf(df + 2.0 * j as f64, x))
}

/// Quantile of the central chi-square distribution by bracketed bisection.
///
/// Bisection runs until the bracket cannot be split further in double
/// precision, which is tighter than any fixed width on the bracket.
pub fn central_chisq_quantile(df: f64, p: f64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("quantile probability must lie in (0,1), got {p}")));
    }
    let mut lo = 0.0_f64;
    let mut hi = df + 10.0 * (2.0 * df).sqrt() + 50.0;
    while central_chisq_cdf(df, hi)? < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..2_000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if central_chisq_cdf(df, mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick whichever endpoint lands closer in probability.
    let (flo, fhi) = (central_chisq_cdf(df, lo)?, central_chisq_cdf(df, hi)?);
    Ok(if (flo - p).abs() <= (fhi - p).abs() { lo } else { hi })
}
