//! Likelihood ratio, Wald, score and gradient statistics for `H0: θ = θ0`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expfam::{check_theta, mean_sufficient, mle_from_mean, ExponentialFamily};
use crate::numeric::NeumaierSum;
use crate::specfun::central_chisq_cdf;

/// The four tests, numbered as `S1..S4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Lr = 1,
    Wald = 2,
    Score = 3,
    Gradient = 4,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [TestKind::Lr, TestKind::Wald, TestKind::Score, TestKind::Gradient];

    /// Zero-based position in per-test arrays.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn label(self) -> &'static str {
        match self {
            TestKind::Lr => "lr",
            TestKind::Wald => "wald",
            TestKind::Score => "score",
            TestKind::Gradient => "gradient",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub theta_hat: f64,
    /// `[S1, S2, S3, S4]`.
    pub s: [f64; 4],
    pub p_values: [f64; 4],
    pub n: usize,
    pub d_bar: f64,
}

impl TestResult {
    pub fn statistic(&self, kind: TestKind) -> f64 {
        self.s[kind.index()]
    }
}

/// The four statistics given `θ̂` and `d̄`, without p-values.
///
/// `S1` and `S4` are nonnegative in exact arithmetic; tiny negative values
/// from rounding when `θ̂ ≈ θ0` are flushed to zero.
pub fn statistics_from_mle<M: ExponentialFamily + ?Sized>(
    model: &M,
    theta0: f64,
    theta_hat: f64,
    d_bar: f64,
    n: usize,
) -> [f64; 4] {
    let nf = n as f64;
    let [alpha0, alpha0_1, _] = model.alpha(theta0);
    let [alpha_hat, alpha_hat_1, _] = model.alpha(theta_hat);
    let [beta0, beta0_1, _] = model.beta(theta0);
    let beta_hat_1 = model.beta(theta_hat)[1];
    let score_sum = beta0 + d_bar;

    let s1 = 2.0 * nf * ((model.log_zeta(theta0) - model.log_zeta(theta_hat)) + (alpha0 - alpha_hat) * d_bar);
    let s2 = nf * (theta_hat - theta0).powi(2) * alpha_hat_1 * beta_hat_1;
    let s3 = nf * alpha0_1 * score_sum * score_sum / beta0_1;
    let s4 = nf * (theta0 - theta_hat) * alpha0_1 * score_sum;
    [s1.max(0.0), s2, s3, s4.max(0.0)]
}

/// Compute `θ̂`, the four statistics and their asymptotic χ²₁ p-values.
pub fn compute_statistics<M: ExponentialFamily + ?Sized>(model: &M, data: &[f64], theta0: f64) -> Result<TestResult> {
    check_theta(model, theta0)?;
    let d_bar = mean_sufficient(model, data)?;
    let theta_hat = mle_from_mean(model, d_bar)?;
    let s = statistics_from_mle(model, theta0, theta_hat, d_bar, data.len());
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite test statistic {s:?} (theta_hat = {theta_hat})")));
    }
    let mut p_values = [0.0; 4];
    for (p, &stat) in p_values.iter_mut().zip(&s) {
        *p = 1.0 - central_chisq_cdf(1.0, stat)?;
    }
    Ok(TestResult { theta_hat, s, p_values, n: data.len(), d_bar })
}

/// Independent evaluation through the per-observation log density
/// `t(x; θ) = -log ζ(θ) - α(θ) d(x) + v(x)` and its derivative
/// `t′(x; θ) = -α′(θ){β(θ) + d(x)}`, summed over the sample.
pub fn statistics_via_log_density<M: ExponentialFamily + ?Sized>(
    model: &M,
    data: &[f64],
    theta0: f64,
    theta_hat: f64,
) -> [f64; 4] {
    let t = |x: f64, th: f64| -model.log_zeta(th) - model.alpha(th)[0] * model.d(x) + model.v(x);
    let t1 = |x: f64, th: f64| -model.alpha(th)[1] * (model.beta(th)[0] + model.d(x));
    let nf = data.len() as f64;
    let ll_diff: NeumaierSum = data.iter().map(|&x| t(x, theta_hat) - t(x, theta0)).collect();
    let score: NeumaierSum = data.iter().map(|&x| t1(x, theta0)).collect();
    let u0 = score.total();
    let k = |th: f64| model.alpha(th)[1] * model.beta(th)[1];
    [
        2.0 * ll_diff.total(),
        nf * (theta_hat - theta0).powi(2) * k(theta_hat),
        u0 * u0 / (nf * k(theta0)),
        (theta_hat - theta0) * u0,
    ]
}
