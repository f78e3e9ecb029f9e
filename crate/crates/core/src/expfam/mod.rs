//! One-parameter exponential families.
//!
//! A model has density `π(x; θ) = exp{-log ζ(θ) - α(θ) d(x) + v(x)}`. The
//! quantities the tests need are `α` and `β(θ) = ζ′(θ) / {ζ(θ) α′(θ)}` with
//! their first two derivatives: the Fisher information per observation is
//! `K(θ) = α′β′`, the mean of `d(X)` is `-β(θ)`, and the MLE solves
//! `β(θ̂) + d̄ = 0`.

mod catalog;
mod data;
pub mod sampling;

pub use catalog::{catalog_model, parse_fixed, CatalogModel, Family, ModelInfo, CATALOG_NAMES};
pub use data::{parse_data, read_data_file};

use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::roots::brent;

/// An interval of the real line with open or closed endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub const fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub const REAL_LINE: Interval = Interval::open(f64::NEG_INFINITY, f64::INFINITY);
    pub const POSITIVE: Interval = Interval::open(0.0, f64::INFINITY);

    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        let end = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                v.to_string()
            }
        };
        write!(f, "{l}{}, {}{r}", end(self.lo), end(self.hi))
    }
}

/// A one-parameter exponential family with analytically supplied derivatives.
///
/// Implementors provide `α` and `β` with two derivatives each. Models that are
/// more naturally written in terms of `ζ` can obtain `β` from
/// [`beta_from_zeta`].
pub trait ExponentialFamily: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Known constants the model was built with, e.g. `k` for the gamma family.
    fn fixed_params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    /// `[α(θ), α′(θ), α″(θ)]`.
    fn alpha(&self, theta: f64) -> [f64; 3];

    fn log_zeta(&self, theta: f64) -> f64;

    /// `[β(θ), β′(θ), β″(θ)]`.
    fn beta(&self, theta: f64) -> [f64; 3];

    /// Sufficient statistic.
    fn d(&self, x: f64) -> f64;

    /// Carrier term.
    fn v(&self, x: f64) -> f64;

    fn support(&self) -> Interval;

    fn param_space(&self) -> Interval;

    /// Draw `n` i.i.d. observations at `theta`.
    fn sample(&self, theta: f64, n: usize, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Closed-form solution of `β(θ) = -d̄`, when one exists.
    fn mle_closed_form(&self, _d_bar: f64) -> Option<f64> {
        None
    }

    /// A bracket containing the root of `β(θ) + d̄`.
    fn mle_bracket(&self, d_bar: f64) -> Option<(f64, f64)> {
        scan_bracket(self, d_bar)
    }
}

/// Search a coarse grid over the parameter space for a sign change of `β(θ) + d̄`.
fn scan_bracket<M: ExponentialFamily + ?Sized>(model: &M, d_bar: f64) -> Option<(f64, f64)> {
    let ps = model.param_space();
    let grid: Vec<f64> = match (ps.lo.is_finite(), ps.hi.is_finite()) {
        (true, true) => (1..400).map(|i| ps.lo + (ps.hi - ps.lo) * i as f64 / 400.0).collect(),
        (true, false) => (-160..=160).map(|i| ps.lo + 10f64.powf(i as f64 / 10.0)).collect(),
        (false, true) => (-160..=160).rev().map(|i| ps.hi - 10f64.powf(i as f64 / 10.0)).collect(),
        (false, false) => {
            let mut g: Vec<f64> = (-160..=160).rev().map(|i| -(10f64.powf(i as f64 / 10.0))).collect();
            g.push(0.0);
            g.extend((-160..=160).map(|i| 10f64.powf(i as f64 / 10.0)));
            g
        }
    };
    let score = |t: f64| model.beta(t)[0] + d_bar;
    let mut prev: Option<(f64, f64)> = None;
    for t in grid.into_iter().filter(|t| ps.contains(*t)) {
        let s = score(t);
        if !s.is_finite() {
            continue;
        }
        if s == 0.0 {
            return Some((t, t));
        }
        if let Some((pt, ps_)) = prev {
            if ps_.signum() != s.signum() {
                return Some((pt, t));
            }
        }
        prev = Some((t, s));
    }
    None
}

/// `[β, β′, β″]` from `[α, α′, α″, α‴]` and `[ζ, ζ′, ζ″, ζ‴]`.
pub fn beta_from_zeta(alpha: [f64; 4], zeta: [f64; 4]) -> [f64; 3] {
    let l = zeta[1] / zeta[0];
    let l1 = zeta[2] / zeta[0] - l * l;
    let l2 = zeta[3] / zeta[0] - 3.0 * zeta[2] * zeta[1] / (zeta[0] * zeta[0]) + 2.0 * l * l * l;
    let a1 = alpha[1];
    let u = 1.0 / a1;
    let u1 = -alpha[2] / (a1 * a1);
    let u2 = -alpha[3] / (a1 * a1) + 2.0 * alpha[2] * alpha[2] / (a1 * a1 * a1);
    [l * u, l1 * u + l * u1, l2 * u + 2.0 * l1 * u1 + l * u2]
}

/// Fisher information for a single observation, `K(θ) = α′(θ) β′(θ)`.
pub fn fisher_information<M: ExponentialFamily + ?Sized>(model: &M, theta: f64) -> f64 {
    model.alpha(theta)[1] * model.beta(theta)[1]
}

pub(crate) fn check_theta<M: ExponentialFamily + ?Sized>(model: &M, theta: f64) -> Result<()> {
    if !model.param_space().contains(theta) {
        return Err(Error::domain(format!(
            "theta = {theta} lies outside the parameter space {} of {}",
            model.param_space(),
            model.name()
        )));
    }
    Ok(())
}

/// Joint cumulants of log-likelihood derivatives for one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet {
    /// κ_θθ = E t″
    pub k_tt: f64,
    /// κ_θθθ = E t‴
    pub k_ttt: f64,
    /// κ_{θ,θθ} = E t′ t″
    pub k_t_tt: f64,
    /// κ_{θ,θ,θ} = E t′³
    pub k_t_t_t: f64,
    /// κ^{θ,θ} = -1/κ_θθ
    pub k_inv: f64,
}

impl CumulantSet {
    /// Fisher information `κ_{θ,θ} = -κ_θθ`.
    pub fn fisher(&self) -> f64 {
        -self.k_tt
    }
}

/// Cumulants at `theta` from `α′, α″, β′, β″`.
pub fn cumulants<M: ExponentialFamily + ?Sized>(model: &M, theta: f64) -> Result<CumulantSet> {
    check_theta(model, theta)?;
    let [_, a1, a2] = model.alpha(theta);
    let [_, b1, b2] = model.beta(theta);
    let k_tt = -a1 * b1;
    if !(k_tt < 0.0) {
        return Err(Error::domain(format!(
            "{}: Fisher information α′β′ = {} is not positive at theta = {theta}",
            model.name(),
            -k_tt
        )));
    }
    Ok(CumulantSet {
        k_tt,
        k_ttt: -(2.0 * a2 * b1 + a1 * b2),
        k_t_tt: a2 * b1,
        k_t_t_t: a1 * b2 - a2 * b1,
        k_inv: -1.0 / k_tt,
    })
}

/// Mean of `d(x)` over the data, after checking every datum lies in the support.
pub fn mean_sufficient<M: ExponentialFamily + ?Sized>(model: &M, data: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("data set is empty"));
    }
    let support = model.support();
    let mut sum = crate::numeric::NeumaierSum::default();
    for (i, &x) in data.iter().enumerate() {
        if !support.contains(x) {
            return Err(Error::domain(format!(
                "observation {} (= {x}) lies outside the support {support} of {}",
                i + 1,
                model.name()
            )));
        }
        sum.add(model.d(x));
    }
    Ok(sum.total() / data.len() as f64)
}

/// Maximum likelihood estimate of θ.
pub fn mle<M: ExponentialFamily + ?Sized>(model: &M, data: &[f64]) -> Result<f64> {
    let d_bar = mean_sufficient(model, data)?;
    mle_from_mean(model, d_bar)
}

/// Maximum likelihood estimate given the sufficient-statistic mean `d̄`.
pub fn mle_from_mean<M: ExponentialFamily + ?Sized>(model: &M, d_bar: f64) -> Result<f64> {
    let ps = model.param_space();
    let theta = match model.mle_closed_form(d_bar) {
        Some(t) => t,
        None => {
            let (lo, hi) = model.mle_bracket(d_bar).ok_or_else(|| {
                Error::estimation(format!("{}: no bracket for the likelihood equation at d̄ = {d_bar}", model.name()))
            })?;
            if lo == hi {
                lo
            } else {
                brent(|t| model.beta(t)[0] + d_bar, lo, hi)?
            }
        }
    };
    if !theta.is_finite() || !ps.contains(theta) {
        return Err(Error::estimation(format!(
            "{}: likelihood equation has no root in {ps} (d̄ = {d_bar}, candidate {theta})",
            model.name()
        )));
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn gamma2() -> CatalogModel {
        catalog_model("gamma", &BTreeMap::from([("k".to_string(), 2.0)])).unwrap()
    }

    #[test]
    fn gamma_cumulants_at_one() {
        let c = cumulants(&gamma2(), 1.0).unwrap();
        assert_eq!(c.k_tt, -2.0);
        assert_eq!(c.k_ttt, 4.0);
        assert_eq!(c.k_t_tt, 0.0);
        assert_eq!(c.k_t_t_t, -4.0);
        assert_eq!(c.k_inv, 0.5);
    }

    #[test]
    fn cumulants_outside_parameter_space() {
        assert!(matches!(cumulants(&gamma2(), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn mle_rejects_empty_and_out_of_support() {
        let m = gamma2();
        assert!(matches!(mle(&m, &[]), Err(Error::Invalid(_))));
        assert!(matches!(mle(&m, &[1.0, -2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn degenerate_sample_is_estimation_failure() {
        let tev = catalog_model("tev", &BTreeMap::new()).unwrap();
        // d(x) = e^x - 1 averages to 0 only at the support boundary.
        assert!(matches!(mle_from_mean(&tev, 0.0), Err(Error::Estimation(_))));
        let lap = catalog_model("laplace", &BTreeMap::from([("k".to_string(), 0.0)])).unwrap();
        assert!(matches!(mle(&lap, &[0.0, 0.0]), Err(Error::Estimation(_))));
    }

    #[derive(Debug)]
    struct BracketOnly(CatalogModel);

    impl ExponentialFamily for BracketOnly {
        fn name(&self) -> &str {
            "bracket-only"
        }
        fn alpha(&self, t: f64) -> [f64; 3] {
            self.0.alpha(t)
        }
        fn log_zeta(&self, t: f64) -> f64 {
            self.0.log_zeta(t)
        }
        fn beta(&self, t: f64) -> [f64; 3] {
            self.0.beta(t)
        }
        fn d(&self, x: f64) -> f64 {
            self.0.d(x)
        }
        fn v(&self, x: f64) -> f64 {
            self.0.v(x)
        }
        fn support(&self) -> Interval {
            self.0.support()
        }
        fn param_space(&self) -> Interval {
            self.0.param_space()
        }
        fn sample(&self, t: f64, n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
            self.0.sample(t, n, rng)
        }
    }

    #[test]
    fn brent_fallback_matches_closed_form() {
        for (name, fixed) in [
            ("gamma", vec![("k", 2.0)]),
            ("pareto", vec![("k", 1.5)]),
            ("power", vec![("phi", 3.0)]),
            ("normal-mean", vec![("theta", 2.0)]),
            ("invnormal-theta", vec![("mu", 1.0)]),
        ] {
            let fixed: BTreeMap<String, f64> = fixed.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            let m = catalog_model(name, &fixed).unwrap();
            let theta_true = if name == "normal-mean" { -0.7 } else { 1.3 };
            let d_bar = -m.beta(theta_true)[0];
            let closed = mle_from_mean(&m, d_bar).unwrap();
            let generic = mle_from_mean(&BracketOnly(m.clone()), d_bar).unwrap();
            assert!((closed - generic).abs() < 1e-10 * (1.0 + closed.abs()), "{name}: {closed} vs {generic}");
            let resid = m.beta(generic)[0] + d_bar;
            assert!(resid.abs() <= 1e-12 * (1.0 + d_bar.abs()), "{name}: residual {resid}");
        }
    }

    #[test]
    fn beta_from_zeta_matches_gamma_catalog() {
        let k = 2.0;
        let t: f64 = 1.7;
        // ζ = θ^{-k}, α = θ
        let zeta = [
            t.powf(-k),
            -k * t.powf(-k - 1.0),
            k * (k + 1.0) * t.powf(-k - 2.0),
            -k * (k + 1.0) * (k + 2.0) * t.powf(-k - 3.0),
        ];
        let got = beta_from_zeta([t, 1.0, 0.0, 0.0], zeta);
        let want = gamma2().beta(t);
        for i in 0..3 {
            assert!((got[i] - want[i]).abs() < 1e-12, "{i}: {got:?} vs {want:?}");
        }
    }

    #[test]
    fn beta_from_zeta_matches_tev_catalog() {
        // ζ = θ, α = 1/θ
        let t: f64 = 0.8;
        let got = beta_from_zeta([1.0 / t, -1.0 / (t * t), 2.0 / t.powi(3), -6.0 / t.powi(4)], [t, 1.0, 0.0, 0.0]);
        let tev = catalog_model("tev", &BTreeMap::new()).unwrap();
        let want = tev.beta(t);
        for i in 0..3 {
            assert!((got[i] - want[i]).abs() < 1e-12, "{i}: {got:?} vs {want:?}");
        }
    }

    #[test]
    fn interval_display_and_membership() {
        let i = Interval { lo: 0.0, hi: 3.0, lo_closed: false, hi_closed: true };
        assert_eq!(i.to_string(), "(0, 3]");
        assert!(i.contains(3.0) && !i.contains(0.0));
        assert_eq!(Interval::REAL_LINE.to_string(), "(-inf, inf)");
    }
}
