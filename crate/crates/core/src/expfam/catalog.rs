//! The built-in catalog of one-parameter exponential families.

use std::collections::BTreeMap;

use rand::RngCore;

use super::sampling::{inverse_gaussian, standard_exponential, standard_gamma, standard_normal, uniform_open};
use super::{ExponentialFamily, Interval};
use crate::error::{Error, Result};
use crate::specfun::ln_gamma;

/// Catalog entry names accepted by [`catalog_model`].
pub const CATALOG_NAMES: [&str; 9] = [
    "normal-variance",
    "normal-mean",
    "invnormal-theta",
    "invnormal-mu",
    "gamma",
    "tev",
    "pareto",
    "laplace",
    "power",
];

/// Catalog families together with their known constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Normal, mean `mu` known, θ = variance.
    NormalVariance { mu: f64 },
    /// Normal, variance `theta` known, parameter = mean.
    NormalMean { variance: f64 },
    /// Inverse Gaussian, mean `mu` known, θ = shape.
    InvNormalTheta { mu: f64 },
    /// Inverse Gaussian, shape `theta` known, parameter = mean.
    InvNormalMu { shape: f64 },
    /// Gamma with known shape `k`, θ = rate.
    Gamma { k: f64 },
    /// Truncated extreme value.
    Tev,
    /// Pareto with known scale `k`.
    Pareto { k: f64 },
    /// Laplace with known location `k`, θ = scale.
    Laplace { k: f64 },
    /// Power distribution on (0, φ).
    Power { phi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogModel {
    family: Family,
    name: &'static str,
}

/// Human-readable description of a catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInfo {
    pub name: &'static str,
    pub parameter: &'static str,
    pub fixed: Vec<(&'static str, f64)>,
    pub alpha: &'static str,
    pub zeta: &'static str,
    pub d: &'static str,
    pub v: &'static str,
    pub support: Interval,
    pub param_space: Interval,
    pub mle: &'static str,
}

/// Parse a `key=value,key=value` list of known constants.
pub fn parse_fixed(s: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("fixed constant `{item}` is not of the form key=value")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("fixed constant `{}` has non-numeric value `{}`", k.trim(), v.trim())))?;
        if out.insert(k.trim().to_string(), value).is_some() {
            return Err(Error::invalid(format!("fixed constant `{}` given twice", k.trim())));
        }
    }
    Ok(out)
}

fn required(name: &str, fixed: &BTreeMap<String, f64>, key: &str, positive: bool) -> Result<f64> {
    let v = *fixed
        .get(key)
        .ok_or_else(|| Error::invalid(format!("model `{name}` requires the fixed constant `{key}`")))?;
    if !v.is_finite() || (positive && v <= 0.0) {
        let range = if positive { "a finite positive number" } else { "finite" };
        return Err(Error::invalid(format!("model `{name}`: `{key}` must be {range}, got {v}")));
    }
    Ok(v)
}

/// Build a catalog model by name from its known constants.
pub fn catalog_model(name: &str, fixed: &BTreeMap<String, f64>) -> Result<CatalogModel> {
    let (family, keys): (Family, &[&str]) = match name {
        "normal-variance" => (Family::NormalVariance { mu: required(name, fixed, "mu", false)? }, &["mu"]),
        "normal-mean" => (Family::NormalMean { variance: required(name, fixed, "theta", true)? }, &["theta"]),
        "invnormal-theta" => (Family::InvNormalTheta { mu: required(name, fixed, "mu", true)? }, &["mu"]),
        "invnormal-mu" => (Family::InvNormalMu { shape: required(name, fixed, "theta", true)? }, &["theta"]),
        "gamma" => (Family::Gamma { k: required(name, fixed, "k", true)? }, &["k"]),
        "tev" => (Family::Tev, &[]),
        "pareto" => (Family::Pareto { k: required(name, fixed, "k", true)? }, &["k"]),
        "laplace" => (Family::Laplace { k: required(name, fixed, "k", false)? }, &["k"]),
        "power" => (Family::Power { phi: required(name, fixed, "phi", true)? }, &["phi"]),
        other => {
            return Err(Error::invalid(format!(
                "unknown model `{other}`; expected one of {}",
                CATALOG_NAMES.join(", ")
            )))
        }
    };
    if let Some(extra) = fixed.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(Error::invalid(format!("model `{name}` does not take the fixed constant `{extra}`")));
    }
    Ok(CatalogModel::new(family))
}

impl CatalogModel {
    pub fn new(family: Family) -> Self {
        let name = match family {
            Family::NormalVariance { .. } => "normal-variance",
            Family::NormalMean { .. } => "normal-mean",
            Family::InvNormalTheta { .. } => "invnormal-theta",
            Family::InvNormalMu { .. } => "invnormal-mu",
            Family::Gamma { .. } => "gamma",
            Family::Tev => "tev",
            Family::Pareto { .. } => "pareto",
            Family::Laplace { .. } => "laplace",
            Family::Power { .. } => "power",
        };
        Self { family, name }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// True when α(θ) is linear, so α″ vanishes identically.
    pub fn is_natural(&self) -> bool {
        matches!(
            self.family,
            Family::InvNormalTheta { .. } | Family::Gamma { .. } | Family::Pareto { .. } | Family::Power { .. }
        )
    }

    pub fn info(&self) -> ModelInfo {
        let (parameter, alpha, zeta, d, v, mle) = match self.family {
            Family::NormalVariance { .. } => (
                "theta (variance)",
                "1/(2 theta)",
                "theta^(1/2)",
                "(x - mu)^2",
                "-log(2 pi)/2",
                "theta_hat = d_bar",
            ),
            Family::NormalMean { .. } => (
                "mu (mean)",
                "-mu/theta",
                "exp{mu^2/(2 theta)}",
                "x",
                "-{x^2/theta + log(2 pi theta)}/2",
                "mu_hat = d_bar",
            ),
            Family::InvNormalTheta { .. } => (
                "theta (shape)",
                "theta",
                "theta^(-1/2)",
                "(x - mu)^2/(2 mu^2 x)",
                "-log(2 pi x^3)/2",
                "theta_hat = 1/(2 d_bar)",
            ),
            Family::InvNormalMu { .. } => (
                "mu (mean)",
                "theta/(2 mu^2)",
                "exp(-theta/mu)",
                "x",
                "-theta/(2x) + log{theta/(2 pi x^3)}/2",
                "mu_hat = d_bar",
            ),
            Family::Gamma { .. } => (
                "theta (rate)",
                "theta",
                "theta^(-k)",
                "x",
                "(k - 1) log x - log Gamma(k)",
                "theta_hat = k/d_bar",
            ),
            Family::Tev => ("theta (scale)", "1/theta", "theta", "exp(x) - 1", "x", "theta_hat = d_bar"),
            Family::Pareto { .. } => (
                "theta (shape)",
                "1 + theta",
                "(theta k^theta)^(-1)",
                "log x",
                "0",
                "theta_hat = 1/(d_bar - log k)",
            ),
            Family::Laplace { .. } => ("theta (scale)", "1/theta", "2 theta", "|x - k|", "0", "theta_hat = d_bar"),
            Family::Power { .. } => (
                "theta (shape)",
                "1 - theta",
                "theta^(-1) phi^theta",
                "log x",
                "0",
                "theta_hat = 1/(log phi - d_bar)",
            ),
        };
        ModelInfo {
            name: self.name,
            parameter,
            fixed: self.fixed_params(),
            alpha,
            zeta,
            d,
            v,
            support: self.support(),
            param_space: self.param_space(),
            mle,
        }
    }
}

impl ExponentialFamily for CatalogModel {
    fn name(&self) -> &str {
        self.name
    }

    fn fixed_params(&self) -> Vec<(&'static str, f64)> {
        match self.family {
            Family::NormalVariance { mu } | Family::InvNormalTheta { mu } => vec![("mu", mu)],
            Family::NormalMean { variance } => vec![("theta", variance)],
            Family::InvNormalMu { shape } => vec![("theta", shape)],
            Family::Gamma { k } | Family::Pareto { k } | Family::Laplace { k } => vec![("k", k)],
            Family::Tev => vec![],
            Family::Power { phi } => vec![("phi", phi)],
        }
    }

    fn alpha(&self, t: f64) -> [f64; 3] {
        match self.family {
            Family::NormalVariance { .. } => [0.5 / t, -0.5 / (t * t), 1.0 / (t * t * t)],
            Family::NormalMean { variance } => [-t / variance, -1.0 / variance, 0.0],
            Family::InvNormalTheta { .. } | Family::Gamma { .. } => [t, 1.0, 0.0],
            Family::InvNormalMu { shape } => [shape / (2.0 * t * t), -shape / (t * t * t), 3.0 * shape / (t * t * t * t)],
            Family::Tev | Family::Laplace { .. } => [1.0 / t, -1.0 / (t * t), 2.0 / (t * t * t)],
            Family::Pareto { .. } => [1.0 + t, 1.0, 0.0],
            Family::Power { .. } => [1.0 - t, -1.0, 0.0],
        }
    }

    fn log_zeta(&self, t: f64) -> f64 {
        match self.family {
            Family::NormalVariance { .. } => 0.5 * t.ln(),
            Family::NormalMean { variance } => t * t / (2.0 * variance),
            Family::InvNormalTheta { .. } => -0.5 * t.ln(),
            Family::InvNormalMu { shape } => -shape / t,
            Family::Gamma { k } => -k * t.ln(),
            Family::Tev => t.ln(),
            Family::Pareto { k } => -t.ln() - t * k.ln(),
            Family::Laplace { .. } => (2.0 * t).ln(),
            Family::Power { phi } => -t.ln() + t * phi.ln(),
        }
    }

    fn beta(&self, t: f64) -> [f64; 3] {
        match self.family {
            Family::NormalVariance { .. }
            | Family::NormalMean { .. }
            | Family::InvNormalMu { .. }
            | Family::Tev
            | Family::Laplace { .. } => [-t, -1.0, 0.0],
            Family::InvNormalTheta { .. } => [-0.5 / t, 0.5 / (t * t), -1.0 / (t * t * t)],
            Family::Gamma { k } => [-k / t, k / (t * t), -2.0 * k / (t * t * t)],
            Family::Pareto { k } => [-1.0 / t - k.ln(), 1.0 / (t * t), -2.0 / (t * t * t)],
            Family::Power { phi } => [1.0 / t - phi.ln(), -1.0 / (t * t), 2.0 / (t * t * t)],
        }
    }

    fn d(&self, x: f64) -> f64 {
        match self.family {
            Family::NormalVariance { mu } => (x - mu) * (x - mu),
            Family::NormalMean { .. } | Family::InvNormalMu { .. } | Family::Gamma { .. } => x,
            Family::InvNormalTheta { mu } => (x - mu) * (x - mu) / (2.0 * mu * mu * x),
            Family::Tev => x.exp_m1(),
            Family::Pareto { .. } | Family::Power { .. } => x.ln(),
            Family::Laplace { k } => (x - k).abs(),
        }
    }

    fn v(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match self.family {
            Family::NormalVariance { .. } => -0.5 * (2.0 * PI).ln(),
            Family::NormalMean { variance } => -0.5 * (x * x / variance + (2.0 * PI * variance).ln()),
            Family::InvNormalTheta { .. } => -0.5 * (2.0 * PI * x * x * x).ln(),
            Family::InvNormalMu { shape } => -shape / (2.0 * x) + 0.5 * (shape / (2.0 * PI * x * x * x)).ln(),
            Family::Gamma { k } => (k - 1.0) * x.ln() - ln_gamma(k),
            Family::Tev => x,
            Family::Pareto { .. } | Family::Laplace { .. } | Family::Power { .. } => 0.0,
        }
    }

    fn support(&self) -> Interval {
        match self.family {
            Family::NormalVariance { .. } | Family::NormalMean { .. } | Family::Laplace { .. } => Interval::REAL_LINE,
            Family::InvNormalTheta { .. } | Family::InvNormalMu { .. } | Family::Gamma { .. } | Family::Tev => {
                Interval::POSITIVE
            }
            Family::Pareto { k } => Interval::open(k, f64::INFINITY),
            Family::Power { phi } => Interval::open(0.0, phi),
        }
    }

    fn param_space(&self) -> Interval {
        match self.family {
            Family::NormalMean { .. } => Interval::REAL_LINE,
            _ => Interval::POSITIVE,
        }
    }

    fn sample(&self, t: f64, n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let x = match self.family {
                Family::NormalVariance { mu } => mu + t.sqrt() * standard_normal(rng),
                Family::NormalMean { variance } => t + variance.sqrt() * standard_normal(rng),
                Family::InvNormalTheta { mu } => inverse_gaussian(mu, t, rng),
                Family::InvNormalMu { shape } => inverse_gaussian(t, shape, rng),
                Family::Gamma { k } => standard_gamma(k, rng) / t,
                Family::Tev => (t * standard_exponential(rng)).ln_1p(),
                Family::Pareto { k } => k * (standard_exponential(rng) / t).exp(),
                Family::Laplace { k } => {
                    let u = uniform_open(rng);
                    if u < 0.5 {
                        k + t * (2.0 * u).ln()
                    } else {
                        k - t * (2.0 * (1.0 - u)).ln()
                    }
                }
                Family::Power { phi } => phi * (-standard_exponential(rng) / t).exp(),
            };
            out.push(x);
        }
        out
    }

    fn mle_closed_form(&self, d_bar: f64) -> Option<f64> {
        Some(match self.family {
            Family::NormalVariance { .. }
            | Family::NormalMean { .. }
            | Family::InvNormalMu { .. }
            | Family::Tev
            | Family::Laplace { .. } => d_bar,
            Family::InvNormalTheta { .. } => 0.5 / d_bar,
            Family::Gamma { k } => k / d_bar,
            Family::Pareto { k } => 1.0 / (d_bar - k.ln()),
            Family::Power { phi } => 1.0 / (phi.ln() - d_bar),
        })
    }
}
