//! Local power of the four tests to order `n^{-1/2}` in one-parameter
//! exponential families.
//!
//! Under `θ = θ0 + ε/√n` every statistic satisfies
//! `Pr(S_i ≤ x) = G_{1,λ}(x) + n^{-1/2} Σ_k a_ik G_{1+2k,λ}(x)` with
//! `λ = K(θ0) ε² / 2`. The coefficients `a_ik` depend on `α′, α″, β′, β″` at `θ0`.
//!
//! Power differences are compared through the identity
//! `G_{m,λ} - G_{m+2,λ} = 2 g_{m+2,λ}`: writing `c_k = a_jk - a_ik`,
//! `C_0 = Σ_k c_k` and `C_m = Σ_{k≥m} c_k`,
//!
//! ```text
//! √n (Π_i - Π_j) = C_0 G_{1,λ}(x) - 2 Σ_{m=1..3} C_m g_{1+2m,λ}(x)
//! ```
//!
//! so the sign is settled for every `x` and `λ` whenever `C_0` and all `-C_m`
//! agree in sign. `C_0` vanishes except for the gradient row taken from
//! [`CoefficientSource::PaperTable`].

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expfam::{check_theta, fisher_information, ExponentialFamily};
use crate::specfun::{central_chisq_quantile, nc_chisq_cdf, nc_chisq_pdf, ChiSquareParams};
use crate::teststats::TestKind;

/// Where the gradient test's `a_40` coefficient comes from.
///
/// The two differ only when `α″ ≠ 0`; all other coefficients are shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientSource {
    /// `a_40 = κ_θθθ ε³/6 = -(2α″β′ + α′β″) ε³/6`, so the row sums to zero.
    #[default]
    ConsistentChain,
    /// `a_40 = (α″β′ - α′β″) ε³/6`, as tabulated alongside `a_12 = a_33`.
    PaperTable,
}

impl CoefficientSource {
    pub const BOTH: [CoefficientSource; 2] = [CoefficientSource::ConsistentChain, CoefficientSource::PaperTable];

    pub fn label(self) -> &'static str {
        match self {
            CoefficientSource::ConsistentChain => "consistent-chain",
            CoefficientSource::PaperTable => "paper-table",
        }
    }
}

impl fmt::Display for CoefficientSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for CoefficientSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" | "consistent-chain" | "chain" => Ok(CoefficientSource::ConsistentChain),
            "table" | "paper-table" => Ok(CoefficientSource::PaperTable),
            other => Err(Error::invalid(format!("unknown coefficient source `{other}` (expected consistent|table)"))),
        }
    }
}

/// `a[i][k]` for test `i` (LR, Wald, score, gradient) and mixture index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub a: [[f64; 4]; 4],
    pub source: CoefficientSource,
    pub eps: f64,
    pub theta0: f64,
}

impl CoefficientTable {
    pub fn row(&self, test: TestKind) -> [f64; 4] {
        self.a[test.index()]
    }

    /// Coefficients from `α′, α″, β′, β″` evaluated at `θ0`.
    pub fn from_derivatives(a1: f64, a2: f64, b1: f64, b2: f64, eps: f64, theta0: f64, source: CoefficientSource) -> Self {
        let e = eps;
        let e3 = eps * eps * eps;
        let info = a1 * b1;
        // 2α″β′ + α′β″ = -κ_θθθ
        let m = 2.0 * a2 * b1 + a1 * b2;
        // α′β″ - α″β′ = κ_{θ,θ,θ}
        let s = a1 * b2 - a2 * b1;

        let a10 = -m * e3 / 6.0;
        let a11 = a2 * b1 * e3 / 2.0;
        let a12 = s * e3 / 6.0;

        let a21 = a2 * b1 * e3 / 2.0 - m * e / (2.0 * info);
        let a31 = a2 * b1 * e3 / 2.0 - s * e / (2.0 * info);
        let a32 = s * e / (2.0 * info);

        let a40 = match source {
            CoefficientSource::ConsistentChain => -m * e3 / 6.0,
            CoefficientSource::PaperTable => -s * e3 / 6.0,
        };
        let a41 = a2 * b1 * e3 / 2.0 + m * e / (4.0 * info);
        let a42 = a1 * b2 * e3 / 4.0 - m * e / (4.0 * info);

        CoefficientTable {
            a: [
                [a10, a11, a12, 0.0],
                [a10, a21, -a21, -a10],
                [a10, a31, a32, a12],
                [a40, a41, a42, a10 / 2.0],
            ],
            source,
            eps,
            theta0,
        }
    }
}

/// The coefficient table for `model` at `theta0` and Pitman offset `eps`.
pub fn power_coefficients<M: ExponentialFamily + ?Sized>(
    model: &M,
    theta0: f64,
    eps: f64,
    source: CoefficientSource,
) -> Result<CoefficientTable> {
    check_theta(model, theta0)?;
    if !eps.is_finite() {
        return Err(Error::domain(format!("eps must be finite, got {eps}")));
    }
    let [_, a1, a2] = model.alpha(theta0);
    let [_, b1, b2] = model.beta(theta0);
    if !(a1 * b1 > 0.0) {
        return Err(Error::domain(format!("Fisher information is not positive at theta0 = {theta0}")));
    }
    Ok(CoefficientTable::from_derivatives(a1, a2, b1, b2, eps, theta0, source))
}

/// A local-power evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerQuery {
    pub theta0: f64,
    pub eps: f64,
    pub n: u64,
    pub alpha: f64,
}

impl PowerQuery {
    pub fn validate<M: ExponentialFamily + ?Sized>(&self, model: &M) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        check_theta(model, self.theta0)?;
        let theta_n = self.theta0 + self.eps / (self.n as f64).sqrt();
        if !model.param_space().contains(theta_n) {
            return Err(Error::domain(format!(
                "alternative theta0 + eps/sqrt(n) = {theta_n} lies outside the parameter space {}",
                model.param_space()
            )));
        }
        Ok(())
    }

    /// Critical value of the size-`alpha` χ²₁ test.
    pub fn critical_value(&self) -> Result<f64> {
        central_chisq_quantile(1.0, 1.0 - self.alpha)
    }
}

/// A power value together with the flag raised when the raw expansion left [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerValue {
    pub power: f64,
    pub raw: f64,
    pub out_of_range: bool,
}

impl PowerValue {
    pub(crate) fn clamped(raw: f64) -> Self {
        let power = raw.clamp(0.0, 1.0);
        PowerValue { power, raw, out_of_range: power != raw }
    }
}

/// `Π = 1 - G_{1,λ}(x) - inv_sqrt_n Σ_k a_k G_{1+2k,λ}(x)`.
///
/// `inv_sqrt_n = 0` gives the first-order (limiting) power.
pub fn power_from_row(row: &[f64; 4], lambda: f64, x: f64, inv_sqrt_n: f64) -> Result<PowerValue> {
    let g = mixture_cdfs(1.0, lambda, x)?;
    let correction: f64 = row.iter().zip(&g).map(|(a, gk)| a * gk).sum();
    Ok(PowerValue::clamped(1.0 - g[0] - inv_sqrt_n * correction))
}

/// `[G_{f,λ}(x), G_{f+2,λ}(x), G_{f+4,λ}(x), G_{f+6,λ}(x)]`.
pub(crate) fn mixture_cdfs(f: f64, lambda: f64, x: f64) -> Result<[f64; 4]> {
    let mut g = [0.0; 4];
    for (k, gk) in g.iter_mut().enumerate() {
        *gk = nc_chisq_cdf(ChiSquareParams::new(f + 2.0 * k as f64, lambda)?, x)?;
    }
    Ok(g)
}

/// Noncentrality `λ = K(θ0) ε² / 2`.
pub fn noncentrality<M: ExponentialFamily + ?Sized>(model: &M, theta0: f64, eps: f64) -> f64 {
    0.5 * fisher_information(model, theta0) * eps * eps
}

/// Local power of one test.
pub fn local_power<M: ExponentialFamily + ?Sized>(
    model: &M,
    query: &PowerQuery,
    test: TestKind,
    source: CoefficientSource,
) -> Result<PowerValue> {
    Ok(local_powers(model, query, source)?[test.index()])
}

/// Local powers of all four tests, indexed by [`TestKind::index`].
pub fn local_powers<M: ExponentialFamily + ?Sized>(
    model: &M,
    query: &PowerQuery,
    source: CoefficientSource,
) -> Result<[PowerValue; 4]> {
    query.validate(model)?;
    let table = power_coefficients(model, query.theta0, query.eps, source)?;
    let lambda = noncentrality(model, query.theta0, query.eps);
    let x = query.critical_value()?;
    let inv_sqrt_n = 1.0 / (query.n as f64).sqrt();
    let g = mixture_cdfs(1.0, lambda, x)?;
    let mut out = [PowerValue::clamped(0.0); 4];
    for test in TestKind::ALL {
        let correction: f64 = table.row(test).iter().zip(&g).map(|(a, gk)| a * gk).sum();
        out[test.index()] = PowerValue::clamped(1.0 - g[0] - inv_sqrt_n * correction);
    }
    Ok(out)
}

/// `√n (Π_i - Π_j)` split into the `G_{1,λ}` weight `C_0` and the density
/// weights `C_1..C_3` (see the module docs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelescopedDifference {
    pub c0: f64,
    pub c: [f64; 3],
}

impl TelescopedDifference {
    pub fn new(table: &CoefficientTable, i: TestKind, j: TestKind) -> Self {
        let (ri, rj) = (table.row(i), table.row(j));
        let c: [f64; 4] = std::array::from_fn(|k| rj[k] - ri[k]);
        TelescopedDifference { c0: c.iter().sum(), c: [c[1] + c[2] + c[3], c[2] + c[3], c[3]] }
    }

    /// `√n (Π_i - Π_j)` at `(x, λ)`.
    pub fn evaluate(&self, x: f64, lambda: f64) -> Result<f64> {
        let mut v = if self.c0 != 0.0 { self.c0 * nc_chisq_cdf(ChiSquareParams::new(1.0, lambda)?, x)? } else { 0.0 };
        for (m, cm) in self.c.iter().enumerate() {
            if *cm != 0.0 {
                v -= 2.0 * cm * nc_chisq_pdf(ChiSquareParams::new(3.0 + 2.0 * m as f64, lambda)?, x)?;
            }
        }
        Ok(v)
    }

    /// The sign of `Π_i - Π_j` when it is the same for every `x > 0` and `λ ≥ 0`.
    ///
    /// Weights within `tol` of zero count as zero.
    pub fn uniform_sign(&self, tol: f64) -> Option<Ordering> {
        let weights = [self.c0, -self.c[0], -self.c[1], -self.c[2]];
        let pos = weights.iter().any(|w| *w > tol);
        let neg = weights.iter().any(|w| *w < -tol);
        match (pos, neg) {
            (false, false) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Greater),
            (false, true) => Some(Ordering::Less),
            (true, true) => None,
        }
    }
}

/// Relationship between two tests' powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairComparison {
    pub first: TestKind,
    pub second: TestKind,
    pub telescoped: TelescopedDifference,
    /// Sign of `Π_first - Π_second` at the critical value.
    #[serde(serialize_with = "ser_ordering")]
    pub at_critical: Ordering,
    /// Set when the sign does not depend on `x` or `λ`.
    pub uniform: bool,
    /// Grid points (x in (0, 40]) where the sign was positive / negative;
    /// only filled for non-uniform pairs.
    pub grid_positive: usize,
    pub grid_negative: usize,
}

fn ser_ordering<S: serde::Serializer>(o: &Ordering, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match o {
        Ordering::Less => "<",
        Ordering::Equal => "=",
        Ordering::Greater => ">",
    })
}

/// Four tests arranged in decreasing power, ties grouped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerOrdering {
    pub groups: Vec<Vec<TestKind>>,
    /// True when every adjacent relation holds uniformly in `x` and `λ`.
    pub uniform: bool,
    /// True when the pairwise relations form a consistent ranking.
    pub consistent: bool,
}

impl fmt::Display for PowerOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text: Vec<String> = self
            .groups
            .iter()
            .map(|g| g.iter().map(|t| t.label()).collect::<Vec<_>>().join(" = "))
            .collect();
        write!(f, "{}", text.join(" > "))?;
        if self.uniform {
            write!(f, " (uniform in x)")
        } else {
            write!(f, " (not uniform in x)")
        }
    }
}

/// Ordering at one value of `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsOrdering {
    pub eps: f64,
    pub lambda: f64,
    pub ordering: PowerOrdering,
    pub pairs: Vec<PairComparison>,
}

/// Side of the null the alternatives lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "above" => Ok(Direction::Above),
            "below" => Ok(Direction::Below),
            other => Err(Error::invalid(format!("unknown direction `{other}` (expected above|below)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub theta0: f64,
    pub alpha: f64,
    pub direction: Direction,
    pub source: CoefficientSource,
    pub critical_value: f64,
    pub per_eps: Vec<EpsOrdering>,
    /// The ordering shared by every `ε` in the grid, if there is one.
    pub consensus: Option<PowerOrdering>,
}

pub const DEFAULT_EPS_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

/// Absolute tolerance on telescoped weights below which they count as zero.
const ORDER_TOL: f64 = 1e-12;

fn compare_pair(table: &CoefficientTable, i: TestKind, j: TestKind, lambda: f64, x_crit: f64) -> Result<PairComparison> {
    let telescoped = TelescopedDifference::new(table, i, j);
    let scale = 1.0 + table.a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = ORDER_TOL * scale;
    if let Some(sign) = telescoped.uniform_sign(tol) {
        return Ok(PairComparison {
            first: i,
            second: j,
            telescoped,
            at_critical: sign,
            uniform: true,
            grid_positive: 0,
            grid_negative: 0,
        });
    }
    let sign_of = |v: f64| {
        if v > tol {
            Ordering::Greater
        } else if v < -tol {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    };
    let (mut pos, mut neg) = (0, 0);
    for step in 1..=100 {
        match sign_of(telescoped.evaluate(0.4 * step as f64, lambda)?) {
            Ordering::Greater => pos += 1,
            Ordering::Less => neg += 1,
            Ordering::Equal => {}
        }
    }
    Ok(PairComparison {
        first: i,
        second: j,
        telescoped,
        at_critical: sign_of(telescoped.evaluate(x_crit, lambda)?),
        uniform: false,
        grid_positive: pos,
        grid_negative: neg,
    })
}

fn build_ordering(pairs: &[PairComparison]) -> PowerOrdering {
    let rel = |a: TestKind, b: TestKind| -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let p = pairs.iter().find(|p| (p.first, p.second) == (a, b) || (p.first, p.second) == (b, a)).unwrap();
        if p.first == a {
            p.at_critical
        } else {
            p.at_critical.reverse()
        }
    };
    let uniform_rel = |a: TestKind, b: TestKind| -> bool {
        pairs.iter().find(|p| (p.first, p.second) == (a, b) || (p.first, p.second) == (b, a)).map_or(true, |p| p.uniform)
    };
    // Rank by number of tests strictly beaten minus strictly lost to.
    let score = |t: TestKind| -> i32 {
        TestKind::ALL
            .iter()
            .map(|&o| match rel(t, o) {
                Ordering::Greater => 1,
                Ordering::Less => -1,
                Ordering::Equal => 0,
            })
            .sum()
    };
    let mut tests = TestKind::ALL.to_vec();
    tests.sort_by(|a, b| score(*b).cmp(&score(*a)).then(a.cmp(b)));
    let mut groups: Vec<Vec<TestKind>> = Vec::new();
    for t in tests {
        match groups.last_mut() {
            Some(g) if rel(g[0], t) == Ordering::Equal && score(g[0]) == score(t) => g.push(t),
            _ => groups.push(vec![t]),
        }
    }
    // The grouping is a faithful summary only if every pairwise relation agrees with it.
    let position = |t: TestKind| groups.iter().position(|g| g.contains(&t)).unwrap();
    let consistent = TestKind::ALL.iter().all(|&a| {
        TestKind::ALL.iter().all(|&b| rel(a, b) == position(b).cmp(&position(a)))
    });
    let uniform = TestKind::ALL.iter().all(|&a| TestKind::ALL.iter().all(|&b| uniform_rel(a, b)));
    PowerOrdering { groups, uniform, consistent }
}

/// Ordering of the four tests at a single `ε`.
pub fn ordering_at<M: ExponentialFamily + ?Sized>(
    model: &M,
    theta0: f64,
    eps: f64,
    alpha: f64,
    source: CoefficientSource,
) -> Result<EpsOrdering> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let table = power_coefficients(model, theta0, eps, source)?;
    let lambda = noncentrality(model, theta0, eps);
    let x_crit = central_chisq_quantile(1.0, 1.0 - alpha)?;
    let mut pairs = Vec::with_capacity(6);
    for (a, &i) in TestKind::ALL.iter().enumerate() {
        for &j in &TestKind::ALL[a + 1..] {
            pairs.push(compare_pair(&table, i, j, lambda, x_crit)?);
        }
    }
    let ordering = build_ordering(&pairs);
    Ok(EpsOrdering { eps, lambda, ordering, pairs })
}

/// Orderings over a grid of `|ε|` values on one side of the null.
pub fn power_ordering<M: ExponentialFamily + ?Sized>(
    model: &M,
    theta0: f64,
    direction: Direction,
    alpha: f64,
    source: CoefficientSource,
    eps_grid: &[f64],
) -> Result<OrderingReport> {
    check_theta(model, theta0)?;
    if eps_grid.is_empty() {
        return Err(Error::invalid("eps grid is empty"));
    }
    let sign = match direction {
        Direction::Above => 1.0,
        Direction::Below => -1.0,
    };
    let mut per_eps = Vec::with_capacity(eps_grid.len());
    for &e in eps_grid {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::invalid(format!("eps grid magnitudes must be positive, got {e}")));
        }
        per_eps.push(ordering_at(model, theta0, sign * e, alpha, source)?);
    }
    let first = &per_eps[0].ordering;
    let consensus = per_eps.iter().all(|o| o.ordering.groups == first.groups).then(|| PowerOrdering {
        groups: first.groups.clone(),
        uniform: per_eps.iter().all(|o| o.ordering.uniform),
        consistent: per_eps.iter().all(|o| o.ordering.consistent),
    });
    Ok(OrderingReport {
        theta0,
        alpha,
        direction,
        source,
        critical_value: central_chisq_quantile(1.0, 1.0 - alpha)?,
        per_eps,
        consensus,
    })
}
