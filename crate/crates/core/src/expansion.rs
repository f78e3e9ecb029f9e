//! Distribution of the gradient statistic under Pitman alternatives for a
//! general composite hypothesis, from numeric cumulant tensors.
//!
//! The parameter is split as `θ = (θ1, θ2)` with `θ1` of length `q`
//! (nuisance) and `θ2` of length `p - q` (tested). With `ε*` and `A` built
//! from the partitioned information matrix,
//!
//! ```text
//! Pr(S_T ≤ x) = G_{f,λ}(x) + n^{-1/2} Σ_{k=0..3} a_k G_{f+2k,λ}(x) + O(n^{-1})
//! ```
//!
//! with `f = p - q` and `λ = ε' K_{22.1} ε / 2`.
//!
//! Triple-index contractions follow one convention throughout: for a matrix
//! `M` and vector `b`, `T∘M∘b = Σ_{rst} T_rst M_rs b_t`, and for vectors
//! `T∘a∘b∘c = Σ_{rst} T_rst a_r b_s c_t`. In `κ_{r,st}` the singly
//! differentiated index comes first.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::CumulantSet;
use crate::localpower::{mixture_cdfs, PowerValue};

/// Dense `p × p × p` array, row-major in `(r, s, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    p: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(p: usize) -> Self {
        Tensor3 { p, data: vec![0.0; p * p * p] }
    }

    pub fn from_nested(v: &[Vec<Vec<f64>>]) -> Result<Self> {
        let p = v.len();
        let mut t = Tensor3::zeros(p);
        for (r, plane) in v.iter().enumerate() {
            if plane.len() != p {
                return Err(Error::invalid(format!("third-order array: plane {r} has {} rows, expected {p}", plane.len())));
            }
            for (s, row) in plane.iter().enumerate() {
                if row.len() != p {
                    return Err(Error::invalid(format!(
                        "third-order array: row ({r},{s}) has {} entries, expected {p}",
                        row.len()
                    )));
                }
                for (u, &x) in row.iter().enumerate() {
                    t.set(r, s, u, x);
                }
            }
        }
        Ok(t)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.p).map(|r| (0..self.p).map(|s| (0..self.p).map(|t| self.get(r, s, t)).collect()).collect()).collect()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, r: usize, s: usize, t: usize) -> f64 {
        self.data[(r * self.p + s) * self.p + t]
    }

    #[inline]
    pub fn set(&mut self, r: usize, s: usize, t: usize, v: f64) {
        self.data[(r * self.p + s) * self.p + t] = v;
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ_{r ≥ from} Σ_{s,t} T_rst a_{r-from} b_s c_t`.
    fn contract_vvv_from(&self, from: usize, a: &[f64], b: &[f64], c: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in from..self.p {
            let ar = a[r - from];
            if ar == 0.0 {
                continue;
            }
            for s in 0..self.p {
                for t in 0..self.p {
                    acc += self.get(r, s, t) * ar * b[s] * c[t];
                }
            }
        }
        acc
    }

    /// `T∘a∘b∘c`.
    pub fn contract_vvv(&self, a: &[f64], b: &[f64], c: &[f64]) -> f64 {
        self.contract_vvv_from(0, a, b, c)
    }

    /// `T∘M∘b = Σ T_rst M_rs b_t`.
    pub fn contract_mv(&self, m: &Matrix, b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.p {
            for s in 0..self.p {
                let mrs = m.get(r, s);
                if mrs == 0.0 {
                    continue;
                }
                for t in 0..self.p {
                    acc += self.get(r, s, t) * mrs * b[t];
                }
            }
        }
        acc
    }

    fn combine(&self, wa: f64, other: &Tensor3, wb: f64) -> Tensor3 {
        Tensor3 { p: self.p, data: self.data.iter().zip(&other.data).map(|(a, b)| wa * a + wb * b).collect() }
    }

    fn check_symmetric(&self, name: &str, full: bool) -> Result<()> {
        let tol = 1e-12 * self.max_abs().max(1.0);
        let p = self.p;
        for r in 0..p {
            for s in 0..p {
                for t in 0..p {
                    let v = self.get(r, s, t);
                    let mut others = vec![self.get(r, t, s)];
                    if full {
                        others.extend([self.get(s, r, t), self.get(s, t, r), self.get(t, r, s), self.get(t, s, r)]);
                    }
                    if others.iter().any(|o| (o - v).abs() > tol) {
                        let kind = if full { "fully symmetric" } else { "symmetric in its last two indices" };
                        return Err(Error::invalid(format!("{name} is not {kind} at ({r},{s},{t})")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_nested(v: &[Vec<f64>]) -> Result<Self> {
        let n = v.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in v.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("matrix row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<Vec<f64>> {
        rows.map(|i| cols.clone().map(|j| self.get(i, j)).collect()).collect()
    }

    /// Lower Cholesky factor; `None` if the matrix is not positive definite.
    fn cholesky(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(l)
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn spd_inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let l = self.cholesky().ok_or_else(|| Error::invalid("matrix is not positive definite"))?;
        let mut inv = Matrix::zeros(n);
        for col in 0..n {
            // Solve L y = e_col, then L' x = y.
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for k in 0..i {
                    s -= l[i * n + k] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in i + 1..n {
                    s -= l[k * n + i] * inv.get(k, col);
                }
                inv.set(i, col, s / l[i * n + i]);
            }
        }
        Ok(inv)
    }
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Cumulant arrays at the restricted point `(θ1, θ20)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTensors {
    p: usize,
    q: usize,
    /// `κ_{r,s}`
    k: Matrix,
    /// `κ_{rst}`
    k3: Tensor3,
    /// `κ_{r,st}`
    k21: Tensor3,
    /// `κ_{r,s,t}`
    k111: Option<Tensor3>,
}

/// On-disk layout of a tensor file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub p: usize,
    pub q: usize,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    pub k3: Vec<Vec<Vec<f64>>>,
    pub k21: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k111: Option<Vec<Vec<Vec<f64>>>>,
}

impl CumulantTensors {
    /// Validate and assemble. `K` must be symmetric positive definite,
    /// `k3` (and `k111`) fully symmetric, `k21` symmetric in its last two indices.
    pub fn new(q: usize, k: Matrix, k3: Tensor3, k21: Tensor3, k111: Option<Tensor3>) -> Result<Self> {
        let p = k.dim();
        if p == 0 {
            return Err(Error::invalid("p must be at least 1"));
        }
        if q >= p {
            return Err(Error::invalid(format!("need 0 <= q < p, got p = {p}, q = {q}")));
        }
        for (name, t) in [("k3", Some(&k3)), ("k21", Some(&k21)), ("k111", k111.as_ref())] {
            if let Some(t) = t {
                if t.dim() != p {
                    return Err(Error::invalid(format!("{name} has dimension {}, expected {p}", t.dim())));
                }
            }
        }
        let all = k.data.iter().chain(&k3.data).chain(&k21.data).chain(k111.iter().flat_map(|t| t.data.iter()));
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cumulant arrays contain non-finite entries"));
        }
        let tol = 1e-12 * k.data.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for i in 0..p {
            for j in 0..i {
                if (k.get(i, j) - k.get(j, i)).abs() > tol {
                    return Err(Error::invalid(format!("K is not symmetric at ({i},{j})")));
                }
            }
        }
        if k.cholesky().is_none() {
            return Err(Error::invalid("K is not positive definite"));
        }
        k3.check_symmetric("k3", true)?;
        k21.check_symmetric("k21", false)?;
        if let Some(t) = &k111 {
            t.check_symmetric("k111", true)?;
        }
        Ok(CumulantTensors { p, q, k, k3, k21, k111 })
    }

    /// The one-parameter (simple hypothesis) tensors of an exponential family.
    pub fn from_scalar(c: &CumulantSet) -> Result<Self> {
        let one = |v: f64| Tensor3 { p: 1, data: vec![v] };
        CumulantTensors::new(
            0,
            Matrix { n: 1, data: vec![c.fisher()] },
            one(c.k_ttt),
            one(c.k_t_tt),
            Some(one(c.k_t_t_t)),
        )
    }

    pub fn from_file_repr(f: &TensorFile) -> Result<Self> {
        let k = Matrix::from_nested(&f.k)?;
        if k.dim() != f.p {
            return Err(Error::invalid(format!("K is {}×{}, but p = {}", k.dim(), k.dim(), f.p)));
        }
        let k111 = f.k111.as_deref().map(Tensor3::from_nested).transpose()?;
        CumulantTensors::new(f.q, k, Tensor3::from_nested(&f.k3)?, Tensor3::from_nested(&f.k21)?, k111)
    }

    pub fn to_file_repr(&self) -> TensorFile {
        TensorFile {
            p: self.p,
            q: self.q,
            k: self.k.to_nested(),
            k3: self.k3.to_nested(),
            k21: self.k21.to_nested(),
            k111: self.k111.as_ref().map(Tensor3::to_nested),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: TensorFile = serde_json::from_str(text).map_err(|e| Error::invalid(format!("tensor file: {e}")))?;
        Self::from_file_repr(&f)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn k3(&self) -> &Tensor3 {
        &self.k3
    }

    pub fn k21(&self) -> &Tensor3 {
        &self.k21
    }

    pub fn k111(&self) -> Option<&Tensor3> {
        self.k111.as_ref()
    }

    /// Whether `κ_{rst}` vanishes identically (LR, Wald and gradient then share local power).
    pub fn third_order_vanishes(&self, tol: f64) -> bool {
        self.k3.max_abs() <= tol
    }

    /// Whether `κ_{rst} = 2 κ_{r,s,t}` (score and gradient then share local
    /// power); `None` without `k111`.
    pub fn k3_is_twice_k111(&self, tol: f64) -> Option<bool> {
        self.k111.as_ref().map(|t| self.k3.data.iter().zip(&t.data).all(|(a, b)| (a - 2.0 * b).abs() <= tol))
    }

    fn check_eps(&self, eps: &[f64]) -> Result<()> {
        if eps.len() != self.p - self.q {
            return Err(Error::invalid(format!("eps has length {}, expected p - q = {}", eps.len(), self.p - self.q)));
        }
        if eps.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("eps contains non-finite entries"));
        }
        Ok(())
    }
}

/// Building blocks shared by the coefficient and moment formulas.
struct Partitioned {
    /// `ε* = [K11⁻¹ K12 ε; -ε]`
    eps_star: Vec<f64>,
    /// `A = blockdiag(K11⁻¹, 0)`
    a: Matrix,
    k_inv: Matrix,
    lambda: f64,
}

fn partition(t: &CumulantTensors, eps: &[f64]) -> Result<Partitioned> {
    t.check_eps(eps)?;
    let (p, q) = (t.p, t.q);
    let k_inv = t.k.spd_inverse()?;
    let mut a = Matrix::zeros(p);
    let mut eps_star = vec![0.0; p];
    let k22: Vec<Vec<f64>> = t.k.block(q..p, q..p);
    let mut k221 = k22;
    if q > 0 {
        let k11_inv = Matrix::from_nested(&t.k.block(0..q, 0..q))?.spd_inverse()?;
        for i in 0..q {
            for j in 0..q {
                a.set(i, j, k11_inv.get(i, j));
            }
        }
        let k12 = t.k.block(0..q, q..p);
        let k11_inv_rows = k11_inv.to_nested();
        // K11⁻¹ K12, q × (p-q)
        let b: Vec<Vec<f64>> = (0..q)
            .map(|i| (0..p - q).map(|j| (0..q).map(|l| k11_inv_rows[i][l] * k12[l][j]).sum()).collect())
            .collect();
        let top = mat_vec(&b, eps);
        eps_star[..q].copy_from_slice(&top);
        // K22 - K21 K11⁻¹ K12
        for i in 0..p - q {
            for j in 0..p - q {
                let s: f64 = (0..q).map(|l| k12[l][i] * b[l][j]).sum();
                k221[i][j] -= s;
            }
        }
    }
    for (j, e) in eps.iter().enumerate() {
        eps_star[q + j] = -e;
    }
    let quad: f64 = mat_vec(&k221, eps).iter().zip(eps).map(|(a, b)| a * b).sum();
    Ok(Partitioned { eps_star, a, k_inv, lambda: (0.5 * quad).max(0.0) })
}

/// Degrees of freedom, noncentrality and mixture coefficients `a_0..a_3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerExpansion {
    pub f: f64,
    pub lambda: f64,
    pub a: [f64; 4],
}

/// Coefficients for a composite hypothesis with `q` nuisance parameters.
pub fn composite_coefficients(t: &CumulantTensors, eps: &[f64]) -> Result<PowerExpansion> {
    let part = partition(t, eps)?;
    let es = &part.eps_star;
    let (k3, k21) = (&t.k3, &t.k21);
    let k_inv_minus_a = Matrix { n: t.p, data: part.k_inv.data.iter().zip(&part.a.data).map(|(x, y)| x - y).collect() };

    let k3_kinv_es = k3.contract_mv(&part.k_inv, es);
    let mixed_a_es = k21.combine(4.0, k3, 3.0).contract_mv(&part.a, es);
    let cubic_k3 = k3.contract_vvv(es, es, es);
    let cubic_k21 = k21.contract_vvv(es, es, es);
    let block = k3.contract_vvv_from(t.q, eps, es, es) + k21.contract_vvv_from(t.q, eps, es, es);

    let a1 = 0.25 * (k3_kinv_es - mixed_a_es - 2.0 * (cubic_k3 + 2.0 * cubic_k21) - 2.0 * block);
    let a2 = -0.25 * (k3.contract_mv(&k_inv_minus_a, es) - (cubic_k3 + 2.0 * cubic_k21));
    let a3 = -cubic_k3 / 12.0;
    Ok(PowerExpansion { f: (t.p - t.q) as f64, lambda: part.lambda, a: [-(a1 + a2 + a3), a1, a2, a3] })
}

/// Coefficients for a simple hypothesis (`q = 0`), evaluated from their
/// closed forms with `ε* = -ε` and `A = 0`.
pub fn simple_coefficients(t: &CumulantTensors, eps: &[f64]) -> Result<PowerExpansion> {
    if t.q != 0 {
        return Err(Error::invalid(format!("simple hypothesis requires q = 0, got q = {}", t.q)));
    }
    t.check_eps(eps)?;
    let k_inv = t.k.spd_inverse()?;
    let k3_kinv_e = t.k3.contract_mv(&k_inv, eps);
    let c3 = t.k3.contract_vvv(eps, eps, eps);
    let c21 = t.k21.contract_vvv(eps, eps, eps);
    let quad: f64 = (0..t.p).map(|i| (0..t.p).map(|j| eps[i] * t.k.get(i, j) * eps[j]).sum::<f64>()).sum();
    Ok(PowerExpansion {
        f: t.p as f64,
        lambda: 0.5 * quad,
        a: [c3 / 6.0, -(k3_kinv_e - 2.0 * c21) / 4.0, (k3_kinv_e - (c3 + 2.0 * c21)) / 4.0, c3 / 12.0],
    })
}

/// Coefficients for a scalar parameter from its cumulants.
pub fn scalar_coefficients(c: &CumulantSet, eps: f64) -> PowerExpansion {
    let e3 = eps * eps * eps;
    PowerExpansion {
        f: 1.0,
        lambda: 0.5 * c.fisher() * eps * eps,
        a: [
            c.k_ttt * e3 / 6.0,
            -(c.k_ttt * c.k_inv * eps - 2.0 * c.k_t_tt * e3) / 4.0,
            (c.k_ttt * c.k_inv * eps - (c.k_ttt + 2.0 * c.k_t_tt) * e3) / 4.0,
            c.k_ttt * e3 / 12.0,
        ],
    }
}

/// `Pr(S_T ≤ x)` to order `n^{-1/2}`, clamped to [0, 1] with a flag.
pub fn cdf_expansion(e: &PowerExpansion, n: u64, x: f64) -> Result<PowerValue> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if x.is_nan() {
        return Err(Error::domain("x is NaN"));
    }
    if x <= 0.0 {
        return Ok(PowerValue::clamped(0.0));
    }
    let g = mixture_cdfs(e.f, e.lambda, x)?;
    let corr: f64 = e.a.iter().zip(&g).map(|(a, gk)| a * gk).sum();
    Ok(PowerValue::clamped(g[0] + corr / (n as f64).sqrt()))
}

/// First three moments of `S_T` to order `n^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    /// `f + λ + 2A_1/√n`
    pub m1: f64,
    /// `2(f + 2λ) + 8(A_1 + A_2)/√n`
    pub m2: f64,
    /// `8(f + 3λ) + 6(A_1 + 2A_2 + A_3)/√n`
    pub m3: f64,
    /// `A_1, A_2, A_3` of the moment generating function.
    pub a_mgf: [f64; 3],
    /// Mean of the noncentral chi-square mixture itself,
    /// `f + 2λ + (2/√n)(a_1 + 2a_2 + 3a_3)`.
    pub mixture_mean: f64,
}

pub fn st_moments(t: &CumulantTensors, eps: &[f64], n: u64) -> Result<MomentSet> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let part = partition(t, eps)?;
    let es = &part.eps_star;
    let (k3, k21) = (&t.k3, &t.k21);
    let k3_kinv_es = k3.contract_mv(&part.k_inv, es);
    let k21_a_es = k21.contract_mv(&part.a, es);
    let k3_a_es = k3.contract_mv(&part.a, es);
    let cubic_k3 = k3.contract_vvv(es, es, es);
    let cubic_k21 = k21.contract_vvv(es, es, es);

    let cap1 = -(k3_kinv_es + 4.0 * k21_a_es + k3_a_es + cubic_k3) / 4.0;
    let cap2 = -(k3_kinv_es - k3_a_es - 2.0 * cubic_k21) / 4.0;
    let cap3 = -cubic_k3 / 12.0;

    let f = (t.p - t.q) as f64;
    let lam = part.lambda;
    let rn = (n as f64).sqrt();
    let coeffs = composite_coefficients(t, eps)?;
    let [_, a1, a2, a3] = coeffs.a;
    Ok(MomentSet {
        m1: f + lam + 2.0 * cap1 / rn,
        m2: 2.0 * (f + 2.0 * lam) + 8.0 * (cap1 + cap2) / rn,
        m3: 8.0 * (f + 3.0 * lam) + 6.0 * (cap1 + 2.0 * cap2 + cap3) / rn,
        a_mgf: [cap1, cap2, cap3],
        mixture_mean: f + 2.0 * lam + 2.0 * (a1 + 2.0 * a2 + 3.0 * a3) / rn,
    })
}
