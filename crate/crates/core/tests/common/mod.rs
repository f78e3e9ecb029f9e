#![allow(dead_code)]

use std::collections::BTreeMap;

use gradpower::expansion::{CumulantTensors, Matrix, Tensor3};
use gradpower::expfam::{catalog_model, CatalogModel, ExponentialFamily, CATALOG_NAMES};
use rand::Rng;

/// Every catalog entry with representative constants.
pub fn catalog() -> Vec<CatalogModel> {
    CATALOG_NAMES.iter().map(|name| model(name)).collect()
}

pub fn fixed_for(name: &str) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match name {
        "normal-variance" => &[("mu", 0.5)],
        "normal-mean" => &[("theta", 1.5)],
        "invnormal-theta" => &[("mu", 1.0)],
        "invnormal-mu" => &[("theta", 2.0)],
        "gamma" => &[("k", 2.0)],
        "tev" => &[],
        "pareto" => &[("k", 1.0)],
        "laplace" => &[("k", 0.0)],
        "power" => &[("phi", 1.0)],
        other => panic!("unknown model {other}"),
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn model(name: &str) -> CatalogModel {
    catalog_model(name, &fixed_for(name)).unwrap()
}

/// A parameter value well inside the model's parameter space.
pub fn random_theta<M: ExponentialFamily + ?Sized>(m: &M, rng: &mut impl Rng) -> f64 {
    let space = m.param_space();
    if space.lo == f64::NEG_INFINITY {
        rng.gen_range(-2.0..2.0)
    } else {
        space.lo + rng.gen_range(0.5..3.0)
    }
}

fn fill_symmetric3(t: &mut Tensor3, r: usize, s: usize, u: usize, v: f64) {
    for (a, b, c) in [(r, s, u), (r, u, s), (s, r, u), (s, u, r), (u, r, s), (u, s, r)] {
        t.set(a, b, c, v);
    }
}

/// Random valid tensors: SPD `K`, symmetric `k3`, `k21` symmetric in its
/// last two indices.
pub fn random_tensors(rng: &mut impl Rng, p: usize, q: usize) -> CumulantTensors {
    let b: Vec<Vec<f64>> = (0..p).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut k = Matrix::zeros(p);
    for i in 0..p {
        for j in 0..p {
            let mut v: f64 = (0..p).map(|l| b[i][l] * b[j][l]).sum();
            if i == j {
                v += 0.5 + p as f64 * 0.25;
            }
            k.set(i, j, v);
        }
    }
    let mut k3 = Tensor3::zeros(p);
    for r in 0..p {
        for s in r..p {
            for u in s..p {
                fill_symmetric3(&mut k3, r, s, u, rng.gen_range(-2.0..2.0));
            }
        }
    }
    let mut k21 = Tensor3::zeros(p);
    for r in 0..p {
        for s in 0..p {
            for u in s..p {
                let v = rng.gen_range(-2.0..2.0);
                k21.set(r, s, u, v);
                k21.set(r, u, s, v);
            }
        }
    }
    CumulantTensors::new(q, k, k3, k21, None).unwrap()
}

/// Relabel coordinates by `perm` (new index i takes old index perm[i]).
pub fn permute(t: &CumulantTensors, perm: &[usize]) -> CumulantTensors {
    let p = t.p();
    let mut k = Matrix::zeros(p);
    let mut k3 = Tensor3::zeros(p);
    let mut k21 = Tensor3::zeros(p);
    for i in 0..p {
        for j in 0..p {
            k.set(i, j, t.k().get(perm[i], perm[j]));
            for l in 0..p {
                k3.set(i, j, l, t.k3().get(perm[i], perm[j], perm[l]));
                k21.set(i, j, l, t.k21().get(perm[i], perm[j], perm[l]));
            }
        }
    }
    CumulantTensors::new(t.q(), k, k3, k21, None).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
