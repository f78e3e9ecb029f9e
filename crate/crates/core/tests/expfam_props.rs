mod common;

use common::{catalog, model, random_theta};
use gradpower::expfam::{
    catalog_model, cumulants, fisher_information, mean_sufficient, mle, parse_data, parse_fixed, ExponentialFamily, Family,
};
use gradpower::specfun::{central_chisq_cdf, gamma_p};
use gradpower::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in catalog() {
        for _ in 0..20 {
            let t = random_theta(&m, &mut rng);
            let h = 1e-5 * t.abs().max(1.0);
            let [a, a1, a2] = m.alpha(t);
            let [b, b1, b2] = m.beta(t);
            let d = |f: &dyn Fn(f64) -> f64| (f(t + h) - f(t - h)) / (2.0 * h);
            let fd_a1 = d(&|s| m.alpha(s)[0]);
            let fd_a2 = d(&|s| m.alpha(s)[1]);
            let fd_logzeta = d(&|s| m.log_zeta(s));
            let fd_b1 = d(&|s| m.beta(s)[0]);
            let fd_b2 = d(&|s| m.beta(s)[1]);
            let name = m.name();
            assert!(a.is_finite());
            assert!(rel_close(a1, fd_a1, 1e-6), "{name} α′ at {t}: {a1} vs {fd_a1}");
            assert!(rel_close(a2, fd_a2, 1e-6), "{name} α″ at {t}: {a2} vs {fd_a2}");
            // β = ζ′/(ζ α′) = (log ζ)′/α′
            assert!(rel_close(b, fd_logzeta / a1, 1e-6), "{name} β at {t}: {b} vs {}", fd_logzeta / a1);
            assert!(rel_close(b1, fd_b1, 1e-6), "{name} β′ at {t}: {b1} vs {fd_b1}");
            assert!(rel_close(b2, fd_b2, 1e-6), "{name} β″ at {t}: {b2} vs {fd_b2}");
            assert!(fisher_information(&m, t) > 0.0, "{name} K ≤ 0 at {t}");
        }
    }
}

#[test]
fn bartlett_identity_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in catalog() {
        for _ in 0..20 {
            let c = cumulants(&m, random_theta(&m, &mut rng)).unwrap();
            let scale = 1.0 + c.k_ttt.abs() + c.k_t_tt.abs() + c.k_t_t_t.abs();
            assert!((c.k_ttt + 3.0 * c.k_t_tt + c.k_t_t_t).abs() < 1e-12 * scale);
            assert!((c.k_inv * c.k_tt + 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn hand_differentiated_examples() {
    let g = model("gamma");
    let b = g.beta(1.5);
    assert!((b[0] + 2.0 / 1.5).abs() < 1e-15);
    assert!((fisher_information(&g, 1.5) - 2.0 / 2.25).abs() < 1e-15);

    let nm = catalog_model("normal-mean", &parse_fixed("theta=1").unwrap()).unwrap();
    let (a, b) = (nm.alpha(0.7), nm.beta(0.7));
    assert!((b[0] + 0.7).abs() < 1e-15);
    assert_eq!(b[2], 0.0);
    assert_eq!(a[2], 0.0);

    let tev = model("tev");
    assert!((tev.beta(2.5)[0] + 2.5).abs() < 1e-15);
    assert!((fisher_information(&tev, 2.5) - 1.0 / 6.25).abs() < 1e-15);
}

#[test]
fn closed_form_mle_examples() {
    let g = model("gamma");
    assert_eq!(mle(&g, &[1.0, 3.0, 2.0]).unwrap(), 1.0);

    let tev = model("tev");
    let data = [0.2, 0.9, 1.4];
    let m: f64 = data.iter().map(|x: &f64| x.exp() - 1.0).sum::<f64>() / 3.0;
    assert!((mle(&tev, &data).unwrap() - m).abs() < 1e-15);

    let pareto = catalog_model("pareto", &parse_fixed("k=1").unwrap()).unwrap();
    let theta = mle(&pareto, &[0.25f64.exp(), 0.75f64.exp()]).unwrap();
    assert!((theta - 2.0).abs() < 1e-14);
}

#[test]
fn estimation_failures_and_domain_errors() {
    let g = model("gamma");
    assert!(matches!(mle(&g, &[]), Err(Error::Invalid(_))));
    assert!(matches!(mean_sufficient(&g, &[1.0, -1.0]), Err(Error::Domain(_))));
    // Every observation at the Laplace location puts the estimate on the boundary.
    assert!(matches!(mle(&model("laplace"), &[0.0, 0.0, 0.0]), Err(Error::Estimation(_))));
    assert!(catalog_model("gamma", &parse_fixed("k=-1").unwrap()).is_err());
    assert!(catalog_model("gamma", &parse_fixed("k=1,phi=2").unwrap()).is_err());
    assert!(catalog_model("tev", &parse_fixed("").unwrap()).is_ok());
    assert!(parse_data("1\n2\nx\n").is_err());
}

/// Transform a draw to a quantity with a known continuous CDF.
fn reference_cdf(m: &gradpower::CatalogModel, theta: f64) -> Box<dyn Fn(f64) -> f64> {
    let chi1 = |z: f64| central_chisq_cdf(1.0, z).unwrap();
    match m.family() {
        Family::NormalVariance { mu } => Box::new(move |x| chi1((x - mu) * (x - mu) / theta)),
        Family::NormalMean { variance } => Box::new(move |x| chi1((x - theta) * (x - theta) / variance)),
        Family::InvNormalTheta { mu } => Box::new(move |x| chi1(theta * (x - mu) * (x - mu) / (mu * mu * x))),
        Family::InvNormalMu { shape } => Box::new(move |x| chi1(shape * (x - theta) * (x - theta) / (theta * theta * x))),
        Family::Gamma { k } => Box::new(move |x| gamma_p(k, theta * x).unwrap()),
        Family::Tev => Box::new(move |x: f64| 1.0 - (-(x.exp() - 1.0) / theta).exp()),
        Family::Pareto { k } => Box::new(move |x: f64| 1.0 - (k / x).powf(theta)),
        Family::Laplace { k } => Box::new(move |x: f64| {
            if x < k {
                0.5 * ((x - k) / theta).exp()
            } else {
                1.0 - 0.5 * (-(x - k) / theta).exp()
            }
        }),
        Family::Power { phi } => Box::new(move |x: f64| (x / phi).powf(theta)),
    }
}

/// Kolmogorov–Smirnov check at the 0.1% level.
#[test]
fn samplers_pass_kolmogorov_smirnov() {
    let n = 20_000;
    for m in catalog() {
        for (i, theta) in [0.7, 1.0, 2.5].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let xs = m.sample(theta, n, &mut rng);
            assert!(xs.iter().all(|&x| m.support().contains(x)), "{} sample leaves support", m.name());
            let cdf = reference_cdf(&m, theta);
            let mut u: Vec<f64> = xs.iter().map(|&x| cdf(x)).collect();
            u.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let nf = n as f64;
            let d = u
                .iter()
                .enumerate()
                .map(|(i, &v)| (v - i as f64 / nf).max((i + 1) as f64 / nf - v))
                .fold(0.0, f64::max);
            assert!(d < 1.95 / nf.sqrt(), "{} θ = {theta}: KS distance {d}", m.name());
        }
    }
}

#[test]
fn mle_of_large_sample_is_consistent() {
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in catalog() {
        let theta = random_theta(&m, &mut rng);
        let xs = m.sample(theta, n, &mut rng);
        let hat = mle(&m, &xs).unwrap();
        let bound = 4.0 / (n as f64 * fisher_information(&m, theta)).sqrt();
        assert!((hat - theta).abs() <= bound, "{}: θ = {theta}, θ̂ = {hat}, bound {bound}", m.name());
    }
}

#[test]
fn sampler_streams_are_reproducible() {
    for m in catalog() {
        let a = m.sample(1.3, 50, &mut ChaCha8Rng::seed_from_u64(9));
        let b = m.sample(1.3, 50, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}

#[test]
fn brent_fallback_agrees_with_closed_form() {
    #[derive(Debug)]
    struct NoClosedForm(gradpower::CatalogModel);
    impl ExponentialFamily for NoClosedForm {
        fn name(&self) -> &str {
            "wrapped"
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
        fn support(&self) -> gradpower::Interval {
            self.0.support()
        }
        fn param_space(&self) -> gradpower::Interval {
            self.0.param_space()
        }
        fn sample(&self, t: f64, n: usize, rng: &mut dyn rand::RngCore) -> Vec<f64> {
            self.0.sample(t, n, rng)
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in catalog() {
        let theta = random_theta(&m, &mut rng);
        let xs = m.sample(theta, 200, &mut rng);
        let exact = mle(&m, &xs).unwrap();
        let wrapped = NoClosedForm(m.clone());
        let numeric = mle(&wrapped, &xs).unwrap();
        assert!((exact - numeric).abs() <= 1e-9 * exact.abs().max(1.0), "{}: {exact} vs {numeric}", m.name());
    }
}
