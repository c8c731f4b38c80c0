mod common;

use orthantloop::dimshift;
use orthantloop::kinematics::{Dimension, KinematicConfig};
use orthantloop::matrixops::SymMatrix;
use orthantloop::npoint;
use orthantloop::oracle::*;
use orthantloop::quadrature::QuadratureSettings;
use orthantloop::value::IntegralValue;
use proptest::prelude::*;
use std::f64::consts::PI;

fn quad() -> QuadratureSettings {
    QuadratureSettings::default()
}

fn agree(a: &IntegralValue, b: &IntegralValue) -> bool {
    (a.re() - b.re()).abs() <= 3.0 * a.abs_error.hypot(b.abs_error).max(1e-15)
}

#[test]
fn single_propagator() {
    for m in [1.0, 2.5] {
        let c = KinematicConfig::unit(vec![m], vec![vec![0.0]], 1.0).unwrap();
        let v = feynman_oracle(&c, &quad(), &MCSettings::default()).unwrap();
        assert!((v.re() + PI.sqrt() / m).abs() < 1e-13, "{}", v.re());
    }
}

#[test]
fn constant_denominator() {
    // all k^2 = 0, equal masses: u^T Sigma u = m^2 on the simplex
    let m = 1.3;
    let cfg = KinematicConfig::unit(vec![m; 3], vec![vec![0.0; 3]; 3], 3.0).unwrap();
    let v = feynman_oracle(&cfg, &quad(), &MCSettings::default()).unwrap();
    let want = -PI.sqrt() / (4.0 * m.powi(3));
    assert!((v.re() - want).abs() < 1e-10 * want.abs(), "{} vs {want}", v.re());
    // same at N = 4 through the Monte Carlo branch: every sample is exact
    let cfg4 = KinematicConfig::unit(vec![m; 4], vec![vec![0.0; 4]; 4], 4.0).unwrap();
    let v = feynman_oracle(&cfg4, &quad(), &MCSettings::default().with_samples(20_000)).unwrap();
    // Gamma(2) / Gamma(1)^4 * m^-4 / 3!
    let want = 1.0 / (6.0 * m.powi(4));
    assert!((v.re() - want).abs() < 1e-12 * want, "{} vs {want}", v.re());
}

#[test]
fn divergent_configs_are_rejected() {
    let cfg = common::equicorrelated(2, 1.0, 0.2, 4.0);
    assert!(feynman_oracle(&cfg, &quad(), &MCSettings::default()).unwrap_err().is_divergent());
}

#[test]
fn orthant_examples() {
    let mc = MCSettings::default().with_samples(2_000_000);
    for (rho, want) in [
        (SymMatrix::identity(4), 1.0 / 16.0),
        (common::equicorrelation(2, 0.5), 1.0 / 3.0),
        (common::equicorrelation(3, 0.5), 0.25),
    ] {
        let p = orthant_mc(&rho, &mc).unwrap();
        assert!((p.mean - want).abs() < 3.0 * p.stderr, "{} vs {want}", p.mean);
        // binomial standard error
        let binom = (p.mean * (1.0 - p.mean) / mc.samples as f64).sqrt();
        assert!((p.stderr / binom - 1.0).abs() < 0.01);
    }
}

#[test]
fn seeded_runs_are_bit_identical_across_thread_counts() {
    let rho = common::equicorrelation(4, 0.3);
    let mc = MCSettings::default().with_samples(400_000).with_seed(99);
    let a = orthant_mc(&rho, &mc).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| orthant_mc(&rho, &mc).unwrap());
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let c = orthant_mc(&rho, &mc.with_seed(100)).unwrap();
    assert_ne!(a.mean, c.mean);

    let cfg = common::random_config(&mut common::rng(1), 5, 5.0);
    let f1 = feynman_oracle(&cfg, &quad(), &mc).unwrap();
    let f2 = pool.install(|| feynman_oracle(&cfg, &quad(), &mc).unwrap());
    assert_eq!(f1, f2);
}

#[test]
fn standard_error_scales_as_inverse_root() {
    let rho = common::equicorrelation(3, 0.2);
    let small = orthant_mc(&rho, &MCSettings::default().with_samples(100_000)).unwrap();
    let large = orthant_mc(&rho, &MCSettings::default().with_samples(10_000_000)).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!((ratio / 10.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn sample_floor_is_enforced() {
    let rho = common::equicorrelation(2, 0.1);
    assert!(orthant_mc(&rho, &MCSettings::default().with_samples(100)).is_err());
}

#[test]
fn truncated_moment_reduces_to_orthant_probability() {
    let cfg = common::random_config(&mut common::rng(2), 3, 3.0);
    let mc = MCSettings::default().with_samples(2_000_000);
    let t = truncated_moment_mc(&cfg, &mc).unwrap().value;
    let exact = npoint::evaluate(&cfg, &quad()).unwrap();
    assert!(agree(&t, &exact), "{} vs {}", t.re(), exact.re());
}

#[test]
fn truncated_moment_examples() {
    let mc = MCSettings::default().with_samples(4_000_000);
    let cfg = common::random_config(&mut common::rng(3), 2, 2.0);
    let t = truncated_moment_mc(&cfg, &mc).unwrap();
    assert!(!t.infinite_variance);
    assert!(agree(&t.value, &npoint::j2_2d(&cfg).unwrap()));

    let cfg = common::random_config(&mut common::rng(4), 5, 4.0);
    let t = truncated_moment_mc(&cfg, &mc).unwrap().value;
    let v = npoint::j5_4d(&cfg, &quad()).unwrap();
    assert!(agree(&t, &v), "{} +- {} vs {}", t.re(), t.abs_error, v.re());
}

#[test]
fn lauricella_examples() {
    let mc = MCSettings::default().with_samples(100_000);
    // N = 2, nu = 2, n = 3
    let cfg = common::random_config(&mut common::rng(5), 2, 3.0);
    let l = lauricella_expectation_mc(&cfg, &quad(), &mc).unwrap();
    let r = dimshift::raise_dimension(&cfg, &quad()).unwrap();
    assert!(agree(&l, &r), "{} +- {} vs {}", l.re(), l.abs_error, r.re());

    // N = 3, nu = 3, n = 4 against the eps = 0 coefficient
    let base = common::random_config(&mut common::rng(6), 3, 4.0);
    let cfg = KinematicConfig { dimension: Dimension::Expansion { d: 4, order: 0 }, ..base.clone() };
    let c0 = &dimshift::eps_expand(&cfg, &quad().with_rel_tol(1e-7)).unwrap().coefficients[0];
    let l = lauricella_expectation_mc(&base, &quad(), &mc).unwrap();
    assert!(agree(&l, c0), "{} +- {} vs {}", l.re(), l.abs_error, c0.re());
}

#[test]
fn lauricella_kernel_is_finite_at_the_mean() {
    for (powers, n) in [(vec![1, 1], 3.0), (vec![1, 1, 1], 4.0), (vec![2, 1, 1], 5.0)] {
        let z = vec![0.0; powers.len()];
        let v = lauricella_kernel(&z, &powers, n, &quad());
        assert!(v.re.is_finite() && v.im.is_finite() && v.im.abs() < 1e-14);
    }
    let cfg = common::random_config(&mut common::rng(7), 3, 3.0);
    assert!(lauricella_expectation_mc(&cfg, &quad(), &MCSettings::default()).is_err());
}

#[test]
fn three_oracles_triangulate() {
    // The Lauricella route needs n > nu, so the two-point triangle sits at n = 3.
    let cfg = common::random_config(&mut common::rng(8), 2, 3.0);
    let f = feynman_oracle(&cfg, &quad(), &MCSettings::default()).unwrap();
    let t = truncated_moment_mc(&cfg, &MCSettings::default().with_samples(4_000_000)).unwrap().value;
    let l = lauricella_expectation_mc(&cfg, &quad(), &MCSettings::default().with_samples(100_000)).unwrap();
    assert!(agree(&f, &t) && agree(&f, &l) && agree(&t, &l), "{} {} {}", f.re(), t.re(), l.re());
    // and at n = 2 the two that apply
    let cfg = cfg.with_dimension(2.0);
    let f = feynman_oracle(&cfg, &quad(), &MCSettings::default()).unwrap();
    let t = truncated_moment_mc(&cfg, &MCSettings::default().with_samples(4_000_000)).unwrap().value;
    assert!(agree(&f, &t));
}

#[test]
fn fourier_pair_matches_arcsine() {
    let rho = common::equicorrelation(2, -0.4);
    let m = gaussian_fourier_mc(&rho, &[0, 1], &MCSettings::default().with_samples(2_000_000)).unwrap();
    let exact = -2.0 * PI * (-0.4f64).asin();
    assert!((m.mean - exact).abs() < 3.0 * m.stderr);
    assert!(gaussian_fourier_mc(&rho, &[2], &MCSettings::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn feynman_quadrature_matches_closed_forms(seed in any::<u64>(), legs in 2usize..=3) {
        let cfg = common::random_config(&mut common::rng(seed), legs, legs as f64);
        let f = feynman_oracle(&cfg, &quad(), &MCSettings::default()).unwrap();
        let v = npoint::evaluate(&cfg, &quad()).unwrap();
        prop_assert!(f.rel_diff(&v) < 1e-6);
    }
}
