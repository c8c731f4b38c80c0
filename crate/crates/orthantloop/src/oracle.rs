//! Brute-force reference evaluators: Feynman-parameter integration,
//! multivariate-normal orthant and truncated-moment Monte Carlo, the
//! Lauricella expectation, and direct Gaussian-Fourier integrals.
//!
//! Monte Carlo runs are split into batches with seeds `seed ^ batch`; the
//! batches may run on any number of threads but are always reduced in batch
//! order, so results are bit-identical for a given seed.

use crate::error::{Error, Result};
use crate::kinematics::{build_sigma, KinematicConfig};
use crate::matrixops::SymMatrix;
use crate::quadrature::{integrate, integrate_0inf_2d, QuadratureSettings};
use crate::scalar::C64;
use crate::special::gamma;
use crate::value::{IntegralValue, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCSettings {
    pub samples: u64,
    pub seed: u64,
    /// Samples per batch; batches are the unit of parallelism and of the
    /// streaming variance estimate.
    pub batch: u64,
}

impl Default for MCSettings {
    fn default() -> Self {
        MCSettings {
            samples: 10_000_000,
            seed: 0x0b5e_55ed,
            batch: 100_000,
        }
    }
}

impl MCSettings {
    pub const MIN_SAMPLES: u64 = 10_000;

    pub fn with_samples(self, samples: u64) -> Self {
        MCSettings { samples, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        MCSettings { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < Self::MIN_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "at least {} Monte Carlo samples required, got {}",
                Self::MIN_SAMPLES,
                self.samples
            )));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCStat {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

// Running mean / sum of squared deviations (Welford), merged with Chan's rule.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn variance(&self) -> f64 {
        if self.n > 1.0 {
            self.m2 / (self.n - 1.0)
        } else {
            f64::INFINITY
        }
    }

    fn stat(&self) -> MCStat {
        MCStat {
            mean: self.mean,
            stderr: (self.variance() / self.n).sqrt(),
            samples: self.n as u64,
        }
    }
}

struct MCRun<const D: usize> {
    all: [Moments; D],
    first_half: [Moments; D],
}

fn run_batches<const D: usize, F>(settings: &MCSettings, f: F) -> Result<MCRun<D>>
where
    F: Fn(&mut ChaCha8Rng) -> [f64; D] + Sync,
{
    settings.validate()?;
    let n_batches = settings.samples.div_ceil(settings.batch);
    let batches: Vec<[Moments; D]> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ b);
            let count = settings.batch.min(settings.samples - b * settings.batch);
            let mut m = [Moments::default(); D];
            for _ in 0..count {
                let x = f(&mut rng);
                for (mk, xk) in m.iter_mut().zip(x) {
                    mk.push(xk);
                }
            }
            m
        })
        .collect();
    let fold = |it: &[[Moments; D]]| {
        it.iter().fold([Moments::default(); D], |acc, b| {
            let mut out = acc;
            for k in 0..D {
                out[k] = acc[k].merge(b[k]);
            }
            out
        })
    };
    Ok(MCRun {
        all: fold(&batches),
        first_half: fold(&batches[..batches.len().div_ceil(2)]),
    })
}

fn cholesky_factor(m: &SymMatrix<f64>) -> Result<Vec<f64>> {
    m.cholesky().ok_or(Error::NotPositiveDefinite)
}

/// x = L z with L lower-triangular, row-major.
fn correlated_normal<R: Rng>(l: &[f64], n: usize, rng: &mut R, z: &mut [f64], x: &mut [f64]) {
    for zi in z.iter_mut() {
        *zi = rng.sample(StandardNormal);
    }
    for i in 0..n {
        x[i] = (0..=i).map(|j| l[i * n + j] * z[j]).sum();
    }
}

fn quad_form(sigma: &SymMatrix<f64>, u: &[f64]) -> f64 {
    let n = u.len();
    let mut q = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += sigma.get(i, j) * u[j];
        }
        q += u[i] * row;
    }
    q
}

fn sign_pow(nu: u32) -> f64 {
    if nu % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// J^N from its Feynman-parameter form
/// (-1)^nu Gamma(nu - n/2) / prod Gamma(nu_i) int_simplex prod u_i^{nu_i-1} (u^T Sigma u)^{n/2 - nu}:
/// nested adaptive quadrature for N <= 3, Dirichlet(nu) Monte Carlo beyond.
pub fn feynman_oracle(
    config: &KinematicConfig,
    quad: &QuadratureSettings,
    mc: &MCSettings,
) -> Result<IntegralValue> {
    config.validate()?;
    let sigma = build_sigma(config)?.entries;
    feynman_oracle_sigma(&sigma, &config.powers, config.n(), quad, mc)
}

/// [`feynman_oracle`] for an explicit Sigma matrix.
pub fn feynman_oracle_sigma(
    sigma: &SymMatrix<f64>,
    powers: &[u32],
    n: f64,
    quad: &QuadratureSettings,
    mc: &MCSettings,
) -> Result<IntegralValue> {
    let legs = sigma.dim();
    if powers.len() != legs {
        return Err(Error::InvalidConfig("one power per leg required".into()));
    }
    let nu: u32 = powers.iter().sum();
    let a = nu as f64 - n / 2.0;
    if a <= 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "2 nu - n = {} <= 0",
            2.0 * nu as f64 - n
        )));
    }
    let sign = sign_pow(nu);
    let pref_norm = gamma(a) / powers.iter().map(|&p| gamma(p as f64)).product::<f64>();
    let positive = |q: f64| -> Result<f64> {
        if q > 0.0 {
            Ok(q.powf(-a))
        } else {
            Err(Error::Unsupported(
                "quadratic form not positive on the simplex".into(),
            ))
        }
    };
    let weight = |u: &[f64]| -> f64 {
        u.iter()
            .zip(powers)
            .map(|(&ui, &p)| ui.powi(p as i32 - 1))
            .product()
    };
    match legs {
        1 => {
            let v = sign * gamma(a) / gamma(powers[0] as f64) * sigma.get(0, 0).powf(-a);
            Ok(IntegralValue::real(v, 0.0, Method::ClosedForm))
        }
        2 => {
            let mut bad = false;
            let q = integrate(
                |u: f64| {
                    let x = [u, 1.0 - u];
                    match positive(quad_form(sigma, &x)) {
                        Ok(v) => weight(&x) * v,
                        Err(_) => f64::NAN,
                    }
                },
                0.0,
                1.0,
                quad,
            );
            bad |= !q.value.is_finite();
            if bad {
                return Err(Error::Unsupported(
                    "quadratic form not positive on the simplex".into(),
                ));
            }
            let s = sign * pref_norm;
            Ok(IntegralValue {
                value: C64::new(s * q.value, 0.0),
                abs_error: s.abs() * q.abs_error,
                method: Method::Quadrature,
                converged: q.converged,
            })
        }
        3 => {
            let inner = quad.inner(0.1);
            let q = integrate(
                |u1: f64| {
                    let w = 1.0 - u1;
                    let iq = integrate(
                        |t: f64| {
                            let x = [u1, w * t, w * (1.0 - t)];
                            match positive(quad_form(sigma, &x)) {
                                Ok(v) => weight(&x) * v,
                                Err(_) => f64::NAN,
                            }
                        },
                        0.0,
                        1.0,
                        &inner,
                    );
                    w * iq.value
                },
                0.0,
                1.0,
                quad,
            );
            if !q.value.is_finite() {
                return Err(Error::Unsupported(
                    "quadratic form not positive on the simplex".into(),
                ));
            }
            let s = sign * pref_norm;
            Ok(IntegralValue {
                value: C64::new(s * q.value, 0.0),
                abs_error: s.abs() * q.abs_error,
                method: Method::Quadrature,
                converged: q.converged,
            })
        }
        _ => {
            // int_simplex prod u^{nu_i - 1} f = prod Gamma(nu_i) / Gamma(nu) E_Dir(nu)[f]
            let gammas: Vec<Option<Gamma<f64>>> = powers
                .iter()
                .map(|&p| (p > 1).then(|| Gamma::new(p as f64, 1.0).expect("positive shape")))
                .collect();
            let run = run_batches(mc, |rng| {
                let mut u = [0.0; 9];
                let u = &mut u[..legs];
                let mut tot = 0.0;
                for (ui, g) in u.iter_mut().zip(&gammas) {
                    *ui = match g {
                        Some(g) => g.sample(rng),
                        None => rng.sample(Exp1),
                    };
                    tot += *ui;
                }
                for ui in u.iter_mut() {
                    *ui /= tot;
                }
                [quad_form(sigma, u).powf(-a)]
            })?;
            let stat = run.all[0].stat();
            if !stat.mean.is_finite() {
                return Err(Error::Unsupported(
                    "quadratic form not positive on the simplex".into(),
                ));
            }
            let s = sign * gamma(a) / gamma(nu as f64);
            Ok(IntegralValue {
                value: C64::new(s * stat.mean, 0.0),
                abs_error: s.abs() * stat.stderr,
                method: Method::MonteCarlo,
                converged: true,
            })
        }
    }
}

/// P(X > 0 componentwise) for X ~ N(0, cov); `cov` need not be normalized.
pub fn orthant_mc(cov: &SymMatrix<f64>, settings: &MCSettings) -> Result<MCStat> {
    let n = cov.dim();
    let l = cholesky_factor(cov)?;
    let run = run_batches(settings, |rng| {
        let (mut z, mut x) = ([0.0; 9], [0.0; 9]);
        correlated_normal(&l, n, rng, &mut z[..n], &mut x[..n]);
        [if x[..n].iter().all(|&v| v > 0.0) { 1.0 } else { 0.0 }]
    })?;
    let m = run.all[0];
    let p = m.mean;
    Ok(MCStat {
        mean: p,
        stderr: (p * (1.0 - p) / m.n).sqrt(),
        samples: m.n as u64,
    })
}

/// Result of the truncated-moment oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMoment {
    pub value: IntegralValue,
    /// Set when the weight (sum eps)^{nu - n} has nu - n <= -2 and the sample
    /// variance keeps growing with the sample size.
    pub infinite_variance: bool,
}

/// J^N from the Gaussian truncated moment
/// (-1)^nu (2 pi)^{N/2} / (sqrt(det Sigma) 2^{nu - n/2 - 1} prod Gamma(nu_i))
///   * E[prod eps_i^{nu_i - 1} 1{eps > 0} (sum eps_i)^{nu - n}],  eps ~ N(0, Sigma^-1).
pub fn truncated_moment_mc(config: &KinematicConfig, settings: &MCSettings) -> Result<TruncatedMoment> {
    config.validate()?;
    let sigma = build_sigma(config)?.entries;
    sigma.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let legs = sigma.dim();
    let nu = config.nu_total();
    let n = config.n();
    let k = nu as f64 - n;
    let a = nu as f64 - n / 2.0;
    if a <= 0.0 {
        return Err(Error::DivergentIntegral(format!("2 nu - n = {} <= 0", 2.0 * a)));
    }
    let r = sigma.inverse()?;
    let l = cholesky_factor(&r)?;
    let powers = config.powers.clone();
    let run = run_batches(settings, |rng| {
        let (mut z, mut x) = ([0.0; 9], [0.0; 9]);
        correlated_normal(&l, legs, rng, &mut z[..legs], &mut x[..legs]);
        let x = &x[..legs];
        if x.iter().any(|&v| v <= 0.0) {
            return [0.0];
        }
        let w: f64 = x.iter().zip(&powers).map(|(&e, &p)| e.powi(p as i32 - 1)).product();
        let s: f64 = x.iter().sum();
        [w * s.powf(k)]
    })?;
    let stat = run.all[0].stat();
    let infinite_variance =
        k <= -2.0 && run.all[0].variance() > 2.0 * run.first_half[0].variance();
    let pref = sign_pow(nu) * (2.0 * PI).powf(legs as f64 / 2.0)
        / (sigma.determinant().sqrt()
            * 2f64.powf(a - 1.0)
            * config.powers.iter().map(|&p| gamma(p as f64)).product::<f64>());
    Ok(TruncatedMoment {
        value: IntegralValue {
            value: C64::new(pref * stat.mean, 0.0),
            abs_error: pref.abs() * stat.stderr,
            method: Method::MonteCarlo,
            converged: !infinite_variance,
        },
        infinite_variance,
    })
}

/// The F_D kernel int_0^1 t^{2nu-n-1} (1-t)^{n-nu-1} / prod (1 - theta_i t)^{nu_i} dt
/// at theta = 1 - i z.
pub fn lauricella_kernel(z: &[f64], powers: &[u32], n: f64, quad: &QuadratureSettings) -> C64 {
    let nu: u32 = powers.iter().sum();
    let (p, q) = (2.0 * nu as f64 - n - 1.0, n - nu as f64 - 1.0);
    integrate(
        |t: f64| {
            let mut den = C64::new(1.0, 0.0);
            for (&zi, &nui) in z.iter().zip(powers) {
                den *= C64::new(1.0 - t, zi * t).powi(nui as i32);
            }
            C64::new(t.powf(p) * (1.0 - t).powf(q), 0.0) / den
        },
        0.0,
        1.0,
        quad,
    )
    .value
}

/// J^N for nu - n < 0 as a Gaussian expectation of the F_D integral:
/// (-1)^nu / (2^{nu - n/2 - 1} Gamma(n - nu)) E_Z[kernel(Z)], Z ~ N(0, Sigma).
pub fn lauricella_expectation_mc(
    config: &KinematicConfig,
    quad: &QuadratureSettings,
    settings: &MCSettings,
) -> Result<IntegralValue> {
    config.validate()?;
    let sigma = build_sigma(config)?.entries;
    let legs = sigma.dim();
    let nu = config.nu_total();
    let n = config.n();
    if nu as f64 - n >= 0.0 {
        return Err(Error::Unsupported(
            "the Lauricella route needs nu - n < 0".into(),
        ));
    }
    if 2.0 * nu as f64 - n <= 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "2 nu - n = {} <= 0",
            2.0 * nu as f64 - n
        )));
    }
    let l = cholesky_factor(&sigma)?;
    let powers = config.powers.clone();
    let run = run_batches(settings, |rng| {
        let (mut z, mut x) = ([0.0; 9], [0.0; 9]);
        correlated_normal(&l, legs, rng, &mut z[..legs], &mut x[..legs]);
        let v = lauricella_kernel(&x[..legs], &powers, n, quad);
        [v.re, v.im]
    })?;
    let (re, im) = (run.all[0].stat(), run.all[1].stat());
    let pref = sign_pow(nu) / (2f64.powf(nu as f64 - n / 2.0 - 1.0) * gamma(n - nu as f64));
    Ok(IntegralValue {
        value: C64::new(re.mean, im.mean) * pref,
        abs_error: pref.abs() * re.stderr.hypot(im.stderr),
        method: Method::MonteCarlo,
        converged: true,
    })
}

/// I_ij by direct quadrature of -4 int_0^inf int_0^inf e^{-(a^2+b^2)/2} sinh(rho a b) / (a b).
pub fn i_pair_quadrature(rho: f64, settings: &QuadratureSettings) -> Result<IntegralValue> {
    if rho.abs() >= 1.0 {
        return Err(Error::OutOfRange(rho));
    }
    let q = integrate_0inf_2d(
        |a, b| {
            let x = a * b;
            let g = -0.5 * (a * a + b * b);
            if x == 0.0 {
                g.exp() * rho
            } else {
                // sinh folded into the Gaussian so neither factor overflows
                0.5 * ((g + rho * x).exp() - (g - rho * x).exp()) / x
            }
        },
        settings,
    );
    Ok(IntegralValue {
        value: C64::new(-4.0 * q.value, 0.0),
        abs_error: 4.0 * q.abs_error,
        method: Method::Quadrature,
        converged: q.converged,
    })
}

/// Monte Carlo of PV int d^d omega exp(-omega^T rho omega / 2) / prod_{k in marked} omega_k.
///
/// Samples omega ~ N(0, rho^-1) and averages the integrand over sign flips of
/// the marked coordinates, which cancels the 1/omega singularities.
pub fn gaussian_fourier_mc(rho: &SymMatrix<f64>, marked: &[usize], settings: &MCSettings) -> Result<MCStat> {
    let d = rho.dim();
    if marked.iter().any(|&k| k >= d) {
        return Err(Error::IndexOutOfRange {
            index: *marked.iter().max().unwrap(),
            dim: d,
        });
    }
    let cov = rho.inverse()?;
    let l = cholesky_factor(&cov)?;
    let norm = (2.0 * PI).powf(d as f64 / 2.0) / rho.determinant().sqrt();
    let m = marked.len();
    let run = run_batches(settings, |rng| {
        let (mut z, mut x) = ([0.0; 9], [0.0; 9]);
        correlated_normal(&l, d, rng, &mut z[..d], &mut x[..d]);
        let w = &x[..d];
        let q0 = quad_form(rho, w);
        let (mut num, mut den) = (0.0, 0.0);
        let mut y = [0.0; 9];
        for mask in 0..(1u32 << m) {
            y[..d].copy_from_slice(w);
            let mut sgn = 1.0;
            for (b, &k) in marked.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    y[k] = -y[k];
                    sgn = -sgn;
                }
            }
            // Relative to the sampled point to avoid underflow.
            let e = (-0.5 * (quad_form(rho, &y[..d]) - q0)).exp();
            num += sgn * e;
            den += e;
        }
        let prod: f64 = marked.iter().map(|&k| w[k]).product();
        [norm * num / den / prod]
    })?;
    Ok(run.all[0].stat())
}


/// Direct Monte Carlo of the rank-2 tensor integral with numerator q_mu q_nu
/// and propagators (q + p_k)^2 - m_k^2 (unit powers), in the normalization of
/// the scalar J:
///
/// J_{mu nu}(n) = -1/2 g_{mu nu} (-1)^N Gamma(a - 1) / Gamma(N) E[Q^{1-a}]
///               + (-1)^N Gamma(a) / Gamma(N) E[P_mu P_nu Q^{-a}],
///
/// with a = N - n/2, u ~ Dirichlet(1, ..., 1), P = sum u_k p_k and Q = u^T Sigma u.
/// `metric` holds the diagonal of g. Returns the 4x4 components.
pub fn tensor_numerator_mc(
    config: &KinematicConfig,
    momenta: &[[f64; 4]],
    metric: [f64; 4],
    settings: &MCSettings,
) -> Result<[[MCStat; 4]; 4]> {
    config.validate()?;
    if !config.unit_powers() {
        return Err(Error::Unsupported("tensor oracle for unit powers only".into()));
    }
    let legs = config.n_legs();
    if momenta.len() != legs {
        return Err(Error::InvalidConfig(format!(
            "{} momenta for {legs} legs",
            momenta.len()
        )));
    }
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let sigma = &sigma.entries;
    let a = legs as f64 - config.n() / 2.0;
    if a <= 1.0 {
        return Err(Error::DivergentIntegral(format!(
            "metric term needs N - n/2 > 1, got {a}"
        )));
    }
    let sign = sign_pow(legs as u32);
    let c_g = -0.5 * sign * gamma(a - 1.0) / gamma(legs as f64);
    let c_p = sign * gamma(a) / gamma(legs as f64);
    let pairs: Vec<(usize, usize)> = (0..4).flat_map(|m| (m..4).map(move |n| (m, n))).collect();
    let run = run_batches::<10, _>(settings, |rng| {
        let mut u = [0.0; 9];
        let u = &mut u[..legs];
        let mut tot = 0.0;
        for ui in u.iter_mut() {
            *ui = rng.sample(Exp1);
            tot += *ui;
        }
        for ui in u.iter_mut() {
            *ui /= tot;
        }
        let q = quad_form(sigma, u);
        let mut p = [0.0; 4];
        for (uk, pk) in u.iter().zip(momenta) {
            for mu in 0..4 {
                p[mu] += uk * pk[mu];
            }
        }
        let (wg, wp) = (c_g * q.powf(1.0 - a), c_p * q.powf(-a));
        let mut out = [0.0; 10];
        for (o, &(m, n)) in out.iter_mut().zip(&pairs) {
            *o = wp * p[m] * p[n] + if m == n { wg * metric[m] } else { 0.0 };
        }
        out
    })?;
    let blank = MCStat {
        mean: 0.0,
        stderr: 0.0,
        samples: 0,
    };
    let mut t = [[blank; 4]; 4];
    for (k, &(m, n)) in pairs.iter().enumerate() {
        t[m][n] = run.all[k].stat();
        t[n][m] = t[m][n];
    }
    Ok(t)
}
