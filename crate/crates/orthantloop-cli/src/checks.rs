//! Self-consistency checks run by `validate` on a single configuration.

use crate::output::{Record, Status};
use orthantloop::dimshift::{self, PowerRoute};
use orthantloop::error::Error;
use orthantloop::gaussint;
use orthantloop::kinematics::{build_sigma, Dimension, KinematicConfig};
use orthantloop::oracle::{self, MCSettings};
use orthantloop::quadrature::QuadratureSettings;
use orthantloop::value::IntegralValue;

fn record(check: &str, status: Status, detail: String) -> Record {
    Record::Check {
        check: check.to_string(),
        status,
        detail,
    }
}

fn from_result(check: &str, r: Result<(bool, String), Error>) -> Record {
    match r {
        Ok((true, d)) => record(check, Status::Pass, d),
        Ok((false, d)) => record(check, Status::Fail, d),
        Err(e @ (Error::Unsupported(_) | Error::AssemblyLimit(_) | Error::DivergentIntegral(_))) => {
            record(check, Status::Skip, e.to_string())
        }
        Err(e) => record(check, Status::Fail, e.to_string()),
    }
}

/// Agreement within `sigmas` combined standard errors or relative `rel`.
fn agree(a: &IntegralValue, b: &IntegralValue, sigmas: f64, rel: f64) -> (bool, String) {
    let z = a.sigma_distance(b);
    let r = a.rel_diff(b);
    (
        z <= sigmas || r <= rel,
        format!("{:.10e} vs {:.10e}: rel {r:.2e}, {z:.2} sigma", a.re(), b.re()),
    )
}

/// Runs every check that applies to `config`. Each check reports pass, fail,
/// or skip (not applicable).
pub fn validate_config(
    config: &KinematicConfig,
    quad: &QuadratureSettings,
    mc: &MCSettings,
    route: PowerRoute,
) -> Vec<Record> {
    let mut out = Vec::new();
    let fixed = config.with_dimension(config.n());

    out.push(from_result(
        "positive_definite",
        build_sigma(config).map(|s| {
            let pd = s.is_positive_definite();
            (pd, format!("Sigma positive definite: {pd}"))
        }),
    ));

    let value = dimshift::evaluate(&fixed, quad);
    out.push(from_result(
        "oracle_agreement",
        value.clone().and_then(|v| {
            let o = oracle::feynman_oracle(&fixed, quad, mc)?;
            Ok(agree(&v, &o, 3.0, 1e-6))
        }),
    ));

    out.push(from_result(
        "relabel_invariance",
        value.clone().and_then(|v| {
            let perm: Vec<usize> = (0..config.n_legs()).rev().collect();
            let w = dimshift::evaluate(&fixed.permuted(&perm), quad)?;
            Ok(agree(&v, &w, 3.0, 1e-9))
        }),
    ));

    out.push(from_result(
        "mass_scaling",
        value.clone().and_then(|v| {
            // J(lambda) = lambda^{n - 2 nu} J(1)
            let lambda = 2.0;
            let w = dimshift::evaluate(&fixed.scaled(lambda), quad)?;
            let expo = fixed.n() - 2.0 * fixed.nu_total() as f64;
            let scaled = w.scale(orthantloop::scalar::C64::new(lambda.powf(-expo), 0.0));
            Ok(agree(&v, &scaled, 3.0, 1e-9))
        }),
    ));

    let legs = config.n_legs();
    out.push(from_result(
        "orthant_probability",
        (|| {
            if !(2..=7).contains(&legs) {
                return Err(Error::Unsupported(format!("orthant check for N = {legs}")));
            }
            let s = build_sigma(config)?;
            s.require_positive_definite()?;
            let r = s.entries.inverse()?;
            let p = gaussint::orthant_probability(&r.normalized(), quad)?;
            let m = oracle::orthant_mc(&r, mc)?;
            let z = (p.value - m.mean).abs() / m.stderr.max(f64::MIN_POSITIVE);
            Ok((z <= 3.0, format!("{:.8} vs MC {:.8} +- {:.1e}: {z:.2} sigma", p.value, m.mean, m.stderr)))
        })(),
    ));

    out.push(from_result(
        "recurrence_lower",
        (|| {
            if legs < 3 {
                return Err(Error::Unsupported("recurrence check needs N >= 3".into()));
            }
            let r = dimshift::recurrence_check_lower(&fixed, quad)?;
            let tol = 1e3 * quad.rel_tol;
            Ok((r.residual <= tol, format!("residual {:.2e} (tolerance {tol:.0e})", r.residual)))
        })(),
    ));

    if let Dimension::Expansion { d, .. } = config.dimension {
        out.push(from_result(
            "eps_c0_vs_dimension_shift",
            (|| {
                let s = dimshift::eps_expand_via(config, route, quad)?;
                let direct = dimshift::evaluate(&config.with_dimension(d as f64), quad)?;
                let c0 = &s.coefficients[0];
                let r = c0.rel_diff(&direct);
                Ok((r <= 1e-4, format!("c0 {:.10e} vs J(d) {:.10e}: rel {r:.2e}", c0.re(), direct.re())))
            })(),
        ));
    }
    out
}
