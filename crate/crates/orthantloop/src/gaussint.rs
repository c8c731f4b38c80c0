//! Gaussian-kernel Fourier integrals over the positive orthant.
//!
//! All functions work in the normalized convention: `rho` has unit diagonal
//! and the single-leg weights sqrt(2 pi / R_jj) are applied by the caller.
//! `i_quad` returns I_ijkl / pi^4 and `i_hex` returns I_ijklmn / pi^6, so the
//! orthant probability reads
//!
//! P_N = 2^-N [ 1 + (2/pi) sum asin rho_ij + sum i_quad - sum i_hex ].
//!
//! Both higher integrals come from one recursion: fixing the anchor
//! variable's scale at 1/u^2 and conditioning on the anchor and one partner
//! reduces I_d to a single u-integral over I_{d-2} of a Schur complement.

use crate::error::{Error, Result};
use crate::matrixops::SymMatrix;
use crate::quadrature::{integrate, integrate_01, QuadValue, QuadratureSettings};
use crate::scalar::Scalar;
use crate::value::Estimate;
use itertools::Itertools;
use std::f64::consts::PI;

/// Scalars the integrals accept: f64 for Euclidean kinematics, C64 for
/// contour-shifted matrices.
pub trait GaussScalar: Scalar + QuadValue {}
impl<T: Scalar + QuadValue> GaussScalar for T {}

/// Tolerance on |1 - rho^2| below which conditioning is considered singular.
const CONDITIONING_EPS: f64 = 1e-14;

/// A correlation matrix restricted to a subset of legs.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSubmatrix<T = f64> {
    pub rho: SymMatrix<T>,
    /// Original leg indices of the rows.
    pub labels: Vec<usize>,
}

impl<T: Scalar> CorrelationSubmatrix<T> {
    pub fn new(rho: SymMatrix<T>) -> Result<Self> {
        let labels = (0..rho.dim()).collect();
        Self::with_labels(rho, labels)
    }

    pub fn with_labels(rho: SymMatrix<T>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != rho.dim() {
            return Err(Error::InvalidConfig("label count does not match matrix".into()));
        }
        check_unit_diagonal(&rho)?;
        Ok(CorrelationSubmatrix { rho, labels })
    }

    /// Restriction of a parent correlation matrix to `labels`.
    pub fn from_parent(parent: &SymMatrix<T>, labels: &[usize]) -> Result<Self> {
        for &l in labels {
            if l >= parent.dim() {
                return Err(Error::IndexOutOfRange {
                    index: l,
                    dim: parent.dim(),
                });
            }
        }
        Self::with_labels(parent.submatrix(labels), labels.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

fn check_unit_diagonal<T: Scalar>(rho: &SymMatrix<T>) -> Result<()> {
    for i in 0..rho.dim() {
        let d = rho.get(i, i);
        if (d - T::one()).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "correlation matrix needs unit diagonal, entry {i} is {d:?}"
            )));
        }
    }
    Ok(())
}

/// Real inputs must be positive definite; complex inputs are taken as given.
fn check_input<T: Scalar>(rho: &SymMatrix<T>, dim: usize) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::InvalidConfig(format!(
            "expected a {dim}x{dim} correlation matrix, got {}x{}",
            rho.dim(),
            rho.dim()
        )));
    }
    check_unit_diagonal(rho)?;
    if T::IS_REAL {
        let re = rho.map(|x| x.re());
        if re.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(())
}

/// sqrt(2 pi / r_jj).
pub fn i_single(r_jj: f64) -> Result<f64> {
    if !(r_jj > 0.0) {
        return Err(Error::NonPositiveDiagonal(r_jj));
    }
    Ok((2.0 * PI / r_jj).sqrt())
}

/// I_ij = -2 pi asin(rho_ij). Real arguments must lie in (-1, 1).
pub fn i_pair<T: Scalar>(rho_ij: T) -> Result<T> {
    if T::IS_REAL && rho_ij.re().abs() >= 1.0 {
        return Err(Error::OutOfRange(rho_ij.re()));
    }
    Ok(rho_ij.asin() * (-2.0 * PI))
}

/// Pair integral with leg `k` integrated out: sqrt(2 pi) * (-2 pi) asin of
/// the partial correlation of (i, j) given k.
pub fn i_pair_conditional(rho: &SymMatrix<f64>, pair: (usize, usize), k: usize) -> Result<f64> {
    check_input(rho, 3)?;
    let (i, j) = pair;
    for &x in &[i, j, k] {
        if x >= 3 {
            return Err(Error::IndexOutOfRange { index: x, dim: 3 });
        }
    }
    if i == j || i == k || j == k {
        return Err(Error::InvalidConfig("indices must be distinct".into()));
    }
    let (rij, rik, rjk) = (rho.get(i, j), rho.get(i, k), rho.get(j, k));
    let (ai, aj) = (1.0 - rik * rik, 1.0 - rjk * rjk);
    if ai < CONDITIONING_EPS || aj < CONDITIONING_EPS {
        return Err(Error::DegenerateConditioning(format!(
            "|rho| = 1 when conditioning on leg {k}"
        )));
    }
    let partial = (rij - rik * rjk) / (ai.sqrt() * aj.sqrt());
    Ok(i_single(1.0)? * i_pair(partial.clamp(-1.0, 1.0))?)
}

/// Row with the largest sum of |rho_ij|: keeps |rho_ij u| furthest from 1
/// relative to the other choices.
pub fn default_anchor<T: Scalar>(rho: &SymMatrix<T>) -> usize {
    (0..rho.dim())
        .map(|i| {
            let s: f64 = (0..rho.dim()).filter(|&j| j != i).map(|j| rho.get(i, j).abs()).sum();
            (i, s)
        })
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

fn resolve_anchor<T: Scalar>(rho: &SymMatrix<T>, anchor: Option<usize>) -> Result<usize> {
    match anchor {
        Some(a) if a >= rho.dim() => Err(Error::IndexOutOfRange {
            index: a,
            dim: rho.dim(),
        }),
        Some(a) => Ok(a),
        None => Ok(default_anchor(rho)),
    }
}

/// asin of the conditioned correlation between s and t, given the anchor i at
/// scale 1/u^2 and the partner r (the 4-leg integrand kernel).
fn quad_kernel<T: Scalar>(rho: &SymMatrix<T>, i: usize, r: usize, s: usize, t: usize, u: f64) -> T {
    let g = |a, b| rho.get(a, b);
    let u2 = u * u;
    let d = T::one() - g(i, r) * g(i, r) * u2;
    let nss = (T::one() - g(r, s) * g(r, s))
        - (g(i, r) * g(i, r) + g(i, s) * g(i, s) - g(i, r) * g(i, s) * g(r, s) * 2.0) * u2;
    let ntt = (T::one() - g(r, t) * g(r, t))
        - (g(i, r) * g(i, r) + g(i, t) * g(i, t) - g(i, r) * g(i, t) * g(r, t) * 2.0) * u2;
    let nst = g(s, t) * d
        - g(r, s) * g(r, t)
        - (g(i, s) * g(i, t) - g(i, r) * g(i, s) * g(r, t) - g(i, r) * g(r, s) * g(i, t)) * u2;
    let arg = if T::IS_REAL {
        nst / (nss * ntt).sqrt()
    } else {
        (nst / d) / ((nss / d).sqrt() * (ntt / d).sqrt())
    };
    arg.asin()
}

/// One weighted u-integral  int_0^1 rho_ir / sqrt(1 - rho_ir^2 u^2) g(u) du.
///
/// For real rho the weight is removed by rho_ir u = sin(theta).
fn weighted_u_integral<T, G>(rho_ir: T, g: G, settings: &QuadratureSettings) -> Result<Estimate<T>>
where
    T: GaussScalar,
    G: Fn(f64) -> T,
{
    if rho_ir == T::zero() {
        return Ok(Estimate::exact(T::zero()));
    }
    let q = if T::IS_REAL {
        let a = rho_ir.re().abs();
        if a >= 1.0 - CONDITIONING_EPS {
            return Err(Error::DegenerateConditioning(format!(
                "1 - rho^2 u^2 vanishes inside (0, 1] for rho = {a}"
            )));
        }
        let sign = rho_ir.re().signum();
        let q = integrate(|th: f64| g(th.sin() / a), 0.0, a.asin(), settings);
        Estimate {
            value: q.value * sign,
            abs_error: q.abs_error,
            converged: q.converged,
        }
    } else {
        let q = integrate_01(
            |u: f64| {
                let w = (T::one() - rho_ir * rho_ir * (u * u)).sqrt();
                rho_ir / w * g(u)
            },
            settings,
        );
        Estimate {
            value: q.value,
            abs_error: q.abs_error,
            converged: q.converged,
        }
    };
    if !q.value.is_finite() {
        return Err(Error::NonConvergence {
            value: q.value.abs(),
            abs_error: q.abs_error,
        });
    }
    Ok(q)
}

/// I_ijkl / pi^4 as three one-dimensional integrals around the anchor.
pub fn i_quad<T: GaussScalar>(
    rho: &SymMatrix<T>,
    anchor: Option<usize>,
    settings: &QuadratureSettings,
) -> Result<Estimate<T>> {
    check_input(rho, 4)?;
    let i = resolve_anchor(rho, anchor)?;
    let mut total = Estimate::exact(T::zero());
    let others: Vec<usize> = (0..4).filter(|&k| k != i).collect();
    for &r in &others {
        let (s, t) = others
            .iter()
            .copied()
            .filter(|&k| k != r)
            .collect_tuple()
            .expect("two remaining labels");
        let e = weighted_u_integral(rho.get(i, r), |u| quad_kernel(rho, i, r, s, t, u), settings)?;
        total = total.add(e);
    }
    Ok(total.scale(T::from_f64(4.0 / (PI * PI))))
}

/// Conditioned 4x4 coefficient matrix over the labels other than `i`, `j`:
/// rho_rs - rho_ir rho_is u^2 - (rho_jr - rho_ij rho_ir u^2)(rho_js - rho_ij rho_is u^2) / (1 - rho_ij^2 u^2).
///
/// Not unit-diagonal; renormalize before feeding it to [`i_quad`].
pub fn rho_tilde<T: Scalar>(rho: &SymMatrix<T>, i: usize, j: usize, u: f64) -> Result<SymMatrix<T>> {
    let n = rho.dim();
    if n != 6 {
        return Err(Error::InvalidConfig(format!("rho_tilde needs a 6x6 matrix, got {n}x{n}")));
    }
    for &x in &[i, j] {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, dim: n });
        }
    }
    if i == j {
        return Err(Error::InvalidConfig("anchor and partner must differ".into()));
    }
    let u2 = u * u;
    let rij = rho.get(i, j);
    let d = T::one() - rij * rij * u2;
    if d.abs() < CONDITIONING_EPS {
        return Err(Error::DegenerateConditioning(format!(
            "1 - rho_ij^2 u^2 vanishes at u = {u}"
        )));
    }
    let rest: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
    Ok(SymMatrix::from_fn(4, |a, b| {
        let (r, s) = (rest[a], rest[b]);
        let g = |x, y| rho.get(x, y);
        g(r, s) - g(i, r) * g(i, s) * u2
            - (g(j, r) - rij * g(i, r) * u2) * (g(j, s) - rij * g(i, s) * u2) / d
    }))
}

/// I_ijklmn / pi^6 as five weighted u-integrals of I_4 on rho_tilde(u).
pub fn i_hex<T: GaussScalar>(
    rho: &SymMatrix<T>,
    anchor: Option<usize>,
    settings: &QuadratureSettings,
) -> Result<Estimate<T>> {
    check_input(rho, 6)?;
    let i = resolve_anchor(rho, anchor)?;
    let inner = settings.inner(0.1);
    let mut total = Estimate::exact(T::zero());
    for r in (0..6).filter(|&k| k != i) {
        if rho.get(i, r) == T::zero() {
            continue;
        }
        // Fix the inner anchor per term so the integrand stays smooth in u.
        let inner_anchor = default_anchor(&rho_tilde(rho, i, r, 0.5)?.normalized());
        // Inner failures surface as NaN and are reported after integration.
        let g = |u: f64| -> T {
            match rho_tilde(rho, i, r, u).and_then(|m| i_quad(&m.normalized(), Some(inner_anchor), &inner)) {
                Ok(e) => e.value,
                Err(_) => T::from_f64(f64::NAN),
            }
        };
        let e = weighted_u_integral(rho.get(i, r), g, settings)?;
        total = total.add(e);
    }
    Ok(total.scale(T::from_f64(-2.0 / PI)))
}

/// Normalized I-value of a principal submatrix of even size 0..=6.
fn i_even<T: GaussScalar>(rho: &SymMatrix<T>, settings: &QuadratureSettings) -> Result<Estimate<T>> {
    match rho.dim() {
        0 => Ok(Estimate::exact(T::one())),
        // (-1) pi^-2 I_ij
        2 => Ok(Estimate::exact(rho.get(0, 1).asin() * (2.0 / PI))),
        4 => i_quad(rho, None, settings),
        6 => i_hex(rho, None, settings).map(|e| e.scale(-T::one())),
        d => Err(Error::Unsupported(format!("orthant integral of dimension {d}"))),
    }
}

/// Orthant probability P(X > 0) for X ~ N(0, rho), rho unit-diagonal, N <= 7.
/// Complex rho gives the analytic continuation used by shifted-mass evaluations.
pub fn orthant_probability<T: GaussScalar>(
    rho: &SymMatrix<T>,
    settings: &QuadratureSettings,
) -> Result<Estimate<T>> {
    let n = rho.dim();
    if n == 0 || n > 7 {
        return Err(Error::Unsupported(format!("orthant probability for N = {n}")));
    }
    check_input(rho, n)?;
    let mut total = Estimate::exact(T::zero());
    for k in (0..=n).step_by(2) {
        for subset in (0..n).combinations(k) {
            let e = i_even(&rho.submatrix(&subset), settings)?;
            total = total.add(e);
        }
    }
    Ok(total.scale(T::from_f64(0.5f64.powi(n as i32))))
}

/// Follows `f` along the straight path from `start` to `end` and flags a jump
/// between neighbouring samples that is large compared with the typical step.
pub fn check_continuity<T, F>(start: &SymMatrix<T>, end: &SymMatrix<T>, steps: usize, f: F) -> Result<()>
where
    T: Scalar,
    F: Fn(&SymMatrix<T>) -> Result<T>,
{
    let steps = steps.max(4);
    let vals: Vec<T> = (0..=steps)
        .map(|k| {
            let lam = k as f64 / steps as f64;
            let m = SymMatrix::from_fn(start.dim(), |a, b| start.get(a, b) * (1.0 - lam) + end.get(a, b) * lam);
            f(&m)
        })
        .collect::<Result<_>>()?;
    let jumps: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut sorted = jumps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (k, &j) in jumps.iter().enumerate() {
        if j > 20.0 * median.max(1e-3 * scale) {
            return Err(Error::BranchDiscontinuity(format!(
                "jump of {j:e} between steps {k} and {} (median step {median:e})",
                k + 1
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C64;

    fn equi(n: usize, c: f64) -> SymMatrix<f64> {
        SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { c })
    }

    #[test]
    fn singles_and_pairs() {
        assert!((i_single(2.0 * PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((i_single(0.5).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!(i_single(0.0).is_err());
        assert!((i_pair(0.5).unwrap() + PI * PI / 3.0).abs() < 1e-14);
        assert!(matches!(i_pair(1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn equicorrelated_orthants_have_closed_forms() {
        let s = QuadratureSettings::default().with_rel_tol(1e-11);
        // P_3 = 1/8 + 3 asin(c) / (4 pi)
        let p3 = orthant_probability(&equi(3, 0.5), &s).unwrap().value;
        assert!((p3 - 0.25).abs() < 1e-14);
        // P_4 at c = 1/2 is 1/5.
        let p4 = orthant_probability(&equi(4, 0.5), &s).unwrap().value;
        assert!((p4 - 0.2).abs() < 1e-10, "{p4}");
        // P_N at c = 1/2 is 1/(N+1).
        let p6 = orthant_probability(&equi(6, 0.5), &s).unwrap().value;
        assert!((p6 - 1.0 / 7.0).abs() < 1e-8, "{p6}");
    }

    #[test]
    fn identity_gives_zero() {
        let s = QuadratureSettings::default();
        assert_eq!(i_quad(&SymMatrix::<f64>::identity(4), None, &s).unwrap().value, 0.0);
        assert_eq!(i_hex(&SymMatrix::<f64>::identity(6), None, &s).unwrap().value, 0.0);
    }

    #[test]
    fn complex_path_agrees_with_real_path() {
        let s = QuadratureSettings::default().with_rel_tol(1e-11);
        let rho = SymMatrix::from_rows(&[
            vec![1.0, 0.3, -0.2, 0.1],
            vec![0.3, 1.0, 0.25, -0.3],
            vec![-0.2, 0.25, 1.0, 0.4],
            vec![0.1, -0.3, 0.4, 1.0],
        ])
        .unwrap();
        let r = i_quad(&rho, Some(1), &s).unwrap().value;
        let c = i_quad(&rho.to_c64(), Some(1), &s).unwrap().value;
        assert!((c - C64::new(r, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn rho_tilde_at_zero_conditions_on_partner() {
        let rho = SymMatrix::from_fn(6, |i, j| if i == j { 1.0 } else { 0.1 * ((i + 2 * j) % 5) as f64 - 0.2 });
        let t = rho_tilde(&rho, 0, 1, 0.0).unwrap();
        let rest = [2, 3, 4, 5];
        for a in 0..4 {
            for b in 0..4 {
                let (r, s) = (rest[a], rest[b]);
                let want = rho.get(r, s) - rho.get(1, r) * rho.get(1, s);
                assert!((t.get(a, b) - want).abs() < 1e-15);
            }
        }
    }
}
