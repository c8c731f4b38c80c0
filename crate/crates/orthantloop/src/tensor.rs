//! Rank-2 tensor reduction of the five-point function in n = 4 - 2 eps.
//!
//! With propagators (q + p_k)^2 - m_k^2 and unit powers,
//!
//! J_{mu nu}(n) = -1/2 g_{mu nu} J(n + 2)
//!              + sum_k 2 p_{k mu} p_{k nu} J(n + 4; 1 + 2 delta_k)
//!              + sum_{k<l} (p_{k mu} p_{l nu} + p_{l mu} p_{k nu}) J(n + 4; 1 + delta_k + delta_l),
//!
//! so the reduction needs J^5(6 - 2 eps), five J^5(8 - 2 eps) with one
//! cubed propagator and ten with two squared ones, all expanded in eps
//! around base dimensions 5 and 7 (shift k = 1/2).

use crate::dimshift::{eps_expand_via, EpsSeries, PowerRoute, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::kinematics::{build_sigma, Dimension, KinematicConfig};
use crate::matrixops::SymMatrix;
use crate::quadrature::QuadratureSettings;
use crate::scalar::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type FourVector = [f64; 4];

/// Tolerance of the momentum consistency check, relative to max(1, |k^2|).
pub const MOMENTUM_TOL: f64 = 1e-10;

/// Metric used to square momentum differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Signature (+,-,-,-).
    #[default]
    Minkowski,
    /// Signature (+,+,+,+).
    Euclidean,
}

impl Metric {
    /// Diagonal of g_{mu nu}.
    pub fn signs(self) -> [f64; 4] {
        match self {
            Metric::Minkowski => [1.0, -1.0, -1.0, -1.0],
            Metric::Euclidean => [1.0; 4],
        }
    }

    pub fn dot(self, a: &FourVector, b: &FourVector) -> f64 {
        let g = self.signs();
        (0..4).map(|m| g[m] * a[m] * b[m]).sum()
    }

    pub fn square_diff(self, a: &FourVector, b: &FourVector) -> f64 {
        let d: FourVector = std::array::from_fn(|m| a[m] - b[m]);
        self.dot(&d, &d)
    }
}

/// Checks k^2_{jl} = (p_j - p_l)^2 for every pair.
pub fn check_momenta(config: &KinematicConfig, momenta: &[FourVector], metric: Metric) -> Result<()> {
    let n = config.n_legs();
    if momenta.len() != n {
        return Err(Error::InvalidConfig(format!(
            "{} momenta for {n} legs",
            momenta.len()
        )));
    }
    for j in 0..n {
        for l in j + 1..n {
            let expected = config.invariants[j][l];
            let found = metric.square_diff(&momenta[j], &momenta[l]);
            if (found - expected).abs() > MOMENTUM_TOL * expected.abs().max(1.0) {
                return Err(Error::InconsistentMomenta {
                    i: j,
                    j: l,
                    expected,
                    found,
                });
            }
        }
    }
    Ok(())
}

/// Euclidean momenta realizing the invariants, with p_0 = 0.
///
/// The Gram matrix G_jl = (k^2_{0j} + k^2_{0l} - k^2_{jl}) / 2 of p_1..p_{N-1}
/// must be positive semidefinite of rank <= 4; it is factorized by pivoted
/// Cholesky.
pub fn momenta_from_invariants(config: &KinematicConfig) -> Result<Vec<FourVector>> {
    config.validate()?;
    let n = config.n_legs();
    let k2 = &config.invariants;
    let m = n - 1;
    let g = SymMatrix::from_fn(m, |a, b| 0.5 * (k2[0][a + 1] + k2[0][b + 1] - k2[a + 1][b + 1]));
    let scale = g.max_abs().max(1.0);
    // Outer-product Cholesky; columns with a vanishing pivot are skipped.
    let mut resid: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|b| g.get(a, b)).collect()).collect();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for _ in 0..m {
        let (piv, val) = (0..m)
            .map(|i| (i, resid[i][i]))
            .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        if val < -1e-12 * scale {
            return Err(Error::Unsupported(
                "invariants have no Euclidean momentum realization (indefinite Gram matrix)".into(),
            ));
        }
        if val <= 1e-14 * scale {
            break;
        }
        let r = val.sqrt();
        let col: Vec<f64> = (0..m).map(|i| resid[i][piv] / r).collect();
        for i in 0..m {
            for j in 0..m {
                resid[i][j] -= col[i] * col[j];
            }
        }
        cols.push(col);
    }
    if cols.len() > 4 {
        return Err(Error::Unsupported(format!(
            "invariants need {} Euclidean dimensions",
            cols.len()
        )));
    }
    let mut out = vec![[0.0; 4]; n];
    for (c, col) in cols.iter().enumerate() {
        for a in 0..m {
            out[a + 1][c] = col[a];
        }
    }
    Ok(out)
}

/// Scalar coefficient series of the rank-2 five-point tensor integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorReduction5 {
    /// J^5(6 - 2 eps; 1).
    pub g_coefficient: EpsSeries,
    /// J^5(8 - 2 eps; 1 + 2 delta_k), k = 0..5; enters with weight 2.
    pub diag_coefficients: Vec<EpsSeries>,
    /// J^5(8 - 2 eps; 1 + delta_k + delta_l) for k < l in lexicographic order.
    pub offdiag_coefficients: Vec<EpsSeries>,
    pub momenta: Vec<FourVector>,
    pub metric: Metric,
}

/// Position of the pair (k, l), k != l, in `offdiag_coefficients`.
pub fn pair_index(k: usize, l: usize) -> usize {
    let (a, b) = if k < l { (k, l) } else { (l, k) };
    // pairs (0,1) (0,2) .. (0,4) (1,2) .. (3,4)
    (0..a).map(|i| 4 - i).sum::<usize>() + (b - a - 1)
}

impl TensorReduction5 {
    pub fn offdiag(&self, k: usize, l: usize) -> &EpsSeries {
        &self.offdiag_coefficients[pair_index(k, l)]
    }

    /// All 16 series with labels `g`, `diag_k`, `offdiag_k_l` (legs from 1).
    pub fn labelled_series(&self) -> Vec<(String, &EpsSeries)> {
        let mut out = vec![("g".to_string(), &self.g_coefficient)];
        for (k, s) in self.diag_coefficients.iter().enumerate() {
            out.push((format!("diag_{}", k + 1), s));
        }
        for k in 0..5 {
            for l in k + 1..5 {
                out.push((format!("offdiag_{}_{}", k + 1, l + 1), self.offdiag(k, l)));
            }
        }
        out
    }

    /// The eps^order coefficient of J_{mu nu} (lower indices).
    pub fn assemble(&self, order: usize) -> [[C64; 4]; 4] {
        let g = self.metric.signs();
        let c = |s: &EpsSeries| s.coefficients[order].value;
        let p = &self.momenta;
        let mut t = [[C64::new(0.0, 0.0); 4]; 4];
        for mu in 0..4 {
            for nu in 0..4 {
                let mut v = if mu == nu {
                    c(&self.g_coefficient) * (-0.5 * g[mu])
                } else {
                    C64::new(0.0, 0.0)
                };
                for k in 0..5 {
                    v += c(&self.diag_coefficients[k]) * (2.0 * p[k][mu] * p[k][nu]);
                    for l in k + 1..5 {
                        v += c(self.offdiag(k, l)) * (p[k][mu] * p[l][nu] + p[l][mu] * p[k][nu]);
                    }
                }
                t[mu][nu] = v;
            }
        }
        t
    }
}

// Identifies configurations that differ only by a relabeling which maps the
// raised legs onto the front: equal keys give bit-identical computations.
fn canonical(config: &KinematicConfig, raised: &[usize]) -> (KinematicConfig, Vec<u64>) {
    let n = config.n_legs();
    let perm: Vec<usize> = raised
        .iter()
        .copied()
        .chain((0..n).filter(|i| !raised.contains(i)))
        .collect();
    let c = config.permuted(&perm);
    let mut key: Vec<u64> = c.masses.iter().map(|m| m.to_bits()).collect();
    for row in &c.invariants {
        key.extend(row.iter().map(|v| v.to_bits()));
    }
    key.extend(c.powers.iter().map(|&p| p as u64));
    (c, key)
}

/// Reduces the rank-2 five-point tensor integral in n = 4 - 2 eps to 16 scalar
/// eps-series. `config` must have unit powers, five legs and dimension
/// `Expansion { d: 4, order }` (a fixed n = 4 uses the default order).
///
/// The raised-power families go through the single-leg and pair contours
/// (`PowerRoute::Contour`) or through duplicated legs, i.e. J^7(7)
/// (`PowerRoute::Duplicate`). Families that coincide after relabeling are
/// computed once.
pub fn reduce_rank2_5pt(
    config: &KinematicConfig,
    momenta: &[FourVector],
    metric: Metric,
    route: PowerRoute,
    settings: &QuadratureSettings,
) -> Result<TensorReduction5> {
    config.validate()?;
    if config.n_legs() != 5 || !config.unit_powers() {
        return Err(Error::InvalidConfig(
            "tensor reduction needs five legs with unit powers".into(),
        ));
    }
    let order = match config.dimension {
        Dimension::Expansion { d: 4, order } => order,
        Dimension::Fixed(n) if n == 4.0 => DEFAULT_ORDER,
        d => {
            return Err(Error::InvalidConfig(format!(
                "tensor reduction is set up for n = 4 - 2 eps, got {d:?}"
            )))
        }
    };
    build_sigma(config)?.require_positive_definite()?;
    check_momenta(config, momenta, metric)?;

    let family = |raised: &[usize], d: i32| {
        let mut c = config.clone();
        for &k in raised {
            c.powers[k] += if raised.len() == 1 { 2 } else { 1 };
        }
        c.dimension = Dimension::Expansion { d, order };
        canonical(&c, raised)
    };
    let mut jobs: Vec<(KinematicConfig, Vec<u64>)> = vec![family(&[], 6)];
    for k in 0..5 {
        jobs.push(family(&[k], 8));
    }
    for k in 0..5 {
        for l in k + 1..5 {
            jobs.push(family(&[k, l], 8));
        }
    }
    let mut unique: Vec<&KinematicConfig> = Vec::new();
    let mut slot: HashMap<&[u64], usize> = HashMap::new();
    let index: Vec<usize> = jobs
        .iter()
        .map(|(c, key)| {
            *slot.entry(key.as_slice()).or_insert_with(|| {
                unique.push(c);
                unique.len() - 1
            })
        })
        .collect();
    let results: Vec<EpsSeries> = unique
        .par_iter()
        .map(|c| eps_expand_via(c, route, settings))
        .collect::<Result<_>>()?;
    let mut series = index.into_iter().map(|i| results[i].clone());
    let g_coefficient = series.next().expect("g family");
    let diag_coefficients: Vec<EpsSeries> = series.by_ref().take(5).collect();
    let offdiag_coefficients: Vec<EpsSeries> = series.collect();
    Ok(TensorReduction5 {
        g_coefficient,
        diag_coefficients,
        offdiag_coefficients,
        momenta: momenta.to_vec(),
        metric,
    })
}
