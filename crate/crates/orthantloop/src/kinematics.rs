//! Masses, invariants and propagator powers; the Sigma matrix and the
//! kinematic angles with their continuation outside |c| <= 1.

use crate::error::{Error, Result};
use crate::matrixops::{Definiteness, SymMatrix};
use crate::scalar::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// |c| this close to 1 is snapped onto the boundary.
pub const BOUNDARY_SNAP: f64 = 1e-12;
/// Pivot tolerance (relative to the largest diagonal) for the PD test.
pub const PD_PIVOT_TOL: f64 = 1e-12;

/// Spacetime dimension: a fixed real `n`, or an integer base `d` around
/// which `n = d - 2 eps` is expanded to the given order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Fixed(f64),
    Expansion { d: i32, order: usize },
}

impl Dimension {
    /// The dimension at eps = 0.
    pub fn n(&self) -> f64 {
        match *self {
            Dimension::Fixed(n) => n,
            Dimension::Expansion { d, .. } => d as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicConfig {
    pub masses: Vec<f64>,
    /// k^2_{jl} = (p_j - p_l)^2, symmetric; the diagonal is ignored.
    pub invariants: Vec<Vec<f64>>,
    pub powers: Vec<u32>,
    pub dimension: Dimension,
}

impl KinematicConfig {
    pub fn new(
        masses: Vec<f64>,
        invariants: Vec<Vec<f64>>,
        powers: Vec<u32>,
        dimension: Dimension,
    ) -> Result<Self> {
        let cfg = KinematicConfig {
            masses,
            invariants,
            powers,
            dimension,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit propagator powers in fixed dimension `n`.
    pub fn unit(masses: Vec<f64>, invariants: Vec<Vec<f64>>, n: f64) -> Result<Self> {
        let len = masses.len();
        Self::new(masses, invariants, vec![1; len], Dimension::Fixed(n))
    }

    /// Recovers masses and invariants from a Sigma matrix:
    /// m_i^2 = Sigma_ii, k^2_{jl} = Sigma_jj + Sigma_ll - 2 Sigma_jl.
    pub fn from_sigma(sigma: &SymMatrix<f64>, powers: Vec<u32>, dimension: Dimension) -> Result<Self> {
        let n = sigma.dim();
        let masses = (0..n).map(|i| sigma.get(i, i).sqrt()).collect();
        let invariants = (0..n)
            .map(|j| {
                (0..n)
                    .map(|l| {
                        if j == l {
                            0.0
                        } else {
                            sigma.get(j, j) + sigma.get(l, l) - 2.0 * sigma.get(j, l)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(masses, invariants, powers, dimension)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.masses.len();
        if n == 0 {
            return Err(Error::InvalidConfig("no legs".into()));
        }
        for (i, &m) in self.masses.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::NonPositiveMass { leg: i, value: m });
            }
        }
        if self.invariants.len() != n || self.invariants.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig(format!(
                "invariants must be a {n}x{n} matrix"
            )));
        }
        for j in 0..n {
            for l in 0..j {
                let (a, b) = (self.invariants[j][l], self.invariants[l][j]);
                if !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "invariants not symmetric at k2_{}_{}",
                        l + 1,
                        j + 1
                    )));
                }
            }
        }
        if self.powers.len() != n {
            return Err(Error::InvalidConfig(format!("expected {n} powers")));
        }
        if let Some(i) = self.powers.iter().position(|&p| p == 0) {
            return Err(Error::InvalidConfig(format!("power_{} must be >= 1", i + 1)));
        }
        if !self.dimension.n().is_finite() {
            return Err(Error::InvalidConfig("dimension must be finite".into()));
        }
        Ok(())
    }

    pub fn n_legs(&self) -> usize {
        self.masses.len()
    }

    pub fn nu_total(&self) -> u32 {
        self.powers.iter().sum()
    }

    pub fn n(&self) -> f64 {
        self.dimension.n()
    }

    pub fn unit_powers(&self) -> bool {
        self.powers.iter().all(|&p| p == 1)
    }

    pub fn with_dimension(&self, n: f64) -> Self {
        KinematicConfig {
            dimension: Dimension::Fixed(n),
            ..self.clone()
        }
    }

    pub fn with_powers(&self, powers: Vec<u32>) -> Self {
        KinematicConfig {
            powers,
            ..self.clone()
        }
    }

    /// c_{jl} = (m_j^2 + m_l^2 - k^2_{jl}) / (2 m_j m_l); c_jj = 1.
    pub fn cosine(&self, j: usize, l: usize) -> f64 {
        if j == l {
            return 1.0;
        }
        let (mj, ml) = (self.masses[j], self.masses[l]);
        (mj * mj + ml * ml - self.invariants[j][l]) / (2.0 * mj * ml)
    }

    /// Relabels legs: leg `a` of the result is leg `perm[a]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        KinematicConfig {
            masses: perm.iter().map(|&p| self.masses[p]).collect(),
            invariants: perm
                .iter()
                .map(|&a| perm.iter().map(|&b| self.invariants[a][b]).collect())
                .collect(),
            powers: perm.iter().map(|&p| self.powers[p]).collect(),
            dimension: self.dimension,
        }
    }

    /// Multiplies masses by `lambda` and invariants by `lambda^2`.
    pub fn scaled(&self, lambda: f64) -> Self {
        KinematicConfig {
            masses: self.masses.iter().map(|m| m * lambda).collect(),
            invariants: self
                .invariants
                .iter()
                .map(|r| r.iter().map(|k| k * lambda * lambda).collect())
                .collect(),
            ..self.clone()
        }
    }

    /// Pairs whose cosine was snapped onto |c| = 1 (see [`angle`]).
    pub fn snapped_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_legs();
        let mut out = Vec::new();
        for j in 0..n {
            for l in j + 1..n {
                if pair_angle(self, j, l).snapped {
                    out.push((j, l));
                }
            }
        }
        out
    }
}

/// Kallen function, evaluated on sorted arguments so that it is exactly
/// symmetric under permutations.
pub fn kallen(x: f64, y: f64, z: f64) -> f64 {
    let mut v = [x, y, z];
    v.sort_by(f64::total_cmp);
    let [a, b, c] = v;
    a * a + b * b + c * c - 2.0 * (a * b + a * c + b * c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaMatrix {
    pub entries: SymMatrix<f64>,
    pub pd_status: Definiteness,
}

impl SigmaMatrix {
    pub fn from_entries(entries: SymMatrix<f64>) -> Self {
        let pd_status = entries.definiteness(PD_PIVOT_TOL);
        SigmaMatrix { entries, pd_status }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.pd_status == Definiteness::PositiveDefinite
    }

    pub fn require_positive_definite(&self) -> Result<()> {
        if self.is_positive_definite() {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite)
        }
    }
}

/// Sigma_ii = m_i^2, Sigma_jl = m_j m_l c_jl = (m_j^2 + m_l^2 - k^2_jl) / 2.
pub fn build_sigma(config: &KinematicConfig) -> Result<SigmaMatrix> {
    config.validate()?;
    let n = config.n_legs();
    let m = &config.masses;
    let entries = SymMatrix::from_fn(n, |j, l| {
        if j == l {
            m[j] * m[j]
        } else {
            m[j] * m[l] * config.cosine(j, l)
        }
    });
    Ok(SigmaMatrix::from_entries(entries))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// -1 <= c <= 1
    Interior,
    /// c > 1
    BelowPseudothreshold,
    /// c < -1
    AboveThreshold,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicAngle {
    pub c: f64,
    pub tau: C64,
    pub branch: Branch,
    /// True when c was moved onto |c| = 1, or when lambda vanished with c
    /// numerically off the boundary.
    pub snapped: bool,
}

/// The angle tau with cos(tau) = c, continued as
/// tau = -i Arch(c) for c > 1 and tau = pi + i Arch(-c) for c < -1.
pub fn angle(c: f64, lambda_value: f64) -> KinematicAngle {
    let near_one = (c.abs() - 1.0).abs() <= BOUNDARY_SNAP;
    if near_one || lambda_value == 0.0 {
        let snapped = c.abs() != 1.0;
        let (tau, cc) = if c > 0.0 { (0.0, 1.0) } else { (PI, -1.0) };
        return KinematicAngle {
            c: cc,
            tau: C64::new(tau, 0.0),
            branch: Branch::Interior,
            snapped,
        };
    }
    if c > 1.0 {
        KinematicAngle {
            c,
            tau: C64::new(0.0, -c.acosh()),
            branch: Branch::BelowPseudothreshold,
            snapped: false,
        }
    } else if c < -1.0 {
        KinematicAngle {
            c,
            tau: C64::new(PI, (-c).acosh()),
            branch: Branch::AboveThreshold,
            snapped: false,
        }
    } else {
        KinematicAngle {
            c,
            tau: C64::new(c.acos(), 0.0),
            branch: Branch::Interior,
            snapped: false,
        }
    }
}

/// Angle of the pair (j, l) of a configuration.
pub fn pair_angle(config: &KinematicConfig, j: usize, l: usize) -> KinematicAngle {
    let (mj, ml) = (config.masses[j], config.masses[l]);
    let lambda = kallen(mj * mj, ml * ml, config.invariants[j][l]);
    angle(config.cosine(j, l), lambda)
}
