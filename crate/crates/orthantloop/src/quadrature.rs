//! Adaptive Gauss-Kronrod (10/21) quadrature for real, complex and
//! vector-valued integrands, semi-infinite domain maps, and the truncated
//! vertical (Bromwich) contour integral.

use crate::error::{Error, Result};
use crate::scalar::C64;
use crate::value::Estimate;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525478100,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Values the integrator can accumulate: scalars and fixed-length vectors.
pub trait QuadValue: Clone + Send + Sync {
    fn zeros_like(&self) -> Self;
    /// self += w * other
    fn add_scaled(&mut self, other: &Self, w: f64);
    /// Max-abs norm over components.
    fn norm(&self) -> f64;
    fn all_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += w * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for C64 {
    fn zeros_like(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn norm(&self) -> f64 {
        C64::norm(*self)
    }
    fn all_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<V: QuadValue> QuadValue for Vec<V> {
    fn zeros_like(&self) -> Self {
        self.iter().map(|v| v.zeros_like()).collect()
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_scaled(b, w);
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.all_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainMap {
    /// x = t / (1 - t)
    Rational,
    /// x = -ln(1 - t)
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Bromwich abscissa; `None` lets the caller pick a safe default.
    pub contour_abscissa_c: Option<f64>,
    /// Initial half-height of the contour before shell doubling;
    /// `None` means 8 c.
    pub contour_halfheight_t: Option<f64>,
    pub infinite_domain_map: DomainMap,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            contour_abscissa_c: None,
            contour_halfheight_t: None,
            infinite_domain_map: DomainMap::Rational,
        }
    }
}

impl QuadratureSettings {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    /// Settings for an integral nested inside another: tolerances tightened
    /// by `factor` (floored at 1e-13 relative).
    pub fn inner(&self, factor: f64) -> Self {
        QuadratureSettings {
            rel_tol: (self.rel_tol * factor).max(1e-13),
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) || self.max_subdivisions == 0 {
            return Err(Error::InvalidConfig(
                "tolerances must be positive and max_subdivisions >= 1".into(),
            ));
        }
        if let Some(c) = self.contour_abscissa_c {
            if !(c > 0.0) {
                return Err(Error::InvalidConfig("contour abscissa must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Quad<V> {
    pub value: V,
    pub abs_error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl Quad<f64> {
    pub fn estimate(&self) -> Estimate<f64> {
        Estimate {
            value: self.value,
            abs_error: self.abs_error,
            converged: self.converged,
        }
    }
}

impl Quad<C64> {
    pub fn estimate(&self) -> Estimate<C64> {
        Estimate {
            value: self.value,
            abs_error: self.abs_error,
            converged: self.converged,
        }
    }
}

impl<V: QuadValue> Quad<V> {
    /// Converts a non-converged result into an error.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                value: self.value.norm(),
                abs_error: self.abs_error,
            })
        }
    }
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod evaluation with the embedded 10-point Gauss error.
fn gk21<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.zeros_like();
    kron.add_scaled(&fc, WGK[10]);
    let mut gauss = fc.zeros_like();
    let mut fvals: Vec<(V, V)> = Vec::with_capacity(10);
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron.add_scaled(&f1, WGK[j]);
        kron.add_scaled(&f2, WGK[j]);
        if j % 2 == 1 {
            gauss.add_scaled(&f1, WG[j / 2]);
            gauss.add_scaled(&f2, WG[j / 2]);
        }
        fvals.push((f1, f2));
    }
    // resabs / resasc in norm form (QUADPACK error heuristic).
    let mut mean = kron.zeros_like();
    mean.add_scaled(&kron, 0.5);
    let dev = |v: &V| {
        let mut d = v.clone();
        d.add_scaled(&mean, -1.0);
        d.norm()
    };
    let mut resabs = WGK[10] * fc.norm();
    let mut resasc = WGK[10] * dev(&fc);
    for (j, (f1, f2)) in fvals.iter().enumerate() {
        resabs += WGK[j] * (f1.norm() + f2.norm());
        resasc += WGK[j] * (dev(f1) + dev(f2));
    }
    let mut diff = kron.clone();
    diff.add_scaled(&gauss, -1.0);
    let h = half.abs();
    let mut err = diff.norm() * h;
    let resasc = resasc * h;
    let resabs = resabs * h;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    let mut value = kron.zeros_like();
    value.add_scaled(&kron, half);
    if !value.all_finite() {
        err = f64::INFINITY;
    }
    (value, err)
}

/// A sliver next to an integrable endpoint singularity may hit the singular
/// point in floating point. Its value is dropped and charged to the error
/// budget using the neighbouring half as a proxy (an inverse-square-root
/// singularity puts ~2.4x more mass in the end sliver than its neighbour).
fn sanitize<V: QuadValue>(
    left: (V, f64),
    right: (V, f64),
    width: f64,
    total: f64,
) -> ((V, f64), (V, f64)) {
    if width.abs() > 1e-11 * total.abs() {
        return (left, right);
    }
    match (left.1.is_finite(), right.1.is_finite()) {
        (false, true) => {
            let e = 3.0 * (right.0.norm() + right.1);
            ((right.0.zeros_like(), e), right)
        }
        (true, false) => {
            let e = 3.0 * (left.0.norm() + left.1);
            let z = left.0.zeros_like();
            (left, (z, e))
        }
        _ => (left, right),
    }
}

/// Globally adaptive integration of `f` over [a, b]: the segment with the
/// largest error estimate is bisected until the total error is below
/// max(abs_tol, rel_tol * |value|) or the subdivision budget is spent.
pub fn integrate<V, F>(f: F, a: f64, b: f64, settings: &QuadratureSettings) -> Quad<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    let (v0, e0) = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    let mut total = v0.clone();
    let mut total_err = e0;
    heap.push(Segment {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut converged = false;
    let mut frozen: Vec<Segment<V>> = Vec::new();
    for _ in 0..settings.max_subdivisions {
        let tol = settings.abs_tol.max(settings.rel_tol * total.norm());
        if total_err <= tol {
            converged = true;
            break;
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        // Interval exhausted at machine precision: keep as is.
        if mid <= seg.a || mid >= seg.b || (seg.b - seg.a) <= 4.0 * f64::EPSILON * mid.abs() {
            frozen.push(seg);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let ((v1, e1), (v2, e2)) =
            sanitize(gk21(&f, seg.a, mid), gk21(&f, mid, seg.b), seg.b - seg.a, b - a);
        evaluations += 42;
        total.add_scaled(&seg.value, -1.0);
        total.add_scaled(&v1, 1.0);
        total.add_scaled(&v2, 1.0);
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum exactly to remove drift from the running totals.
    let mut value = total.zeros_like();
    let mut abs_error = 0.0;
    for s in heap.iter().chain(frozen.iter()) {
        value.add_scaled(&s.value, 1.0);
        abs_error += s.error;
    }
    if !converged {
        let tol = settings.abs_tol.max(settings.rel_tol * value.norm());
        converged = abs_error <= tol;
    }
    Quad {
        value,
        abs_error,
        converged: converged && abs_error.is_finite(),
        evaluations,
    }
}

/// Integral over [0, 1].
pub fn integrate_01<V, F>(f: F, settings: &QuadratureSettings) -> Quad<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    integrate(f, 0.0, 1.0, settings)
}

/// Integral over [0, 1] of `f(u) / sqrt(1 - u^2)`, with the arcsine weight
/// removed by u = sin(theta).
pub fn integrate_01_arcsine<V, F>(f: F, settings: &QuadratureSettings) -> Quad<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    integrate(|th: f64| f(th.sin()), 0.0, FRAC_PI_2, settings)
}

/// Integral over [0, inf) after mapping onto [0, 1).
pub fn integrate_0inf<V, F>(f: F, settings: &QuadratureSettings) -> Quad<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    match settings.infinite_domain_map {
        DomainMap::Rational => integrate(
            |t: f64| {
                let om = 1.0 - t;
                let v = f(t / om);
                let mut out = v.zeros_like();
                out.add_scaled(&v, 1.0 / (om * om));
                out
            },
            0.0,
            1.0,
            settings,
        ),
        DomainMap::Exponential => integrate(
            |t: f64| {
                let x = -(-t).ln_1p();
                let v = f(x);
                let mut out = v.zeros_like();
                out.add_scaled(&v, 1.0 / (1.0 - t));
                out
            },
            0.0,
            1.0,
            settings,
        ),
    }
}

/// Nested 2D integral over [0, inf)^2 of f(x, y).
pub fn integrate_0inf_2d<F>(f: F, settings: &QuadratureSettings) -> Quad<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let inner = settings.inner(0.1);
    integrate_0inf(
        |x: f64| integrate_0inf(|y: f64| f(x, y), &inner).value,
        settings,
    )
}

const LINE_MAX_LEVELS: usize = 8;
// Consecutive negligible samples that end the sweep in one direction.
const LINE_TAIL_RUN: usize = 3;

/// Integral over the real line of f, analytic in a strip around the axis and
/// decaying exponentially in both directions, by the trapezoidal rule with
/// step halving.
///
/// For such integrands the trapezoidal error falls like exp(-2 pi a / h)
/// (a the strip half-width), so each halving roughly doubles the digits. Each
/// level reuses the previous nodes; the change between two levels is the
/// error estimate. Sweeps start at `center` and stop in each direction after
/// a run of negligible samples or at the edge of `range`, beyond which the
/// caller asserts the integrand is negligible.
pub fn integrate_line<V, F>(
    f: F,
    center: f64,
    h0: f64,
    range: (f64, f64),
    settings: &QuadratureSettings,
) -> Quad<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    let f0 = f(center);
    let evaluations = Cell::new(1usize);
    let finite = Cell::new(f0.all_finite());
    let mut sum = f0.clone();
    let mut h = h0;
    let mut reach = [0.0f64; 2];
    let scale = |sum: &V, h: f64| (sum.norm() * h).max(f64::MIN_POSITIVE);
    // Sweeps nodes center +- (offset + j step) outward, at least out to the
    // previous reach, until LINE_TAIL_RUN samples in a row are negligible.
    let sweep = |sum: &mut V, offset: f64, step: f64, h: f64, reach: &mut [f64; 2]| {
        let mut added = sum.zeros_like();
        for (dir, sign) in [(0, 1.0), (1, -1.0)] {
            let mut run = 0;
            let mut j = 0usize;
            loop {
                let dx = offset + j as f64 * step;
                let limit = if dir == 0 { range.1 - center } else { center - range.0 };
                if dx > limit {
                    reach[dir] = reach[dir].max(limit);
                    break;
                }
                let v = f(center + sign * dx);
                evaluations.set(evaluations.get() + 1);
                if !v.all_finite() {
                    finite.set(false);
                    break;
                }
                let small = v.norm() * h
                    <= 0.01 * (settings.rel_tol * scale(sum, h)).max(settings.abs_tol);
                added.add_scaled(&v, 1.0);
                run = if small { run + 1 } else { 0 };
                j += 1;
                if run >= LINE_TAIL_RUN && dx >= reach[dir] {
                    reach[dir] = dx;
                    break;
                }
            }
        }
        sum.add_scaled(&added, 1.0);
    };
    sweep(&mut sum, h, h, h, &mut reach);
    let mut value = sum.zeros_like();
    value.add_scaled(&sum, h);
    let mut abs_error = f64::INFINITY;
    let mut converged = false;
    for _ in 0..LINE_MAX_LEVELS {
        if !finite.get() {
            break;
        }
        // Halve the step: the new nodes sit at odd multiples of h / 2.
        let half = 0.5 * h;
        sweep(&mut sum, half, h, half, &mut reach);
        h = half;
        let mut next = sum.zeros_like();
        next.add_scaled(&sum, h);
        let mut diff = next.clone();
        diff.add_scaled(&value, -1.0);
        abs_error = diff.norm();
        value = next;
        if abs_error <= (settings.rel_tol * value.norm()).max(settings.abs_tol) {
            converged = true;
            break;
        }
    }
    Quad {
        value,
        abs_error,
        converged: converged && finite.get(),
        evaluations: evaluations.get(),
    }
}

/// How the vertical line integral may exploit symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContourSymmetry {
    /// No assumption.
    General,
    /// f(conj s) = conj f(s): only the upper half is integrated and the
    /// result is real.
    Conjugate,
}

const MAX_SHELL_DOUBLINGS: usize = 48;

/// (1 / 2 pi i) * integral of f over the vertical line Re s = c.
///
/// The segment |Im s| <= T0 is integrated first; then shells
/// T <= |Im s| <= 2T are added with T doubling until two consecutive shell
/// contributions fall below the tolerance. The remaining tail is
/// extrapolated geometrically from the last shells (or bounded by the last
/// shell when the ratios are erratic) and added to the error.
pub fn integrate_contour<F>(
    f: F,
    c: f64,
    symmetry: ContourSymmetry,
    settings: &QuadratureSettings,
) -> Result<Quad<C64>>
where
    F: Fn(C64) -> C64,
{
    if !(c > 0.0) {
        return Err(Error::InvalidConfig("contour abscissa must be positive".into()));
    }
    let g = |t: f64| f(C64::new(c, t));
    let t0 = settings.contour_halfheight_t.unwrap_or(8.0 * c);
    let conj = symmetry == ContourSymmetry::Conjugate;

    // Piece over [lo, hi] (and its mirror unless conjugate-symmetric).
    let piece = |lo: f64, hi: f64, s: &QuadratureSettings| -> Quad<C64> {
        if conj {
            let q = integrate(&g, lo, hi, s);
            Quad {
                value: C64::new(2.0 * q.value.re, 0.0),
                abs_error: 2.0 * q.abs_error,
                ..q
            }
        } else {
            let q1 = integrate(&g, lo, hi, s);
            let q2 = integrate(&g, -hi, -lo, s);
            Quad {
                value: q1.value + q2.value,
                abs_error: q1.abs_error + q2.abs_error,
                converged: q1.converged && q2.converged,
                evaluations: q1.evaluations + q2.evaluations,
            }
        }
    };

    let core = piece(0.0, t0, settings);
    let mut total = core.value;
    let mut err = core.abs_error;
    let mut converged = core.converged;
    let mut evaluations = core.evaluations;
    let mut shells: Vec<C64> = Vec::new();
    let mut t = t0;
    let mut small_in_a_row = 0;
    for _ in 0..MAX_SHELL_DOUBLINGS {
        let tol = settings.abs_tol.max(settings.rel_tol * total.norm());
        let shell_settings = settings.with_abs_tol(0.1 * tol.max(settings.abs_tol));
        let s = piece(t, 2.0 * t, &shell_settings);
        total += s.value;
        err += s.abs_error;
        converged &= s.converged;
        evaluations += s.evaluations;
        shells.push(s.value);
        t *= 2.0;
        // Algebraic decay gives geometric shells: stop once the
        // extrapolated remainder is pinned down well below tolerance.
        if let Some((_, bound)) = geometric_tail(&shells) {
            if bound <= 0.1 * tol {
                break;
            }
        }
        if s.value.norm() <= tol {
            small_in_a_row += 1;
            if small_in_a_row >= 2 {
                break;
            }
        } else {
            small_in_a_row = 0;
        }
    }
    let tail = tail_estimate(&shells);
    let (tail_value, tail_bound) = tail;
    total += tail_value;
    err += tail_bound;
    let scale = total.norm();
    if tail_bound > 10.0 * settings.rel_tol * scale && tail_bound > settings.abs_tol {
        return Err(Error::TailDominates {
            tail: tail_bound,
            value: scale,
        });
    }
    let factor = 1.0 / (2.0 * PI);
    Ok(Quad {
        value: total * factor,
        abs_error: err * factor,
        converged,
        evaluations,
    })
}

/// Geometric extrapolation of the remaining shells from the last three,
/// when their ratios are stable: returns (correction, error bound).
fn geometric_tail(shells: &[C64]) -> Option<(C64, f64)> {
    let n = shells.len();
    if n < 3 {
        return None;
    }
    let (a, b, last) = (shells[n - 3], shells[n - 2], shells[n - 1]);
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return None;
    }
    let q1 = b / a;
    let q2 = last / b;
    if q2.norm() >= 0.9 || (q2 - q1).norm() >= 0.1 * q2.norm() {
        return None;
    }
    let corr = last * q2 / (C64::new(1.0, 0.0) - q2);
    // The ratio drift measures the subleading corrections to pure power decay.
    let drift = (q2 - q1).norm() * last.norm() / (1.0 - q2.norm()).powi(2);
    Some((corr, 2.0 * drift))
}

/// Tail correction and bound: geometric when possible, otherwise the last
/// shell bounds what is left.
fn tail_estimate(shells: &[C64]) -> (C64, f64) {
    match (geometric_tail(shells), shells.last()) {
        (Some(t), _) => t,
        (None, Some(last)) => (C64::new(0.0, 0.0), last.norm()),
        (None, None) => (C64::new(0.0, 0.0), 0.0),
    }
}
