//! Replicator dynamics: the vector field, an adaptive Dormand-Prince
//! integrator that keeps states on the simplex, and invariance checks.

use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::dd::Dd;

use crate::equilibria::{rest_points, Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::game::{indifference_form, payoffs_unchecked, vertex_condition, GameMatrix, LinearForm};
use crate::simplex::{derive_seed, dot, euclidean, sample_simplex, SimplexPoint, CLAMP_TOL};
use crate::trajectory::{section_value, ClassifyOptions, Dynamic, OmegaLimit, Trajectory};

/// `v_i = x_i ((A x)_i - x . A x)`.
pub fn rd_field(a: &GameMatrix, x: &SimplexPoint) -> Vec<f64> {
    let mut out = vec![0.0; x.dim()];
    field_into(a, x.as_slice(), &mut out);
    out
}

fn field_into(a: &GameMatrix, x: &[f64], out: &mut [f64]) {
    let p = payoffs_unchecked(a, x);
    let mean = dot(x, &p);
    for i in 0..x.len() {
        out[i] = x[i] * (p[i] - mean);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    pub classify: ClassifyOptions,
    /// Keep every accepted state in the returned trajectory.
    pub record: bool,
}

impl Default for RdOptions {
    fn default() -> Self {
        RdOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: 1.0,
            h_min: 1e-13,
            max_steps: 5_000_000,
            classify: ClassifyOptions::default(),
            record: true,
        }
    }
}

/// Sufficient condition for convergence to a strict pure equilibrium `e_i`:
/// on `{x_i >= threshold}` strategy `i` is the unique best response, so `x_i`
/// increases monotonically and the set is forward invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capture {
    pub target: usize,
    pub strategy: usize,
    pub threshold: f64,
}

/// Equilibria an orbit may be declared converged to.
#[derive(Debug, Clone, Default)]
pub struct Targets {
    pub labels: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub captures: Vec<Capture>,
}

impl Targets {
    pub fn new(eqs: &[Equilibrium]) -> Self {
        Targets {
            labels: eqs.iter().map(|e| e.label()).collect(),
            points: eqs.iter().map(|e| e.point.as_slice().to_vec()).collect(),
            captures: Vec::new(),
        }
    }

    /// Adds a capture region for every strict pure equilibrium, allowing
    /// early termination long before the orbit is within `conv_radius`.
    pub fn with_capture(a: &GameMatrix, eqs: &[Equilibrium]) -> Self {
        let mut t = Self::new(eqs);
        for (k, e) in eqs.iter().enumerate() {
            if e.kind != EquilibriumKind::Pure {
                continue;
            }
            if let Some(c) = capture_threshold(a, e.support[0]) {
                t.captures.push(Capture {
                    target: k,
                    strategy: e.support[0],
                    threshold: c,
                });
            }
        }
        t
    }
}

/// Smallest `c < 1` such that `i` is the strict best response on all of
/// `{x : x_i >= c}`; `None` unless `e_i` is a strict equilibrium.
pub fn capture_threshold(a: &GameMatrix, i: usize) -> Option<f64> {
    let n = a.n();
    let mut c: f64 = 0.0;
    for j in (0..n).filter(|&j| j != i) {
        let alpha = a.entry(i, i) - a.entry(j, i);
        if alpha <= 0.0 {
            return None;
        }
        // At the vertex c e_i + (1 - c) e_k the gap (Ax)_i - (Ax)_j is
        // c alpha + (1 - c) beta; it must be positive.
        for k in (0..n).filter(|&k| k != i) {
            let beta = a.entry(i, k) - a.entry(j, k);
            if beta <= 0.0 {
                c = c.max(-beta / (alpha - beta));
            }
        }
    }
    let c = c + 1e-9 * (1.0 - c);
    (c < 1.0).then_some(c)
}

/// Result of a replicator run without the sample history.
#[derive(Debug, Clone)]
pub struct RdOutcome {
    pub terminal: OmegaLimit,
    pub t_end: f64,
    pub x_end: Vec<f64>,
    pub steps: usize,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Arithmetic the integrator can run in.
pub(crate) trait Real:
    Copy + From<f64> + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for Dd {
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
}

/// Stage storage and step attempts of the Dormand-Prince pair.
pub(crate) struct Dopri<T> {
    n: usize,
    a: Vec<T>,
    k: [Vec<T>; 7],
    stage: Vec<T>,
}

impl<T: Real> Dopri<T> {
    pub(crate) fn new(game: &GameMatrix) -> Self {
        let n = game.n();
        let zero = T::from(0.0);
        Dopri {
            n,
            a: (0..n * n).map(|k| T::from(game.entry(k / n, k % n))).collect(),
            k: std::array::from_fn(|_| vec![zero; n]),
            stage: vec![zero; n],
        }
    }

    fn field(n: usize, a: &[T], x: &[T], out: &mut [T]) {
        let zero = T::from(0.0);
        let mut mean = zero;
        for i in 0..n {
            let mut p = zero;
            for j in 0..n {
                p = p + a[i * n + j] * x[j];
            }
            out[i] = p;
            mean = mean + x[i] * p;
        }
        for i in 0..n {
            out[i] = x[i] * (out[i] - mean);
        }
    }

    /// Evaluates the field at the start of the next step.
    pub(crate) fn prime(&mut self, y: &[T]) {
        Self::field(self.n, &self.a, y, &mut self.k[0]);
    }

    pub(crate) fn at_rest(&self) -> bool {
        self.k[0].iter().all(|v| v.to_f64() == 0.0)
    }

    /// Tries a step of size `h` from `y`; returns the scaled error norm. The
    /// candidate state is left in [`Dopri::candidate`].
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn attempt(&mut self, y: &[T], h: f64, rtol: f64, atol: f64) -> f64 {
        let n = self.n;
        let ht = T::from(h);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::from(0.0);
                for r in 0..s {
                    if A[s][r] != 0.0 {
                        acc = acc + T::from(A[s][r]) * self.k[r][i];
                    }
                }
                self.stage[i] = y[i] + ht * acc;
            }
            Self::field(n, &self.a, &self.stage, &mut self.k[s]);
        }
        // The last stage is evaluated at the 5th-order solution itself.
        let mut err = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|r| E[r] * self.k[r][i].to_f64()).sum();
            let sc = atol + rtol * y[i].to_f64().abs().max(self.stage[i].to_f64().abs());
            err += (h * e / sc).powi(2);
        }
        (err / n as f64).sqrt()
    }

    pub(crate) fn candidate(&self) -> &[T] {
        &self.stage
    }
}

/// Clamps round-off negatives and rescales to unit sum.
fn renormalize<T: Real>(x: &[T]) -> Option<Vec<T>> {
    let zero = T::from(0.0);
    let mut out = Vec::with_capacity(x.len());
    let mut sum = zero;
    for v in x {
        let f = v.to_f64();
        if !f.is_finite() || f < -CLAMP_TOL {
            return None;
        }
        let v = if f < 0.0 { zero } else { *v };
        sum = sum + v;
        out.push(v);
    }
    if !(sum.to_f64() > 0.0) {
        return None;
    }
    if (sum - T::from(1.0)).to_f64() != 0.0 {
        out.iter_mut().for_each(|v| *v = *v / sum);
    }
    Some(out)
}

/// Step-size factor after an attempt with error norm `err`.
fn step_factor(err: f64, accepted: bool) -> f64 {
    let grow = if accepted { 5.0 } else { 1.0 };
    if err == 0.0 {
        grow
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, grow)
    }
}

/// Integrates the replicator flow from `x0`, calling `observe(t, x)` on the
/// initial state and after every accepted step.
///
/// Stops early when the state enters a capture region or stays within
/// `conv_radius` of one target for `dwell` consecutive accepted steps.
pub fn run_rd(
    a: &GameMatrix,
    x0: &SimplexPoint,
    horizon: f64,
    opts: &RdOptions,
    targets: &Targets,
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<RdOutcome> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if x0.dim() != a.n() {
        return Err(Error::InvalidArgument(format!(
            "state has {} components, game has {} strategies",
            x0.dim(),
            a.n()
        )));
    }
    let mut y = x0.as_slice().to_vec();
    let mut t = 0.0;
    observe(t, &y);

    let converged = |k: usize| OmegaLimit::ConvergedTo {
        index: k,
        label: targets.labels[k].clone(),
    };
    let check_capture = |y: &[f64]| {
        targets
            .captures
            .iter()
            .find(|c| y[c.strategy] >= c.threshold)
            .map(|c| c.target)
    };
    let nearest = |y: &[f64]| {
        targets
            .points
            .iter()
            .enumerate()
            .map(|(k, p)| (k, euclidean(y, p)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
    };

    let mut dp = Dopri::<f64>::new(a);
    dp.prime(&y);

    // An exact rest point never moves.
    if dp.at_rest() {
        let terminal = match nearest(&y) {
            Some((idx, d)) if d <= opts.classify.conv_radius => converged(idx),
            _ => OmegaLimit::Nonconvergent {
                reason: "initial state is a rest point that is not a listed equilibrium".into(),
            },
        };
        return Ok(RdOutcome {
            terminal,
            t_end: 0.0,
            x_end: y,
            steps: 0,
        });
    }
    if let Some(idx) = check_capture(&y) {
        return Ok(RdOutcome {
            terminal: converged(idx),
            t_end: 0.0,
            x_end: y,
            steps: 0,
        });
    }

    let mut h = (0.01 / a.max_norm()).min(opts.h_max).min(horizon);
    let mut dwell_target: Option<usize> = None;
    let mut dwell_count = 0usize;
    let mut returns = 0usize;
    let mut steps = 0usize;

    while t < horizon {
        if steps >= opts.max_steps {
            return Ok(RdOutcome {
                terminal: OmegaLimit::Nonconvergent {
                    reason: format!("step budget of {} exhausted at t = {t}", opts.max_steps),
                },
                t_end: t,
                x_end: y,
                steps,
            });
        }
        let last = t + h >= horizon;
        if last {
            h = horizon - t;
        }
        let err = dp.attempt(&y, h, opts.rtol, opts.atol);
        if err > 1.0 {
            if h <= opts.h_min {
                return Ok(RdOutcome {
                    terminal: OmegaLimit::Nonconvergent {
                        reason: format!("step size underflow at t = {t}"),
                    },
                    t_end: t,
                    x_end: y,
                    steps,
                });
            }
            h = (h * step_factor(err, false)).max(opts.h_min);
            continue;
        }
        let prev_section = section_value(&y);
        t = if last { horizon } else { t + h };
        y = renormalize(dp.candidate())
            .ok_or_else(|| Error::Numerical(format!("replicator state left the simplex at t = {t}")))?;
        steps += 1;
        observe(t, &y);
        if prev_section < 0.0 && section_value(&y) >= 0.0 {
            returns += 1;
        }

        if let Some(idx) = check_capture(&y) {
            return Ok(RdOutcome {
                terminal: converged(idx),
                t_end: t,
                x_end: y,
                steps,
            });
        }
        match nearest(&y) {
            Some((idx, d)) if d <= opts.classify.conv_radius => {
                if dwell_target == Some(idx) {
                    dwell_count += 1;
                } else {
                    dwell_target = Some(idx);
                    dwell_count = 1;
                }
                if dwell_count >= opts.classify.dwell {
                    return Ok(RdOutcome {
                        terminal: converged(idx),
                        t_end: t,
                        x_end: y,
                        steps,
                    });
                }
            }
            _ => {
                dwell_target = None;
                dwell_count = 0;
            }
        }
        dp.prime(&y);
        h = (h * step_factor(err, true)).min(opts.h_max);
    }

    let terminal = if returns >= opts.classify.cycle_returns {
        OmegaLimit::CycleSuspected
    } else {
        OmegaLimit::Nonconvergent {
            reason: "no equilibrium reached within the horizon".into(),
        }
    };
    Ok(RdOutcome {
        terminal,
        t_end: t,
        x_end: y,
        steps,
    })
}

/// Integrates the replicator flow up to `horizon`, stopping early once the
/// orbit has settled at one of `eqs`.
pub fn integrate_rd(
    a: &GameMatrix,
    x0: &SimplexPoint,
    horizon: f64,
    opts: &RdOptions,
    eqs: &[Equilibrium],
) -> Result<Trajectory> {
    integrate_rd_with_targets(a, x0, horizon, opts, &Targets::new(eqs))
}

pub fn integrate_rd_with_targets(
    a: &GameMatrix,
    x0: &SimplexPoint,
    horizon: f64,
    opts: &RdOptions,
    targets: &Targets,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let out = run_rd(a, x0, horizon, opts, targets, |t, x| {
        if opts.record || times.is_empty() {
            times.push(t);
            states.push(SimplexPoint::from_vec_unchecked(x.to_vec()));
        }
    })?;
    if times.last() != Some(&out.t_end) {
        times.push(out.t_end);
        states.push(SimplexPoint::from_vec_unchecked(out.x_end));
    }
    Ok(Trajectory {
        dynamic: Dynamic::Rd,
        times,
        states,
        terminal: out.terminal,
        events: Vec::new(),
    })
}

/// Numerical check of the vertex condition for invariance of `Z_{i,j}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub pair: (usize, usize),
    /// Every vertex outside the pair lies on the set.
    pub analytic: bool,
    /// Largest distance from the set reached by any sampled orbit.
    pub max_drift: f64,
    pub samples: usize,
    /// `analytic` implies `max_drift < 1e-6`.
    pub consistent: bool,
}

pub const INVARIANCE_DRIFT_TOL: f64 = 1e-6;

/// Pairs of uniform points on strictly opposite sides of the form's zero set.
fn chords(form: &LinearForm, n: usize, count: usize, seed: u64) -> Vec<(SimplexPoint, SimplexPoint)> {
    let mut out = Vec::with_capacity(count);
    let mut pos: Vec<SimplexPoint> = Vec::new();
    let mut neg: Vec<SimplexPoint> = Vec::new();
    let mut batch = 0u64;
    while out.len() < count && batch < 64 {
        for p in sample_simplex(n, 256, derive_seed(seed, batch)) {
            let v = form.eval(p.as_slice());
            if v > 0.0 {
                pos.push(p);
            } else if v < 0.0 {
                neg.push(p);
            }
        }
        batch += 1;
        while out.len() < count {
            let (Some(p), Some(q)) = (pos.pop(), neg.pop()) else { break };
            out.push((p, q));
        }
    }
    out
}

/// Zero of the form on the chord `p + s (q - p)`, in arithmetic `T`.
fn chord_zero<T: Real>(form: &LinearForm, p: &[f64], q: &[f64]) -> Vec<T> {
    let eval = |x: &[f64]| {
        form.coeffs
            .iter()
            .zip(x)
            .fold(T::from(0.0), |acc, (c, v)| acc + T::from(*c) * T::from(*v))
    };
    let fp = eval(p);
    let fq = eval(q);
    let s = fp / (fp - fq);
    p.iter().zip(q).map(|(u, w)| T::from(*u) + s * (T::from(*w) - T::from(*u))).collect()
}

/// Points of `{x in simplex : form . x = 0}`, found as zero crossings of the
/// form along chords between uniformly drawn points on either side.
pub fn points_on_indifference(form: &LinearForm, n: usize, count: usize, seed: u64) -> Vec<SimplexPoint> {
    chords(form, n, count, seed)
        .iter()
        .filter_map(|(p, q)| SimplexPoint::renormalized(chord_zero::<f64>(form, p.as_slice(), q.as_slice())).ok())
        .collect()
}

/// Largest distance from the zero set of `form` along the replicator orbit
/// from `x0`, until the orbit comes within `conv_radius` of a rest point.
///
/// Runs in double-double arithmetic: when the set is the stable manifold of
/// a saddle, round-off grows like `exp(lambda t)` off the set and would
/// swamp the measurement in `f64`.
fn orbit_drift(a: &GameMatrix, form: &LinearForm, x0: Vec<Dd>, horizon: f64, opts: &RdOptions, rest: &[Vec<f64>]) -> Result<f64> {
    let tn = form.tangent_norm();
    let coeffs: Vec<Dd> = form.coeffs.iter().map(|c| Dd::from(*c)).collect();
    let dist = |x: &[Dd]| {
        let v = coeffs.iter().zip(x).fold(Dd::ZERO, |acc, (c, v)| acc + *c * *v);
        v.to_f64().abs() / tn
    };
    let settled = |x: &[Dd]| {
        let xf: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
        rest.iter().any(|r| euclidean(&xf, r) <= opts.classify.conv_radius)
    };
    let mut y = x0;
    let mut drift = dist(&y);
    let mut dp = Dopri::<Dd>::new(a);
    dp.prime(&y);
    if dp.at_rest() || settled(&y) {
        return Ok(drift);
    }
    let mut t = 0.0;
    let mut h = (0.01 / a.max_norm()).min(opts.h_max).min(horizon);
    let mut steps = 0usize;
    while t < horizon && steps < opts.max_steps {
        let last = t + h >= horizon;
        if last {
            h = horizon - t;
        }
        let err = dp.attempt(&y, h, opts.rtol, opts.atol);
        if err > 1.0 {
            if h <= opts.h_min {
                return Err(Error::Numerical(format!("step size underflow at t = {t}")));
            }
            h = (h * step_factor(err, false)).max(opts.h_min);
            continue;
        }
        t = if last { horizon } else { t + h };
        y = renormalize(dp.candidate())
            .ok_or_else(|| Error::Numerical(format!("replicator state left the simplex at t = {t}")))?;
        steps += 1;
        drift = drift.max(dist(&y));
        if settled(&y) {
            break;
        }
        dp.prime(&y);
        h = (h * step_factor(err, true)).min(opts.h_max);
    }
    Ok(drift)
}

/// Starts `samples` orbits on `Z_{i,j}` and measures how far they drift from
/// it over `horizon`, or until they settle at a rest point.
pub fn check_rd_invariance(a: &GameMatrix, i: usize, j: usize, samples: usize, horizon: f64) -> Result<InvarianceReport> {
    let form = indifference_form(a, i, j)?;
    let analytic = vertex_condition(a, i, j);
    let pairs = chords(&form, a.n(), samples, derive_seed(0x1D1F, (i * a.n() + j) as u64));
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "Z{},{} does not cross the interior of the simplex",
            i + 1,
            j + 1
        )));
    }
    let opts = RdOptions::default();
    let rest: Vec<Vec<f64>> = rest_points(a).into_iter().map(|p| p.into_vec()).collect();
    let mut max_drift: f64 = 0.0;
    for (p, q) in &pairs {
        let x0 = chord_zero::<Dd>(&form, p.as_slice(), q.as_slice());
        max_drift = max_drift.max(orbit_drift(a, &form, x0, horizon, &opts, &rest)?);
    }
    Ok(InvarianceReport {
        pair: (i + 1, j + 1),
        analytic,
        max_drift,
        samples: pairs.len(),
        consistent: !analytic || max_drift < INVARIANCE_DRIFT_TOL,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub holds: bool,
    /// Sampled points that satisfied the predicate and had `e_i` as unique best response.
    pub tested: usize,
}

/// Checks that `d/dt (x_i / x_j) = (x_i / x_j) [(Ax)_i - (Ax)_j]` is positive
/// for every `j != i` at sampled points of the region where `i` is the unique
/// best response.
pub fn check_ratio_monotonicity(
    a: &GameMatrix,
    i: usize,
    region: impl Fn(&SimplexPoint) -> bool,
    samples: usize,
    seed: u64,
) -> RatioReport {
    let mut tested = 0;
    let mut holds = true;
    for x in sample_simplex(a.n(), samples, seed) {
        if !region(&x) {
            continue;
        }
        let p = payoffs_unchecked(a, x.as_slice());
        let unique = (0..a.n()).all(|j| j == i || p[i] > p[j]);
        if !unique {
            continue;
        }
        tested += 1;
        for j in (0..a.n()).filter(|&j| j != i && x[j] > 0.0) {
            let rate = x[i] / x[j] * (p[i] - p[j]);
            if !(rate > 0.0) {
                holds = false;
            }
        }
    }
    RatioReport { holds, tested }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{enumerate_nash, NASH_TOL};

    fn m(rows: &[[f64; 3]]) -> GameMatrix {
        GameMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn ten() -> GameMatrix {
        m(&[[0., -1., -1.], [-1., 0., -1.], [-1., -1., 0.]])
    }

    fn p(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    /// Classical RK4 with a fixed step, independent of the adaptive integrator.
    fn rk4_oracle(a: &GameMatrix, x0: &[f64], horizon: f64, h: f64) -> Vec<f64> {
        let n = x0.len();
        let f = |x: &[f64]| {
            let mut o = vec![0.0; n];
            field_into(a, x, &mut o);
            o
        };
        let mut x = x0.to_vec();
        let steps = (horizon / h).round() as usize;
        for _ in 0..steps {
            let k1 = f(&x);
            let x2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1[i]).collect();
            let k2 = f(&x2);
            let x3: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2[i]).collect();
            let k3 = f(&x3);
            let x4: Vec<f64> = (0..n).map(|i| x[i] + h * k3[i]).collect();
            let k4 = f(&x4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x
    }

    #[test]
    fn field_examples() {
        for i in 0..3 {
            assert!(rd_field(&ten(), &SimplexPoint::vertex(3, i)).iter().all(|v| *v == 0.0));
        }
        let v = rd_field(&ten(), &p(&[0.5, 0.3, 0.2]));
        let want = [0.06, -0.024, -0.036];
        for k in 0..3 {
            assert!((v[k] - want[k]).abs() < 1e-15, "{v:?}");
        }
        let six_two = m(&[[0., -1., -3.], [1., 0., -5.], [-1., -3., 0.]]);
        assert!(rd_field(&six_two, &SimplexPoint::barycenter(3)).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn vertex_start_is_constant() {
        let eqs = enumerate_nash(&ten(), NASH_TOL);
        let tr = integrate_rd(&ten(), &SimplexPoint::vertex(3, 0), 500.0, &RdOptions::default(), &eqs).unwrap();
        assert_eq!(tr.states.len(), 1);
        assert_eq!(tr.terminal.short_label(), "e1");
    }

    #[test]
    fn class_10_1_converges_to_argmax_vertex() {
        let a = ten();
        let eqs = enumerate_nash(&a, NASH_TOL);
        let x0 = p(&[0.5, 0.3, 0.2]);
        let tr = integrate_rd(&a, &x0, 500.0, &RdOptions::default(), &eqs).unwrap();
        assert_eq!(tr.terminal.short_label(), "e1");
        // The adaptive solution agrees with a dense fixed-step oracle.
        let ts = 10.0;
        let opts = RdOptions::default();
        let short = integrate_rd(&a, &x0, ts, &opts, &[]).unwrap();
        let oracle = rk4_oracle(&a, x0.as_slice(), ts, 1e-4);
        assert!(euclidean(short.last_state().as_slice(), &oracle) < 1e-8);
    }

    #[test]
    fn class_5_1_converges_to_e1() {
        let a = m(&[[0., -3., 1.], [-1., 0., -1.], [-3., 1., 0.]]);
        let eqs = enumerate_nash(&a, NASH_TOL);
        let tr = integrate_rd(&a, &p(&[0.6, 0.2, 0.2]), 500.0, &RdOptions::default(), &eqs).unwrap();
        assert_eq!(tr.terminal.short_label(), "e1");
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let a = m(&[[0., 6., -4.], [-3., 0., 5.], [-1., 3., 0.]]);
        let x0 = p(&[0.2, 0.5, 0.3]);
        let oracle = rk4_oracle(&a, x0.as_slice(), 5.0, 1e-4);
        let err = |rtol: f64| {
            let opts = RdOptions {
                rtol,
                atol: rtol * 1e-3,
                ..RdOptions::default()
            };
            let tr = integrate_rd(&a, &x0, 5.0, &opts, &[]).unwrap();
            euclidean(tr.last_state().as_slice(), &oracle)
        };
        assert!(err(1e-8) < err(1e-5));
    }

    #[test]
    fn simplex_and_faces_preserved() {
        let a = m(&[[0., 6., -4.], [-3., 0., 5.], [-1., 3., 0.]]);
        let tr = integrate_rd(&a, &p(&[0.3, 0.7, 0.0]), 50.0, &RdOptions::default(), &[]).unwrap();
        for s in &tr.states {
            assert_eq!(s[2], 0.0);
            assert!((s.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        for w in tr.times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn capture_threshold_for_strict_vertex() {
        // Class 10_1: e1 is strict; x1 >= c forces x1 > x2, x3 when c > 1/2.
        let c = capture_threshold(&ten(), 0).unwrap();
        assert!((c - 0.5).abs() < 1e-8);
        // e3 in class 5_1 is not an equilibrium.
        let five = m(&[[0., -3., 1.], [-1., 0., -1.], [-3., 1., 0.]]);
        assert!(capture_threshold(&five, 2).is_none());
    }

    #[test]
    fn invariance_examples() {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let r = check_rd_invariance(&ten(), i, j, 10, 50.0).unwrap();
            assert!(r.analytic && r.max_drift < 1e-6, "{r:?}");
        }
        let six_one = m(&[[0., -1., -1.], [1., 0., -3.], [-1., -1., 0.]]);
        assert!(check_rd_invariance(&six_one, 0, 2, 10, 50.0).unwrap().analytic);
        let five = m(&[[0., -3., 1.], [-1., 0., -1.], [-3., 1., 0.]]);
        let r = check_rd_invariance(&five, 0, 1, 10, 50.0).unwrap();
        assert!(!r.analytic && r.max_drift > 1e-3, "{r:?}");
    }

    #[test]
    fn ratio_monotonicity() {
        let seven = m(&[[0., 6., -4.], [-3., 0., 5.], [-1., 3., 0.]]);
        let r = check_ratio_monotonicity(&seven, 0, |_| true, 1000, 4);
        assert!(r.holds && r.tested > 0);
    }
}
