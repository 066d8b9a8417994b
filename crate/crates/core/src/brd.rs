//! Best-response dynamics `x' in BR(x) - x`, solved piecewise in closed form.
//!
//! Inside a region where `b` is the unique best response the orbit is
//! `x(t) = e_b + exp(-t) (x0 - e_b)`, a straight segment toward the vertex.
//! On an attracting indifference set the Filippov solution moves straight
//! toward a fixed point of the edge (the sliding target), because the convex
//! weight keeping the orbit on the set does not depend on the position.
//! Regime switches are roots of affine-in-`exp(-t)` functions and are found
//! exactly.

use serde::{Deserialize, Serialize};

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::game::{payoffs_unchecked, GameMatrix};
use crate::simplex::{dot, euclidean, SimplexPoint};
use crate::trajectory::{
    classify_omega_limit, BrdEvent, ClassifyOptions, Dynamic, EventKind, OmegaLimit, Trajectory,
};

/// Relative tolerance for two payoffs to count as tied.
pub const TIE_TOL: f64 = 1e-10;

/// Relative threshold below which a gap derivative counts as zero.
const EVENT_RATE_TOL: f64 = 1e-14;

/// Strategies whose payoff is within `tol * scale` of the best.
pub fn best_response_set(a: &GameMatrix, x: &[f64], tol: f64) -> Vec<usize> {
    let p = payoffs_unchecked(a, x);
    let best = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps = tol * a.max_norm();
    (0..p.len()).filter(|&i| p[i] >= best - eps).collect()
}

/// `z + exp(-t) (x0 - z)`.
pub fn brd_segment(x0: &[f64], target: &[f64], t: f64) -> Vec<f64> {
    let d = (-t).exp();
    x0.iter().zip(target).map(|(x, z)| z + d * (x - z)).collect()
}

/// Time at which `h . x(t)` first reaches zero along the segment from `x0`
/// toward `target`, given `h . x0 > 0`. `None` if it never does.
pub fn next_event(h: &[f64], x0: &[f64], target: &[f64], scale: f64) -> Option<f64> {
    let g0 = dot(h, x0);
    let c = dot(h, target);
    if g0 > 0.0 && c < -EVENT_RATE_TOL * scale {
        Some((g0 / -c).ln_1p())
    } else {
        None
    }
}

/// What happens on `Z_{i,j}` when `i` and `j` are the only best responses.
#[derive(Debug, Clone, PartialEq)]
pub enum SlidingOutcome {
    /// Both one-sided flows point into the set: the orbit slides toward
    /// `lambda e_i + (1 - lambda) e_j`.
    Sliding { lambda: f64, target: Vec<f64> },
    /// The orbit leaves into the region of this strategy.
    Crossing { into: usize },
    /// Both one-sided flows point away from the set.
    Repelling,
}

/// Classifies the Filippov motion on `Z_{i,j}` from the rates of change of
/// `(row_i - row_j) . x` under each pure regime.
pub fn sliding_velocity(a: &GameMatrix, i: usize, j: usize) -> SlidingOutcome {
    let n = a.n();
    let h: Vec<f64> = (0..n).map(|k| a.entry(i, k) - a.entry(j, k)).collect();
    // On the set, d/dt (h . x) = h . e_b under regime b.
    let di = h[i];
    let dj = h[j];
    let eps = EVENT_RATE_TOL * a.max_norm();
    let i_ok = di > eps;
    let j_ok = dj < -eps;
    match (i_ok, j_ok) {
        (true, true) => SlidingOutcome::Repelling,
        (true, false) => SlidingOutcome::Crossing { into: i },
        (false, true) => SlidingOutcome::Crossing { into: j },
        (false, false) => {
            let denom = dj - di;
            // Both vertices on the set: any mixture stays on it.
            let lambda = if denom > eps { dj / denom } else { 1.0 };
            let mut target = vec![0.0; n];
            target[i] = lambda;
            target[j] += 1.0 - lambda;
            SlidingOutcome::Sliding { lambda, target }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdOptions {
    pub max_events: usize,
    /// Sampling interval for recorded trajectories; event points are always kept.
    pub sample_dt: f64,
    pub record: bool,
    pub classify: ClassifyOptions,
}

impl Default for BrdOptions {
    fn default() -> Self {
        BrdOptions {
            max_events: 100_000,
            sample_dt: 0.05,
            record: true,
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regime {
    Pure { strategy: usize },
    Sliding { i: usize, j: usize, lambda: f64 },
    /// Stationary at a tie of all strategies.
    Rest,
}

/// One closed-form segment `x(t) = target + exp(-(t - t0)) (x0 - target)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub x0: Vec<f64>,
    pub target: Vec<f64>,
    pub regime: Regime,
}

impl Piece {
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        brd_segment(&self.x0, &self.target, t - self.t0)
    }
}

/// Piecewise closed-form solution.
#[derive(Debug, Clone)]
pub struct BrdSolution {
    pub pieces: Vec<Piece>,
    pub events: Vec<BrdEvent>,
    pub terminal: OmegaLimit,
    pub t_end: f64,
    /// Limit point when the orbit provably heads to it with no further switch.
    pub limit: Option<Vec<f64>>,
}

impl BrdSolution {
    /// State at time `t`, clamped to `[0, t_end]`.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.t_end);
        let k = self.pieces.partition_point(|p| p.t1 < t).min(self.pieces.len() - 1);
        self.pieces[k].state_at(t)
    }

    pub fn final_state(&self) -> Vec<f64> {
        self.state_at(self.t_end)
    }

    /// Samples on the grid `k dt` plus every piece boundary. Stationary
    /// pieces add no samples, so an orbit starting at rest has a single row.
    pub fn to_trajectory(&self, dt: f64) -> Trajectory {
        let mut times = vec![0.0];
        let mut states = vec![SimplexPoint::from_vec_unchecked(self.pieces[0].x0.clone())];
        for p in &self.pieces {
            if p.regime == Regime::Rest || p.x0 == p.target {
                continue;
            }
            let mut k = (p.t0 / dt).floor() as u64 + 1;
            loop {
                let t = (k as f64 * dt).min(p.t1);
                if t > *times.last().unwrap() {
                    times.push(t);
                    states.push(SimplexPoint::from_vec_unchecked(clean(p.state_at(t))));
                }
                if t >= p.t1 {
                    break;
                }
                k += 1;
            }
        }
        Trajectory {
            dynamic: Dynamic::Brd,
            times,
            states,
            terminal: self.terminal.clone(),
            events: self.events.clone(),
        }
    }
}

fn clean(x: Vec<f64>) -> Vec<f64> {
    SimplexPoint::renormalized(x.clone()).map(|p| p.into_vec()).unwrap_or(x)
}

fn match_equilibrium(point: &[f64], eqs: &[Equilibrium], radius: f64) -> Option<OmegaLimit> {
    eqs.iter()
        .enumerate()
        .map(|(k, e)| (k, euclidean(point, e.point.as_slice())))
        .filter(|(_, d)| *d <= radius)
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .map(|(k, _)| OmegaLimit::ConvergedTo {
            index: k,
            label: eqs[k].label(),
        })
}

enum Step {
    Move { regime: Regime, target: Vec<f64> },
    Stop(OmegaLimit),
}

/// Picks the Filippov regime at `x` with best-response set `br`.
fn choose_regime(a: &GameMatrix, x: &[f64], br: &[usize], eqs: &[Equilibrium], radius: f64) -> Step {
    let n = a.n();
    match br.len() {
        1 => {
            let b = br[0];
            Step::Move {
                regime: Regime::Pure { strategy: b },
                target: SimplexPoint::vertex(n, b).into_vec(),
            }
        }
        2 => {
            let (i, j) = (br[0], br[1]);
            match sliding_velocity(a, i, j) {
                SlidingOutcome::Sliding { lambda, target } => Step::Move {
                    regime: Regime::Sliding { i, j, lambda },
                    target,
                },
                SlidingOutcome::Crossing { into } => Step::Move {
                    regime: Regime::Pure { strategy: into },
                    target: SimplexPoint::vertex(n, into).into_vec(),
                },
                // Non-unique continuation; take the lower index.
                SlidingOutcome::Repelling => Step::Move {
                    regime: Regime::Pure { strategy: i },
                    target: SimplexPoint::vertex(n, i).into_vec(),
                },
            }
        }
        k if k == n || n == 3 => Step::Stop(match_equilibrium(x, eqs, radius).unwrap_or_else(|| {
            OmegaLimit::Nonconvergent {
                reason: "stopped at a tie of all strategies that is not a listed equilibrium".into(),
            }
        })),
        _ => Step::Stop(OmegaLimit::Nonconvergent {
            reason: format!(
                "unresolved tie among strategies {:?}",
                br.iter().map(|s| s + 1).collect::<Vec<_>>()
            ),
        }),
    }
}

/// Earliest switch out of the current regime.
fn regime_event(a: &GameMatrix, x: &[f64], regime: &Regime, target: &[f64]) -> Option<(f64, usize)> {
    let n = a.n();
    let scale = a.max_norm();
    let (lead, skip): (usize, &[usize]) = match regime {
        Regime::Pure { strategy } => (*strategy, &[]),
        Regime::Sliding { i, j, .. } => (*i, &[*j][..]),
        Regime::Rest => return None,
    };
    let mut best: Option<(f64, usize)> = None;
    for k in (0..n).filter(|&k| k != lead && !skip.contains(&k)) {
        let h: Vec<f64> = (0..n).map(|c| a.entry(lead, c) - a.entry(k, c)).collect();
        if let Some(t) = next_event(&h, x, target, scale) {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, k));
            }
        }
    }
    best
}

fn pair_of(r: &Regime) -> Option<(usize, usize)> {
    match r {
        Regime::Sliding { i, j, .. } => Some((*i, *j)),
        _ => None,
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

/// Solves the best-response dynamics from `x0` on `[0, horizon]`.
pub fn solve_brd(
    a: &GameMatrix,
    x0: &SimplexPoint,
    horizon: f64,
    opts: &BrdOptions,
    eqs: &[Equilibrium],
) -> Result<BrdSolution> {
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
    let radius = opts.classify.conv_radius;
    let mut pieces: Vec<Piece> = Vec::new();
    let mut events: Vec<BrdEvent> = Vec::new();
    let mut x = x0.as_slice().to_vec();
    let mut t = 0.0;
    let mut prev: Option<Regime> = None;

    let rest_piece = |t: f64, x: &[f64]| Piece {
        t0: t,
        t1: horizon,
        x0: x.to_vec(),
        target: x.to_vec(),
        regime: Regime::Rest,
    };

    let (terminal, limit) = loop {
        if events.len() >= opts.max_events {
            let terminal = match_equilibrium(&x, eqs, radius).unwrap_or_else(|| OmegaLimit::Nonconvergent {
                reason: format!("more than {} regime switches", opts.max_events),
            });
            break (Some(terminal), None);
        }
        let br = best_response_set(a, &x, TIE_TOL);
        let (regime, target) = match choose_regime(a, &x, &br, eqs, radius) {
            Step::Move { regime, target } => (regime, target),
            Step::Stop(terminal) => {
                if let Some(p) = prev.and_then(|r| pair_of(&r)) {
                    events.push(BrdEvent {
                        t,
                        x: x.clone(),
                        kind: EventKind::SlidingEnd,
                        pair: Some(p),
                    });
                }
                events.push(BrdEvent {
                    t,
                    x: x.clone(),
                    kind: EventKind::Arrival,
                    pair: None,
                });
                pieces.push(rest_piece(t, &x));
                let limit = matches!(terminal, OmegaLimit::ConvergedTo { .. }).then(|| x.clone());
                break (Some(terminal), limit);
            }
        };

        if let Some(p) = prev {
            if let Some(pr) = pair_of(&p) {
                events.push(BrdEvent {
                    t,
                    x: x.clone(),
                    kind: EventKind::SlidingEnd,
                    pair: Some(pr),
                });
            }
            if let (Regime::Pure { strategy: b }, Regime::Pure { strategy: c }) = (p, regime) {
                events.push(BrdEvent {
                    t,
                    x: x.clone(),
                    kind: EventKind::Crossing,
                    pair: Some(ordered(b, c)),
                });
            }
        }
        if let Some(pr) = pair_of(&regime) {
            events.push(BrdEvent {
                t,
                x: x.clone(),
                kind: EventKind::SlidingStart,
                pair: Some(pr),
            });
        }

        match regime_event(a, &x, &regime, &target) {
            None => {
                events.push(BrdEvent {
                    t,
                    x: x.clone(),
                    kind: EventKind::Arrival,
                    pair: pair_of(&regime),
                });
                pieces.push(Piece {
                    t0: t,
                    t1: horizon,
                    x0: x.clone(),
                    target: target.clone(),
                    regime,
                });
                let terminal = match_equilibrium(&target, eqs, 1e-7 * a.max_norm().max(1.0)).unwrap_or_else(|| {
                    OmegaLimit::Nonconvergent {
                        reason: "limit point is not a listed equilibrium".into(),
                    }
                });
                break (Some(terminal), Some(target));
            }
            Some((dt, _)) if t + dt >= horizon => {
                pieces.push(Piece {
                    t0: t,
                    t1: horizon,
                    x0: x.clone(),
                    target,
                    regime,
                });
                break (None, None);
            }
            Some((dt, _)) => {
                let x1 = clean(brd_segment(&x, &target, dt));
                pieces.push(Piece {
                    t0: t,
                    t1: t + dt,
                    x0: x.clone(),
                    target,
                    regime,
                });
                t += dt;
                x = x1;
                prev = Some(regime);
            }
        }
    };

    let mut sol = BrdSolution {
        t_end: horizon,
        pieces,
        events,
        terminal: OmegaLimit::CycleSuspected,
        limit,
    };
    sol.terminal = match terminal {
        Some(t) => t,
        // Horizon reached with switches still pending: label from the samples.
        None => classify_omega_limit(&sol.to_trajectory(opts.sample_dt), eqs, &opts.classify),
    };
    Ok(sol)
}

/// Solves the best-response dynamics and samples the solution.
pub fn integrate_brd(
    a: &GameMatrix,
    x0: &SimplexPoint,
    horizon: f64,
    opts: &BrdOptions,
    eqs: &[Equilibrium],
) -> Result<Trajectory> {
    let sol = solve_brd(a, x0, horizon, opts, eqs)?;
    if opts.record {
        Ok(sol.to_trajectory(opts.sample_dt))
    } else {
        let end = sol.final_state();
        Ok(Trajectory {
            dynamic: Dynamic::Brd,
            times: vec![0.0, horizon],
            states: vec![x0.clone(), SimplexPoint::from_vec_unchecked(clean(end))],
            terminal: sol.terminal,
            events: sol.events,
        })
    }
}
