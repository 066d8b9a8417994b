//! Time-stamped orbits, their terminal classification, and CSV/JSON export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::equilibria::Equilibrium;
use crate::error::Result;
use crate::simplex::SimplexPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamic {
    Rd,
    Brd,
}

impl Dynamic {
    pub fn name(self) -> &'static str {
        match self {
            Dynamic::Rd => "rd",
            Dynamic::Brd => "brd",
        }
    }
}

/// How an orbit ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OmegaLimit {
    /// Converged to the equilibrium at `index` of the list it was classified against.
    ConvergedTo { index: usize, label: String },
    CycleSuspected,
    Nonconvergent { reason: String },
}

impl OmegaLimit {
    /// Short label used in basin tables: the equilibrium label, `cycle` or `none`.
    pub fn short_label(&self) -> &str {
        match self {
            OmegaLimit::ConvergedTo { label, .. } => label,
            OmegaLimit::CycleSuspected => "cycle",
            OmegaLimit::Nonconvergent { .. } => "none",
        }
    }

    pub fn equilibrium_index(&self) -> Option<usize> {
        match self {
            OmegaLimit::ConvergedTo { index, .. } => Some(*index),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// The orbit crosses an indifference set into another best-response region.
    Crossing,
    SlidingStart,
    SlidingEnd,
    /// The orbit heads for its limit point with no further regime change.
    Arrival,
}

/// A regime switch of the best-response flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrdEvent {
    pub t: f64,
    pub x: Vec<f64>,
    pub kind: EventKind,
    /// Tied strategies (1-based in serialized output), if any.
    #[serde(serialize_with = "ser_pair", deserialize_with = "de_pair")]
    pub pair: Option<(usize, usize)>,
}

fn ser_pair<S: serde::Serializer>(p: &Option<(usize, usize)>, s: S) -> std::result::Result<S::Ok, S::Error> {
    p.map(|(i, j)| [i + 1, j + 1]).serialize(s)
}

fn de_pair<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<(usize, usize)>, D::Error> {
    let v: Option<[usize; 2]> = Option::deserialize(d)?;
    Ok(v.map(|[i, j]| (i - 1, j - 1)))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dynamic: Dynamic,
    pub times: Vec<f64>,
    pub states: Vec<SimplexPoint>,
    pub terminal: OmegaLimit,
    /// Regime switches; always empty for the replicator flow.
    pub events: Vec<BrdEvent>,
}

impl Trajectory {
    pub fn last_state(&self) -> &SimplexPoint {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    /// CSV with header `t,x1,...,xn`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.states.first().map_or(0, |s| s.dim());
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        wr.write_record(&header)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut rec = vec![format_num(*t)];
            rec.extend(x.as_slice().iter().map(|v| format_num(*v)));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            dynamic: self.dynamic,
            terminal: self.terminal.clone(),
            label: self.terminal.short_label().to_string(),
            final_time: self.last_time(),
            final_state: self.last_state().as_slice().to_vec(),
            samples: self.states.len(),
            events: self.events.len(),
        }
    }

    pub fn events_json(&self) -> String {
        serde_json::to_string_pretty(&self.events).expect("events serialize")
    }
}

/// JSON sidecar written next to a trajectory CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub dynamic: Dynamic,
    pub terminal: OmegaLimit,
    pub label: String,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub samples: usize,
    pub events: usize,
}

/// Full round-trip precision, shortest representation.
pub(crate) fn format_num(v: f64) -> String {
    format!("{v:?}")
}

/// Settings for labeling the end of an orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub conv_radius: f64,
    /// Consecutive samples required inside `conv_radius`.
    pub dwell: usize,
    /// Upward section crossings after which a nonconvergent orbit counts as cycling.
    pub cycle_returns: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            conv_radius: 1e-6,
            dwell: 50,
            cycle_returns: 3,
        }
    }
}

/// Index and distance of the equilibrium nearest to `x`.
pub fn nearest_equilibrium(x: &[f64], eqs: &[Equilibrium]) -> Option<(usize, f64)> {
    eqs.iter()
        .enumerate()
        .map(|(k, e)| (k, crate::simplex::euclidean(x, e.point.as_slice())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Value of the fixed Poincare section `x1 - x2` used for return counting.
pub(crate) fn section_value(x: &[f64]) -> f64 {
    x[0] - x[1]
}

/// Labels a finished trajectory from its samples alone.
///
/// Converged when the final `dwell` samples (or a constant trajectory) all
/// lie within `conv_radius` of the same equilibrium; cycle-suspected when the
/// orbit crosses the section `x1 = x2` upward at least `cycle_returns` times
/// without converging; nonconvergent otherwise.
pub fn classify_omega_limit(traj: &Trajectory, eqs: &[Equilibrium], opts: &ClassifyOptions) -> OmegaLimit {
    let last = traj.last_state().as_slice();
    if let Some((k, d)) = nearest_equilibrium(last, eqs) {
        if d <= opts.conv_radius {
            let target = eqs[k].point.as_slice();
            let tail = traj.states.len().min(opts.dwell);
            let constant = traj.states.len() == 1;
            let dwelt = traj.states[traj.states.len() - tail..]
                .iter()
                .all(|s| crate::simplex::euclidean(s.as_slice(), target) <= opts.conv_radius);
            if dwelt && (constant || tail >= opts.dwell) {
                return OmegaLimit::ConvergedTo {
                    index: k,
                    label: eqs[k].label(),
                };
            }
        }
    }
    let returns = traj
        .states
        .windows(2)
        .filter(|w| section_value(w[0].as_slice()) < 0.0 && section_value(w[1].as_slice()) >= 0.0)
        .count();
    if returns >= opts.cycle_returns {
        OmegaLimit::CycleSuspected
    } else {
        OmegaLimit::Nonconvergent {
            reason: "no equilibrium reached within the horizon".into(),
        }
    }
}
