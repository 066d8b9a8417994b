//! Monte Carlo basin estimates under both dynamics, the sector around a
//! vertex, and the verification harnesses for the two basin theorems.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brd::{solve_brd, BrdOptions, BrdSolution};
use crate::equilibria::{enumerate_nash, Equilibrium, EquilibriumKind, EquilibriumReport, Stability, NASH_TOL, STABILITY_TOL};
use crate::error::{Error, Result};
use crate::game::{check_assumption_a, indifference_form, indifference_forms, payoffs_unchecked, GameMatrix, LinearForm, PROPORTIONALITY_TOL};
use crate::rd::{check_rd_invariance, rd_field, run_rd, RdOptions, Targets, INVARIANCE_DRIFT_TOL};
use crate::simplex::{clip_polygon, derive_seed, dot, sample_simplex, SimplexPoint};
use crate::trajectory::OmegaLimit;

/// Samples drawn per partition; each partition has its own derived seed.
pub const PARTITION_SIZE: usize = 1000;

/// Theorem-level agreement threshold.
pub const AGREEMENT_TOL: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinOptions {
    pub rd_horizon: f64,
    pub brd_horizon: f64,
    /// Half-width of the band around indifference sets excluded from agreement statistics.
    pub exclusion: f64,
    /// Nonconvergent fraction above which a warning is attached.
    pub max_nonconv: f64,
    /// Stop replicator orbits once they enter a region that provably flows to a strict vertex.
    pub capture: bool,
    pub rd: RdOptions,
    pub brd: BrdOptions,
}

impl Default for BasinOptions {
    fn default() -> Self {
        BasinOptions {
            rd_horizon: 500.0,
            brd_horizon: 500.0,
            exclusion: 1e-4,
            max_nonconv: 0.05,
            capture: true,
            rd: RdOptions {
                record: false,
                ..RdOptions::default()
            },
            brd: BrdOptions {
                record: false,
                ..BrdOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinSample {
    pub x0: Vec<f64>,
    pub rd: String,
    pub brd: String,
    /// Within the exclusion band of some indifference set.
    pub excluded: bool,
}

/// Per-equilibrium statistics. Radii are 95% normal-approximation binomial
/// half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMeasure {
    pub label: String,
    pub stability: Stability,
    pub fraction_rd: f64,
    pub radius_rd: f64,
    pub fraction_brd: f64,
    pub radius_brd: f64,
    pub intersection: f64,
    pub intersection_radius: f64,
    /// `1 - |{rd = eq} xor {brd = eq}| / N` over non-excluded samples.
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMap {
    pub game: String,
    pub seed: u64,
    pub equilibria: Vec<EquilibriumReport>,
    pub samples: Vec<BasinSample>,
    pub measures: Vec<EquilibriumMeasure>,
    pub nonconvergent_rd: f64,
    pub nonconvergent_brd: f64,
    pub excluded: usize,
    /// Fraction of non-excluded samples with identical labels.
    pub agreement: f64,
    pub warnings: Vec<String>,
}

/// `1.96 sqrt(p (1 - p) / n)`.
pub fn binomial_radius(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

impl BasinMap {
    pub fn measure(&self, label: &str) -> Option<&EquilibriumMeasure> {
        self.measures.iter().find(|m| m.label == label)
    }

    /// Summary without the per-sample table.
    pub fn summary(&self) -> BasinSummary {
        BasinSummary {
            game: self.game.clone(),
            seed: self.seed,
            samples: self.samples.len(),
            equilibria: self.equilibria.clone(),
            measures: self.measures.clone(),
            nonconvergent_rd: self.nonconvergent_rd,
            nonconvergent_brd: self.nonconvergent_brd,
            excluded: self.excluded,
            agreement: self.agreement,
            warnings: self.warnings.clone(),
        }
    }

    /// CSV with header `x1,...,xn,label_rd,label_brd`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.samples.first().map_or(0, |s| s.x0.len());
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.push("label_rd".into());
        header.push("label_brd".into());
        wr.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.x0.iter().map(|v| format!("{v:?}")).collect();
            rec.push(s.rd.clone());
            rec.push(s.brd.clone());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinSummary {
    pub game: String,
    pub seed: u64,
    pub samples: usize,
    pub equilibria: Vec<EquilibriumReport>,
    pub measures: Vec<EquilibriumMeasure>,
    pub nonconvergent_rd: f64,
    pub nonconvergent_brd: f64,
    pub excluded: usize,
    pub agreement: f64,
    pub warnings: Vec<String>,
}

/// Fraction of samples labeled `label` under both dynamics, with its radius.
pub fn intersection_measure(map: &BasinMap, label: &str) -> (f64, f64) {
    let n = map.samples.len();
    let hits = map.samples.iter().filter(|s| s.rd == label && s.brd == label).count();
    let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    (p, binomial_radius(p, n))
}

/// Whether `x` lies within `band` of any indifference set.
pub fn near_indifference(forms: &[LinearForm], x: &[f64], band: f64) -> bool {
    forms.iter().any(|f| f.distance(x) < band)
}

/// Draws `count` uniform points in partitions of [`PARTITION_SIZE`], each
/// with seed `derive_seed(seed, p)`.
pub fn partitioned_samples(n: usize, count: usize, seed: u64) -> Vec<Vec<SimplexPoint>> {
    let parts = count.div_ceil(PARTITION_SIZE);
    (0..parts)
        .map(|p| {
            let size = PARTITION_SIZE.min(count - p * PARTITION_SIZE);
            sample_simplex(n, size, derive_seed(seed, p as u64))
        })
        .collect()
}

/// Reusable per-game state for labeling initial conditions.
pub struct Labeler<'a> {
    pub a: &'a GameMatrix,
    pub eqs: &'a [Equilibrium],
    targets: Targets,
    opts: BasinOptions,
}

impl<'a> Labeler<'a> {
    pub fn new(a: &'a GameMatrix, eqs: &'a [Equilibrium], opts: BasinOptions) -> Self {
        let targets = if opts.capture {
            Targets::with_capture(a, eqs)
        } else {
            Targets::new(eqs)
        };
        Labeler { a, eqs, targets, opts }
    }

    pub fn rd(&self, x0: &SimplexPoint) -> Result<OmegaLimit> {
        Ok(run_rd(self.a, x0, self.opts.rd_horizon, &self.opts.rd, &self.targets, |_, _| {})?.terminal)
    }

    /// Replicator label, calling `observe` on every accepted state.
    pub fn rd_observed(&self, x0: &SimplexPoint, observe: impl FnMut(f64, &[f64])) -> Result<OmegaLimit> {
        Ok(run_rd(self.a, x0, self.opts.rd_horizon, &self.opts.rd, &self.targets, observe)?.terminal)
    }

    pub fn brd(&self, x0: &SimplexPoint) -> Result<BrdSolution> {
        solve_brd(self.a, x0, self.opts.brd_horizon, &self.opts.brd, self.eqs)
    }
}

/// Labels a uniform sample of the simplex under both dynamics.
pub fn estimate_basins(a: &GameMatrix, game: &str, samples: usize, seed: u64, opts: &BasinOptions) -> Result<BasinMap> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let eqs = enumerate_nash(a, NASH_TOL);
    let forms = indifference_forms(a);
    let labeler = Labeler::new(a, &eqs, *opts);
    let parts = partitioned_samples(a.n(), samples, seed);
    let labeled: Vec<Vec<BasinSample>> = parts
        .par_iter()
        .map(|part| {
            part.iter()
                .map(|x0| {
                    let rd = labeler.rd(x0)?;
                    let brd = labeler.brd(x0)?.terminal;
                    Ok(BasinSample {
                        x0: x0.as_slice().to_vec(),
                        rd: rd.short_label().to_string(),
                        brd: brd.short_label().to_string(),
                        excluded: near_indifference(&forms, x0.as_slice(), opts.exclusion),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<BasinSample> = labeled.into_iter().flatten().collect();
    Ok(assemble(game, seed, &eqs, samples, opts))
}

fn assemble(game: &str, seed: u64, eqs: &[Equilibrium], samples: Vec<BasinSample>, opts: &BasinOptions) -> BasinMap {
    let n = samples.len();
    let kept: Vec<&BasinSample> = samples.iter().filter(|s| !s.excluded).collect();
    let frac = |k: usize| k as f64 / n as f64;
    let measures: Vec<EquilibriumMeasure> = eqs
        .iter()
        .map(|e| {
            let label = e.label();
            let rd = samples.iter().filter(|s| s.rd == label).count();
            let brd = samples.iter().filter(|s| s.brd == label).count();
            let both = samples.iter().filter(|s| s.rd == label && s.brd == label).count();
            let xor = kept.iter().filter(|s| (s.rd == label) != (s.brd == label)).count();
            let agreement = if kept.is_empty() {
                1.0
            } else {
                1.0 - xor as f64 / kept.len() as f64
            };
            EquilibriumMeasure {
                label,
                stability: e.stability,
                fraction_rd: frac(rd),
                radius_rd: binomial_radius(frac(rd), n),
                fraction_brd: frac(brd),
                radius_brd: binomial_radius(frac(brd), n),
                intersection: frac(both),
                intersection_radius: binomial_radius(frac(both), n),
                agreement,
            }
        })
        .collect();
    let converged = |l: &str| eqs.iter().any(|e| e.label() == l);
    let nonconvergent_rd = frac(samples.iter().filter(|s| !converged(&s.rd)).count());
    let nonconvergent_brd = frac(samples.iter().filter(|s| !converged(&s.brd)).count());
    let agreement = if kept.is_empty() {
        1.0
    } else {
        kept.iter().filter(|s| s.rd == s.brd).count() as f64 / kept.len() as f64
    };
    let mut warnings = Vec::new();
    for (name, f) in [("replicator", nonconvergent_rd), ("best-response", nonconvergent_brd)] {
        if f > opts.max_nonconv {
            let msg = format!("{name} dynamics: {:.2}% of samples did not converge", 100.0 * f);
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    BasinMap {
        game: game.to_string(),
        seed,
        equilibria: eqs.iter().map(|e| e.report()).collect(),
        excluded: n - kept.len(),
        samples,
        measures,
        nonconvergent_rd,
        nonconvergent_brd,
        agreement,
        warnings,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorSign {
    Positive,
    Negative,
    /// The form vanishes along the ray from the vertex through the reference point.
    Free,
}

/// The cell of the indifference-set arrangement adjacent to a vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRegion {
    pub anchor: usize,
    pub forms: Vec<LinearForm>,
    pub signs: Vec<SectorSign>,
    pub reference: Vec<f64>,
}

impl SectorRegion {
    /// Open-cell membership: strict sign agreement on every non-free form.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.forms.iter().zip(&self.signs).all(|(f, s)| match s {
            SectorSign::Positive => f.eval(x) > 0.0,
            SectorSign::Negative => f.eval(x) < 0.0,
            SectorSign::Free => true,
        })
    }

    /// `(form, +1 or -1)` for every bounding form.
    pub fn constraints(&self) -> impl Iterator<Item = (&LinearForm, f64)> {
        self.forms.iter().zip(&self.signs).filter_map(|(f, s)| match s {
            SectorSign::Positive => Some((f, 1.0)),
            SectorSign::Negative => Some((f, -1.0)),
            SectorSign::Free => None,
        })
    }

    /// Signed distance outside the closure; zero or negative inside.
    pub fn excursion(&self, x: &[f64]) -> f64 {
        self.constraints()
            .map(|(f, s)| {
                let t = f.tangent_norm();
                if t == 0.0 {
                    0.0
                } else {
                    -s * f.eval(x) / t
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds `S_i` from the sign vector of all indifference forms at
/// `(1 - eps) e_i + eps * barycenter`.
///
/// Experimental for more than three strategies.
pub fn construct_sector(a: &GameMatrix, i: usize) -> Result<SectorRegion> {
    let n = a.n();
    if i >= n {
        return Err(Error::InvalidArgument(format!("vertex {} out of range for n = {n}", i + 1)));
    }
    let report = check_assumption_a(a, PROPORTIONALITY_TOL);
    if !report.holds {
        return Err(Error::Domain(format!(
            "sector needs distinct indifference sets; coinciding pairs {:?}",
            report.violating_pairs
        )));
    }
    let forms = indifference_forms(a);
    let tol = 1e-12 * a.max_norm();
    let mut eps = 1e-3;
    for _ in 0..=10 {
        let reference: Vec<f64> = (0..n)
            .map(|k| if k == i { 1.0 - eps } else { 0.0 } + eps / n as f64)
            .collect();
        let mut signs = Vec::with_capacity(forms.len());
        let mut ambiguous = false;
        for f in &forms {
            let v = f.eval(&reference);
            if v.abs() < tol {
                // Through e_i and the barycenter: vanishes on the whole ray.
                if f.coeffs[i].abs() <= tol && f.eval(&vec![1.0 / n as f64; n]).abs() < tol {
                    signs.push(SectorSign::Free);
                } else {
                    ambiguous = true;
                    break;
                }
            } else if v > 0.0 {
                signs.push(SectorSign::Positive);
            } else {
                signs.push(SectorSign::Negative);
            }
        }
        if !ambiguous {
            return Ok(SectorRegion {
                anchor: i,
                forms,
                signs,
                reference,
            });
        }
        eps *= 0.5;
    }
    Err(Error::Degenerate(format!(
        "reference point for S{} stays on an indifference set",
        i + 1
    )))
}

/// Vertices of the closed sector for three strategies, in simplex coordinates.
pub fn sector_polygon(region: &SectorRegion) -> Option<Vec<Vec<f64>>> {
    let n = region.reference.len();
    if n != 3 {
        return None;
    }
    let mut poly: Vec<Vec<f64>> = (0..3).map(|k| SimplexPoint::vertex(3, k).into_vec()).collect();
    for (f, s) in region.constraints() {
        poly = clip_polygon(&poly, &f.coeffs, s);
        if poly.len() < 3 {
            return None;
        }
    }
    Some(poly)
}

/// Draws up to `count` uniform points inside the sector by rejection.
pub fn sample_sector(region: &SectorRegion, count: usize, seed: u64) -> Vec<SimplexPoint> {
    let n = region.reference.len();
    let mut out = Vec::with_capacity(count);
    let mut batch = 0u64;
    // Tiny sectors would never fill; cap the effort.
    let max_batches = (count as u64).max(1) * 100;
    while out.len() < count && batch < max_batches {
        for p in sample_simplex(n, PARTITION_SIZE, derive_seed(seed, batch)) {
            if out.len() < count && region.contains(p.as_slice()) {
                out.push(p);
            }
        }
        batch += 1;
    }
    out
}

/// Flow across one boundary segment of a three-strategy sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySegment {
    /// Strategies of the bounding indifference set, 1-based.
    pub pair: (usize, usize),
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    /// Minimum over the segment of the replicator velocity along the inward normal.
    pub min_inward_flow: f64,
    pub inward: bool,
    /// Best responses just inside and just outside the segment midpoint (1-based).
    pub br_inside: Vec<usize>,
    pub br_outside: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorInvarianceReport {
    pub anchor: usize,
    /// No sampled orbit left the closed sector before converging.
    pub invariant_rd: bool,
    pub max_excursion: f64,
    pub samples: usize,
    /// The replicator field points into the sector along every bounding segment.
    pub boundary_br_check: bool,
    pub segments: Vec<BoundarySegment>,
    pub invariant: bool,
}

/// Distance outside the sector an orbit may reach before counting as an exit.
pub const EXIT_TOL: f64 = 1e-9;

fn best_set(a: &GameMatrix, x: &[f64]) -> Vec<usize> {
    let p = payoffs_unchecked(a, x);
    let best = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-10 * a.max_norm();
    (0..p.len()).filter(|&k| p[k] >= best - eps).map(|k| k + 1).collect()
}

/// Minimum of a cubic through `(t_k, v_k)` at `t = 0, 1/3, 2/3, 1` on `[0, 1]`.
fn cubic_min(v: [f64; 4]) -> f64 {
    // Newton divided differences to monomial coefficients.
    let h = 1.0 / 3.0;
    let d1 = [(v[1] - v[0]) / h, (v[2] - v[1]) / h, (v[3] - v[2]) / h];
    let d2 = [(d1[1] - d1[0]) / (2.0 * h), (d1[2] - d1[1]) / (2.0 * h)];
    let d3 = (d2[1] - d2[0]) / (3.0 * h);
    // p(t) = v0 + d1 t + d2 t (t - h) + d3 t (t - h)(t - 2h)
    let c0 = v[0];
    let c1 = d1[0] - d2[0] * h + d3 * 2.0 * h * h;
    let c2 = d2[0] - d3 * 3.0 * h;
    let c3 = d3;
    let p = |t: f64| ((c3 * t + c2) * t + c1) * t + c0;
    let mut m = v[0].min(v[3]);
    // p'(t) = 3 c3 t^2 + 2 c2 t + c1
    let (qa, qb, qc) = (3.0 * c3, 2.0 * c2, c1);
    let mut roots = Vec::new();
    if qa.abs() > 1e-300 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            roots.push((-qb - s) / (2.0 * qa));
            roots.push((-qb + s) / (2.0 * qa));
        }
    } else if qb.abs() > 1e-300 {
        roots.push(-qc / qb);
    }
    for r in roots {
        if (0.0..=1.0).contains(&r) {
            m = m.min(p(r));
        }
    }
    m
}

/// Numerical and analytic invariance checks for a sector.
///
/// The analytic check needs three strategies: along each polygon edge lying on
/// a bounding form `s * h . x >= 0`, the inward flow `s * h . v(x)` is a cubic
/// in the edge parameter whose minimum is found exactly.
pub fn check_sector_invariance(a: &GameMatrix, region: &SectorRegion, samples: usize, seed: u64) -> Result<SectorInvarianceReport> {
    let eqs = enumerate_nash(a, NASH_TOL);
    let mut segments = Vec::new();
    let mut boundary_ok = true;
    let scale = a.max_norm();
    if let Some(poly) = sector_polygon(region) {
        let m = poly.len();
        for k in 0..m {
            let p = &poly[k];
            let q = &poly[(k + 1) % m];
            for (f, s) in region.constraints() {
                let tol = 1e-12 * scale;
                if f.eval(p).abs() > tol || f.eval(q).abs() > tol {
                    continue;
                }
                let at = |t: f64| -> Vec<f64> { p.iter().zip(q).map(|(u, w)| u + t * (w - u)).collect() };
                let flow = |t: f64| {
                    let x = SimplexPoint::from_vec_unchecked(at(t));
                    s * dot(&f.coeffs, &rd_field(a, &x))
                };
                let min = cubic_min([flow(0.0), flow(1.0 / 3.0), flow(2.0 / 3.0), flow(1.0)]);
                let inward = min >= -1e-12 * scale;
                boundary_ok &= inward;
                let mid = at(0.5);
                let normal: Vec<f64> = {
                    let mean = f.coeffs.iter().sum::<f64>() / 3.0;
                    let t = f.tangent_norm();
                    f.coeffs.iter().map(|c| s * (c - mean) / t).collect()
                };
                let offset = |d: f64| -> Vec<f64> { mid.iter().zip(&normal).map(|(x, v)| x + d * v).collect() };
                segments.push(BoundarySegment {
                    pair: (f.pair.0 + 1, f.pair.1 + 1),
                    from: p.clone(),
                    to: q.clone(),
                    min_inward_flow: min,
                    inward,
                    br_inside: best_set(a, &offset(1e-6)),
                    br_outside: best_set(a, &offset(-1e-6)),
                });
            }
        }
    } else {
        // More than three strategies: sample each bounding face.
        for (f, s) in region.constraints() {
            let pts = crate::rd::points_on_indifference(f, a.n(), 200, derive_seed(seed, 7 + f.pair.0 as u64 * 31 + f.pair.1 as u64));
            let mut min = f64::INFINITY;
            for x in pts.iter().filter(|x| region.excursion(x.as_slice()) <= 1e-12) {
                min = min.min(s * dot(&f.coeffs, &rd_field(a, x)));
            }
            if min.is_finite() {
                let inward = min >= -1e-12 * scale;
                boundary_ok &= inward;
                segments.push(BoundarySegment {
                    pair: (f.pair.0 + 1, f.pair.1 + 1),
                    from: Vec::new(),
                    to: Vec::new(),
                    min_inward_flow: min,
                    inward,
                    br_inside: Vec::new(),
                    br_outside: Vec::new(),
                });
            }
        }
    }

    let starts = sample_sector(region, samples, seed);
    let labeler = Labeler::new(a, &eqs, BasinOptions::default());
    let excursions: Vec<f64> = starts
        .par_iter()
        .map(|x0| {
            let mut worst = f64::NEG_INFINITY;
            labeler.rd_observed(x0, |_, x| worst = worst.max(region.excursion(x)))?;
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_excursion = excursions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let invariant_rd = max_excursion <= EXIT_TOL;
    Ok(SectorInvarianceReport {
        anchor: region.anchor + 1,
        invariant_rd,
        max_excursion,
        samples: starts.len(),
        boundary_br_check: boundary_ok,
        segments,
        invariant: invariant_rd && boundary_ok,
    })
}

fn stable_pure(eqs: &[Equilibrium], i: usize) -> Option<&Equilibrium> {
    eqs.iter()
        .find(|e| e.kind == EquilibriumKind::Pure && e.support == [i] && e.stability == Stability::Stable)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    /// 1-based vertex.
    pub vertex: usize,
    /// `e_i` is a locally stable pure equilibrium.
    pub precondition: bool,
    pub assumption_a: bool,
    /// Some fully mixed equilibrium has an eigenvalue with positive real part.
    pub h1: bool,
    /// Every eigenvalue of that equilibrium has positive real part.
    pub h1_all_unstable: bool,
    pub h2: bool,
    pub applicable: bool,
    pub sector: Option<SectorInvarianceReport>,
    pub sector_samples: usize,
    pub converged_rd: usize,
    pub converged_brd: usize,
    /// Every sector sample converged to the vertex under both dynamics.
    pub conclusion_verified: bool,
    /// Fraction of a uniform sample reaching the vertex under both dynamics.
    pub intersection: f64,
}

/// Checks the hypotheses of the sector theorem at vertex `i` and tests its
/// conclusion on samples of `S_i`, whether or not the hypotheses hold.
pub fn theorem1_harness(a: &GameMatrix, i: usize, samples: usize, seed: u64) -> Result<Theorem1Report> {
    let eqs = enumerate_nash(a, NASH_TOL);
    let tol = STABILITY_TOL * a.max_norm();
    let precondition = stable_pure(&eqs, i).is_some();
    let assumption_a = check_assumption_a(a, PROPORTIONALITY_TOL).holds;
    let interior: Vec<&Equilibrium> = eqs.iter().filter(|e| e.kind == EquilibriumKind::Interior).collect();
    let h1 = interior.iter().any(|e| e.some_unstable(tol));
    let h1_all_unstable = interior.iter().any(|e| e.all_unstable(tol));
    let label = crate::equilibria::label_for_support(&[i], a.n());

    let mut report = Theorem1Report {
        vertex: i + 1,
        precondition,
        assumption_a,
        h1,
        h1_all_unstable,
        h2: false,
        applicable: false,
        sector: None,
        sector_samples: 0,
        converged_rd: 0,
        converged_brd: 0,
        conclusion_verified: false,
        intersection: 0.0,
    };
    if !assumption_a {
        return Ok(report);
    }
    let region = construct_sector(a, i)?;
    let inv = check_sector_invariance(a, &region, samples, derive_seed(seed, 1))?;
    report.h2 = inv.invariant;
    report.sector = Some(inv);
    report.applicable = precondition && h1 && report.h2;

    let labeler = Labeler::new(a, &eqs, BasinOptions::default());
    let starts = sample_sector(&region, samples, derive_seed(seed, 2));
    let hits: Vec<(bool, bool)> = starts
        .par_iter()
        .map(|x0| {
            let rd = labeler.rd(x0)?;
            let brd = labeler.brd(x0)?.terminal;
            Ok((rd.short_label() == label, brd.short_label() == label))
        })
        .collect::<Result<Vec<_>>>()?;
    report.sector_samples = starts.len();
    report.converged_rd = hits.iter().filter(|h| h.0).count();
    report.converged_brd = hits.iter().filter(|h| h.1).count();
    report.conclusion_verified = !starts.is_empty() && hits.iter().all(|h| h.0 && h.1);

    let map = estimate_basins(a, "", samples, derive_seed(seed, 3), &BasinOptions::default())?;
    report.intersection = intersection_measure(&map, &label).0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub vertex: usize,
    pub pair: (usize, usize),
    pub precondition: bool,
    pub assumption_a: bool,
    /// `e_i` does not lie on `Z_{i,j}`.
    pub vertex_off_set: bool,
    pub rd_invariant_analytic: bool,
    pub rd_max_drift: Option<f64>,
    /// No sampled best-response orbit crosses `Z_{i,j}`.
    pub brd_no_crossing: bool,
    pub applicable: bool,
    /// Per-sample agreement of the `e_i` labels on non-excluded samples.
    pub agreement: f64,
    pub conclusion_verified: bool,
}

/// Whether a piecewise-linear orbit takes both strict signs of `form`.
fn crosses(sol: &BrdSolution, form: &LinearForm, tol: f64) -> bool {
    let mut pos = false;
    let mut neg = false;
    let mut note = |v: f64| {
        pos |= v > tol;
        neg |= v < -tol;
    };
    for p in &sol.pieces {
        note(form.eval(&p.x0));
        note(form.eval(&p.state_at(p.t1)));
    }
    pos && neg
}

/// Checks the invariant-indifference-set theorem for `e_i` and `Z_{i,j}` and
/// measures label agreement for `e_i` on a uniform sample.
pub fn theorem2_harness(a: &GameMatrix, i: usize, j: usize, samples: usize, seed: u64) -> Result<Theorem2Report> {
    let eqs = enumerate_nash(a, NASH_TOL);
    let form = indifference_form(a, i, j)?;
    let precondition = stable_pure(&eqs, i).is_some();
    let assumption_a = check_assumption_a(a, PROPORTIONALITY_TOL).holds;
    let vertex_off_set = form.coeffs[i].abs() > 1e-12 * a.max_norm();
    let rd_inv = check_rd_invariance(a, i, j, 20, 50.0).ok();
    let rd_invariant_analytic = crate::game::vertex_condition(a, i, j);
    let rd_max_drift = rd_inv.as_ref().map(|r| r.max_drift);
    let rd_ok = rd_invariant_analytic && rd_max_drift.is_none_or(|d| d < INVARIANCE_DRIFT_TOL);

    let opts = BasinOptions::default();
    let labeler = Labeler::new(a, &eqs, opts);
    let forms = indifference_forms(a);
    let label = crate::equilibria::label_for_support(&[i], a.n());
    let parts = partitioned_samples(a.n(), samples, seed);
    let tol = 1e-9 * a.max_norm();
    let rows: Vec<Vec<(bool, bool, bool, bool)>> = parts
        .par_iter()
        .map(|part| {
            part.iter()
                .map(|x0| {
                    let rd = labeler.rd(x0)?;
                    let sol = labeler.brd(x0)?;
                    Ok((
                        rd.short_label() == label,
                        sol.terminal.short_label() == label,
                        near_indifference(&forms, x0.as_slice(), opts.exclusion),
                        crosses(&sol, &form, tol),
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    let brd_no_crossing = rows.iter().all(|r| !r.3);
    let kept: Vec<_> = rows.iter().filter(|r| !r.2).collect();
    let agreement = if kept.is_empty() {
        1.0
    } else {
        1.0 - kept.iter().filter(|r| r.0 != r.1).count() as f64 / kept.len() as f64
    };
    let applicable = precondition && assumption_a && vertex_off_set && rd_ok && brd_no_crossing;
    Ok(Theorem2Report {
        vertex: i + 1,
        pair: (i + 1, j + 1),
        precondition,
        assumption_a,
        vertex_off_set,
        rd_invariant_analytic,
        rd_max_drift,
        brd_no_crossing,
        applicable,
        agreement,
        conclusion_verified: agreement >= 1.0 - AGREEMENT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 3]]) -> GameMatrix {
        GameMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cubic_min_matches_dense_scan() {
        let f = |t: f64| 2.0 * t * t * t - 3.0 * t * t + 0.4 * t + 0.1;
        let got = cubic_min([f(0.0), f(1.0 / 3.0), f(2.0 / 3.0), f(1.0)]);
        let want = (0..=100_000).map(|k| f(k as f64 / 1e5)).fold(f64::INFINITY, f64::min);
        assert!((got - want).abs() < 1e-9, "{got} {want}");
    }

    #[test]
    fn sector_of_coordination_game() {
        let ten = m(&[[0., -1., -1.], [-1., 0., -1.], [-1., -1., 0.]]);
        let s = construct_sector(&ten, 0).unwrap();
        assert_eq!(s.signs, vec![SectorSign::Positive, SectorSign::Positive, SectorSign::Free]);
        assert!(s.contains(&[0.5, 0.3, 0.2]));
        assert!(!s.contains(&[0.3, 0.5, 0.2]));
        assert!(s.contains(&s.reference));
        let poly = sector_polygon(&s).unwrap();
        assert_eq!(poly.len(), 4);
    }

    #[test]
    fn sector_points_have_unique_best_response() {
        let six_two = m(&[[0., -1., -3.], [1., 0., -5.], [-1., -3., 0.]]);
        let s = construct_sector(&six_two, 1).unwrap();
        for x in sample_sector(&s, 500, 3) {
            assert_eq!(best_set(&six_two, x.as_slice()), vec![2]);
        }
    }

    #[test]
    fn basin_map_invariants() {
        let ten = m(&[[0., -1., -1.], [-1., 0., -1.], [-1., -1., 0.]]);
        let map = estimate_basins(&ten, "10_1", 300, 5, &BasinOptions::default()).unwrap();
        let total_rd: f64 = map.measures.iter().map(|m| m.fraction_rd).sum::<f64>() + map.nonconvergent_rd;
        let total_brd: f64 = map.measures.iter().map(|m| m.fraction_brd).sum::<f64>() + map.nonconvergent_brd;
        assert!((total_rd - 1.0).abs() < 1e-12 && (total_brd - 1.0).abs() < 1e-12);
        for m in &map.measures {
            assert!(m.intersection <= m.fraction_rd.min(m.fraction_brd));
            let (p, _) = intersection_measure(&map, &m.label);
            assert_eq!(p, m.intersection);
        }
        let again = estimate_basins(&ten, "10_1", 300, 5, &BasinOptions::default()).unwrap();
        assert_eq!(map, again);
    }

    #[test]
    fn partitions_cover_count() {
        let parts = partitioned_samples(3, 2500, 1);
        assert_eq!(parts.iter().map(|p| p.len()).collect::<Vec<_>>(), vec![1000, 1000, 500]);
    }
}
