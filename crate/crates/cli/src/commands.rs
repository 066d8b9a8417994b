//! Command implementations. Each returns the text to print on stdout; files
//! are written here, after all computation has finished.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use egd_core::basins::{estimate_basins, theorem1_harness, theorem2_harness, BasinOptions, BasinSummary, Theorem1Report, Theorem2Report};
use egd_core::brd::{integrate_brd, BrdOptions};
use egd_core::corpus::{a_n_family, all_fixtures, compare_form, golman_page, zeeman_fixture, FormMatch};
use egd_core::equilibria::{
    brd_boundary_singularities, detect_cyclic, enumerate_nash, CyclicReport, EquilibriumKind, EquilibriumReport, Stability,
};
use egd_core::game::{check_assumption_a, indifference_forms, AssumptionReport, GameFile, GameMatrix, PROPORTIONALITY_TOL};
use egd_core::rd::{check_rd_invariance, integrate_rd, RdOptions};
use egd_core::regression::{check_fixture, FixtureReport, RegressionOptions};
use egd_core::simplex::{derive_seed, SimplexPoint};
use egd_core::trajectory::{Dynamic, Trajectory};

use crate::args::{AnalyzeArgs, BasinsArgs, CorpusArgs, DynamicArg, Family, GameSource, PortraitArgs, ReportFormat, SimulateArgs};
use crate::portrait::{render_portrait, PortraitSpec};
use crate::{CliError, CliResult};

/// What a command prints, and the check that failed if it ran to completion
/// but did not pass.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub failure: Option<CliError>,
}

impl From<String> for Output {
    fn from(stdout: String) -> Self {
        Output { stdout, failure: None }
    }
}

/// A resolved game with its display name and, for reference classes, the label.
pub struct Game {
    pub name: String,
    pub matrix: GameMatrix,
    pub class: Option<&'static str>,
}

pub fn load_game(src: &GameSource) -> CliResult<Game> {
    match (&src.game, &src.corpus) {
        (Some(path), _) => {
            let file = GameFile::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let loaded = file.load()?;
            Ok(Game { name: loaded.name, matrix: loaded.matrix, class: None })
        }
        (None, Some(label)) => {
            let fx = zeeman_fixture(label)?;
            Ok(Game { name: format!("class {}", fx.label), matrix: fx.matrix(), class: Some(fx.label) })
        }
        (None, None) => Err(CliError::Input("one of --game or --corpus is required".into())),
    }
}

fn write_out(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// `dir/stem{suffix}.ext`, keeping the original extension.
fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn pretty<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Serialize)]
struct FormEntry {
    pair: (usize, usize),
    coeffs: Vec<f64>,
    equation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<[i64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_match: Option<FormMatch>,
}

#[derive(Serialize)]
struct InvarianceEntry {
    pair: (usize, usize),
    analytic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_drift: Option<f64>,
}

#[derive(Serialize)]
struct Singularity {
    pair: (usize, usize),
    point: Vec<f64>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    game: String,
    n: usize,
    matrix: Vec<Vec<f64>>,
    equilibria: Vec<EquilibriumReport>,
    indifference_forms: Vec<FormEntry>,
    assumption_a: AssumptionReport,
    invariance: Vec<InvarianceEntry>,
    cyclic: CyclicReport,
    boundary_singularities: Vec<Singularity>,
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<Output> {
    let game = load_game(&args.source)?;
    let a = &game.matrix;
    let fixture = game.class.map(|l| zeeman_fixture(l).expect("resolved above"));
    let eqs = enumerate_nash(a, args.tol);
    let assumption = check_assumption_a(a, PROPORTIONALITY_TOL);

    let forms: Vec<FormEntry> = indifference_forms(a)
        .into_iter()
        .map(|f| {
            let reference = fixture.and_then(|fx| fx.reference_form(f.pair.0, f.pair.1));
            FormEntry {
                pair: (f.pair.0 + 1, f.pair.1 + 1),
                equation: f.equation(),
                reference_match: reference.map(|p| compare_form(&f, &p)),
                reference,
                coeffs: f.coeffs,
            }
        })
        .collect();

    let mut invariance = Vec::new();
    for f in indifference_forms(a) {
        let (i, j) = f.pair;
        let analytic = egd_core::game::vertex_condition(a, i, j);
        // Drift is only meaningful where the set is claimed invariant.
        let max_drift = if analytic && assumption.holds {
            Some(check_rd_invariance(a, i, j, args.samples, args.horizon)?.max_drift)
        } else {
            None
        };
        invariance.push(InvarianceEntry { pair: (i + 1, j + 1), analytic, max_drift });
    }

    let boundary_singularities = brd_boundary_singularities(a)
        .into_iter()
        .map(|s| Singularity { pair: (s.pair.0 + 1, s.pair.1 + 1), point: s.point.into_vec() })
        .collect();

    let report = AnalyzeReport {
        game: game.name,
        n: a.n(),
        matrix: a.rows(),
        equilibria: eqs.iter().map(|e| e.report()).collect(),
        indifference_forms: forms,
        assumption_a: assumption.clone(),
        invariance,
        cyclic: detect_cyclic(a),
        boundary_singularities,
    };
    let text = pretty(&report)?;
    if let Some(path) = &args.out {
        write_out(path, &text)?;
    }
    let failure = (!assumption.holds).then(|| {
        CliError::Assertion(format!(
            "Assumption A violated: coinciding indifference sets {:?}",
            assumption.violating_pairs
        ))
    });
    let stdout = if args.out.is_some() { String::new() } else { text };
    Ok(Output { stdout, failure })
}

fn trajectory_csv(tr: &Trajectory) -> CliResult<String> {
    let mut buf = Vec::new();
    tr.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

pub fn simulate(args: &SimulateArgs) -> CliResult<Output> {
    let game = load_game(&args.source)?;
    let a = &game.matrix;
    if args.x0.len() != a.n() {
        return Err(CliError::Input(format!("--x0 has {} entries, game has {} strategies", args.x0.len(), a.n())));
    }
    let x0 = SimplexPoint::new(args.x0.clone())?;
    let eqs = enumerate_nash(a, egd_core::equilibria::NASH_TOL);
    let dynamics: &[Dynamic] = match args.dynamic {
        DynamicArg::Rd => &[Dynamic::Rd],
        DynamicArg::Brd => &[Dynamic::Brd],
        DynamicArg::Both => &[Dynamic::Rd, Dynamic::Brd],
    };
    if dynamics.len() > 1 && args.out.is_none() {
        return Err(CliError::Input("--dynamic both needs --out".into()));
    }
    let mut runs = Vec::new();
    for &d in dynamics {
        let tr = match d {
            Dynamic::Rd => integrate_rd(a, &x0, args.horizon, &RdOptions::default(), &eqs)?,
            Dynamic::Brd => {
                let opts = BrdOptions { sample_dt: args.dt, ..BrdOptions::default() };
                integrate_brd(a, &x0, args.horizon, &opts, &eqs)?
            }
        };
        runs.push((d, tr));
    }

    let mut summaries = Vec::new();
    for (d, tr) in &runs {
        let csv = trajectory_csv(tr)?;
        match &args.out {
            Some(path) => {
                let target = if runs.len() > 1 { suffixed(path, &format!("_{}", d.name())) } else { path.clone() };
                write_out(&target, &csv)?;
                if args.events && *d == Dynamic::Brd {
                    write_out(&target.with_extension("events.json"), &tr.events_json())?;
                }
            }
            None => return Ok(csv.into()),
        }
        summaries.push(tr.summary());
    }
    Ok(pretty(&summaries)?.into())
}

#[derive(Serialize)]
struct BasinsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    param: Option<f64>,
    #[serde(flatten)]
    summary: BasinSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sector_harness: Vec<Theorem1Report>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    invariant_set_harness: Vec<Theorem2Report>,
}

pub fn basins(args: &BasinsArgs) -> CliResult<Output> {
    if args.samples < 100 {
        return Err(CliError::Input(format!("--samples must be at least 100, got {}", args.samples)));
    }
    let mut games: Vec<(Option<f64>, String, GameMatrix)> = Vec::new();
    match args.family {
        Some(family) => {
            for &p in &args.param {
                let (name, m) = match family {
                    Family::GolmanPage => (format!("golman-page N={p}"), golman_page(p)?),
                    Family::AN => {
                        if p.fract() != 0.0 {
                            return Err(CliError::Input(format!("a-n takes integer parameters, got {p}")));
                        }
                        (format!("a-n n={p}"), a_n_family(p as i64)?)
                    }
                };
                games.push((Some(p), name, m));
            }
        }
        None => {
            let src = GameSource { game: args.game.clone(), corpus: args.corpus.clone() };
            let g = load_game(&src)?;
            games.push((None, g.name, g.matrix));
        }
    }

    let opts = BasinOptions {
        rd_horizon: args.horizon,
        brd_horizon: args.horizon,
        exclusion: args.tol,
        ..BasinOptions::default()
    };
    let mut reports = Vec::new();
    let mut csvs = Vec::new();
    for (param, name, a) in &games {
        let map = estimate_basins(a, name, args.samples, args.seed, &opts)?;
        let mut buf = Vec::new();
        map.write_csv(&mut buf)?;
        csvs.push((*param, buf));

        let mut sector_harness = Vec::new();
        let mut invariant_set_harness = Vec::new();
        if !args.no_harness {
            let eqs = enumerate_nash(a, egd_core::equilibria::NASH_TOL);
            for e in eqs.iter().filter(|e| e.kind == EquilibriumKind::Pure && e.stability == Stability::Stable) {
                let i = e.support[0];
                let hs = args.samples.min(1000);
                let t1 = theorem1_harness(a, i, hs, derive_seed(args.seed, 1 + i as u64))?;
                if t1.applicable {
                    sector_harness.push(t1);
                }
                for j in (0..a.n()).filter(|&j| j != i) {
                    let t2 = theorem2_harness(a, i, j, hs, derive_seed(args.seed, 100 + (a.n() * i + j) as u64))?;
                    if t2.applicable {
                        invariant_set_harness.push(t2);
                    }
                }
            }
        }
        reports.push(BasinsReport { param: *param, summary: map.summary(), sector_harness, invariant_set_harness });
    }

    if let Some(path) = &args.out {
        for (param, buf) in &csvs {
            let target = match param {
                Some(p) if games.len() > 1 || args.family.is_some() => suffixed(path, &format!("_{p}")),
                _ => path.clone(),
            };
            fs::write(&target, buf).map_err(|e| CliError::Input(format!("cannot write {}: {e}", target.display())))?;
        }
    }
    let text = if args.family.is_some() { pretty(&reports)? } else { pretty(&reports[0])? };
    for r in &reports {
        for w in &r.summary.warnings {
            log::warn!("{}: {w}", r.summary.game);
        }
    }
    match &args.summary {
        Some(path) => {
            write_out(path, &text)?;
            Ok(Output::default())
        }
        None => Ok(text.into()),
    }
}

pub fn portrait(args: &PortraitArgs) -> CliResult<Output> {
    let game = load_game(&args.source)?;
    let panels = match args.dynamic {
        DynamicArg::Rd => vec![Dynamic::Rd],
        DynamicArg::Brd => vec![Dynamic::Brd],
        DynamicArg::Both => vec![Dynamic::Rd, Dynamic::Brd],
    };
    let n = game.matrix.n();
    if let Some(&bad) = args.sector.iter().find(|&&s| s == 0 || s > n) {
        return Err(CliError::Input(format!("--sector {bad} is not a vertex of a {n}-strategy game")));
    }
    let spec = PortraitSpec {
        title: game.name.clone(),
        panels,
        orbits: args.orbits,
        seed: args.seed,
        horizon: args.horizon,
        sectors: args.sector.iter().map(|s| s - 1).collect(),
    };
    let svg = render_portrait(&game.matrix, &spec)?;
    match &args.out {
        Some(path) => {
            write_out(path, &svg)?;
            Ok(Output::default())
        }
        None => Ok(svg.into()),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// JUnit-style XML: one test suite per class, one test case per check.
pub fn junit_xml(reports: &[FixtureReport]) -> String {
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    let failed: usize = reports.iter().map(|r| r.failures().count()).sum();
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<testsuites name=\"corpus\" tests=\"{total}\" failures=\"{failed}\">");
    for r in reports {
        let _ = writeln!(
            s,
            "  <testsuite name=\"{}\" tests=\"{}\" failures=\"{}\">",
            xml_escape(&r.label),
            r.checks.len(),
            r.failures().count()
        );
        for c in &r.checks {
            let name = xml_escape(&c.name);
            let class = xml_escape(&r.label);
            if c.passed {
                let _ = writeln!(s, "    <testcase classname=\"{class}\" name=\"{name}\"/>");
            } else {
                let _ = writeln!(s, "    <testcase classname=\"{class}\" name=\"{name}\">");
                let _ = writeln!(s, "      <failure message=\"{}\"/>", xml_escape(&c.detail));
                let _ = writeln!(s, "    </testcase>");
            }
        }
        let _ = writeln!(s, "  </testsuite>");
    }
    s.push_str("</testsuites>\n");
    s
}

fn text_table(reports: &[FixtureReport]) -> String {
    let mut s = String::new();
    for r in reports {
        for c in &r.checks {
            let _ = writeln!(s, "{:<6} {:<38} {:<4} {}", r.label, c.name, if c.passed { "ok" } else { "FAIL" }, c.detail);
        }
    }
    let bad: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.label.as_str()).collect();
    let _ = writeln!(s, "{} of {} classes pass", reports.len() - bad.len(), reports.len());
    s
}

pub fn corpus(args: &CorpusArgs) -> CliResult<Output> {
    if args.list || (!args.all && args.class.is_empty()) {
        let mut s = String::new();
        for fx in all_fixtures() {
            let rows: Vec<String> = fx.rows.iter().map(|r| format!("{r:?}")).collect();
            let _ = writeln!(s, "{:<5} [{}]", fx.label, rows.join(", "));
        }
        return Ok(s.into());
    }
    let fixtures: Vec<_> = if args.all {
        all_fixtures().iter().collect()
    } else {
        args.class.iter().map(|l| zeeman_fixture(l)).collect::<egd_core::Result<Vec<_>>>()?
    };
    let opts = RegressionOptions { samples: args.samples, seed: args.seed, ..RegressionOptions::default() };
    let reports: Vec<FixtureReport> = fixtures.iter().map(|fx| check_fixture(fx, &opts)).collect::<egd_core::Result<_>>()?;

    let body = match args.report {
        ReportFormat::Xml => junit_xml(&reports),
        ReportFormat::Json => pretty(&reports)?,
        ReportFormat::Text | ReportFormat::Csv => text_table(&reports),
    };
    let shown = match &args.out {
        Some(path) => {
            write_out(path, &body)?;
            String::new()
        }
        None => body,
    };
    let failures: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures().map(move |c| format!("{}: {} ({})", r.label, c.name, c.detail)))
        .collect();
    let failure = (!failures.is_empty()).then(|| CliError::Assertion(format!("failed checks:\n  {}", failures.join("\n  "))));
    Ok(Output { stdout: shown, failure })
}
