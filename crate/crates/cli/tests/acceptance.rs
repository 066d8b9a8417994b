//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria recorded as unattainable with the reference data are still run
//! and reported; only an unexpected failure makes the target fail.

mod common;

use std::time::Instant;

use egd_core::basins::{estimate_basins, intersection_measure, theorem1_harness, BasinOptions};
use egd_core::brd::{solve_brd, BrdOptions};
use egd_core::corpus::{a_n_edge_equilibrium, a_n_family, all_fixtures, compare_form, golman_page, zeeman_fixture, FormMatch};
use egd_core::equilibria::{enumerate_nash, EquilibriumKind, Stability, NASH_TOL};
use egd_core::game::{indifference_forms, vertex_condition, GameMatrix};
use egd_core::rd::{check_rd_invariance, integrate_rd, RdOptions, INVARIANCE_DRIFT_TOL};
use egd_core::simplex::{derive_seed, sample_simplex};
use egd_cli::portrait::{render_portrait, PortraitSpec};

use common::Oracle;

const SEED: u64 = 20_240_601;

/// Criteria that cannot pass with the reference data.
const UNATTAINABLE: [usize; 2] = [1, 6];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn stable_labels(a: &GameMatrix) -> Vec<String> {
    let mut v: Vec<String> = enumerate_nash(a, NASH_TOL)
        .iter()
        .filter(|e| e.stability == Stability::Stable)
        .map(|e| e.label())
        .collect();
    v.sort();
    v
}

fn table2() -> Outcome {
    let mut bad = Vec::new();
    let mut sign_flips = 0;
    for fx in all_fixtures() {
        for f in indifference_forms(&fx.matrix()) {
            let (i, j) = f.pair;
            match compare_form(&f, &fx.reference_form(i, j).unwrap()) {
                FormMatch::PositiveMultiple => {}
                FormMatch::NegativeMultiple => sign_flips += 1,
                FormMatch::NotProportional => bad.push(format!("{} Z{}{}: {}", fx.label, i + 1, j + 1, f.equation())),
            }
        }
    }
    // Equations are compared as zero sets; the stated sign is arbitrary.
    outcome(
        bad.is_empty(),
        format!("24 forms, {sign_flips} stated with opposite sign, not proportional: {bad:?}"),
    )
}

fn stability_signatures() -> Outcome {
    let expected: [(&str, &[&str]); 8] = [
        ("5_1", &["e1"]),
        ("6_1", &["e2", "e3"]),
        ("7_1", &["e1", "interior"]),
        ("10_1", &["e1", "e2", "e3"]),
        ("4_1", &["e1", "e2"]),
        ("6_2", &["e2", "e3"]),
        ("7_2", &["e1", "e2_3"]),
        ("9_1", &["e1_3", "e2_3"]),
    ];
    let mut bad = Vec::new();
    for (label, want) in expected {
        let got = stable_labels(&zeeman_fixture(label).unwrap().matrix());
        if got != want {
            bad.push(format!("{label}: {got:?}"));
        }
    }
    outcome(bad.is_empty(), format!("8 classes, mismatches {bad:?}"))
}

fn max_scaled_imag(label: &str) -> f64 {
    let a = zeeman_fixture(label).unwrap().matrix();
    let eq = enumerate_nash(&a, NASH_TOL).into_iter().find(|e| e.kind == EquilibriumKind::Interior).unwrap();
    eq.eigenvalues.iter().map(|l| l.im.abs()).fold(0.0, f64::max) / a.max_norm()
}

fn no_cycling_correction() -> Outcome {
    let (c6, c5, c7) = (max_scaled_imag("6_1"), max_scaled_imag("5_1"), max_scaled_imag("7_1"));
    outcome(
        c6 < 1e-9 && c5 > 1e-3 && c7 > 1e-3,
        format!("|Im| 6_1 {c6:.2e}, 5_1 {c5:.4}, 7_1 {c7:.4}"),
    )
}

fn basins_coincide() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for label in ["10_1", "4_1", "7_2", "9_1"] {
        let a = zeeman_fixture(label).unwrap().matrix();
        let map = estimate_basins(&a, label, 10_000, SEED, &BasinOptions::default()).unwrap();
        let worst = map
            .measures
            .iter()
            .filter(|m| m.stability == Stability::Stable)
            .map(|m| m.agreement)
            .fold(1.0, f64::min);
        ok &= worst >= 0.995;
        parts.push(format!("{label} {worst:.4}"));
    }
    outcome(ok, format!("min per-equilibrium agreement: {}", parts.join(", ")))
}

fn sector_theorem() -> Outcome {
    let a = zeeman_fixture("6_2").unwrap().matrix();
    let r = theorem1_harness(&a, 1, 1000, SEED).unwrap();
    let failures = (r.sector_samples - r.converged_rd) + (r.sector_samples - r.converged_brd);
    outcome(
        r.sector_samples == 1000 && failures == 0 && r.assumption_a && r.h1 && r.h2,
        format!(
            "{} samples in S2, rd {}, brd {}, A {}, H1 {}, H2 {}",
            r.sector_samples, r.converged_rd, r.converged_brd, r.assumption_a, r.h1, r.h2
        ),
    )
}

fn dominance_direction() -> Outcome {
    let a = zeeman_fixture("6_1").unwrap().matrix();
    let map = estimate_basins(&a, "6_1", 10_000, SEED, &BasinOptions::default()).unwrap();
    let m = map.measure("e2").unwrap();
    let diff = m.fraction_brd - m.fraction_rd;
    outcome(
        diff > 0.02,
        format!("BRD {:.4} - RD {:.4} = {diff:.4} (radius {:.4})", m.fraction_brd, m.fraction_rd, m.radius_brd),
    )
}

fn vanishing_intersection() -> Outcome {
    let mut inter = Vec::new();
    let mut rd20 = 0.0;
    for n in [2.0, 5.0, 10.0, 20.0] {
        let map = estimate_basins(&golman_page(n).unwrap(), "gp", 10_000, SEED, &BasinOptions::default()).unwrap();
        inter.push(intersection_measure(&map, "e1").0);
        rd20 = map.measure("e1").unwrap().fraction_rd;
    }
    let decreasing = inter.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && inter[3] < 0.05 && rd20 > 0.9,
        format!("intersection {inter:.4?}, RD(e1) at N=20 {rd20:.4}"),
    )
}

fn a_n_family_check() -> Outcome {
    let mut rd = Vec::new();
    let mut brd = Vec::new();
    let mut exact = true;
    for n in [1i64, 5, 20, 100] {
        let a = a_n_family(n).unwrap();
        let map = estimate_basins(&a, "a-n", 10_000, SEED, &BasinOptions::default()).unwrap();
        let m = map.measure("e1").unwrap();
        rd.push(m.fraction_rd);
        brd.push(m.fraction_brd);
        let want = a_n_edge_equilibrium(n);
        let got = enumerate_nash(&a, NASH_TOL).into_iter().find(|e| e.label() == "e1_3").map(|e| e.point.into_vec());
        exact &= got.is_some_and(|g| g.iter().zip(want).all(|(x, y)| (x - y).abs() <= 4.0 * f64::EPSILON));
    }
    let decreasing = rd.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && rd[3] < 0.05 && brd[3] > 0.15 && exact,
        format!("RD(e1) {rd:.4?}, BRD(e1) {brd:.4?}, e1_3 closed form {exact}"),
    )
}

fn brd_exactness() -> Outcome {
    let h = 1e-4;
    let steps = 200_000;
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    let (mut switches, mut sliding, mut stopped) = (0usize, 0usize, 0usize);
    for fx in all_fixtures() {
        let a = fx.matrix();
        let eqs = enumerate_nash(&a, NASH_TOL);
        let oracle = Oracle::new(fx.rows);
        let opts = BrdOptions { record: false, ..BrdOptions::default() };
        for (k, x0) in sample_simplex(3, 100, derive_seed(SEED, 9)).into_iter().enumerate() {
            let sol = solve_brd(&a, &x0, 20.0, &opts, &eqs).unwrap();
            let start = [x0[0], x0[1], x0[2]];
            let modes = oracle.run(&start, h, steps, 10, |t, x| {
                let y = sol.state_at(t);
                let d = (0..3).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max);
                if d > worst {
                    worst = d;
                    where_ = format!("{} start {k} t {t:.3}", fx.label);
                }
            });
            switches += modes.len() - 1;
            sliding += modes.iter().any(|m| matches!(m, common::Mode::Slide(..))) as usize;
            stopped += modes.contains(&common::Mode::Stopped) as usize;
        }
    }
    outcome(worst <= 1e-6, format!(
            "sup-norm gap {worst:.2e} over 800 orbits ({where_}); {switches} switches, {sliding} orbits slide, {stopped} stop at a full tie"
        ))
}

fn invariance_suite() -> Outcome {
    let mut worst_inv = 0.0f64;
    let mut least_non = f64::INFINITY;
    let (mut n_inv, mut n_non) = (0, 0);
    for fx in all_fixtures() {
        let a = fx.matrix();
        for f in indifference_forms(&a) {
            let (i, j) = f.pair;
            let r = check_rd_invariance(&a, i, j, 20, 50.0).unwrap();
            if vertex_condition(&a, i, j) {
                n_inv += 1;
                worst_inv = worst_inv.max(r.max_drift);
            } else {
                n_non += 1;
                least_non = least_non.min(r.max_drift);
            }
        }
    }
    outcome(
        worst_inv < INVARIANCE_DRIFT_TOL && least_non >= INVARIANCE_DRIFT_TOL,
        format!("{n_inv} invariant pairs, max drift {worst_inv:.2e}; {n_non} others, min drift {least_non:.2e}"),
    )
}

fn conservation_and_determinism() -> Outcome {
    let mut games: Vec<GameMatrix> = all_fixtures().iter().map(|f| f.matrix()).collect();
    games.push(golman_page(20.0).unwrap());
    games.push(a_n_family(100).unwrap());
    let mut worst = 0.0f64;
    let mut states = 0usize;
    for (g, a) in games.iter().enumerate() {
        let eqs = enumerate_nash(a, NASH_TOL);
        for x0 in sample_simplex(3, 25, derive_seed(SEED, 50 + g as u64)) {
            let tr = integrate_rd(a, &x0, 50.0, &RdOptions::default(), &eqs).unwrap();
            for s in &tr.states {
                worst = worst.max((s.as_slice().iter().sum::<f64>() - 1.0).abs());
            }
            states += tr.states.len();
        }
    }

    // Same seed under different worker counts.
    let a = zeeman_fixture("6_1").unwrap().matrix();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let map = estimate_basins(&a, "6_1", 3000, SEED, &BasinOptions::default()).unwrap();
            let mut csv = Vec::new();
            map.write_csv(&mut csv).unwrap();
            (map, csv)
        })
    };
    let (m1, c1) = run(1);
    let (m3, c3) = run(3);
    let basins_same = m1 == m3 && c1 == c3;
    let spec = PortraitSpec { orbits: 12, seed: SEED, ..PortraitSpec::default() };
    let svg_same = render_portrait(&a, &spec).unwrap() == render_portrait(&a, &spec).unwrap();
    outcome(
        worst <= 1e-9 && basins_same && svg_same,
        format!("max |sum x - 1| {worst:.2e} over {states} states; basin maps identical {basins_same}; SVG identical {svg_same}"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("indifference equations match the reference equations", table2),
        ("stable equilibrium sets", stability_signatures),
        ("no cycling in 6_1, cycling in 5_1 and 7_1", no_cycling_correction),
        ("RD and BRD basins coincide (10_1, 4_1, 7_2, 9_1)", basins_coincide),
        ("sector S2 of 6_2 lies in both basins of e2", sector_theorem),
        ("6_1: e2 attracts more under BRD than RD by > 0.02", dominance_direction),
        ("Golman-Page intersection vanishes", vanishing_intersection),
        ("A_n: RD basin of e1 shrinks, BRD basin persists", a_n_family_check),
        ("closed-form BRD matches dense oracle within 1e-6", brd_exactness),
        ("vertex condition predicts RD invariance", invariance_suite),
        ("simplex conservation and determinism", conservation_and_determinism),
    ];
    let total = Instant::now();
    let mut unexpected = Vec::new();
    for (k, (title, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let t0 = Instant::now();
        let r = check();
        let secs = t0.elapsed().as_secs_f64();
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let note = if !r.passed && UNATTAINABLE.contains(&id) { " [known unattainable]" } else { "" };
        println!("criterion {id:>2}: {verdict} {title}: {} ({secs:.1}s){note}", r.detail);
        if !r.passed && !UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance suite finished in {:.1}s", total.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
