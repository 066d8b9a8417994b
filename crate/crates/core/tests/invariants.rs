use egd_core::basins::{construct_sector, sample_sector};
use egd_core::brd::{solve_brd, BrdOptions};
use egd_core::equilibria::{enumerate_nash, NASH_TOL};
use egd_core::game::{indifference_forms, normalize_diagonal, payoff_vector, GameMatrix};
use egd_core::rd::{integrate_rd, RdOptions};
use egd_core::simplex::SimplexPoint;
use proptest::prelude::*;

fn game(n: usize) -> impl Strategy<Value = GameMatrix> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, n), n)
        .prop_map(|rows| GameMatrix::from_rows(&rows).unwrap())
}

fn point(n: usize) -> impl Strategy<Value = SimplexPoint> {
    prop::collection::vec(0.001f64..1.0, n).prop_map(|w| SimplexPoint::renormalized(w).unwrap())
}

fn on_simplex(x: &[f64]) -> bool {
    (x.iter().sum::<f64>() - 1.0).abs() < 1e-9 && x.iter().all(|&v| v >= -1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn form_is_payoff_difference(a in game(4), x in point(4)) {
        let p = payoff_vector(&a, &x).unwrap();
        for f in indifference_forms(&a) {
            let (i, j) = f.pair;
            prop_assert!((f.eval(x.as_slice()) - (p[i] - p[j])).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_is_idempotent_and_keeps_forms(a in game(3)) {
        let once = normalize_diagonal(&a);
        prop_assert!(once.is_normalized());
        prop_assert_eq!(normalize_diagonal(&once), once.clone());
        for (f, g) in indifference_forms(&a).iter().zip(indifference_forms(&once)) {
            for (u, v) in f.coeffs.iter().zip(&g.coeffs) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn column_shifts_leave_equilibria_alone(a in game(3), shift in prop::collection::vec(-5.0f64..5.0, 3)) {
        let shifted: Vec<Vec<f64>> = a.rows().iter().map(|r| r.iter().zip(&shift).map(|(v, s)| v + s).collect()).collect();
        let b = GameMatrix::from_rows(&shifted).unwrap();
        let (ea, eb) = (enumerate_nash(&a, NASH_TOL), enumerate_nash(&b, NASH_TOL));
        prop_assert_eq!(ea.len(), eb.len());
        for (p, q) in ea.iter().zip(&eb) {
            prop_assert_eq!(p.label(), q.label());
            prop_assert!(p.point.distance(&q.point) < 1e-7);
        }
    }

    #[test]
    fn replicator_orbits_stay_on_the_simplex(a in game(3), x in point(3)) {
        let eqs = enumerate_nash(&a, NASH_TOL);
        let traj = integrate_rd(&a, &x, 30.0, &RdOptions::default(), &eqs).unwrap();
        for s in &traj.states {
            prop_assert!(on_simplex(s.as_slice()), "{:?}", s);
        }
    }

    #[test]
    fn best_response_orbits_stay_on_the_simplex(a in game(3), x in point(3)) {
        let eqs = enumerate_nash(&a, NASH_TOL);
        let sol = solve_brd(&a, &x, 30.0, &BrdOptions::default(), &eqs).unwrap();
        for k in 0..=60 {
            let y = sol.state_at(k as f64 * 0.5);
            prop_assert!(on_simplex(&y), "{:?}", y);
        }
    }

    #[test]
    fn sector_samples_lie_in_the_sector(a in game(3), i in 0usize..3, seed in any::<u64>()) {
        if let Ok(region) = construct_sector(&a, i) {
            for x in sample_sector(&region, 20, seed) {
                prop_assert!(on_simplex(x.as_slice()));
                prop_assert!(region.excursion(x.as_slice()) <= 1e-12);
            }
        }
    }
}
