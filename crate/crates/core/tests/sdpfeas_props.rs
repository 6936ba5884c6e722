mod common;

use proptest::prelude::*;
use rand::Rng;
use rdcert::lmi::*;
use rdcert::sdpfeas::{solve_feasibility, SolveOptions, Status};
use rdcert::SymMat;

fn solve(p: &LmiProblem) -> rdcert::FeasibilityResult {
    solve_feasibility(p, &SolveOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn feasible_means_checked(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(1..5);
        let (terms, flagged) = (rng.gen_range(0..4), rng.gen_range(0..2));
        let env = common::random_box(&mut rng, n, terms, flagged);
        let d = common::random_diffusion(&mut rng, n);
        let lambda2 = rng.gen_range(0.0..2.0);
        for s in [Structure::Full, Structure::Diagonal] {
            for prob in [
                vertex_lmis(&env, lambda2, &d, s).unwrap(),
                composite_lmi(&env, lambda2, &d, s).unwrap(),
            ] {
                if let Status::Feasible(cert) = solve(&prob).status {
                    let report = certificate_check(&cert, &prob).unwrap();
                    prop_assert!(report.valid);
                    prop_assert!(report.strict_margin > 0.0);
                    prop_assert!(cert.p.min_eig() > 0.0);
                }
            }
        }
    }

    #[test]
    fn feasibility_persists_as_coupling_grows(seed in any::<u64>(), bump in 0.0..3.0f64) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..4);
        let env = common::random_box(&mut rng, n, 2, 0);
        let d = common::random_diffusion(&mut rng, n);
        let mu = rng.gen_range(0.0..1.0);
        let prob = composite_lmi(&env, mu, &d, Structure::Diagonal).unwrap();
        if let Status::Feasible(cert) = solve(&prob).status {
            // positive diagonal D and diagonal P: the same certificate works further out
            let larger = composite_lmi(&env, mu + bump, &d, Structure::Diagonal).unwrap();
            prop_assert!(certificate_check(&cert, &larger).unwrap().valid);
            prop_assert!(solve(&larger).status.is_feasible());
        }
    }

    #[test]
    fn repeated_solves_agree(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..4);
        let env = common::random_box(&mut rng, n, 3, 1);
        let d = common::random_diffusion(&mut rng, n);
        let prob = composite_lmi(&env, 0.4, &d, Structure::Full).unwrap();
        prop_assert_eq!(solve(&prob), solve(&prob));
    }
}

/// Brute-force search over diagonal `P = diag(1, p₂, p₃)` on a log grid.
fn grid_margin(prob: &LmiProblem, n: usize) -> f64 {
    let grid: Vec<f64> = (0..20).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 19.0)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut visit = |diag: &[f64]| {
        let p = SymMat::from_diag(diag);
        let scale = p.trace();
        let cert = Certificate::from_variable(prob, &p.scale(1.0 / scale)).unwrap();
        let r = certificate_check(&cert, prob).unwrap();
        // the solver's objective: worst scaled margin over strict constraints
        let t = prob
            .constraints
            .iter()
            .zip(&r.evaluations)
            .filter(|(c, _)| c.strictness == Strictness::Strict)
            .map(|(c, e)| -e.max_eig / c.scale())
            .fold(f64::INFINITY, f64::min);
        if r.worst_weak <= WEAK_TOL && t > best {
            best = t;
        }
    };
    match n {
        1 => visit(&[1.0]),
        2 => grid.iter().for_each(|&a| visit(&[1.0, a])),
        _ => {
            for &a in &grid {
                for &b in &grid {
                    visit(&[1.0, a, b]);
                }
            }
        }
    }
    best
}

#[test]
fn grid_search_cross_check() {
    let mut rng = common::rng(2024);
    let mut checked = 0;
    for _ in 0..60 {
        let n = rng.gen_range(1..4);
        let terms = rng.gen_range(0..3);
        let env = common::random_box(&mut rng, n, terms, 0);
        let d = common::random_diffusion(&mut rng, n);
        let lambda2 = rng.gen_range(0.0..1.0);
        let prob = vertex_lmis(&env, lambda2, &d, Structure::Diagonal).unwrap();
        let grid = grid_margin(&prob, n);
        let r = solve(&prob);
        if grid > 1e-3 {
            checked += 1;
            assert!(r.status.is_feasible(), "grid margin {grid}, solver {:?}", r.status);
            // unit-trace optimum can only beat a unit-trace grid point
            assert!(r.diagnostics.final_margin >= grid * (1.0 - 1e-6));
        }
    }
    assert!(checked >= 10, "only {checked} instances cleared the grid");
}
