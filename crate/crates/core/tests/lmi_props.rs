mod common;

use proptest::prelude::*;
use rand::Rng;
use rdcert::analytic::othmer_check;
use rdcert::envelope::Envelope;
use rdcert::lmi::*;
use rdcert::sdpfeas::{solve_feasibility, SolveOptions, Status};
use rdcert::{Mat, SymMat};

fn feasible(problem: &LmiProblem) -> Option<Certificate> {
    match solve_feasibility(problem, &SolveOptions::default()).unwrap().status {
        Status::Feasible(c) => Some(c),
        _ => None,
    }
}

fn as_vertex_certificate(p: &SymMat, problem: &LmiProblem) -> Certificate {
    Certificate::from_variable(problem, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn homogeneity(seed in any::<u64>(), alpha in 1e-3..1e3f64) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..4);
        let env = common::random_box(&mut rng, n, 2, 0);
        let d = common::random_diffusion(&mut rng, n);
        let prob = composite_lmi(&env, 0.5, &d, Structure::Full).unwrap();
        if let Some(cert) = feasible(&prob) {
            let scaled = cert.scaled(alpha);
            let r0 = certificate_check(&cert, &prob).unwrap();
            let r1 = certificate_check(&scaled, &prob).unwrap();
            prop_assert!(r1.valid);
            prop_assert!((r1.strict_margin - alpha * r0.strict_margin).abs()
                <= 1e-9 * alpha * r0.strict_margin.abs().max(1.0));
            prop_assert!((r1.normalized_margin - r0.normalized_margin).abs() < 1e-9);
        }
    }

    #[test]
    fn composite_implies_vertex(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..4);
        let l = rng.gen_range(1..9);
        let env = common::random_box(&mut rng, n, l, 0);
        let d = common::random_diffusion(&mut rng, n);
        let lambda2 = rng.gen_range(0.0..2.0);
        for s in [Structure::Full, Structure::Diagonal] {
            let comp = composite_lmi(&env, lambda2, &d, s).unwrap();
            let Some(cert) = feasible(&comp) else { continue };
            let vert = vertex_lmis(&env, lambda2, &d, s).unwrap();
            let vc = as_vertex_certificate(&cert.p, &vert);
            let report = certificate_check(&vc, &vert).unwrap();
            // every vertex inequality holds with at least the composite's raw margin
            prop_assert!(report.strict_margin >= cert.margin * (1.0 - 1e-9) - 1e-12,
                "{s:?}: vertex margin {} < composite margin {}", report.strict_margin, cert.margin);
            prop_assert!(report.strict_margin > 0.0);
        }
    }

    #[test]
    fn converse_for_single_term(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(1..4);
        let env = common::random_box(&mut rng, n, 1, 0);
        let d = common::random_diffusion(&mut rng, n);
        let lambda2 = rng.gen_range(0.0..1.0);
        let vert = vertex_lmis(&env, lambda2, &d, Structure::Full).unwrap();
        if let Some(cert) = feasible(&vert) {
            let out = lemma_s_converse_search(&cert.p, &env, lambda2, &d).unwrap();
            prop_assert!(matches!(out, ConverseOutcome::Found { .. }), "{out:?}");
        }
    }

    #[test]
    fn omitted_diagonal_terms_stay_harmless(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..4);
        let env = common::random_box(&mut rng, n, 2, 2);
        let d = common::random_diffusion(&mut rng, n);
        let comp = composite_lmi(&env, 0.3, &d, Structure::Diagonal).unwrap();
        prop_assert_eq!(comp.var_spec.multipliers, 2);
        if let Some(cert) = feasible(&comp) {
            // all four terms, all sixteen vertices
            let vert = vertex_lmis(&env, 0.3, &d, Structure::Diagonal).unwrap();
            let report = certificate_check(&as_vertex_certificate(&cert.p, &vert), &vert).unwrap();
            prop_assert!(report.strict_margin > 0.0);
        }
    }

    #[test]
    fn rank_one_rescaling_keeps_status(seed in any::<u64>(), alpha in 0.05..20.0f64) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..4);
        let env = common::random_box(&mut rng, n, 2, 0);
        let d = common::random_diffusion(&mut rng, n);
        let lambda2 = rng.gen_range(0.0..1.5);
        let mut scaled = env.clone();
        scaled.box_terms[0] = scaled.box_terms[0].rescaled(alpha);
        let a = solve_feasibility(&composite_lmi(&env, lambda2, &d, Structure::Full).unwrap(), &SolveOptions::default()).unwrap();
        let b = solve_feasibility(&composite_lmi(&scaled, lambda2, &d, Structure::Full).unwrap(), &SolveOptions::default()).unwrap();
        // statuses can only differ in a thin band around the boundary
        let clear = a.diagnostics.final_margin.abs() > 1e-4 && b.diagnostics.final_margin.abs() > 1e-4;
        if clear {
            prop_assert_eq!(a.status.is_feasible(), b.status.is_feasible());
        }
    }

    #[test]
    fn othmer_implies_identity_certificate(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..4);
        let env = common::random_box(&mut rng, n, 2, 1);
        let d = common::random_diffusion(&mut rng, n);
        let r = othmer_check(&env, 1.0, &d).unwrap();
        // scale λ₂ so the norm condition holds with a little room
        let lambda2 = 1.01 * r.sup_norm / d.diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(othmer_check(&env, lambda2, &d).unwrap().pass);
        let vert = vertex_lmis(&env, lambda2, &d, Structure::Full).unwrap();
        let cert = as_vertex_certificate(&SymMat::identity(n), &vert);
        prop_assert!(certificate_check(&cert, &vert).unwrap().valid);
    }
}

#[test]
fn envelope_with_zero_terms_matches_constant() {
    let a0 = Mat::from_rows(&[[-1.0, 3.0], [0.0, -1.0]]).unwrap();
    let env = Envelope::constant(a0).unwrap();
    let d = Mat::identity(2);
    let a = feasible(&vertex_lmis(&env, 0.0, &d, Structure::Full).unwrap());
    let b = feasible(&composite_lmi(&env, 0.0, &d, Structure::Full).unwrap());
    assert!(a.is_some() && b.is_some());
    // not diagonally stable: the off-diagonal 3 needs P cross terms
    assert!(feasible(&vertex_lmis(&env, 0.0, &d, Structure::Diagonal).unwrap()).is_some());
}
