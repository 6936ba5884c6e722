use proptest::prelude::*;
use rdcert::analytic::*;
use rdcert::envelope::{Envelope, FhnParams, GoodwinParams};
use rdcert::lmi::{certificate_check, vertex_lmis, Structure};
use rdcert::sdpfeas::{solve_feasibility, SolveOptions};
use rdcert::Mat;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fhn_certificate_holds_past_its_threshold(b in 0.05..5.0f64, c in 0.1..5.0f64,
                                                over in 1.001..10.0f64, d2 in 0.01..5.0f64) {
        let p = FhnParams { a: 0.3, b, c };
        let d1 = 1.0;
        let lambda2 = over * c / d1;
        match fhn_certificate(&p, lambda2, [d1, d2]).unwrap() {
            FhnOutcome::Certified(cert) => {
                let env = rdcert::envelope::fhn_envelope(&p).unwrap();
                let prob = vertex_lmis(&env, lambda2, &Mat::from_diag(&[d1, d2]), Structure::Full).unwrap();
                prop_assert!(certificate_check(&cert, &prob).unwrap().valid);
            }
            FhnOutcome::Refused { reason } => prop_assert!(false, "{reason}"),
        }
    }

    #[test]
    fn fhn_certificate_refused_below_threshold(c in 0.1..5.0f64, under in 0.0..1.0f64) {
        let p = FhnParams { a: 0.0, b: 1.0, c };
        let out = fhn_certificate(&p, under * c, [1.0, 1.0]).unwrap();
        let refused = matches!(out, FhnOutcome::Refused { .. });
        prop_assert!(refused);
    }

    #[test]
    fn secant_agrees_with_diagonal_stability(n in 3usize..7,
                                             alphas in prop::collection::vec(0.2..3.0f64, 6),
                                             betas in prop::collection::vec(0.2..3.0f64, 6)) {
        let spec = CyclicSpec::new(alphas[..n].to_vec(), betas[..n].to_vec()).unwrap();
        let sec = secant_criterion(&spec).unwrap();
        prop_assume!(sec.relative_margin().abs() >= 1e-4);
        let env = Envelope::constant(spec.matrix()).unwrap();
        let prob = vertex_lmis(&env, 0.0, &Mat::zeros(n, n), Structure::Diagonal).unwrap();
        let r = solve_feasibility(&prob, &SolveOptions::default()).unwrap();
        prop_assert_eq!(sec.pass, r.status.is_feasible(), "ratio {} threshold {}", sec.ratio, sec.threshold);
    }

    #[test]
    fn goodwin_secant_threshold_is_the_crossing(a1 in 0.05..1.0f64, a2 in 0.05..1.0f64,
                                                d in prop::collection::vec(0.1..3.0f64, 3)) {
        let p = GoodwinParams { a1, a2, ..GoodwinParams::reference() };
        let dd = [d[0], d[1], d[2]];
        let t = goodwin_secant_threshold(&p, dd).unwrap();
        let at = |l: f64| secant_criterion(&goodwin_cyclic_spec(&p, [l * dd[0], l * dd[1], l * dd[2]]).unwrap()).unwrap();
        prop_assert!(at(t * 1.001).pass);
        prop_assert!(!at(t * 0.999).pass);
    }
}

#[test]
fn short_cycles_are_rejected() {
    assert!(CyclicSpec::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
}
