use proptest::prelude::*;
use rdcert::envelope::*;
use rdcert::Mat;

fn fd_jacobian(model: &dyn ReactionModel, x: &[f64]) -> Mat {
    let n = x.len();
    let mut j = Mat::zeros(n, n);
    for c in 0..n {
        let step = 1e-6 * (1.0 + x[c].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += step;
        xm[c] -= step;
        let fp = model.eval(&xp);
        let fm = model.eval(&xm);
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    j
}

fn assert_jacobian(model: &dyn ReactionModel, x: &[f64]) -> Result<(), TestCaseError> {
    let exact = model.jacobian(x);
    let fd = fd_jacobian(model, x);
    let scale = 1.0 + exact.max_abs();
    let err = (&exact - &fd).max_abs();
    prop_assert!(err < 1e-5 * scale, "{} at {x:?}: error {err}", model.name());
    Ok(())
}

fn lure() -> Lure {
    let a = Mat::from_rows(&[[-1.0, 1.0], [0.0, -2.0]]).unwrap();
    Lure::new(a, vec![1.0, 0.5], vec![0.3, 1.0], 0.8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn goodwin_jacobian(x in prop::collection::vec(0.0..20.0f64, 3)) {
        assert_jacobian(&Goodwin::new(GoodwinParams::reference()).unwrap(), &x)?;
    }

    #[test]
    fn goldbeter_jacobian(x in prop::collection::vec(0.0..5.0f64, 5)) {
        assert_jacobian(&Goldbeter::new(GoldbeterParams::reference()).unwrap(), &x)?;
    }

    #[test]
    fn fhn_jacobian(x in prop::collection::vec(-3.0..3.0f64, 2)) {
        let m = FitzHughNagumo::new(FhnParams { a: 0.7, b: 0.8, c: 3.0 }).unwrap();
        assert_jacobian(&m, &x)?;
    }

    #[test]
    fn lure_jacobian(x in prop::collection::vec(-3.0..3.0f64, 2)) {
        assert_jacobian(&lure(), &x)?;
    }

    #[test]
    fn fhn_envelope_is_exact(x1 in -10.0..10.0f64, x2 in -10.0..10.0f64, c in 0.5..4.0f64, b in 0.1..2.0f64) {
        let p = FhnParams { a: 0.0, b, c };
        let env = fhn_envelope(&p).unwrap();
        let j = FitzHughNagumo::new(p).unwrap().jacobian(&[x1, x2]);
        let omega = c * x1 * x1;
        let rebuilt = &env.conv_vertices[0] + &env.cone_gens[0].scale(omega);
        prop_assert!((&j - &rebuilt).max_abs() < 1e-12 * (1.0 + omega));
    }

    #[test]
    fn goodwin_samples_inside(xs in prop::collection::vec(prop::collection::vec(0.0..50.0f64, 3), 20)) {
        let p = GoodwinParams::reference();
        let env = goodwin_envelope(&p).unwrap();
        let r = membership_audit(&env, &Goodwin::new(p).unwrap(), &xs).unwrap();
        prop_assert!(r.is_clean(), "{r:?}");
    }

    #[test]
    fn goldbeter_samples_inside(xs in prop::collection::vec(prop::collection::vec(0.0..20.0f64, 5), 20)) {
        let p = GoldbeterParams::reference();
        let model = Goldbeter::new(p).unwrap();
        for g in [Grouping::Grouped, Grouping::Overparameterized] {
            let env = goldbeter_envelope(&p, g).unwrap();
            let r = membership_audit(&env, &model, &xs).unwrap();
            prop_assert!(r.is_clean(), "{g:?}: {r:?}");
        }
    }

    #[test]
    fn lure_samples_inside(xs in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 2), 20)) {
        let l = lure();
        let env = lure_envelope(&l.a, &l.b, &l.c, l.gamma).unwrap();
        let r = membership_audit(&env, &l, &xs).unwrap();
        prop_assert!(r.is_clean(), "{r:?}");
    }
}
