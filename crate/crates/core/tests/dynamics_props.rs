use proptest::prelude::*;
use rdcert::analytic::{fhn_certificate, FhnOutcome};
use rdcert::dynamics::*;
use rdcert::envelope::models::{FhnParams, FitzHughNagumo, Linear};
use rdcert::envelope::ReactionModel;
use rdcert::spectral::{graph_lambda2, Graph};
use rdcert::Mat;

fn fhn() -> FitzHughNagumo {
    FitzHughNagumo::new(FhnParams { a: 0.0, b: 1.0, c: 2.0 }).unwrap()
}

fn ode(model: &dyn ReactionModel, x0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    let add = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = model.eval(&x);
        let k2 = model.eval(&add(&x, &k1, h / 2.0));
        let k3 = model.eval(&add(&x, &k2, h / 2.0));
        let k4 = model.eval(&add(&x, &k3, h));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pure_diffusion_conserves_mass(seed in any::<u64>(), d1 in 0.01..2.0f64, d2 in 0.01..2.0f64, explicit in any::<bool>()) {
        let grid = PdeGrid::random(3.0, 40, &[0.0, -1.0], &[1.0, 1.0], seed).unwrap();
        let opts = SimOptions {
            t_end: 0.5,
            dt: Some(if explicit { 1e-3 } else { 0.01 }),
            stepper: if explicit { Stepper::ExplicitRk4 } else { Stepper::SplitCrankNicolson },
            ..SimOptions::default()
        };
        let tr = simulate_pde(&Linear::zero(2), &Mat::from_diag(&[d1, d2]), &grid, &opts).unwrap();
        let first = &tr.means[0];
        let last = tr.means.last().unwrap();
        for s in 0..2 {
            prop_assert!((first[s] - last[s]).abs() < 1e-10, "{} vs {}", first[s], last[s]);
        }
    }

    #[test]
    fn worker_count_does_not_change_results(seed in any::<u64>(), workers in 2usize..5) {
        let grid = PdeGrid::random(5.0, 64, &[-1.0, -1.0], &[1.0, 1.0], seed).unwrap();
        let d = Mat::from_diag(&[1.0, 0.3]);
        let base = SimOptions { t_end: 0.3, dt: Some(0.01), record_every: 3, ..SimOptions::default() };
        let a = simulate_pde(&fhn(), &d, &grid, &base).unwrap();
        let b = simulate_pde(&fhn(), &d, &grid, &SimOptions { workers, ..base.clone() }).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn synchronized_start_stays_synchronized(x0 in -2.0..2.0f64, y0 in -2.0..2.0f64, n in 2usize..7) {
        let g = Graph::complete(n);
        let init = vec![vec![x0, y0]; n];
        let opts = SimOptions { t_end: 2.0, dt: Some(0.01), ..SimOptions::default() };
        let tr = simulate_network(&fhn(), &Mat::identity(2), &g, &init, &opts).unwrap();
        prop_assert!(tr.sync_error.iter().all(|&e| e < 1e-12));
        prop_assert!(tr.nonuniformity.iter().all(|&e| e < 1e-12));
    }
}

#[test]
fn mean_follows_the_ode_to_second_order() {
    let model = fhn();
    let base = [0.4, -0.2];
    let t = 0.5;
    let reference = ode(&model, &base, t, 5000);
    let err = |amp: f64| {
        let grid = PdeGrid::cosine(4.0, 128, &base, &[amp, amp], 1).unwrap();
        let opts = SimOptions { t_end: t, dt: Some(1e-3), record_every: 1000, ..SimOptions::default() };
        let tr = simulate_pde(&model, &Mat::from_diag(&[0.5, 0.5]), &grid, &opts).unwrap();
        let mean = tr.means.last().unwrap();
        ((mean[0] - reference[0]).powi(2) + (mean[1] - reference[1]).powi(2)).sqrt()
    };
    let (e1, e2) = (err(0.2), err(0.1));
    let ratio = e1 / e2;
    assert!((3.0..5.0).contains(&ratio), "errors {e1:.3e}, {e2:.3e}, ratio {ratio}");
}

#[test]
fn fhn_certificate_gives_monotone_decay() {
    let p = FhnParams { a: 0.0, b: 1.0, c: 2.0 };
    let g = Graph::path(3);
    let lambda2 = graph_lambda2(&g).unwrap().value;
    let FhnOutcome::Certified(cert) = fhn_certificate(&p, lambda2, [3.0, 1.0]).unwrap() else {
        panic!("expected a certificate");
    };
    for seed in 0..5 {
        let init = random_states(3, &[-2.0, -2.0], &[2.0, 2.0], seed).unwrap();
        let opts = SimOptions {
            t_end: 10.0,
            dt: Some(0.005),
            record_every: 20,
            lyapunov: Some(cert.p.clone()),
            ..SimOptions::default()
        };
        let tr = simulate_network(&fhn(), &Mat::from_diag(&[3.0, 1.0]), &g, &init, &opts).unwrap();
        let v = tr.lyapunov.unwrap();
        for w in v.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-300, "{} -> {}", w[0], w[1]);
        }
        assert!(v.last().unwrap() < &(v[0] * 1e-6));
    }
}
