#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdcert::envelope::{BoxTerm, Envelope};
use rdcert::Mat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Box envelope around a shifted random `A₀` with `terms` random rank-one
/// generators and `flagged` diagonal nonpositive ones.
pub fn random_box(rng: &mut ChaCha8Rng, n: usize, terms: usize, flagged: usize) -> Envelope {
    let shift = rng.gen_range(0.5..2.5);
    let a0 = Mat::from_fn(n, n, |i, j| {
        rng.gen_range(-1.0..1.0) - if i == j { shift } else { 0.0 }
    });
    let mut box_terms = Vec::new();
    for k in 0..terms {
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        box_terms.push(BoxTerm::new(format!("t{k}"), b, c).unwrap());
    }
    for k in 0..flagged {
        let i = rng.gen_range(0..n);
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        b[i] = -rng.gen_range(0.1..2.0);
        c[i] = 1.0;
        box_terms.push(
            BoxTerm::new(format!("d{k}"), b, c)
                .unwrap()
                .flagged_diagonal()
                .unwrap(),
        );
    }
    Envelope::new(a0, box_terms, vec![], vec![]).unwrap()
}

pub fn random_diffusion(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    Mat::from_diag(&(0..n).map(|_| rng.gen_range(0.2..1.5)).collect::<Vec<_>>())
}
