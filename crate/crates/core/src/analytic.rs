//! Closed-form criteria: the secant condition for cyclic feedback matrices,
//! Othmer's norm bound, and the explicit FitzHugh–Nagumo certificate.

use std::f64::consts::PI;

use crate::envelope::{fhn_envelope, Envelope, FhnParams, GoodwinParams};
use crate::error::{Error, Result};
use crate::lmi::{certificate_check, vertex_lmis, Certificate, Structure};
use crate::numerics::{spectral_norm, Mat, SymMat};

/// Negative-feedback cycle: diagonal `−αᵢ`, subdiagonal gains `βᵢ` from
/// state `i` to `i+1`, and `−βₙ` closing the loop from `n` back to `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl CyclicSpec {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let spec = CyclicSpec { alphas, betas };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alphas.len();
        if self.betas.len() != n {
            return Err(Error::dims(n, self.betas.len()));
        }
        if n < 3 {
            return Err(Error::Unsupported(format!(
                "secant criterion needs a cycle of length at least 3, got {n}"
            )));
        }
        if !self.alphas.iter().all(|a| a.is_finite() && *a > 0.0) {
            return Err(Error::InvalidParams("alphas must be positive".into()));
        }
        if !self.betas.iter().all(|b| b.is_finite() && *b >= 0.0) {
            return Err(Error::InvalidParams("betas must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn matrix(&self) -> Mat {
        let n = self.len();
        let mut a = Mat::from_diag(&self.alphas.iter().map(|v| -v).collect::<Vec<_>>());
        for i in 0..n - 1 {
            a[(i + 1, i)] = self.betas[i];
        }
        a[(0, n - 1)] = -self.betas[n - 1];
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantResult {
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl SecantResult {
    /// `(threshold − ratio) / threshold`; positive when passing.
    pub fn relative_margin(&self) -> f64 {
        (self.threshold - self.ratio) / self.threshold
    }
}

/// `Πβᵢ / Παᵢ < sec(π/n)ⁿ`.
pub fn secant_criterion(spec: &CyclicSpec) -> Result<SecantResult> {
    spec.validate()?;
    let n = spec.len();
    let ratio = spec.betas.iter().product::<f64>() / spec.alphas.iter().product::<f64>();
    let threshold = (1.0 / (PI / n as f64).cos()).powi(n as i32);
    Ok(SecantResult {
        ratio,
        threshold,
        pass: ratio < threshold,
    })
}

/// The cyclic matrix of the Goodwin composite inequality when the
/// effective damping of species `i` is `μᵢ = λ₂dᵢ`.
pub fn goodwin_cyclic_spec(p: &GoodwinParams, mu: [f64; 3]) -> Result<CyclicSpec> {
    p.validate()?;
    CyclicSpec::new(
        vec![p.a1 + mu[0], p.a2 + mu[1], mu[2], 1.0],
        vec![p.b1, p.b2, 1.0, p.v1 / (p.k1 * p.k1)],
    )
}

/// Smallest `λ₂` for which the secant condition holds on the Goodwin
/// composite matrix with damping `λ₂dᵢ`. With `d = [1, 1, 1]` this is the
/// equal-diffusion threshold on `μ = λ₂d`.
pub fn goodwin_secant_threshold(p: &GoodwinParams, d: [f64; 3]) -> Result<f64> {
    p.validate()?;
    if !d.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::InvalidInput("diffusion coefficients must be positive".into()));
    }
    let gain = p.b1 * p.b2 * p.v1 / (p.k1 * p.k1);
    if gain == 0.0 {
        return Ok(0.0);
    }
    // sec(π/4)⁴ = 4
    let f = |l: f64| 4.0 * (p.a1 + l * d[0]) * (p.a2 + l * d[1]) * (l * d[2]) - gain;
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OthmerResult {
    /// Supremum of the induced 2-norm over the envelope.
    pub sup_norm: f64,
    /// `λ₂ · minᵢ dᵢ`.
    pub bound: f64,
    pub pass: bool,
}

/// `sup ‖J‖₂ < λ₂ minᵢ dᵢ`. The norm is convex and the envelope is the
/// convex hull of its vertices, so the supremum is attained at a vertex;
/// any nonzero cone direction makes it infinite.
pub fn othmer_check(env: &Envelope, lambda2: f64, d: &Mat) -> Result<OthmerResult> {
    let n = env.dim();
    if d.rows() != n || d.cols() != n {
        return Err(Error::dims(format!("{n}x{n}"), format!("{}x{}", d.rows(), d.cols())));
    }
    if !d.is_diagonal() || !d.diagonal().iter().all(|v| *v > 0.0) {
        return Err(Error::InvalidInput(
            "diffusion matrix must be diagonal with positive entries".into(),
        ));
    }
    let bound = lambda2 * d.diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
    let sup_norm = if env.cone_gens.iter().any(|s| !s.is_zero()) {
        f64::INFINITY
    } else {
        let mut best: f64 = 0.0;
        for (_, z) in env.vertices()? {
            best = best.max(spectral_norm(&z)?);
        }
        best
    };
    Ok(OthmerResult {
        sup_norm,
        bound,
        pass: sup_norm < bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FhnOutcome {
    Certified(Certificate),
    Refused { reason: String },
}

/// `P = diag(1/c, c)` for FitzHugh–Nagumo, valid when `λ₂d₁ > c`.
pub fn fhn_certificate(p: &FhnParams, lambda2: f64, d: [f64; 2]) -> Result<FhnOutcome> {
    p.validate()?;
    if !(p.b > 0.0 && d.iter().all(|v| v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParams(
            "explicit certificate needs b > 0 and positive diffusion".into(),
        ));
    }
    if !(lambda2.is_finite() && lambda2 >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda2 must be nonnegative, got {lambda2}")));
    }
    if lambda2 * d[0] <= p.c {
        return Ok(FhnOutcome::Refused {
            reason: format!(
                "lambda2*d1 = {} does not exceed c = {}",
                lambda2 * d[0],
                p.c
            ),
        });
    }
    let env = fhn_envelope(p)?;
    let prob = vertex_lmis(&env, lambda2, &Mat::from_diag(&d), Structure::Full)?;
    let var = SymMat::from_diag(&[1.0 / p.c, p.c]);
    let cert = Certificate::from_variable(&prob, &var)?;
    let report = certificate_check(&cert, &prob)?;
    if report.valid {
        Ok(FhnOutcome::Certified(cert))
    } else {
        Ok(FhnOutcome::Refused {
            reason: format!(
                "margin {:.3e} below the strictness tolerance",
                report.normalized_margin
            ),
        })
    }
}
