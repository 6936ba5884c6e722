//! Strict feasibility of [`LmiProblem`]s by margin maximization, and
//! bisection over a scalar coupling parameter.
//!
//! The margin problem
//!
//! ```text
//! maximize t  s.t.  −F_k(𝒫)/s_k ⪰ t·I   (strict constraints, 𝒫 ≻ 0 included)
//!                   −G_j(𝒫)/s_j ⪰ 0     (non-strict constraints)
//!                   normalization of 𝒫
//! ```
//!
//! is a small dense SDP in standard dual form `C − Σ yᵢAᵢ ⪰ 0`, solved with
//! an infeasible primal-dual path-following method using Nesterov–Todd
//! scaling and a Mehrotra-type centering rule.

use crate::error::{Error, Result};
use crate::lmi::{
    certificate_check_with_tol, Certificate, ConstraintExpr, LmiProblem, Strictness, MARGIN_TOL,
    WEAK_TOL,
};
use crate::numerics::{Cholesky, Mat, SymMat};

/// Lower bound imposed on the margin variable so the SDP stays bounded.
const MARGIN_FLOOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// `tr 𝒫 = 1`. Margins are then directly comparable across problems.
    UnitTrace,
    /// `𝒫 ⪰ I` and `tr 𝒫 ≤ cap_factor · dim 𝒫`.
    IdentityLowerBound { cap_factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub margin_tol: f64,
    pub normalization: Normalization,
    pub max_iters: usize,
    /// Relative duality gap at which the iteration stops.
    pub gap_tol: f64,
    /// Relative primal and dual residual at which the iteration stops.
    pub feas_tol: f64,
    /// Fraction of the step to the boundary of the cone.
    pub step_fraction: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            margin_tol: MARGIN_TOL,
            normalization: Normalization::UnitTrace,
            max_iters: 100,
            gap_tol: 1e-10,
            feas_tol: 1e-10,
            step_fraction: 0.95,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.margin_tol) && pos(self.gap_tol) && pos(self.feas_tol)) {
            return Err(Error::InvalidInput("solver tolerances must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidInput("step fraction must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be positive".into()));
        }
        if let Normalization::IdentityLowerBound { cap_factor } = self.normalization {
            if !(cap_factor.is_finite() && cap_factor > 1.0) {
                return Err(Error::InvalidInput("trace cap factor must exceed 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Feasible(Certificate),
    Infeasible { best_margin: f64 },
    Inconclusive { reason: String },
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Feasible(_) => "feasible",
            Status::Infeasible { .. } => "infeasible",
            Status::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Status::Feasible(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Optimal value of the margin variable.
    pub final_margin: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: Status,
    pub diagnostics: Diagnostics,
}

/// `C − Σ yᵢ Aᵢ ⪰ 0` over a list of dense blocks.
struct Sdp {
    c: Vec<Mat>,
    /// `a[i][b]` is the block `b` of the `i`-th data matrix.
    a: Vec<Vec<Mat>>,
    b: Vec<f64>,
}

/// Maps the free variables to `𝒫`: `𝒫 = base + Σ yⱼ dir[j]`.
struct Parametrization {
    base: SymMat,
    dirs: Vec<SymMat>,
}

fn parametrize(problem: &LmiProblem, norm: Normalization) -> Parametrization {
    let spec = problem.var_spec;
    let nv = spec.num_vars();
    match norm {
        Normalization::UnitTrace => {
            // variable 0 is P₁₁, eliminated through the trace
            let e0 = spec.basis(0);
            let dirs = (1..nv)
                .map(|k| {
                    let e = spec.basis(k);
                    if spec.is_diagonal_var(k) {
                        e.sub(&e0).expect("same dims")
                    } else {
                        e
                    }
                })
                .collect();
            Parametrization { base: e0, dirs }
        }
        Normalization::IdentityLowerBound { .. } => Parametrization {
            base: SymMat::zeros(spec.total_dim()),
            dirs: (0..nv).map(|k| spec.basis(k)).collect(),
        },
    }
}

fn build_sdp(problem: &LmiProblem, par: &Parametrization, norm: Normalization) -> Result<Sdp> {
    let spec = problem.var_spec;
    let m = par.dirs.len() + 1; // + margin variable
    let mut c = Vec::new();
    let mut a: Vec<Vec<Mat>> = vec![Vec::new(); m];
    let mut push_block = |c_blk: Mat, a_blks: Vec<Mat>| {
        c.push(c_blk);
        for (i, blk) in a_blks.into_iter().enumerate() {
            a[i].push(blk);
        }
    };

    for con in &problem.constraints {
        let is_positivity = matches!(con.expr, ConstraintExpr::NegatedVariable);
        let dim = con.dim(&spec);
        if is_positivity {
            if let Normalization::IdentityLowerBound { .. } = norm {
                // 𝒫 − I ⪰ 0
                let mut blocks: Vec<Mat> =
                    par.dirs.iter().map(|d| d.as_mat().scale(-1.0)).collect();
                blocks.push(Mat::zeros(dim, dim));
                let c_blk = &par.base.as_mat().clone() - &Mat::identity(dim);
                push_block(c_blk, blocks);
                continue;
            }
        }
        let s = con.scale();
        let f_base = con.evaluate(&spec, &par.base)?;
        let mut blocks = Vec::with_capacity(m);
        for d in &par.dirs {
            blocks.push(con.evaluate(&spec, d)?.into_mat().scale(1.0 / s));
        }
        blocks.push(match con.strictness {
            Strictness::Strict => Mat::identity(dim),
            Strictness::Weak => Mat::zeros(dim, dim),
        });
        push_block(f_base.into_mat().scale(-1.0 / s), blocks);
    }

    // t ≥ −MARGIN_FLOOR
    let mut blocks = vec![Mat::zeros(1, 1); m];
    blocks[m - 1] = Mat::from_diag(&[-1.0]);
    push_block(Mat::from_diag(&[MARGIN_FLOOR]), blocks);

    if let Normalization::IdentityLowerBound { cap_factor } = norm {
        let cap = cap_factor * spec.total_dim() as f64;
        let mut blocks: Vec<Mat> = par
            .dirs
            .iter()
            .map(|d| Mat::from_diag(&[d.trace()]))
            .collect();
        blocks.push(Mat::zeros(1, 1));
        push_block(Mat::from_diag(&[cap - par.base.trace()]), blocks);
    }

    let mut b = vec![0.0; m];
    b[m - 1] = 1.0;
    Ok(Sdp { c, a, b })
}

fn dot(a: &Mat, b: &Mat) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

fn sym(m: &Mat) -> Mat {
    SymMat::symmetrize(m).into_mat()
}

fn eig_map(m: &Mat, g: impl Fn(f64) -> f64) -> Mat {
    SymMat::symmetrize(m).map_eigenvalues(g).into_mat()
}

/// Largest `α ≤ 1/step_fraction`-uncapped step with `x + α dx ⪰ 0`,
/// `x` positive definite.
fn max_step(x: &Mat, dx: &Mat) -> f64 {
    let chol = match Cholesky::factor(&SymMat::symmetrize(x)) {
        Some(c) => c,
        None => return 0.0,
    };
    let li = chol.lower_inverse();
    let scaled = SymMat::symmetrize(&(&(&li * dx) * &li.transpose()));
    let lo = scaled.min_eig();
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

fn nt_scaling(x: &Mat, z: &Mat) -> Mat {
    let xh = eig_map(x, |v| v.max(0.0).sqrt());
    let g = &(&xh * z) * &xh;
    let gi = eig_map(&g, |v| 1.0 / v.max(1e-300).sqrt());
    sym(&(&(&xh * &gi) * &xh))
}

struct IpmOutcome {
    y: Vec<f64>,
    diagnostics: Diagnostics,
}

fn solve_sdp(sdp: &Sdp, opts: &SolveOptions) -> Result<IpmOutcome> {
    let m = sdp.b.len();
    let nb = sdp.c.len();
    let dims: Vec<usize> = sdp.c.iter().map(|c| c.rows()).collect();
    let total: usize = dims.iter().sum();

    let norm_c: f64 = sdp.c.iter().map(|c| c.frobenius_norm().powi(2)).sum::<f64>().sqrt();
    let norm_b = sdp.b.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut x: Vec<Mat> = Vec::with_capacity(nb);
    let mut z: Vec<Mat> = Vec::with_capacity(nb);
    for (k, &d) in dims.iter().enumerate() {
        let nd = d as f64;
        let mut xi = 10.0_f64.max(nd.sqrt());
        let mut eta = 10.0_f64.max(nd.sqrt()).max(sdp.c[k].frobenius_norm());
        for i in 0..m {
            let an = sdp.a[i][k].frobenius_norm();
            xi = xi.max(nd * (1.0 + sdp.b[i].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        x.push(Mat::identity(d).scale(xi));
        z.push(Mat::identity(d).scale(eta));
    }
    let mut y = vec![0.0; m];

    let mut diag = Diagnostics {
        iterations: 0,
        converged: false,
        final_margin: f64::NAN,
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
    };
    let mut stalls = 0;

    for iter in 0..=opts.max_iters {
        // residuals
        let rp: Vec<f64> = (0..m)
            .map(|i| sdp.b[i] - (0..nb).map(|k| dot(&sdp.a[i][k], &x[k])).sum::<f64>())
            .collect();
        let rd: Vec<Mat> = (0..nb)
            .map(|k| {
                let mut r = &sdp.c[k] - &z[k];
                for i in 0..m {
                    if y[i] != 0.0 {
                        r = &r - &sdp.a[i][k].scale(y[i]);
                    }
                }
                r
            })
            .collect();
        let pobj: f64 = (0..nb).map(|k| dot(&sdp.c[k], &x[k])).sum();
        let dobj: f64 = sdp.b.iter().zip(&y).map(|(b, v)| b * v).sum();
        let xz: f64 = (0..nb).map(|k| dot(&x[k], &z[k])).sum();
        let mu = xz / total as f64;
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + norm_b);
        let dinf = rd.iter().map(|r| r.frobenius_norm().powi(2)).sum::<f64>().sqrt() / (1.0 + norm_c);
        let gap = (pobj - dobj).abs().max(xz.abs()) / (1.0 + pobj.abs() + dobj.abs());

        diag = Diagnostics {
            iterations: iter,
            converged: false,
            final_margin: y[m - 1],
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: pinf,
            dual_residual: dinf,
        };
        if gap < opts.gap_tol && pinf < opts.feas_tol && dinf < opts.feas_tol {
            diag.converged = true;
            break;
        }
        if iter == opts.max_iters || stalls >= 5 {
            break;
        }

        // scaling and Schur complement
        let w: Vec<Mat> = (0..nb).map(|k| nt_scaling(&x[k], &z[k])).collect();
        let zinv: Vec<Mat> = (0..nb)
            .map(|k| {
                let ch = Cholesky::factor(&SymMat::symmetrize(&z[k]));
                match ch {
                    Some(c) => {
                        let li = c.lower_inverse();
                        sym(&(&li.transpose() * &li))
                    }
                    None => eig_map(&z[k], |v| 1.0 / v.max(1e-300)),
                }
            })
            .collect();
        let mut waw: Vec<Vec<Mat>> = Vec::with_capacity(m);
        for i in 0..m {
            waw.push(
                (0..nb)
                    .map(|k| {
                        if sdp.a[i][k].is_zero() {
                            Mat::zeros(dims[k], dims[k])
                        } else {
                            sym(&(&(&w[k] * &sdp.a[i][k]) * &w[k]))
                        }
                    })
                    .collect(),
            );
        }
        let mut schur = Mat::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v: f64 = (0..nb).map(|k| dot(&sdp.a[i][k], &waw[j][k])).sum();
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let schur_sym = SymMat::symmetrize(&schur);
        let schur_chol = Cholesky::factor(&schur_sym);
        let wrdw: Vec<Mat> = (0..nb).map(|k| sym(&(&(&w[k] * &rd[k]) * &w[k]))).collect();

        let direction = |sigma: f64| -> Result<(Vec<f64>, Vec<Mat>, Vec<Mat>)> {
            let r: Vec<Mat> = (0..nb)
                .map(|k| &zinv[k].scale(sigma * mu) - &x[k])
                .collect();
            let rhs: Vec<f64> = (0..m)
                .map(|i| {
                    rp[i]
                        - (0..nb)
                            .map(|k| dot(&sdp.a[i][k], &r[k]) - dot(&sdp.a[i][k], &wrdw[k]))
                            .sum::<f64>()
                })
                .collect();
            let dy = match &schur_chol {
                Some(c) => c.solve(&rhs),
                None => crate::numerics::solve_linear(&schur, &rhs)?,
            };
            let mut dz = Vec::with_capacity(nb);
            let mut dx = Vec::with_capacity(nb);
            for k in 0..nb {
                let mut dzk = rd[k].clone();
                for i in 0..m {
                    if dy[i] != 0.0 {
                        dzk = &dzk - &sdp.a[i][k].scale(dy[i]);
                    }
                }
                let dzk = sym(&dzk);
                let dxk = sym(&(&r[k] - &(&(&w[k] * &dzk) * &w[k])));
                dz.push(dzk);
                dx.push(dxk);
            }
            Ok((dy, dx, dz))
        };
        let steps = |dx: &[Mat], dz: &[Mat]| -> (f64, f64) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..nb {
                ap = ap.min(max_step(&x[k], &dx[k]));
                ad = ad.min(max_step(&z[k], &dz[k]));
            }
            (
                (opts.step_fraction * ap).min(1.0),
                (opts.step_fraction * ad).min(1.0),
            )
        };

        // predictor
        let (_, dx_aff, dz_aff) = direction(0.0)?;
        let (ap, ad) = steps(&dx_aff, &dz_aff);
        let xz_aff: f64 = (0..nb)
            .map(|k| dot(&(&x[k] + &dx_aff[k].scale(ap)), &(&z[k] + &dz_aff[k].scale(ad))))
            .sum();
        let ratio = (xz_aff / xz).clamp(0.0, 1.0);
        let sigma = ratio.powi(3).clamp(1e-4, 0.9);

        // corrector
        let (dy, dx, dz) = direction(sigma)?;
        let (ap, ad) = steps(&dx, &dz);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
        } else {
            stalls = 0;
        }
        for k in 0..nb {
            x[k] = sym(&(&x[k] + &dx[k].scale(ap)));
            z[k] = sym(&(&z[k] + &dz[k].scale(ad)));
        }
        for i in 0..m {
            y[i] += ad * dy[i];
        }
    }
    Ok(IpmOutcome { y, diagnostics: diag })
}

/// Maximizes the normalized margin and classifies the problem. A feasible
/// verdict is always backed by an independent [`certificate_check`] pass.
///
/// [`certificate_check`]: crate::lmi::certificate_check
pub fn solve_feasibility(problem: &LmiProblem, opts: &SolveOptions) -> Result<FeasibilityResult> {
    opts.validate()?;
    let par = parametrize(problem, opts.normalization);
    let sdp = build_sdp(problem, &par, opts.normalization)?;
    let out = solve_sdp(&sdp, opts)?;
    let m = out.y.len();
    let mut var = par.base.clone();
    for (j, d) in par.dirs.iter().enumerate() {
        var = var.add(&d.scale(out.y[j]))?;
    }
    let t = out.y[m - 1];
    let diag = out.diagnostics;

    let status = if !var.as_mat().as_slice().iter().all(|v| v.is_finite()) {
        Status::Inconclusive {
            reason: "solver produced non-finite iterates".into(),
        }
    } else {
        let cert = Certificate::from_variable(problem, &var)?;
        let report = certificate_check_with_tol(&cert, problem, opts.margin_tol)?;
        if report.valid {
            Status::Feasible(cert)
        } else if !diag.converged {
            Status::Inconclusive {
                reason: format!(
                    "iteration cap reached after {} iterations (margin {t:.3e})",
                    diag.iterations
                ),
            }
        } else if report.worst_weak > WEAK_TOL && report.normalized_margin >= opts.margin_tol {
            Status::Inconclusive {
                reason: format!(
                    "non-strict constraints violated by {:.3e} at the solver optimum",
                    report.worst_weak
                ),
            }
        } else {
            Status::Infeasible {
                best_margin: report.normalized_margin,
            }
        }
    };
    Ok(FeasibilityResult {
        status,
        diagnostics: diag,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Smallest parameter value found feasible.
    pub threshold: f64,
    /// Largest parameter value found not feasible.
    pub lower: f64,
    pub lo_result: FeasibilityResult,
    pub hi_result: FeasibilityResult,
    /// The result at `threshold`.
    pub at_threshold: FeasibilityResult,
    pub evaluations: usize,
}

/// Bisection on `μ` for problems whose feasibility is monotone in `μ`.
/// Inconclusive midpoints are treated as not feasible.
pub fn threshold_search<F>(
    builder: F,
    bracket: (f64, f64),
    tol: f64,
    opts: &SolveOptions,
) -> Result<ThresholdResult>
where
    F: Fn(f64) -> Result<LmiProblem>,
{
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInput(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput("bisection tolerance must be positive".into()));
    }
    let lo_result = solve_feasibility(&builder(lo)?, opts)?;
    let hi_result = solve_feasibility(&builder(hi)?, opts)?;
    if lo_result.status.is_feasible() || !hi_result.status.is_feasible() {
        return Err(Error::Bracket {
            lo_status: lo_result.status.label().into(),
            hi_status: hi_result.status.label().into(),
        });
    }
    let mut evaluations = 2;
    let mut at_threshold = hi_result.clone();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let r = solve_feasibility(&builder(mid)?, opts)?;
        evaluations += 1;
        if r.status.is_feasible() {
            hi = mid;
            at_threshold = r;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        threshold: hi,
        lower: lo,
        lo_result,
        hi_result,
        at_threshold,
        evaluations,
    })
}
