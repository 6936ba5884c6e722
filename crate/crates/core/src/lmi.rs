//! Assembly of the constant-matrix Lyapunov inequality systems and
//! solver-independent certificate verification.
//!
//! Decision variables are the entries of a block-diagonal matrix
//! `𝒫 = diag(P, q₁, …, q_ℓ)`, where `P` is `n×n` (full or diagonal) and the
//! scalar multipliers `qᵢ` are present only for composite problems. Every
//! constraint is linear in `𝒫`: either `𝒫ₛ M + Mᵀ 𝒫ₛ ≺ 0` (or `⪯ 0`) for
//! a constant matrix `M` and `𝒫ₛ` either the `P` block or the whole of `𝒫`,
//! or the positivity requirement `𝒫 ≻ 0`.

use std::fmt::Write as _;

use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::numerics::{lyapunov_form, Mat, SymMat};

/// Default strictness tolerance on normalized margins.
pub const MARGIN_TOL: f64 = 1e-7;
/// Allowed normalized positive eigenvalue on non-strict constraints.
pub const WEAK_TOL: f64 = 1e-9;
/// Beyond `2^16` vertices the composite margin is reported as ε instead.
const EPSILON_ENUM_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Full,
    Diagonal,
}

impl Structure {
    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Full => "full",
            Structure::Diagonal => "diagonal",
        }
    }
}

impl std::str::FromStr for Structure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Structure::Full),
            "diagonal" | "diag" => Ok(Structure::Diagonal),
            other => Err(Error::InvalidInput(format!("unknown structure '{other}'"))),
        }
    }
}

/// Layout of the decision variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarSpec {
    pub n: usize,
    pub structure: Structure,
    pub multipliers: usize,
}

impl VarSpec {
    pub fn new(n: usize, structure: Structure, multipliers: usize) -> Self {
        VarSpec {
            n,
            structure,
            multipliers,
        }
    }

    /// Side length of `𝒫`.
    pub fn total_dim(&self) -> usize {
        self.n + self.multipliers
    }

    fn p_vars(&self) -> usize {
        match self.structure {
            Structure::Full => self.n * (self.n + 1) / 2,
            Structure::Diagonal => self.n,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.p_vars() + self.multipliers
    }

    /// Position `(i, j)`, `i ≤ j`, in `𝒫` of variable `k`.
    pub fn position(&self, k: usize) -> (usize, usize) {
        let pv = self.p_vars();
        if k >= pv {
            let d = self.n + (k - pv);
            return (d, d);
        }
        match self.structure {
            Structure::Diagonal => (k, k),
            Structure::Full => {
                let mut idx = k;
                for i in 0..self.n {
                    let len = self.n - i;
                    if idx < len {
                        return (i, i + idx);
                    }
                    idx -= len;
                }
                unreachable!("variable index out of range")
            }
        }
    }

    pub fn is_diagonal_var(&self, k: usize) -> bool {
        let (i, j) = self.position(k);
        i == j
    }

    /// `𝒫` for the variable vector `x`.
    pub fn assemble(&self, x: &[f64]) -> SymMat {
        assert_eq!(x.len(), self.num_vars(), "variable vector length");
        let mut m = SymMat::zeros(self.total_dim());
        for (k, &v) in x.iter().enumerate() {
            let (i, j) = self.position(k);
            m.set(i, j, v);
        }
        m
    }

    /// Reads the variables back out of `𝒫`. Entries outside the pattern
    /// are ignored.
    pub fn extract(&self, m: &SymMat) -> Vec<f64> {
        (0..self.num_vars())
            .map(|k| {
                let (i, j) = self.position(k);
                m[(i, j)]
            })
            .collect()
    }

    /// The basis matrix for variable `k`.
    pub fn basis(&self, k: usize) -> SymMat {
        let mut m = SymMat::zeros(self.total_dim());
        let (i, j) = self.position(k);
        m.set(i, j, 1.0);
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// `≺ 0`
    Strict,
    /// `⪯ 0`
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// The leading `n×n` block `P`.
    Upper,
    /// All of `𝒫`.
    Whole,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintExpr {
    /// `𝒫ₛ M + Mᵀ 𝒫ₛ`.
    Lyapunov { matrix: Mat, scope: Scope },
    /// `−𝒫`.
    NegatedVariable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub strictness: Strictness,
    pub expr: ConstraintExpr,
}

impl Constraint {
    fn lyapunov(label: impl Into<String>, strictness: Strictness, matrix: Mat, scope: Scope) -> Self {
        Constraint {
            label: label.into(),
            strictness,
            expr: ConstraintExpr::Lyapunov { matrix, scope },
        }
    }

    /// Side length of the constraint matrix.
    pub fn dim(&self, spec: &VarSpec) -> usize {
        match &self.expr {
            ConstraintExpr::Lyapunov { matrix, .. } => matrix.rows(),
            ConstraintExpr::NegatedVariable => spec.total_dim(),
        }
    }

    /// `1 + ‖M‖_F`; margins are measured in these units.
    pub fn scale(&self) -> f64 {
        match &self.expr {
            ConstraintExpr::Lyapunov { matrix, .. } => 1.0 + matrix.frobenius_norm(),
            ConstraintExpr::NegatedVariable => 1.0,
        }
    }

    /// The constraint matrix at `𝒫` (unnormalized).
    pub fn evaluate(&self, spec: &VarSpec, var: &SymMat) -> Result<SymMat> {
        match &self.expr {
            ConstraintExpr::NegatedVariable => Ok(var.scale(-1.0)),
            ConstraintExpr::Lyapunov { matrix, scope } => {
                let p = match scope {
                    Scope::Whole => var.clone(),
                    Scope::Upper => leading_block(var, spec.n),
                };
                lyapunov_form(&p, matrix)
            }
        }
    }
}

fn leading_block(m: &SymMat, n: usize) -> SymMat {
    SymMat::symmetrize(&Mat::from_fn(n, n, |i, j| m[(i, j)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Vertex,
    Composite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub var_spec: VarSpec,
    pub constraints: Vec<Constraint>,
    pub formulation: Formulation,
    pub lambda2: f64,
    pub diffusion: Mat,
    /// The envelope the problem was built from, kept for ε reporting.
    pub envelope: Envelope,
    /// Indices of the box terms carried as multipliers (composite only).
    pub kept_terms: Vec<usize>,
}

fn check_coupling(env: &Envelope, lambda2: f64, d: &Mat) -> Result<()> {
    let n = env.dim();
    if d.rows() != n || d.cols() != n {
        return Err(Error::dims(
            format!("{n}x{n} diffusion matrix"),
            format!("{}x{}", d.rows(), d.cols()),
        ));
    }
    d.check_finite()?;
    if !(lambda2.is_finite() && lambda2 >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda2 must be nonnegative, got {lambda2}")));
    }
    Ok(())
}

fn is_diag_nonpositive(m: &Mat) -> bool {
    m.is_diagonal() && m.diagonal().iter().all(|&v| v <= 0.0)
}

/// Whether `P D + Dᵀ P ⪰ 0` must be imposed explicitly.
fn needs_diffusion_constraint(d: &Mat, structure: Structure) -> bool {
    if d.is_zero() {
        return false;
    }
    let diag = d.diagonal();
    let nonneg_diag = d.is_diagonal() && diag.iter().all(|&v| v >= 0.0);
    let scalar = nonneg_diag && diag.iter().all(|&v| v == diag[0]);
    !(scalar || (nonneg_diag && structure == Structure::Diagonal))
}

fn common_constraints(
    out: &mut Vec<Constraint>,
    env: &Envelope,
    d: &Mat,
    structure: Structure,
) {
    for (k, s) in env.cone_gens.iter().enumerate() {
        if structure == Structure::Diagonal && is_diag_nonpositive(s) {
            continue;
        }
        out.push(Constraint::lyapunov(
            format!("cone[{k}]"),
            Strictness::Weak,
            s.clone(),
            Scope::Upper,
        ));
    }
    if needs_diffusion_constraint(d, structure) {
        out.push(Constraint::lyapunov(
            "diffusion",
            Strictness::Weak,
            d.scale(-1.0),
            Scope::Upper,
        ));
    }
    out.push(Constraint {
        label: "positivity".into(),
        strictness: Strictness::Strict,
        expr: ConstraintExpr::NegatedVariable,
    });
}

fn pattern_label(pattern: &[bool], k: usize) -> String {
    if pattern.is_empty() {
        format!("vertex[{k}]")
    } else {
        let bits: String = pattern.iter().map(|&b| if b { '1' } else { '0' }).collect();
        format!("vertex[{bits}]")
    }
}

/// One strict inequality per envelope vertex, one weak inequality per cone
/// direction, positivity of `P`, and `P D + Dᵀ P ⪰ 0` when not implied.
pub fn vertex_lmis(
    env: &Envelope,
    lambda2: f64,
    d: &Mat,
    structure: Structure,
) -> Result<LmiProblem> {
    check_coupling(env, lambda2, d)?;
    let shift = d.scale(lambda2);
    let mut constraints = Vec::new();
    for (k, (pattern, z)) in env.vertices()?.into_iter().enumerate() {
        constraints.push(Constraint::lyapunov(
            pattern_label(&pattern, k),
            Strictness::Strict,
            &z - &shift,
            Scope::Upper,
        ));
    }
    common_constraints(&mut constraints, env, d, structure);
    Ok(LmiProblem {
        var_spec: VarSpec::new(env.dim(), structure, 0),
        constraints,
        formulation: Formulation::Vertex,
        lambda2,
        diffusion: d.clone(),
        envelope: env.clone(),
        kept_terms: Vec::new(),
    })
}

/// The block matrix `[[A₀ − λ₂D, B], [Cᵀ, −I]]` over the kept terms.
pub fn composite_matrix(env: &Envelope, lambda2: f64, d: &Mat, keep: &[usize]) -> Result<Mat> {
    let (b, c) = env.factor_columns(keep);
    let top_left = &env.a0 - &d.scale(lambda2);
    let l = keep.len();
    Mat::block2x2(&top_left, &b, &c.transpose(), &Mat::identity(l).scale(-1.0))
}

/// Box terms that must be carried as multipliers under `structure`.
pub fn kept_terms(env: &Envelope, structure: Structure) -> Vec<usize> {
    env.box_terms
        .iter()
        .enumerate()
        .filter(|(_, t)| !(structure == Structure::Diagonal && t.diag_nonpositive))
        .map(|(i, _)| i)
        .collect()
}

/// A single strict inequality on the `(n+ℓ')`-dimensional block matrix,
/// with one scalar multiplier per kept rank-one term.
pub fn composite_lmi(
    env: &Envelope,
    lambda2: f64,
    d: &Mat,
    structure: Structure,
) -> Result<LmiProblem> {
    check_coupling(env, lambda2, d)?;
    if !env.is_box() {
        return Err(Error::InvalidEnvelope(
            "composite formulation needs a box envelope with rank-one terms".into(),
        ));
    }
    let keep = kept_terms(env, structure);
    let a = composite_matrix(env, lambda2, d, &keep)?;
    let mut constraints = vec![Constraint::lyapunov(
        "composite",
        Strictness::Strict,
        a,
        Scope::Whole,
    )];
    common_constraints(&mut constraints, env, d, structure);
    Ok(LmiProblem {
        var_spec: VarSpec::new(env.dim(), structure, keep.len()),
        constraints,
        formulation: Formulation::Composite,
        lambda2,
        diffusion: d.clone(),
        envelope: env.clone(),
        kept_terms: keep,
    })
}

impl LmiProblem {
    /// Human-readable dump: one block per constraint, 17 significant digits.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# lmi problem: formulation={:?} structure={} n={} multipliers={} lambda2={:.16e}",
            self.formulation,
            self.var_spec.structure.as_str(),
            self.var_spec.n,
            self.var_spec.multipliers,
            self.lambda2
        );
        for c in &self.constraints {
            let rel = match c.strictness {
                Strictness::Strict => "< 0",
                Strictness::Weak => "<= 0",
            };
            match &c.expr {
                ConstraintExpr::NegatedVariable => {
                    let _ = writeln!(s, "constraint {} : -Pvar {rel}", c.label);
                }
                ConstraintExpr::Lyapunov { matrix, scope } => {
                    let who = match scope {
                        Scope::Upper => "P",
                        Scope::Whole => "Pvar",
                    };
                    let _ = writeln!(s, "constraint {} : {who} M + M^T {who} {rel}", c.label);
                    for i in 0..matrix.rows() {
                        let row: Vec<String> =
                            matrix.row(i).iter().map(|v| format!("{v:.16e}")).collect();
                        let _ = writeln!(s, "  {}", row.join(" "));
                    }
                }
            }
        }
        s
    }

    pub fn n(&self) -> usize {
        self.var_spec.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStructure {
    Full,
    Diagonal,
    BlockDiagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub structure: CertStructure,
    pub p: SymMat,
    pub q: Vec<f64>,
    /// Smallest `−λ_max` over the strict inequalities, unnormalized.
    pub margin: f64,
    /// The constant `ε` in `P(J(x)−λ₂D) + (J(x)−λ₂D)ᵀP ⪯ −εI` over the envelope.
    pub epsilon: f64,
}

impl Certificate {
    /// Builds a certificate from `𝒫` and fills in margin and ε.
    pub fn from_variable(problem: &LmiProblem, var: &SymMat) -> Result<Self> {
        let spec = problem.var_spec;
        if var.dim() != spec.total_dim() {
            return Err(Error::StructureMismatch(format!(
                "variable of size {} for a problem of size {}",
                var.dim(),
                spec.total_dim()
            )));
        }
        let n = spec.n;
        let p = leading_block(var, n);
        let q: Vec<f64> = (n..spec.total_dim()).map(|i| var[(i, i)]).collect();
        let structure = match (spec.structure, spec.multipliers) {
            (Structure::Diagonal, _) => CertStructure::Diagonal,
            (Structure::Full, 0) => CertStructure::Full,
            (Structure::Full, _) => CertStructure::BlockDiagonal,
        };
        let mut cert = Certificate {
            structure,
            p,
            q,
            margin: 0.0,
            epsilon: 0.0,
        };
        let report = certificate_check(&cert, problem)?;
        cert.margin = report.strict_margin;
        cert.epsilon = certified_epsilon(&cert.p, problem, report.strict_margin)?;
        Ok(cert)
    }

    /// `𝒫 = diag(P, q)`.
    pub fn variable(&self) -> SymMat {
        let n = self.p.dim();
        let total = n + self.q.len();
        let mut m = SymMat::zeros(total);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, self.p[(i, j)]);
            }
        }
        for (k, &v) in self.q.iter().enumerate() {
            m.set(n + k, n + k, v);
        }
        m
    }

    /// `(αP, αq)` with margins scaled accordingly.
    pub fn scaled(&self, alpha: f64) -> Certificate {
        Certificate {
            structure: self.structure,
            p: self.p.scale(alpha),
            q: self.q.iter().map(|v| v * alpha).collect(),
            margin: self.margin * alpha,
            epsilon: self.epsilon * alpha,
        }
    }
}

/// ε over the whole envelope, evaluated at the vertices when they are few
/// enough; otherwise the composite margin, which bounds it from below.
fn certified_epsilon(p: &SymMat, problem: &LmiProblem, strict_margin: f64) -> Result<f64> {
    let env = &problem.envelope;
    if problem.formulation == Formulation::Composite && env.box_terms.len() > EPSILON_ENUM_CAP {
        return Ok(strict_margin);
    }
    let shift = problem.diffusion.scale(problem.lambda2);
    let mut worst = f64::NEG_INFINITY;
    for (_, z) in env.vertices()? {
        let m = &z - &shift;
        worst = worst.max(lyapunov_form(p, &m)?.max_eig());
    }
    Ok(-worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEval {
    pub label: String,
    pub strictness: Strictness,
    pub min_eig: f64,
    pub max_eig: f64,
    /// `λ_max / ((1 + ‖M‖_F) · λ_min(𝒫))`; for the positivity constraint,
    /// `−λ_min(𝒫) / λ_max(𝒫)`.
    pub normalized_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub evaluations: Vec<ConstraintEval>,
    /// `min −λ_max` over strict Lyapunov inequalities (positivity excluded).
    pub strict_margin: f64,
    /// `min −normalized_max` over all strict constraints.
    pub normalized_margin: f64,
    pub worst_weak: f64,
    pub valid: bool,
}

/// Re-evaluates every constraint at the certificate, independently of any
/// solver. Validity is invariant under positive scaling of the certificate.
pub fn certificate_check(cert: &Certificate, problem: &LmiProblem) -> Result<CheckReport> {
    certificate_check_with_tol(cert, problem, MARGIN_TOL)
}

pub fn certificate_check_with_tol(
    cert: &Certificate,
    problem: &LmiProblem,
    margin_tol: f64,
) -> Result<CheckReport> {
    let spec = problem.var_spec;
    if cert.p.dim() != spec.n || cert.q.len() != spec.multipliers {
        return Err(Error::StructureMismatch(format!(
            "certificate with P {}x{} and {} multipliers for a problem with n={} and {} multipliers",
            cert.p.dim(),
            cert.p.dim(),
            cert.q.len(),
            spec.n,
            spec.multipliers
        )));
    }
    if spec.structure == Structure::Diagonal && !cert.p.as_mat().is_diagonal() {
        return Err(Error::StructureMismatch(
            "problem requires a diagonal P".into(),
        ));
    }
    let var = cert.variable();
    let spectrum = var.eig().values;
    let (var_lo, var_hi) = (spectrum[0], spectrum[spectrum.len() - 1]);
    // margins are measured with 𝒫 scaled to λ_min(𝒫) = 1
    let unit = if var_lo > 0.0 { var_lo } else { var_hi.abs().max(f64::MIN_POSITIVE) };

    let mut evaluations = Vec::with_capacity(problem.constraints.len());
    let mut strict_margin = f64::INFINITY;
    let mut normalized_margin = f64::INFINITY;
    let mut worst_weak = f64::NEG_INFINITY;
    for c in &problem.constraints {
        let value = c.evaluate(&spec, &var)?;
        let eig = value.eig().values;
        let (lo, hi) = (eig[0], eig[eig.len() - 1]);
        let normalized_max = match c.expr {
            ConstraintExpr::NegatedVariable if var_hi > 0.0 => -var_lo / var_hi,
            ConstraintExpr::NegatedVariable => f64::INFINITY,
            ConstraintExpr::Lyapunov { .. } => hi / (c.scale() * unit),
        };
        match c.strictness {
            Strictness::Strict => {
                if matches!(c.expr, ConstraintExpr::Lyapunov { .. }) {
                    strict_margin = strict_margin.min(-hi);
                }
                normalized_margin = normalized_margin.min(-normalized_max);
            }
            Strictness::Weak => worst_weak = worst_weak.max(normalized_max),
        }
        evaluations.push(ConstraintEval {
            label: c.label.clone(),
            strictness: c.strictness,
            min_eig: lo,
            max_eig: hi,
            normalized_max,
        });
    }
    let valid = var_lo > 0.0
        && normalized_margin >= margin_tol
        && (worst_weak == f64::NEG_INFINITY || worst_weak <= WEAK_TOL);
    Ok(CheckReport {
        evaluations,
        strict_margin,
        normalized_margin,
        worst_weak,
        valid,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConverseOutcome {
    Found { q: f64, margin: f64 },
    /// No multiplier made the composite matrix negative definite.
    NotFound { best_q: f64, best_margin: f64 },
}

/// Margin `−λ_max` of the ℓ=1 composite inequality with block `diag(P, q)`.
pub fn composite_margin_for(p: &SymMat, env: &Envelope, lambda2: f64, d: &Mat, q: f64) -> Result<f64> {
    let a = composite_matrix(env, lambda2, d, &[0])?;
    let n = p.dim();
    let mut var = SymMat::zeros(n + 1);
    for i in 0..n {
        for j in i..n {
            var.set(i, j, p[(i, j)]);
        }
    }
    var.set(n, n, q);
    Ok(-lyapunov_form(&var, &a)?.max_eig())
}

/// Given `P` satisfying both vertex inequalities of a one-term box, searches
/// for the multiplier `q₁ > 0` that makes the composite inequality hold,
/// by golden-section maximization of the composite margin over `log q₁`.
pub fn lemma_s_converse_search(
    p: &SymMat,
    env: &Envelope,
    lambda2: f64,
    d: &Mat,
) -> Result<ConverseOutcome> {
    check_coupling(env, lambda2, d)?;
    if !env.is_box() || env.box_terms.len() != 1 {
        return Err(Error::InvalidEnvelope(format!(
            "converse search needs exactly one box term, found {}",
            env.box_terms.len()
        )));
    }
    if p.dim() != env.dim() {
        return Err(Error::dims(env.dim(), p.dim()));
    }
    // The margin is concave in q, hence unimodal in log q.
    let scale = p.trace().abs().max(f64::MIN_POSITIVE);
    let f = |s: f64| composite_margin_for(p, env, lambda2, d, scale * s.exp());
    let (mut a, mut b) = (-40.0_f64, 40.0_f64);
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1)?;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let (s, margin) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let q = scale * s.exp();
    // roundoff floor: margins below this are indistinguishable from zero
    let floor = 1e-10 * scale * (1.0 + composite_matrix(env, lambda2, d, &[0])?.frobenius_norm());
    Ok(if margin > floor {
        ConverseOutcome::Found { q, margin }
    } else {
        ConverseOutcome::NotFound {
            best_q: q,
            best_margin: margin,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{fhn_envelope, goodwin_envelope, FhnParams, GoodwinParams};

    fn cert_for(problem: &LmiProblem, p: SymMat, q: Vec<f64>) -> Certificate {
        let n = p.dim();
        let mut var = SymMat::zeros(n + q.len());
        for i in 0..n {
            for j in i..n {
                var.set(i, j, p[(i, j)]);
            }
        }
        for (k, v) in q.iter().enumerate() {
            var.set(n + k, n + k, *v);
        }
        Certificate::from_variable(problem, &var).unwrap()
    }

    #[test]
    fn var_spec_layout() {
        let s = VarSpec::new(3, Structure::Full, 2);
        assert_eq!(s.num_vars(), 8);
        assert_eq!(s.position(0), (0, 0));
        assert_eq!(s.position(2), (0, 2));
        assert_eq!(s.position(3), (1, 1));
        assert_eq!(s.position(5), (2, 2));
        assert_eq!(s.position(6), (3, 3));
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(s.extract(&s.assemble(&x)), x);
        let d = VarSpec::new(2, Structure::Diagonal, 1);
        assert_eq!(d.num_vars(), 3);
        assert_eq!(d.position(2), (2, 2));
    }

    #[test]
    fn constant_envelope_single_constraint() {
        let env = Envelope::constant(Mat::identity(2).scale(-1.0)).unwrap();
        let prob = vertex_lmis(&env, 0.0, &Mat::zeros(2, 2), Structure::Full).unwrap();
        let strict: Vec<_> = prob
            .constraints
            .iter()
            .filter(|c| matches!(c.expr, ConstraintExpr::Lyapunov { .. }))
            .collect();
        assert_eq!(strict.len(), 1);
        let cert = cert_for(&prob, SymMat::identity(2), vec![]);
        let report = certificate_check(&cert, &prob).unwrap();
        assert!(report.valid);
        assert!((report.strict_margin - 2.0).abs() < 1e-14);
        assert!((cert.epsilon - 2.0).abs() < 1e-14);
        let flipped = cert.scaled(-1.0);
        assert!(!certificate_check(&flipped, &prob).unwrap().valid);
    }

    #[test]
    fn fhn_vertex_problem_and_known_certificate() {
        let params = FhnParams { a: 0.0, b: 1.0, c: 2.0 };
        let env = fhn_envelope(&params).unwrap();
        let d = Mat::from_diag(&[3.0, 1.0]);
        let prob = vertex_lmis(&env, 1.0, &d, Structure::Full).unwrap();
        let labels: Vec<_> = prob.constraints.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, vec!["vertex[0]", "cone[0]", "diffusion", "positivity"]);
        let cert = cert_for(&prob, SymMat::from_diag(&[0.5, 2.0]), vec![]);
        let report = certificate_check(&cert, &prob).unwrap();
        assert!(report.valid);
        assert!((report.strict_margin - 1.0).abs() < 1e-14);
        // the diagonal formulation drops the cone and diffusion constraints
        let diag = vertex_lmis(&env, 1.0, &d, Structure::Diagonal).unwrap();
        assert_eq!(diag.constraints.len(), 2);
    }

    #[test]
    fn goodwin_composite_matrix() {
        let env = goodwin_envelope(&GoodwinParams::reference()).unwrap();
        let mu = 0.06;
        let prob = composite_lmi(&env, mu, &Mat::identity(3), Structure::Diagonal).unwrap();
        let ConstraintExpr::Lyapunov { matrix, .. } = &prob.constraints[0].expr else {
            panic!("composite constraint first");
        };
        let expected = Mat::from_rows(&[
            [-(0.01 + mu), 0.0, 0.0, -9.0],
            [0.01, -(0.01 + mu), 0.0, 0.0],
            [0.0, 0.01, -mu, 0.0],
            [0.0, 0.0, 1.0, -1.0],
        ])
        .unwrap();
        assert!((matrix - &expected).max_abs() < 1e-15);
        assert_eq!(prob.var_spec.multipliers, 1);
        let vprob = vertex_lmis(&env, mu, &Mat::identity(3), Structure::Full).unwrap();
        assert_eq!(
            vprob.constraints.iter().filter(|c| c.label.starts_with("vertex")).count(),
            4
        );
    }

    #[test]
    fn composite_without_terms_is_plain_lyapunov() {
        let a0 = Mat::from_rows(&[[-1.0, 2.0], [0.0, -3.0]]).unwrap();
        let env = Envelope::constant(a0.clone()).unwrap();
        let prob = composite_lmi(&env, 0.5, &Mat::identity(2), Structure::Full).unwrap();
        let ConstraintExpr::Lyapunov { matrix, .. } = &prob.constraints[0].expr else {
            panic!()
        };
        assert_eq!(*matrix, &a0 - &Mat::identity(2).scale(0.5));
    }

    #[test]
    fn composite_rejects_hulls() {
        let env = fhn_envelope(&FhnParams { a: 0.0, b: 1.0, c: 2.0 }).unwrap();
        assert!(composite_lmi(&env, 1.0, &Mat::identity(2), Structure::Full).is_err());
    }

    #[test]
    fn scalar_converse() {
        use crate::envelope::BoxTerm;
        let term = BoxTerm::new("t", vec![1.0], vec![1.0]).unwrap();
        let env = Envelope::new(Mat::from_rows(&[[-2.0]]).unwrap(), vec![term], vec![], vec![])
            .unwrap();
        let p = SymMat::identity(1);
        let d = Mat::zeros(1, 1);
        // q = 1: [[-4, 2], [2, -2]] has det 4 > 0 and negative trace.
        let m1 = composite_margin_for(&p, &env, 0.0, &d, 1.0).unwrap();
        assert!(m1 > 0.0);
        match lemma_s_converse_search(&p, &env, 0.0, &d).unwrap() {
            ConverseOutcome::Found { q, margin } => {
                assert!(q > 0.0 && margin >= m1 - 1e-12);
            }
            other => panic!("expected a multiplier, got {other:?}"),
        }
    }

    #[test]
    fn converse_fails_at_zero_vertex_margin() {
        use crate::envelope::BoxTerm;
        // vertices -1 and 0: the second has zero margin
        let term = BoxTerm::new("t", vec![1.0], vec![1.0]).unwrap();
        let env = Envelope::new(Mat::from_rows(&[[-1.0]]).unwrap(), vec![term], vec![], vec![])
            .unwrap();
        let out = lemma_s_converse_search(&SymMat::identity(1), &env, 0.0, &Mat::zeros(1, 1))
            .unwrap();
        assert!(matches!(out, ConverseOutcome::NotFound { .. }));
    }

    #[test]
    fn structure_mismatch_detected() {
        let env = goodwin_envelope(&GoodwinParams::reference()).unwrap();
        let prob = composite_lmi(&env, 0.1, &Mat::identity(3), Structure::Diagonal).unwrap();
        let cert = Certificate {
            structure: CertStructure::Full,
            p: SymMat::identity(3),
            q: vec![],
            margin: 0.0,
            epsilon: 0.0,
        };
        assert!(matches!(
            certificate_check(&cert, &prob),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn dump_uses_seventeen_digits() {
        let env = Envelope::constant(Mat::from_rows(&[[-0.1]]).unwrap()).unwrap();
        let prob = vertex_lmis(&env, 0.0, &Mat::zeros(1, 1), Structure::Full).unwrap();
        let text = prob.dump();
        assert!(text.contains("-1.0000000000000001e-1"), "{text}");
        assert!(text.contains("constraint positivity"));
    }
}
