//! Constant-matrix envelopes of state-dependent Jacobians.
//!
//! An [`Envelope`] describes a set of matrices guaranteed to contain `J(x)`
//! for every `x` in the model's state domain. Two shapes are supported and
//! may be combined with conic directions:
//!
//! * a box `A₀ + Σ γᵢ Bᵢ Cᵢᵀ`, `γᵢ ∈ [0, 1]`, with every generator stored
//!   in rank-one factored form, and
//! * an explicit convex hull of vertex matrices `Zₖ`.
//!
//! Cone generators `Sₖ` add `Σ ωₖ Sₖ`, `ωₖ ≥ 0`, to either shape.

pub mod models;

pub use models::{
    FhnParams, FitzHughNagumo, GoldbeterParams, Goldbeter, Goodwin, GoodwinParams, Linear, Lure,
    ReactionModel, StateDomain,
};

use crate::error::{Error, Result};
use crate::numerics::{solve_linear, Mat, SymMat};

/// One rank-one generator `B Cᵀ` of a box envelope, scaled by `γ ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxTerm {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `B Cᵀ` is diagonal with nonpositive entries. Such terms can be dropped
    /// from the composite inequality when the Lyapunov matrix is diagonal.
    pub diag_nonpositive: bool,
    pub label: String,
}

impl BoxTerm {
    pub fn new(label: impl Into<String>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if b.len() != c.len() {
            return Err(Error::dims(b.len(), c.len()));
        }
        if !b.iter().chain(&c).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("box term has non-finite entries".into()));
        }
        Ok(BoxTerm {
            b,
            c,
            diag_nonpositive: false,
            label: label.into(),
        })
    }

    /// Marks the term as diagonal and nonpositive after checking that it is.
    pub fn flagged_diagonal(mut self) -> Result<Self> {
        let m = self.matrix();
        let nonpos = m.diagonal().iter().all(|&v| v <= 0.0);
        if !m.is_diagonal() || !nonpos {
            return Err(Error::InvalidEnvelope(format!(
                "term {} is not diagonal nonpositive",
                self.label
            )));
        }
        self.diag_nonpositive = true;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> Mat {
        Mat::outer(&self.b, &self.c)
    }

    /// Replaces `(B, C)` by `(αB, C/α)`; the product is unchanged.
    pub fn rescaled(&self, alpha: f64) -> BoxTerm {
        BoxTerm {
            b: self.b.iter().map(|v| v * alpha).collect(),
            c: self.c.iter().map(|v| v / alpha).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub a0: Mat,
    pub box_terms: Vec<BoxTerm>,
    pub cone_gens: Vec<Mat>,
    pub conv_vertices: Vec<Mat>,
}

/// Hard cap on `ℓ` for explicit `2^ℓ` vertex enumeration.
pub const MAX_ENUMERATED_TERMS: usize = 20;

impl Envelope {
    /// A single constant matrix.
    pub fn constant(a0: Mat) -> Result<Self> {
        Envelope::new(a0, Vec::new(), Vec::new(), Vec::new())
    }

    pub fn new(
        a0: Mat,
        box_terms: Vec<BoxTerm>,
        cone_gens: Vec<Mat>,
        conv_vertices: Vec<Mat>,
    ) -> Result<Self> {
        if !a0.is_square() {
            return Err(Error::dims("square A0", format!("{}x{}", a0.rows(), a0.cols())));
        }
        a0.check_finite()?;
        let n = a0.rows();
        for t in &box_terms {
            if t.dim() != n {
                return Err(Error::dims(n, t.dim()));
            }
        }
        for m in cone_gens.iter().chain(&conv_vertices) {
            if m.rows() != n || m.cols() != n {
                return Err(Error::dims(
                    format!("{n}x{n}"),
                    format!("{}x{}", m.rows(), m.cols()),
                ));
            }
            m.check_finite()?;
        }
        if !box_terms.is_empty() && !conv_vertices.is_empty() {
            return Err(Error::InvalidEnvelope(
                "an envelope is either a box or an explicit hull, not both".into(),
            ));
        }
        Ok(Envelope {
            a0,
            box_terms,
            cone_gens,
            conv_vertices,
        })
    }

    pub fn dim(&self) -> usize {
        self.a0.rows()
    }

    pub fn is_box(&self) -> bool {
        self.conv_vertices.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        if self.conv_vertices.is_empty() {
            1usize << self.box_terms.len().min(usize::BITS as usize - 1)
        } else {
            self.conv_vertices.len()
        }
    }

    /// Vertex matrices paired with their γ-pattern (empty for explicit hulls).
    pub fn vertices(&self) -> Result<Vec<(Vec<bool>, Mat)>> {
        if !self.conv_vertices.is_empty() {
            return Ok(self
                .conv_vertices
                .iter()
                .map(|z| (Vec::new(), z.clone()))
                .collect());
        }
        let l = self.box_terms.len();
        if l > MAX_ENUMERATED_TERMS {
            return Err(Error::VertexExplosion {
                terms: l,
                cap: MAX_ENUMERATED_TERMS,
            });
        }
        let mats: Vec<Mat> = self.box_terms.iter().map(BoxTerm::matrix).collect();
        let mut out = Vec::with_capacity(1 << l);
        for mask in 0..(1usize << l) {
            let pattern: Vec<bool> = (0..l).map(|i| mask & (1 << i) != 0).collect();
            let mut z = self.a0.clone();
            for (on, m) in pattern.iter().zip(&mats) {
                if *on {
                    z = &z + m;
                }
            }
            out.push((pattern, z));
        }
        Ok(out)
    }

    /// `A₀ + Σ γᵢ BᵢCᵢᵀ + Σ ωₖ Sₖ`.
    pub fn point(&self, gamma: &[f64], omega: &[f64]) -> Result<Mat> {
        if gamma.len() != self.box_terms.len() || omega.len() != self.cone_gens.len() {
            return Err(Error::dims(
                format!("{} gammas, {} omegas", self.box_terms.len(), self.cone_gens.len()),
                format!("{} gammas, {} omegas", gamma.len(), omega.len()),
            ));
        }
        let mut m = self.a0.clone();
        for (g, t) in gamma.iter().zip(&self.box_terms) {
            m = &m + &t.matrix().scale(*g);
        }
        for (w, s) in omega.iter().zip(&self.cone_gens) {
            m = &m + &s.scale(*w);
        }
        Ok(m)
    }

    /// `B = [B₁ … B_ℓ]`, `C = [C₁ … C_ℓ]` over the selected terms.
    pub fn factor_columns(&self, keep: &[usize]) -> (Mat, Mat) {
        let n = self.dim();
        let b = Mat::from_fn(n, keep.len(), |i, k| self.box_terms[keep[k]].b[i]);
        let c = Mat::from_fn(n, keep.len(), |i, k| self.box_terms[keep[k]].c[i]);
        (b, c)
    }
}

/// Grouping of Goldbeter's repeated phosphorylation nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Grouping {
    /// One term per nonlinearity, shared between the two rows it enters.
    #[default]
    Grouped,
    /// One term per occurrence.
    Overparameterized,
}

pub fn goodwin_envelope(p: &GoodwinParams) -> Result<Envelope> {
    p.validate()?;
    let a0 = Mat::from_rows(&[
        [-p.a1, 0.0, 0.0],
        [p.b1, -p.a2, 0.0],
        [0.0, p.b2, 0.0],
    ])?;
    let repression = BoxTerm::new(
        "repression",
        vec![-p.v1 / (p.k1 * p.k1), 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
    )?;
    let degradation =
        BoxTerm::new("degradation", vec![0.0, 0.0, -p.v3 / p.k3], vec![0.0, 0.0, 1.0])?
            .flagged_diagonal()?;
    Envelope::new(a0, vec![repression, degradation], Vec::new(), Vec::new())
}

pub fn goldbeter_envelope(p: &GoldbeterParams, grouping: Grouping) -> Result<Envelope> {
    p.validate()?;
    let mut a0 = Mat::zeros(5, 5);
    a0[(1, 0)] = p.ks;
    a0[(3, 3)] = -p.k1;
    a0[(3, 4)] = p.k2;
    a0[(4, 3)] = p.k1;
    a0[(4, 4)] = -p.k2;

    let unit = |i: usize| {
        let mut e = vec![0.0; 5];
        e[i] = 1.0;
        e
    };
    let bar = |i: usize| p.v[i] / p.k[i];

    // (column of the nonlinearity's argument, [(row, signed bound)])
    let shared: [(usize, [(usize, f64); 2]); 4] = [
        (1, [(1, -bar(0)), (2, bar(0))]),
        (2, [(1, bar(1)), (2, -bar(1))]),
        (2, [(2, -bar(2)), (3, bar(2))]),
        (3, [(2, bar(3)), (3, -bar(3))]),
    ];

    let mut terms = Vec::new();
    for (idx, (col, entries)) in shared.iter().enumerate() {
        match grouping {
            Grouping::Grouped => {
                let mut b = vec![0.0; 5];
                for &(row, v) in entries {
                    b[row] = v;
                }
                terms.push(BoxTerm::new(format!("phi{}", idx + 1), b, unit(*col))?);
            }
            Grouping::Overparameterized => {
                for (k, &(row, v)) in entries.iter().enumerate() {
                    let mut b = vec![0.0; 5];
                    b[row] = v;
                    let tag = if k == 0 { 'a' } else { 'b' };
                    terms.push(BoxTerm::new(format!("phi{}{tag}", idx + 1), b, unit(*col))?);
                }
            }
        }
    }
    let mut b5 = vec![0.0; 5];
    b5[0] = -p.repression_slope_bound();
    terms.push(BoxTerm::new("phi5", b5, unit(4))?);
    let mut b6 = vec![0.0; 5];
    b6[0] = -p.vm / p.km;
    terms.push(BoxTerm::new("phi6", b6, unit(0))?.flagged_diagonal()?);
    let mut b7 = vec![0.0; 5];
    b7[3] = -p.vd / p.kd;
    terms.push(BoxTerm::new("phi7", b7, unit(3))?.flagged_diagonal()?);

    Envelope::new(a0, terms, Vec::new(), Vec::new())
}

/// Exact envelope: `J(x) = Z₁ + c·x₁²·(−e₁e₁ᵀ)`.
pub fn fhn_envelope(p: &FhnParams) -> Result<Envelope> {
    p.validate()?;
    let z1 = Mat::from_rows(&[[p.c, p.c], [-1.0 / p.c, -p.b / p.c]])?;
    let mut s1 = Mat::zeros(2, 2);
    s1[(0, 0)] = -1.0;
    Envelope::new(z1.clone(), Vec::new(), vec![s1], vec![z1])
}

/// `Z₁ = A + γ B Cᵀ`, `S₁ = −B Cᵀ`: every slope `≤ γ` is covered.
pub fn lure_envelope(a: &Mat, b: &[f64], c: &[f64], gamma: f64) -> Result<Envelope> {
    let n = a.rows();
    if !a.is_square() || b.len() != n || c.len() != n {
        return Err(Error::dims(
            format!("A {n}x{n}, B and C of length {n}"),
            format!("A {}x{}, B {}, C {}", a.rows(), a.cols(), b.len(), c.len()),
        ));
    }
    let bc = Mat::outer(b, c);
    let z1 = a + &bc.scale(gamma);
    Envelope::new(z1.clone(), Vec::new(), vec![bc.scale(-1.0)], vec![z1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub samples_checked: usize,
    /// Worst excess of a Jacobian entry (or recovered coefficient, in entry
    /// units) beyond the envelope. `0` when every sample is covered.
    pub worst_violation: f64,
    pub worst_sample: Option<usize>,
    /// Samples outside the model's declared state domain. They are skipped.
    pub out_of_domain: Vec<usize>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.worst_violation == 0.0
    }
}

// Relative slack for floating-point noise in the entrywise bounds.
const AUDIT_SLACK: f64 = 1e-12;

/// Sampling-based check that `J(x)` lies in the envelope at each sample.
pub fn membership_audit(
    env: &Envelope,
    model: &dyn ReactionModel,
    samples: &[Vec<f64>],
) -> Result<AuditReport> {
    let n = env.dim();
    if model.dim() != n {
        return Err(Error::dims(n, model.dim()));
    }
    if env.conv_vertices.len() > 1 {
        return Err(Error::Unsupported(
            "membership audit of multi-vertex explicit hulls".into(),
        ));
    }
    let domain = model.state_domain();
    let base = env.conv_vertices.first().unwrap_or(&env.a0);
    let gens: Vec<(Mat, bool)> = env
        .box_terms
        .iter()
        .map(|t| (t.matrix(), true))
        .chain(env.cone_gens.iter().map(|s| (s.clone(), false)))
        .collect();

    let mut report = AuditReport {
        samples_checked: 0,
        worst_violation: 0.0,
        worst_sample: None,
        out_of_domain: Vec::new(),
    };

    for (idx, x) in samples.iter().enumerate() {
        if x.len() != n {
            return Err(Error::dims(n, x.len()));
        }
        if !domain.contains(x) {
            report.out_of_domain.push(idx);
            continue;
        }
        report.samples_checked += 1;
        let j = model.jacobian(x);
        let v = entrywise_violation(&j, base, &gens).max(coefficient_violation(&j, base, &gens));
        if v > report.worst_violation {
            report.worst_violation = v;
            report.worst_sample = Some(idx);
        }
    }
    Ok(report)
}

/// Each entry must lie in the interval hull of the generators' ranges
/// (`[0, 1]` for box terms, `[0, ∞)` for cone directions).
fn entrywise_violation(j: &Mat, base: &Mat, gens: &[(Mat, bool)]) -> f64 {
    let n = j.rows();
    let mut worst = 0.0_f64;
    for r in 0..n {
        for c in 0..n {
            let mut lo = base[(r, c)];
            let mut hi = base[(r, c)];
            for (g, bounded) in gens {
                let v = g[(r, c)];
                if *bounded {
                    lo += v.min(0.0);
                    hi += v.max(0.0);
                } else if v < 0.0 {
                    lo = f64::NEG_INFINITY;
                } else if v > 0.0 {
                    hi = f64::INFINITY;
                }
            }
            let x = j[(r, c)];
            let slack = AUDIT_SLACK * (1.0 + x.abs());
            let excess = if x < lo - slack {
                lo - x
            } else if x > hi + slack {
                x - hi
            } else {
                0.0
            };
            worst = worst.max(excess);
        }
    }
    worst
}

/// When the generators are linearly independent, the coefficients are
/// unique: recover them by least squares and check range and residual.
fn coefficient_violation(j: &Mat, base: &Mat, gens: &[(Mat, bool)]) -> f64 {
    let k = gens.len();
    if k == 0 {
        let diff = j - base;
        return if diff.max_abs() > AUDIT_SLACK * (1.0 + j.max_abs()) {
            diff.max_abs()
        } else {
            0.0
        };
    }
    let gram = Mat::from_fn(k, k, |a, b| dot(gens[a].0.as_slice(), gens[b].0.as_slice()));
    let diff = j - base;
    let rhs: Vec<f64> = gens.iter().map(|(g, _)| dot(g.as_slice(), diff.as_slice())).collect();
    let spectrum = SymMat::symmetrize(&gram).eig().values;
    if spectrum[0] <= 1e-10 * spectrum[k - 1] {
        return 0.0; // dependent generators: entrywise check only
    }
    let Ok(coef) = solve_linear(&gram, &rhs) else {
        return 0.0;
    };
    let recon = gens
        .iter()
        .zip(&coef)
        .fold(Mat::zeros(j.rows(), j.cols()), |acc, ((g, _), w)| &acc + &g.scale(*w));
    let residual = (&diff - &recon).max_abs();
    let scale = 1.0 + j.max_abs();
    let mut worst = if residual > 1e-9 * scale { residual } else { 0.0 };
    for ((g, bounded), &w) in gens.iter().zip(&coef) {
        let gmax = g.max_abs();
        let tol = 1e-9;
        let excess = if w < -tol {
            -w
        } else if *bounded && w > 1.0 + tol {
            w - 1.0
        } else {
            0.0
        };
        worst = worst.max(excess * gmax);
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goodwin_reference_envelope() {
        let env = goodwin_envelope(&GoodwinParams::reference()).unwrap();
        assert_eq!(env.a0[(0, 0)], -0.01);
        assert_eq!(env.a0[(1, 0)], 0.01);
        assert_eq!(env.a0[(2, 1)], 0.01);
        assert_eq!(env.box_terms[0].b, vec![-9.0, 0.0, 0.0]);
        assert_eq!(env.box_terms[0].c, vec![0.0, 0.0, 1.0]);
        assert!(!env.box_terms[0].diag_nonpositive);
        assert!(env.box_terms[1].diag_nonpositive);
        assert_eq!(env.vertices().unwrap().len(), 4);
    }

    #[test]
    fn goodwin_unit_gain() {
        let p = GoodwinParams {
            v1: 1.0,
            k1: 1.0,
            ..GoodwinParams::reference()
        };
        assert_eq!(goodwin_envelope(&p).unwrap().box_terms[0].b, vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn goodwin_slopes_at_unit_product() {
        let p = GoodwinParams::reference();
        assert!((p.repression_slope(1.0) - 2.25).abs() < 1e-15);
        assert!((p.degradation_slope(1.0) - 0.25).abs() < 1e-15);
        let model = Goodwin::new(p).unwrap();
        let env = goodwin_envelope(&p).unwrap();
        let r = membership_audit(&env, &model, &[vec![0.3, 0.2, 1.0]]).unwrap();
        assert!(r.is_clean());
    }

    #[test]
    fn goldbeter_term_counts() {
        let p = GoldbeterParams::reference();
        let g = goldbeter_envelope(&p, Grouping::Grouped).unwrap();
        assert_eq!(g.box_terms.len(), 7);
        let o = goldbeter_envelope(&p, Grouping::Overparameterized).unwrap();
        assert_eq!(o.box_terms.len(), 11);
        assert_eq!(g.box_terms[0].b[1], -1.6);
        let flagged: Vec<_> = g
            .box_terms
            .iter()
            .filter(|t| t.diag_nonpositive)
            .map(|t| t.label.as_str())
            .collect();
        assert_eq!(flagged, vec!["phi6", "phi7"]);
    }

    #[test]
    fn goldbeter_shared_terms_conserve_flux() {
        let g = goldbeter_envelope(&GoldbeterParams::reference(), Grouping::Grouped).unwrap();
        for t in &g.box_terms[..4] {
            let m = t.matrix();
            for c in 0..5 {
                let s: f64 = (0..5).map(|r| m[(r, c)]).sum();
                assert_eq!(s, 0.0);
            }
        }
    }

    #[test]
    fn fhn_envelope_shape() {
        let env = fhn_envelope(&FhnParams { a: 0.0, b: 1.0, c: 2.0 }).unwrap();
        assert_eq!(env.conv_vertices[0].to_rows(), vec![vec![2.0, 2.0], vec![-0.5, -0.5]]);
        assert_eq!(env.cone_gens[0].to_rows(), vec![vec![-1.0, 0.0], vec![0.0, 0.0]]);
        let model = FitzHughNagumo::new(FhnParams { a: 0.0, b: 1.0, c: 2.0 }).unwrap();
        let j = model.jacobian(&[1.0, 0.3]);
        let expected = env.point(&[], &[2.0]);
        // point() starts from a0 which equals Z1 for hull envelopes
        assert_eq!(j, expected.unwrap());
    }

    #[test]
    fn lure_envelope_examples() {
        let a = Mat::from_rows(&[[-1.0, 0.5], [0.0, -2.0]]).unwrap();
        let e = lure_envelope(&a, &[1.0, 0.0], &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(e.conv_vertices[0], a);
        let z = lure_envelope(&Mat::zeros(2, 2), &[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(z.conv_vertices[0].to_rows(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(z.cone_gens[0].to_rows(), vec![vec![-1.0, 0.0], vec![0.0, 0.0]]);
        assert!(lure_envelope(&a, &[1.0], &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn shrunken_bound_is_detected() {
        let p = GoldbeterParams::reference();
        let model = Goldbeter::new(p).unwrap();
        let mut env = goldbeter_envelope(&p, Grouping::Grouped).unwrap();
        for v in env.box_terms[0].b.iter_mut() {
            *v *= 0.5;
        }
        let r = membership_audit(&env, &model, &[vec![0.1, 0.01, 0.2, 0.3, 0.4]]).unwrap();
        assert!(r.worst_violation > 0.5);
    }

    #[test]
    fn out_of_domain_is_flagged() {
        let p = GoodwinParams::reference();
        let model = Goodwin::new(p).unwrap();
        let env = goodwin_envelope(&p).unwrap();
        let r = membership_audit(&env, &model, &[vec![0.0, 0.0, -1.0], vec![1.0, 1.0, 1.0]])
            .unwrap();
        assert_eq!(r.out_of_domain, vec![0]);
        assert_eq!(r.samples_checked, 1);
    }

    #[test]
    fn vertex_cap() {
        let terms: Vec<BoxTerm> = (0..21)
            .map(|i| BoxTerm::new(format!("t{i}"), vec![1.0], vec![1.0]).unwrap())
            .collect();
        let env = Envelope::new(Mat::zeros(1, 1), terms, vec![], vec![]).unwrap();
        assert!(matches!(env.vertices(), Err(Error::VertexExplosion { .. })));
    }

    #[test]
    fn flag_requires_diagonal_nonpositive() {
        assert!(BoxTerm::new("x", vec![1.0, 0.0], vec![0.0, 1.0])
            .unwrap()
            .flagged_diagonal()
            .is_err());
        assert!(BoxTerm::new("x", vec![1.0, 0.0], vec![1.0, 0.0])
            .unwrap()
            .flagged_diagonal()
            .is_err());
    }
}
