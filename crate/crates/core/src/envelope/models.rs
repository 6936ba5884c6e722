//! Reaction vector fields with analytic Jacobians.

use crate::error::{Error, Result};
use crate::numerics::Mat;

/// The set 𝒳 on which a Jacobian envelope is claimed to hold.
#[derive(Debug, Clone, PartialEq)]
pub enum StateDomain {
    NonnegativeOrthant,
    Whole,
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl StateDomain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            StateDomain::NonnegativeOrthant => x.iter().all(|&v| v >= 0.0),
            StateDomain::Whole => x.iter().all(|v| v.is_finite()),
            StateDomain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l && v <= h),
        }
    }
}

/// A reaction term `f: ℝⁿ → ℝⁿ` together with its analytic Jacobian.
pub trait ReactionModel: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn rhs(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64]) -> Mat;
    fn state_domain(&self) -> StateDomain;

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.rhs(x, &mut out);
        out
    }
}

fn require_positive(named: &[(&str, f64)]) -> Result<()> {
    for (name, v) in named {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Goodwin oscillator (mRNA, enzyme, product).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodwinParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub v1: f64,
    pub v3: f64,
    pub k1: f64,
    pub k3: f64,
}

impl GoodwinParams {
    /// `a1 = a2 = b1 = b2 = 0.01`, `V1 = 9`, `V3 = K1 = K3 = 1`.
    pub fn reference() -> Self {
        GoodwinParams {
            a1: 0.01,
            a2: 0.01,
            b1: 0.01,
            b2: 0.01,
            v1: 9.0,
            v3: 1.0,
            k1: 1.0,
            k3: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive(&[
            ("a1", self.a1),
            ("a2", self.a2),
            ("b1", self.b1),
            ("b2", self.b2),
            ("V1", self.v1),
            ("V3", self.v3),
            ("K1", self.k1),
            ("K3", self.k3),
        ])
    }

    /// Repression slope `V1 / (K1 + x3)²`, in `[0, V1/K1²]` on the orthant.
    pub fn repression_slope(&self, x3: f64) -> f64 {
        self.v1 / ((self.k1 + x3) * (self.k1 + x3))
    }

    /// Degradation slope `V3 K3 / (K3 + x3)²`, in `[0, V3/K3]` on the orthant.
    pub fn degradation_slope(&self, x3: f64) -> f64 {
        self.v3 * self.k3 / ((self.k3 + x3) * (self.k3 + x3))
    }
}

#[derive(Debug, Clone)]
pub struct Goodwin {
    pub params: GoodwinParams,
}

impl Goodwin {
    pub fn new(params: GoodwinParams) -> Result<Self> {
        params.validate()?;
        Ok(Goodwin { params })
    }
}

impl ReactionModel for Goodwin {
    fn name(&self) -> &str {
        "goodwin"
    }

    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        let p = &self.params;
        out[0] = -p.a1 * x[0] + p.v1 / (p.k1 + x[2]);
        out[1] = -p.a2 * x[1] + p.b1 * x[0];
        out[2] = -p.v3 * x[2] / (p.k3 + x[2]) + p.b2 * x[1];
    }

    fn jacobian(&self, x: &[f64]) -> Mat {
        let p = &self.params;
        let mut j = Mat::zeros(3, 3);
        j[(0, 0)] = -p.a1;
        j[(0, 2)] = -p.repression_slope(x[2]);
        j[(1, 0)] = p.b1;
        j[(1, 1)] = -p.a2;
        j[(2, 1)] = p.b2;
        j[(2, 2)] = -p.degradation_slope(x[2]);
        j
    }

    fn state_domain(&self) -> StateDomain {
        StateDomain::NonnegativeOrthant
    }
}

/// Goldbeter's five-variable circadian model: state `(M, P0, P1, P2, PN)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldbeterParams {
    pub n: u32,
    pub vs: f64,
    pub ki: f64,
    pub ks: f64,
    pub k1: f64,
    pub k2: f64,
    /// Phosphorylation/dephosphorylation maximal rates `V1..V4`.
    pub v: [f64; 4],
    /// Matching Michaelis constants `K1..K4`.
    pub k: [f64; 4],
    pub vm: f64,
    pub vd: f64,
    pub kd: f64,
    pub km: f64,
}

impl GoldbeterParams {
    pub fn reference() -> Self {
        GoldbeterParams {
            n: 4,
            vs: 0.76,
            ki: 1.0,
            ks: 0.38,
            k1: 1.9,
            k2: 1.3,
            v: [3.2, 1.58, 5.0, 2.5],
            k: [2.0, 2.0, 2.0, 2.0],
            vm: 0.65,
            vd: 0.95,
            kd: 0.2,
            km: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("Hill exponent n must be >= 1".into()));
        }
        require_positive(&[
            ("vs", self.vs),
            ("KI", self.ki),
            ("ks", self.ks),
            ("k1", self.k1),
            ("k2", self.k2),
            ("V1", self.v[0]),
            ("V2", self.v[1]),
            ("V3", self.v[2]),
            ("V4", self.v[3]),
            ("K1", self.k[0]),
            ("K2", self.k[1]),
            ("K3", self.k[2]),
            ("K4", self.k[3]),
            ("vm", self.vm),
            ("vd", self.vd),
            ("kd", self.kd),
            ("km", self.km),
        ])
    }

    /// Michaelis–Menten slope `K_i V_i / (K_i + x)²` for `i` in `0..4`.
    pub fn mm_slope(&self, i: usize, x: f64) -> f64 {
        let k = self.k[i];
        k * self.v[i] / ((k + x) * (k + x))
    }

    /// Magnitude of the repression slope `n vs KIⁿ xⁿ⁻¹ / (KIⁿ + xⁿ)²`.
    pub fn repression_slope(&self, x: f64) -> f64 {
        let n = self.n as i32;
        let kin = self.ki.powi(n);
        let xn = x.powi(n);
        let denom = kin + xn;
        self.n as f64 * self.vs * kin * x.powi(n - 1) / (denom * denom)
    }

    /// Supremum of [`Self::repression_slope`] over `x ≥ 0`.
    pub fn repression_slope_bound(&self) -> f64 {
        let nf = self.n as f64;
        let kin = self.ki.powi(self.n as i32);
        if self.n == 1 {
            nf * self.vs / kin
        } else {
            (nf + 1.0).powi(2) * self.vs / (4.0 * nf * kin)
                * (kin * (nf - 1.0) / (nf + 1.0)).powf((nf - 1.0) / nf)
        }
    }

    pub fn mrna_slope(&self, m: f64) -> f64 {
        self.vm * self.km / ((self.km + m) * (self.km + m))
    }

    pub fn degradation_slope(&self, p2: f64) -> f64 {
        self.vd * self.kd / ((self.kd + p2) * (self.kd + p2))
    }
}

#[derive(Debug, Clone)]
pub struct Goldbeter {
    pub params: GoldbeterParams,
}

impl Goldbeter {
    pub fn new(params: GoldbeterParams) -> Result<Self> {
        params.validate()?;
        Ok(Goldbeter { params })
    }
}

impl ReactionModel for Goldbeter {
    fn name(&self) -> &str {
        "goldbeter"
    }

    fn dim(&self) -> usize {
        5
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        let p = &self.params;
        let (m, p0, p1, p2, pn) = (x[0], x[1], x[2], x[3], x[4]);
        let mm = |i: usize, s: f64| p.v[i] * s / (p.k[i] + s);
        let kin = p.ki.powi(p.n as i32);
        let flux0 = mm(0, p0);
        let flux1 = mm(1, p1);
        let flux2 = mm(2, p1);
        let flux3 = mm(3, p2);
        out[0] = p.vs * kin / (kin + pn.powi(p.n as i32)) - p.vm * m / (p.km + m);
        out[1] = p.ks * m - flux0 + flux1;
        out[2] = flux0 - flux1 - flux2 + flux3;
        out[3] = flux2 - flux3 - p.k1 * p2 + p.k2 * pn - p.vd * p2 / (p.kd + p2);
        out[4] = p.k1 * p2 - p.k2 * pn;
    }

    fn jacobian(&self, x: &[f64]) -> Mat {
        let p = &self.params;
        let (m, p0, p1, p2, pn) = (x[0], x[1], x[2], x[3], x[4]);
        let phi1 = p.mm_slope(0, p0);
        let phi2 = p.mm_slope(1, p1);
        let phi3 = p.mm_slope(2, p1);
        let phi4 = p.mm_slope(3, p2);
        let phi5 = p.repression_slope(pn);
        let phi6 = p.mrna_slope(m);
        let phi7 = p.degradation_slope(p2);
        let mut j = Mat::zeros(5, 5);
        j[(0, 0)] = -phi6;
        j[(0, 4)] = -phi5;
        j[(1, 0)] = p.ks;
        j[(1, 1)] = -phi1;
        j[(1, 2)] = phi2;
        j[(2, 1)] = phi1;
        j[(2, 2)] = -phi2 - phi3;
        j[(2, 3)] = phi4;
        j[(3, 2)] = phi3;
        j[(3, 3)] = -p.k1 - phi4 - phi7;
        j[(3, 4)] = p.k2;
        j[(4, 3)] = p.k1;
        j[(4, 4)] = -p.k2;
        j
    }

    fn state_domain(&self) -> StateDomain {
        StateDomain::NonnegativeOrthant
    }
}

/// FitzHugh–Nagumo excitable cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FhnParams {
    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::InvalidParams("a must be finite".into()));
        }
        require_positive(&[("b", self.b), ("c", self.c)])
    }
}

#[derive(Debug, Clone)]
pub struct FitzHughNagumo {
    pub params: FhnParams,
}

impl FitzHughNagumo {
    pub fn new(params: FhnParams) -> Result<Self> {
        params.validate()?;
        Ok(FitzHughNagumo { params })
    }
}

impl ReactionModel for FitzHughNagumo {
    fn name(&self) -> &str {
        "fhn"
    }

    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        let FhnParams { a, b, c } = self.params;
        out[0] = c * (x[0] - x[0].powi(3) / 3.0 + x[1]);
        out[1] = (-x[0] - b * x[1] + a) / c;
    }

    fn jacobian(&self, x: &[f64]) -> Mat {
        let FhnParams { b, c, .. } = self.params;
        let mut j = Mat::zeros(2, 2);
        j[(0, 0)] = c * (1.0 - x[0] * x[0]);
        j[(0, 1)] = c;
        j[(1, 0)] = -1.0 / c;
        j[(1, 1)] = -b / c;
        j
    }

    fn state_domain(&self) -> StateDomain {
        StateDomain::Whole
    }
}

/// Lur'e system `ẋ = A x + B φ(Cᵀx)` with the sector nonlinearity
/// `φ(y) = γ y − y³/3`, whose slope never exceeds `γ`.
#[derive(Debug, Clone)]
pub struct Lure {
    pub a: Mat,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub gamma: f64,
}

impl Lure {
    pub fn new(a: Mat, b: Vec<f64>, c: Vec<f64>, gamma: f64) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.len() != n || c.len() != n {
            return Err(Error::dims(
                format!("A {n}x{n}, B and C of length {n}"),
                format!("A {}x{}, B {}, C {}", a.rows(), a.cols(), b.len(), c.len()),
            ));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParams("gamma must be finite".into()));
        }
        Ok(Lure { a, b, c, gamma })
    }

    fn output(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn nonlinearity(&self, y: f64) -> f64 {
        self.gamma * y - y * y * y / 3.0
    }

    pub fn slope(&self, y: f64) -> f64 {
        self.gamma - y * y
    }

    /// The coupling matrix `B Cᵀ` for output-coupled networks.
    pub fn output_coupling(&self) -> Mat {
        Mat::outer(&self.b, &self.c)
    }
}

impl ReactionModel for Lure {
    fn name(&self) -> &str {
        "lure"
    }

    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        let ax = self.a.mat_vec(x);
        let phi = self.nonlinearity(self.output(x));
        for i in 0..out.len() {
            out[i] = ax[i] + self.b[i] * phi;
        }
    }

    fn jacobian(&self, x: &[f64]) -> Mat {
        let s = self.slope(self.output(x));
        &self.a + &Mat::outer(&self.b, &self.c).scale(s)
    }

    fn state_domain(&self) -> StateDomain {
        StateDomain::Whole
    }
}

/// `f(x) = A x`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub a: Mat,
}

impl Linear {
    pub fn new(a: Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("square matrix", format!("{}x{}", a.rows(), a.cols())));
        }
        Ok(Linear { a })
    }

    /// `f ≡ 0` in dimension `n`.
    pub fn zero(n: usize) -> Self {
        Linear { a: Mat::zeros(n, n) }
    }
}

impl ReactionModel for Linear {
    fn name(&self) -> &str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.a.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn jacobian(&self, _x: &[f64]) -> Mat {
        self.a.clone()
    }

    fn state_domain(&self) -> StateDomain {
        StateDomain::Whole
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goldbeter_bound_cases() {
        let p = GoldbeterParams::reference();
        let expected = (25.0 * 0.76 / 16.0) * 0.6_f64.powf(0.75);
        assert!((p.repression_slope_bound() - expected).abs() < 1e-12);
        assert!((p.repression_slope_bound() - 0.8095).abs() < 1e-4);
        let p1 = GoldbeterParams { n: 1, ..p };
        assert!((p1.repression_slope_bound() - 0.76).abs() < 1e-15);
    }

    #[test]
    fn goldbeter_bound_is_supremum() {
        let p = GoldbeterParams::reference();
        let bound = p.repression_slope_bound();
        let sampled = (0..20_000)
            .map(|i| p.repression_slope(i as f64 * 1e-4 * 3.0))
            .fold(0.0_f64, f64::max);
        assert!(sampled <= bound + 1e-12);
        assert!(bound - sampled < 1e-6);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut g = GoodwinParams::reference();
        g.v1 = 0.0;
        assert!(Goodwin::new(g).is_err());
        let mut gb = GoldbeterParams::reference();
        gb.n = 0;
        assert!(Goldbeter::new(gb).is_err());
        assert!(FitzHughNagumo::new(FhnParams { a: 0.0, b: -1.0, c: 1.0 }).is_err());
    }

    #[test]
    fn domains() {
        assert!(StateDomain::NonnegativeOrthant.contains(&[0.0, 1.0]));
        assert!(!StateDomain::NonnegativeOrthant.contains(&[-1e-9, 1.0]));
        let b = StateDomain::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        assert!(b.contains(&[0.5, 1.0]) && !b.contains(&[0.5, 1.1]));
    }
}
