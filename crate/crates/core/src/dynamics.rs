//! Simulation of the 1D reaction-diffusion system with zero-flux boundaries
//! and of diffusively coupled networks, plus the diagnostics used to
//! observe spatial uniformity and synchronization.
//!
//! Space is discretized on `m` cells of width `h = L/m` with values at cell
//! centers `ξᵢ = (i + ½)h` and mirror ghost cells, so the discrete
//! Laplacian has zero row and column sums (exact mass conservation) and
//! `cos(kπξ/L)` sampled at the centers are its eigenvectors.
//!
//! Parallel loops only touch disjoint cells, nodes or species; every
//! reduction runs serially in a fixed order, so results do not depend on
//! the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::envelope::ReactionModel;
use crate::error::{Error, Result};
use crate::numerics::{Mat, SymMat};
use crate::spectral::{graph_laplacian, Graph};

/// States with any entry above this magnitude count as diverged.
pub const BLOWUP_LIMIT: f64 = 1e12;
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    length: f64,
    m: usize,
    n: usize,
    /// Cell-major: entry `i·n + s` is species `s` in cell `i`.
    state: Vec<f64>,
}

impl PdeGrid {
    pub fn new(length: f64, m: usize, n: usize, state: Vec<f64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!("domain length must be positive, got {length}")));
        }
        if m < MIN_CELLS {
            return Err(Error::InvalidInput(format!("need at least {MIN_CELLS} cells, got {m}")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("need at least one species".into()));
        }
        if state.len() != m * n {
            return Err(Error::dims(m * n, state.len()));
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("initial state has non-finite entries".into()));
        }
        Ok(PdeGrid {
            length,
            m,
            n,
            state,
        })
    }

    pub fn uniform(length: f64, m: usize, value: &[f64]) -> Result<Self> {
        Self::cosine(length, m, value, &vec![0.0; value.len()], 1)
    }

    /// `base + amplitude · cos(kπξ/L)`, species by species.
    pub fn cosine(length: f64, m: usize, base: &[f64], amplitude: &[f64], k: usize) -> Result<Self> {
        if base.len() != amplitude.len() {
            return Err(Error::dims(base.len(), amplitude.len()));
        }
        let n = base.len();
        let h = length / m as f64;
        let mut state = Vec::with_capacity(m * n);
        for i in 0..m {
            let xi = (i as f64 + 0.5) * h;
            let c = (k as f64 * std::f64::consts::PI * xi / length).cos();
            for s in 0..n {
                state.push(base[s] + amplitude[s] * c);
            }
        }
        Self::new(length, m, n, state)
    }

    /// Independent uniform draws in `[lo_s, hi_s]` per cell and species.
    pub fn random(length: f64, m: usize, lo: &[f64], hi: &[f64], seed: u64) -> Result<Self> {
        let nodes = random_states(m, lo, hi, seed)?;
        Self::new(length, m, lo.len(), nodes.concat())
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn species(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.length / self.m as f64
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.state[i * self.n..(i + 1) * self.n]
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.m).map(|i| (i as f64 + 0.5) * h).collect()
    }
}

/// `count` states with entries uniform in `[lo_s, hi_s]`, from a seeded
/// ChaCha stream.
pub fn random_states(count: usize, lo: &[f64], hi: &[f64], seed: u64) -> Result<Vec<Vec<f64>>> {
    if lo.len() != hi.len() {
        return Err(Error::dims(lo.len(), hi.len()));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
        return Err(Error::InvalidInput("random bounds must satisfy lo <= hi".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            lo.iter()
                .zip(hi)
                .map(|(&l, &h)| if l == h { l } else { rng.gen_range(l..h) })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// Strang splitting: half reaction step (RK4), Crank–Nicolson
    /// diffusion, half reaction step.
    SplitCrankNicolson,
    /// Classical RK4 on the full semi-discrete system.
    ExplicitRk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    /// Defaults to `min(0.01, h)/4` for PDE runs and `0.01` for networks.
    pub dt: Option<f64>,
    pub stepper: Stepper,
    /// Diagnostics are recorded every this many steps (and at the end).
    pub record_every: usize,
    pub workers: usize,
    /// When set, the Lyapunov diagnostic `½ Σ x̃ᵀ P x̃` is recorded.
    pub lyapunov: Option<SymMat>,
    pub keep_snapshots: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            t_end: 1.0,
            dt: None,
            stepper: Stepper::SplitCrankNicolson,
            record_every: 10,
            workers: 1,
            lyapunov: None,
            keep_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    /// Full states at the recorded times, when requested.
    pub snapshots: Vec<Vec<f64>>,
    /// `‖x − x̄‖` in the discrete `L₂` norm (PDE) or Euclidean norm (network).
    pub nonuniformity: Vec<f64>,
    /// Largest pairwise distance between cells or nodes.
    pub sync_error: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub lyapunov: Option<Vec<f64>>,
    pub blew_up: bool,
    /// Some recorded state left the model's declared state domain.
    pub left_domain: bool,
    pub species: usize,
    pub sites: usize,
    /// The state at the last recorded time.
    pub final_state: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Named diagnostic series: `nonuniformity`, `sync_error`, `lyapunov`
    /// or `mean_<s>`.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        match name {
            "nonuniformity" => Some(self.nonuniformity.clone()),
            "sync_error" => Some(self.sync_error.clone()),
            "lyapunov" => self.lyapunov.clone(),
            other => {
                let s: usize = other.strip_prefix("mean_")?.parse().ok()?;
                (s < self.species).then(|| self.means.iter().map(|m| m[s]).collect())
            }
        }
    }

    /// CSV with one row per recorded time, 12 significant digits. State
    /// columns are appended when snapshots were kept and `with_state` is set.
    pub fn to_csv(&self, species_names: &[String], with_state: bool) -> String {
        let names: Vec<String> = (0..self.species)
            .map(|s| species_names.get(s).cloned().unwrap_or_else(|| format!("x{s}")))
            .collect();
        let mut header = vec!["t".to_string(), "nonuniformity".into(), "sync_error".into()];
        header.extend(names.iter().map(|n| format!("mean_{n}")));
        if self.lyapunov.is_some() {
            header.push("lyapunov".into());
        }
        let with_state = with_state && self.snapshots.len() == self.times.len();
        if with_state {
            for i in 0..self.sites {
                header.extend(names.iter().map(|n| format!("{n}_{i}")));
            }
        }
        let fmt = |v: f64| format!("{v:.11e}");
        let mut out = header.join(",");
        out.push('\n');
        for (k, &t) in self.times.iter().enumerate() {
            let mut row = vec![fmt(t), fmt(self.nonuniformity[k]), fmt(self.sync_error[k])];
            row.extend(self.means[k].iter().map(|&v| fmt(v)));
            if let Some(v) = &self.lyapunov {
                row.push(fmt(v[k]));
            }
            if with_state {
                row.extend(self.snapshots[k].iter().map(|&v| fmt(v)));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

struct Recorder<'a> {
    trace: Trace,
    weight: f64,
    p: Option<&'a SymMat>,
    keep: bool,
}

impl<'a> Recorder<'a> {
    fn new(species: usize, sites: usize, weight: f64, opts: &'a SimOptions) -> Self {
        Recorder {
            trace: Trace {
                times: Vec::new(),
                snapshots: Vec::new(),
                nonuniformity: Vec::new(),
                sync_error: Vec::new(),
                means: Vec::new(),
                lyapunov: opts.lyapunov.as_ref().map(|_| Vec::new()),
                blew_up: false,
                left_domain: false,
                species,
                sites,
                final_state: Vec::new(),
            },
            weight,
            p: opts.lyapunov.as_ref(),
            keep: opts.keep_snapshots,
        }
    }

    fn record(&mut self, t: f64, x: &[f64], model: &dyn ReactionModel) {
        let n = self.trace.species;
        let sites = self.trace.sites;
        let mut mean = vec![0.0; n];
        for i in 0..sites {
            for s in 0..n {
                mean[s] += x[i * n + s];
            }
        }
        for v in &mut mean {
            *v /= sites as f64;
        }
        let mut sq = 0.0;
        let mut v_sum = 0.0;
        let mut dev = vec![0.0; n];
        let domain = model.state_domain();
        for i in 0..sites {
            let cell = &x[i * n..(i + 1) * n];
            for s in 0..n {
                dev[s] = cell[s] - mean[s];
                sq += dev[s] * dev[s];
            }
            if let Some(p) = self.p {
                v_sum += p.quad_form(&dev);
            }
            if !domain.contains(cell) {
                self.trace.left_domain = true;
            }
        }
        let mut sync: f64 = 0.0;
        for i in 0..sites {
            for j in i + 1..sites {
                let mut d2 = 0.0;
                for s in 0..n {
                    let d = x[i * n + s] - x[j * n + s];
                    d2 += d * d;
                }
                sync = sync.max(d2);
            }
        }
        self.trace.times.push(t);
        self.trace.nonuniformity.push((self.weight * sq).sqrt());
        self.trace.sync_error.push(sync.sqrt());
        self.trace.means.push(mean);
        if let Some(v) = &mut self.trace.lyapunov {
            v.push(0.5 * self.weight * v_sum);
        }
        if self.keep {
            self.trace.snapshots.push(x.to_vec());
        }
    }

    fn finish(mut self, x: &[f64]) -> Trace {
        self.trace.final_state = x.to_vec();
        self.trace
    }
}

fn diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !(v.abs() <= BLOWUP_LIMIT))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidInput("worker count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn step_count(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidInput(format!("t_end must be nonnegative, got {t_end}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let steps = (t_end / dt).ceil().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    Ok((steps, dt))
}

/// One classical RK4 step of `ẋ = f(x)` for a single cell, in place.
fn rk4_reaction(model: &dyn ReactionModel, x: &mut [f64], dt: f64, k: &mut [Vec<f64>; 5]) {
    let n = x.len();
    let [k1, k2, k3, k4, tmp] = k;
    model.rhs(x, k1);
    for s in 0..n {
        tmp[s] = x[s] + 0.5 * dt * k1[s];
    }
    model.rhs(tmp, k2);
    for s in 0..n {
        tmp[s] = x[s] + 0.5 * dt * k2[s];
    }
    model.rhs(tmp, k3);
    for s in 0..n {
        tmp[s] = x[s] + dt * k3[s];
    }
    model.rhs(tmp, k4);
    for s in 0..n {
        x[s] += dt / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
    }
}

fn scratch(n: usize) -> [Vec<f64>; 5] {
    std::array::from_fn(|_| vec![0.0; n])
}

fn reaction_substep(model: &dyn ReactionModel, x: &mut [f64], n: usize, dt: f64) {
    x.par_chunks_mut(n)
        .for_each_init(|| scratch(n), |k, cell| rk4_reaction(model, cell, dt, k));
}

/// Solves `(I + rT) y = (I − rT) x` for the Neumann second-difference
/// pattern `T` (rows `[1, −1]`, `[−1, 2, −1]`, `[−1, 1]`).
fn crank_nicolson_column(x: &[f64], r: f64) -> Vec<f64> {
    let m = x.len();
    let diag = |i: usize| if i == 0 || i == m - 1 { 1.0 } else { 2.0 };
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let mut t = diag(i) * x[i];
        if i > 0 {
            t -= x[i - 1];
        }
        if i + 1 < m {
            t -= x[i + 1];
        }
        rhs[i] = x[i] - r * t;
    }
    // Thomas algorithm; sub- and super-diagonals are −r
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let b0 = 1.0 + r * diag(0);
    c[0] = -r / b0;
    d[0] = rhs[0] / b0;
    for i in 1..m {
        let denom = 1.0 + r * diag(i) + r * c[i - 1];
        c[i] = -r / denom;
        d[i] = (rhs[i] + r * d[i - 1]) / denom;
    }
    let mut y = vec![0.0; m];
    y[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        y[i] = d[i] - c[i] * y[i + 1];
    }
    y
}

fn diffusion_substep(x: &mut [f64], m: usize, n: usize, d: &[f64], h: f64, dt: f64) {
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let col: Vec<f64> = (0..m).map(|i| x[i * n + s]).collect();
            if d[s] == 0.0 {
                col
            } else {
                crank_nicolson_column(&col, 0.5 * dt * d[s] / (h * h))
            }
        })
        .collect();
    for (s, col) in columns.iter().enumerate() {
        for i in 0..m {
            x[i * n + s] = col[i];
        }
    }
}

/// `f(xᵢ) + dₛ(Δₕx)ᵢ` for every cell.
fn pde_rhs(model: &dyn ReactionModel, x: &[f64], out: &mut [f64], m: usize, n: usize, d: &[f64], h: f64) {
    let inv_h2 = 1.0 / (h * h);
    out.par_chunks_mut(n).enumerate().for_each(|(i, o)| {
        let cell = &x[i * n..(i + 1) * n];
        model.rhs(cell, o);
        for s in 0..n {
            let left = if i > 0 { x[(i - 1) * n + s] } else { cell[s] };
            let right = if i + 1 < m { x[(i + 1) * n + s] } else { cell[s] };
            o[s] += d[s] * inv_h2 * (left - 2.0 * cell[s] + right);
        }
    });
}

fn rk4_system(
    x: &mut [f64],
    dt: f64,
    stages: &mut [Vec<f64>; 5],
    rhs: &dyn Fn(&[f64], &mut [f64]),
) {
    let len = x.len();
    let [k1, k2, k3, k4, tmp] = stages;
    rhs(x, k1);
    for j in 0..len {
        tmp[j] = x[j] + 0.5 * dt * k1[j];
    }
    rhs(tmp, k2);
    for j in 0..len {
        tmp[j] = x[j] + 0.5 * dt * k2[j];
    }
    rhs(tmp, k3);
    for j in 0..len {
        tmp[j] = x[j] + dt * k3[j];
    }
    rhs(tmp, k4);
    for j in 0..len {
        x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
}

fn diffusion_diagonal(d: &Mat, n: usize) -> Result<Vec<f64>> {
    if d.rows() != n || d.cols() != n {
        return Err(Error::dims(format!("{n}x{n} diffusion"), format!("{}x{}", d.rows(), d.cols())));
    }
    if !d.is_diagonal() || d.diagonal().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(
            "PDE simulation needs a diagonal nonnegative diffusion matrix".into(),
        ));
    }
    Ok(d.diagonal())
}

fn check_lyapunov(opts: &SimOptions, n: usize) -> Result<()> {
    match &opts.lyapunov {
        Some(p) if p.dim() != n => Err(Error::dims(n, p.dim())),
        _ if opts.record_every == 0 => Err(Error::InvalidInput("record_every must be positive".into())),
        _ => Ok(()),
    }
}

/// Integrates `∂x/∂t = f(x) + D ∂²x/∂ξ²` on `[0, L]` with zero-flux ends.
pub fn simulate_pde(
    model: &dyn ReactionModel,
    d: &Mat,
    grid: &PdeGrid,
    opts: &SimOptions,
) -> Result<Trace> {
    let n = grid.n;
    if model.dim() != n {
        return Err(Error::dims(model.dim(), n));
    }
    let dvec = diffusion_diagonal(d, n)?;
    check_lyapunov(opts, n)?;
    let h = grid.h();
    let m = grid.m;
    let dt = opts.dt.unwrap_or(0.01_f64.min(h) / 4.0);
    let (steps, dt) = step_count(opts.t_end, dt)?;
    let dmax = dvec.iter().cloned().fold(0.0, f64::max);
    if opts.stepper == Stepper::ExplicitRk4 && dmax > 0.0 && dt > h * h / (2.0 * dmax) {
        return Err(Error::InvalidInput(format!(
            "explicit stepping needs dt <= h^2/(2 max d) = {:.3e}, got {dt:.3e}",
            h * h / (2.0 * dmax)
        )));
    }
    let pool = pool(opts.workers)?;
    let mut x = grid.state.clone();
    let mut rec = Recorder::new(n, m, h, opts);
    rec.record(0.0, &x, model);
    pool.install(|| {
        let mut stages = scratch(m * n);
        for step in 1..=steps {
            match opts.stepper {
                Stepper::SplitCrankNicolson => {
                    reaction_substep(model, &mut x, n, 0.5 * dt);
                    diffusion_substep(&mut x, m, n, &dvec, h, dt);
                    reaction_substep(model, &mut x, n, 0.5 * dt);
                }
                Stepper::ExplicitRk4 => {
                    let rhs = |y: &[f64], out: &mut [f64]| pde_rhs(model, y, out, m, n, &dvec, h);
                    rk4_system(&mut x, dt, &mut stages, &rhs);
                }
            }
            let t = step as f64 * dt;
            if diverged(&x) {
                rec.record(t, &x, model);
                rec.trace.blew_up = true;
                break;
            }
            if step % opts.record_every == 0 || step == steps {
                rec.record(t, &x, model);
            }
        }
    });
    Ok(rec.finish(&x))
}

/// Integrates `ẋᵏ = f(xᵏ) − Σⱼ Lₖⱼ D xʲ` with RK4, where `L` is the graph
/// Laplacian (directed graphs allowed). `opts.stepper` is ignored.
pub fn simulate_network(
    model: &dyn ReactionModel,
    d: &Mat,
    g: &Graph,
    init: &[Vec<f64>],
    opts: &SimOptions,
) -> Result<Trace> {
    let n = model.dim();
    let nodes = g.n_nodes();
    if init.len() != nodes {
        return Err(Error::dims(format!("{nodes} initial states"), init.len()));
    }
    if let Some(bad) = init.iter().find(|v| v.len() != n) {
        return Err(Error::dims(n, bad.len()));
    }
    if d.rows() != n || d.cols() != n {
        return Err(Error::dims(format!("{n}x{n} coupling"), format!("{}x{}", d.rows(), d.cols())));
    }
    d.check_finite()?;
    check_lyapunov(opts, n)?;
    let (steps, dt) = step_count(opts.t_end, opts.dt.unwrap_or(0.01))?;
    let lap = graph_laplacian(g);
    let pool = pool(opts.workers)?;
    let mut x: Vec<f64> = init.concat();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state has non-finite entries".into()));
    }
    let mut rec = Recorder::new(n, nodes, 1.0, opts);
    rec.record(0.0, &x, model);
    let rhs = |y: &[f64], out: &mut [f64]| {
        out.par_chunks_mut(n).enumerate().for_each(|(k, o)| {
            model.rhs(&y[k * n..(k + 1) * n], o);
            let mut c = vec![0.0; n];
            for j in 0..nodes {
                let l = lap[(k, j)];
                if l != 0.0 {
                    for s in 0..n {
                        c[s] += l * y[j * n + s];
                    }
                }
            }
            let dc = d.mat_vec(&c);
            for s in 0..n {
                o[s] -= dc[s];
            }
        });
    };
    pool.install(|| {
        let mut stages = scratch(nodes * n);
        for step in 1..=steps {
            rk4_system(&mut x, dt, &mut stages, &rhs);
            let t = step as f64 * dt;
            if diverged(&x) {
                rec.record(t, &x, model);
                rec.trace.blew_up = true;
                break;
            }
            if step % opts.record_every == 0 || step == steps {
                rec.record(t, &x, model);
            }
        }
    });
    Ok(rec.finish(&x))
}

/// Cosine-mode coefficients `σₖ`, `k = 1..K`, of a sampled field; mode 1 is
/// the spatial mean and mode `k` has profile `cos((k−1)πξ/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoeffs {
    pub sigmas: Vec<Vec<f64>>,
}

impl ModalCoeffs {
    /// Projects a cell-major state onto the first `k_max` modes.
    pub fn project(state: &[f64], length: f64, m: usize, n: usize, k_max: usize) -> Self {
        let h = length / m as f64;
        let sigmas = (0..k_max)
            .map(|k| {
                let mut acc = vec![0.0; n];
                for i in 0..m {
                    let xi = (i as f64 + 0.5) * h;
                    let phi = (k as f64 * std::f64::consts::PI * xi / length).cos();
                    for s in 0..n {
                        acc[s] += phi * state[i * n + s];
                    }
                }
                let norm = if k == 0 { m as f64 } else { 0.5 * m as f64 };
                acc.iter().map(|v| v / norm).collect()
            })
            .collect();
        ModalCoeffs { sigmas }
    }
}

/// `(kπ/L)²` for `k = 0..K−1`: the Neumann eigenvalues paired with
/// [`ModalCoeffs`] modes `1..K`.
pub fn interval_eigenvalues(length: f64, k_max: usize) -> Vec<f64> {
    (0..k_max)
        .map(|k| (k as f64 * std::f64::consts::PI / length).powi(2))
        .collect()
}

/// Integrates `σ̇ₖ = (A − λₖD)σₖ` independently per mode with RK4 at step
/// `dt/10` up to time `t`.
pub fn modal_oracle(
    a: &Mat,
    d: &Mat,
    lambdas: &[f64],
    sigma0: &[Vec<f64>],
    t: f64,
    dt: f64,
) -> Result<ModalCoeffs> {
    let n = a.rows();
    if !a.is_square() || d.rows() != n || d.cols() != n {
        return Err(Error::dims(format!("{n}x{n}"), format!("{}x{}", d.rows(), d.cols())));
    }
    if lambdas.len() != sigma0.len() {
        return Err(Error::dims(lambdas.len(), sigma0.len()));
    }
    let (steps, h) = step_count(t, dt / 10.0)?;
    let sigmas = lambdas
        .iter()
        .zip(sigma0)
        .map(|(&lam, s0)| {
            if s0.len() != n {
                return Err(Error::dims(n, s0.len()));
            }
            let m = a - &d.scale(lam);
            let mut x = s0.clone();
            let mut stages = scratch(n);
            let rhs = |y: &[f64], out: &mut [f64]| out.copy_from_slice(&m.mat_vec(y));
            for _ in 0..steps {
                rk4_system(&mut x, h, &mut stages, &rhs);
            }
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModalCoeffs { sigmas })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Slope of `log(value)` against `t`; negative means decay.
    pub rate: f64,
    pub r_squared: f64,
    /// Window actually used.
    pub window: (f64, f64),
    pub points: usize,
    /// The window was cut short at the first nonpositive value.
    pub shrunk: bool,
}

/// Least-squares fit of `log(values)` against `times` over `window`.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::dims(times.len(), values.len()));
    }
    let mut pts = Vec::new();
    let mut shrunk = false;
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0 && v.is_finite()) {
            shrunk = true;
            break;
        }
        pts.push((t, v.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two positive samples in [{}, {}]",
            window.0, window.1
        )));
    }
    let k = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("window contains a single time".into()));
    }
    let rate = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit {
        rate,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
        shrunk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::Linear;

    fn heat_run(workers: usize) -> Trace {
        let grid = PdeGrid::cosine(std::f64::consts::PI, 64, &[1.0], &[1.0], 1).unwrap();
        let opts = SimOptions {
            t_end: 1.0,
            dt: Some(0.01),
            record_every: 10,
            workers,
            ..SimOptions::default()
        };
        simulate_pde(&Linear::zero(1), &Mat::identity(1), &grid, &opts).unwrap()
    }

    #[test]
    fn heat_mode_decays_at_the_discrete_rate() {
        let tr = heat_run(1);
        let h = std::f64::consts::PI / 64.0;
        let lam = 4.0 / (h * h) * (h / 2.0).sin().powi(2);
        // CN amplification per step
        let g = (1.0 - 0.005 * lam) / (1.0 + 0.005 * lam);
        let expected = tr.nonuniformity[0] * g.powi(100);
        let last = *tr.nonuniformity.last().unwrap();
        assert!((last - expected).abs() < 1e-12 * expected);
        assert!((tr.means.last().unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        assert_eq!(heat_run(1), heat_run(3));
    }

    #[test]
    fn crank_nicolson_conserves_mass() {
        let x: Vec<f64> = (0..20).map(|i| ((i * 7) % 5) as f64).collect();
        let y = crank_nicolson_column(&x, 3.7);
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        assert!((sx - sy).abs() < 1e-12 * sx);
    }

    #[test]
    fn explicit_stepper_checks_stability() {
        let grid = PdeGrid::uniform(1.0, 16, &[1.0]).unwrap();
        let opts = SimOptions {
            dt: Some(0.1),
            stepper: Stepper::ExplicitRk4,
            ..SimOptions::default()
        };
        assert!(simulate_pde(&Linear::zero(1), &Mat::identity(1), &grid, &opts).is_err());
    }

    #[test]
    fn blow_up_is_flagged() {
        let grid = PdeGrid::uniform(1.0, 8, &[1.0]).unwrap();
        let model = Linear::new(Mat::from_rows(&[[50.0]]).unwrap()).unwrap();
        let opts = SimOptions {
            t_end: 10.0,
            dt: Some(0.01),
            ..SimOptions::default()
        };
        let tr = simulate_pde(&model, &Mat::identity(1), &grid, &opts).unwrap();
        assert!(tr.blew_up);
        assert!(*tr.times.last().unwrap() < 10.0);
    }

    #[test]
    fn oracle_trivial_cases() {
        let r = modal_oracle(
            &Mat::zeros(2, 2),
            &Mat::identity(2),
            &[1.0],
            &[vec![1.0, 0.0]],
            1.0,
            0.01,
        )
        .unwrap();
        assert!((r.sigmas[0][0] - (-1.0f64).exp()).abs() < 1e-12);
        let r = modal_oracle(&Mat::identity(1).scale(-1.0), &Mat::identity(1), &[0.0], &[vec![2.0]], 2.0, 0.01)
            .unwrap();
        assert!((r.sigmas[0][0] - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn projection_recovers_modes() {
        let grid = PdeGrid::cosine(2.0, 32, &[0.3, -1.0], &[0.7, 0.2], 2).unwrap();
        let c = ModalCoeffs::project(grid.state(), 2.0, 32, 2, 4);
        assert!((c.sigmas[0][0] - 0.3).abs() < 1e-14);
        assert!((c.sigmas[2][0] - 0.7).abs() < 1e-14);
        assert!((c.sigmas[2][1] - 0.2).abs() < 1e-14);
        assert!(c.sigmas[1][0].abs() < 1e-14 && c.sigmas[3][1].abs() < 1e-14);
    }

    #[test]
    fn decay_fit_exact_exponential() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-t).exp()).collect();
        let f = fit_decay_rate(&t, &v, (0.0, 10.0)).unwrap();
        assert!((f.rate + 1.0).abs() < 1e-6);
        assert!(f.r_squared > 0.9999);
        let mut w = v.clone();
        w[50] = 0.0;
        let f = fit_decay_rate(&t, &w, (0.0, 10.0)).unwrap();
        assert!(f.shrunk && f.points == 50);
    }

    #[test]
    fn network_identical_states_stay_synchronized() {
        let g = Graph::path(4);
        let model = crate::envelope::FitzHughNagumo::new(crate::envelope::FhnParams {
            a: 0.3,
            b: 1.0,
            c: 2.0,
        })
        .unwrap();
        let init = vec![vec![0.5, -0.2]; 4];
        let opts = SimOptions {
            t_end: 5.0,
            ..SimOptions::default()
        };
        let tr = simulate_network(&model, &Mat::from_diag(&[3.0, 1.0]), &g, &init, &opts).unwrap();
        assert!(tr.sync_error.iter().all(|&e| e < 1e-12));
        let single = Graph::from_edges(1, &[], false).unwrap();
        let tr = simulate_network(&model, &Mat::identity(2), &single, &init[..1], &opts).unwrap();
        assert!(tr.sync_error.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn csv_layout() {
        let tr = heat_run(1);
        let csv = tr.to_csv(&["u".into()], false);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,nonuniformity,sync_error,mean_u");
        let first = lines.next().unwrap();
        assert!(first.starts_with("0.00000000000e0,"), "{first}");
        assert_eq!(csv.lines().count(), tr.len() + 1);
    }
}
