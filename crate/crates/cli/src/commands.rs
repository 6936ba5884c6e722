//! Subcommand implementations. Each returns text for the terminal, a
//! `[report]` table, and an exit code.

use std::fmt::Write as _;
use std::path::Path;

use rdcert::analytic::{
    fhn_certificate, goodwin_cyclic_spec, goodwin_secant_threshold, othmer_check,
    secant_criterion, FhnOutcome,
};
use rdcert::dynamics::{
    fit_decay_rate, random_states, simulate_network, simulate_pde, PdeGrid, SimOptions, Stepper,
    Trace,
};
use rdcert::lmi::{certificate_check, composite_lmi, vertex_lmis, Certificate, LmiProblem};
use rdcert::sdpfeas::{solve_feasibility, threshold_search, SolveOptions, Status};
use rdcert::spectral::{directed_algebraic_connectivity, domain_lambda2, graph_lambda2, Graph};
use rdcert::{Envelope, Mat, Structure, SymMat};
use toml::{Table, Value};

use crate::config::{InitConfig, Lambda2Source, MethodName, RunConfig, StructureName};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub report: Table,
    /// Trace CSV for simulation commands.
    pub csv: Option<String>,
}

fn rows(m: &Mat) -> Value {
    Value::Array(
        m.to_rows()
            .into_iter()
            .map(|r| Value::Array(r.into_iter().map(Value::Float).collect()))
            .collect(),
    )
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

fn fmt_matrix(m: &Mat) -> String {
    let mut s = String::new();
    for r in m.to_rows() {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:>14.6e}")).collect();
        let _ = writeln!(s, "    [{}]", cells.join(" "));
    }
    s
}

struct Lambda2 {
    value: f64,
    source: Lambda2Source,
    warning: Option<String>,
}

fn resolve_lambda2(cfg: &RunConfig) -> Result<Lambda2, String> {
    let source = cfg.lambda2_source()?;
    let (value, warning) = match &source {
        Lambda2Source::Override => {
            let v = cfg.spatial.as_ref().and_then(|s| s.lambda2).unwrap();
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("spatial.lambda2 must be nonnegative, got {v}"));
            }
            (v, None)
        }
        Lambda2Source::Domain(d) => (domain_lambda2(d).map_err(|e| format!("spatial: {e}"))?, None),
        Lambda2Source::Graph(g) => graph_connectivity(g)?,
    };
    Ok(Lambda2 { value, source, warning })
}

fn graph_connectivity(g: &Graph) -> Result<(f64, Option<String>), String> {
    if g.is_directed() {
        let v = directed_algebraic_connectivity(g).map_err(|e| format!("spatial.graph: {e}"))?;
        Ok((v, None))
    } else {
        let r = graph_lambda2(g).map_err(|e| format!("spatial.graph: {e}"))?;
        Ok((r.value, r.warning))
    }
}

fn conclusion(source: &Lambda2Source) -> &'static str {
    match source {
        Lambda2Source::Graph(_) => "synchronization of the diffusively coupled network",
        _ => "spatial uniformity of the reaction-diffusion system",
    }
}

fn build_problem(
    method: MethodName,
    env: &Envelope,
    lambda2: f64,
    d: &Mat,
    structure: Structure,
) -> rdcert::Result<LmiProblem> {
    match method {
        MethodName::Composite => composite_lmi(env, lambda2, d, structure),
        _ => vertex_lmis(env, lambda2, d, structure),
    }
}

fn certificate_table(cert: &Certificate) -> Table {
    let mut t = Table::new();
    t.insert("structure".into(), Value::String(format!("{:?}", cert.structure).to_lowercase()));
    t.insert("p".into(), rows(cert.p.as_mat()));
    if !cert.q.is_empty() {
        t.insert("q".into(), floats(&cert.q));
    }
    t.insert("margin".into(), Value::Float(cert.margin));
    t.insert("epsilon".into(), Value::Float(cert.epsilon));
    t
}

fn diagonal_of(d: &Mat) -> Result<Vec<f64>, String> {
    if !d.is_diagonal() {
        return Err("this method needs a diagonal diffusion matrix".into());
    }
    Ok(d.diagonal())
}

pub fn certify(cfg: &RunConfig) -> Result<Outcome, String> {
    let env = cfg.envelope()?;
    let n = env.dim();
    let d = cfg.diffusion(n)?;
    let l2 = resolve_lambda2(cfg)?;
    let method = cfg.method();
    let mut text = String::new();
    let mut report = Table::new();
    report.insert("command".into(), "certify".into());
    report.insert("method".into(), method.as_str().into());
    report.insert("lambda2".into(), Value::Float(l2.value));
    report.insert("lambda2_source".into(), l2.source.describe().into());
    let _ = writeln!(text, "model: {} (n = {n})", cfg.model_name());
    let _ = writeln!(text, "lambda2 = {:.10} [{}]", l2.value, l2.source.describe());
    if let Some(w) = &l2.warning {
        let _ = writeln!(text, "warning: {w}");
        report.insert("warning".into(), w.clone().into());
    }
    let _ = writeln!(text, "conclusion sought: {}", conclusion(&l2.source));

    let code = match method {
        MethodName::Othmer => {
            let r = othmer_check(&env, l2.value, &d).map_err(|e| e.to_string())?;
            let _ = writeln!(text, "method: norm bound sup ||J|| < lambda2 * min d");
            let _ = writeln!(text, "sup ||J|| = {:.6}, lambda2 * min d = {:.6}", r.sup_norm, r.bound);
            report.insert("sup_norm".into(), Value::Float(r.sup_norm));
            report.insert("bound".into(), Value::Float(r.bound));
            report.insert("status".into(), if r.pass { "feasible" } else { "infeasible" }.into());
            let _ = writeln!(text, "status: {}", if r.pass { "certified" } else { "not certified" });
            if r.pass { EXIT_OK } else { EXIT_INFEASIBLE }
        }
        MethodName::Secant => {
            if cfg.structure() == Some(StructureName::Full) {
                return Err("method secant certifies a diagonal P; use structure = \"diagonal\"".into());
            }
            let p = cfg
                .goodwin_params()
                .ok_or("method secant needs a cyclic composite matrix; only the goodwin model has one")?;
            let dv = diagonal_of(&d)?;
            let mu = [l2.value * dv[0], l2.value * dv[1], l2.value * dv[2]];
            let spec = goodwin_cyclic_spec(&p, mu).map_err(|e| e.to_string())?;
            let r = secant_criterion(&spec).map_err(|e| e.to_string())?;
            let _ = writeln!(text, "method: secant condition on the cyclic composite matrix");
            let _ = writeln!(text, "gain ratio = {:.6}, sec(pi/n)^n = {:.6}", r.ratio, r.threshold);
            report.insert("ratio".into(), Value::Float(r.ratio));
            report.insert("secant_bound".into(), Value::Float(r.threshold));
            report.insert("status".into(), if r.pass { "feasible" } else { "infeasible" }.into());
            let _ = writeln!(text, "status: {}", if r.pass { "certified" } else { "not certified" });
            if r.pass { EXIT_OK } else { EXIT_INFEASIBLE }
        }
        MethodName::Vertex | MethodName::Composite => {
            let structure: Structure = cfg.structure().unwrap_or(StructureName::Full).into();
            report.insert("structure".into(), structure.as_str().into());
            let opts = cfg.solve_options()?;
            let prob = build_problem(method, &env, l2.value, &d, structure).map_err(|e| e.to_string())?;
            let _ = writeln!(
                text,
                "method: {} inequalities, {} P, {} constraints",
                method.as_str(),
                structure.as_str(),
                prob.constraints.len()
            );
            let res = solve_feasibility(&prob, &opts).map_err(|e| e.to_string())?;
            let diag = &res.diagnostics;
            let _ = writeln!(
                text,
                "solver: {} iterations, converged: {}, optimal margin {:.6e}",
                diag.iterations, diag.converged, diag.final_margin
            );
            report.insert("iterations".into(), Value::Integer(diag.iterations as i64));
            report.insert("converged".into(), Value::Boolean(diag.converged));
            report.insert("solver_margin".into(), Value::Float(diag.final_margin));
            report.insert("status".into(), res.status.label().into());
            let code = match &res.status {
                Status::Feasible(cert) => {
                    let check = certificate_check(cert, &prob).map_err(|e| e.to_string())?;
                    let _ = writeln!(text, "status: feasible (independent re-check valid: {})", check.valid);
                    let _ = write!(text, "P =\n{}", fmt_matrix(cert.p.as_mat()));
                    if !cert.q.is_empty() {
                        let _ = writeln!(text, "q = {:?}", cert.q);
                    }
                    let _ = writeln!(text, "margin = {:.6e}, epsilon = {:.6e}", cert.margin, cert.epsilon);
                    report.insert("recheck_valid".into(), Value::Boolean(check.valid));
                    report.insert("certificate".into(), Value::Table(certificate_table(cert)));
                    if let Lambda2Source::Graph(g) = &l2.source {
                        if g.is_directed() {
                            let pd = cert.p.as_mat().matmul(&d).map_err(|e| e.to_string())?;
                            let sym = (&pd - &pd.transpose()).max_abs() <= 1e-12 * (1.0 + pd.max_abs());
                            let _ = writeln!(text, "directed graph: P D symmetric: {sym}");
                            report.insert("pd_symmetric".into(), Value::Boolean(sym));
                        }
                    }
                    if check.valid { EXIT_OK } else { EXIT_ERROR }
                }
                Status::Infeasible { best_margin } => {
                    let _ = writeln!(text, "status: infeasible (best normalized margin {best_margin:.6e})");
                    report.insert("best_margin".into(), Value::Float(*best_margin));
                    EXIT_INFEASIBLE
                }
                Status::Inconclusive { reason } => {
                    let _ = writeln!(text, "status: inconclusive ({reason})");
                    report.insert("reason".into(), reason.clone().into());
                    EXIT_ERROR
                }
            };
            cross_checks(cfg, &d, l2.value, &mut text, &mut report)?;
            code
        }
    };
    Ok(Outcome { code, text, report, csv: None })
}

/// Closed-form side results printed alongside an LMI certification.
fn cross_checks(cfg: &RunConfig, d: &Mat, lambda2: f64, text: &mut String, report: &mut Table) -> Result<(), String> {
    if let (Some(p), true) = (cfg.goodwin_params(), d.is_diagonal()) {
        let dv = d.diagonal();
        let mu = [lambda2 * dv[0], lambda2 * dv[1], lambda2 * dv[2]];
        let r = secant_criterion(&goodwin_cyclic_spec(&p, mu).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let _ = writeln!(
            text,
            "secant condition at the same lambda2: {} (ratio {:.6} vs {:.6})",
            if r.pass { "holds" } else { "fails" },
            r.ratio,
            r.threshold
        );
        report.insert("secant_agrees".into(), Value::Boolean(r.pass));
    }
    if let (Some(p), true) = (cfg.fhn_params(), d.is_diagonal()) {
        let dv = d.diagonal();
        match fhn_certificate(&p, lambda2, [dv[0], dv[1]]) {
            Ok(FhnOutcome::Certified(_)) => {
                let _ = writeln!(text, "explicit P = diag(1/c, c) is admissible");
                report.insert("explicit_fhn_certificate".into(), Value::Boolean(true));
            }
            Ok(FhnOutcome::Refused { reason }) => {
                let _ = writeln!(text, "explicit P = diag(1/c, c) not admissible: {reason}");
                report.insert("explicit_fhn_certificate".into(), Value::Boolean(false));
            }
            Err(e) => {
                let _ = writeln!(text, "explicit FitzHugh-Nagumo certificate unavailable: {e}");
            }
        }
    }
    Ok(())
}

fn lmi_threshold(
    env: &Envelope,
    d: &Mat,
    method: MethodName,
    structure: Structure,
    bracket: (f64, f64),
    tol: f64,
    opts: &SolveOptions,
) -> Result<f64, String> {
    let r = threshold_search(|mu| build_problem(method, env, mu, d, structure), bracket, tol, opts)
        .map_err(|e| e.to_string())?;
    Ok(r.threshold)
}

pub fn threshold(cfg: &RunConfig) -> Result<Outcome, String> {
    let env = cfg.envelope()?;
    let n = env.dim();
    let d = cfg.diffusion(n)?;
    let method = cfg.method();
    let tcfg = cfg.threshold.clone().unwrap_or_default();
    let [lo, hi] = tcfg.bracket.unwrap_or([0.0, 10.0]);
    let tol = tcfg.tol.unwrap_or(1e-5);
    let mut text = String::new();
    let mut report = Table::new();
    report.insert("command".into(), "threshold".into());
    report.insert("method".into(), method.as_str().into());
    let _ = writeln!(text, "model: {} (n = {n}), method: {}", cfg.model_name(), method.as_str());
    let _ = writeln!(text, "searching the smallest lambda2 (multiplying D) that certifies");
    match method {
        MethodName::Othmer => {
            let r = othmer_check(&env, 1.0, &d).map_err(|e| e.to_string())?;
            let t = r.sup_norm / r.bound;
            let _ = writeln!(text, "threshold lambda2 > {t:.6} (sup ||J|| = {:.6})", r.sup_norm);
            report.insert("threshold".into(), Value::Float(t));
        }
        MethodName::Secant => {
            let p = cfg
                .goodwin_params()
                .ok_or("method secant needs a cyclic composite matrix; only the goodwin model has one")?;
            let dv = diagonal_of(&d)?;
            let t = goodwin_secant_threshold(&p, [dv[0], dv[1], dv[2]]).map_err(|e| e.to_string())?;
            let _ = writeln!(text, "threshold lambda2 = {t:.6}");
            report.insert("threshold".into(), Value::Float(t));
        }
        MethodName::Vertex | MethodName::Composite => {
            let opts = cfg.solve_options()?;
            let structures: Vec<StructureName> = if tcfg.both_structures {
                vec![StructureName::Full, StructureName::Diagonal]
            } else {
                vec![cfg.structure().unwrap_or(StructureName::Full)]
            };
            let mut results = Table::new();
            for s in structures {
                let st: Structure = s.into();
                let t = lmi_threshold(&env, &d, method, st, (lo, hi), tol, &opts)?;
                let _ = writeln!(text, "{:>8} P: threshold lambda2 = {t:.6} (bracket [{lo}, {hi}], tol {tol:e})", st.as_str());
                results.insert(st.as_str().into(), Value::Float(t));
            }
            report.insert("threshold".into(), Value::Table(results));
        }
    }
    Ok(Outcome { code: EXIT_OK, text, report, csv: None })
}

pub fn compare(cfg: &RunConfig) -> Result<Outcome, String> {
    let env = cfg.envelope()?;
    let n = env.dim();
    let d = cfg.diffusion(n)?;
    let opts = cfg.solve_options()?;
    let tcfg = cfg.threshold.clone().unwrap_or_default();
    let [lo, hi] = tcfg.bracket.unwrap_or([0.0, 10.0]);
    let tol = tcfg.tol.unwrap_or(1e-5);
    let at = match &cfg.spatial {
        Some(_) => Some(resolve_lambda2(cfg)?.value),
        None => None,
    };

    let mut rows_out: Vec<(String, Result<f64, String>)> = Vec::new();
    let othmer = othmer_check(&env, 1.0, &d).map_err(|e| e.to_string());
    rows_out.push(("norm bound".into(), othmer.map(|r| r.sup_norm / r.bound)));
    if let (Some(p), true) = (cfg.goodwin_params(), d.is_diagonal()) {
        let dv = d.diagonal();
        rows_out.push((
            "secant".into(),
            goodwin_secant_threshold(&p, [dv[0], dv[1], dv[2]]).map_err(|e| e.to_string()),
        ));
    }
    for (method, st) in [
        (MethodName::Vertex, Structure::Full),
        (MethodName::Vertex, Structure::Diagonal),
        (MethodName::Composite, Structure::Full),
        (MethodName::Composite, Structure::Diagonal),
    ] {
        let name = format!("{} LMI, {} P", method.as_str(), st.as_str());
        rows_out.push((name, lmi_threshold(&env, &d, method, st, (lo, hi), tol, &opts)));
    }

    let mut text = String::new();
    let _ = writeln!(text, "model: {} (n = {n}); smallest certifying lambda2 per method", cfg.model_name());
    let mut report = Table::new();
    report.insert("command".into(), "compare".into());
    let mut table = Table::new();
    for (name, r) in &rows_out {
        let key = name.replace([' ', ','], "_").replace("__", "_");
        match r {
            Ok(t) => {
                let verdict = at
                    .map(|l| if l > *t { "  certifies at configured lambda2" } else { "  fails at configured lambda2" })
                    .unwrap_or("");
                let _ = writeln!(text, "  {name:<28} {t:>12.6}{verdict}");
                table.insert(key, Value::Float(*t));
            }
            Err(e) => {
                let _ = writeln!(text, "  {name:<28} {:>12}  ({e})", "n/a");
            }
        }
    }
    if let Some(l) = at {
        report.insert("lambda2".into(), Value::Float(l));
    }
    report.insert("thresholds".into(), Value::Table(table));
    Ok(Outcome { code: EXIT_OK, text, report, csv: None })
}

pub fn spectral(cfg: Option<&RunConfig>, edges: Option<&Path>, directed: bool) -> Result<Outcome, String> {
    let mut text = String::new();
    let mut report = Table::new();
    report.insert("command".into(), "spectral".into());
    let (value, warning, what) = match (edges, cfg) {
        (Some(path), _) => {
            let body = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let g = rdcert::spectral::parse_edge_list(&body, None, directed)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let (v, w) = graph_connectivity(&g)?;
            (v, w, format!("{} graph on {} nodes from {}", if directed { "directed" } else { "undirected" }, g.n_nodes(), path.display()))
        }
        (None, Some(cfg)) => {
            let l2 = resolve_lambda2(cfg)?;
            (l2.value, l2.warning, l2.source.describe())
        }
        (None, None) => return Err("spectral needs --config or --edges".into()),
    };
    let _ = writeln!(text, "lambda2 = {value:.12} [{what}]");
    if let Some(w) = &warning {
        let _ = writeln!(text, "warning: {w}");
        report.insert("warning".into(), w.clone().into());
    }
    report.insert("lambda2".into(), Value::Float(value));
    report.insert("source".into(), what.into());
    Ok(Outcome { code: EXIT_OK, text, report, csv: None })
}

fn sim_options(cfg: &RunConfig, n: usize) -> Result<(SimOptions, Option<Certificate>), String> {
    let s = cfg.simulation.clone().unwrap_or_default();
    let mut o = SimOptions::default();
    o.t_end = s.t_end.unwrap_or(o.t_end);
    o.dt = s.dt;
    o.record_every = s.record_every.unwrap_or(o.record_every);
    o.workers = s.workers.unwrap_or(o.workers);
    o.stepper = match s.stepper.as_deref() {
        None | Some("split") => Stepper::SplitCrankNicolson,
        Some("rk4") => Stepper::ExplicitRk4,
        Some(other) => return Err(format!("simulation.stepper: expected \"split\" or \"rk4\", got {other:?}")),
    };
    let cert = match &s.certificate {
        Some(path) => Some(load_certificate(Path::new(path), n)?),
        None => None,
    };
    o.lyapunov = cert.as_ref().map(|c| c.p.clone());
    Ok((o, cert))
}

/// Reads `[report.certificate]` from a report written by `certify`.
fn load_certificate(path: &Path, n: usize) -> Result<Certificate, String> {
    let body = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc: Table = toml::from_str(&body).map_err(|e| format!("{}: {e}", path.display()))?;
    let cert = doc
        .get("report")
        .and_then(|r| r.get("certificate"))
        .and_then(|c| c.as_table())
        .ok_or_else(|| format!("{}: no [report.certificate] table", path.display()))?;
    let num = |v: &Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
    let p_rows: Vec<Vec<f64>> = cert
        .get("p")
        .and_then(|p| p.as_array())
        .map(|rs| {
            rs.iter()
                .map(|r| r.as_array().map(|xs| xs.iter().filter_map(num).collect()).unwrap_or_default())
                .collect()
        })
        .ok_or_else(|| format!("{}: certificate has no p", path.display()))?;
    let p = SymMat::new(Mat::from_rows(&p_rows).map_err(|e| format!("{}: {e}", path.display()))?)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    if p.dim() != n {
        return Err(format!("{}: certificate is {}x{} but the model has {n} species", path.display(), p.dim(), p.dim()));
    }
    let get = |k: &str| cert.get(k).and_then(num).unwrap_or(0.0);
    Ok(Certificate {
        structure: rdcert::lmi::CertStructure::Full,
        p,
        q: Vec::new(),
        margin: get("margin"),
        epsilon: get("epsilon"),
    })
}

fn seed_note(init: &InitConfig) -> Option<u64> {
    match init {
        InitConfig::Random { seed, .. } => Some(*seed),
        _ => None,
    }
}

fn species_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Fitted decay of `‖π‖` and, with a certificate, of `V` against its bound.
fn decay_summary(tr: &Trace, cert: Option<&Certificate>, text: &mut String, report: &mut Table) {
    let first = tr.nonuniformity[0];
    let last = *tr.nonuniformity.last().unwrap();
    let t_end = *tr.times.last().unwrap();
    let _ = writeln!(text, "nonuniformity: {first:.6e} -> {last:.6e} at t = {t_end}");
    report.insert("nonuniformity_initial".into(), Value::Float(first));
    report.insert("nonuniformity_final".into(), Value::Float(last));
    if let Ok(fit) = fit_decay_rate(&tr.times, &tr.nonuniformity, (0.25 * t_end, t_end)) {
        let _ = writeln!(
            text,
            "fitted nonuniformity rate {:.6e} over [{:.3}, {:.3}] (r^2 = {:.4}{})",
            fit.rate,
            fit.window.0,
            fit.window.1,
            fit.r_squared,
            if fit.shrunk { ", window shortened" } else { "" }
        );
        report.insert("nonuniformity_rate".into(), Value::Float(fit.rate));
    }
    if let (Some(cert), Some(v)) = (cert, tr.lyapunov.as_ref()) {
        let skip = v.len() / 10;
        let floor = 1e-18 * v[0];
        let monotone = v[skip..]
            .iter()
            .take_while(|&&x| x > floor)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| *w[1] <= *w[0] * (1.0 + 1e-9));
        let bound = -cert.epsilon / cert.p.max_eig();
        let fit = fit_decay_rate(&tr.times, v, (tr.times[skip], t_end)).ok();
        let rate_ok = fit.map(|f| f.rate <= bound + 0.05 * bound.abs()).unwrap_or(false);
        let confirmed = monotone && rate_ok && !tr.blew_up;
        let _ = writeln!(
            text,
            "Lyapunov V: nonincreasing after transient: {monotone}; rate {} vs certified bound {bound:.6e}",
            fit.map(|f| format!("{:.6e}", f.rate)).unwrap_or_else(|| "n/a".into())
        );
        let _ = writeln!(text, "{}", if confirmed { "decay confirmed" } else { "decay not confirmed" });
        report.insert("certified_rate_bound".into(), Value::Float(bound));
        if let Some(f) = fit {
            report.insert("lyapunov_rate".into(), Value::Float(f.rate));
        }
        report.insert("decay_confirmed".into(), Value::Boolean(confirmed));
    }
}

fn flags(tr: &Trace, text: &mut String, report: &mut Table) {
    if tr.blew_up {
        let _ = writeln!(text, "warning: solution blew up; the trace stops at t = {}", tr.times.last().unwrap());
    }
    if tr.left_domain {
        let _ = writeln!(text, "note: the state left the model's declared domain during the run");
    }
    report.insert("blew_up".into(), Value::Boolean(tr.blew_up));
    report.insert("left_domain".into(), Value::Boolean(tr.left_domain));
    report.insert("samples".into(), Value::Integer(tr.len() as i64));
}

pub fn simulate_pde_cmd(cfg: &RunConfig) -> Result<Outcome, String> {
    let model = cfg.reaction_model()?;
    let n = model.dim();
    let d = cfg.diffusion(n)?;
    let length = match cfg.domain()? {
        Some(rdcert::DomainSpec::Interval { length }) => length,
        Some(_) => return Err("simulate-pde runs on an interval; set spatial.interval".into()),
        None => return Err("simulate-pde needs spatial.interval".into()),
    };
    let sim = cfg.simulation.clone().unwrap_or_default();
    let m = sim.cells.unwrap_or(128);
    let init = sim.init.clone().ok_or("simulation.init is required")?;
    let grid = match &init {
        InitConfig::Uniform { value } => PdeGrid::uniform(length, m, value),
        InitConfig::Cosine { base, amplitude, mode } => PdeGrid::cosine(length, m, base, amplitude, *mode),
        InitConfig::Random { lo, hi, seed } => PdeGrid::random(length, m, lo, hi, *seed),
        InitConfig::Explicit { states } => {
            if states.len() != m {
                return Err(format!("simulation.init.states has {} rows for {m} cells", states.len()));
            }
            PdeGrid::new(length, m, n, states.concat())
        }
    }
    .map_err(|e| format!("simulation.init: {e}"))?;
    let (opts, cert) = sim_options(cfg, n)?;
    let tr = simulate_pde(model.as_ref(), &d, &grid, &opts).map_err(|e| e.to_string())?;

    let mut text = String::new();
    let mut report = Table::new();
    report.insert("command".into(), "simulate-pde".into());
    let _ = writeln!(text, "model: {}, interval length {length}, {m} cells, {} samples", cfg.model_name(), tr.len());
    if let Some(seed) = seed_note(&init) {
        report.insert("seed".into(), Value::Integer(seed as i64));
    }
    if let Some(mean) = tr.means.last() {
        let _ = writeln!(text, "final spatial mean: {mean:?}");
        report.insert("final_mean".into(), floats(mean));
    }
    decay_summary(&tr, cert.as_ref(), &mut text, &mut report);
    flags(&tr, &mut text, &mut report);
    let csv = tr.to_csv(&species_names(n), sim.with_state);
    Ok(Outcome { code: EXIT_OK, text, report, csv: Some(csv) })
}

pub fn simulate_net_cmd(cfg: &RunConfig) -> Result<Outcome, String> {
    let model = cfg.reaction_model()?;
    let n = model.dim();
    let d = cfg.diffusion(n)?;
    let g = cfg.graph()?.ok_or("simulate-net needs spatial.graph")?;
    let nodes = g.n_nodes();
    let sim = cfg.simulation.clone().unwrap_or_default();
    let init_cfg = sim.init.clone().ok_or("simulation.init is required")?;
    let init = match &init_cfg {
        InitConfig::Uniform { value } => Ok(vec![value.clone(); nodes]),
        InitConfig::Random { lo, hi, seed } => random_states(nodes, lo, hi, *seed).map_err(|e| e.to_string()),
        InitConfig::Explicit { states } => Ok(states.clone()),
        InitConfig::Cosine { .. } => Err("a cosine profile needs a spatial domain; use random or explicit".into()),
    }
    .map_err(|e| format!("simulation.init: {e}"))?;
    let (opts, cert) = sim_options(cfg, n)?;
    let tr = simulate_network(model.as_ref(), &d, &g, &init, &opts).map_err(|e| e.to_string())?;

    let mut text = String::new();
    let mut report = Table::new();
    report.insert("command".into(), "simulate-net".into());
    let _ = writeln!(
        text,
        "model: {}, {} graph on {nodes} nodes, {} samples",
        cfg.model_name(),
        if g.is_directed() { "directed" } else { "undirected" },
        tr.len()
    );
    if let Some(seed) = seed_note(&init_cfg) {
        report.insert("seed".into(), Value::Integer(seed as i64));
    }
    let first = tr.sync_error[0];
    let last = *tr.sync_error.last().unwrap();
    let ratio = if first > 0.0 { last / first } else { 0.0 };
    let _ = writeln!(text, "max pairwise sync error: {first:.6e} -> {last:.6e} (ratio {ratio:.3e})");
    let _ = writeln!(text, "{}", if ratio < 1e-6 { "sync confirmed" } else { "sync not confirmed" });
    report.insert("sync_error_initial".into(), Value::Float(first));
    report.insert("sync_error_final".into(), Value::Float(last));
    report.insert("sync_confirmed".into(), Value::Boolean(ratio < 1e-6));
    decay_summary(&tr, cert.as_ref(), &mut text, &mut report);
    flags(&tr, &mut text, &mut report);
    let csv = tr.to_csv(&species_names(n), sim.with_state);
    Ok(Outcome { code: EXIT_OK, text, report, csv: Some(csv) })
}
