//! Run configuration, read from and echoed back as TOML.

use std::path::Path;

use rdcert::envelope::{
    fhn_envelope, goldbeter_envelope, goodwin_envelope, lure_envelope, BoxTerm, Envelope,
    FhnParams, FitzHughNagumo, Goldbeter, GoldbeterParams, Goodwin, GoodwinParams, Grouping,
    Linear, Lure, ReactionModel,
};
use rdcert::sdpfeas::{Normalization, SolveOptions};
use rdcert::spectral::{parse_edge_list, DomainSpec, Graph};
use rdcert::{Mat, Structure};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<SpatialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    /// Results appended by a previous run; ignored on input.
    #[serde(default, skip_serializing)]
    pub report: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Goodwin {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v3: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k3: Option<f64>,
    },
    Goldbeter {
        #[serde(default)]
        grouping: GroupingName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vs: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ki: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ks: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vm: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vd: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kd: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        km: Option<f64>,
    },
    Fhn {
        #[serde(default)]
        a: f64,
        b: f64,
        c: f64,
    },
    Lure {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        gamma: f64,
    },
    Linear {
        a: Vec<Vec<f64>>,
    },
    /// Explicit envelope; certification only.
    Envelope {
        a0: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        terms: Vec<TermConfig>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        hull: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        cone: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupingName {
    #[default]
    Grouped,
    Overparameterized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    #[serde(default)]
    pub label: String,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub diagonal_nonpositive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// Diagonal of D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    /// Full D, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    /// Explicit λ₂, e.g. a lower bound for a domain without a closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectangle: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub directed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Vertex,
    Composite,
    Secant,
    Othmer,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Vertex => "vertex",
            MethodName::Composite => "composite",
            MethodName::Secant => "secant",
            MethodName::Othmer => "othmer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StructureName {
    Full,
    Diagonal,
}

impl From<StructureName> for Structure {
    fn from(s: StructureName) -> Self {
        match s {
            StructureName::Full => Structure::Full,
            StructureName::Diagonal => Structure::Diagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<MethodName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureName>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feas_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_fraction: Option<f64>,
    /// `"unit-trace"` or `"identity"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Run both P structures.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub both_structures: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// `"split"` or `"rk4"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepper: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitConfig>,
    /// Report file from `certify` whose P is tracked as a Lyapunov function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub with_state: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitConfig {
    Uniform {
        value: Vec<f64>,
    },
    Cosine {
        base: Vec<f64>,
        amplitude: Vec<f64>,
        #[serde(default = "one")]
        mode: usize,
    },
    Random {
        lo: Vec<f64>,
        hi: Vec<f64>,
        seed: u64,
    },
    Explicit {
        /// One row per cell or node.
        states: Vec<Vec<f64>>,
    },
}

fn one() -> usize {
    1
}

pub fn parse(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| format!("config error: {e}"))
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Mat, String> {
    Mat::from_rows(rows).map_err(|e| format!("{what}: {e}"))
}

/// Where λ₂ came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Lambda2Source {
    Override,
    Domain(DomainSpec),
    Graph(Graph),
}

impl Lambda2Source {
    pub fn describe(&self) -> String {
        match self {
            Lambda2Source::Override => "user override (a lower bound suffices)".into(),
            Lambda2Source::Domain(DomainSpec::Interval { length }) => {
                format!("computed: interval of length {length}")
            }
            Lambda2Source::Domain(DomainSpec::Rectangle { lx, ly }) => {
                format!("computed: rectangle {lx} x {ly}")
            }
            Lambda2Source::Graph(g) => format!(
                "computed: {} graph on {} nodes",
                if g.is_directed() { "directed" } else { "undirected" },
                g.n_nodes()
            ),
        }
    }
}

impl RunConfig {
    pub fn goodwin_params(&self) -> Option<GoodwinParams> {
        match &self.model {
            ModelConfig::Goodwin { a1, a2, b1, b2, v1, v3, k1, k3 } => {
                let r = GoodwinParams::reference();
                Some(GoodwinParams {
                    a1: a1.unwrap_or(r.a1),
                    a2: a2.unwrap_or(r.a2),
                    b1: b1.unwrap_or(r.b1),
                    b2: b2.unwrap_or(r.b2),
                    v1: v1.unwrap_or(r.v1),
                    v3: v3.unwrap_or(r.v3),
                    k1: k1.unwrap_or(r.k1),
                    k3: k3.unwrap_or(r.k3),
                })
            }
            _ => None,
        }
    }

    pub fn fhn_params(&self) -> Option<FhnParams> {
        match self.model {
            ModelConfig::Fhn { a, b, c } => Some(FhnParams { a, b, c }),
            _ => None,
        }
    }

    fn goldbeter(&self) -> Option<(GoldbeterParams, Grouping)> {
        match &self.model {
            ModelConfig::Goldbeter { grouping, n, vs, ki, ks, k1, k2, v, k, vm, vd, kd, km } => {
                let r = GoldbeterParams::reference();
                let p = GoldbeterParams {
                    n: n.unwrap_or(r.n),
                    vs: vs.unwrap_or(r.vs),
                    ki: ki.unwrap_or(r.ki),
                    ks: ks.unwrap_or(r.ks),
                    k1: k1.unwrap_or(r.k1),
                    k2: k2.unwrap_or(r.k2),
                    v: v.unwrap_or(r.v),
                    k: k.unwrap_or(r.k),
                    vm: vm.unwrap_or(r.vm),
                    vd: vd.unwrap_or(r.vd),
                    kd: kd.unwrap_or(r.kd),
                    km: km.unwrap_or(r.km),
                };
                let g = match grouping {
                    GroupingName::Grouped => Grouping::Grouped,
                    GroupingName::Overparameterized => Grouping::Overparameterized,
                };
                Some((p, g))
            }
            _ => None,
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelConfig::Goodwin { .. } => "goodwin",
            ModelConfig::Goldbeter { .. } => "goldbeter",
            ModelConfig::Fhn { .. } => "fhn",
            ModelConfig::Lure { .. } => "lure",
            ModelConfig::Linear { .. } => "linear",
            ModelConfig::Envelope { .. } => "envelope",
        }
    }

    pub fn envelope(&self) -> Result<Envelope, String> {
        let env = match &self.model {
            ModelConfig::Goodwin { .. } => goodwin_envelope(&self.goodwin_params().unwrap()),
            ModelConfig::Goldbeter { .. } => {
                let (p, g) = self.goldbeter().unwrap();
                goldbeter_envelope(&p, g)
            }
            ModelConfig::Fhn { .. } => fhn_envelope(&self.fhn_params().unwrap()),
            ModelConfig::Lure { a, b, c, gamma } => {
                lure_envelope(&matrix(a, "model.a")?, b, c, *gamma)
            }
            ModelConfig::Linear { a } => Envelope::constant(matrix(a, "model.a")?),
            ModelConfig::Envelope { a0, terms, hull, cone } => {
                let mut box_terms = Vec::new();
                for (k, t) in terms.iter().enumerate() {
                    let label = if t.label.is_empty() { format!("term{k}") } else { t.label.clone() };
                    let mut term = BoxTerm::new(label, t.b.clone(), t.c.clone())
                        .map_err(|e| format!("model.terms[{k}]: {e}"))?;
                    if t.diagonal_nonpositive {
                        term = term
                            .flagged_diagonal()
                            .map_err(|e| format!("model.terms[{k}]: {e}"))?;
                    }
                    box_terms.push(term);
                }
                let mats = |list: &[Vec<Vec<f64>>], what: &str| -> Result<Vec<Mat>, String> {
                    list.iter()
                        .enumerate()
                        .map(|(k, m)| matrix(m, &format!("model.{what}[{k}]")))
                        .collect()
                };
                Envelope::new(matrix(a0, "model.a0")?, box_terms, mats(cone, "cone")?, mats(hull, "hull")?)
            }
        };
        env.map_err(|e| format!("model: {e}"))
    }

    pub fn reaction_model(&self) -> Result<Box<dyn ReactionModel>, String> {
        let m: Box<dyn ReactionModel> = match &self.model {
            ModelConfig::Goodwin { .. } => {
                Box::new(Goodwin::new(self.goodwin_params().unwrap()).map_err(|e| e.to_string())?)
            }
            ModelConfig::Goldbeter { .. } => {
                Box::new(Goldbeter::new(self.goldbeter().unwrap().0).map_err(|e| e.to_string())?)
            }
            ModelConfig::Fhn { .. } => Box::new(
                FitzHughNagumo::new(self.fhn_params().unwrap()).map_err(|e| e.to_string())?,
            ),
            ModelConfig::Lure { a, b, c, gamma } => Box::new(
                Lure::new(matrix(a, "model.a")?, b.clone(), c.clone(), *gamma)
                    .map_err(|e| e.to_string())?,
            ),
            ModelConfig::Linear { a } => {
                Box::new(Linear::new(matrix(a, "model.a")?).map_err(|e| e.to_string())?)
            }
            ModelConfig::Envelope { .. } => {
                return Err("an explicit envelope has no vector field to simulate".into())
            }
        };
        Ok(m)
    }

    pub fn diffusion(&self, n: usize) -> Result<Mat, String> {
        let d = match &self.coupling {
            None => Mat::identity(n),
            Some(CouplingConfig { d: Some(_), matrix: Some(_) }) => {
                return Err("coupling: give either d or matrix, not both".into())
            }
            Some(CouplingConfig { d: Some(d), .. }) => Mat::from_diag(d),
            Some(CouplingConfig { matrix: Some(m), .. }) => matrix(m, "coupling.matrix")?,
            Some(_) => Mat::identity(n),
        };
        if d.rows() != n || d.cols() != n {
            return Err(format!(
                "coupling: D is {}x{} but the model has {n} species",
                d.rows(),
                d.cols()
            ));
        }
        Ok(d)
    }

    pub fn graph(&self) -> Result<Option<Graph>, String> {
        let Some(g) = self.spatial.as_ref().and_then(|s| s.graph.as_ref()) else {
            return Ok(None);
        };
        let sources = [g.edges.is_some(), g.edge_file.is_some(), g.adjacency.is_some()];
        if sources.iter().filter(|b| **b).count() != 1 {
            return Err("spatial.graph: give exactly one of edges, edge_file, adjacency".into());
        }
        let graph = if let Some(edges) = &g.edges {
            let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
            let n = g
                .nodes
                .unwrap_or_else(|| pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
            Graph::from_edges(n, &pairs, g.directed)
        } else if let Some(path) = &g.edge_file {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
            return parse_edge_list(&text, g.nodes, g.directed)
                .map(Some)
                .map_err(|e| format!("{path}: {e}"));
        } else {
            Graph::new(matrix(g.adjacency.as_ref().unwrap(), "spatial.graph.adjacency")?, g.directed)
        };
        graph.map(Some).map_err(|e| format!("spatial.graph: {e}"))
    }

    pub fn domain(&self) -> Result<Option<DomainSpec>, String> {
        let Some(s) = &self.spatial else { return Ok(None) };
        match (s.interval, s.rectangle) {
            (Some(_), Some(_)) => Err("spatial: give either interval or rectangle".into()),
            (Some(length), None) => Ok(Some(DomainSpec::Interval { length })),
            (None, Some([lx, ly])) => Ok(Some(DomainSpec::Rectangle { lx, ly })),
            (None, None) => Ok(None),
        }
    }

    /// Checks that exactly one source of λ₂ is configured.
    pub fn lambda2_source(&self) -> Result<Lambda2Source, String> {
        let s = self.spatial.clone().unwrap_or_default();
        let count = [s.lambda2.is_some(), s.interval.is_some() || s.rectangle.is_some(), s.graph.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        match count {
            0 => Err("spatial: no source for lambda2 (give lambda2, interval, rectangle or graph)".into()),
            1 if s.lambda2.is_some() => Ok(Lambda2Source::Override),
            1 if s.graph.is_some() => Ok(Lambda2Source::Graph(self.graph()?.unwrap())),
            1 => Ok(Lambda2Source::Domain(self.domain()?.unwrap())),
            _ => Err("spatial: give exactly one of lambda2, a domain, or a graph".into()),
        }
    }

    pub fn method(&self) -> MethodName {
        self.method.as_ref().and_then(|m| m.kind).unwrap_or(MethodName::Vertex)
    }

    pub fn structure(&self) -> Option<StructureName> {
        self.method.as_ref().and_then(|m| m.structure)
    }

    pub fn solve_options(&self) -> Result<SolveOptions, String> {
        let mut o = SolveOptions::default();
        if let Some(s) = &self.solver {
            o.margin_tol = s.margin_tol.unwrap_or(o.margin_tol);
            o.max_iters = s.max_iters.unwrap_or(o.max_iters);
            o.gap_tol = s.gap_tol.unwrap_or(o.gap_tol);
            o.feas_tol = s.feas_tol.unwrap_or(o.feas_tol);
            o.step_fraction = s.step_fraction.unwrap_or(o.step_fraction);
            o.normalization = match s.normalization.as_deref() {
                None | Some("unit-trace") => Normalization::UnitTrace,
                Some("identity") => Normalization::IdentityLowerBound {
                    cap_factor: s.cap_factor.unwrap_or(1e3),
                },
                Some(other) => {
                    return Err(format!(
                        "solver.normalization: expected \"unit-trace\" or \"identity\", got {other:?}"
                    ))
                }
            };
        }
        o.validate().map_err(|e| format!("solver: {e}"))?;
        Ok(o)
    }
}
