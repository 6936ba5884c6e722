//! `λ₂` for continuous domains and for graphs.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{Mat, SymMat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            DomainSpec::Interval { length } => ok(length),
            DomainSpec::Rectangle { lx, ly } => ok(lx) && ok(ly),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("domain lengths must be positive: {self:?}")))
        }
    }
}

/// Second Neumann eigenvalue of `−∇²`.
pub fn domain_lambda2(d: &DomainSpec) -> Result<f64> {
    d.validate()?;
    Ok(match *d {
        DomainSpec::Interval { length } => (PI / length).powi(2),
        DomainSpec::Rectangle { lx, ly } => (PI / lx).powi(2).min((PI / ly).powi(2)),
    })
}

/// Cell-centered second-difference matrix on `m` cells of width `h` with
/// mirror ghost cells (zero flux). Eigenvalues `(4/h²) sin²(kπ/2m)`.
pub fn neumann_laplacian_1d(m: usize, h: f64) -> Mat {
    let s = 1.0 / (h * h);
    let mut l = Mat::zeros(m, m);
    for i in 0..m {
        if i > 0 {
            l[(i, i - 1)] = -s;
            l[(i, i)] += s;
        }
        if i + 1 < m {
            l[(i, i + 1)] = -s;
            l[(i, i)] += s;
        }
    }
    l
}

/// Weighted graph without self-loops. `adjacency[(k, j)]` is the weight of
/// the arc along which node `k` is pulled toward node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Mat,
    directed: bool,
}

impl Graph {
    pub fn new(adjacency: Mat, directed: bool) -> Result<Self> {
        if !adjacency.is_square() {
            return Err(Error::dims(
                "square adjacency",
                format!("{}x{}", adjacency.rows(), adjacency.cols()),
            ));
        }
        adjacency.check_finite()?;
        let n = adjacency.rows();
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                if adjacency[(i, j)] < 0.0 {
                    return Err(Error::InvalidInput(format!("negative weight on ({i},{j})")));
                }
                if !directed && adjacency[(i, j)] != adjacency[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "undirected adjacency not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Graph {
            adjacency,
            directed,
        })
    }

    /// Unit-weight graph from `(u, v)` pairs. Undirected edges are added
    /// both ways; repeated edges are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let mut a = Mat::zeros(n, n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!("edge ({u},{v}) outside {n} nodes")));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at node {u}")));
            }
            if a[(u, v)] != 0.0 {
                return Err(Error::InvalidInput(format!("duplicate edge ({u},{v})")));
            }
            a[(u, v)] = 1.0;
            if !directed {
                a[(v, u)] = 1.0;
            }
        }
        Graph::new(a, directed)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges, false).expect("valid path")
    }

    pub fn complete(n: usize) -> Self {
        Graph::new(Mat::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }), false)
            .expect("valid complete graph")
    }

    /// Each node `k` pulled toward `k+1 mod n`.
    pub fn directed_cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|k| (k, (k + 1) % n)).collect();
        Graph::from_edges(n, &edges, true).expect("valid cycle")
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn adjacency(&self) -> &Mat {
        &self.adjacency
    }
}

/// Parses an edge list: one `u v` pair per line, 0-indexed, `#` comments.
/// The node count is `n` if given, otherwise one more than the largest index.
pub fn parse_edge_list(text: &str, n: Option<usize>, directed: bool) -> Result<Graph> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected two node indices, found '{line}'"),
            });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad node index '{s}': {e}"),
            })
        };
        edges.push((parse(fields[0])?, parse(fields[1])?));
    }
    let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    Graph::from_edges(n.unwrap_or(inferred), &edges, directed)
}

/// `L = diag(out-degree) − A`; `L·1 = 0` exactly.
pub fn graph_laplacian(g: &Graph) -> Mat {
    let n = g.n_nodes();
    let a = g.adjacency();
    let mut l = a.scale(-1.0);
    for i in 0..n {
        // zero diagonal, so the row sum of −A is minus the degree
        l[(i, i)] = a.row(i).iter().sum();
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLambda2 {
    pub value: f64,
    /// Set when the graph is disconnected.
    pub warning: Option<String>,
}

/// Second-smallest Laplacian eigenvalue of an undirected graph.
pub fn graph_lambda2(g: &Graph) -> Result<GraphLambda2> {
    if g.is_directed() {
        return Err(Error::InvalidInput(
            "graph_lambda2 needs an undirected graph; use directed_algebraic_connectivity".into(),
        ));
    }
    let n = g.n_nodes();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two nodes".into()));
    }
    let l = SymMat::new(graph_laplacian(g))?;
    let values = l.eig().values;
    let scale = 1.0 + values[n - 1].abs();
    let connected = connected_components(g) == 1;
    let value = if connected { values[1] } else { 0.0 };
    debug_assert!(connected || values[1].abs() <= 1e-10 * scale);
    Ok(GraphLambda2 {
        value,
        warning: (!connected).then(|| {
            "graph is disconnected: lambda2 = 0 and no synchronization certificate applies".into()
        }),
    })
}

fn connected_components(g: &Graph) -> usize {
    let n = g.n_nodes();
    let a = g.adjacency();
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            for j in 0..n {
                if !seen[j] && (a[(k, j)] > 0.0 || a[(j, k)] > 0.0) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

/// Orthonormal basis of `1⊥` (Helmert columns), `n × (n−1)`.
pub fn mean_free_basis(n: usize) -> Mat {
    let mut u = Mat::zeros(n, n.saturating_sub(1));
    for k in 1..n {
        let kf = k as f64;
        let norm = (kf * (kf + 1.0)).sqrt();
        for i in 0..k {
            u[(i, k - 1)] = 1.0 / norm;
        }
        u[(k, k - 1)] = -kf / norm;
    }
    u
}

/// `min yᵀ((L+Lᵀ)/2) y` over unit `y ⊥ 1` for a Laplacian with zero row sums.
pub fn algebraic_connectivity_of(l: &Mat) -> Result<f64> {
    if !l.is_square() {
        return Err(Error::dims("square Laplacian", format!("{}x{}", l.rows(), l.cols())));
    }
    let n = l.rows();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two nodes".into()));
    }
    let scale = 1.0 + l.max_abs();
    for i in 0..n {
        let s: f64 = l.row(i).iter().sum();
        if s.abs() > 1e-12 * scale * n as f64 {
            return Err(Error::InvalidInput(format!("Laplacian row {i} sums to {s}, not zero")));
        }
    }
    let sym = SymMat::symmetrize(l);
    let u = mean_free_basis(n);
    let projected = sym.congruence(&u.transpose())?;
    Ok(projected.min_eig())
}

/// Algebraic connectivity of a directed graph: the largest `λ` with
/// `yᵀ L y ≥ λ yᵀy` for all `y ⊥ 1`.
pub fn directed_algebraic_connectivity(g: &Graph) -> Result<f64> {
    algebraic_connectivity_of(&graph_laplacian(g))
}
