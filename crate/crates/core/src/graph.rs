//! Interaction graphs, grounded Laplacians and the network sector constants.

use std::collections::{BTreeSet, VecDeque};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Below this `λmin(ℒ_s)` counts as structurally singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

pub const PATH_TO_INFORMED_VIOLATED: &str = "Assumption path-to-informed violated";

/// Undirected, unweighted graph on nodes `0..n` with a set of informed nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    informed: BTreeSet<usize>,
}

impl InteractionGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, informed: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut g = Self {
            n,
            edges: BTreeSet::new(),
            informed: BTreeSet::new(),
        };
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        g.set_informed(informed)?;
        Ok(g)
    }

    pub fn edgeless(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
            informed: BTreeSet::new(),
        }
    }

    /// Node `0` joined to every other node.
    pub fn star(n: usize) -> Self {
        let mut g = Self::edgeless(n);
        g.edges.extend((1..n).map(|j| (0, j)));
        g
    }

    pub fn path(n: usize) -> Self {
        let mut g = Self::edgeless(n);
        g.edges.extend((1..n).map(|j| (j - 1, j)));
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n >= 3 {
            g.edges.insert((0, n - 1));
        }
        g
    }

    /// Generator by name: `star`, `cycle` or `path`.
    pub fn generate(name: &str, n: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "star" => Ok(Self::star(n)),
            "cycle" => Ok(Self::cycle(n)),
            "path" => Ok(Self::path(n)),
            "edgeless" | "empty" => Ok(Self::edgeless(n)),
            other => Err(Error::InvalidParameter(format!("unknown graph generator `{other}`"))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn informed(&self) -> &BTreeSet<usize> {
        &self.informed
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::InvalidParameter(format!("self-loop at node {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidParameter(format!("edge ({i}, {j}) outside 0..{}", self.n)));
        }
        self.edges.insert((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn set_informed(&mut self, informed: impl IntoIterator<Item = usize>) -> Result<()> {
        let set: BTreeSet<usize> = informed.into_iter().collect();
        if let Some(bad) = set.iter().find(|i| **i >= self.n) {
            return Err(Error::InvalidParameter(format!("informed node {bad} outside 0..{}", self.n)));
        }
        self.informed = set;
        Ok(())
    }

    pub fn with_informed(mut self, informed: impl IntoIterator<Item = usize>) -> Result<Self> {
        self.set_informed(informed)?;
        Ok(self)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == i || *b == i).count()
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0; self.n];
        for (i, j) in &self.edges {
            deg[*i] += 1;
            deg[*j] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Whether every node is connected to some informed node.
    pub fn every_node_reaches_informed(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for (i, j) in &self.edges {
            adj[*i].push(*j);
            adj[*j].push(*i);
        }
        let mut seen = vec![false; self.n];
        let mut queue: VecDeque<usize> = self.informed.iter().copied().collect();
        for i in &self.informed {
            seen[*i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Parses an edge list: one `i j` pair per line (1-based), an
/// `informed: i, j, ...` line and an optional `nodes: N` line. `#` starts a
/// comment. Without `nodes:` the node count is the largest index seen.
impl FromStr for InteractionGraph {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut informed = Vec::new();
        let mut nodes = None;
        let parse_idx = |tok: &str, line: usize| -> Result<usize> {
            let v: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("graph line {line}: `{tok}` is not a node index")))?;
            v.checked_sub(1)
                .ok_or_else(|| Error::InvalidParameter(format!("graph line {line}: node indices start at 1")))
        };
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, rest)) = line.split_once(':') {
                match key.trim().to_ascii_lowercase().as_str() {
                    "informed" => {
                        for tok in rest.split([',', ' ']).filter(|t| !t.trim().is_empty()) {
                            informed.push(parse_idx(tok, k + 1)?);
                        }
                    }
                    "nodes" => {
                        nodes = Some(rest.trim().parse::<usize>().map_err(|_| {
                            Error::InvalidParameter(format!("graph line {}: bad node count", k + 1))
                        })?)
                    }
                    other => {
                        return Err(Error::InvalidParameter(format!("graph line {}: unknown header `{other}`", k + 1)))
                    }
                }
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::InvalidParameter(format!("graph line {}: expected `i j`", k + 1)));
            }
            edges.push((parse_idx(toks[0], k + 1)?, parse_idx(toks[1], k + 1)?));
        }
        let seen = edges
            .iter()
            .flat_map(|(i, j)| [*i, *j])
            .chain(informed.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        let n = nodes.unwrap_or(seen);
        Self::new(n, edges, informed)
    }
}

/// Degree matrix minus adjacency.
pub fn laplacian(g: &InteractionGraph) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(g.n, g.n);
    for (i, j) in g.edges() {
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
    }
    l
}

/// `(ℒ + m_ψ E, ℒ + L_ψ E)` with `E` the indicator of informed nodes.
pub fn grounded_laplacians(g: &InteractionGraph, m_psi: f64, l_psi: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_field_sector(m_psi, l_psi)?;
    let l = laplacian(g);
    let (mut ls, mut lb) = (l.clone(), l);
    for &i in g.informed() {
        ls[(i, i)] += m_psi;
        lb[(i, i)] += l_psi;
    }
    Ok((ls, lb))
}

fn check_field_sector(m_psi: f64, l_psi: f64) -> Result<()> {
    if !(m_psi > 0.0 && m_psi <= l_psi && l_psi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "field sector needs 0 < m_psi <= L_psi, got m_psi = {m_psi}, L_psi = {l_psi}"
        )));
    }
    Ok(())
}

fn eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.is_empty() {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    let e = m.clone().symmetric_eigenvalues();
    (e.min(), e.max())
}

/// `(λmin(ℒ_s), λmax(ℒ_b))`, or `None` when some node has no path to an
/// informed node (then `ℒ_s` is singular).
pub fn sector_constants(g: &InteractionGraph, m_psi: f64, l_psi: f64) -> Result<Option<(f64, f64)>> {
    let (ls, lb) = grounded_laplacians(g, m_psi, l_psi)?;
    let m = eig_range(&ls).0;
    if m <= SINGULAR_THRESHOLD {
        return Ok(None);
    }
    Ok(Some((m, eig_range(&lb).1)))
}

/// Bounds valid for every graph obtained by adding edges to `minimal` while
/// keeping degrees at most `d_max`: `m = λmin(ℒ_m)`, `L = 2 d_max + L_ψ`.
pub fn structural_bounds(minimal: &InteractionGraph, d_max: usize, m_psi: f64, l_psi: f64) -> Result<(f64, f64)> {
    if d_max < minimal.max_degree() {
        return Err(Error::InvalidParameter(format!(
            "d_max = {d_max} is below the minimal graph's maximum degree {}",
            minimal.max_degree()
        )));
    }
    let (lm, _) = grounded_laplacians(minimal, m_psi, l_psi)?;
    let m = eig_range(&lm).0;
    if m <= SINGULAR_THRESHOLD {
        return Err(Error::Rejected(PATH_TO_INFORMED_VIOLATED.into()));
    }
    Ok((m, 2.0 * d_max as f64 + l_psi))
}
