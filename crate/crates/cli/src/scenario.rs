//! JSON scenario files. Matrices are nested arrays of rows.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use iqcrate::certify::{BisectOptions, Channel};
use iqcrate::graph::{self, InteractionGraph, PATH_TO_INFORMED_VIOLATED};
use iqcrate::lmi::FlockingModel;
use iqcrate::sim::{Interaction, LpvChannel, Potential, ScalarField, SimOptions};
use iqcrate::zf::MultiplierClass;
use iqcrate::StateSpace;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub plant: PlantSpec,
    /// Number of identical agents; the rate LMI then uses the lifted network.
    #[serde(default = "one")]
    pub agents: usize,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub multiplier: MultiplierSpec,
    #[serde(default)]
    pub run: RunSpec,
    /// Directory that relative paths inside the file resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSpec {
    StateSpace(Matrices),
    TransferFunction { num: Vec<f64>, den: Vec<f64> },
    Lpv { params: Vec<f64>, vertices: Vec<LtiSpec> },
    Flocking(FlockingSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LtiSpec {
    StateSpace(Matrices),
    TransferFunction { num: Vec<f64>, den: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrices {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    #[serde(default)]
    pub d: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vehicle {
    pub a: Vec<Vec<f64>>,
    pub b_q: Vec<Vec<f64>>,
    pub b_p: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

/// Without `vehicle` the first-order lag `ẋ = −x + q, y = x` is used.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlockingSpec {
    #[serde(default)]
    pub vehicle: Option<Vehicle>,
    #[serde(default = "one")]
    pub d: usize,
    pub k_p: f64,
    pub k_d: f64,
    /// Gives `M₁₀ = M₂₀ = diag(L², −1)` when the matrices are not listed.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub m10: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub m20: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default)]
    pub quadratic: Option<QuadraticSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub hessian: Vec<Vec<f64>>,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// `path`, `star`, `cycle` or `edgeless`.
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub nodes: Option<usize>,
    /// Edge-list file; see the README for the format.
    #[serde(default)]
    pub edge_file: Option<PathBuf>,
    /// 1-based, as in edge files; overrides any `informed:` line.
    #[serde(default)]
    pub informed: Option<Vec<usize>>,
    pub m_psi: f64,
    pub l_psi: f64,
    /// Treat the graph as minimal and bound every extension with this maximum degree.
    #[serde(default)]
    pub d_max: Option<usize>,
    /// Formation offsets `r`, stacked per agent.
    #[serde(default)]
    pub offsets: Option<Vec<f64>>,
    /// Minimizer of the field seen by informed agents.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSpec {
    #[serde(default = "all_classes")]
    pub classes: Vec<String>,
    #[serde(default = "default_nu")]
    pub nu_max: usize,
    #[serde(default = "default_lambda")]
    pub lambda_grid: Vec<f64>,
}

fn all_classes() -> Vec<String> {
    ["cc", "causal", "anticausal", "noncausal"].map(String::from).to_vec()
}

fn default_nu() -> usize {
    1
}

fn default_lambda() -> Vec<f64> {
    vec![1.0]
}

impl Default for MultiplierSpec {
    fn default() -> Self {
        Self {
            classes: all_classes(),
            nu_max: default_nu(),
            lambda_grid: default_lambda(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub bisect_tol: Option<f64>,
    #[serde(default)]
    pub initial_upper: Option<f64>,
    #[serde(default)]
    pub l_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Stacked initial state; drawn from the seed when absent.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    /// LPV scheduling: square wave between the extreme parameters.
    #[serde(default)]
    pub schedule_period: Option<f64>,
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(config_err(format!("matrix `{name}` has rows of different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn lti(m: &Matrices) -> Result<StateSpace, CliError> {
    let a = matrix("a", &m.a)?;
    let b = matrix("b", &m.b)?;
    let c = matrix("c", &m.c)?;
    let d = match &m.d {
        Some(d) => matrix("d", d)?,
        None => DMatrix::zeros(c.nrows(), b.ncols()),
    };
    Ok(StateSpace::new(a, b, c, d)?)
}

impl LtiSpec {
    fn build(&self) -> Result<StateSpace, CliError> {
        match self {
            LtiSpec::StateSpace(m) => lti(m),
            LtiSpec::TransferFunction { num, den } => Ok(StateSpace::from_transfer_function(num, den)?),
        }
    }
}

/// Sector constants `(m, L)` of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub m: f64,
    pub l: f64,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut s: Scenario = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.agents == 0 {
            return Err(config_err("agents must be at least 1"));
        }
        match (&self.field, &self.graph) {
            (Some(f), None) => {
                let direct = f.m.is_some() || f.l.is_some();
                if direct == f.quadratic.is_some() {
                    return Err(config_err("field needs either `m` and `l` or `quadratic`"));
                }
                if direct && (f.m.is_none() || f.l.is_none()) {
                    return Err(config_err("field needs both `m` and `l`"));
                }
            }
            (None, Some(_)) => {}
            _ => return Err(config_err("give exactly one of `field` and `graph`")),
        }
        let s = self.sector()?;
        if !(s.m > 0.0 && s.m <= s.l && s.l.is_finite()) {
            return Err(config_err(format!("sector needs 0 < m <= L, got m = {}, L = {}", s.m, s.l)));
        }
        if self.multiplier.classes.is_empty() {
            return Err(config_err("multiplier.classes is empty"));
        }
        self.classes()?;
        if let PlantSpec::Lpv { params, vertices } = &self.plant {
            if params.len() != vertices.len() {
                return Err(config_err("lpv needs one parameter per vertex"));
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> Result<Vec<MultiplierClass>, CliError> {
        self.multiplier
            .classes
            .iter()
            .map(|c| c.parse::<MultiplierClass>().map_err(|e| config_err(e.to_string())))
            .collect()
    }

    pub fn graph(&self) -> Result<Option<InteractionGraph>, CliError> {
        let Some(g) = &self.graph else { return Ok(None) };
        let mut graph = match (&g.generator, &g.edge_file) {
            (Some(name), None) => {
                let n = g.nodes.ok_or_else(|| config_err("graph.generator needs graph.nodes"))?;
                InteractionGraph::generate(name, n)?
            }
            (None, Some(file)) => {
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
                text.parse::<InteractionGraph>()?
            }
            _ => return Err(config_err("graph needs exactly one of `generator` and `edge_file`")),
        };
        if let Some(inf) = &g.informed {
            let zero_based = inf
                .iter()
                .map(|i| i.checked_sub(1).ok_or_else(|| config_err("informed agents are 1-based")))
                .collect::<Result<Vec<_>, _>>()?;
            graph.set_informed(zero_based)?;
        }
        Ok(Some(graph))
    }

    /// Sector of the (network) potential seen by the channel.
    pub fn sector(&self) -> Result<Sector, CliError> {
        if let Some(f) = &self.field {
            if let (Some(m), Some(l)) = (f.m, f.l) {
                return Ok(Sector { m, l });
            }
            if let Some(q) = &f.quadratic {
                let h = matrix("hessian", &q.hessian)?;
                if !h.is_square() {
                    return Err(config_err("field hessian must be square"));
                }
                let ev = h.symmetric_eigenvalues();
                return Ok(Sector { m: ev.min(), l: ev.max() });
            }
        }
        let spec = self.graph.as_ref().ok_or_else(|| config_err("no field or graph"))?;
        let g = self.graph()?.expect("graph spec present");
        graph_sector(&g, spec.m_psi, spec.l_psi, spec.d_max)
    }

    pub fn is_flocking(&self) -> bool {
        matches!(self.plant, PlantSpec::Flocking(_))
    }

    pub fn channel(&self) -> Result<Channel, CliError> {
        match &self.plant {
            PlantSpec::StateSpace(m) => Ok(self.lti_channel(lti(m)?)),
            PlantSpec::TransferFunction { num, den } => Ok(self.lti_channel(StateSpace::from_transfer_function(num, den)?)),
            PlantSpec::Lpv { vertices, .. } => {
                if self.agents != 1 {
                    return Err(config_err("lpv plants are single-agent"));
                }
                Ok(Channel::Lpv(vertices.iter().map(LtiSpec::build).collect::<Result<_, _>>()?))
            }
            PlantSpec::Flocking(_) => Err(config_err("flocking plants have no rate LMI; use `certify` for the flocking LMI")),
        }
    }

    fn lti_channel(&self, g: StateSpace) -> Channel {
        if self.agents == 1 {
            Channel::Lti(g)
        } else {
            Channel::Network { g, n_agents: self.agents }
        }
    }

    pub fn lpv(&self) -> Result<Option<LpvChannel>, CliError> {
        let PlantSpec::Lpv { params, vertices } = &self.plant else { return Ok(None) };
        let v = vertices.iter().map(LtiSpec::build).collect::<Result<_, _>>()?;
        Ok(Some(LpvChannel::new(params.clone(), v)?))
    }

    pub fn flocking_model(&self) -> Result<Option<FlockingModel>, CliError> {
        let PlantSpec::Flocking(f) = &self.plant else { return Ok(None) };
        let diag = |l: f64| DMatrix::from_diagonal(&DVector::from_vec(vec![l * l, -1.0]));
        let mut model = match &f.vehicle {
            None => {
                let l = f
                    .lipschitz
                    .or_else(|| self.sector().ok().map(|s| s.l))
                    .ok_or_else(|| config_err("flocking needs `lipschitz`"))?;
                FlockingModel::first_order_lag(f.d, f.k_p, f.k_d, l)
            }
            Some(v) => {
                let m = match f.lipschitz {
                    Some(l) => diag(l),
                    None => DMatrix::zeros(2, 2),
                };
                FlockingModel {
                    a: matrix("vehicle.a", &v.a)?,
                    b_q: matrix("vehicle.b_q", &v.b_q)?,
                    b_p: matrix("vehicle.b_p", &v.b_p)?,
                    c: matrix("vehicle.c", &v.c)?,
                    k_p: f.k_p,
                    k_d: f.k_d,
                    d: f.d,
                    m10: m.clone(),
                    m20: m,
                    c1: 1.0,
                    c2: 1.0,
                }
            }
        };
        if let Some(m) = &f.m10 {
            model.m10 = matrix("m10", m)?;
        }
        if let Some(m) = &f.m20 {
            model.m20 = matrix("m20", m)?;
        }
        if f.vehicle.is_some() && f.lipschitz.is_none() && (f.m10.is_none() || f.m20.is_none()) {
            return Err(config_err("flocking vehicle needs `lipschitz` or both `m10` and `m20`"));
        }
        model.c1 = f.c1.unwrap_or(1.0);
        model.c2 = f.c2.unwrap_or(1.0);
        model.validate()?;
        Ok(Some(model))
    }

    /// Output dimension per agent.
    pub fn dim(&self) -> Result<usize, CliError> {
        if let Some(m) = self.flocking_model()? {
            return Ok(m.d);
        }
        Ok(self.channel()?.d())
    }

    pub fn bisect_options(&self) -> Result<BisectOptions, CliError> {
        let mut b = BisectOptions::from_env()?;
        if std::env::var_os("IQCRATE_BISECT_TOL").is_none() {
            if let Some(t) = self.run.bisect_tol {
                b.tol = t;
            }
        }
        if let Some(u) = self.run.initial_upper {
            b.initial_upper = u;
        }
        b.validate()?;
        Ok(b)
    }

    pub fn sim_options(&self) -> SimOptions {
        let mut o = SimOptions::default();
        if let Some(dt) = self.run.dt {
            o.dt = dt;
        }
        if let Some(t) = self.run.t_end {
            o.t_end = t;
        }
        o
    }

    /// The potential driving simulations: the graph potential when a graph is
    /// given, otherwise one field per agent. Direct `m`, `L` draw a quadratic
    /// field with that spectrum from `rng`.
    pub fn potential<R: rand::Rng>(&self, d: usize, rng: &mut R) -> Result<Potential, CliError> {
        if let Some(spec) = &self.graph {
            let g = self.graph()?.expect("graph spec present");
            if g.n() != self.agents {
                return Err(config_err(format!("graph has {} nodes but agents = {}", g.n(), self.agents)));
            }
            let center = spec.center.clone().unwrap_or_else(|| vec![0.0; d]);
            if center.len() != d {
                return Err(config_err(format!("graph.center needs {d} entries")));
            }
            let r = match &spec.offsets {
                Some(r) => DVector::from_vec(r.clone()),
                None => DVector::zeros(g.n() * d),
            };
            let lap = graph::laplacian(&g);
            let field = ScalarField::radial(DVector::from_vec(center), spec.m_psi, spec.l_psi)?;
            return Ok(Potential::new(
                g.n(),
                Interaction::LaplacianQuadratic { laplacian: lap, r },
                g.informed().iter().copied().collect(),
                field,
            )?);
        }
        let f = self.field.as_ref().expect("validated");
        let field = match &f.quadratic {
            Some(q) => {
                if q.center.len() != d {
                    return Err(config_err(format!("field center needs {d} entries")));
                }
                ScalarField::quadratic(matrix("hessian", &q.hessian)?, DVector::from_vec(q.center.clone()))?
            }
            None => ScalarField::random_quadratic(rng, DVector::zeros(d), f.m.unwrap(), f.l.unwrap())?,
        };
        Ok(Potential::new(self.agents, Interaction::None, (0..self.agents).collect(), field)?)
    }
}

/// `(m, L)` for a graph: exact constants, or structural bounds when `d_max` is set.
pub fn graph_sector(g: &InteractionGraph, m_psi: f64, l_psi: f64, d_max: Option<usize>) -> Result<Sector, CliError> {
    let (m, l) = match d_max {
        Some(dm) => graph::structural_bounds(g, dm, m_psi, l_psi)?,
        None => graph::sector_constants(g, m_psi, l_psi)?
            .ok_or_else(|| config_err(PATH_TO_INFORMED_VIOLATED))?,
    };
    Ok(Sector { m, l })
}
