//! Semidefinite feasibility problems.
//!
//! A problem is a registry of scalar decision variables (matrix variables are
//! views onto their upper-triangular coordinates), a list of affine symmetric
//! matrix inequalities and a list of affine scalar constraints. Solving goes
//! through an [`SdpBackend`]; every feasible answer is re-checked by
//! [`verify_solution`] before it is reported.

mod ipm;
mod sdpa;
mod verify;

use std::collections::BTreeMap;
use std::time::Duration;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};

pub use ipm::InteriorPoint;
pub use sdpa::write_sdpa;
pub use verify::{verify_solution, ConstraintMargin, VerificationReport};

/// Index of a scalar coordinate in the flat variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScalarId(pub(crate) usize);

impl ScalarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixId(usize);

#[derive(Debug, Clone)]
pub struct MatrixVar {
    pub name: String,
    pub dim: usize,
    offset: usize,
}

impl MatrixVar {
    /// Flat coordinate of entry `(i, j)` (either triangle).
    pub fn coord(&self, i: usize, j: usize) -> ScalarId {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        ScalarId(self.offset + upper_index(self.dim, i, j))
    }

    pub fn n_coords(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    // rows 0..i of the upper triangle hold i*n - i(i-1)/2 entries
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

#[derive(Debug, Clone)]
pub struct ScalarVar {
    pub name: String,
}

/// Orientation of a matrix inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// `F(x) ⪰ δI`
    PsdGe,
    /// `F(x) ⪯ −δI`
    NsdLe,
}

/// `F(x) = F₀ + Σ x_k F_k` with symmetric coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    dim: usize,
    pub(crate) constant: DMatrix<f64>,
    pub(crate) terms: BTreeMap<usize, DMatrix<f64>>,
}

impl AffineExpr {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            constant: DMatrix::zeros(dim, dim),
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_constant(&mut self, m: &DMatrix<f64>) -> Result<&mut Self> {
        self.check_shape(m)?;
        self.constant += sym(m);
        Ok(self)
    }

    /// Adds `x_id · M` (M is symmetrized).
    pub fn add_scalar(&mut self, id: ScalarId, m: &DMatrix<f64>) -> Result<&mut Self> {
        self.check_shape(m)?;
        self.accumulate(id.0, sym(m));
        Ok(self)
    }

    /// Adds `leftᵀ X right + rightᵀ X left` for the matrix variable `X`.
    pub fn add_sym_product(
        &mut self,
        var: &MatrixVar,
        left: &DMatrix<f64>,
        right: &DMatrix<f64>,
    ) -> Result<&mut Self> {
        let n = var.dim;
        if left.shape() != (n, self.dim) || right.shape() != (n, self.dim) {
            return Err(dim_err(
                "AffineExpr::add_sym_product",
                format!("{n}x{}", self.dim),
                format!("{:?} / {:?}", left.shape(), right.shape()),
            ));
        }
        for i in 0..n {
            for j in i..n {
                // X = E_ij + E_ji (or E_ii): leftᵀ X right = l_i r_jᵀ + l_j r_iᵀ
                let li = left.row(i).transpose();
                let rj = right.row(j);
                let mut m = &li * &rj;
                if i != j {
                    let lj = left.row(j).transpose();
                    let ri = right.row(i);
                    m += &lj * &ri;
                }
                let full = &m + m.transpose();
                self.accumulate(var.coord(i, j).0, full);
            }
        }
        Ok(self)
    }

    /// Adds `Tᵀ X T`.
    pub fn add_congruence(&mut self, var: &MatrixVar, t: &DMatrix<f64>) -> Result<&mut Self> {
        let half = t * 0.5;
        self.add_sym_product(var, t, &half)
    }

    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (k, m) in &self.terms {
            let v = x[*k];
            if v != 0.0 {
                out += m * v;
            }
        }
        out
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().copied()
    }

    fn accumulate(&mut self, k: usize, m: DMatrix<f64>) {
        if m.iter().all(|v| *v == 0.0) {
            return;
        }
        self.terms
            .entry(k)
            .and_modify(|e| *e += &m)
            .or_insert(m);
    }

    fn check_shape(&self, m: &DMatrix<f64>) -> Result<()> {
        if m.shape() != (self.dim, self.dim) {
            return Err(dim_err("AffineExpr term", format!("{0}x{0}", self.dim), format!("{:?}", m.shape())));
        }
        Ok(())
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Debug, Clone)]
pub struct LmiConstraint {
    pub name: String,
    pub expr: AffineExpr,
    pub sense: Sense,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearKind {
    /// `aᵀx + b ≥ δ`
    Ge,
    /// `aᵀx + b ≤ −δ`
    Le,
    /// `aᵀx + b = 0`
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub name: String,
    pub coeffs: Vec<(ScalarId, f64)>,
    pub constant: f64,
    pub kind: LinearKind,
    pub margin: f64,
}

impl LinearConstraint {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|(id, a)| a * x[id.0]).sum::<f64>()
    }
}

/// Decision-variable registry plus constraints.
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    vars: Vec<ScalarVar>,
    matrices: Vec<MatrixVar>,
    pub(crate) lmis: Vec<LmiConstraint>,
    pub(crate) linear: Vec<LinearConstraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_name(&self, id: ScalarId) -> &str {
        &self.vars[id.0].name
    }

    pub fn lmis(&self) -> &[LmiConstraint] {
        &self.lmis
    }

    pub fn linear(&self) -> &[LinearConstraint] {
        &self.linear
    }

    pub fn scalar(&mut self, name: impl Into<String>) -> ScalarId {
        self.vars.push(ScalarVar { name: name.into() });
        ScalarId(self.vars.len() - 1)
    }

    /// Scalar with `x ≥ lower`.
    pub fn scalar_at_least(&mut self, name: impl Into<String>, lower: f64) -> ScalarId {
        let name = name.into();
        let id = self.scalar(name.clone());
        self.linear.push(LinearConstraint {
            name: format!("{name} >= {lower}"),
            coeffs: vec![(id, 1.0)],
            constant: -lower,
            kind: LinearKind::Ge,
            margin: 0.0,
        });
        id
    }

    pub fn matrix(&mut self, name: impl Into<String>, dim: usize) -> MatrixId {
        let name = name.into();
        let offset = self.vars.len();
        for i in 0..dim {
            for j in i..dim {
                self.vars.push(ScalarVar {
                    name: format!("{name}[{i},{j}]"),
                });
            }
        }
        self.matrices.push(MatrixVar { name, dim, offset });
        MatrixId(self.matrices.len() - 1)
    }

    /// Matrix variable constrained to `X ⪰ margin·I`.
    pub fn matrix_psd(&mut self, name: impl Into<String>, dim: usize, margin: f64) -> Result<MatrixId> {
        let name = name.into();
        let id = self.matrix(name.clone(), dim);
        let var = self.matrix_var(id).clone();
        let mut expr = AffineExpr::zeros(dim);
        expr.add_congruence(&var, &DMatrix::identity(dim, dim))?;
        self.add_lmi(format!("{name} psd"), expr, Sense::PsdGe, margin)?;
        Ok(id)
    }

    pub fn matrix_var(&self, id: MatrixId) -> &MatrixVar {
        &self.matrices[id.0]
    }

    pub fn add_lmi(&mut self, name: impl Into<String>, expr: AffineExpr, sense: Sense, margin: f64) -> Result<()> {
        if margin < 0.0 || !margin.is_finite() {
            return Err(Error::InvalidParameter(format!("strictness margin must be >= 0, got {margin}")));
        }
        if let Some(k) = expr.variables().find(|k| *k >= self.vars.len()) {
            return Err(Error::InvalidParameter(format!("LMI references undeclared variable #{k}")));
        }
        self.lmis.push(LmiConstraint {
            name: name.into(),
            expr,
            sense,
            margin,
        });
        Ok(())
    }

    pub fn add_linear(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(ScalarId, f64)>,
        constant: f64,
        kind: LinearKind,
        margin: f64,
    ) -> Result<()> {
        if let Some((id, _)) = coeffs.iter().find(|(id, _)| id.0 >= self.vars.len()) {
            return Err(Error::InvalidParameter(format!("linear constraint references undeclared variable #{}", id.0)));
        }
        self.linear.push(LinearConstraint {
            name: name.into(),
            coeffs,
            constant,
            kind,
            margin,
        });
        Ok(())
    }

    /// Pins `x = value`.
    pub fn fix(&mut self, id: ScalarId, value: f64) -> Result<()> {
        let name = format!("{} = {value}", self.vars[id.0].name);
        self.add_linear(name, vec![(id, 1.0)], -value, LinearKind::Eq, 0.0)
    }
}

/// Values for every scalar coordinate of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
}

impl Assignment {
    pub fn get(&self, id: ScalarId) -> f64 {
        self.values[id.0]
    }

    pub fn matrix(&self, problem: &SdpProblem, id: MatrixId) -> DMatrix<f64> {
        let var = problem.matrix_var(id);
        DMatrix::from_fn(var.dim, var.dim, |i, j| self.values[var.coord(i, j).0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    Inconclusive,
}

#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub iterations: usize,
    pub elapsed: Duration,
    /// Best common slack found by the backend (positive means strictly feasible).
    pub slack: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    pub assignment: Option<Assignment>,
    pub max_violation: f64,
    pub report: Option<VerificationReport>,
    pub stats: SolverStats,
    pub diagnostic: Option<String>,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Absolute eigenvalue tolerance for independent verification.
    pub verify_tol: f64,
    /// Bound on every decision coordinate, `|x_k| ≤ box_bound`.
    pub box_bound: f64,
    pub max_iterations: usize,
    /// Relative accuracy of the interior-point iteration.
    pub accuracy: f64,
    /// Demand a strictly positive common slack before reporting feasibility.
    ///
    /// Needed for homogeneous problems, where the zero point passes the
    /// absolute check; problems whose feasible set has no interior must turn
    /// it off and rely on verification alone.
    pub require_interior: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            verify_tol: 1e-7,
            box_bound: 1e4,
            max_iterations: 120,
            accuracy: 1e-9,
            require_interior: true,
        }
    }
}

/// A conic backend: takes a problem, returns a raw candidate.
pub trait SdpBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve_raw(&self, problem: &SdpProblem, opts: &SolverOptions) -> RawSolution;
}

/// What a backend reports before verification.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub values: Option<Vec<f64>>,
    /// Certified upper bound on the common slack, when available.
    pub slack_upper: Option<f64>,
    pub slack: f64,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostic: Option<String>,
}

/// Solves with the built-in interior-point backend.
pub fn solve_feasibility(problem: &SdpProblem, opts: &SolverOptions) -> FeasibilityResult {
    solve_with(&InteriorPoint, problem, opts)
}

pub fn solve_with(backend: &dyn SdpBackend, problem: &SdpProblem, opts: &SolverOptions) -> FeasibilityResult {
    let start = std::time::Instant::now();
    let raw = backend.solve_raw(problem, opts);
    let mut stats = SolverStats {
        iterations: raw.iterations,
        elapsed: Duration::ZERO,
        slack: raw.slack,
    };
    let mut result = FeasibilityResult {
        status: FeasibilityStatus::Inconclusive,
        assignment: None,
        max_violation: f64::INFINITY,
        report: None,
        stats: stats.clone(),
        diagnostic: raw.diagnostic.clone(),
    };
    if let Some(values) = raw.values {
        let assignment = Assignment { values };
        let report = verify_solution(problem, &assignment, opts.verify_tol);
        result.max_violation = report.max_violation;
        if report.passed && (raw.slack > 0.0 || !opts.require_interior) {
            result.status = FeasibilityStatus::Feasible;
            result.assignment = Some(assignment);
        } else if raw.slack_upper.is_some_and(|u| u < -opts.verify_tol) || (raw.converged && raw.slack < -opts.verify_tol) {
            result.status = FeasibilityStatus::Infeasible;
        }
        result.report = Some(report);
    } else if raw.slack_upper.is_some_and(|u| u < -opts.verify_tol) {
        result.status = FeasibilityStatus::Infeasible;
    }
    stats.elapsed = start.elapsed();
    result.stats = stats;
    result
}
