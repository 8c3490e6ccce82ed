use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sdp::{solve_feasibility, LinearKind, SdpProblem, SolverOptions};

use super::fields::{Interaction, Potential, ScalarField};

/// Equilibrium threshold on `‖∇f(z)‖`.
pub const EQUILIBRIUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Characterization {
    /// `r = 0`: every agent sits at the field minimizer.
    Consensus,
    /// One informed agent `i`: `z_j = y_opt + (r_j − r_i)`.
    SingleInformedOffset,
    /// Quadratic field: the informed agents' centroid is the field minimizer.
    InformedCentroid,
    /// Radially symmetric field: the minimizer lies in the convex hull of the informed agents.
    InformedHull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerCheck {
    pub kind: Characterization,
    pub holds: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerReport {
    pub grad_norm: f64,
    pub checks: Vec<MinimizerCheck>,
}

impl MinimizerReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Checks every characterization that applies to `f` at the equilibrium `z`;
/// `tol` bounds the residual of each.
pub fn minimizer_checks(f: &Potential, z: &DVector<f64>, tol: f64) -> Result<MinimizerReport> {
    if z.len() != f.dim() {
        return Err(crate::error::dim_err("equilibrium", f.dim(), z.len()));
    }
    let grad_norm = f.gradient(z).norm();
    if !(grad_norm <= EQUILIBRIUM_TOL) {
        return Err(Error::Rejected(format!("not an equilibrium: |grad f(z)| = {grad_norm:e}")));
    }
    let d = f.d;
    let block = |i: usize| z.rows(i * d, d).into_owned();
    let mut checks = Vec::new();
    let mut push = |kind, residual: f64| {
        checks.push(MinimizerCheck {
            kind,
            holds: residual <= tol,
            residual,
        })
    };
    let Some(y_opt) = f.field.minimizer() else {
        return Ok(MinimizerReport { grad_norm, checks });
    };

    if let Interaction::LaplacianQuadratic { r, .. } = &f.interaction {
        if r.iter().all(|v| *v == 0.0) {
            let res = (0..f.n_agents).map(|i| (block(i) - &y_opt).norm()).fold(0.0, f64::max);
            push(Characterization::Consensus, res);
        }
        if let [lead] = f.informed.as_slice() {
            let rl = r.rows(lead * d, d);
            let res = (0..f.n_agents)
                .map(|j| (block(j) - &y_opt - (r.rows(j * d, d) - rl)).norm())
                .fold(0.0, f64::max);
            push(Characterization::SingleInformedOffset, res);
        }
    }
    if f.informed.is_empty() {
        return Ok(MinimizerReport { grad_norm, checks });
    }
    match &f.field {
        ScalarField::Quadratic { .. } => {
            let mut c = DVector::zeros(d);
            for &i in &f.informed {
                c += block(i);
            }
            c /= f.informed.len() as f64;
            push(Characterization::InformedCentroid, (c - &y_opt).norm());
        }
        ScalarField::Radial { .. } => {
            let pts: Vec<DVector<f64>> = f.informed.iter().map(|i| block(*i)).collect();
            push(Characterization::InformedHull, hull_distance(&pts, &y_opt)?);
        }
        ScalarField::Zero { .. } => {}
    }
    Ok(MinimizerReport { grad_norm, checks })
}

/// Zero when `target` is a convex combination of `pts` (linear feasibility),
/// otherwise the verification violation of the best candidate.
fn hull_distance(pts: &[DVector<f64>], target: &DVector<f64>) -> Result<f64> {
    let mut lp = SdpProblem::new();
    let w: Vec<_> = (0..pts.len()).map(|i| lp.scalar_at_least(format!("w{i}"), 0.0)).collect();
    lp.add_linear("sum w = 1", w.iter().map(|id| (*id, 1.0)).collect(), -1.0, LinearKind::Eq, 0.0)?;
    for c in 0..target.len() {
        lp.add_linear(
            format!("coordinate {c}"),
            w.iter().zip(pts).map(|(id, p)| (*id, p[c])).collect(),
            -target[c],
            LinearKind::Eq,
            0.0,
        )?;
    }
    let opts = SolverOptions {
        require_interior: false,
        verify_tol: 1e-9,
        ..SolverOptions::default()
    };
    let r = solve_feasibility(&lp, &opts);
    Ok(if r.is_feasible() { 0.0 } else { r.max_violation.max(f64::MIN_POSITIVE) })
}
