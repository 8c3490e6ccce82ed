use nalgebra::DMatrix;

use super::{Assignment, LinearKind, SdpProblem, Sense};

/// Signed slack of one constraint at a candidate point. Negative means violated.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMargin {
    pub name: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub margins: Vec<ConstraintMargin>,
    pub max_violation: f64,
    pub passed: bool,
}

impl VerificationReport {
    pub fn worst(&self) -> Option<&ConstraintMargin> {
        self.margins
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
    }
}

/// Recomputes every constraint from scratch with a symmetric eigen-solver.
///
/// For `F ⪰ δI` the margin is `λmin(F) − δ`, for `F ⪯ −δI` it is `−λmax(F) − δ`.
/// The check passes when no margin is below `−tol`.
pub fn verify_solution(problem: &SdpProblem, assignment: &Assignment, tol: f64) -> VerificationReport {
    let x = &assignment.values;
    let mut margins = Vec::with_capacity(problem.lmis.len() + problem.linear.len());
    let non_finite = x.len() != problem.n_vars() || x.iter().any(|v| !v.is_finite());

    for c in &problem.lmis {
        let margin = if non_finite {
            f64::NEG_INFINITY
        } else {
            let f = c.expr.evaluate(x);
            let f = (&f + f.transpose()) * 0.5;
            let (lo, hi) = extreme_eigenvalues(&f);
            match c.sense {
                Sense::PsdGe => lo - c.margin,
                Sense::NsdLe => -hi - c.margin,
            }
        };
        margins.push(ConstraintMargin {
            name: c.name.clone(),
            margin,
        });
    }
    for c in &problem.linear {
        let margin = if non_finite {
            f64::NEG_INFINITY
        } else {
            let v = c.value(x);
            match c.kind {
                LinearKind::Ge => v - c.margin,
                LinearKind::Le => -v - c.margin,
                LinearKind::Eq => -v.abs(),
            }
        };
        margins.push(ConstraintMargin {
            name: c.name.clone(),
            margin,
        });
    }
    let max_violation = margins
        .iter()
        .map(|m| (-m.margin).max(0.0))
        .fold(0.0, f64::max);
    VerificationReport {
        passed: max_violation <= tol,
        margins,
        max_violation,
    }
}

fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    let ev = m.clone().symmetric_eigenvalues();
    (ev.min(), ev.max())
}
