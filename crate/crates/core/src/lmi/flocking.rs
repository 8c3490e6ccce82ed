use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, Error, Result};
use crate::sdp::{AffineExpr, Assignment, LinearKind, MatrixId, ScalarId, SdpProblem, Sense, SolverOptions};
use crate::ss::{check_tracking_assumption, StateSpace};

use super::LmiOptions;

/// Single-agent vehicle with its second-order reference pre-filter.
///
/// `ẋ = A x + B_q q + B_p p`, `y = C x`, `q̇ = p`, `ṗ = −k_d p − k_p u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockingModel {
    pub a: DMatrix<f64>,
    pub b_q: DMatrix<f64>,
    pub b_p: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub k_p: f64,
    pub k_d: f64,
    pub d: usize,
    /// Quadratic constraint on `[y − y*; ∇f(y)]`.
    pub m10: DMatrix<f64>,
    /// Quadratic constraint on `[x − y; ∇f(x) − ∇f(y)]`.
    pub m20: DMatrix<f64>,
    pub c1: f64,
    pub c2: f64,
}

impl FlockingModel {
    /// First-order lag `ẋ = −x + q` with `y = x`, and `M = diag(L², −1)` for both constraints.
    pub fn first_order_lag(d: usize, k_p: f64, k_d: f64, lipschitz: f64) -> Self {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![lipschitz * lipschitz, -1.0]));
        Self {
            a: -DMatrix::identity(d, d),
            b_q: DMatrix::identity(d, d),
            b_p: DMatrix::zeros(d, d),
            c: DMatrix::identity(d, d),
            k_p,
            k_d,
            d,
            m10: m.clone(),
            m20: m,
            c1: 1.0,
            c2: 1.0,
        }
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = (self.nx(), self.d);
        if d == 0 {
            return Err(Error::InvalidParameter("spatial dimension must be positive".into()));
        }
        if self.a.shape() != (n, n) {
            return Err(dim_err("vehicle A", "square", format!("{:?}", self.a.shape())));
        }
        for (name, m, shape) in [
            ("vehicle B_q", &self.b_q, (n, d)),
            ("vehicle B_p", &self.b_p, (n, d)),
            ("vehicle C", &self.c, (d, n)),
        ] {
            if m.shape() != shape {
                return Err(dim_err(name, format!("{shape:?}"), format!("{:?}", m.shape())));
            }
        }
        for (name, m) in [("M10", &self.m10), ("M20", &self.m20)] {
            if m.shape() != (2, 2) {
                return Err(dim_err(name, "2x2", format!("{:?}", m.shape())));
            }
            if (m - m.transpose()).amax() > 1e-12 {
                return Err(Error::InvalidParameter(format!("{name} must be symmetric")));
            }
        }
        if !(self.k_p > 0.0) || !(self.k_d >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pre-filter gains need k_p > 0 and k_d >= 0, got k_p = {}, k_d = {}",
                self.k_p, self.k_d
            )));
        }
        let check = check_tracking_assumption(&self.a, &self.b_q, &self.c);
        if check.residual.is_none() {
            return Err(Error::Singular("vehicle A".into()));
        }
        if !check.holds {
            return Err(Error::InvalidParameter(format!(
                "tracking assumption fails: {}",
                check.reason.unwrap_or_default()
            )));
        }
        Ok(())
    }

    /// Closed single-agent channel over `[x; q; p]` from `u` to `y = C x`.
    pub fn agent_system(&self) -> Result<StateSpace> {
        let (n, d) = (self.nx(), self.d);
        let (a0, _) = self.dynamics();
        let mut b = DMatrix::zeros(n + 2 * d, d);
        for i in 0..d {
            b[(n + d + i, i)] = -self.k_p;
        }
        let mut c = DMatrix::zeros(d, n + 2 * d);
        c.view_mut((0, 0), (d, n)).copy_from(&self.c);
        StateSpace::new(a0, b, c, DMatrix::zeros(d, d))
    }

    /// `[x₀; C x₀; 0]`: the pre-filter starts at the vehicle output, at rest.
    pub fn initial_state(&self, x0: &DVector<f64>) -> Result<DVector<f64>> {
        let (n, d) = (self.nx(), self.d);
        if x0.len() != n {
            return Err(dim_err("vehicle initial state", n, x0.len()));
        }
        let mut eta = DVector::zeros(n + 2 * d);
        eta.rows_mut(0, n).copy_from(x0);
        eta.rows_mut(n, d).copy_from(&(&self.c * x0));
        Ok(eta)
    }

    /// `T = [I, A⁻¹B_q, 0]`, so that `TᵀQT` is the `Q`-part of the storage matrix.
    fn lift(&self) -> Result<DMatrix<f64>> {
        let (n, d) = (self.nx(), self.d);
        let ainv_bq = self
            .a
            .clone()
            .lu()
            .solve(&self.b_q)
            .ok_or_else(|| Error::Singular("vehicle A".into()))?;
        let mut t = DMatrix::zeros(n, n + 2 * d);
        t.view_mut((0, 0), (n, n)).fill_with_identity();
        t.view_mut((0, n), (n, d)).copy_from(&ainv_bq);
        Ok(t)
    }

    /// `(𝒜₀, ℬ₀)` over the state `[x; q; p]` and inputs `[d₁; d₂]`.
    fn dynamics(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (n, d) = (self.nx(), self.d);
        let ne = n + 2 * d;
        let mut a0 = DMatrix::zeros(ne, ne);
        a0.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a0.view_mut((0, n), (n, d)).copy_from(&self.b_q);
        a0.view_mut((0, n + d), (n, d)).copy_from(&self.b_p);
        for i in 0..d {
            a0[(n + i, n + d + i)] = 1.0;
            a0[(n + d + i, n + d + i)] = -self.k_d;
        }
        let mut b0 = DMatrix::zeros(ne, 2 * d);
        for i in 0..d {
            b0[(n + d + i, i)] = -self.k_p;
            b0[(n + d + i, d + i)] = self.k_p;
        }
        (a0, b0)
    }
}

/// The flocking LMI with handles to its variables.
#[derive(Debug, Clone)]
pub struct FlockingLmi {
    pub problem: SdpProblem,
    pub model: FlockingModel,
    pub r: MatrixId,
    pub q: MatrixId,
    pub mu: ScalarId,
    pub eps: ScalarId,
    pub lambda1: ScalarId,
    pub lambda2: ScalarId,
    z_index: usize,
}

/// Extracted values of a feasible flocking certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockingSolution {
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Storage matrix `R + TᵀQT + diag(0, 0, I)`.
    pub x0: DMatrix<f64>,
    pub mu: f64,
    pub eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl FlockingLmi {
    /// The dissipation inequality has no interior, so feasibility rests on
    /// verification of the returned point.
    pub fn solver_options() -> SolverOptions {
        SolverOptions {
            require_interior: false,
            ..SolverOptions::default()
        }
    }

    pub fn solution(&self, a: &Assignment) -> Result<FlockingSolution> {
        let r = a.matrix(&self.problem, self.r);
        let q = a.matrix(&self.problem, self.q);
        let t = self.model.lift()?;
        let mut x0 = &r + t.transpose() * &q * &t;
        let (n, d) = (self.model.nx(), self.model.d);
        for i in 0..d {
            x0[(n + d + i, n + d + i)] += 1.0;
        }
        Ok(FlockingSolution {
            r,
            q,
            x0,
            mu: a.get(self.mu),
            eps: a.get(self.eps),
            lambda1: a.get(self.lambda1),
            lambda2: a.get(self.lambda2),
        })
    }

    /// The dissipation matrix evaluated at an assignment.
    pub fn z_matrix(&self, a: &Assignment) -> DMatrix<f64> {
        self.problem.lmis()[self.z_index].expr.evaluate(&a.values)
    }
}

/// Builds the flocking dissipation LMI over the block state `(x, q, p, d₁, d₂)`.
pub fn assemble_flocking_lmi(model: &FlockingModel, opts: &LmiOptions) -> Result<FlockingLmi> {
    model.validate()?;
    let (n, d) = (model.nx(), model.d);
    let ne = n + 2 * d;
    let dim = ne + 2 * d;
    let (a0, b0) = model.dynamics();
    let t = model.lift()?;

    let mut problem = SdpProblem::new();
    let r = problem.matrix_psd("R", ne, 0.0)?;
    let q = problem.matrix_psd("Q", n, opts.delta)?;
    let mu = problem.scalar("mu");
    let eps = problem.scalar("eps");
    let lambda1 = problem.scalar("lambda1");
    let lambda2 = problem.scalar("lambda2");
    for (id, floor) in [(mu, opts.delta), (eps, opts.delta), (lambda1, 0.0), (lambda2, 0.0)] {
        let name = format!("{} >= {floor}", problem.var_name(id));
        problem.add_linear(name, vec![(id, 1.0)], 0.0, LinearKind::Ge, floor)?;
    }

    let mut left = DMatrix::zeros(ne, dim);
    left.view_mut((0, 0), (ne, ne)).fill_with_identity();
    let mut right = DMatrix::zeros(ne, dim);
    right.view_mut((0, 0), (ne, ne)).copy_from(&a0);
    right.view_mut((0, ne), (ne, 2 * d)).copy_from(&b0);

    let mut z = AffineExpr::zeros(dim);
    let r_var = problem.matrix_var(r).clone();
    let q_var = problem.matrix_var(q).clone();
    z.add_sym_product(&r_var, &left, &right)?;
    z.add_sym_product(&q_var, &(&t * &left), &(&t * &right))?;
    // constant identity block of the storage matrix on p
    let mut e_p = DMatrix::zeros(ne, ne);
    for i in 0..d {
        e_p[(n + d + i, n + d + i)] = 1.0;
    }
    let fixed = left.transpose() * &e_p * &right;
    z.add_constant(&(&fixed + fixed.transpose()))?;

    let p_at = n + d;
    let d1_at = ne;
    let d2_at = ne + d;
    let mut eps_blk = DMatrix::zeros(dim, dim);
    let mut mu_blk = DMatrix::zeros(dim, dim);
    for i in 0..d {
        eps_blk[(p_at + i, p_at + i)] = 1.0;
        mu_blk[(p_at + i, d1_at + i)] = 1.0;
        mu_blk[(d1_at + i, p_at + i)] = 1.0;
    }
    z.add_scalar(eps, &eps_blk)?;
    z.add_scalar(mu, &mu_blk)?;

    let id_d = DMatrix::<f64>::identity(d, d);
    let mut s1 = DMatrix::zeros(2 * d, dim);
    let mut s2 = DMatrix::zeros(2 * d, dim);
    for i in 0..d {
        s1[(i, n + i)] = 1.0;
        s1[(d + i, d1_at + i)] = 1.0;
        s2[(i, n + i)] = 1.0;
        s2[(d + i, d2_at + i)] = 1.0;
    }
    s2.view_mut((0, 0), (d, n)).copy_from(&(-&model.c));
    z.add_scalar(lambda1, &(s1.transpose() * model.m10.kronecker(&id_d) * &s1))?;
    z.add_scalar(lambda2, &(s2.transpose() * model.m20.kronecker(&id_d) * &s2))?;

    // non-strict: along the equilibrium manifold 𝒜₀v = 0, so the constraint
    // can only hold on a face of the cone
    problem.add_lmi("dissipation", z, Sense::NsdLe, 0.0)?;
    let z_index = problem.lmis().len() - 1;

    Ok(FlockingLmi {
        problem,
        model: model.clone(),
        r,
        q,
        mu,
        eps,
        lambda1,
        lambda2,
        z_index,
    })
}

/// `V_s = Σ_agents (η̄ − η̄*)ᵀ X₀ (η̄ − η̄*) + 2μ (f(q) − f_min)`.
///
/// `x`, `q`, `p` and `y_star` stack the agents; `x* = −A⁻¹B_q y*` and `p* = 0`.
#[allow(clippy::too_many_arguments)]
pub fn storage_value(
    model: &FlockingModel,
    sol: &FlockingSolution,
    x: &DVector<f64>,
    q: &DVector<f64>,
    p: &DVector<f64>,
    y_star: &DVector<f64>,
    f_gap: f64,
) -> Result<f64> {
    let (n, d) = (model.nx(), model.d);
    if q.len() % d != 0 || q.is_empty() {
        return Err(dim_err("storage_value q", format!("multiple of {d}"), q.len()));
    }
    let agents = q.len() / d;
    if x.len() != agents * n || p.len() != agents * d || y_star.len() != agents * d {
        return Err(dim_err(
            "storage_value state",
            format!("{agents} agents"),
            format!("x {}, p {}, y* {}", x.len(), p.len(), y_star.len()),
        ));
    }
    let ainv_bq = model
        .a
        .clone()
        .lu()
        .solve(&model.b_q)
        .ok_or_else(|| Error::Singular("vehicle A".into()))?;
    let mut v = 2.0 * sol.mu * f_gap;
    for i in 0..agents {
        let ys = y_star.rows(i * d, d).into_owned();
        let xs = -(&ainv_bq * &ys);
        let mut e = DVector::zeros(n + 2 * d);
        e.rows_mut(0, n).copy_from(&(x.rows(i * n, n) - xs));
        e.rows_mut(n, d).copy_from(&(q.rows(i * d, d) - &ys));
        e.rows_mut(n + d, d).copy_from(&p.rows(i * d, d));
        v += e.dot(&(&sol.x0 * &e));
    }
    Ok(v)
}

/// Right-hand side of the initial-condition requirement,
/// `min{2 c₁ μ, c₂ λmin(Q) / ‖C‖₂²}`.
pub fn initial_condition_bound(model: &FlockingModel, sol: &FlockingSolution) -> f64 {
    let c_norm = model.c.clone().svd(false, false).singular_values.max();
    let q_min = sol.q.clone().symmetric_eigenvalues().min();
    (2.0 * model.c1 * sol.mu).min(model.c2 * q_min / (c_norm * c_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{solve_feasibility, FeasibilityStatus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn solve(model: &FlockingModel) -> (FlockingLmi, crate::sdp::FeasibilityResult) {
        let lmi = assemble_flocking_lmi(model, &LmiOptions::default()).unwrap();
        let r = solve_feasibility(&lmi.problem, &FlockingLmi::solver_options());
        (lmi, r)
    }

    #[test]
    fn well_damped_lag_is_feasible() {
        let model = FlockingModel::first_order_lag(1, 1.0, 8.0, 3.0);
        let (lmi, r) = solve(&model);
        assert_eq!(r.status, FeasibilityStatus::Feasible, "{:?}", r.diagnostic);
        let a = r.assignment.unwrap();
        assert!(lmi.z_matrix(&a).symmetric_eigenvalues().max() <= 1e-7);
    }

    #[test]
    fn undamped_prefilter_is_not_certified() {
        let model = FlockingModel::first_order_lag(1, 1.0, 0.0, 3.0);
        let (_, r) = solve(&model);
        assert_ne!(r.status, FeasibilityStatus::Feasible);
    }

    #[test]
    fn multipliers_are_needed() {
        let model = FlockingModel::first_order_lag(1, 1.0, 8.0, 3.0);
        let mut lmi = assemble_flocking_lmi(&model, &LmiOptions::default()).unwrap();
        lmi.problem.fix(lmi.lambda1, 0.0).unwrap();
        lmi.problem.fix(lmi.lambda2, 0.0).unwrap();
        let r = solve_feasibility(&lmi.problem, &FlockingLmi::solver_options());
        assert_ne!(r.status, FeasibilityStatus::Feasible);
    }

    #[test]
    fn model_validation() {
        let mut m = FlockingModel::first_order_lag(2, 1.0, 2.0, 3.0);
        assert!(m.validate().is_ok());
        m.a = DMatrix::zeros(2, 2);
        assert!(matches!(assemble_flocking_lmi(&m, &LmiOptions::default()), Err(Error::Singular(_))));
        let mut m = FlockingModel::first_order_lag(1, 1.0, 2.0, 3.0);
        m.b_q = DMatrix::from_element(1, 1, 2.0);
        assert!(m.validate().is_err());
        let mut m = FlockingModel::first_order_lag(1, 1.0, 2.0, 3.0);
        m.m10[(0, 1)] = 1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn storage_properties() {
        let model = FlockingModel::first_order_lag(2, 1.0, 8.0, 3.0);
        let (lmi, r) = solve(&model);
        let sol = lmi.solution(&r.assignment.unwrap()).unwrap();
        let ys = DVector::from_vec(vec![0.5, -1.0, 2.0, 0.0]);
        // lag with unit DC gain: x* = y*
        let v0 = storage_value(&model, &sol, &ys, &ys, &DVector::zeros(4), &ys, 0.0).unwrap();
        assert!(v0.abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut rv = |k: usize| DVector::from_fn(k, |_, _| rng.gen_range(-5.0..5.0));
            let (x, q, p) = (rv(4), rv(4), rv(4));
            assert!(storage_value(&model, &sol, &x, &q, &p, &ys, 0.0).unwrap() >= -1e-9);
        }

        let base = storage_value(&model, &sol, &ys, &ys, &DVector::zeros(4), &ys, 1.5).unwrap();
        let doubled = FlockingSolution {
            mu: 2.0 * sol.mu,
            ..sol.clone()
        };
        let twice = storage_value(&model, &doubled, &ys, &ys, &DVector::zeros(4), &ys, 1.5).unwrap();
        assert!((twice - 2.0 * base).abs() < 1e-12 * base.abs().max(1.0));
        assert!(initial_condition_bound(&model, &sol) > 0.0);
    }

    #[test]
    fn storage_decreases_along_closed_loop() {
        use crate::sim::{simulate_network, Interaction, Potential, ScalarField, SimOptions};
        let model = FlockingModel::first_order_lag(1, 1.0, 8.0, 3.0);
        let (lmi, r) = solve(&model);
        let sol = lmi.solution(&r.assignment.unwrap()).unwrap();
        let f = Potential::new(
            2,
            Interaction::LaplacianQuadratic {
                laplacian: DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]),
                r: DVector::from_vec(vec![0.0, 1.0]),
            },
            vec![0],
            ScalarField::isotropic(1.0, DVector::from_vec(vec![1.0])),
        )
        .unwrap();
        let y_star = DVector::from_vec(vec![1.0, 2.0]);
        let f_min = f.value(&y_star);
        let g = model.agent_system().unwrap();
        let mut eta0 = DVector::zeros(6);
        for (i, x) in [-2.0, 4.0].into_iter().enumerate() {
            eta0.rows_mut(3 * i, 3).copy_from(&model.initial_state(&DVector::from_vec(vec![x])).unwrap());
        }
        let traj = simulate_network(&g, 2, &f, &eta0, &SimOptions { dt: 1e-2, t_end: 250.0 }).unwrap();
        let mut prev = f64::INFINITY;
        for eta in &traj.eta {
            let pick = |k: usize| DVector::from_vec(vec![eta[k], eta[3 + k]]);
            let (x, q, p) = (pick(0), pick(1), pick(2));
            let v = storage_value(&model, &sol, &x, &q, &p, &y_star, f.value(&q) - f_min).unwrap();
            assert!(v <= prev + 1e-9 * prev.abs().max(1.0), "storage rose: {prev} -> {v}");
            prev = v;
        }
        let gn = f.gradient(traj.final_output()).norm();
        assert!(gn < 1e-4, "final gradient {gn}");
    }
}
