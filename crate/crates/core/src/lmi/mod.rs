//! Assembly of the rate and flocking LMIs as [`SdpProblem`]s.

mod flocking;

use nalgebra::DMatrix;

use crate::error::{dim_err, Error, Result};
use crate::sdp::{AffineExpr, Assignment, LinearKind, MatrixId, ScalarId, SdpProblem, Sense};
use crate::ss::{augment_with_identity, kron_lift, series, StateSpace};
use crate::zf::{build_multiplier, p_basis, MultiplierRealization, PTemplate, PValues, ZfConfig};

pub use flocking::{
    assemble_flocking_lmi, initial_condition_bound, storage_value, FlockingLmi, FlockingModel, FlockingSolution,
};

/// Strictness settings shared by the assembly routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmiOptions {
    /// Margin `δ` in `(·) ⪯ −δI`.
    pub delta: f64,
    /// Lower bound on the storage matrix, `X ⪰ storage_floor·I`.
    ///
    /// The rate LMI is homogeneous in `(X, P)`, so any positive floor describes
    /// the same cone; a unit floor keeps infeasible probes away from the
    /// degenerate point `X = 0`.
    pub storage_floor: f64,
}

impl Default for LmiOptions {
    fn default() -> Self {
        Self {
            delta: 1e-8,
            storage_floor: 1.0,
        }
    }
}

/// A rate LMI together with handles to its decision variables.
#[derive(Debug, Clone)]
pub struct RateLmi {
    pub problem: SdpProblem,
    pub storage: MatrixId,
    pub h: ScalarId,
    pub causal: Vec<ScalarId>,
    pub anticausal: Vec<ScalarId>,
    pub cfg: ZfConfig,
    pub multiplier: MultiplierRealization,
    /// Interconnections `Π ∘ [G; I]`, one per vertex.
    pub loops: Vec<StateSpace>,
}

impl RateLmi {
    /// Forces every kernel coefficient to zero.
    pub fn pin_static(&mut self) -> Result<()> {
        for id in self.causal.clone().into_iter().chain(self.anticausal.clone()) {
            self.problem.fix(id, 0.0)?;
        }
        Ok(())
    }

    pub fn multiplier_values(&self, a: &Assignment) -> PValues {
        PValues {
            h: a.get(self.h),
            causal: self.causal.iter().map(|id| a.get(*id)).collect(),
            anticausal: self.anticausal.iter().map(|id| a.get(*id)).collect(),
        }
    }

    pub fn storage_matrix(&self, a: &Assignment) -> DMatrix<f64> {
        a.matrix(&self.problem, self.storage)
    }
}

/// Rate LMI for one agent channel `G` (`d` inputs and outputs).
pub fn assemble_rate_lmi(
    g: &StateSpace,
    m: f64,
    l: f64,
    d: usize,
    alpha: f64,
    cfg: &ZfConfig,
    opts: &LmiOptions,
) -> Result<RateLmi> {
    check_channel(g, d)?;
    build(std::slice::from_ref(g), m, l, d, alpha, cfg, opts)
}

/// Rate LMI for `N` decoupled copies of `G`, i.e. the network before its
/// interaction is absorbed into the field.
#[allow(clippy::too_many_arguments)]
pub fn assemble_rate_lmi_full(
    g: &StateSpace,
    n_agents: usize,
    d: usize,
    m: f64,
    l: f64,
    alpha: f64,
    cfg: &ZfConfig,
    opts: &LmiOptions,
) -> Result<RateLmi> {
    if n_agents == 0 {
        return Err(Error::InvalidParameter("network needs at least one agent".into()));
    }
    check_channel(g, d)?;
    let lifted = kron_lift(g, n_agents)?;
    build(std::slice::from_ref(&lifted), m, l, n_agents * d, alpha, cfg, opts)
}

/// Rate LMI imposed at every vertex of a parameter-varying channel with a
/// shared storage matrix and multiplier.
pub fn assemble_rate_lmi_lpv(
    vertices: &[StateSpace],
    m: f64,
    l: f64,
    d: usize,
    alpha: f64,
    cfg: &ZfConfig,
    opts: &LmiOptions,
) -> Result<RateLmi> {
    let first = vertices
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one vertex is required".into()))?;
    for v in vertices {
        check_channel(v, d)?;
        if v.nstates() != first.nstates() {
            return Err(dim_err("LPV vertex state dimension", first.nstates(), v.nstates()));
        }
    }
    build(vertices, m, l, d, alpha, cfg, opts)
}

fn check_channel(g: &StateSpace, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("channel dimension d must be positive".into()));
    }
    if g.ninputs() != d || g.noutputs() != d {
        return Err(dim_err(
            "plant channel vs d",
            format!("{d} inputs and outputs"),
            format!("{} inputs, {} outputs", g.ninputs(), g.noutputs()),
        ));
    }
    Ok(())
}

fn build(
    vertices: &[StateSpace],
    m: f64,
    l: f64,
    d: usize,
    alpha: f64,
    cfg: &ZfConfig,
    opts: &LmiOptions,
) -> Result<RateLmi> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate must be nonnegative, got {alpha}")));
    }
    let cfg = cfg.with_rate(alpha);
    let template = PTemplate::new(cfg)?;
    let multiplier = build_multiplier(m, l, d, &cfg)?;
    let loops = vertices
        .iter()
        .map(|g| series(&multiplier.pi, &augment_with_identity(g)))
        .collect::<Result<Vec<_>>>()?;
    let n = loops[0].nstates();

    let mut problem = SdpProblem::new();
    let storage = problem.matrix_psd("X", n, opts.storage_floor)?;
    let h = problem.scalar("H");
    let causal: Vec<ScalarId> = (0..template.n_causal()).map(|i| problem.scalar(format!("c{}", i + 1))).collect();
    let anticausal: Vec<ScalarId> = (0..template.n_anticausal()).map(|j| problem.scalar(format!("a{}", j + 1))).collect();

    for id in causal.iter().chain(&anticausal) {
        let name = format!("{} >= 0", problem.var_name(*id));
        problem.add_linear(name, vec![(*id, 1.0)], 0.0, LinearKind::Ge, 0.0)?;
    }
    // Σ c_i/λ^i + Σ a_j/λ^j − H ≤ 0
    let mut integral: Vec<(ScalarId, f64)> = vec![(h, -1.0)];
    integral.extend(causal.iter().copied().zip(template.integral_weights(causal.len())));
    integral.extend(anticausal.iter().copied().zip(template.integral_weights(anticausal.len())));
    problem.add_linear("kernel integral <= H", integral, 0.0, LinearKind::Le, 0.0)?;

    let basis = p_basis(&template);
    let x_var = problem.matrix_var(storage).clone();
    let id_d = DMatrix::<f64>::identity(d, d);
    for (k, lp) in loops.iter().enumerate() {
        let nu = lp.ninputs();
        let dim = n + nu;
        let mut left = DMatrix::zeros(n, dim);
        left.view_mut((0, 0), (n, n)).fill_with_identity();
        let mut right = DMatrix::zeros(n, dim);
        let mut shifted = lp.a().clone();
        for i in 0..n {
            shifted[(i, i)] += alpha;
        }
        right.view_mut((0, 0), (n, n)).copy_from(&shifted);
        right.view_mut((0, n), (n, nu)).copy_from(lp.b());

        let mut cd = DMatrix::zeros(lp.noutputs(), dim);
        cd.view_mut((0, 0), (lp.noutputs(), n)).copy_from(lp.c());
        cd.view_mut((0, n), (lp.noutputs(), nu)).copy_from(lp.d());

        let mut expr = AffineExpr::zeros(dim);
        expr.add_sym_product(&x_var, &left, &right)?;
        let quad = |e: &DMatrix<f64>| cd.transpose() * e.kronecker(&id_d) * &cd;
        expr.add_scalar(h, &quad(&basis.h))?;
        for (id, e) in causal.iter().zip(&basis.causal) {
            expr.add_scalar(*id, &quad(e))?;
        }
        for (id, e) in anticausal.iter().zip(&basis.anticausal) {
            expr.add_scalar(*id, &quad(e))?;
        }
        let name = if loops.len() == 1 {
            "rate".to_string()
        } else {
            format!("rate@vertex{k}")
        };
        problem.add_lmi(name, expr, Sense::NsdLe, opts.delta)?;
    }

    Ok(RateLmi {
        problem,
        storage,
        h,
        causal,
        anticausal,
        cfg,
        multiplier,
        loops,
    })
}
