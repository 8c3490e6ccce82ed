//! Closed-loop simulation of channels driven by `u = ∇f(y)`, empirical rate
//! fits and direct audits of the multiplier inequalities.

mod audit;
mod fields;
mod minimizer;

use std::collections::BTreeMap;
use std::io;

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, Error, Result};
use crate::ss::StateSpace;

pub use audit::{empirical_zf_check, lemma_shift_check, ZfAudit};
pub use fields::{sector_spot_check, sigma_norm, sigma_norm_gradient, Interaction, Potential, ScalarField};
pub use minimizer::{minimizer_checks, Characterization, MinimizerCheck, MinimizerReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 50.0 }
    }
}

impl SimOptions {
    /// Horizon `50/expected_rate`, capped at `t_max`.
    pub fn for_rate(expected_rate: f64, t_max: f64) -> Self {
        let t_end = if expected_rate > 0.0 { (50.0 / expected_rate).min(t_max) } else { t_max };
        Self { dt: 1e-3, t_end }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt.is_finite() && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "simulation needs dt > 0 and t_end > 0, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

/// Uniformly sampled closed-loop trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub eta: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub meta: BTreeMap<String, String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_output(&self) -> &DVector<f64> {
        self.y.last().expect("trajectory has at least the initial sample")
    }

    /// Columns `t, y_1..y_k, u_1..u_k`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let k = self.y.first().map_or(0, |v| v.len());
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::InvalidParameter(format!("csv output: {e}"));
        let mut header = vec!["t".to_string()];
        header.extend((1..=k).map(|i| format!("y_{i}")));
        header.extend((1..=k).map(|i| format!("u_{i}")));
        out.write_record(&header).map_err(err)?;
        for i in 0..self.len() {
            let mut row = vec![self.t[i].to_string()];
            row.extend(self.y[i].iter().map(|v| v.to_string()));
            row.extend(self.u[i].iter().map(|v| v.to_string()));
            out.write_record(&row).map_err(err)?;
        }
        out.flush().map_err(|e| Error::InvalidParameter(format!("csv output: {e}")))
    }
}

/// Classical RK4 on `η̇ = rhs(t, η)`, recording `(η, y(η), u(η))` every step.
fn integrate<R, O>(rhs: R, output: O, eta0: DVector<f64>, opts: &SimOptions) -> Result<Trajectory>
where
    R: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
    O: Fn(f64, &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)>,
{
    let steps = opts.steps()?;
    let h = opts.dt;
    let mut traj = Trajectory {
        dt: h,
        t: Vec::with_capacity(steps + 1),
        eta: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        meta: BTreeMap::new(),
    };
    let mut eta = eta0;
    for k in 0..=steps {
        let t = k as f64 * h;
        if !eta.iter().all(|v| v.is_finite()) {
            return Err(Error::Simulation {
                time: t,
                reason: "state became non-finite".into(),
            });
        }
        let (y, u) = output(t, &eta)?;
        traj.t.push(t);
        traj.y.push(y);
        traj.u.push(u);
        traj.eta.push(eta.clone());
        if k == steps {
            break;
        }
        let k1 = rhs(t, &eta)?;
        let k2 = rhs(t + 0.5 * h, &(&eta + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&eta + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&eta + &k3 * h))?;
        eta += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(traj)
}

fn check_agent(g: &StateSpace, f: &Potential, n_agents: usize, eta0: &DVector<f64>) -> Result<()> {
    if g.d().amax() != 0.0 {
        return Err(Error::InvalidParameter("simulated channels must be strictly proper (D = 0)".into()));
    }
    if g.ninputs() != f.d || g.noutputs() != f.d || f.n_agents != n_agents {
        return Err(dim_err(
            "channel vs potential",
            format!("{n_agents} agents with {} inputs/outputs", f.d),
            format!("{} agents, channel {}x{}", f.n_agents, g.noutputs(), g.ninputs()),
        ));
    }
    if eta0.len() != n_agents * g.nstates() {
        return Err(dim_err("initial state", n_agents * g.nstates(), eta0.len()));
    }
    Ok(())
}

fn warn_on_step(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, l_f: Option<f64>, dt: f64) {
    let scale = a.norm() + l_f.unwrap_or(1.0) * b.norm() * c.norm();
    if dt > 0.1 / scale.max(1e-12) {
        log::warn!("step dt = {dt} exceeds the guideline 0.1/{scale:.3e}");
    }
}

fn blockwise(m: &DMatrix<f64>, v: &DVector<f64>, n_agents: usize) -> DVector<f64> {
    let (r, c) = m.shape();
    let mut out = DVector::zeros(n_agents * r);
    for i in 0..n_agents {
        out.rows_mut(i * r, r).copy_from(&(m * v.rows(i * c, c)));
    }
    out
}

fn potential_sector_bound(f: &Potential) -> Option<f64> {
    f.field.sector().map(|(_, l)| l)
}

/// `N` copies of the agent channel `g` with `u = ∇f(y)`.
pub fn simulate_network(g: &StateSpace, n_agents: usize, f: &Potential, eta0: &DVector<f64>, opts: &SimOptions) -> Result<Trajectory> {
    check_agent(g, f, n_agents, eta0)?;
    warn_on_step(g.a(), g.b(), g.c(), potential_sector_bound(f), opts.dt);
    let output = |_t: f64, eta: &DVector<f64>| {
        let y = blockwise(g.c(), eta, n_agents);
        let u = f.gradient(&y);
        Ok((y, u))
    };
    let rhs = |t: f64, eta: &DVector<f64>| {
        let (_, u) = output(t, eta)?;
        Ok(blockwise(g.a(), eta, n_agents) + blockwise(g.b(), &u, n_agents))
    };
    let mut traj = integrate(rhs, output, eta0.clone(), opts)?;
    traj.meta.insert("plant".into(), format!("LTI, {} states per agent", g.nstates()));
    traj.meta.insert("agents".into(), n_agents.to_string());
    Ok(traj)
}

/// Parameter-varying channel: vertex systems at sorted scheduling values,
/// linearly interpolated in between.
#[derive(Debug, Clone)]
pub struct LpvChannel {
    pub params: Vec<f64>,
    pub vertices: Vec<StateSpace>,
}

impl LpvChannel {
    pub fn new(params: Vec<f64>, vertices: Vec<StateSpace>) -> Result<Self> {
        if params.len() != vertices.len() || params.is_empty() {
            return Err(dim_err("LPV vertices vs parameters", params.len(), vertices.len()));
        }
        if params.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("LPV parameters must be strictly increasing".into()));
        }
        let g0 = &vertices[0];
        for v in &vertices {
            if v.nstates() != g0.nstates() || v.ninputs() != g0.ninputs() || v.noutputs() != g0.noutputs() {
                return Err(dim_err("LPV vertex shapes", "identical", "mismatch"));
            }
        }
        Ok(Self { params, vertices })
    }

    /// Interpolated `(A, B, C)` at `rho`.
    pub fn at(&self, rho: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let (lo, hi) = (self.params[0], *self.params.last().unwrap());
        if !(rho >= lo - 1e-12 && rho <= hi + 1e-12) {
            return Err(Error::InvalidParameter(format!("scheduling value {rho} outside [{lo}, {hi}]")));
        }
        if self.params.len() == 1 {
            let v = &self.vertices[0];
            return Ok((v.a().clone(), v.b().clone(), v.c().clone()));
        }
        let k = self.params.windows(2).position(|w| rho <= w[1] + 1e-12).unwrap_or(self.params.len() - 2);
        let s = ((rho - self.params[k]) / (self.params[k + 1] - self.params[k])).clamp(0.0, 1.0);
        let (v0, v1) = (&self.vertices[k], &self.vertices[k + 1]);
        let mix = |a: &DMatrix<f64>, b: &DMatrix<f64>| a * (1.0 - s) + b * s;
        Ok((mix(v0.a(), v1.a()), mix(v0.b(), v1.b()), mix(v0.c(), v1.c())))
    }
}

/// Square wave alternating `lo` (first half period) and `hi`.
pub fn square_wave(lo: f64, hi: f64, period: f64) -> impl Fn(f64) -> f64 {
    move |t| if (t / period).fract() < 0.5 { lo } else { hi }
}

/// Single-agent LPV channel with scheduling `rho(t)`.
pub fn simulate_lpv<S>(channel: &LpvChannel, rho: S, f: &Potential, eta0: &DVector<f64>, opts: &SimOptions) -> Result<Trajectory>
where
    S: Fn(f64) -> f64,
{
    check_agent(&channel.vertices[0], f, f.n_agents, eta0)?;
    let n_agents = f.n_agents;
    let sample = |t: f64| {
        channel.at(rho(t)).map_err(|e| Error::Simulation {
            time: t,
            reason: e.to_string(),
        })
    };
    let output = |t: f64, eta: &DVector<f64>| {
        let (_, _, c) = sample(t)?;
        let y = blockwise(&c, eta, n_agents);
        let u = f.gradient(&y);
        Ok((y, u))
    };
    let rhs = |t: f64, eta: &DVector<f64>| {
        let (a, b, c) = sample(t)?;
        let y = blockwise(&c, eta, n_agents);
        let u = f.gradient(&y);
        Ok(blockwise(&a, eta, n_agents) + blockwise(&b, &u, n_agents))
    };
    let mut traj = integrate(rhs, output, eta0.clone(), opts)?;
    traj.meta.insert("plant".into(), format!("LPV, {} vertices", channel.vertices.len()));
    Ok(traj)
}

/// Fitted exponential decay of `‖y(t) − y*‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub alpha: f64,
    /// Smallest `κ` with `‖y(t) − y*‖ ≤ κ e^{−αt}` on the samples.
    pub kappa: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares slope of the log upper envelope of `‖y − y*‖` over the window
/// `[1e−6, 1e−1]·‖y(0) − y*‖`. `None` when the error does not fall below
/// `1e−6` of its initial value.
pub fn estimate_rate(traj: &Trajectory, y_star: &DVector<f64>) -> Option<RateFit> {
    let err: Vec<f64> = traj.y.iter().map(|y| (y - y_star).norm()).collect();
    let e0 = err.iter().cloned().fold(0.0, f64::max);
    if !(e0 > 0.0) || err.iter().any(|e| !e.is_finite()) {
        return None;
    }
    let e_init = err[0].max(e0 * 1e-300);
    let (lo, hi) = (1e-6 * e_init, 1e-1 * e_init);
    // running maximum from the right: the upper envelope through the peaks
    let mut env = err.clone();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    if *env.last()? > lo {
        return None;
    }
    let pts: Vec<(f64, f64)> = traj
        .t
        .iter()
        .zip(&env)
        .filter(|(_, e)| **e >= lo && **e <= hi)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let icept = my - slope * mt;
    let residual = (pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    let alpha = -slope;
    let kappa = traj
        .t
        .iter()
        .zip(&err)
        .map(|(t, e)| e * (alpha * t).exp())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    Some(RateFit {
        alpha,
        kappa,
        residual,
        samples: pts.len(),
    })
}
