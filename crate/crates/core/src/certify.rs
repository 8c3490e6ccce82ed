//! Outer searches over the rate LMI: bisection on the rate, sweeps over the
//! sector bound and multiplier grid, stability margins, certificate packaging.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lmi::{assemble_rate_lmi, assemble_rate_lmi_full, assemble_rate_lmi_lpv, LmiOptions, RateLmi};
use crate::sdp::{solve_feasibility, ConstraintMargin, FeasibilityStatus, SolverOptions};
use crate::ss::StateSpace;
use crate::zf::{MultiplierClass, PValues, ZfConfig};

/// Bisection resolution for [`stability_margin`].
pub const MARGIN_TOL: f64 = 1e-2;

pub const KAPPA_NOTE: &str =
    "a prefactor kappa >= 0 with |y(t) - y*| <= kappa exp(-alpha t) exists but is not computed";

const FORMAT_TAG: &str = "iqcrate-rate-certificate/1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectOptions {
    pub tol: f64,
    /// First upper bracket, doubled while feasible.
    pub initial_upper: f64,
    pub max_doublings: u32,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            initial_upper: 1.0,
            max_doublings: 64,
        }
    }
}

impl BisectOptions {
    /// Defaults with `IQCRATE_BISECT_TOL` applied when set.
    pub fn from_env() -> Result<Self> {
        let mut o = Self::default();
        if let Some(tol) = env_f64("IQCRATE_BISECT_TOL")? {
            o.tol = tol;
        }
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) || !(self.initial_upper > 0.0 && self.initial_upper.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bisection needs tol > 0 and initial upper bound > 0, got {} and {}",
                self.tol, self.initial_upper
            )));
        }
        Ok(())
    }
}

/// `LmiOptions` with `IQCRATE_DELTA` applied when set.
pub fn lmi_options_from_env() -> Result<LmiOptions> {
    let mut o = LmiOptions::default();
    if let Some(delta) = env_f64("IQCRATE_DELTA")? {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("IQCRATE_DELTA must be >= 0, got {delta}")));
        }
        o.delta = delta;
    }
    Ok(o)
}

fn env_f64(key: &str) -> Result<Option<f64>> {
    match std::env::var(key) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("{key}={v} is not a number"))),
        Err(_) => Ok(None),
    }
}

/// One feasibility probe of a bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub alpha: f64,
    pub status: FeasibilityStatus,
    pub slack: f64,
}

impl Probe {
    /// Inconclusive probes count as infeasible.
    pub fn accepted(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Verified rate certificate for one multiplier configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCertificate {
    pub alpha_star: f64,
    /// Multiplier configuration; `cfg.rate == alpha_star`.
    pub cfg: ZfConfig,
    pub multiplier: PValues,
    pub storage: DMatrix<f64>,
    pub margins: Vec<ConstraintMargin>,
    pub max_violation: f64,
    pub bracket_history: Vec<Probe>,
    pub tol: f64,
}

impl RateCertificate {
    pub fn kappa_note(&self) -> &'static str {
        KAPPA_NOTE
    }

    /// Smallest verification margin (negative values are within tolerance).
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }

    /// Key-value text document; see the README for the schema.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "format = {FORMAT_TAG}");
        let _ = writeln!(s, "alpha_star = {}", self.alpha_star);
        let _ = writeln!(s, "bisect.tol = {}", self.tol);
        let _ = writeln!(s, "multiplier.class = {}", self.cfg.class);
        let _ = writeln!(s, "multiplier.order = {}", self.cfg.order);
        let _ = writeln!(s, "multiplier.pole = {}", self.cfg.pole);
        let _ = writeln!(s, "multiplier.rate = {}", self.cfg.rate);
        let _ = writeln!(s, "multiplier.H = {}", self.multiplier.h);
        let _ = writeln!(s, "multiplier.causal = {}", join(&self.multiplier.causal));
        let _ = writeln!(s, "multiplier.anticausal = {}", join(&self.multiplier.anticausal));
        let _ = writeln!(s, "storage.dim = {}", self.storage.nrows());
        for (i, row) in self.storage.row_iter().enumerate() {
            let v: Vec<f64> = row.iter().copied().collect();
            let _ = writeln!(s, "storage.row.{i} = {}", join(&v));
        }
        let _ = writeln!(s, "verify.max_violation = {}", self.max_violation);
        for (i, m) in self.margins.iter().enumerate() {
            let _ = writeln!(s, "verify.margin.{i}.name = {}", m.name);
            let _ = writeln!(s, "verify.margin.{i}.value = {}", m.margin);
        }
        for (i, p) in self.bracket_history.iter().enumerate() {
            let _ = writeln!(s, "probe.{i} = {} {} {}", p.alpha, status_label(p.status), p.slack);
        }
        let _ = writeln!(s, "kappa = {KAPPA_NOTE}");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Rejected(format!("certificate line {}: expected `key = value`", n + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Rejected(format!("certificate is missing `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|_| Error::Rejected(format!("certificate field `{k}` is not a number")))
        };
        let list = |k: &str| -> Result<Vec<f64>> {
            let v = get(k)?;
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Rejected(format!("certificate field `{k}` has a bad entry")))
                })
                .collect()
        };
        if get("format")? != FORMAT_TAG {
            return Err(Error::Rejected(format!("unsupported certificate format `{}`", get("format")?)));
        }
        let order = get("multiplier.order")?
            .parse::<usize>()
            .map_err(|_| Error::Rejected("multiplier.order is not an integer".into()))?;
        let cfg = ZfConfig {
            order,
            pole: num("multiplier.pole")?,
            rate: num("multiplier.rate")?,
            class: get("multiplier.class")?.parse()?,
        };
        cfg.validate()?;
        let dim = num("storage.dim")? as usize;
        let mut storage = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let row = list(&format!("storage.row.{i}"))?;
            if row.len() != dim {
                return Err(Error::Rejected(format!("storage row {i} has {} entries, expected {dim}", row.len())));
            }
            for (j, v) in row.into_iter().enumerate() {
                storage[(i, j)] = v;
            }
        }
        let mut margins = Vec::new();
        while let Some(name) = kv.get(&format!("verify.margin.{}.name", margins.len())) {
            margins.push(ConstraintMargin {
                name: name.clone(),
                margin: num(&format!("verify.margin.{}.value", margins.len()))?,
            });
        }
        let mut bracket_history = Vec::new();
        while let Some(line) = kv.get(&format!("probe.{}", bracket_history.len())) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Rejected(format!("malformed probe `{line}`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            bracket_history.push(Probe {
                alpha: parts[0].parse().map_err(|_| bad())?,
                status: parse_status(parts[1]).ok_or_else(bad)?,
                slack: parts[2].parse().map_err(|_| bad())?,
            });
        }
        Ok(Self {
            alpha_star: num("alpha_star")?,
            cfg,
            multiplier: PValues {
                h: num("multiplier.H")?,
                causal: list("multiplier.causal")?,
                anticausal: list("multiplier.anticausal")?,
            },
            storage,
            margins,
            max_violation: num("verify.max_violation")?,
            bracket_history,
            tol: num("bisect.tol")?,
        })
    }
}

fn status_label(s: FeasibilityStatus) -> &'static str {
    match s {
        FeasibilityStatus::Feasible => "feasible",
        FeasibilityStatus::Infeasible => "infeasible",
        FeasibilityStatus::Inconclusive => "inconclusive",
    }
}

fn parse_status(s: &str) -> Option<FeasibilityStatus> {
    match s {
        "feasible" => Some(FeasibilityStatus::Feasible),
        "infeasible" => Some(FeasibilityStatus::Infeasible),
        "inconclusive" => Some(FeasibilityStatus::Inconclusive),
        _ => None,
    }
}

/// Result of a rate bisection. `certificate` is `None` when the rate `0`
/// could not be certified.
#[derive(Debug, Clone)]
pub struct RateOutcome {
    pub certificate: Option<RateCertificate>,
    pub trace: Vec<Probe>,
}

impl RateOutcome {
    pub fn alpha_star(&self) -> Option<f64> {
        self.certificate.as_ref().map(|c| c.alpha_star)
    }

    pub fn inconclusive_probes(&self) -> usize {
        self.trace
            .iter()
            .filter(|p| p.status == FeasibilityStatus::Inconclusive)
            .count()
    }
}

/// Largest rate `α` for which `build(α)` is feasible, to within `opts.tol`.
pub fn certify_rate<F>(build: F, opts: &BisectOptions, solver: &SolverOptions) -> Result<RateOutcome>
where
    F: Fn(f64) -> Result<RateLmi>,
{
    opts.validate()?;
    let mut trace = Vec::new();
    let probe = |alpha: f64, trace: &mut Vec<Probe>| -> Result<Option<RateCertificate>> {
        let lmi = build(alpha)?;
        let r = solve_feasibility(&lmi.problem, solver);
        let p = Probe {
            alpha,
            status: r.status,
            slack: r.stats.slack,
        };
        trace.push(p);
        if !p.accepted() {
            return Ok(None);
        }
        let a = r.assignment.as_ref().expect("feasible result carries an assignment");
        Ok(Some(RateCertificate {
            alpha_star: alpha,
            cfg: lmi.cfg,
            multiplier: lmi.multiplier_values(a),
            storage: lmi.storage_matrix(a),
            margins: r.report.map(|rep| rep.margins).unwrap_or_default(),
            max_violation: r.max_violation,
            bracket_history: Vec::new(),
            tol: opts.tol,
        }))
    };

    let Some(mut best) = probe(0.0, &mut trace)? else {
        return Ok(RateOutcome {
            certificate: None,
            trace,
        });
    };
    let mut hi = opts.initial_upper;
    let mut doublings = 0;
    loop {
        match probe(hi, &mut trace)? {
            Some(c) => best = c,
            None => break,
        }
        if doublings == opts.max_doublings {
            log::warn!("rate bracket still feasible after {doublings} doublings, reporting {hi}");
            best.bracket_history = trace.clone();
            return Ok(RateOutcome {
                certificate: Some(best),
                trace,
            });
        }
        hi *= 2.0;
        doublings += 1;
    }
    while hi - best.alpha_star > opts.tol {
        let mid = 0.5 * (best.alpha_star + hi);
        match probe(mid, &mut trace)? {
            Some(c) => best = c,
            None => hi = mid,
        }
    }
    best.bracket_history = trace.clone();
    Ok(RateOutcome {
        certificate: Some(best),
        trace,
    })
}

/// The plant side of a rate problem.
#[derive(Debug, Clone)]
pub enum Channel {
    /// One agent channel with `d` inputs and outputs.
    Lti(StateSpace),
    /// `n_agents` decoupled copies of one channel.
    Network { g: StateSpace, n_agents: usize },
    /// Vertices of a parameter-varying channel.
    Lpv(Vec<StateSpace>),
}

impl Channel {
    pub fn d(&self) -> usize {
        match self {
            Channel::Lti(g) | Channel::Network { g, .. } => g.ninputs(),
            Channel::Lpv(v) => v.first().map_or(0, StateSpace::ninputs),
        }
    }

    pub fn assemble(&self, m: f64, l: f64, alpha: f64, cfg: &ZfConfig, opts: &LmiOptions) -> Result<RateLmi> {
        let d = self.d();
        match self {
            Channel::Lti(g) => assemble_rate_lmi(g, m, l, d, alpha, cfg, opts),
            Channel::Network { g, n_agents } => assemble_rate_lmi_full(g, *n_agents, d, m, l, alpha, cfg, opts),
            Channel::Lpv(v) => assemble_rate_lmi_lpv(v, m, l, d, alpha, cfg, opts),
        }
    }
}

/// Every configuration of `class` on the grid (rate left at zero).
pub fn multiplier_grid(class: MultiplierClass, lambda_grid: &[f64], nu_max: usize) -> Result<Vec<ZfConfig>> {
    if class == MultiplierClass::CircleCriterion {
        return Ok(vec![ZfConfig::circle(0.0)]);
    }
    if lambda_grid.is_empty() || nu_max == 0 {
        return Err(Error::InvalidParameter(format!(
            "class {class} needs a non-empty pole grid and nu_max >= 1"
        )));
    }
    let mut out = Vec::new();
    for nu in 1..=nu_max {
        for &lam in lambda_grid {
            out.push(ZfConfig::new(class, nu, lam, 0.0)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub m: f64,
    pub l_grid: Vec<f64>,
    pub classes: Vec<MultiplierClass>,
    pub lambda_grid: Vec<f64>,
    pub nu_max: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.l_grid.is_empty() || self.classes.is_empty() {
            return Err(Error::InvalidParameter("sweep needs a non-empty L grid and class list".into()));
        }
        Ok(())
    }
}

/// One row of a rate table. `nu = 0` and no pole for the circle criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l: f64,
    pub class: MultiplierClass,
    pub nu: usize,
    pub lambda: Option<f64>,
    pub alpha_star: Option<f64>,
    /// Smallest verification margin of the certificate.
    pub margin: Option<f64>,
    pub inconclusive_probes: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    /// One row per `(L, class, ν, λ)`.
    pub grid: Vec<SweepRow>,
    /// Best row per `(L, class)`, in `l_grid` × `classes` order.
    pub best: Vec<SweepRow>,
}

pub const CSV_HEADER: [&str; 6] = ["L", "class", "nu", "lambda", "alpha_star", "margin"];

impl SweepTable {
    pub fn best_for(&self, l: f64, class: MultiplierClass) -> Option<&SweepRow> {
        self.best.iter().find(|r| r.l == l && r.class == class)
    }

    /// Writes `rows` as CSV; uncertified cells are left empty.
    pub fn write_csv<W: io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io_err = |e: csv::Error| Error::InvalidParameter(format!("csv output: {e}"));
        out.write_record(CSV_HEADER).map_err(io_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in rows {
            out.write_record([
                r.l.to_string(),
                r.class.to_string(),
                r.nu.to_string(),
                opt(r.lambda),
                opt(r.alpha_star),
                opt(r.margin),
            ])
            .map_err(io_err)?;
        }
        out.flush()
            .map_err(|e| Error::InvalidParameter(format!("csv output: {e}")))
    }
}

/// Certified rates over `L` and the multiplier grid; every grid point is an
/// independent job.
pub fn sweep_l(
    channel: &Channel,
    spec: &SweepSpec,
    lmi: &LmiOptions,
    bisect: &BisectOptions,
    solver: &SolverOptions,
) -> Result<SweepTable> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &l in &spec.l_grid {
        for &class in &spec.classes {
            for cfg in multiplier_grid(class, &spec.lambda_grid, spec.nu_max)? {
                jobs.push((l, cfg));
            }
        }
    }
    let grid: Vec<SweepRow> = jobs
        .par_iter()
        .map(|(l, cfg)| {
            let out = certify_rate(
                |alpha| channel.assemble(spec.m, *l, alpha, &cfg.with_rate(alpha), lmi),
                bisect,
                solver,
            )?;
            Ok(SweepRow {
                l: *l,
                class: cfg.class,
                nu: cfg.order,
                lambda: (cfg.order > 0).then_some(cfg.pole),
                alpha_star: out.alpha_star(),
                margin: out.certificate.as_ref().map(RateCertificate::min_margin),
                inconclusive_probes: out.inconclusive_probes(),
            })
        })
        .collect::<Result<_>>()?;

    let mut best = Vec::new();
    for &l in &spec.l_grid {
        for &class in &spec.classes {
            let rows = grid.iter().filter(|r| r.l == l && r.class == class);
            let top = rows
                .clone()
                .filter(|r| r.alpha_star.is_some())
                .max_by(|a, b| a.alpha_star.partial_cmp(&b.alpha_star).unwrap())
                .or_else(|| rows.clone().next())
                .cloned();
            if let Some(mut row) = top {
                row.inconclusive_probes = rows.map(|r| r.inconclusive_probes).sum();
                best.push(row);
            }
        }
    }
    Ok(SweepTable { grid, best })
}

/// Largest certifiable `L` per grid configuration, and the overall best.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub l_max: f64,
    pub best: ZfConfig,
    /// `None` where the configuration fails already at `L_lo`.
    pub per_config: Vec<(ZfConfig, Option<f64>)>,
}

/// Bisects on `L` (to [`MARGIN_TOL`]) for stability (`α = 0`) over the grid.
#[allow(clippy::too_many_arguments)]
pub fn stability_margin(
    channel: &Channel,
    m: f64,
    class: MultiplierClass,
    lambda_grid: &[f64],
    nu_max: usize,
    l_lo: f64,
    l_hi: f64,
    lmi: &LmiOptions,
    solver: &SolverOptions,
) -> Result<MarginReport> {
    if !(m <= l_lo && l_lo < l_hi) {
        return Err(Error::InvalidParameter(format!(
            "stability margin needs m <= L_lo < L_hi, got m = {m}, L_lo = {l_lo}, L_hi = {l_hi}"
        )));
    }
    let feasible = |l: f64, cfg: &ZfConfig| -> Result<bool> {
        let p = channel.assemble(m, l, 0.0, cfg, lmi)?;
        Ok(solve_feasibility(&p.problem, solver).is_feasible())
    };
    let configs = multiplier_grid(class, lambda_grid, nu_max)?;
    let per_config: Vec<(ZfConfig, Option<f64>)> = configs
        .par_iter()
        .map(|cfg| {
            if feasible(l_hi, cfg)? {
                return Err(Error::InvalidParameter(format!(
                    "precondition violated: L_hi = {l_hi} is certified by {} nu={} lambda={}",
                    cfg.class, cfg.order, cfg.pole
                )));
            }
            if !feasible(l_lo, cfg)? {
                return Ok((*cfg, None));
            }
            let (mut lo, mut hi) = (l_lo, l_hi);
            while hi - lo > MARGIN_TOL {
                let mid = 0.5 * (lo + hi);
                if feasible(mid, cfg)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok((*cfg, Some(lo)))
        })
        .collect::<Result<_>>()?;
    let (best, l_max) = per_config
        .iter()
        .filter_map(|(c, l)| l.map(|l| (*c, l)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "precondition violated: L_lo = {l_lo} is not certified by any {class} configuration"
            ))
        })?;
    Ok(MarginReport {
        l_max,
        best,
        per_config,
    })
}
