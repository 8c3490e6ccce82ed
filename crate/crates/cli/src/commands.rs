use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use iqcrate::certify::{
    certify_rate, lmi_options_from_env, multiplier_grid, sweep_l, RateCertificate, RateOutcome, SweepRow, SweepSpec,
    SweepTable,
};
use iqcrate::graph::InteractionGraph;
use iqcrate::lmi::{assemble_flocking_lmi, initial_condition_bound, FlockingLmi};
use iqcrate::sdp::{solve_feasibility, write_sdpa, FeasibilityStatus, SolverOptions};
use iqcrate::sim::{
    empirical_zf_check, estimate_rate, lemma_shift_check, simulate_lpv, simulate_network, square_wave, Potential,
    Trajectory,
};
use iqcrate::certify::Channel;

use crate::scenario::{config_err, graph_sector, Scenario};
use crate::CliError;

/// Settings shared by every command.
pub struct Ctx {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub dump_sdpa: bool,
}

impl Ctx {
    fn seed(&self, s: &Scenario) -> u64 {
        self.seed.or(s.run.seed).unwrap_or(0)
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        let path = self.out.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| io_err(&path, e))
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn title(s: &Scenario) -> &str {
    s.name.as_deref().unwrap_or("scenario")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:.4}"))
}

pub fn certify(s: &Scenario, ctx: &Ctx) -> Result<(), CliError> {
    if s.is_flocking() {
        return certify_flocking(s, ctx);
    }
    let channel = s.channel()?;
    let sector = s.sector()?;
    let lmi = lmi_options_from_env()?;
    let bisect = s.bisect_options()?;
    let solver = SolverOptions::default();
    let mut rows = Vec::new();
    let mut undecided = Vec::new();
    println!("{}: m = {}, L = {}", title(s), sector.m, sector.l);
    for class in s.classes()? {
        let configs = multiplier_grid(class, &s.multiplier.lambda_grid, s.multiplier.nu_max)?;
        let outcomes: Vec<RateOutcome> = configs
            .par_iter()
            .map(|cfg| {
                certify_rate(
                    |alpha| channel.assemble(sector.m, sector.l, alpha, &cfg.with_rate(alpha), &lmi),
                    &bisect,
                    &solver,
                )
            })
            .collect::<Result<_, _>>()?;
        let inconclusive: usize = outcomes.iter().map(RateOutcome::inconclusive_probes).sum();
        let (k, best) = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.certificate.is_some())
            .max_by(|a, b| a.1.alpha_star().partial_cmp(&b.1.alpha_star()).unwrap().then(b.0.cmp(&a.0)))
            .unwrap_or((0, &outcomes[0]));
        let cfg = configs[k];
        if ctx.dump_sdpa {
            let p = channel.assemble(sector.m, sector.l, 0.0, &cfg, &lmi)?;
            write_sdpa(&p.problem, ctx.file(&format!("{}.dat-s", class.label()))?)
                .map_err(|e| config_err(format!("sdpa output: {e}")))?;
        }
        if let Some(c) = &best.certificate {
            ctx.write(&format!("certificate_{}.txt", class.label()), &c.to_text())?;
        } else if inconclusive > 0 {
            undecided.push(class.label());
        }
        let shape = if cfg.order == 0 { String::new() } else { format!("  (nu = {}, lambda = {})", cfg.order, cfg.pole) };
        println!("  {:<10} alpha* = {}{shape}", class.label(), fmt_opt(best.alpha_star()));
        rows.push(SweepRow {
            l: sector.l,
            class,
            nu: cfg.order,
            lambda: (cfg.order > 0).then_some(cfg.pole),
            alpha_star: best.alpha_star(),
            margin: best.certificate.as_ref().map(RateCertificate::min_margin),
            inconclusive_probes: inconclusive,
        });
    }
    SweepTable::write_csv(&rows, ctx.file("certify.csv")?)?;
    if !undecided.is_empty() {
        return Err(CliError::Inconclusive(format!(
            "solver inconclusive for {} (partial results written)",
            undecided.join(", ")
        )));
    }
    Ok(())
}

fn certify_flocking(s: &Scenario, ctx: &Ctx) -> Result<(), CliError> {
    let model = s.flocking_model()?.expect("flocking plant");
    let lmi = assemble_flocking_lmi(&model, &lmi_options_from_env()?)?;
    if ctx.dump_sdpa {
        write_sdpa(&lmi.problem, ctx.file("flocking.dat-s")?).map_err(|e| config_err(format!("sdpa output: {e}")))?;
    }
    let r = solve_feasibility(&lmi.problem, &FlockingLmi::solver_options());
    let mut text = String::new();
    let _ = writeln!(text, "k_p = {}", model.k_p);
    let _ = writeln!(text, "k_d = {}", model.k_d);
    let _ = writeln!(text, "status = {:?}", r.status);
    let _ = writeln!(text, "max_violation = {}", r.max_violation);
    if let Some(a) = &r.assignment.as_ref().filter(|_| r.is_feasible()) {
        let sol = lmi.solution(a)?;
        let _ = writeln!(text, "mu = {}", sol.mu);
        let _ = writeln!(text, "eps = {}", sol.eps);
        let _ = writeln!(text, "lambda1 = {}", sol.lambda1);
        let _ = writeln!(text, "lambda2 = {}", sol.lambda2);
        let _ = writeln!(text, "initial_condition_bound = {}", initial_condition_bound(&model, &sol));
        for (i, row) in sol.x0.row_iter().enumerate() {
            let v: Vec<String> = row.iter().map(f64::to_string).collect();
            let _ = writeln!(text, "storage.row.{i} = {}", v.join(", "));
        }
    }
    ctx.write("flocking_certificate.txt", &text)?;
    let mut w = csv::Writer::from_writer(ctx.file("certify.csv")?);
    w.write_record(["k_p", "k_d", "status"]).and_then(|_| {
        w.write_record([model.k_p.to_string(), model.k_d.to_string(), format!("{:?}", r.status)])
    })
    .and_then(|_| w.flush().map_err(Into::into))
    .map_err(|e| config_err(format!("csv output: {e}")))?;
    println!("flocking LMI at k_p = {}, k_d = {}: {:?}", model.k_p, model.k_d, r.status);
    if r.status == FeasibilityStatus::Inconclusive {
        return Err(CliError::Inconclusive("flocking LMI inconclusive (partial results written)".into()));
    }
    Ok(())
}

pub fn sweep(s: &Scenario, ctx: &Ctx) -> Result<(), CliError> {
    let channel = s.channel()?;
    let sector = s.sector()?;
    let spec = SweepSpec {
        m: sector.m,
        l_grid: s.run.l_grid.clone().unwrap_or_else(|| vec![sector.l]),
        classes: s.classes()?,
        lambda_grid: s.multiplier.lambda_grid.clone(),
        nu_max: s.multiplier.nu_max,
    };
    if let Some(l) = spec.l_grid.iter().find(|l| !(**l >= spec.m)) {
        return Err(config_err(format!("L grid entry {l} is below m = {}", spec.m)));
    }
    let table = sweep_l(&channel, &spec, &lmi_options_from_env()?, &s.bisect_options()?, &SolverOptions::default())?;
    SweepTable::write_csv(&table.best, ctx.file("sweep.csv")?)?;
    SweepTable::write_csv(&table.grid, ctx.file("sweep_grid.csv")?)?;
    println!("{}: m = {}, {} grid points", title(s), spec.m, table.grid.len());
    for r in &table.best {
        println!("  L = {:<8} {:<10} alpha* = {}", r.l, r.class.label(), fmt_opt(r.alpha_star));
    }
    let undecided = table
        .best
        .iter()
        .filter(|r| r.alpha_star.is_none() && r.inconclusive_probes > 0)
        .count();
    if undecided > 0 {
        return Err(CliError::Inconclusive(format!(
            "solver inconclusive for {undecided} (L, class) cells (partial results written)"
        )));
    }
    Ok(())
}

/// A simulated closed loop with its equilibrium output.
struct Run {
    traj: Trajectory,
    f: Potential,
    y_star: Option<DVector<f64>>,
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn run_simulation(s: &Scenario, seed: u64) -> Result<Run, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = s.dim()?;
    let f = s.potential(d, &mut rng)?;
    let opts = s.sim_options();
    let given = s.run.initial_state.as_ref().map(|v| DVector::from_vec(v.clone()));
    let n = s.agents;
    let traj = if let Some(model) = s.flocking_model()? {
        let g = model.agent_system()?;
        let nx = model.nx();
        let x0 = given.unwrap_or_else(|| uniform(&mut rng, n * nx));
        if x0.len() != n * nx {
            return Err(config_err(format!("initial_state needs {} entries (vehicle states)", n * nx)));
        }
        let mut eta0 = DVector::zeros(n * g.nstates());
        for i in 0..n {
            let e = model.initial_state(&x0.rows(i * nx, nx).into_owned())?;
            eta0.rows_mut(i * g.nstates(), g.nstates()).copy_from(&e);
        }
        simulate_network(&g, n, &f, &eta0, &opts)?
    } else if let Some(lpv) = s.lpv()? {
        let nx = lpv.vertices[0].nstates();
        let eta0 = given.unwrap_or_else(|| uniform(&mut rng, nx));
        let (lo, hi) = (lpv.params[0], *lpv.params.last().unwrap());
        let period = s.run.schedule_period.unwrap_or(2.0);
        if !(period > 0.0) {
            return Err(config_err("schedule_period must be positive"));
        }
        simulate_lpv(&lpv, square_wave(lo, hi, period), &f, &eta0, &opts)?
    } else {
        let g = match s.channel()? {
            Channel::Lti(g) | Channel::Network { g, .. } => g,
            Channel::Lpv(_) => unreachable!("lpv handled above"),
        };
        let eta0 = given.unwrap_or_else(|| uniform(&mut rng, n * g.nstates()));
        simulate_network(&g, n, &f, &eta0, &opts)?
    };
    let y_star = equilibrium(s, &f)?;
    Ok(Run { traj, f, y_star })
}

/// Minimizer of the potential, or `None` when descent does not settle.
fn equilibrium(s: &Scenario, f: &Potential) -> Result<Option<DVector<f64>>, CliError> {
    if s.graph.is_none() {
        if let Some(c) = f.field.minimizer() {
            return Ok(Some(DVector::from_fn(f.dim(), |i, _| c[i % f.d])));
        }
    }
    let l = s.sector()?.l;
    Ok(f.descend(&DVector::zeros(f.dim()), 1.0 / l, 1e-12, 2_000_000).ok())
}

pub fn simulate(s: &Scenario, ctx: &Ctx) -> Result<(), CliError> {
    let run = run_simulation(s, ctx.seed(s))?;
    run.traj.write_csv(ctx.file("trajectory.csv")?)?;
    let y_end = run.traj.final_output();
    let grad = run.f.gradient(y_end).norm();
    let fit = run.y_star.as_ref().and_then(|ys| estimate_rate(&run.traj, ys));
    let mut text = String::new();
    let _ = writeln!(text, "samples = {}", run.traj.len());
    let _ = writeln!(text, "t_end = {}", run.traj.t.last().copied().unwrap_or(0.0));
    let _ = writeln!(text, "final_grad_norm = {grad:e}");
    match fit {
        Some(fit) => {
            let _ = writeln!(text, "converged = true");
            let _ = writeln!(text, "empirical_rate = {}", fit.alpha);
            let _ = writeln!(text, "kappa = {}", fit.kappa);
            let _ = writeln!(text, "fit_residual = {}", fit.residual);
        }
        None => {
            let _ = writeln!(text, "converged = false");
            let _ = writeln!(text, "empirical_rate = no-fit");
        }
    }
    ctx.write("simulate.txt", &text)?;
    println!("{}", title(s));
    print!("{text}");
    Ok(())
}

pub struct GraphArgs {
    pub graph: Option<PathBuf>,
    pub m_psi: Option<f64>,
    pub l_psi: Option<f64>,
    pub d_max: Option<usize>,
}

pub fn graph_bounds(s: Option<&Scenario>, args: &GraphArgs, ctx: &Ctx) -> Result<(), CliError> {
    let spec = s.and_then(|s| s.graph.as_ref());
    let g = match (&args.graph, s) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            text.parse::<InteractionGraph>()?
        }
        (None, Some(s)) => s.graph()?.ok_or_else(|| config_err("scenario has no graph"))?,
        (None, None) => return Err(config_err("graph-bounds needs --graph or --config")),
    };
    let m_psi = args
        .m_psi
        .or(spec.map(|g| g.m_psi))
        .ok_or_else(|| config_err("missing --m-psi"))?;
    let l_psi = args
        .l_psi
        .or(spec.map(|g| g.l_psi))
        .ok_or_else(|| config_err("missing --l-psi"))?;
    let d_max = args.d_max.or(spec.and_then(|g| g.d_max));
    let sector = graph_sector(&g, m_psi, l_psi, d_max)?;
    println!("m = {:.4}", sector.m);
    println!("L = {:.4}", sector.l);
    let mut w = csv::Writer::from_writer(ctx.file("graph_bounds.csv")?);
    let d = d_max.map(|d| d.to_string()).unwrap_or_default();
    w.write_record(["nodes", "m_psi", "l_psi", "d_max", "m", "L"])
        .and_then(|_| {
            w.write_record([
                g.n().to_string(),
                m_psi.to_string(),
                l_psi.to_string(),
                d,
                sector.m.to_string(),
                sector.l.to_string(),
            ])
        })
        .and_then(|_| w.flush().map_err(Into::into))
        .map_err(|e| config_err(format!("csv output: {e}")))
}

/// Number of horizons on which the audit integral is evaluated.
const AUDIT_POINTS: usize = 20;
/// Number of shifts in the shift-lemma check, spanning `[−T, 2T]`.
const LEMMA_SHIFTS: usize = 21;

pub fn iqc_verify(s: &Scenario, certificate: &Path, ctx: &Ctx) -> Result<(), CliError> {
    let text = fs::read_to_string(certificate).map_err(|e| io_err(certificate, e))?;
    let cert = RateCertificate::from_text(&text)?;
    if s.is_flocking() {
        return Err(config_err("iqc-verify needs a rate scenario, not a flocking plant"));
    }
    let sector = s.sector()?;
    let run = run_simulation(s, ctx.seed(s))?;
    let y_star = run
        .y_star
        .clone()
        .ok_or_else(|| CliError::Simulation("equilibrium of the potential not found".into()))?;
    let u_star = run.f.gradient(&y_star);
    // e^{2αt} amplifies the numerical floor of a decayed error; stop before it dominates
    let alpha = cert.alpha_star;
    let t_all = run.traj.t.last().copied().unwrap_or(0.0);
    let horizon = if alpha > 0.0 { t_all.min(7.0 / alpha) } else { t_all };
    let n = ((horizon / run.traj.dt).round() as usize + 1).min(run.traj.len());
    let yt: Vec<DVector<f64>> = run.traj.y[..n].iter().map(|y| y - &y_star).collect();
    let ut: Vec<DVector<f64>> = run.traj.u[..n].iter().map(|u| u - &u_star).collect();
    let t_end = (n - 1) as f64 * run.traj.dt;
    let t_grid: Vec<f64> = (1..=AUDIT_POINTS).map(|k| t_end * k as f64 / AUDIT_POINTS as f64).collect();
    let audit = empirical_zf_check(&yt, &ut, run.traj.dt, sector.m, sector.l, &cert.cfg, &cert.multiplier, &t_grid)?;
    let taus: Vec<f64> = (0..LEMMA_SHIFTS)
        .map(|k| -t_end + 3.0 * t_end * k as f64 / (LEMMA_SHIFTS - 1) as f64)
        .collect();
    let lemma = lemma_shift_check(&yt, &ut, run.traj.dt, sector.m, sector.l, alpha, &taus, &t_grid)?;
    let floor = -1e-6 * audit.energy;
    let pass = audit.min_integral >= floor && lemma >= floor;

    let mut w = csv::Writer::from_writer(ctx.file("iqc_verify.csv")?);
    let res: Result<(), csv::Error> = (|| {
        w.write_record(["T", "integral"])?;
        for (t, v) in &audit.integrals {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| config_err(format!("csv output: {e}")))?;
    let mut text = String::new();
    let _ = writeln!(text, "alpha = {alpha}");
    let _ = writeln!(text, "multiplier = {} nu={} lambda={}", cert.cfg.class, cert.cfg.order, cert.cfg.pole);
    let _ = writeln!(text, "horizon = {t_end}");
    let _ = writeln!(text, "min_integral = {:e}", audit.min_integral);
    let _ = writeln!(text, "argmin_T = {}", audit.argmin_t);
    let _ = writeln!(text, "energy = {:e}", audit.energy);
    let _ = writeln!(text, "relative = {:e}", audit.relative());
    let _ = writeln!(text, "shift_lemma_min = {lemma:e}");
    let _ = writeln!(text, "verdict = {}", if pass { "pass" } else { "fail" });
    ctx.write("iqc_verify.txt", &text)?;
    print!("{text}");
    Ok(())
}
