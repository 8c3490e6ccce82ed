//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iqcrate::certify::{certify_rate, stability_margin, BisectOptions, Channel, RateCertificate};
use iqcrate::graph::{sector_constants, structural_bounds, InteractionGraph};
use iqcrate::lmi::{
    assemble_flocking_lmi, assemble_rate_lmi, assemble_rate_lmi_full, storage_value, FlockingLmi, FlockingModel,
    LmiOptions,
};
use iqcrate::sdp::{solve_feasibility, FeasibilityStatus, SolverOptions};
use iqcrate::sim::{
    empirical_zf_check, estimate_rate, lemma_shift_check, minimizer_checks, simulate_lpv, simulate_network,
    square_wave, Interaction, LpvChannel, Potential, ScalarField, SimOptions, Trajectory,
};
use iqcrate::ss::matrix_spectral_abscissa;
use iqcrate::zf::{MultiplierClass, ZfConfig};
use iqcrate::StateSpace;

const LAMBDA_GRID: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];

struct Suite {
    failed: usize,
}

impl Suite {
    fn report(&mut self, id: u32, title: &str, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} [{id}] {title}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn nmp_plant() -> StateSpace {
    StateSpace::from_transfer_function(&[5.0, -5.0], &[1.0, 1.0, 25.0, 0.0]).unwrap()
}

fn lpv_vertex(rho: f64) -> StateSpace {
    StateSpace::new(dmatrix![0.0, 1.0; 0.0, -rho], dmatrix![0.0; -1.0], dmatrix![1.0, 0.0], dmatrix![0.0]).unwrap()
}

fn gradient_flow() -> StateSpace {
    StateSpace::new(dmatrix![0.0], dmatrix![-1.0], dmatrix![1.0], dmatrix![0.0]).unwrap()
}

/// A certificate together with the plant and sector it was produced for.
struct Certified {
    label: String,
    plant: Plant,
    m: f64,
    l: f64,
    cert: RateCertificate,
}

#[derive(Clone)]
enum Plant {
    Lti(StateSpace),
    Lpv(LpvChannel),
}

fn best_certificate(channel: &Channel, m: f64, l: f64, configs: &[ZfConfig]) -> Option<RateCertificate> {
    configs
        .iter()
        .filter_map(|cfg| {
            certify_rate(
                |a| channel.assemble(m, l, a, &cfg.with_rate(a), &LmiOptions::default()),
                &BisectOptions::default(),
                &SolverOptions::default(),
            )
            .unwrap()
            .certificate
        })
        .max_by(|a, b| a.alpha_star.total_cmp(&b.alpha_star))
}

fn criterion_1(suite: &mut Suite, certs: &mut Vec<Certified>) {
    let t = Instant::now();
    let channel = Channel::Lti(nmp_plant());
    let ranges = [
        (MultiplierClass::CircleCriterion, 1.8, 2.0),
        (MultiplierClass::Causal, 1.8, 2.0),
        (MultiplierClass::AntiCausal, 1.9, 2.1),
        (MultiplierClass::NonCausal, 2.25, 2.55),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (class, lo, hi) in ranges {
        let rep = stability_margin(
            &channel,
            1.0,
            class,
            &LAMBDA_GRID,
            3,
            1.0,
            3.0,
            &LmiOptions::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        let ok = in_range(rep.l_max, lo, hi);
        pass &= ok;
        parts.push(format!(
            "{class} {:.3} in [{lo}, {hi}] {}",
            rep.l_max,
            if ok { "ok" } else { "OUT" }
        ));
        if let Some(cert) = best_certificate(&channel, 1.0, rep.l_max, &[rep.best]) {
            certs.push(Certified {
                label: format!("nmp/{class}"),
                plant: Plant::Lti(nmp_plant()),
                m: 1.0,
                l: rep.l_max,
                cert,
            });
        }
    }
    suite.report(1, "non-minimum-phase stability margins", pass, parts.join("; "), t);
}

fn criterion_2(suite: &mut Suite, certs: &mut Vec<Certified>) {
    let t = Instant::now();
    let vertices = vec![lpv_vertex(0.8), lpv_vertex(1.2)];
    let channel = Channel::Lpv(vertices.clone());
    let lpv = LpvChannel::new(vec![0.8, 1.2], vertices).unwrap();
    let zf: Vec<ZfConfig> = LAMBDA_GRID
        .iter()
        .map(|lam| ZfConfig::new(MultiplierClass::NonCausal, 5, *lam, 0.0).unwrap())
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut zf_at_20 = 0.0;
    for l in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let cert = best_certificate(&channel, 1.0, l, &zf);
        let a = cert.as_ref().map_or(0.0, |c| c.alpha_star);
        let ok = in_range(a, 0.35, 0.41);
        pass &= ok;
        parts.push(format!("L={l}: {a:.3}{}", if ok { "" } else { " OUT" }));
        if l == 20.0 {
            zf_at_20 = a;
        }
        if let Some(cert) = cert {
            certs.push(Certified {
                label: format!("lpv/L={l}/noncausal"),
                plant: Plant::Lpv(lpv.clone()),
                m: 1.0,
                l,
                cert,
            });
        }
    }
    let cc = best_certificate(&channel, 1.0, 20.0, &[ZfConfig::circle(0.0)]);
    let cc_a = cc.as_ref().map_or(0.0, |c| c.alpha_star);
    let gap_ok = zf_at_20 - cc_a > 0.02;
    pass &= gap_ok;
    parts.push(format!("CC at L=20: {cc_a:.3}, gap {:.3}{}", zf_at_20 - cc_a, if gap_ok { "" } else { " OUT" }));
    if let Some(cert) = cc {
        certs.push(Certified {
            label: "lpv/L=20/CC".into(),
            plant: Plant::Lpv(lpv),
            m: 1.0,
            l: 20.0,
            cert,
        });
    }
    suite.report(2, "LPV damping rates with nu = 5", pass, parts.join("; "), t);
}

fn criterion_3(suite: &mut Suite) {
    let t = Instant::now();
    let path = InteractionGraph::path(3).with_informed([1]).unwrap();
    let (m, l) = sector_constants(&path, 1.0, 2.0).unwrap().unwrap();
    let path_ok = (m - 0.2679).abs() <= 1e-3 && (l - 4.5616).abs() <= 1e-3;
    // one informed node per block: isolated, informed-uninformed pair, uninformed-informed-uninformed
    let minimal = InteractionGraph::new(6, [(1, 2), (3, 4), (4, 5)], [0, 1, 4]).unwrap();
    let l_psi = 7.0;
    let (sm, sl) = structural_bounds(&minimal, 2, 3.0, l_psi).unwrap();
    let m_ok = (sm - 0.4116).abs() <= 1e-3;
    let l_ok = sl == l_psi + 4.0;
    suite.report(
        3,
        "grounded-Laplacian constants",
        path_ok && m_ok && l_ok,
        format!(
            "path ({m:.4}, {l:.4}) vs (0.2679, 4.5616) {}; structural m = {sm:.4} vs 0.4116 {}; L = {sl} vs L_psi + 4 = {} {}",
            ok_str(path_ok),
            ok_str(m_ok),
            l_psi + 4.0,
            ok_str(l_ok)
        ),
        t,
    );
}

fn ok_str(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "OUT"
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random `n×n` matrix with spectral abscissa exactly `-rate`.
fn stable_matrix(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n) * 2.0;
    let shift = matrix_spectral_abscissa(&m) + rate;
    m - DMatrix::identity(n, n) * shift
}

fn criterion_4(suite: &mut Suite) {
    let t = Instant::now();
    let (m, l) = (0.5, 3.0);
    let mut agree = 0;
    let mut total = 0;
    let mut feasible = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1 + (seed as usize % 4);
        let rate = rng.gen_range(0.2..1.0);
        let a = stable_matrix(&mut rng, n, rate);
        let g = StateSpace::new(a, random_matrix(&mut rng, n, 1), random_matrix(&mut rng, 1, n), dmatrix![0.0]).unwrap();
        let agents = 2 + (seed as usize % 2);
        for alpha in [0.0, 0.1, 0.5] {
            for cfg in [
                ZfConfig::circle(alpha),
                ZfConfig::new(MultiplierClass::NonCausal, 1, 1.0, alpha).unwrap(),
            ] {
                let opts = LmiOptions::default();
                let single = assemble_rate_lmi(&g, m, l, 1, alpha, &cfg, &opts).unwrap();
                let full = assemble_rate_lmi_full(&g, agents, 1, m, l, alpha, &cfg, &opts).unwrap();
                let s1 = solve_feasibility(&single.problem, &SolverOptions::default()).status;
                let s2 = solve_feasibility(&full.problem, &SolverOptions::default()).status;
                total += 1;
                agree += usize::from(s1 == s2);
                feasible += usize::from(s1 == FeasibilityStatus::Feasible);
            }
        }
    }
    suite.report(
        4,
        "single-agent and network LMIs agree",
        agree == 60 && total == 60,
        format!("{agree}/{total} agree ({feasible} feasible)"),
        t,
    );
}

fn criterion_5(suite: &mut Suite) {
    let t = Instant::now();
    let k = 1.5;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = 1 + (seed as usize % 4);
        let rate = rng.gen_range(0.3..2.0);
        let a_cl = stable_matrix(&mut rng, n, rate);
        let b = random_matrix(&mut rng, n, 1);
        let c = random_matrix(&mut rng, 1, n);
        // u = k y closes the loop to a_cl
        let a = &a_cl - &b * &c * k;
        let g = StateSpace::new(a, b, c, dmatrix![0.0]).unwrap();
        let cert = best_certificate(&Channel::Lti(g), k, k, &[ZfConfig::circle(0.0)]);
        let got = cert.map_or(f64::NAN, |c| c.alpha_star);
        let err = (got - rate).abs();
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        parts.push(format!("{got:.4}/{rate:.4}"));
    }
    let flow = best_certificate(&Channel::Lti(gradient_flow()), 1.0, 1.0, &[ZfConfig::circle(0.0)])
        .map_or(f64::NAN, |c| c.alpha_star);
    let flow_ok = (flow - 1.0).abs() <= 2e-3;
    suite.report(
        5,
        "exact rate on linear loops",
        worst <= 5e-3 && flow_ok,
        format!(
            "certified/exact {}; worst error {worst:.2e} (tol 5e-3); gradient flow {flow:.4} (tol 2e-3)",
            parts.join(", ")
        ),
        t,
    );
}

const AUDIT_DT: f64 = 1e-3;
const AUDIT_POINTS: usize = 20;
const LEMMA_SHIFTS: usize = 21;
const SOUND_DT: f64 = 1e-2;
const SOUND_T_MAX: f64 = 4000.0;

fn simulate(plant: &Plant, f: &Potential, eta0: &DVector<f64>, opts: &SimOptions) -> Trajectory {
    match plant {
        Plant::Lti(g) => simulate_network(g, 1, f, eta0, opts).unwrap(),
        Plant::Lpv(c) => simulate_lpv(c, square_wave(0.8, 1.2, 3.0), f, eta0, opts).unwrap(),
    }
}

fn nstates(plant: &Plant) -> usize {
    match plant {
        Plant::Lti(g) => g.nstates(),
        Plant::Lpv(c) => c.vertices[0].nstates(),
    }
}

struct AuditOutcome {
    audit_ok: bool,
    sound_ok: bool,
    worst_relative: f64,
    worst_slack: f64,
}

/// Five seeded in-sector quadratic trajectories per certificate.
fn audit(c: &Certified) -> AuditOutcome {
    let alpha = c.cert.alpha_star;
    let mut out = AuditOutcome {
        audit_ok: true,
        sound_ok: true,
        worst_relative: f64::INFINITY,
        worst_slack: f64::INFINITY,
    };
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let center = dvector![rng.gen_range(-1.0..1.0)];
        let field = ScalarField::random_quadratic(&mut rng, center.clone(), c.m, c.l).unwrap();
        let f = Potential::single(field);
        let eta0 = DVector::from_fn(nstates(&c.plant), |_, _| rng.gen_range(-1.0..1.0));

        // e^{2αt} amplifies the numerical floor of a decayed error, so the audit window stops early
        let t_audit = if alpha > 0.0 { (7.0 / alpha).min(40.0) } else { 40.0 };
        let traj = simulate(&c.plant, &f, &eta0, &SimOptions { dt: AUDIT_DT, t_end: t_audit });
        let yt: Vec<DVector<f64>> = traj.y.iter().map(|y| y - &center).collect();
        let t_end = *traj.t.last().unwrap();
        let t_grid: Vec<f64> = (1..=AUDIT_POINTS).map(|k| t_end * k as f64 / AUDIT_POINTS as f64).collect();
        let zf = empirical_zf_check(&yt, &traj.u, AUDIT_DT, c.m, c.l, &c.cert.cfg, &c.cert.multiplier, &t_grid).unwrap();
        let taus: Vec<f64> = (0..LEMMA_SHIFTS)
            .map(|k| -t_end + 3.0 * t_end * k as f64 / (LEMMA_SHIFTS - 1) as f64)
            .collect();
        let lemma = lemma_shift_check(&yt, &traj.u, AUDIT_DT, c.m, c.l, alpha, &taus, &t_grid).unwrap();
        let floor = -1e-6 * zf.energy;
        out.audit_ok &= zf.min_integral >= floor && lemma >= floor;
        out.worst_relative = out.worst_relative.min(zf.relative().min(lemma / zf.energy));

        let mut horizon = 60.0;
        let fit = loop {
            let traj = simulate(&c.plant, &f, &eta0, &SimOptions { dt: SOUND_DT, t_end: horizon });
            if let Some(fit) = estimate_rate(&traj, &center) {
                break Ok(fit);
            }
            if horizon >= SOUND_T_MAX {
                let e0 = (&traj.y[0] - &center).norm();
                let e1 = (traj.final_output() - &center).norm();
                break Err(e1 < e0);
            }
            horizon *= 2.0;
        };
        match fit {
            Ok(fit) => {
                out.sound_ok &= fit.alpha >= alpha - 0.02;
                out.worst_slack = out.worst_slack.min(fit.alpha - alpha);
            }
            // no fit within the horizon: only a certified rate below the slack is consistent with slow decay
            Err(decaying) => {
                out.sound_ok &= decaying && alpha - 0.02 <= 0.0;
            }
        }
    }
    out
}

fn criteria_6_7(suite: &mut Suite, certs: &[Certified]) {
    let t = Instant::now();
    let results: Vec<(String, AuditOutcome)> = {
        use rayon::prelude::*;
        certs.par_iter().map(|c| (c.label.clone(), audit(c))).collect()
    };
    let audit_pass = !certs.is_empty() && results.iter().all(|r| r.1.audit_ok);
    let worst = results.iter().map(|r| r.1.worst_relative).fold(f64::INFINITY, f64::min);
    let bad: Vec<&str> = results.iter().filter(|r| !r.1.audit_ok).map(|r| r.0.as_str()).collect();
    suite.report(
        6,
        "empirical IQC audit",
        audit_pass,
        format!(
            "{} certificates x 5 trajectories, worst integral/energy {worst:.3e} (floor -1e-6){}",
            certs.len(),
            if bad.is_empty() { String::new() } else { format!(", violated by {}", bad.join(", ")) }
        ),
        t,
    );
    let t = Instant::now();
    let sound_pass = !certs.is_empty() && results.iter().all(|r| r.1.sound_ok);
    let slack = results.iter().map(|r| r.1.worst_slack).fold(f64::INFINITY, f64::min);
    let bad: Vec<&str> = results.iter().filter(|r| !r.1.sound_ok).map(|r| r.0.as_str()).collect();
    suite.report(
        7,
        "certified rates are sound",
        sound_pass,
        format!(
            "smallest empirical - certified {slack:.4} (tol -0.02){}",
            if bad.is_empty() { String::new() } else { format!(", unsound for {}", bad.join(", ")) }
        ),
        t,
    );
}

fn flocking_feasible(k_d: f64) -> bool {
    let model = FlockingModel::first_order_lag(1, 1.0, k_d, 3.0);
    let lmi = assemble_flocking_lmi(&model, &LmiOptions::default()).unwrap();
    solve_feasibility(&lmi.problem, &FlockingLmi::solver_options()).is_feasible()
}

fn criterion_8(suite: &mut Suite) {
    let t = Instant::now();
    let mut parts = Vec::new();
    let (mut lo, mut hi) = (0.0, 8.0);
    let bracket_ok = !flocking_feasible(lo) && flocking_feasible(hi);
    while hi - lo > 0.1 {
        let mid = 0.5 * (lo + hi);
        if flocking_feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let above = [hi + 0.25, hi + 1.0, hi + 4.0].into_iter().all(flocking_feasible);
    let below = [lo - 0.25, 0.5 * lo].into_iter().filter(|k| *k >= 0.0).all(|k| !flocking_feasible(k));
    let threshold_ok = bracket_ok && above && below;
    parts.push(format!("threshold in ({lo:.3}, {hi:.3}] {}", ok_str(threshold_ok)));

    // two-agent formation, field curvature 1: network Lipschitz constant (3 + sqrt 5)/2 <= 3
    let k_d = hi + 1.0;
    let model = FlockingModel::first_order_lag(1, 1.0, k_d, 3.0);
    let lmi = assemble_flocking_lmi(&model, &LmiOptions::default()).unwrap();
    let r = solve_feasibility(&lmi.problem, &FlockingLmi::solver_options());
    let sol = lmi.solution(r.assignment.as_ref().unwrap()).unwrap();
    let f = Potential::new(
        2,
        Interaction::LaplacianQuadratic {
            laplacian: dmatrix![1.0, -1.0; -1.0, 1.0],
            r: dvector![0.0, 1.0],
        },
        vec![0],
        ScalarField::isotropic(1.0, dvector![1.0]),
    )
    .unwrap();
    let y_star = dvector![1.0, 2.0];
    let f_min = f.value(&y_star);
    let g = model.agent_system().unwrap();
    let ns = g.nstates();
    let mut storage_ok = true;
    let mut grad_ok = true;
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    let mut final_grad: f64 = 0.0;
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eta0 = DVector::zeros(2 * ns);
        for i in 0..2 {
            let x0 = dvector![rng.gen_range(-3.0..3.0)];
            eta0.rows_mut(i * ns, ns).copy_from(&model.initial_state(&x0).unwrap());
        }
        let traj = simulate_network(&g, 2, &f, &eta0, &SimOptions { dt: 1e-2, t_end: 300.0 }).unwrap();
        let mut prev = f64::INFINITY;
        for eta in &traj.eta {
            let pick = |k: usize| dvector![eta[k], eta[ns + k]];
            let (x, q, p) = (pick(0), pick(1), pick(2));
            let v = storage_value(&model, &sol, &x, &q, &p, &y_star, f.value(&q) - f_min).unwrap();
            if prev.is_finite() {
                worst_rise = worst_rise.max(v - prev);
            }
            storage_ok &= v <= prev + 1e-6;
            prev = v;
        }
        let gn = f.gradient(traj.final_output()).norm();
        final_grad = final_grad.max(gn);
        grad_ok &= gn < 1e-4;
    }
    parts.push(format!(
        "k_d = {k_d:.2}: largest storage step {worst_rise:.2e} (tol 1e-6) {}, final |grad f| {final_grad:.1e} (tol 1e-4) {}",
        ok_str(storage_ok),
        ok_str(grad_ok)
    ));

    // well below the threshold with stiff fields
    let slow_k_d = 0.25 * lo;
    let slow = FlockingModel::first_order_lag(1, 1.0, slow_k_d, 3.0);
    let gs = slow.agent_system().unwrap();
    let mut diverge_ok = true;
    for stiffness in [10.0, 30.0] {
        let f = Potential::single(ScalarField::isotropic(stiffness, dvector![1.0]));
        let eta0 = slow.initial_state(&dvector![0.0]).unwrap();
        let outcome = simulate_network(&gs, 1, &f, &eta0, &SimOptions { dt: 1e-3, t_end: 40.0 });
        let converged = match outcome {
            Ok(traj) => estimate_rate(&traj, &dvector![1.0]).is_some(),
            Err(_) => false,
        };
        diverge_ok &= !converged;
    }
    parts.push(format!("k_d = {slow_k_d:.2} with stiff fields: no fit {}", ok_str(diverge_ok)));
    suite.report(
        8,
        "flocking threshold, storage and convergence",
        threshold_ok && storage_ok && grad_ok && diverge_ok,
        parts.join("; "),
        t,
    );
}

fn criterion_9(suite: &mut Suite) {
    let t = Instant::now();
    let f = Potential::new(
        4,
        Interaction::SigmaFlocking {
            edges: vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)],
            k: 1.3,
            dist: 1.5,
            eps: 0.1,
        },
        vec![0, 2],
        ScalarField::radial(dvector![0.5, -1.0], 0.5, 2.0).unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let y = DVector::from_fn(f.dim(), |_, _| rng.gen_range(-3.0..3.0));
        let g = f.gradient(&y);
        let fd = DVector::from_fn(f.dim(), |i, _| {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[i] += h;
            ym[i] -= h;
            (f.value(&yp) - f.value(&ym)) / (2.0 * h)
        });
        worst = worst.max((g - fd).norm() / f.gradient(&y).norm().max(1e-12));
    }
    suite.report(
        9,
        "sigma-norm potential gradient",
        worst < 1e-5,
        format!("worst relative error {worst:.2e} over 20 points (tol 1e-5)"),
        t,
    );
}

fn criterion_10(suite: &mut Suite) {
    let t = Instant::now();
    let field = ScalarField::isotropic(1.0, dvector![1.0]);
    let formation = Potential::new(
        2,
        Interaction::LaplacianQuadratic {
            laplacian: dmatrix![1.0, -1.0; -1.0, 1.0],
            r: dvector![0.0, 1.0],
        },
        vec![0],
        field.clone(),
    )
    .unwrap();
    let distance = Potential::new(2, Interaction::Distance { edges: vec![(0, 1)], k: 1.0, dist: 1.0 }, vec![0], field).unwrap();
    let flow = gradient_flow();
    let opts = SimOptions { dt: 1e-2, t_end: 120.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut formation_ok = true;
    let mut distance_ok = true;
    let mut hits = [0usize; 2];
    for _ in 0..6 {
        let y0 = dvector![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let z = simulate_network(&flow, 2, &formation, &y0, &opts).unwrap().final_output().clone();
        let rep = minimizer_checks(&formation, &z, 1e-4);
        formation_ok &= (&z - dvector![1.0, 2.0]).norm() < 1e-4 && rep.map_or(false, |r| r.all_hold());

        let z = simulate_network(&flow, 2, &distance, &y0, &opts).unwrap().final_output().clone();
        let equilibrium = minimizer_checks(&distance, &z, 1e-4).is_ok();
        let near: Vec<bool> = [dvector![1.0, 0.0], dvector![1.0, 2.0]]
            .iter()
            .map(|p| (&z - p).norm() < 1e-4)
            .collect();
        for (k, n) in near.iter().enumerate() {
            hits[k] += usize::from(*n);
        }
        distance_ok &= equilibrium && near.iter().any(|n| *n);
    }
    suite.report(
        10,
        "two-agent minimizers",
        formation_ok && distance_ok,
        format!(
            "formation -> (1, 2) {}; distance -> (1, 0) x{} / (1, 2) x{} {}",
            ok_str(formation_ok),
            hits[0],
            hits[1],
            ok_str(distance_ok)
        ),
        t,
    );
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: 0 };
    let mut certs = Vec::new();
    criterion_1(&mut suite, &mut certs);
    criterion_2(&mut suite, &mut certs);
    criterion_3(&mut suite);
    criterion_4(&mut suite);
    criterion_5(&mut suite);
    criteria_6_7(&mut suite, &certs);
    criterion_8(&mut suite);
    criterion_9(&mut suite);
    criterion_10(&mut suite);
    println!("acceptance: {} of 10 criteria failed", suite.failed);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
