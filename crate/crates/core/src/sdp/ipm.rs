//! Primal-dual interior-point backend.
//!
//! The feasibility problem is recast as `max t` over the free coordinates `z`
//! (after eliminating equalities) and a common slack `t`:
//!
//! ```text
//!   s_k (F_k(x) − δ_k I) − t I ⪰ 0     for every matrix inequality
//!   s_r (a_rᵀx + b_r − δ_r) − t ≥ 0     for every scalar inequality
//!   R ± z_j ≥ 0,  1 − t ≥ 0
//! ```
//!
//! where `s_k` normalizes each block by its largest coefficient. Written as a
//! dual-form SDP `min bᵀy, Σ y_i A_i − C ⪰ 0` with `b = −e_t`, it is solved by
//! an infeasible-start HKM method with Mehrotra correction.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{LinearKind, RawSolution, SdpBackend, SdpProblem, Sense, SolverOptions};

/// The built-in interior-point backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint;

impl SdpBackend for InteriorPoint {
    fn name(&self) -> &'static str {
        "hkm-ipm"
    }

    fn solve_raw(&self, problem: &SdpProblem, opts: &SolverOptions) -> RawSolution {
        let reduction = match Reduction::new(problem) {
            Ok(r) => r,
            Err(msg) => {
                return RawSolution {
                    values: None,
                    slack_upper: Some(f64::NEG_INFINITY),
                    slack: f64::NEG_INFINITY,
                    converged: true,
                    iterations: 0,
                    diagnostic: Some(msg),
                }
            }
        };
        let conic = Conic::build(problem, &reduction, opts.box_bound);
        let mut state = Solver::new(&conic);
        let mut out = state.run(&conic, opts, |y| {
            let x = reduction.expand(&y.as_slice()[..reduction.n_free]);
            super::verify_solution(problem, &super::Assignment { values: x }, 0.0).passed
        });
        if let Some(y) = out.y.take() {
            out.raw.values = Some(reduction.expand(&y.as_slice()[..reduction.n_free]));
        }
        out.raw
    }
}

/// Affine map `x = x₀ + N z` that satisfies every equality constraint.
struct Reduction {
    x0: Vec<f64>,
    /// Sparse rows of `N`.
    rows: Vec<Vec<(usize, f64)>>,
    n_free: usize,
}

impl Reduction {
    fn new(problem: &SdpProblem) -> Result<Self, String> {
        let n = problem.n_vars();
        let mut pinned: Vec<Option<f64>> = vec![None; n];
        let mut general = Vec::new();
        for c in problem.linear.iter().filter(|c| c.kind == LinearKind::Eq) {
            let nz: Vec<_> = c.coeffs.iter().filter(|(_, a)| *a != 0.0).collect();
            match nz.as_slice() {
                [(id, a)] if pinned[id.0].is_none() => pinned[id.0] = Some(-c.constant / a),
                _ => general.push(c),
            }
        }
        let free: Vec<usize> = (0..n).filter(|k| pinned[*k].is_none()).collect();
        let mut x0: Vec<f64> = pinned.iter().map(|p| p.unwrap_or(0.0)).collect();

        if general.is_empty() {
            let mut rows = vec![Vec::new(); n];
            for (j, k) in free.iter().enumerate() {
                rows[*k] = vec![(j, 1.0)];
            }
            return Ok(Self {
                x0,
                rows,
                n_free: free.len(),
            });
        }

        let col_of: BTreeMap<usize, usize> = free.iter().enumerate().map(|(j, k)| (*k, j)).collect();
        let ne = general.len();
        let mut e = DMatrix::zeros(ne, free.len());
        let mut rhs = DVector::zeros(ne);
        for (r, c) in general.iter().enumerate() {
            let mut constant = c.constant;
            for (id, a) in &c.coeffs {
                match col_of.get(&id.0) {
                    Some(j) => e[(r, *j)] += a,
                    None => constant += a * x0[id.0],
                }
            }
            rhs[r] = -constant;
        }
        let scale = 1.0 + rhs.amax();
        if free.is_empty() {
            if rhs.amax() > 1e-9 * scale {
                return Err("equality constraints are inconsistent".into());
            }
            return Ok(Self {
                x0,
                rows: vec![Vec::new(); n],
                n_free: 0,
            });
        }
        let svd = e.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let tol = smax * 1e-12 * (ne.max(free.len()) as f64);
        let particular = svd
            .solve(&rhs, tol)
            .map_err(|m| format!("equality elimination failed: {m}"))?;
        if (&e * &particular - &rhs).amax() > 1e-9 * scale {
            return Err("equality constraints are inconsistent".into());
        }
        for (j, k) in free.iter().enumerate() {
            x0[*k] = particular[j];
        }
        // nullspace from the full right-singular basis
        let full = e.transpose() * &e;
        let eig = full.symmetric_eigen();
        let basis: Vec<usize> = (0..free.len())
            .filter(|i| eig.eigenvalues[*i].abs() <= 1e-12 * smax * smax)
            .collect();
        let mut rows = vec![Vec::new(); n];
        for (j, k) in free.iter().enumerate() {
            rows[*k] = basis
                .iter()
                .enumerate()
                .filter_map(|(c, b)| {
                    let v = eig.eigenvectors[(j, *b)];
                    (v.abs() > 1e-14).then_some((c, v))
                })
                .collect();
        }
        Ok(Self {
            x0,
            rows,
            n_free: basis.len(),
        })
    }

    fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.x0
            .iter()
            .zip(&self.rows)
            .map(|(x0, row)| x0 + row.iter().map(|(j, v)| v * z[*j]).sum::<f64>())
            .collect()
    }
}

/// One semidefinite block, `Z = Σ y_i A_i − C`.
struct Block {
    c: DMatrix<f64>,
    a: Vec<(usize, DMatrix<f64>)>,
}

/// Dual-form conic data over `y = (z, t)`.
struct Conic {
    m: usize,
    b: DVector<f64>,
    blocks: Vec<Block>,
    /// Scalar rows `g_rᵀ y − c_r ≥ 0`, sparse.
    lp_g: Vec<Vec<(usize, f64)>>,
    lp_c: Vec<f64>,
    box_bound: f64,
}

impl Conic {
    fn build(problem: &SdpProblem, red: &Reduction, box_bound: f64) -> Self {
        let m = red.n_free + 1;
        let t = red.n_free;
        let mut b = DVector::zeros(m);
        b[t] = -1.0;

        let mut blocks = Vec::new();
        for lmi in &problem.lmis {
            let dim = lmi.expr.dim();
            if dim == 0 {
                continue;
            }
            let sign = match lmi.sense {
                Sense::PsdGe => 1.0,
                Sense::NsdLe => -1.0,
            };
            // constant part after substituting x₀
            let mut f0 = lmi.expr.constant.clone();
            let mut terms: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
            for (k, fk) in &lmi.expr.terms {
                if red.x0[*k] != 0.0 {
                    f0 += fk * red.x0[*k];
                }
                for (j, v) in &red.rows[*k] {
                    terms
                        .entry(*j)
                        .and_modify(|e| *e += fk * *v)
                        .or_insert_with(|| fk * *v);
                }
            }
            f0 *= sign;
            for d in 0..dim {
                f0[(d, d)] -= lmi.margin;
            }
            let mut scale = f0.amax();
            for m in terms.values_mut() {
                *m *= sign;
                scale = scale.max(m.amax());
            }
            let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let mut a: Vec<(usize, DMatrix<f64>)> = terms
                .into_iter()
                .filter(|(_, m)| m.amax() > 0.0)
                .map(|(j, m)| (j, m * s))
                .collect();
            a.push((t, -DMatrix::identity(dim, dim)));
            blocks.push(Block { c: -f0 * s, a });
        }

        let mut lp_g = Vec::new();
        let mut lp_c = Vec::new();
        for c in &problem.linear {
            let sign = match c.kind {
                LinearKind::Ge => 1.0,
                LinearKind::Le => -1.0,
                LinearKind::Eq => continue,
            };
            let mut h = c.constant;
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for (id, a) in &c.coeffs {
                h += a * red.x0[id.0];
                for (j, v) in &red.rows[id.0] {
                    *row.entry(*j).or_insert(0.0) += a * v;
                }
            }
            let h = sign * h - c.margin;
            let mut g: Vec<(usize, f64)> = row.into_iter().map(|(j, v)| (j, sign * v)).filter(|(_, v)| *v != 0.0).collect();
            // satisfied constant rows (e.g. pinned coefficients) would cap the slack at zero
            if g.is_empty() && h >= 0.0 {
                continue;
            }
            let scale = g.iter().map(|(_, v)| v.abs()).fold(h.abs(), f64::max);
            let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            for (_, v) in g.iter_mut() {
                *v *= s;
            }
            g.push((t, -1.0));
            lp_g.push(g);
            lp_c.push(-h * s);
        }
        for j in 0..red.n_free {
            lp_g.push(vec![(j, -1.0 / box_bound)]);
            lp_c.push(-1.0);
            lp_g.push(vec![(j, 1.0 / box_bound)]);
            lp_c.push(-1.0);
        }
        lp_g.push(vec![(t, -1.0)]);
        lp_c.push(-1.0);

        Self {
            m,
            b,
            blocks,
            lp_g,
            lp_c,
            box_bound,
        }
    }

    fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.c.nrows()).sum::<usize>() + self.lp_c.len()
    }

    /// `Σ y_i A_i − C` per block and per scalar row.
    fn slack(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let mats = self
            .blocks
            .iter()
            .map(|blk| {
                let mut z = -&blk.c;
                for (i, a) in &blk.a {
                    if y[*i] != 0.0 {
                        z += a * y[*i];
                    }
                }
                z
            })
            .collect();
        let lp = DVector::from_iterator(
            self.lp_c.len(),
            self.lp_g
                .iter()
                .zip(&self.lp_c)
                .map(|(g, c)| g.iter().map(|(i, v)| v * y[*i]).sum::<f64>() - c),
        );
        (mats, lp)
    }

    /// `𝒜(X)`.
    fn apply(&self, xs: &[DMatrix<f64>], xl: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, x) in self.blocks.iter().zip(xs) {
            for (i, a) in &blk.a {
                out[*i] += a.dot(x);
            }
        }
        for (g, x) in self.lp_g.iter().zip(xl.iter()) {
            for (i, v) in g {
                out[*i] += v * x;
            }
        }
        out
    }

    fn primal_objective(&self, xs: &[DMatrix<f64>], xl: &DVector<f64>) -> f64 {
        self.blocks.iter().zip(xs).map(|(b, x)| b.c.dot(x)).sum::<f64>()
            + self.lp_c.iter().zip(xl.iter()).map(|(c, x)| c * x).sum::<f64>()
    }

    fn data_norm(&self) -> f64 {
        let c = self.blocks.iter().map(|b| b.c.norm_squared()).sum::<f64>()
            + self.lp_c.iter().map(|c| c * c).sum::<f64>();
        c.sqrt()
    }
}

struct Solver {
    y: DVector<f64>,
    xs: Vec<DMatrix<f64>>,
    zs: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    zl: DVector<f64>,
}

struct RunOutput {
    raw: RawSolution,
    y: Option<DVector<f64>>,
}

struct Direction {
    dy: DVector<f64>,
    dxs: Vec<DMatrix<f64>>,
    dzs: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    dzl: DVector<f64>,
}

impl Solver {
    fn new(conic: &Conic) -> Self {
        let n = conic.total_dim().max(1) as f64;
        let mut a_norm = vec![0.0f64; conic.m];
        for blk in &conic.blocks {
            for (i, a) in &blk.a {
                a_norm[*i] += a.norm_squared();
            }
        }
        for g in &conic.lp_g {
            for (i, v) in g {
                a_norm[*i] += v * v;
            }
        }
        let a_norm: Vec<f64> = a_norm.into_iter().map(f64::sqrt).collect();
        let xi = a_norm
            .iter()
            .zip(conic.b.iter())
            .map(|(an, bi)| (1.0 + bi.abs()) / (1.0 + an))
            .fold(1.0, f64::max)
            * n.sqrt();
        let eta = (1.0 + a_norm.iter().copied().fold(conic.data_norm(), f64::max)) / n.sqrt();
        Self {
            y: DVector::zeros(conic.m),
            xs: conic.blocks.iter().map(|b| DMatrix::identity(b.c.nrows(), b.c.nrows()) * xi).collect(),
            zs: conic.blocks.iter().map(|b| DMatrix::identity(b.c.nrows(), b.c.nrows()) * eta).collect(),
            xl: DVector::from_element(conic.lp_c.len(), xi),
            zl: DVector::from_element(conic.lp_c.len(), eta),
        }
    }

    fn mu(&self, conic: &Conic) -> f64 {
        let s: f64 = self.xs.iter().zip(&self.zs).map(|(x, z)| x.dot(z)).sum::<f64>() + self.xl.dot(&self.zl);
        s / conic.total_dim().max(1) as f64
    }

    fn run(&mut self, conic: &Conic, opts: &SolverOptions, mut accept: impl FnMut(&DVector<f64>) -> bool) -> RunOutput {
        let t = conic.m - 1;
        let b_norm = conic.b.norm();
        let c_norm = conic.data_norm();
        let mut last_checked_t = f64::NEG_INFINITY;
        let mut diagnostic = None;
        let mut converged = false;
        let mut slack_upper = None;
        let mut iterations = 0;

        for it in 0..opts.max_iterations {
            iterations = it + 1;
            let (sy, sl) = conic.slack(&self.y);
            let rd: Vec<DMatrix<f64>> = sy.iter().zip(&self.zs).map(|(s, z)| s - z).collect();
            let rdl = &sl - &self.zl;
            let rp = &conic.b - conic.apply(&self.xs, &self.xl);
            let pinf = rp.norm() / (1.0 + b_norm);
            let dinf = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rdl.norm_squared()).sqrt() / (1.0 + c_norm);
            let pobj = conic.primal_objective(&self.xs, &self.xl);
            let dobj = conic.b.dot(&self.y);
            let gap = (dobj - pobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let mu = self.mu(conic);
            let yt = self.y[t];
            log::trace!("it {it} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e} mu {mu:.2e} t {yt:.4e}");

            // Weak duality with the residual charged against the box: any dual point with
            // slack >= -tol has |y_j| <= box_bound and |t| <= 1, so its slack is below `bound`.
            let bound = -pobj
                + conic.box_bound * rp.rows(0, t).abs().sum()
                + rp[t].abs();
            if bound < -1e-6 {
                slack_upper = Some(bound);
                converged = true;
                break;
            }
            if dinf < 1e-9 && yt > 0.0 && yt > 2.0 * last_checked_t.max(0.0) {
                last_checked_t = yt;
                if accept(&self.y) {
                    converged = true;
                    break;
                }
            }
            if pinf < opts.accuracy && dinf < opts.accuracy && gap < opts.accuracy {
                converged = true;
                slack_upper = Some(bound);
                break;
            }

            let zinv = match self.zs.iter().map(inverse_spd).collect::<Option<Vec<_>>>() {
                Some(v) => v,
                None => {
                    diagnostic = Some(format!("dual slack lost definiteness at iteration {it}"));
                    break;
                }
            };
            let schur = self.schur(conic, &zinv);
            let Some(schur) = factor(schur) else {
                diagnostic = Some(format!("Schur complement singular at iteration {it}"));
                break;
            };

            // predictor
            let ks: Vec<DMatrix<f64>> = self.xs.iter().map(|x| DMatrix::zeros(x.nrows(), x.nrows())).collect();
            let kl = DVector::zeros(self.xl.len());
            let aff = self.direction(conic, &schur, &zinv, &rd, &rdl, &ks, &kl);
            let ap = self.primal_step(&aff).min(1.0);
            let ad = self.dual_step(&aff).min(1.0);
            let mu_aff = {
                let s: f64 = self
                    .xs
                    .iter()
                    .zip(&aff.dxs)
                    .zip(self.zs.iter().zip(&aff.dzs))
                    .map(|((x, dx), (z, dz))| (x + dx * ap).dot(&(z + dz * ad)))
                    .sum::<f64>()
                    + (&self.xl + &aff.dxl * ap).dot(&(&self.zl + &aff.dzl * ad));
                s / conic.total_dim().max(1) as f64
            };
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let ks: Vec<DMatrix<f64>> = aff
                .dxs
                .iter()
                .zip(&aff.dzs)
                .map(|(dx, dz)| {
                    let mut k = -(dx * dz);
                    for d in 0..k.nrows() {
                        k[(d, d)] += sigma * mu;
                    }
                    k
                })
                .collect();
            let kl = DVector::from_iterator(
                self.xl.len(),
                aff.dxl.iter().zip(aff.dzl.iter()).map(|(dx, dz)| sigma * mu - dx * dz),
            );
            let dir = self.direction(conic, &schur, &zinv, &rd, &rdl, &ks, &kl);
            let ap = (0.95 * self.primal_step(&dir)).min(1.0);
            let ad = (0.95 * self.dual_step(&dir)).min(1.0);
            if ap < 1e-12 && ad < 1e-12 {
                diagnostic = Some(format!("step length stalled at iteration {it}"));
                break;
            }
            for (x, dx) in self.xs.iter_mut().zip(&dir.dxs) {
                *x += dx * ap;
            }
            self.xl += &dir.dxl * ap;
            self.y += &dir.dy * ad;
            for (z, dz) in self.zs.iter_mut().zip(&dir.dzs) {
                *z += dz * ad;
            }
            self.zl += &dir.dzl * ad;
        }

        let slack = self.y[t];
        RunOutput {
            y: Some(self.y.clone()),
            raw: RawSolution {
                values: None,
                slack_upper,
                slack,
                converged,
                iterations,
                diagnostic,
            },
        }
    }

    fn schur(&self, conic: &Conic, zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = conic.m;
        let mut schur = DMatrix::zeros(m, m);
        for ((blk, x), zi) in conic.blocks.iter().zip(&self.xs).zip(zinv) {
            let ws: Vec<DMatrix<f64>> = blk.a.iter().map(|(_, a)| x * a * zi).collect();
            for (p, (i, ai)) in blk.a.iter().enumerate() {
                for (q, (j, _)) in blk.a.iter().enumerate().skip(p) {
                    let v = ai.dot(&ws[q]);
                    schur[(*i, *j)] += v;
                    if p != q {
                        schur[(*j, *i)] += v;
                    }
                }
            }
        }
        for ((g, x), z) in conic.lp_g.iter().zip(self.xl.iter()).zip(self.zl.iter()) {
            let w = x / z;
            for (i, vi) in g {
                for (j, vj) in g {
                    schur[(*i, *j)] += w * vi * vj;
                }
            }
        }
        schur
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        conic: &Conic,
        schur: &Factor,
        zinv: &[DMatrix<f64>],
        rd: &[DMatrix<f64>],
        rdl: &DVector<f64>,
        ks: &[DMatrix<f64>],
        kl: &DVector<f64>,
    ) -> Direction {
        let mut rhs = -&conic.b;
        let mut ws = Vec::with_capacity(conic.blocks.len());
        for (((blk, x), zi), (r, k)) in conic.blocks.iter().zip(&self.xs).zip(zinv).zip(rd.iter().zip(ks)) {
            let w = (k - x * r) * zi;
            let w = (&w + w.transpose()) * 0.5;
            for (i, a) in &blk.a {
                rhs[*i] += a.dot(&w);
            }
            ws.push(w);
        }
        for (r, g) in conic.lp_g.iter().enumerate() {
            let v = (kl[r] - self.xl[r] * rdl[r]) / self.zl[r];
            for (i, gi) in g {
                rhs[*i] += gi * v;
            }
        }
        let dy = schur.solve(&rhs);

        let mut dzs = Vec::with_capacity(conic.blocks.len());
        let mut dxs = Vec::with_capacity(conic.blocks.len());
        for ((((blk, x), zi), r), k) in conic.blocks.iter().zip(&self.xs).zip(zinv).zip(rd).zip(ks) {
            let mut dz = r.clone();
            for (i, a) in &blk.a {
                if dy[*i] != 0.0 {
                    dz += a * dy[*i];
                }
            }
            let dx = (k - x * &dz) * zi - x;
            let dx = (&dx + dx.transpose()) * 0.5;
            dzs.push(dz);
            dxs.push(dx);
        }
        let dzl = DVector::from_iterator(
            self.zl.len(),
            conic
                .lp_g
                .iter()
                .zip(rdl.iter())
                .map(|(g, r)| r + g.iter().map(|(i, v)| v * dy[*i]).sum::<f64>()),
        );
        let dxl = DVector::from_iterator(
            self.xl.len(),
            (0..self.xl.len()).map(|r| kl[r] / self.zl[r] - self.xl[r] - self.xl[r] * dzl[r] / self.zl[r]),
        );
        Direction { dy, dxs, dzs, dxl, dzl }
    }

    fn primal_step(&self, d: &Direction) -> f64 {
        let mut s = max_step_vec(&self.xl, &d.dxl);
        for (x, dx) in self.xs.iter().zip(&d.dxs) {
            s = s.min(max_step_psd(x, dx));
        }
        s
    }

    fn dual_step(&self, d: &Direction) -> f64 {
        let mut s = max_step_vec(&self.zl, &d.dzl);
        for (z, dz) in self.zs.iter().zip(&d.dzs) {
            s = s.min(max_step_psd(z, dz));
        }
        s
    }
}

enum Factor {
    Chol(Cholesky<f64, Dyn>),
    Lu(nalgebra::LU<f64, Dyn, Dyn>),
}

impl Factor {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Chol(c) => c.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}

fn factor(m: DMatrix<f64>) -> Option<Factor> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(Factor::Chol(c));
    }
    let reg = 1e-12 * m.diagonal().amax().max(1e-300);
    let mut shifted = m.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += reg;
    }
    if let Some(c) = Cholesky::new(shifted) {
        return Some(Factor::Chol(c));
    }
    let lu = m.lu();
    lu.is_invertible().then_some(Factor::Lu(lu))
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = Cholesky::new(m.clone())?.inverse();
    Some((&inv + inv.transpose()) * 0.5)
}

fn max_step_vec(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// Largest `s` with `x + s·dx ⪰ 0`, for `x ≻ 0`.
fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(tmp) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(w) = l.solve_lower_triangular(&tmp.transpose()) else {
        return 0.0;
    };
    let w = (&w + w.transpose()) * 0.5;
    let lo = w.symmetric_eigenvalues().min();
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}
