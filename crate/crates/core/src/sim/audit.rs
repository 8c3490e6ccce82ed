use nalgebra::DVector;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{dim_err, Error, Result};
use crate::zf::{impulse_h, PTemplate, PValues, ZfConfig};

use super::fields::check_pair;

/// Outcome of [`empirical_zf_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZfAudit {
    /// Minimum of the weighted integral over the `T` grid.
    pub min_integral: f64,
    pub argmin_t: f64,
    /// `∫ e^{2αt}(‖p‖² + ‖q‖²) dt` over the whole record.
    pub energy: f64,
    /// `(T, integral)` for every grid point.
    pub integrals: Vec<(f64, f64)>,
}

impl ZfAudit {
    /// `min_integral / energy`, zero for a silent record.
    pub fn relative(&self) -> f64 {
        if self.energy > 0.0 {
            self.min_integral / self.energy
        } else {
            0.0
        }
    }
}

fn sector_signals(y: &[DVector<f64>], u: &[DVector<f64>], m: f64, l: f64) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    if y.len() != u.len() || y.is_empty() {
        return Err(dim_err("audit record", "equal non-zero lengths", format!("{} and {}", y.len(), u.len())));
    }
    let d = y[0].len();
    if y.iter().chain(u).any(|v| v.len() != d) {
        return Err(dim_err("audit sample width", d, "mixed"));
    }
    // ũ = ∇f(ỹ + y*) with ∇f(y*) = 0, so each sample pairs with the origin
    for (yk, uk) in y.iter().zip(u) {
        check_pair(yk, uk, m, l)?;
    }
    let n = y.len();
    for k in 0..n.min(64) {
        let (i, j) = (k * n / 64, (k * n / 64 + n / 3 + 1) % n);
        check_pair(&(&y[i] - &y[j]), &(&u[i] - &u[j]), m, l)?;
    }
    let p = y.iter().zip(u).map(|(yk, uk)| uk - yk * m).collect();
    let q = y.iter().zip(u).map(|(yk, uk)| yk * l - uk).collect();
    Ok((p, q))
}

/// `w[i] ≈ ∫₀^{t_i} k(t_i − τ) s(τ) dτ` by the trapezoid rule on the sample grid.
fn causal_convolution(kernel: &[f64], sig: &[f64], dt: f64) -> Vec<f64> {
    let n = sig.len();
    if kernel.iter().all(|k| *k == 0.0) {
        return vec![0.0; n];
    }
    let len = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut a: Vec<Complex64> = (0..len).map(|i| Complex64::new(if i < n { kernel[i] } else { 0.0 }, 0.0)).collect();
    let mut b: Vec<Complex64> = (0..len).map(|i| Complex64::new(if i < n { sig[i] } else { 0.0 }, 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    (0..n)
        .map(|i| {
            let full = a[i].re / len as f64;
            dt * (full - 0.5 * kernel[i] * sig[0] - 0.5 * kernel[0] * sig[i])
        })
        .collect()
}

fn grid_index(t: f64, dt: f64, n: usize) -> usize {
    ((t / dt).round().max(0.0) as usize).min(n - 1)
}

/// Minimum over `t_grid` of
/// `∫₀ᵀ e^{2αt}(H pᵀq − pᵀw₁ − qᵀw₂) dt` for a sampled pair `(ỹ, ũ)`, with
/// `w₁ = (e^{−2α·}h)⋆q` over the causal part of `h` and `w₂` the same over the
/// mirrored anti-causal part acting on `p`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_zf_check(
    y_tilde: &[DVector<f64>],
    u_tilde: &[DVector<f64>],
    dt: f64,
    m: f64,
    l: f64,
    cfg: &ZfConfig,
    values: &PValues,
    t_grid: &[f64],
) -> Result<ZfAudit> {
    PTemplate::new(*cfg)?.check(values, 1e-9)?;
    if t_grid.is_empty() || !(dt > 0.0) {
        return Err(Error::InvalidParameter("audit needs dt > 0 and a non-empty T grid".into()));
    }
    let (p, q) = sector_signals(y_tilde, u_tilde, m, l)?;
    let n = p.len();
    let d = p[0].len();
    let alpha = cfg.rate;
    let kernel = |coeffs: &[f64]| -> Vec<f64> {
        let one_sided = PValues {
            h: values.h,
            causal: coeffs.to_vec(),
            anticausal: Vec::new(),
        };
        (0..n)
            .map(|j| {
                let s = j as f64 * dt;
                (-2.0 * alpha * s).exp() * impulse_h(&one_sided, cfg.pole, s)
            })
            .collect()
    };
    let k1 = kernel(&values.causal);
    let k2 = kernel(&values.anticausal);
    let mut integrand = vec![0.0; n];
    let mut power = vec![0.0; n];
    for c in 0..d {
        let qc: Vec<f64> = q.iter().map(|v| v[c]).collect();
        let pc: Vec<f64> = p.iter().map(|v| v[c]).collect();
        let w1 = causal_convolution(&k1, &qc, dt);
        let w2 = causal_convolution(&k2, &pc, dt);
        for k in 0..n {
            integrand[k] += values.h * pc[k] * qc[k] - pc[k] * w1[k] - qc[k] * w2[k];
            power[k] += pc[k] * pc[k] + qc[k] * qc[k];
        }
    }
    let mut cum = vec![0.0; n];
    let mut energy = 0.0;
    let weight = |k: usize| (2.0 * alpha * k as f64 * dt).exp();
    for k in 1..n {
        cum[k] = cum[k - 1] + 0.5 * dt * (weight(k - 1) * integrand[k - 1] + weight(k) * integrand[k]);
        energy += 0.5 * dt * (weight(k - 1) * power[k - 1] + weight(k) * power[k]);
    }
    let integrals: Vec<(f64, f64)> = t_grid.iter().map(|t| (*t, cum[grid_index(*t, dt, n)])).collect();
    let (argmin_t, min_integral) = integrals
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    Ok(ZfAudit {
        min_integral,
        argmin_t,
        energy,
        integrals,
    })
}

/// Minimum over `taus × t_grid` of
/// `Σ_{t ≤ T} e^{2αt} p(t)ᵀ(q(t) − β(τ) q_T(t − τ)) dt` with
/// `β(τ) = min{1, e^{−2ατ}}` and `q_T` zero outside `[0, T]`. Shifts are
/// rounded to the sample grid.
#[allow(clippy::too_many_arguments)]
pub fn lemma_shift_check(
    y_tilde: &[DVector<f64>],
    u_tilde: &[DVector<f64>],
    dt: f64,
    m: f64,
    l: f64,
    alpha: f64,
    taus: &[f64],
    t_grid: &[f64],
) -> Result<f64> {
    if !(dt > 0.0) || !(alpha >= 0.0) {
        return Err(Error::InvalidParameter("lemma check needs dt > 0 and alpha >= 0".into()));
    }
    let (p, q) = sector_signals(y_tilde, u_tilde, m, l)?;
    let n = p.len();
    let mut worst = f64::INFINITY;
    for &tau in taus {
        let beta = (-2.0 * alpha * tau).exp().min(1.0);
        let s = (tau / dt).round() as i64;
        for &t in t_grid {
            let last = grid_index(t, dt, n) as i64;
            let mut sum = 0.0;
            for k in 0..=last {
                let j = k - s;
                let mut v = p[k as usize].dot(&q[k as usize]);
                if (0..=last).contains(&j) {
                    v -= beta * p[k as usize].dot(&q[j as usize]);
                }
                sum += (2.0 * alpha * k as f64 * dt).exp() * v;
            }
            worst = worst.min(sum * dt);
        }
    }
    Ok(worst)
}
