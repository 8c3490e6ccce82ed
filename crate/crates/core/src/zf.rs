//! Zames–Falb α-IQC multipliers.
//!
//! The kernel `h` is parameterized on the nonnegative basis
//! `t^{i-1} e^{-λt}/(i-1)!` (causal side, coefficients `c_i`) and its mirror
//! image on `t < 0` (anti-causal side, coefficients `a_j`). With nonnegative
//! coefficients `h ≥ 0` holds pointwise and `∫h = Σ c_i/λ^i + Σ a_j/λ^j`, so the
//! free-parameter set is a polyhedron in `(H, c, a)`.
//!
//! The exponentially weighted kernels `e^{-2αs} h(±s)` are realized by chains
//! of first-order filters with the common pole `-(λ + 2α)`; `Π` maps
//! `[ỹ; ũ]` to `z̃ = (p, q, φ₁[q]..φ_ν[q], φ₁[p]..φ_ν[p])`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ss::StateSpace;

/// Support of the kernel `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MultiplierClass {
    /// Static sector multiplier, `h ≡ 0`.
    #[serde(rename = "CC")]
    CircleCriterion,
    #[serde(rename = "causal")]
    Causal,
    #[serde(rename = "anticausal")]
    AntiCausal,
    #[serde(rename = "noncausal")]
    NonCausal,
}

impl MultiplierClass {
    pub const ALL: [MultiplierClass; 4] = [
        MultiplierClass::CircleCriterion,
        MultiplierClass::Causal,
        MultiplierClass::AntiCausal,
        MultiplierClass::NonCausal,
    ];

    pub fn has_causal(self) -> bool {
        matches!(self, MultiplierClass::Causal | MultiplierClass::NonCausal)
    }

    pub fn has_anticausal(self) -> bool {
        matches!(self, MultiplierClass::AntiCausal | MultiplierClass::NonCausal)
    }

    pub fn label(self) -> &'static str {
        match self {
            MultiplierClass::CircleCriterion => "CC",
            MultiplierClass::Causal => "causal",
            MultiplierClass::AntiCausal => "anticausal",
            MultiplierClass::NonCausal => "noncausal",
        }
    }
}

impl fmt::Display for MultiplierClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MultiplierClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cc" | "circle" | "circlecriterion" => Ok(MultiplierClass::CircleCriterion),
            "causal" => Ok(MultiplierClass::Causal),
            "anticausal" => Ok(MultiplierClass::AntiCausal),
            "noncausal" => Ok(MultiplierClass::NonCausal),
            other => Err(Error::InvalidParameter(format!("unknown multiplier class `{other}`"))),
        }
    }
}

/// Order, basis pole, rate and class of a multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZfConfig {
    pub order: usize,
    pub pole: f64,
    pub rate: f64,
    pub class: MultiplierClass,
}

impl ZfConfig {
    pub fn circle(rate: f64) -> Self {
        Self {
            order: 0,
            pole: 1.0,
            rate,
            class: MultiplierClass::CircleCriterion,
        }
    }

    pub fn new(class: MultiplierClass, order: usize, pole: f64, rate: f64) -> Result<Self> {
        let cfg = Self {
            order,
            pole,
            rate,
            class,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rate(self, rate: f64) -> Self {
        Self { rate, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pole > 0.0 && self.pole.is_finite()) {
            return Err(Error::InvalidParameter(format!("multiplier pole must be positive, got {}", self.pole)));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be nonnegative, got {}", self.rate)));
        }
        match self.class {
            MultiplierClass::CircleCriterion if self.order != 0 => Err(Error::InvalidParameter(
                "circle-criterion multiplier has order 0".into(),
            )),
            MultiplierClass::CircleCriterion => Ok(()),
            _ if self.order == 0 => Err(Error::InvalidParameter(
                "dynamic Zames-Falb multiplier needs order >= 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Pole of every filter in `Π`.
    pub fn filter_pole(&self) -> f64 {
        -(self.pole + 2.0 * self.rate)
    }

    /// Per-channel size of `z̃` (and of `P`).
    pub fn z_width(&self) -> usize {
        2 + 2 * self.order
    }
}

/// Free parameters of the multiplier: `H`, causal `c`, anti-causal `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValues {
    pub h: f64,
    pub causal: Vec<f64>,
    pub anticausal: Vec<f64>,
}

impl PValues {
    pub fn circle(h: f64) -> Self {
        Self {
            h,
            causal: Vec::new(),
            anticausal: Vec::new(),
        }
    }

    /// `∫ h(s) ds` for kernel pole `pole`.
    pub fn kernel_integral(&self, pole: f64) -> f64 {
        let side = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(i, c)| c / pole.powi(i as i32 + 1))
                .sum::<f64>()
        };
        side(&self.causal) + side(&self.anticausal)
    }
}

/// Linear description of the admissible parameter set for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PTemplate {
    pub cfg: ZfConfig,
}

impl PTemplate {
    pub fn new(cfg: ZfConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn n_causal(&self) -> usize {
        if self.cfg.class.has_causal() {
            self.cfg.order
        } else {
            0
        }
    }

    pub fn n_anticausal(&self) -> usize {
        if self.cfg.class.has_anticausal() {
            self.cfg.order
        } else {
            0
        }
    }

    /// Weight of each coefficient in the integral bound, `1/λ^i`.
    pub fn integral_weights(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|i| self.cfg.pole.powi(-(i as i32))).collect()
    }

    /// Checks membership with an absolute slack `tol`.
    pub fn check(&self, v: &PValues, tol: f64) -> Result<()> {
        let nu = self.cfg.order;
        let ok_len = |vals: &[f64], allowed: usize| vals.len() <= nu && (allowed > 0 || vals.iter().all(|x| *x == 0.0));
        if !ok_len(&v.causal, self.n_causal()) {
            return Err(Error::Rejected(format!("causal coefficients not admissible for class {}", self.cfg.class)));
        }
        if !ok_len(&v.anticausal, self.n_anticausal()) {
            return Err(Error::Rejected(format!(
                "anti-causal coefficients not admissible for class {}",
                self.cfg.class
            )));
        }
        if let Some(c) = v.causal.iter().chain(&v.anticausal).find(|c| **c < -tol) {
            return Err(Error::Rejected(format!("negative kernel coefficient {c}")));
        }
        let integral = v.kernel_integral(self.cfg.pole);
        if integral > v.h + tol {
            return Err(Error::Rejected(format!("kernel integral {integral} exceeds H = {}", v.h)));
        }
        Ok(())
    }
}

/// The sector transformation `[ỹ; ũ] ↦ [p; q]` with `p = ũ - mỹ`, `q = Lỹ - ũ`.
pub fn sector_transform(m: f64, l: f64, d: usize) -> Result<StateSpace> {
    check_sector(m, l)?;
    StateSpace::static_gain(sector_matrix(m, l, d))
}

pub(crate) fn check_sector(m: f64, l: f64) -> Result<()> {
    if !(m > 0.0 && m <= l && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("sector requires 0 < m <= L, got m = {m}, L = {l}")));
    }
    Ok(())
}

fn sector_matrix(m: f64, l: f64, d: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        s[(i, i)] = -m;
        s[(i, d + i)] = 1.0;
        s[(d + i, i)] = l;
        s[(d + i, d + i)] = -1.0;
    }
    s
}

/// Channel blocks of `z̃`, each `d` wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZChannel {
    P,
    Q,
    FilteredQ(usize),
    FilteredP(usize),
}

/// `Π` together with its output layout.
#[derive(Debug, Clone)]
pub struct MultiplierRealization {
    pub pi: StateSpace,
    pub layout: Vec<ZChannel>,
    pub cfg: ZfConfig,
    pub d: usize,
}

/// Builds `Π` (sector transform followed by the filter banks).
pub fn build_multiplier(m: f64, l: f64, d: usize, cfg: &ZfConfig) -> Result<MultiplierRealization> {
    cfg.validate()?;
    check_sector(m, l)?;
    if d == 0 {
        return Err(Error::InvalidParameter("channel dimension d must be positive".into()));
    }
    let nu = cfg.order;
    let pole = cfg.filter_pole();
    let n = 2 * nu * d;
    let w = cfg.z_width();
    let s = sector_matrix(m, l, d);

    // states: q-chain blocks 0..nu, then p-chain blocks nu..2nu
    let mut a = DMatrix::zeros(n, n);
    for chain in 0..2 {
        for k in 0..nu {
            let blk = (chain * nu + k) * d;
            for i in 0..d {
                a[(blk + i, blk + i)] = pole;
                if k > 0 {
                    a[(blk + i, blk - d + i)] = 1.0;
                }
            }
        }
    }
    let mut b = DMatrix::zeros(n, 2 * d);
    if nu > 0 {
        // first q filter driven by q = rows d..2d of S, first p filter by p = rows 0..d
        b.view_mut((0, 0), (d, 2 * d)).copy_from(&s.rows(d, d));
        b.view_mut((nu * d, 0), (d, 2 * d)).copy_from(&s.rows(0, d));
    }
    let mut c = DMatrix::zeros(w * d, n);
    for k in 0..2 * nu {
        for i in 0..d {
            c[((2 + k) * d + i, k * d + i)] = 1.0;
        }
    }
    let mut dm = DMatrix::zeros(w * d, 2 * d);
    dm.view_mut((0, 0), (2 * d, 2 * d)).copy_from(&s);

    let mut layout = vec![ZChannel::P, ZChannel::Q];
    layout.extend((1..=nu).map(ZChannel::FilteredQ));
    layout.extend((1..=nu).map(ZChannel::FilteredP));

    Ok(MultiplierRealization {
        pi: StateSpace::new(a, b, c, dm)?,
        layout,
        cfg: *cfg,
        d,
    })
}

/// Elementary matrices of `P`: `P = H·E_H + Σ c_i E_{c_i} + Σ a_j E_{a_j}`.
pub(crate) struct PBasis {
    pub h: DMatrix<f64>,
    pub causal: Vec<DMatrix<f64>>,
    pub anticausal: Vec<DMatrix<f64>>,
}

pub(crate) fn p_basis(template: &PTemplate) -> PBasis {
    let nu = template.cfg.order;
    let w = template.cfg.z_width();
    let sym = |i: usize, j: usize, v: f64| {
        let mut e = DMatrix::zeros(w, w);
        e[(i, j)] = v;
        e[(j, i)] = v;
        e
    };
    PBasis {
        h: sym(0, 1, 0.5),
        causal: (0..template.n_causal()).map(|i| sym(0, 2 + i, -0.5)).collect(),
        anticausal: (0..template.n_anticausal()).map(|j| sym(1, 2 + nu + j, -0.5)).collect(),
    }
}

/// The symmetric matrix `P` with `z̃ᵀ(P⊗I)z̃ = H pᵀq − Σ c_i pᵀφ_i[q] − Σ a_j qᵀφ_j[p]`.
pub fn p_quadratic_form(template: &PTemplate, values: &PValues) -> Result<DMatrix<f64>> {
    template.check(values, 1e-12)?;
    let basis = p_basis(template);
    let mut p = &basis.h * values.h;
    for (e, c) in basis.causal.iter().zip(&values.causal) {
        p += e * *c;
    }
    for (e, a) in basis.anticausal.iter().zip(&values.anticausal) {
        p += e * *a;
    }
    Ok(p)
}

/// The (unweighted) kernel `h(t)` at time `t`; the causal branch covers `t = 0`.
pub fn impulse_h(values: &PValues, pole: f64, t: f64) -> f64 {
    let (coeffs, s) = if t >= 0.0 {
        (&values.causal, t)
    } else {
        (&values.anticausal, -t)
    };
    let mut term = (-pole * s).exp();
    let mut sum = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        if i > 0 {
            term *= s / i as f64;
        }
        sum += c * term;
    }
    sum
}
