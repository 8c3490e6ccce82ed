//! Dense continuous-time state-space realizations and the handful of
//! interconnections the rate analysis needs.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};

/// A finite-dimensional LTI system `ẋ = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(dim_err("StateSpace::new (A square)", format!("{n}x{n}"), shape(&a)));
        }
        if b.nrows() != n {
            return Err(dim_err("StateSpace::new (rows of B)", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(dim_err("StateSpace::new (cols of C)", n, c.ncols()));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(dim_err(
                "StateSpace::new (D)",
                format!("{}x{}", c.nrows(), b.ncols()),
                shape(&d),
            ));
        }
        for m in [&a, &b, &c, &d] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite entry in realization".into()));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// A memoryless system `y = Du`.
    pub fn static_gain(d: DMatrix<f64>) -> Result<Self> {
        let (p, m) = d.shape();
        Self::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, m), DMatrix::zeros(p, 0), d)
    }

    /// Controllable canonical realization of a SISO transfer function.
    ///
    /// Coefficients are listed from the highest power of `s` down to the
    /// constant term; the numerator degree may not exceed the denominator's.
    pub fn from_transfer_function(num: &[f64], den: &[f64]) -> Result<Self> {
        let den = trim_leading_zeros(den);
        let num = trim_leading_zeros(num);
        if den.is_empty() {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        let n = den.len() - 1;
        if num.len() > den.len() {
            return Err(Error::InvalidParameter("improper transfer function".into()));
        }
        let lead = den[0];
        // monic denominator s^n + a_{n-1} s^{n-1} + ... + a_0, stored as a[k] for s^k
        let a_coef: Vec<f64> = (0..n).map(|k| den[n - k] / lead).collect();
        let mut b_coef = vec![0.0; n + 1];
        for (i, v) in num.iter().rev().enumerate() {
            b_coef[i] = v / lead;
        }
        let dff = b_coef[n];
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        if n > 0 {
            for k in 0..n {
                a[(n - 1, k)] = -a_coef[k];
            }
        }
        let mut b = DMatrix::zeros(n, 1);
        if n > 0 {
            b[(n - 1, 0)] = 1.0;
        }
        let mut c = DMatrix::zeros(1, n);
        for k in 0..n {
            c[(0, k)] = b_coef[k] - a_coef[k] * dff;
        }
        Self::new(a, b, c, DMatrix::from_element(1, 1, dff))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn nstates(&self) -> usize {
        self.a.nrows()
    }
    pub fn ninputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn noutputs(&self) -> usize {
        self.c.nrows()
    }

    /// Transfer matrix `C (sI - A)^{-1} B + D` at a complex frequency.
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.nstates();
        let d = self.d.map(Complex64::from);
        if n == 0 {
            return Ok(d);
        }
        let mut si_a = self.a.map(|v| Complex64::from(-v));
        for i in 0..n {
            si_a[(i, i)] += s;
        }
        let b = self.b.map(Complex64::from);
        let x = si_a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular(format!("sI - A at s = {s}")))?;
        Ok(self.c.map(Complex64::from) * x + d)
    }

    /// Frequency response at `s = jω`.
    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        self.eval(Complex64::new(0.0, omega))
    }
}

fn shape(m: &DMatrix<f64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

fn trim_leading_zeros(v: &[f64]) -> &[f64] {
    let first = v.iter().position(|x| *x != 0.0).unwrap_or(v.len());
    &v[first..]
}

/// 20 logarithmically spaced frequencies on `[1e-2, 1e2]`.
pub fn log_frequency_grid() -> Vec<f64> {
    (0..20).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0)).collect()
}

/// Series connection `outer ∘ inner`; the composite state is `[x_inner; x_outer]`.
pub fn series(outer: &StateSpace, inner: &StateSpace) -> Result<StateSpace> {
    if outer.ninputs() != inner.noutputs() {
        return Err(dim_err("series (outer inputs vs inner outputs)", inner.noutputs(), outer.ninputs()));
    }
    let (ni, no) = (inner.nstates(), outer.nstates());
    let n = ni + no;
    let m = inner.ninputs();
    let p = outer.noutputs();

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (ni, ni)).copy_from(&inner.a);
    a.view_mut((ni, 0), (no, ni)).copy_from(&(&outer.b * &inner.c));
    a.view_mut((ni, ni), (no, no)).copy_from(&outer.a);

    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (ni, m)).copy_from(&inner.b);
    b.view_mut((ni, 0), (no, m)).copy_from(&(&outer.b * &inner.d));

    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, ni)).copy_from(&(&outer.d * &inner.c));
    c.view_mut((0, ni), (p, no)).copy_from(&outer.c);

    let d = &outer.d * &inner.d;
    StateSpace::new(a, b, c, d)
}

/// Stacks the input under the output: `[G; I]`.
pub fn augment_with_identity(g: &StateSpace) -> StateSpace {
    let (n, m, p) = (g.nstates(), g.ninputs(), g.noutputs());
    let mut c = DMatrix::zeros(p + m, n);
    c.view_mut((0, 0), (p, n)).copy_from(&g.c);
    let mut d = DMatrix::zeros(p + m, m);
    d.view_mut((0, 0), (p, m)).copy_from(&g.d);
    d.view_mut((p, 0), (m, m)).fill_with_identity();
    StateSpace {
        a: g.a.clone(),
        b: g.b.clone(),
        c,
        d,
    }
}

/// `k` decoupled copies of `G` acting on consecutive channel blocks (`I_k ⊗ G`).
pub fn kron_lift(g: &StateSpace, k: usize) -> Result<StateSpace> {
    if k == 0 {
        return Err(Error::InvalidParameter("kron_lift requires k >= 1".into()));
    }
    let rep = |m: &DMatrix<f64>| block_diag_repeat(m, k);
    StateSpace::new(rep(&g.a), rep(&g.b), rep(&g.c), rep(&g.d))
}

pub(crate) fn block_diag_repeat(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(r * k, c * k);
    for i in 0..k {
        out.view_mut((i * r, i * c), (r, c)).copy_from(m);
    }
    out
}

/// Largest real part over the eigenvalues of a square matrix (`-inf` if empty).
/// Eigenvalues of a square matrix. The unbounded QR iteration in nalgebra can
/// cycle on defective matrices, so the Schur form is computed with an
/// iteration cap and retried on shifted copies.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let scale = 1.0 + a.amax();
    for shift in [0.0, 0.37, -0.61, 1.3] {
        let shifted = a + DMatrix::identity(n, n) * (shift * scale);
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, 1000 * n) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| Complex64::new(z.re - shift * scale, z.im))
                .collect();
        }
    }
    vec![Complex64::new(f64::NAN, 0.0); n]
}

/// Largest real part of the spectrum; NaN if the eigenvalues could not be computed.
pub fn matrix_spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    let mut sa = f64::NEG_INFINITY;
    for z in eigenvalues(a) {
        if z.re.is_nan() {
            return f64::NAN;
        }
        sa = sa.max(z.re);
    }
    sa
}

pub fn spectral_abscissa(g: &StateSpace) -> f64 {
    matrix_spectral_abscissa(&g.a)
}

/// Outcome of the zero-steady-state-error check on a tracking loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingCheck {
    pub holds: bool,
    /// `‖-C A⁻¹ B_q - I‖_max`, `None` when `A` is singular.
    pub residual: Option<f64>,
    pub spectral_abscissa: f64,
    pub reason: Option<String>,
}

/// Hurwitz `A` and `-C A⁻¹ B_q = I`.
pub fn check_tracking_assumption(a: &DMatrix<f64>, b_q: &DMatrix<f64>, c: &DMatrix<f64>) -> TrackingCheck {
    let sa = matrix_spectral_abscissa(a);
    let lu = a.clone().lu();
    let Some(ainv_bq) = lu.solve(b_q) else {
        return TrackingCheck {
            holds: false,
            residual: None,
            spectral_abscissa: sa,
            reason: Some("A is singular".into()),
        };
    };
    if c.ncols() != a.nrows() || c.nrows() != b_q.ncols() {
        return TrackingCheck {
            holds: false,
            residual: None,
            spectral_abscissa: sa,
            reason: Some("C A^-1 B_q is not square".into()),
        };
    }
    let g = -(c * ainv_bq);
    let res = (&g - DMatrix::identity(g.nrows(), g.ncols())).amax();
    let mut reason = None;
    if sa >= 0.0 {
        reason = Some(format!("A not Hurwitz (spectral abscissa {sa})"));
    } else if res > 1e-9 {
        reason = Some(format!("-C A^-1 B_q deviates from identity by {res}"));
    }
    TrackingCheck {
        holds: reason.is_none(),
        residual: Some(res),
        spectral_abscissa: sa,
        reason,
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn stable_siso() -> impl Strategy<Value = StateSpace> {
        (1usize..4, proptest::collection::vec(-1.0f64..1.0, 16)).prop_map(|(n, v)| {
            let mut a = DMatrix::from_fn(n, n, |i, j| v[(i * 4 + j) % 16]);
            for i in 0..n {
                a[(i, i)] -= 3.0;
            }
            let b = DMatrix::from_fn(n, 1, |i, _| v[(i + 5) % 16] + 0.5);
            let c = DMatrix::from_fn(1, n, |_, j| v[(j + 9) % 16] - 0.2);
            StateSpace::new(a, b, c, DMatrix::from_element(1, 1, v[15])).unwrap()
        })
    }

    proptest! {
        #[test]
        fn series_is_associative(g1 in stable_siso(), g2 in stable_siso(), g3 in stable_siso()) {
            let left = series(&series(&g1, &g2).unwrap(), &g3).unwrap();
            let right = series(&g1, &series(&g2, &g3).unwrap()).unwrap();
            for w in log_frequency_grid() {
                let dl = left.freq_response(w).unwrap()[(0, 0)];
                let dr = right.freq_response(w).unwrap()[(0, 0)];
                prop_assert!((dl - dr).norm() < 1e-9);
            }
        }

        #[test]
        fn augment_keeps_state_dimension(g in stable_siso()) {
            let aug = augment_with_identity(&g);
            prop_assert_eq!(aug.nstates(), g.nstates());
            prop_assert_eq!(aug.noutputs(), g.noutputs() + g.ninputs());
        }

        #[test]
        fn kron_lift_is_block_diagonal(g in stable_siso(), k in 1usize..4) {
            let lifted = kron_lift(&g, k).unwrap();
            for w in [0.1, 1.0, 7.0] {
                let r = lifted.freq_response(w).unwrap();
                let s = g.freq_response(w).unwrap()[(0, 0)];
                for i in 0..k {
                    for j in 0..k {
                        let e = if i == j { s } else { Complex64::new(0.0, 0.0) };
                        prop_assert!((r[(i, j)] - e).norm() < 1e-9);
                    }
                }
            }
        }
    }
}
