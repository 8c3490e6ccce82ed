//! Scalar fields `ψ`, interaction potentials `V` and their sum `f`.

use nalgebra::{DMatrix, DVector};
use std::ops::{AddAssign, SubAssign};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_err, Error, Result};

/// `(1/ε)(√(1 + ε‖z‖²) − 1)`.
pub fn sigma_norm(z: &DVector<f64>, eps: f64) -> f64 {
    ((1.0 + eps * z.norm_squared()).sqrt() - 1.0) / eps
}

/// `∇‖z‖_σ = z / √(1 + ε‖z‖²)`.
pub fn sigma_norm_gradient(z: &DVector<f64>, eps: f64) -> DVector<f64> {
    z / (1.0 + eps * z.norm_squared()).sqrt()
}

/// A strongly convex field on `ℝᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    /// `½ (y − c)ᵀ H (y − c)`.
    Quadratic { hessian: DMatrix<f64>, center: DVector<f64> },
    /// `½ m r² + (L − m)(√(1 + r²) − 1)` with `r = ‖y − c‖`; radial curvature
    /// `m + (L−m)(1+r²)^{-3/2}`, tangential `m + (L−m)(1+r²)^{-1/2}`.
    Radial { center: DVector<f64>, m: f64, l: f64 },
    /// `ψ ≡ 0` on `ℝᵈ`.
    Zero { dim: usize },
}

impl ScalarField {
    pub fn quadratic(hessian: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if hessian.shape() != (center.len(), center.len()) {
            return Err(dim_err("quadratic field", format!("{0}x{0} Hessian", center.len()), format!("{:?}", hessian.shape())));
        }
        if (&hessian - hessian.transpose()).amax() > 1e-12 * (1.0 + hessian.amax()) {
            return Err(Error::InvalidParameter("quadratic field Hessian must be symmetric".into()));
        }
        Ok(Self::Quadratic { hessian, center })
    }

    /// `½ k ‖y − c‖²`.
    pub fn isotropic(k: f64, center: DVector<f64>) -> Self {
        let n = center.len();
        Self::Quadratic {
            hessian: DMatrix::identity(n, n) * k,
            center,
        }
    }

    pub fn radial(center: DVector<f64>, m: f64, l: f64) -> Result<Self> {
        if !(m > 0.0 && m <= l) {
            return Err(Error::InvalidParameter(format!("radial field needs 0 < m <= L, got {m}, {l}")));
        }
        Ok(Self::Radial { center, m, l })
    }

    /// Quadratic with Hessian eigenvalues log-uniform in `[m, l]` and a
    /// random orthogonal eigenbasis.
    pub fn random_quadratic<R: Rng>(rng: &mut R, center: DVector<f64>, m: f64, l: f64) -> Result<Self> {
        if !(m > 0.0 && m <= l) {
            return Err(Error::InvalidParameter(format!("random field needs 0 < m <= L, got {m}, {l}")));
        }
        let d = center.len();
        let eig: Vec<f64> = (0..d)
            .map(|_| (m.ln() + rng.gen::<f64>() * (l.ln() - m.ln())).exp())
            .collect();
        let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let h = &q * DMatrix::from_diagonal(&DVector::from_vec(eig)) * q.transpose();
        Self::quadratic((&h + h.transpose()) * 0.5, center)
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarField::Quadratic { center, .. } | ScalarField::Radial { center, .. } => center.len(),
            ScalarField::Zero { dim } => *dim,
        }
    }

    pub fn value(&self, y: &DVector<f64>) -> f64 {
        match self {
            ScalarField::Quadratic { hessian, center } => {
                let e = y - center;
                0.5 * e.dot(&(hessian * &e))
            }
            ScalarField::Radial { center, m, l } => {
                let r2 = (y - center).norm_squared();
                0.5 * m * r2 + (l - m) * ((1.0 + r2).sqrt() - 1.0)
            }
            ScalarField::Zero { .. } => 0.0,
        }
    }

    pub fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            ScalarField::Quadratic { hessian, center } => hessian * (y - center),
            ScalarField::Radial { center, m, l } => {
                let e = y - center;
                let s = m + (l - m) / (1.0 + e.norm_squared()).sqrt();
                e * s
            }
            ScalarField::Zero { dim } => DVector::zeros(*dim),
        }
    }

    /// Tight sector `(m, L)` when known.
    pub fn sector(&self) -> Option<(f64, f64)> {
        match self {
            ScalarField::Quadratic { hessian, .. } => {
                let e = hessian.clone().symmetric_eigenvalues();
                Some((e.min(), e.max()))
            }
            ScalarField::Radial { m, l, .. } => Some((*m, *l)),
            ScalarField::Zero { .. } => None,
        }
    }

    pub fn minimizer(&self) -> Option<DVector<f64>> {
        match self {
            ScalarField::Quadratic { center, .. } | ScalarField::Radial { center, .. } => Some(center.clone()),
            ScalarField::Zero { .. } => None,
        }
    }
}

/// Samples `n_pairs` random pairs and checks
/// `m‖Δy‖² ≤ Δ∇ᵀΔy ≤ L‖Δy‖²` with relative tolerance `1e−9`.
pub fn sector_spot_check<R, F>(grad: F, dim: usize, m: f64, l: f64, scale: f64, n_pairs: usize, rng: &mut R) -> Result<()>
where
    R: Rng,
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    for _ in 0..n_pairs {
        let a = DVector::from_fn(dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        check_pair(&(&a - &b), &(grad(&a) - grad(&b)), m, l)?;
    }
    Ok(())
}

pub(crate) fn check_pair(dy: &DVector<f64>, du: &DVector<f64>, m: f64, l: f64) -> Result<()> {
    let n2 = dy.norm_squared();
    let ip = du.dot(dy);
    let tol = 1e-9 * (n2 + du.norm_squared()).max(1e-300);
    if ip < m * n2 - tol || ip > l * n2 + tol {
        return Err(Error::Rejected(format!(
            "sector check failed: <du, dy> = {ip:e}, bounds [{:e}, {:e}]",
            m * n2,
            l * n2
        )));
    }
    Ok(())
}

/// Interaction term `V` of the network potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Interaction {
    None,
    /// `½ (y − r)ᵀ (ℒ ⊗ I_d)(y − r)`.
    LaplacianQuadratic { laplacian: DMatrix<f64>, r: DVector<f64> },
    /// `Σ_{(i,j)} k ½ (‖y_i − y_j‖_σ − dist)²`.
    SigmaFlocking { edges: Vec<(usize, usize)>, k: f64, dist: f64, eps: f64 },
    /// `Σ_{(i,j)} k ½ (‖y_i − y_j‖ − dist)²`, gradient taken as zero at coincident agents.
    Distance { edges: Vec<(usize, usize)>, k: f64, dist: f64 },
}

/// `f(y) = V(y) + Σ_{i ∈ informed} ψ(y_i)` on `ℝ^{Nd}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub n_agents: usize,
    pub d: usize,
    pub interaction: Interaction,
    pub informed: Vec<usize>,
    pub field: ScalarField,
}

impl Potential {
    pub fn new(n_agents: usize, interaction: Interaction, informed: Vec<usize>, field: ScalarField) -> Result<Self> {
        let d = field.dim();
        if n_agents == 0 || d == 0 {
            return Err(Error::InvalidParameter("potential needs at least one agent and d >= 1".into()));
        }
        if let Some(i) = informed.iter().find(|i| **i >= n_agents) {
            return Err(Error::InvalidParameter(format!("informed agent {i} outside 0..{n_agents}")));
        }
        match &interaction {
            Interaction::None => {}
            Interaction::LaplacianQuadratic { laplacian, r } => {
                if laplacian.shape() != (n_agents, n_agents) {
                    return Err(dim_err("potential Laplacian", format!("{n_agents}x{n_agents}"), format!("{:?}", laplacian.shape())));
                }
                if r.len() != n_agents * d {
                    return Err(dim_err("formation reference r", n_agents * d, r.len()));
                }
            }
            Interaction::SigmaFlocking { edges, .. } | Interaction::Distance { edges, .. } => {
                if let Some(e) = edges.iter().find(|(i, j)| *i >= n_agents || *j >= n_agents || i == j) {
                    return Err(Error::InvalidParameter(format!("bad interaction edge {e:?}")));
                }
            }
        }
        Ok(Self {
            n_agents,
            d,
            interaction,
            informed,
            field,
        })
    }

    /// A single agent in the field alone.
    pub fn single(field: ScalarField) -> Self {
        Self {
            n_agents: 1,
            d: field.dim(),
            interaction: Interaction::None,
            informed: vec![0],
            field,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_agents * self.d
    }

    fn block<'a>(&self, y: &'a DVector<f64>, i: usize) -> nalgebra::DVectorView<'a, f64> {
        y.rows(i * self.d, self.d)
    }

    pub fn value(&self, y: &DVector<f64>) -> f64 {
        let mut v = 0.0;
        match &self.interaction {
            Interaction::None => {}
            Interaction::LaplacianQuadratic { laplacian, r } => {
                let e = y - r;
                for i in 0..self.n_agents {
                    for j in 0..self.n_agents {
                        let lij = laplacian[(i, j)];
                        if lij != 0.0 {
                            v += 0.5 * lij * self.block(&e, i).dot(&self.block(&e, j));
                        }
                    }
                }
            }
            Interaction::SigmaFlocking { edges, k, dist, eps } => {
                for (i, j) in edges {
                    let z = self.block(y, *i) - self.block(y, *j);
                    let s = sigma_norm(&z, *eps) - dist;
                    v += 0.5 * k * s * s;
                }
            }
            Interaction::Distance { edges, k, dist } => {
                for (i, j) in edges {
                    let s = (self.block(y, *i) - self.block(y, *j)).norm() - dist;
                    v += 0.5 * k * s * s;
                }
            }
        }
        for &i in &self.informed {
            v += self.field.value(&self.block(y, i).into_owned());
        }
        v
    }

    pub fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        let d = self.d;
        let mut g = DVector::zeros(self.dim());
        match &self.interaction {
            Interaction::None => {}
            Interaction::LaplacianQuadratic { laplacian, r } => {
                let e = y - r;
                for i in 0..self.n_agents {
                    for j in 0..self.n_agents {
                        let lij = laplacian[(i, j)];
                        if lij != 0.0 {
                            let add = self.block(&e, j) * lij;
                            g.rows_mut(i * d, d).add_assign(&add);
                        }
                    }
                }
            }
            Interaction::SigmaFlocking { edges, k, dist, eps } => {
                for (i, j) in edges {
                    let z = self.block(y, *i) - self.block(y, *j);
                    let s = sigma_norm(&z, *eps) - dist;
                    let gi = sigma_norm_gradient(&z, *eps) * (k * s);
                    g.rows_mut(i * d, d).add_assign(&gi);
                    g.rows_mut(j * d, d).sub_assign(&gi);
                }
            }
            Interaction::Distance { edges, k, dist } => {
                for (i, j) in edges {
                    let z = self.block(y, *i) - self.block(y, *j);
                    let n = z.norm();
                    if n == 0.0 {
                        continue;
                    }
                    let gi = z * (k * (n - dist) / n);
                    g.rows_mut(i * d, d).add_assign(&gi);
                    g.rows_mut(j * d, d).sub_assign(&gi);
                }
            }
        }
        for &i in &self.informed {
            let gi = self.field.gradient(&self.block(y, i).into_owned());
            g.rows_mut(i * d, d).add_assign(&gi);
        }
        g
    }

    /// Fixed-step gradient descent until `‖∇f‖ ≤ tol`.
    pub fn descend(&self, y0: &DVector<f64>, step: f64, tol: f64, max_iter: usize) -> Result<DVector<f64>> {
        if y0.len() != self.dim() {
            return Err(dim_err("descent start", self.dim(), y0.len()));
        }
        let mut y = y0.clone();
        for _ in 0..max_iter {
            let g = self.gradient(&y);
            if g.norm() <= tol {
                return Ok(y);
            }
            y -= g * step;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::Simulation {
                    time: f64::NAN,
                    reason: "gradient descent diverged".into(),
                });
            }
        }
        Err(Error::Solver(format!("gradient descent did not reach |grad f| <= {tol:e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigma_norm_values() {
        assert_eq!(sigma_norm(&dvector![0.0, 0.0], 1.0), 0.0);
        assert!((sigma_norm(&dvector![0.6, 0.8], 1.0) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(sigma_norm_gradient(&dvector![0.0, 0.0], 1.0), dvector![0.0, 0.0]);
    }

    #[test]
    fn formation_example_gradient_vanishes_at_minimizer() {
        let lap = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let f = Potential::new(
            2,
            Interaction::LaplacianQuadratic {
                laplacian: lap,
                r: dvector![0.0, 1.0],
            },
            vec![0],
            ScalarField::isotropic(1.0, dvector![1.0]),
        )
        .unwrap();
        assert!(f.gradient(&dvector![1.0, 2.0]).norm() < 1e-15);
        // ½(y₁ + 1 − y₂)² + ½(y₁ − 1)²
        let y: DVector<f64> = dvector![0.3, -0.7];
        let direct = 0.5 * (y[0] + 1.0 - y[1]).powi(2) + 0.5 * (y[0] - 1.0f64).powi(2);
        assert!((f.value(&y) - direct).abs() < 1e-14);
    }

    #[test]
    fn edgeless_all_informed_is_blockwise() {
        let psi = ScalarField::quadratic(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), dvector![1.0, -1.0]).unwrap();
        let f = Potential::new(3, Interaction::None, vec![0, 1, 2], psi.clone()).unwrap();
        let y = DVector::from_fn(6, |i, _| i as f64 * 0.3 - 0.5);
        let g = f.gradient(&y);
        for i in 0..3 {
            let gi = psi.gradient(&y.rows(2 * i, 2).into_owned());
            assert!((g.rows(2 * i, 2) - gi).norm() < 1e-15);
        }
    }

    fn fd_check(f: &Potential, y: &DVector<f64>) -> f64 {
        let g = f.gradient(y);
        let h = 1e-6;
        let mut fd = DVector::zeros(y.len());
        for k in 0..y.len() {
            let mut a = y.clone();
            let mut b = y.clone();
            a[k] += h;
            b[k] -= h;
            fd[k] = (f.value(&a) - f.value(&b)) / (2.0 * h);
        }
        (g - &fd).norm() / fd.norm().max(1e-12)
    }

    #[test]
    fn sigma_flocking_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Potential::new(
            3,
            Interaction::SigmaFlocking {
                edges: vec![(0, 1), (1, 2), (0, 2)],
                k: 0.7,
                dist: 2.0,
                eps: 1.0,
            },
            vec![0],
            ScalarField::isotropic(0.5, dvector![6.0, 3.0]),
        )
        .unwrap();
        for _ in 0..20 {
            let y = DVector::from_fn(6, |_, _| rng.gen_range(-5.0..5.0));
            assert!(fd_check(&f, &y) < 1e-5);
        }
    }

    #[test]
    fn random_quadratic_is_in_sector() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let f = ScalarField::random_quadratic(&mut rng, DVector::zeros(3), 0.5, 20.0).unwrap();
            let (m, l) = f.sector().unwrap();
            assert!(m >= 0.5 - 1e-9 && l <= 20.0 + 1e-9);
            sector_spot_check(|y| f.gradient(y), 3, 0.5, 20.0, 1.0, 50, &mut rng).unwrap();
        }
        let radial = ScalarField::radial(dvector![1.0, 2.0], 1.0, 4.0).unwrap();
        sector_spot_check(|y| radial.gradient(y), 2, 1.0, 4.0, 3.0, 200, &mut rng).unwrap();
        let bad = ScalarField::isotropic(5.0, dvector![0.0]);
        assert!(sector_spot_check(|y| bad.gradient(y), 1, 1.0, 4.0, 1.0, 5, &mut rng).is_err());
    }

    #[test]
    fn descent_finds_formation_minimizer() {
        let lap = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let f = Potential::new(
            2,
            Interaction::LaplacianQuadratic {
                laplacian: lap,
                r: dvector![0.0, 1.0],
            },
            vec![0],
            ScalarField::isotropic(1.0, dvector![1.0]),
        )
        .unwrap();
        let z = f.descend(&dvector![0.0, 0.0], 0.3, 1e-12, 100_000).unwrap();
        assert!((z - dvector![1.0, 2.0]).norm() < 1e-10);
    }
}
