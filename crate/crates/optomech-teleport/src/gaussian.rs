//! Multimode Gaussian states in the covariance-matrix representation.
//!
//! A state is a mean vector and a symmetric covariance matrix over the
//! quadratures `(X1, P1, X2, P2, ...)` with `X = (a + a†)/√2`,
//! `P = -i(a - a†)/√2`, ħ = 1.  Vacuum covariance is `I/2`; physicality is
//! `cov + (i/2) Ω ⪰ 0`, i.e. every symplectic eigenvalue at least 1/2.
//!
//! All values are immutable; every operation returns a new state.  Random
//! number generators are explicit parameters.

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Which quadrature of a mode a homodyne detector measures.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    #[inline]
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// The symplectic form Ω: block diagonal with 2x2 blocks [[0, 1], [-1, 0]].
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// Max-norm of `S Ω Sᵀ - Ω`.
pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let n_modes = s.nrows() / 2;
    let omega = symplectic_form(n_modes);
    (s * &omega * s.transpose() - omega).amax()
}

fn resymmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    m += t;
    m *= 0.5;
    m
}

/// Single-mode phase-space rotation by `phi`.
pub fn rotation_symplectic(phi: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[phi.cos(), phi.sin(), -phi.sin(), phi.cos()])
}

/// Two-mode squeezer with parameter `r` acting on modes (0, 1).
pub fn two_mode_squeeze_symplectic(r: f64) -> DMatrix<f64> {
    let (ch, sh) = (r.cosh(), r.sinh());
    let mut s = DMatrix::zeros(4, 4);
    s[(0, 0)] = ch;
    s[(0, 2)] = sh;
    s[(1, 1)] = ch;
    s[(1, 3)] = -sh;
    s[(2, 0)] = sh;
    s[(2, 2)] = ch;
    s[(3, 1)] = -sh;
    s[(3, 3)] = ch;
    s
}

/// Balanced (50:50) mixer of modes `a` and `b` in an `n`-mode register.
///
/// Mode `a` becomes the "+" port `(a + b)/√2` and mode `b` the "-" port
/// `(b - a)/√2`, in both quadratures.
pub fn balanced_mixer_symplectic(n_modes: usize, a: usize, b: usize) -> DMatrix<f64> {
    assert!(a < n_modes && b < n_modes && a != b);
    let h = 1.0 / SQRT_2;
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for off in 0..2 {
        let (ia, ib) = (2 * a + off, 2 * b + off);
        s[(ia, ia)] = h;
        s[(ia, ib)] = h;
        s[(ib, ib)] = h;
        s[(ib, ia)] = -h;
    }
    s
}

/// An n-mode Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Vacuum state of `n` modes: zero mean, covariance `I/2`.
    pub fn vacuum(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyState);
        }
        Ok(Self {
            n_modes: n,
            mean: DVector::zeros(2 * n),
            cov: DMatrix::identity(2 * n, 2 * n) * 0.5,
        })
    }

    /// Single-mode thermal state with mean occupation `nbar`:
    /// covariance `(nbar + 1/2) I`.
    pub fn thermal(nbar: f64) -> Result<Self> {
        if nbar.is_nan() || nbar < 0.0 {
            return Err(Error::NegativeOccupation(nbar));
        }
        Ok(Self {
            n_modes: 1,
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2) * (nbar + 0.5),
        })
    }

    /// Single-mode coherent state of complex amplitude `alpha`:
    /// mean `(√2 Re α, √2 Im α)`, vacuum covariance.
    pub fn coherent(alpha: Complex64) -> Self {
        Self {
            n_modes: 1,
            mean: DVector::from_column_slice(&[SQRT_2 * alpha.re, SQRT_2 * alpha.im]),
            cov: DMatrix::identity(2, 2) * 0.5,
        }
    }

    /// Build a state from an explicit mean and covariance.  The covariance
    /// must be symmetric within 1e-10; it is re-symmetrized on storage.
    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::EmptyState);
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cov.nrows(),
            });
        }
        if mean.iter().any(|x| !x.is_finite()) || cov.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("state construction".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self {
            n_modes: dim / 2,
            mean,
            cov: resymmetrize(cov),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    /// Tensor product: `self ⊗ other`, block-diagonal covariance.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (d1, d2) = (2 * self.n_modes, 2 * other.n_modes);
        let mut mean = DVector::zeros(d1 + d2);
        mean.rows_mut(0, d1).copy_from(&self.mean);
        mean.rows_mut(d1, d2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(d1 + d2, d1 + d2);
        cov.view_mut((0, 0), (d1, d1)).copy_from(&self.cov);
        cov.view_mut((d1, d1), (d2, d2)).copy_from(&other.cov);
        GaussianState {
            n_modes: self.n_modes + other.n_modes,
            mean,
            cov,
        }
    }

    /// Phase-space displacement of one mode.  The covariance is untouched
    /// (bit for bit); only the mean shifts.
    pub fn displace(&self, mode: usize, dx: f64, dp: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let mut mean = self.mean.clone();
        mean[2 * mode] += dx;
        mean[2 * mode + 1] += dp;
        Ok(GaussianState {
            n_modes: self.n_modes,
            mean,
            cov: self.cov.clone(),
        })
    }

    /// Apply a symplectic map: mean → S mean, cov → S cov Sᵀ.
    ///
    /// `S` is checked against `S Ω Sᵀ = Ω` with tolerance
    /// `1e-9 · max(1, ‖S‖²_max)` and rejected otherwise.
    pub fn apply_symplectic(&self, s: &DMatrix<f64>) -> Result<GaussianState> {
        let dim = 2 * self.n_modes;
        if s.nrows() != dim || s.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.nrows(),
            });
        }
        let defect = symplectic_defect(s);
        let smax = s.amax();
        if defect > 1e-9 * (smax * smax).max(1.0) {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(GaussianState {
            n_modes: self.n_modes,
            mean: s * &self.mean,
            cov: resymmetrize(s * &self.cov * s.transpose()),
        })
    }

    /// Restrict to the listed modes (partial trace over the rest).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<GaussianState> {
        if keep.is_empty() {
            return Err(Error::BadKeepList);
        }
        let mut seen = vec![false; self.n_modes];
        for &m in keep {
            self.check_mode(m)?;
            if seen[m] {
                return Err(Error::BadKeepList);
            }
            seen[m] = true;
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_fn(idx.len(), |i, _| self.mean[idx[i]]);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        Ok(GaussianState {
            n_modes: keep.len(),
            mean,
            cov,
        })
    }

    /// Mean and covariance of the heterodyne outcome `(√2 Re α, √2 Im α)`
    /// on `mode`: the state's marginal plus half a unit of vacuum noise.
    pub fn heterodyne_outcome_distribution(
        &self,
        mode: usize,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_mode(mode)?;
        let k = [2 * mode, 2 * mode + 1];
        let mk = DVector::from_column_slice(&[self.mean[k[0]], self.mean[k[1]]]);
        let mut gkk = DMatrix::from_fn(2, 2, |i, j| self.cov[(k[i], k[j])]);
        gkk[(0, 0)] += 0.5;
        gkk[(1, 1)] += 0.5;
        Ok((mk, gkk))
    }

    /// Condition on a heterodyne measurement of `mode` with outcome `alpha`
    /// (projection onto a coherent state).  Returns the remaining
    /// (n-1)-mode state.  The conditional covariance does not depend on the
    /// outcome; only the mean does.
    pub fn heterodyne_condition(&self, mode: usize, alpha: Complex64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let k = [2 * mode, 2 * mode + 1];
        let r: Vec<usize> = (0..self.n_modes)
            .filter(|&m| m != mode)
            .flat_map(|m| [2 * m, 2 * m + 1])
            .collect();

        let mut gkk = DMatrix::from_fn(2, 2, |i, j| self.cov[(k[i], k[j])]);
        gkk[(0, 0)] += 0.5;
        gkk[(1, 1)] += 0.5;
        let chol = Cholesky::new(gkk).ok_or(Error::SingularConditioning)?;

        let grk = DMatrix::from_fn(r.len(), 2, |i, j| self.cov[(r[i], k[j])]);
        let grr = DMatrix::from_fn(r.len(), r.len(), |i, j| self.cov[(r[i], r[j])]);
        let mr = DVector::from_fn(r.len(), |i, _| self.mean[r[i]]);
        let mk = DVector::from_column_slice(&[self.mean[k[0]], self.mean[k[1]]]);

        let x_alpha = DVector::from_column_slice(&[SQRT_2 * alpha.re, SQRT_2 * alpha.im]);
        let cov = resymmetrize(&grr - &grk * chol.solve(&grk.transpose()));
        let mean = mr + &grk * chol.solve(&(x_alpha - mk));
        Ok(GaussianState {
            n_modes: self.n_modes - 1,
            mean,
            cov,
        })
    }

    /// Draw a heterodyne outcome on `mode` and return it with the posterior
    /// state.  Deterministic for a given RNG stream.
    pub fn heterodyne_sample<R: Rng + ?Sized>(
        &self,
        mode: usize,
        rng: &mut R,
    ) -> Result<(Complex64, GaussianState)> {
        let (mk, gkk) = self.heterodyne_outcome_distribution(mode)?;
        let chol = Cholesky::new(gkk).ok_or(Error::SingularConditioning)?;
        let z = DVector::from_column_slice(&[
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ]);
        let x = mk + chol.l() * z;
        let alpha = Complex64::new(x[0] / SQRT_2, x[1] / SQRT_2);
        let posterior = self.heterodyne_condition(mode, alpha)?;
        Ok((alpha, posterior))
    }

    /// Condition on a homodyne measurement of one quadrature of `mode`.
    ///
    /// The mode is kept: its measured quadrature collapses to zero variance
    /// (an ideal-detection limit, so the result fails the physicality bound
    /// by construction) and the rest of the state is updated by the rank-one
    /// Gaussian regression.  Quadratures with variance below 1e-12 are
    /// treated as already measured: the pseudo-inverse update is null, which
    /// makes repeated conditioning idempotent.
    pub fn homodyne_condition(
        &self,
        mode: usize,
        quad: Quadrature,
        value: f64,
    ) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let q = 2 * mode + quad.offset();
        let var = self.cov[(q, q)];
        if var < 1e-12 {
            return Ok(self.clone());
        }
        let dim = 2 * self.n_modes;
        let col = self.cov.column(q).clone_owned();
        let mut cov = &self.cov - &col * col.transpose() / var;
        for i in 0..dim {
            cov[(i, q)] = 0.0;
            cov[(q, i)] = 0.0;
        }
        let mut mean = &self.mean + &col * ((value - self.mean[q]) / var);
        mean[q] = value;
        Ok(GaussianState {
            n_modes: self.n_modes,
            mean,
            cov: resymmetrize(cov),
        })
    }

    /// Draw a homodyne outcome (marginal variance `(Γ_kk)_qq`) and condition
    /// on it.
    pub fn homodyne_sample<R: Rng + ?Sized>(
        &self,
        mode: usize,
        quad: Quadrature,
        rng: &mut R,
    ) -> Result<(f64, GaussianState)> {
        self.check_mode(mode)?;
        let q = 2 * mode + quad.offset();
        let var = self.cov[(q, q)].max(0.0);
        let z: f64 = rng.sample(StandardNormal);
        let value = self.mean[q] + var.sqrt() * z;
        let posterior = self.homodyne_condition(mode, quad, value)?;
        Ok((value, posterior))
    }

    /// Symplectic eigenvalues (ascending): singular values of
    /// `Γ^(1/2) Ω Γ^(1/2)`, which come in equal pairs.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues_of(&self.cov)
    }

    /// Physicality check `cov + (i/2) Ω ⪰ 0`, i.e. every symplectic
    /// eigenvalue at least `1/2 - tol`.  The tolerance is widened to the
    /// floating-point floor `64 ε (1 + ‖Γ‖_max)` for covariances with large
    /// entries.
    pub fn is_physical(&self, tol: f64) -> bool {
        let eff = tol.max(64.0 * f64::EPSILON * (1.0 + self.cov.amax()));
        self.symplectic_eigenvalues()
            .first()
            .map(|&nu| nu >= 0.5 - eff)
            .unwrap_or(false)
    }
}

fn symplectic_eigenvalues_of(cov: &DMatrix<f64>) -> Vec<f64> {
    let n_modes = cov.nrows() / 2;
    let eig = SymmetricEigen::new(cov.clone());
    let sq = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let sqrt_cov = &eig.eigenvectors * sq * eig.eigenvectors.transpose();
    let h = &sqrt_cov * symplectic_form(n_modes) * &sqrt_cov;
    let mut sv: Vec<f64> = h.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut nus: Vec<f64> = (0..n_modes).map(|j| 0.5 * (sv[2 * j] + sv[2 * j + 1])).collect();
    nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nus
}

/// Logarithmic negativity of a two-mode state:
/// `E_N = max(0, -log2(2 ν̃₋))` with `ν̃₋` the smallest symplectic
/// eigenvalue of the partially transposed covariance.
pub fn log_negativity(state: &GaussianState) -> Result<f64> {
    if state.n_modes != 2 {
        return Err(Error::WrongModeCount {
            expected: 2,
            got: state.n_modes,
        });
    }
    let mut pt = state.cov.clone();
    for i in 0..4 {
        pt[(i, 3)] = -pt[(i, 3)];
        pt[(3, i)] = -pt[(3, i)];
    }
    let nu_min = symplectic_eigenvalues_of(&pt)[0];
    Ok((-(2.0 * nu_min).log2()).max(0.0))
}

/// Overlap of a pure single-mode Gaussian state with another single-mode
/// Gaussian state:
///
/// `F = exp(-δᵀ (V1 + V2)⁻¹ δ / 2) / √det(V1 + V2)`.
///
/// In the vacuum-variance-1/2 convention the normalization constant is 1,
/// so identical pure states give exactly 1 (for a coherent state against a
/// same-mean state with `V2 = V1 + N I` this reduces to `1/(1 + N)`).
pub fn overlap_with_pure_gaussian(pure_in: &GaussianState, out: &GaussianState) -> Result<f64> {
    for s in [pure_in, out] {
        if s.n_modes != 1 {
            return Err(Error::WrongModeCount {
                expected: 1,
                got: s.n_modes,
            });
        }
    }
    let nu = pure_in.symplectic_eigenvalues()[0];
    if (nu - 0.5).abs() > 1e-9 {
        return Err(Error::NotPure { nu });
    }
    let m = &pure_in.cov + &out.cov;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det.is_nan() || det <= 0.0 {
        return Err(Error::NonFinite("overlap determinant".into()));
    }
    let d = &out.mean - &pure_in.mean;
    let minv_d = DVector::from_column_slice(&[
        (m[(1, 1)] * d[0] - m[(0, 1)] * d[1]) / det,
        (m[(0, 0)] * d[1] - m[(1, 0)] * d[0]) / det,
    ]);
    let f = (-0.5 * d.dot(&minv_d)).exp() / det.sqrt();
    Ok(f.clamp(0.0, 1.0))
}
