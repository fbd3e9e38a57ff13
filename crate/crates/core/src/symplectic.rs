//! Phase-space conventions, Gaussian states and unitaries, Williamson form.
//!
//! Quadratures are ordered `(x₁, p₁, x₂, p₂, …)` with `[Q_j, Q_k] = iΩ_jk`
//! and `Ω = ⊕ [[0, 1], [−1, 0]]`. The vacuum covariance is `½·1`.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::matfun::{herm_eig, sym_eig, sym_fn};
use crate::scalar::{complexify, lit, max_abs, symmetrize, to_f64, CMat, Mat, Real, Vector, C};

/// Lower bound on symplectic eigenvalues accepted by [`GaussianState::new`].
pub const PHYSICALITY_TOL: f64 = 1e-10;
/// Allowed asymmetry of an input covariance, relative to its largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Allowed deviation from `SΩSᵀ = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// The symplectic form on `n_modes` modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    pub n_modes: usize,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        SymplecticForm { n_modes }
    }

    pub fn matrix<T: Real>(&self) -> Mat<T> {
        omega(self.n_modes)
    }

    /// `iΩ`, Hermitian and an involution.
    pub fn i_matrix<T: Real>(&self) -> CMat<T> {
        i_omega(self.n_modes)
    }
}

pub fn omega<T: Real>(n_modes: usize) -> Mat<T> {
    let mut m = Mat::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        m[(2 * j, 2 * j + 1)] = T::one();
        m[(2 * j + 1, 2 * j)] = -T::one();
    }
    m
}

pub fn i_omega<T: Real>(n_modes: usize) -> CMat<T> {
    omega::<T>(n_modes).map(|x| Complex::new(T::zero(), x))
}

/// Rotation `[[cos φ, −sin φ], [sin φ, cos φ]]`.
pub fn rotation<T: Real>(phi: T) -> Mat<T> {
    let (s, c) = phi.sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Squeezer `diag(e^s, e^{−s})`.
pub fn squeezer<T: Real>(s: T) -> Mat<T> {
    Mat::from_row_slice(2, 2, &[s.exp(), T::zero(), T::zero(), (-s).exp()])
}

/// Block-diagonal direct sum.
pub fn direct_sum<T: Real>(blocks: &[Mat<T>]) -> Mat<T> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = Mat::zeros(n, n);
    let mut o = 0;
    for b in blocks {
        m.view_mut((o, o), (b.nrows(), b.ncols())).copy_from(b);
        o += b.nrows();
    }
    m
}

/// Deviation `max|SΩSᵀ − Ω|`.
pub fn symplectic_deviation<T: Real>(s: &Mat<T>) -> T {
    let w = omega::<T>(s.nrows() / 2);
    max_abs(&(s * &w * s.transpose() - w))
}

/// Inverse of a symplectic matrix, `−Ω Sᵀ Ω`.
pub fn symplectic_inverse<T: Real>(s: &Mat<T>) -> Mat<T> {
    let w = omega::<T>(s.nrows() / 2);
    -(&w * s.transpose() * &w)
}

/// A Gaussian state: first moments and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real = f64> {
    mean: Vector<T>,
    cov: Mat<T>,
}

impl<T: Real> GaussianState<T> {
    /// Validates dimensions, symmetry and the uncertainty principle.
    pub fn new(mean: Vector<T>, cov: Mat<T>) -> Result<Self> {
        let d = cov.nrows();
        if d == 0 || d % 2 != 0 || cov.ncols() != d || mean.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if !cov.iter().chain(mean.iter()).all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite moment".into()));
        }
        let asym = max_abs(&(&cov - cov.transpose()));
        if asym > lit::<T>(SYMMETRY_TOL) * max_abs(&cov).max(T::one()) {
            return Err(Error::NotSymmetric { asymmetry: to_f64(asym) });
        }
        let cov = symmetrize(&cov);
        let nu = symplectic_spectrum(&cov)?;
        let min = nu[nu.len() - 1];
        if min < lit::<T>(0.5 - PHYSICALITY_TOL) {
            return Err(Error::NonPhysicalCovariance { min_nu: to_f64(min) });
        }
        Ok(GaussianState { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        GaussianState {
            mean: Vector::zeros(2 * n_modes),
            cov: Mat::identity(2 * n_modes, 2 * n_modes) * lit::<T>(0.5),
        }
    }

    pub fn thermal(nbar: T) -> Result<Self> {
        state_builder(nbar, T::zero(), T::zero(), Complex::new(T::zero(), T::zero()))
    }

    pub fn mean(&self) -> &Vector<T> {
        &self.mean
    }

    pub fn cov(&self) -> &Mat<T> {
        &self.cov
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    /// Symplectic eigenvalues, descending.
    pub fn symplectic_eigenvalues(&self) -> Vector<T> {
        symplectic_spectrum(&self.cov).expect("validated covariance")
    }

    /// `Tr ρ² = 1/√det(2V)`.
    pub fn purity(&self) -> T {
        T::one() / (&self.cov * lit::<T>(2.0)).determinant().sqrt()
    }

    /// True when every symplectic eigenvalue is within `tol` of ½.
    pub fn is_pure(&self, tol: T) -> bool {
        self.symplectic_eigenvalues().iter().all(|&nu| nu - lit::<T>(0.5) <= tol)
    }

    /// Product state `self ⊗ other`.
    pub fn tensor(&self, other: &GaussianState<T>) -> GaussianState<T> {
        let mean = Vector::from_iterator(
            self.mean.len() + other.mean.len(),
            self.mean.iter().chain(other.mean.iter()).copied(),
        );
        GaussianState { mean, cov: direct_sum(&[self.cov.clone(), other.cov.clone()]) }
    }

    pub(crate) fn from_parts_unchecked(mean: Vector<T>, cov: Mat<T>) -> Self {
        GaussianState { mean, cov }
    }
}

/// Single-mode state `D(α) S ρ_th(n̄) S† D(α)†` with covariance
/// `(2n̄+1)/2 · R(θ_s/2) diag(e^{2r}, e^{−2r}) R(θ_s/2)ᵀ` and mean `√2(Re α, Im α)`.
pub fn state_builder<T: Real>(nbar: T, r: T, theta_s: T, alpha: C<T>) -> Result<GaussianState<T>> {
    if !(nbar >= T::zero()) || !r.is_finite() || !theta_s.is_finite() {
        return Err(Error::DomainError(format!(
            "need nbar >= 0 and finite r, theta_s (nbar = {}, r = {})",
            to_f64(nbar),
            to_f64(r)
        )));
    }
    let nu = (lit::<T>(2.0) * nbar + T::one()) * lit::<T>(0.5);
    let rot = rotation(theta_s * lit::<T>(0.5));
    let d = Mat::from_diagonal(&Vector::from_vec(vec![(r * lit::<T>(2.0)).exp(), (-r * lit::<T>(2.0)).exp()]));
    let cov = symmetrize(&(&rot * d * rot.transpose() * nu));
    let s2 = lit::<T>(2.0).sqrt();
    let mean = Vector::from_vec(vec![s2 * alpha.re, s2 * alpha.im]);
    Ok(GaussianState::from_parts_unchecked(mean, cov))
}

/// Affine symplectic map `Q ↦ SQ + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianUnitary<T: Real = f64> {
    s: Mat<T>,
    d: Vector<T>,
}

impl<T: Real> GaussianUnitary<T> {
    pub fn new(s: Mat<T>, d: Vector<T>) -> Result<Self> {
        let n = s.nrows();
        if n == 0 || n % 2 != 0 || s.ncols() != n || d.len() != n {
            return Err(Error::DimensionMismatch("symplectic matrix and displacement".into()));
        }
        let dev = symplectic_deviation(&s);
        if dev > lit::<T>(SYMPLECTIC_TOL) * max_abs(&s).max(T::one()).powi(2) {
            return Err(Error::NotSymplectic { deviation: to_f64(dev) });
        }
        Ok(GaussianUnitary { s, d })
    }

    pub fn identity(n_modes: usize) -> Self {
        GaussianUnitary { s: Mat::identity(2 * n_modes, 2 * n_modes), d: Vector::zeros(2 * n_modes) }
    }

    pub fn displacement(d: Vector<T>) -> Self {
        let n = d.len();
        GaussianUnitary { s: Mat::identity(n, n), d }
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.s
    }

    pub fn displacement_vector(&self) -> &Vector<T> {
        &self.d
    }

    pub fn apply(&self, state: &GaussianState<T>) -> Result<GaussianState<T>> {
        if state.mean.len() != self.d.len() {
            return Err(Error::DimensionMismatch("unitary and state".into()));
        }
        Ok(GaussianState::from_parts_unchecked(
            &self.s * &state.mean + &self.d,
            symmetrize(&(&self.s * &state.cov * self.s.transpose())),
        ))
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &GaussianUnitary<T>) -> GaussianUnitary<T> {
        GaussianUnitary { s: &self.s * &other.s, d: &self.s * &other.d + &self.d }
    }

    pub fn inverse(&self) -> GaussianUnitary<T> {
        let si = symplectic_inverse(&self.s);
        let d = -(&si * &self.d);
        GaussianUnitary { s: si, d }
    }

    pub(crate) fn from_parts_unchecked(s: Mat<T>, d: Vector<T>) -> Self {
        GaussianUnitary { s, d }
    }
}

/// `V = S·diag(ν₁,ν₁,…)·Sᵀ` with `ν` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Williamson<T: Real = f64> {
    pub s: Mat<T>,
    pub nu: Vector<T>,
}

fn sqrt_pd<T: Real>(v: &Mat<T>) -> Result<Mat<T>> {
    let (vals, _) = sym_eig(v);
    if !(vals[0] > T::zero()) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(sym_fn(v, |x| x.sqrt()))
}

fn spectrum_pairs<T: Real>(v: &Mat<T>) -> Result<(Vector<T>, CMat<T>, Mat<T>)> {
    let n = v.nrows();
    if n == 0 || n % 2 != 0 || v.ncols() != n {
        return Err(Error::DimensionMismatch("expected a 2n x 2n matrix".into()));
    }
    let half = sqrt_pd(v)?;
    let ch = complexify(&half);
    let h = &ch * i_omega::<T>(n / 2) * &ch;
    let (vals, vecs) = herm_eig(&h);
    Ok((vals, vecs, half))
}

/// Symplectic eigenvalues of a positive definite matrix, descending.
pub fn symplectic_spectrum<T: Real>(v: &Mat<T>) -> Result<Vector<T>> {
    let (vals, _, _) = spectrum_pairs(v)?;
    let m = v.nrows() / 2;
    Ok(Vector::from_iterator(m, (0..m).map(|j| -vals[j])))
}

/// Williamson decomposition of a positive definite matrix. The rotation
/// freedom within each mode is fixed by `S[2j+1, 2j] = 0`, `S[2j, 2j] > 0`.
pub fn williamson<T: Real>(v: &Mat<T>) -> Result<Williamson<T>> {
    let (vals, vecs, half) = spectrum_pairs(v)?;
    let n = v.nrows();
    let m = n / 2;
    let s2 = lit::<T>(2.0).sqrt();
    let mut o = Mat::zeros(n, n);
    let mut nu = Vector::zeros(m);
    for j in 0..m {
        nu[j] = -vals[j];
        for r in 0..n {
            o[(r, 2 * j)] = vecs[(r, j)].re * s2;
            o[(r, 2 * j + 1)] = vecs[(r, j)].im * s2;
        }
    }
    let dinv = Mat::from_diagonal(&Vector::from_iterator(n, (0..n).map(|k| T::one() / nu[k / 2].sqrt())));
    let mut s = half * o * dinv;
    for j in 0..m {
        let a = s[(2 * j + 1, 2 * j)];
        let b = s[(2 * j + 1, 2 * j + 1)];
        let h = a.hypot(b);
        let (mut c, mut sn) = (b / h, -a / h);
        if c * s[(2 * j, 2 * j)] + sn * s[(2 * j, 2 * j + 1)] < T::zero() {
            c = -c;
            sn = -sn;
        }
        for r in 0..n {
            let x = s[(r, 2 * j)];
            let y = s[(r, 2 * j + 1)];
            s[(r, 2 * j)] = c * x + sn * y;
            s[(r, 2 * j + 1)] = -sn * x + c * y;
        }
        s[(2 * j + 1, 2 * j)] = T::zero();
    }
    Ok(Williamson { s, nu })
}

impl<T: Real> Williamson<T> {
    /// `S·diag(ν)·Sᵀ` with the supplied spectrum.
    pub fn reconstruct_with(&self, nu: &Vector<T>) -> Mat<T> {
        let n = self.s.nrows();
        let d = Mat::from_diagonal(&Vector::from_iterator(n, (0..n).map(|k| nu[k / 2])));
        symmetrize(&(&self.s * d * self.s.transpose()))
    }

    pub fn reconstruct(&self) -> Mat<T> {
        self.reconstruct_with(&self.nu)
    }
}
