//! Gibbs exponents: `ρ ∝ D(u) exp(−½ QᵀGQ) D(u)†`.
//!
//! With `W = −2V iΩ` the covariance and the Gibbs matrix are related by
//! `e^{iΩG} = (W − 1)(W + 1)⁻¹`.

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::matfun::{eigenvalues, expm, herm_eig, herm_fn, logm, sym_eig, sym_fn};
use crate::scalar::{complexify, lit, split_real, symmetrize, to_f64, CMat, Mat, Real, Vector};
use crate::symplectic::{i_omega, symplectic_spectrum, williamson, GaussianState};

pub const DEFAULT_EPSILON: f64 = 1e-7;
/// Symplectic eigenvalues below `½ − NONPHYSICAL_TOL` are rejected.
pub const NONPHYSICAL_TOL: f64 = 1e-8;
/// Without regularization, eigenvalues below `½ + SINGULAR_TOL` are rejected.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Largest tolerated imaginary residue after a real-valued matrix function.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsForm<T: Real = f64> {
    pub g: Mat<T>,
    pub u: Vector<T>,
    pub epsilon_used: T,
}

/// Clamps the symplectic spectrum of `v` to at least `½ + ε`.
/// Returns the (possibly unchanged) covariance and whether clamping happened.
pub fn regularize<T: Real>(v: &Mat<T>, epsilon: T) -> Result<(Mat<T>, bool)> {
    if !(epsilon >= T::zero()) {
        return Err(Error::InvalidArgument("epsilon must be non-negative".into()));
    }
    let nu = symplectic_spectrum(v)?;
    let min = nu[nu.len() - 1];
    let half = lit::<T>(0.5);
    if min < half - lit::<T>(NONPHYSICAL_TOL) {
        return Err(Error::NonPhysicalCovariance { min_nu: to_f64(min) });
    }
    if epsilon == T::zero() {
        if min < half + lit::<T>(SINGULAR_TOL) {
            return Err(Error::SingularWithoutRegularization);
        }
        return Ok((v.clone(), false));
    }
    let floor = half + epsilon;
    if min >= floor {
        return Ok((v.clone(), false));
    }
    let w = williamson(v)?;
    let clamped = w.nu.map(|x| x.max(floor));
    Ok((w.reconstruct_with(&clamped), true))
}

pub(crate) fn real_checked<T: Real>(m: &CMat<T>, what: &str) -> Result<Mat<T>> {
    let (re, im) = split_real(m);
    let scale = re.norm().max(T::one());
    if !(im <= lit::<T>(IMAG_RESIDUE_TOL) * scale) {
        return Err(Error::NumericalBreakdown(format!(
            "{what}: imaginary residue {:e}",
            to_f64(im)
        )));
    }
    Ok(re)
}

/// Gibbs matrix of covariance `v`, regularized by `ε` when nearly pure.
pub fn gibbs_from_covariance<T: Real>(v: &Mat<T>, epsilon: T) -> Result<Mat<T>> {
    let (v, _) = regularize(v, epsilon)?;
    gibbs_unchecked(&v)
}

fn gibbs_unchecked<T: Real>(v: &Mat<T>) -> Result<Mat<T>> {
    let n = v.nrows();
    let iw = i_omega::<T>(n / 2);
    let half = complexify(&sym_fn(v, |x| x.sqrt()));
    let half_inv = complexify(&sym_fn(v, |x| T::one() / x.sqrt()));
    let h = &half * &iw * &half;
    let two = lit::<T>(2.0);
    let f = herm_fn(&h, |x| ((two * x + T::one()) / (two * x - T::one())).ln());
    let g = iw * half * f * half_inv;
    Ok(symmetrize(&real_checked(&g, "Gibbs matrix")?))
}

/// Gibbs form of a state.
pub fn gibbs_form<T: Real>(state: &GaussianState<T>, epsilon: T) -> Result<GibbsForm<T>> {
    let (v, clamped) = regularize(state.cov(), epsilon)?;
    Ok(GibbsForm {
        g: gibbs_unchecked(&v)?,
        u: state.mean().clone(),
        epsilon_used: if clamped { epsilon } else { T::zero() },
    })
}

/// Inverse map, `V = ½ coth(iΩG/2) iΩ`.
pub fn covariance_from_gibbs<T: Real>(g: &Mat<T>) -> Result<Mat<T>> {
    let n = g.nrows();
    if n == 0 || n % 2 != 0 || g.ncols() != n {
        return Err(Error::DimensionMismatch("Gibbs matrix must be 2n x 2n".into()));
    }
    let iw = i_omega::<T>(n / 2);
    let scale = g.norm().max(T::one());
    let small = lit::<T>(1e-12) * scale;
    let (gvals, _) = sym_eig(g);
    let v = if gvals[0] > small {
        let half = complexify(&sym_fn(g, |x| x.sqrt()));
        let half_inv = complexify(&sym_fn(g, |x| T::one() / x.sqrt()));
        let h = &half * &iw * &half;
        let (hv, _) = herm_eig(&h);
        if hv.iter().any(|x| x.abs() < small) {
            return Err(Error::DegenerateGibbs);
        }
        let c = herm_fn(&h, |x| T::one() / (x * lit::<T>(0.5)).tanh());
        half_inv * c * half * &iw * nalgebra::Complex::new(lit::<T>(0.5), T::zero())
    } else {
        let x = &iw * complexify(g);
        if eigenvalues(&x)?.iter().any(|z| z.modulus() < small) {
            return Err(Error::DegenerateGibbs);
        }
        let e = expm(&x)?;
        let id = CMat::<T>::identity(n, n);
        let inv = (&id - &e).try_inverse().ok_or(Error::DegenerateGibbs)?;
        inv * (&id + &e) * iw * nalgebra::Complex::new(lit::<T>(-0.5), T::zero())
    };
    Ok(symmetrize(&real_checked(&v, "covariance")?))
}

/// `e^{t·iΩG}`.
pub fn exp_iomega<T: Real>(g: &Mat<T>, t: T) -> Result<CMat<T>> {
    let iw = i_omega::<T>(g.nrows() / 2);
    expm(&(iw * complexify(&(g * t))))
}

/// `G_K = iΩ log[e^{iΩG₁/2} e^{iΩG₀} e^{iΩG₁/2}]`.
pub fn gk_matrix<T: Real>(g0: &Mat<T>, g1: &Mat<T>) -> Result<Mat<T>> {
    if g0.shape() != g1.shape() {
        return Err(Error::DimensionMismatch("Gibbs matrices differ in size".into()));
    }
    let half = exp_iomega(g1, lit(0.5))?;
    let k = &half * exp_iomega(g0, T::one())? * &half;
    let iw = i_omega::<T>(g0.nrows() / 2);
    Ok(symmetrize(&real_checked(&(iw * logm(&k)?), "G_K")?))
}

/// Symplectic spectrum of a positive definite Gibbs matrix, descending.
pub fn gibbs_spectrum<T: Real>(g: &Mat<T>) -> Result<Vector<T>> {
    symplectic_spectrum(g)
}

/// `g = 2 coth⁻¹(2n̄ + 1) = ln((n̄ + 1)/n̄)`.
pub fn thermal_gibbs_exponent<T: Real>(nbar: T) -> T {
    ((nbar + T::one()) / nbar).ln()
}
