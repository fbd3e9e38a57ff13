//! Uhlmann fidelity of Gaussian states and Bhattacharyya coefficients.
//!
//! `F = Tr[ρ₀ρ₁] · ∏_k coth(g_k/4)` where `g_k` is the symplectic spectrum
//! of `G_K`. When either state is pure, `F = Tr[ρ₀ρ₁]` exactly.

use crate::error::{Error, Result};
use crate::gibbs::{gibbs_form, gibbs_spectrum, gk_matrix, regularize};
use crate::scalar::{lit, to_f64, Mat, Real, Vector};
use crate::symplectic::GaussianState;

/// A state counts as pure when every symplectic eigenvalue is below `½ + PURE_TOL`.
pub const PURE_TOL: f64 = 1e-12;
/// Fidelity values outside `[−RANGE_TOL, 1 + RANGE_TOL]` signal a breakdown.
pub const RANGE_TOL: f64 = 1e-9;
/// Normalization tolerance for distributions.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Points of the quadrature grid used for homodyne statistics.
pub const QUADRATURE_POINTS: usize = 4001;
/// Half-width of the quadrature grid in units of the widest standard deviation.
pub const QUADRATURE_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityResult<T: Real = f64> {
    pub fidelity: T,
    pub overlap: T,
    /// Symplectic spectrum of `G_K`, descending; empty on the pure and identical-state paths.
    pub gk_spectrum: Vector<T>,
    pub epsilon_used: T,
}

fn check_pair<T: Real>(s0: &GaussianState<T>, s1: &GaussianState<T>) -> Result<()> {
    if s0.n_modes() != s1.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} modes",
            s0.n_modes(),
            s1.n_modes()
        )));
    }
    Ok(())
}

fn overlap_of<T: Real>(v0: &Mat<T>, v1: &Mat<T>, delta: &Vector<T>) -> Result<T> {
    let sum = v0 + v1;
    let chol = sum.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let det = sum.determinant();
    let q = delta.dot(&chol.solve(delta));
    Ok((-q * lit::<T>(0.5)).exp() / det.sqrt())
}

/// `Tr[ρ₀ρ₁] = exp(−δᵀ(V₀+V₁)⁻¹δ/2) / √det(V₀+V₁)`.
pub fn gaussian_overlap<T: Real>(s0: &GaussianState<T>, s1: &GaussianState<T>) -> Result<T> {
    check_pair(s0, s1)?;
    overlap_of(s0.cov(), s1.cov(), &(s0.mean() - s1.mean()))
}

fn finish<T: Real>(f: T) -> Result<T> {
    let t = lit::<T>(RANGE_TOL);
    if !(f >= -t && f <= T::one() + t) {
        return Err(Error::NumericalBreakdown(format!("fidelity {} outside [0, 1]", to_f64(f))));
    }
    Ok(f.max(T::zero()).min(T::one()))
}

/// Fidelity `(Tr|√ρ₀√ρ₁|)²`. Nearly pure mixed states are regularized by `ε`.
pub fn fidelity_gaussian<T: Real>(
    s0: &GaussianState<T>,
    s1: &GaussianState<T>,
    epsilon: T,
) -> Result<FidelityResult<T>> {
    check_pair(s0, s1)?;
    if s0 == s1 {
        return Ok(FidelityResult {
            fidelity: T::one(),
            overlap: gaussian_overlap(s0, s1)?,
            gk_spectrum: Vector::zeros(0),
            epsilon_used: T::zero(),
        });
    }
    let pure = lit::<T>(PURE_TOL);
    if s0.is_pure(pure) || s1.is_pure(pure) {
        let ov = gaussian_overlap(s0, s1)?;
        return Ok(FidelityResult {
            fidelity: finish(ov)?,
            overlap: ov,
            gk_spectrum: Vector::zeros(0),
            epsilon_used: T::zero(),
        });
    }
    let g0 = gibbs_form(s0, epsilon)?;
    let g1 = gibbs_form(s1, epsilon)?;
    let (v0, _) = regularize(s0.cov(), epsilon)?;
    let (v1, _) = regularize(s1.cov(), epsilon)?;
    let ov = overlap_of(&v0, &v1, &(s0.mean() - s1.mean()))?;
    let gk = gk_matrix(&g0.g, &g1.g)?;
    let spectrum = gibbs_spectrum(&gk)?;
    let quarter = lit::<T>(0.25);
    let prod = spectrum.iter().fold(T::one(), |a, &g| a / (g * quarter).tanh());
    Ok(FidelityResult {
        fidelity: finish(ov * prod)?,
        overlap: ov,
        gk_spectrum: spectrum,
        epsilon_used: g0.epsilon_used.max(g1.epsilon_used),
    })
}

/// Outcome statistics of a measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution<T: Real = f64> {
    Discrete(Vec<T>),
    /// Density sampled on a uniform grid.
    Sampled { grid: Vec<T>, density: Vec<T> },
}

fn trapezoid<T: Real>(grid: &[T], f: &[T]) -> T {
    let mut s = T::zero();
    for k in 1..grid.len() {
        s += (grid[k] - grid[k - 1]) * (f[k] + f[k - 1]) * lit::<T>(0.5);
    }
    s
}

fn check_normalized<T: Real>(sum: T) -> Result<()> {
    if (sum - T::one()).abs() > lit::<T>(NORMALIZATION_TOL) {
        return Err(Error::NotNormalized { sum: to_f64(sum) });
    }
    Ok(())
}

fn check_nonnegative<T: Real>(p: &[T]) -> Result<()> {
    if p.iter().any(|&x| !(x >= T::zero())) {
        return Err(Error::InvalidArgument("negative or non-finite probability".into()));
    }
    Ok(())
}

/// Bhattacharyya coefficient `(Σ_x √(p₀(x) p₁(x)))²`.
pub fn bhattacharyya<T: Real>(p0: &Distribution<T>, p1: &Distribution<T>) -> Result<T> {
    match (p0, p1) {
        (Distribution::Discrete(a), Distribution::Discrete(b)) => {
            if a.len() != b.len() {
                return Err(Error::SupportMismatch);
            }
            check_nonnegative(a)?;
            check_nonnegative(b)?;
            check_normalized(a.iter().fold(T::zero(), |s, &x| s + x))?;
            check_normalized(b.iter().fold(T::zero(), |s, &x| s + x))?;
            let c = a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x * y).sqrt());
            Ok(c * c)
        }
        (
            Distribution::Sampled { grid: ga, density: da },
            Distribution::Sampled { grid: gb, density: db },
        ) => {
            if ga.len() != gb.len()
                || ga.len() != da.len()
                || gb.len() != db.len()
                || ga.iter().zip(gb).any(|(&x, &y)| (x - y).abs() > lit::<T>(1e-12) * x.abs().max(T::one()))
            {
                return Err(Error::SupportMismatch);
            }
            check_nonnegative(da)?;
            check_nonnegative(db)?;
            check_normalized(trapezoid(ga, da))?;
            check_normalized(trapezoid(gb, db))?;
            let root: Vec<T> = da.iter().zip(db).map(|(&x, &y)| (x * y).sqrt()).collect();
            let c = trapezoid(ga, &root);
            Ok(c * c)
        }
        _ => Err(Error::SupportMismatch),
    }
}

/// Densities of the rotated quadrature `x cos φ + p sin φ` of two single-mode
/// states on a shared grid.
pub fn homodyne_distributions<T: Real>(
    s0: &GaussianState<T>,
    s1: &GaussianState<T>,
    phi: T,
) -> Result<(Distribution<T>, Distribution<T>)> {
    check_pair(s0, s1)?;
    if s0.n_modes() != 1 {
        return Err(Error::NotSingleMode);
    }
    let (s, c) = phi.sin_cos();
    let moments = |st: &GaussianState<T>| {
        let m = c * st.mean()[0] + s * st.mean()[1];
        let v = st.cov();
        let var = c * c * v[(0, 0)] + lit::<T>(2.0) * c * s * v[(0, 1)] + s * s * v[(1, 1)];
        (m, var)
    };
    let (m0, v0) = moments(s0);
    let (m1, v1) = moments(s1);
    let sigma = v0.max(v1).sqrt();
    let k = lit::<T>(QUADRATURE_SIGMAS);
    let lo = m0.min(m1) - k * sigma;
    let hi = m0.max(m1) + k * sigma;
    let n = QUADRATURE_POINTS;
    let step = (hi - lo) / lit::<T>((n - 1) as f64);
    let grid: Vec<T> = (0..n).map(|i| lo + step * lit::<T>(i as f64)).collect();
    let two_pi = T::two_pi();
    let density = |m: T, var: T| -> Vec<T> {
        grid.iter()
            .map(|&x| (-(x - m) * (x - m) / (lit::<T>(2.0) * var)).exp() / (two_pi * var).sqrt())
            .collect()
    };
    Ok((
        Distribution::Sampled { grid: grid.clone(), density: density(m0, v0) },
        Distribution::Sampled { grid: grid.clone(), density: density(m1, v1) },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::state_builder;
    use approx::assert_relative_eq;
    use nalgebra::Complex;

    fn thermal_fidelity(a: f64, b: f64) -> f64 {
        1.0 / (((a + 1.0) * (b + 1.0)).sqrt() - (a * b).sqrt()).powi(2)
    }

    #[test]
    fn identical_states() {
        let s = state_builder(0.7, 0.3, 0.4, Complex::new(0.5, -0.2)).unwrap();
        let f = fidelity_gaussian(&s, &s, 1e-7).unwrap();
        assert_relative_eq!(f.fidelity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn thermal_pair() {
        let a = GaussianState::thermal(1.0).unwrap();
        let b = GaussianState::thermal(2.0).unwrap();
        let f = fidelity_gaussian(&a, &b, 0.0).unwrap();
        assert_relative_eq!(f.fidelity, thermal_fidelity(1.0, 2.0), epsilon = 1e-12);
        assert_relative_eq!(f.fidelity, 0.9330127018922193, epsilon = 1e-12);
    }

    #[test]
    fn coherent_states() {
        let a = state_builder(0.0, 0.0, 0.0, Complex::new(0.3, 0.2)).unwrap();
        let b = state_builder(0.0, 0.0, 0.0, Complex::new(-0.4, 0.5)).unwrap();
        let f = fidelity_gaussian(&a, &b, 1e-7).unwrap();
        assert_relative_eq!(f.fidelity, (-(0.49f64 + 0.09)).exp(), epsilon = 1e-14);
        assert_eq!(f.epsilon_used, 0.0);
    }

    #[test]
    fn product_states_multiply() {
        let a0 = state_builder(0.4, 0.2, 0.1, Complex::new(0.1, 0.0)).unwrap();
        let a1 = state_builder(0.9, -0.1, 0.7, Complex::new(0.0, 0.3)).unwrap();
        let b0 = state_builder(1.3, 0.5, 2.0, Complex::new(-0.2, 0.0)).unwrap();
        let b1 = state_builder(0.2, 0.0, 0.0, Complex::new(0.0, 0.0)).unwrap();
        let fa = fidelity_gaussian(&a0, &a1, 0.0).unwrap().fidelity;
        let fb = fidelity_gaussian(&b0, &b1, 0.0).unwrap().fidelity;
        let f = fidelity_gaussian(&a0.tensor(&b0), &a1.tensor(&b1), 0.0).unwrap().fidelity;
        assert_relative_eq!(f, fa * fb, epsilon = 1e-12);
    }

    #[test]
    fn discrete_bc() {
        let p = Distribution::Discrete(vec![0.5, 0.5]);
        let q = Distribution::Discrete(vec![1.0, 0.0]);
        assert_relative_eq!(bhattacharyya(&p, &q).unwrap(), 0.5, epsilon = 1e-15);
        let r = Distribution::Discrete(vec![0.5, 0.5, 0.0]);
        assert_eq!(bhattacharyya(&p, &r), Err(Error::SupportMismatch));
        let bad = Distribution::Discrete(vec![0.5, 0.6]);
        assert!(matches!(bhattacharyya(&bad, &p), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn homodyne_bc_bounds_fidelity() {
        let a = state_builder(0.5, 0.3, 0.0, Complex::new(0.2, 0.0)).unwrap();
        let b = state_builder(0.5, 0.0, 0.0, Complex::new(0.0, 0.0)).unwrap();
        let f = fidelity_gaussian(&a, &b, 0.0).unwrap().fidelity;
        for k in 0..8 {
            let (p, q) = homodyne_distributions(&a, &b, k as f64 * 0.4).unwrap();
            assert!(bhattacharyya(&p, &q).unwrap() >= f - 1e-12);
        }
    }
}
