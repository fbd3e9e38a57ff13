//! The optimal-measurement operator `M̂ = ρ₁^{-1/2}√(ρ₁^{1/2}ρ₀ρ₁^{1/2})ρ₁^{-1/2}`
//! in Gaussian form, `M̂ ∝ D(u₁) exp(−½QᵀG_MQ + v_MᵀQ) D(u₁)†`, and the
//! single-mode classification of its eigenbasis.

use nalgebra::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::{exp_iomega, gibbs_form, real_checked, DEFAULT_EPSILON};
use crate::matfun::{exprel, logm, sqrtm};
use crate::scalar::{complexify, complexify_vec, lit, split_real_vec, symmetrize, to_f64, CMat, Mat, Real, Vector};
use crate::symplectic::{
    i_omega, rotation, squeezer, symplectic_inverse, williamson, GaussianState, GaussianUnitary,
};

/// Relative residual above which `solve_gm` reports failure.
pub const RESIDUAL_ERROR_TOL: f64 = 1e-7;
/// Default band on the relative product `d₁d₂/max(d₁², d₂²)`.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;
/// States with every symplectic eigenvalue within this of ½ are treated as pure.
pub const PURE_STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MOperatorForm<T: Real = f64> {
    pub u1: Vector<T>,
    pub gm: Mat<T>,
    pub vm: Vector<T>,
    /// `G_M⁺ v_M`; absent when `G_M = 0`.
    pub um: Option<Vector<T>>,
}

/// `‖e^{iΩG_M}e^{iΩG₁}e^{iΩG_M} − e^{iΩG₀}‖_F / ‖e^{iΩG₀}‖_F`.
pub fn gm_residual<T: Real>(gm: &Mat<T>, g0: &Mat<T>, g1: &Mat<T>) -> Result<T> {
    let em = exp_iomega(gm, T::one())?;
    let e0 = exp_iomega(g0, T::one())?;
    let lhs = &em * exp_iomega(g1, T::one())? * &em;
    Ok((lhs - &e0).norm() / e0.norm())
}

/// Solves `e^{iΩG_M} e^{iΩG₁} e^{iΩG_M} = e^{iΩG₀}` for real symmetric `G_M`.
pub fn solve_gm<T: Real>(g0: &Mat<T>, g1: &Mat<T>) -> Result<Mat<T>> {
    if g0.shape() != g1.shape() || g0.nrows() % 2 != 0 || g0.nrows() != g0.ncols() {
        return Err(Error::DimensionMismatch("Gibbs matrices must both be 2n x 2n".into()));
    }
    let half = exp_iomega(g1, lit(0.5))?;
    let half_inv = exp_iomega(g1, lit(-0.5))?;
    let k = &half * exp_iomega(g0, T::one())? * &half;
    let em = &half_inv * sqrtm(&k)? * &half_inv;
    let iw = i_omega::<T>(g0.nrows() / 2);
    let mut gm = symmetrize(&real_checked(&(iw * logm(&em)?), "G_M")?);
    let scale = T::one() + g0.norm() + g1.norm();
    if gm.norm() <= T::default_epsilon() * lit::<T>(64.0) * scale {
        gm.fill(T::zero());
    }
    let res = gm_residual(&gm, g0, g1)?;
    if !(res <= lit::<T>(RESIDUAL_ERROR_TOL)) {
        return Err(Error::ResidualTooLarge { residual: to_f64(res) });
    }
    Ok(gm)
}

fn pinv<T: Real>(m: &Mat<T>) -> Result<Mat<T>> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = smax * lit::<T>(1e-12);
    svd.pseudo_inverse(cut)
        .map_err(|e| Error::NumericalBreakdown(format!("pseudo-inverse: {e}")))
}

/// Gaussian parameters of `M̂` for the pair `(ρ₀, ρ₁)`.
pub fn m_operator<T: Real>(
    s0: &GaussianState<T>,
    s1: &GaussianState<T>,
    epsilon: T,
) -> Result<MOperatorForm<T>> {
    if s0.n_modes() != s1.n_modes() {
        return Err(Error::DimensionMismatch("states differ in mode number".into()));
    }
    let g0 = gibbs_form(s0, epsilon)?.g;
    let g1 = gibbs_form(s1, epsilon)?.g;
    let gm = solve_gm(&g0, &g1)?;
    let n = gm.nrows();
    let v0 = s0.mean() - s1.mean();
    let u1 = s1.mean().clone();
    let zero_gm = gm.iter().all(|&x| x == T::zero());
    if v0.iter().all(|&x| x == T::zero()) {
        let um = (!zero_gm).then(|| Vector::zeros(n));
        return Ok(MOperatorForm { u1, gm, vm: Vector::zeros(n), um });
    }
    // conjugation by the Gaussian operators maps Q ↦ E(Q − a) + a
    let id = CMat::<T>::identity(n, n);
    let e0 = exp_iomega(&g0, T::one())?;
    let e1 = exp_iomega(&g1, T::one())?;
    let em = exp_iomega(&gm, T::one())?;
    let lhs = (em * e1 + &id)
        .try_inverse()
        .ok_or_else(|| Error::NumericalBreakdown("E_M E_1 + 1 singular".into()))?;
    let c = lhs * (&id - e0) * complexify_vec(&v0);
    let iw = i_omega::<T>(n / 2);
    let h = exprel(&(&iw * complexify(&gm)))?;
    let w = h
        .lu()
        .solve(&c)
        .ok_or_else(|| Error::NumericalBreakdown("exprel(iΩG_M) singular".into()))?;
    let (vm, im) = split_real_vec(&(iw * w * Complex::new(-T::one(), T::zero())));
    if im > lit::<T>(1e-8) * vm.norm().max(T::one()) {
        return Err(Error::NumericalBreakdown(format!("v_M imaginary residue {:e}", to_f64(im))));
    }
    let um = if zero_gm { None } else { Some(pinv(&gm)? * &vm) };
    Ok(MOperatorForm { u1, gm, vm, um })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPair<T: Real = f64> {
    /// Maps the canonical pair onto the original one.
    pub v_hat: GaussianUnitary<T>,
    pub rho0: GaussianState<T>,
    pub rho1: GaussianState<T>,
    pub nbar0: T,
    pub nbar1: T,
    pub r0: T,
}

/// Brings `s1` to a centred thermal state and `s0` to an axis-aligned,
/// x-elongated (`r₀ ≥ 0`) displaced squeezed thermal state.
pub fn canonicalize_pair<T: Real>(s0: &GaussianState<T>, s1: &GaussianState<T>) -> Result<CanonicalPair<T>> {
    if s0.n_modes() != 1 || s1.n_modes() != 1 {
        return Err(Error::NotSingleMode);
    }
    let w1 = williamson(s1.cov())?;
    let s1i = symplectic_inverse(&w1.s);
    let vp = &s1i * s0.cov() * s1i.transpose();
    let (a, c, d) = (vp[(0, 0)], vp[(0, 1)], vp[(1, 1)]);
    let theta = if c == T::zero() && a >= d {
        T::zero()
    } else {
        (c * lit::<T>(2.0)).atan2(a - d) * lit::<T>(0.5)
    };
    let rot = rotation(theta);
    let diag = rot.transpose() * &vp * &rot;
    let (big, small) = (diag[(0, 0)], diag[(1, 1)]);
    let v_hat = GaussianUnitary::from_parts_unchecked(&w1.s * &rot, s1.mean().clone());
    let mean0 = rot.transpose() * &s1i * (s0.mean() - s1.mean());
    let nu1 = w1.nu[0];
    let rho1 = GaussianState::from_parts_unchecked(Vector::zeros(2), Mat::identity(2, 2) * nu1);
    let rho0 = GaussianState::from_parts_unchecked(
        mean0,
        Mat::from_diagonal(&Vector::from_vec(vec![big, small])),
    );
    Ok(CanonicalPair {
        v_hat,
        rho0,
        rho1,
        nbar0: (big * small).sqrt() - lit::<T>(0.5),
        nbar1: nu1 - lit::<T>(0.5),
        r0: (big / small).ln() * lit::<T>(0.25),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementType<T: Real = f64> {
    /// Photon counting after `pre_unitary`: POVM `{U|n⟩⟨n|U†}`.
    NumberResolving { pre_unitary: GaussianUnitary<T> },
    /// Eigenbasis of `x̂p̂ + p̂x̂` after `pre_unitary`.
    XpPlusPxEigenbasis { pre_unitary: GaussianUnitary<T> },
    /// Quadrature `x cos φ + p sin φ` of the state displaced by `−pre_displacement`.
    Homodyne { angle: T, pre_displacement: Vector<T> },
    PureStateProjector { target: GaussianState<T> },
}

impl<T: Real> MeasurementType<T> {
    pub fn name(&self) -> &'static str {
        match self {
            MeasurementType::NumberResolving { .. } => "number",
            MeasurementType::XpPlusPxEigenbasis { .. } => "xp_px",
            MeasurementType::Homodyne { .. } => "homodyne",
            MeasurementType::PureStateProjector { .. } => "pure_projector",
        }
    }

    pub fn same_family(&self, other: &MeasurementType<T>) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification<T: Real = f64> {
    pub measurement: MeasurementType<T>,
    /// `G_M[x,x]` in the canonical frame.
    pub d1: T,
    /// `G_M[p,p]` in the canonical frame.
    pub d2: T,
    /// Signed `d₁d₂/max(d₁², d₂²)`.
    pub boundary_distance: T,
    /// Inside the homodyne band `|d₁d₂| ≤ tol·max(d₁², d₂²)`.
    pub on_boundary: bool,
    pub canonical: Option<CanonicalPair<T>>,
}

/// Sign rule on the canonical `G_M` eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Number,
    XpPx,
    HomodyneX,
    HomodyneP,
    Intersection,
}

pub fn sign_class<T: Real>(d1: T, d2: T, tol: T) -> (SignClass, T) {
    let m = (d1 * d1).max(d2 * d2);
    if m.sqrt() <= tol {
        return (SignClass::Intersection, T::zero());
    }
    let p = d1 * d2 / m;
    let class = if p > tol {
        SignClass::Number
    } else if p < -tol {
        SignClass::XpPx
    } else if d1.abs() >= d2.abs() {
        SignClass::HomodyneX
    } else {
        SignClass::HomodyneP
    };
    (class, p)
}

fn quadrature_angle<T: Real>(w: &Vector<T>) -> T {
    let mut phi = w[1].atan2(w[0]);
    if phi < T::zero() {
        phi += T::pi();
    }
    if phi >= T::pi() {
        phi -= T::pi();
    }
    phi
}

/// Classifies the optimal measurement for a single-mode pair.
pub fn classify<T: Real>(s0: &GaussianState<T>, s1: &GaussianState<T>, tol: T) -> Result<Classification<T>> {
    if s0.n_modes() != 1 || s1.n_modes() != 1 {
        return Err(Error::NotSingleMode);
    }
    let pure = lit::<T>(PURE_STATE_TOL);
    if s1.is_pure(pure) || s0.is_pure(pure) {
        let target = if s1.is_pure(pure) { s1.clone() } else { s0.clone() };
        return Ok(Classification {
            measurement: MeasurementType::PureStateProjector { target },
            d1: T::zero(),
            d2: T::zero(),
            boundary_distance: T::zero(),
            on_boundary: false,
            canonical: None,
        });
    }
    let cp = canonicalize_pair(s0, s1)?;
    let mop = m_operator(&cp.rho0, &cp.rho1, lit(DEFAULT_EPSILON))?;
    let (d1, d2) = (mop.gm[(0, 0)], mop.gm[(1, 1)]);
    let (class, p) = sign_class(d1, d2, tol);
    let s_hat = cp.v_hat.matrix().clone();
    let u1 = cp.v_hat.displacement_vector().clone();
    let pre = |extra: Mat<T>| {
        let um = mop.um.clone().unwrap_or_else(|| Vector::zeros(2));
        GaussianUnitary::from_parts_unchecked(&s_hat * extra, &s_hat * um + &u1)
    };
    let measurement = match class {
        SignClass::Number => {
            let s = (d2.abs() / d1.abs()).powf(lit(0.25));
            MeasurementType::NumberResolving { pre_unitary: pre(squeezer(s.ln())) }
        }
        SignClass::XpPx => {
            let s = (d2.abs() / d1.abs()).powf(lit(0.25));
            let r45 = rotation(-T::frac_pi_4());
            MeasurementType::XpPlusPxEigenbasis { pre_unitary: pre(squeezer(s.ln()) * r45) }
        }
        SignClass::HomodyneX | SignClass::HomodyneP => {
            let e = if class == SignClass::HomodyneX {
                Vector::from_vec(vec![T::one(), T::zero()])
            } else {
                Vector::from_vec(vec![T::zero(), T::one()])
            };
            let w = symplectic_inverse(&s_hat).transpose() * e;
            MeasurementType::Homodyne { angle: quadrature_angle(&w), pre_displacement: u1.clone() }
        }
        SignClass::Intersection => {
            let lab = m_operator(s0, s1, lit(DEFAULT_EPSILON))?;
            let angle = if lab.vm.norm() > T::zero() { quadrature_angle(&lab.vm) } else { T::zero() };
            MeasurementType::Homodyne { angle, pre_displacement: u1.clone() }
        }
    };
    Ok(Classification {
        measurement,
        d1,
        d2,
        boundary_distance: p,
        on_boundary: matches!(class, SignClass::HomodyneX | SignClass::HomodyneP | SignClass::Intersection),
        canonical: Some(cp),
    })
}

/// `sinh(√q)/√q`, continued to `q < 0` as `sin(√−q)/√−q`.
fn sinhc_sq<T: Real>(q: T) -> T {
    if q.abs() < lit(1e-8) {
        return T::one() + q / lit::<T>(6.0) + q * q / lit::<T>(120.0);
    }
    if q > T::zero() {
        let s = q.sqrt();
        s.sinh() / s
    } else {
        let s = (-q).sqrt();
        s.sin() / s
    }
}

/// `cosh(√q)`, continued to `q < 0` as `cos(√−q)`.
fn cosh_sq<T: Real>(q: T) -> T {
    if q >= T::zero() {
        q.sqrt().cosh()
    } else {
        (-q).sqrt().cos()
    }
}

/// Pauli-coefficient residuals of the single-mode matrix equation for a
/// thermal `ρ₁` and an x-elongated squeezed thermal `ρ₀`.
///
/// Returns `(L₀ − R₀, Im(L₁ − R₁), L₂ − R₂)`; `L₁, R₁` are purely imaginary.
pub fn appendix_b_residuals<T: Real>(d1: T, d2: T, r0: T, nbar0: T, nbar1: T) -> Result<[T; 3]> {
    if !(nbar0 > T::zero()) || !(nbar1 > T::zero()) {
        return Err(Error::DomainError("thermal occupations must be positive".into()));
    }
    let one = T::one();
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let ch = |n: T| (two * n * n + two * n + one) / (two * n * (n + one));
    let sh = |n: T| (two * n + one) / (two * n * (n + one));
    let (c1, s1, c0, s0) = (ch(nbar1), sh(nbar1), ch(nbar0), sh(nbar0));
    let q = d1 * d2;
    let sum = d1 + d2;
    let shc2 = sinhc_sq(lit::<T>(4.0) * q);
    let shc1 = sinhc_sq(q);
    let cosh2 = cosh_sq(lit::<T>(4.0) * q);
    let l0 = sum * s1 * shc2 + c1 * cosh2;
    let l1 = -(d1 - d2) * (c1 * shc2 + s1 * sum * shc1 * shc1 * half);
    let l2 = s1 * (-one - sum * sum * shc1 * shc1 * half) - c1 * sum * shc2;
    let r1 = s0 * (two * r0).sinh();
    let r2 = -s0 * (two * r0).cosh();
    Ok([l0 - c0, l1 - r1, l2 - r2])
}

/// Inclusive uniform grid `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange<T: Real = f64> {
    pub start: T,
    pub stop: T,
    pub count: usize,
}

impl<T: Real> GridRange<T> {
    pub fn new(start: T, stop: T, count: usize) -> Result<Self> {
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidArgument("grid needs finite bounds and count >= 1".into()));
        }
        Ok(GridRange { start, stop, count })
    }

    pub fn values(&self) -> Vec<T> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / lit::<T>((self.count - 1) as f64);
        (0..self.count).map(|i| self.start + step * lit::<T>(i as f64)).collect()
    }

    pub fn step(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (self.stop - self.start) / lit::<T>((self.count - 1) as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<T: Real = f64> {
    pub r0: T,
    pub nbar0: T,
    pub class: SignClass,
    pub d1: T,
    pub d2: T,
    pub boundary_distance: T,
}

impl SignClass {
    pub fn label(&self) -> &'static str {
        match self {
            SignClass::Number => "number",
            SignClass::XpPx => "xp_px",
            SignClass::HomodyneX => "homodyne_x",
            SignClass::HomodyneP => "homodyne_p",
            SignClass::Intersection => "intersection",
        }
    }
}

/// Canonical-frame `(d₁, d₂)` for a thermal `ρ₁(n̄₁)` and `ρ₀(n̄₀, r₀)`.
pub fn canonical_gm<T: Real>(nbar0: T, r0: T, nbar1: T) -> Result<(T, T)> {
    let zero = Complex::new(T::zero(), T::zero());
    let s0 = crate::symplectic::state_builder(nbar0, r0, T::zero(), zero)?;
    let s1 = crate::symplectic::state_builder(nbar1, T::zero(), T::zero(), zero)?;
    let eps = lit(DEFAULT_EPSILON);
    let gm = solve_gm(&gibbs_form(&s0, eps)?.g, &gibbs_form(&s1, eps)?.g)?;
    Ok((gm[(0, 0)], gm[(1, 1)]))
}

/// Classification over an `(r₀, n̄₀)` grid for fixed `n̄₁`, row-major in `r₀`.
pub fn sweep_classification<T: Real>(
    nbar1: T,
    r0_grid: &GridRange<T>,
    nbar0_grid: &GridRange<T>,
) -> Result<Vec<SweepPoint<T>>> {
    if !(nbar1 > T::zero()) || nbar0_grid.values().iter().any(|&n| !(n > T::zero())) {
        return Err(Error::DomainError("thermal occupations must be positive".into()));
    }
    let tol = lit::<T>(DEFAULT_CLASSIFY_TOL);
    let pts: Vec<(T, T)> = r0_grid
        .values()
        .into_iter()
        .flat_map(|r| nbar0_grid.values().into_iter().map(move |n| (r, n)))
        .collect();
    pts.par_iter()
        .map(|&(r0, nbar0)| {
            let (d1, d2) = canonical_gm(nbar0, r0, nbar1)?;
            let (class, p) = sign_class(d1, d2, tol);
            Ok(SweepPoint { r0, nbar0, class, d1, d2, boundary_distance: p })
        })
        .collect()
}

/// The homodyne boundary: `e^{±2r₀} = n̄₀(n̄₀+1)(2n̄₁+1)/[n̄₁(n̄₁+1)(2n̄₀+1)]`.
pub fn homodyne_boundary_r0<T: Real>(nbar0: T, nbar1: T) -> T {
    let one = T::one();
    let two = lit::<T>(2.0);
    let f = nbar0 * (nbar0 + one) * (two * nbar1 + one) / (nbar1 * (nbar1 + one) * (two * nbar0 + one));
    f.ln().abs() * lit::<T>(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{gibbs_from_covariance, thermal_gibbs_exponent};
    use crate::symplectic::state_builder;
    use approx::assert_relative_eq;

    fn st(n: f64, r: f64, th: f64, a: (f64, f64)) -> GaussianState<f64> {
        state_builder(n, r, th, Complex::new(a.0, a.1)).unwrap()
    }

    #[test]
    fn equal_gibbs_gives_zero() {
        let g = gibbs_from_covariance(st(0.4, 0.3, 0.2, (0.0, 0.0)).cov(), 0.0).unwrap();
        let gm = solve_gm(&g, &g).unwrap();
        assert!(gm.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn commuting_thermals_halve() {
        let g0 = Mat::identity(2, 2) * thermal_gibbs_exponent(1.0);
        let g1 = Mat::identity(2, 2) * thermal_gibbs_exponent(0.5);
        let gm = solve_gm(&g0, &g1).unwrap();
        let coth_inv = |x: f64| 0.5 * ((x + 1.0) / (x - 1.0)).ln();
        assert_relative_eq!(gm, Mat::identity(2, 2) * (coth_inv(3.0) - coth_inv(2.0)), epsilon = 1e-13);
        assert_relative_eq!(gm[(0, 0)], (2f64.ln() - 3f64.ln()) * 0.5, epsilon = 1e-13);
    }

    #[test]
    fn squeezed_vs_thermal_is_indefinite() {
        let g0 = gibbs_from_covariance(st(0.5, 0.3, 0.0, (0.0, 0.0)).cov(), 0.0).unwrap();
        let g1 = gibbs_from_covariance(st(0.5, 0.0, 0.0, (0.0, 0.0)).cov(), 0.0).unwrap();
        let gm = solve_gm(&g0, &g1).unwrap();
        assert!(gm[(0, 0)] * gm[(1, 1)] < 0.0);
        assert!(gm_residual(&gm, &g0, &g1).unwrap() < 1e-10);
    }

    #[test]
    fn displaced_equal_covariance() {
        let s0 = st(1.0, 0.0, 0.0, (0.3 / 2f64.sqrt(), 0.0));
        let s1 = st(1.0, 0.0, 0.0, (0.0, 0.0));
        let m = m_operator(&s0, &s1, 0.0).unwrap();
        assert!(m.um.is_none());
        assert_relative_eq!(m.vm[0], 0.3 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(m.vm[1], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn same_state_identity() {
        let s = st(0.7, 0.2, 0.4, (0.1, 0.2));
        let m = m_operator(&s, &s, 1e-7).unwrap();
        assert!(m.gm.iter().all(|&x| x == 0.0));
        assert!(m.vm.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn vm_equals_gm_um() {
        let s0 = st(0.8, 0.3, 0.5, (0.4, -0.2));
        let s1 = st(0.3, -0.1, 1.1, (0.1, 0.3));
        let m = m_operator(&s0, &s1, 0.0).unwrap();
        let um = m.um.clone().unwrap();
        assert_relative_eq!(&m.gm * um, m.vm, epsilon = 1e-9);
    }

    #[test]
    fn canonical_pair_reconstructs() {
        let s0 = st(0.8, 0.3, 0.5, (0.4, -0.2));
        let s1 = st(0.3, -0.4, 1.1, (0.1, 0.3));
        let cp = canonicalize_pair(&s0, &s1).unwrap();
        let a = cp.v_hat.apply(&cp.rho0).unwrap();
        let b = cp.v_hat.apply(&cp.rho1).unwrap();
        assert_relative_eq!(a.cov(), s0.cov(), epsilon = 1e-12);
        assert_relative_eq!(a.mean(), s0.mean(), epsilon = 1e-12);
        assert_relative_eq!(b.cov(), s1.cov(), epsilon = 1e-12);
        assert_relative_eq!(b.mean(), s1.mean(), epsilon = 1e-12);
        assert_relative_eq!(cp.nbar1, 0.3, epsilon = 1e-12);
        assert!(cp.r0 >= 0.0);
    }

    #[test]
    fn canonical_identity_case() {
        let s0 = st(0.8, 0.3, 0.0, (0.0, 0.0));
        let s1 = st(0.3, 0.0, 0.0, (0.0, 0.0));
        let cp = canonicalize_pair(&s0, &s1).unwrap();
        assert_relative_eq!(cp.v_hat.matrix(), &Mat::identity(2, 2), epsilon = 1e-13);
        assert_relative_eq!(cp.r0, 0.3, epsilon = 1e-13);
        assert_relative_eq!(cp.nbar0, 0.8, epsilon = 1e-13);
    }

    #[test]
    fn classification_examples() {
        let tol = DEFAULT_CLASSIFY_TOL;
        let c = classify(&st(1.0, 0.0, 0.0, (0.5, 0.0)), &st(0.5, 0.0, 0.0, (0.0, 0.0)), tol).unwrap();
        assert!(matches!(c.measurement, MeasurementType::NumberResolving { .. }));
        let c = classify(&st(0.5, 0.3, 0.0, (0.0, 0.0)), &st(0.5, 0.0, 0.0, (0.0, 0.0)), tol).unwrap();
        assert!(matches!(c.measurement, MeasurementType::XpPlusPxEigenbasis { .. }));
        let r0 = 0.5 * (16.0f64 / 9.0).ln();
        let c = classify(&st(1.0, r0, 0.0, (0.0, 0.0)), &st(0.5, 0.0, 0.0, (0.0, 0.0)), tol).unwrap();
        match c.measurement {
            MeasurementType::Homodyne { angle, .. } => assert!(angle.abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert!(c.d2.abs() < 1e-9 * c.d1.abs());
        let pure = st(0.0, 0.3, 0.2, (0.1, 0.0));
        let c = classify(&st(0.5, 0.0, 0.0, (0.0, 0.0)), &pure, tol).unwrap();
        assert_eq!(c.measurement, MeasurementType::PureStateProjector { target: pure });
    }

    #[test]
    fn appendix_b_at_solution() {
        let (d1, d2) = canonical_gm(0.5, 0.3, 0.5).unwrap();
        let r = appendix_b_residuals(d1, d2, 0.3, 0.5, 0.5).unwrap();
        assert!(r.iter().all(|x: &f64| x.abs() < 1e-9), "{r:?}");
        let r = appendix_b_residuals(0.0, 0.0, 0.0, 0.5, 0.5).unwrap();
        assert!(r.iter().all(|x: &f64| x.abs() < 1e-14), "{r:?}");
        let r = appendix_b_residuals(d1 + 0.01, d2, 0.3, 0.5, 0.5).unwrap();
        assert!(r.iter().any(|x: &f64| x.abs() > 1e-4));
        assert!(appendix_b_residuals(0.1, 0.1, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn sweep_small() {
        let r = GridRange::new(0.0, 1.0, 5).unwrap();
        let n = GridRange::new(0.5, 0.5, 1).unwrap();
        let pts = sweep_classification(0.5, &r, &n).unwrap();
        assert_eq!(pts[0].class, SignClass::Intersection);
        assert!(pts[1..].iter().all(|p| p.class == SignClass::XpPx));
    }
}
