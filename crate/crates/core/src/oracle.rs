//! Cross-checks of the Gaussian formulas against the Fock-space oracle.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::fidelity_gaussian;
use crate::fock::{
    build_from_gaussian, m_operator_fock, number, quadratures, sld_fock, FockDensityMatrix,
};
use crate::gibbs::DEFAULT_EPSILON;
use crate::measurement::{canonicalize_pair, classify, homodyne_boundary_r0, MeasurementType, DEFAULT_CLASSIFY_TOL};
use crate::metrology::{channel_library, sld_qfi, ChannelKind, ParametrizedChannel, Probe};
use crate::scalar::CMat;
use crate::symplectic::{squeezer, state_builder, GaussianState, GaussianUnitary};

pub const FIDELITY_TOL: f64 = 1e-6;
pub const COMMUTATOR_TOL: f64 = 1e-5;
pub const QFI_REL_TOL: f64 = 1e-3;
/// Step of the central difference used for `∂ρ` in the Fock basis.
pub const FOCK_DERIVATIVE_STEP: f64 = 1e-4;

pub const GRID_NBAR: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const GRID_R: [f64; 3] = [0.0, 0.3, 0.8];
pub const GRID_ALPHA: [f64; 2] = [0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fidelity,
    Classify,
    Qfi,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub case: String,
    pub gaussian_value: f64,
    pub oracle_value: f64,
    pub abs_err: f64,
    pub pass: bool,
}

/// Pair for the standard grid point `(n̄, r, |α|)`: `ρ₁` is the grid state,
/// `ρ₀` a perturbed neighbour.
pub fn grid_pair(nbar: f64, r: f64, alpha: f64) -> Result<(GaussianState, GaussianState)> {
    let s1 = state_builder(nbar, r, 0.0, Complex::new(alpha, 0.0))?;
    let s0 = state_builder(0.8 * nbar + 0.1, r + 0.15, 0.3, Complex::new(alpha, 0.25))?;
    Ok((s0, s1))
}

pub fn grid_points() -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::new();
    for &n in &GRID_NBAR {
        for &r in &GRID_R {
            for &a in &GRID_ALPHA {
                pts.push((n, r, a));
            }
        }
    }
    pts
}

/// Dense images of a single-mode pair in a balanced frame: starting from the
/// canonical frame, the relative squeeze and displacement are split evenly
/// between the two states. Fidelity is unchanged by the joint unitary while
/// the photon-number tails are kept short.
pub fn balanced_fock_pair(
    s0: &GaussianState,
    s1: &GaussianState,
    cutoff: usize,
) -> Result<(FockDensityMatrix, FockDensityMatrix)> {
    let cp = canonicalize_pair(s0, s1)?;
    let sq = squeezer(-0.5 * cp.r0);
    let d = -(&sq * cp.rho0.mean()) * 0.5;
    let u = GaussianUnitary::new(sq, d)?;
    Ok((build_from_gaussian(&u.apply(&cp.rho0)?, cutoff)?, build_from_gaussian(&u.apply(&cp.rho1)?, cutoff)?))
}

/// Central difference of the dense state along a channel.
pub fn fock_derivative<Ch: ParametrizedChannel + ?Sized>(ch: &Ch, theta: f64, cutoff: usize) -> Result<CMat<f64>> {
    let h = FOCK_DERIVATIVE_STEP;
    let plus = build_from_gaussian(&ch.state(theta + h)?, cutoff)?;
    let minus = build_from_gaussian(&ch.state(theta - h)?, cutoff)?;
    Ok((plus.rho - minus.rho) / Complex::new(2.0 * h, 0.0))
}

fn case(name: String, g: f64, o: f64, tol: f64) -> OracleCase {
    let abs_err = (g - o).abs();
    OracleCase { case: name, gaussian_value: g, oracle_value: o, abs_err, pass: abs_err < tol }
}

pub fn fidelity_suite(cutoff: usize) -> Result<Vec<OracleCase>> {
    grid_points()
        .par_iter()
        .map(|&(n, r, a)| {
            let (s0, s1) = grid_pair(n, r, a)?;
            let g = fidelity_gaussian(&s0, &s1, DEFAULT_EPSILON)?.fidelity;
            let (f0, f1) = balanced_fock_pair(&s0, &s1, cutoff)?;
            let o = crate::fock::fidelity_fock(&f0, &f1)?;
            Ok(case(format!("fidelity nbar={n} r={r} alpha={a}"), g, o, FIDELITY_TOL))
        })
        .collect()
}

/// `‖√ρ₁[M̂, A]√ρ₁‖ / (‖√ρ₁M̂A√ρ₁‖ + ‖√ρ₁AM̂√ρ₁‖)`. The weights suppress the
/// entries of `M̂` that are unresolved where `ρ₁` has negligible support.
pub fn weighted_commutator(m: &CMat<f64>, a: &CMat<f64>, rho1: &FockDensityMatrix) -> f64 {
    let e = rho1.rho.clone().symmetric_eigen();
    let w = e.eigenvalues.map(|p| Complex::new(p.max(0.0).sqrt(), 0.0));
    let sq = &e.eigenvectors * CMat::from_diagonal(&w) * e.eigenvectors.adjoint();
    let ma = &sq * m * a * &sq;
    let am = &sq * a * m * &sq;
    (&ma - &am).norm() / (ma.norm() + am.norm())
}

/// Single-mode pairs with a known measurement family.
pub fn classify_pairs() -> Result<Vec<(String, GaussianState, GaussianState)>> {
    let z = Complex::new(0.0, 0.0);
    let r_star = homodyne_boundary_r0(1.0, 0.5);
    Ok(vec![
        ("thermal pair".into(), GaussianState::thermal(1.0)?, GaussianState::thermal(0.5)?),
        ("displaced thermal".into(), state_builder(1.0, 0.0, 0.0, Complex::new(0.5, 0.2))?, GaussianState::thermal(0.5)?),
        ("equal temperature".into(), state_builder(0.5, 0.4, 0.0, z)?, GaussianState::thermal(0.5)?),
        ("homodyne boundary".into(), state_builder(1.0, r_star, 0.0, z)?, GaussianState::thermal(0.5)?),
        ("equal covariance".into(), state_builder(0.5, 0.3, 0.6, Complex::new(0.4, -0.3))?, state_builder(0.5, 0.3, 0.6, z)?),
        ("general".into(), state_builder(0.9, 0.25, 0.3, Complex::new(0.3, 0.2))?, state_builder(0.4, 0.1, -0.5, Complex::new(-0.1, 0.1))?),
    ])
}

pub fn classify_suite(cutoff: usize) -> Result<Vec<OracleCase>> {
    classify_pairs()?
        .par_iter()
        .map(|(name, s0, s1)| {
            let c = classify(s0, s1, DEFAULT_CLASSIFY_TOL)?;
            let (x, p) = quadratures::<f64>(cutoff);
            let (u, generator) = match &c.measurement {
                MeasurementType::NumberResolving { pre_unitary } => (pre_unitary.inverse(), number::<f64>(cutoff)),
                MeasurementType::XpPlusPxEigenbasis { pre_unitary } => (pre_unitary.inverse(), &x * &p + &p * &x),
                MeasurementType::Homodyne { angle, pre_displacement } => {
                    let (s, co) = angle.sin_cos();
                    let q = &x * Complex::new(co, 0.0) + &p * Complex::new(s, 0.0);
                    (GaussianUnitary::displacement(-pre_displacement.clone()), q)
                }
                MeasurementType::PureStateProjector { .. } => {
                    return Err(Error::InvalidArgument("classify suite uses mixed pairs".into()))
                }
            };
            let f0 = build_from_gaussian(&u.apply(s0)?, cutoff)?;
            let f1 = build_from_gaussian(&u.apply(s1)?, cutoff)?;
            let m = m_operator_fock(&f0, &f1, true)?;
            let o = weighted_commutator(&m.m, &generator, &f1);
            Ok(case(format!("classify {name} -> {}", c.measurement.name()), 0.0, o, COMMUTATOR_TOL))
        })
        .collect()
}

/// Channels of the QFI suite at parameter value `θ`.
pub fn qfi_channels() -> Result<Vec<(String, Box<dyn ParametrizedChannel + Send>, f64)>> {
    let p = |n, r, ts, a: Complex<f64>| Probe::new(n, r, ts, a);
    let z = Complex::new(0.0, 0.0);
    Ok(vec![
        ("displacement".into(), Box::new(channel_library(ChannelKind::Displacement, Probe::thermal(1.0))?) as Box<_>, 0.0),
        ("phase".into(), Box::new(channel_library(ChannelKind::Phase, p(0.5, 0.5, 0.0, z))?) as Box<_>, 0.0),
        ("squeezing".into(), Box::new(channel_library(ChannelKind::Squeezing, p(0.3, 0.2, 0.5, Complex::new(0.3, 0.1)))?) as Box<_>, 0.1),
        ("loss".into(), Box::new(channel_library(ChannelKind::Loss { t: 1.0 }, p(0.2, 0.4, 0.0, z))?) as Box<_>, 0.3),
    ])
}

pub fn qfi_suite(cutoff: usize) -> Result<Vec<OracleCase>> {
    qfi_channels()?
        .par_iter()
        .map(|(name, ch, theta)| {
            let g = sld_qfi(ch.as_ref(), *theta)?.qfi;
            let rho = build_from_gaussian(&ch.state(*theta)?, cutoff)?;
            let drho = fock_derivative(ch.as_ref(), *theta, cutoff)?;
            let (_, o) = sld_fock(&rho, &drho)?;
            Ok(case(format!("qfi {name}"), g, o, QFI_REL_TOL * g.abs().max(1.0)))
        })
        .collect()
}

pub fn run_suite(suite: Suite, cutoff: usize) -> Result<Vec<OracleCase>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Fidelity | Suite::All) {
        out.extend(fidelity_suite(cutoff)?);
    }
    if matches!(suite, Suite::Classify | Suite::All) {
        out.extend(classify_suite(cutoff)?);
    }
    if matches!(suite, Suite::Qfi | Suite::All) {
        out.extend(qfi_suite(cutoff)?);
    }
    Ok(out)
}
