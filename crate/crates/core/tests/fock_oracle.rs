mod common;

use common::{random_builder, rng};
use gaussfid::fidelity::fidelity_gaussian;
use gaussfid::fock::{
    bc_under_povm, build_from_gaussian, displacement_operator, m_operator_fock, quadratic_operator, sld_fock,
    FockDensityMatrix, OraclePovm,
};
use gaussfid::matfun::herm_fn;
use gaussfid::measurement::{classify, m_operator, MeasurementType, DEFAULT_CLASSIFY_TOL};
use gaussfid::metrology::{channel_library, sld_qfi, ChannelKind, ParametrizedChannel, Probe};
use gaussfid::oracle::{balanced_fock_pair, fock_derivative};
use gaussfid::scalar::CMat;
use gaussfid::symplectic::{state_builder, GaussianState};
use nalgebra::Complex;

const CUTOFF: usize = 60;

fn z() -> Complex<f64> {
    Complex::new(0.0, 0.0)
}

fn sqrt_rho(rho: &FockDensityMatrix) -> CMat<f64> {
    herm_fn(&rho.rho, |p| p.max(0.0).sqrt())
}

/// `‖√ρ A √ρ‖`, insensitive to entries where `ρ` has no weight.
fn weighted_norm(a: &CMat<f64>, sq: &CMat<f64>) -> f64 {
    (sq * a * sq).norm()
}

fn channels() -> Vec<(&'static str, gaussfid::metrology::AnalyticChannel, f64)> {
    let p = Probe::new(0.4, 0.3, 0.2, Complex::new(0.3, -0.2));
    vec![
        ("displacement", channel_library(ChannelKind::Displacement, p).unwrap(), 0.1),
        ("phase", channel_library(ChannelKind::Phase, p).unwrap(), 0.2),
        ("squeezing", channel_library(ChannelKind::Squeezing, p).unwrap(), 0.1),
        ("loss", channel_library(ChannelKind::Loss { t: 1.0 }, p).unwrap(), 0.2),
    ]
}

#[test]
fn m_operator_is_first_order_in_sld() {
    for (name, ch, theta) in channels() {
        let sld = sld_qfi(&ch, theta).unwrap();
        let s = ch.state(theta).unwrap();
        let rho = build_from_gaussian(&s, CUTOFF).unwrap();
        let l = quadratic_operator(&sld.gm_rate, &sld.vm_rate, s.mean(), sld.nu, CUTOFF);
        let sq = sqrt_rho(&rho);
        let id = CMat::<f64>::identity(CUTOFF, CUTOFF);
        let residual = |dt: f64| {
            let rho0 = build_from_gaussian(&ch.state(theta + dt).unwrap(), CUTOFF).unwrap();
            let m = m_operator_fock(&rho0, &rho, true).unwrap();
            weighted_norm(&(&m.m - &id - &l * Complex::new(dt / 2.0, 0.0)), &sq)
        };
        let (r1, r2) = (residual(2e-3), residual(1e-3));
        assert!(r1 / r2 >= 3.5, "{name}: {r1:e} -> {r2:e}");
    }
}

#[test]
fn sld_matrix_elements_match_oracle() {
    for (name, ch, theta) in channels() {
        let sld = sld_qfi(&ch, theta).unwrap();
        let s = ch.state(theta).unwrap();
        let rho = build_from_gaussian(&s, CUTOFF).unwrap();
        let (l_fock, qfi) = sld_fock(&rho, &fock_derivative(&ch, theta, CUTOFF).unwrap()).unwrap();
        let l = quadratic_operator(&sld.gm_rate, &sld.vm_rate, s.mean(), sld.nu, CUTOFF);
        let sq = sqrt_rho(&rho);
        let err = weighted_norm(&(&l_fock - &l), &sq);
        assert!(err < 1e-4, "{name}: {err:e}");
        assert!((qfi - sld.qfi).abs() < 1e-3 * sld.qfi, "{name}: {qfi} vs {}", sld.qfi);
        let mean = (&rho.rho * &l).trace();
        assert!(mean.norm() < 1e-8, "{name}: Tr[ρL] = {mean}");
    }
}

#[test]
fn displaced_thermal_eigenvectors_are_displaced_number_states() {
    let s0 = state_builder(1.0, 0.0, 0.0, Complex::new(0.4, -0.3)).unwrap();
    let s1 = state_builder(0.5, 0.0, 0.0, Complex::new(0.1, 0.2)).unwrap();
    let form = m_operator(&s0, &s1, 1e-7).unwrap();
    let centre = form.um.clone().unwrap() + &form.u1;
    let f0 = build_from_gaussian(&s0, CUTOFF).unwrap();
    let f1 = build_from_gaussian(&s1, CUTOFF).unwrap();
    let m = m_operator_fock(&f0, &f1, true).unwrap();
    let d = displacement_operator(Complex::new(centre[0], centre[1]) / 2f64.sqrt(), CUTOFF);
    for n in 0..6 {
        let target = d.column(n);
        let overlap = (0..m.eigenvalues.len())
            .map(|k| target.dotc(&m.eigenvectors.column(k)).norm_sqr())
            .fold(0.0, f64::max);
        assert!(1.0 - overlap < 1e-4, "level {n}: deficit {:e}", 1.0 - overlap);
    }
}

#[test]
fn pure_limit_converges_to_projector() {
    let target = state_builder(0.0, 0.3, 0.4, Complex::new(0.2, 0.1)).unwrap();
    let other = state_builder(0.6, 0.1, 0.0, Complex::new(-0.2, 0.0)).unwrap();
    let psi = build_from_gaussian(&target, CUTOFF).unwrap();
    let (_, u) = gaussfid::matfun::herm_eig(&psi.rho);
    let psi_vec = u.column(CUTOFF - 1).into_owned();
    let mut deficits = Vec::new();
    for eps in [1e-3, 1e-4, 1e-5] {
        let (v, _) = gaussfid::gibbs::regularize(target.cov(), eps).unwrap();
        let reg = GaussianState::new(target.mean().clone(), v).unwrap();
        let f1 = build_from_gaussian(&reg, CUTOFF).unwrap();
        let f0 = build_from_gaussian(&other, CUTOFF).unwrap();
        let m = m_operator_fock(&f0, &f1, true).unwrap();
        let overlap = (0..m.eigenvalues.len())
            .map(|k| psi_vec.dotc(&m.eigenvectors.column(k)).norm_sqr())
            .fold(0.0, f64::max);
        deficits.push(1.0 - overlap);
    }
    assert!(deficits.windows(2).all(|w| w[1] < w[0]), "{deficits:?}");
    assert!(deficits[2] < 1e-4, "{deficits:?}");
}

#[test]
fn other_measurements_never_beat_fidelity() {
    let mut r = rng(17);
    for _ in 0..6 {
        let (s0, s1) = (random_builder(&mut r), random_builder(&mut r));
        let f = fidelity_gaussian(&s0, &s1, 1e-7).unwrap().fidelity;
        let (f0, f1) = balanced_fock_pair(&s0, &s1, CUTOFF).unwrap();
        let number = bc_under_povm(&f0, &f1, &OraclePovm::number_basis(CUTOFF)).unwrap();
        assert!(number >= f - 1e-6, "{number} < {f}");
        for phi in [0.0, 0.7, 1.9] {
            let povm = OraclePovm::homodyne(CUTOFF, phi, 0.0, 1.0).unwrap();
            let bc = bc_under_povm(&f0, &f1, &povm).unwrap();
            assert!(bc >= f - 1e-6, "{bc} < {f}");
        }
    }
}

#[test]
fn sld_type_matches_finite_pair_classification() {
    let thermal = Probe::new(0.5, 0.0, 0.0, Complex::new(0.5, 0.0));
    let squeezed = Probe::new(0.5, 0.4, 0.0, z());
    let cases = [
        (ChannelKind::Displacement, thermal, 0.0, "homodyne"),
        (ChannelKind::Phase, squeezed, 0.0, "xp_px"),
        (ChannelKind::Squeezing, squeezed, 0.0, "xp_px"),
        (ChannelKind::Loss { t: 1.5 }, Probe::new(0.0, 0.3, 0.0, z()), 0.1, "number"),
    ];
    for (kind, probe, theta, want) in cases {
        let ch = channel_library(kind, probe).unwrap();
        let sld = sld_qfi(&ch, theta).unwrap().measurement_type.unwrap();
        let pair = classify(&ch.state(theta + 1e-4).unwrap(), &ch.state(theta).unwrap(), DEFAULT_CLASSIFY_TOL);
        assert_eq!(sld.name(), want, "{}", kind.name());
        match pair {
            Ok(c) if !matches!(c.measurement, MeasurementType::PureStateProjector { .. }) => {
                assert_eq!(c.measurement.name(), want, "{}", kind.name());
            }
            _ => {}
        }
    }
}
