#![allow(dead_code)]

use gaussfid::scalar::{Mat, Vector};
use gaussfid::symplectic::{omega, state_builder, GaussianState, GaussianUnitary};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `exp(ΩH)` for a random symmetric `H` of scale `scale`.
pub fn random_symplectic(rng: &mut ChaCha8Rng, modes: usize, scale: f64) -> Mat<f64> {
    let n = 2 * modes;
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    let h = (&a + a.transpose()) * 0.5;
    (omega::<f64>(modes) * h).exp()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, modes: usize) -> GaussianUnitary {
    let s = random_symplectic(rng, modes, 0.4);
    let d = Vector::from_fn(2 * modes, |_, _| rng.random_range(-1.0..1.0));
    GaussianUnitary::new(s, d).unwrap()
}

/// Mixed state with symplectic eigenvalues in `[0.5 + nu_min, 0.5 + nu_max]`.
pub fn random_state(rng: &mut ChaCha8Rng, modes: usize, nu_min: f64, nu_max: f64) -> GaussianState {
    let s = random_symplectic(rng, modes, 0.4);
    let nus: Vec<f64> = (0..modes).map(|_| 0.5 + rng.random_range(nu_min..nu_max)).collect();
    let d = Mat::from_diagonal(&Vector::from_iterator(2 * modes, nus.iter().flat_map(|&v| [v, v])));
    let v = &s * d * s.transpose();
    let v = (&v + v.transpose()) * 0.5;
    let mean = Vector::from_fn(2 * modes, |_, _| rng.random_range(-1.0..1.0));
    GaussianState::new(mean, v).unwrap()
}

/// Single-mode builder state small enough for a 60-level Fock basis.
pub fn random_builder(rng: &mut ChaCha8Rng) -> GaussianState {
    state_builder(
        rng.random_range(0.05..1.2),
        rng.random_range(0.0..0.5),
        rng.random_range(0.0..std::f64::consts::PI),
        Complex::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)),
    )
    .unwrap()
}

pub fn rel_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}
