//! Serializable state description: explicit moments or builder parameters.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Mat, Vector};
use crate::symplectic::{state_builder, GaussianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuilderSpec {
    pub nbar: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub theta_s: f64,
    #[serde(default)]
    pub alpha_re: f64,
    #[serde(default)]
    pub alpha_im: f64,
}

/// `{"modes", "mean", "cov"}` (row-major) or `{"builder": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RawSpec")]
pub enum StateSpec {
    Builder { builder: BuilderSpec },
    Moments { modes: usize, mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    builder: Option<BuilderSpec>,
    modes: Option<usize>,
    mean: Option<Vec<f64>>,
    cov: Option<Vec<Vec<f64>>>,
}

impl TryFrom<RawSpec> for StateSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> std::result::Result<Self, String> {
        match raw {
            RawSpec { builder: Some(builder), modes: None, mean: None, cov: None } => Ok(StateSpec::Builder { builder }),
            RawSpec { builder: None, modes: Some(modes), mean: Some(mean), cov: Some(cov) } => {
                Ok(StateSpec::Moments { modes, mean, cov })
            }
            _ => Err("expected either {\"builder\"} or {\"modes\", \"mean\", \"cov\"}".into()),
        }
    }
}

impl StateSpec {
    pub fn to_state(&self) -> Result<GaussianState> {
        match self {
            StateSpec::Builder { builder: b } => {
                state_builder(b.nbar, b.r, b.theta_s, Complex::new(b.alpha_re, b.alpha_im))
            }
            StateSpec::Moments { modes, mean, cov } => {
                let n = 2 * modes;
                if *modes == 0 || mean.len() != n || cov.len() != n || cov.iter().any(|row| row.len() != n) {
                    return Err(Error::DimensionMismatch(format!(
                        "{modes} modes need a mean of length {n} and a {n}x{n} covariance"
                    )));
                }
                let v = Mat::from_fn(n, n, |i, j| cov[i][j]);
                GaussianState::new(Vector::from_vec(mean.clone()), v)
            }
        }
    }

    pub fn from_state(state: &GaussianState) -> Self {
        let v = state.cov();
        StateSpec::Moments {
            modes: state.n_modes(),
            mean: state.mean().iter().copied().collect(),
            cov: (0..v.nrows()).map(|i| v.row(i).iter().copied().collect()).collect(),
        }
    }
}
