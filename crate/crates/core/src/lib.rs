//! Fidelity, optimal measurements and quantum Fisher information for
//! multimode Gaussian states, with a truncated Fock-space oracle.

pub mod error;
pub mod fidelity;
pub mod fock;
pub mod gibbs;
pub mod io;
pub mod matfun;
pub mod measurement;
pub mod metrology;
pub mod oracle;
pub mod scalar;
pub mod symplectic;

pub use error::{Error, Result};
pub use fidelity::{bhattacharyya, fidelity_gaussian, gaussian_overlap, homodyne_distributions, Distribution};
pub use fock::{bc_under_povm, build_state, fidelity_fock, fuchs_caves_conditions, m_operator_fock, OraclePovm};
pub use gibbs::{gibbs_form, gk_matrix, DEFAULT_EPSILON};
pub use measurement::{classify, m_operator, solve_gm, sweep_classification, GridRange, SignClass};
pub use metrology::{
    channel_library, gm_rate_lyapunov, gm_rate_series, sld_closed_forms, sld_qfi, ChannelKind, CustomChannel,
    ParametrizedChannel, Probe,
};
pub use scalar::Real;
pub use symplectic::{state_builder, williamson};

pub type GaussianState = symplectic::GaussianState<f64>;
pub type GaussianUnitary = symplectic::GaussianUnitary<f64>;
pub type FidelityResult = fidelity::FidelityResult<f64>;
pub type MOperatorForm = measurement::MOperatorForm<f64>;
pub type MeasurementType = measurement::MeasurementType<f64>;
pub type Classification = measurement::Classification<f64>;
pub type SldQfiResult = metrology::SldQfiResult<f64>;
pub type FockDensityMatrix = fock::FockDensityMatrix<f64>;
pub type Mat = scalar::Mat<f64>;
pub type Vector = scalar::Vector<f64>;
