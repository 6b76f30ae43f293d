//! SARIMA representation, exact likelihood, estimation and simulation.

mod fit;
mod kalman;
mod optim;
mod order;
mod roots;
mod simulate;
mod statespace;

use thiserror::Error;

use crate::series::SeriesError;

pub use fit::{fit_mle, fit_series, CoefficientEstimate, FitOptions, FittedModel};
pub use kalman::{kalman_filter, kalman_loglik, FilterOutput};
pub use optim::{central_hessian, invert_spd, nelder_mead, NelderMeadOptions, OptimResult};
pub use order::{
    coefficient_labels, expand_polynomials, integrate_polynomial, roots_outside_unit_circle,
    CoefficientSet, ModelOrder, SIGN_CONVENTION,
};
pub use roots::{check_roots, polynomial_roots, RootReport, ROOT_MARGIN};
pub use simulate::{default_burn_in, simulate, simulate_from};
pub use statespace::{psi_weights, StateSpaceForm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {needed} observations after differencing, got {n}")]
    InsufficientData { n: usize, needed: usize },
    #[error("AR polynomial has no stationary solution")]
    NonStationaryRegion,
    #[error("coefficients are not stationary and invertible")]
    NonStationaryCoefficients,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("a constant term is only allowed when d = D = 0")]
    ConstantNotAllowed,
    #[error(transparent)]
    Series(#[from] SeriesError),
}
