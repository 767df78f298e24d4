//! Unbiased Monte Carlo estimation of first- and second-order parameter
//! sensitivities for stochastic reaction networks.
//!
//! A reaction network is simulated exactly (direct-method SSA). Along each
//! path, exponential probes and Poisson-thinned launches of split-coupled
//! sub-paths turn the exact integral representation of `∂²E[f(X(t))]/∂θ_i∂θ_j`
//! into a random variable with that expectation. A four-point finite-difference
//! baseline and closed-form oracles for linear networks are included for
//! comparison and validation.

pub mod error;
pub mod estimators;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use estimators::{
    coupled_sens_difference, sample_fd_second_order, sample_first_order, sample_output,
    sample_second_order, EstimatorConfig, FiniteDifference,
};
pub use model::file::{parse_model, Model};
pub use model::{
    CustomPropensity, Kinetics, OutputFunction, OutputTerm, Parameters, PropensitySpec,
    RatePolynomial, ReactionNetwork, State,
};
pub use montecarlo::{run_estimator, EstimateResult, RunOptions, Welford};
pub use rng::{Stream, StreamKey};
