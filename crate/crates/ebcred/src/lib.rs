//! Empirical Bayes credible sets for the mildly ill-posed Gaussian
//! sequence model `X_i = kappa_i theta_i + n^(-1/2) Z_i`.
//!
//! The crate provides:
//! - the forward model and observation synthesis ([`sequence_model`]),
//! - marginal-likelihood estimation of the prior smoothness and the
//!   conjugate posterior ([`eb_inference`]),
//! - exact credible-ball radii by characteristic-function inversion and
//!   sample-based credible bands ([`credible`], [`wchi2`]),
//! - truth constructors and function-class membership checks ([`truths`]),
//! - theoretical diagnostics: h_n bounds, bias/variance, oracle and
//!   minimax risks ([`diagnostics`]),
//! - a seeded, reproducible experiment runner ([`experiments`]).
//!
//! Start with the `examples/` directory: each example is a runnable
//! walkthrough of one capability. The `ebcred` binary wraps
//! [`experiments::run`] for batch use.

pub mod credible;
pub mod diagnostics;
pub mod eb_inference;
pub mod error;
pub mod experiments;
pub mod optimize;
pub mod rng;
pub mod sequence_model;
pub mod truths;
pub mod wchi2;

pub use credible::{credible_ball, contains, radius, sample_band, CredibleBall};
pub use diagnostics::{
    alpha_bounds, bias_variance, diagnostics_report, h_n, minimax_linear_risk, oracle_risk,
    DiagnosticsReport,
};
pub use eb_inference::{
    empirical_bayes_posterior, estimate_alpha, log_marginal_likelihood, posterior, score, EBFit,
    PosteriorSummary,
};
pub use error::{Error, Result};
pub use experiments::{run, CoverageResult, ExperimentSpec, Mode};
pub use rng::Seed;
pub use sequence_model::{synthesize, KappaSpec, ModelConfig, Observation};
pub use truths::{is_in_class, ClassParams, Tail, TruthSequence, Verdict};
