//! Updating a finite probability distribution on uncertain evidence.
//!
//! Three rules act directly on the outcome space: strict conditioning,
//! Jeffrey's rule and the minimum cross-entropy (I-projection) update. The
//! [`second_order`] module instead conditions in the enlarged space of
//! possible sender beliefs over the 3-simplex and recovers first-order
//! beliefs by taking expectations.
//!
//! The Judy Benjamin problem (a uniform prior over four map quadrants and a
//! report that `Pr(R1 | R) = q`) is wired up in [`jb`] and serves as the
//! benchmark every rule is checked against.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod ce;
mod error;
pub mod jb;
pub mod second_order;

pub use belief::{
    condition, conditional_probability, event_probability, jeffrey_update, kl_divergence, Event,
    FiniteDistribution, OutcomeSpace, Partition, PROB_TOL,
};
pub use ce::{
    ce_update, compile_conditional, jb_ce_blue, CeOptions, CeSolution, ConditionalConstraint,
    ConstraintSet, LinearConstraint,
};
pub use error::{Error, Result};
pub use second_order::{
    blue_prob, cdf_blue, cdf_cond_red, cond_red, density_blue, exact_posterior_quadrants,
    expected_blue_given_message, independence_check, joint_cdf, ks_statistic,
    mc_posterior_quadrants, sample_prior, trust_expectation, HQBelief, McConfig, McEstimate,
    MessageBand, PosteriorEstimate, SecondOrderPrior,
};
