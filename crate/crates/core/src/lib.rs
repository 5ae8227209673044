//! Active learning of Mealy machines for software product lines.
//!
//! The crate provides the L*-style learner for Mealy machines, the adaptive
//! product-line learner that seeds each product's observation table from the
//! tables of previously learned products, the Wp conformance oracle used to
//! answer equivalence queries, product derivation from variability models,
//! t-wise sampling, and the statistics and experiment runners used to compare
//! adaptive and non-adaptive learning.

pub mod adaptive;
pub mod eq;
pub mod experiment;
pub mod learn;
pub mod mealy;
pub mod rng;
pub mod spl;
pub mod stats;
pub mod sampling;
