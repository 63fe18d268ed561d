//! Reversiblizations of finite-state continuous-time Markov generators.
//!
//! The crate covers f-divergences between generators, the power-mean,
//! balancing-function, Cauchy, logarithmic and dual-mean reversiblization
//! families, information projections and centroids onto the set of
//! π-reversible generators, and the spectral / hitting-time / asymptotic
//! variance functionals used to compare them under the Peskun order.

pub mod analyze;
pub mod chain;
pub mod divergence;
pub mod linalg;
pub mod project;
pub mod reversiblize;
pub mod verify;

pub mod extended;

pub use chain::{Distribution, Generator, StateSpace};
pub use divergence::DivergenceSpec;
