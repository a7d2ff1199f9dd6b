//! Communication-complexity lower bounds for finite conditional distributions
//! `p(a,b|x,y)`: the efficiency bound and its variants, the partition bound,
//! the nuclear-norm bound, and the Bell-functional certificates that witness
//! them. Everything that feeds an equality check is exact rational arithmetic.
//!
//! Module map:
//! - [`exactlp`]: exact rational simplex with dual values and optimality checks
//! - [`distributions`]: the [`Dist`] type and reference distributions
//! - [`strategies`]: local deterministic strategies, with and without aborts
//! - [`certificates`]: Bell functionals, extraction from duals, verification
//! - [`bounds`]: the LP bounds themselves
//! - [`hiddenmatching`]: the Hidden Matching distribution and its functional
//! - [`protosim`]: protocol reductions and their simulators

pub mod bounds;
pub mod certificates;
pub mod distributions;
pub mod exactlp;
pub mod hiddenmatching;
pub mod json;
pub mod protosim;
pub mod rational;
pub mod strategies;

pub use bounds::{BoundKind, BoundOptions, BoundResult};
pub use certificates::{BellFunctional, Certificate, CertificateKind, ValueRule};
pub use distributions::{Dist, Sizes};
pub use rational::Rat;
pub use strategies::{DetStrategy, StrategyClass};

use thiserror::Error;

/// Default cap on enumerated items (strategies, table entries, columns).
pub const DEFAULT_CAP: u128 = 100_000_000;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{what}: {count} items exceeds the enumeration cap {cap}{hint}")]
    TooLarge {
        what: String,
        count: String,
        cap: u128,
        hint: &'static str,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Error {
        Error::Input(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
