//! Performative prediction under proper scoring rules.
//!
//! When a published forecast changes the distribution it forecasts, the
//! report that maximizes expected score is generally not a fixed point of
//! the environment. This crate computes such optimal reports, fixed points,
//! the bounds relating the two, and several learning dynamics.
//!
//! ```
//! use perfscore::prelude::*;
//!
//! let rule = ScoringRule::quadratic(2)?;
//! let f = EnvironmentMap::affine_binary(0.3, 0.3)?;
//! let opt = performative_optimum(&rule, &f, &SolveConfig::default())?;
//! // The optimal report is 0.15 although the only fixed point is 0.3.
//! assert!((opt.report.p1() - 0.15).abs() < 1e-6);
//! # Ok::<(), perfscore::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod environment;
pub mod error;
pub mod games;
pub mod harness;
pub mod scoring;
pub mod simplex;
pub mod solvers;

#[cfg(doctest)]
mod book;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bounds::*;
    pub use crate::environment::{
        finite_difference_jacobian, EnvSpec, Environment, EnvironmentMap, FixedPointConfig,
        FixedPointMethod, FixedPointSet,
    };
    pub use crate::error::{Error, Result};
    pub use crate::games::*;
    pub use crate::scoring::{ExtReal, RuleKind, ScoringRule, Subgradient};
    pub use crate::simplex::*;
    pub use crate::solvers::*;
}
