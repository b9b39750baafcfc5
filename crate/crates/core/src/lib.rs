//! Reduced-basis solvers for parametrized elliptic optimal control.
//!
//! A [`FullOrderModel`] assembles the Q1 finite-element KKT system of one
//! benchmark problem. [`greedy::greedy_train`] builds a block-diagonal
//! [`ReducedBasis`] with one of the stabilizations in [`stabilization`],
//! projected by one of the rules in [`reduced`]; both are looked up by name in
//! a [`Registry`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fem;
pub mod greedy;
pub mod io;
pub mod model;
pub mod params;
pub mod problem;
pub mod reduced;
pub mod registry;
pub mod report;
pub mod sparse;
pub mod stabilization;

pub use error::{Error, Result};
pub use greedy::{greedy_train, GreedyConfig, GreedyResult, GreedyTrace, Outcome};
pub use model::{FullOrderModel, Snapshot};
pub use params::{ParameterBox, ParameterVector};
pub use problem::ProblemSpec;
pub use reduced::{Formulation, ReducedBasis, StabilizationKind};
pub use registry::Registry;
