//! Block-diagonal reduced bases, projection and reduced solves.

mod basis;
mod inf_sup;
mod online;
mod projection;
mod system;

pub use basis::{
    BasisBlock, BasisLayout, BlockId, DropRecord, ReducedBasis, StabilizationKind, DROP_TOLERANCE,
};
pub use inf_sup::{apply_b_dense, basis_inf_sup, constraint_block, reduced_constraint, reduced_inf_sup};
pub use online::{check_compatible, Evaluation, OnlineReduction};
pub use projection::{project, Galerkin, OnlineProjection, PetrovGalerkin, PetrovGalerkinQr, Projection};
pub use system::{
    error_indicator, operator_times_basis, solve_reduced, symmetric_condition, tall_condition, Formulation,
    Indicator, ReducedSystem, SINGULAR_CONDITION,
};
