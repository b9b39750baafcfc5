//! Basis-update rules: naive, approximate supremizer and aggregation.

use std::fmt;

use faer::{Col, Mat};

use crate::error::Result;
use crate::model::{FullOrderModel, Snapshot};
use crate::params::ParameterVector;
use crate::reduced::{BasisLayout, BlockId, ReducedBasis, StabilizationKind};

/// Vectors to orthonormalize into each block, in insertion order.
#[derive(Debug, Clone)]
pub struct StabilizationUpdate {
    pub kind: StabilizationKind,
    pub mu: ParameterVector,
    pub added: Vec<(BlockId, Vec<Col<f64>>)>,
    /// `(from, to)`: after extension, block `to` becomes a copy of `from`.
    pub mirrors: Vec<(BlockId, BlockId)>,
}

impl StabilizationUpdate {
    pub fn vector_count(&self) -> usize {
        self.added.iter().map(|(_, v)| v.len()).sum()
    }
}

pub trait Stabilization: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn kind(&self) -> StabilizationKind;

    fn layout(&self) -> BasisLayout;

    fn update(&self, model: &FullOrderModel, snapshot: &Snapshot) -> Result<StabilizationUpdate>;

    fn empty_basis(&self, model: &FullOrderModel) -> ReducedBasis {
        ReducedBasis::empty(self.kind(), self.layout(), model.n_free(), model.fingerprint())
    }
}

/// Applies `update` and records its parameter; returns the number of columns added.
pub fn apply_update(basis: &mut ReducedBasis, update: &StabilizationUpdate) -> Result<usize> {
    let before = basis.total_columns();
    let drops_before = basis.drops.len();
    for (block, vectors) in &update.added {
        basis.orthonormal_extend(*block, vectors, Some(&update.mu))?;
    }
    for (from, to) in &update.mirrors {
        basis.mirror(*from, *to)?;
    }
    basis.snapshot_params.push(update.mu.clone());
    let dropped = basis.drops.len() - drops_before;
    if dropped > 0 {
        log::info!(
            "{} update at {:?} dropped {dropped} dependent vectors",
            update.kind.name(),
            update.mu.0
        );
    }
    Ok(basis.total_columns() - before)
}

/// `r = A⁻¹ B(μ)ᵀ λ`.
pub fn supremizer(model: &FullOrderModel, mu: &ParameterVector, lambda: &Col<f64>) -> Result<Col<f64>> {
    let kkt = model.assemble_kkt(mu)?;
    model.norms.apply_a_inverse(&kkt.apply_bt(lambda)?)
}

/// Adds `x̄` and `λ` to their own blocks only; not inf-sup stable.
#[derive(Debug, Clone, Copy, Default)]
pub struct Naive;

impl Stabilization for Naive {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn kind(&self) -> StabilizationKind {
        StabilizationKind::Naive
    }

    fn layout(&self) -> BasisLayout {
        BasisLayout::TwoBlock
    }

    fn update(&self, _model: &FullOrderModel, snapshot: &Snapshot) -> Result<StabilizationUpdate> {
        Ok(StabilizationUpdate {
            kind: self.kind(),
            mu: snapshot.mu.clone(),
            added: vec![(BlockId::Primal, vec![snapshot.xbar()]), (BlockId::Adjoint, vec![snapshot.adjoint()])],
            mirrors: Vec::new(),
        })
    }
}

/// Enriches `Q_x̄` with the snapshot's own supremizer `A⁻¹ B(μ)ᵀ λ_μ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Supremizer;

impl Stabilization for Supremizer {
    fn name(&self) -> &'static str {
        "supremizer"
    }

    fn kind(&self) -> StabilizationKind {
        StabilizationKind::Supremizer
    }

    fn layout(&self) -> BasisLayout {
        BasisLayout::TwoBlock
    }

    fn update(&self, model: &FullOrderModel, snapshot: &Snapshot) -> Result<StabilizationUpdate> {
        let r = supremizer(model, &snapshot.mu, &snapshot.adjoint())?;
        Ok(StabilizationUpdate {
            kind: self.kind(),
            mu: snapshot.mu.clone(),
            added: vec![
                (BlockId::Primal, vec![snapshot.xbar(), r]),
                (BlockId::Adjoint, vec![snapshot.adjoint()]),
            ],
            mirrors: Vec::new(),
        })
    }
}

/// Puts both `u_μ` and `λ_μ` into the state and adjoint spaces, which stay identical.
#[derive(Debug, Clone, Copy, Default)]
pub struct Aggregation;

impl Stabilization for Aggregation {
    fn name(&self) -> &'static str {
        "aggregation"
    }

    fn kind(&self) -> StabilizationKind {
        StabilizationKind::Aggregation
    }

    fn layout(&self) -> BasisLayout {
        BasisLayout::ThreeBlock
    }

    fn update(&self, _model: &FullOrderModel, snapshot: &Snapshot) -> Result<StabilizationUpdate> {
        Ok(StabilizationUpdate {
            kind: self.kind(),
            mu: snapshot.mu.clone(),
            added: vec![
                (BlockId::Control, vec![snapshot.control()]),
                (BlockId::State, vec![snapshot.state(), snapshot.adjoint()]),
            ],
            mirrors: vec![(BlockId::State, BlockId::Adjoint)],
        })
    }
}

/// Primal space of `basis` enriched with `A⁻¹ B(μ)ᵀ q` for every adjoint
/// basis column `q`, orthonormalized.
///
/// Depends on the online parameter, so it is a diagnostic rather than a
/// practical reduction.
pub fn exact_supremizer_basis(
    basis: &ReducedBasis,
    model: &FullOrderModel,
    mu_online: &ParameterVector,
) -> Result<Mat<f64>> {
    let kkt = model.assemble_kkt(mu_online)?;
    let q_lambda = basis.block(BlockId::Adjoint)?;
    let mut enriched = ReducedBasis::empty(basis.kind, BasisLayout::TwoBlock, basis.n_free, basis.fingerprint.clone());
    let primal = basis.primal_matrix()?;
    let existing: Vec<Col<f64>> = (0..primal.ncols()).map(|j| primal.col(j).to_owned()).collect();
    enriched.orthonormal_extend(BlockId::Primal, &existing, None)?;
    let mut sup = Vec::with_capacity(q_lambda.ncols());
    for j in 0..q_lambda.ncols() {
        let q = q_lambda.col(j).to_owned();
        sup.push(model.norms.apply_a_inverse(&kkt.apply_bt(&q)?)?);
    }
    enriched.orthonormal_extend(BlockId::Primal, &sup, Some(mu_online))?;
    Ok(enriched.block(BlockId::Primal)?.clone())
}
