use faer::{Col, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterVector;

/// Relative norm below which an orthogonalized vector is considered dependent.
pub const DROP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilizationKind {
    Naive,
    Supremizer,
    Aggregation,
}

impl StabilizationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Supremizer => "supremizer",
            Self::Aggregation => "aggregation",
        }
    }
}

/// Which rows of the `(f, u, λ)` vector a basis block spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockId {
    Control,
    State,
    Adjoint,
    /// Control and state jointly.
    Primal,
}

impl BlockId {
    /// `(row offset, row count)` inside the stacked vector.
    pub fn rows(self, n_free: usize) -> (usize, usize) {
        match self {
            Self::Control => (0, n_free),
            Self::State => (n_free, n_free),
            Self::Adjoint => (2 * n_free, n_free),
            Self::Primal => (0, 2 * n_free),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisLayout {
    /// `(Q_f, Q_u, Q_λ)`.
    ThreeBlock,
    /// `(Q_x̄, Q_λ)`.
    TwoBlock,
}

impl BasisLayout {
    pub fn blocks(self) -> &'static [BlockId] {
        match self {
            Self::ThreeBlock => &[BlockId::Control, BlockId::State, BlockId::Adjoint],
            Self::TwoBlock => &[BlockId::Primal, BlockId::Adjoint],
        }
    }
}

/// One vector rejected by Gram-Schmidt as linearly dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub block: BlockId,
    pub mu: Option<ParameterVector>,
    pub relative_norm: f64,
}

mod mat_serde {
    use faer::Mat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Dense {
        rows: usize,
        cols: usize,
        /// Column-major.
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &Mat<f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for j in 0..m.ncols() {
            data.extend(m.col(j).iter().copied());
        }
        Dense {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat<f64>, D::Error> {
        let dense = Dense::deserialize(d)?;
        if dense.data.len() != dense.rows * dense.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix data has {} entries, expected {}x{}",
                dense.data.len(),
                dense.rows,
                dense.cols
            )));
        }
        Ok(Mat::from_fn(dense.rows, dense.cols, |i, j| dense.data[j * dense.rows + i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisBlock {
    pub id: BlockId,
    #[serde(with = "mat_serde")]
    pub q: Mat<f64>,
}

impl BasisBlock {
    pub fn cols(&self) -> usize {
        self.q.ncols()
    }
}

/// Block-diagonal reduced basis `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub kind: StabilizationKind,
    pub layout: BasisLayout,
    pub n_free: usize,
    pub fingerprint: String,
    pub blocks: Vec<BasisBlock>,
    pub snapshot_params: Vec<ParameterVector>,
    pub drops: Vec<DropRecord>,
}

impl ReducedBasis {
    pub fn empty(kind: StabilizationKind, layout: BasisLayout, n_free: usize, fingerprint: String) -> Self {
        let blocks = layout
            .blocks()
            .iter()
            .map(|&id| BasisBlock {
                id,
                q: Mat::zeros(id.rows(n_free).1, 0),
            })
            .collect();
        Self {
            kind,
            layout,
            n_free,
            fingerprint,
            blocks,
            snapshot_params: Vec::new(),
            drops: Vec::new(),
        }
    }

    /// Snapshot count `N`.
    pub fn n_snapshots(&self) -> usize {
        self.snapshot_params.len()
    }

    pub fn total_columns(&self) -> usize {
        self.blocks.iter().map(BasisBlock::cols).sum()
    }

    pub fn n_total(&self) -> usize {
        3 * self.n_free
    }

    pub fn is_empty(&self) -> bool {
        self.total_columns() == 0
    }

    fn index_of(&self, id: BlockId) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| Error::Config(format!("basis layout {:?} has no {id:?} block", self.layout)))
    }

    pub fn block(&self, id: BlockId) -> Result<&Mat<f64>> {
        Ok(&self.blocks[self.index_of(id)?].q)
    }

    /// Column offset of each block in the reduced coordinate vector.
    pub fn column_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for b in &self.blocks {
            offsets.push(acc);
            acc += b.cols();
        }
        offsets
    }

    /// Orthonormalizes `vectors` against block `id` with two-pass modified
    /// Gram-Schmidt and appends the survivors; returns how many were added.
    pub fn orthonormal_extend(
        &mut self,
        id: BlockId,
        vectors: &[Col<f64>],
        mu: Option<&ParameterVector>,
    ) -> Result<usize> {
        let idx = self.index_of(id)?;
        let rows = id.rows(self.n_free).1;
        let mut added = 0;
        for v in vectors {
            if v.nrows() != rows {
                return Err(Error::Shape {
                    context: "orthonormal_extend",
                    expected: rows,
                    found: v.nrows(),
                });
            }
            let q = &mut self.blocks[idx].q;
            let original = v.norm_l2();
            let mut w = v.clone();
            for _ in 0..2 {
                for j in 0..q.ncols() {
                    let col = q.col(j);
                    let c = col.transpose() * &w;
                    w -= c * col;
                }
            }
            let remaining = w.norm_l2();
            if !(original > 0.0) || !(remaining >= DROP_TOLERANCE * original) {
                let relative_norm = if original > 0.0 { remaining / original } else { 0.0 };
                log::info!("dropping dependent vector in {id:?} block (relative norm {relative_norm:.3e})");
                self.drops.push(DropRecord {
                    block: id,
                    mu: mu.cloned(),
                    relative_norm,
                });
                continue;
            }
            w /= remaining;
            q.push_col(w.as_ref());
            added += 1;
        }
        Ok(added)
    }

    /// Replaces block `to` with a copy of block `from`.
    pub fn mirror(&mut self, from: BlockId, to: BlockId) -> Result<()> {
        let (i, j) = (self.index_of(from)?, self.index_of(to)?);
        if self.blocks[i].q.nrows() != self.blocks[j].q.nrows() {
            return Err(Error::Shape {
                context: "mirror",
                expected: self.blocks[j].q.nrows(),
                found: self.blocks[i].q.nrows(),
            });
        }
        self.blocks[j].q = self.blocks[i].q.clone();
        Ok(())
    }

    /// Dense `Q` as a `3n × columns` matrix.
    pub fn full_matrix(&self) -> Mat<f64> {
        let mut out = Mat::<f64>::zeros(self.n_total(), self.total_columns());
        for (b, off) in self.blocks.iter().zip(self.column_offsets()) {
            let (r0, _) = b.id.rows(self.n_free);
            for j in 0..b.cols() {
                for i in 0..b.q.nrows() {
                    out[(r0 + i, off + j)] = b.q[(i, j)];
                }
            }
        }
        out
    }

    /// `Q ṽ`.
    pub fn expand(&self, coeffs: &Col<f64>) -> Result<Col<f64>> {
        if coeffs.nrows() != self.total_columns() {
            return Err(Error::Shape {
                context: "expand",
                expected: self.total_columns(),
                found: coeffs.nrows(),
            });
        }
        let mut v = Col::<f64>::zeros(self.n_total());
        for (b, off) in self.blocks.iter().zip(self.column_offsets()) {
            let (r0, _) = b.id.rows(self.n_free);
            for j in 0..b.cols() {
                let c = coeffs[off + j];
                if c == 0.0 {
                    continue;
                }
                for i in 0..b.q.nrows() {
                    v[r0 + i] += c * b.q[(i, j)];
                }
            }
        }
        Ok(v)
    }

    /// Primal space `X_N` as a `2n × p` matrix.
    pub fn primal_matrix(&self) -> Result<Mat<f64>> {
        let n = self.n_free;
        match self.layout {
            BasisLayout::TwoBlock => Ok(self.block(BlockId::Primal)?.clone()),
            BasisLayout::ThreeBlock => {
                let qf = self.block(BlockId::Control)?;
                let qu = self.block(BlockId::State)?;
                let mut y = Mat::<f64>::zeros(2 * n, qf.ncols() + qu.ncols());
                for j in 0..qf.ncols() {
                    for i in 0..n {
                        y[(i, j)] = qf[(i, j)];
                    }
                }
                for j in 0..qu.ncols() {
                    for i in 0..n {
                        y[(n + i, qf.ncols() + j)] = qu[(i, j)];
                    }
                }
                Ok(y)
            }
        }
    }

    /// `max |QᵀQ − I|` over all blocks.
    pub fn orthonormality_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let g = b.q.transpose() * &b.q;
                let mut worst = 0.0f64;
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((g[(i, j)] - target).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }
}
