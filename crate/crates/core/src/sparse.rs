//! Thin helpers over faer's compressed-column matrices.

use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Mat};

use crate::error::{Error, Result};

pub type SpMat = SparseColMat<usize, f64>;

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push(Triplet::new(row, col, val));
    }

    /// Adds `scale * m` with its top-left corner at `(row0, col0)`.
    pub fn add_block(&mut self, row0: usize, col0: usize, scale: f64, m: &SpMat) {
        if scale == 0.0 {
            return;
        }
        for t in m.triplet_iter() {
            self.push(row0 + t.row, col0 + t.col, scale * *t.val);
        }
    }

    pub fn build(self) -> Result<SpMat> {
        SpMat::try_new_from_triplets(self.nrows, self.ncols, &self.entries)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))
    }
}

/// `Σ c_k A_k` over matrices of identical shape.
pub fn linear_combination(terms: &[(f64, &SpMat)]) -> Result<SpMat> {
    let (nrows, ncols) = match terms.first() {
        Some((_, m)) => (m.nrows(), m.ncols()),
        None => return Err(Error::Numerical("empty linear combination".into())),
    };
    let nnz: usize = terms.iter().map(|(_, m)| m.compute_nnz()).sum();
    let mut b = TripletBuilder::with_capacity(nrows, ncols, nnz);
    for (c, m) in terms {
        if m.nrows() != nrows || m.ncols() != ncols {
            return Err(Error::Shape {
                context: "linear_combination",
                expected: nrows * ncols,
                found: m.nrows() * m.ncols(),
            });
        }
        b.add_block(0, 0, *c, m);
    }
    b.build()
}

pub fn transpose(m: &SpMat) -> SpMat {
    let mut b = TripletBuilder::with_capacity(m.ncols(), m.nrows(), m.compute_nnz());
    for t in m.triplet_iter() {
        b.push(t.col, t.row, *t.val);
    }
    b.build().expect("transpose of a valid matrix")
}

pub fn mul_col(m: &SpMat, x: &Col<f64>) -> Col<f64> {
    let mut y = Col::<f64>::zeros(m.nrows());
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (&i, &v) in m.row_idx_of_col_raw(j).iter().zip(m.val_of_col(j)) {
            y[i] += v * xj;
        }
    }
    y
}

pub fn mul_dense(m: &SpMat, x: &Mat<f64>) -> Mat<f64> {
    m * x
}

pub fn max_abs_entry(m: &SpMat) -> f64 {
    m.val().iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn col_from_slice(v: &[f64]) -> Col<f64> {
    Col::from_fn(v.len(), |i| v[i])
}

pub fn col_to_vec(c: &Col<f64>) -> Vec<f64> {
    c.iter().copied().collect()
}

pub fn norm2(c: &Col<f64>) -> f64 {
    c.norm_l2()
}

/// `mᵀ x` without forming the transpose.
pub fn mul_transpose_col(m: &SpMat, x: &Col<f64>) -> Col<f64> {
    Col::from_fn(m.ncols(), |j| {
        m.row_idx_of_col_raw(j)
            .iter()
            .zip(m.val_of_col(j))
            .map(|(&i, &v)| v * x[i])
            .sum()
    })
}

/// `mᵀ X` for a dense `X`.
pub fn mul_transpose_dense(m: &SpMat, x: &Mat<f64>) -> Mat<f64> {
    let mut y = Mat::<f64>::zeros(m.ncols(), x.ncols());
    for k in 0..x.ncols() {
        for j in 0..m.ncols() {
            let mut acc = 0.0;
            for (&i, &v) in m.row_idx_of_col_raw(j).iter().zip(m.val_of_col(j)) {
                acc += v * x[(i, k)];
            }
            y[(j, k)] = acc;
        }
    }
    y
}
