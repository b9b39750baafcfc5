use faer::{Mat, Side};

use super::basis::{BlockId, ReducedBasis};
use crate::error::{Error, Result};
use crate::model::{FullKkt, NormMatrices};
use crate::sparse::mul_dense;

/// `B(μ) Y` for a `2n × p` primal matrix.
pub fn apply_b_dense(kkt: &FullKkt<'_>, y: &Mat<f64>) -> Mat<f64> {
    let n = kkt.n_free();
    let yf = Mat::from_fn(n, y.ncols(), |i, j| y[(i, j)]);
    let yu = Mat::from_fn(n, y.ncols(), |i, j| y[(n + i, j)]);
    mul_dense(&kkt.constraint, &yu) - mul_dense(&kkt.model.ops.mass, &yf)
}

/// `Zᵀ B(μ) Y`.
pub fn reduced_constraint(kkt: &FullKkt<'_>, y: &Mat<f64>, z: &Mat<f64>) -> Mat<f64> {
    z.transpose() * apply_b_dense(kkt, y)
}

/// Reduced constraint block `Q_λᵀ B(μ) Q_x` of a basis.
pub fn constraint_block(basis: &ReducedBasis, kkt: &FullKkt<'_>) -> Result<Mat<f64>> {
    Ok(reduced_constraint(kkt, &basis.primal_matrix()?, basis.block(BlockId::Adjoint)?))
}

fn lower_factor(m: &Mat<f64>, what: &str) -> Result<Mat<f64>> {
    let llt = m
        .llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{what} Gram matrix is not positive definite: {e:?}")))?;
    Ok(llt.L().to_owned())
}

/// `min_q max_w ⟨B w, q⟩ / (‖w‖_X ‖q‖_Q)` over `w ∈ span Y`, `q ∈ span Z`.
///
/// Zero when `Y` has fewer columns than `Z`, `+∞` when `Z` is empty.
pub fn reduced_inf_sup(kkt: &FullKkt<'_>, norms: &NormMatrices, y: &Mat<f64>, z: &Mat<f64>) -> Result<f64> {
    let (p, m) = (y.ncols(), z.ncols());
    if m == 0 {
        return Ok(f64::INFINITY);
    }
    if p < m {
        return Ok(0.0);
    }
    let b = reduced_constraint(kkt, y, z);
    let mut ay = Mat::<f64>::zeros(y.nrows(), p);
    for j in 0..p {
        let a = norms.apply_a(&y.col(j).to_owned());
        for i in 0..y.nrows() {
            ay[(i, j)] = a[i];
        }
    }
    let ared = y.transpose() * &ay;
    let kred = z.transpose() * mul_dense(&norms.q_norm, z);
    let sym = |m: &Mat<f64>| Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let la = lower_factor(&sym(&ared), "primal")?;
    let lk = lower_factor(&sym(&kred), "adjoint")?;
    let mut t = b;
    lk.solve_lower_triangular_in_place(t.as_mut());
    let mut tt = t.transpose().to_owned();
    la.solve_lower_triangular_in_place(tt.as_mut());
    let sv = tt
        .singular_values()
        .map_err(|e| Error::Numerical(format!("reduced inf-sup SVD failed: {e:?}")))?;
    Ok(sv[sv.len() - 1])
}

/// Reduced inf-sup constant of the basis' own primal and adjoint spaces.
pub fn basis_inf_sup(basis: &ReducedBasis, kkt: &FullKkt<'_>, norms: &NormMatrices) -> Result<f64> {
    reduced_inf_sup(kkt, norms, &basis.primal_matrix()?, basis.block(BlockId::Adjoint)?)
}
