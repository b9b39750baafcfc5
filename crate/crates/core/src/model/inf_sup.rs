use faer::{Mat, Side};

use super::kkt::FullKkt;
use super::norms::NormMatrices;
use crate::error::{Error, Result};
use crate::sparse::mul_dense;

/// Smallest `λ` of `S q = λ K q` for symmetric `S` and SPD `K`.
pub fn generalized_min_eigenvalue(s: &Mat<f64>, k: &Mat<f64>) -> Result<f64> {
    if s.nrows() != k.nrows() || s.ncols() != k.ncols() || s.nrows() != s.ncols() {
        return Err(Error::Shape {
            context: "generalized_min_eigenvalue",
            expected: k.nrows(),
            found: s.nrows(),
        });
    }
    if s.nrows() == 0 {
        return Ok(0.0);
    }
    let llt = k
        .llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("norm matrix is not positive definite: {e:?}")))?;
    let l = llt.L();
    let mut w = s.clone();
    l.solve_lower_triangular_in_place(w.as_mut());
    let mut wt = w.transpose().to_owned();
    l.solve_lower_triangular_in_place(wt.as_mut());
    let n = wt.nrows();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (wt[(i, j)] + wt[(j, i)]));
    let ev = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolve failed: {e:?}")))?;
    Ok(ev[0])
}

/// Dense Schur complement `B(μ) A⁻¹ B(μ)ᵀ = M/c_f + C M⁻¹ Cᵀ`.
pub fn schur_complement(kkt: &FullKkt<'_>, norms: &NormMatrices) -> Mat<f64> {
    let ct = kkt.constraint.to_dense().transpose().to_owned();
    let minv_ct = norms.mass_solve(&ct);
    let c_minv_ct = mul_dense(&kkt.constraint, &minv_ct);
    let m = norms.mass.to_dense();
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| m[(i, j)] / norms.cost_factor + c_minv_ct[(i, j)])
}

/// `β₀(μ) = sqrt(λ_min)` of `B A⁻¹ Bᵀ q = λ Q q` with `Q` the adjoint norm.
pub fn inf_sup_full(kkt: &FullKkt<'_>, norms: &NormMatrices) -> Result<f64> {
    let s = schur_complement(kkt, norms);
    let lambda = generalized_min_eigenvalue(&s, &norms.q_norm.to_dense())?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Numerical(format!(
            "inf-sup eigenvalue {lambda} at mu = {:?}",
            kkt.mu.0
        )));
    }
    Ok(lambda.sqrt())
}
