use faer::linalg::solvers::Solve;
use faer::{Col, Mat, Side};
use serde::{Deserialize, Serialize};

use super::kkt::FullKkt;
use crate::error::{Error, Result};
use crate::params::ParameterVector;
use crate::sparse::{col_from_slice, col_to_vec, mul_col};

/// Largest system the dense fallback accepts.
pub const DENSE_LIMIT: usize = 3000;

/// Full-order solution triple at one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub mu: ParameterVector,
    pub f: Vec<f64>,
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `‖G v − rhs‖ / ‖rhs‖`.
    pub residual_norm: f64,
    /// `‖C u − M f − d‖ / ‖rhs‖`.
    pub constraint_residual: f64,
}

impl Snapshot {
    pub fn n_free(&self) -> usize {
        self.f.len()
    }

    pub fn control(&self) -> Col<f64> {
        col_from_slice(&self.f)
    }

    pub fn state(&self) -> Col<f64> {
        col_from_slice(&self.u)
    }

    pub fn adjoint(&self) -> Col<f64> {
        col_from_slice(&self.lambda)
    }

    /// `x̄ = (f, u)`.
    pub fn xbar(&self) -> Col<f64> {
        let n = self.n_free();
        Col::from_fn(2 * n, |i| if i < n { self.f[i] } else { self.u[i - n] })
    }

    /// `(f, u, λ)` stacked.
    pub fn stacked(&self) -> Col<f64> {
        let n = self.n_free();
        Col::from_fn(3 * n, |i| match i / n {
            0 => self.f[i],
            1 => self.u[i - n],
            _ => self.lambda[i - 2 * n],
        })
    }

    fn from_solution(kkt: &FullKkt<'_>, v: &Col<f64>) -> Result<Self> {
        let n = kkt.n_free();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Singular {
                mu: kkt.mu.0.clone(),
                detail: "full solve produced non-finite values".into(),
            });
        }
        let rhs_norm = kkt.rhs.norm_l2();
        let scale = if rhs_norm > 0.0 { rhs_norm } else { 1.0 };
        let residual_norm = kkt.residual(v).norm_l2() / scale;
        let f = Col::from_fn(n, |i| v[i]);
        let u = Col::from_fn(n, |i| v[n + i]);
        let d = Col::from_fn(n, |i| kkt.rhs[2 * n + i]);
        let constraint = mul_col(&kkt.constraint, &u) - mul_col(&kkt.model.ops.mass, &f) - d;
        Ok(Self {
            mu: kkt.mu.clone(),
            f: col_to_vec(&f),
            u: col_to_vec(&u),
            lambda: (0..n).map(|i| v[2 * n + i]).collect(),
            residual_norm,
            constraint_residual: constraint.norm_l2() / scale,
        })
    }
}

/// Sparse LU solve with one step of iterative refinement.
pub fn solve_full(kkt: &FullKkt<'_>) -> Result<Snapshot> {
    let singular = |detail: String| Error::Singular {
        mu: kkt.mu.0.clone(),
        detail,
    };
    if kkt.rhs.norm_l2() == 0.0 {
        return Snapshot::from_solution(kkt, &Col::zeros(kkt.n_total()));
    }
    let lu = kkt
        .matrix
        .sp_lu()
        .map_err(|e| singular(format!("sparse LU failed: {e:?}")))?;
    let mut v = lu.solve(&kkt.rhs);
    let r = kkt.residual(&v);
    v -= lu.solve(&r);
    Snapshot::from_solution(kkt, &v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseFactorization {
    /// Partial-pivoting LU, ignores symmetry.
    Lu,
    /// Symmetric indefinite `L B Lᵀ` with Bunch-Kaufman pivoting.
    Lblt,
}

/// Dense direct solve for small systems.
pub fn solve_full_dense(kkt: &FullKkt<'_>, method: DenseFactorization) -> Result<Snapshot> {
    let n = kkt.n_total();
    if n > DENSE_LIMIT {
        return Err(Error::Numerical(format!(
            "dense solve requested for {n} unknowns, limit is {DENSE_LIMIT}"
        )));
    }
    let g: Mat<f64> = kkt.matrix.to_dense();
    let v = match method {
        DenseFactorization::Lu => g.partial_piv_lu().solve(&kkt.rhs),
        DenseFactorization::Lblt => g.lblt(Side::Lower).solve(&kkt.rhs),
    };
    Snapshot::from_solution(kkt, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FullOrderModel;
    use crate::problem::ProblemSpec;
    use rand::SeedableRng;

    /// Gaussian elimination with partial pivoting on plain vectors.
    fn gauss_oracle(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let l = a[i][k] / a[k][k];
                if l != 0.0 {
                    for j in k..n {
                        a[i][j] -= l * a[k][j];
                    }
                    b[i] -= l * b[k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    #[test]
    fn matches_independent_dense_oracle() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(2, 3)).unwrap();
        let kkt = model.assemble_kkt(&ParameterVector(vec![1.0; 3])).unwrap();
        let g = kkt.matrix.to_dense();
        let n = kkt.n_total();
        let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g[(i, j)]).collect()).collect();
        let b: Vec<f64> = kkt.rhs.iter().copied().collect();
        let x = gauss_oracle(a, b);
        let snap = solve_full(&kkt).unwrap();
        let v = snap.stacked();
        let num: f64 = (0..n).map(|i| (v[i] - x[i]).powi(2)).sum::<f64>().sqrt();
        let den: f64 = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        assert!(num <= 1e-12 * den, "{num} vs {den}");
    }

    #[test]
    fn certificates_hold_for_random_parameters() {
        for spec in [ProblemSpec::diffusion(3, 3), ProblemSpec::graetz(3)] {
            let model = FullOrderModel::build(spec).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            for _ in 0..5 {
                let snap = model.solve(&model.domain.sample(&mut rng)).unwrap();
                assert!(snap.residual_norm <= 1e-10);
                assert!(snap.constraint_residual <= 1e-10);
            }
        }
    }

    #[test]
    fn symmetric_and_unsymmetric_dense_solves_agree() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(2, 2)).unwrap();
        let kkt = model.assemble_kkt(&ParameterVector(vec![0.3, 0.7])).unwrap();
        let lu = solve_full_dense(&kkt, DenseFactorization::Lu).unwrap().stacked();
        let lblt = solve_full_dense(&kkt, DenseFactorization::Lblt).unwrap().stacked();
        assert!((&lu - &lblt).norm_l2() <= 1e-12 * lu.norm_l2());
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(2, 2)).unwrap();
        let mut kkt = model.assemble_kkt(&ParameterVector(vec![0.5, 0.5])).unwrap();
        kkt.rhs = Col::zeros(kkt.n_total());
        let snap = solve_full(&kkt).unwrap();
        assert_eq!(snap.stacked().norm_max(), 0.0);
        let dense = solve_full_dense(&kkt, DenseFactorization::Lu).unwrap();
        assert_eq!(dense.stacked().norm_max(), 0.0);
    }

    #[test]
    fn diffusion_constraint_has_no_lift() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(3, 3)).unwrap();
        let kkt = model.assemble_kkt(&ParameterVector(vec![0.2, 0.4, 0.9])).unwrap();
        let snap = solve_full(&kkt).unwrap();
        let r = mul_col(&kkt.constraint, &snap.state()) - mul_col(&model.ops.mass, &snap.control());
        assert!(r.norm_l2() <= 1e-10 * kkt.rhs.norm_l2());
    }
}
