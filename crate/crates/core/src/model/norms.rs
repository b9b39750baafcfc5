use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Col, Mat, Side};

use crate::error::{Error, Result};
use crate::fem::FemOperators;
use crate::sparse::SpMat;

/// `A = blockdiag(c_f M, M)` on control × state and `K_ref` on the adjoint.
#[derive(Debug, Clone)]
pub struct NormMatrices {
    pub cost_factor: f64,
    pub mass: SpMat,
    pub q_norm: SpMat,
    mass_llt: Llt<usize, f64>,
}

impl NormMatrices {
    pub fn new(ops: &FemOperators, cost_factor: f64) -> Result<Self> {
        Self::with_q_norm(ops.mass.clone(), ops.stiffness_ref.clone(), cost_factor)
    }

    pub fn with_q_norm(mass: SpMat, q_norm: SpMat, cost_factor: f64) -> Result<Self> {
        let mass_llt = mass
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Numerical(format!("mass matrix Cholesky failed: {e:?}")))?;
        Ok(Self {
            cost_factor,
            mass,
            q_norm,
            mass_llt,
        })
    }

    pub fn n_free(&self) -> usize {
        self.mass.nrows()
    }

    /// `M⁻¹ X` column by column.
    pub fn mass_solve(&self, x: &Mat<f64>) -> Mat<f64> {
        self.mass_llt.solve(x)
    }

    pub fn mass_solve_col(&self, x: &Col<f64>) -> Col<f64> {
        self.mass_llt.solve(x)
    }

    /// `A⁻¹ y` for `y = (y_f, y_u)` of length `2n`.
    pub fn apply_a_inverse(&self, y: &Col<f64>) -> Result<Col<f64>> {
        let n = self.n_free();
        if y.nrows() != 2 * n {
            return Err(Error::Shape {
                context: "apply_a_inverse",
                expected: 2 * n,
                found: y.nrows(),
            });
        }
        let mut rhs = Mat::<f64>::zeros(n, 2);
        for i in 0..n {
            rhs[(i, 0)] = y[i];
            rhs[(i, 1)] = y[n + i];
        }
        let x = self.mass_solve(&rhs);
        Ok(Col::from_fn(2 * n, |i| {
            if i < n {
                x[(i, 0)] / self.cost_factor
            } else {
                x[(i - n, 1)]
            }
        }))
    }

    /// `A x` for `x = (x_f, x_u)`.
    pub fn apply_a(&self, x: &Col<f64>) -> Col<f64> {
        let n = self.n_free();
        let xf = Col::from_fn(n, |i| x[i]);
        let xu = Col::from_fn(n, |i| x[n + i]);
        let mf = crate::sparse::mul_col(&self.mass, &xf);
        let mu = crate::sparse::mul_col(&self.mass, &xu);
        Col::from_fn(2 * n, |i| if i < n { self.cost_factor * mf[i] } else { mu[i - n] })
    }
}
