use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::{Col, Mat, Side};
use serde::{Deserialize, Serialize};

use super::basis::ReducedBasis;
use crate::error::{Error, Result};
use crate::model::FullKkt;
use crate::params::ParameterVector;
use crate::sparse::mul_dense;

/// Reduced matrices with condition number at or above this are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1.0 / f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    Galerkin,
    /// Normal equations `(GQ)ᵀ(GQ) ṽ = (GQ)ᵀ b`.
    PetrovGalerkin,
    /// The same least-squares problem solved by QR of `GQ`.
    PetrovGalerkinQr,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Galerkin => "galerkin",
            Self::PetrovGalerkin => "pg",
            Self::PetrovGalerkinQr => "pg-qr",
        }
    }

    /// Whether the stored matrix is the tall operator `GQ` rather than a square system.
    pub fn is_least_squares(self) -> bool {
        self == Self::PetrovGalerkinQr
    }
}

/// Dense reduced system at one parameter.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub mu: ParameterVector,
    pub formulation: Formulation,
    pub matrix: Mat<f64>,
    pub rhs: Col<f64>,
    /// 2-norm condition number of `matrix`.
    pub cond: f64,
}

impl ReducedSystem {
    pub fn new(mu: ParameterVector, formulation: Formulation, matrix: Mat<f64>, rhs: Col<f64>) -> Result<Self> {
        let cond = if formulation.is_least_squares() {
            tall_condition(&matrix)?
        } else {
            symmetric_condition(&matrix)?
        };
        Ok(Self {
            mu,
            formulation,
            matrix,
            rhs,
            cond,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// `max|λ| / min|λ|` of the symmetric part; equals the 2-norm condition
/// number for symmetric matrices.
pub fn symmetric_condition(m: &Mat<f64>) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(f64::NAN);
    }
    if m.iter_any_non_finite() {
        return Ok(f64::INFINITY);
    }
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let ev = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("reduced eigensolve failed: {e:?}")))?;
    let (lo, hi) = ev
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

/// `σ_max / σ_min` of a general (possibly rectangular) matrix.
pub fn tall_condition(m: &Mat<f64>) -> Result<f64> {
    if m.ncols() == 0 {
        return Ok(f64::NAN);
    }
    if m.iter_any_non_finite() {
        return Ok(f64::INFINITY);
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::Numerical(format!("reduced SVD failed: {e:?}")))?;
    let hi = sv[0];
    let lo = sv[sv.len() - 1];
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

trait NonFinite {
    fn iter_any_non_finite(&self) -> bool;
}

impl NonFinite for Mat<f64> {
    fn iter_any_non_finite(&self) -> bool {
        (0..self.ncols()).any(|j| self.col(j).iter().any(|v| !v.is_finite()))
    }
}

/// Dense direct solve; an ill-conditioned or non-finite result is a
/// reduction failure.
pub fn solve_reduced(sys: &ReducedSystem) -> Result<Col<f64>> {
    let c = sys.dim();
    if c == 0 {
        return Ok(Col::zeros(0));
    }
    let fail = |detail: String| Error::Singular {
        mu: sys.mu.0.clone(),
        detail,
    };
    if !(sys.cond < SINGULAR_CONDITION) {
        return Err(fail(format!("reduced {} matrix has condition number {:.3e}", sys.formulation.name(), sys.cond)));
    }
    let x = if sys.formulation.is_least_squares() {
        let full = sys.matrix.qr().solve_lstsq(&sys.rhs);
        Col::from_fn(c, |i| full[i])
    } else {
        sys.matrix.partial_piv_lu().solve(&sys.rhs)
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(fail("reduced solve produced non-finite values".into()));
    }
    Ok(x)
}

/// Relative full-order residual `‖G v − b‖ / ‖b‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicator {
    pub eta: f64,
    /// Set when `‖b‖ = 0` and `eta` is the absolute residual.
    pub absolute: bool,
}

impl Indicator {
    pub fn from_norms(residual: f64, rhs: f64) -> Self {
        if rhs > 0.0 {
            Self {
                eta: residual / rhs,
                absolute: false,
            }
        } else {
            Self {
                eta: residual,
                absolute: true,
            }
        }
    }
}

pub fn error_indicator(basis: &ReducedBasis, kkt: &FullKkt<'_>, coeffs: &Col<f64>) -> Result<Indicator> {
    let v = basis.expand(coeffs)?;
    Ok(Indicator::from_norms(kkt.residual(&v).norm_l2(), kkt.rhs.norm_l2()))
}

/// `W = G(μ) Q` for the assembled operator.
pub fn operator_times_basis(basis: &ReducedBasis, kkt: &FullKkt<'_>) -> Mat<f64> {
    mul_dense(&kkt.matrix, &basis.full_matrix())
}
