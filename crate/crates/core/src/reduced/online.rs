use faer::Col;

use super::basis::ReducedBasis;
use super::projection::{OnlineProjection, Projection};
use super::system::{solve_reduced, Formulation, Indicator, ReducedSystem};
use crate::error::{Error, Result};
use crate::model::FullOrderModel;
use crate::params::ParameterVector;
use crate::sparse::{mul_col, mul_dense};

/// Error indicator and conditioning of the reduced model at one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `+∞` when the reduced solve failed.
    pub eta: f64,
    pub cond: f64,
    pub failed: bool,
    pub absolute: bool,
}

/// A basis bound to a model with all parameter-independent projections done.
///
/// The reduced matrix is assembled from `θ(μ)`, `φ(μ)` and precomputed pieces;
/// the residual is still evaluated at full order.
pub struct OnlineReduction<'a> {
    model: &'a FullOrderModel,
    basis: &'a ReducedBasis,
    formulation: Formulation,
    projector: Box<dyn OnlineProjection>,
}

pub fn check_compatible(model: &FullOrderModel, basis: &ReducedBasis) -> Result<()> {
    if basis.fingerprint != model.fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: model.fingerprint(),
            found: basis.fingerprint.clone(),
        });
    }
    if basis.n_free != model.n_free() {
        return Err(Error::Shape {
            context: "basis rows",
            expected: model.n_free(),
            found: basis.n_free,
        });
    }
    Ok(())
}

impl<'a> OnlineReduction<'a> {
    pub fn new(model: &'a FullOrderModel, basis: &'a ReducedBasis, projection: &dyn Projection) -> Result<Self> {
        check_compatible(model, basis)?;
        let q = basis.full_matrix();
        let w_terms: Vec<_> = model.affine.matrix_terms.iter().map(|g| mul_dense(g, &q)).collect();
        let projector = projection.precompute(&q, &w_terms, &model.affine.rhs_terms);
        Ok(Self {
            model,
            basis,
            formulation: projection.formulation(),
            projector,
        })
    }

    pub fn basis(&self) -> &ReducedBasis {
        self.basis
    }

    pub fn system(&self, mu: &ParameterVector) -> Result<ReducedSystem> {
        self.model.domain.check(mu)?;
        let theta = self.model.affine.matrix_coefficients(mu);
        let phi = self.model.affine.rhs_coefficients(mu);
        let (matrix, rhs) = self.projector.assemble(&theta, &phi);
        ReducedSystem::new(mu.clone(), self.formulation, matrix, rhs)
    }

    /// `G(μ) v − b(μ)` from the affine terms, together with `‖b(μ)‖`.
    pub fn residual(&self, mu: &ParameterVector, v: &Col<f64>) -> (Col<f64>, f64) {
        let affine = &self.model.affine;
        let b = affine.rhs(mu);
        let mut r = -1.0 * &b;
        for (theta, g) in affine.matrix_coefficients(mu).iter().zip(&affine.matrix_terms) {
            if *theta != 0.0 {
                r += *theta * mul_col(g, v);
            }
        }
        (r, b.norm_l2())
    }

    /// Reduced solve plus full-order indicator; reduction failures are
    /// reported through `failed` rather than as errors.
    pub fn evaluate(&self, mu: &ParameterVector) -> Result<Evaluation> {
        let sys = self.system(mu)?;
        let cond = sys.cond;
        let coeffs = match solve_reduced(&sys) {
            Ok(c) => c,
            Err(Error::Singular { detail, .. }) => {
                log::debug!("reduction failure at {:?}: {detail}", mu.0);
                return Ok(Evaluation {
                    eta: f64::INFINITY,
                    cond,
                    failed: true,
                    absolute: false,
                });
            }
            Err(e) => return Err(e),
        };
        let v = self.basis.expand(&coeffs)?;
        let (r, bnorm) = self.residual(mu, &v);
        let ind = Indicator::from_norms(r.norm_l2(), bnorm);
        Ok(Evaluation {
            eta: ind.eta,
            cond,
            failed: false,
            absolute: ind.absolute,
        })
    }

    /// Reduced coefficients, or the reduction failure.
    pub fn solve(&self, mu: &ParameterVector) -> Result<Col<f64>> {
        solve_reduced(&self.system(mu)?)
    }
}
