use faer::Col;

use super::FullOrderModel;
use crate::error::{Error, Result};
use crate::fem::FemOperators;
use crate::params::ParameterVector;
use crate::problem::ProblemSpec;
use crate::sparse::{
    linear_combination, mul_col, mul_transpose_col, transpose, SpMat, TripletBuilder,
};

/// Control, state and adjoint blocks.
pub const KKT_BLOCKS: usize = 3;

/// Affine expansion `G(μ) = Σ_t θ_t(μ) G_t`, `b(μ) = Σ_s φ_s(μ) b_s`.
///
/// Term 0 of the matrix is the parameter-independent part (mass blocks and,
/// for Graetz, convection); the remaining terms carry one stiffness piece each.
#[derive(Debug, Clone)]
pub struct AffineKkt {
    pub n_free: usize,
    pub matrix_terms: Vec<SpMat>,
    pub rhs_terms: Vec<Col<f64>>,
    spec: ProblemSpec,
}

fn embed(n: usize, col: usize, v: &Col<f64>) -> Col<f64> {
    let mut out = Col::<f64>::zeros(KKT_BLOCKS * n);
    for i in 0..n {
        out[col * n + i] = v[i];
    }
    out
}

impl AffineKkt {
    pub fn build(spec: &ProblemSpec, ops: &FemOperators) -> Result<Self> {
        let n = ops.n_free();
        let cf = spec.cost_factor();

        let mut base = TripletBuilder::new(KKT_BLOCKS * n, KKT_BLOCKS * n);
        base.add_block(0, 0, cf, &ops.mass);
        base.add_block(0, 2 * n, -1.0, &ops.mass);
        base.add_block(n, n, 1.0, &ops.mass);
        base.add_block(2 * n, 0, -1.0, &ops.mass);
        if let Some(conv) = &ops.convection {
            base.add_block(n, 2 * n, 1.0, &transpose(conv));
            base.add_block(2 * n, n, 1.0, conv);
        }
        let mut matrix_terms = vec![base.build()?];

        let stiffness_terms: Vec<SpMat> = if spec.has_convection() {
            vec![ops.stiffness_ref.clone()]
        } else {
            ops.stiffness.clone()
        };
        for k in &stiffness_terms {
            let mut t = TripletBuilder::new(KKT_BLOCKS * n, KKT_BLOCKS * n);
            t.add_block(n, 2 * n, 1.0, &transpose(k));
            t.add_block(2 * n, n, 1.0, k);
            matrix_terms.push(t.build()?);
        }

        let g = &ops.dirichlet_values;
        let mut rhs_terms = Vec::new();
        if spec.has_convection() {
            for load in &ops.region_loads {
                rhs_terms.push(embed(n, 1, load));
            }
            let conv_lift = ops.convection_lift.as_ref().expect("Graetz operators carry convection");
            rhs_terms.push(embed(n, 2, &(-1.0 * mul_col(conv_lift, g))));
            let unit: Vec<_> = ops.stiffness_lift.iter().map(|k| (1.0, k)).collect();
            let lift = linear_combination(&unit)?;
            rhs_terms.push(embed(n, 2, &(-1.0 * mul_col(&lift, g))));
        } else {
            let mut target = Col::<f64>::zeros(n);
            for load in &ops.region_loads {
                target += load;
            }
            rhs_terms.push(embed(n, 1, &target));
            for lift in &ops.stiffness_lift {
                rhs_terms.push(embed(n, 2, &(-1.0 * mul_col(lift, g))));
            }
        }

        Ok(Self {
            n_free: n,
            matrix_terms,
            rhs_terms,
            spec: spec.clone(),
        })
    }

    pub fn n_total(&self) -> usize {
        KKT_BLOCKS * self.n_free
    }

    /// `θ_t(μ)` for each matrix term.
    pub fn matrix_coefficients(&self, mu: &ParameterVector) -> Vec<f64> {
        let v = mu.values();
        let mut theta = vec![1.0];
        if self.spec.has_convection() {
            theta.push(v[0]);
        } else {
            theta.extend_from_slice(v);
        }
        theta
    }

    /// `φ_s(μ)` for each right-hand-side term.
    pub fn rhs_coefficients(&self, mu: &ParameterVector) -> Vec<f64> {
        let v = mu.values();
        if self.spec.has_convection() {
            vec![v[1], v[2], 1.0, v[0]]
        } else {
            let mut phi = vec![1.0];
            phi.extend_from_slice(v);
            phi
        }
    }

    pub fn matrix(&self, mu: &ParameterVector) -> Result<SpMat> {
        let theta = self.matrix_coefficients(mu);
        let terms: Vec<_> = theta.iter().copied().zip(self.matrix_terms.iter()).collect();
        linear_combination(&terms)
    }

    pub fn rhs(&self, mu: &ParameterVector) -> Col<f64> {
        let mut b = Col::<f64>::zeros(self.n_total());
        for (phi, term) in self.rhs_coefficients(mu).iter().zip(&self.rhs_terms) {
            if *phi != 0.0 {
                b += *phi * term;
            }
        }
        b
    }
}

/// The assembled saddle-point system at one parameter.
///
/// Unknowns are ordered `(f, u, λ)`; in compact form `A = blockdiag(c_f M, M)`
/// acts on `x̄ = (f, u)` and `B(μ) = [-M, C(μ)]`.
pub struct FullKkt<'m> {
    pub model: &'m FullOrderModel,
    pub mu: ParameterVector,
    pub matrix: SpMat,
    pub rhs: Col<f64>,
    /// `C(μ)`, the state operator of the constraint.
    pub constraint: SpMat,
}

impl<'m> FullKkt<'m> {
    pub fn assemble(model: &'m FullOrderModel, mu: &ParameterVector) -> Result<Self> {
        model.domain.check(mu)?;
        let matrix = model.affine.matrix(mu)?;
        let rhs = model.affine.rhs(mu);
        let constraint = model.constraint_operator(mu)?;
        Ok(Self {
            model,
            mu: mu.clone(),
            matrix,
            rhs,
            constraint,
        })
    }

    pub fn n_free(&self) -> usize {
        self.model.n_free()
    }

    pub fn n_total(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cost_factor(&self) -> f64 {
        self.model.cost_factor()
    }

    /// `B(μ) x̄ = -M x_f + C(μ) x_u`.
    pub fn apply_b(&self, xbar: &Col<f64>) -> Result<Col<f64>> {
        let n = self.n_free();
        if xbar.nrows() != 2 * n {
            return Err(Error::Shape {
                context: "apply_b",
                expected: 2 * n,
                found: xbar.nrows(),
            });
        }
        let xf = Col::from_fn(n, |i| xbar[i]);
        let xu = Col::from_fn(n, |i| xbar[n + i]);
        Ok(mul_col(&self.constraint, &xu) - mul_col(&self.model.ops.mass, &xf))
    }

    /// `B(μ)ᵀ q = (-M q, C(μ)ᵀ q)`.
    pub fn apply_bt(&self, q: &Col<f64>) -> Result<Col<f64>> {
        let n = self.n_free();
        if q.nrows() != n {
            return Err(Error::Shape {
                context: "apply_bt",
                expected: n,
                found: q.nrows(),
            });
        }
        let top = mul_col(&self.model.ops.mass, q);
        let bottom = mul_transpose_col(&self.constraint, q);
        Ok(Col::from_fn(2 * n, |i| if i < n { -top[i] } else { bottom[i - n] }))
    }

    pub fn residual(&self, v: &Col<f64>) -> Col<f64> {
        mul_col(&self.matrix, v) - &self.rhs
    }
}
