//! Full-order KKT model: assembly, direct solves and the inf-sup constant.

mod inf_sup;
mod kkt;
mod norms;
mod snapshot;

pub use inf_sup::{generalized_min_eigenvalue, inf_sup_full, schur_complement};
pub use kkt::{AffineKkt, FullKkt, KKT_BLOCKS};
pub use norms::NormMatrices;
pub use snapshot::{solve_full, solve_full_dense, DenseFactorization, Snapshot, DENSE_LIMIT};

use faer::Col;

use crate::error::Result;
use crate::fem::{assemble_operators, build_mesh, FemOperators, Mesh};
use crate::params::{ParameterBox, ParameterVector};
use crate::problem::ProblemSpec;
use crate::sparse::{linear_combination, mul_col, SpMat};

/// One benchmark instance at one mesh resolution, with everything that does
/// not depend on `μ` precomputed.
pub struct FullOrderModel {
    pub spec: ProblemSpec,
    pub mesh: Mesh,
    pub ops: FemOperators,
    pub domain: ParameterBox,
    pub affine: AffineKkt,
    pub norms: NormMatrices,
}

impl std::fmt::Debug for FullOrderModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FullOrderModel")
            .field("spec", &self.spec)
            .field("n_free", &self.n_free())
            .finish_non_exhaustive()
    }
}

impl FullOrderModel {
    pub fn build(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let mesh = build_mesh(spec.mesh_spec()?, spec.boundary())?;
        let ops = assemble_operators(&mesh)?;
        let domain = spec.parameter_box();
        let affine = AffineKkt::build(&spec, &ops)?;
        let norms = NormMatrices::new(&ops, spec.cost_factor())?;
        Ok(Self {
            spec,
            mesh,
            ops,
            domain,
            affine,
            norms,
        })
    }

    pub fn n_free(&self) -> usize {
        self.ops.n_free()
    }

    /// Unknowns of the full KKT system (control, state, adjoint).
    pub fn n_total(&self) -> usize {
        KKT_BLOCKS * self.n_free()
    }

    pub fn fingerprint(&self) -> String {
        self.ops.fingerprint.clone()
    }

    pub fn cost_factor(&self) -> f64 {
        self.spec.cost_factor()
    }

    /// `K(μ) = Σ_q σ_q(μ) K_q` on free nodes.
    pub fn stiffness(&self, mu: &ParameterVector) -> Result<SpMat> {
        self.domain.check(mu)?;
        self.ops.stiffness_combination(&self.spec.sigma(mu))
    }

    /// State operator `C(μ)`: stiffness plus convection where present.
    pub fn constraint_operator(&self, mu: &ParameterVector) -> Result<SpMat> {
        let k = self.stiffness(mu)?;
        match &self.ops.convection {
            Some(n) => linear_combination(&[(1.0, &k), (1.0, n)]),
            None => Ok(k),
        }
    }

    /// `b_μ = ∫ û(·, μ) φ_i` over free test functions.
    pub fn target_rhs(&self, mu: &ParameterVector) -> Result<Col<f64>> {
        self.domain.check(mu)?;
        self.ops.region_load(&self.spec.target_weights(mu))
    }

    /// Dirichlet lift `d_μ = -C_{ID}(μ) g`.
    pub fn lift_rhs(&self, mu: &ParameterVector) -> Result<Col<f64>> {
        self.domain.check(mu)?;
        let g = &self.ops.dirichlet_values;
        let mut d = Col::<f64>::zeros(self.n_free());
        for (s, lift) in self.spec.sigma(mu).iter().zip(&self.ops.stiffness_lift) {
            d -= *s * mul_col(lift, g);
        }
        if let Some(lift) = &self.ops.convection_lift {
            d -= mul_col(lift, g);
        }
        Ok(d)
    }

    pub fn assemble_kkt(&self, mu: &ParameterVector) -> Result<FullKkt<'_>> {
        FullKkt::assemble(self, mu)
    }

    pub fn solve(&self, mu: &ParameterVector) -> Result<Snapshot> {
        solve_full(&self.assemble_kkt(mu)?)
    }
}
