//! The two benchmark control problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundarySpec, MeshSpec, ProblemFamily};
use crate::params::{ParameterBox, ParameterVector};

/// Default Tikhonov weight of the control cost.
pub const DEFAULT_BETA: f64 = 1e-2;

/// Everything needed to build one full-order model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: ProblemFamily,
    pub nc: u32,
    /// Strip count for the diffusion problem; ignored (fixed to 2) for Graetz.
    pub n_subdomains: usize,
    pub beta: f64,
}

impl ProblemSpec {
    pub fn diffusion(nc: u32, n_subdomains: usize) -> Self {
        Self {
            family: ProblemFamily::Diffusion,
            nc,
            n_subdomains,
            beta: DEFAULT_BETA,
        }
    }

    pub fn graetz(nc: u32) -> Self {
        Self {
            family: ProblemFamily::Graetz,
            nc,
            n_subdomains: 2,
            beta: DEFAULT_BETA,
        }
    }

    pub fn mesh_spec(&self) -> Result<MeshSpec> {
        MeshSpec::new(self.nc, self.family, self.n_subdomains)
    }

    pub fn boundary(&self) -> BoundarySpec {
        match self.family {
            ProblemFamily::Diffusion => BoundarySpec::diffusion(),
            ProblemFamily::Graetz => BoundarySpec::graetz(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta = {} must be positive", self.beta)));
        }
        self.mesh_spec()?;
        Ok(())
    }

    /// Control-cost scaling in the (1,1) block: `2β` for the diffusion
    /// functional `β‖f‖²`, `β` for the Graetz functional `β/2 ‖f‖²`.
    pub fn cost_factor(&self) -> f64 {
        match self.family {
            ProblemFamily::Diffusion => 2.0 * self.beta,
            ProblemFamily::Graetz => self.beta,
        }
    }

    pub fn parameter_box(&self) -> ParameterBox {
        let built = match self.family {
            ProblemFamily::Diffusion => ParameterBox::cube(self.n_subdomains, 0.01, 1.0),
            ProblemFamily::Graetz => {
                ParameterBox::new(vec![1.0 / 20.0, 0.5, 1.5], vec![1.0 / 3.0, 1.5, 2.5])
            }
        };
        built.expect("benchmark parameter boxes are well formed")
    }

    /// Number of subdomains carrying their own stiffness piece.
    pub fn stiffness_pieces(&self) -> usize {
        match self.family {
            ProblemFamily::Diffusion => self.n_subdomains,
            ProblemFamily::Graetz => 2,
        }
    }

    /// Diffusion coefficient on each subdomain.
    pub fn sigma(&self, mu: &ParameterVector) -> Vec<f64> {
        match self.family {
            ProblemFamily::Diffusion => mu.values().to_vec(),
            ProblemFamily::Graetz => vec![mu.values()[0]; 2],
        }
    }

    /// Piecewise-constant target value on each subdomain.
    pub fn target_weights(&self, mu: &ParameterVector) -> Vec<f64> {
        match self.family {
            ProblemFamily::Diffusion => vec![1.0; self.n_subdomains],
            ProblemFamily::Graetz => vec![mu.values()[1], mu.values()[2]],
        }
    }

    pub fn has_convection(&self) -> bool {
        self.family == ProblemFamily::Graetz
    }

    pub fn label(&self) -> String {
        match self.family {
            ProblemFamily::Diffusion => "diffusion".into(),
            ProblemFamily::Graetz => "graetz".into(),
        }
    }
}
