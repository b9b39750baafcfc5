//! Uniform quadrilateral grids on the unit square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which benchmark the grid is built for. Controls how elements are
/// labelled with subdomains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemFamily {
    /// `N_D` horizontal strips of (nearly) equal height.
    Diffusion,
    /// Two subdomains split at `y = 0.3`.
    Graetz,
}

/// Grid resolution and subdomain layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub nc: u32,
    pub elements_per_side: usize,
    pub problem: ProblemFamily,
    pub n_subdomains: usize,
}

impl MeshSpec {
    /// Refinement level `nc` gives `2^nc + 1` elements per side.
    pub fn new(nc: u32, problem: ProblemFamily, n_subdomains: usize) -> Result<Self> {
        if nc > 12 {
            return Err(Error::Config(format!("nc = {nc} is beyond any supported grid")));
        }
        let spec = Self {
            nc,
            elements_per_side: (1usize << nc) + 1,
            problem,
            n_subdomains: match problem {
                ProblemFamily::Diffusion => n_subdomains,
                ProblemFamily::Graetz => 2,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn diffusion(nc: u32, n_subdomains: usize) -> Result<Self> {
        Self::new(nc, ProblemFamily::Diffusion, n_subdomains)
    }

    pub fn graetz(nc: u32) -> Result<Self> {
        Self::new(nc, ProblemFamily::Graetz, 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements_per_side < 2 {
            return Err(Error::Config(format!(
                "elements_per_side = {} must be at least 2",
                self.elements_per_side
            )));
        }
        if self.n_subdomains == 0 || self.n_subdomains > self.elements_per_side {
            return Err(Error::Config(format!(
                "n_subdomains = {} must lie in 1..={} (one element row per strip at least)",
                self.n_subdomains, self.elements_per_side
            )));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        (self.elements_per_side + 1).pow(2)
    }

    pub fn element_count(&self) -> usize {
        self.elements_per_side.pow(2)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements_per_side as f64
    }

    /// Short identifier used to tie bases and snapshots to a discretization.
    pub fn fingerprint(&self) -> String {
        let family = match self.problem {
            ProblemFamily::Diffusion => "diffusion",
            ProblemFamily::Graetz => "graetz",
        };
        format!(
            "{family}/nc={}/eps={}/nd={}",
            self.nc, self.elements_per_side, self.n_subdomains
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];
}

/// A full edge carrying a constant Dirichlet value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletSegment {
    pub edge: Edge,
    pub value: f64,
}

/// Dirichlet edges with constant data; every other edge is homogeneous Neumann.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub dirichlet: Vec<DirichletSegment>,
}

impl BoundarySpec {
    /// Top edge clamped to zero.
    pub fn diffusion() -> Self {
        Self {
            dirichlet: vec![DirichletSegment {
                edge: Edge::Top,
                value: 0.0,
            }],
        }
    }

    /// Inlet (left) held at 1, outlet (right) at 2.
    pub fn graetz() -> Self {
        Self {
            dirichlet: vec![
                DirichletSegment {
                    edge: Edge::Left,
                    value: 1.0,
                },
                DirichletSegment {
                    edge: Edge::Right,
                    value: 2.0,
                },
            ],
        }
    }

    pub fn neumann_edges(&self) -> Vec<Edge> {
        Edge::ALL
            .into_iter()
            .filter(|e| !self.dirichlet.iter().any(|s| s.edge == *e))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dirichlet.is_empty() {
            return Err(Error::Config(
                "at least one Dirichlet edge is required for a well-posed state equation".into(),
            ));
        }
        for (i, a) in self.dirichlet.iter().enumerate() {
            if self.dirichlet[..i].iter().any(|b| b.edge == a.edge) {
                return Err(Error::Config(format!("edge {:?} listed twice as Dirichlet", a.edge)));
            }
            if !a.value.is_finite() {
                return Err(Error::Config(format!("non-finite Dirichlet value on {:?}", a.edge)));
            }
        }
        Ok(())
    }
}

/// Node coordinates, connectivity, subdomain labels and Dirichlet tags.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub spec: MeshSpec,
    pub boundary: BoundarySpec,
    pub coords: Vec<[f64; 2]>,
    /// Counter-clockwise node ids starting at the lower-left corner.
    pub elements: Vec<[usize; 4]>,
    /// Zero-based subdomain index per element.
    pub element_subdomain: Vec<usize>,
    /// Dirichlet value per node, `None` for free nodes.
    pub dirichlet: Vec<Option<f64>>,
}

impl Mesh {
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.spec.elements_per_side + 1) + i
    }

    pub fn element_id(&self, ex: usize, ey: usize) -> usize {
        ey * self.spec.elements_per_side + ex
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_dirichlet(&self) -> usize {
        self.dirichlet.iter().filter(|d| d.is_some()).count()
    }

    pub fn fingerprint(&self) -> String {
        self.spec.fingerprint()
    }
}

/// Subdomain of the element in row `ey`, decided by its centroid height.
///
/// Works in exact integer arithmetic: the centroid is `(2 ey + 1) / (2 eps)`.
pub fn element_row_subdomain(spec: &MeshSpec, ey: usize) -> usize {
    let eps = spec.elements_per_side;
    let twice_centroid_num = 2 * ey + 1;
    match spec.problem {
        ProblemFamily::Diffusion => {
            let nd = spec.n_subdomains;
            ((twice_centroid_num * nd) / (2 * eps)).min(nd - 1)
        }
        // y_c <= 3/10  <=>  10 (2 ey + 1) <= 6 eps
        ProblemFamily::Graetz => usize::from(10 * twice_centroid_num > 6 * eps),
    }
}

fn on_edge(edge: Edge, i: usize, j: usize, eps: usize) -> bool {
    match edge {
        Edge::Bottom => j == 0,
        Edge::Top => j == eps,
        Edge::Left => i == 0,
        Edge::Right => i == eps,
    }
}

pub fn build_mesh(spec: MeshSpec, boundary: BoundarySpec) -> Result<Mesh> {
    spec.validate()?;
    boundary.validate()?;
    let eps = spec.elements_per_side;
    let h = spec.h();
    let side = eps + 1;

    let mut coords = Vec::with_capacity(side * side);
    let mut dirichlet = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            coords.push([i as f64 * h, j as f64 * h]);
            // Segments are applied in listed order; a corner shared by two
            // Dirichlet edges takes the value of the first.
            let value = boundary
                .dirichlet
                .iter()
                .find(|s| on_edge(s.edge, i, j, eps))
                .map(|s| s.value);
            dirichlet.push(value);
        }
    }

    let mut elements = Vec::with_capacity(eps * eps);
    let mut element_subdomain = Vec::with_capacity(eps * eps);
    for ey in 0..eps {
        let label = element_row_subdomain(&spec, ey);
        for ex in 0..eps {
            let n0 = ey * side + ex;
            elements.push([n0, n0 + 1, n0 + side + 1, n0 + side]);
            element_subdomain.push(label);
        }
    }

    Ok(Mesh {
        spec,
        boundary,
        coords,
        elements,
        element_subdomain,
        dirichlet,
    })
}
