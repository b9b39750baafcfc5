//! Parameter-independent Q1 matrices for both benchmarks.

use faer::Col;

use super::mesh::{Mesh, ProblemFamily};
use crate::error::{Error, Result};
use crate::sparse::{linear_combination, SpMat, TripletBuilder};

const GAUSS2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Reference-node signs, counter-clockwise from (-1, -1).
const XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn shape(xi: f64, eta: f64) -> [f64; 4] {
    std::array::from_fn(|a| 0.25 * (1.0 + XI[a] * xi) * (1.0 + ETA[a] * eta))
}

fn shape_grad_ref(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    std::array::from_fn(|a| {
        [
            0.25 * XI[a] * (1.0 + ETA[a] * eta),
            0.25 * ETA[a] * (1.0 + XI[a] * xi),
        ]
    })
}

/// Convection field of the Graetz benchmark, `w = (y (1 - y), 0)`.
pub fn graetz_velocity(_x: f64, y: f64) -> [f64; 2] {
    [y * (1.0 - y), 0.0]
}

type ElementMatrix = [[f64; 4]; 4];

fn element_mass(h: f64) -> ElementMatrix {
    let det = 0.25 * h * h;
    let mut m = [[0.0; 4]; 4];
    for &(xi, wx) in &GAUSS2 {
        for &(eta, wy) in &GAUSS2 {
            let n = shape(xi, eta);
            for a in 0..4 {
                for b in 0..4 {
                    m[a][b] += wx * wy * det * n[a] * n[b];
                }
            }
        }
    }
    m
}

fn element_stiffness(h: f64) -> ElementMatrix {
    let det = 0.25 * h * h;
    let s = 2.0 / h;
    let mut k = [[0.0; 4]; 4];
    for &(xi, wx) in &GAUSS2 {
        for &(eta, wy) in &GAUSS2 {
            let g = shape_grad_ref(xi, eta);
            for a in 0..4 {
                for b in 0..4 {
                    let dot = s * s * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    k[a][b] += wx * wy * det * dot;
                }
            }
        }
    }
    k
}

/// `∫ (w·∇φ_b) φ_a` on the element with lower-left corner `origin`.
///
/// Three-point rule: the integrand is quartic in `y`.
fn element_convection(h: f64, origin: [f64; 2], velocity: fn(f64, f64) -> [f64; 2]) -> ElementMatrix {
    let det = 0.25 * h * h;
    let s = 2.0 / h;
    let mut c = [[0.0; 4]; 4];
    for &(xi, wx) in &GAUSS3 {
        for &(eta, wy) in &GAUSS3 {
            let x = origin[0] + 0.5 * h * (1.0 + xi);
            let y = origin[1] + 0.5 * h * (1.0 + eta);
            let w = velocity(x, y);
            let n = shape(xi, eta);
            let g = shape_grad_ref(xi, eta);
            for a in 0..4 {
                for b in 0..4 {
                    let adv = s * (w[0] * g[b][0] + w[1] * g[b][1]);
                    c[a][b] += wx * wy * det * adv * n[a];
                }
            }
        }
    }
    c
}

/// All assembled, parameter-independent data of one discretization.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub fingerprint: String,
    pub family: ProblemFamily,
    /// Free (test-space) index → global node.
    pub free_nodes: Vec<usize>,
    /// Global node → free index.
    pub node_to_free: Vec<Option<usize>>,
    /// Dirichlet index → global node.
    pub dirichlet_nodes: Vec<usize>,
    pub dirichlet_values: Col<f64>,
    /// Mass matrix on free nodes.
    pub mass: SpMat,
    /// Mass matrix on all nodes.
    pub mass_full: SpMat,
    /// Per-subdomain stiffness on free nodes.
    pub stiffness: Vec<SpMat>,
    /// Per-subdomain stiffness on all nodes.
    pub stiffness_full: Vec<SpMat>,
    /// `Σ_q K_q`, the unit-coefficient stiffness.
    pub stiffness_ref: SpMat,
    /// Per-subdomain coupling of free test functions to Dirichlet trial functions.
    pub stiffness_lift: Vec<SpMat>,
    pub convection: Option<SpMat>,
    pub convection_full: Option<SpMat>,
    pub convection_lift: Option<SpMat>,
    /// `∫_{Ω_k} φ_i` over free nodes, one vector per subdomain.
    pub region_loads: Vec<Col<f64>>,
}

impl FemOperators {
    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn n_dirichlet(&self) -> usize {
        self.dirichlet_nodes.len()
    }

    pub fn n_subdomains(&self) -> usize {
        self.stiffness.len()
    }

    /// `K(σ) = Σ_q σ_q K_q`.
    pub fn stiffness_combination(&self, sigma: &[f64]) -> Result<SpMat> {
        if sigma.len() != self.stiffness.len() {
            return Err(Error::Shape {
                context: "stiffness_combination",
                expected: self.stiffness.len(),
                found: sigma.len(),
            });
        }
        let terms: Vec<_> = sigma.iter().copied().zip(self.stiffness.iter()).collect();
        linear_combination(&terms)
    }

    /// `Σ_k w_k ∫_{Ω_k} φ_i`, the load of a piecewise-constant target.
    pub fn region_load(&self, weights: &[f64]) -> Result<Col<f64>> {
        if weights.len() != self.region_loads.len() {
            return Err(Error::Shape {
                context: "region_load",
                expected: self.region_loads.len(),
                found: weights.len(),
            });
        }
        let mut b = Col::<f64>::zeros(self.n_free());
        for (w, load) in weights.iter().zip(&self.region_loads) {
            b += *w * load;
        }
        Ok(b)
    }
}

fn restrict(full: &SpMat, rows: &[Option<usize>], cols: &[Option<usize>], nrows: usize, ncols: usize) -> Result<SpMat> {
    let mut b = TripletBuilder::new(nrows, ncols);
    for t in full.triplet_iter() {
        if let (Some(i), Some(j)) = (rows[t.row], cols[t.col]) {
            b.push(i, j, *t.val);
        }
    }
    b.build()
}

pub fn assemble_operators(mesh: &Mesh) -> Result<FemOperators> {
    let spec = &mesh.spec;
    let h = spec.h();
    let n_nodes = mesh.n_nodes();
    let nd = spec.n_subdomains;

    let mut free_nodes = Vec::new();
    let mut dirichlet_nodes = Vec::new();
    let mut node_to_free = vec![None; n_nodes];
    let mut node_to_dir = vec![None; n_nodes];
    let mut dvals = Vec::new();
    for (node, d) in mesh.dirichlet.iter().enumerate() {
        match d {
            None => {
                node_to_free[node] = Some(free_nodes.len());
                free_nodes.push(node);
            }
            Some(g) => {
                node_to_dir[node] = Some(dirichlet_nodes.len());
                dirichlet_nodes.push(node);
                dvals.push(*g);
            }
        }
    }
    let n_free = free_nodes.len();
    let n_dir = dirichlet_nodes.len();

    let me = element_mass(h);
    let ke = element_stiffness(h);
    let with_convection = spec.problem == ProblemFamily::Graetz;

    let cap = 16 * mesh.elements.len();
    let mut mass_b = TripletBuilder::with_capacity(n_nodes, n_nodes, cap);
    let mut stiff_b: Vec<_> = (0..nd)
        .map(|_| TripletBuilder::with_capacity(n_nodes, n_nodes, cap / nd + 16))
        .collect();
    let mut conv_b = with_convection.then(|| TripletBuilder::with_capacity(n_nodes, n_nodes, cap));
    let mut loads_full = vec![vec![0.0; n_nodes]; nd];

    for (e, nodes) in mesh.elements.iter().enumerate() {
        let q = mesh.element_subdomain[e];
        let ce = conv_b
            .as_ref()
            .map(|_| element_convection(h, mesh.coords[nodes[0]], graetz_velocity));
        for a in 0..4 {
            for b in 0..4 {
                mass_b.push(nodes[a], nodes[b], me[a][b]);
                stiff_b[q].push(nodes[a], nodes[b], ke[a][b]);
                if let (Some(cb), Some(ce)) = (conv_b.as_mut(), ce.as_ref()) {
                    cb.push(nodes[a], nodes[b], ce[a][b]);
                }
                loads_full[q][nodes[a]] += me[a][b];
            }
        }
    }

    let mass_full = mass_b.build()?;
    let stiffness_full = stiff_b.into_iter().map(|b| b.build()).collect::<Result<Vec<_>>>()?;
    let convection_full = conv_b.map(|b| b.build()).transpose()?;

    let mass = restrict(&mass_full, &node_to_free, &node_to_free, n_free, n_free)?;
    let stiffness = stiffness_full
        .iter()
        .map(|k| restrict(k, &node_to_free, &node_to_free, n_free, n_free))
        .collect::<Result<Vec<_>>>()?;
    let stiffness_lift = stiffness_full
        .iter()
        .map(|k| restrict(k, &node_to_free, &node_to_dir, n_free, n_dir))
        .collect::<Result<Vec<_>>>()?;
    let unit: Vec<_> = stiffness.iter().map(|k| (1.0, k)).collect();
    let stiffness_ref = linear_combination(&unit)?;
    let convection = convection_full
        .as_ref()
        .map(|c| restrict(c, &node_to_free, &node_to_free, n_free, n_free))
        .transpose()?;
    let convection_lift = convection_full
        .as_ref()
        .map(|c| restrict(c, &node_to_free, &node_to_dir, n_free, n_dir))
        .transpose()?;
    let region_loads = loads_full
        .iter()
        .map(|full| Col::from_fn(n_free, |i| full[free_nodes[i]]))
        .collect();

    Ok(FemOperators {
        fingerprint: mesh.fingerprint(),
        family: spec.problem,
        free_nodes,
        node_to_free,
        dirichlet_nodes,
        dirichlet_values: Col::from_fn(n_dir, |i| dvals[i]),
        mass,
        mass_full,
        stiffness,
        stiffness_full,
        stiffness_ref,
        stiffness_lift,
        convection,
        convection_full,
        convection_lift,
        region_loads,
    })
}
