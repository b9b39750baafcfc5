use std::fmt;

use faer::{Col, Mat};

use super::basis::ReducedBasis;
use super::system::{operator_times_basis, Formulation, ReducedSystem};
use crate::error::Result;
use crate::model::FullKkt;

/// A rule turning `Q`, `W = G(μ)Q` and `b(μ)` into a reduced system.
pub trait Projection: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn formulation(&self) -> Formulation;

    /// Reduced matrix and right-hand side from assembled full-order pieces.
    fn reduce(&self, q: &Mat<f64>, w: &Mat<f64>, b: &Col<f64>) -> (Mat<f64>, Col<f64>);

    /// Parameter-independent reductions of `W_t = G_t Q` and `b_s`, for
    /// repeated assembly over many parameters.
    fn precompute(&self, q: &Mat<f64>, w_terms: &[Mat<f64>], b_terms: &[Col<f64>]) -> Box<dyn OnlineProjection>;
}

/// Reduced system from affine coefficients `θ(μ)`, `φ(μ)`.
pub trait OnlineProjection: Send + Sync {
    fn assemble(&self, theta: &[f64], phi: &[f64]) -> (Mat<f64>, Col<f64>);
}

/// Reference path: reduces the assembled `G(μ)` directly.
pub fn project(basis: &ReducedBasis, kkt: &FullKkt<'_>, projection: &dyn Projection) -> Result<ReducedSystem> {
    let q = basis.full_matrix();
    let w = operator_times_basis(basis, kkt);
    let (matrix, rhs) = projection.reduce(&q, &w, &kkt.rhs);
    ReducedSystem::new(kkt.mu.clone(), projection.formulation(), matrix, rhs)
}

fn combine_mats(coeffs: &[f64], terms: &[Mat<f64>], rows: usize, cols: usize) -> Mat<f64> {
    let mut acc = Mat::<f64>::zeros(rows, cols);
    for (c, t) in coeffs.iter().zip(terms) {
        if *c != 0.0 {
            acc += *c * t;
        }
    }
    acc
}

fn combine_cols(coeffs: &[f64], terms: &[Col<f64>], rows: usize) -> Col<f64> {
    let mut acc = Col::<f64>::zeros(rows);
    for (c, t) in coeffs.iter().zip(terms) {
        if *c != 0.0 {
            acc += *c * t;
        }
    }
    acc
}

/// `Qᵀ G Q ṽ = Qᵀ b`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Galerkin;

struct GalerkinOnline {
    dim: usize,
    matrices: Vec<Mat<f64>>,
    rhs: Vec<Col<f64>>,
}

impl OnlineProjection for GalerkinOnline {
    fn assemble(&self, theta: &[f64], phi: &[f64]) -> (Mat<f64>, Col<f64>) {
        (
            combine_mats(theta, &self.matrices, self.dim, self.dim),
            combine_cols(phi, &self.rhs, self.dim),
        )
    }
}

impl Projection for Galerkin {
    fn name(&self) -> &'static str {
        "galerkin"
    }

    fn formulation(&self) -> Formulation {
        Formulation::Galerkin
    }

    fn reduce(&self, q: &Mat<f64>, w: &Mat<f64>, b: &Col<f64>) -> (Mat<f64>, Col<f64>) {
        (q.transpose() * w, q.transpose() * b)
    }

    fn precompute(&self, q: &Mat<f64>, w_terms: &[Mat<f64>], b_terms: &[Col<f64>]) -> Box<dyn OnlineProjection> {
        Box::new(GalerkinOnline {
            dim: q.ncols(),
            matrices: w_terms.iter().map(|w| q.transpose() * w).collect(),
            rhs: b_terms.iter().map(|b| q.transpose() * b).collect(),
        })
    }
}

/// Normal equations `(GQ)ᵀ(GQ) ṽ = (GQ)ᵀ b`, formed explicitly.
#[derive(Debug, Clone, Copy, Default)]
pub struct PetrovGalerkin;

struct NormalEquationsOnline {
    dim: usize,
    /// `gram[t][t'] = W_tᵀ W_t'`.
    gram: Vec<Vec<Mat<f64>>>,
    /// `cross[t][s] = W_tᵀ b_s`.
    cross: Vec<Vec<Col<f64>>>,
}

impl OnlineProjection for NormalEquationsOnline {
    fn assemble(&self, theta: &[f64], phi: &[f64]) -> (Mat<f64>, Col<f64>) {
        let mut m = Mat::<f64>::zeros(self.dim, self.dim);
        let mut r = Col::<f64>::zeros(self.dim);
        for (t, row) in self.gram.iter().enumerate() {
            for (u, g) in row.iter().enumerate() {
                let c = theta[t] * theta[u];
                if c != 0.0 {
                    m += c * g;
                }
            }
            for (s, x) in self.cross[t].iter().enumerate() {
                let c = theta[t] * phi[s];
                if c != 0.0 {
                    r += c * x;
                }
            }
        }
        (m, r)
    }
}

impl Projection for PetrovGalerkin {
    fn name(&self) -> &'static str {
        "pg"
    }

    fn formulation(&self) -> Formulation {
        Formulation::PetrovGalerkin
    }

    fn reduce(&self, _q: &Mat<f64>, w: &Mat<f64>, b: &Col<f64>) -> (Mat<f64>, Col<f64>) {
        (w.transpose() * w, w.transpose() * b)
    }

    fn precompute(&self, q: &Mat<f64>, w_terms: &[Mat<f64>], b_terms: &[Col<f64>]) -> Box<dyn OnlineProjection> {
        let gram = w_terms
            .iter()
            .map(|wt| w_terms.iter().map(|wu| wt.transpose() * wu).collect())
            .collect();
        let cross = w_terms
            .iter()
            .map(|wt| b_terms.iter().map(|b| wt.transpose() * b).collect())
            .collect();
        Box::new(NormalEquationsOnline {
            dim: q.ncols(),
            gram,
            cross,
        })
    }
}

/// Least squares on `GQ` by Householder QR.
#[derive(Debug, Clone, Copy, Default)]
pub struct PetrovGalerkinQr;

struct LeastSquaresOnline {
    w_terms: Vec<Mat<f64>>,
    b_terms: Vec<Col<f64>>,
}

impl OnlineProjection for LeastSquaresOnline {
    fn assemble(&self, theta: &[f64], phi: &[f64]) -> (Mat<f64>, Col<f64>) {
        let rows = self.w_terms.first().map_or(0, |w| w.nrows());
        let cols = self.w_terms.first().map_or(0, |w| w.ncols());
        let brows = self.b_terms.first().map_or(0, |b| b.nrows());
        (
            combine_mats(theta, &self.w_terms, rows, cols),
            combine_cols(phi, &self.b_terms, brows),
        )
    }
}

impl Projection for PetrovGalerkinQr {
    fn name(&self) -> &'static str {
        "pg-qr"
    }

    fn formulation(&self) -> Formulation {
        Formulation::PetrovGalerkinQr
    }

    fn reduce(&self, _q: &Mat<f64>, w: &Mat<f64>, b: &Col<f64>) -> (Mat<f64>, Col<f64>) {
        (w.clone(), b.clone())
    }

    fn precompute(&self, _q: &Mat<f64>, w_terms: &[Mat<f64>], b_terms: &[Col<f64>]) -> Box<dyn OnlineProjection> {
        Box::new(LeastSquaresOnline {
            w_terms: w_terms.to_vec(),
            b_terms: b_terms.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FullOrderModel;
    use crate::params::ParameterVector;
    use crate::problem::ProblemSpec;
    use crate::reduced::{
        error_indicator, solve_reduced, symmetric_condition, tall_condition, BasisLayout, BlockId,
        OnlineReduction, StabilizationKind,
    };
    use crate::stabilization::{apply_update, Aggregation, Stabilization, Supremizer};
    use rand::{Rng, SeedableRng};

    fn identity_basis(model: &FullOrderModel) -> ReducedBasis {
        let n = model.n_free();
        let mut b = ReducedBasis::empty(StabilizationKind::Aggregation, BasisLayout::ThreeBlock, n, model.fingerprint());
        let units: Vec<Col<f64>> = (0..n).map(|i| Col::from_fn(n, |k| if k == i { 1.0 } else { 0.0 })).collect();
        for id in [BlockId::Control, BlockId::State, BlockId::Adjoint] {
            b.orthonormal_extend(id, &units, None).unwrap();
        }
        b
    }

    fn trained(model: &FullOrderModel, stab: &dyn Stabilization, params: &[ParameterVector]) -> ReducedBasis {
        let mut basis = stab.empty_basis(model);
        for mu in params {
            let snap = model.solve(mu).unwrap();
            apply_update(&mut basis, &stab.update(model, &snap).unwrap()).unwrap();
        }
        basis
    }

    fn random_params(model: &FullOrderModel, n: usize, seed: u64) -> Vec<ParameterVector> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| model.domain.sample(&mut rng)).collect()
    }

    #[test]
    fn full_basis_galerkin_reproduces_the_full_solution() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(1, 2)).unwrap();
        let basis = identity_basis(&model);
        let mu = ParameterVector(vec![0.3, 0.8]);
        let kkt = model.assemble_kkt(&mu).unwrap();
        let sys = project(&basis, &kkt, &Galerkin).unwrap();
        let v = basis.expand(&solve_reduced(&sys).unwrap()).unwrap();
        let full = model.solve(&mu).unwrap().stacked();
        assert!((&v - &full).norm_l2() <= 1e-10 * full.norm_l2());
    }

    #[test]
    fn aggregation_control_state_block_is_a_structural_zero() {
        let model = FullOrderModel::build(ProblemSpec::graetz(2)).unwrap();
        let basis = trained(&model, &Aggregation, &random_params(&model, 3, 1));
        let kkt = model.assemble_kkt(&model.domain.midpoint()).unwrap();
        let sys = project(&basis, &kkt, &Galerkin).unwrap();
        let off = basis.column_offsets();
        let (nf, nu) = (basis.blocks[0].cols(), basis.blocks[1].cols());
        for i in 0..nf {
            for j in 0..nu {
                assert_eq!(sys.matrix[(off[0] + i, off[1] + j)], 0.0);
            }
        }
    }

    #[test]
    fn normal_equations_square_the_condition_number() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(2, 3)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for trial in 0..5 {
            let n = model.n_free();
            let mut basis = ReducedBasis::empty(StabilizationKind::Aggregation, BasisLayout::ThreeBlock, n, model.fingerprint());
            for id in [BlockId::Control, BlockId::State, BlockId::Adjoint] {
                let vs: Vec<_> = (0..2 + trial).map(|_| Col::from_fn(n, |_| rng.random::<f64>() - 0.5)).collect();
                basis.orthonormal_extend(id, &vs, None).unwrap();
            }
            let kkt = model.assemble_kkt(&model.domain.sample(&mut rng)).unwrap();
            let w = crate::reduced::operator_times_basis(&basis, &kkt);
            let pg = project(&basis, &kkt, &PetrovGalerkin).unwrap();
            let expected = 2.0 * tall_condition(&w).unwrap().log10();
            assert!((pg.cond.log10() - expected).abs() <= 1.0, "{} vs {expected}", pg.cond.log10());
            assert_eq!(pg.cond, symmetric_condition(&pg.matrix).unwrap());
        }
    }

    #[test]
    fn online_assembly_matches_reference_projection() {
        for spec in [ProblemSpec::diffusion(2, 3), ProblemSpec::graetz(2)] {
            let model = FullOrderModel::build(spec).unwrap();
            let basis = trained(&model, &Supremizer, &random_params(&model, 3, 2));
            for projection in [&Galerkin as &dyn Projection, &PetrovGalerkin, &PetrovGalerkinQr] {
                let online = OnlineReduction::new(&model, &basis, projection).unwrap();
                for mu in random_params(&model, 4, 3) {
                    let fast = online.system(&mu).unwrap();
                    let reference = project(&basis, &model.assemble_kkt(&mu).unwrap(), projection).unwrap();
                    let scale = reference.matrix.norm_max();
                    assert!((&fast.matrix - &reference.matrix).norm_max() <= 1e-12 * scale);
                    assert!((&fast.rhs - &reference.rhs).norm_max() <= 1e-12 * reference.rhs.norm_max());
                    let kkt = model.assemble_kkt(&mu).unwrap();
                    let coeffs = solve_reduced(&reference).unwrap();
                    let eta_ref = error_indicator(&basis, &kkt, &coeffs).unwrap().eta;
                    let eta_fast = online.evaluate(&mu).unwrap().eta;
                    assert!((eta_ref - eta_fast).abs() <= 1e-10 * eta_ref.max(1e-3));
                }
            }
        }
    }

    #[test]
    fn diffusion_galerkin_matrix_is_symmetric() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(3, 3)).unwrap();
        let basis = trained(&model, &Aggregation, &random_params(&model, 3, 4));
        let kkt = model.assemble_kkt(&model.domain.midpoint()).unwrap();
        let r = project(&basis, &kkt, &Galerkin).unwrap().matrix;
        assert!((&r - r.transpose()).norm_max() <= 1e-12 * r.norm_max().max(1.0));
    }

    #[test]
    fn indicator_is_zero_at_the_solution_and_one_at_zero() {
        let model = FullOrderModel::build(ProblemSpec::graetz(2)).unwrap();
        let basis = identity_basis(&model);
        let mu = model.domain.midpoint();
        let kkt = model.assemble_kkt(&mu).unwrap();
        let exact = model.solve(&mu).unwrap().stacked();
        // The identity basis orders coefficients as the full vector.
        assert!(error_indicator(&basis, &kkt, &exact).unwrap().eta <= 1e-10);
        let zero = Col::zeros(basis.total_columns());
        assert_eq!(error_indicator(&basis, &kkt, &zero).unwrap().eta, 1.0);
    }

    #[test]
    fn stabilized_bases_interpolate_their_snapshots() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(3, 3)).unwrap();
        let params = random_params(&model, 3, 6);
        for stab in [&Supremizer as &dyn Stabilization, &Aggregation] {
            let basis = trained(&model, stab, &params);
            let online = OnlineReduction::new(&model, &basis, &Galerkin).unwrap();
            for mu in &params {
                assert!(online.evaluate(mu).unwrap().eta <= 1e-10);
            }
        }
        let one = trained(&model, &Aggregation, &params[..1]);
        let online = OnlineReduction::new(&model, &one, &Galerkin).unwrap();
        let e = online.evaluate(&params[0]).unwrap();
        assert!(!e.failed && e.eta <= 1e-10);
    }

    #[test]
    fn mismatched_basis_is_refused() {
        let coarse = FullOrderModel::build(ProblemSpec::diffusion(2, 3)).unwrap();
        let fine = FullOrderModel::build(ProblemSpec::diffusion(3, 3)).unwrap();
        let basis = trained(&coarse, &Aggregation, &random_params(&coarse, 1, 0));
        assert!(matches!(
            OnlineReduction::new(&fine, &basis, &Galerkin),
            Err(crate::error::Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn empty_basis_gives_unit_indicator() {
        let model = FullOrderModel::build(ProblemSpec::graetz(2)).unwrap();
        let basis = Aggregation.empty_basis(&model);
        let online = OnlineReduction::new(&model, &basis, &PetrovGalerkin).unwrap();
        let e = online.evaluate(&model.domain.midpoint()).unwrap();
        assert_eq!(e.eta, 1.0);
        assert!(!e.failed);
    }
}
