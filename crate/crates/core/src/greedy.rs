//! Greedy snapshot selection driven by the full-order residual indicator.

use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::ProblemFamily;
use crate::model::{FullOrderModel, Snapshot};
use crate::params::{ParameterBox, ParameterVector};
use crate::reduced::{Evaluation, OnlineReduction, Projection, ReducedBasis};
use crate::registry::Registry;
use crate::stabilization::apply_update;

/// Upper bound on the default basis cap.
pub const DEFAULT_BASIS_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreedyConfig {
    /// Training-set size.
    pub n_max: usize,
    pub tol: f64,
    /// Snapshot cap; `min(n_max, 200)` when unset.
    pub max_basis: Option<usize>,
    pub seed: u64,
    pub formulation: String,
    pub stabilization: String,
    pub verification_size: usize,
    /// Seed of the verification draw; derived from `seed` when unset.
    pub verification_seed: Option<u64>,
    /// Sweep threads; `Some(1)` is the sequential reference mode.
    pub threads: Option<usize>,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            n_max: 2000,
            tol: 1e-7,
            max_basis: None,
            seed: 0,
            formulation: "galerkin".into(),
            stabilization: "aggregation".into(),
            verification_size: 500,
            verification_seed: None,
            threads: None,
        }
    }
}

impl GreedyConfig {
    /// Defaults with the stopping tolerance of the given family.
    pub fn for_family(family: ProblemFamily) -> Self {
        Self {
            tol: default_tolerance(family),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol = {} must be positive", self.tol)));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if self.max_basis == Some(0) {
            return Err(Error::Config("max_basis must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn basis_cap(&self) -> usize {
        self.max_basis.unwrap_or(self.n_max.min(DEFAULT_BASIS_CAP))
    }

    pub fn verification_seed(&self) -> u64 {
        self.verification_seed.unwrap_or(self.seed ^ 0x9e37_79b9_7f4a_7c15)
    }
}

pub fn default_tolerance(family: ProblemFamily) -> f64 {
    match family {
        ProblemFamily::Diffusion => 1e-7,
        ProblemFamily::Graetz => 1e-4,
    }
}

/// `n` i.i.d. uniform draws from `domain`.
pub fn sample_training_set(domain: &ParameterBox, n: usize, seed: u64) -> Vec<ParameterVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| domain.sample(&mut rng)).collect()
}

/// Like [`sample_training_set`] but rejecting exact duplicates of `exclude`.
pub fn sample_verification_set(
    domain: &ParameterBox,
    n: usize,
    seed: u64,
    exclude: &[ParameterVector],
) -> Vec<ParameterVector> {
    let taken: HashSet<Vec<u64>> = exclude.iter().map(ParameterVector::bits).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mu = domain.sample(&mut rng);
        if !taken.contains(&mu.bits()) {
            out.push(mu);
        }
    }
    out
}

/// One row of the greedy trace. Row 0 is the state after the first snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Snapshots in the basis during this sweep.
    pub n: usize,
    pub columns: usize,
    /// `η* = max_i η_i` over the training set.
    pub eta_max: f64,
    pub cond_at_argmax: f64,
    pub cond_max: f64,
    /// Training parameters whose reduced solve failed.
    pub failed: usize,
    /// Parameter attaining `η*` (row 0: the first snapshot's parameter).
    pub mu: Vec<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Converged { eta: f64 },
    FailedToConverge { best_eta: f64 },
}

impl Outcome {
    pub fn converged(&self) -> bool {
        matches!(self, Self::Converged { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Converged { .. } => "converged",
            Self::FailedToConverge { .. } => "failed_to_converge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub problem: String,
    pub formulation: String,
    pub stabilization: String,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub outcome: Outcome,
}

impl GreedyTrace {
    /// Sweeps performed, excluding the initial row.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Largest reduced condition number over all sweeps.
    pub fn max_condition(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.cond_max)
            .filter(|c| !c.is_nan())
            .fold(f64::NAN, f64::max)
    }

    pub fn final_eta(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.eta_max)
    }

    /// CSV of every record except wall time, so reruns compare byte for byte.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let dim = self.records.first().map_or(0, |r| r.mu.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["iteration", "n", "columns", "eta_max", "cond_at_argmax", "cond_max", "failed"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=dim).map(|k| format!("mu_{k}")));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.iteration.to_string(),
                r.n.to_string(),
                r.columns.to_string(),
                r.eta_max.to_string(),
                r.cond_at_argmax.to_string(),
                r.cond_max.to_string(),
                r.failed.to_string(),
            ];
            row.extend(r.mu.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<trace csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone)]
pub struct GreedyResult {
    pub basis: ReducedBasis,
    pub trace: GreedyTrace,
    pub training: Vec<ParameterVector>,
    pub snapshots: Vec<Snapshot>,
}

fn thread_pool(threads: Option<usize>) -> Result<Option<rayon::ThreadPool>> {
    match threads {
        Some(t) if t > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(Some)
            .map_err(|e| Error::Config(format!("cannot start {t} threads: {e}"))),
        _ => Ok(None),
    }
}

/// Evaluates every parameter; results are in input order regardless of threading.
pub fn sweep(
    online: &OnlineReduction<'_>,
    params: &[ParameterVector],
    threads: Option<usize>,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<Evaluation>> {
    match (threads, pool) {
        (Some(1), _) => params.iter().map(|mu| online.evaluate(mu)).collect(),
        (_, Some(pool)) => pool.install(|| params.par_iter().map(|mu| online.evaluate(mu)).collect()),
        (_, None) => params.par_iter().map(|mu| online.evaluate(mu)).collect(),
    }
}

/// Index of the largest `η`, lowest index on ties; failures count as `+∞`.
pub fn argmax_eta(evals: &[Evaluation], skip: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in evals.iter().enumerate() {
        if skip.get(i).copied().unwrap_or(false) {
            continue;
        }
        let eta = if e.failed || e.eta.is_nan() { f64::INFINITY } else { e.eta };
        if best.is_none_or(|(_, b)| eta > b) {
            best = Some((i, eta));
        }
    }
    best.map(|(i, _)| i)
}

pub fn greedy_train(model: &FullOrderModel, config: &GreedyConfig, registry: &Registry) -> Result<GreedyResult> {
    config.validate()?;
    let projection = registry.projection(&config.formulation)?;
    let stabilization = registry.stabilization(&config.stabilization)?;
    let training = sample_training_set(&model.domain, config.n_max, config.seed);
    let pool = thread_pool(config.threads)?;
    let cap = config.basis_cap();

    let start = Instant::now();
    let mut basis = stabilization.empty_basis(model);
    let first = model.solve(&training[0])?;
    apply_update(&mut basis, &stabilization.update(model, &first)?)?;
    let mut snapshots = vec![first];
    let mut records = vec![IterationRecord {
        iteration: 0,
        n: basis.n_snapshots(),
        columns: basis.total_columns(),
        eta_max: f64::INFINITY,
        cond_at_argmax: f64::NAN,
        cond_max: f64::NAN,
        failed: 0,
        mu: training[0].0.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
    }];
    let mut skip = vec![false; training.len()];
    let mut best_eta = f64::INFINITY;

    let outcome = loop {
        let t0 = Instant::now();
        let online = OnlineReduction::new(model, &basis, projection.as_ref())?;
        let evals = sweep(&online, &training, config.threads, pool.as_ref())?;
        let Some(star) = argmax_eta(&evals, &skip) else {
            return Err(Error::Numerical("every training parameter failed the full solve".into()));
        };
        let e = evals[star];
        let eta_star = if e.failed { f64::INFINITY } else { e.eta };
        let failed = evals.iter().filter(|e| e.failed).count();
        let cond_max = evals.iter().map(|e| e.cond).filter(|c| !c.is_nan()).fold(f64::NAN, f64::max);
        records.push(IterationRecord {
            iteration: records.len(),
            n: basis.n_snapshots(),
            columns: basis.total_columns(),
            eta_max: eta_star,
            cond_at_argmax: e.cond,
            cond_max,
            failed,
            mu: training[star].0.clone(),
            wall_seconds: t0.elapsed().as_secs_f64(),
        });
        if failed > 0 {
            log::warn!("{failed} reduced solves failed with N = {}", basis.n_snapshots());
        }
        log::info!(
            "iteration {}: N = {}, eta* = {eta_star:.3e}, cond = {:.3e}",
            records.len() - 1,
            basis.n_snapshots(),
            e.cond
        );
        best_eta = best_eta.min(eta_star);
        if eta_star <= config.tol {
            break Outcome::Converged { eta: eta_star };
        }
        if basis.n_snapshots() >= cap {
            break Outcome::FailedToConverge { best_eta };
        }
        match model.solve(&training[star]) {
            Ok(snap) => {
                apply_update(&mut basis, &stabilization.update(model, &snap)?)?;
                snapshots.push(snap);
            }
            Err(Error::Singular { mu, detail }) => {
                log::warn!("full solve failed at {mu:?}: {detail}; excluding it from the training set");
                skip[star] = true;
            }
            Err(e) => return Err(e),
        }
    };

    Ok(GreedyResult {
        trace: GreedyTrace {
            problem: model.spec.label(),
            formulation: projection.name().into(),
            stabilization: stabilization.name().into(),
            seed: config.seed,
            records,
            outcome,
        },
        basis,
        training,
        snapshots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub etas: Vec<f64>,
    pub max: f64,
    pub median: f64,
    pub failed: usize,
}

impl VerificationReport {
    pub fn from_evaluations(evals: &[Evaluation]) -> Self {
        let etas: Vec<f64> = evals.iter().map(|e| e.eta).collect();
        let mut sorted = etas.clone();
        sorted.sort_by(f64::total_cmp);
        let median = match sorted.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => sorted[n / 2],
            n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
        };
        Self {
            max: sorted.last().copied().unwrap_or(f64::NAN),
            median,
            failed: evals.iter().filter(|e| e.failed).count(),
            etas,
        }
    }
}

/// Indicator of `basis` at each of `params`.
pub fn verify_at(
    model: &FullOrderModel,
    basis: &ReducedBasis,
    projection: &dyn Projection,
    params: &[ParameterVector],
    threads: Option<usize>,
) -> Result<VerificationReport> {
    let pool = thread_pool(threads)?;
    let online = OnlineReduction::new(model, basis, projection)?;
    let evals = sweep(&online, params, threads, pool.as_ref())?;
    Ok(VerificationReport::from_evaluations(&evals))
}

/// Fresh uniform verification draw, disjoint from `training`.
pub fn verify(
    model: &FullOrderModel,
    basis: &ReducedBasis,
    projection: &dyn Projection,
    config: &GreedyConfig,
    training: &[ParameterVector],
) -> Result<VerificationReport> {
    let params = sample_verification_set(&model.domain, config.verification_size, config.verification_seed(), training);
    verify_at(model, basis, projection, &params, config.threads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ProblemSpec;

    fn eval(eta: f64, failed: bool) -> Evaluation {
        Evaluation { eta, cond: 1.0, failed, absolute: false }
    }

    fn small_config(formulation: &str, stabilization: &str) -> GreedyConfig {
        GreedyConfig {
            n_max: 60,
            tol: 1e-6,
            formulation: formulation.into(),
            stabilization: stabilization.into(),
            verification_size: 20,
            threads: Some(1),
            ..GreedyConfig::default()
        }
    }

    #[test]
    fn training_draws_are_reproducible_and_uniform() {
        let domain = ProblemSpec::graetz(2).parameter_box();
        let a = sample_training_set(&domain, 4000, 11);
        assert_eq!(a, sample_training_set(&domain, 4000, 11));
        assert_ne!(a, sample_training_set(&domain, 4000, 12));
        for k in 0..domain.dim() {
            let (lo, hi) = (domain.lower[k], domain.upper[k]);
            let mean = a.iter().map(|m| m.0[k]).sum::<f64>() / a.len() as f64;
            let sigma = (hi - lo) / (12.0 * a.len() as f64).sqrt();
            assert!((mean - 0.5 * (lo + hi)).abs() <= 3.0 * sigma, "coordinate {k}: {mean}");
            assert!(a.iter().all(|m| domain.contains(m)));
        }
    }

    #[test]
    fn verification_draw_avoids_training_points() {
        let domain = ProblemSpec::diffusion(2, 3).parameter_box();
        let training = sample_training_set(&domain, 50, 3);
        // Reusing the training seed would reproduce the training points exactly.
        let v = sample_verification_set(&domain, 60, 3, &training);
        assert_eq!(v.len(), 60);
        let bits: HashSet<_> = training.iter().map(ParameterVector::bits).collect();
        assert!(v.iter().all(|m| !bits.contains(&m.bits())));
    }

    #[test]
    fn argmax_prefers_the_lowest_index_and_treats_failures_as_infinite() {
        let evals = [eval(0.5, false), eval(0.9, false), eval(0.9, false), eval(0.1, false)];
        assert_eq!(argmax_eta(&evals, &[]), Some(1));
        assert_eq!(argmax_eta(&evals, &[false, true]), Some(2));
        let with_failure = [eval(0.5, false), eval(f64::INFINITY, true), eval(f64::INFINITY, true)];
        assert_eq!(argmax_eta(&with_failure, &[]), Some(1));
        assert_eq!(argmax_eta(&[eval(f64::NAN, false), eval(1e3, false)], &[]), Some(0));
        assert_eq!(argmax_eta(&evals, &[true; 4]), None);
    }

    #[test]
    fn infinite_tolerance_stops_after_one_sweep() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(2, 3)).unwrap();
        let config = GreedyConfig { tol: f64::INFINITY, ..small_config("galerkin", "aggregation") };
        let r = greedy_train(&model, &config, &Registry::default()).unwrap();
        assert_eq!(r.basis.n_snapshots(), 1);
        assert_eq!(r.trace.records.len(), 2);
        assert!(r.trace.outcome.converged());
        assert_eq!(r.trace.records[0].mu, r.training[0].0);
    }

    #[test]
    fn basis_cap_reports_failure_to_converge() {
        let model = FullOrderModel::build(ProblemSpec::graetz(2)).unwrap();
        let config = GreedyConfig { tol: 1e-14, max_basis: Some(2), ..small_config("pg", "supremizer") };
        let r = greedy_train(&model, &config, &Registry::default()).unwrap();
        assert_eq!(r.basis.n_snapshots(), 2);
        assert!(matches!(r.trace.outcome, Outcome::FailedToConverge { .. }));
        assert_eq!(r.trace.records.len(), r.trace.iterations() + 1);
        let csv = r.trace.to_csv_string().unwrap();
        assert_eq!(csv.lines().count(), r.trace.records.len() + 1);
        assert!(csv.starts_with("iteration,n,columns,eta_max,cond_at_argmax,cond_max,failed,mu_1,mu_2,mu_3\n"));
    }

    #[test]
    fn training_points_meet_the_tolerance_after_convergence() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(2, 3)).unwrap();
        let config = small_config("galerkin", "aggregation");
        let registry = Registry::default();
        let r = greedy_train(&model, &config, &registry).unwrap();
        assert!(r.trace.outcome.converged());
        let p = registry.projection("galerkin").unwrap();
        let report = verify_at(&model, &r.basis, p.as_ref(), &r.training, Some(1)).unwrap();
        assert!(report.max <= config.tol);
        assert_eq!(report.max, r.trace.final_eta());
        let single = verify(&model, &r.basis, p.as_ref(), &GreedyConfig { verification_size: 1, ..config }, &r.training)
            .unwrap();
        assert_eq!(single.etas.len(), 1);
        assert_eq!(single.median, single.max);
    }

    #[test]
    fn reruns_and_threaded_runs_agree() {
        let model = FullOrderModel::build(ProblemSpec::graetz(2)).unwrap();
        let registry = Registry::default();
        let config = small_config("pg", "aggregation");
        let a = greedy_train(&model, &config, &registry).unwrap();
        let b = greedy_train(&model, &config, &registry).unwrap();
        assert_eq!(a.trace.to_csv_string().unwrap(), b.trace.to_csv_string().unwrap());
        let threaded = greedy_train(&model, &GreedyConfig { threads: Some(3), ..config }, &registry).unwrap();
        let mus = |r: &GreedyResult| r.trace.records.iter().map(|x| x.mu.clone()).collect::<Vec<_>>();
        assert_eq!(mus(&a), mus(&threaded));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let model = FullOrderModel::build(ProblemSpec::diffusion(2, 3)).unwrap();
        for bad in [
            GreedyConfig { tol: 0.0, ..GreedyConfig::default() },
            GreedyConfig { n_max: 0, ..GreedyConfig::default() },
            GreedyConfig { threads: Some(0), ..GreedyConfig::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
        let unknown = GreedyConfig { stabilization: "bogus".into(), ..GreedyConfig::default() };
        assert!(matches!(
            greedy_train(&model, &unknown, &Registry::default()),
            Err(Error::UnknownStrategy { .. })
        ));
    }
}
