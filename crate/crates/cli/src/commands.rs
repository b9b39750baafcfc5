use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rbctrl::greedy::{sample_training_set, verify, VerificationReport};
use rbctrl::io::{load_basis, save_basis, save_snapshots, write_json};
use rbctrl::model::inf_sup_full;
use rbctrl::reduced::basis_inf_sup;
use rbctrl::report::{emit_reports, run_grid, write_table};
use rbctrl::{greedy_train, Error, FullOrderModel, Outcome, ParameterVector, Registry, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const BASIS_FILE: &str = "basis.json";
pub const SNAPSHOT_FILE: &str = "snapshots.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRAIN_SUMMARY_FILE: &str = "train.json";
pub const VERIFY_FILE: &str = "verification.json";
pub const INFSUP_FILE: &str = "infsup.csv";

/// What a finished command reports back to `main`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
    CellErrors,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    problem: rbctrl::ProblemSpec,
    fingerprint: String,
    config: &'a rbctrl::GreedyConfig,
    outcome: Outcome,
    snapshots: usize,
    columns: usize,
    iterations: usize,
    max_condition: f64,
    wall_seconds: f64,
}

pub fn train(config: &RunConfig, out: &Path) -> Result<Status> {
    let spec = config.spec()?;
    let registry = Registry::default();
    let model = FullOrderModel::build(spec.clone())?;
    let start = Instant::now();
    let result = greedy_train(&model, &config.greedy, &registry)?;

    create_dir(out)?;
    save_basis(&out.join(BASIS_FILE), &result.basis)?;
    save_snapshots(&out.join(SNAPSHOT_FILE), &model.fingerprint(), &result.snapshots)?;
    let trace_path = out.join(TRACE_FILE);
    let file = fs::File::create(&trace_path).map_err(|e| Error::Io {
        path: trace_path.clone(),
        source: e,
    })?;
    result.trace.write_csv(file)?;
    write_json(
        &out.join(TRAIN_SUMMARY_FILE),
        &TrainSummary {
            problem: spec,
            fingerprint: model.fingerprint(),
            config: &config.greedy,
            outcome: result.trace.outcome,
            snapshots: result.basis.n_snapshots(),
            columns: result.basis.total_columns(),
            iterations: result.trace.iterations(),
            max_condition: result.trace.max_condition(),
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    )?;

    println!(
        "{}: N = {}, columns = {}, final eta = {:.3e}, max cond = {:.3e}",
        result.trace.outcome.label(),
        result.basis.n_snapshots(),
        result.basis.total_columns(),
        result.trace.final_eta(),
        result.trace.max_condition()
    );
    Ok(if result.trace.outcome.converged() {
        Status::Success
    } else {
        Status::NotConverged
    })
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    basis: PathBuf,
    fingerprint: String,
    formulation: &'a str,
    size: usize,
    verification_seed: u64,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

pub fn verify_basis(config: &RunConfig, basis_path: &Path, out: &Path) -> Result<Status> {
    let model = FullOrderModel::build(config.spec()?)?;
    let basis = load_basis(basis_path, Some(&model.fingerprint()))?;
    let projection = Registry::default().projection(&config.greedy.formulation)?;
    let training = sample_training_set(&model.domain, config.greedy.n_max, config.greedy.seed);
    let report = verify(&model, &basis, projection.as_ref(), &config.greedy, &training)?;

    create_dir(out)?;
    write_json(
        &out.join(VERIFY_FILE),
        &VerifySummary {
            basis: basis_path.to_path_buf(),
            fingerprint: model.fingerprint(),
            formulation: projection.name(),
            size: report.etas.len(),
            verification_seed: config.greedy.verification_seed(),
            report: &report,
        },
    )?;
    println!(
        "verification over {} parameters: max eta = {:.3e}, median eta = {:.3e}, failed = {}",
        report.etas.len(),
        report.max,
        report.median,
        report.failed
    );
    Ok(Status::Success)
}

pub fn infsup(config: &RunConfig, basis_path: Option<&Path>, out: &Path) -> Result<Status> {
    let model = FullOrderModel::build(config.spec()?)?;
    let basis = basis_path
        .map(|p| load_basis(p, Some(&model.fingerprint())))
        .transpose()?;
    let mut points: Vec<(&str, ParameterVector)> = sample_training_set(&model.domain, config.infsup.samples, config.infsup_seed())
        .into_iter()
        .map(|mu| ("sample", mu))
        .collect();
    if let Some(b) = &basis {
        points.extend(b.snapshot_params.iter().map(|mu| ("snapshot", mu.clone())));
    }

    create_dir(out)?;
    let path = out.join(INFSUP_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["source".to_string(), "beta_full".into(), "beta_reduced".into()];
    header.extend((1..=model.domain.dim()).map(|k| format!("mu_{k}")));
    w.write_record(&header)?;
    let (mut min_full, mut min_reduced) = (f64::INFINITY, f64::INFINITY);
    for (source, mu) in &points {
        let kkt = model.assemble_kkt(mu)?;
        let full = inf_sup_full(&kkt, &model.norms)?;
        let reduced = basis
            .as_ref()
            .map(|b| basis_inf_sup(b, &kkt, &model.norms))
            .transpose()?;
        min_full = min_full.min(full);
        if let Some(r) = reduced {
            min_reduced = min_reduced.min(r);
        }
        let mut row = vec![source.to_string(), full.to_string(), reduced.map_or(String::new(), |r| r.to_string())];
        row.extend(mu.0.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Io { path, source: e })?;

    print!("min full inf-sup = {min_full:.6e} over {} parameters", points.len());
    if basis.is_some() {
        print!(", min reduced inf-sup = {min_reduced:.6e}");
    }
    println!();
    Ok(Status::Success)
}

pub fn bench(config: &RunConfig, out: &Path) -> Result<Status> {
    let results = run_grid(&config.bench, &Registry::default())?;
    emit_reports(&results, &config.bench, out)?;
    let rows: Vec<_> = results.iter().map(|r| r.row.clone()).collect();
    write_table(&rows, std::io::stdout())?;
    Ok(if rows.iter().any(|r| r.outcome == "error") {
        Status::CellErrors
    } else if rows.iter().any(|r| r.outcome != Outcome::Converged { eta: 0.0 }.label()) {
        Status::NotConverged
    } else {
        Status::Success
    })
}
