//! Experiment grids over meshes, formulations and stabilizations.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::ProblemFamily;
use crate::greedy::{default_tolerance, greedy_train, verify, GreedyConfig, GreedyTrace};
use crate::model::FullOrderModel;
use crate::problem::{ProblemSpec, DEFAULT_BETA};
use crate::registry::Registry;

/// Finest mesh level run without `allow_fine`.
pub const DEFAULT_MAX_NC: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentGrid {
    pub problem: ProblemFamily,
    pub ncs: Vec<u32>,
    /// Strip counts for the diffusion problem; ignored for Graetz.
    pub n_subdomains: Vec<usize>,
    pub formulations: Vec<String>,
    pub stabilizations: Vec<String>,
    /// Stopping tolerance; the problem default when unset.
    pub tol: Option<f64>,
    pub n_max: usize,
    pub max_basis: Option<usize>,
    pub verification_size: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub beta: f64,
    /// Permit `nc` above the desk-scale limit.
    pub allow_fine: bool,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            problem: ProblemFamily::Diffusion,
            ncs: vec![3, 4, 5],
            n_subdomains: vec![3, 10],
            formulations: vec!["galerkin".into(), "pg".into()],
            stabilizations: vec!["supremizer".into(), "aggregation".into()],
            tol: None,
            n_max: 2000,
            max_basis: None,
            verification_size: 500,
            seed: 0,
            threads: None,
            beta: DEFAULT_BETA,
            allow_fine: false,
        }
    }
}

/// One fully specified train-and-verify run.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub spec: ProblemSpec,
    pub config: GreedyConfig,
}

impl Cell {
    /// `<problem>_<nc>_<ND>_<form>_<stab>`.
    pub fn label(&self) -> String {
        format!(
            "{}_{}_{}_{}_{}",
            self.spec.label(),
            self.spec.nc,
            self.spec.n_subdomains,
            self.config.formulation,
            self.config.stabilization
        )
    }
}

impl ExperimentGrid {
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.ncs.is_empty() || self.formulations.is_empty() || self.stabilizations.is_empty() {
            return Err(Error::Config("grid needs at least one nc, formulation and stabilization".into()));
        }
        if self.problem == ProblemFamily::Diffusion && self.n_subdomains.is_empty() {
            return Err(Error::Config("diffusion grid needs at least one n_subdomains value".into()));
        }
        if let Some(&nc) = self.ncs.iter().find(|&&nc| nc > DEFAULT_MAX_NC && !self.allow_fine) {
            return Err(Error::Config(format!(
                "nc = {nc} exceeds {DEFAULT_MAX_NC}; set allow_fine = true to run fine meshes"
            )));
        }
        for f in &self.formulations {
            registry.projection(f)?;
        }
        for s in &self.stabilizations {
            registry.stabilization(s)?;
        }
        for cell in self.cells() {
            cell.spec.validate()?;
            cell.config.validate()?;
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let nds = match self.problem {
            ProblemFamily::Diffusion => self.n_subdomains.clone(),
            ProblemFamily::Graetz => vec![2],
        };
        let mut out = Vec::new();
        for &nc in &self.ncs {
            for &nd in &nds {
                let mut spec = match self.problem {
                    ProblemFamily::Diffusion => ProblemSpec::diffusion(nc, nd),
                    ProblemFamily::Graetz => ProblemSpec::graetz(nc),
                };
                spec.beta = self.beta;
                for f in &self.formulations {
                    for s in &self.stabilizations {
                        out.push(Cell {
                            spec: spec.clone(),
                            config: GreedyConfig {
                                n_max: self.n_max,
                                tol: self.tol.unwrap_or(default_tolerance(self.problem)),
                                max_basis: self.max_basis,
                                seed: self.seed,
                                formulation: f.clone(),
                                stabilization: s.clone(),
                                verification_size: self.verification_size,
                                verification_seed: None,
                                threads: self.threads,
                            },
                        });
                    }
                }
            }
        }
        out
    }
}

/// Header of `table.csv`, in field order of [`ReportRow`].
pub const REPORT_HEADER: [&str; 12] = [
    "problem",
    "nc",
    "nd",
    "formulation",
    "stabilization",
    "n",
    "columns",
    "max_verification_eta",
    "max_cond",
    "final_training_eta",
    "outcome",
    "detail",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    pub nc: u32,
    pub nd: usize,
    pub formulation: String,
    pub stabilization: String,
    /// Snapshot count `N`.
    pub n: usize,
    pub columns: usize,
    /// Empty for runs that did not converge.
    pub max_verification_eta: Option<f64>,
    pub max_cond: f64,
    pub final_training_eta: f64,
    pub outcome: String,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub row: ReportRow,
    pub trace: Option<GreedyTrace>,
    pub wall_seconds: f64,
}

fn run_cell(model: &FullOrderModel, cell: &Cell, registry: &Registry) -> Result<(ReportRow, GreedyTrace)> {
    let result = greedy_train(model, &cell.config, registry)?;
    let trace = result.trace;
    let max_verification_eta = if trace.outcome.converged() {
        let projection = registry.projection(&cell.config.formulation)?;
        Some(verify(model, &result.basis, projection.as_ref(), &cell.config, &result.training)?.max)
    } else {
        None
    };
    let row = ReportRow {
        problem: cell.spec.label(),
        nc: cell.spec.nc,
        nd: cell.spec.n_subdomains,
        formulation: cell.config.formulation.clone(),
        stabilization: cell.config.stabilization.clone(),
        n: result.basis.n_snapshots(),
        columns: result.basis.total_columns(),
        max_verification_eta,
        max_cond: trace.max_condition(),
        final_training_eta: trace.final_eta(),
        outcome: trace.outcome.label().into(),
        detail: String::new(),
    };
    Ok((row, trace))
}

/// Runs every cell in order; a failing cell yields an `error` row.
pub fn run_grid(grid: &ExperimentGrid, registry: &Registry) -> Result<Vec<CellResult>> {
    grid.validate(registry)?;
    let mut results = Vec::new();
    let mut model: Option<FullOrderModel> = None;
    for cell in grid.cells() {
        let start = Instant::now();
        if model.as_ref().is_none_or(|m| m.spec != cell.spec) {
            model = Some(FullOrderModel::build(cell.spec.clone())?);
        }
        let m = model.as_ref().expect("model built above");
        log::info!("running cell {}", cell.label());
        let (row, trace) = match run_cell(m, &cell, registry) {
            Ok((row, trace)) => (row, Some(trace)),
            Err(e) => {
                log::warn!("cell {} failed: {e}", cell.label());
                (
                    ReportRow {
                        problem: cell.spec.label(),
                        nc: cell.spec.nc,
                        nd: cell.spec.n_subdomains,
                        formulation: cell.config.formulation.clone(),
                        stabilization: cell.config.stabilization.clone(),
                        n: 0,
                        columns: 0,
                        max_verification_eta: None,
                        max_cond: f64::NAN,
                        final_training_eta: f64::NAN,
                        outcome: "error".into(),
                        detail: e.to_string(),
                    },
                    None,
                )
            }
        };
        results.push(CellResult {
            cell,
            row,
            trace,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(results)
}

pub fn write_table<W: std::io::Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<table csv>", e))?;
    Ok(())
}

pub fn read_table<R: std::io::Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
struct CellSummary<'a> {
    label: String,
    seed: u64,
    verification_seed: u64,
    trace_file: Option<String>,
    wall_seconds: f64,
    row: &'a ReportRow,
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    software: String,
    grid: &'a ExperimentGrid,
    cells: Vec<CellSummary<'a>>,
}

/// Writes `table.csv`, one trace CSV per completed cell and `summary.json`.
pub fn emit_reports(results: &[CellResult], grid: &ExperimentGrid, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let table = out_dir.join("table.csv");
    let rows: Vec<ReportRow> = results.iter().map(|r| r.row.clone()).collect();
    let file = fs::File::create(&table).map_err(|e| Error::io(&table, e))?;
    write_table(&rows, file)?;
    written.push(table);

    let mut cells = Vec::new();
    for r in results {
        let trace_file = match &r.trace {
            Some(trace) => {
                let name = format!("{}.csv", r.cell.label());
                let path = out_dir.join(&name);
                let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                trace.write_csv(file)?;
                written.push(path);
                Some(name)
            }
            None => None,
        };
        cells.push(CellSummary {
            label: r.cell.label(),
            seed: r.cell.config.seed,
            verification_seed: r.cell.config.verification_seed(),
            trace_file,
            wall_seconds: r.wall_seconds,
            row: &r.row,
        });
    }

    let summary = out_dir.join("summary.json");
    crate::io::write_json(
        &summary,
        &Summary {
            software: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            grid,
            cells,
        },
    )?;
    written.push(summary);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_meshes_give_eight_cells() {
        let grid = ExperimentGrid {
            ncs: vec![3, 4],
            n_subdomains: vec![3],
            ..ExperimentGrid::default()
        };
        let cells = grid.cells();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].label(), "diffusion_3_3_galerkin_supremizer");
        assert!(grid.validate(&Registry::default()).is_ok());
    }

    #[test]
    fn fine_meshes_are_opt_in() {
        let mut grid = ExperimentGrid {
            ncs: vec![6],
            ..ExperimentGrid::default()
        };
        assert!(matches!(grid.validate(&Registry::default()), Err(Error::Config(_))));
        grid.allow_fine = true;
        assert!(grid.validate(&Registry::default()).is_ok());
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_table(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), REPORT_HEADER.join(",") + "\n");
    }

    #[test]
    fn table_round_trips() {
        let rows = vec![
            ReportRow {
                problem: "diffusion".into(),
                nc: 3,
                nd: 3,
                formulation: "galerkin".into(),
                stabilization: "aggregation".into(),
                n: 8,
                columns: 40,
                max_verification_eta: Some(4.2e-14),
                max_cond: 4.7e4,
                final_training_eta: 3.1e-8,
                outcome: "converged".into(),
                detail: String::new(),
            },
            ReportRow {
                problem: "diffusion".into(),
                nc: 6,
                nd: 3,
                formulation: "pg".into(),
                stabilization: "supremizer".into(),
                n: 200,
                columns: 600,
                max_verification_eta: None,
                max_cond: 1.0 / 3.0,
                final_training_eta: f64::INFINITY,
                outcome: "failed_to_converge".into(),
                detail: "cap, reached".into(),
            },
        ];
        let mut buf = Vec::new();
        write_table(&rows, &mut buf).unwrap();
        assert_eq!(read_table(buf.as_slice()).unwrap(), rows);
    }
}
