use rbctrl::greedy::verify;
use rbctrl::io::{load_basis, load_snapshots, save_basis, save_snapshots};
use rbctrl::report::{emit_reports, read_table, run_grid, ExperimentGrid};
use rbctrl::{greedy_train, Error, FullOrderModel, GreedyConfig, ProblemSpec, Registry};

fn config(formulation: &str, stabilization: &str) -> GreedyConfig {
    GreedyConfig {
        n_max: 200,
        formulation: formulation.into(),
        stabilization: stabilization.into(),
        verification_size: 100,
        threads: Some(1),
        ..GreedyConfig::for_family(rbctrl::fem::ProblemFamily::Graetz)
    }
}

#[test]
fn trained_basis_survives_a_round_trip_through_disk() {
    let model = FullOrderModel::build(ProblemSpec::graetz(3)).unwrap();
    let registry = Registry::default();
    let cfg = config("galerkin", "aggregation");
    let result = greedy_train(&model, &cfg, &registry).unwrap();
    assert!(result.trace.outcome.converged());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/basis.json");
    save_basis(&path, &result.basis).unwrap();
    let back = load_basis(&path, Some(&model.fingerprint())).unwrap();
    assert_eq!(back, result.basis);
    let snaps = dir.path().join("snaps.json");
    save_snapshots(&snaps, &model.fingerprint(), &result.snapshots).unwrap();
    assert_eq!(load_snapshots(&snaps, None).unwrap(), result.snapshots);

    let projection = registry.projection("galerkin").unwrap();
    let original = verify(&model, &result.basis, projection.as_ref(), &cfg, &result.training).unwrap();
    let reloaded = verify(&model, &back, projection.as_ref(), &cfg, &result.training).unwrap();
    assert_eq!(original, reloaded);
    assert_eq!(original.etas.len(), cfg.verification_size);

    let other = FullOrderModel::build(ProblemSpec::graetz(2)).unwrap();
    assert!(matches!(
        load_basis(&path, Some(&other.fingerprint())),
        Err(Error::FingerprintMismatch { .. })
    ));
}

#[test]
fn every_formulation_and_stabilization_trains() {
    let model = FullOrderModel::build(ProblemSpec::graetz(2)).unwrap();
    let registry = Registry::default();
    for form in registry.projection_names() {
        for stab in ["supremizer", "aggregation"] {
            let r = greedy_train(&model, &config(form, stab), &registry).unwrap();
            assert!(r.trace.outcome.converged(), "{form}/{stab}");
            assert_eq!(r.basis.n_snapshots(), r.snapshots.len());
            assert!(r.basis.orthonormality_defect() <= 1e-10);
        }
    }
}

#[test]
fn grid_reports_round_trip_and_name_traces_by_cell() {
    let grid = ExperimentGrid {
        problem: rbctrl::fem::ProblemFamily::Diffusion,
        ncs: vec![2],
        n_subdomains: vec![1, 3],
        formulations: vec!["galerkin".into()],
        stabilizations: vec!["supremizer".into(), "aggregation".into()],
        n_max: 100,
        verification_size: 20,
        threads: Some(1),
        ..ExperimentGrid::default()
    };
    let results = run_grid(&grid, &Registry::default()).unwrap();
    assert_eq!(results.len(), 4);
    let dir = tempfile::tempdir().unwrap();
    emit_reports(&results, &grid, dir.path()).unwrap();
    let rows = read_table(std::fs::File::open(dir.path().join("table.csv")).unwrap()).unwrap();
    let expected: Vec<_> = results.iter().map(|r| r.row.clone()).collect();
    assert_eq!(rows, expected);
    for r in &results {
        let trace = std::fs::read_to_string(dir.path().join(format!("{}.csv", r.cell.label()))).unwrap();
        let t = r.trace.as_ref().unwrap();
        assert_eq!(trace.lines().count(), t.iterations() + 2);
        assert_eq!(t.final_eta(), r.row.final_training_eta);
    }
    assert!(dir.path().join("diffusion_2_1_galerkin_aggregation.csv").exists());
}
