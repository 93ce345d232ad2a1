use lakeopt_core::dataset::CsvSchema;
use lakeopt_core::pipeline::{fit_pipeline_scaler, RUNOFF_INPUTS};
use lakeopt_core::*;
use tempfile::TempDir;

#[test]
fn synthetic_record_through_files_and_stage1() {
    let dir = TempDir::new().unwrap();
    let ds = synthesize_dataset(&FeatureStats::reference(), 19, 42).unwrap();
    let csv = dir.path().join("record.csv");
    save_csv(&ds, &csv).unwrap();
    let loaded = load_csv(&csv, &CsvSchema::default()).unwrap();
    assert_eq!(loaded.records(), ds.records());

    let cfg = PipelineConfig::default();
    let stage1 = run_stage1(&loaded, &cfg).unwrap();
    let mut top = stage1.sensitivity.ranking.top(2).to_vec();
    top.sort();
    assert_eq!(top, ["G", "R"]);
    assert_eq!(stage1.sensitivity.ranking.order[2], "E");
    assert_eq!(stage1.sensitivity.ranking.morris_order[2], "E");
    assert_eq!(stage1.sensitivity.sobol.first_order.len(), 6);
    assert!(stage1.sensitivity.sobol.converged);
    assert_eq!(stage1.sensitivity.morris.trajectories, 100);

    let path = dir.path().join("model.json");
    save_model(&stage1.model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let x = [0.2, 0.4, 0.6, 0.8, 0.1, 0.3];
    assert_eq!(
        back.forward(&x).unwrap().to_bits(),
        stage1.model.forward(&x).unwrap().to_bits()
    );
}

#[test]
fn rearranged_pairs_track_the_record() {
    let ds = synthesize_dataset(&FeatureStats::reference(), 5, 9).unwrap();
    let scaler = fit_pipeline_scaler(&ds).unwrap();
    let pairs = rearrange(&ds, &scaler).unwrap();
    assert_eq!(pairs.len(), ds.len());
    for (rec, x) in ds.records().iter().zip(&pairs.inputs) {
        let want = scaler.apply_record(rec, &RUNOFF_INPUTS).unwrap();
        assert_eq!(x, &want);
    }
}

#[test]
fn full_pipeline_is_repeatable() {
    let ds = synthesize_dataset(&FeatureStats::reference(), 19, 42).unwrap();
    let mut cfg = PipelineConfig::default().with_seed(11);
    cfg.model_i.epochs = 400;
    cfg.model_ii.epochs = 400;
    let a = run_pipeline(&ds, &cfg).unwrap();
    let b = run_pipeline(&ds, &cfg).unwrap();
    assert_eq!(a.to_json().to_string(), b.to_json().to_string());
    assert_eq!(a.plan.months.len(), 12);
    for m in &a.plan.months {
        assert!(m.r_hist_mean > 0.0);
        assert!(m.multiplier.unwrap() > 0.0);
        assert_eq!(m.solutions.len(), 3);
    }
    let filling: f64 = pipeline::FILLING_MONTHS
        .iter()
        .map(|m| a.plan.months[*m as usize - 1].r_star)
        .sum();
    let hist: f64 = pipeline::FILLING_MONTHS
        .iter()
        .map(|m| a.plan.months[*m as usize - 1].r_hist_mean)
        .sum();
    assert_eq!(a.seasonal.filling, filling / hist);
}
