use std::collections::HashMap;
use std::fs;

use chanalloc::experiment::{
    emit_results, mean_std, run_experiment, write_csv, ExperimentKind, ExperimentSpec, MRule, RealizationRow, ResultSet,
    CSV_COLUMNS,
};
use chanalloc::Error;
use serde_json::Value;

fn convergence_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(ExperimentKind::Convergence, vec![8, 12]);
    spec.m = vec![MRule::Fixed(3), MRule::CeilCLnN(1.5)];
    spec.t_max = 60;
    spec.tau = 20;
    spec.realizations = 4;
    spec.seed = 17;
    spec
}

fn emit(results: &ResultSet) -> (String, String) {
    let dir = tempfile::tempdir().unwrap();
    let (csv, jsonl) = (dir.path().join("r.csv"), dir.path().join("r.jsonl"));
    emit_results(results, &csv, &jsonl).unwrap();
    (fs::read_to_string(csv).unwrap(), fs::read_to_string(jsonl).unwrap())
}

// NaN metrics compare unequal, so rows are compared through their Debug form
fn debug(rows: &[RealizationRow]) -> String {
    format!("{rows:?}")
}

#[test]
fn identical_specs_give_identical_files() {
    let spec = convergence_spec();
    let a = emit(&run_experiment(&spec).unwrap());
    let b = emit(&run_experiment(&spec).unwrap());
    assert_eq!(a, b);
}

#[test]
fn csv_has_fixed_columns_and_one_row_per_metric() {
    let results = run_experiment(&convergence_spec()).unwrap();
    let (csv, _) = emit(&results);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    let metrics = results.points[0].aggregates.len();
    assert_eq!(rows.len(), results.points.len() * metrics);
    assert!(rows.iter().all(|r| r.split(',').count() == CSV_COLUMNS.len()));
}

#[test]
fn empty_result_set_writes_only_the_header() {
    let empty = ResultSet {
        experiment: ExperimentKind::Convergence,
        realizations: 1,
        points: Vec::new(),
    };
    let mut out = Vec::new();
    write_csv(&empty, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
}

#[test]
fn aggregates_can_be_recomputed_from_jsonl() {
    let (csv, jsonl) = emit(&run_experiment(&convergence_spec()).unwrap());
    let mut values: HashMap<(u64, u64, String), Vec<f64>> = HashMap::new();
    for line in jsonl.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema_version"], 1);
        let key = |metric: &str| (v["n"].as_u64().unwrap(), v["m"].as_u64().unwrap(), metric.to_string());
        for (metric, x) in v["metrics"].as_object().unwrap() {
            values.entry(key(metric)).or_default().push(x.as_f64().unwrap_or(f64::NAN));
        }
    }
    for row in csv.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        let key = (f[1].parse().unwrap(), f[3].parse().unwrap(), f[9].to_string());
        let (mean, std, _) = mean_std(&values[&key]);
        let (emitted_mean, emitted_std): (f64, f64) = (f[10].parse().unwrap(), f[11].parse().unwrap());
        for (a, b) in [(mean, emitted_mean), (std, emitted_std)] {
            assert!((a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-9, "{row}: {a} vs {b}");
        }
    }
}

#[test]
fn grid_points_do_not_depend_on_each_other() {
    let spec = convergence_spec();
    let full = run_experiment(&spec).unwrap();
    let mut reversed = spec.clone();
    reversed.n.reverse();
    reversed.m.reverse();
    let rev = run_experiment(&reversed).unwrap();
    for gp in &full.points {
        let twin = rev
            .points
            .iter()
            .find(|o| o.point.n == gp.point.n && o.point.m_rule == gp.point.m_rule)
            .unwrap();
        assert_eq!(debug(&gp.rows), debug(&twin.rows));
    }
}

#[test]
fn realization_results_do_not_depend_on_the_count() {
    let mut short = convergence_spec();
    short.realizations = 2;
    let (a, b) = (run_experiment(&short).unwrap(), run_experiment(&convergence_spec()).unwrap());
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(debug(&x.rows[..]), debug(&y.rows[..2]));
    }
}

#[test]
fn unwritable_paths_are_reported() {
    let results = run_experiment(&convergence_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("r.csv");
    match emit_results(&results, &bad, &dir.path().join("r.jsonl")) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("missing")),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}

#[test]
fn over_budget_points_fail_alone() {
    let mut spec = ExperimentSpec::new(ExperimentKind::PpoaSmall, vec![3, 6]);
    spec.m = vec![MRule::Fixed(2)];
    spec.realizations = 2;
    spec.enumeration_budget = 1_000;
    let results = run_experiment(&spec).unwrap();
    assert!(results.points[0].error.is_none());
    assert!(results.points[1].error.as_deref().unwrap().contains("budget"));
    let (_, jsonl) = emit(&results);
    assert!(jsonl.lines().any(|l| l.contains("\"error\"")));
}

#[test]
fn toml_manifests_parse_and_validate() {
    let spec = ExperimentSpec::from_toml_str(
        r#"
        experiment = "snr_sweep"
        n = [20]
        m = [{ ceil_c_ln_n = 3.0 }, { fixed = 5 }]
        snr_db = [-10.0, 25.0]
        realizations = 3
        seed = 9

        [weights]
        min = 0.5
        max = 2.0
        "#,
    )
    .unwrap();
    assert_eq!(spec.grid().len(), 4);
    assert_eq!(spec.grid()[0].m, 9);
    assert!(ExperimentSpec::from_toml_str("experiment = \"convergence\"\nn = [4]\nbogus = 1").is_err());
    let empty = ExperimentSpec::from_toml_str("experiment = \"convergence\"\nn = []").unwrap();
    assert!(empty.validate().is_err());
}

#[test]
fn small_analysis_experiments_run_end_to_end() {
    for kind in [
        ExperimentKind::Lemma1Check,
        ExperimentKind::MatchingCheck,
        ExperimentKind::PpoaSmall,
        ExperimentKind::FpEquivalence,
    ] {
        let mut spec = ExperimentSpec::new(kind, vec![3]);
        spec.m = vec![MRule::Fixed(2)];
        spec.realizations = 3;
        spec.t_max = 30;
        let results = run_experiment(&spec).unwrap();
        let gp = &results.points[0];
        assert!(gp.error.is_none(), "{kind}: {:?}", gp.error);
        assert_eq!(gp.rows.len(), 3);
    }
}
