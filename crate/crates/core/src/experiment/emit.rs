use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{GridPoint, ResultSet};
use crate::error::{Error, Result};

/// Bumped whenever a column or JSONL field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 12] = [
    "experiment",
    "n",
    "k",
    "m",
    "snr_db",
    "alpha",
    "tau",
    "t_max",
    "realizations",
    "metric",
    "mean",
    "std",
];

/// One row per grid point and metric with the mean and sample standard
/// deviation over realizations. Grid points that failed contribute no rows.
pub fn write_csv<W: Write>(results: &ResultSet, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for gp in &results.points {
        let p = &gp.point;
        for a in &gp.aggregates {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                results.experiment,
                p.n,
                p.k,
                p.m,
                p.snr_db,
                p.alpha,
                p.tau,
                p.t_max,
                results.realizations,
                a.metric,
                a.mean,
                a.std
            )?;
        }
    }
    out.flush()
}

fn point_fields(experiment: &str, p: &GridPoint) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("experiment".into(), json!(experiment));
    m.insert("n".into(), json!(p.n));
    m.insert("k".into(), json!(p.k));
    m.insert("m".into(), json!(p.m));
    m.insert("m_rule".into(), json!(p.m_rule.to_string()));
    m.insert("snr_db".into(), json!(p.snr_db));
    m.insert("alpha".into(), json!(p.alpha));
    m.insert("tau".into(), json!(p.tau));
    m.insert("t_max".into(), json!(p.t_max));
    m
}

/// One JSON object per realization (non-finite metrics become `null`), plus
/// one `error` object per failed grid point.
pub fn write_jsonl<W: Write>(results: &ResultSet, mut out: W) -> std::io::Result<()> {
    let experiment = results.experiment.name();
    for gp in &results.points {
        if let Some(err) = &gp.error {
            let mut obj = point_fields(experiment, &gp.point);
            obj.insert("error".into(), json!(err));
            serde_json::to_writer(&mut out, &Value::Object(obj))?;
            out.write_all(b"\n")?;
        }
        for row in &gp.rows {
            let mut obj = point_fields(experiment, &gp.point);
            obj.insert("realization".into(), json!(row.realization));
            obj.insert("seed".into(), json!(row.seed));
            let metrics: Map<String, Value> = row
                .metrics
                .iter()
                .map(|&(k, v)| (k.to_string(), json!(v)))
                .collect();
            obj.insert("metrics".into(), Value::Object(metrics));
            serde_json::to_writer(&mut out, &Value::Object(obj))?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()
}

/// Write the aggregate CSV and the per-realization JSONL.
pub fn emit_results(results: &ResultSet, csv_path: &Path, jsonl_path: &Path) -> Result<()> {
    let create = |path: &Path| {
        File::create(path)
            .map(BufWriter::new)
            .map_err(|e| Error::io(path, e))
    };
    write_csv(results, create(csv_path)?).map_err(|e| Error::io(csv_path, e))?;
    write_jsonl(results, create(jsonl_path)?).map_err(|e| Error::io(jsonl_path, e))?;
    Ok(())
}
