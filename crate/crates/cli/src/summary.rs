//! Plot-ready tables: one row per (experiment, parameter point).

use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::path::Path;

use crate::{HarnessError, RunRecord};

#[derive(Debug, Clone, Copy)]
enum Source {
    Param(&'static str),
    Mean(&'static str),
    Low(&'static str),
    High(&'static str),
    Status,
}

/// Column schema per experiment kind. A record becomes a row when it has the
/// first column; experiment-level records without it are left out.
fn schema(experiment: &str) -> Vec<(&'static str, Source)> {
    use Source::*;
    match experiment {
        "diffusivity-scan" => vec![
            ("lambda_hat", Param("lambda_hat")),
            ("nu_hat", Mean("nu_hat")),
            ("ci_low", Low("nu_hat")),
            ("ci_high", High("nu_hat")),
            ("nu_eff_predicted", Param("nu_eff_predicted")),
            ("formula_status", Param("formula_status")),
            ("cutoff", Param("cutoff")),
            ("dt", Param("dt")),
            ("status", Status),
        ],
        "weak-coupling-2d" => vec![
            ("cutoff", Param("cutoff")),
            ("lambda_hat", Param("lambda_hat")),
            ("nu_hat", Mean("nu_hat")),
            ("ci_low", Low("nu_hat")),
            ("ci_high", High("nu_hat")),
            ("nu_eff_predicted", Param("nu_eff_predicted")),
            ("deviation", Mean("deviation_from_limit")),
            ("dt", Param("dt")),
            ("status", Status),
        ],
        "vartheta-limit" => vec![
            ("cutoff", Param("cutoff")),
            ("k", Param("k")),
            ("vartheta", Mean("vartheta")),
            ("theta_1", Mean("theta_1")),
            ("theta_1_plus_1_over_n", Mean("theta_1_plus_1_over_n")),
            ("limit", Mean("limit")),
        ],
        "triviality-scan" => vec![
            ("cutoff", Param("cutoff")),
            ("theta", Param("theta")),
            ("second_moment", Mean("second_moment")),
            ("ci_low", Low("second_moment")),
            ("ci_high", High("second_moment")),
            ("dt", Param("dt")),
            ("steps", Param("steps")),
            ("ensemble", Param("ensemble")),
        ],
        "invariance" => vec![
            ("mode", Param("mode")),
            ("component", Param("component")),
            ("exact_power", Param("exact_power")),
            ("power_final", Mean("power_final")),
            ("ci_low", Low("power_final")),
            ("ci_high", High("power_final")),
            ("ks_pvalue", Mean("ks_pvalue")),
        ],
        "noise-equivalence" => vec![
            ("mode", Param("mode")),
            ("trace_empirical", Mean("trace_empirical")),
            ("trace_exact", Mean("trace_exact")),
        ],
        _ => vec![("experiment", Param("experiment")), ("status", Status)],
    }
}

fn lookup(r: &RunRecord, src: Source) -> Value {
    let obs = |n: &str| r.observable(n);
    match src {
        Source::Param("experiment") => Value::from(r.experiment.as_str()),
        Source::Param(k) => r.point.get(k).cloned().unwrap_or(Value::Null),
        Source::Mean(n) => obs(n).map_or(Value::Null, |o| Value::from(o.mean)),
        Source::Low(n) => obs(n).and_then(|o| o.ci_low).map_or(Value::Null, Value::from),
        Source::High(n) => obs(n).and_then(|o| o.ci_high).map_or(Value::Null, Value::from),
        Source::Status => serde_json::to_value(r.status).unwrap_or(Value::Null),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

/// Tables keyed by experiment name, rows in record order.
pub fn tables(records: &[RunRecord]) -> BTreeMap<String, Table> {
    let mut out: BTreeMap<String, Table> = BTreeMap::new();
    for r in records {
        let cols = schema(&r.experiment);
        let row: Vec<Value> = cols.iter().map(|&(_, s)| lookup(r, s)).collect();
        if row[0].is_null() {
            continue;
        }
        out.entry(r.experiment.clone())
            .or_insert_with(|| Table {
                experiment: r.experiment.clone(),
                columns: cols.iter().map(|(h, _)| h.to_string()).collect(),
                rows: Vec::new(),
            })
            .rows
            .push(row);
    }
    out
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(xs) => xs.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

/// CSV with an `experiment` column first; nulls become empty cells.
pub fn write_csv<W: std::io::Write>(w: W, table: &Table) -> Result<(), HarnessError> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["experiment".to_string()];
    header.extend(table.columns.iter().cloned());
    csv.write_record(&header).map_err(csv_err)?;
    for row in &table.rows {
        let mut cells = vec![table.experiment.clone()];
        cells.extend(row.iter().map(cell));
        csv.write_record(&cells).map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}

/// One JSON object per row with explicit nulls.
pub fn write_ndjson<W: std::io::Write>(mut w: W, table: &Table) -> Result<(), HarnessError> {
    for row in &table.rows {
        let mut obj = Map::new();
        obj.insert("experiment".into(), Value::from(table.experiment.as_str()));
        for (c, v) in table.columns.iter().zip(row) {
            obj.insert(c.clone(), v.clone());
        }
        writeln!(w, "{}", Value::Object(obj))?;
    }
    Ok(())
}

/// Writes every table of `records` to a single CSV file (tables separated by a blank line).
pub fn write_csv_file(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::new();
    for (i, t) in tables(records).values().enumerate() {
        if i > 0 {
            buf.push(b'\n');
        }
        write_csv(&mut buf, t)?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}
