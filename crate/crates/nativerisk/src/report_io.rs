//! Report serialization: canonical JSON, the CVE log file and stats CSV.

use std::io::Write;

use nativerisk_core::report::{AppReport, StatsTable};
use serde_json::Value;

/// JSON Schema for [`emit_app_report`] output.
pub const APP_REPORT_SCHEMA: &str = include_str!("../schema/app_report.schema.json");

fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, sort_keys(v)))
                    .collect(),
            )
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Pretty JSON with object keys sorted at every level and a final newline.
pub fn canonical_json<T: serde::Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&sort_keys(serde_json::to_value(value)?))?;
    out.push(b'\n');
    Ok(out)
}

pub fn emit_app_report(report: &AppReport) -> Vec<u8> {
    canonical_json(report).expect("reports always serialize")
}

pub fn parse_app_report(bytes: &[u8]) -> serde_json::Result<AppReport> {
    serde_json::from_slice(bytes)
}

pub fn emit_cve_log(reports: &[AppReport]) -> Vec<u8> {
    nativerisk_core::report::emit_cve_log(reports).into_bytes()
}

/// `key,none,low,medium,high,critical`, one row per group in key order.
pub fn write_stats_csv<W: Write>(table: &StatsTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "none", "low", "medium", "high", "critical"])?;
    for (key, counts) in &table.rows {
        let mut record = vec![key.clone()];
        record.extend(counts.iter().map(u64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn stats_csv(table: &StatsTable) -> Vec<u8> {
    let mut buf = Vec::new();
    write_stats_csv(table, &mut buf).expect("writing to a Vec cannot fail");
    buf
}
