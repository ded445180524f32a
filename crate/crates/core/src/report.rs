//! Rendering of run reports: parse a metrics CSV back into rows and print a
//! per-configuration table (mean ops/call, mean throughput, benefit vs
//! generic). The summary is derived from the CSV rows alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed metrics CSV: {0}")]
    Malformed(String),
    #[error("no metrics found in {0}")]
    Empty(String),
}

/// One parsed metrics row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub window_id: u64,
    pub config_id: String,
    pub calls: u64,
    pub total_ops: u64,
    pub throughput: Option<f64>,
    pub guard_failures: u64,
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, ReportError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ReportError::Malformed("empty file".into()))?;
    if header != crate::telemetry::MetricWindow::CSV_HEADER {
        return Err(ReportError::Malformed(format!(
            "unexpected header `{header}`"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(ReportError::Malformed(format!(
                "row {}: expected 6 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let parse_u64 = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|_| ReportError::Malformed(format!("row {}: bad {what} `{s}`", i + 2)))
        };
        rows.push(MetricsRow {
            window_id: parse_u64(fields[0], "window_id")?,
            config_id: fields[1].to_string(),
            calls: parse_u64(fields[2], "calls")?,
            total_ops: parse_u64(fields[3], "total_ops")?,
            throughput: if fields[4].is_empty() {
                None
            } else {
                Some(fields[4].parse::<f64>().map_err(|_| {
                    ReportError::Malformed(format!("row {}: bad throughput", i + 2))
                })?)
            },
            guard_failures: parse_u64(fields[5], "guard_failures")?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
struct ConfigSummary {
    calls: u64,
    total_ops: u64,
    throughput_sum: f64,
    throughput_windows: u64,
}

/// Render the per-config table: `config, mean ops/call, throughput,
/// benefit% vs generic` where benefit is `generic_ops/config_ops - 1`.
pub fn render_report(rows: &[MetricsRow]) -> String {
    let mut per_config: BTreeMap<String, ConfigSummary> = BTreeMap::new();
    for row in rows {
        let entry = per_config
            .entry(row.config_id.clone())
            .or_insert(ConfigSummary {
                calls: 0,
                total_ops: 0,
                throughput_sum: 0.0,
                throughput_windows: 0,
            });
        entry.calls += row.calls;
        entry.total_ops += row.total_ops;
        if let Some(t) = row.throughput {
            entry.throughput_sum += t;
            entry.throughput_windows += 1;
        }
    }
    let generic_ops_per_call = per_config
        .get("generic")
        .filter(|s| s.calls > 0)
        .map(|s| s.total_ops as f64 / s.calls as f64);

    let mut out = String::new();
    writeln!(
        out,
        "{:<40} {:>14} {:>14} {:>12}",
        "config", "mean ops/call", "throughput", "benefit"
    )
    .unwrap();
    for (config, s) in &per_config {
        if s.calls == 0 {
            continue;
        }
        let ops_per_call = s.total_ops as f64 / s.calls as f64;
        let throughput = if s.throughput_windows > 0 {
            format!("{:.4}", s.throughput_sum / s.throughput_windows as f64)
        } else {
            "-".to_string()
        };
        // Benefit relative to generic on the same stream: how much more work
        // per call the generic code did.
        let benefit = match (generic_ops_per_call, config.as_str()) {
            (Some(g), c) if c != "generic" && ops_per_call > 0.0 => {
                format!("{:+.1}%", (g / ops_per_call - 1.0) * 100.0)
            }
            (Some(_), _) => "0.0%".to_string(),
            (None, _) => "-".to_string(),
        };
        writeln!(
            out,
            "{config:<40} {ops_per_call:>14.2} {throughput:>14} {benefit:>12}"
        )
        .unwrap();
    }
    out
}

/// Load `metrics.csv` from a directory and render the table.
pub fn report_dir(dir: &Path) -> Result<String, ReportError> {
    let path = dir.join("metrics.csv");
    if !path.exists() {
        return Err(ReportError::Empty(dir.display().to_string()));
    }
    let rows = parse_metrics_csv(&std::fs::read_to_string(path)?)?;
    if rows.is_empty() {
        return Err(ReportError::Empty(dir.display().to_string()));
    }
    Ok(render_report(&rows))
}
