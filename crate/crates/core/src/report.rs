//! Report emission: versioned JSON documents and plot-ready CSV traces.
//!
//! Reports are byte-deterministic for identical inputs; wall-clock metadata
//! goes to a separate sidecar file that is excluded from comparisons.

use crate::dynamics::GrowthReport;
use crate::error::Result;
use crate::funcspace::CompactGrid;
use num_complex::Complex64;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct ReportDocument<T: Serialize> {
    pub schema_version: u32,
    pub command: String,
    pub results: T,
}

impl<T: Serialize> ReportDocument<T> {
    pub fn new(command: impl Into<String>, results: T) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }
}

/// Doubles formatted with 17 significant digits: enough for bit-faithful
/// round-trips.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn complex_cells(v: Complex64) -> String {
    format!("{},{}", format_f64(v.re), format_f64(v.im))
}

/// One point per row, columns `x_0..x_{d-1}`.
pub fn grid_csv(grid: &CompactGrid) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..grid.dim).map(|i| format!("x_{i}")).collect();
    let _ = writeln!(out, "{}", header.join(","));
    for p in &grid.points {
        let row: Vec<String> = p.iter().map(|&v| format_f64(v)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Per-iterate growth trace: `m, gamma_hat, log_gamma_hat`.
pub fn growth_trace_csv(report: &GrowthReport) -> String {
    let mut out = String::from("m,gamma_hat,log_gamma_hat\n");
    for (i, (v, lg)) in report.values.iter().zip(&report.log_values).enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, format_f64(*v), format_f64(*lg));
    }
    out
}

/// Sampled iterate values of one field over a probe grid:
/// `m, point_index, value_re, value_im`.
pub fn iterate_trace_csv(samples: &[(usize, usize, Complex64)]) -> String {
    let mut out = String::from("m,point_index,value_re,value_im\n");
    for (m, idx, v) in samples {
        let _ = writeln!(out, "{m},{idx},{}", complex_cells(*v));
    }
    out
}

/// Semigroup evolution trace: `t, point_index, value_re, value_im`.
pub fn evolution_trace_csv(samples: &[(f64, usize, Complex64)]) -> String {
    let mut out = String::from("t,point_index,value_re,value_im\n");
    for (t, idx, v) in samples {
        let _ = writeln!(out, "{},{idx},{}", format_f64(*t), complex_cells(*v));
    }
    out
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

/// Timestamp sidecar, kept out of the deterministic report body.
pub fn write_meta_sidecar(path: &Path) -> Result<()> {
    let seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({ "generated_unix_seconds": seconds });
    write_text(path, &format!("{meta}\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::Domain;

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            2f64.powi(61) + 1.0,
        ] {
            let text = format_f64(v);
            assert_eq!(text.parse::<f64>().unwrap(), v, "text {text}");
        }
    }

    #[test]
    fn grid_csv_shape() {
        let domain = Domain::euclidean(2);
        let grid = CompactGrid::box_grid(&domain, &[0.0, 0.0], &[1.0, 1.0], 0.5);
        let csv = grid_csv(&grid);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x_0,x_1");
        assert_eq!(lines.len(), grid.len() + 1);
    }

    #[test]
    fn report_document_is_versioned() {
        let doc = ReportDocument::new("catalog", serde_json::json!({"ok": true}));
        let text = doc.to_json();
        assert!(text.contains("\"schema_version\": 1"));
        assert!(text.ends_with('\n'));
    }
}
