//! File outputs: the time-series CSV and the structured report. Both are
//! written with shortest round-trip float formatting so reruns of the same
//! config are byte-identical.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::analysis::{BoundReport, VerdictReport};
use crate::sweep::SweepOutcome;

/// Shortest representation that parses back to the same f64.
pub fn fmt_csv(v: f64) -> String {
    format!("{v}")
}

/// Same, but always a valid TOML float token.
pub fn fmt_toml(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains('E') {
        s
    } else {
        format!("{s}.0")
    }
}

fn toml_f64_array(values: impl Iterator<Item = f64>) -> String {
    let items: Vec<String> = values.map(fmt_toml).collect();
    format!("[{}]", items.join(", "))
}

fn toml_bool_array(values: &[bool]) -> String {
    let items: Vec<String> = values.iter().map(|b| b.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// One assembled output row of the time series.
pub struct SeriesRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub energy: f64,
    pub envelope: f64,
    pub residuals: Vec<f64>,
}

/// Builds the per-step row sequence covering both phases: the partition
/// records carry geometry and masses, the residual series extends past the
/// partition with frozen geometry.
pub fn assemble_rows(outcome: &SweepOutcome, report: &BoundReport) -> Vec<SeriesRow> {
    let records = &outcome.history.records;
    let n_steps = outcome.residual_series.len();
    let mut rows = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let (t, e) = &outcome.residual_series[k];
        let rec = if k < records.len() {
            &records[k]
        } else {
            records.last().unwrap()
        };
        let envelope = if k < report.iss_envelope.len() {
            report.iss_envelope[k].1
        } else {
            report.iss_envelope.last().map(|&(_, v)| v).unwrap_or(0.0)
        };
        rows.push(SeriesRow {
            t: *t,
            x: rec.x.clone(),
            m: rec.m.clone(),
            energy: rec.energy,
            envelope,
            residuals: e.clone(),
        });
    }
    rows
}

/// Indices written to the CSV: every `stride`-th row, the partition-end row,
/// and the final row.
pub fn strided_indices(total: usize, partition_rows: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..total).step_by(stride.max(1)).collect();
    if partition_rows > 0 && partition_rows <= total {
        idx.push(partition_rows - 1);
    }
    if total > 0 {
        idx.push(total - 1);
    }
    idx.sort_unstable();
    idx.dedup();
    idx
}

pub fn write_timeseries(
    path: &Path,
    rows: &[SeriesRow],
    indices: &[usize],
    n: usize,
) -> io::Result<()> {
    let mut out = String::new();
    out.push('t');
    for i in 0..=n {
        let _ = write!(out, ",x_{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",m_{i}");
    }
    out.push_str(",H,envelope");
    for i in 1..=n {
        let _ = write!(out, ",e_{i}");
    }
    out.push('\n');
    for &k in indices {
        let row = &rows[k];
        let _ = write!(out, "{}", fmt_csv(row.t));
        for v in &row.x {
            let _ = write!(out, ",{}", fmt_csv(*v));
        }
        for v in &row.m {
            let _ = write!(out, ",{}", fmt_csv(*v));
        }
        let _ = write!(out, ",{},{}", fmt_csv(row.energy), fmt_csv(row.envelope));
        for v in &row.residuals {
            let _ = write!(out, ",{}", fmt_csv(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)
}

pub fn write_report(
    path: &Path,
    outcome: &SweepOutcome,
    report: &BoundReport,
    verdict: &VerdictReport,
    rows: &[SeriesRow],
    indices: &[usize],
) -> io::Result<()> {
    let text = render_report(outcome, report, verdict, rows, indices);
    std::fs::write(path, text)
}

pub fn render_report(
    outcome: &SweepOutcome,
    report: &BoundReport,
    verdict: &VerdictReport,
    rows: &[SeriesRow],
    indices: &[usize],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "n = {}", report.n);
    let _ = writeln!(s, "q = {}", report.q);
    let _ = writeln!(s, "t_p = {}", fmt_toml(outcome.t_p));
    let _ = writeln!(s, "t_star = {}", fmt_toml(outcome.t_star));
    let _ = writeln!(s, "t_actual = {}", fmt_toml(outcome.t_actual));
    let _ = writeln!(s, "delta_t = {}", fmt_toml(outcome.delta_t));
    let _ = writeln!(
        s,
        "finish_times = {}",
        toml_f64_array(outcome.finish_times.iter().copied())
    );
    let _ = writeln!(
        s,
        "masses_at_t_p = {}",
        toml_f64_array(outcome.masses_at_tp.iter().copied())
    );
    let _ = writeln!(
        s,
        "assumption_violated = {}",
        toml_bool_array(&outcome.assumption_violated)
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "[bounds]");
    let _ = writeln!(s, "h0 = {}", fmt_toml(report.h0));
    let _ = writeln!(s, "xi = {}", fmt_toml(report.xi));
    let _ = writeln!(s, "lambda_min = {}", fmt_toml(report.spectral.lambda_min));
    let _ = writeln!(s, "lambda_max = {}", fmt_toml(report.spectral.lambda_max));
    let _ = writeln!(s, "delta_t_bound = {}", fmt_toml(report.delta_t_bound));
    let _ = writeln!(
        s,
        "delta_t_bound_corrected = {}",
        fmt_toml(report.delta_t_bound_corrected)
    );
    if let Some(rect) = report.rect_bound {
        let _ = writeln!(s, "rect_bound = {}", fmt_toml(rect));
    }
    let _ = writeln!(
        s,
        "collision_threshold = {}",
        fmt_toml(report.collision_threshold)
    );
    let _ = writeln!(s, "envelope_slack = {}", fmt_toml(report.envelope_slack));
    let _ = writeln!(s);
    let _ = writeln!(s, "[verdict]");
    let _ = writeln!(s, "all_pass = {}", verdict.all_pass());
    let checks = [
        ("envelope", &verdict.envelope),
        ("sandwich", &verdict.sandwich),
        ("norm_bound", &verdict.norm_bound),
        ("deviation_bound", &verdict.deviation_bound),
        ("spacing", &verdict.spacing),
    ];
    for (name, check) in checks {
        let _ = writeln!(s, "{name} = {}", check.pass);
    }
    for (name, check) in checks {
        if let Some((t, detail)) = &check.first_violation {
            let _ = writeln!(s, "{name}_first_violation_t = {}", fmt_toml(*t));
            let _ = writeln!(s, "{name}_first_violation = {:?}", detail);
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[series]");
    let _ = writeln!(
        s,
        "t = {}",
        toml_f64_array(indices.iter().map(|&k| rows[k].t))
    );
    let _ = writeln!(
        s,
        "zeta = {}",
        toml_f64_array(indices.iter().map(|&k| {
            if k < report.zeta_samples.len() {
                report.zeta_samples[k].1
            } else {
                report.zeta_samples.last().map(|&(_, v)| v).unwrap_or(0.0)
            }
        }))
    );
    let _ = writeln!(
        s,
        "envelope = {}",
        toml_f64_array(indices.iter().map(|&k| rows[k].envelope))
    );
    let _ = writeln!(
        s,
        "h = {}",
        toml_f64_array(indices.iter().map(|&k| rows[k].energy))
    );
    for i in 0..report.n {
        let _ = writeln!(
            s,
            "e_{} = {}",
            i + 1,
            toml_f64_array(indices.iter().map(|&k| rows[k].residuals[i]))
        );
    }
    s
}

/// Writes the CSV and report for a completed run, returning the paths.
pub fn emit_outputs(
    out_dir: &Path,
    outcome: &SweepOutcome,
    report: &BoundReport,
    verdict: &VerdictReport,
    frame_stride: usize,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let rows = assemble_rows(outcome, report);
    let indices = strided_indices(
        rows.len(),
        outcome.history.records.len(),
        frame_stride,
    );
    let csv_path = out_dir.join("timeseries.csv");
    write_timeseries(&csv_path, &rows, &indices, report.n)?;
    let report_path = out_dir.join("report.toml");
    write_report(&report_path, outcome, report, verdict, &rows, &indices)?;
    Ok(vec![csv_path, report_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_floats_keep_a_decimal_point() {
        assert_eq!(fmt_toml(2.0), "2.0");
        assert_eq!(fmt_toml(0.5), "0.5");
        assert_eq!(fmt_toml(1e-9), "0.000000001");
        assert_eq!(fmt_toml(f64::NAN), "nan");
        assert_eq!(fmt_toml(f64::NEG_INFINITY), "-inf");
        // Every rendering parses back to the same value.
        for v in [3.0, -0.125, 76.19724, 1.0 / 3.0] {
            assert_eq!(fmt_toml(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn stride_includes_boundaries() {
        let idx = strided_indices(25, 13, 10);
        assert_eq!(idx, vec![0, 10, 12, 20, 24]);
        let idx = strided_indices(21, 21, 10);
        assert_eq!(idx, vec![0, 10, 20]);
    }
}
