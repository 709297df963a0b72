//! Experiment orchestration: load a config, run the algorithm, evaluate the
//! bounds, check the trajectory, and write the outputs.

pub mod config;
pub mod frames;
pub mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{build_experiment, load_config, ConfigError, Experiment, ExperimentConfig};

use crate::analysis::{
    build_report, verify_trajectory, AnalysisError, BoundParams, BoundReport, VerdictReport,
};
use crate::partition::{MassMode, PartitionEngine, PartitionError, PartitionHistory, StepRecord};
use crate::region::Trace;
use crate::sweep::{run_dsca, SweepError, SweepOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_COLLISION: u8 = 3;
pub const EXIT_VERDICT: u8 = 4;
pub const EXIT_ASSUMPTION: u8 = 5;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("time series check failed: {0}")]
    Check(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(c) if c.is_assumption_violation() => EXIT_ASSUMPTION,
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Sweep(SweepError::Partition(PartitionError::Collision { .. })) => {
                EXIT_COLLISION
            }
            RunError::Sweep(_) => EXIT_CONFIG,
            RunError::Check(_) => EXIT_VERDICT,
            RunError::Analysis(_) | RunError::Io(_) => 1,
        }
    }
}

fn envelope_slack(mode: MassMode) -> f64 {
    match mode {
        MassMode::Incremental => 1.05,
        MassMode::FullQuadrature => 1.01,
    }
}

pub struct RunSummary {
    pub outcome: SweepOutcome,
    pub report: BoundReport,
    pub verdict: VerdictReport,
    pub written: Vec<PathBuf>,
}

/// Runs the experiment, evaluates bounds and the verdict, writes outputs.
pub fn execute_run(exp: &Experiment, out_dir: &Path) -> Result<RunSummary, RunError> {
    let outcome = run_dsca(&exp.sweep)?;
    let ts: Vec<f64> = outcome.history.records.iter().map(|r| r.t).collect();
    let h0 = outcome.history.records[0].energy;
    let report = build_report(
        &BoundParams::from(&exp.sweep),
        &exp.sweep.region,
        &ts,
        h0,
        exp.q,
        envelope_slack(exp.sweep.partition.mass_mode),
    )?;
    let verdict = verify_trajectory(&outcome.history, &report);

    let mut written = output::emit_outputs(
        out_dir,
        &outcome,
        &report,
        &verdict,
        exp.outputs.frame_stride,
    )?;
    if exp.outputs.frames {
        let rows = output::assemble_rows(&outcome, &report);
        let indices = output::strided_indices(
            rows.len(),
            outcome.history.records.len(),
            exp.outputs.frame_stride,
        );
        written.extend(frames::write_frames(
            out_dir,
            &outcome,
            &exp.sweep.region,
            &rows,
            &indices,
            exp.sweep.partition.v,
            exp.sweep.partition.epsilon,
        )?);
    }
    Ok(RunSummary {
        outcome,
        report,
        verdict,
        written,
    })
}

/// Balance energy of the initial partition, without running the dynamics.
pub fn initial_energy(exp: &Experiment) -> Result<f64, RunError> {
    let engine = PartitionEngine::new(
        &exp.sweep.partition,
        &exp.sweep.region,
        &exp.sweep.density,
        exp.sweep.initial_interior.as_deref(),
    )
    .map_err(SweepError::from)?;
    Ok(engine.initial_record().energy)
}

/// Bound evaluation only (no simulation): the report on a uniform grid over
/// the partition phase.
pub fn compute_bounds(exp: &Experiment) -> Result<BoundReport, RunError> {
    let h0 = initial_energy(exp)?;
    let t_p = exp.sweep.partition.partition_time(exp.sweep.region.length_l);
    let grid = 600;
    let ts: Vec<f64> = (0..=grid).map(|k| t_p * k as f64 / grid as f64).collect();
    Ok(build_report(
        &BoundParams::from(&exp.sweep),
        &exp.sweep.region,
        &ts,
        h0,
        exp.q,
        envelope_slack(exp.sweep.partition.mass_mode),
    )?)
}

/// Renders the bounds-only report document.
pub fn render_bounds(report: &BoundReport) -> String {
    use output::fmt_toml;
    let mut s = String::new();
    let _ = writeln!(s, "[bounds]");
    let _ = writeln!(s, "n = {}", report.n);
    let _ = writeln!(s, "q = {}", report.q);
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
    let zeta_max = report
        .zeta_samples
        .iter()
        .map(|&(_, z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(s, "zeta_max = {}", fmt_toml(zeta_max));
    s
}

/// Re-verifies a recorded time series against the config's bounds.
/// Returns the verdict; structural problems (wrong header, corrupt rows,
/// H column not matching the masses) are [`RunError::Check`].
pub fn check_timeseries(exp: &Experiment, csv_path: &Path) -> Result<VerdictReport, RunError> {
    let text = std::fs::read_to_string(csv_path)?;
    let n = exp.sweep.partition.n;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| RunError::Check("empty file".into()))?;
    let mut expected = String::from("t");
    for i in 0..=n {
        let _ = write!(expected, ",x_{i}");
    }
    for i in 1..=n {
        let _ = write!(expected, ",m_{i}");
    }
    expected.push_str(",H,envelope");
    for i in 1..=n {
        let _ = write!(expected, ",e_{i}");
    }
    if header != expected {
        return Err(RunError::Check(format!(
            "header mismatch: expected {expected:?}, found {header:?}"
        )));
    }
    let columns = 3 * n + 4;
    let mut records: Vec<StepRecord> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| RunError::Check(format!("row {}: {e}", lineno + 2)))?;
        if fields.len() != columns {
            return Err(RunError::Check(format!(
                "row {}: expected {columns} columns, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let t = fields[0];
        let x = fields[1..n + 2].to_vec();
        let m = fields[n + 2..2 * n + 2].to_vec();
        let h_column = fields[2 * n + 2];
        let energy = crate::analysis::energy(&m);
        if (energy - h_column).abs() > 1e-9 * h_column.abs().max(1.0) {
            return Err(RunError::Check(format!(
                "row {}: H column {h_column} does not match the masses (recomputed {energy})",
                lineno + 2
            )));
        }
        let mean_mass = m.iter().sum::<f64>() / n as f64;
        records.push(StepRecord {
            t,
            x,
            m,
            mean_mass,
            energy,
            conservation_rel: 0.0,
            controls: Vec::new(),
        });
    }
    if records.is_empty() {
        return Err(RunError::Check("no data rows".into()));
    }

    let t_p = exp.sweep.partition.partition_time(exp.sweep.region.length_l);
    let ts: Vec<f64> = records
        .iter()
        .map(|r| r.t)
        .filter(|&t| t <= t_p + 1e-12)
        .collect();
    let h0 = records[0].energy;
    let report = build_report(
        &BoundParams::from(&exp.sweep),
        &exp.sweep.region,
        &ts,
        h0,
        exp.q,
        envelope_slack(exp.sweep.partition.mass_mode),
    )?;
    let traces = records[0].x.iter().map(|&x| Trace::new(x)).collect();
    let history = PartitionHistory {
        records,
        traces,
        t_p,
        n,
    };
    Ok(verify_trajectory(&history, &report))
}
