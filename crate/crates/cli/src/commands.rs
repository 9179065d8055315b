use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fwmr_core::sim::{self, trend_violations, AlphaRow, GainRow, Trend};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SweepKind};
use crate::error::CliError;
use crate::output::{settling_field, RunSummary, Timeseries, TOOL, VERSION};

/// Grid points allowed to break a trend before it is flagged.
pub const TREND_ALLOWANCE: usize = 1;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub timeseries_path: PathBuf,
    pub summary_path: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Result<(RunSummary, Timeseries), CliError> {
    let (spec, gains) = cfg.validate()?;
    let log = sim::run(&spec, &cfg.robot, &gains, &cfg.integrator)?;
    let ts = Timeseries::from_log(&log);
    let summary = RunSummary::compute(&ts, &gains, cfg)?;
    Ok((summary, ts))
}

/// Runs the configured scenario and writes `<name>.csv` and `<name>.summary.json`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let (summary, ts) = simulate(cfg)?;
    let name = cfg.output_name();
    let timeseries_path = cfg.output.dir.join(format!("{name}.csv"));
    let summary_path = cfg.output.dir.join(format!("{name}.summary.json"));
    ts.write_csv(create(&timeseries_path)?)?;
    write_json(&summary_path, &summary)?;
    info!(
        "{name}: settled at {} (certificate {:?})",
        summary.settling.aggregate, summary.certificate.bound
    );
    Ok(RunOutcome {
        summary,
        timeseries_path,
        summary_path,
    })
}

/// One run per distinct exponent, in the order given.
pub fn cmd_compare(cfg: &RunConfig, alphas: &[f64]) -> Result<Vec<RunSummary>, CliError> {
    if alphas.is_empty() {
        return Err(CliError::Config("compare needs at least one alpha".into()));
    }
    let mut distinct: Vec<f64> = Vec::with_capacity(alphas.len());
    for &a in alphas {
        if distinct.contains(&a) {
            warn!("alpha {a} listed more than once; running it once");
        } else {
            distinct.push(a);
        }
    }
    let summaries = distinct
        .iter()
        .map(|&alpha| {
            let mut c = cfg.clone();
            c.gains.alpha = alpha;
            simulate(&c).map(|(s, _)| s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let path = cfg
        .output
        .dir
        .join(format!("{}.compare.json", cfg.output_name()));
    write_json(&path, &summaries)?;
    Ok(summaries)
}

/// Plain-text table with one column per run.
pub fn compare_table(summaries: &[RunSummary]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = vec![
        (
            "alpha".into(),
            summaries.iter().map(|s| s.alpha.to_string()).collect(),
        ),
        (
            "settling pose (s)".into(),
            summaries
                .iter()
                .map(|s| s.settling.pose_aggregate.to_string())
                .collect(),
        ),
        (
            "settling velocity (s)".into(),
            summaries
                .iter()
                .map(|s| s.settling.velocity_aggregate.to_string())
                .collect(),
        ),
    ];
    for (i, axis) in ["u", "v", "omega"].iter().enumerate() {
        rows.push((
            format!("TV tau_{axis}"),
            summaries
                .iter()
                .map(|s| format!("{:.4}", s.total_variation[i]))
                .collect(),
        ));
    }
    rows.push((
        "certificate (s)".into(),
        summaries
            .iter()
            .map(|s| match s.certificate.bound.finite() {
                Some(t) => format!("{t:.4}"),
                None => "no finite bound".into(),
            })
            .collect(),
    ));
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let col_width = rows
        .iter()
        .flat_map(|(_, cells)| cells.iter().map(String::len))
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (label, cells) in rows {
        out.push_str(&format!("{label:<label_width$}"));
        for c in cells {
            out.push_str(&format!("  {c:>col_width$}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub metric: String,
    pub trend: Trend,
    /// Worst count over the independent slices of the grid.
    pub violations: usize,
    pub holds: bool,
}

impl TrendCheck {
    fn new(metric: &str, trend: Trend, slices: &[Vec<f64>]) -> Self {
        let violations = slices
            .iter()
            .map(|s| trend_violations(s, trend))
            .max()
            .unwrap_or(0);
        Self {
            metric: metric.into(),
            trend,
            violations,
            holds: violations <= TREND_ALLOWANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rows", rename_all = "kebab-case")]
pub enum SweepRows {
    Alpha(Vec<AlphaRow>),
    Gains(Vec<GainRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub trends: Vec<TrendCheck>,
    pub results: SweepRows,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub table_path: PathBuf,
    pub report_path: PathBuf,
}

/// Runs the configured grid and writes a long-format table plus trend flags.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepOutcome, CliError> {
    let (spec, gains) = cfg.validate()?;
    let sw = &cfg.sweep;
    let name = cfg.output_name();
    let [dp, dv] = sw.radii;
    let (trends, results, table_path) = match sw.kind {
        SweepKind::Alpha => {
            if sw.alphas.is_empty() {
                return Err(CliError::Config("sweep.alphas is empty".into()));
            }
            for &a in &sw.alphas {
                gains.with_alpha(a).validate()?;
            }
            let rows = sim::sweep_alpha(
                &spec,
                &cfg.robot,
                &gains,
                &cfg.integrator,
                &sw.alphas,
                (dp, dv),
            )?;
            let col = |f: fn(&AlphaRow) -> f64| vec![rows.iter().map(f).collect::<Vec<_>>()];
            let trends = vec![
                TrendCheck::new(
                    "total_variation",
                    Trend::NonDecreasing,
                    &col(|r| r.total_variation),
                ),
                TrendCheck::new(
                    "settling",
                    Trend::NonDecreasing,
                    &col(|r| r.settling.as_f64()),
                ),
                TrendCheck::new(
                    "upsilon_normalized",
                    Trend::NonIncreasing,
                    &col(|r| r.upsilon_normalized),
                ),
            ];
            let path = cfg.output.dir.join(format!("{name}.sweep-alpha.csv"));
            write_alpha_table(&path, &rows)?;
            (trends, SweepRows::Alpha(rows), path)
        }
        SweepKind::Gains => {
            if sw.lambda1.is_empty() || sw.lambda2.is_empty() {
                return Err(CliError::Config(
                    "sweep.lambda1 and sweep.lambda2 need values".into(),
                ));
            }
            if let Some(bad) = sw
                .lambda1
                .iter()
                .chain(&sw.lambda2)
                .find(|l| l.is_nan() || **l <= 0.0)
            {
                return Err(CliError::Config(format!(
                    "tuning weights must be positive, got {bad}"
                )));
            }
            let rows = sim::sweep_gains(
                &spec,
                &cfg.robot,
                gains.alpha,
                &cfg.integrator,
                &sw.lambda1,
                &sw.lambda2,
            )?;
            // Rows are λ₁-major; slice along λ₁ at each fixed λ₂.
            let n2 = sw.lambda2.len();
            let slices = |f: fn(&GainRow) -> f64| -> Vec<Vec<f64>> {
                (0..n2)
                    .map(|j| rows.iter().skip(j).step_by(n2).map(f).collect())
                    .collect()
            };
            let trends = vec![
                TrendCheck::new(
                    "settling",
                    Trend::NonIncreasing,
                    &slices(|r| r.settling.as_f64()),
                ),
                TrendCheck::new(
                    "total_variation",
                    Trend::NonDecreasing,
                    &slices(|r| r.total_variation),
                ),
            ];
            let path = cfg.output.dir.join(format!("{name}.sweep-gains.csv"));
            write_gain_table(&path, &rows)?;
            (trends, SweepRows::Gains(rows), path)
        }
    };
    for t in trends.iter().filter(|t| !t.holds) {
        warn!(
            "{} breaks its {:?} trend at {} grid points",
            t.metric, t.trend, t.violations
        );
    }
    let report = SweepReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        scenario: cfg.scenario.label().into(),
        trends,
        results,
    };
    let report_path = cfg.output.dir.join(format!("{name}.sweep.json"));
    write_json(&report_path, &report)?;
    Ok(SweepOutcome {
        report,
        table_path,
        report_path,
    })
}

fn write_alpha_table(path: &Path, rows: &[AlphaRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "alpha",
        "settling",
        "settling_pose",
        "settling_velocity",
        "tv_u",
        "tv_v",
        "tv_omega",
        "tv_total",
        "upsilon",
        "upsilon_normalized",
    ])?;
    for r in rows {
        w.write_record([
            r.alpha.to_string(),
            settling_field(r.settling),
            settling_field(r.pose_settling),
            settling_field(r.velocity_settling),
            r.torque_variation[0].to_string(),
            r.torque_variation[1].to_string(),
            r.torque_variation[2].to_string(),
            r.total_variation.to_string(),
            r.upsilon.to_string(),
            r.upsilon_normalized.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_gain_table(path: &Path, rows: &[GainRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "lambda1", "lambda2", "settling", "tv_u", "tv_v", "tv_omega", "tv_total",
    ])?;
    for r in rows {
        w.write_record([
            r.lambda1.to_string(),
            r.lambda2.to_string(),
            settling_field(r.settling),
            r.torque_variation[0].to_string(),
            r.torque_variation[1].to_string(),
            r.torque_variation[2].to_string(),
            r.total_variation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
