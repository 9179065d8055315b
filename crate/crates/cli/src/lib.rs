//! Configuration, persistence and subcommands behind the `fwmr` binary.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use commands::{cmd_compare, cmd_run, cmd_sweep, compare_table, RunOutcome, SweepOutcome};
pub use config::RunConfig;
pub use error::CliError;
pub use output::{RunSummary, Timeseries};

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fwmr: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.resolve()?;
    match &cli.command {
        args::Command::Run(_) => {
            let o = cmd_run(&cfg)?;
            writeln!(out, "wrote {}", o.timeseries_path.display())?;
            writeln!(out, "wrote {}", o.summary_path.display())?;
            writeln!(
                out,
                "settling {}, certificate {}",
                match o.summary.settling.aggregate {
                    fwmr_core::Settling::At(t) => format!("{t:.2} s"),
                    fwmr_core::Settling::NotSettled => "not reached".into(),
                },
                match o.summary.certificate.bound.finite() {
                    Some(t) => format!("{t:.4} s"),
                    None => "no finite bound".into(),
                }
            )?;
        }
        args::Command::Compare { alphas, .. } => {
            let summaries = cmd_compare(&cfg, alphas)?;
            write!(out, "{}", compare_table(&summaries))?;
        }
        args::Command::Sweep { .. } => {
            let o = cmd_sweep(&cfg)?;
            writeln!(out, "wrote {}", o.table_path.display())?;
            writeln!(out, "wrote {}", o.report_path.display())?;
            for t in &o.report.trends {
                writeln!(
                    out,
                    "{:<20} {:?}: {} violation(s) {}",
                    t.metric,
                    t.trend,
                    t.violations,
                    if t.holds { "ok" } else { "FLAGGED" }
                )?;
            }
        }
        args::Command::Validate(_) => {
            cfg.validate()?;
            writeln!(out, "config ok")?;
        }
    }
    Ok(())
}
