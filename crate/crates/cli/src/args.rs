use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fwmr_core::sim::Scheme;
use fwmr_core::DragVariant;

use crate::config::{RunConfig, SweepKind};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fwmr",
    version,
    about = "Finite-time control runs for a mecanum robot"
)]
pub struct Cli {
    /// TOML config layered over the built-in defaults.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its timeseries and summary.
    Run(Overrides),
    /// Run the scenario at several exponents and print them side by side.
    Compare {
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep the exponent or the tuning weights.
    Sweep {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambda1: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambda2: Option<Vec<f64>>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check the config and exit.
    Validate(Overrides),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Alpha,
    Gains,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    SemiImplicitEuler,
    ExplicitEuler,
    Rk4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DragArg {
    Derived,
    Rotated,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Preset scenario: case1, case2 or case3.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Horizon in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Sampling interval in seconds.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long, value_enum)]
    pub drag: Option<DragArg>,
    /// Clamp each wrench channel to ±LIMIT.
    #[arg(long, value_name = "LIMIT")]
    pub saturation: Option<f64>,
    #[arg(short, long, env = "FWMR_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    /// Stem for output files.
    #[arg(long)]
    pub name: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = &self.scenario {
            cfg.scenario.preset = Some(s.clone());
            cfg.scenario.custom = None;
        }
        if let Some(a) = self.alpha {
            cfg.gains.alpha = a;
        }
        if let Some(d) = self.duration {
            cfg.scenario.duration = Some(d);
        }
        if let Some(h) = self.step {
            cfg.scenario.step = Some(h);
        }
        if let Some(s) = self.scheme {
            cfg.integrator.scheme = match s {
                SchemeArg::SemiImplicitEuler => Scheme::SemiImplicitEuler,
                SchemeArg::ExplicitEuler => Scheme::ExplicitEuler,
                SchemeArg::Rk4 => Scheme::Rk4,
            };
        }
        if let Some(n) = self.substeps {
            cfg.integrator.substeps = n;
        }
        if let Some(d) = self.drag {
            cfg.integrator.drag = match d {
                DragArg::Derived => DragVariant::Derived,
                DragArg::Rotated => DragVariant::Rotated,
            };
        }
        if let Some(s) = self.saturation {
            cfg.integrator.saturation = Some(s);
        }
        if let Some(dir) = &self.output_dir {
            cfg.output.dir = dir.clone();
        }
        if let Some(n) = &self.name {
            cfg.output.name = Some(n.clone());
        }
    }
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::defaults(),
        };
        match &self.command {
            Command::Run(o) | Command::Validate(o) | Command::Compare { overrides: o, .. } => {
                o.apply(&mut cfg)
            }
            Command::Sweep {
                kind,
                alphas,
                lambda1,
                lambda2,
                overrides,
            } => {
                overrides.apply(&mut cfg);
                if let Some(k) = kind {
                    cfg.sweep.kind = match k {
                        KindArg::Alpha => SweepKind::Alpha,
                        KindArg::Gains => SweepKind::Gains,
                    };
                }
                if let Some(a) = alphas {
                    cfg.sweep.alphas = a.clone();
                }
                if let Some(l) = lambda1 {
                    cfg.sweep.lambda1 = l.clone();
                }
                if let Some(l) = lambda2 {
                    cfg.sweep.lambda2 = l.clone();
                }
            }
        }
        Ok(cfg)
    }
}
