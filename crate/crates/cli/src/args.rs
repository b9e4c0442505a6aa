use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use springy_core::ensemble::ModelKind;
use springy_core::geometry::GeometryId;

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "springy", version, about = "Springy billiard ensembles and equilibration rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an ensemble and write the mean energy-difference series.
    Simulate(RunArgs),
    /// Follow one realization and write its invariant trace.
    Trace(RunArgs),
    /// Fit equilibration rates to series written by `simulate`.
    Rates(RatesArgs),
    /// Extrapolate rates to vanishing mass ratio along sqrt(m).
    Extrapolate(ExtrapolateArgs),
    /// Measure invariant drift per branch segment of a trace.
    Invariants(InvariantsArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration (rob-fig3a, stadium-fig4, mushroom-fig4, rob-model, mushroom-model).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub geometry: Option<GeometryId>,
    /// Particle to bar mass ratio.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub particles: Option<usize>,
    /// Initial bar energy fraction.
    #[arg(long)]
    pub eb0: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Sampling interval.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub runs: Option<u32>,
    #[arg(long)]
    pub emit_plots: bool,
    /// Run index followed by `trace`.
    #[arg(long)]
    pub trace_run: Option<u32>,
    /// Member index followed by `trace`.
    #[arg(long)]
    pub trace_member: Option<u64>,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            model: self.model,
            geometry: self.geometry,
            m: self.m,
            particles: self.particles,
            eb0: self.eb0,
            t_end: self.t_end,
            dt: self.dt,
            runs: self.runs,
            emit_plots: self.emit_plots,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    /// `simulate` output directories, or series CSV files fitted as one group.
    pub inputs: Vec<PathBuf>,
    /// Smoothing window for loose CSV files (directories carry their own).
    #[arg(long)]
    pub bar_period: Option<f64>,
    /// Mass ratio recorded for loose CSV files.
    #[arg(long)]
    pub m: Option<f64>,
    /// Initial bar energy recorded for loose CSV files.
    #[arg(long)]
    pub eb0: Option<f64>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExtrapolateArgs {
    /// A rates CSV written by `rates`.
    pub input: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub emit_plots: bool,
}

#[derive(Debug, Clone, Args)]
pub struct InvariantsArgs {
    /// A trace CSV written by `trace`.
    pub input: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}
