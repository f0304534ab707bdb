//! Experiment runner behind the `irsdm` binary.

pub mod config;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use irsdm::{
    convergence_trace, run_scheme_cfg, sweep_sr_vs_m, sweep_sr_vs_position, BenchOptions, ExperimentResult,
    Scheme, Series, Solution,
};
use serde_json::Value;

pub use config::ConfigArgs;
pub use manifest::{Axis, Experiment, RunManifest};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "IRSDM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "irsdm", version, about = "Secrecy-rate experiments for IRS-aided directional modulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Secrecy-rate trace per outer iteration of the iterative schemes.
    Converge {
        #[command(flatten)]
        common: Common,
        /// IRS sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "10,20")]
        ms: Vec<usize>,
    },
    /// Secrecy rate against the number of IRS elements.
    SweepM {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90,100")]
        ms: Vec<usize>,
    },
    /// Secrecy rate against the Alice-IRS distance (default M = 80).
    SweepPosition {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5.0)]
        start: f64,
        #[arg(long, default_value_t = 150.0)]
        stop: f64,
        #[arg(long, default_value_t = 2.5)]
        step: f64,
    },
    /// One scheme at one configuration, with the full solution dumped as JSON.
    Single {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "GAI", value_parser = parse_scheme)]
        scheme: Scheme,
    },
    /// Re-runs the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, env = OUT_DIR_ENV, default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Schemes to run, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
    pub schemes: Option<Vec<Scheme>>,
    #[arg(long, default_value_t = 50)]
    pub random_draws: usize,
    #[arg(long, env = OUT_DIR_ENV, default_value = "results")]
    pub out: PathBuf,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: irsdm::Error| e.to_string())
}

/// True when the `CI` environment variable is set to something other than
/// an empty string, `0` or `false`.
pub fn in_ci() -> bool {
    std::env::var("CI")
        .map(|v| !matches!(v.trim().to_ascii_lowercase().as_str(), "" | "0" | "false"))
        .unwrap_or(false)
}

fn check_seed(common: &Common, schemes: &[Scheme]) -> Result<()> {
    if in_ci() && schemes.contains(&Scheme::RandomPhase) && common.config.seed.is_none() {
        bail!("--seed is required for RANDOM_PHASE runs when CI is set");
    }
    Ok(())
}

/// Positions `start, start + step, ...` up to `stop` inclusive.
pub fn position_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        bail!("position grid needs step > 0 and stop >= start");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

/// Builds the manifest a subcommand describes.
pub fn manifest_for(command: &Command) -> Result<(RunManifest, PathBuf)> {
    let (experiment, common, axis, schemes, preset): (_, &Common, Axis, Vec<Scheme>, Vec<(&str, Value)>) =
        match command {
            Command::Converge { common, ms } => (
                Experiment::Converge,
                common,
                m_axis(ms),
                common.schemes.clone().unwrap_or_else(|| vec![Scheme::Gai, Scheme::Nsp]),
                vec![],
            ),
            Command::SweepM { common, ms } => (
                Experiment::SweepM,
                common,
                m_axis(ms),
                common.schemes.clone().unwrap_or_else(|| Scheme::ALL.to_vec()),
                vec![],
            ),
            Command::SweepPosition { common, start, stop, step } => (
                Experiment::SweepPosition,
                common,
                Axis { name: "d_AI".into(), values: position_grid(*start, *stop, *step)? },
                common.schemes.clone().unwrap_or_else(|| Scheme::ALL.to_vec()),
                vec![("M", Value::from(80))],
            ),
            Command::Single { common, scheme } => (
                Experiment::Single,
                common,
                Axis { name: "M".into(), values: vec![] },
                vec![*scheme],
                vec![],
            ),
            Command::Replay { .. } => bail!("replay reads its manifest from disk"),
        };
    check_seed(common, &schemes)?;
    let cfg = common.config.resolve(&preset)?;
    let axis = if experiment == Experiment::Single {
        Axis { name: "M".into(), values: vec![cfg.m as f64] }
    } else {
        axis
    };
    let mut m = RunManifest::new(experiment, cfg, schemes, axis);
    m.options = BenchOptions { random_draws: common.random_draws, ..BenchOptions::default() };
    Ok((m, common.out.clone()))
}

fn m_axis(ms: &[usize]) -> Axis {
    Axis { name: "M".into(), values: ms.iter().map(|&m| m as f64).collect() }
}

/// What one run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub result: ExperimentResult,
    pub manifest: RunManifest,
    pub csv: PathBuf,
    pub manifest_path: PathBuf,
    pub solution: Option<Solution>,
}

fn compute(m: &RunManifest) -> Result<(ExperimentResult, Option<Solution>)> {
    let cfg = &m.config;
    let opts = &m.options;
    if m.schemes.is_empty() {
        bail!("no schemes selected");
    }
    Ok(match m.experiment {
        Experiment::Converge => (convergence_trace(cfg, &m.m_values(), &m.schemes, opts)?, None),
        Experiment::SweepM => (sweep_sr_vs_m(cfg, &m.m_values(), &m.schemes, opts)?, None),
        Experiment::SweepPosition => (sweep_sr_vs_position(cfg, &m.axis.values, &m.schemes, opts)?, None),
        Experiment::Single => {
            let scheme = m.schemes[0];
            let sol = run_scheme_cfg(scheme, cfg, opts)?;
            let res = ExperimentResult {
                experiment: m.experiment.name().into(),
                axis: "M".into(),
                axis_values: vec![cfg.m as f64],
                series: vec![Series {
                    label: scheme.to_string(),
                    scheme,
                    sr: vec![sol.sr],
                    iterations: vec![sol.iterations],
                }],
                config: cfg.clone(),
                seed: cfg.seed,
            };
            (res, Some(sol))
        }
    })
}

/// Runs the experiment of `manifest` and writes its CSV, the manifest echo
/// and, for `single`, the solution dump into `out`. Files are written once
/// all points are done.
pub fn run_experiment(manifest: &RunManifest, out: &Path) -> Result<RunReport> {
    let t0 = Instant::now();
    let (result, solution) = compute(manifest).with_context(|| format!("running {}", manifest.experiment))?;
    let name = manifest.experiment.name();
    let csv = out.join(format!("{name}.csv"));
    let manifest_path = out.join(format!("{name}.manifest.json"));
    let mut echo = manifest.clone();
    echo.outputs = vec![format!("{name}.csv"), format!("{name}.manifest.json")];
    if let Some(sol) = &solution {
        let path = out.join(format!("{name}.solution.json"));
        output::write_atomic(&path, serde_json::to_string_pretty(sol)?.as_bytes())?;
        echo.outputs.push(format!("{name}.solution.json"));
    }
    output::write_atomic(&csv, output::to_csv(&result).as_bytes())?;
    echo.duration = t0.elapsed().as_secs_f64();
    output::write_atomic(&manifest_path, serde_json::to_string_pretty(&echo)?.as_bytes())?;
    Ok(RunReport { result, manifest: echo, csv, manifest_path, solution })
}

/// Entry point shared by the binary and the tests.
pub fn run(cli: Cli) -> Result<RunReport> {
    let (manifest, out) = match &cli.command {
        Command::Replay { manifest, out } => (RunManifest::load(manifest)?, out.clone()),
        other => manifest_for(other)?,
    };
    let report = run_experiment(&manifest, &out)?;
    print!("{}", output::summary(&report.result));
    println!("wrote {} and {}", report.csv.display(), report.manifest_path.display());
    Ok(report)
}
