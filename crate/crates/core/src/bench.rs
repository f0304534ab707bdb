//! Benchmark schemes and the experiment sweeps built on them.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gai::{initial_precoders_at, run_gai_from, GaOptions};
use crate::linalg::{cis, CMat};
use crate::model::{build_system, parallel_lines, ChannelSet, SystemConfig};
use crate::nsp::{run_nsp_model, NspOptions};
use crate::rates::{cmat_serde, zero_phase, Precoders, SignalModel};

/// Which confidential stream a single-stream run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stream {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Gai,
    Nsp,
    NoIrs,
    RandomPhase,
    SingleCbs(Stream),
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Gai,
        Scheme::Nsp,
        Scheme::NoIrs,
        Scheme::RandomPhase,
        Scheme::SingleCbs(Stream::Two),
    ];

    pub fn is_iterative(&self) -> bool {
        matches!(self, Scheme::Gai | Scheme::Nsp)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Gai => "GAI",
            Scheme::Nsp => "NSP",
            Scheme::NoIrs => "NO_IRS",
            Scheme::RandomPhase => "RANDOM_PHASE",
            Scheme::SingleCbs(Stream::Two) => "SINGLE_CBS",
            Scheme::SingleCbs(Stream::One) => "SINGLE_CBS1",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "GAI" => Ok(Scheme::Gai),
            "NSP" => Ok(Scheme::Nsp),
            "NO_IRS" => Ok(Scheme::NoIrs),
            "RANDOM_PHASE" => Ok(Scheme::RandomPhase),
            "SINGLE_CBS" | "SINGLE_CBS2" => Ok(Scheme::SingleCbs(Stream::Two)),
            "SINGLE_CBS1" => Ok(Scheme::SingleCbs(Stream::One)),
            other => Err(Error::config(
                "scheme",
                format!(
                    "unknown scheme {other:?}; expected GAI, NSP, NO_IRS, RANDOM_PHASE, SINGLE_CBS or SINGLE_CBS1"
                ),
            )),
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchOptions {
    pub ga: GaOptions,
    pub nsp: NspOptions,
    pub random_draws: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            ga: GaOptions::default(),
            nsp: NspOptions::default(),
            random_draws: 50,
        }
    }
}

/// Outcome of one scheme at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub scheme: Scheme,
    /// Secrecy rate in bits/s/Hz (the mean over draws for RANDOM_PHASE).
    pub sr: f64,
    /// Precoders of the run (of the first draw for RANDOM_PHASE).
    pub prec: Precoders,
    #[serde(with = "cmat_serde")]
    pub p_an: CMat,
    pub rs_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-draw secrecy rates, RANDOM_PHASE only.
    pub draws: Vec<f64>,
    pub seed: u64,
}

/// Runs one scheme on prebuilt channels.
pub fn run_scheme(scheme: Scheme, cfg: &SystemConfig, ch: &ChannelSet, opts: &BenchOptions) -> Result<Solution> {
    cfg.validate()?;
    let model = SignalModel::new(cfg, ch)?;
    let eps = cfg.epsilon;
    let wrap = |prec: Precoders, trace: Vec<f64>, iterations, converged, draws: Vec<f64>, sr| Solution {
        scheme,
        sr,
        prec,
        p_an: model.p_an.clone(),
        rs_trace: trace,
        iterations,
        converged,
        draws,
        seed: cfg.seed,
    };
    match scheme {
        Scheme::Gai => {
            let st = run_gai_from(&model, initial_precoders_at(&model, zero_phase(cfg.m)), &opts.ga, eps, true)?;
            let sr = st.secrecy_rate();
            Ok(wrap(st.prec, st.rs_trace, st.iterations_used, st.converged, vec![], sr))
        }
        Scheme::Nsp => {
            let st = run_nsp_model(&model, ch, &opts.nsp, eps)?;
            let sr = st.secrecy_rate();
            Ok(wrap(st.prec, st.rs_trace, st.iterations_used, st.converged, vec![], sr))
        }
        Scheme::NoIrs => {
            let flat = model.without_reflection();
            let st = run_gai_from(&flat, initial_precoders_at(&flat, zero_phase(cfg.m)), &opts.ga, eps, false)?;
            let sr = st.secrecy_rate();
            Ok(wrap(st.prec, st.rs_trace, st.iterations_used, st.converged, vec![], sr))
        }
        Scheme::RandomPhase => {
            if opts.random_draws == 0 {
                return Err(Error::config("random_draws", "must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut draws = Vec::with_capacity(opts.random_draws);
            let mut first = None;
            for _ in 0..opts.random_draws {
                let theta = crate::linalg::CVec::from_iterator(
                    cfg.m,
                    (0..cfg.m).map(|_| cis(rng.random::<f64>() * std::f64::consts::TAU)),
                );
                let st = run_gai_from(&model, initial_precoders_at(&model, theta), &opts.ga, eps, false)?;
                draws.push(st.secrecy_rate());
                first.get_or_insert(st);
            }
            let st = first.expect("at least one draw");
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            Ok(wrap(st.prec, st.rs_trace, st.iterations_used, st.converged, draws, mean))
        }
        Scheme::SingleCbs(stream) => {
            let total = cfg.beta1 + cfg.beta2;
            let single = match stream {
                Stream::One => SystemConfig { beta1: total, beta2: 0.0, ..cfg.clone() },
                Stream::Two => SystemConfig { beta1: 0.0, beta2: total, ..cfg.clone() },
            };
            let m1 = SignalModel::new(&single, ch)?;
            let st = run_gai_from(&m1, initial_precoders_at(&m1, zero_phase(cfg.m)), &opts.ga, eps, true)?;
            let sr = st.secrecy_rate();
            Ok(wrap(st.prec, st.rs_trace, st.iterations_used, st.converged, vec![], sr))
        }
    }
}

/// Builds the channels of `cfg` and runs `scheme` on them.
pub fn run_scheme_cfg(scheme: Scheme, cfg: &SystemConfig, opts: &BenchOptions) -> Result<Solution> {
    let (_, ch) = build_system(cfg)?;
    run_scheme(scheme, cfg, &ch, opts)
}

/// One scheme's values along the sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    /// Scheme name, suffixed with `@M=<m>` for convergence traces.
    pub label: String,
    pub scheme: Scheme,
    pub sr: Vec<f64>,
    pub iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub axis: String,
    pub axis_values: Vec<f64>,
    pub series: Vec<Series>,
    pub config: SystemConfig,
    pub seed: u64,
}

impl ExperimentResult {
    pub fn series(&self, scheme: Scheme) -> Option<&Series> {
        self.series.iter().find(|s| s.scheme == scheme)
    }
}

/// Every scheme at every point, in parallel over points; output order
/// follows `points`.
fn sweep(
    points: &[SystemConfig],
    schemes: &[Scheme],
    opts: &BenchOptions,
) -> Result<Vec<Vec<Solution>>> {
    points
        .par_iter()
        .map(|cfg| {
            let (_, ch) = build_system(cfg)?;
            schemes.iter().map(|&s| run_scheme(s, cfg, &ch, opts)).collect()
        })
        .collect()
}

fn collect_series(schemes: &[Scheme], runs: &[Vec<Solution>]) -> Vec<Series> {
    schemes
        .iter()
        .enumerate()
        .map(|(j, &s)| Series {
            label: s.to_string(),
            scheme: s,
            sr: runs.iter().map(|r| r[j].sr).collect(),
            iterations: runs.iter().map(|r| r[j].iterations).collect(),
        })
        .collect()
}

pub fn sweep_sr_vs_m(
    cfg: &SystemConfig,
    m_values: &[usize],
    schemes: &[Scheme],
    opts: &BenchOptions,
) -> Result<ExperimentResult> {
    let points: Vec<SystemConfig> = m_values
        .iter()
        .map(|&m| SystemConfig { m, ..cfg.clone() })
        .collect();
    let runs = sweep(&points, schemes, opts)?;
    Ok(ExperimentResult {
        experiment: "sweep-m".into(),
        axis: "M".into(),
        axis_values: m_values.iter().map(|&m| m as f64).collect(),
        series: collect_series(schemes, &runs),
        config: cfg.clone(),
        seed: cfg.seed,
    })
}

/// Slides the IRS along the line through Alice parallel to the Bob-Eve
/// line; the departure angle toward the IRS comes from that construction
/// and overrides `cfg.theta_ai`.
pub fn sweep_sr_vs_position(
    cfg: &SystemConfig,
    d_ai_values: &[f64],
    schemes: &[Scheme],
    opts: &BenchOptions,
) -> Result<ExperimentResult> {
    let theta_ai = parallel_lines(cfg).theta_ai;
    let base = SystemConfig { theta_ai, ..cfg.clone() };
    let points: Vec<SystemConfig> = d_ai_values
        .iter()
        .map(|&d_ai| SystemConfig { d_ai, ..base.clone() })
        .collect();
    let runs = sweep(&points, schemes, opts)?;
    Ok(ExperimentResult {
        experiment: "sweep-position".into(),
        axis: "d_AI".into(),
        axis_values: d_ai_values.to_vec(),
        series: collect_series(schemes, &runs),
        config: base,
        seed: cfg.seed,
    })
}

/// Secrecy-rate traces of the iterative schemes, one series per
/// (scheme, M), padded with the final value to a common length. The axis
/// is the outer-iteration index, starting at 0 for the initial point.
pub fn convergence_trace(
    cfg: &SystemConfig,
    m_values: &[usize],
    schemes: &[Scheme],
    opts: &BenchOptions,
) -> Result<ExperimentResult> {
    if let Some(s) = schemes.iter().find(|s| !s.is_iterative()) {
        return Err(Error::config("schemes", format!("{s} has no iteration trace")));
    }
    let points: Vec<SystemConfig> = m_values
        .iter()
        .map(|&m| SystemConfig { m, ..cfg.clone() })
        .collect();
    let runs = sweep(&points, schemes, opts)?;
    let len = runs
        .iter()
        .flatten()
        .map(|s| s.rs_trace.len())
        .max()
        .unwrap_or(0);
    let mut series = Vec::new();
    for (i, &m) in m_values.iter().enumerate() {
        for (j, &s) in schemes.iter().enumerate() {
            let sol = &runs[i][j];
            let last = sol.rs_trace.last().copied().unwrap_or(0.0);
            let mut sr = sol.rs_trace.clone();
            sr.resize(len, last);
            series.push(Series {
                label: format!("{s}@M={m}"),
                scheme: s,
                sr,
                iterations: vec![sol.iterations; len],
            });
        }
    }
    Ok(ExperimentResult {
        experiment: "converge".into(),
        axis: "iteration".into(),
        axis_values: (0..len).map(|i| i as f64).collect(),
        series,
        config: cfg.clone(),
        seed: cfg.seed,
    })
}
