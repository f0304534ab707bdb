//! Secure two-stream directional modulation aided by an intelligent
//! reflecting surface: channel model, rate evaluators, and beamforming /
//! phase-shift optimizers.

pub mod error;
pub mod linalg;
pub mod model;
pub mod rates;
pub mod gai;
pub mod nsp;
pub mod bench;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use model::{build_channels, build_geometry, build_system, ChannelSet, Geometry, SystemConfig};
pub use rates::{derived_model, rate_bob, rate_eve, secrecy_rate, DerivedModel, PhaseBlocks, Precoders, SignalModel};
pub use gai::{run_gai, GaOptions, GaiState};
pub use nsp::{run_nsp, NspOptions, NspState};
pub use bench::{
    convergence_trace, run_scheme, run_scheme_cfg, sweep_sr_vs_m, sweep_sr_vs_position, BenchOptions,
    ExperimentResult, Scheme, Series, Solution, Stream,
};
