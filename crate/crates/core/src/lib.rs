//! Colored spatio-temporal reach/escape logic: monitoring, smooth robustness
//! and robustness-guided scenario generation.
//!
//! The crate is organised bottom-up:
//!
//! - [`scene`]: multi-agent traces, kinematic signals and per-step graphs.
//! - [`formula`]: the formula AST, its text syntax and derived-operator expansion.
//! - [`monitor`]: exact Boolean and quantitative monitoring plus a brute-force oracle.
//! - [`smooth`]: differentiable robustness on a reverse-mode tape.
//! - [`generator`]: a deterministic latent-to-trajectory decoder.
//! - [`guidance`]: gradient ascent in latent space.

pub mod extreal;
pub mod formula;
pub mod generator;
pub mod guidance;
pub mod monitor;
pub mod scalar;
pub mod scene;
pub mod smooth;
pub mod testing;

pub use formula::{expand_derived, format, load_formula, parse, ColorSet, Comparator, Formula, Interval, ParseError};
pub use generator::{GeneratorConfig, ToyDecoder};
pub use guidance::{guided_sample, run_experiment, GuidanceConfig, GuidanceResult};
pub use monitor::{monitor, monitor_direct, monitor_oracle, Mode, RobustnessTable};
pub use scene::{
    build_graph, derived_signal, load_trace, Agent, AgentState, GraphConfig, GraphSnapshot, Metric, SceneError, Signal,
    SpatioTemporalTrace,
};
pub use smooth::{aggregate_rho, monitor_smooth, Aggregation, Tape, Var};

use thiserror::Error;

/// Umbrella error for operations spanning several modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid formula: {}", join(.0))]
    Validation(Vec<formula::ValidationError>),
    #[error(transparent)]
    Monitor(#[from] monitor::MonitorError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
}

fn join(errors: &[formula::ValidationError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl From<Vec<formula::ValidationError>> for Error {
    fn from(errors: Vec<formula::ValidationError>) -> Self {
        Error::Validation(errors)
    }
}
