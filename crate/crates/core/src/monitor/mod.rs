//! Exact Boolean and quantitative monitoring.
//!
//! Quantitative values live in the extended reals: conjunction is `min`,
//! disjunction `max`, negation flips the sign and the bottom element is
//! `-inf`. An atom evaluated at an agent whose color is outside the atom's
//! color set yields the bottom element.
//!
//! `Until` takes the maximum over `t'` in the window of
//! `min(φ2(t'), min_{t'' ∈ [t, t']} φ1(t''))`; windows are clipped at the
//! end of the trace and an empty window yields bottom. Spatial operators are
//! evaluated through route candidates, see [`routes`].

mod eval;
pub mod oracle;
pub mod routes;
pub(crate) mod semantics;

pub use oracle::monitor_oracle;
pub use routes::{enumerate_routes, escape_on_graph, reach_on_graph, Route};
pub use semantics::Semantics;

pub(crate) use eval::Evaluator;

use crate::formula::{validate, Formula, ValidationError};
use crate::scene::{GraphConfig, SceneError, SpatioTemporalTrace};
use semantics::{BooleanSemantics, QuantitativeSemantics};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("invalid formula: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("derived operator '{0}' must be expanded before core monitoring")]
    DerivedOperator(String),
    #[error("unbounded route enumeration on a cyclic graph")]
    UnboundedRoutes,
    #[error("route search exceeded its budget of {0} states")]
    BudgetExceeded(usize),
    #[error("spatial operators support at most 64 agents, got {0}")]
    TooManyAgents(usize),
    #[error("instance too large for the oracle: {0}")]
    InstanceTooLarge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Boolean,
    Quantitative,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "boolean" => Ok(Mode::Boolean),
            "quantitative" | "hard" => Ok(Mode::Quantitative),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Robustness {
    Boolean(bool),
    Quantitative(f64),
}

impl Robustness {
    pub fn satisfied(self) -> bool {
        match self {
            Robustness::Boolean(b) => b,
            Robustness::Quantitative(v) => v > 0.0,
        }
    }

    /// Numeric view; Boolean values map to `±inf`.
    pub fn value(self) -> f64 {
        match self {
            Robustness::Boolean(true) => f64::INFINITY,
            Robustness::Boolean(false) => f64::NEG_INFINITY,
            Robustness::Quantitative(v) => v,
        }
    }
}

impl fmt::Display for Robustness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Robustness::Boolean(b) => write!(f, "{b}"),
            Robustness::Quantitative(v) => write!(f, "{v}"),
        }
    }
}

/// Values of one formula at every `(t, agent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessTable {
    pub mode: Mode,
    pub horizon: usize,
    pub agent_ids: Vec<u32>,
    values: Vec<f64>,
}

impl RobustnessTable {
    /// Raw values indexed `t * agents + agent`; Boolean entries are `±inf`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: usize, agent_idx: usize) -> Robustness {
        let v = self.values[t * self.agent_ids.len() + agent_idx];
        match self.mode {
            Mode::Boolean => Robustness::Boolean(v > 0.0),
            Mode::Quantitative => Robustness::Quantitative(v),
        }
    }

    pub fn at(&self, t: usize, agent_id: u32) -> Result<Robustness, MonitorError> {
        let idx = self
            .agent_ids
            .iter()
            .position(|&a| a == agent_id)
            .ok_or(SceneError::UnknownAgent(agent_id))?;
        if t >= self.horizon {
            return Err(SceneError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            }
            .into());
        }
        Ok(self.get(t, idx))
    }

    /// Values at `t` for every agent, in trace order.
    pub fn row(&self, t: usize) -> Vec<Robustness> {
        (0..self.agent_ids.len()).map(|i| self.get(t, i)).collect()
    }
}

/// Configurable hard monitor.
#[derive(Debug, Clone)]
pub struct Monitor<'a> {
    trace: &'a SpatioTemporalTrace,
    cfg: &'a GraphConfig,
    mode: Mode,
    derived: bool,
    ignore_colors: bool,
    budget: usize,
}

impl<'a> Monitor<'a> {
    /// A monitor that evaluates derived operators directly.
    pub fn new(trace: &'a SpatioTemporalTrace, cfg: &'a GraphConfig, mode: Mode) -> Self {
        Self {
            trace,
            cfg,
            mode,
            derived: true,
            ignore_colors: false,
            budget: routes::DEFAULT_STATE_BUDGET,
        }
    }

    /// Rejects formulas that still contain derived operators.
    pub fn core_only(mut self) -> Self {
        self.derived = false;
        self
    }

    /// Drops every color constraint, giving plain uncolored semantics.
    pub fn uncolored(mut self) -> Self {
        self.ignore_colors = true;
        self
    }

    pub fn state_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn table(&self, f: &Formula) -> Result<RobustnessTable, MonitorError> {
        validate(f, self.trace, self.cfg).map_err(MonitorError::Invalid)?;
        let values = match self.mode {
            Mode::Boolean => {
                let sem = BooleanSemantics { trace: self.trace };
                self.run(&sem, f)?
                    .into_iter()
                    .map(|b| if b { f64::INFINITY } else { f64::NEG_INFINITY })
                    .collect()
            }
            Mode::Quantitative => {
                let sem = QuantitativeSemantics { trace: self.trace };
                self.run(&sem, f)?
            }
        };
        Ok(RobustnessTable {
            mode: self.mode,
            horizon: self.trace.horizon(),
            agent_ids: self.trace.agents().iter().map(|a| a.id).collect(),
            values,
        })
    }

    fn run<S: Semantics>(&self, sem: &S, f: &Formula) -> Result<Vec<S::V>, MonitorError> {
        let mut ev = Evaluator::new(self.trace, self.cfg, sem);
        ev.derived = self.derived;
        ev.ignore_colors = self.ignore_colors;
        ev.budget = self.budget;
        ev.eval(f)
    }

    pub fn at(&self, f: &Formula, t: usize, agent_id: u32) -> Result<Robustness, MonitorError> {
        self.trace.agent_index(agent_id)?;
        self.trace.check_time(t)?;
        self.table(f)?.at(t, agent_id)
    }
}

/// Monitors a core formula (derived operators are rejected) at `(t, agent_id)`.
pub fn monitor(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    f: &Formula,
    t: usize,
    agent_id: u32,
    mode: Mode,
) -> Result<Robustness, MonitorError> {
    Monitor::new(trace, cfg, mode).core_only().at(f, t, agent_id)
}

/// Monitors any formula, evaluating derived operators natively.
pub fn monitor_direct(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    f: &Formula,
    t: usize,
    agent_id: u32,
    mode: Mode,
) -> Result<Robustness, MonitorError> {
    Monitor::new(trace, cfg, mode).at(f, t, agent_id)
}
