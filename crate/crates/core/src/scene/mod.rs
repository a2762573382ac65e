//! Multi-agent spatio-temporal traces.
//!
//! A [`SpatioTemporalTrace`] holds one kinematic state per agent per timestep
//! together with a constant color label for every agent. Spatial structure is
//! derived from it on demand, one [`GraphSnapshot`] per timestep.

mod graph;
pub(crate) mod signal;

pub use graph::{build_graph, build_graph_with, shortest_distance, Edge, GraphConfig, GraphSnapshot, Metric};
pub use signal::{derived_signal, Signal};

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error("agent {agent}: state count mismatch (expected {expected}, found {found})")]
    StateCountMismatch { agent: u32, expected: usize, found: usize },
    #[error("agent {agent}: color '{color}' is not in the trace color universe")]
    UnknownColor { agent: u32, color: String },
    #[error("agent {agent}, step {step}: {message}")]
    BadState { agent: u32, step: usize, message: String },
    #[error("timestep {t} out of range for horizon {horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error("unknown agent id {0}")]
    UnknownAgent(u32),
    #[error("unknown signal '{0}'")]
    UnknownSignal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub heading: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, heading: f64) -> Self {
        Self { x, y, vx, vy, heading }
    }

    /// State whose heading follows the velocity direction.
    pub fn moving(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        let heading = if vx == 0.0 && vy == 0.0 {
            0.0
        } else {
            crate::scalar::wrap_angle(vy.atan2(vx))
        };
        Self { x, y, vx, vy, heading }
    }

    fn check(&self) -> Result<(), String> {
        let fields = [self.x, self.y, self.vx, self.vy, self.heading];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err("non-finite state field".into());
        }
        if !(self.heading > -PI && self.heading <= PI) {
            return Err(format!("heading {} outside (-pi, pi]", self.heading));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u32,
    pub color: String,
    pub states: Vec<AgentState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub dt: f64,
    pub horizon: usize,
}

/// The on-disk layout of a trace file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFile {
    pub meta: TraceMeta,
    pub colors: Vec<String>,
    pub agents: Vec<Agent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatioTemporalTrace {
    dt: f64,
    horizon: usize,
    colors: Vec<String>,
    agents: Vec<Agent>,
}

impl SpatioTemporalTrace {
    /// Builds a trace and checks every invariant.
    pub fn new(dt: f64, horizon: usize, colors: Vec<String>, agents: Vec<Agent>) -> Result<Self, SceneError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SceneError::Invalid(format!("dt must be positive, got {dt}")));
        }
        if horizon < 1 {
            return Err(SceneError::Invalid("horizon must be at least 1".into()));
        }
        let universe: HashSet<&str> = colors.iter().map(String::as_str).collect();
        let mut ids = HashSet::new();
        for agent in &agents {
            if !ids.insert(agent.id) {
                return Err(SceneError::Invalid(format!("duplicate agent id {}", agent.id)));
            }
            if !universe.contains(agent.color.as_str()) {
                return Err(SceneError::UnknownColor {
                    agent: agent.id,
                    color: agent.color.clone(),
                });
            }
            if agent.states.len() != horizon {
                return Err(SceneError::StateCountMismatch {
                    agent: agent.id,
                    expected: horizon,
                    found: agent.states.len(),
                });
            }
            for (step, s) in agent.states.iter().enumerate() {
                s.check().map_err(|message| SceneError::BadState {
                    agent: agent.id,
                    step,
                    message,
                })?;
            }
        }
        Ok(Self {
            dt,
            horizon,
            colors,
            agents,
        })
    }

    pub fn from_file_repr(file: TraceFile) -> Result<Self, SceneError> {
        Self::new(file.meta.dt, file.meta.horizon, file.colors, file.agents)
    }

    pub fn to_file_repr(&self) -> TraceFile {
        TraceFile {
            meta: TraceMeta {
                dt: self.dt,
                horizon: self.horizon,
            },
            colors: self.colors.clone(),
            agents: self.agents.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        Self::from_file_repr(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_repr()).expect("trace serialization cannot fail")
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn colors(&self) -> &[String] {
        &self.colors
    }
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }
    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Position of the agent with `id` in [`Self::agents`].
    pub fn agent_index(&self, id: u32) -> Result<usize, SceneError> {
        self.agents
            .iter()
            .position(|a| a.id == id)
            .ok_or(SceneError::UnknownAgent(id))
    }

    pub fn state(&self, agent: usize, t: usize) -> &AgentState {
        &self.agents[agent].states[t]
    }

    pub(crate) fn check_time(&self, t: usize) -> Result<(), SceneError> {
        if t >= self.horizon {
            Err(SceneError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            })
        } else {
            Ok(())
        }
    }
}

/// Reads and validates a trace JSON file.
pub fn load_trace(path: impl AsRef<Path>) -> Result<SpatioTemporalTrace, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    SpatioTemporalTrace::from_json(&text)
}
