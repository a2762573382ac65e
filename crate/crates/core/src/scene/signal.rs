use super::{SceneError, SpatioTemporalTrace};
use crate::scalar::{wrap_angle, Scalar};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Kinematic quantity an atomic predicate can compare against a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    X,
    Y,
    Vx,
    Vy,
    Heading,
    Speed,
    HeadingChange,
}

impl Signal {
    pub const ALL: [Signal; 7] = [
        Signal::X,
        Signal::Y,
        Signal::Vx,
        Signal::Vy,
        Signal::Heading,
        Signal::Speed,
        Signal::HeadingChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Signal::X => "x",
            Signal::Y => "y",
            Signal::Vx => "vx",
            Signal::Vy => "vy",
            Signal::Heading => "heading",
            Signal::Speed => "speed",
            Signal::HeadingChange => "heading_change",
        }
    }

    /// Evaluates the signal from raw fields `[x, y, vx, vy, heading]` at the
    /// current step and, for `heading_change`, the previous heading.
    pub fn eval<S: Scalar>(self, cur: &[S; 5], prev_heading: Option<S>, dt: f64) -> S {
        match self {
            Signal::X => cur[0],
            Signal::Y => cur[1],
            Signal::Vx => cur[2],
            Signal::Vy => cur[3],
            Signal::Heading => cur[4],
            Signal::Speed => (cur[2] * cur[2] + cur[3] * cur[3]).sqrt(),
            Signal::HeadingChange => match prev_heading {
                None => cur[4].constant_like(0.0),
                Some(prev) => wrap_angle(cur[4] - prev).abs().mul_const(1.0 / dt),
            },
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Signal {
    type Err = SceneError;
    fn from_str(s: &str) -> Result<Self, SceneError> {
        Signal::ALL
            .into_iter()
            .find(|sig| sig.name() == s)
            .ok_or_else(|| SceneError::UnknownSignal(s.to_string()))
    }
}

/// Value of a named kinematic signal for one agent at step `t`.
pub fn derived_signal(
    trace: &SpatioTemporalTrace,
    agent_id: u32,
    signal_name: &str,
    t: usize,
) -> Result<f64, SceneError> {
    let signal: Signal = signal_name.parse()?;
    let idx = trace.agent_index(agent_id)?;
    trace.check_time(t)?;
    Ok(signal_value(trace, idx, signal, t))
}

pub(crate) fn signal_value(trace: &SpatioTemporalTrace, agent: usize, signal: Signal, t: usize) -> f64 {
    let s = trace.state(agent, t);
    let prev = (t > 0).then(|| trace.state(agent, t - 1).heading);
    signal.eval(&[s.x, s.y, s.vx, s.vy, s.heading], prev, trace.dt())
}
