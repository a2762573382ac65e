//! Differentiable robustness.
//!
//! The smooth monitor runs the same recursion and the same spatial
//! candidate sets as the hard quantitative monitor, with `max`/`min`
//! replaced by temperature-`β` log-sum-exp and the infinite bottom/top
//! elements replaced by `∓B`. Values are built on a [`Tape`], so gradients
//! with respect to trace fields (or anything they were computed from) come
//! from one backward sweep. Graph connectivity and route structure are taken
//! from the primal trace and carry no gradient.

mod tape;

pub use tape::{lse_max, smooth_max, smooth_min, Gradient, Tape, Var};

use crate::formula::{validate, Atom, Formula};
use crate::monitor::{Evaluator, Monitor, MonitorError, Semantics};
use crate::scene::{GraphConfig, SpatioTemporalTrace};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// How per-agent robustness at time 0 is combined into one objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Some agent satisfies the formula (safety-critical search).
    Max,
    /// Every agent satisfies the formula (realism constraints).
    Min,
}

impl Aggregation {
    /// Hard combination over agents.
    pub fn combine(self, values: &[f64]) -> f64 {
        match self {
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

impl FromStr for Aggregation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "max" => Ok(Aggregation::Max),
            "min" => Ok(Aggregation::Min),
            other => Err(format!("unknown aggregation '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothConfig {
    pub beta: f64,
    /// Magnitude substituted for the infinite bottom and top elements.
    pub bottom: f64,
    pub aggregation: Aggregation,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            beta: 10.0,
            bottom: 1e3,
            aggregation: Aggregation::Max,
        }
    }
}

impl SmoothConfig {
    pub fn with_beta(beta: f64) -> Self {
        Self {
            beta,
            ..Self::default()
        }
    }

    /// Clamps a hard value into the finite range used by the smooth monitor.
    pub fn clamp(&self, hard: f64) -> f64 {
        hard.clamp(-self.bottom, self.bottom)
    }
}

/// A trace whose kinematic fields are tape variables. The primal trace
/// fixes graph structure; `fields[agent][t]` is `[x, y, vx, vy, heading]`.
pub struct DiffTrace<'t> {
    pub trace: SpatioTemporalTrace,
    pub fields: Vec<Vec<[Var<'t>; 5]>>,
}

impl<'t> DiffTrace<'t> {
    /// Every field becomes an independent input on `tape`.
    pub fn leaves(tape: &'t Tape, trace: &SpatioTemporalTrace) -> Self {
        let fields = trace
            .agents()
            .iter()
            .map(|a| {
                a.states
                    .iter()
                    .map(|s| [s.x, s.y, s.vx, s.vy, s.heading].map(|v| tape.var(v)))
                    .collect()
            })
            .collect();
        Self {
            trace: trace.clone(),
            fields,
        }
    }
}

struct SmoothSemantics<'a, 't> {
    tape: &'t Tape,
    dtrace: &'a DiffTrace<'t>,
    cfg: SmoothConfig,
}

impl<'t> Semantics for SmoothSemantics<'_, 't> {
    type V = Var<'t>;

    fn top(&self) -> Var<'t> {
        self.tape.constant(self.cfg.bottom)
    }
    fn bottom(&self) -> Var<'t> {
        self.tape.constant(-self.cfg.bottom)
    }
    fn not(&self, v: &Var<'t>) -> Var<'t> {
        -*v
    }
    fn and(&self, vs: &[Var<'t>]) -> Var<'t> {
        if vs.is_empty() {
            self.top()
        } else {
            smooth_min(vs, self.cfg.beta)
        }
    }
    fn or(&self, vs: &[Var<'t>]) -> Var<'t> {
        if vs.is_empty() {
            self.bottom()
        } else {
            smooth_max(vs, self.cfg.beta)
        }
    }
    fn atom(&self, agent: usize, t: usize, atom: &Atom) -> Var<'t> {
        let cur = &self.dtrace.fields[agent][t];
        let prev = (t > 0).then(|| self.dtrace.fields[agent][t - 1][4]);
        atom.margin(atom.signal.eval(cur, prev, self.dtrace.trace.dt()))
    }
}

/// Smooth values of `f` at every `(t, agent)`, indexed `t * agents + agent`.
pub fn smooth_table<'t>(
    tape: &'t Tape,
    dtrace: &DiffTrace<'t>,
    cfg: &GraphConfig,
    f: &Formula,
    scfg: &SmoothConfig,
) -> Result<Vec<Var<'t>>, MonitorError> {
    validate(f, &dtrace.trace, cfg).map_err(MonitorError::Invalid)?;
    let sem = SmoothSemantics {
        tape,
        dtrace,
        cfg: *scfg,
    };
    Evaluator::new(&dtrace.trace, cfg, &sem).eval(f)
}

/// Smooth robustness of `f` at `(t, agent_id)`.
pub fn monitor_smooth(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    f: &Formula,
    t: usize,
    agent_id: u32,
    scfg: &SmoothConfig,
) -> Result<f64, MonitorError> {
    let agent = trace.agent_index(agent_id)?;
    if t >= trace.horizon() {
        return Err(crate::scene::SceneError::TimeOutOfRange {
            t,
            horizon: trace.horizon(),
        }
        .into());
    }
    let tape = Tape::new();
    let dtrace = DiffTrace::leaves(&tape, trace);
    let table = smooth_table(&tape, &dtrace, cfg, f, scfg)?;
    Ok(table[t * trace.agent_count() + agent].value())
}

/// Scalar objective: smooth robustness at time 0 of every agent, combined
/// by smooth max or smooth min.
pub fn aggregate_rho<'t>(
    tape: &'t Tape,
    dtrace: &DiffTrace<'t>,
    cfg: &GraphConfig,
    f: &Formula,
    scfg: &SmoothConfig,
) -> Result<Var<'t>, MonitorError> {
    let n = dtrace.trace.agent_count();
    if n == 0 {
        return Ok(tape.constant(-scfg.bottom));
    }
    let table = smooth_table(tape, dtrace, cfg, f, scfg)?;
    let first = &table[..n];
    Ok(match scfg.aggregation {
        Aggregation::Max => smooth_max(first, scfg.beta),
        Aggregation::Min => smooth_min(first, scfg.beta),
    })
}

/// Hard counterpart of [`aggregate_rho`]: exact robustness at time 0 per
/// agent, combined with `max` or `min`.
pub fn hard_rho(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    f: &Formula,
    aggregation: Aggregation,
) -> Result<f64, MonitorError> {
    let table = Monitor::new(trace, cfg, crate::monitor::Mode::Quantitative).table(f)?;
    let row: Vec<f64> = table.row(0).into_iter().map(|r| r.value()).collect();
    Ok(aggregation.combine(&row))
}

/// Partial derivatives per agent and step, `[x, y, vx, vy, heading]`.
pub type TraceGradient = Vec<Vec<[f64; 5]>>;

/// Smooth robustness at `(t, agent_id)` and its gradient with respect to
/// every trace field, laid out as `grad[agent][t] = [x, y, vx, vy, heading]`.
pub fn smooth_gradient(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    f: &Formula,
    t: usize,
    agent_id: u32,
    scfg: &SmoothConfig,
) -> Result<(f64, TraceGradient), MonitorError> {
    let agent = trace.agent_index(agent_id)?;
    if t >= trace.horizon() {
        return Err(crate::scene::SceneError::TimeOutOfRange {
            t,
            horizon: trace.horizon(),
        }
        .into());
    }
    let tape = Tape::new();
    let dtrace = DiffTrace::leaves(&tape, trace);
    let out = smooth_table(&tape, &dtrace, cfg, f, scfg)?[t * trace.agent_count() + agent];
    let g = out.grad();
    let grad = dtrace
        .fields
        .iter()
        .map(|states| states.iter().map(|vars| vars.map(|v| g.wrt(v))).collect())
        .collect();
    Ok((out.value(), grad))
}
