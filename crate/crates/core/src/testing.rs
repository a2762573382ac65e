//! Random instance generators for property tests and acceptance checks.
//!
//! Instances are deliberately small and well spread: agents keep a minimum
//! separation so metric edge weights stay bounded below, and spatial bounds
//! are scaled to the scene so explicit walk enumeration stays cheap.

use crate::formula::{ColorSet, Comparator, Formula, Interval};
use crate::generator::ContextScene;
use crate::scene::{Agent, AgentState, GraphConfig, Metric, Signal, SpatioTemporalTrace};
use rand::seq::IndexedRandom;
use rand::Rng;
use std::f64::consts::PI;

pub const COLORS: [&str; 3] = ["car", "pedestrian", "bus"];

/// Shape limits of a random instance.
#[derive(Debug, Clone, Copy)]
pub struct InstanceLimits {
    pub max_agents: usize,
    pub max_horizon: usize,
    pub max_depth: usize,
}

impl Default for InstanceLimits {
    fn default() -> Self {
        Self {
            max_agents: 5,
            max_horizon: 8,
            max_depth: 4,
        }
    }
}

/// Side of the square agents are placed in, and their minimum separation.
const ARENA: f64 = 25.0;
const MIN_SEPARATION: f64 = 3.0;

fn heading<R: Rng>(rng: &mut R) -> f64 {
    // (-π, π]
    PI - rng.random::<f64>() * 2.0 * PI
}

fn spread_positions<R: Rng>(rng: &mut R, n: usize) -> Vec<(f64, f64)> {
    'retry: loop {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut tries = 0;
            loop {
                let p = (rng.random::<f64>() * ARENA, rng.random::<f64>() * ARENA);
                if pts.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= MIN_SEPARATION) {
                    pts.push(p);
                    break;
                }
                tries += 1;
                if tries > 200 {
                    continue 'retry;
                }
            }
        }
        return pts;
    }
}

/// A trace with independently drawn states per step (the monitor does not
/// require kinematic consistency).
pub fn random_trace<R: Rng>(rng: &mut R, limits: &InstanceLimits) -> SpatioTemporalTrace {
    let n = rng.random_range(1..=limits.max_agents);
    let horizon = rng.random_range(1..=limits.max_horizon);
    let dt = *[0.5, 1.0].choose(rng).unwrap();
    let colors: Vec<String> = (0..n).map(|_| COLORS.choose(rng).unwrap().to_string()).collect();
    let mut states = vec![Vec::with_capacity(horizon); n];
    for _ in 0..horizon {
        let pts = spread_positions(rng, n);
        for (a, (x, y)) in pts.into_iter().enumerate() {
            let vx = rng.random_range(-4.0..4.0);
            let vy = rng.random_range(-4.0..4.0);
            states[a].push(AgentState::new(x, y, vx, vy, heading(rng)));
        }
    }
    let agents = states
        .into_iter()
        .zip(colors)
        .enumerate()
        .map(|(i, (states, color))| Agent {
            id: (i * 3 + 1) as u32,
            color,
            states,
        })
        .collect();
    SpatioTemporalTrace::new(dt, horizon, COLORS.iter().map(|c| c.to_string()).collect(), agents)
        .expect("generated traces are valid")
}

pub fn random_graph_config<R: Rng>(rng: &mut R) -> GraphConfig {
    let mut cfg = GraphConfig::new(rng.random_range(8.0..15.0), Metric::Euclid).with_all_metrics();
    cfg.front_half_angle = rng.random_range(0.5..1.5);
    cfg
}

pub fn random_colors<R: Rng>(rng: &mut R) -> ColorSet {
    if rng.random_bool(0.3) {
        return ColorSet::All;
    }
    loop {
        let picked: Vec<&str> = COLORS.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if !picked.is_empty() {
            return ColorSet::of(picked);
        }
    }
}

pub fn random_atom<R: Rng>(rng: &mut R) -> Formula {
    let signal = *Signal::ALL.choose(rng).unwrap();
    let threshold = match signal {
        Signal::X | Signal::Y => rng.random_range(0.0..ARENA),
        Signal::Vx | Signal::Vy => rng.random_range(-4.0..4.0),
        Signal::Speed => rng.random_range(0.0..5.0),
        Signal::Heading => rng.random_range(-PI..PI),
        Signal::HeadingChange => rng.random_range(0.0..6.0),
    };
    let cmp = if rng.random_bool(0.5) {
        Comparator::Greater
    } else {
        Comparator::Less
    };
    Formula::atom(signal, cmp, threshold, random_colors(rng))
}

/// Temporal bound within `[0, limit]` seconds (or unbounded above).
fn temporal_interval<R: Rng>(rng: &mut R, limit: f64) -> Interval {
    let lo = if rng.random_bool(0.5) {
        0.0
    } else {
        rng.random::<f64>() * 0.6 * limit
    };
    let hi = if rng.random_bool(0.15) {
        f64::INFINITY
    } else {
        lo + rng.random::<f64>() * (limit - lo)
    };
    Interval::new(lo, hi)
}

/// Spatial bound for `metric`; `hi` is finite unless `unbounded_ok`.
fn spatial_interval<R: Rng>(rng: &mut R, metric: Metric, unbounded_ok: bool) -> Interval {
    let (lo, span) = match metric {
        Metric::Hops => (
            *[0.0, 0.0, 1.0, 2.0].choose(rng).unwrap(),
            rng.random_range(0..=2) as f64,
        ),
        Metric::Euclid | Metric::Front => {
            let lo = if rng.random_bool(0.5) {
                0.0
            } else {
                rng.random_range(0.0..8.0)
            };
            (lo, rng.random_range(0.0..10.0))
        }
    };
    let hi = if unbounded_ok && rng.random_bool(0.3) {
        f64::INFINITY
    } else {
        lo + span
    };
    Interval::new(lo, hi)
}

/// Which operators a random formula may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorSet {
    /// `true`, atoms, `!`, `&`, `U`, `R`, `E`.
    Core,
    /// Everything, derived operators included.
    All,
}

/// Random formula of depth at most `depth` (an atom has depth 1) whose
/// finite temporal bounds stay within `time_limit` seconds.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, ops: OperatorSet, time_limit: f64) -> Formula {
    if depth <= 1 || rng.random_bool(0.2) {
        return if rng.random_bool(0.1) {
            Formula::True
        } else {
            random_atom(rng)
        };
    }
    let d = depth - 1;
    let max_op = if ops == OperatorSet::Core { 6 } else { 13 };
    let metric = *Metric::ALL.choose(rng).unwrap();
    match rng.random_range(0..max_op) {
        0 => Formula::not(random_formula(rng, d, ops, time_limit)),
        1 => Formula::and(
            random_formula(rng, d, ops, time_limit),
            random_formula(rng, d, ops, time_limit),
        ),
        2 => Formula::until(
            temporal_interval(rng, time_limit),
            random_formula(rng, d, ops, time_limit),
            random_formula(rng, d, ops, time_limit),
        ),
        3 | 4 => Formula::reach(
            spatial_interval(rng, metric, false),
            metric,
            random_formula(rng, d, ops, time_limit),
            random_colors(rng),
            random_formula(rng, d, ops, time_limit),
            random_colors(rng),
        ),
        5 => Formula::escape(
            spatial_interval(rng, metric, true),
            metric,
            random_formula(rng, d, ops, time_limit),
            random_colors(rng),
        ),
        6 => Formula::or(
            random_formula(rng, d, ops, time_limit),
            random_formula(rng, d, ops, time_limit),
        ),
        7 => Formula::eventually(
            temporal_interval(rng, time_limit),
            random_formula(rng, d, ops, time_limit),
        ),
        8 => Formula::globally(
            temporal_interval(rng, time_limit),
            random_formula(rng, d, ops, time_limit),
        ),
        9 => Formula::somewhere(
            spatial_interval(rng, metric, false),
            metric,
            random_formula(rng, d, ops, time_limit),
            random_colors(rng),
        ),
        10 => Formula::everywhere(
            spatial_interval(rng, metric, false),
            metric,
            random_formula(rng, d, ops, time_limit),
            random_colors(rng),
        ),
        _ => {
            let hi = spatial_interval(rng, metric, false).hi;
            Formula::surround(
                Interval::new(0.0, hi),
                metric,
                random_formula(rng, d, ops, time_limit),
                random_colors(rng),
                random_formula(rng, d, ops, time_limit),
                random_colors(rng),
            )
        }
    }
}

/// Decoder context with `2..=max_agents` spread agents and a horizon of 6
/// to 10 half-second steps.
pub fn random_context<R: Rng>(rng: &mut R, max_agents: usize) -> ContextScene {
    let n = rng.random_range(2..=max_agents.max(2));
    let horizon = rng.random_range(6..=10);
    let agents = spread_positions(rng, n)
        .into_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let speed = rng.random_range(0.5..6.0);
            let h = heading(rng);
            let state = AgentState::new(x, y, speed * h.cos(), speed * h.sin(), h);
            (i as u32 + 1, COLORS.choose(rng).unwrap().to_string(), state)
        })
        .collect();
    ContextScene {
        dt: 0.5,
        horizon,
        colors: COLORS.iter().map(|c| c.to_string()).collect(),
        agents,
    }
}

/// A trace, its graph configuration and a formula to monitor on it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub trace: SpatioTemporalTrace,
    pub cfg: GraphConfig,
    pub formula: Formula,
}

pub fn random_instance<R: Rng>(rng: &mut R, limits: &InstanceLimits, ops: OperatorSet) -> Instance {
    let trace = random_trace(rng, limits);
    let cfg = random_graph_config(rng);
    let formula = random_formula(rng, limits.max_depth, ops, trace.horizon() as f64 * trace.dt());
    Instance { trace, cfg, formula }
}

/// Graph edge sets of every metric at every step; equal keys mean equal
/// route structure.
pub fn structure_key(trace: &SpatioTemporalTrace, cfg: &GraphConfig) -> Vec<Vec<(u32, u32)>> {
    let mut out = Vec::new();
    for metric in Metric::ALL {
        for t in 0..trace.horizon() {
            let g = crate::scene::build_graph_with(trace, cfg, metric, t).expect("t in range");
            out.push(g.edges.iter().map(|e| (e.from, e.to)).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let limits = InstanceLimits::default();
        for _ in 0..200 {
            let tr = random_trace(&mut rng, &limits);
            assert!(tr.agent_count() <= 5 && tr.horizon() <= 8);
            let limit = tr.horizon() as f64 * tr.dt();
            let f = random_formula(&mut rng, 4, OperatorSet::All, limit);
            assert!(f.depth() <= 4);
            let core = random_formula(&mut rng, 4, OperatorSet::Core, limit);
            assert!(core.is_core());
            let cfg = random_graph_config(&mut rng);
            assert!(crate::formula::validate(&f, &tr, &cfg).is_ok());
        }
    }
}
