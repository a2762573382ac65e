//! Deterministic scenes sized for benchmarking.

use strelgen_core::generator::ContextScene;
use strelgen_core::{parse, Agent, AgentState, Formula, GraphConfig, Metric, SpatioTemporalTrace};

const COLORS: [&str; 3] = ["car", "bus", "pedestrian"];
pub const DT: f64 = 0.5;

/// Formulas exercising Reach, Surround and a nested Everywhere.
pub const FORMULAS: [(&str, &str); 3] = [
    (
        "reach",
        "F[0,4] ((speed > 8)@{car,bus} R[0.1,10]{front} (speed < 1.5)@{car,bus})",
    ),
    (
        "surround",
        "F[0,4] ((speed > 8)@{car} Surr[0,7]{euclid} (speed < 2)@{car})",
    ),
    (
        "everywhere",
        "G[0,4] EW[0,30]{euclid} !((speed > 0)@{car,bus} & SW[0.001,2]{euclid} (speed > 0)@{car,bus})",
    ),
];

pub fn formula(text: &str) -> Formula {
    parse(text).expect("benchmark formulas parse")
}

pub fn graph() -> GraphConfig {
    GraphConfig::new(15.0, Metric::Euclid).with_all_metrics()
}

fn initial(i: usize) -> (u32, String, AgentState) {
    let lane = (i % 3) as f64;
    let row = (i / 3) as f64;
    let speed = 2.0 + (i % 5) as f64 * 1.5;
    (
        i as u32 + 1,
        COLORS[i % COLORS.len()].to_string(),
        AgentState::moving(row * 7.0, lane * 3.5, speed, 0.0),
    )
}

/// `n` agents in three lanes moving at constant velocity.
pub fn lane_trace(n: usize, horizon: usize) -> SpatioTemporalTrace {
    let agents = (0..n)
        .map(|i| {
            let (id, color, s) = initial(i);
            let states = (0..horizon)
                .map(|t| {
                    let tt = t as f64 * DT;
                    AgentState::moving(s.x + s.vx * tt, s.y + s.vy * tt, s.vx, s.vy)
                })
                .collect();
            Agent { id, color, states }
        })
        .collect();
    SpatioTemporalTrace::new(DT, horizon, COLORS.iter().map(|c| c.to_string()).collect(), agents)
        .expect("lane traces are valid")
}

/// The initial states of [`lane_trace`] as a generator context.
pub fn lane_context(n: usize, horizon: usize) -> ContextScene {
    ContextScene {
        dt: DT,
        horizon,
        colors: COLORS.iter().map(|c| c.to_string()).collect(),
        agents: (0..n).map(initial).collect(),
    }
}
