//! Scene safety metrics: closest approaches and potential collisions.

use serde::{Deserialize, Serialize};
use strelgen_core::SpatioTemporalTrace;

/// Closest approach of one agent pair over the whole trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub a: u32,
    pub b: u32,
    pub min_distance: f64,
    /// First step at which `min_distance` is attained.
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Minimum center-to-center distance over all pairs and steps.
    #[serde(with = "strelgen_core::extreal")]
    pub min_pairwise_distance: f64,
    /// Distinct agents that come strictly closer than `threshold` to another agent.
    pub potential_collisions: usize,
    pub threshold: f64,
    /// Ids counted in `potential_collisions`, ascending.
    pub colliding_agents: Vec<u32>,
    /// Every pair ordered by `(a, b)` with `a < b`.
    pub pairs: Vec<PairDistance>,
}

/// Metrics of `trace`; agents are compared by id, so the result does not
/// depend on their order in the file.
pub fn compute(trace: &SpatioTemporalTrace, threshold: f64) -> Result<MetricsReport, String> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(format!("threshold must be positive, got {threshold}"));
    }
    let mut order: Vec<usize> = (0..trace.agent_count()).collect();
    order.sort_by_key(|&i| trace.agents()[i].id);
    let mut pairs = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            let (mut best, mut at) = (f64::INFINITY, 0);
            for t in 0..trace.horizon() {
                let (p, q) = (trace.state(i, t), trace.state(j, t));
                let d = (p.x - q.x).hypot(p.y - q.y);
                if d < best {
                    best = d;
                    at = t;
                }
            }
            pairs.push(PairDistance {
                a: trace.agents()[i].id,
                b: trace.agents()[j].id,
                min_distance: best,
                t: at,
            });
        }
    }
    let min_pairwise_distance = pairs.iter().map(|p| p.min_distance).fold(f64::INFINITY, f64::min);
    let mut colliding_agents: Vec<u32> = pairs
        .iter()
        .filter(|p| p.min_distance < threshold)
        .flat_map(|p| [p.a, p.b])
        .collect();
    colliding_agents.sort_unstable();
    colliding_agents.dedup();
    Ok(MetricsReport {
        min_pairwise_distance,
        potential_collisions: colliding_agents.len(),
        threshold,
        colliding_agents,
        pairs,
    })
}
