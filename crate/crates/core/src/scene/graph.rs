use super::{SceneError, SpatioTemporalTrace};
use crate::scalar::wrap_angle;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Distance notion attached to the edges of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Undirected, weighted by Euclidean distance.
    Euclid,
    /// Directed forward cone around the source agent's heading, weighted by Euclidean distance.
    Front,
    /// Undirected, unit weights.
    Hops,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Euclid, Metric::Front, Metric::Hops];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclid => "euclid",
            Metric::Front => "front",
            Metric::Hops => "hops",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum MetricDecl {
    One(Metric),
    Many(Vec<Metric>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphConfigRepr {
    connectivity: Connectivity,
    metric: MetricDecl,
    #[serde(default = "default_half_angle")]
    front_half_angle: f64,
    #[serde(default = "default_min_edge_weight")]
    min_edge_weight: f64,
}

fn default_half_angle() -> f64 {
    PI / 3.0
}

fn default_min_edge_weight() -> f64 {
    1e-6
}

/// Connectivity rule and declared distance metrics.
///
/// The JSON `metric` field is either one metric name or a list of names; the
/// first entry is the metric used by [`build_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphConfigRepr", into = "GraphConfigRepr")]
pub struct GraphConfig {
    pub radius: f64,
    pub metrics: Vec<Metric>,
    pub front_half_angle: f64,
    pub min_edge_weight: f64,
}

impl TryFrom<GraphConfigRepr> for GraphConfig {
    type Error = String;
    fn try_from(r: GraphConfigRepr) -> Result<Self, String> {
        let metrics = match r.metric {
            MetricDecl::One(m) => vec![m],
            MetricDecl::Many(v) => v,
        };
        let cfg = GraphConfig {
            radius: r.connectivity.radius,
            metrics,
            front_half_angle: r.front_half_angle,
            min_edge_weight: r.min_edge_weight,
        };
        cfg.check()?;
        Ok(cfg)
    }
}

impl From<GraphConfig> for GraphConfigRepr {
    fn from(c: GraphConfig) -> Self {
        let metric = if c.metrics.len() == 1 {
            MetricDecl::One(c.metrics[0])
        } else {
            MetricDecl::Many(c.metrics)
        };
        GraphConfigRepr {
            connectivity: Connectivity { radius: c.radius },
            metric,
            front_half_angle: c.front_half_angle,
            min_edge_weight: c.min_edge_weight,
        }
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig::new(20.0, Metric::Euclid)
    }
}

impl GraphConfig {
    pub fn new(radius: f64, metric: Metric) -> Self {
        GraphConfig {
            radius,
            metrics: vec![metric],
            front_half_angle: default_half_angle(),
            min_edge_weight: default_min_edge_weight(),
        }
    }

    /// Declares every metric, keeping `self.metric()` first.
    pub fn with_all_metrics(mut self) -> Self {
        for m in Metric::ALL {
            if !self.metrics.contains(&m) {
                self.metrics.push(m);
            }
        }
        self
    }

    pub fn metric(&self) -> Metric {
        self.metrics[0]
    }

    pub fn declares(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.radius.is_nan() || self.radius <= 0.0 {
            return Err(format!("radius must be positive, got {}", self.radius));
        }
        if self.metrics.is_empty() {
            return Err("at least one metric must be declared".into());
        }
        if !(self.front_half_angle > 0.0 && self.front_half_angle <= PI) {
            return Err(format!(
                "front_half_angle must lie in (0, pi], got {}",
                self.front_half_angle
            ));
        }
        if !(self.min_edge_weight > 0.0 && self.min_edge_weight.is_finite()) {
            return Err(format!(
                "min_edge_weight must be positive, got {}",
                self.min_edge_weight
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: u32,
    pub to: u32,
    pub weight: f64,
}

/// Spatial graph at one timestep. Nodes are addressed by agent id in the
/// public API and by position (index) internally.
#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    pub t: usize,
    pub metric: Metric,
    pub nodes: Vec<u32>,
    pub node_colors: Vec<String>,
    pub edges: Vec<Edge>,
    out: Vec<Vec<(usize, f64)>>,
}

impl GraphSnapshot {
    /// Builds a snapshot from explicit index-based edges. Used for hand-made
    /// graphs in tests and tools; weights below `min_weight` are clamped.
    pub fn from_edges(
        t: usize,
        metric: Metric,
        nodes: Vec<u32>,
        node_colors: Vec<String>,
        edges: &[(usize, usize, f64)],
        min_weight: f64,
    ) -> Self {
        let mut out = vec![Vec::new(); nodes.len()];
        let mut list = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            let w = w.max(min_weight);
            out[a].push((b, w));
            list.push(Edge {
                from: nodes[a],
                to: nodes[b],
                weight: w,
            });
        }
        GraphSnapshot {
            t,
            metric,
            nodes,
            node_colors,
            edges: list,
            out,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Outgoing `(target index, weight)` pairs of node `idx`.
    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.out[idx]
    }

    pub fn index_of(&self, id: u32) -> Result<usize, SceneError> {
        self.nodes
            .iter()
            .position(|&n| n == id)
            .ok_or(SceneError::UnknownAgent(id))
    }

    pub fn has_edge(&self, from: u32, to: u32) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn edge_weight(&self, from: u32, to: u32) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to)
            .map(|e| e.weight)
    }

    pub fn max_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).fold(0.0, f64::max)
    }

    fn to_digraph(&self) -> (DiGraph<(), f64>, Vec<NodeIndex>) {
        let mut g: DiGraph<(), f64> = DiGraph::with_capacity(self.nodes.len(), self.edges.len());
        let idx: Vec<NodeIndex> = (0..self.nodes.len()).map(|_| g.add_node(())).collect();
        for (a, outs) in self.out.iter().enumerate() {
            for &(b, w) in outs {
                g.add_edge(idx[a], idx[b], w);
            }
        }
        (g, idx)
    }

    /// Whether the directed graph has a cycle (a symmetric edge pair counts).
    pub fn is_cyclic(&self) -> bool {
        petgraph::algo::is_cyclic_directed(&self.to_digraph().0)
    }

    /// Shortest-path distances from node index `src` to every node (`+inf` when unreachable).
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        let (g, idx) = self.to_digraph();
        let found = petgraph::algo::dijkstra(&g, idx[src], None, |e| *e.weight());
        (0..self.nodes.len())
            .map(|i| found.get(&idx[i]).copied().unwrap_or(f64::INFINITY))
            .collect()
    }
}

/// Snapshot at time `t` under the config's primary metric.
pub fn build_graph(trace: &SpatioTemporalTrace, cfg: &GraphConfig, t: usize) -> Result<GraphSnapshot, SceneError> {
    build_graph_with(trace, cfg, cfg.metric(), t)
}

/// Snapshot at time `t` under an explicit metric.
pub fn build_graph_with(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    metric: Metric,
    t: usize,
) -> Result<GraphSnapshot, SceneError> {
    trace.check_time(t)?;
    let agents = trace.agents();
    let mut edges = Vec::new();
    for (a, agent_a) in agents.iter().enumerate() {
        let sa = &agent_a.states[t];
        for (b, agent_b) in agents.iter().enumerate() {
            if a == b {
                continue;
            }
            let sb = &agent_b.states[t];
            let (dx, dy) = (sb.x - sa.x, sb.y - sa.y);
            let dist = (dx * dx + dy * dy).sqrt();
            if dist > cfg.radius {
                continue;
            }
            let keep = match metric {
                Metric::Euclid | Metric::Hops => true,
                // Coincident agents count as being in front of each other.
                Metric::Front => dist == 0.0 || wrap_angle(dy.atan2(dx) - sa.heading).abs() <= cfg.front_half_angle,
            };
            if keep {
                let w = match metric {
                    Metric::Hops => 1.0,
                    Metric::Euclid | Metric::Front => dist,
                };
                edges.push((a, b, w));
            }
        }
    }
    Ok(GraphSnapshot::from_edges(
        t,
        metric,
        agents.iter().map(|a| a.id).collect(),
        agents.iter().map(|a| a.color.clone()).collect(),
        &edges,
        cfg.min_edge_weight,
    ))
}

/// Length of the shortest path between two agents; `0` for identical nodes and `+inf` when unreachable.
pub fn shortest_distance(graph: &GraphSnapshot, from: u32, to: u32) -> Result<f64, SceneError> {
    let a = graph.index_of(from)?;
    let b = graph.index_of(to)?;
    if a == b {
        return Ok(0.0);
    }
    Ok(graph.distances_from(a)[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Agent, AgentState};
    use proptest::prelude::*;

    fn trace_at(points: &[(f64, f64, f64)]) -> SpatioTemporalTrace {
        let agents = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y, h))| Agent {
                id: i as u32,
                color: "car".into(),
                states: vec![AgentState::new(x, y, h.cos(), h.sin(), h)],
            })
            .collect();
        SpatioTemporalTrace::new(0.1, 1, vec!["car".into()], agents).unwrap()
    }

    fn line_graph() -> GraphSnapshot {
        GraphSnapshot::from_edges(
            0,
            Metric::Hops,
            vec![0, 1, 2],
            vec!["a".into(), "b".into(), "c".into()],
            &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
            1e-6,
        )
    }

    #[test]
    fn euclid_three_four_five() {
        let tr = trace_at(&[(0.0, 0.0, 0.0), (3.0, 4.0, 0.0)]);
        let g = build_graph(&tr, &GraphConfig::new(10.0, Metric::Euclid), 0).unwrap();
        assert_eq!(g.edge_weight(0, 1), Some(5.0));
        assert_eq!(g.edge_weight(1, 0), Some(5.0));
        assert_eq!(g.edges.len(), 2);
        let g = build_graph(&tr, &GraphConfig::new(4.0, Metric::Euclid), 0).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn front_cone_is_directed() {
        let tr = trace_at(&[(0.0, 0.0, 0.0), (-5.0, 0.0, 0.0)]);
        let g = build_graph(&tr, &GraphConfig::new(10.0, Metric::Front), 0).unwrap();
        assert!(g.has_edge(1, 0), "b sees a ahead");
        assert!(!g.has_edge(0, 1), "a does not see b behind");
    }

    #[test]
    fn hops_have_unit_weight_and_clamp() {
        let tr = trace_at(&[(0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (2.0, 0.0, 0.0)]);
        let g = build_graph(&tr, &GraphConfig::new(10.0, Metric::Hops), 0).unwrap();
        assert!(g.edges.iter().all(|e| e.weight == 1.0));
        let g = build_graph(&tr, &GraphConfig::new(10.0, Metric::Euclid), 0).unwrap();
        assert_eq!(g.edge_weight(0, 1), Some(1e-6));
    }

    #[test]
    fn shortest_distance_cases() {
        let g = line_graph();
        assert_eq!(shortest_distance(&g, 1, 1).unwrap(), 0.0);
        assert_eq!(shortest_distance(&g, 0, 2).unwrap(), 2.0);
        let lone = GraphSnapshot::from_edges(0, Metric::Hops, vec![0, 1], vec!["a".into(), "a".into()], &[], 1e-6);
        assert_eq!(shortest_distance(&lone, 0, 1).unwrap(), f64::INFINITY);
        assert!(shortest_distance(&g, 0, 9).is_err());
    }

    #[test]
    fn time_out_of_range() {
        let tr = trace_at(&[(0.0, 0.0, 0.0)]);
        assert!(build_graph(&tr, &GraphConfig::default(), 1).is_err());
    }

    #[test]
    fn config_json() {
        let cfg = GraphConfig::from_json(r#"{"connectivity":{"radius":12.5},"metric":"front"}"#).unwrap();
        assert_eq!(cfg.metric(), Metric::Front);
        assert!((cfg.front_half_angle - PI / 3.0).abs() < 1e-15);
        let cfg = GraphConfig::from_json(
            r#"{"connectivity":{"radius":1},"metric":["hops","euclid"],"front_half_angle":1,"min_edge_weight":0.01}"#,
        )
        .unwrap();
        assert_eq!(cfg.metrics, vec![Metric::Hops, Metric::Euclid]);
        assert!(GraphConfig::from_json(r#"{"connectivity":{"radius":-1},"metric":"hops"}"#).is_err());
        let back: GraphConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    fn arb_points() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64, -3.1..3.1f64), 2..7)
    }

    proptest! {
        #[test]
        fn symmetric_and_monotone(pts in arb_points(), r in 0.5..15.0f64, extra in 0.0..5.0f64) {
            let tr = trace_at(&pts);
            for metric in [Metric::Euclid, Metric::Hops] {
                let g = build_graph(&tr, &GraphConfig::new(r, metric), 0).unwrap();
                for e in &g.edges {
                    prop_assert_eq!(g.edge_weight(e.to, e.from), Some(e.weight));
                }
                let bigger = build_graph(&tr, &GraphConfig::new(r + extra, metric), 0).unwrap();
                for e in &g.edges {
                    prop_assert!(bigger.has_edge(e.from, e.to));
                }
            }
            let front = build_graph(&tr, &GraphConfig::new(r, Metric::Front), 0).unwrap();
            let euclid = build_graph(&tr, &GraphConfig::new(r, Metric::Euclid), 0).unwrap();
            for e in &front.edges {
                prop_assert!(euclid.has_edge(e.from, e.to));
                prop_assert!(e.weight >= 1e-6);
            }
        }

        #[test]
        fn triangle_inequality(pts in arb_points(), r in 2.0..15.0f64) {
            let tr = trace_at(&pts);
            let g = build_graph(&tr, &GraphConfig::new(r, Metric::Euclid), 0).unwrap();
            let n = g.node_count();
            let d: Vec<Vec<f64>> = (0..n).map(|i| g.distances_from(i)).collect();
            for a in 0..n { for b in 0..n { for c in 0..n {
                if d[a][b].is_finite() && d[b][c].is_finite() {
                    prop_assert!(d[a][c] <= d[a][b] + d[b][c] + 1e-9);
                }
            }}}
        }
    }
}
