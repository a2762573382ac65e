//! Routes over a graph snapshot.
//!
//! [`enumerate_routes`] lists walks explicitly and serves as the reference
//! semantics. The monitor itself never lists walks: [`reach_candidates`] and
//! [`escape_candidates`] search over `(node, visited set)` states and return
//! only the distinct, inclusion-minimal sets of nodes whose values enter a
//! route's conjunction. Since `⊗` is idempotent and decreasing under set
//! inclusion, the `⊕` over those sets equals the `⊕` over all qualifying walks.

use super::MonitorError;
use crate::formula::{ColorSet, Interval};
use crate::scene::GraphSnapshot;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};

/// Default cap on explored search states per spatial evaluation.
pub const DEFAULT_STATE_BUDGET: usize = 5_000_000;

/// A walk through a snapshot. `nodes` are node indices, `cum_dist[i]` is the
/// length of the walk up to `nodes[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<usize>,
    pub cum_dist: Vec<f64>,
    /// Whether the last node's color is in the terminal color set.
    pub terminal_ok: bool,
}

impl Route {
    pub fn ids(&self, graph: &GraphSnapshot) -> Vec<u32> {
        self.nodes.iter().map(|&i| graph.nodes[i]).collect()
    }

    pub fn last(&self) -> usize {
        *self.nodes.last().expect("routes are never empty")
    }
}

/// How route colors are constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartRule {
    /// The start may have any color. A walk may continue from a node only if
    /// it is the start or its color is allowed; the last node is unconstrained.
    Exempt,
    /// Every node of the walk, start included, must have an allowed color.
    Colored,
}

#[derive(Debug, Clone, Copy)]
pub struct RouteLimits {
    pub max_dist: f64,
    pub max_nodes: Option<usize>,
    pub max_routes: usize,
}

impl RouteLimits {
    pub fn distance(max_dist: f64) -> Self {
        Self {
            max_dist,
            max_nodes: None,
            max_routes: DEFAULT_STATE_BUDGET,
        }
    }
}

/// All walks from `start` of length at most `max_dist` whose nodes after the
/// start may only be left when colored in `c1`; `c2` classifies endpoints.
pub fn enumerate_routes(
    graph: &GraphSnapshot,
    start: usize,
    max_dist: f64,
    c1: &ColorSet,
    c2: Option<&ColorSet>,
) -> Result<Vec<Route>, MonitorError> {
    enumerate_routes_with(graph, start, RouteLimits::distance(max_dist), c1, StartRule::Exempt, c2)
}

pub fn enumerate_routes_with(
    graph: &GraphSnapshot,
    start: usize,
    limits: RouteLimits,
    colors: &ColorSet,
    rule: StartRule,
    terminal: Option<&ColorSet>,
) -> Result<Vec<Route>, MonitorError> {
    if limits.max_dist.is_infinite() && limits.max_nodes.is_none() && graph.is_cyclic() {
        return Err(MonitorError::UnboundedRoutes);
    }
    let allowed = |i: usize| colors.contains(&graph.node_colors[i]);
    if rule == StartRule::Colored && !allowed(start) {
        return Ok(Vec::new());
    }
    let terminal_ok = |i: usize| terminal.is_none_or(|c| c.contains(&graph.node_colors[i]));
    let mut out = Vec::new();
    let mut stack = vec![Route {
        nodes: vec![start],
        cum_dist: vec![0.0],
        terminal_ok: terminal_ok(start),
    }];
    while let Some(route) = stack.pop() {
        let end = route.last();
        let len = *route.cum_dist.last().unwrap();
        let may_leave = match rule {
            StartRule::Exempt => route.nodes.len() == 1 || allowed(end),
            StartRule::Colored => true,
        };
        let room = limits.max_nodes.is_none_or(|m| route.nodes.len() < m);
        if may_leave && room {
            for &(next, w) in graph.neighbors(end).iter().rev() {
                let cum = len + w;
                if cum > limits.max_dist || (rule == StartRule::Colored && !allowed(next)) {
                    continue;
                }
                let mut nodes = route.nodes.clone();
                nodes.push(next);
                let mut cum_dist = route.cum_dist.clone();
                cum_dist.push(cum);
                stack.push(Route {
                    nodes,
                    cum_dist,
                    terminal_ok: terminal_ok(next),
                });
            }
        }
        out.push(route);
        if out.len() > limits.max_routes {
            return Err(MonitorError::BudgetExceeded(limits.max_routes));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Len(f64);

impl Eq for Len {}
impl PartialOrd for Len {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Len {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Node filter used by the candidate searches.
pub(crate) struct Colors<'a> {
    graph: &'a GraphSnapshot,
    ignore: bool,
}

impl<'a> Colors<'a> {
    pub(crate) fn new(graph: &'a GraphSnapshot, ignore: bool) -> Self {
        Self { graph, ignore }
    }

    fn allows(&self, set: &ColorSet, node: usize) -> bool {
        self.ignore || set.contains(&self.graph.node_colors[node])
    }
}

fn check_size(graph: &GraphSnapshot) -> Result<(), MonitorError> {
    if graph.node_count() > 64 {
        Err(MonitorError::TooManyAgents(graph.node_count()))
    } else {
        Ok(())
    }
}

/// Drops duplicate sets and sets that strictly contain another set with the same endpoint.
fn minimal(mut cands: Vec<(usize, u64)>) -> Vec<(usize, u64)> {
    cands.sort_unstable_by_key(|&(v, m)| (v, m.count_ones(), m));
    cands.dedup();
    let mut out: Vec<(usize, u64)> = Vec::with_capacity(cands.len());
    for (v, m) in cands {
        if !out.iter().any(|&(w, k)| w == v && k & m == k) {
            out.push((v, m));
        }
    }
    out
}

/// Candidates `(endpoint, prefix set)` of a colored Reach from `start`: the
/// value of a candidate is `φ2(endpoint) ⊗ ⊗_{u ∈ prefix} φ1(u)`.
pub(crate) fn reach_candidates(
    graph: &GraphSnapshot,
    colors: &Colors,
    start: usize,
    interval: &Interval,
    c1: &ColorSet,
    c2: &ColorSet,
    budget: usize,
) -> Result<Vec<(usize, u64)>, MonitorError> {
    check_size(graph)?;
    let (lo, hi) = (interval.lo, interval.hi);
    let mut heap = BinaryHeap::new();
    // Below `lo` every distinct length matters; from `lo` on only the shortest.
    let mut short: HashSet<(usize, u64, u64)> = HashSet::new();
    let mut settled: HashMap<(usize, u64), f64> = HashMap::new();
    let mut cands = Vec::new();
    let mut explored = 0usize;
    heap.push(Reverse((Len(0.0), start, 0u64)));
    while let Some(Reverse((Len(len), v, mask))) = heap.pop() {
        if len < lo {
            if !short.insert((v, mask, len.to_bits())) {
                continue;
            }
        } else {
            if settled.contains_key(&(v, mask)) {
                continue;
            }
            settled.insert((v, mask), len);
            if colors.allows(c2, v) {
                cands.push((v, mask));
            }
        }
        explored += 1;
        if explored > budget {
            return Err(MonitorError::BudgetExceeded(budget));
        }
        let may_leave = mask == 0 || colors.allows(c1, v);
        if !may_leave {
            continue;
        }
        let next_mask = mask | (1u64 << v);
        for &(u, w) in graph.neighbors(v) {
            let next = len + w;
            if next > hi || (next >= lo && settled.contains_key(&(u, next_mask))) {
                continue;
            }
            heap.push(Reverse((Len(next), u, next_mask)));
        }
    }
    Ok(minimal(cands))
}

/// Candidates `(endpoint, route set)` of a colored Escape from `start`: the
/// value of a candidate is `⊗_{u ∈ route set} φ(u)`; the endpoint's graph
/// distance from `start` lies in `interval`.
pub(crate) fn escape_candidates(
    graph: &GraphSnapshot,
    colors: &Colors,
    start: usize,
    interval: &Interval,
    c: &ColorSet,
    budget: usize,
) -> Result<Vec<(usize, u64)>, MonitorError> {
    check_size(graph)?;
    if !colors.allows(c, start) {
        return Ok(Vec::new());
    }
    let dist = graph.distances_from(start);
    let mut seen = HashSet::new();
    let first = (start, 1u64 << start);
    seen.insert(first);
    let mut queue = vec![first];
    let mut cands = Vec::new();
    while let Some((v, mask)) = queue.pop() {
        if interval.contains(dist[v]) {
            cands.push((v, mask));
        }
        for &(u, _) in graph.neighbors(v) {
            if !colors.allows(c, u) {
                continue;
            }
            let state = (u, mask | (1u64 << u));
            if seen.insert(state) {
                if seen.len() > budget {
                    return Err(MonitorError::BudgetExceeded(budget));
                }
                queue.push(state);
            }
        }
    }
    Ok(minimal(cands))
}

/// Quantitative Reach at `start` from per-node values of both operands.
pub fn reach_on_graph(
    graph: &GraphSnapshot,
    start: usize,
    interval: &Interval,
    phi1: &[f64],
    c1: &ColorSet,
    phi2: &[f64],
    c2: &ColorSet,
) -> Result<f64, MonitorError> {
    let cands = reach_candidates(
        graph,
        &Colors::new(graph, false),
        start,
        interval,
        c1,
        c2,
        DEFAULT_STATE_BUDGET,
    )?;
    Ok(cands
        .into_iter()
        .map(|(v, mask)| mask_nodes(mask).map(|u| phi1[u]).fold(phi2[v], f64::min))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Quantitative Escape at `start` from per-node values of the operand.
pub fn escape_on_graph(
    graph: &GraphSnapshot,
    start: usize,
    interval: &Interval,
    phi: &[f64],
    c: &ColorSet,
) -> Result<f64, MonitorError> {
    let cands = escape_candidates(
        graph,
        &Colors::new(graph, false),
        start,
        interval,
        c,
        DEFAULT_STATE_BUDGET,
    )?;
    Ok(cands
        .into_iter()
        .map(|(_, mask)| mask_nodes(mask).map(|u| phi[u]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max))
}

pub(crate) fn mask_nodes(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask & (1u64 << i) != 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Metric;
    use proptest::prelude::*;

    fn line(colors: [&str; 3]) -> GraphSnapshot {
        GraphSnapshot::from_edges(
            0,
            Metric::Euclid,
            vec![0, 1, 2],
            colors.iter().map(|c| c.to_string()).collect(),
            &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
            1e-6,
        )
    }

    #[test]
    fn line_routes() {
        let g = line(["car", "car", "car"]);
        let mut routes: Vec<Vec<usize>> = enumerate_routes(&g, 0, 2.0, &ColorSet::All, None)
            .unwrap()
            .into_iter()
            .map(|r| r.nodes)
            .collect();
        routes.sort();
        assert_eq!(routes, vec![vec![0], vec![0, 1], vec![0, 1, 0], vec![0, 1, 2]]);
    }

    #[test]
    fn colored_routes_pass_through_allowed_nodes() {
        let g = GraphSnapshot::from_edges(
            0,
            Metric::Hops,
            vec![0, 1, 2, 3],
            ["car", "ped", "car", "car"].iter().map(|c| c.to_string()).collect(),
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 3, 1.0), (3, 2, 1.0)],
            1e-6,
        );
        let routes = enumerate_routes(&g, 0, 5.0, &ColorSet::of(["ped"]), None).unwrap();
        for r in &routes {
            let inner = r.nodes.len().saturating_sub(1).max(1);
            for &n in &r.nodes[1..inner] {
                assert_eq!(g.node_colors[n], "ped");
            }
        }
        assert!(routes.iter().any(|r| r.nodes == vec![0, 1, 2]));
        assert!(!routes.iter().any(|r| r.nodes == vec![0, 3, 2]));
    }

    #[test]
    fn isolated_node() {
        let g = GraphSnapshot::from_edges(0, Metric::Hops, vec![4], vec!["car".into()], &[], 1e-6);
        let routes = enumerate_routes(&g, 0, f64::INFINITY, &ColorSet::All, Some(&ColorSet::All)).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].ids(&g), vec![4]);
        assert!(routes[0].terminal_ok);
    }

    #[test]
    fn unbounded_on_cycle_errors() {
        let g = line(["car", "car", "car"]);
        assert!(matches!(
            enumerate_routes(&g, 0, f64::INFINITY, &ColorSet::All, None),
            Err(MonitorError::UnboundedRoutes)
        ));
    }

    #[test]
    fn reach_examples() {
        let g = line(["car", "car", "car"]);
        let all = ColorSet::All;
        let v = reach_on_graph(
            &g,
            0,
            &Interval::new(0.0, 2.0),
            &[3.0, 2.0, 5.0],
            &all,
            &[-1.0, -1.0, 4.0],
            &all,
        )
        .unwrap();
        assert_eq!(v, 2.0);
        // Length exactly 3 needs a revisiting walk such as 0,1,0,1 or 0,1,2,1.
        let v = reach_on_graph(
            &g,
            0,
            &Interval::new(3.0, 3.0),
            &[3.0, 2.0, 5.0],
            &all,
            &[-1.0, 7.0, 4.0],
            &all,
        )
        .unwrap();
        assert_eq!(v, 2.0);
        let v = reach_on_graph(
            &g,
            0,
            &Interval::new(0.0, 0.0),
            &[3.0, 2.0, 5.0],
            &all,
            &[1.5, 7.0, 4.0],
            &all,
        )
        .unwrap();
        assert_eq!(v, 1.5);
    }

    #[test]
    fn escape_examples() {
        let g = GraphSnapshot::from_edges(
            0,
            Metric::Euclid,
            vec![0, 1],
            vec!["car".into(), "car".into()],
            &[(0, 1, 5.0), (1, 0, 5.0)],
            1e-6,
        );
        let all = ColorSet::All;
        assert_eq!(
            escape_on_graph(&g, 0, &Interval::new(4.0, 10.0), &[2.0, 3.0], &all).unwrap(),
            2.0
        );
        assert_eq!(
            escape_on_graph(&g, 0, &Interval::new(6.0, 10.0), &[2.0, 3.0], &all).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            escape_on_graph(&g, 0, &Interval::new(0.0, 0.0), &[2.0, 3.0], &all).unwrap(),
            2.0
        );
    }

    fn arb_graph() -> impl Strategy<Value = GraphSnapshot> {
        (2usize..6).prop_flat_map(|n| {
            (
                proptest::collection::vec(prop_oneof![Just("car"), Just("ped")], n),
                proptest::collection::vec((0..n, 0..n, 0.5..3.0f64), 0..(2 * n)),
            )
                .prop_map(move |(colors, edges)| {
                    let edges: Vec<_> = edges.into_iter().filter(|(a, b, _)| a != b).collect();
                    GraphSnapshot::from_edges(
                        0,
                        Metric::Euclid,
                        (0..n as u32).collect(),
                        colors.iter().map(|c| c.to_string()).collect(),
                        &edges,
                        1e-6,
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn colored_routes_are_a_subset(g in arb_graph(), d in 0.0..6.0f64) {
            let all = enumerate_routes(&g, 0, d, &ColorSet::All, None).unwrap();
            let car = enumerate_routes(&g, 0, d, &ColorSet::of(["car"]), None).unwrap();
            prop_assert!(car.len() <= all.len());
            for r in &all {
                prop_assert!(r.cum_dist.windows(2).all(|w| w[1] > w[0]));
                prop_assert!(r.cum_dist[0] == 0.0 && *r.cum_dist.last().unwrap() <= d);
            }
        }

        #[test]
        fn reach_search_matches_walks(g in arb_graph(), lo in 0.0..3.0f64, span in 0.0..3.0f64,
                                      phi1 in proptest::collection::vec(-5.0..5.0f64, 6),
                                      phi2 in proptest::collection::vec(-5.0..5.0f64, 6)) {
            let iv = Interval::new(lo, lo + span);
            let c1 = ColorSet::of(["car"]);
            let c2 = ColorSet::of(["ped"]);
            let fast = reach_on_graph(&g, 0, &iv, &phi1, &c1, &phi2, &c2).unwrap();
            let mut slow = f64::NEG_INFINITY;
            for r in enumerate_routes(&g, 0, iv.hi, &c1, Some(&c2)).unwrap() {
                let i = r.nodes.len() - 1;
                if r.terminal_ok && iv.contains(r.cum_dist[i]) {
                    let v = r.nodes[..i].iter().map(|&u| phi1[u]).fold(phi2[r.nodes[i]], f64::min);
                    slow = slow.max(v);
                }
            }
            prop_assert_eq!(fast, slow);
        }
    }
}
