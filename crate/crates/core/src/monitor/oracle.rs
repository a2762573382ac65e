//! Brute-force reference monitor.
//!
//! Evaluates the recursive semantics literally: explicit walk lists from
//! [`enumerate_routes_with`], all-pairs distances by Floyd-Warshall, and a
//! memoized top-down recursion over `(subformula, t, agent)`. Derived
//! operators are first rewritten with [`expand_derived`]. Boolean results are
//! computed as `±inf` with the same `min`/`max` rules, which is exact for
//! two-valued inputs.

use super::routes::{enumerate_routes_with, RouteLimits, StartRule};
use super::{Mode, MonitorError, Robustness};
use crate::formula::{expand_derived, validate, ColorSet, Comparator, Formula, Interval};
use crate::scene::{build_graph_with, GraphConfig, GraphSnapshot, Metric, SpatioTemporalTrace};
use std::collections::HashMap;

pub const MAX_AGENTS: usize = 6;
pub const MAX_HORIZON: usize = 10;
const MAX_ROUTES: usize = 2_000_000;

/// Reference result for `(t, agent_id)`; only for instances with at most
/// [`MAX_AGENTS`] agents and horizon at most [`MAX_HORIZON`].
pub fn monitor_oracle(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    f: &Formula,
    t: usize,
    agent_id: u32,
    mode: Mode,
) -> Result<Robustness, MonitorError> {
    if trace.agent_count() > MAX_AGENTS || trace.horizon() > MAX_HORIZON {
        return Err(MonitorError::InstanceTooLarge(format!(
            "{} agents, horizon {}",
            trace.agent_count(),
            trace.horizon()
        )));
    }
    validate(f, trace, cfg).map_err(MonitorError::Invalid)?;
    let agent = trace.agent_index(agent_id)?;
    trace.check_time(t)?;
    let core = expand_derived(f);
    let mut o = Oracle {
        trace,
        cfg,
        mode,
        memo: HashMap::new(),
        graphs: HashMap::new(),
    };
    let v = o.m(&core, t, agent)?;
    Ok(match mode {
        Mode::Boolean => Robustness::Boolean(v > 0.0),
        Mode::Quantitative => Robustness::Quantitative(v),
    })
}

/// Snapshot and all-pairs distances per `(metric, t)`.
type GraphCache = HashMap<(Metric, usize), (GraphSnapshot, Vec<Vec<f64>>)>;

struct Oracle<'a> {
    trace: &'a SpatioTemporalTrace,
    cfg: &'a GraphConfig,
    mode: Mode,
    memo: HashMap<(*const Formula, usize, usize), f64>,
    graphs: GraphCache,
}

fn floyd_warshall(g: &GraphSnapshot) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
        for &(j, w) in g.neighbors(i) {
            row[j] = row[j].min(w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

impl Oracle<'_> {
    fn color(&self, agent: usize) -> &str {
        &self.trace.agents()[agent].color
    }

    fn snapshot(&mut self, metric: Metric, t: usize) -> Result<(GraphSnapshot, Vec<Vec<f64>>), MonitorError> {
        if let Some(g) = self.graphs.get(&(metric, t)) {
            return Ok(g.clone());
        }
        let g = build_graph_with(self.trace, self.cfg, metric, t)?;
        let d = floyd_warshall(&g);
        self.graphs.insert((metric, t), (g.clone(), d.clone()));
        Ok((g, d))
    }

    fn m(&mut self, f: &Formula, t: usize, l: usize) -> Result<f64, MonitorError> {
        let key = (f as *const Formula, t, l);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let v = self.compute(f, t, l)?;
        self.memo.insert(key, v);
        Ok(v)
    }

    fn compute(&mut self, f: &Formula, t: usize, l: usize) -> Result<f64, MonitorError> {
        match f {
            Formula::True => Ok(f64::INFINITY),
            Formula::Atom(a) => {
                if !a.colors.contains(self.color(l)) {
                    return Ok(f64::NEG_INFINITY);
                }
                let s = crate::scene::signal::signal_value(self.trace, l, a.signal, t);
                let margin = match a.comparator {
                    Comparator::Greater => s - a.threshold,
                    Comparator::Less => a.threshold - s,
                };
                Ok(match self.mode {
                    Mode::Quantitative => margin,
                    Mode::Boolean if margin > 0.0 => f64::INFINITY,
                    Mode::Boolean => f64::NEG_INFINITY,
                })
            }
            Formula::Not(a) => Ok(-self.m(a, t, l)?),
            Formula::And(a, b) => Ok(self.m(a, t, l)?.min(self.m(b, t, l)?)),
            Formula::Until { interval, lhs, rhs } => {
                let dt = self.trace.dt();
                let last = self.trace.horizon() - 1;
                let a = (interval.lo / dt + 1e-9).floor() as usize;
                let b = if interval.hi.is_finite() {
                    ((interval.hi / dt - 1e-9).ceil().max(0.0) as usize)
                        .saturating_add(t)
                        .min(last)
                } else {
                    last
                };
                let mut best = f64::NEG_INFINITY;
                let mut t2 = t + a;
                while t2 <= b {
                    let mut v = self.m(rhs, t2, l)?;
                    for t1 in t..=t2 {
                        v = v.min(self.m(lhs, t1, l)?);
                    }
                    best = best.max(v);
                    t2 += 1;
                }
                Ok(best)
            }
            Formula::Reach {
                interval,
                metric,
                lhs,
                lhs_colors,
                rhs,
                rhs_colors,
            } => self.reach(t, l, interval, *metric, lhs, lhs_colors, rhs, rhs_colors),
            Formula::Escape {
                interval,
                metric,
                body,
                colors,
            } => self.escape(t, l, interval, *metric, body, colors),
            other => Err(MonitorError::DerivedOperator(format!("{other:?}"))),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn reach(
        &mut self,
        t: usize,
        l: usize,
        interval: &Interval,
        metric: Metric,
        phi1: &Formula,
        c1: &ColorSet,
        phi2: &Formula,
        c2: &ColorSet,
    ) -> Result<f64, MonitorError> {
        let (g, _) = self.snapshot(metric, t)?;
        let limits = RouteLimits {
            max_dist: interval.hi,
            max_nodes: None,
            max_routes: MAX_ROUTES,
        };
        let routes = enumerate_routes_with(&g, l, limits, c1, StartRule::Exempt, Some(c2))?;
        let mut best = f64::NEG_INFINITY;
        for r in &routes {
            for i in 0..r.nodes.len() {
                if !interval.contains(r.cum_dist[i]) || !c2.contains(self.color(r.nodes[i])) {
                    continue;
                }
                let mut v = self.m(phi2, t, r.nodes[i])?;
                for &u in &r.nodes[..i] {
                    v = v.min(self.m(phi1, t, u)?);
                }
                best = best.max(v);
            }
        }
        Ok(best)
    }

    fn escape(
        &mut self,
        t: usize,
        l: usize,
        interval: &Interval,
        metric: Metric,
        phi: &Formula,
        c: &ColorSet,
    ) -> Result<f64, MonitorError> {
        let (g, dist) = self.snapshot(metric, t)?;
        let n = g.node_count();
        // Simple paths suffice for the maximum, so walks of at most n + 1 nodes
        // and length n * max_w cover every endpoint and every useful prefix.
        let limits = RouteLimits {
            max_dist: n as f64 * g.max_edge_weight(),
            max_nodes: Some(n + 1),
            max_routes: MAX_ROUTES,
        };
        let routes = enumerate_routes_with(&g, l, limits, c, StartRule::Colored, None)?;
        let mut best = f64::NEG_INFINITY;
        for r in &routes {
            let mut prefix = f64::INFINITY;
            for &u in &r.nodes {
                prefix = prefix.min(self.m(phi, t, u)?);
                if interval.contains(dist[l][u]) {
                    best = best.max(prefix);
                }
            }
        }
        Ok(best)
    }
}
