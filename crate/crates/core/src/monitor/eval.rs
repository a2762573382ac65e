use super::routes::{escape_candidates, mask_nodes, reach_candidates, Colors};
use super::semantics::Semantics;
use super::MonitorError;
use crate::formula::{ColorSet, Formula, Interval};
use crate::scene::{build_graph_with, GraphConfig, GraphSnapshot, Metric, SpatioTemporalTrace};
use std::collections::HashMap;

/// Bottom-up evaluator producing one value per `(t, agent)` for every
/// subformula. Generic over the value domain so the hard and smooth monitors
/// share the operator definitions and the spatial candidate sets.
pub(crate) struct Evaluator<'a, S: Semantics> {
    trace: &'a SpatioTemporalTrace,
    cfg: &'a GraphConfig,
    sem: &'a S,
    /// Evaluate `|`, `F`, `G`, `SW`, `EW` and `Surr` directly instead of rejecting them.
    pub derived: bool,
    /// Ignore every color constraint (plain, uncolored semantics).
    pub ignore_colors: bool,
    pub budget: usize,
    graphs: HashMap<(Metric, usize), GraphSnapshot>,
}

/// Values indexed by `t * agents + agent`.
pub(crate) type Table<V> = Vec<V>;

impl<'a, S: Semantics> Evaluator<'a, S> {
    pub(crate) fn new(trace: &'a SpatioTemporalTrace, cfg: &'a GraphConfig, sem: &'a S) -> Self {
        Self {
            trace,
            cfg,
            sem,
            derived: true,
            ignore_colors: false,
            budget: super::routes::DEFAULT_STATE_BUDGET,
            graphs: HashMap::new(),
        }
    }

    fn n(&self) -> usize {
        self.trace.agent_count()
    }

    fn horizon(&self) -> usize {
        self.trace.horizon()
    }

    fn graph(&mut self, metric: Metric, t: usize) -> Result<&GraphSnapshot, MonitorError> {
        if !self.graphs.contains_key(&(metric, t)) {
            let g = build_graph_with(self.trace, self.cfg, metric, t)?;
            self.graphs.insert((metric, t), g);
        }
        Ok(&self.graphs[&(metric, t)])
    }

    fn allows(&self, set: &ColorSet, agent: usize) -> bool {
        self.ignore_colors || set.contains(&self.trace.agents()[agent].color)
    }

    fn require_derived(&self, op: &str) -> Result<(), MonitorError> {
        if self.derived {
            Ok(())
        } else {
            Err(MonitorError::DerivedOperator(op.to_string()))
        }
    }

    /// Inclusive step window `[t+lo, min(t+hi, T-1)]`, or `None` when empty.
    fn window(&self, interval: &Interval, t: usize) -> Option<(usize, usize)> {
        let (lo, hi) = interval.to_steps(self.trace.dt());
        let last = self.horizon() - 1;
        let start = t.checked_add(lo)?;
        let end = hi.map_or(last, |h| t.saturating_add(h).min(last));
        (start <= end).then_some((start, end))
    }

    pub(crate) fn eval(&mut self, f: &Formula) -> Result<Table<S::V>, MonitorError> {
        let (n, horizon) = (self.n(), self.horizon());
        let sem = self.sem;
        Ok(match f {
            Formula::True => vec![sem.top(); n * horizon],
            Formula::Atom(atom) => {
                let mut out = Vec::with_capacity(n * horizon);
                for t in 0..horizon {
                    for agent in 0..n {
                        out.push(if self.allows(&atom.colors, agent) {
                            sem.atom(agent, t, atom)
                        } else {
                            sem.bottom()
                        });
                    }
                }
                out
            }
            Formula::Not(a) => self.eval(a)?.iter().map(|v| sem.not(v)).collect(),
            Formula::And(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                a.into_iter().zip(b).map(|(x, y)| sem.and(&[x, y])).collect()
            }
            Formula::Or(a, b) => {
                self.require_derived("|")?;
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                a.into_iter().zip(b).map(|(x, y)| sem.or(&[x, y])).collect()
            }
            Formula::Until { interval, lhs, rhs } => {
                let (l, r) = (self.eval(lhs)?, self.eval(rhs)?);
                self.temporal(interval, |start, end, t, agent| {
                    let cands: Vec<S::V> = (start..=end)
                        .map(|t2| {
                            let mut terms = Vec::with_capacity(t2 - t + 2);
                            terms.push(r[t2 * n + agent].clone());
                            terms.extend((t..=t2).map(|t1| l[t1 * n + agent].clone()));
                            sem.and(&terms)
                        })
                        .collect();
                    sem.or(&cands)
                })
            }
            Formula::Eventually { interval, body } => {
                self.require_derived("F")?;
                let b = self.eval(body)?;
                self.temporal(interval, |start, end, _, agent| {
                    let vs: Vec<S::V> = (start..=end).map(|t2| b[t2 * n + agent].clone()).collect();
                    sem.or(&vs)
                })
            }
            Formula::Globally { interval, body } => {
                self.require_derived("G")?;
                let b = self.eval(body)?;
                let mut out = self.temporal(interval, |start, end, _, agent| {
                    let vs: Vec<S::V> = (start..=end).map(|t2| b[t2 * n + agent].clone()).collect();
                    sem.and(&vs)
                });
                // An empty window is vacuously true.
                for t in 0..horizon {
                    if self.window(interval, t).is_none() {
                        for agent in 0..n {
                            out[t * n + agent] = sem.top();
                        }
                    }
                }
                out
            }
            Formula::Reach {
                interval,
                metric,
                lhs,
                lhs_colors,
                rhs,
                rhs_colors,
            } => {
                let (l, r) = (self.eval(lhs)?, self.eval(rhs)?);
                self.reach(*metric, interval, &l, lhs_colors, &r, rhs_colors)?
            }
            Formula::Escape {
                interval,
                metric,
                body,
                colors,
            } => {
                let b = self.eval(body)?;
                self.escape(*metric, interval, &b, colors)?
            }
            Formula::Somewhere {
                interval,
                metric,
                body,
                colors,
            } => {
                self.require_derived("SW")?;
                let b = self.eval(body)?;
                self.endpoints(*metric, interval, colors, |vs| sem.or(vs), &b)?
            }
            Formula::Everywhere {
                interval,
                metric,
                body,
                colors,
            } => {
                self.require_derived("EW")?;
                let b = self.eval(body)?;
                self.endpoints(*metric, interval, colors, |vs| sem.and(vs), &b)?
            }
            Formula::Surround {
                interval,
                metric,
                lhs,
                lhs_colors,
                rhs,
                ..
            } => {
                self.require_derived("Surr")?;
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                let outside: Table<S::V> = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| sem.not(&sem.or(&[x.clone(), y.clone()])))
                    .collect();
                let inside = Interval::new(0.0, interval.hi);
                let beyond = Interval::new(interval.hi, f64::INFINITY);
                let leak = self.reach(*metric, &inside, &a, lhs_colors, &outside, &ColorSet::All)?;
                let escape = self.escape(*metric, &beyond, &a, lhs_colors)?;
                (0..n * horizon)
                    .map(|i| sem.and(&[a[i].clone(), sem.not(&leak[i]), sem.not(&escape[i])]))
                    .collect()
            }
        })
    }

    /// Fills a table from `value(start, end, t, agent)` over each non-empty window; empty windows give `⊥`.
    fn temporal(&self, interval: &Interval, mut value: impl FnMut(usize, usize, usize, usize) -> S::V) -> Table<S::V> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * self.horizon());
        for t in 0..self.horizon() {
            let w = self.window(interval, t);
            for agent in 0..n {
                out.push(match w {
                    Some((start, end)) => value(start, end, t, agent),
                    None => self.sem.bottom(),
                });
            }
        }
        out
    }

    fn reach(
        &mut self,
        metric: Metric,
        interval: &Interval,
        phi1: &Table<S::V>,
        c1: &ColorSet,
        phi2: &Table<S::V>,
        c2: &ColorSet,
    ) -> Result<Table<S::V>, MonitorError> {
        let (n, sem, ignore, budget) = (self.n(), self.sem, self.ignore_colors, self.budget);
        let mut out = Vec::with_capacity(n * self.horizon());
        for t in 0..self.horizon() {
            let g = self.graph(metric, t)?;
            let colors = Colors::new(g, ignore);
            for start in 0..n {
                let cands = reach_candidates(g, &colors, start, interval, c1, c2, budget)?;
                let vals: Vec<S::V> = cands
                    .into_iter()
                    .map(|(v, mask)| {
                        let mut terms = vec![phi2[t * n + v].clone()];
                        terms.extend(mask_nodes(mask).map(|u| phi1[t * n + u].clone()));
                        sem.and(&terms)
                    })
                    .collect();
                out.push(sem.or(&vals));
            }
        }
        Ok(out)
    }

    fn escape(
        &mut self,
        metric: Metric,
        interval: &Interval,
        phi: &Table<S::V>,
        c: &ColorSet,
    ) -> Result<Table<S::V>, MonitorError> {
        let (n, sem, ignore, budget) = (self.n(), self.sem, self.ignore_colors, self.budget);
        let mut out = Vec::with_capacity(n * self.horizon());
        for t in 0..self.horizon() {
            let g = self.graph(metric, t)?;
            let colors = Colors::new(g, ignore);
            for start in 0..n {
                let cands = escape_candidates(g, &colors, start, interval, c, budget)?;
                let vals: Vec<S::V> = cands
                    .into_iter()
                    .map(|(_, mask)| {
                        let terms: Vec<S::V> = mask_nodes(mask).map(|u| phi[t * n + u].clone()).collect();
                        sem.and(&terms)
                    })
                    .collect();
                out.push(sem.or(&vals));
            }
        }
        Ok(out)
    }

    /// Combines `phi` over the distinct endpoints reachable through any route
    /// (no color constraint on the way) whose color is in `c`.
    fn endpoints(
        &mut self,
        metric: Metric,
        interval: &Interval,
        c: &ColorSet,
        combine: impl Fn(&[S::V]) -> S::V,
        phi: &Table<S::V>,
    ) -> Result<Table<S::V>, MonitorError> {
        let (n, ignore, budget) = (self.n(), self.ignore_colors, self.budget);
        let mut out = Vec::with_capacity(n * self.horizon());
        for t in 0..self.horizon() {
            let g = self.graph(metric, t)?;
            let colors = Colors::new(g, ignore);
            for start in 0..n {
                let mut ends: Vec<usize> = reach_candidates(g, &colors, start, interval, &ColorSet::All, c, budget)?
                    .into_iter()
                    .map(|(v, _)| v)
                    .collect();
                ends.dedup();
                let vals: Vec<S::V> = ends.into_iter().map(|v| phi[t * n + v].clone()).collect();
                out.push(combine(&vals));
            }
        }
        Ok(out)
    }
}
