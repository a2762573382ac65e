//! Robustness-guided search in the decoder's latent space.
//!
//! The objective is `J(z) = ρ(decode(z)) - λ ½‖z‖²` with `ρ` the smooth
//! aggregate robustness. Each step is plain gradient ascent
//! `z ← z + η ∇J(z)`. Before every step the decoded trace is checked with the
//! hard monitor; a hard robustness above `stop_margin` ends the search. A
//! search that runs out of steps restarts from a fresh latent draw whose seed
//! is derived from the run seed.

use crate::formula::Formula;
use crate::generator::{sample_latent, ContextScene, GeneratorError, ToyDecoder};
use crate::monitor::MonitorError;
use crate::scene::{GraphConfig, SpatioTemporalTrace, TraceFile};
use crate::smooth::{aggregate_rho, hard_rho, Aggregation, SmoothConfig, Tape, Var};
use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("invalid guidance parameters: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub eta: f64,
    pub lambda: f64,
    pub max_step: usize,
    pub max_restarts: usize,
    pub beta: f64,
    pub stop_margin: f64,
    pub aggregation: Aggregation,
    /// Finite stand-in for the infinite bottom element.
    pub bottom: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            lambda: 0.01,
            max_step: 500,
            max_restarts: 5,
            beta: 10.0,
            stop_margin: 0.0,
            aggregation: Aggregation::Max,
            bottom: 1e3,
        }
    }
}

impl GuidanceConfig {
    pub fn smooth(&self) -> SmoothConfig {
        SmoothConfig {
            beta: self.beta,
            bottom: self.bottom,
            aggregation: self.aggregation,
        }
    }

    pub fn check(&self) -> Result<(), GuidanceError> {
        let bad = |m: &str| Err(GuidanceError::Config(m.to_string()));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.stop_margin >= 0.0 && self.stop_margin.is_finite()) {
            return bad("stop_margin must be non-negative");
        }
        if !(self.bottom > 0.0 && self.bottom.is_finite()) {
            return bad("bottom must be positive and finite");
        }
        Ok(())
    }
}

/// Everything an optimization run needs besides its latent start.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub decoder: &'a ToyDecoder,
    pub context: &'a ContextScene,
    pub formula: &'a Formula,
    pub graph: &'a GraphConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub j: f64,
    pub rho: f64,
    pub penalty: f64,
}

impl Objective {
    pub fn combine(rho: f64, penalty: f64, lambda: f64) -> Self {
        Self {
            j: rho - lambda * penalty,
            rho,
            penalty,
        }
    }
}

pub fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `J(z)`, the smooth robustness and the penalty `½‖z‖²`.
pub fn objective(problem: &Problem, z: &[f64], params: &GuidanceConfig) -> Result<Objective, GuidanceError> {
    Ok(objective_and_gradient(problem, z, params)?.0)
}

/// `J(z)` together with `∇J(z)`.
pub fn objective_and_gradient(
    problem: &Problem,
    z: &[f64],
    params: &GuidanceConfig,
) -> Result<(Objective, Vec<f64>), GuidanceError> {
    let tape = Tape::new();
    let vars: Vec<Var> = z.iter().map(|v| tape.var(*v)).collect();
    let dtrace = problem.decoder.decode_diff(problem.context, &vars)?;
    let rho = aggregate_rho(&tape, &dtrace, problem.graph, problem.formula, &params.smooth())?;
    let g = rho.grad();
    let penalty = 0.5 * z.iter().map(|v| v * v).sum::<f64>();
    let grad = vars
        .iter()
        .zip(z)
        .map(|(v, zi)| g.wrt(*v) - params.lambda * zi)
        .collect();
    Ok((Objective::combine(rho.value(), penalty, params.lambda), grad))
}

/// A restart aborted because the objective or its gradient stopped being finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub restart: usize,
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuidanceResult {
    pub z_phi: Vec<f64>,
    pub z_initial: Vec<f64>,
    #[serde(skip)]
    pub trace: Option<SpatioTemporalTrace>,
    /// Smooth aggregate robustness before each gradient step.
    pub rho_history: Vec<f64>,
    #[serde(rename = "J_history")]
    pub j_history: Vec<f64>,
    pub z_norm_history: Vec<f64>,
    /// Hard aggregate robustness before each gradient step.
    #[serde(with = "crate::extreal::vec")]
    pub hard_rho_history: Vec<f64>,
    #[serde(with = "crate::extreal")]
    pub final_hard_rho: f64,
    pub satisfied: bool,
    pub restarts_used: usize,
    pub steps: usize,
    pub divergences: Vec<Divergence>,
}

impl GuidanceResult {
    pub fn trace_file(&self) -> Option<TraceFile> {
        self.trace.as_ref().map(SpatioTemporalTrace::to_file_repr)
    }
}

/// Latent seed of restart `r` of a run seeded with `seed` (`r = 0` is the run seed).
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Gradient ascent from `z0`, restarting from `restart_seed(seed, r)` draws.
pub fn optimize(
    problem: &Problem,
    z0: &[f64],
    params: &GuidanceConfig,
    seed: u64,
) -> Result<GuidanceResult, GuidanceError> {
    params.check()?;
    let len = problem.decoder.latent_len(problem.context);
    if z0.len() != len {
        return Err(GeneratorError::DimensionMismatch {
            expected: len,
            found: z0.len(),
        }
        .into());
    }
    let mut result = GuidanceResult {
        z_phi: z0.to_vec(),
        z_initial: z0.to_vec(),
        trace: None,
        rho_history: Vec::new(),
        j_history: Vec::new(),
        z_norm_history: Vec::new(),
        hard_rho_history: Vec::new(),
        final_hard_rho: f64::NEG_INFINITY,
        satisfied: false,
        restarts_used: 0,
        steps: 0,
        divergences: Vec::new(),
    };
    for restart in 0..=params.max_restarts {
        let mut z = if restart == 0 {
            z0.to_vec()
        } else {
            sample_latent(restart_seed(seed, restart), len)
        };
        result.restarts_used = restart;
        for step in 0..=params.max_step {
            let trace = problem.decoder.decode(problem.context, &z)?;
            let hard = hard_rho(&trace, problem.graph, problem.formula, params.aggregation)?;
            result.z_phi = z.clone();
            result.final_hard_rho = hard;
            result.trace = Some(trace);
            if hard > params.stop_margin {
                result.satisfied = true;
                debug!("satisfied after {step} steps on restart {restart} (rho {hard})");
                return Ok(result);
            }
            if step == params.max_step {
                break;
            }
            let (obj, grad) = objective_and_gradient(problem, &z, params)?;
            if !obj.j.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                warn!("objective diverged at step {step} of restart {restart}");
                result.divergences.push(Divergence {
                    restart,
                    step,
                    message: format!("non-finite objective (J = {})", obj.j),
                });
                break;
            }
            result.rho_history.push(obj.rho);
            result.j_history.push(obj.j);
            result.z_norm_history.push(norm(&z));
            result.hard_rho_history.push(hard);
            result.steps += 1;
            for (zi, gi) in z.iter_mut().zip(&grad) {
                *zi += params.eta * gi;
            }
        }
    }
    info!("no satisfying latent after {} restarts", params.max_restarts);
    Ok(result)
}

/// Draws `z0` from `seed` and optimizes it.
pub fn guided_sample(problem: &Problem, params: &GuidanceConfig, seed: u64) -> Result<GuidanceResult, GuidanceError> {
    let z0 = sample_latent(seed, problem.decoder.latent_len(problem.context));
    optimize(problem, &z0, params, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub runs: usize,
    pub unguided_sat_rate: f64,
    pub guided_sat_rate: f64,
    #[serde(with = "crate::extreal::vec")]
    pub rho_unguided: Vec<f64>,
    #[serde(with = "crate::extreal::vec")]
    pub rho_guided: Vec<f64>,
    pub restarts: Vec<usize>,
}

/// Unguided versus guided satisfaction over `n_runs` seeds `seed..seed+n_runs`;
/// runs execute in parallel.
pub fn run_experiment(
    problem: &Problem,
    params: &GuidanceConfig,
    n_runs: usize,
    seed: u64,
) -> Result<ExperimentSummary, GuidanceError> {
    params.check()?;
    let len = problem.decoder.latent_len(problem.context);
    let runs: Vec<(f64, GuidanceResult)> = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let run_seed = seed.wrapping_add(i);
            let z0 = sample_latent(run_seed, len);
            let trace = problem.decoder.decode(problem.context, &z0)?;
            let unguided = hard_rho(&trace, problem.graph, problem.formula, params.aggregation)?;
            let guided = optimize(problem, &z0, params, run_seed)?;
            Ok((unguided, guided))
        })
        .collect::<Result<_, GuidanceError>>()?;
    let rate = |k: usize| if n_runs == 0 { 0.0 } else { k as f64 / n_runs as f64 };
    let unguided_ok = runs.iter().filter(|(u, _)| *u > params.stop_margin).count();
    let guided_ok = runs.iter().filter(|(_, g)| g.satisfied).count();
    Ok(ExperimentSummary {
        runs: n_runs,
        unguided_sat_rate: rate(unguided_ok),
        guided_sat_rate: rate(guided_ok),
        rho_unguided: runs.iter().map(|(u, _)| *u).collect(),
        rho_guided: runs.iter().map(|(_, g)| g.final_hard_rho).collect(),
        restarts: runs.iter().map(|(_, g)| g.restarts_used).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::generator::GeneratorConfig;
    use crate::scene::AgentState;

    fn single_car(horizon: usize) -> ContextScene {
        ContextScene {
            dt: 0.1,
            horizon,
            colors: vec!["car".into()],
            agents: vec![(0, "car".into(), AgentState::moving(0.0, 0.0, 5.0, 0.0))],
        }
    }

    #[test]
    fn objective_arithmetic() {
        assert!((Objective::combine(1.0, 2.0, 0.1).j - 0.8).abs() < 1e-15);
        assert_eq!(Objective::combine(1.25, 7.0, 0.0).j, 1.25);
        let dec = ToyDecoder::new(GeneratorConfig::default()).unwrap();
        let ctx = single_car(10);
        let f = parse("(speed > 4)@{car}").unwrap();
        let g = GraphConfig::default();
        let p = Problem {
            decoder: &dec,
            context: &ctx,
            formula: &f,
            graph: &g,
        };
        let o = objective(&p, &[0.0; 8], &GuidanceConfig::default()).unwrap();
        assert_eq!(o.penalty, 0.0);
        assert_eq!(o.j, o.rho);
        assert!((o.rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn true_needs_no_steps() {
        let dec = ToyDecoder::new(GeneratorConfig::default()).unwrap();
        let ctx = single_car(10);
        let g = GraphConfig::default();
        let p = Problem {
            decoder: &dec,
            context: &ctx,
            formula: &Formula::True,
            graph: &g,
        };
        let r = guided_sample(&p, &GuidanceConfig::default(), 3).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.steps, 0);
        assert!(r.rho_history.is_empty());
        assert_eq!(r.restarts_used, 0);
    }

    #[test]
    fn linear_objective_gains_eta_grad_squared() {
        let dec = ToyDecoder::new(GeneratorConfig::default()).unwrap();
        let ctx = single_car(5);
        // One agent, one-step window: every aggregation is a singleton, so rho is vx(1) - 100, linear in z.
        let f = parse("F[0.1,0.1] (vx > 100)@{car}").unwrap();
        let g = GraphConfig::default();
        let p = Problem {
            decoder: &dec,
            context: &ctx,
            formula: &f,
            graph: &g,
        };
        let params = GuidanceConfig {
            lambda: 0.0,
            eta: 0.3,
            ..GuidanceConfig::default()
        };
        let mut z = sample_latent(5, 8);
        for _ in 0..5 {
            let (o, grad) = objective_and_gradient(&p, &z, &params).unwrap();
            for (zi, gi) in z.iter_mut().zip(&grad) {
                *zi += params.eta * gi;
            }
            let gain = params.eta * grad.iter().map(|v| v * v).sum::<f64>();
            let o2 = objective(&p, &z, &params).unwrap();
            assert!((o2.j - o.j - gain).abs() < 1e-9, "{} vs {}", o2.j - o.j, gain);
        }
    }

    #[test]
    fn heavy_penalty_shrinks_latent() {
        let dec = ToyDecoder::new(GeneratorConfig::default()).unwrap();
        let ctx = single_car(10);
        let f = parse("G[0,0.9] (speed > 50)@{car}").unwrap();
        let g = GraphConfig::default();
        let p = Problem {
            decoder: &dec,
            context: &ctx,
            formula: &f,
            graph: &g,
        };
        // eta * lambda < 2 keeps the penalty step contractive.
        let params = GuidanceConfig {
            lambda: 1e3,
            eta: 1e-4,
            max_step: 10,
            max_restarts: 0,
            ..GuidanceConfig::default()
        };
        let z0: Vec<f64> = sample_latent(1, 8).iter().map(|v| v * 10.0).collect();
        let r = optimize(&p, &z0, &params, 1).unwrap();
        assert_eq!(r.z_norm_history.len(), 10);
        assert!(
            r.z_norm_history.windows(2).all(|w| w[1] < w[0]),
            "{:?}",
            r.z_norm_history
        );
    }

    #[test]
    fn speed_up_is_found_and_reproducible() {
        let dec = ToyDecoder::new(GeneratorConfig::default()).unwrap();
        let ctx = single_car(21);
        let f = parse("F[0,2] (speed > 6)@{car}").unwrap();
        let g = GraphConfig::default();
        let p = Problem {
            decoder: &dec,
            context: &ctx,
            formula: &f,
            graph: &g,
        };
        let params = GuidanceConfig {
            lambda: 0.0,
            ..GuidanceConfig::default()
        };
        let mut ok = 0;
        for seed in 0..100 {
            let r = guided_sample(&p, &params, seed).unwrap();
            if r.satisfied {
                ok += 1;
                let tr = r.trace.as_ref().unwrap();
                assert!(hard_rho(tr, &g, &f, Aggregation::Max).unwrap() > 0.0);
            }
        }
        assert!(ok >= 95, "{ok}");
        let a = guided_sample(&p, &params, 17).unwrap();
        let b = guided_sample(&p, &params, 17).unwrap();
        assert_eq!(a.z_phi, b.z_phi);
        assert_eq!(a.j_history, b.j_history);
    }
}
