//! Deterministic latent-to-trajectory decoder.
//!
//! Each agent owns a slice of `latent_dim = 2 * basis_count` latent
//! coordinates. A fixed seeded matrix maps the slice to the coefficients of
//! cosine acceleration bases `cos(π b s / (T dt))`, `b = 0..basis_count`,
//! one set per axis. Accelerations are integrated with explicit Euler from
//! the agent's initial state:
//!
//! ```text
//! v(t) = v(t-1) + a(t-1) dt
//! p(t) = p(t-1) + v(t-1) dt
//! ```
//!
//! Headings follow the velocity direction and are held when the speed drops
//! below `1e-6`. Positions and velocities are affine in the latent vector.

use crate::scalar::{wrap_angle, Scalar};
use crate::scene::{Agent, AgentState, SceneError, SpatioTemporalTrace, TraceMeta};
use crate::smooth::{DiffTrace, Tape, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

const STANDSTILL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("latent vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

fn default_latent_dim() -> usize {
    8
}
fn default_basis_count() -> usize {
    4
}
fn default_seed() -> u64 {
    1234
}
fn default_accel_scale() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    #[serde(default = "default_basis_count")]
    pub basis_count: usize,
    /// Seed of the fixed projection weights.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Acceleration (m/s²) produced by a unit-variance coefficient.
    #[serde(default = "default_accel_scale")]
    pub accel_scale: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            latent_dim: default_latent_dim(),
            basis_count: default_basis_count(),
            seed: default_seed(),
            accel_scale: default_accel_scale(),
        }
    }
}

/// Initial conditions the decoder rolls out from.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextScene {
    pub dt: f64,
    pub horizon: usize,
    pub colors: Vec<String>,
    /// `(id, color, initial state)` per agent.
    pub agents: Vec<(u32, String, AgentState)>,
}

/// On-disk context: a trace file carrying one state per agent, the output
/// horizon in `meta.horizon`, and a `generator` block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextFile {
    pub meta: TraceMeta,
    pub colors: Vec<String>,
    pub agents: Vec<Agent>,
    #[serde(default)]
    pub generator: GeneratorConfig,
}

impl ContextScene {
    /// Initial states taken from step 0 of a trace; horizon and dt are kept.
    pub fn from_trace(trace: &SpatioTemporalTrace) -> Self {
        Self {
            dt: trace.dt(),
            horizon: trace.horizon(),
            colors: trace.colors().to_vec(),
            agents: trace
                .agents()
                .iter()
                .map(|a| (a.id, a.color.clone(), a.states[0]))
                .collect(),
        }
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    fn check(&self) -> Result<(), GeneratorError> {
        // A one-step trace runs every trace-level check on the initial states.
        let agents = self
            .agents
            .iter()
            .map(|(id, color, s)| Agent {
                id: *id,
                color: color.clone(),
                states: vec![*s],
            })
            .collect();
        SpatioTemporalTrace::new(self.dt, 1, self.colors.clone(), agents)?;
        if self.horizon < 1 {
            return Err(GeneratorError::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

impl ContextFile {
    pub fn from_json(text: &str) -> Result<Self, GeneratorError> {
        serde_json::from_str(text).map_err(|e| GeneratorError::Scene(SceneError::Parse(e)))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeneratorError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn context(&self) -> Result<ContextScene, GeneratorError> {
        let mut agents = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            let first = a
                .states
                .first()
                .ok_or_else(|| GeneratorError::Config(format!("agent {} has no initial state", a.id)))?;
            agents.push((a.id, a.color.clone(), *first));
        }
        let ctx = ContextScene {
            dt: self.meta.dt,
            horizon: self.meta.horizon,
            colors: self.colors.clone(),
            agents,
        };
        ctx.check()?;
        Ok(ctx)
    }
}

/// The seeded decoder.
#[derive(Debug, Clone)]
pub struct ToyDecoder {
    cfg: GeneratorConfig,
    /// Row-major `latent_dim × latent_dim` projection.
    weights: Vec<f64>,
}

impl ToyDecoder {
    pub fn new(cfg: GeneratorConfig) -> Result<Self, GeneratorError> {
        if cfg.basis_count == 0 || cfg.latent_dim != 2 * cfg.basis_count {
            return Err(GeneratorError::Config(format!(
                "latent_dim ({}) must equal 2 * basis_count ({})",
                cfg.latent_dim, cfg.basis_count
            )));
        }
        if !(cfg.accel_scale.is_finite() && cfg.accel_scale >= 0.0) {
            return Err(GeneratorError::Config(
                "accel_scale must be finite and non-negative".into(),
            ));
        }
        let k = cfg.latent_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let scale = 1.0 / (k as f64).sqrt();
        let weights = (0..k * k)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
            .collect();
        Ok(Self { cfg, weights })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    pub fn latent_len(&self, ctx: &ContextScene) -> usize {
        ctx.agent_count() * self.cfg.latent_dim
    }

    fn check_len(&self, ctx: &ContextScene, found: usize) -> Result<(), GeneratorError> {
        let expected = self.latent_len(ctx);
        if expected != found {
            return Err(GeneratorError::DimensionMismatch { expected, found });
        }
        Ok(())
    }

    /// Rolls out every agent; `out[agent][t] = [x, y, vx, vy, heading]`.
    pub fn rollout<S: Scalar>(&self, ctx: &ContextScene, z: &[S]) -> Result<Vec<Vec<[S; 5]>>, GeneratorError> {
        self.check_len(ctx, z.len())?;
        let (k, nb) = (self.cfg.latent_dim, self.cfg.basis_count);
        let (dt, horizon) = (ctx.dt, ctx.horizon);
        let span = horizon as f64 * dt;
        let basis: Vec<Vec<f64>> = (0..horizon)
            .map(|t| (0..nb).map(|b| (PI * b as f64 * t as f64 * dt / span).cos()).collect())
            .collect();
        let mut out = Vec::with_capacity(ctx.agent_count());
        for (a, (_, _, s0)) in ctx.agents.iter().enumerate() {
            let slice = &z[a * k..(a + 1) * k];
            let zero = slice[0].constant_like(0.0);
            let coeffs: Vec<S> = (0..k)
                .map(|r| {
                    let row = &self.weights[r * k..(r + 1) * k];
                    row.iter()
                        .zip(slice)
                        .fold(zero, |acc, (w, zi)| acc + zi.mul_const(w * self.cfg.accel_scale))
                })
                .collect();
            let accel = |t: usize, axis: usize| -> S {
                basis[t]
                    .iter()
                    .enumerate()
                    .fold(zero, |acc, (b, phi)| acc + coeffs[axis * nb + b].mul_const(*phi))
            };
            let mut states: Vec<[S; 5]> = Vec::with_capacity(horizon);
            states.push([s0.x, s0.y, s0.vx, s0.vy, s0.heading].map(|v| zero.constant_like(v)));
            for t in 1..horizon {
                let [x, y, vx, vy, h] = states[t - 1];
                let nvx = vx + accel(t - 1, 0).mul_const(dt);
                let nvy = vy + accel(t - 1, 1).mul_const(dt);
                let nx = x + vx.mul_const(dt);
                let ny = y + vy.mul_const(dt);
                let speed = nvx.value().hypot(nvy.value());
                let heading = if speed < STANDSTILL {
                    h
                } else {
                    wrap_angle(nvy.atan2(nvx))
                };
                states.push([nx, ny, nvx, nvy, heading]);
            }
            out.push(states);
        }
        Ok(out)
    }

    pub fn decode(&self, ctx: &ContextScene, z: &[f64]) -> Result<SpatioTemporalTrace, GeneratorError> {
        let fields = self.rollout(ctx, z)?;
        assemble(ctx, &fields).map_err(Into::into)
    }

    /// Decodes on the tape; `z` are tape variables.
    pub fn decode_diff<'t>(&self, ctx: &ContextScene, z: &[Var<'t>]) -> Result<DiffTrace<'t>, GeneratorError> {
        let fields = self.rollout(ctx, z)?;
        let primal: Vec<Vec<[f64; 5]>> = fields
            .iter()
            .map(|s| s.iter().map(|f| f.map(|v| v.value())).collect())
            .collect();
        let trace = assemble(ctx, &primal)?;
        Ok(DiffTrace { trace, fields })
    }

    /// Upper bound `L` with `‖pv(z) - pv(z')‖ ≤ L ‖z - z'‖`, where `pv` stacks
    /// every position and velocity component of the decoded trace. The map is
    /// linear in `z`, so its Frobenius norm bounds the operator norm.
    pub fn lipschitz_bound(&self, ctx: &ContextScene) -> Result<f64, GeneratorError> {
        let len = self.latent_len(ctx);
        let base = self.rollout(ctx, &vec![0.0; len])?;
        let mut total = 0.0;
        for j in 0..len {
            let mut e = vec![0.0; len];
            e[j] = 1.0;
            let col = self.rollout(ctx, &e)?;
            for (sa, sb) in col.iter().zip(&base) {
                for (fa, fb) in sa.iter().zip(sb) {
                    for c in 0..4 {
                        total += (fa[c] - fb[c]).powi(2);
                    }
                }
            }
        }
        Ok(total.sqrt())
    }
}

fn assemble(ctx: &ContextScene, fields: &[Vec<[f64; 5]>]) -> Result<SpatioTemporalTrace, SceneError> {
    let agents = ctx
        .agents
        .iter()
        .zip(fields)
        .map(|((id, color, _), states)| Agent {
            id: *id,
            color: color.clone(),
            states: states
                .iter()
                .map(|f| AgentState::new(f[0], f[1], f[2], f[3], f[4]))
                .collect(),
        })
        .collect();
    SpatioTemporalTrace::new(ctx.dt, ctx.horizon, ctx.colors.clone(), agents)
}

/// Standard normal latent vector, reproducible per seed.
pub fn sample_latent(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Places `z` on `tape` as inputs and decodes it, returning the input
/// variables alongside the differentiable trace.
pub fn decode_with_tape<'t>(
    decoder: &ToyDecoder,
    ctx: &ContextScene,
    tape: &'t Tape,
    z: &[f64],
) -> Result<(Vec<Var<'t>>, DiffTrace<'t>), GeneratorError> {
    let vars: Vec<Var<'t>> = z.iter().map(|v| tape.var(*v)).collect();
    let d = decoder.decode_diff(ctx, &vars)?;
    Ok((vars, d))
}
