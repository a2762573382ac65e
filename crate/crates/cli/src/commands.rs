//! Command implementations. Each returns the process exit code.

use crate::{
    metrics, ExperimentArgs, GuideArgs, InitArg, MetricsArgs, MonitorArgs, MonitorMode, EXIT_SATISFIED, EXIT_VIOLATED,
};
use anyhow::{bail, Context, Result};
use log::info;
use serde::{Deserialize, Serialize};
use std::path::Path;
use strelgen_core::formula::validate;
use strelgen_core::generator::{ContextFile, ContextScene};
use strelgen_core::guidance::{optimize, run_experiment, Problem};
use strelgen_core::monitor::Monitor;
use strelgen_core::smooth::{smooth_table, DiffTrace, SmoothConfig};
use strelgen_core::{
    format, load_formula, load_trace, Aggregation, Formula, GraphConfig, Mode, SpatioTemporalTrace, Tape, ToyDecoder,
};

fn load_graph_config(path: &Path) -> Result<GraphConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GraphConfig::from_json(&text).with_context(|| format!("{}: invalid graph config", path.display()))
}

fn load_formula_file(path: &Path) -> Result<Formula> {
    load_formula(path).with_context(|| format!("{}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn exit_for(satisfied: bool) -> u8 {
    if satisfied {
        EXIT_SATISFIED
    } else {
        EXIT_VIOLATED
    }
}

fn check_formula(f: &Formula, trace: &SpatioTemporalTrace, cfg: &GraphConfig) -> Result<()> {
    if let Err(errors) = validate(f, trace, cfg) {
        let list: Vec<String> = errors.iter().map(ToString::to_string).collect();
        bail!("invalid formula: {}", list.join("; "));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRobustness {
    pub id: u32,
    pub color: String,
    #[serde(with = "strelgen_core::extreal")]
    pub robustness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub formula: String,
    pub mode: String,
    pub t: usize,
    pub agents: Vec<AgentRobustness>,
    pub aggregation: Aggregation,
    #[serde(with = "strelgen_core::extreal")]
    pub aggregate: f64,
    pub satisfied: bool,
}

/// Per-agent values at step `t`; Boolean results are reported as `±inf`.
pub fn robustness_row(
    trace: &SpatioTemporalTrace,
    cfg: &GraphConfig,
    f: &Formula,
    t: usize,
    mode: MonitorMode,
    beta: f64,
) -> Result<Vec<f64>> {
    if t >= trace.horizon() {
        bail!("time {t} out of range for horizon {}", trace.horizon());
    }
    check_formula(f, trace, cfg)?;
    let n = trace.agent_count();
    Ok(match mode {
        MonitorMode::Hard | MonitorMode::Boolean => {
            let m = if mode == MonitorMode::Hard {
                Mode::Quantitative
            } else {
                Mode::Boolean
            };
            Monitor::new(trace, cfg, m)
                .table(f)?
                .row(t)
                .into_iter()
                .map(|r| r.value())
                .collect()
        }
        MonitorMode::Smooth => {
            if !(beta > 0.0 && beta.is_finite()) {
                bail!("beta must be positive, got {beta}");
            }
            let tape = Tape::new();
            let dtrace = DiffTrace::leaves(&tape, trace);
            let table = smooth_table(&tape, &dtrace, cfg, f, &SmoothConfig::with_beta(beta))?;
            table[t * n..(t + 1) * n].iter().map(|v| v.value()).collect()
        }
    })
}

pub fn monitor(a: &MonitorArgs) -> Result<u8> {
    let trace = load_trace(&a.trace).with_context(|| format!("{}", a.trace.display()))?;
    let cfg = load_graph_config(&a.graph_config)?;
    let f = load_formula_file(&a.formula)?;
    let row = robustness_row(&trace, &cfg, &f, a.time, a.mode, a.beta)?;
    let mut agents: Vec<AgentRobustness> = trace
        .agents()
        .iter()
        .zip(&row)
        .map(|(ag, r)| AgentRobustness {
            id: ag.id,
            color: ag.color.clone(),
            robustness: *r,
        })
        .collect();
    if let Some(id) = a.agent {
        agents.retain(|r| r.id == id);
        if agents.is_empty() {
            bail!("unknown agent id {id}");
        }
    }
    agents.sort_by_key(|r| r.id);
    let aggregation: Aggregation = a.aggregation.into();
    let values: Vec<f64> = agents.iter().map(|r| r.robustness).collect();
    let aggregate = if values.is_empty() {
        f64::NEG_INFINITY
    } else {
        aggregation.combine(&values)
    };
    let report = MonitorReport {
        formula: format(&f),
        mode: format!("{:?}", a.mode).to_lowercase(),
        t: a.time,
        agents,
        aggregation,
        aggregate,
        satisfied: aggregate > 0.0,
    };
    println!("formula: {}", report.formula);
    println!("mode: {}, t = {}", report.mode, report.t);
    println!("{:>8}  {:<12}  robustness", "agent", "color");
    for r in &report.agents {
        println!("{:>8}  {:<12}  {}", r.id, r.color, r.robustness);
    }
    println!(
        "aggregate ({}): {}",
        format!("{aggregation:?}").to_lowercase(),
        report.aggregate
    );
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(exit_for(report.satisfied))
}

struct Loaded {
    decoder: ToyDecoder,
    context: ContextScene,
    formula: Formula,
    graph: GraphConfig,
}

fn load_problem(context: &Path, formula: &Path, graph: &Path) -> Result<Loaded> {
    let file = ContextFile::load(context).with_context(|| format!("{}", context.display()))?;
    let ctx = file.context().with_context(|| format!("{}", context.display()))?;
    let decoder = ToyDecoder::new(file.generator)?;
    let formula = load_formula_file(formula)?;
    let graph = load_graph_config(graph)?;
    let probe = decoder.decode(&ctx, &vec![0.0; decoder.latent_len(&ctx)])?;
    check_formula(&formula, &probe, &graph)?;
    Ok(Loaded {
        decoder,
        context: ctx,
        formula,
        graph,
    })
}

pub fn guide(a: &GuideArgs) -> Result<u8> {
    let l = load_problem(&a.context, &a.formula, &a.graph_config)?;
    let problem = Problem {
        decoder: &l.decoder,
        context: &l.context,
        formula: &l.formula,
        graph: &l.graph,
    };
    let params = a.optimizer.params();
    let len = l.decoder.latent_len(&l.context);
    let z0 = match a.init {
        InitArg::Sample => strelgen_core::generator::sample_latent(a.optimizer.seed, len),
        InitArg::Zero => vec![0.0; len],
    };
    let result = optimize(&problem, &z0, &params, a.optimizer.seed)?;
    println!("satisfied: {}", result.satisfied);
    println!("final hard robustness: {}", result.final_hard_rho);
    println!(
        "gradient steps: {}, restarts used: {}",
        result.steps, result.restarts_used
    );
    for d in &result.divergences {
        println!("diverged: restart {} step {}: {}", d.restart, d.step, d.message);
    }
    if let Some(out) = &a.out {
        write_json(out, &result)?;
        info!("wrote {}", out.display());
    }
    if let (Some(out), Some(tf)) = (&a.trace_out, result.trace_file()) {
        write_json(out, &tf)?;
        info!("wrote {}", out.display());
    }
    Ok(exit_for(result.satisfied))
}

pub fn metrics(a: &MetricsArgs) -> Result<u8> {
    let trace = load_trace(&a.trace).with_context(|| format!("{}", a.trace.display()))?;
    let report = metrics::compute(&trace, a.threshold).map_err(anyhow::Error::msg)?;
    println!("min pairwise distance: {}", report.min_pairwise_distance);
    println!(
        "potential collisions (< {} m): {}",
        report.threshold, report.potential_collisions
    );
    println!("{:>8}  {:>8}  {:>12}  {:>4}", "a", "b", "min_distance", "t");
    for p in &report.pairs {
        println!("{:>8}  {:>8}  {:>12.6}  {:>4}", p.a, p.b, p.min_distance, p.t);
    }
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(EXIT_SATISFIED)
}

pub fn experiment(a: &ExperimentArgs) -> Result<u8> {
    let l = load_problem(&a.context, &a.formula, &a.graph_config)?;
    let problem = Problem {
        decoder: &l.decoder,
        context: &l.context,
        formula: &l.formula,
        graph: &l.graph,
    };
    let summary = run_experiment(&problem, &a.optimizer.params(), a.runs, a.optimizer.seed)?;
    println!("runs: {}", summary.runs);
    println!("unguided satisfaction rate: {:.3}", summary.unguided_sat_rate);
    println!("guided satisfaction rate: {:.3}", summary.guided_sat_rate);
    if let Some(out) = &a.out {
        write_json(out, &summary)?;
    }
    Ok(exit_for(summary.runs > 0 && summary.guided_sat_rate == 1.0))
}
