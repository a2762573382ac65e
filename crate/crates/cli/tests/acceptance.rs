//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};
use strelgen_core::formula::Formula;
use strelgen_core::generator::{sample_latent, ContextFile, ContextScene};
use strelgen_core::guidance::{guided_sample, norm, objective, objective_and_gradient, run_experiment, Problem};
use strelgen_core::monitor::{Monitor, MonitorError};
use strelgen_core::smooth::{smooth_table, DiffTrace, SmoothConfig};
use strelgen_core::testing::{
    random_context, random_formula, random_graph_config, random_instance, structure_key, Instance, InstanceLimits,
    OperatorSet,
};
use strelgen_core::{
    expand_derived, format, load_formula, monitor_oracle, parse, ColorSet, GraphConfig, GuidanceConfig, Mode,
    SpatioTemporalTrace, Tape, ToyDecoder,
};

const SUITE_SEED: u64 = 0x5EED_0001;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn suite(n: usize, ops: OperatorSet, salt: u64) -> Vec<Instance> {
    (0..n as u64)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(SUITE_SEED ^ salt.wrapping_add(i).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            random_instance(&mut rng, &InstanceLimits::default(), ops)
        })
        .collect()
}

fn table(trace: &SpatioTemporalTrace, cfg: &GraphConfig, f: &Formula, mode: Mode) -> Result<Vec<f64>, MonitorError> {
    Ok(Monitor::new(trace, cfg, mode).table(f)?.values().to_vec())
}

fn count_operators(f: &Formula, into: &mut BTreeMap<&'static str, usize>) {
    *into.entry(f.operator()).or_default() += 1;
    for c in f.children() {
        count_operators(c, into);
    }
}

fn same(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

fn c1_oracle(suite: &[Instance]) -> Outcome {
    let mut ops = BTreeMap::new();
    let (mut cells, mut bad_q, mut bad_b) = (0usize, 0usize, 0usize);
    let mut colored = false;
    for inst in suite {
        count_operators(&inst.formula, &mut ops);
        colored |= inst.formula.color_sets().iter().any(|c| !c.is_all());
        let q = table(&inst.trace, &inst.cfg, &inst.formula, Mode::Quantitative).unwrap();
        let b = table(&inst.trace, &inst.cfg, &inst.formula, Mode::Boolean).unwrap();
        let n = inst.trace.agent_count();
        for t in 0..inst.trace.horizon() {
            for (k, agent) in inst.trace.agents().iter().enumerate() {
                cells += 1;
                let oq =
                    monitor_oracle(&inst.trace, &inst.cfg, &inst.formula, t, agent.id, Mode::Quantitative).unwrap();
                let ob = monitor_oracle(&inst.trace, &inst.cfg, &inst.formula, t, agent.id, Mode::Boolean).unwrap();
                if !same(q[t * n + k], oq.value(), 1e-9) {
                    bad_q += 1;
                }
                if b[t * n + k] != ob.value() {
                    bad_b += 1;
                }
            }
        }
    }
    let all_ops = [
        "true", "atom", "!", "&", "|", "U", "F", "G", "R", "E", "SW", "EW", "Surr",
    ];
    let missing: Vec<&str> = all_ops.iter().copied().filter(|o| !ops.contains_key(o)).collect();
    outcome(
        bad_q == 0 && bad_b == 0 && missing.is_empty() && colored,
        format!(
            "{} instances, {cells} cells, {bad_q} quantitative and {bad_b} Boolean mismatches, operators missing: {missing:?}",
            suite.len()
        ),
    )
}

fn c2_soundness(suite: &[Instance]) -> Outcome {
    let (mut checked, mut bad) = (0usize, 0usize);
    for inst in suite {
        let q = table(&inst.trace, &inst.cfg, &inst.formula, Mode::Quantitative).unwrap();
        let b = table(&inst.trace, &inst.cfg, &inst.formula, Mode::Boolean).unwrap();
        for (q, b) in q.iter().zip(&b) {
            if *q != 0.0 {
                checked += 1;
                if (*q > 0.0) != (*b > 0.0) {
                    bad += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{checked} nonzero cells, {bad} counterexamples"))
}

fn c3_reduction() -> Outcome {
    let suite = suite(200, OperatorSet::All, 3);
    let mut bad = 0;
    for inst in &suite {
        let plain = inst.formula.map_colors(&|_| ColorSet::All);
        for mode in [Mode::Quantitative, Mode::Boolean] {
            let full = table(&inst.trace, &inst.cfg, &plain, mode).unwrap();
            let uncolored = Monitor::new(&inst.trace, &inst.cfg, mode)
                .uncolored()
                .table(&inst.formula)
                .unwrap();
            if full != uncolored.values() {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("200 instances, {bad} differing tables"))
}

fn c4_derived() -> Outcome {
    let mut found = Vec::new();
    let mut salt = 4_000_000;
    while found.len() < 200 {
        found.extend(
            suite(50, OperatorSet::All, salt)
                .into_iter()
                .filter(|i| !i.formula.is_core()),
        );
        salt += 50;
    }
    found.truncate(200);
    let mut bad = 0;
    for inst in &found {
        let core = expand_derived(&inst.formula);
        for mode in [Mode::Quantitative, Mode::Boolean] {
            let direct = table(&inst.trace, &inst.cfg, &inst.formula, mode).unwrap();
            let expanded = Monitor::new(&inst.trace, &inst.cfg, mode)
                .core_only()
                .table(&core)
                .unwrap();
            if direct != expanded.values() {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("200 instances with derived operators, {bad} differing tables"),
    )
}

fn c5_smooth(suite: &[Instance]) -> Outcome {
    let betas = [1.0, 10.0, 1e2, 1e4, 1e6];
    let mut totals = [0.0f64; 5];
    let mut worst = 0.0f64;
    for inst in suite {
        let hard = table(&inst.trace, &inst.cfg, &inst.formula, Mode::Quantitative).unwrap();
        for (k, beta) in betas.iter().enumerate() {
            let scfg = SmoothConfig::with_beta(*beta);
            let tape = Tape::new();
            let dtrace = DiffTrace::leaves(&tape, &inst.trace);
            let soft = smooth_table(&tape, &dtrace, &inst.cfg, &inst.formula, &scfg).unwrap();
            for (s, h) in soft.iter().zip(&hard) {
                let err = (s.value() - scfg.clamp(*h)).abs();
                totals[k] += err;
                if k == betas.len() - 1 {
                    worst = worst.max(err);
                }
            }
        }
    }
    let monotone = totals.windows(2).all(|w| w[1] <= w[0]);
    let per_beta: Vec<String> = betas
        .iter()
        .zip(&totals)
        .map(|(b, e)| format!("{b:e}: {e:.3e}"))
        .collect();
    outcome(
        worst <= 1e-3 && monotone,
        format!(
            "max error at beta 1e6 = {worst:.3e}; total error by beta {}",
            per_beta.join(", ")
        ),
    )
}

/// Headings and wrapped heading steps of a decoded trace, used to spot
/// branch crossings inside a finite-difference stencil.
fn angles(trace: &SpatioTemporalTrace) -> Vec<f64> {
    let mut out = Vec::new();
    for a in 0..trace.agent_count() {
        for t in 0..trace.horizon() {
            out.push(trace.state(a, t).heading);
            if t > 0 {
                let d = trace.state(a, t).heading - trace.state(a, t - 1).heading;
                out.push(d + strelgen_core::scalar::wrap_offset(d));
            }
        }
    }
    out
}

fn stencil_is_smooth(
    decoder: &ToyDecoder,
    ctx: &ContextScene,
    cfg: &GraphConfig,
    z: &[f64],
    h: f64,
    centre: &SpatioTemporalTrace,
) -> bool {
    let key = structure_key(centre, cfg);
    let base = angles(centre);
    for j in 0..z.len() {
        for s in [-h, h] {
            let mut zz = z.to_vec();
            zz[j] += s;
            let tr = decoder.decode(ctx, &zz).unwrap();
            if structure_key(&tr, cfg) != key {
                return false;
            }
            for (a, b) in angles(&tr).iter().zip(&base) {
                // A jump across the branch cut, or a sign change of a heading step.
                if (a - b).abs() > 1.0 || (a.signum() != b.signum() && (a.abs() < 1e-3 || b.abs() < 1e-3)) {
                    return false;
                }
            }
        }
    }
    true
}

fn c6_gradients() -> Outcome {
    let h = 1e-4;
    let decoder = ToyDecoder::new(Default::default()).unwrap();
    let params = GuidanceConfig {
        lambda: 0.0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 6);
    let (mut accepted, mut skipped_flat, mut skipped_kinks) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    while accepted < 100 {
        let ctx = random_context(&mut rng, 4);
        let cfg = random_graph_config(&mut rng);
        let f = random_formula(&mut rng, 3, OperatorSet::All, ctx.horizon as f64 * ctx.dt);
        let z = sample_latent(rand::Rng::random(&mut rng), decoder.latent_len(&ctx));
        let problem = Problem {
            decoder: &decoder,
            context: &ctx,
            formula: &f,
            graph: &cfg,
        };
        let (_, grad) = objective_and_gradient(&problem, &z, &params).unwrap();
        let gnorm = norm(&grad);
        if gnorm < 1e-6 {
            skipped_flat += 1;
            continue;
        }
        let centre = decoder.decode(&ctx, &z).unwrap();
        if !stencil_is_smooth(&decoder, &ctx, &cfg, &z, h, &centre) {
            skipped_kinks += 1;
            continue;
        }
        let fd: Vec<f64> = (0..z.len())
            .map(|j| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += h;
                zm[j] -= h;
                let fp = objective(&problem, &zp, &params).unwrap().rho;
                let fm = objective(&problem, &zm, &params).unwrap().rho;
                (fp - fm) / (2.0 * h)
            })
            .collect();
        let diff: Vec<f64> = fd.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / gnorm.max(norm(&fd));
        worst = worst.max(rel);
        if rel > 1e-3 {
            failures += 1;
        }
        accepted += 1;
    }
    outcome(
        failures == 0,
        format!(
            "100 triples, worst relative error {worst:.3e}, {failures} above 1e-3 \
             (resampled: {skipped_flat} with zero gradient, {skipped_kinks} with a discontinuity in the stencil)"
        ),
    )
}

struct GuidanceFixture {
    name: &'static str,
    decoder: ToyDecoder,
    context: ContextScene,
    formula: Formula,
    graph: GraphConfig,
}

fn guidance_fixture(name: &'static str) -> GuidanceFixture {
    let dir = fixtures().join("guidance").join(name);
    let file = ContextFile::load(dir.join("context.json")).unwrap();
    let graph = GraphConfig::from_json(&std::fs::read_to_string(dir.join("graph.json")).unwrap()).unwrap();
    GuidanceFixture {
        name,
        decoder: ToyDecoder::new(file.generator).unwrap(),
        context: file.context().unwrap(),
        formula: load_formula(dir.join("formula.strel")).unwrap(),
        graph,
    }
}

impl GuidanceFixture {
    fn problem(&self) -> Problem<'_> {
        Problem {
            decoder: &self.decoder,
            context: &self.context,
            formula: &self.formula,
            graph: &self.graph,
        }
    }
}

fn c7_guidance() -> Outcome {
    let params = GuidanceConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["pb_uns", "front", "surr"] {
        let fx = guidance_fixture(name);
        let problem = fx.problem();
        let summary = run_experiment(&problem, &params, 30, 100).unwrap();
        // Independent re-check of every guided trace with a fresh monitor.
        let mut rechecked = 0;
        for i in 0..30u64 {
            let r = guided_sample(&problem, &params, 100 + i).unwrap();
            let tab = Monitor::new(r.trace.as_ref().unwrap(), &fx.graph, Mode::Quantitative)
                .table(&fx.formula)
                .unwrap();
            let best = tab
                .row(0)
                .into_iter()
                .map(|v| v.value())
                .fold(f64::NEG_INFINITY, f64::max);
            if r.satisfied && best > 0.0 && r.restarts_used <= params.max_restarts {
                rechecked += 1;
            }
        }
        let ok = summary.guided_sat_rate == 1.0 && summary.unguided_sat_rate < 0.5 && rechecked == 30;
        pass &= ok;
        parts.push(format!(
            "{}: unguided {:.2}, guided {:.2}, re-monitored {rechecked}/30, max restarts {}",
            fx.name,
            summary.unguided_sat_rate,
            summary.guided_sat_rate,
            summary.restarts.iter().max().unwrap_or(&0)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c8_regularisation() -> Outcome {
    let fx = guidance_fixture("front");
    let params = GuidanceConfig {
        lambda: 0.1,
        ..Default::default()
    };
    let (mut initial, mut fin) = (Vec::new(), Vec::new());
    for seed in 0..100u64 {
        let r = guided_sample(&fx.problem(), &params, 8_000 + seed).unwrap();
        initial.push(norm(&r.z_initial));
        fin.push(norm(&r.z_phi));
    }
    let (mi, mf) = (median(initial), median(fin));
    outcome(
        mf <= 2.0 * mi,
        format!(
            "median initial |z| {mi:.3}, median final |z| {mf:.3}, ratio {:.3}",
            mf / mi
        ),
    )
}

fn c9_metrics() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("metrics.json");
    let status = Command::new(env!("CARGO_BIN_EXE_strelgen"))
        .arg("metrics")
        .arg("--trace")
        .arg(fixtures().join("traces/close_approach.json"))
        .args(["--threshold", "0.9", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    if !status.status.success() {
        return outcome(false, format!("metrics exited with {}", status.status));
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let count = report["potential_collisions"].as_u64().unwrap_or(u64::MAX);
    let d = report["min_pairwise_distance"].as_f64().unwrap_or(f64::NAN);
    outcome(
        count == 2 && (d - 0.5).abs() < 1e-9,
        format!("potential_collisions = {count}, min_pairwise_distance = {d}"),
    )
}

fn shape(f: &Formula) -> String {
    let kids: Vec<String> = f.children().into_iter().map(shape).collect();
    if kids.is_empty() {
        f.operator().to_string()
    } else {
        format!("{}({})", f.operator(), kids.join(","))
    }
}

fn c10_parser() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 10);
    let mut bad = 0;
    for _ in 0..500 {
        let f = random_formula(&mut rng, 6, OperatorSet::All, 10.0);
        if parse(&format(&f)).ok().as_ref() != Some(&f) {
            bad += 1;
        }
    }
    let expected = [
        ("pb_uns", "F(R(atom,atom))"),
        ("front", "F(R(atom,atom))"),
        ("surr", "F(Surr(atom,atom))"),
        ("head", "G(atom)"),
        ("ov", "G(EW(!(&(atom,SW(atom)))))"),
    ];
    let mut wrong = Vec::new();
    for (name, want) in expected {
        match load_formula(fixtures().join(format!("formulas/{name}.strel"))) {
            Ok(f) if shape(&f) == want => {}
            Ok(f) => wrong.push(format!("{name}: {}", shape(&f))),
            Err(e) => wrong.push(format!("{name}: {e}")),
        }
    }
    let text = "F[0,6] ( (speed > 8)@{car,bus} R[0,10]{front} (speed < 1)@{car,bus} )";
    let front_ok = matches!(parse(text), Ok(Formula::Eventually { ref body, .. })
        if matches!(**body, Formula::Reach { metric: strelgen_core::Metric::Front, .. }));
    outcome(
        bad == 0 && wrong.is_empty() && front_ok,
        format!("500 random formulas, {bad} round-trip failures; fixture shapes wrong: {wrong:?}"),
    )
}

/// Name, optional time budget and body of one criterion.
type Criterion<'a> = (&'static str, Option<Duration>, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let started = Instant::now();
    let shared = suite(1000, OperatorSet::All, 1);
    let criteria: Vec<Criterion> = vec![
        (
            "oracle equivalence",
            Some(Duration::from_secs(60)),
            Box::new(|| c1_oracle(&shared)),
        ),
        ("soundness", None, Box::new(|| c2_soundness(&shared))),
        ("STREL reduction", None, Box::new(c3_reduction)),
        ("derived-operator fidelity", None, Box::new(c4_derived)),
        ("smooth-to-hard convergence", None, Box::new(|| c5_smooth(&shared))),
        (
            "gradient correctness",
            Some(Duration::from_secs(120)),
            Box::new(c6_gradients),
        ),
        (
            "guidance efficacy",
            Some(Duration::from_secs(600)),
            Box::new(c7_guidance),
        ),
        ("regularisation", None, Box::new(c8_regularisation)),
        ("metrics", None, Box::new(c9_metrics)),
        ("parser", None, Box::new(c10_parser)),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let mut o = run();
        let elapsed = t0.elapsed();
        if let Some(b) = budget {
            if elapsed > *b {
                o.pass = false;
                o.detail.push_str(&format!("; over the {}s budget", b.as_secs()));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} ({:.1}s): {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
