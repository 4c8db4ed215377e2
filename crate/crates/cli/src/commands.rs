use std::fmt::Write as _;
use std::time::Instant;

use atlaslab_core::stats::overall;
use atlaslab_core::{
    configuration_from_gaps, run_suite, sample_P_a, sample_P_a_restricted_lowest, sample_Q_a,
    sample_pi_a_gaps, sample_pi_gaps, simulate, truncation_diagnostic, DriftScheme, GaussianNoise,
    Integrator, LabeledConfiguration, ModelParams, RankKernel, RngStream, SimulationConfig, Suite,
    SuiteConfig, Verdict,
};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{Common, Law, Scheme, Switch};
use crate::output::{csv, CheckVerdict, Manifest, OutDir};
use crate::settings::{merge_json, Settings};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    Fail = 1,
    Usage = 2,
    Inconclusive = 3,
}

impl From<Verdict> for Exit {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Exit::Pass,
            Verdict::Fail => Exit::Fail,
            Verdict::Inconclusive => Exit::Inconclusive,
        }
    }
}

type CmdResult = Result<Exit, String>;

fn err(e: atlaslab_core::Error) -> String {
    e.to_string()
}

fn params_of(s: &Settings) -> ModelParams {
    let p = ModelParams::atlas(s.gamma.unwrap_or(0.5), s.a.unwrap_or(1.0));
    match &s.drifts {
        Some(d) => p.with_ranked_drifts(d.clone()),
        None => p,
    }
}

fn check_params(p: &ModelParams) -> Result<(), String> {
    p.validate().map_err(|v| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    })
}

pub fn sample(c: &Common, s: &Settings) -> CmdResult {
    let law = s.law.unwrap_or(Law::Qa);
    let m = s.m.unwrap_or(5);
    let n_draws = s.n_draws.unwrap_or(1000);
    let seed = s.seed.unwrap_or(0);
    let zeta = s.zeta.unwrap_or(5.0);
    let p = params_of(s);
    if m == 0 {
        return Err("--m must be >= 1".into());
    }
    if law != Law::Pi && law != Law::Pa {
        check_params(&p)?;
    }
    let mut out = OutDir::prepare(&c.out, c.force, &["draws.csv", "manifest.json"])?;
    let mut manifest = Manifest::new("sample", s, seed);
    let stream = RngStream::new(seed, 0);
    let rows: Vec<Vec<Option<f64>>> = (0..n_draws as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.replica(k).rng();
            let full = |v: &[f64]| v.iter().map(|&x| Some(x)).collect::<Vec<_>>();
            Ok(match law {
                Law::Pa => full(sample_P_a(&p, m, &mut rng)?.sorted_positions()),
                Law::Qa => full(sample_Q_a(&p, m, &mut rng)?.sorted_positions()),
                Law::PiA => full(sample_pi_a_gaps(&p, m, &mut rng)?.as_slice()),
                Law::Pi => full(sample_pi_gaps(p.gamma, m, &mut rng)?.as_slice()),
                Law::PaRestricted => {
                    let mut v = full(sample_P_a_restricted_lowest(&p, zeta, m, &mut rng)?.sorted_positions());
                    v.resize(m, None);
                    v
                }
            })
        })
        .collect::<atlaslab_core::Result<_>>()
        .map_err(err)?;
    let prefix = if matches!(law, Law::Pi | Law::PiA) { "z" } else { "x" };
    let header: Vec<String> = (1..=m).map(|i| format!("{prefix}{i}")).collect();
    out.write("draws.csv", &csv(&header, rows))?;
    manifest.resolved = json!({
        "law": law, "a": p.a, "gamma": p.gamma, "m": m, "n_draws": n_draws,
        "zeta": if law == Law::PaRestricted { Some(zeta) } else { None },
        "stream": "row k uses stream (seed, k)",
    });
    manifest.finish(&mut out)?;
    eprintln!("wrote {} draws of {law:?} to {}", n_draws, c.out.display());
    Ok(Exit::Pass)
}

fn scheme_of(s: &Settings) -> DriftScheme {
    match s.scheme.unwrap_or(Scheme::Hard) {
        Scheme::Hard => DriftScheme::Hard,
        Scheme::Mollified => DriftScheme::Mollified { beta: s.beta.unwrap_or(50.0) },
    }
}

fn initial_state(law: Law, p: &ModelParams, n: usize, stream: RngStream) -> Result<LabeledConfiguration, String> {
    let mut rng = stream.derive(0x1).rng();
    let x = match law {
        Law::Qa => sample_Q_a(p, n, &mut rng).map(|r| r.to_labeled()),
        Law::Pa => sample_P_a(p, n, &mut rng).map(|r| r.to_labeled()),
        Law::PiA => sample_pi_a_gaps(p, n - 1, &mut rng).map(|g| configuration_from_gaps(&g)),
        Law::Pi => sample_pi_gaps(p.gamma, n - 1, &mut rng).map(|g| configuration_from_gaps(&g)),
        Law::PaRestricted => return Err("law pa-restricted cannot start a simulation".into()),
    };
    x.map_err(err)
}

pub fn simulate_cmd(c: &Common, s: &Settings) -> CmdResult {
    let p = params_of(s);
    check_params(&p)?;
    let n = s.n.unwrap_or(100);
    if n < 2 {
        return Err("--n must be >= 2".into());
    }
    let mut cfg = SimulationConfig::new(n, s.dt.unwrap_or(1e-3), s.steps.unwrap_or(1000));
    cfg.scheme = scheme_of(s);
    cfg.shift = s.shift.unwrap_or(Switch::Off) == Switch::On;
    cfg.record_every = s.record_every.unwrap_or(1);
    let seed = s.seed.unwrap_or(0);
    cfg.seed = RngStream::new(seed, 0);
    cfg.validate().map_err(err)?;
    let m = s.m.unwrap_or(5).min(n - 1);
    let law = s.law.unwrap_or(Law::Qa);

    let mut out = OutDir::prepare(&c.out, c.force, &["trajectory.csv", "report.json", "manifest.json"])?;
    let mut manifest = Manifest::new("simulate", s, seed);
    let x0 = initial_state(law, &p, n, cfg.seed)?;
    let rec = simulate(&x0, &cfg, &p).map_err(err)?;
    let trunc = truncation_diagnostic(&rec, m).map_err(err)?;

    let mut text = String::from(if cfg.shift { "t,rank,position,shift\n" } else { "t,rank,position\n" });
    for (t, snap) in rec.times.iter().zip(&rec.snapshots) {
        for (r, x) in snap.sorted.iter().enumerate() {
            write!(text, "{t},{},{x}", r + 1).unwrap();
            if cfg.shift {
                write!(text, ",{}", 0.5 * p.a * t).unwrap();
            }
            text.push('\n');
        }
    }
    out.write("trajectory.csv", &text)?;
    out.write_json("report.json", &json!({ "horizon": rec.horizon(), "truncation": trunc }))?;
    let verdict = if trunc.clean { Verdict::Pass } else { Verdict::Inconclusive };
    manifest.checks.push(CheckVerdict { name: format!("truncation diagnostic (m = {m})"), verdict });
    manifest.resolved = json!({ "params": p, "config": cfg, "initial_law": law, "m": m });
    manifest.finish(&mut out)?;
    eprintln!(
        "simulated n={n} to T={} ({} snapshots); truncation {}",
        rec.horizon(),
        rec.snapshots.len(),
        if trunc.clean { "clean" } else { "dirty" }
    );
    Ok(Exit::Pass)
}

/// `SuiteConfig` from defaults, the config file's `suite-config`, then flags.
pub fn suite_config(s: &Settings) -> Result<SuiteConfig, String> {
    let mut v = serde_json::to_value(SuiteConfig::default()).map_err(|e| e.to_string())?;
    if let Some(over) = &s.suite_config {
        merge_json(&mut v, over.clone());
    }
    let mut cfg: SuiteConfig = serde_json::from_value(v).map_err(|e| format!("suite-config: {e}"))?;
    if let Some(seed) = s.seed {
        cfg.seed = seed;
    }
    if s.a.is_some() || s.gamma.is_some() {
        let p = ModelParams::atlas(s.gamma.unwrap_or(cfg.params.gamma), s.a.unwrap_or(cfg.params.a));
        check_params(&p)?;
        cfg.sampler_params = vec![p.clone()];
        cfg.params = p;
    }
    if let Some(n) = s.n {
        cfg.n = n;
    }
    if let Some(m) = s.m {
        cfg.m = m;
    }
    if let Some(dt) = s.dt {
        cfg.dt = dt;
    }
    if let Some(steps) = s.steps {
        cfg.horizon = steps as f64 * cfg.dt;
    }
    if let Some(r) = s.replicas {
        cfg.replicas = r;
        cfg.tail_replicas = r;
    }
    if let Some(d) = s.n_draws {
        cfg.moment_draws = d;
        cfg.marginal_draws = d;
        cfg.dependence_draws = d;
        cfg.renyi_draws = d;
        cfg.girsanov_paths = d;
        cfg.fourth_moment_paths = d;
        cfg.ratio_paths = d;
    }
    if let Some(z) = s.zeta {
        cfg.zeta = z;
    }
    if let Some(g) = &s.xi_grid {
        cfg.xi_grid = g.clone();
    }
    if let Some(k) = s.record_every {
        cfg.monitor_every = k;
    }
    Ok(cfg)
}

pub fn verify(c: &Common, s: &Settings) -> CmdResult {
    let suite: Suite = s.suite.as_deref().unwrap_or("sampler").parse().map_err(err)?;
    let cfg = suite_config(s)?;
    let mut out = OutDir::prepare(&c.out, c.force, &["report.json", "manifest.json"])?;
    let mut manifest = Manifest::new("verify", s, cfg.seed);
    let outcomes = run_suite(suite, &cfg).map_err(err)?;
    let mut all = Vec::new();
    for o in &outcomes {
        println!("== {} : {}", o.suite, o.verdict);
        for r in &o.reports {
            println!("{r}");
        }
        for r in &o.diagnostics {
            println!("  (diagnostic) {r}");
        }
        all.extend(o.reports.iter().cloned());
    }
    let verdict = overall(&all);
    println!("overall: {verdict}");
    out.write_json("report.json", &json!({ "suite": suite, "verdict": verdict, "outcomes": outcomes }))?;
    manifest.checks = all.iter().map(CheckVerdict::from).collect();
    manifest.verdict = Some(verdict);
    manifest.resolved = json!({ "suite": suite, "suite_config": cfg });
    manifest.finish(&mut out)?;
    Ok(verdict.into())
}

fn run_steps(x0: &LabeledConfiguration, cfg: &SimulationConfig, p: &ModelParams) -> Result<Vec<f64>, String> {
    let mut it = Integrator::new(x0, cfg, p).map_err(err)?;
    let mut noise = GaussianNoise(cfg.seed.rng());
    for _ in 0..cfg.steps {
        it.step(&mut noise);
    }
    Ok(it.positions().to_vec())
}

pub fn bench(c: &Common, s: &Settings) -> CmdResult {
    let p = params_of(s);
    check_params(&p)?;
    let grid = s.n_grid.clone().unwrap_or_else(|| vec![100, 1000]);
    let dt = s.dt.unwrap_or(1e-3);
    let steps = s.steps.unwrap_or(200);
    let beta = s.beta.unwrap_or(50.0);
    let seed = s.seed.unwrap_or(0);
    if grid.iter().any(|&n| n < 2) {
        return Err("--n-grid entries must be >= 2".into());
    }
    let mut out = OutDir::prepare(&c.out, c.force, &["bench.csv", "manifest.json"])?;
    let mut manifest = Manifest::new("bench", s, seed);
    let mut text = String::from("n,scheme,beta,kernel,dt,steps,seconds,steps_per_second\n");
    let mut gate = Verdict::Pass;
    for &n in &grid {
        let mut cfg = SimulationConfig::new(n, dt, steps);
        cfg.seed = RngStream::new(seed, n as u64);
        cfg.validate().map_err(err)?;
        let x0 = initial_state(Law::Qa, &p, n, cfg.seed)?;

        // correctness gate: both kernels must produce the same path
        let mut inc = cfg.clone();
        inc.kernel = RankKernel::Incremental;
        let agree = run_steps(&x0, &cfg, &p)? == run_steps(&x0, &inc, &p)?;
        let v = Verdict::from_bool(agree);
        gate = gate.combine(v);
        manifest.checks.push(CheckVerdict { name: format!("kernels agree (n = {n})"), verdict: v });
        if !agree {
            eprintln!("n={n}: scan and incremental kernels disagree; skipping timing");
            continue;
        }
        let cases = [
            (DriftScheme::Hard, RankKernel::Scan, "scan"),
            (DriftScheme::Hard, RankKernel::Incremental, "incremental"),
            (DriftScheme::Mollified { beta }, RankKernel::Scan, "none"),
        ];
        for (scheme, kernel, kname) in cases {
            let mut run = cfg.clone();
            run.scheme = scheme;
            run.kernel = kernel;
            let t0 = Instant::now();
            let x = run_steps(&x0, &run, &p)?;
            let secs = t0.elapsed().as_secs_f64().max(1e-9);
            std::hint::black_box(x);
            let (sname, b) = match scheme {
                DriftScheme::Hard => ("hard", String::new()),
                DriftScheme::Mollified { beta } => ("mollified", beta.to_string()),
            };
            writeln!(text, "{n},{sname},{b},{kname},{dt},{steps},{secs},{}", steps as f64 / secs).unwrap();
            println!("n={n:<6} {sname:<9} {kname:<11} {:>12.1} steps/s", steps as f64 / secs);
        }
    }
    out.write("bench.csv", &text)?;
    manifest.verdict = Some(gate);
    manifest.resolved = json!({ "params": p, "n_grid": grid, "dt": dt, "steps": steps, "beta": beta });
    manifest.finish(&mut out)?;
    Ok(gate.into())
}
