//! Named verification suites and their configuration.
//!
//! Defaults are the full acceptance scale; every knob can be overridden, which
//! is how the tests and the command line run reduced versions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DriftScheme, GaussianNoise, Integrator, SimulationConfig};
use crate::error::{Error, Result};
use crate::girsanov::{importance_estimate, weight_ratio_diagnostic, weighted_paths, RatioPoint};
use crate::model::ModelParams;
use crate::ranking::LabeledConfiguration;
use crate::rng::RngStream;
use crate::stats::{
    atlas_gap_dependence, mean_se, moment_identity_check, overall, pal_pitman_check,
    q_a_marginal_checks, refined, renyi_check, stationarity_check, tail_bound_check_at,
    StatReport, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Sampler,
    Stationarity,
    PalPitman,
    Tail,
    Girsanov,
    All,
}

impl Suite {
    pub const ATOMIC: [Suite; 5] = [
        Suite::Sampler,
        Suite::Stationarity,
        Suite::PalPitman,
        Suite::Tail,
        Suite::Girsanov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Sampler => "sampler",
            Suite::Stationarity => "stationarity",
            Suite::PalPitman => "pal-pitman",
            Suite::Tail => "tail",
            Suite::Girsanov => "girsanov",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::All]
            .into_iter()
            .chain(Suite::ATOMIC)
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown suite '{s}' (expected sampler, stationarity, pal-pitman, tail, girsanov or all)"
                ))
            })
    }
}

/// Knobs of every suite. `Default` is the acceptance scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Level of single tests (moment, marginal KS, Rényi).
    pub alpha_single: f64,
    /// Level of each test in a batched dynamic suite.
    pub alpha_batch: f64,

    pub sampler_params: Vec<ModelParams>,
    pub moment_draws: usize,
    pub zeta: f64,
    pub marginal_draws: usize,
    pub marginal_gaps: usize,
    pub dependence_draws: usize,
    pub renyi_n: usize,
    pub renyi_a: f64,
    pub renyi_draws: usize,

    pub params: ModelParams,
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub m: usize,
    pub replicas: usize,
    pub monitor_every: usize,
    /// Also run at `dt/4`; the verdict then comes from the fine run.
    pub refine: bool,
    pub pal_pitman_gamma: f64,
    pub pal_pitman_m: usize,

    pub tail_n: usize,
    pub tail_dt: f64,
    pub tail_horizons: Vec<f64>,
    pub tail_replicas: usize,
    pub xi_grid: Vec<f64>,

    pub girsanov_params: ModelParams,
    pub girsanov_initial: Vec<f64>,
    pub girsanov_horizon: f64,
    pub girsanov_dt: f64,
    pub girsanov_paths: usize,
    pub fourth_moment_paths: usize,
    pub betas: Vec<f64>,
    pub ratio_paths: usize,
    pub separated_initial: Vec<f64>,
    pub near_tie_initial: Vec<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            alpha_single: crate::stats::ALPHA_SINGLE,
            alpha_batch: crate::stats::ALPHA_BATCH,
            sampler_params: vec![
                ModelParams::atlas(1.0, 2.0),
                ModelParams::atlas(0.5, 1.0),
                ModelParams::atlas(-0.25, 1.0),
            ],
            moment_draws: 1_000_000,
            zeta: 5.0,
            marginal_draws: 100_000,
            marginal_gaps: 5,
            dependence_draws: 100_000,
            renyi_n: 5,
            renyi_a: 1.0,
            renyi_draws: 10_000,
            params: ModelParams::atlas(0.5, 1.0),
            n: 400,
            dt: 1e-3,
            horizon: 1.0,
            m: 5,
            replicas: 20_000,
            monitor_every: 10,
            refine: true,
            pal_pitman_gamma: 1.0,
            pal_pitman_m: 3,
            tail_n: 200,
            tail_dt: 2e-3,
            tail_horizons: vec![0.5, 1.0, 2.0],
            tail_replicas: 100_000,
            xi_grid: (1..=24).map(|k| 0.25 * k as f64).collect(),
            girsanov_params: ModelParams::atlas(0.7, 1.0),
            girsanov_initial: vec![0.0, 0.5, 1.0],
            girsanov_horizon: 0.5,
            girsanov_dt: 1e-3,
            girsanov_paths: 100_000,
            fourth_moment_paths: 1_000_000,
            betas: vec![10.0, 20.0, 40.0, 80.0, 160.0, 320.0],
            ratio_paths: 10_000,
            separated_initial: vec![0.0, 1.5, 3.0],
            near_tie_initial: vec![0.0, 0.05, 2.0],
        }
    }
}

/// Result of one suite: `reports` decide the verdict, `diagnostics` are
/// informational (coarse-`dt` runs, convergence tables).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub verdict: Verdict,
    pub reports: Vec<StatReport>,
    pub diagnostics: Vec<StatReport>,
}

impl SuiteOutcome {
    fn new(suite: Suite, reports: Vec<StatReport>, diagnostics: Vec<StatReport>) -> Self {
        SuiteOutcome {
            suite,
            verdict: overall(&reports),
            reports,
            diagnostics,
        }
    }
}

fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    let s = horizon / dt;
    if !(s >= 0.0 && s.is_finite()) || (s - s.round()).abs() > 1e-6 * s.max(1.0) {
        return Err(Error::invalid(format!(
            "horizon {horizon} is not a whole number of steps of {dt}"
        )));
    }
    Ok(s.round() as usize)
}

fn stream(cfg: &SuiteConfig, suite: Suite, tag: u64) -> RngStream {
    RngStream::new(cfg.seed, 0).derive(suite as u64 * 1000 + tag)
}

/// Run `suite`. For [`Suite::All`] every atomic suite runs with both levels
/// divided by five.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<SuiteOutcome>> {
    match suite {
        Suite::All => {
            let k = Suite::ATOMIC.len() as f64;
            let mut c = cfg.clone();
            c.alpha_single /= k;
            c.alpha_batch /= k;
            Suite::ATOMIC.iter().map(|&s| run_one(s, &c)).collect()
        }
        s => Ok(vec![run_one(s, cfg)?]),
    }
}

fn run_one(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    match suite {
        Suite::Sampler => sampler_suite(cfg),
        Suite::Stationarity => stationarity_suite(cfg),
        Suite::PalPitman => pal_pitman_suite(cfg),
        Suite::Tail => tail_suite(cfg),
        Suite::Girsanov => girsanov_suite(cfg),
        Suite::All => unreachable!("expanded by run_suite"),
    }
}

pub fn sampler_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut reports = Vec::new();
    for (j, p) in cfg.sampler_params.iter().enumerate() {
        let j = j as u64;
        reports.push(moment_identity_check(
            p,
            cfg.moment_draws,
            cfg.zeta,
            stream(cfg, Suite::Sampler, 10 * j),
        )?);
        reports.extend(q_a_marginal_checks(
            p,
            cfg.marginal_draws,
            cfg.marginal_gaps,
            cfg.alpha_single,
            stream(cfg, Suite::Sampler, 10 * j + 1),
        )?);
        reports.push(atlas_gap_dependence(
            p,
            cfg.dependence_draws,
            5.0,
            stream(cfg, Suite::Sampler, 10 * j + 2),
        )?);
    }
    reports.extend(renyi_check(
        cfg.renyi_n,
        cfg.renyi_a,
        cfg.renyi_draws,
        cfg.alpha_single,
        stream(cfg, Suite::Sampler, 999),
    )?);
    Ok(SuiteOutcome::new(Suite::Sampler, reports, Vec::new()))
}

fn dynamic_config(cfg: &SuiteConfig, suite: Suite) -> Result<SimulationConfig> {
    let mut sim = SimulationConfig::new(cfg.n, cfg.dt, steps_for(cfg.horizon, cfg.dt)?);
    sim.record_every = cfg.monitor_every;
    sim.seed = stream(cfg, suite, 0);
    Ok(sim)
}

/// Run `check` at `dt` (diagnostic) and, if `refine`, at `dt/4` (decisive).
fn with_refinement(
    suite: Suite,
    cfg: &SuiteConfig,
    sim: &SimulationConfig,
    check: impl Fn(&SimulationConfig) -> Result<Vec<StatReport>>,
) -> Result<SuiteOutcome> {
    let coarse = check(sim)?;
    if !cfg.refine {
        return Ok(SuiteOutcome::new(suite, coarse, Vec::new()));
    }
    let mut fine_cfg = refined(sim);
    fine_cfg.seed = sim.seed.derive(4);
    let fine = check(&fine_cfg)?
        .into_iter()
        .map(|r| {
            let name = format!("{} [dt/4]", r.name);
            r.renamed(name)
        })
        .collect();
    let coarse = coarse
        .into_iter()
        .map(|r| {
            let name = format!("{} [dt, diagnostic]", r.name);
            r.renamed(name)
        })
        .collect();
    Ok(SuiteOutcome::new(suite, fine, coarse))
}

pub fn stationarity_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let sim = dynamic_config(cfg, Suite::Stationarity)?;
    with_refinement(Suite::Stationarity, cfg, &sim, |c| {
        stationarity_check(&cfg.params, c, cfg.m, cfg.replicas, cfg.alpha_batch)
    })
}

pub fn pal_pitman_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let sim = dynamic_config(cfg, Suite::PalPitman)?;
    with_refinement(Suite::PalPitman, cfg, &sim, |c| {
        pal_pitman_check(cfg.pal_pitman_gamma, c, cfg.pal_pitman_m, cfg.replicas, cfg.alpha_batch)
    })
}

pub fn tail_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let checkpoints = cfg
        .tail_horizons
        .iter()
        .map(|&t| steps_for(t, cfg.tail_dt))
        .collect::<Result<Vec<_>>>()?;
    let last = *checkpoints
        .last()
        .ok_or_else(|| Error::invalid("no tail horizons"))?;
    let mut sim = SimulationConfig::new(cfg.tail_n, cfg.tail_dt, last);
    sim.record_every = cfg.monitor_every;
    sim.seed = stream(cfg, Suite::Tail, 0);
    let reports = tail_bound_check_at(&cfg.params, &sim, &cfg.xi_grid, cfg.tail_replicas, &checkpoints)?;
    Ok(SuiteOutcome::new(Suite::Tail, reports, Vec::new()))
}

/// Bounded test functions of the three lowest positions (ascending).
pub fn girsanov_test_functions() -> Vec<(&'static str, fn(&[f64]) -> f64)> {
    vec![
        ("1{X1 <= 0}", |x| f64::from(x[0] <= 0.0)),
        ("1{X2 - X1 <= 0.5}", |x| f64::from(x[1] - x[0] <= 0.5)),
        ("1/(1 + X1^2)", |x| 1.0 / (1.0 + x[0] * x[0])),
        ("cos(X1 + X3)", |x| (x[0] + x[2]).cos()),
        ("1{X3 <= 1.5}", |x| f64::from(x[2] <= 1.5)),
    ]
}

/// The `m` lowest terminal positions of `n_paths` direct Euler runs.
pub fn direct_terminal_lowest(
    initial: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
    n_paths: usize,
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut it = Integrator::new(initial, cfg, params)?;
            let mut noise = GaussianNoise(cfg.seed.replica(k).rng());
            for _ in 0..cfg.steps {
                it.step(&mut noise);
            }
            let mut x = it.positions().to_vec();
            x.sort_by(|a, b| a.total_cmp(b));
            x.truncate(m);
            Ok(x)
        })
        .collect()
}

fn ratio_report(name: String, points: &[RatioPoint], n_paths: usize, below: Option<f64>) -> StatReport {
    let monotone = points.windows(2).all(|w| w[1].mean_square <= w[0].mean_square);
    let decreased = match (points.first(), points.last()) {
        (Some(f), Some(l)) => l.mean_square < f.mean_square,
        _ => false,
    };
    let last = points.last().map_or(f64::NAN, |p| p.mean_square);
    let small = below.map_or(true, |b| last < b);
    let table: Vec<String> = points
        .iter()
        .map(|p| format!("{}:{:.3e}", p.beta, p.mean_square))
        .collect();
    let mut rule = format!("non-increasing in beta [{}]", table.join(" "));
    if let Some(b) = below {
        rule.push_str(&format!("; last < {b}"));
    } else {
        rule.push_str("; last < first");
    }
    StatReport {
        name,
        estimate: last,
        std_error: points.last().map_or(f64::NAN, |p| p.std_error),
        statistic: points.first().map_or(f64::NAN, |p| p.mean_square),
        p_value: None,
        target: Some(0.0),
        verdict: Verdict::from_bool(monotone && small && (below.is_some() || decreased)),
        n_samples: n_paths,
        rule,
    }
}

pub fn girsanov_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let p = &cfg.girsanov_params;
    let x0 = LabeledConfiguration::new(cfg.girsanov_initial.clone())?;
    let n = x0.len();
    if n < 3 {
        return Err(Error::invalid("girsanov suite needs at least three particles"));
    }
    let mut sim = SimulationConfig::new(n, cfg.girsanov_dt, steps_for(cfg.girsanov_horizon, cfg.girsanov_dt)?);
    sim.shift = true;
    let t = sim.horizon();
    let mut reports = Vec::new();

    let mut weighted_cfg = sim.clone();
    weighted_cfg.seed = stream(cfg, Suite::Girsanov, 1);
    let paths = weighted_paths(&x0, &weighted_cfg, p, cfg.girsanov_paths)?;
    let mut direct_cfg = sim.clone();
    direct_cfg.seed = stream(cfg, Suite::Girsanov, 2);
    let direct = direct_terminal_lowest(&x0, &direct_cfg, p, cfg.girsanov_paths, 3)?;
    for (label, f) in girsanov_test_functions() {
        let is = importance_estimate(label, f, 3, &paths)?;
        let values: Vec<f64> = direct.iter().map(|x| f(x)).collect();
        let (mean, se) = mean_se(&values)?;
        let combined = (is.std_error.powi(2) + se.powi(2)).sqrt();
        reports.push(StatReport::within_se(
            format!("girsanov E[{label}]: weighted vs direct"),
            is.estimate,
            combined,
            mean,
            3.0,
            cfg.girsanov_paths,
        ));
    }
    let unit = importance_estimate("E[F]", |_| 1.0, 1, &paths)?;
    reports.push(StatReport::within_se(
        format!("girsanov E[F({t})] = 1"),
        unit.estimate,
        unit.std_error,
        1.0,
        3.0,
        paths.len(),
    ));
    drop(paths);

    let mut f4_cfg = sim.clone();
    f4_cfg.seed = stream(cfg, Suite::Girsanov, 3);
    let f4: Vec<f64> = weighted_paths(&x0, &f4_cfg, p, cfg.fourth_moment_paths)?
        .iter()
        .map(|w| (4.0 * w.log_weight).exp())
        .collect();
    let (m4, se4) = mean_se(&f4)?;
    reports.push(StatReport::within_relative(
        format!("girsanov E[F({t})^4] = exp(6 g^2 t)"),
        m4,
        se4,
        (6.0 * p.gamma * p.gamma * t).exp(),
        0.2,
        f4.len(),
    ));

    let mut diagnostics = Vec::new();
    for (tag, init, below) in [
        ("separated", &cfg.separated_initial, Some(1e-3)),
        ("near-tie", &cfg.near_tie_initial, None),
    ] {
        let x = LabeledConfiguration::new(init.clone())?;
        let mut c = SimulationConfig::new(x.len(), cfg.girsanov_dt, sim.steps);
        c.shift = true;
        c.scheme = DriftScheme::Hard;
        c.seed = stream(cfg, Suite::Girsanov, 4);
        let points = weight_ratio_diagnostic(&x, &c, p, &cfg.betas, cfg.ratio_paths)?;
        let rep = ratio_report(
            format!("mollified E(1 - F^b/F)^2 ({tag} start {init:?})"),
            &points,
            cfg.ratio_paths,
            below,
        );
        if below.is_some() {
            reports.push(rep);
        } else {
            diagnostics.push(rep);
        }
    }
    Ok(SuiteOutcome::new(Suite::Girsanov, reports, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::All].into_iter().chain(Suite::ATOMIC) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json_name(s), s.name());
        }
        assert!("pal_pitman".parse::<Suite>().is_err());
    }

    fn serde_json_name(s: Suite) -> String {
        serde_json::to_value(s).unwrap().as_str().unwrap().to_owned()
    }

    #[test]
    fn steps_must_divide_horizon() {
        assert_eq!(steps_for(1.0, 1e-3).unwrap(), 1000);
        assert_eq!(steps_for(0.0, 1e-3).unwrap(), 0);
        assert!(steps_for(1.0, 0.3).is_err());
    }

    #[test]
    fn config_json_fills_defaults() {
        let c: SuiteConfig = serde_json::from_str(r#"{"seed": 9, "replicas": 10}"#).unwrap();
        assert_eq!((c.seed, c.replicas, c.n), (9, 10, 400));
    }

    #[test]
    fn ratio_rule() {
        let pts = |v: &[f64]| -> Vec<RatioPoint> {
            v.iter()
                .enumerate()
                .map(|(i, &m)| RatioPoint { beta: (i + 1) as f64, mean_square: m, std_error: 0.0 })
                .collect()
        };
        assert!(ratio_report("a".into(), &pts(&[0.1, 0.01, 1e-4]), 1, Some(1e-3)).passed());
        assert!(!ratio_report("b".into(), &pts(&[0.1, 0.2, 1e-4]), 1, Some(1e-3)).passed());
        assert!(!ratio_report("c".into(), &pts(&[0.1, 0.01, 2e-3]), 1, Some(1e-3)).passed());
        assert!(ratio_report("d".into(), &pts(&[0.1, 0.1, 0.05]), 1, None).passed());
        assert!(!ratio_report("e".into(), &pts(&[0.0, 0.0]), 1, None).passed());
    }
}
