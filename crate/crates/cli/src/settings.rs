//! Run settings: defaults < JSON config file < command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{Common, Law, Scheme, Switch};

/// Every knob a command may read. `None` means "use the command default".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    pub law: Option<Law>,
    pub a: Option<f64>,
    pub gamma: Option<f64>,
    pub drifts: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub scheme: Option<Scheme>,
    pub beta: Option<f64>,
    pub shift: Option<Switch>,
    pub seed: Option<u64>,
    pub n_draws: Option<usize>,
    pub replicas: Option<usize>,
    pub zeta: Option<f64>,
    pub xi_grid: Option<Vec<f64>>,
    pub suite: Option<String>,
    pub threads: Option<usize>,
    pub record_every: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    /// Partial `SuiteConfig` for `verify`, applied before the flags.
    pub suite_config: Option<Value>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Fields set in `top` win.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay!(
            self, top, law, a, gamma, drifts, n, m, dt, steps, scheme, beta, shift, seed, n_draws,
            replicas, zeta, xi_grid, suite, threads, record_every, n_grid, suite_config
        )
    }

    /// Read a settings object, or the `settings` of a previous manifest.
    pub fn from_file(path: &Path) -> Result<Settings, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut v: Value = serde_json::from_str(&text)
            .map_err(|e| format!("config {} is not JSON: {e}", path.display()))?;
        if v.get("schema_version").is_some() {
            v = v
                .get_mut("settings")
                .map(Value::take)
                .ok_or_else(|| format!("manifest {} has no settings", path.display()))?;
        }
        serde_json::from_value(v).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn from_flags(c: &Common) -> Settings {
        Settings {
            law: c.law,
            a: c.a,
            gamma: c.gamma,
            drifts: c.drifts.clone(),
            n: c.n,
            m: c.m,
            dt: c.dt,
            steps: c.steps,
            scheme: c.scheme,
            beta: c.beta,
            shift: c.shift,
            seed: c.seed,
            n_draws: c.n_draws,
            replicas: c.replicas,
            zeta: c.zeta,
            xi_grid: c.xi_grid.clone(),
            suite: c.suite.clone(),
            threads: c.threads,
            record_every: c.record_every,
            n_grid: c.n_grid.clone(),
            suite_config: None,
        }
    }

    pub fn resolve(c: &Common) -> Result<Settings, String> {
        let base = match &c.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        Ok(base.overlay(Settings::from_flags(c)))
    }
}

/// Recursive object merge, `top` wins on leaves.
pub fn merge_json(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, t) => *slot = t,
    }
}
