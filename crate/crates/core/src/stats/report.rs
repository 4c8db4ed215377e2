use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Combine verdicts: any inconclusive wins over fail, fail over pass.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (Fail, _) | (_, Fail) => Fail,
            _ => Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Outcome of one statistical check.
///
/// `statistic` is test-specific (KS distance, effective sample size, fitted
/// slope); `rule` states how `verdict` was decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub estimate: f64,
    #[serde(rename = "se")]
    pub std_error: f64,
    pub statistic: f64,
    #[serde(rename = "p")]
    pub p_value: Option<f64>,
    pub target: Option<f64>,
    pub verdict: Verdict,
    pub n_samples: usize,
    pub rule: String,
}

impl StatReport {
    /// Pass iff `|estimate - target| <= k·std_error`.
    pub fn within_se(
        name: impl Into<String>,
        estimate: f64,
        std_error: f64,
        target: f64,
        k: f64,
        n_samples: usize,
    ) -> Self {
        let z = if std_error > 0.0 {
            (estimate - target) / std_error
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        StatReport {
            name: name.into(),
            estimate,
            std_error,
            statistic: z,
            p_value: None,
            target: Some(target),
            verdict: Verdict::from_bool(z.abs() <= k),
            n_samples,
            rule: format!("|estimate - target| <= {k} SE"),
        }
    }

    /// Pass iff `|estimate - target| <= rel·|target|`.
    pub fn within_relative(
        name: impl Into<String>,
        estimate: f64,
        std_error: f64,
        target: f64,
        rel: f64,
        n_samples: usize,
    ) -> Self {
        let err = (estimate - target).abs() / target.abs();
        StatReport {
            name: name.into(),
            estimate,
            std_error,
            statistic: err,
            p_value: None,
            target: Some(target),
            verdict: Verdict::from_bool(err <= rel),
            n_samples,
            rule: format!("relative error <= {rel}"),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Downgrade to inconclusive, keeping every estimate.
    pub fn mark_inconclusive(mut self, why: &str) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.rule = format!("{}; inconclusive: {why}", self.rule);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl fmt::Display for StatReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<13} {:<44} est={:<12.6} se={:<10.3e} stat={:<10.4}",
            self.verdict.to_string(),
            self.name,
            self.estimate,
            self.std_error,
            self.statistic
        )?;
        if let Some(t) = self.target {
            write!(f, " target={t:.6}")?;
        }
        if let Some(p) = self.p_value {
            write!(f, " p={p:.4}")?;
        }
        write!(f, " n={}", self.n_samples)
    }
}

/// Overall verdict of a batch of reports; empty batches are inconclusive.
pub fn overall(reports: &[StatReport]) -> Verdict {
    reports
        .iter()
        .map(|r| r.verdict)
        .reduce(Verdict::combine)
        .unwrap_or(Verdict::Inconclusive)
}
