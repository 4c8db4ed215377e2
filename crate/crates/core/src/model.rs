//! Model parameters and their admissibility constraints.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the Atlas model and of its stationary law `Q_a`.
///
/// `gamma` is the drift received by the lowest ranked particle, `a` the
/// exponential shape of the reference Poisson process (intensity
/// `a·exp(a·ξ)`). When `ranked_drifts` is set, rank `j` (1-based) receives
/// drift `ranked_drifts[j - 1]` instead, and `gamma` is only used by the
/// stationary-law machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranked_drifts: Option<Vec<f64>>,
}

/// One violated admissibility constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFiniteGamma(f64),
    NonFiniteShape(f64),
    NonPositiveShape(f64),
    /// `a <= 2·max(-gamma, 0)`.
    ShapeBelowNegativeDrift { a: f64, bound: f64 },
    /// `2·gamma/a + 1 <= 0`.
    NonPositiveGammaShape(f64),
    EmptyRankedDrifts,
    NonFiniteRankedDrift { rank: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteGamma(g) => write!(f, "gamma must be finite (got {g})"),
            Violation::NonFiniteShape(a) => write!(f, "a must be finite (got {a})"),
            Violation::NonPositiveShape(a) => write!(f, "a must be > 0 (got {a})"),
            Violation::ShapeBelowNegativeDrift { a, bound } => {
                write!(f, "a must exceed 2*gamma_- = {bound} (got a = {a})")
            }
            Violation::NonPositiveGammaShape(alpha) => {
                write!(f, "2*gamma/a + 1 must be > 0 (got {alpha})")
            }
            Violation::EmptyRankedDrifts => f.write_str("ranked drift list must be nonempty"),
            Violation::NonFiniteRankedDrift { rank, value } => {
                write!(f, "ranked drift for rank {rank} must be finite (got {value})")
            }
        }
    }
}

impl ModelParams {
    /// Plain Atlas model: only the lowest particle is pushed.
    pub fn atlas(gamma: f64, a: f64) -> Self {
        ModelParams {
            gamma,
            a,
            ranked_drifts: None,
        }
    }

    pub fn with_ranked_drifts(mut self, drifts: Vec<f64>) -> Self {
        self.ranked_drifts = Some(drifts);
        self
    }

    /// Every violated constraint, in a fixed order. Empty means admissible.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.gamma.is_finite() {
            out.push(Violation::NonFiniteGamma(self.gamma));
        }
        if !self.a.is_finite() {
            out.push(Violation::NonFiniteShape(self.a));
        } else if self.a <= 0.0 {
            out.push(Violation::NonPositiveShape(self.a));
        }
        if self.gamma.is_finite() && self.a.is_finite() {
            let bound = 2.0 * (-self.gamma).max(0.0);
            if self.a > 0.0 && self.a <= bound {
                out.push(Violation::ShapeBelowNegativeDrift { a: self.a, bound });
            }
            if self.a > 0.0 {
                let alpha = self.gamma_shape();
                if alpha <= 0.0 {
                    out.push(Violation::NonPositiveGammaShape(alpha));
                }
            }
        }
        if let Some(drifts) = &self.ranked_drifts {
            if drifts.is_empty() {
                out.push(Violation::EmptyRankedDrifts);
            }
            for (j, &v) in drifts.iter().enumerate() {
                if !v.is_finite() {
                    out.push(Violation::NonFiniteRankedDrift {
                        rank: j + 1,
                        value: v,
                    });
                }
            }
        }
        out
    }

    /// Accept iff all invariants hold, otherwise list every violation.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidParams)
    }

    /// `α = 2γ/a + 1`, the shape of the Gamma law of `exp(a·X_(1))` under `Q_a`.
    pub fn gamma_shape(&self) -> f64 {
        2.0 * self.gamma / self.a + 1.0
    }

    /// Rate of the `i`-th gap (1-based) under the product law `π_a`.
    pub fn gap_rate(&self, i: usize) -> f64 {
        2.0 * self.gamma + i as f64 * self.a
    }

    /// Drift attached to each rank, lowest first.
    pub fn rank_drifts(&self) -> Vec<f64> {
        match &self.ranked_drifts {
            Some(d) => d.clone(),
            None => vec![self.gamma],
        }
    }

    /// Largest `|γ_j|` over the ranked drifts.
    pub fn max_abs_drift(&self) -> f64 {
        self.rank_drifts().iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_drift_is_admissible() {
        assert!(ModelParams::atlas(0.5, 1.0).validate().is_ok());
    }

    #[test]
    fn strong_negative_drift_is_rejected() {
        let v = ModelParams::atlas(-0.6, 1.0).validate().unwrap_err();
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::ShapeBelowNegativeDrift { bound, .. } if (*bound - 1.2).abs() < 1e-12)));
        // α = 1 - 1.2 is also non-positive; both are listed.
        assert!(v.iter().any(|v| matches!(v, Violation::NonPositiveGammaShape(_))));
    }

    #[test]
    fn mild_negative_drift_has_half_shape() {
        let p = ModelParams::atlas(-0.25, 1.0);
        assert!(p.validate().is_ok());
        assert_eq!(p.gamma_shape(), 0.5);
        assert_eq!(p.gap_rate(1), 0.5);
    }

    #[test]
    fn lists_every_violation() {
        let p = ModelParams {
            gamma: f64::NAN,
            a: -1.0,
            ranked_drifts: Some(vec![]),
        };
        let v = p.validate().unwrap_err();
        assert_eq!(v.len(), 3, "{v:?}");
    }

    #[test]
    fn boundary_is_excluded() {
        // a == 2γ_- exactly.
        assert!(ModelParams::atlas(-0.5, 1.0).validate().is_err());
        assert!(ModelParams::atlas(0.0, 0.0).validate().is_err());
    }
}
