//! Rank-based drift fields and the ranking kernels that feed them.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ranking::{lex_cmp, lowest_label, LabeledConfiguration};

/// How the rank indicator in the drift is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DriftScheme {
    /// Indicator drift `γ·1{rank = 1}` (or the ranked-drift vector).
    Hard,
    /// Softmin weights at inverse temperature `beta`.
    Mollified { beta: f64 },
}

/// How ranks are recomputed after each step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankKernel {
    /// Fresh argmin / selection scan every step.
    #[default]
    Scan,
    /// Keep the rank order and repair it by insertion sort.
    Incremental,
}

/// Atlas drift: `γ` on the lowest particle (smallest label among ties).
pub fn atlas_drift(x: &LabeledConfiguration, gamma: f64) -> Vec<f64> {
    let mut b = vec![0.0; x.len()];
    if let Some(i) = lowest_label(x.positions()) {
        b[i] = gamma;
    }
    b
}

/// Smoothed Atlas drift `b_i = γ·w_i`, `w = softmax(-β·x)`.
///
/// This is the gradient (halved) of `V_β(x) = -(2γ/β)·ln Σ exp(-β·x_j)`,
/// a smooth stand-in for `2γ·min(x)`. The weights sum to one, so
/// `Σ b_i = γ` and `|b_i| <= |γ|`; as `β → ∞` they concentrate on the
/// lowest particle, splitting evenly across exact ties.
pub fn mollified_drift(x: &LabeledConfiguration, gamma: f64, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let mut b = vec![0.0; x.len()];
    softmin_into(x.positions(), gamma, beta, &mut b);
    Ok(b)
}

/// Drift `γ_j` on the particle of rank `j`, `j = 1..m`.
pub fn multi_drift(x: &LabeledConfiguration, ranked_drifts: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if ranked_drifts.len() > n {
        return Err(Error::invalid(format!(
            "{} ranked drifts for {n} particles",
            ranked_drifts.len()
        )));
    }
    let mut b = vec![0.0; n];
    let mut scratch = Vec::new();
    ranked_into(x.positions(), ranked_drifts, &mut scratch, &mut b);
    Ok(b)
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be > 0 (got {beta})")));
    }
    Ok(())
}

fn softmin_into(x: &[f64], gamma: f64, beta: f64, out: &mut [f64]) {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    softmin_with_min(x, min, gamma, beta, out);
}

#[inline]
fn softmin_with_min(x: &[f64], min: f64, gamma: f64, beta: f64, out: &mut [f64]) {
    let mut total = 0.0;
    for (o, &xi) in out.iter_mut().zip(x) {
        let w = (-beta * (xi - min)).exp();
        *o = w;
        total += w;
    }
    let scale = gamma / total;
    for o in out.iter_mut() {
        *o *= scale;
    }
}

fn ranked_into(x: &[f64], drifts: &[f64], scratch: &mut Vec<usize>, out: &mut [f64]) {
    out.fill(0.0);
    let m = drifts.len();
    if m == 0 {
        return;
    }
    if m == 1 {
        if let Some(i) = lowest_label(x) {
            out[i] = drifts[0];
        }
        return;
    }
    scratch.clear();
    scratch.extend(0..x.len());
    let cmp = |&i: &usize, &j: &usize| lex_cmp(x, i, j);
    if m < x.len() {
        scratch.select_nth_unstable_by(m - 1, cmp);
    }
    scratch[..m].sort_unstable_by(cmp);
    for (r, &label) in scratch[..m].iter().enumerate() {
        out[label] = drifts[r];
    }
}

#[derive(Debug, Clone)]
enum DriftRule {
    Atlas(f64),
    Ranked(Vec<f64>),
    Softmin { gamma: f64, beta: f64 },
}

#[derive(Debug, Clone)]
enum Ranker {
    Scan { scratch: Vec<usize> },
    // labels in ascending (position, label) order from the last evaluation
    Incremental { order: Vec<usize> },
}

impl Ranker {
    fn new(kernel: RankKernel, x: &[f64]) -> Self {
        match kernel {
            RankKernel::Scan => Ranker::Scan {
                scratch: Vec::new(),
            },
            RankKernel::Incremental => {
                let mut order: Vec<usize> = (0..x.len()).collect();
                order.sort_by(|&i, &j| lex_cmp(x, i, j));
                Ranker::Incremental { order }
            }
        }
    }
}

/// Insertion sort of `order` under the (position, label) order.
///
/// Linear when few particles crossed since the last call.
fn repair_order(x: &[f64], order: &mut [usize]) {
    for k in 1..order.len() {
        let cur = order[k];
        let mut j = k;
        while j > 0 && lex_cmp(x, order[j - 1], cur) == Ordering::Greater {
            order[j] = order[j - 1];
            j -= 1;
        }
        order[j] = cur;
    }
}

/// A drift rule bound to a ranking kernel, evaluated in place.
#[derive(Debug, Clone)]
pub struct DriftField {
    rule: DriftRule,
    ranker: Ranker,
}

impl DriftField {
    pub fn new(
        params: &ModelParams,
        scheme: DriftScheme,
        kernel: RankKernel,
        initial: &[f64],
    ) -> Result<Self> {
        let rule = match (scheme, &params.ranked_drifts) {
            (DriftScheme::Hard, None) => DriftRule::Atlas(params.gamma),
            (DriftScheme::Hard, Some(d)) => {
                if d.len() > initial.len() {
                    return Err(Error::invalid(format!(
                        "{} ranked drifts for {} particles",
                        d.len(),
                        initial.len()
                    )));
                }
                DriftRule::Ranked(d.clone())
            }
            (DriftScheme::Mollified { beta }, None) => {
                check_beta(beta)?;
                DriftRule::Softmin {
                    gamma: params.gamma,
                    beta,
                }
            }
            (DriftScheme::Mollified { .. }, Some(_)) => {
                return Err(Error::invalid(
                    "the mollified scheme supports the single Atlas drift only",
                ))
            }
        };
        Ok(DriftField {
            rule,
            ranker: Ranker::new(kernel, initial),
        })
    }

    /// Write the drift at `x` into `out` (same length as `x`).
    pub fn eval(&mut self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), out.len());
        if let Ranker::Incremental { order } = &mut self.ranker {
            repair_order(x, order);
        }
        match (&self.rule, &mut self.ranker) {
            (DriftRule::Atlas(g), Ranker::Scan { .. }) => {
                out.fill(0.0);
                if let Some(i) = lowest_label(x) {
                    out[i] = *g;
                }
            }
            (DriftRule::Atlas(g), Ranker::Incremental { order }) => {
                out.fill(0.0);
                if let Some(&i) = order.first() {
                    out[i] = *g;
                }
            }
            (DriftRule::Ranked(d), Ranker::Scan { scratch }) => ranked_into(x, d, scratch, out),
            (DriftRule::Ranked(d), Ranker::Incremental { order }) => {
                out.fill(0.0);
                for (&label, &g) in order.iter().zip(d) {
                    out[label] = g;
                }
            }
            (DriftRule::Softmin { gamma, beta }, Ranker::Scan { .. }) => {
                softmin_into(x, *gamma, *beta, out)
            }
            (DriftRule::Softmin { gamma, beta }, Ranker::Incremental { order }) => {
                let min = order.first().map_or(f64::INFINITY, |&i| x[i]);
                softmin_with_min(x, min, *gamma, *beta, out)
            }
        }
    }
}
