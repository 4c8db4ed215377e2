//! Runtime evidence that a finite-`n` run is a faithful stand-in for the
//! infinite system as far as the lowest `m` ranks are concerned.
//!
//! Two things are tracked over the recorded times: the separation
//! `X_(n) - X_(m)` between the top particle and the `m`-th rank, and whether
//! the particle that started on top ever dropped into the lowest `m` ranks.
//! A run is *clean* when the top particle stayed out: it sits below every
//! particle the truncation removed and moves like them, so it is the first
//! witness of any interference from above. The separation is reported against
//! `TRUNCATION_SAFETY · √T` as a stricter, informational margin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::lex_cmp;

use super::TrajectoryRecord;

pub const TRUNCATION_SAFETY: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub m: usize,
    pub min_separation: f64,
    pub top_label: usize,
    pub top_entered_low_ranks: bool,
    pub margin: f64,
    /// `min_separation >= margin`.
    pub margin_met: bool,
    pub clean: bool,
}

/// Online version of [`truncation_diagnostic`] fed with labeled positions.
#[derive(Debug, Clone)]
pub struct TruncationMonitor {
    m: usize,
    top_label: usize,
    min_separation: f64,
    entered: bool,
    scratch: Vec<f64>,
}

impl TruncationMonitor {
    /// `initial` in label order; requires `m < n`.
    pub fn new(initial: &[f64], m: usize) -> Result<Self> {
        let n = initial.len();
        if m == 0 || m >= n {
            return Err(Error::invalid(format!(
                "truncation diagnostic needs 1 <= m < n (m = {m}, n = {n})"
            )));
        }
        let top_label = (0..n)
            .max_by(|&i, &j| lex_cmp(initial, i, j))
            .expect("n >= 2");
        let mut mon = TruncationMonitor {
            m,
            top_label,
            min_separation: f64::INFINITY,
            entered: false,
            scratch: Vec::with_capacity(n),
        };
        mon.observe(initial);
        Ok(mon)
    }

    pub fn observe(&mut self, x: &[f64]) {
        self.scratch.clear();
        self.scratch.extend_from_slice(x);
        let m = self.m;
        let (_, xm, upper) = self
            .scratch
            .select_nth_unstable_by(m - 1, |a, b| a.total_cmp(b));
        let xm = *xm;
        let top = upper.iter().copied().fold(xm, f64::max);
        self.min_separation = self.min_separation.min(top - xm);

        let t = self.top_label;
        let below = (0..x.len())
            .filter(|&j| j != t && lex_cmp(x, j, t).is_lt())
            .count();
        if below < m {
            self.entered = true;
        }
    }

    pub fn finish(&self, horizon: f64) -> TruncationReport {
        let margin = TRUNCATION_SAFETY * horizon.max(0.0).sqrt();
        TruncationReport {
            m: self.m,
            min_separation: self.min_separation,
            top_label: self.top_label,
            top_entered_low_ranks: self.entered,
            margin,
            margin_met: self.min_separation >= margin,
            clean: !self.entered,
        }
    }
}

/// Truncation diagnostic over every recorded time of `record`.
pub fn truncation_diagnostic(record: &TrajectoryRecord, m: usize) -> Result<TruncationReport> {
    let first = record
        .snapshots
        .first()
        .ok_or_else(|| Error::invalid("empty trajectory record"))?;
    let n = first.sorted.len();
    if m == 0 || m >= n {
        return Err(Error::invalid(format!(
            "truncation diagnostic needs 1 <= m < n (m = {m}, n = {n})"
        )));
    }
    let top_label = first.order[n - 1];
    let mut min_separation = f64::INFINITY;
    let mut entered = false;
    for s in &record.snapshots {
        min_separation = min_separation.min(s.sorted[n - 1] - s.sorted[m - 1]);
        if s.order[..m].contains(&top_label) {
            entered = true;
        }
    }
    let margin = TRUNCATION_SAFETY * record.horizon().max(0.0).sqrt();
    Ok(TruncationReport {
        m,
        min_separation,
        top_label,
        top_entered_low_ranks: entered,
        margin,
        margin_met: min_separation >= margin,
        clean: !entered,
    })
}
