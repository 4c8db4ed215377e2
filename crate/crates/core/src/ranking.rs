//! Labeled and ranked particle configurations.
//!
//! Labels are 0-based indices into the position vector. Ranks are 1-based
//! externally (`rank_of(label) == 1` is the Atlas particle) and ties between
//! equal positions are resolved by the smaller label. Ties are exact
//! floating-point equality; there is no tolerance band.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite particle positions indexed by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LabeledConfiguration(Vec<f64>);

impl LabeledConfiguration {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "position of particle {i} is not finite ({})",
                positions[i]
            )));
        }
        Ok(LabeledConfiguration(positions))
    }

    pub fn positions(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Shift every particle by `c`.
    pub fn translated(&self, c: f64) -> Self {
        LabeledConfiguration(self.0.iter().map(|x| x + c).collect())
    }

    /// Crate-internal constructor for vectors already known to be finite.
    pub(crate) fn from_finite(positions: Vec<f64>) -> Self {
        debug_assert!(positions.iter().all(|x| x.is_finite()));
        LabeledConfiguration(positions)
    }
}

impl TryFrom<Vec<f64>> for LabeledConfiguration {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        LabeledConfiguration::new(v)
    }
}

impl From<LabeledConfiguration> for Vec<f64> {
    fn from(c: LabeledConfiguration) -> Self {
        c.0
    }
}

/// Total order on labels: by position, then by label.
#[inline]
pub(crate) fn lex_cmp(x: &[f64], i: usize, j: usize) -> Ordering {
    x[i].partial_cmp(&x[j])
        .unwrap_or(Ordering::Equal)
        .then(i.cmp(&j))
}

/// Label of the lowest ranked particle, smallest label among exact ties.
///
/// Returns `None` only for an empty slice.
#[inline]
pub fn lowest_label(x: &[f64]) -> Option<usize> {
    let mut it = x.iter().enumerate();
    let (mut best, mut best_x) = it.next().map(|(i, &v)| (i, v))?;
    for (i, &v) in it {
        if v < best_x {
            best = i;
            best_x = v;
        }
    }
    Some(best)
}

/// Ascending positions together with the ranking permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedConfiguration {
    sorted: Vec<f64>,
    // order[r] = label holding rank r + 1
    order: Vec<usize>,
    // rank0[label] = rank - 1
    rank0: Vec<usize>,
}

impl RankedConfiguration {
    /// Ranked configuration whose labels coincide with ranks, for
    /// indistinguishable point samples that are generated in ascending order.
    pub fn from_ascending(sorted: Vec<f64>) -> Result<Self> {
        if let Some(i) = sorted.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("point {i} is not finite")));
        }
        if sorted.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("points are not in ascending order"));
        }
        let n = sorted.len();
        Ok(RankedConfiguration {
            sorted,
            order: (0..n).collect(),
            rank0: (0..n).collect(),
        })
    }

    pub fn empty() -> Self {
        RankedConfiguration {
            sorted: Vec::new(),
            order: Vec::new(),
            rank0: Vec::new(),
        }
    }

    pub fn sorted_positions(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `x_(r)` for a 1-based rank `r`.
    pub fn at_rank(&self, r: usize) -> f64 {
        self.sorted[r - 1]
    }

    /// Label holding 1-based rank `r`, i.e. `p^{-1}(r)`.
    pub fn label_at_rank(&self, r: usize) -> usize {
        self.order[r - 1]
    }

    /// 1-based rank of `label`, i.e. `p(label)`.
    pub fn rank_of(&self, label: usize) -> usize {
        self.rank0[label] + 1
    }

    /// Labels in ascending rank order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Positions back in label order.
    pub fn to_labeled(&self) -> LabeledConfiguration {
        let mut x = vec![0.0; self.len()];
        for (r, &label) in self.order.iter().enumerate() {
            x[label] = self.sorted[r];
        }
        LabeledConfiguration::from_finite(x)
    }

    /// The `m` lowest points (all of them if fewer).
    pub fn lowest(&self, m: usize) -> &[f64] {
        &self.sorted[..m.min(self.len())]
    }

    /// Keep the `m` lowest ranks, relabeled by rank.
    pub fn truncated(&self, m: usize) -> RankedConfiguration {
        let k = m.min(self.len());
        RankedConfiguration {
            sorted: self.sorted[..k].to_vec(),
            order: (0..k).collect(),
            rank0: (0..k).collect(),
        }
    }
}

/// Sort by position, resolving ties lexicographically by label.
pub fn rank(config: &LabeledConfiguration) -> RankedConfiguration {
    let x = config.positions();
    let mut order: Vec<usize> = (0..x.len()).collect();
    // Stable sort over label order keeps the smaller label first among ties.
    order.sort_by(|&i, &j| x[i].partial_cmp(&x[j]).unwrap_or(Ordering::Equal));
    let mut rank0 = vec![0; x.len()];
    for (r, &label) in order.iter().enumerate() {
        rank0[label] = r;
    }
    RankedConfiguration {
        sorted: order.iter().map(|&i| x[i]).collect(),
        order,
        rank0,
    }
}

/// Rank raw positions, rejecting non-finite entries.
pub fn rank_positions(positions: &[f64]) -> Result<RankedConfiguration> {
    Ok(rank(&LabeledConfiguration::new(positions.to_vec())?))
}

/// Gaps between consecutive ranked points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapVector(Vec<f64>);

impl GapVector {
    pub(crate) fn from_nonnegative(gaps: Vec<f64>) -> Self {
        debug_assert!(gaps.iter().all(|&z| z >= 0.0));
        GapVector(gaps)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// 1-based gap `Z_i = x_(i+1) - x_(i)`.
    pub fn get(&self, i: usize) -> f64 {
        self.0[i - 1]
    }
}

pub fn gaps(ranked: &RankedConfiguration) -> Result<GapVector> {
    if ranked.len() < 2 {
        return Err(Error::EmptyGaps(ranked.len()));
    }
    Ok(GapVector(
        ranked.sorted.windows(2).map(|w| w[1] - w[0]).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(v: &[f64]) -> LabeledConfiguration {
        LabeledConfiguration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tie_goes_to_smaller_label() {
        let r = rank(&cfg(&[0.5, -1.2, 0.5]));
        assert_eq!(r.sorted_positions(), &[-1.2, 0.5, 0.5]);
        assert_eq!(r.rank_of(1), 1);
        assert_eq!(r.rank_of(0), 2);
        assert_eq!(r.rank_of(2), 3);
    }

    #[test]
    fn singleton_and_full_tie() {
        let r = rank(&cfg(&[7.0]));
        assert_eq!(r.sorted_positions(), &[7.0]);
        assert_eq!(r.rank_of(0), 1);

        let r = rank(&cfg(&[3.0, 3.0, 3.0]));
        assert_eq!(r.order(), &[0, 1, 2]);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(rank_positions(&[0.0, f64::NAN]).is_err());
        assert!(LabeledConfiguration::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn gap_examples() {
        let r = RankedConfiguration::from_ascending(vec![1.0, 2.5, 2.5, 7.0]).unwrap();
        assert_eq!(gaps(&r).unwrap().as_slice(), &[1.5, 0.0, 4.5]);
        let r = RankedConfiguration::from_ascending(vec![0.0, 1.0]).unwrap();
        assert_eq!(gaps(&r).unwrap().as_slice(), &[1.0]);
        let r = RankedConfiguration::from_ascending(vec![1.0]).unwrap();
        assert_eq!(gaps(&r), Err(Error::EmptyGaps(1)));
    }

    #[test]
    fn appending_larger_points_keeps_ranks() {
        let r = rank(&cfg(&[2.0, -1.0, 0.0]));
        let r2 = rank(&cfg(&[2.0, -1.0, 0.0, 5.0, 2.0]));
        for label in 0..3 {
            assert_eq!(r.rank_of(label), r2.rank_of(label));
        }
        assert_eq!(r2.rank_of(4), 4);
    }

    #[test]
    fn lowest_label_matches_rank() {
        assert_eq!(lowest_label(&[5.0, 5.0]), Some(0));
        assert_eq!(lowest_label(&[0.3, -0.1, 2.0]), Some(1));
        assert_eq!(lowest_label(&[]), None);
    }

    #[test]
    fn round_trip_to_labeled() {
        let x = cfg(&[0.3, -0.1, 2.0, -0.1]);
        assert_eq!(rank(&x).to_labeled(), x);
    }

    fn brute_force_order(x: &[f64]) -> Vec<usize> {
        // selection by repeated minimum with an explicit (position, label) comparator
        let mut left: Vec<usize> = (0..x.len()).collect();
        let mut out = Vec::new();
        while !left.is_empty() {
            let mut best = 0;
            for k in 1..left.len() {
                let (i, j) = (left[k], left[best]);
                if x[i] < x[j] || (x[i] == x[j] && i < j) {
                    best = k;
                }
            }
            out.push(left.remove(best));
        }
        out
    }

    fn positions_with_ties() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![(-4i32..4).prop_map(|k| k as f64 * 0.5), -10.0..10.0f64],
            1..40,
        )
    }

    proptest! {
        #[test]
        fn ranking_matches_brute_force(x in positions_with_ties()) {
            let r = rank(&cfg(&x));
            let brute = brute_force_order(&x);
            prop_assert_eq!(r.order(), brute.as_slice());
            for (label, _) in x.iter().enumerate() {
                prop_assert_eq!(r.label_at_rank(r.rank_of(label)), label);
            }
        }

        #[test]
        fn sorted_output_ignores_labels(x in positions_with_ties(), seed in any::<u64>()) {
            let mut y = x.clone();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..y.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                y.swap(i, (s >> 33) as usize % (i + 1));
            }
            let (rx, ry) = (rank(&cfg(&x)), rank(&cfg(&y)));
            prop_assert_eq!(rx.sorted_positions(), ry.sorted_positions());
        }

        #[test]
        fn gaps_telescope(x in prop::collection::vec(-10.0..10.0f64, 2..40), c in -5.0..5.0f64) {
            let r = rank(&cfg(&x));
            let z = gaps(&r).unwrap();
            prop_assert!(z.as_slice().iter().all(|&g| g >= 0.0));
            let span = r.at_rank(r.len()) - r.at_rank(1);
            let total: f64 = z.as_slice().iter().sum();
            prop_assert!((total - span).abs() <= 1e-12 * (1.0 + span.abs()));

            let shifted = gaps(&rank(&cfg(&x).translated(c))).unwrap();
            for (a, b) in z.as_slice().iter().zip(shifted.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * 16.0);
            }
        }
    }
}
