//! Kolmogorov–Smirnov goodness-of-fit tests with asymptotic p-values.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::stats::descriptive::mean_se;
use crate::stats::report::{StatReport, Verdict};

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form converges fast for small λ.
        let pi = std::f64::consts::PI;
        let y = -pi * pi / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in (1..=9).step_by(2) {
            sum += (y * (k * k) as f64).exp();
        }
        return (1.0 - (2.0 * pi).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted_copy(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("sample contains NaN"));
    }
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(v)
}

/// `sup |F_N - F|`, evaluated on both sides of every jump.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted_copy(sample)?;
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// One-sample KS test; passes iff `p >= alpha`.
///
/// `estimate` and `std_error` carry the sample mean for reference.
pub fn ks_test(
    name: impl Into<String>,
    sample: &[f64],
    cdf: impl Fn(f64) -> f64,
    alpha: f64,
) -> Result<StatReport> {
    let d = ks_statistic(sample, cdf)?;
    let n = sample.len();
    let p = kolmogorov_sf((n as f64).sqrt() * d);
    let (mean, se) = mean_se(sample)?;
    Ok(StatReport {
        name: name.into(),
        estimate: mean,
        std_error: se,
        statistic: d,
        p_value: Some(p),
        target: None,
        verdict: Verdict::from_bool(p >= alpha),
        n_samples: n,
        rule: format!("KS p >= {alpha}"),
    })
}

/// Two-sample KS test with effective size `n·m/(n+m)`; passes iff `p >= alpha`.
///
/// `estimate` is the mean of the first sample, `target` the mean of the second.
pub fn ks_two_sample(
    name: impl Into<String>,
    first: &[f64],
    second: &[f64],
    alpha: f64,
) -> Result<StatReport> {
    let a = sorted_copy(first)?;
    let b = sorted_copy(second)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let p = kolmogorov_sf(ne.sqrt() * d);
    let (mean, se) = mean_se(first)?;
    let (mean2, _) = mean_se(second)?;
    Ok(StatReport {
        name: name.into(),
        estimate: mean,
        std_error: se,
        statistic: d,
        p_value: Some(p),
        target: Some(mean2),
        verdict: Verdict::from_bool(p >= alpha),
        n_samples: a.len() + b.len(),
        rule: format!("two-sample KS p >= {alpha}"),
    })
}
