//! Change of measure between the drifted system and independent shifted
//! Brownian motions.
//!
//! A driftless path `H_i(t) = x_i + s·t + W_i(t)` is simulated together with
//! the discrete stochastic integral `M = Σ_steps Σ_i b_i(H)·ΔW_i` of the
//! drift `b` evaluated at the left end of each step, and its bracket
//! `⟨M⟩ = Σ_steps Σ_i b_i(H)²·dt`. The weight `F = exp(M - ⟨M⟩/2)` is then
//! exactly the likelihood ratio of the Euler chain with drift `b` against the
//! driftless one, so `E[φ(H)·F] = E[φ(X)]` holds for the discretised systems
//! as well as in continuous time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    DriftField, DriftScheme, GaussianNoise, NoiseSource, RankKernel, SimulationConfig,
};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ranking::{rank, LabeledConfiguration};
use crate::stats::{StatReport, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPath {
    pub terminal: LabeledConfiguration,
    pub log_weight: f64,
    pub martingale_part: f64,
    pub quadratic_variation: f64,
}

impl WeightedPath {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// One driftless path with its stochastic-exponential weight. The scheme in
/// `cfg` picks the integrand: hard indicator drift (`F`) or softmin (`F^β`).
pub fn weighted_driftless_path<N: NoiseSource + ?Sized>(
    initial: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
    noise: &mut N,
) -> Result<WeightedPath> {
    cfg.validate()?;
    params.check()?;
    if initial.len() != cfg.n {
        return Err(Error::invalid(format!(
            "initial configuration has {} particles, config expects {}",
            initial.len(),
            cfg.n
        )));
    }
    let mut h = initial.positions().to_vec();
    let mut field = DriftField::new(params, cfg.scheme, cfg.kernel, &h)?;
    let n = h.len();
    let mut b = vec![0.0; n];
    let mut z = vec![0.0; n];
    let sdt = cfg.dt.sqrt();
    let shift = if cfg.shift { 0.5 * params.a } else { 0.0 };
    let (mut mart, mut qv) = (0.0, 0.0);
    for _ in 0..cfg.steps {
        field.eval(&h, &mut b);
        noise.fill(&mut z);
        for i in 0..n {
            let dw = sdt * z[i];
            mart += b[i] * dw;
            qv += b[i] * b[i] * cfg.dt;
            h[i] += shift * cfg.dt + dw;
        }
    }
    Ok(WeightedPath {
        terminal: LabeledConfiguration::new(h)?,
        log_weight: mart - 0.5 * qv,
        martingale_part: mart,
        quadratic_variation: qv,
    })
}

/// `n_paths` weighted paths on replica streams of `cfg.seed`, in replica order.
pub fn weighted_paths(
    initial: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
    n_paths: usize,
) -> Result<Vec<WeightedPath>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut noise = GaussianNoise(cfg.seed.replica(k).rng());
            weighted_driftless_path(initial, cfg, params, &mut noise)
        })
        .collect()
}

/// Self-normalisation-free weighted mean `mean(v·exp(lw))` with its standard
/// error, computed after shifting the log weights by their maximum.
///
/// Returns `(mean, std_error, effective_sample_size)`.
pub fn weighted_mean(values: &[f64], log_weights: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.len() != log_weights.len() {
        return Err(Error::invalid("values and weights differ in length"));
    }
    let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::invalid("non-finite log weight"));
    }
    let n = values.len() as f64;
    let (mut sw, mut sw2, mut s, mut s2) = (0.0, 0.0, 0.0, 0.0);
    for (v, lw) in values.iter().zip(log_weights) {
        let w = (lw - shift).exp();
        sw += w;
        sw2 += w * w;
        let y = v * w;
        s += y;
        s2 += y * y;
    }
    let mean = s / n;
    let var = if values.len() > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let scale = shift.exp();
    Ok((mean * scale, (var / n).sqrt() * scale, sw * sw / sw2))
}

/// Importance estimate of `E[φ(X_(1..m)(t))]` from weighted driftless paths.
///
/// `test_fn` receives the `m` lowest terminal positions in ascending order.
/// The report's `statistic` is the effective sample size `(Σw)²/Σw²`; the
/// verdict is inconclusive since no target is attached.
pub fn importance_estimate(
    name: impl Into<String>,
    test_fn: impl Fn(&[f64]) -> f64,
    m: usize,
    paths: &[WeightedPath],
) -> Result<StatReport> {
    if paths.is_empty() {
        return Err(Error::invalid("importance estimate needs at least one path"));
    }
    let values: Vec<f64> = paths
        .iter()
        .map(|p| test_fn(rank(&p.terminal).lowest(m)))
        .collect();
    let lw: Vec<f64> = paths.iter().map(|p| p.log_weight).collect();
    let (mean, se, ess) = weighted_mean(&values, &lw)?;
    Ok(StatReport {
        name: name.into(),
        estimate: mean,
        std_error: se,
        statistic: ess,
        p_value: None,
        target: None,
        verdict: Verdict::Inconclusive,
        n_samples: paths.len(),
        rule: "no target; statistic = effective sample size".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub beta: f64,
    /// Empirical `E(1 - F^β/F)²`.
    pub mean_square: f64,
    pub std_error: f64,
}

/// Mean square of `1 - F^β(t)/F(t)` along `betas`, with every β evaluated on
/// the same `n_paths` driftless paths (replica streams of `cfg.seed`).
pub fn weight_ratio_diagnostic(
    initial: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
    betas: &[f64],
    n_paths: usize,
) -> Result<Vec<RatioPoint>> {
    cfg.validate()?;
    params.check()?;
    if betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("beta schedule must be strictly ascending"));
    }
    if n_paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    if initial.len() != cfg.n {
        return Err(Error::invalid("initial configuration does not match n"));
    }
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut noise = GaussianNoise(cfg.seed.replica(k).rng());
            log_ratios(initial, cfg, params, betas, &mut noise)
        })
        .collect::<Result<_>>()?;
    let n = n_paths as f64;
    Ok(betas
        .iter()
        .enumerate()
        .map(|(j, &beta)| {
            let sq: Vec<f64> = per_path
                .iter()
                .map(|r| (1.0 - r[j].exp()).powi(2))
                .collect();
            let mean = sq.iter().sum::<f64>() / n;
            let var = if n_paths > 1 {
                sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            RatioPoint {
                beta,
                mean_square: mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect())
}

/// `ln(F^β/F)` for each β along one common driftless path.
fn log_ratios<N: NoiseSource + ?Sized>(
    initial: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
    betas: &[f64],
    noise: &mut N,
) -> Result<Vec<f64>> {
    let mut h = initial.positions().to_vec();
    let n = h.len();
    let mut hard = DriftField::new(params, DriftScheme::Hard, RankKernel::Scan, &h)?;
    let mut soft: Vec<DriftField> = betas
        .iter()
        .map(|&beta| DriftField::new(params, DriftScheme::Mollified { beta }, RankKernel::Scan, &h))
        .collect::<Result<_>>()?;
    let mut bh = vec![0.0; n];
    let mut bs = vec![0.0; n];
    let mut z = vec![0.0; n];
    // running ln F^β - ln F
    let mut acc = vec![0.0; betas.len()];
    let sdt = cfg.dt.sqrt();
    let shift = if cfg.shift { 0.5 * params.a } else { 0.0 };
    for _ in 0..cfg.steps {
        hard.eval(&h, &mut bh);
        noise.fill(&mut z);
        for (field, a) in soft.iter_mut().zip(acc.iter_mut()) {
            field.eval(&h, &mut bs);
            for i in 0..n {
                let dw = sdt * z[i];
                *a += (bs[i] - bh[i]) * dw - 0.5 * (bs[i] * bs[i] - bh[i] * bh[i]) * cfg.dt;
            }
        }
        for i in 0..n {
            h[i] += shift * cfg.dt + sdt * z[i];
        }
    }
    Ok(acc)
}
