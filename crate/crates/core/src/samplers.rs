//! Exact samplers for the Poisson process `P_a`, its restriction to a
//! half-line, the tilted law `Q_a`, and the product gap laws.
//!
//! Every construction goes through the map `ξ ↦ exp(a·ξ)`, which sends `P_a`
//! to a unit-rate Poisson process on `(0, ∞)`: the `k`-th lowest point is
//! `ln(T_k)/a` with `T_k` the `k`-th arrival time. Tilting by
//! `exp(2γ·X_(1)) = T_1^{2γ/a}` only reweights `T_1`, turning its `Exp(1)`
//! law into `Gamma(2γ/a + 1, 1)` while leaving later increments `Exp(1)`.

use rand::Rng;
use rand_distr::{Distribution, Open01, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ranking::{rank, GapVector, LabeledConfiguration, RankedConfiguration};

#[inline]
fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln()
}

/// One `Exp(rate)` draw by inversion.
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid(format!("exponential rate must be > 0 (got {rate})")));
    }
    Ok(exp1(rng) / rate)
}

/// `ln G` for `G ~ Gamma(shape, 1)`.
///
/// Marsaglia–Tsang squeeze for `shape >= 1`; for `shape < 1` the draw is
/// boosted from `shape + 1` and corrected by `U^{1/shape}`, which in log
/// space is an additive `ln(U)/shape` and cannot underflow.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::invalid(format!("gamma shape must be > 0 (got {shape})")));
    }
    if shape == 1.0 {
        return Ok(exp1(rng).ln());
    }
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        let u: f64 = rng.sample(Open01);
        return Ok(boosted.ln() + u.ln() / shape);
    }
    Ok(marsaglia_tsang(shape, rng).ln())
}

/// One `Gamma(shape, 1)` draw (unit scale, mean and variance `shape`).
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if shape >= 1.0 && shape.is_finite() {
        if shape == 1.0 {
            return Ok(exp1(rng));
        }
        return Ok(marsaglia_tsang(shape, rng));
    }
    sample_log_gamma(shape, rng).map(f64::exp)
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

fn check_count(m: usize, what: &str) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid(format!("{what} needs at least one point")));
    }
    Ok(())
}

fn points_from_arrivals(first_log: f64, a: f64, m: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<f64> {
    let mut out = Vec::with_capacity(m);
    out.push(first_log / a);
    let mut t = first_log.exp();
    for _ in 1..m {
        t += exp1(rng);
        out.push(t.ln() / a);
    }
    out
}

/// The `m` lowest points of `P_a` (intensity `a·exp(a·ξ)dξ`).
#[allow(non_snake_case)]
pub fn sample_P_a<R: Rng + ?Sized>(
    params: &ModelParams,
    m: usize,
    rng: &mut R,
) -> Result<RankedConfiguration> {
    params.check()?;
    check_count(m, "P_a sample")?;
    let first = exp1(rng).ln();
    RankedConfiguration::from_ascending(points_from_arrivals(first, params.a, m, rng))
}

/// The `m` lowest points of `Q_a`.
#[allow(non_snake_case)]
pub fn sample_Q_a<R: Rng + ?Sized>(
    params: &ModelParams,
    m: usize,
    rng: &mut R,
) -> Result<RankedConfiguration> {
    params.check()?;
    check_count(m, "Q_a sample")?;
    let first = sample_log_gamma(params.gamma_shape(), rng)?;
    RankedConfiguration::from_ascending(points_from_arrivals(first, params.a, m, rng))
}

fn restricted_mean(params: &ModelParams, zeta: f64) -> Result<f64> {
    params.check()?;
    if zeta.is_nan() {
        return Err(Error::invalid("restriction level is NaN"));
    }
    let lambda = (params.a * zeta).exp();
    if !lambda.is_finite() || lambda > 1e15 {
        return Err(Error::invalid(format!(
            "restriction level {zeta} gives an unmanageable mean count {lambda:e}"
        )));
    }
    Ok(lambda)
}

fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    Poisson::new(lambda).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// All points of `P_a` restricted to `(-∞, ζ]`: `N ~ Pois(exp(a·ζ))` points
/// `ζ - Y_i` with `Y_i ~ Exp(a)` i.i.d., labeled in generation order.
///
/// The configuration is empty with probability `exp(-exp(a·ζ))`.
#[allow(non_snake_case)]
pub fn sample_P_a_restricted<R: Rng + ?Sized>(
    params: &ModelParams,
    zeta: f64,
    rng: &mut R,
) -> Result<RankedConfiguration> {
    let lambda = restricted_mean(params, zeta)?;
    let n = poisson_count(lambda, rng);
    if n == 0 {
        return Ok(RankedConfiguration::empty());
    }
    let pts: Vec<f64> = (0..n).map(|_| zeta - exp1(rng) / params.a).collect();
    Ok(rank(&LabeledConfiguration::new(pts)?))
}

/// The `m` lowest points of the restricted process without materialising
/// the other `N - m`.
///
/// Uses the descending uniform order statistics `U_(N) = V_1^{1/N}`,
/// `U_(N-1) = U_(N)·V_2^{1/(N-1)}`, ... mapped through the `Exp(a)` quantile,
/// so the cost is `O(m)` regardless of `exp(a·ζ)`.
#[allow(non_snake_case)]
pub fn sample_P_a_restricted_lowest<R: Rng + ?Sized>(
    params: &ModelParams,
    zeta: f64,
    m: usize,
    rng: &mut R,
) -> Result<RankedConfiguration> {
    let lambda = restricted_mean(params, zeta)?;
    let n = poisson_count(lambda, rng);
    let k = (m as u64).min(n);
    let mut out = Vec::with_capacity(k as usize);
    // log U_(j), descending in j
    let mut log_u = 0.0;
    for j in 0..k {
        let v: f64 = rng.sample(Open01);
        log_u += v.ln() / (n - j) as f64;
        // Y = -ln(1 - U)/a, with 1 - U = -expm1(ln U)
        let y = -(-log_u.exp_m1()).ln() / params.a;
        out.push(zeta - y);
    }
    RankedConfiguration::from_ascending(out)
}

/// `m` independent gaps with `Z_i ~ Exp(2γ + i·a)`.
pub fn sample_pi_a_gaps<R: Rng + ?Sized>(
    params: &ModelParams,
    m: usize,
    rng: &mut R,
) -> Result<GapVector> {
    params.check()?;
    let z = (1..=m).map(|i| exp1(rng) / params.gap_rate(i)).collect();
    Ok(GapVector::from_nonnegative(z))
}

/// `m` i.i.d. `Exp(2γ)` gaps; only defined for `γ > 0`.
pub fn sample_pi_gaps<R: Rng + ?Sized>(gamma: f64, m: usize, rng: &mut R) -> Result<GapVector> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("pi requires gamma > 0 (got {gamma})")));
    }
    let rate = 2.0 * gamma;
    Ok(GapVector::from_nonnegative(
        (0..m).map(|_| exp1(rng) / rate).collect(),
    ))
}

/// Order statistics of `n` i.i.d. `Exp(a)` variables, largest first, built
/// as `Y_(k) = G_k + ... + G_n` with independent `G_i ~ Exp(i·a)`.
pub fn renyi_ranked_exponentials<R: Rng + ?Sized>(
    n: usize,
    a: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_count(n, "Renyi representation")?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("a must be > 0 (got {a})")));
    }
    let g: Vec<f64> = (1..=n).map(|i| exp1(rng) / (i as f64 * a)).collect();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n).rev() {
        acc += g[k];
        out[k] = acc;
    }
    Ok(out)
}

/// Particles at `X_(1) = 0` followed by `n - 1` gaps.
pub fn configuration_from_gaps(gaps: &GapVector) -> LabeledConfiguration {
    let mut x = Vec::with_capacity(gaps.len() + 1);
    let mut acc = 0.0;
    x.push(acc);
    for &z in gaps.as_slice() {
        acc += z;
        x.push(acc);
    }
    LabeledConfiguration::from_finite(x)
}
