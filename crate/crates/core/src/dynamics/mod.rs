//! Euler–Maruyama integration of the finite Atlas system
//!
//! ```text
//! X_i(t+dt) = X_i(t) + (b_i(X(t)) + s)·dt + √dt·ξ_i,   ξ_i ~ N(0, 1) i.i.d.
//! ```
//!
//! where `b` is the hard, mollified or ranked drift and `s = a/2` when the
//! compensating shift is on (0 otherwise). The drift is evaluated at the
//! left end of each step.

mod drift;
mod truncation;

pub use drift::{atlas_drift, mollified_drift, multi_drift, DriftField, DriftScheme, RankKernel};
pub use truncation::{truncation_diagnostic, TruncationMonitor, TruncationReport, TRUNCATION_SAFETY};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ranking::{rank, LabeledConfiguration};
use crate::rng::RngStream;

/// Source of standard normal increments, one per particle per step.
pub trait NoiseSource {
    fn fill(&mut self, out: &mut [f64]);
}

/// i.i.d. standard normals from an RNG.
#[derive(Debug, Clone)]
pub struct GaussianNoise<R>(pub R);

impl<R: Rng> NoiseSource for GaussianNoise<R> {
    #[inline]
    fn fill(&mut self, out: &mut [f64]) {
        for z in out.iter_mut() {
            *z = self.0.sample(StandardNormal);
        }
    }
}

/// All-zero increments, for deterministic tests of the drift plumbing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill(&mut self, out: &mut [f64]) {
        out.fill(0.0);
    }
}

impl<N: NoiseSource + ?Sized> NoiseSource for &mut N {
    fn fill(&mut self, out: &mut [f64]) {
        (**self).fill(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    #[default]
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt: f64,
    pub steps: usize,
    pub n: usize,
    pub scheme: DriftScheme,
    /// Add `a/2·dt` to every particle each step.
    pub shift: bool,
    pub record_every: usize,
    pub seed: RngStream,
    #[serde(default)]
    pub kernel: RankKernel,
    #[serde(default)]
    pub noise: NoiseMode,
}

impl SimulationConfig {
    /// Hard scheme, shift off, record every step, seed `(0, 0)`.
    pub fn new(n: usize, dt: f64, steps: usize) -> Self {
        SimulationConfig {
            dt,
            steps,
            n,
            scheme: DriftScheme::Hard,
            shift: false,
            record_every: 1,
            seed: RngStream::new(0, 0),
            kernel: RankKernel::Scan,
            noise: NoiseMode::Gaussian,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be > 0 (got {})", self.dt)));
        }
        if self.n == 0 {
            return Err(Error::invalid("need at least one particle"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        if let DriftScheme::Mollified { beta } = self.scheme {
            drift::check_beta(beta)?;
        }
        Ok(())
    }
}

/// Stepper holding the current state and scratch buffers.
#[derive(Debug, Clone)]
pub struct Integrator {
    x: Vec<f64>,
    drift: Vec<f64>,
    noise: Vec<f64>,
    field: DriftField,
    dt: f64,
    sqrt_dt: f64,
    shift: f64,
    steps_done: usize,
}

impl Integrator {
    pub fn new(
        initial: &LabeledConfiguration,
        cfg: &SimulationConfig,
        params: &ModelParams,
    ) -> Result<Self> {
        cfg.validate()?;
        params.check()?;
        if initial.len() != cfg.n {
            return Err(Error::invalid(format!(
                "initial configuration has {} particles, config expects {}",
                initial.len(),
                cfg.n
            )));
        }
        let x = initial.positions().to_vec();
        let field = DriftField::new(params, cfg.scheme, cfg.kernel, &x)?;
        Ok(Integrator {
            drift: vec![0.0; x.len()],
            noise: vec![0.0; x.len()],
            x,
            field,
            dt: cfg.dt,
            sqrt_dt: cfg.dt.sqrt(),
            shift: if cfg.shift { 0.5 * params.a } else { 0.0 },
            steps_done: 0,
        })
    }

    /// Advance one step of size `dt`.
    #[inline]
    pub fn step<N: NoiseSource + ?Sized>(&mut self, noise: &mut N) {
        self.field.eval(&self.x, &mut self.drift);
        noise.fill(&mut self.noise);
        let (dt, sdt, s) = (self.dt, self.sqrt_dt, self.shift);
        for ((x, b), z) in self.x.iter_mut().zip(&self.drift).zip(&self.noise) {
            *x += (b + s) * dt + sdt * z;
        }
        self.steps_done += 1;
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    /// Drift used by the most recent step.
    pub fn last_drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn time(&self) -> f64 {
        self.steps_done as f64 * self.dt
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn state(&self) -> Result<LabeledConfiguration> {
        LabeledConfiguration::new(self.x.clone())
    }
}

/// One Euler step from `state`, drawing noise from `rng` (or zeros when
/// `cfg.noise` is [`NoiseMode::Zero`]).
pub fn step<R: Rng>(
    state: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
    rng: &mut R,
) -> Result<LabeledConfiguration> {
    let mut it = Integrator::new(state, cfg, params)?;
    match cfg.noise {
        NoiseMode::Gaussian => it.step(&mut GaussianNoise(rng)),
        NoiseMode::Zero => it.step(&mut ZeroNoise),
    }
    it.state()
}

/// Ranked snapshot at one recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sorted: Vec<f64>,
    /// Label of the particle holding each rank.
    pub order: Vec<usize>,
}

impl Snapshot {
    fn of(x: &[f64]) -> Self {
        let r = rank(&LabeledConfiguration::from_finite(x.to_vec()));
        Snapshot {
            sorted: r.sorted_positions().to_vec(),
            order: r.order().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub params: ModelParams,
    pub config: SimulationConfig,
}

impl TrajectoryRecord {
    pub fn terminal(&self) -> &Snapshot {
        // simulate always records t = 0
        self.snapshots.last().expect("record holds the initial snapshot")
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// Run `cfg.steps` steps with noise drawn from `cfg.seed`.
pub fn simulate(
    initial: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
) -> Result<TrajectoryRecord> {
    match cfg.noise {
        NoiseMode::Gaussian => {
            simulate_with_noise(initial, cfg, params, &mut GaussianNoise(cfg.seed.rng()))
        }
        NoiseMode::Zero => simulate_with_noise(initial, cfg, params, &mut ZeroNoise),
    }
}

/// Run `cfg.steps` steps with caller-supplied increments.
pub fn simulate_with_noise<N: NoiseSource + ?Sized>(
    initial: &LabeledConfiguration,
    cfg: &SimulationConfig,
    params: &ModelParams,
    noise: &mut N,
) -> Result<TrajectoryRecord> {
    let mut it = Integrator::new(initial, cfg, params)?;
    let mut times = vec![0.0];
    let mut snapshots = vec![Snapshot::of(it.positions())];
    for k in 1..=cfg.steps {
        it.step(noise);
        if k % cfg.record_every == 0 {
            times.push(k as f64 * cfg.dt);
            snapshots.push(Snapshot::of(it.positions()));
        }
    }
    Ok(TrajectoryRecord {
        times,
        snapshots,
        params: params.clone(),
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_two_sample, mean_se};

    fn cfg(v: &[f64]) -> LabeledConfiguration {
        LabeledConfiguration::new(v.to_vec()).unwrap()
    }

    struct Replay(Vec<f64>, usize);

    impl NoiseSource for Replay {
        fn fill(&mut self, out: &mut [f64]) {
            for z in out.iter_mut() {
                *z = self.0[self.1];
                self.1 += 1;
            }
        }
    }

    #[test]
    fn zero_noise_hard_step() {
        let mut c = SimulationConfig::new(2, 0.1, 1);
        c.noise = NoiseMode::Zero;
        let p = ModelParams::atlas(2.0, 1.0);
        let mut rng = c.seed.rng();
        let out = step(&cfg(&[0.0, 1.0]), &c, &p, &mut rng).unwrap();
        assert_eq!(out.positions(), &[0.2, 1.0]);
    }

    #[test]
    fn undrifted_increments_are_gaussian() {
        let c = SimulationConfig::new(3, 0.01, 1);
        let p = ModelParams::atlas(0.0, 1.0);
        let mut rng = RngStream::new(1, 0).rng();
        let mut ref_rng = RngStream::new(1, 0).rng();
        let x0 = cfg(&[0.0, 0.5, -1.0]);
        for _ in 0..10 {
            let y = step(&x0, &c, &p, &mut rng).unwrap();
            for (i, v) in y.positions().iter().enumerate() {
                let z: f64 = ref_rng.sample(StandardNormal);
                assert_eq!(*v, x0.positions()[i] + 0.1 * z);
            }
        }
    }

    #[test]
    fn shift_adds_half_a_dt() {
        let mut c = SimulationConfig::new(4, 0.05, 1);
        let p = ModelParams::atlas(0.7, 1.3);
        let x0 = cfg(&[0.3, -0.2, 1.0, 0.0]);
        let off = step(&x0, &c, &p, &mut RngStream::new(2, 0).rng()).unwrap();
        c.shift = true;
        let on = step(&x0, &c, &p, &mut RngStream::new(2, 0).rng()).unwrap();
        for (a, b) in on.positions().iter().zip(off.positions()) {
            assert!((a - b - 0.5 * 1.3 * 0.05).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_run_records_initial_only() {
        let c = SimulationConfig::new(3, 0.1, 0);
        let rec = simulate(&cfg(&[2.0, 0.0, 1.0]), &c, &ModelParams::atlas(1.0, 1.0)).unwrap();
        assert_eq!(rec.times, vec![0.0]);
        assert_eq!(rec.snapshots[0].sorted, vec![0.0, 1.0, 2.0]);
        assert_eq!(rec.snapshots[0].order, vec![1, 2, 0]);
    }

    #[test]
    fn record_grid() {
        let mut c = SimulationConfig::new(2, 0.1, 10);
        c.record_every = 3;
        let rec = simulate(&cfg(&[0.0, 1.0]), &c, &ModelParams::atlas(1.0, 1.0)).unwrap();
        assert_eq!(rec.times.len(), 1 + 10 / 3);
        assert!((rec.times[3] - 0.9).abs() < 1e-12);
        for s in &rec.snapshots {
            assert!(s.sorted.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let p = ModelParams::atlas(1.0, 1.0);
        let x = cfg(&[0.0, 1.0]);
        let mut c = SimulationConfig::new(2, 0.0, 1);
        assert!(simulate(&x, &c, &p).is_err());
        c.dt = 0.1;
        c.record_every = 0;
        assert!(simulate(&x, &c, &p).is_err());
        c.record_every = 1;
        c.scheme = DriftScheme::Mollified { beta: -1.0 };
        assert!(simulate(&x, &c, &p).is_err());
        c.scheme = DriftScheme::Hard;
        c.n = 3;
        assert!(simulate(&x, &c, &p).is_err());
    }

    #[test]
    fn same_seed_same_record() {
        let mut c = SimulationConfig::new(5, 0.01, 50);
        c.seed = RngStream::new(99, 4);
        c.shift = true;
        let p = ModelParams::atlas(0.5, 1.0);
        let x = cfg(&[0.0, 0.1, 0.3, 0.2, 1.0]);
        assert_eq!(simulate(&x, &c, &p).unwrap(), simulate(&x, &c, &p).unwrap());
    }

    #[test]
    fn undrifted_terminal_variance() {
        let mut c = SimulationConfig::new(1, 0.05, 20);
        let p = ModelParams::atlas(0.0, 1.0);
        let n = 10_000;
        let mut sq = Vec::with_capacity(n);
        for k in 0..n {
            c.seed = RngStream::new(7, k as u64);
            let rec = simulate(&cfg(&[0.0]), &c, &p).unwrap();
            sq.push(rec.terminal().sorted[0].powi(2));
        }
        let (m, se) = mean_se(&sq).unwrap();
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn kernels_give_identical_trajectories() {
        let p = ModelParams::atlas(1.5, 1.0);
        let x = cfg(&[0.5, 0.0, 0.2, 0.1, 0.8, 0.05]);
        for scheme in [DriftScheme::Hard, DriftScheme::Mollified { beta: 30.0 }] {
            let mut c = SimulationConfig::new(6, 0.01, 200);
            c.scheme = scheme;
            c.seed = RngStream::new(5, 5);
            let a = simulate(&x, &c, &p).unwrap();
            c.kernel = RankKernel::Incremental;
            let b = simulate(&x, &c, &p).unwrap();
            assert_eq!(a.snapshots, b.snapshots);
        }
    }

    #[test]
    fn relabeling_with_paired_noise_is_exact() {
        let p = ModelParams::atlas(1.0, 1.0);
        let x = [0.4, -0.3, 0.9, 0.0];
        let perm = [2, 0, 3, 1]; // new label of old particle i is perm[i]
        let steps = 300;
        let n = x.len();
        let mut rng = RngStream::new(11, 0).rng();
        let z: Vec<f64> = (0..steps * n).map(|_| rng.sample(StandardNormal)).collect();
        let mut zp = vec![0.0; z.len()];
        let mut y = [0.0; 4];
        for i in 0..n {
            y[perm[i]] = x[i];
            for s in 0..steps {
                zp[s * n + perm[i]] = z[s * n + i];
            }
        }
        let mut c = SimulationConfig::new(n, 0.01, steps);
        c.shift = true;
        let a = simulate_with_noise(&cfg(&x), &c, &p, &mut Replay(z, 0)).unwrap();
        let b = simulate_with_noise(&cfg(&y), &c, &p, &mut Replay(zp, 0)).unwrap();
        for (s, t) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(s.sorted, t.sorted);
            let mapped: Vec<usize> = s.order.iter().map(|&l| perm[l]).collect();
            assert_eq!(mapped, t.order);
        }
    }

    #[test]
    fn mollified_converges_to_hard_on_fixed_noise() {
        let p = ModelParams::atlas(1.2, 1.0);
        let x = cfg(&[0.3, 0.0, 0.6]);
        let mut c = SimulationConfig::new(3, 0.01, 100);
        c.seed = RngStream::new(12, 1);
        let hard = simulate(&x, &c, &p).unwrap().terminal().sorted.clone();
        let mut prev = f64::INFINITY;
        for beta in [10.0, 100.0, 1e3, 1e4, 1e5] {
            c.scheme = DriftScheme::Mollified { beta };
            let soft = simulate(&x, &c, &p).unwrap().terminal().sorted.clone();
            let err: f64 = soft.iter().zip(&hard).map(|(a, b)| (a - b).abs()).sum();
            assert!(err <= prev + 1e-12, "beta {beta}: {err} > {prev}");
            prev = err;
        }
        assert!(prev < 1e-9, "{prev}");
    }

    #[test]
    fn undrifted_lowest_matches_independent_motions() {
        // Atlas system at γ = 0 versus sorting independent Brownian endpoints.
        let p = ModelParams::atlas(0.0, 1.0);
        let x = cfg(&[0.0, 0.4, 1.0]);
        let mut c = SimulationConfig::new(3, 0.02, 25);
        let reps = 5_000;
        let mut sim = Vec::with_capacity(reps);
        let mut direct = Vec::with_capacity(reps);
        let mut rng = RngStream::new(13, 77).rng();
        for k in 0..reps {
            c.seed = RngStream::new(13, k as u64);
            sim.push(simulate(&x, &c, &p).unwrap().terminal().sorted[0]);
            let t = c.horizon().sqrt();
            let low = x
                .positions()
                .iter()
                .map(|v| v + t * rng.sample::<f64, _>(StandardNormal))
                .fold(f64::INFINITY, f64::min);
            direct.push(low);
        }
        assert!(ks_two_sample("gamma0", &sim, &direct, 0.01).unwrap().passed());
    }
}
