//! Simulation and verification toolkit for the Atlas model of competing
//! Brownian particles and its Poisson-type stationary laws.
//!
//! The lowest-ranked particle receives drift `γ`, every particle is driven by
//! an independent Brownian motion, and ties are broken by the smaller label.
//! The crate provides exact samplers for the laws `P_a`, `Q_a`, `π_a` and
//! `π`, an Euler integrator for the finite system (hard or softmin drift),
//! Girsanov weights against driftless paths, and Monte Carlo checks that turn
//! the stationarity statements into pass/fail reports.
//!
//! ```
//! use atlaslab_core::{sample_Q_a, ModelParams, RngStream};
//!
//! let params = ModelParams::atlas(0.5, 1.0);
//! let mut rng = RngStream::new(7, 0).rng();
//! let q = sample_Q_a(&params, 5, &mut rng).unwrap();
//! assert_eq!(q.sorted_positions().len(), 5);
//! ```

pub mod dynamics;
pub mod error;
pub mod girsanov;
pub mod model;
pub mod ranking;
pub mod rng;
pub mod samplers;
pub mod stats;
pub mod suite;

pub use dynamics::{
    atlas_drift, mollified_drift, multi_drift, simulate, simulate_with_noise, truncation_diagnostic,
    DriftField, DriftScheme, GaussianNoise, Integrator, NoiseMode, NoiseSource, RankKernel,
    SimulationConfig, Snapshot, TrajectoryRecord, TruncationMonitor, TruncationReport, ZeroNoise,
};
pub use error::{Error, Result};
pub use girsanov::{
    importance_estimate, weight_ratio_diagnostic, weighted_driftless_path, weighted_mean,
    weighted_paths, RatioPoint, WeightedPath,
};
pub use model::{ModelParams, Violation};
pub use ranking::{gaps, lowest_label, rank, rank_positions, GapVector, LabeledConfiguration, RankedConfiguration};
pub use rng::{RngStream, SimRng};
#[allow(non_snake_case)]
pub use samplers::{
    configuration_from_gaps, renyi_ranked_exponentials, sample_P_a, sample_P_a_restricted,
    sample_P_a_restricted_lowest, sample_Q_a, sample_exponential, sample_gamma, sample_log_gamma,
    sample_pi_a_gaps, sample_pi_gaps,
};
pub use stats::{StatReport, Verdict};
pub use suite::{run_suite, Suite, SuiteConfig, SuiteOutcome};
