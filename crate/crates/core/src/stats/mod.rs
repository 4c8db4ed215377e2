//! Special functions, goodness-of-fit tests and the verification checks.

mod checks;
mod descriptive;
mod ks;
mod report;
mod special;

pub use checks::*;
pub use descriptive::{correlation, linear_fit, mean_se};
pub use ks::{kolmogorov_sf, ks_statistic, ks_test, ks_two_sample};
pub use report::{overall, StatReport, Verdict};
pub use special::{digamma, gamma_fn, lngamma, reg_incomplete_gamma};
