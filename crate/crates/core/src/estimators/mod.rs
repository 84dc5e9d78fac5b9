//! Monte Carlo estimators: strong `L^p` error, uniform moments, increment
//! moments over sub-grid times, divergence fractions, log-log rate fits, and
//! random falsification of declared assumption constants.
//!
//! Every estimator is a deterministic function of its inputs and the master
//! seed. Paths are reduced with [`crate::parallel::map_reduce_paths`], so the
//! result does not depend on the worker count.

mod increments;
mod moments;
mod rate;
mod spot_check;
mod strong;

pub use increments::{increment_moment, IncrementMoment};
pub use moments::{moment_sup, MomentReport};
pub use rate::{fit_log_log, fit_rate, RateFit};
pub use spot_check::{spot_check_assumptions, CheckOutcome, SpotCheckReport, Violation};
pub use strong::{strong_error, strong_error_with_reference, ErrorTable, Reference};

use crate::error::{domain, Result};
use crate::noise::{initial_value_rng, IncrementArray, NoisePlan};
use crate::parallel::ExecPolicy;
use crate::sde::SdeModel;

/// Estimates are flagged invalid when more than this fraction of paths has
/// non-finite states.
pub const MAX_DIVERGENCE_FRACTION: f64 = 0.5;

/// Sample count, seed, horizon and scheduling shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub paths: u64,
    pub master_seed: u64,
    pub horizon: f64,
    pub policy: ExecPolicy,
}

impl MonteCarlo {
    pub fn new(paths: u64, master_seed: u64, horizon: f64) -> Self {
        Self {
            paths,
            master_seed,
            horizon,
            policy: ExecPolicy::default(),
        }
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(domain("at least one Monte Carlo path is required"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }

    fn plan(&self, model: &SdeModel, fine_n: usize, path_id: u64) -> NoisePlan {
        NoisePlan {
            master_seed: self.master_seed,
            path_id,
            dim_noise: model.dim_noise(),
            fine_n,
            horizon: self.horizon,
        }
    }
}

fn validate_order(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("moment order p must be positive, got {p}")))
    }
}

/// `|v|^p = (Σ v_i²)^{p/2}`.
#[inline]
pub(crate) fn norm_pow(v: impl Iterator<Item = f64>, p: f64) -> f64 {
    let sq: f64 = v.map(|x| x * x).sum();
    if p == 2.0 {
        sq
    } else {
        sq.powf(0.5 * p)
    }
}

fn realize_initial(model: &SdeModel, seed: u64, path_id: u64, out: &mut [f64]) {
    let mut rng = initial_value_rng(seed, path_id);
    model.realize_initial(&mut rng, out);
}

fn empty_noise(model: &SdeModel, mc: &MonteCarlo, n: usize) -> Result<IncrementArray> {
    let plan = mc.plan(model, n, 0);
    Ok(IncrementArray::empty(plan.grid()?, model.dim_noise()))
}

/// Running sum, sum of squares and count of per-path samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    sum: f64,
    sum_sq: f64,
    count: u64,
}

impl Moments {
    #[inline]
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
        self.count += 1;
    }

    fn merge(&mut self, other: &Moments) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.count += other.count;
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean; NaN with fewer than two samples.
    fn std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Delta-method standard error of `mean^{1/p}` given the standard error of
/// the mean.
fn root_std_error(mean: f64, se_mean: f64, p: f64) -> f64 {
    if mean > 0.0 {
        se_mean * mean.powf(1.0 / p - 1.0) / p
    } else if se_mean.is_nan() {
        f64::NAN
    } else {
        0.0
    }
}
