//! Random falsification of declared assumption constants.
//!
//! The checks sample `(t, x, y)` with `|x|, |y| ≤ radius` and compare both
//! sides of each inequality. A violation disproves the declared constant; the
//! absence of violations proves nothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::sde::SdeModel;
use crate::taming::euclidean_norm;

/// Relative slack for rounding in both sides of an inequality.
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// The sample with the largest `lhs − rhs`.
    pub worst: Option<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotCheckReport {
    pub model: String,
    pub radius: f64,
    pub checks: Vec<CheckOutcome>,
    /// Checks that could not run, with the reason.
    pub skipped: Vec<String>,
}

impl SpotCheckReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_A1_DRIFT: &str = "A-1 coercivity";
pub const CHECK_A1_DIFFUSION: &str = "A-1 diffusion growth";
pub const CHECK_A5_ONE_SIDED: &str = "A-5 one-sided Lipschitz";
pub const CHECK_A5_DIFFUSION: &str = "A-5 diffusion Lipschitz";
pub const CHECK_A5_POLYNOMIAL: &str = "A-5 polynomial Lipschitz";
pub const CHECK_POLY_GROWTH: &str = "polynomial growth";

/// Point in the closed ball of the given radius. Even draws are uniform in
/// the ball, odd draws have a log-uniform norm so small scales are covered.
fn sample_point(rng: &mut ChaCha8Rng, d: usize, radius: f64, index: usize) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = euclidean_norm(&dir).max(f64::MIN_POSITIVE);
    let u: f64 = rng.random();
    let r = if index.is_multiple_of(2) {
        radius * u.powf(1.0 / d as f64)
    } else {
        radius * 10f64.powf(-6.0 * u)
    };
    for v in dir.iter_mut() {
        *v *= r / norm;
    }
    dir
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

struct Tally {
    outcome: CheckOutcome,
    worst_gap: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            outcome: CheckOutcome {
                name,
                samples: 0,
                violations: 0,
                worst: None,
            },
            worst_gap: f64::NEG_INFINITY,
        }
    }

    /// Records `lhs ≤ rhs` with slack proportional to `scale`. NaN counts as a violation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn record(&mut self, lhs: f64, rhs: f64, scale: f64, t: f64, x: &[f64], y: Option<&[f64]>) {
        self.outcome.samples += 1;
        let gap = lhs - rhs;
        let violated = !(gap <= REL_TOL * scale.abs());
        if violated {
            self.outcome.violations += 1;
        }
        if violated && (gap > self.worst_gap || gap.is_nan()) {
            self.worst_gap = gap;
            self.outcome.worst = Some(Violation {
                t,
                x: x.to_vec(),
                y: y.map(<[f64]>::to_vec),
                lhs,
                rhs,
            });
        }
    }
}

/// Samples `num_samples` random `(t, x, y)` with `t ∈ [0, horizon]` and
/// reports violations of every inequality whose constants the model declares.
pub fn spot_check_assumptions(
    model: &SdeModel,
    num_samples: usize,
    radius: f64,
    seed: u64,
    horizon: f64,
) -> SpotCheckReport {
    let meta = *model.assumptions();
    let (d, m) = (model.dim_state(), model.dim_noise());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut skipped = Vec::new();

    let k = meta.coercivity_k;
    if k.is_none() {
        skipped.push(format!("{CHECK_A1_DRIFT}, {CHECK_A1_DIFFUSION}: no K declared"));
    }
    let l = meta.one_sided_l;
    if l.is_none() {
        skipped.push(format!("{CHECK_A5_ONE_SIDED}, {CHECK_A5_DIFFUSION}: no L declared"));
    }
    let poly = l.zip(meta.poly_degree_l);
    if poly.is_none() {
        skipped.push(format!("{CHECK_A5_POLYNOMIAL}, {CHECK_POLY_GROWTH}: L or l not declared"));
    }

    let mut a1_drift = Tally::new(CHECK_A1_DRIFT);
    let mut a1_diff = Tally::new(CHECK_A1_DIFFUSION);
    let mut a5_one = Tally::new(CHECK_A5_ONE_SIDED);
    let mut a5_diff = Tally::new(CHECK_A5_DIFFUSION);
    let mut a5_poly = Tally::new(CHECK_A5_POLYNOMIAL);
    let mut growth = Tally::new(CHECK_POLY_GROWTH);

    let (mut bx, mut by, mut b0) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let (mut sx, mut sy) = (vec![0.0; d * m], vec![0.0; d * m]);
    let zero = vec![0.0; d];

    if k.is_some() || l.is_some() {
        for i in 0..num_samples {
            let t = horizon * rng.random::<f64>();
            let x = sample_point(&mut rng, d, radius, i);
            let y = sample_point(&mut rng, d, radius, i + 1);
            model.drift_into(t, &x, &mut bx);
            model.diffusion_into(t, &x, &mut sx);
            let x2 = sq_norm(&x);

            if let Some(k) = k {
                let lhs = 2.0 * dot(&x, &bx);
                let rhs = k * (1.0 + x2);
                a1_drift.record(lhs, rhs, 2.0 * x2.sqrt() * euclidean_norm(&bx) + rhs, t, &x, None);
                let s2 = sq_norm(&sx);
                a1_diff.record(s2, rhs, s2 + rhs, t, &x, None);
            }
            if let Some(l) = l {
                model.drift_into(t, &y, &mut by);
                model.diffusion_into(t, &y, &mut sy);
                let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let dist2 = sq_norm(&dxy);
                let db: Vec<f64> = bx.iter().zip(&by).map(|(a, b)| a - b).collect();
                let rhs = l * dist2;
                let mag = dist2.sqrt() * (euclidean_norm(&bx) + euclidean_norm(&by));
                a5_one.record(dot(&dxy, &db), rhs, mag + rhs, t, &x, Some(&y));
                let ds: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();
                let ds2 = sq_norm(&ds);
                let smag = sq_norm(&sx) + sq_norm(&sy);
                a5_diff.record(ds2, rhs, smag + rhs, t, &x, Some(&y));

                if let Some((l, deg)) = poly {
                    let (nx, ny) = (x2.sqrt(), sq_norm(&y).sqrt());
                    let lhs = euclidean_norm(&db);
                    let rhs = l * (1.0 + nx.powf(deg) + ny.powf(deg)) * dist2.sqrt();
                    a5_poly.record(lhs, rhs, euclidean_norm(&bx) + euclidean_norm(&by) + rhs, t, &x, Some(&y));

                    model.drift_into(t, &zero, &mut b0);
                    let lhs = euclidean_norm(&bx);
                    let rhs = l * (1.0 + nx.powf(deg)) * nx + euclidean_norm(&b0);
                    growth.record(lhs, rhs, lhs + rhs, t, &x, None);
                }
            }
        }
    }

    let mut checks = Vec::new();
    if k.is_some() {
        checks.push(a1_drift.outcome);
        checks.push(a1_diff.outcome);
    }
    if l.is_some() {
        checks.push(a5_one.outcome);
        checks.push(a5_diff.outcome);
    }
    if poly.is_some() {
        checks.push(a5_poly.outcome);
        checks.push(growth.outcome);
    }
    SpotCheckReport {
        model: model.name().to_string(),
        radius,
        checks,
        skipped,
    }
}
