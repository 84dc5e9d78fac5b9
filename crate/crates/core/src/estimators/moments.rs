use crate::error::Result;
use crate::noise::{fill_increments, IncrementArray};
use crate::parallel::map_reduce_paths;
use crate::schemes::{simulate_into, SchemeSpec, Trajectory, Workspace};
use crate::sde::SdeModel;

use super::{empty_noise, norm_pow, realize_initial, validate_order, Moments, MonteCarlo};

/// Moment functionals of the scheme on its own grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub model: String,
    pub scheme: SchemeSpec,
    pub n: usize,
    pub p: f64,
    /// `E[max_k |X_n(t_k)|^p]` over finite paths.
    pub expected_sup: f64,
    pub expected_sup_std_error: f64,
    /// `max_k E[|X_n(t_k)|^p]` over finite paths.
    pub sup_expected: f64,
    /// Fraction of paths that reached a non-finite state.
    pub divergence_fraction: f64,
    pub paths: u64,
}

impl MomentReport {
    pub fn is_valid(&self) -> bool {
        self.expected_sup.is_finite()
            && self.sup_expected.is_finite()
            && self.divergence_fraction <= super::MAX_DIVERGENCE_FRACTION
    }
}

struct Acc {
    sup: Moments,
    per_time: Vec<f64>,
    diverged: u64,
}

struct Scratch {
    noise: IncrementArray,
    traj: Trajectory,
    ws: Workspace,
    x0: Vec<f64>,
}

/// Estimates both moment functionals from `paths` samples of the scheme on
/// the grid with `n` steps per unit time. Noise is generated directly at `n`.
pub fn moment_sup(
    model: &SdeModel,
    scheme: &SchemeSpec,
    n: usize,
    p: f64,
    mc: &MonteCarlo,
) -> Result<MomentReport> {
    mc.validate()?;
    validate_order(p)?;
    let template = empty_noise(model, mc, n)?;
    let grid = *template.grid();
    let d = model.dim_state();

    let init = || {
        (
            Acc {
                sup: Moments::default(),
                per_time: vec![0.0; grid.num_points()],
                diverged: 0,
            },
            Scratch {
                noise: template.clone(),
                traj: Trajectory::empty(grid, d),
                ws: Workspace::new(model),
                x0: vec![0.0; d],
            },
        )
    };
    let fold = |acc: &mut Acc, s: &mut Scratch, path: u64| {
        fill_increments(&mc.plan(model, n, path), &mut s.noise);
        realize_initial(model, mc.master_seed, path, &mut s.x0);
        simulate_into(scheme, model, &s.noise, &s.x0, &mut s.traj, &mut s.ws);
        if !s.traj.is_finite() {
            acc.diverged += 1;
            return;
        }
        let mut sup = 0.0f64;
        for (k, slot) in acc.per_time.iter_mut().enumerate() {
            let v = norm_pow(s.traj.value(k).iter().copied(), p);
            *slot += v;
            sup = sup.max(v);
        }
        acc.sup.push(sup);
    };
    let merge = |a: &mut Acc, b: Acc| {
        a.sup.merge(&b.sup);
        for (x, y) in a.per_time.iter_mut().zip(&b.per_time) {
            *x += y;
        }
        a.diverged += b.diverged;
    };
    let acc = map_reduce_paths(mc.policy, mc.paths, init, fold, merge);

    let finite = acc.sup.count;
    let sup_expected = if finite == 0 {
        f64::NAN
    } else {
        acc.per_time
            .iter()
            .map(|s| s / finite as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(MomentReport {
        model: model.name().to_string(),
        scheme: *scheme,
        n,
        p,
        expected_sup: acc.sup.mean(),
        expected_sup_std_error: acc.sup.std_error(),
        sup_expected,
        divergence_fraction: acc.diverged as f64 / mc.paths as f64,
        paths: mc.paths,
    })
}
