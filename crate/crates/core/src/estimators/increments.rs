use crate::error::{domain, Result};
use crate::grid::TimeGrid;
use crate::noise::{aggregate_into, fill_increments, IncrementArray};
use crate::parallel::map_reduce_paths;
use crate::schemes::{simulate_into, SchemeSpec, Trajectory, Workspace};
use crate::sde::SdeModel;

use super::{empty_noise, norm_pow, realize_initial, MonteCarlo, MAX_DIVERGENCE_FRACTION};

/// `max_t E|X_n(t) − X_n(κ_n(t))|^p` over all fine-grid times `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementMoment {
    pub n: usize,
    pub fine_n: usize,
    pub p: f64,
    pub estimate: f64,
    /// Standard error of the Monte Carlo mean at the maximising time.
    pub std_error: f64,
    /// Fine-grid time where the maximum is attained.
    pub argmax_time: f64,
    pub divergence_fraction: f64,
    pub paths: u64,
}

impl IncrementMoment {
    pub fn is_valid(&self) -> bool {
        self.estimate.is_finite() && self.divergence_fraction <= MAX_DIVERGENCE_FRACTION
    }
}

struct Acc {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    finite: u64,
    diverged: u64,
}

struct Scratch {
    fine: IncrementArray,
    coarse: IncrementArray,
    traj: Trajectory,
    ws: Workspace,
    x0: Vec<f64>,
    dw: Vec<f64>,
    diff: Vec<f64>,
}

/// Increment moments of the continuous-time interpolant between coarse
/// grid points, sampled at every fine-grid time.
pub fn increment_moment(
    model: &SdeModel,
    scheme: &SchemeSpec,
    n: usize,
    fine_n: usize,
    p: f64,
    mc: &MonteCarlo,
) -> Result<IncrementMoment> {
    mc.validate()?;
    if !(p >= 2.0 && p.is_finite()) {
        return Err(domain(format!("increment moments need p >= 2, got {p}")));
    }
    let fine_template = empty_noise(model, mc, fine_n)?;
    let fine_grid = *fine_template.grid();
    let grid = TimeGrid::new(mc.horizon, n)?;
    let ratio = grid.refinement_ratio(&fine_grid)?;
    let (d, m) = (model.dim_state(), model.dim_noise());
    let weight = scheme.weight(n);
    let fine_points = fine_grid.num_points();

    let init = || {
        (
            Acc {
                sum: vec![0.0; fine_points],
                sum_sq: vec![0.0; fine_points],
                finite: 0,
                diverged: 0,
            },
            Scratch {
                fine: fine_template.clone(),
                coarse: IncrementArray::from_increments(grid, m, vec![0.0; grid.num_steps() * m])
                    .expect("sized"),
                traj: Trajectory::empty(grid, d),
                ws: Workspace::new(model),
                x0: vec![0.0; d],
                dw: vec![0.0; m],
                diff: vec![0.0; d],
            },
        )
    };

    let fold = |acc: &mut Acc, s: &mut Scratch, path: u64| {
        fill_increments(&mc.plan(model, fine_n, path), &mut s.fine);
        realize_initial(model, mc.master_seed, path, &mut s.x0);
        aggregate_into(&s.fine, &mut s.coarse).expect("grids validated");
        simulate_into(scheme, model, &s.coarse, &s.x0, &mut s.traj, &mut s.ws);
        if !s.traj.is_finite() {
            acc.diverged += 1;
            return;
        }
        acc.finite += 1;
        for k in 0..grid.num_steps() {
            let t_k = grid.point(k);
            s.ws.freeze(model, weight, t_k, s.traj.value(k));
            s.dw.fill(0.0);
            let end = ((k + 1) * ratio).min(fine_grid.num_steps());
            // interior fine points of the interval; the endpoints contribute 0
            for j in k * ratio + 1..end {
                for (a, w) in s.dw.iter_mut().zip(s.fine.step(j - 1)) {
                    *a += w;
                }
                let elapsed = fine_grid.point(j) - t_k;
                for (i, out) in s.diff.iter_mut().enumerate() {
                    *out = s.ws.increment(i, elapsed, &s.dw);
                }
                let v = norm_pow(s.diff.iter().copied(), p);
                acc.sum[j] += v;
                acc.sum_sq[j] += v * v;
            }
        }
    };

    let merge = |a: &mut Acc, b: Acc| {
        for (x, y) in a.sum.iter_mut().zip(&b.sum) {
            *x += y;
        }
        for (x, y) in a.sum_sq.iter_mut().zip(&b.sum_sq) {
            *x += y;
        }
        a.finite += b.finite;
        a.diverged += b.diverged;
    };

    let acc = map_reduce_paths(mc.policy, mc.paths, init, fold, merge);

    let count = acc.finite as f64;
    let (mut best, mut best_j) = (f64::NAN, 0usize);
    if acc.finite > 0 {
        best = f64::NEG_INFINITY;
        for (j, s) in acc.sum.iter().enumerate() {
            let mean = s / count;
            if mean > best {
                best = mean;
                best_j = j;
            }
        }
    }
    let std_error = if acc.finite >= 2 {
        let var = ((acc.sum_sq[best_j] - count * best * best) / (count - 1.0)).max(0.0);
        (var / count).sqrt()
    } else {
        f64::NAN
    };
    Ok(IncrementMoment {
        n,
        fine_n,
        p,
        estimate: best,
        std_error,
        argmax_time: fine_grid.point(best_j),
        divergence_fraction: acc.diverged as f64 / mc.paths as f64,
        paths: mc.paths,
    })
}
