//! Strong error `(E[max_k |X_ref(t_k) − X_n(t_k)|^p])^{1/p}` over a ladder
//! of coarse grids, all driven by the same fine Brownian path per sample.

use crate::error::{domain, Result};
use crate::grid::TimeGrid;
use crate::noise::{aggregate_into, fill_increments, IncrementArray};
use crate::parallel::map_reduce_paths;
use crate::schemes::{simulate_into, SchemeSpec, Trajectory, Workspace};
use crate::sde::SdeModel;
use crate::taming::DEFAULT_ALPHA;

use super::{
    empty_noise, norm_pow, realize_initial, root_std_error, validate_order, Moments, MonteCarlo,
    MAX_DIVERGENCE_FRACTION,
};

/// What the coarse schemes are compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Closed form when the model has one, otherwise the tamed scheme at
    /// `fine_n` (with the coarse scheme's α, or 1/2 for explicit Euler).
    Auto,
    ClosedForm,
    /// The given scheme simulated at `fine_n`.
    Scheme(SchemeSpec),
}

impl Reference {
    fn resolve(self, model: &SdeModel, coarse: &SchemeSpec) -> Result<ResolvedReference> {
        match self {
            Reference::Auto if model.has_exact_solution() => Ok(ResolvedReference::ClosedForm),
            Reference::Auto => {
                let alpha = coarse.alpha().unwrap_or(DEFAULT_ALPHA);
                Ok(ResolvedReference::Scheme(SchemeSpec::tamed_euler(alpha)?))
            }
            Reference::ClosedForm if model.has_exact_solution() => Ok(ResolvedReference::ClosedForm),
            Reference::ClosedForm => Err(domain(format!(
                "model '{}' has no closed-form solution",
                model.name()
            ))),
            Reference::Scheme(spec) => Ok(ResolvedReference::Scheme(spec)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ResolvedReference {
    ClosedForm,
    Scheme(SchemeSpec),
}

impl ResolvedReference {
    fn describe(&self, fine_n: usize) -> String {
        match self {
            ResolvedReference::ClosedForm => "closed-form".to_string(),
            ResolvedReference::Scheme(spec) => match spec.alpha() {
                Some(a) => format!("{}-at-fine_n={fine_n} (alpha={a})", spec.label()),
                None => format!("{}-at-fine_n={fine_n}", spec.label()),
            },
        }
    }
}

/// Per-n strong error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub model: String,
    pub scheme: SchemeSpec,
    pub n_values: Vec<usize>,
    pub fine_n: usize,
    pub errors: Vec<f64>,
    /// Delta-method standard errors of the `1/p`-th root.
    pub std_errors: Vec<f64>,
    /// Fraction of paths excluded because the coarse scheme or the reference
    /// produced a non-finite state.
    pub divergence_fractions: Vec<f64>,
    /// False where more than half the paths were excluded.
    pub valid: Vec<bool>,
    pub p: f64,
    pub paths: u64,
    pub reference: String,
}

impl ErrorTable {
    pub fn is_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }
}

struct Scratch {
    fine: IncrementArray,
    coarse: Vec<IncrementArray>,
    reference: Trajectory,
    traj: Trajectory,
    ws: Workspace,
    x0: Vec<f64>,
    /// Brownian path `W(t_j)` at every fine point, row-major.
    brownian: Vec<f64>,
    exact: Vec<f64>,
}

#[derive(Clone)]
struct Acc {
    per_n: Vec<Moments>,
    diverged: Vec<u64>,
}

/// Strong error with the default reference (see [`Reference::Auto`]).
pub fn strong_error(
    model: &SdeModel,
    scheme: &SchemeSpec,
    n_values: &[usize],
    fine_n: usize,
    p: f64,
    mc: &MonteCarlo,
) -> Result<ErrorTable> {
    strong_error_with_reference(model, scheme, n_values, fine_n, p, mc, Reference::Auto)
}

pub fn strong_error_with_reference(
    model: &SdeModel,
    scheme: &SchemeSpec,
    n_values: &[usize],
    fine_n: usize,
    p: f64,
    mc: &MonteCarlo,
    reference: Reference,
) -> Result<ErrorTable> {
    mc.validate()?;
    validate_order(p)?;
    if n_values.is_empty() {
        return Err(domain("at least one coarse n is required"));
    }
    let fine_grid = TimeGrid::new(mc.horizon, fine_n)?;
    let mut coarse_grids = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let grid = TimeGrid::new(mc.horizon, n)?;
        grid.refinement_ratio(&fine_grid)?;
        coarse_grids.push(grid);
    }
    let reference = reference.resolve(model, scheme)?;
    let d = model.dim_state();
    let m = model.dim_noise();

    let init = || -> (Acc, Scratch) {
        let fine = empty_noise(model, mc, fine_n).expect("fine grid validated");
        let coarse = coarse_grids
            .iter()
            .map(|g| IncrementArray::from_increments(*g, m, vec![0.0; g.num_steps() * m]).expect("sized"))
            .collect();
        (
            Acc {
                per_n: vec![Moments::default(); n_values.len()],
                diverged: vec![0; n_values.len()],
            },
            Scratch {
                fine,
                coarse,
                reference: Trajectory::empty(fine_grid, d),
                traj: Trajectory::empty(fine_grid, d),
                ws: Workspace::new(model),
                x0: vec![0.0; d],
                brownian: vec![0.0; fine_grid.num_points() * m],
                exact: vec![0.0; d],
            },
        )
    };

    let fold = |acc: &mut Acc, s: &mut Scratch, path: u64| {
        fill_increments(&mc.plan(model, fine_n, path), &mut s.fine);
        realize_initial(model, mc.master_seed, path, &mut s.x0);
        match reference {
            ResolvedReference::Scheme(spec) => {
                simulate_into(&spec, model, &s.fine, &s.x0, &mut s.reference, &mut s.ws);
            }
            ResolvedReference::ClosedForm => {
                s.brownian[..m].fill(0.0);
                for j in 0..s.fine.num_steps() {
                    let (done, rest) = s.brownian.split_at_mut((j + 1) * m);
                    for ((next, prev), dw) in rest[..m].iter_mut().zip(&done[j * m..]).zip(s.fine.step(j)) {
                        *next = prev + dw;
                    }
                }
            }
        }
        let reference_finite = match reference {
            ResolvedReference::Scheme(_) => s.reference.is_finite(),
            ResolvedReference::ClosedForm => true,
        };

        for (i, grid) in coarse_grids.iter().enumerate() {
            let ratio = fine_n / grid.n();
            aggregate_into(&s.fine, &mut s.coarse[i]).expect("grids validated");
            simulate_into(scheme, model, &s.coarse[i], &s.x0, &mut s.traj, &mut s.ws);
            if !reference_finite || !s.traj.is_finite() {
                acc.diverged[i] += 1;
                continue;
            }
            let mut sup = 0.0f64;
            let mut finite = true;
            for k in 0..grid.num_points() {
                let j = (k * ratio).min(fine_grid.num_steps());
                let target: &[f64] = match reference {
                    ResolvedReference::Scheme(_) => s.reference.value(j),
                    ResolvedReference::ClosedForm => {
                        model.exact_into(grid.point(k), &s.x0, &s.brownian[j * m..(j + 1) * m], &mut s.exact);
                        &s.exact
                    }
                };
                let dist = norm_pow(
                    target.iter().zip(s.traj.value(k)).map(|(a, b)| a - b),
                    2.0,
                );
                if !dist.is_finite() {
                    finite = false;
                    break;
                }
                sup = sup.max(dist);
            }
            if finite {
                // sup of squared norms, then raise to p/2
                acc.per_n[i].push(if p == 2.0 { sup } else { sup.powf(0.5 * p) });
            } else {
                acc.diverged[i] += 1;
            }
        }
    };

    let merge = |a: &mut Acc, b: Acc| {
        for (x, y) in a.per_n.iter_mut().zip(&b.per_n) {
            x.merge(y);
        }
        for (x, y) in a.diverged.iter_mut().zip(&b.diverged) {
            *x += y;
        }
    };

    let acc = map_reduce_paths(mc.policy, mc.paths, init, fold, merge);

    let mut errors = Vec::with_capacity(n_values.len());
    let mut std_errors = Vec::with_capacity(n_values.len());
    let mut fractions = Vec::with_capacity(n_values.len());
    let mut valid = Vec::with_capacity(n_values.len());
    for (mom, &div) in acc.per_n.iter().zip(&acc.diverged) {
        let mean = mom.mean();
        let err = mean.powf(1.0 / p);
        let fraction = div as f64 / mc.paths as f64;
        errors.push(err);
        std_errors.push(root_std_error(mean, mom.std_error(), p));
        fractions.push(fraction);
        valid.push(mom.count > 0 && err.is_finite() && fraction <= MAX_DIVERGENCE_FRACTION);
    }

    Ok(ErrorTable {
        model: model.name().to_string(),
        scheme: *scheme,
        n_values: n_values.to_vec(),
        fine_n,
        errors,
        std_errors,
        divergence_fractions: fractions,
        valid,
        p,
        paths: mc.paths,
        reference: reference.describe(fine_n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_cubic, make_gbm, make_zero};
    use crate::noise::{aggregate_increments, generate_increments, NoisePlan};
    use crate::parallel::ExecPolicy;
    use crate::schemes::simulate;

    fn mc(paths: u64) -> MonteCarlo {
        MonteCarlo::new(paths, 31, 1.0)
    }

    #[test]
    fn scheme_against_itself_is_zero() {
        let cubic = make_cubic(1.0, 1.0, 1.0, 2.0).unwrap();
        for (alpha, seed) in [(0.5, 1u64), (0.25, 99)] {
            let spec = SchemeSpec::tamed_euler(alpha).unwrap();
            let t = strong_error(&cubic, &spec, &[64], 64, 2.0, &MonteCarlo::new(50, seed, 1.0)).unwrap();
            assert_eq!(t.errors, vec![0.0]);
            assert_eq!(t.std_errors, vec![0.0]);
        }
        let e = SchemeSpec::explicit_euler();
        let t = strong_error_with_reference(&cubic, &e, &[16], 16, 3.0, &mc(20), Reference::Scheme(e)).unwrap();
        assert_eq!(t.errors, vec![0.0]);
    }

    #[test]
    fn zero_model_has_zero_error() {
        let zero = make_zero();
        let t = strong_error(&zero, &SchemeSpec::tamed_euler(0.5).unwrap(), &[2, 4, 8], 16, 2.0, &mc(10)).unwrap();
        assert_eq!(t.errors, vec![0.0; 3]);
        assert_eq!(t.reference, "closed-form");
    }

    #[test]
    fn single_path_matches_brute_force() {
        let cubic = make_cubic(1.0, 1.0, 1.0, 2.0).unwrap();
        let fine_n = 64;
        let e = SchemeSpec::explicit_euler();
        let t = strong_error(&cubic, &e, &[fine_n], fine_n, 2.0, &MonteCarlo::new(1, 5, 1.0)).unwrap();

        let noise = generate_increments(&NoisePlan {
            master_seed: 5,
            path_id: 0,
            dim_noise: 1,
            fine_n,
            horizon: 1.0,
        })
        .unwrap();
        // reference: tamed α=1/2 recursion written out by hand
        let (mut xr, mut xe) = (2.0f64, 2.0f64);
        let mut sup = 0.0f64;
        let h = 1.0 / fine_n as f64;
        let w = (fine_n as f64).powf(-0.5);
        for k in 0..fine_n {
            let dw = noise.step(k)[0];
            let br = xr - xr * xr * xr;
            xr += br / (1.0 + w * br.abs()) * h + dw;
            xe += (xe - xe * xe * xe) * h + dw;
            sup = sup.max((xr - xe).abs());
        }
        assert!(sup > 0.0);
        assert!((t.errors[0] - sup).abs() <= 1e-12 * sup, "{} vs {sup}", t.errors[0]);
        assert!(t.std_errors[0].is_nan());
    }

    #[test]
    fn closed_form_reference_uses_summed_increments() {
        let gbm = make_gbm(0.05, 0.2, 1.0).unwrap();
        let e = SchemeSpec::explicit_euler();
        let t = strong_error(&gbm, &e, &[4], 32, 2.0, &MonteCarlo::new(1, 8, 1.0)).unwrap();
        let fine = generate_increments(&NoisePlan {
            master_seed: 8,
            path_id: 0,
            dim_noise: 1,
            fine_n: 32,
            horizon: 1.0,
        })
        .unwrap();
        let coarse = aggregate_increments(&fine, 4).unwrap();
        let traj = simulate(&e, &gbm, coarse.grid(), &coarse, &[1.0]).unwrap();
        let mut w = 0.0;
        let mut sup = 0.0f64;
        for k in 0..=4 {
            if k > 0 {
                for j in 8 * (k - 1)..8 * k {
                    w += fine.step(j)[0];
                }
            }
            let exact = ((0.05 - 0.02) * (k as f64 / 4.0) + 0.2 * w).exp();
            sup = sup.max((exact - traj.value(k)[0]).abs());
        }
        assert!((t.errors[0] - sup).abs() <= 1e-12);
    }

    #[test]
    fn gbm_errors_decrease() {
        let gbm = make_gbm(0.05, 0.2, 1.0).unwrap();
        let t = strong_error(&gbm, &SchemeSpec::explicit_euler(), &[4, 16, 64, 256], 1024, 2.0, &mc(2000)).unwrap();
        assert!(t.is_valid());
        for i in 1..t.errors.len() {
            let slack = 2.0 * (t.std_errors[i] + t.std_errors[i - 1]);
            assert!(t.errors[i] < t.errors[i - 1] + slack, "{:?}", t.errors);
        }
    }

    #[test]
    fn explicit_divergence_invalidates_estimate() {
        // σ = 0, x0 = 5, n = 4: the explicit recursion overflows on every path
        let cubic = make_cubic(1.0, 1.0, 0.0, 5.0).unwrap();
        let t = strong_error(&cubic, &SchemeSpec::explicit_euler(), &[4, 8], 64, 2.0, &mc(8)).unwrap();
        assert_eq!(t.divergence_fractions[0], 1.0);
        assert!(!t.valid[0]);
        assert!(!t.is_valid());
    }

    #[test]
    fn policy_does_not_change_result() {
        let cubic = make_cubic(1.0, 1.0, 1.0, 2.0).unwrap();
        let spec = SchemeSpec::tamed_euler(0.5).unwrap();
        let seq = strong_error(&cubic, &spec, &[8, 16], 64, 1.5, &mc(300).with_policy(ExecPolicy::Sequential)).unwrap();
        let par = strong_error(&cubic, &spec, &[8, 16], 64, 1.5, &mc(300).with_policy(ExecPolicy::Parallel)).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn rejects_bad_arguments() {
        let cubic = make_cubic(1.0, 1.0, 1.0, 2.0).unwrap();
        let spec = SchemeSpec::tamed_euler(0.5).unwrap();
        assert!(strong_error(&cubic, &spec, &[3], 16, 2.0, &mc(4)).is_err());
        assert!(strong_error(&cubic, &spec, &[4], 16, 0.0, &mc(4)).is_err());
        assert!(strong_error(&cubic, &spec, &[4], 16, 2.0, &mc(0)).is_err());
        assert!(strong_error(&cubic, &spec, &[], 16, 2.0, &mc(4)).is_err());
        assert!(strong_error_with_reference(&cubic, &spec, &[4], 16, 2.0, &mc(4), Reference::ClosedForm).is_err());
    }
}
