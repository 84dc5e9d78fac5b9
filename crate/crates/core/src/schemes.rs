//! Explicit and tamed Euler–Maruyama.
//!
//! Both schemes freeze the coefficients at the left grid point `κ_n(t)`:
//!
//! ```text
//! X_n(t) = X_n(κ_n(t)) + b_n(κ_n(t), X_n(κ_n(t))) (t − κ_n(t))
//!                      + σ(κ_n(t), X_n(κ_n(t))) (W(t) − W(κ_n(t)))
//! ```
//!
//! where `b_n = b` for explicit Euler and `b_n = b / (1 + n^{-α}|b|)` for the
//! tamed scheme. Blow-up is data: once a state is non-finite or its norm
//! exceeds [`BLOWUP_NORM`], the trajectory stops updating and records the
//! step where it happened.

use crate::error::{check_len, domain, Result};
use crate::grid::TimeGrid;
use crate::noise::IncrementArray;
use crate::sde::SdeModel;
use crate::taming::{tame_in_place, taming_weight, validate_alpha};

/// States with a larger Euclidean norm count as blown up. Far beyond the
/// point of no return of explicit Euler for the shipped models, and well
/// before `f64` overflow so that short horizons still register divergence.
pub const BLOWUP_NORM: f64 = 1e10;

/// True once a state is non-finite or its norm exceeds [`BLOWUP_NORM`].
#[inline]
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn is_blown_up(x: &[f64]) -> bool {
    // NaN compares false, so test the "ok" condition and negate
    !(crate::taming::euclidean_norm(x) <= BLOWUP_NORM)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    ExplicitEuler,
    TamedEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    kind: SchemeKind,
    alpha: Option<f64>,
}

impl SchemeSpec {
    pub fn explicit_euler() -> Self {
        Self {
            kind: SchemeKind::ExplicitEuler,
            alpha: None,
        }
    }

    pub fn tamed_euler(alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(Self {
            kind: SchemeKind::TamedEuler,
            alpha: Some(alpha),
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    /// Taming exponent; `Some` exactly for the tamed scheme.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Short name used in reports: `euler` or `tamed`.
    pub fn label(&self) -> &'static str {
        match self.kind {
            SchemeKind::ExplicitEuler => "euler",
            SchemeKind::TamedEuler => "tamed",
        }
    }

    /// `n^{-α}` for the tamed scheme, `None` for explicit Euler.
    pub(crate) fn weight(&self, n: usize) -> Option<f64> {
        self.alpha.map(|a| taming_weight(n, a))
    }
}

/// Scratch buffers for repeated stepping of one model.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    pub(crate) drift: Vec<f64>,
    pub(crate) diffusion: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(model: &SdeModel) -> Self {
        Self {
            drift: vec![0.0; model.dim_state()],
            diffusion: vec![0.0; model.dim_state() * model.dim_noise()],
        }
    }

    /// Evaluates the (possibly tamed) drift and the diffusion at `(t, x)`.
    #[inline]
    pub(crate) fn freeze(&mut self, model: &SdeModel, weight: Option<f64>, t: f64, x: &[f64]) {
        model.drift_into(t, x, &mut self.drift);
        if let Some(w) = weight {
            tame_in_place(&mut self.drift, w);
        }
        model.diffusion_into(t, x, &mut self.diffusion);
    }

    /// Component `i` of `drift·dt + diffusion·dW` for the frozen coefficients.
    #[inline]
    pub(crate) fn increment(&self, i: usize, dt: f64, dw: &[f64]) -> f64 {
        let m = dw.len();
        let row = &self.diffusion[i * m..(i + 1) * m];
        let noise: f64 = row.iter().zip(dw).map(|(s, w)| s * w).sum();
        self.drift[i] * dt + noise
    }

    #[inline]
    pub(crate) fn advance(&self, x: &mut [f64], dt: f64, dw: &[f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += self.increment(i, dt, dw);
        }
    }
}

#[inline]
fn step_in_place(
    weight: Option<f64>,
    model: &SdeModel,
    t: f64,
    x: &mut [f64],
    h: f64,
    dw: &[f64],
    ws: &mut Workspace,
) {
    ws.freeze(model, weight, t, x);
    ws.advance(x, h, dw);
}

/// One step of the scheme from `(t_k, x)` with step `h` and increment `dW`.
/// The returned state may be non-finite; check [`StepOutput::finite`].
/// A single step does not apply [`BLOWUP_NORM`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: Vec<f64>,
    pub finite: bool,
}

pub fn step(
    spec: &SchemeSpec,
    model: &SdeModel,
    t_k: f64,
    x: &[f64],
    h: f64,
    dw: &[f64],
    n: usize,
) -> Result<StepOutput> {
    check_len("state", model.dim_state(), x.len())?;
    check_len("Wiener increment", model.dim_noise(), dw.len())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(domain(format!("step size must be positive, got {h}")));
    }
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    let mut state = x.to_vec();
    let mut ws = Workspace::new(model);
    step_in_place(spec.weight(n), model, t_k, &mut state, h, dw, &mut ws);
    let finite = state.iter().all(|v| v.is_finite());
    Ok(StepOutput { state, finite })
}

/// Scheme states at every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim_state: usize,
    values: Vec<f64>,
    finite: Vec<bool>,
    blowup_step: Option<usize>,
}

impl Trajectory {
    pub(crate) fn empty(grid: TimeGrid, dim_state: usize) -> Self {
        Self {
            grid,
            dim_state,
            values: vec![0.0; grid.num_points() * dim_state],
            finite: vec![true; grid.num_points()],
            blowup_step: None,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    /// Flat row-major `(num_points × d)` storage.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// State at grid point `k`.
    #[inline]
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim_state..(k + 1) * self.dim_state]
    }

    /// Per-point flag, false from the blow-up step on.
    pub fn finite(&self) -> &[bool] {
        &self.finite
    }

    pub fn is_finite(&self) -> bool {
        self.blowup_step.is_none()
    }

    /// First grid index whose state is non-finite or exceeds [`BLOWUP_NORM`].
    pub fn blowup_step(&self) -> Option<usize> {
        self.blowup_step
    }
}

pub(crate) fn simulate_into(
    spec: &SchemeSpec,
    model: &SdeModel,
    noise: &IncrementArray,
    x0: &[f64],
    traj: &mut Trajectory,
    ws: &mut Workspace,
) {
    let grid = *noise.grid();
    let d = model.dim_state();
    let weight = spec.weight(grid.n());
    traj.grid = grid;
    traj.values.resize(grid.num_points() * d, 0.0);
    traj.finite.clear();
    traj.finite.resize(grid.num_points(), true);
    traj.blowup_step = None;

    traj.values[..d].copy_from_slice(x0);
    if is_blown_up(x0) {
        traj.blowup_step = Some(0);
    }
    for k in 0..grid.num_steps() {
        let (done, rest) = traj.values.split_at_mut((k + 1) * d);
        let next = &mut rest[..d];
        next.copy_from_slice(&done[k * d..]);
        if traj.blowup_step.is_none() {
            step_in_place(
                weight,
                model,
                grid.point(k),
                next,
                noise.step_sizes()[k],
                noise.step(k),
                ws,
            );
            if is_blown_up(next) {
                traj.blowup_step = Some(k + 1);
            }
        }
    }
    if let Some(b) = traj.blowup_step {
        traj.finite[b..].fill(false);
    }
}

/// Iterates the scheme over every interval of `grid` driven by `noise`,
/// which must already be at the grid's resolution.
pub fn simulate(
    spec: &SchemeSpec,
    model: &SdeModel,
    grid: &TimeGrid,
    noise: &IncrementArray,
    x0: &[f64],
) -> Result<Trajectory> {
    if noise.grid() != grid {
        return Err(domain(format!(
            "noise grid (n={}, T={}) does not match simulation grid (n={}, T={})",
            noise.grid().n(),
            noise.grid().horizon(),
            grid.n(),
            grid.horizon()
        )));
    }
    check_len("Wiener increment", model.dim_noise(), noise.dim_noise())?;
    check_len("initial value", model.dim_state(), x0.len())?;
    let mut traj = Trajectory::empty(*grid, model.dim_state());
    let mut ws = Workspace::new(model);
    simulate_into(spec, model, noise, x0, &mut traj, &mut ws);
    Ok(traj)
}

/// Index of `t` on the fine grid, or an error if `t` is not a fine grid point.
pub(crate) fn fine_index(fine: &TimeGrid, t: f64) -> Result<usize> {
    let j = fine.kappa_index(t)?;
    let tol = 1e-12 * t.abs().max(1.0);
    if (fine.point(j) - t).abs() <= tol {
        Ok(j)
    } else if j < fine.num_steps() && (fine.point(j + 1) - t).abs() <= tol {
        Ok(j + 1)
    } else {
        Err(domain(format!(
            "time {t} is not a point of the fine grid with n={}",
            fine.n()
        )))
    }
}

/// Value of the continuous-time scheme at a fine-grid time `t` between coarse
/// grid points, using the stored coarse state at `κ_n(t)` and the partial sum
/// of fine increments from `κ_n(t)` to `t`.
pub fn interpolate(
    spec: &SchemeSpec,
    model: &SdeModel,
    grid: &TimeGrid,
    fine_noise: &IncrementArray,
    trajectory: &Trajectory,
    t: f64,
) -> Result<Vec<f64>> {
    if trajectory.grid() != grid {
        return Err(domain("trajectory was not simulated on this grid"));
    }
    check_len("Wiener increment", model.dim_noise(), fine_noise.dim_noise())?;
    let ratio = grid.refinement_ratio(fine_noise.grid())?;
    let j = fine_index(fine_noise.grid(), t)?;
    let k = j / ratio;
    let t_k = grid.point(k);
    let mut x = trajectory.value(k).to_vec();
    if j == k * ratio {
        return Ok(x);
    }
    let mut dw = vec![0.0; model.dim_noise()];
    for i in k * ratio..j {
        for (a, w) in dw.iter_mut().zip(fine_noise.step(i)) {
            *a += w;
        }
    }
    let elapsed = fine_noise.grid().point(j) - t_k;
    let mut ws = Workspace::new(model);
    ws.freeze(model, spec.weight(grid.n()), t_k, trajectory.value(k));
    ws.advance(&mut x, elapsed, &dw);
    Ok(x)
}
