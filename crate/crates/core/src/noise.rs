//! Reproducible Brownian increments on a fine grid, and exact aggregation to
//! nested coarser grids so that every scheme in an experiment is driven by the
//! same Wiener path.
//!
//! Each path owns a ChaCha8 stream: the key is expanded from the master seed
//! with SplitMix64 and the stream id is the path id. Standard normals come from
//! `rand_distr::StandardNormal` (ziggurat), drawn in step-major, component-minor
//! order. Changing either crate version may change the bits; golden files in
//! the test suite pin the current ones.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::grid::TimeGrid;

const INITIAL_VALUE_DOMAIN: u64 = 0x6a09_e667_f3bc_c908;

/// Identifies the Wiener path of one Monte Carlo sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePlan {
    pub master_seed: u64,
    pub path_id: u64,
    pub dim_noise: usize,
    pub fine_n: usize,
    pub horizon: f64,
}

impl NoisePlan {
    pub fn grid(&self) -> Result<TimeGrid> {
        if self.dim_noise == 0 {
            return Err(domain("noise dimension must be positive"));
        }
        TimeGrid::new(self.horizon, self.fine_n)
    }
}

/// Per-step Wiener increments; row `k` holds `W(t_{k+1}) - W(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementArray {
    grid: TimeGrid,
    dim_noise: usize,
    increments: Vec<f64>,
    step_sizes: Vec<f64>,
}

impl IncrementArray {
    /// Wraps explicit increments, e.g. for hand-built test paths.
    pub fn from_increments(grid: TimeGrid, dim_noise: usize, increments: Vec<f64>) -> Result<Self> {
        if dim_noise == 0 {
            return Err(domain("noise dimension must be positive"));
        }
        if increments.len() != grid.num_steps() * dim_noise {
            return Err(domain(format!(
                "expected {} increments for {} steps of dimension {dim_noise}, got {}",
                grid.num_steps() * dim_noise,
                grid.num_steps(),
                increments.len()
            )));
        }
        let step_sizes = (0..grid.num_steps()).map(|k| grid.step_size(k)).collect();
        Ok(Self {
            grid,
            dim_noise,
            increments,
            step_sizes,
        })
    }

    pub(crate) fn empty(grid: TimeGrid, dim_noise: usize) -> Self {
        let step_sizes = (0..grid.num_steps()).map(|k| grid.step_size(k)).collect();
        Self {
            grid,
            dim_noise,
            increments: vec![0.0; grid.num_steps() * dim_noise],
            step_sizes,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim_noise(&self) -> usize {
        self.dim_noise
    }

    pub fn num_steps(&self) -> usize {
        self.step_sizes.len()
    }

    /// Flat row-major `(num_steps × m)` storage.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    /// Increment of step `k`, length `m`.
    #[inline]
    pub fn step(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim_noise..(k + 1) * self.dim_noise]
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn keyed_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Stream used to sample random initial values for `path_id`, disjoint from
/// the increment stream.
pub fn initial_value_rng(master_seed: u64, path_id: u64) -> impl RngCore {
    keyed_stream(master_seed ^ INITIAL_VALUE_DOMAIN, path_id)
}

pub(crate) fn fill_increments(plan: &NoisePlan, out: &mut IncrementArray) {
    debug_assert_eq!(out.dim_noise, plan.dim_noise);
    let mut rng = keyed_stream(plan.master_seed, plan.path_id);
    let m = out.dim_noise;
    for (k, &h) in out.step_sizes.iter().enumerate() {
        let scale = h.sqrt();
        for dw in &mut out.increments[k * m..(k + 1) * m] {
            let z: f64 = StandardNormal.sample(&mut rng);
            *dw = z * scale;
        }
    }
}

/// Gaussian increments `N(0, h I_m)` for every step of the plan's grid.
pub fn generate_increments(plan: &NoisePlan) -> Result<IncrementArray> {
    let grid = plan.grid()?;
    let mut out = IncrementArray::empty(grid, plan.dim_noise);
    fill_increments(plan, &mut out);
    Ok(out)
}

pub(crate) fn aggregate_into(fine: &IncrementArray, out: &mut IncrementArray) -> Result<()> {
    let ratio = out.grid.refinement_ratio(&fine.grid)?;
    if out.dim_noise != fine.dim_noise {
        return Err(domain("noise dimensions differ"));
    }
    let m = fine.dim_noise;
    let fine_steps = fine.num_steps();
    for k in 0..out.num_steps() {
        let acc = &mut out.increments[k * m..(k + 1) * m];
        acc.fill(0.0);
        let end = ((k + 1) * ratio).min(fine_steps);
        for j in k * ratio..end {
            for (a, dw) in acc.iter_mut().zip(fine.step(j)) {
                *a += dw;
            }
        }
    }
    Ok(())
}

/// Sums fine increments over each step of the coarse grid with `coarse_n`
/// steps per unit time. Summation runs left to right.
pub fn aggregate_increments(fine: &IncrementArray, coarse_n: usize) -> Result<IncrementArray> {
    let grid = TimeGrid::new(fine.grid.horizon(), coarse_n)?;
    let mut out = IncrementArray::empty(grid, fine.dim_noise);
    aggregate_into(fine, &mut out)?;
    Ok(out)
}
