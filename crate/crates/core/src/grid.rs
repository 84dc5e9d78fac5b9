//! Uniform time grid with `n` steps per unit time on `[0, T]`.

use crate::error::{domain, Result};

/// Grid points `t_k = k/n` for `k = 0..=num_steps`, the last point clamped to
/// the horizon. When `T` is not a multiple of `1/n` the final step is shorter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n: usize,
    num_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(domain(format!("horizon must be positive and finite, got {horizon}")));
        }
        if n == 0 {
            return Err(domain("steps per unit time must be at least 1"));
        }
        let raw = n as f64 * horizon;
        let nearest = raw.round();
        // n*T within rounding of an integer counts as an exact multiple
        let steps = if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) {
            nearest
        } else {
            raw.ceil()
        };
        if steps < 1.0 || steps > (usize::MAX / 2) as f64 {
            return Err(domain(format!("grid with n={n}, T={horizon} has no usable steps")));
        }
        Ok(Self {
            horizon,
            n,
            num_steps: steps as usize,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Steps per unit time.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn num_points(&self) -> usize {
        self.num_steps + 1
    }

    /// Time of grid point `k`; panics if `k > num_steps`.
    pub fn point(&self, k: usize) -> f64 {
        assert!(k <= self.num_steps, "grid index {k} out of range");
        if k == self.num_steps {
            self.horizon
        } else {
            k as f64 / self.n as f64
        }
    }

    /// Duration of step `k`, i.e. `t_{k+1} - t_k`.
    pub fn step_size(&self, k: usize) -> f64 {
        assert!(k < self.num_steps, "step index {k} out of range");
        if k + 1 < self.num_steps {
            1.0 / self.n as f64
        } else {
            self.horizon - self.point(k)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.num_steps).map(move |k| self.point(k))
    }

    /// Index of the grid point `⌊n t⌋/n`.
    pub fn kappa_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        let mut k = ((self.n as f64 * t).floor() as usize).min(self.num_steps);
        // reconcile the floor with the stored grid point values
        while k > 0 && self.point(k) > t {
            k -= 1;
        }
        while k < self.num_steps && self.point(k + 1) <= t {
            k += 1;
        }
        Ok(k)
    }

    /// The last grid point at or before `t`.
    pub fn kappa(&self, t: f64) -> Result<f64> {
        self.kappa_index(t).map(|k| self.point(k))
    }

    /// Ratio `fine_n / self.n`, provided this grid's points are a subset of
    /// the fine grid's points.
    pub fn refinement_ratio(&self, fine: &TimeGrid) -> Result<usize> {
        if fine.horizon != self.horizon {
            return Err(domain(format!(
                "grids have different horizons ({} vs {})",
                self.horizon, fine.horizon
            )));
        }
        if !fine.n.is_multiple_of(self.n) {
            return Err(domain(format!(
                "fine n={} is not a multiple of coarse n={}",
                fine.n, self.n
            )));
        }
        Ok(fine.n / self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        assert_eq!(g.kappa(0.37).unwrap(), 0.3);
        assert_eq!(g.kappa(0.3).unwrap(), 0.3);
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(g.kappa(0.999).unwrap(), 0.75);
        assert_eq!(g.kappa(1.0).unwrap(), 1.0);
        assert_eq!(g.kappa(0.0).unwrap(), 0.0);
    }

    #[test]
    fn kappa_rejects_outside_horizon() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert!(g.kappa(-0.1).is_err());
        assert!(g.kappa(1.0001).is_err());
        assert!(g.kappa(f64::NAN).is_err());
    }

    #[test]
    fn grid_points_every_point_is_its_own_kappa() {
        for &(t, n) in &[(1.0, 10), (0.7, 3), (2.5, 8), (1.0, 8192)] {
            let g = TimeGrid::new(t, n).unwrap();
            for k in 0..=g.num_steps() {
                assert_eq!(g.kappa_index(g.point(k)).unwrap(), k, "T={t} n={n} k={k}");
            }
        }
    }

    #[test]
    fn non_multiple_horizon_shortens_last_step() {
        let g = TimeGrid::new(0.7, 3).unwrap();
        assert_eq!(g.num_steps(), 3);
        assert_eq!(g.point(3), 0.7);
        assert!((g.step_size(2) - (0.7 - 2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(g.kappa(0.69).unwrap(), 2.0 / 3.0);
        let pts: Vec<f64> = g.points().collect();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(pts[0], 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(f64::INFINITY, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn refinement_ratio_requires_divisibility() {
        let fine = TimeGrid::new(1.0, 12).unwrap();
        assert_eq!(TimeGrid::new(1.0, 4).unwrap().refinement_ratio(&fine).unwrap(), 3);
        assert!(TimeGrid::new(1.0, 5).unwrap().refinement_ratio(&fine).is_err());
        assert!(TimeGrid::new(2.0, 4).unwrap().refinement_ratio(&fine).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kappa_brackets_t_and_is_idempotent(n in 1usize..5000, horizon in 0.1f64..5.0, frac in 0.0f64..1.0) {
                let g = TimeGrid::new(horizon, n).unwrap();
                let t = frac * horizon;
                let k = g.kappa(t).unwrap();
                prop_assert!(k <= t);
                if t < horizon {
                    prop_assert!(t < k + 1.0 / n as f64 + 1e-12);
                }
                prop_assert_eq!(g.kappa(k).unwrap(), k);
            }
        }
    }
}
