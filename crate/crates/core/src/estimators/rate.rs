use crate::error::{domain, Result};

use super::ErrorTable;

/// Ordinary least-squares line through `(log n, log error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateFit {
    /// Observed convergence order, `−slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Fits `log y = intercept + slope · log x`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(domain("x and y series differ in length"));
    }
    if xs.len() < 3 {
        return Err(domain(format!("rate fit needs at least 3 points, got {}", xs.len())));
    }
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
            return Err(domain(format!(
                "log-log fit needs positive finite values, got ({x}, {y})"
            )));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(domain("rate fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fits the strong-error decay of a table; the rate is `−slope`.
pub fn fit_rate(table: &ErrorTable) -> Result<RateFit> {
    let ns: Vec<f64> = table.n_values.iter().map(|&n| n as f64).collect();
    fit_log_log(&ns, &table.errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_laws() {
        let ns = [4.0, 16.0, 64.0];
        let half: Vec<f64> = ns.iter().map(|n: &f64| n.powf(-0.5)).collect();
        let fit = fit_log_log(&ns, &half).unwrap();
        assert_relative_eq!(fit.rate(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);

        let first: Vec<f64> = ns.iter().map(|n| 3.0 / n).collect();
        let fit = fit_log_log(&ns, &first).unwrap();
        assert_relative_eq!(fit.rate(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn noisy_half_rate_stays_in_band() {
        let ns = [32.0, 64.0, 128.0, 256.0, 512.0];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let ys: Vec<f64> = ns
                .iter()
                .map(|n: &f64| n.powf(-0.5) * (1.0 + rng.random_range(-0.05..0.05)))
                .collect();
            let rate = fit_log_log(&ns, &ys).unwrap().rate();
            assert!((0.45..=0.55).contains(&rate), "{rate}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_log_log(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_log_log(&[1.0, 2.0, 4.0], &[1.0, 0.0, 2.0]).is_err());
        assert!(fit_log_log(&[1.0, 2.0, 4.0], &[1.0, -1.0, 2.0]).is_err());
        assert!(fit_log_log(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
