//! The taming transform `b ↦ b / (1 + n^{-α}|b|)`.
//!
//! The tamed drift has Euclidean norm at most `min(n^α, |b|)`, points in the
//! same direction as `b`, and approaches `b` as `n` grows.

use crate::error::{domain, Result, SdeError};

/// Default taming exponent; `α = 1/2` gives the strong order 1/2.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Checks that `alpha` lies in `(0, 1/2]`.
pub fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 0.5 {
        Ok(())
    } else {
        Err(domain(format!("taming exponent must lie in (0, 1/2], got {alpha}")))
    }
}

/// `n^{-α}`, the weight of `|b|` in the taming denominator.
pub fn taming_weight(n: usize, alpha: f64) -> f64 {
    (n as f64).powf(-alpha)
}

pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    match v {
        [x] => x.abs(),
        _ => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// In-place taming with a precomputed weight `n^{-α}`.
#[inline]
pub(crate) fn tame_in_place(b: &mut [f64], weight: f64) {
    let scale = 1.0 / (1.0 + weight * euclidean_norm(b));
    for v in b.iter_mut() {
        *v *= scale;
    }
}

/// Returns the tamed drift `b / (1 + n^{-α}|b|)`.
pub fn tame_drift(b_value: &[f64], n: usize, alpha: f64) -> Result<Vec<f64>> {
    validate_alpha(alpha)?;
    if n == 0 {
        return Err(domain("taming requires n >= 1"));
    }
    if b_value.iter().any(|v| !v.is_finite()) {
        return Err(SdeError::Numeric {
            context: format!("tame_drift: non-finite drift value {b_value:?}"),
        });
    }
    let mut out = b_value.to_vec();
    tame_in_place(&mut out, taming_weight(n, alpha));
    Ok(out)
}
