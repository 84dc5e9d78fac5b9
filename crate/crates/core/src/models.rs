//! Shipped models: a Lipschitz control (GBM), cubic-drift models with
//! additive and multiplicative noise, a three-dimensional cubic system and a
//! zero fixture. All are autonomous.

use std::collections::BTreeMap;

use crate::error::{domain, Result};
use crate::sde::{AssumptionFlags, AssumptionMetadata, InitialValue, SdeModel};

const ALL_FLAGS: AssumptionFlags = AssumptionFlags {
    a1: true,
    a2: true,
    a3: true,
    a5: true,
};

fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("parameter {name} must be finite, got {v}")))
    }
}

/// Geometric Brownian motion `dX = μX dt + ξX dW` with closed-form solution
/// `X(t) = x0 exp((μ − ξ²/2)t + ξW(t))`.
pub fn make_gbm(mu: f64, xi: f64, x0: f64) -> Result<SdeModel> {
    require_finite("mu", mu)?;
    require_finite("xi", xi)?;
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(domain(format!("GBM needs x0 > 0, got {x0}")));
    }
    let meta = AssumptionMetadata {
        coercivity_k: Some(2.0 * mu.abs() + xi * xi),
        // σ(x) − σ(y) = ξ(x − y) forces L ≥ ξ²
        one_sided_l: Some(mu.abs().max(xi * xi)),
        poly_degree_l: Some(0.0),
        satisfies: ALL_FLAGS,
    };
    let drift_rate = mu - 0.5 * xi * xi;
    SdeModel::new(
        "gbm",
        1,
        1,
        move |_, x, out| out[0] = mu * x[0],
        move |_, x, out| out[0] = xi * x[0],
    )?
    .with_initial_value(InitialValue::Deterministic(vec![x0]))?
    .with_assumptions(meta)
    .map(|m| {
        m.with_exact_solution(move |t, start, w, out| {
            out[0] = start[0] * (drift_rate * t + xi * w[0]).exp()
        })
    })
}

fn cubic_meta(a: f64, lam: f64, diffusion_k: f64, diffusion_l: f64) -> AssumptionMetadata {
    AssumptionMetadata {
        // 2x(ax − λx³) ≤ 2|a|x²
        coercivity_k: Some((2.0 * a.abs()).max(diffusion_k)),
        // |a − λ(x² + xy + y²)| ≤ |a| + 1.5λ(x² + y²)
        one_sided_l: Some(a.abs().max(1.5 * lam).max(diffusion_l)),
        poly_degree_l: Some(2.0),
        satisfies: ALL_FLAGS,
    }
}

fn check_cubic(a: f64, lam: f64, x0: f64) -> Result<()> {
    require_finite("a", a)?;
    require_finite("x0", x0)?;
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(domain(format!("cubic coefficient lam must be positive, got {lam}")));
    }
    Ok(())
}

/// Ginzburg–Landau type drift `b(x) = a x − λ x³` with additive noise `c`.
pub fn make_cubic(a: f64, lam: f64, c: f64, x0: f64) -> Result<SdeModel> {
    check_cubic(a, lam, x0)?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(domain(format!("noise level c must be nonnegative, got {c}")));
    }
    SdeModel::new(
        "cubic-additive",
        1,
        1,
        move |_, x, out| out[0] = a * x[0] - lam * x[0] * x[0] * x[0],
        move |_, _, out| out[0] = c,
    )?
    .with_initial_value(InitialValue::Deterministic(vec![x0]))?
    .with_assumptions(cubic_meta(a, lam, c * c, 0.0))
}

/// Cubic drift with multiplicative noise `σ(x) = ξ x`.
pub fn make_cubic_multiplicative(a: f64, lam: f64, xi: f64, x0: f64) -> Result<SdeModel> {
    check_cubic(a, lam, x0)?;
    require_finite("xi", xi)?;
    SdeModel::new(
        "cubic-multiplicative",
        1,
        1,
        move |_, x, out| out[0] = a * x[0] - lam * x[0] * x[0] * x[0],
        move |_, x, out| out[0] = xi * x[0],
    )?
    .with_initial_value(InitialValue::Deterministic(vec![x0]))?
    .with_assumptions(cubic_meta(a, lam, xi * xi, xi * xi))
}

/// Three uncoupled cubic coordinates driven by independent noises, `σ = c I₃`.
pub fn make_cubic_3d(a: f64, lam: f64, c: f64, x0: f64) -> Result<SdeModel> {
    check_cubic(a, lam, x0)?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(domain(format!("noise level c must be nonnegative, got {c}")));
    }
    SdeModel::new(
        "cubic-3d",
        3,
        3,
        move |_, x, out| {
            for (o, &v) in out.iter_mut().zip(x) {
                *o = a * v - lam * v * v * v;
            }
        },
        move |_, _, out| {
            out.fill(0.0);
            for i in 0..3 {
                out[i * 3 + i] = c;
            }
        },
    )?
    .with_initial_value(InitialValue::Deterministic(vec![x0; 3]))?
    // Hilbert–Schmidt norm: |σ|² = 3c²
    .with_assumptions(cubic_meta(a, lam, 3.0 * c * c, 0.0))
}

/// `b ≡ 0`, `σ ≡ 0`, started at 0; use `with_initial_value` to move it.
pub fn make_zero() -> SdeModel {
    SdeModel::new("zero", 1, 1, |_, _, out| out[0] = 0.0, |_, _, out| out[0] = 0.0)
        .and_then(|m| {
            m.with_assumptions(AssumptionMetadata {
                coercivity_k: Some(0.0),
                one_sided_l: Some(0.0),
                poly_degree_l: Some(0.0),
                satisfies: ALL_FLAGS,
            })
        })
        .expect("zero model is well formed")
        .with_exact_solution(|_, x0, _, out| out.copy_from_slice(x0))
}

/// Names accepted by [`by_name`].
pub const MODEL_NAMES: [&str; 5] = [
    "gbm",
    "cubic-additive",
    "cubic-multiplicative",
    "zero",
    "cubic-3d",
];

/// Parameter names and defaults for a registered model.
pub fn default_params(name: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match name {
        "gbm" => &[("mu", 0.05), ("xi", 0.2), ("x0", 1.0)],
        "cubic-additive" | "cubic-3d" => &[("a", 1.0), ("lam", 1.0), ("c", 1.0), ("x0", 2.0)],
        "cubic-multiplicative" => &[("a", 1.0), ("lam", 1.0), ("xi", 0.5), ("x0", 2.0)],
        "zero" => &[("x0", 0.0)],
        _ => return None,
    })
}

/// Builds a registered model, applying parameter overrides on top of the
/// defaults. Unknown names or parameters are domain errors.
pub fn by_name(name: &str, overrides: &BTreeMap<String, f64>) -> Result<SdeModel> {
    let defaults = default_params(name).ok_or_else(|| {
        domain(format!(
            "unknown model '{name}' (known: {})",
            MODEL_NAMES.join(", ")
        ))
    })?;
    let mut params: BTreeMap<&str, f64> = defaults.iter().copied().collect();
    for (k, v) in overrides {
        match params.get_mut(k.as_str()) {
            Some(slot) => *slot = *v,
            None => {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(domain(format!(
                    "model '{name}' has no parameter '{k}' (known: {})",
                    known.join(", ")
                )));
            }
        }
    }
    let p = |k: &str| params[k];
    match name {
        "gbm" => make_gbm(p("mu"), p("xi"), p("x0")),
        "cubic-additive" => make_cubic(p("a"), p("lam"), p("c"), p("x0")),
        "cubic-multiplicative" => make_cubic_multiplicative(p("a"), p("lam"), p("xi"), p("x0")),
        "cubic-3d" => make_cubic_3d(p("a"), p("lam"), p("c"), p("x0")),
        "zero" => {
            require_finite("x0", p("x0"))?;
            make_zero().with_initial_value(InitialValue::Deterministic(vec![p("x0")]))
        }
        _ => unreachable!("registered above"),
    }
}
