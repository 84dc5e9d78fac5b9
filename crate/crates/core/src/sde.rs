//! SDE models `dX = b(t, X) dt + σ(t, X) dW` and their declared assumptions.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{check_len, domain, Result, SdeError};

/// Drift `b(t, x)`, written into an output slice of length `d`.
pub type DriftFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
/// Diffusion `σ(t, x)`, written row-major into an output slice of length `d·m`.
pub type DiffusionFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
/// Closed-form solution `X(t)` given the initial value and `W(t)`.
pub type ExactSolutionFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;
/// Initial-value sampler; must fill a slice of length `d`.
pub type InitialSamplerFn = dyn Fn(&mut dyn RngCore, &mut [f64]) + Send + Sync;

#[derive(Clone)]
pub enum InitialValue {
    Deterministic(Vec<f64>),
    /// Random initial value drawn from a per-path seeded stream.
    Sampled(Arc<InitialSamplerFn>),
}

impl fmt::Debug for InitialValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Deterministic(v) => f.debug_tuple("Deterministic").field(v).finish(),
            Self::Sampled(_) => f.write_str("Sampled(..)"),
        }
    }
}

/// Which of the standing assumptions the model author claims.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssumptionFlags {
    /// Coercivity and linear growth of σ, with constant `K`.
    pub a1: bool,
    /// Local one-sided Lipschitz drift, local Lipschitz σ.
    pub a2: bool,
    /// Drift locally bounded in `x`.
    pub a3: bool,
    /// Global one-sided Lipschitz drift with polynomially growing local
    /// Lipschitz constant `L(1 + |x|^l + |y|^l)`.
    pub a5: bool,
}

/// Constants the author declares. They are never inferred; see
/// [`crate::estimators::spot_check_assumptions`] for falsification.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssumptionMetadata {
    pub coercivity_k: Option<f64>,
    pub one_sided_l: Option<f64>,
    pub poly_degree_l: Option<f64>,
    pub satisfies: AssumptionFlags,
}

impl AssumptionMetadata {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("coercivity K", self.coercivity_k),
            ("one-sided L", self.one_sided_l),
            ("polynomial degree l", self.poly_degree_l),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(domain(format!("{name} must be finite and nonnegative, got {v}")));
                }
            }
        }
        if self.satisfies.a5 && (self.one_sided_l.is_none() || self.poly_degree_l.is_none()) {
            return Err(domain("A-5 is declared but L or l is missing"));
        }
        if self.satisfies.a1 && self.coercivity_k.is_none() {
            return Err(domain("A-1 is declared but K is missing"));
        }
        Ok(())
    }
}

/// An SDE with `d`-dimensional state driven by an `m`-dimensional Wiener
/// process. Coefficient closures must be pure.
#[derive(Clone)]
pub struct SdeModel {
    name: String,
    dim_state: usize,
    dim_noise: usize,
    drift: Arc<DriftFn>,
    diffusion: Arc<DiffusionFn>,
    initial_value: InitialValue,
    assumptions: AssumptionMetadata,
    exact_solution: Option<Arc<ExactSolutionFn>>,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("name", &self.name)
            .field("dim_state", &self.dim_state)
            .field("dim_noise", &self.dim_noise)
            .field("initial_value", &self.initial_value)
            .field("assumptions", &self.assumptions)
            .field("exact_solution", &self.exact_solution.is_some())
            .finish()
    }
}

impl SdeModel {
    /// A model with zero initial value and no declared assumptions.
    pub fn new<B, S>(
        name: impl Into<String>,
        dim_state: usize,
        dim_noise: usize,
        drift: B,
        diffusion: S,
    ) -> Result<Self>
    where
        B: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        S: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if dim_state == 0 || dim_noise == 0 {
            return Err(domain(format!(
                "state and noise dimensions must be positive, got d={dim_state}, m={dim_noise}"
            )));
        }
        Ok(Self {
            name: name.into(),
            dim_state,
            dim_noise,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            initial_value: InitialValue::Deterministic(vec![0.0; dim_state]),
            assumptions: AssumptionMetadata::default(),
            exact_solution: None,
        })
    }

    pub fn with_initial_value(mut self, initial: InitialValue) -> Result<Self> {
        if let InitialValue::Deterministic(v) = &initial {
            check_len("initial value", self.dim_state, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(domain(format!("initial value must be finite, got {v:?}")));
            }
        }
        self.initial_value = initial;
        Ok(self)
    }

    pub fn with_assumptions(mut self, assumptions: AssumptionMetadata) -> Result<Self> {
        assumptions.validate()?;
        self.assumptions = assumptions;
        Ok(self)
    }

    pub fn with_exact_solution<F>(mut self, exact: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.exact_solution = Some(Arc::new(exact));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_noise(&self) -> usize {
        self.dim_noise
    }

    pub fn initial_value(&self) -> &InitialValue {
        &self.initial_value
    }

    pub fn assumptions(&self) -> &AssumptionMetadata {
        &self.assumptions
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact_solution.is_some()
    }

    /// Writes the initial value for one path into `out`.
    pub fn realize_initial(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        match &self.initial_value {
            InitialValue::Deterministic(v) => out.copy_from_slice(v),
            InitialValue::Sampled(sampler) => sampler(rng, out),
        }
    }

    #[inline]
    pub(crate) fn drift_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }

    #[inline]
    pub(crate) fn diffusion_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(t, x, out)
    }

    pub(crate) fn exact_into(&self, t: f64, x0: &[f64], w: &[f64], out: &mut [f64]) -> bool {
        match &self.exact_solution {
            Some(f) => {
                f(t, x0, w, out);
                true
            }
            None => false,
        }
    }

    /// Closed-form `X(t)` for initial value `x0` and Brownian value `W(t)`.
    pub fn exact_solution(&self, t: f64, x0: &[f64], w: &[f64]) -> Result<Option<Vec<f64>>> {
        check_len("initial value", self.dim_state, x0.len())?;
        check_len("Brownian value", self.dim_noise, w.len())?;
        let mut out = vec![0.0; self.dim_state];
        Ok(self.exact_into(t, x0, w, &mut out).then_some(out))
    }

    /// Evaluates `b(t, x)`, rejecting non-finite results.
    pub fn eval_drift(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_len("state", self.dim_state, x.len())?;
        let mut out = vec![0.0; self.dim_state];
        self.drift_into(t, x, &mut out);
        self.finite_or_err("drift", t, x, out)
    }

    /// Evaluates `σ(t, x)` as a row-major `d×m` matrix.
    pub fn eval_diffusion(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_len("state", self.dim_state, x.len())?;
        let mut out = vec![0.0; self.dim_state * self.dim_noise];
        self.diffusion_into(t, x, &mut out);
        self.finite_or_err("diffusion", t, x, out)
    }

    fn finite_or_err(&self, what: &str, t: f64, x: &[f64], out: Vec<f64>) -> Result<Vec<f64>> {
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(SdeError::Numeric {
                context: format!("{what} of model '{}' at t={t}, x={x:?}: {out:?}", self.name),
            })
        }
    }
}
