//! Explicit one-step integrators: forward Euler, explicit midpoint, classical
//! RK4 and the adaptive Dormand-Prince 5(4) pair, plus their stability
//! functions.
//!
//! Every integrator evaluates the right-hand side through a [`FieldHandle`],
//! which counts evaluations; that count is the cost axis used throughout the
//! crate.

mod adaptive;
mod field;
mod fixed;
mod stability;
mod tableau;
mod trace;

use serde::{Deserialize, Serialize};

pub use adaptive::{error_norm, initial_step_guess, integrate_dopri5, propose_step, StepControlConfig};
pub use field::{FieldHandle, FnField, VectorField};
pub use fixed::{integrate_fixed, step_euler, step_midpoint, step_rk4};
pub use stability::{real_axis_extent, stability_region_grid, stability_value, StabilityGrid};
pub use tableau::ButcherTableau;
pub use trace::{SolveTrace, StepRecord};

use crate::error::{Error, Result};

/// Fixed-step schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedMethod {
    Euler,
    Midpoint,
    Rk4,
}

impl FixedMethod {
    pub const ALL: [FixedMethod; 3] = [FixedMethod::Euler, FixedMethod::Midpoint, FixedMethod::Rk4];

    /// Field evaluations per step.
    pub fn stages(self) -> u64 {
        match self {
            FixedMethod::Euler => 1,
            FixedMethod::Midpoint => 2,
            FixedMethod::Rk4 => 4,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            FixedMethod::Euler => 1,
            FixedMethod::Midpoint => 2,
            FixedMethod::Rk4 => 4,
        }
    }
}

/// All four schemes, for the places (stability analysis, reporting) that treat
/// them uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Midpoint,
    Rk4,
    Dopri5,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Euler, Method::Midpoint, Method::Rk4, Method::Dopri5];

    pub fn name(self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Midpoint => "midpoint",
            Method::Rk4 => "rk4",
            Method::Dopri5 => "dopri5",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "midpoint" => Ok(Method::Midpoint),
            "rk4" => Ok(Method::Rk4),
            "dopri5" => Ok(Method::Dopri5),
            other => Err(Error::InvalidArgument(format!(
                "unknown solver `{other}` (expected euler, midpoint, rk4 or dopri5)"
            ))),
        }
    }
}

impl From<FixedMethod> for Method {
    fn from(m: FixedMethod) -> Self {
        match m {
            FixedMethod::Euler => Method::Euler,
            FixedMethod::Midpoint => Method::Midpoint,
            FixedMethod::Rk4 => Method::Rk4,
        }
    }
}

impl TryFrom<Method> for FixedMethod {
    type Error = Error;

    fn try_from(m: Method) -> Result<Self> {
        match m {
            Method::Euler => Ok(FixedMethod::Euler),
            Method::Midpoint => Ok(FixedMethod::Midpoint),
            Method::Rk4 => Ok(FixedMethod::Rk4),
            Method::Dopri5 => Err(Error::InvalidArgument("dopri5 is not a fixed-step method".into())),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::fmt::Display for FixedMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        Method::from(*self).fmt(f)
    }
}

/// A complete solver choice: a fixed scheme with a step count, or DOPRI5 with
/// its controller settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum SolverSpec {
    Euler { steps: usize },
    Midpoint { steps: usize },
    Rk4 { steps: usize },
    Dopri5(StepControlConfig),
}

impl SolverSpec {
    pub fn fixed(method: FixedMethod, steps: usize) -> Self {
        match method {
            FixedMethod::Euler => SolverSpec::Euler { steps },
            FixedMethod::Midpoint => SolverSpec::Midpoint { steps },
            FixedMethod::Rk4 => SolverSpec::Rk4 { steps },
        }
    }

    pub fn dopri5(atol: f64, rtol: f64) -> Self {
        SolverSpec::Dopri5(StepControlConfig { atol, rtol, ..StepControlConfig::default() })
    }

    pub fn method(&self) -> Method {
        match self {
            SolverSpec::Euler { .. } => Method::Euler,
            SolverSpec::Midpoint { .. } => Method::Midpoint,
            SolverSpec::Rk4 { .. } => Method::Rk4,
            SolverSpec::Dopri5(_) => Method::Dopri5,
        }
    }

    /// `(scheme, steps)` for fixed-step specs.
    pub fn as_fixed(&self) -> Option<(FixedMethod, usize)> {
        match *self {
            SolverSpec::Euler { steps } => Some((FixedMethod::Euler, steps)),
            SolverSpec::Midpoint { steps } => Some((FixedMethod::Midpoint, steps)),
            SolverSpec::Rk4 { steps } => Some((FixedMethod::Rk4, steps)),
            SolverSpec::Dopri5(_) => None,
        }
    }

    /// Short label, e.g. `rk4-20` or `dopri5`.
    pub fn label(&self) -> String {
        match self.as_fixed() {
            Some((m, n)) => format!("{m}-{n}"),
            None => "dopri5".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SolverSpec::Dopri5(cfg) => cfg.validate(),
            _ => {
                let (_, steps) = self.as_fixed().expect("fixed");
                if steps == 0 {
                    return Err(Error::InvalidArgument("step count must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Integrate `f` over `[t0, t1]`.
    pub fn solve<F: VectorField + ?Sized>(
        &self,
        f: &mut FieldHandle<F>,
        y0: &[f64],
        t0: f64,
        t1: f64,
    ) -> Result<SolveTrace> {
        match self {
            SolverSpec::Dopri5(cfg) => integrate_dopri5(f, y0, t0, t1, cfg),
            _ => {
                let (m, n) = self.as_fixed().expect("fixed");
                integrate_fixed(f, y0, t0, t1, n, m)
            }
        }
    }
}

impl std::fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}
