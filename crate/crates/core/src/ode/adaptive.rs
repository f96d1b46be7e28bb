use serde::{Deserialize, Serialize};

use super::fixed::check_finite;
use super::{ButcherTableau, FieldHandle, SolveTrace, StepRecord, VectorField};
use crate::error::{Error, Result};

fn default_safety() -> f64 {
    0.9
}
fn default_alpha_min() -> f64 {
    0.2
}
fn default_alpha_max() -> f64 {
    5.0
}
fn default_exponent() -> f64 {
    1.0 / 6.0
}
fn default_max_steps() -> usize {
    100_000
}

/// Step-size controller settings for [`integrate_dopri5`].
///
/// The proposal is `h * min(alpha_max, max(alpha_min, safety * err^-exponent))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControlConfig {
    pub atol: f64,
    pub rtol: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_alpha_min")]
    pub alpha_min: f64,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_init: Option<f64>,
    /// Limit on step attempts, accepted or not.
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

impl Default for StepControlConfig {
    fn default() -> Self {
        Self {
            atol: 1e-5,
            rtol: 1e-5,
            safety: default_safety(),
            alpha_min: default_alpha_min(),
            alpha_max: default_alpha_max(),
            exponent: default_exponent(),
            h_init: None,
            max_steps: default_max_steps(),
        }
    }
}

impl StepControlConfig {
    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        Self { atol, rtol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.atol > 0.0) || !(self.rtol > 0.0) {
            return bad(format!("tolerances must be positive (atol={}, rtol={})", self.atol, self.rtol));
        }
        if !(0.0 < self.alpha_min && self.alpha_min < 1.0 && 1.0 < self.alpha_max) {
            return bad(format!(
                "need 0 < alpha_min < 1 < alpha_max, got {} and {}",
                self.alpha_min, self.alpha_max
            ));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!("safety must lie in (0, 1], got {}", self.safety));
        }
        if !(self.exponent > 0.0) {
            return bad(format!("exponent must be positive, got {}", self.exponent));
        }
        if let Some(h) = self.h_init {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("h_init must be positive, got {h}"));
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be >= 1".into());
        }
        Ok(())
    }
}

/// Weighted RMS norm of a local error estimate:
/// `sqrt(mean_j (e_j / (atol + max(|y_n,j|, |y_next,j|) * rtol))^2)`.
pub fn error_norm(e: &[f64], y_n: &[f64], y_next: &[f64], atol: f64, rtol: f64) -> f64 {
    debug_assert!(e.len() == y_n.len() && e.len() == y_next.len() && !e.is_empty());
    let sum: f64 = e
        .iter()
        .zip(y_n)
        .zip(y_next)
        .map(|((e, a), b)| {
            let r = e / (atol + a.abs().max(b.abs()) * rtol);
            r * r
        })
        .sum();
    (sum / e.len() as f64).sqrt()
}

/// Next step size from the current one and its error norm. `err == 0` takes
/// the `alpha_max` clamp.
pub fn propose_step(h: f64, err: f64, cfg: &StepControlConfig) -> f64 {
    h * growth_factor(err, cfg)
}

fn growth_factor(err: f64, cfg: &StepControlConfig) -> f64 {
    if err == 0.0 {
        return cfg.alpha_max;
    }
    let raw = cfg.safety * err.powf(-cfg.exponent);
    raw.max(cfg.alpha_min).min(cfg.alpha_max)
}

/// Starting step for an adaptive run.
///
/// Returns `cfg.h_init` when set. Otherwise, with `sk_j = atol + rtol |y0_j|`
/// and `rms` the root mean square:
///
/// ```text
/// d0 = rms(y0 / sk),  d1 = rms(f0 / sk)          f0 = f(t0, y0)
/// h0 = 0.01 d0 / d1   (1e-6 if d0 or d1 < 1e-5)
/// d2 = rms((f(t0 + h0, y0 + h0 f0) - f0) / sk) / h0
/// h1 = (0.01 / max(d1, d2))^(1/6)                (max(1e-6, 1e-3 h0) if that max <= 1e-15)
/// h  = min(100 h0, h1)
/// ```
///
/// A field that vanishes at both probes (`d1`, `d2` both <= 1e-15) gets the
/// whole interval. The result is always clipped to `t1 - t0`. Costs two field
/// evaluations.
pub fn initial_step_guess<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &StepControlConfig,
) -> Result<f64> {
    if let Some(h) = cfg.h_init {
        return Ok(h.min(t1 - t0));
    }
    let mut f0 = vec![0.0; y0.len()];
    f.eval(t0, y0, &mut f0);
    check_finite(&f0, t0, 0, "f(t0, y0)")?;
    guess_from_slope(f, y0, &f0, t0, t1, cfg)
}

/// Heuristic above, reusing an already evaluated `f0`; one evaluation.
fn guess_from_slope<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    y0: &[f64],
    f0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &StepControlConfig,
) -> Result<f64> {
    let span = t1 - t0;
    if let Some(h) = cfg.h_init {
        return Ok(h.min(span));
    }
    let d = y0.len() as f64;
    let sk: Vec<f64> = y0.iter().map(|y| cfg.atol + cfg.rtol * y.abs()).collect();
    let rms = |v: &mut dyn Iterator<Item = f64>| (v.map(|x| x * x).sum::<f64>() / d).sqrt();
    let d0 = rms(&mut y0.iter().zip(&sk).map(|(y, s)| y / s));
    let d1 = rms(&mut f0.iter().zip(&sk).map(|(v, s)| v / s));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, v)| y + h0 * v).collect();
    let mut f1 = vec![0.0; y0.len()];
    f.eval(t0 + h0, &y1, &mut f1);
    check_finite(&f1, t0 + h0, 0, "f(t0 + h0, y1)")?;
    let d2 = rms(&mut f1.iter().zip(f0).zip(&sk).map(|((a, b), s)| (a - b) / s)) / h0;
    let dmax = d1.max(d2);
    if dmax <= 1e-15 {
        return Ok(span);
    }
    let h1 = (0.01 / dmax).powf(1.0 / 6.0);
    Ok((100.0 * h0).min(h1).min(span))
}

/// Adaptive Dormand-Prince 5(4) over `[t0, t1]`.
///
/// A step is accepted iff its error norm is `<= 1`. The seventh stage of an
/// accepted step is reused as the first stage of the next (FSAL), so the
/// evaluation count is
/// `1 + 6 * (accepted + rejected) + (1 if h_init is unset else 0)`,
/// the last term being the probe of [`initial_step_guess`]. The final step is
/// shortened to land exactly on `t1`. After a rejection the next proposal may
/// not grow the step until a step is accepted.
pub fn integrate_dopri5<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &StepControlConfig,
) -> Result<SolveTrace> {
    cfg.validate()?;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite t1 > t0, got [{t0}, {t1}]")));
    }
    if y0.len() != f.dim() {
        return Err(Error::LengthMismatch { left: y0.len(), right: f.dim() });
    }
    check_finite(y0, t0, 0, "y0")?;

    let tab = ButcherTableau::dormand_prince();
    let ew = tab.error_weights();
    let dim = y0.len();
    let nfe_start = f.nfe();

    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut y = y0.to_vec();
    let mut stage_y = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let mut e = vec![0.0; dim];

    f.eval(t0, &y, &mut k[0]);
    check_finite(&k[0], t0, 0, "f(t0, y0)")?;
    let mut h = guess_from_slope(f, &y, &k[0].clone(), t0, t1, cfg)?;

    let mut t = t0;
    let mut steps = Vec::new();
    let mut after_reject = false;
    while t < t1 {
        let attempt = steps.len();
        if attempt >= cfg.max_steps {
            return Err(Error::MaxSteps { max_steps: cfg.max_steps, t, h });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if !(h > 0.0) || t + h == t {
            return Err(Error::NonFinite {
                t,
                step: attempt,
                detail: format!("step size underflow (h = {h})"),
            });
        }

        for s in 1..7 {
            for j in 0..dim {
                let mut acc = 0.0;
                for (r, kr) in k.iter().enumerate().take(s) {
                    acc += tab.a[s][r] * kr[j];
                }
                stage_y[j] = y[j] + h * acc;
            }
            let ts = if s >= 5 { t + h } else { t + tab.c[s] * h };
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            f.eval(ts, &stage_y, &mut rest[0]);
            check_finite(&rest[0], ts, attempt, "stage derivative")?;
            if s == 6 {
                // Row 7 of A equals b, so the last stage state is the 5th-order solution.
                y5.copy_from_slice(&stage_y);
            }
        }
        for j in 0..dim {
            let mut acc = 0.0;
            for (w, kr) in ew.iter().zip(k.iter()) {
                acc += w * kr[j];
            }
            e[j] = h * acc;
        }
        let err = error_norm(&e, &y, &y5, cfg.atol, cfg.rtol);
        if !err.is_finite() {
            return Err(Error::NonFinite { t, step: attempt, detail: format!("error norm = {err}") });
        }
        let accepted = err <= 1.0;
        steps.push(StepRecord { t_start: t, h, err: Some(err), accepted, nfe_cum: f.nfe() - nfe_start });

        let mut factor = growth_factor(err, cfg);
        if accepted {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y5);
            k.swap(0, 6);
            if after_reject {
                factor = factor.min(1.0);
            }
            after_reject = false;
        } else {
            factor = factor.min(1.0);
            after_reject = true;
        }
        h *= factor;
    }

    Ok(SolveTrace { steps, nfe_total: f.nfe() - nfe_start, y_final: y })
}
