use super::{FieldHandle, FixedMethod, SolveTrace, StepRecord, VectorField};
use crate::error::{Error, Result};

pub(crate) fn check_finite(v: &[f64], t: f64, step: usize, what: &str) -> Result<()> {
    if let Some(j) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            t,
            step,
            detail: format!("{what}[{j}] = {}", v[j]),
        });
    }
    Ok(())
}

fn eval_checked<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
    step: usize,
) -> Result<()> {
    f.eval(t, y, dy);
    check_finite(dy, t, step, "f(t, y)")
}

/// Scratch buffers for the fixed-step schemes.
struct Stages {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(d: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; d]), tmp: vec![0.0; d] }
    }
}

fn axpy_into(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

fn advance<F: VectorField + ?Sized>(
    method: FixedMethod,
    f: &mut FieldHandle<F>,
    t: f64,
    y: &mut [f64],
    h: f64,
    s: &mut Stages,
    step: usize,
) -> Result<()> {
    let [k1, k2, k3, k4] = &mut s.k;
    let tmp = &mut s.tmp;
    eval_checked(f, t, y, k1, step)?;
    match method {
        FixedMethod::Euler => {
            for (yi, k) in y.iter_mut().zip(k1.iter()) {
                *yi += h * k;
            }
        }
        FixedMethod::Midpoint => {
            axpy_into(tmp, y, 0.5 * h, k1);
            eval_checked(f, t + 0.5 * h, tmp, k2, step)?;
            for (yi, k) in y.iter_mut().zip(k2.iter()) {
                *yi += h * k;
            }
        }
        FixedMethod::Rk4 => {
            axpy_into(tmp, y, 0.5 * h, k1);
            eval_checked(f, t + 0.5 * h, tmp, k2, step)?;
            axpy_into(tmp, y, 0.5 * h, k2);
            eval_checked(f, t + 0.5 * h, tmp, k3, step)?;
            axpy_into(tmp, y, h, k3);
            eval_checked(f, t + h, tmp, k4, step)?;
            let w = h / 6.0;
            for i in 0..y.len() {
                y[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    check_finite(y, t + h, step, "y")
}

fn single_step<F: VectorField + ?Sized>(
    method: FixedMethod,
    f: &mut FieldHandle<F>,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be finite and non-zero, got {h}")));
    }
    check_finite(y, t, 0, "y")?;
    let mut out = y.to_vec();
    advance(method, f, t, &mut out, h, &mut Stages::new(y.len()), 0)?;
    Ok(out)
}

/// `y + h f(t, y)`; one evaluation.
pub fn step_euler<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    single_step(FixedMethod::Euler, f, t, y, h)
}

/// Explicit midpoint: `k1 = f(t, y)`, `k2 = f(t + h/2, y + h/2 k1)`,
/// `y + h k2`; two evaluations.
pub fn step_midpoint<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    single_step(FixedMethod::Midpoint, f, t, y, h)
}

/// Classical RK4 with weights `h/6 (k1 + 2k2 + 2k3 + k4)`; four evaluations.
pub fn step_rk4<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    single_step(FixedMethod::Rk4, f, t, y, h)
}

/// `n_steps` uniform steps of size `(t1 - t0) / n_steps`.
///
/// Step `n` starts at `t0 + n h` (not at an accumulated sum), so the final time
/// is exactly `t1`.
pub fn integrate_fixed<F: VectorField + ?Sized>(
    f: &mut FieldHandle<F>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    n_steps: usize,
    method: FixedMethod,
) -> Result<SolveTrace> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite t1 > t0, got [{t0}, {t1}]")));
    }
    if y0.len() != f.dim() {
        return Err(Error::LengthMismatch { left: y0.len(), right: f.dim() });
    }
    check_finite(y0, t0, 0, "y0")?;
    let nfe_start = f.nfe();
    let h = (t1 - t0) / n_steps as f64;
    let mut y = y0.to_vec();
    let mut stages = Stages::new(y.len());
    let mut steps = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let t = t0 + n as f64 * h;
        advance(method, f, t, &mut y, h, &mut stages, n)?;
        steps.push(StepRecord {
            t_start: t,
            h,
            err: None,
            accepted: true,
            nfe_cum: f.nfe() - nfe_start,
        });
    }
    Ok(SolveTrace { steps, nfe_total: f.nfe() - nfe_start, y_final: y })
}
