use std::io::Write;

use super::{fmt_f64, write_rows};
use crate::error::{Error, Result};
use crate::ode::{integrate_dopri5, integrate_fixed, FieldHandle, FixedMethod, Method, StepControlConfig};

/// Errors at or below this are treated as round-off and left out of slope fits.
pub const ERROR_FLOOR: f64 = 1e-12;

/// `y' = lambda y`, `y(0) = y0` replicated over `dim` decoupled components,
/// integrated to `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayProblem {
    pub lambda: f64,
    pub y0: f64,
    pub t1: f64,
    pub dim: usize,
}

impl Default for DecayProblem {
    fn default() -> Self {
        Self { lambda: -1.0, y0: 1.0, t1: 1.0, dim: 1 }
    }
}

impl DecayProblem {
    pub fn exact(&self) -> f64 {
        self.y0 * (self.lambda * self.t1).exp()
    }

    fn field(&self) -> FieldHandle<impl crate::ode::VectorField> {
        let lambda = self.lambda;
        FieldHandle::from_fn(self.dim, move |_t, y: &[f64], dy: &mut [f64]| {
            for (d, v) in dy.iter_mut().zip(y) {
                *d = lambda * v;
            }
        })
    }

    /// Max-norm distance of `y` from the exact endpoint.
    fn global_error(&self, y: &[f64]) -> f64 {
        let exact = self.exact();
        y.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub method: Method,
    pub h: f64,
    pub global_error: f64,
    pub nfe: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub slopes: Vec<(Method, f64)>,
}

impl ConvergenceStudy {
    pub fn slope(&self, m: Method) -> Option<f64> {
        self.slopes.iter().find(|(k, _)| *k == m).map(|(_, s)| *s)
    }

    pub const CSV_HEADER: &'static str = "method,h,error";

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_rows(
            w,
            Self::CSV_HEADER,
            self.rows.iter().map(|r| format!("{},{},{}", r.method, fmt_f64(r.h), fmt_f64(r.global_error))),
        )
    }
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    if let Some(&(h, e)) = pairs.iter().find(|(h, e)| !(*h > 0.0) || !(*e > 0.0)) {
        return Err(Error::InvalidArgument(format!("log-log fit needs positive values, got ({h}, {e})")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("step sizes must not all be equal".into()));
    }
    Ok(sxy / sxx)
}

fn slope_above_floor(rows: &[ConvergenceRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.global_error > ERROR_FLOOR).map(|r| (r.h, r.global_error)).collect();
    fit_loglog_slope(&pts)
}

/// Runs every fixed-step method at every `h` (rounded to divide `t1`) and fits
/// one slope per method over the errors above [`ERROR_FLOOR`].
pub fn convergence_study(problem: &DecayProblem, methods: &[FixedMethod], h_list: &[f64]) -> Result<ConvergenceStudy> {
    let mut distinct: Vec<f64> = h_list.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 || distinct.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidArgument("need at least 4 distinct positive step sizes".into()));
    }
    if (distinct[distinct.len() - 1] / distinct[0]).log10() < 2.0 {
        return Err(Error::InvalidArgument("step sizes must span at least two decades".into()));
    }
    if problem.dim == 0 || !(problem.t1 > 0.0) {
        return Err(Error::InvalidArgument("need dim >= 1 and t1 > 0".into()));
    }
    let y0 = vec![problem.y0; problem.dim];
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for &m in methods {
        let mut mrows = Vec::new();
        for &h in h_list {
            let n = (problem.t1 / h).round().max(1.0) as usize;
            let tr = integrate_fixed(&mut problem.field(), &y0, 0.0, problem.t1, n, m)?;
            mrows.push(ConvergenceRow {
                method: m.into(),
                h: problem.t1 / n as f64,
                global_error: problem.global_error(&tr.y_final),
                nfe: tr.nfe_total,
            });
        }
        slopes.push((Method::from(m), slope_above_floor(&mrows)?));
        rows.extend(mrows);
    }
    Ok(ConvergenceStudy { rows, slopes })
}

/// DOPRI5 counterpart: sweeps `atol = rtol = tol` and reports the mean
/// accepted step `t1 / accepted` as the step size.
pub fn dopri_convergence(problem: &DecayProblem, tolerances: &[f64]) -> Result<ConvergenceStudy> {
    let y0 = vec![problem.y0; problem.dim];
    let mut rows = Vec::new();
    for &tol in tolerances {
        let cfg = StepControlConfig::with_tolerances(tol, tol);
        let tr = integrate_dopri5(&mut problem.field(), &y0, 0.0, problem.t1, &cfg)?;
        rows.push(ConvergenceRow {
            method: Method::Dopri5,
            h: problem.t1 / tr.n_accepted() as f64,
            global_error: problem.global_error(&tr.y_final),
            nfe: tr.nfe_total,
        });
    }
    let slope = slope_above_floor(&rows)?;
    Ok(ConvergenceStudy { rows, slopes: vec![(Method::Dopri5, slope)] })
}
