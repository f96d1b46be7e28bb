use std::io::Write;

use super::{fmt_f64, write_rows};
use crate::cfm::{FlowModel, NetworkField};
use crate::error::{Error, Result};
use crate::numeric::{cond2x2, eig2x2, gaussian_sample, Matrix2, Rng};
use crate::ode::{FieldHandle, SolverSpec, VectorField};

/// `t = 0.0, 0.1, ..., 1.0`.
pub const DEFAULT_TIME_GRID_POINTS: usize = 11;

fn fd_eps(x: f64) -> f64 {
    1e-4 * (1.0 + x.abs())
}

/// Central-difference Jacobian `dv/dx` of a 2D field at `(x, t)`.
pub fn jacobian_fd<F: VectorField + ?Sized>(field: &mut FieldHandle<F>, x: [f64; 2], t: f64) -> Result<Matrix2> {
    if field.dim() != 2 {
        return Err(Error::UnsupportedDimension { what: "jacobian field", expected: 2, got: field.dim() });
    }
    let mut j = Matrix2::ZERO;
    for col in 0..2 {
        let eps = fd_eps(x[col]);
        let mut xp = x;
        let mut xm = x;
        xp[col] += eps;
        xm[col] -= eps;
        let fp = field.eval_vec(t, &xp);
        let fm = field.eval_vec(t, &xm);
        for row in 0..2 {
            j.0[row][col] = (fp[row] - fm[row]) / (2.0 * eps);
        }
    }
    if !j.is_finite() {
        return Err(Error::NonFinite { t, step: 0, detail: format!("jacobian at ({}, {})", x[0], x[1]) });
    }
    Ok(j)
}

/// [`jacobian_fd`] for every row of a 2D batch at once: four batched network
/// calls regardless of the batch size.
pub fn jacobian_fd_network(model: &FlowModel, points: &[f64], t: f64) -> Result<Vec<Matrix2>> {
    if model.dim() != 2 {
        return Err(Error::UnsupportedDimension { what: "jacobian model", expected: 2, got: model.dim() });
    }
    let n = points.len() / 2;
    let mut field = FieldHandle::new(NetworkField::new(&model.params, n)?);
    let mut jac = vec![Matrix2::ZERO; n];
    for col in 0..2 {
        let mut xp = points.to_vec();
        let mut xm = points.to_vec();
        for i in 0..n {
            let eps = fd_eps(points[2 * i + col]);
            xp[2 * i + col] += eps;
            xm[2 * i + col] -= eps;
        }
        let fp = field.eval_vec(t, &xp);
        let fm = field.eval_vec(t, &xm);
        for (i, j) in jac.iter_mut().enumerate() {
            let eps = fd_eps(points[2 * i + col]);
            for row in 0..2 {
                j.0[row][col] = (fp[2 * i + row] - fm[2 * i + row]) / (2.0 * eps);
            }
        }
    }
    if let Some(i) = jac.iter().position(|j| !j.is_finite()) {
        return Err(Error::NonFinite { t, step: 0, detail: format!("jacobian of sample {i}") });
    }
    Ok(jac)
}

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub t: f64,
    pub eig1_re: MeanStd,
    pub eig2_re: MeanStd,
    pub eig1_im: MeanStd,
    pub eig2_im: MeanStd,
    /// Median over samples; `inf` when the median Jacobian is singular.
    pub cond_median: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else if xs[n / 2 - 1] == xs[n / 2] {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn segment_solver(solver: &SolverSpec, span: f64) -> SolverSpec {
    match solver.as_fixed() {
        Some((m, n)) => SolverSpec::fixed(m, ((n as f64 * span).round() as usize).max(1)),
        None => solver.clone(),
    }
}

/// Integrates `n_samples` noise draws through the model with `solver` and, at
/// each time in `time_grid` (ascending, within `[0, 1]`), summarizes the
/// eigenvalues and condition numbers of the 2x2 Jacobians of the field.
/// Everything is measured in the model's standardized coordinates, where the
/// sampling ODE lives. A fixed-step solver keeps its step density on each
/// segment between grid times.
pub fn spectrum_along_trajectory(
    model: &FlowModel,
    n_samples: usize,
    time_grid: &[f64],
    solver: &SolverSpec,
    rng: &mut Rng,
) -> Result<Vec<SpectrumRow>> {
    if model.dim() != 2 {
        return Err(Error::UnsupportedDimension { what: "spectrum model", expected: 2, got: model.dim() });
    }
    if n_samples == 0 || time_grid.is_empty() {
        return Err(Error::InvalidArgument("need n_samples >= 1 and a non-empty time grid".into()));
    }
    if time_grid.iter().any(|t| !(0.0..=1.0).contains(t)) || time_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing within [0, 1]".into()));
    }
    solver.validate()?;
    let mut x = gaussian_sample(rng, n_samples, 2);
    let mut t_now = 0.0;
    let mut rows = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        if t > t_now {
            let mut field = FieldHandle::new(NetworkField::new(&model.params, n_samples)?);
            let seg = segment_solver(solver, t - t_now);
            x = seg
                .solve(&mut field, &x, t_now, t)
                .map_err(|e| e.context(format!("trajectory segment [{t_now}, {t}]")))?
                .y_final;
            t_now = t;
        }
        let jac = jacobian_fd_network(model, &x, t)?;
        let mut e1r = Vec::with_capacity(n_samples);
        let mut e2r = Vec::with_capacity(n_samples);
        let mut e1i = Vec::with_capacity(n_samples);
        let mut e2i = Vec::with_capacity(n_samples);
        let mut conds = Vec::with_capacity(n_samples);
        for j in &jac {
            let (a, b) = eig2x2(j);
            e1r.push(a.re);
            e2r.push(b.re);
            e1i.push(a.im);
            e2i.push(b.im);
            conds.push(cond2x2(j));
        }
        rows.push(SpectrumRow {
            t,
            eig1_re: MeanStd::of(&e1r),
            eig2_re: MeanStd::of(&e2r),
            eig1_im: MeanStd::of(&e1i),
            eig2_im: MeanStd::of(&e2i),
            cond_median: median(conds),
        });
    }
    Ok(rows)
}

pub const SPECTRUM_CSV_HEADER: &str = "t,eig1_re_mean,eig1_re_std,eig2_re_mean,eig2_re_std,cond_median";

pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumRow], w: W) -> std::io::Result<()> {
    write_rows(
        w,
        SPECTRUM_CSV_HEADER,
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.eig1_re.mean),
                fmt_f64(r.eig1_re.std),
                fmt_f64(r.eig2_re.mean),
                fmt_f64(r.eig2_re.std),
                fmt_f64(r.cond_median)
            )
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Normalization;
    use crate::nn::{init_params, MlpConfig, MlpParams};

    #[test]
    fn linear_field_is_recovered() {
        let a = [[1.5, -0.25], [3.0, 0.7]];
        let mut f = FieldHandle::from_fn(2, move |_t, y: &[f64], dy: &mut [f64]| {
            dy[0] = a[0][0] * y[0] + a[0][1] * y[1];
            dy[1] = a[1][0] * y[0] + a[1][1] * y[1];
        });
        let j = jacobian_fd(&mut f, [0.3, -2.0], 0.5).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((j.0[r][c] - a[r][c]).abs() < 1e-6);
            }
        }
        assert_eq!(f.nfe(), 4);
    }

    #[test]
    fn analytic_nonlinear_field() {
        let mut f = FieldHandle::from_fn(2, |_t, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1] * y[1];
            dy[1] = y[0];
        });
        let j = jacobian_fd(&mut f, [0.0, 1.0], 0.0).unwrap();
        let want = [[0.0, 2.0], [1.0, 0.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((j.0[r][c] - want[r][c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_field_is_zero() {
        let mut f = FieldHandle::from_fn(2, |_t, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 3.0;
            dy[1] = -7.0;
        });
        let j = jacobian_fd(&mut f, [10.0, -4.0], 0.0).unwrap();
        assert!(j.0.iter().flatten().all(|v| v.abs() < 1e-8));
    }

    fn random_model(seed: u64) -> FlowModel {
        let cfg = MlpConfig { data_dim: 2, hidden: 16, n_blocks: 2, time_embed_dim: 8 };
        let mut params = init_params(cfg, &mut Rng::new(seed)).unwrap();
        for v in params.tensor_mut("output.weight").unwrap().data.iter_mut() {
            *v = 0.3;
        }
        FlowModel { params, normalization: Normalization::identity(2) }
    }

    #[test]
    fn batched_matches_single_point() {
        let model = random_model(4);
        let pts = gaussian_sample(&mut Rng::new(9), 5, 2);
        let batch = jacobian_fd_network(&model, &pts, 0.35).unwrap();
        for (i, jb) in batch.iter().enumerate() {
            let mut f = FieldHandle::new(NetworkField::new(&model.params, 1).unwrap());
            let j = jacobian_fd(&mut f, [pts[2 * i], pts[2 * i + 1]], 0.35).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((j.0[r][c] - jb.0[r][c]).abs() <= 1e-9 * (1.0 + j.0[r][c].abs()));
                }
            }
        }
    }

    #[test]
    fn zero_field_spectrum() {
        let cfg = MlpConfig { data_dim: 2, hidden: 8, n_blocks: 1, time_embed_dim: 4 };
        let params = init_params(cfg, &mut Rng::new(1)).unwrap();
        let model = FlowModel { params, normalization: Normalization::identity(2) };
        let grid: Vec<f64> = (0..DEFAULT_TIME_GRID_POINTS).map(|k| k as f64 / 10.0).collect();
        let rows = spectrum_along_trajectory(&model, 20, &grid, &SolverSpec::fixed(crate::ode::FixedMethod::Rk4, 100), &mut Rng::new(2)).unwrap();
        assert_eq!(rows.len(), 11);
        for r in &rows {
            assert_eq!(r.eig1_re.mean, 0.0);
            assert_eq!(r.eig2_re.std, 0.0);
            assert_eq!(r.cond_median, f64::INFINITY);
        }
        let mut buf = Vec::new();
        write_spectrum_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with(SPECTRUM_CSV_HEADER));
        assert!(s.lines().nth(1).unwrap().ends_with(",inf"));
    }

    #[test]
    fn rejects_non_2d_models() {
        let cfg = MlpConfig { data_dim: 3, hidden: 8, n_blocks: 1, time_embed_dim: 4 };
        let params: MlpParams = init_params(cfg, &mut Rng::new(1)).unwrap();
        let model = FlowModel { params, normalization: Normalization::identity(3) };
        let err = spectrum_along_trajectory(&model, 4, &[0.0], &SolverSpec::fixed(crate::ode::FixedMethod::Rk4, 10), &mut Rng::new(1));
        assert!(matches!(err, Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn median_and_moments() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(vec![f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }
}
