use std::io::Write;

use super::{fmt_f64, write_rows};
use crate::error::{Error, Result};

/// A run counts as diverged once `|y_n|` exceeds this multiple of `|y_0|`.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoTrace {
    pub h: f64,
    /// `y_0, y_1, ..., y_N`.
    pub ys: Vec<f64>,
    pub diverged: bool,
}

impl DemoTrace {
    pub const CSV_HEADER: &'static str = "h,n,y";

    pub fn write_csv<W: Write>(traces: &[DemoTrace], w: W) -> std::io::Result<()> {
        write_rows(
            w,
            Self::CSV_HEADER,
            traces.iter().flat_map(|tr| tr.ys.iter().enumerate().map(move |(n, y)| format!("{},{n},{}", fmt_f64(tr.h), fmt_f64(*y)))),
        )
    }
}

/// Forward Euler on `y' = lambda y`, `y(0) = 1`, for each step size, over
/// `min(ceil(t1 / h), n_report)` steps.
pub fn stability_demo(lambda: f64, h_values: &[f64], t1: f64, n_report: usize) -> Result<Vec<DemoTrace>> {
    if !(lambda < 0.0) {
        return Err(Error::InvalidArgument(format!("stability demo needs lambda < 0, got {lambda}")));
    }
    if !(t1 > 0.0) || n_report == 0 {
        return Err(Error::InvalidArgument("need t1 > 0 and n_report >= 1".into()));
    }
    let y0: f64 = 1.0;
    h_values
        .iter()
        .map(|&h| {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
            }
            let steps = ((t1 / h).ceil() as usize).clamp(1, n_report);
            let mut ys = Vec::with_capacity(steps + 1);
            let mut y = y0;
            ys.push(y);
            let mut diverged = false;
            for _ in 0..steps {
                y += h * lambda * y;
                ys.push(y);
                diverged |= y.abs() > DIVERGENCE_FACTOR * y0.abs();
            }
            Ok(DemoTrace { h, ys, diverged })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_unstable_and_neutral() {
        let tr = stability_demo(-15.0, &[0.1, 1.0 / 6.0, 2.0 / 15.0], 10.0, 200).unwrap();
        let stable = &tr[0];
        assert!(!stable.diverged);
        assert!((stable.ys[1] + 0.5).abs() < 1e-15);
        assert!(stable.ys.windows(2).all(|w| w[1].abs() < w[0].abs()));
        assert!(tr[1].diverged);
        assert!(tr[1].ys.len() <= 201);
        assert!(!tr[2].diverged);
        assert!(tr[2].ys.iter().all(|y| (y.abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn csv_rows() {
        let tr = stability_demo(-1.0, &[0.5], 1.0, 10).unwrap();
        let mut buf = Vec::new();
        DemoTrace::write_csv(&tr, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "h,n,y\n0.5,0,1\n0.5,1,0.5\n0.5,2,0.25\n");
    }

    #[test]
    fn rejects_growth_problems() {
        assert!(stability_demo(1.0, &[0.1], 1.0, 10).is_err());
    }
}
