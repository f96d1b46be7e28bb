//! Measurements: sliced Wasserstein distance, convergence-order fits, NFE vs
//! quality sweeps, Jacobian spectra along sampling paths, DOPRI5 step-size
//! summaries and the explicit-Euler stability demonstration.

mod convergence;
mod demo;
mod jacobian;
mod pareto;
mod steps;
mod swd;

pub use convergence::{
    convergence_study, dopri_convergence, fit_loglog_slope, ConvergenceRow, ConvergenceStudy, DecayProblem,
    ERROR_FLOOR,
};
pub use demo::{stability_demo, DemoTrace, DIVERGENCE_FACTOR};
pub use jacobian::{
    jacobian_fd, jacobian_fd_network, spectrum_along_trajectory, write_spectrum_csv, MeanStd, SpectrumRow,
    DEFAULT_TIME_GRID_POINTS,
};
pub use pareto::{default_grid, pareto_benchmark, write_pareto_csv, ParetoFailure, ParetoReport, ParetoRow};
pub use steps::{dopri_step_summary, mean_accepted_h, StepSummary};
pub use swd::swd;

use std::io::Write;

/// `inf` for infinities, shortest round-trip decimal otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        v.to_string()
    }
}

pub(crate) fn write_rows<W: Write>(mut w: W, header: &str, rows: impl IntoIterator<Item = String>) -> std::io::Result<()> {
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}
