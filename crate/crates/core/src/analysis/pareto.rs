use std::io::Write;

use super::{fmt_f64, swd, write_rows};
use crate::cfm::{sample, FlowModel};
use crate::data::{generate, DatasetSpec};
use crate::error::{Error, Result};
use crate::numeric::Rng;
use crate::ode::{FixedMethod, Method, SolverSpec};

const STREAM_REFERENCE: u64 = 10;
const STREAM_NOISE: u64 = 11;
const STREAM_PROJECTIONS: u64 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoRow {
    pub method: Method,
    /// `None` for the adaptive solver.
    pub steps: Option<usize>,
    pub nfe: u64,
    pub swd: f64,
}

/// A grid entry whose sampling run failed; the rest of the grid still runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFailure {
    pub solver: SolverSpec,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoReport {
    /// Sorted by NFE, ties by SWD.
    pub rows: Vec<ParetoRow>,
    pub failures: Vec<ParetoFailure>,
}

impl ParetoReport {
    pub fn find(&self, method: Method, steps: Option<usize>) -> Option<&ParetoRow> {
        self.rows.iter().find(|r| r.method == method && r.steps == steps)
    }

    /// Rows not dominated by a row that is no more expensive and strictly better.
    pub fn frontier(&self) -> Vec<&ParetoRow> {
        let mut best = f64::INFINITY;
        let mut out = Vec::new();
        for r in &self.rows {
            if r.swd < best {
                best = r.swd;
                out.push(r);
            }
        }
        out
    }
}

/// Euler 10-200 steps, Midpoint 10-100, RK4 5-50, DOPRI5 at `atol = rtol = 1e-5`.
pub fn default_grid() -> Vec<SolverSpec> {
    let mut g = Vec::new();
    for n in [10, 20, 50, 100, 200] {
        g.push(SolverSpec::fixed(FixedMethod::Euler, n));
    }
    for n in [10, 20, 50, 100] {
        g.push(SolverSpec::fixed(FixedMethod::Midpoint, n));
    }
    for n in [5, 10, 20, 50] {
        g.push(SolverSpec::fixed(FixedMethod::Rk4, n));
    }
    g.push(SolverSpec::dopri5(1e-5, 1e-5));
    g
}

/// Samples `n_samples` points with every solver in `grid` and scores each batch
/// by SWD against a fresh `n_samples`-point draw of `dataset`.
///
/// All rows share the same starting noise, reference draw and projection
/// directions (all derived from `seed`), so differences between rows come
/// from the solver alone.
pub fn pareto_benchmark(
    model: &FlowModel,
    dataset: &DatasetSpec,
    grid: &[SolverSpec],
    n_samples: usize,
    n_projections: usize,
    seed: u64,
) -> Result<ParetoReport> {
    let dim = model.dim();
    if dataset.dim() != dim {
        return Err(Error::UnsupportedDimension { what: "benchmark dataset", expected: dim, got: dataset.dim() });
    }
    let reference_spec = DatasetSpec { n: n_samples, ..dataset.clone() };
    let reference = generate(&reference_spec, &mut Rng::substream(seed, STREAM_REFERENCE))?;
    let noise = Rng::substream(seed, STREAM_NOISE);
    let projections = Rng::substream(seed, STREAM_PROJECTIONS);

    let mut report = ParetoReport::default();
    for spec in grid {
        let row = sample(model, spec, n_samples, &mut noise.clone()).and_then(|(points, trace)| {
            let d = swd(&points, &reference.points, dim, n_projections, &mut projections.clone())?;
            Ok(ParetoRow { method: spec.method(), steps: spec.as_fixed().map(|(_, n)| n), nfe: trace.nfe_total, swd: d })
        });
        match row {
            Ok(r) => report.rows.push(r),
            Err(e) => report.failures.push(ParetoFailure { solver: spec.clone(), message: e.to_string() }),
        }
    }
    report.rows.sort_by(|a, b| a.nfe.cmp(&b.nfe).then(a.swd.total_cmp(&b.swd)));
    Ok(report)
}

pub const PARETO_CSV_HEADER: &str = "method,steps,nfe,swd";

pub fn write_pareto_csv<W: Write>(rows: &[ParetoRow], w: W) -> std::io::Result<()> {
    write_rows(
        w,
        PARETO_CSV_HEADER,
        rows.iter().map(|r| {
            let steps = r.steps.map_or_else(|| "adaptive".to_string(), |n| n.to_string());
            format!("{},{steps},{},{}", r.method, r.nfe, fmt_f64(r.swd))
        }),
    )
}
