use crate::error::{Error, Result};
use crate::ode::SolveTrace;

/// Accepted DOPRI5 steps bucketed by start time over `[t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    pub t0: f64,
    pub t1: f64,
    pub counts: Vec<usize>,
    /// Mean accepted `h` per bin; `None` for empty bins.
    pub mean_h: Vec<Option<f64>>,
    /// Every accepted `h`, in time order.
    pub accepted_h: Vec<f64>,
}

impl StepSummary {
    pub fn bin_edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|k| self.t0 + (self.t1 - self.t0) * k as f64 / n as f64).collect()
    }
}

pub fn dopri_step_summary(trace: &SolveTrace, bins: usize) -> Result<StepSummary> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    let accepted: Vec<_> = trace.accepted().collect();
    let (Some(first), Some(last)) = (accepted.first(), accepted.last()) else {
        return Err(Error::InvalidArgument("trace has no accepted steps".into()));
    };
    let t0 = first.t_start;
    let t1 = last.t_start + last.h;
    let span = t1 - t0;
    let mut counts = vec![0usize; bins];
    let mut sums = vec![0.0; bins];
    for s in &accepted {
        let k = (((s.t_start - t0) / span * bins as f64).floor() as usize).min(bins - 1);
        counts[k] += 1;
        sums[k] += s.h;
    }
    let mean_h = counts.iter().zip(&sums).map(|(&c, &s)| (c > 0).then(|| s / c as f64)).collect();
    Ok(StepSummary { t0, t1, counts, mean_h, accepted_h: accepted.iter().map(|s| s.h).collect() })
}

/// Mean `h` over accepted steps with `lo <= t_start < hi`.
pub fn mean_accepted_h(trace: &SolveTrace, lo: f64, hi: f64) -> Option<f64> {
    let hs: Vec<f64> = trace.accepted().filter(|s| s.t_start >= lo && s.t_start < hi).map(|s| s.h).collect();
    (!hs.is_empty()).then(|| hs.iter().sum::<f64>() / hs.len() as f64)
}
