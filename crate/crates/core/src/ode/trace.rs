use std::io::Write;

/// One step attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t_start: f64,
    pub h: f64,
    /// Normalized error estimate; `None` for fixed-step schemes.
    pub err: Option<f64>,
    pub accepted: bool,
    /// Evaluations spent by the run up to and including this attempt.
    pub nfe_cum: u64,
}

/// Per-attempt record of one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub steps: Vec<StepRecord>,
    pub nfe_total: u64,
    pub y_final: Vec<f64>,
}

impl SolveTrace {
    pub fn accepted(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(|s| s.accepted)
    }

    pub fn n_accepted(&self) -> usize {
        self.accepted().count()
    }

    pub fn n_rejected(&self) -> usize {
        self.steps.len() - self.n_accepted()
    }

    pub fn accepted_h_sum(&self) -> f64 {
        self.accepted().map(|s| s.h).sum()
    }

    pub const CSV_HEADER: &'static str = "t,h,err,accepted,nfe_cum";

    /// `t,h,err,accepted,nfe_cum`; `err` is empty for fixed-step runs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for s in &self.steps {
            let err = s.err.map(|e| e.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", s.t_start, s.h, err, u8::from(s.accepted), s.nfe_cum)?;
        }
        Ok(())
    }
}
