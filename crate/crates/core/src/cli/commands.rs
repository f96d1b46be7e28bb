use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::svg::{CellLayer, Mark, Plot, Series};
use super::{BenchmarkArgs, ConvergenceArgs, DopriTraceArgs, JacobianArgs, RunConfig, SampleArgs, StabilityArgs, TrainArgs};
use crate::analysis::{
    convergence_study, dopri_convergence, dopri_step_summary, fmt_f64, pareto_benchmark, spectrum_along_trajectory,
    stability_demo, write_pareto_csv, write_spectrum_csv, ConvergenceStudy, DecayProblem, DemoTrace, ParetoReport,
    ParetoRow,
};
use crate::cfm::{sample as cfm_sample, train_with, FlowModel, TrainConfig};
use crate::data::write_points_csv;
use crate::error::{io_err, Error, Result};
use crate::nn::ModelFile;
use crate::numeric::Rng;
use crate::ode::{real_axis_extent, stability_region_grid, FixedMethod, Method, SolverSpec, StabilityGrid};

/// Substream of the run seed used for sampling noise.
const STREAM_SAMPLE: u64 = 20;

pub(super) struct Ctx {
    pub config: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out).map_err(io_err(&self.out))?;
        let path = self.out.join(name);
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    fn write_with(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(io_err(self.out.join(name)))?;
        self.write(name, &buf)
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.config.train_config() }
    }
}

fn load_model(path: &Path) -> Result<FlowModel> {
    let file = ModelFile::load(path)?;
    FlowModel::from_file(&file).map_err(|e| e.context(format!("loading {}", path.display())))
}

fn train_model(cfg: &TrainConfig) -> Result<(FlowModel, ModelFile, Vec<f64>)> {
    let start = Instant::now();
    let every = (cfg.epochs / 10).max(1);
    let out = train_with(cfg, |epoch, loss| {
        if (epoch + 1) % every == 0 || epoch + 1 == cfg.epochs {
            eprintln!("epoch {:>4}/{} loss {loss:.5}", epoch + 1, cfg.epochs);
        }
    })?;
    eprintln!("trained {} parameters in {:.1}s", cfg.mlp.param_count(), start.elapsed().as_secs_f64());
    let file = out.to_file(cfg);
    Ok((out.model, file, out.losses))
}

pub(super) fn convergence(ctx: &Ctx, a: &ConvergenceArgs) -> Result<()> {
    let problem = DecayProblem { lambda: a.lambda, dim: a.dim, ..DecayProblem::default() };
    let h_list: Vec<f64> = if a.h.is_empty() { (3..=10).map(|k| 2f64.powi(-k)).collect() } else { a.h.clone() };
    let fixed = convergence_study(&problem, &FixedMethod::ALL, &h_list)?;
    let dopri = dopri_convergence(&problem, &a.tolerances)?;
    let all = ConvergenceStudy {
        rows: fixed.rows.iter().chain(&dopri.rows).cloned().collect(),
        slopes: fixed.slopes.iter().chain(&dopri.slopes).copied().collect(),
    };
    for (m, s) in &all.slopes {
        println!("{m:<9} slope {s:.4}");
    }
    ctx.write_with("convergence.csv", |w| all.write_csv(w))?;

    let mut plot = Plot::new(&format!("Global error vs step size (dim = {})", a.dim), "h", "global error").log_axes(true, true);
    for m in Method::ALL {
        let pts = all.rows.iter().filter(|r| r.method == m).map(|r| (r.h, r.global_error)).collect();
        let slope = all.slope(m).map_or(String::new(), |s| format!(" ({s:.2})"));
        plot.series.push(Series::new(format!("{m}{slope}"), pts, Mark::LinePoints));
    }
    ctx.write("convergence.svg", plot.render().as_bytes())?;
    Ok(())
}

/// Horizontal runs of stable samples, one cell per run.
fn region_cells(g: &StabilityGrid) -> Vec<[f64; 4]> {
    let (dr, di) = (g.d_re(), g.d_im());
    let mut cells = Vec::new();
    for i in 0..g.n_im {
        let mut j = 0;
        while j < g.n_re {
            if !g.is_inside(i, j) {
                j += 1;
                continue;
            }
            let start = j;
            while j < g.n_re && g.is_inside(i, j) {
                j += 1;
            }
            cells.push([g.re_at(start) - dr / 2.0, g.im_at(i) - di / 2.0, g.re_at(j - 1) + dr / 2.0, g.im_at(i) + di / 2.0]);
        }
    }
    cells
}

pub(super) fn stability(ctx: &Ctx, a: &StabilityArgs) -> Result<()> {
    if !(a.re_max > a.re_min && a.im_max > a.im_min) || !(a.resolution > 0.0) {
        return Err(Error::InvalidArgument("need re_max > re_min, im_max > im_min and resolution > 0".into()));
    }
    let n_re = ((a.re_max - a.re_min) / a.resolution).round() as usize + 1;
    let n_im = ((a.im_max - a.im_min) / a.resolution).round() as usize + 1;
    if n_re < 2 || n_im < 2 {
        return Err(Error::InvalidArgument("resolution is coarser than the grid".into()));
    }
    let grids: Vec<StabilityGrid> =
        Method::ALL.iter().map(|&m| stability_region_grid(m, (a.re_min, a.re_max), (a.im_min, a.im_max), (n_re, n_im))).collect();
    for g in &grids {
        let b = g.real_axis_boundary().map_or("none".to_string(), |b| format!("{b:.4}"));
        println!("{:<9} real-axis boundary {b} (exact {:.4}, grid step {:.4})", g.method, real_axis_extent(g.method), g.d_re());
    }
    ctx.write_with("stability_regions.csv", |w| {
        writeln!(w, "method,re,im,abs_r,inside")?;
        for g in &grids {
            for i in 0..g.n_im {
                for j in 0..g.n_re {
                    let m = g.magnitude[i * g.n_re + j];
                    writeln!(w, "{},{},{},{},{}", g.method, fmt_f64(g.re_at(j)), fmt_f64(g.im_at(i)), fmt_f64(m), u8::from(g.is_inside(i, j)))?;
                }
            }
        }
        Ok(())
    })?;
    let mut plot = Plot::new("Stability regions |R(z)| <= 1", "Re z", "Im z");
    plot.x_range = Some((a.re_min, a.re_max));
    plot.y_range = Some((a.im_min, a.im_max));
    for g in &grids {
        plot.layers.push(CellLayer { label: g.method.to_string(), cells: region_cells(g) });
    }
    ctx.write("stability.svg", plot.render().as_bytes())?;

    let traces = stability_demo(a.lambda, &a.demo_h, a.t1, a.n_report)?;
    for t in &traces {
        let last = t.ys.last().copied().unwrap_or(1.0);
        println!("euler h = {:.6}: |y_N| = {:.3e} after {} steps, diverged = {}", t.h, last.abs(), t.ys.len() - 1, t.diverged);
    }
    ctx.write_with("stability_demo.csv", |w| DemoTrace::write_csv(&traces, w))?;
    let mut plot = Plot::new(&format!("Explicit Euler on y' = {}y", a.lambda), "n", "|y_n|").log_axes(false, true);
    for t in &traces {
        let pts = t.ys.iter().enumerate().map(|(n, y)| (n as f64, y.abs())).collect();
        plot.series.push(Series::new(format!("h = {:.4}", t.h), pts, Mark::LinePoints));
    }
    ctx.write("stability_demo.svg", plot.render().as_bytes())?;
    Ok(())
}

fn write_losses(ctx: &Ctx, losses: &[f64]) -> Result<()> {
    ctx.write_with("losses.csv", |w| {
        writeln!(w, "epoch,loss")?;
        for (e, l) in losses.iter().enumerate() {
            writeln!(w, "{},{}", e + 1, fmt_f64(*l))?;
        }
        Ok(())
    })?;
    let mut plot = Plot::new("Training loss", "epoch", "loss").log_axes(false, true);
    plot.series.push(Series::new("CFM loss", losses.iter().enumerate().map(|(e, l)| ((e + 1) as f64, *l)).collect(), Mark::Line));
    ctx.write("losses.svg", plot.render().as_bytes())?;
    Ok(())
}

pub(super) fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let mut cfg = ctx.train_config();
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(h) = a.hidden {
        cfg.mlp.hidden = h;
    }
    let (_, file, losses) = train_model(&cfg)?;
    println!("final loss {}", fmt_f64(file.training_meta.final_loss));
    ctx.write("model.json", file.to_json()?.as_bytes())?;
    write_losses(ctx, &losses)
}

fn scatter(title: &str, points: &[f64], dim: usize) -> Plot {
    let mut plot = Plot::new(title, "x0", "x1");
    let pts = points.chunks_exact(dim).map(|r| (r[0], r.get(1).copied().unwrap_or(0.0))).collect();
    plot.series.push(Series::new("samples", pts, Mark::Points));
    plot
}

pub(super) fn sample(ctx: &Ctx, a: &SampleArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let spec = match a.solver {
        Method::Dopri5 => SolverSpec::dopri5(a.atol, a.rtol),
        m => SolverSpec::fixed(FixedMethod::try_from(m)?, a.steps),
    };
    spec.validate()?;
    let (points, trace) = cfm_sample(&model, &spec, a.n, &mut Rng::substream(ctx.seed, STREAM_SAMPLE))?;
    println!("{spec}: nfe = {}, accepted = {}, rejected = {}", trace.nfe_total, trace.n_accepted(), trace.n_rejected());
    let dim = model.dim();
    ctx.write_with("samples.csv", |w| write_points_csv(w, &points, dim, None))?;
    ctx.write_with("trace.csv", |w| trace.write_csv(w))?;
    ctx.write("samples.svg", scatter(&format!("Samples ({spec}, NFE {})", trace.nfe_total), &points, dim).render().as_bytes())?;
    Ok(())
}

fn pareto_plot(title: &str, rows: &[ParetoRow]) -> Plot {
    let mut plot = Plot::new(title, "NFE", "SWD").log_axes(true, false);
    for m in Method::ALL {
        let sel: Vec<&ParetoRow> = rows.iter().filter(|r| r.method == m).collect();
        if sel.is_empty() {
            continue;
        }
        let mut s = Series::new(m.to_string(), sel.iter().map(|r| (r.nfe as f64, r.swd)).collect(), Mark::LinePoints);
        s.annotations = sel.iter().map(|r| r.steps.map_or("tol".to_string(), |n| n.to_string())).collect();
        plot.series.push(s);
    }
    plot
}

fn report(rep: &ParetoReport) -> Result<()> {
    for r in &rep.rows {
        let steps = r.steps.map_or("adaptive".to_string(), |n| n.to_string());
        println!("{:<9} {steps:>8} nfe {:>6} swd {:.5}", r.method, r.nfe, r.swd);
    }
    for f in &rep.failures {
        eprintln!("{}: {}", f.solver, f.message);
    }
    if rep.rows.is_empty() {
        return Err(Error::InvalidArgument("every solver in the grid failed".into()));
    }
    Ok(())
}

pub(super) fn benchmark(ctx: &Ctx, a: &BenchmarkArgs) -> Result<()> {
    let base = ctx.train_config();
    let grid = &ctx.config.solver_grid;
    let sweep: Vec<(&str, usize, TrainConfig)> = if !a.hidden.is_empty() {
        a.hidden.iter().map(|&h| ("hidden", h, TrainConfig { mlp: crate::nn::MlpConfig { hidden: h, ..base.mlp }, ..base.clone() })).collect()
    } else {
        a.epochs.iter().map(|&e| ("epochs", e, TrainConfig { epochs: e, ..base.clone() })).collect()
    };
    if sweep.is_empty() {
        let model = match &a.model {
            Some(p) => load_model(p)?,
            None => {
                let (m, file, losses) = train_model(&base)?;
                ctx.write("model.json", file.to_json()?.as_bytes())?;
                write_losses(ctx, &losses)?;
                m
            }
        };
        let rep = pareto_benchmark(&model, &base.dataset, grid, a.n_samples, a.projections, ctx.seed)?;
        report(&rep)?;
        ctx.write_with("pareto.csv", |w| write_pareto_csv(&rep.rows, w))?;
        ctx.write("pareto.svg", pareto_plot("NFE vs sample quality", &rep.rows).render().as_bytes())?;
        return Ok(());
    }

    let mut all = Vec::new();
    for (name, value, cfg) in &sweep {
        println!("{name} = {value}");
        let (model, _, _) = train_model(cfg)?;
        let rep = pareto_benchmark(&model, &cfg.dataset, grid, a.n_samples, a.projections, ctx.seed)?;
        report(&rep)?;
        all.push((*name, *value, rep));
    }
    ctx.write_with("ablation.csv", |w| {
        writeln!(w, "sweep,value,method,steps,nfe,swd")?;
        for (name, value, rep) in &all {
            for r in &rep.rows {
                let steps = r.steps.map_or("adaptive".to_string(), |n| n.to_string());
                writeln!(w, "{name},{value},{},{steps},{},{}", r.method, r.nfe, fmt_f64(r.swd))?;
            }
        }
        Ok(())
    })?;
    let mut plot = Plot::new(&format!("Pareto frontier per {}", all[0].0), "NFE", "SWD").log_axes(true, false);
    for (name, value, rep) in &all {
        let pts = rep.frontier().iter().map(|r| (r.nfe as f64, r.swd)).collect();
        plot.series.push(Series::new(format!("{name} {value}"), pts, Mark::LinePoints));
    }
    ctx.write("ablation.svg", plot.render().as_bytes())?;
    Ok(())
}

pub(super) fn jacobian(ctx: &Ctx, a: &JacobianArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    if a.time_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 time points".into()));
    }
    let grid: Vec<f64> = (0..a.time_points).map(|k| k as f64 / (a.time_points - 1) as f64).collect();
    let solver = SolverSpec::fixed(FixedMethod::Rk4, a.steps);
    let rows = spectrum_along_trajectory(&model, a.n_samples, &grid, &solver, &mut Rng::substream(ctx.seed, STREAM_SAMPLE))?;
    for r in &rows {
        println!(
            "t = {:.2}: Re eig1 {:+.3} ± {:.3}, Re eig2 {:+.3} ± {:.3}, median cond {}",
            r.t,
            r.eig1_re.mean,
            r.eig1_re.std,
            r.eig2_re.mean,
            r.eig2_re.std,
            fmt_f64(r.cond_median)
        );
    }
    ctx.write_with("spectrum.csv", |w| write_spectrum_csv(&rows, w))?;
    let mut plot = Plot::new("Jacobian eigenvalues along the trajectory", "t", "Re(eigenvalue)");
    for (label, pick) in [("eig1", 0), ("eig2", 1)] {
        let stat = |r: &crate::analysis::SpectrumRow| if pick == 0 { r.eig1_re } else { r.eig2_re };
        plot.series.push(Series::new(format!("{label} mean"), rows.iter().map(|r| (r.t, stat(r).mean)).collect(), Mark::LinePoints));
        plot.series.push(Series::new(format!("{label} +1 std"), rows.iter().map(|r| (r.t, stat(r).mean + stat(r).std)).collect(), Mark::Line));
        plot.series.push(Series::new(format!("{label} -1 std"), rows.iter().map(|r| (r.t, stat(r).mean - stat(r).std)).collect(), Mark::Line));
    }
    ctx.write("spectrum.svg", plot.render().as_bytes())?;
    Ok(())
}

pub(super) fn dopri_trace(ctx: &Ctx, a: &DopriTraceArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let spec = SolverSpec::dopri5(a.atol, a.rtol);
    spec.validate()?;
    let (_, trace) = cfm_sample(&model, &spec, a.n, &mut Rng::substream(ctx.seed, STREAM_SAMPLE))?;
    let summary = dopri_step_summary(&trace, a.bins)?;
    println!(
        "nfe = {}, accepted = {}, rejected = {}, sum of accepted h = {}",
        trace.nfe_total,
        trace.n_accepted(),
        trace.n_rejected(),
        fmt_f64(trace.accepted_h_sum())
    );
    ctx.write_with("dopri_trace.csv", |w| trace.write_csv(w))?;
    let edges = summary.bin_edges();
    ctx.write_with("dopri_bins.csv", |w| {
        writeln!(w, "t_lo,t_hi,count,mean_h")?;
        for k in 0..summary.counts.len() {
            let mean = summary.mean_h[k].map(fmt_f64).unwrap_or_default();
            writeln!(w, "{},{},{},{mean}", fmt_f64(edges[k]), fmt_f64(edges[k + 1]), summary.counts[k])?;
        }
        Ok(())
    })?;
    let mut plot = Plot::new(&format!("DOPRI5 step sizes (atol {}, rtol {})", a.atol, a.rtol), "t", "h").log_axes(false, true);
    plot.series.push(Series::new("accepted", trace.accepted().map(|s| (s.t_start, s.h)).collect(), Mark::LinePoints));
    plot.series.push(Series::new(
        "rejected",
        trace.steps.iter().filter(|s| !s.accepted).map(|s| (s.t_start, s.h)).collect(),
        Mark::Points,
    ));
    let bin_means = (0..summary.counts.len())
        .filter_map(|k| summary.mean_h[k].map(|m| (0.5 * (edges[k] + edges[k + 1]), m)))
        .collect();
    plot.series.push(Series::new("bin mean", bin_means, Mark::Line));
    ctx.write("dopri_steps.svg", plot.render().as_bytes())?;
    Ok(())
}
