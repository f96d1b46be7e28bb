//! Acceptance suite: one PASS/FAIL line per criterion, at the stated
//! tolerances. Criteria 9-11 share three moons models trained at the default
//! configuration (seeds 0, 1, 2).
//!
//! Failing criteria are reported but only fail the process when
//! `FMSOLVE_ACCEPTANCE_STRICT=1` is set.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fmsolve::analysis::{
    convergence_study, mean_accepted_h, pareto_benchmark, spectrum_along_trajectory, stability_demo, DecayProblem,
};
use fmsolve::cfm::{sample, train, FlowModel, TrainConfig};
use fmsolve::nn::{init_params, loss_and_grad, MlpConfig, MlpParams};
use fmsolve::numeric::Rng;
use fmsolve::ode::{
    integrate_dopri5, integrate_fixed, stability_region_grid, ButcherTableau, FieldHandle, FixedMethod, Method,
    SolverSpec, StepControlConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn decay_field(lambda: f64, dim: usize) -> FieldHandle<impl fmsolve::ode::VectorField> {
    FieldHandle::from_fn(dim, move |_t, y: &[f64], dy: &mut [f64]| {
        for (d, v) in dy.iter_mut().zip(y) {
            *d = lambda * v;
        }
    })
}

/// Stability polynomial of each fixed scheme, written out independently of the library.
fn r_oracle(m: FixedMethod, z: f64) -> f64 {
    match m {
        FixedMethod::Euler => 1.0 + z,
        FixedMethod::Midpoint => 1.0 + z + z * z / 2.0,
        FixedMethod::Rk4 => 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0,
    }
}

fn powers_of_two_h() -> Vec<f64> {
    (3..=10).map(|k| 2f64.powi(-k)).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = convergence_study(&DecayProblem::default(), &FixedMethod::ALL, &powers_of_two_h()).unwrap();
    let elapsed = start.elapsed();
    let (e, m, r) = (s.slope(Method::Euler).unwrap(), s.slope(Method::Midpoint).unwrap(), s.slope(Method::Rk4).unwrap());
    let pass = (e - 1.0).abs() <= 0.1 && (m - 2.0).abs() <= 0.1 && (r - 4.0).abs() <= 0.2 && elapsed < Duration::from_secs(1);
    outcome(pass, format!("slopes euler {e:.4}, midpoint {m:.4}, rk4 {r:.4}; {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn criterion_2() -> Outcome {
    let run = |m| integrate_fixed(&mut decay_field(-1.0, 1), &[1.0], 0.0, 1.0, 10, m).unwrap().y_final[0];
    let exact = (-1.0f64).exp();
    let (ye, yr) = (run(FixedMethod::Euler), run(FixedMethod::Rk4));
    let (ee, er) = ((ye - exact).abs(), (yr - exact).abs());
    let oracle_e = (r_oracle(FixedMethod::Euler, -0.1).powi(10) - exact).abs();
    let oracle_r = (r_oracle(FixedMethod::Rk4, -0.1).powi(10) - exact).abs();
    let agree = (ee - oracle_e).abs() <= 1e-15 && (er - oracle_r).abs() <= 1e-15;
    outcome(
        er <= 1e-4 * ee && agree,
        format!("euler err {ee:.3e}, rk4 err {er:.3e}, ratio {:.3e} (R(z)^n oracle agrees: {agree})", ee / er),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let m = FixedMethod::ALL[k % 3];
        let lambda = rng.uniform_range(-5.0, 1.0);
        let h = rng.uniform_range(1e-3, 0.1);
        let n = 1 + rng.below(100);
        let y0 = rng.uniform_range(-2.0, 2.0);
        let y = integrate_fixed(&mut decay_field(lambda, 1), &[y0], 0.0, n as f64 * h, n, m).unwrap().y_final[0];
        let want = r_oracle(m, h * lambda).powi(n as i32) * y0;
        worst = worst.max((y - want).abs() / want.abs());
    }
    outcome(worst <= 1e-12, format!("max relative deviation {worst:.2e} over 100 draws"))
}

fn criterion_4() -> Outcome {
    let tr = stability_demo(-15.0, &[0.1, 1.0 / 6.0], 10.0, 200).unwrap();
    let stable = tr[0].ys.last().unwrap().abs() < 1.0 && !tr[0].diverged;
    let unstable = tr[1].diverged && tr[1].ys.len() <= 201;
    let peak = tr[1].ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));
    outcome(
        stable && unstable,
        format!("h=0.1 |y_N| = {:.2e}; h=1/6 max |y_n| = {peak:.2e} within {} steps", tr[0].ys.last().unwrap().abs(), tr[1].ys.len() - 1),
    )
}

fn criterion_5() -> Outcome {
    let res = 0.05;
    let n_re = ((2.0 - -5.0) / res) as usize + 1;
    let n_im = ((4.0 - -4.0) / res) as usize + 1;
    let rk4 = stability_region_grid(Method::Rk4, (-5.0, 2.0), (-4.0, 4.0), (n_re, n_im));
    let euler = stability_region_grid(Method::Euler, (-5.0, 2.0), (-4.0, 4.0), (n_re, n_im));
    let (br, be) = (rk4.real_axis_boundary().unwrap(), euler.real_axis_boundary().unwrap());
    let d = rk4.d_re();
    outcome(
        (br + 2.78).abs() <= d && (be + 2.0).abs() <= d,
        format!("rk4 boundary {br:.4}, euler boundary {be:.4}, grid step {d:.4}"),
    )
}

fn criterion_6() -> Outcome {
    let cfg = StepControlConfig::with_tolerances(1e-5, 1e-5);
    let tr = integrate_dopri5(&mut decay_field(-1.0, 1), &[1.0], 0.0, 1.0, &cfg).unwrap();
    let err = (tr.y_final[0] - (-1.0f64).exp()).abs();
    let all_ok = tr.accepted().all(|s| s.err.unwrap() <= 1.0);
    let (acc, rej) = (tr.n_accepted() as u64, tr.n_rejected() as u64);
    // +1 for the FSAL first stage, +1 for the initial-step probe
    let expected = 6 * acc + 1 + 6 * rej + 1;
    outcome(
        err <= 1e-5 && all_ok && tr.nfe_total == expected,
        format!("|y(1) - e^-1| = {err:.2e}; accepted {acc}, rejected {rej}, nfe {} (6a + 1 + 6r + 1 = {expected})", tr.nfe_total),
    )
}

fn criterion_7() -> Outcome {
    let t = ButcherTableau::dormand_prince();
    let mut worst = 0.0f64;
    for i in 0..7 {
        worst = worst.max((t.a[i].iter().sum::<f64>() - t.c[i]).abs());
    }
    worst = worst.max((t.b.iter().sum::<f64>() - 1.0).abs());
    worst = worst.max((t.b_star.iter().sum::<f64>() - 1.0).abs());
    for j in 0..7 {
        worst = worst.max((t.a[6][j] - t.b[j]).abs());
    }
    worst = worst.max(t.b[6].abs()).max((t.c[6] - 1.0).abs());
    outcome(worst <= 1e-15, format!("max invariant residual {worst:.1e}"))
}

fn criterion_8() -> Outcome {
    let cfg = MlpConfig { data_dim: 2, hidden: 8, n_blocks: 1, time_embed_dim: 8 };
    let mut rng = Rng::new(77);
    let mut p: MlpParams = init_params(cfg, &mut rng).unwrap();
    for t in p.tensors.iter_mut() {
        for v in t.data.iter_mut() {
            *v = rng.uniform_range(-0.8, 0.8);
        }
    }
    let x: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
    let t: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
    let u: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
    let (_, grads) = loss_and_grad(&p, &x, &t, &u).unwrap();
    let mut worst = 0.0f64;
    for k in 0..p.tensors.len() {
        for j in 0..p.tensors[k].data.len() {
            let orig = p.tensors[k].data[j];
            let eps = f64::EPSILON.cbrt() * orig.abs().max(1.0);
            p.tensors[k].data[j] = orig + eps;
            let lp = loss_and_grad(&p, &x, &t, &u).unwrap().0;
            p.tensors[k].data[j] = orig - eps;
            let lm = loss_and_grad(&p, &x, &t, &u).unwrap().0;
            p.tensors[k].data[j] = orig;
            let fd = (lp - lm) / (2.0 * eps);
            let g = grads.tensors[k].data[j];
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-6));
        }
    }
    outcome(worst < 1e-4, format!("max relative error {worst:.2e} over {} parameters", p.count()))
}

struct SeedRun {
    seed: u64,
    train_time: Duration,
    swd_rk4_20: f64,
    swd_euler_20: f64,
    swd_euler_200: f64,
    cond_01: f64,
    cond_09: f64,
    h_early: f64,
    h_late: f64,
}

fn run_seed(seed: u64) -> SeedRun {
    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let start = Instant::now();
    let model: FlowModel = train(&cfg).unwrap().model;
    let train_time = start.elapsed();

    let grid = [
        SolverSpec::fixed(FixedMethod::Euler, 20),
        SolverSpec::fixed(FixedMethod::Euler, 200),
        SolverSpec::fixed(FixedMethod::Rk4, 20),
    ];
    let rep = pareto_benchmark(&model, &cfg.dataset, &grid, 2000, 200, seed).unwrap();
    let swd_of = |m, n| rep.find(m, Some(n)).unwrap().swd;

    let times: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
    let spectrum =
        spectrum_along_trajectory(&model, 200, &times, &SolverSpec::fixed(FixedMethod::Rk4, 100), &mut Rng::substream(seed, 30))
            .unwrap();

    let (_, trace) = sample(&model, &SolverSpec::dopri5(1e-5, 1e-5), 2000, &mut Rng::substream(seed, 31)).unwrap();
    SeedRun {
        seed,
        train_time,
        swd_rk4_20: swd_of(Method::Rk4, 20),
        swd_euler_20: swd_of(Method::Euler, 20),
        swd_euler_200: swd_of(Method::Euler, 200),
        cond_01: spectrum[1].cond_median,
        cond_09: spectrum[9].cond_median,
        h_early: mean_accepted_h(&trace, 0.0, 0.2).unwrap(),
        h_late: mean_accepted_h(&trace, 0.8, 1.0).unwrap(),
    }
}

fn criterion_9(runs: &[SeedRun]) -> Outcome {
    let rk4 = median(runs.iter().map(|r| r.swd_rk4_20).collect());
    let e20 = median(runs.iter().map(|r| r.swd_euler_20).collect());
    let e200 = median(runs.iter().map(|r| r.swd_euler_200).collect());
    let slowest = runs.iter().map(|r| r.train_time).max().unwrap();
    outcome(
        rk4 <= e20 && rk4 <= 1.25 * e200 && slowest <= Duration::from_secs(300),
        format!(
            "median SWD rk4-20 {rk4:.5}, euler-20 {e20:.5}, euler-200 {e200:.5}; slowest training {:.0} s",
            slowest.as_secs_f64()
        ),
    )
}

fn criterion_10(runs: &[SeedRun]) -> Outcome {
    let wins = runs.iter().filter(|r| r.cond_09 > r.cond_01).count();
    let detail: Vec<String> = runs.iter().map(|r| format!("seed {}: {:.2} -> {:.2}", r.seed, r.cond_01, r.cond_09)).collect();
    outcome(wins >= 2, format!("median cond t=0.1 -> t=0.9 rises in {wins}/3 ({})", detail.join(", ")))
}

fn criterion_11(runs: &[SeedRun]) -> Outcome {
    let wins = runs.iter().filter(|r| r.h_late < r.h_early).count();
    let detail: Vec<String> = runs.iter().map(|r| format!("seed {}: {:.4} vs {:.4}", r.seed, r.h_late, r.h_early)).collect();
    outcome(wins >= 2, format!("mean h on [0.8,1] < on [0,0.2] in {wins}/3 ({})", detail.join(", ")))
}

fn criterion_12() -> Outcome {
    let start = Instant::now();
    let one = convergence_study(&DecayProblem::default(), &FixedMethod::ALL, &powers_of_two_h()).unwrap();
    let many = convergence_study(&DecayProblem { dim: 100, ..DecayProblem::default() }, &FixedMethod::ALL, &powers_of_two_h()).unwrap();
    let elapsed = start.elapsed();
    let worst = one.slopes.iter().zip(&many.slopes).map(|((_, a), (_, b))| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 0.05 && elapsed < Duration::from_secs(10),
        format!("max slope difference 1D vs 100D {worst:.2e}; {:.1} ms", elapsed.as_secs_f64() * 1e3),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn criterion_13() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_fmsolve");
    let work = tempfile::tempdir().unwrap();
    let config = work.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"format_version": 1, "seed": 11,
            "dataset": {"kind": "moons", "n": 400, "noise": 0.05},
            "train": {"epochs": 4, "batch_size": 64, "hidden": 32, "n_blocks": 2, "time_embed_dim": 16},
            "solver_grid": [{"method": "euler", "steps": 10}, {"method": "midpoint", "steps": 10},
                            {"method": "rk4", "steps": 5}, {"method": "dopri5", "atol": 1e-4, "rtol": 1e-4}]}"#,
    )
    .unwrap();
    let model = work.path().join("model.json");
    let cfg = config.to_str().unwrap();
    let mdl = model.to_str().unwrap();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("convergence", vec!["convergence"]),
        ("stability", vec!["stability", "--resolution", "0.1"]),
        ("train", vec!["train"]),
        ("sample-rk4", vec!["sample", "--model", mdl, "--solver", "rk4", "--steps", "20", "--n", "300"]),
        ("sample-dopri5", vec!["sample", "--model", mdl, "--solver", "dopri5", "--n", "300"]),
        ("benchmark", vec!["benchmark", "--model", mdl, "--n-samples", "300", "--projections", "50"]),
        ("benchmark-sweep", vec!["benchmark", "--hidden", "8,16", "--n-samples", "200", "--projections", "50"]),
        ("jacobian", vec!["jacobian", "--model", mdl, "--n-samples", "50"]),
        ("dopri-trace", vec!["dopri-trace", "--model", mdl, "--n", "200"]),
    ];
    // the model used by later commands comes from a separate training run
    let status = Command::new(bin).args(["--config", cfg, "--out"]).arg(work.path()).arg("train").output().unwrap();
    if !status.status.success() {
        return outcome(false, format!("setup training failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let mut failures = Vec::new();
    let mut n_files = 0;
    for (name, args) in &commands {
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out = work.path().join(format!("{name}-{rep}"));
            let res = Command::new(bin).args(["--config", cfg, "--out"]).arg(&out).args(args).output().unwrap();
            if !res.status.success() {
                failures.push(format!("{name} exited {:?}", res.status.code()));
            }
            runs.push(csv_files(&out));
        }
        if runs[0].is_empty() || runs[0] != runs[1] {
            failures.push(format!("{name} outputs differ"));
        }
        n_files += runs[0].len();
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} subcommand runs x2, {n_files} CSV files byte-identical", commands.len())
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |k: u32, o: Outcome| {
        println!("criterion {k:>2}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());

    let runs: Vec<SeedRun> = (0..3)
        .map(|s| {
            let r = run_seed(s);
            println!("  (moons seed {s}: trained in {:.0} s)", r.train_time.as_secs_f64());
            r
        })
        .collect();
    report(9, criterion_9(&runs));
    report(10, criterion_10(&runs));
    report(11, criterion_11(&runs));
    report(12, criterion_12());
    report(13, criterion_13());

    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(k, _)| *k).collect();
    println!("{}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failing: {failed:?}");
        if std::env::var("FMSOLVE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
