//! One function per subcommand. Each is pure given the resolved config and
//! returns everything it wants written; the caller owns the files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wickns_core::ensemble::{run_indexed, MomentAccumulator};
use wickns_core::lab::{
    convolution_sum_regression, criticality_report, divisor_bound_scan, geometric_sigma_grid, lemma_alpha,
    multiplier_supremum, tail_estimate_mc, tail_scaling, trilinear_ratio, variance_invariance_test, TailReport,
    VarianceConfig,
};
use wickns_core::noise::{convolution_variance, sample_convolution_path, NoisePath, Trajectory};
use wickns_core::norms::{
    fl_norm, gamma_norm, hs_norm, sobolev_norm, temporal_factor, xsb_norm, TimeWindow, XsbParams,
};
use wickns_core::rng::{Channel, NoiseStream, StreamKey};
use wickns_core::wick::{
    convolution_from_path, gauge_equivalence_gap, observed_orders, picard_iterate, single_mode_exact, solve,
    wick_nonlinearity_direct, wick_nonlinearity_with, wick_trilinear, Nonlinearity, PicardStatus, SolveStatus,
    SolverConfig,
};
use wickns_core::{ConvolutionMethod, SpectralField};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    SampleNoise,
    Solve,
    Picard,
    Norms,
    WickCheck,
    GaugeCheck,
    TailMc,
    VarianceTest,
    Trilinear,
    Sums,
    Divisors,
    Criticality,
    Sweep,
    /// Re-executes the run described by a manifest.
    Rerun,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }

    pub fn from_name(name: &str) -> Result<Self, CliError> {
        Self::from_str(name, false).map_err(|_| CliError::Config(format!("unknown command {name:?}")))
    }
}

/// Settings that do not change results.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub workers: Option<usize>,
    /// Directory that relative input paths are resolved against.
    pub base: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub schema: &'static str,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSeeds {
    pub label: String,
    pub seed: u64,
    pub channel: String,
    pub first: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub details: serde_json::Value,
    pub files: Vec<OutputFile>,
    pub flags: Vec<String>,
    pub tasks: Vec<TaskSeeds>,
    /// Set when the run produced partial outputs before failing.
    pub failure: Option<String>,
}

impl Outcome {
    fn file(&mut self, name: &str, schema: &'static str, contents: String) {
        self.files.push(OutputFile {
            name: name.into(),
            schema,
            contents,
        });
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn check(&mut self, key: &str, ok: bool) {
        self.checks.insert(key.into(), ok);
    }

    fn task(&mut self, label: &str, seed: u64, channel: Channel, first: u64, count: u64) {
        self.tasks.push(TaskSeeds {
            label: label.into(),
            seed,
            channel: format!("{channel:?}"),
            first,
            count,
        });
    }

    pub fn summary(&self, command: Command) -> serde_json::Value {
        json!({
            "command": command.name(),
            "metrics": self.metrics,
            "checks": self.checks,
            "flags": self.flags,
            "failure": self.failure,
            "details": self.details,
        })
    }
}

fn rt<T>(r: wickns_core::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::runtime)
}

fn cfgerr<T>(r: wickns_core::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::config)
}

fn to_json<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("serialisable")
}

pub fn run(command: Command, cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    match command {
        Command::SampleNoise => sample_noise(cfg, ctx),
        Command::Solve => solve_cmd(cfg, ctx),
        Command::Picard => picard(cfg, ctx),
        Command::Norms => norms(cfg, ctx),
        Command::WickCheck => wick_check(cfg, ctx),
        Command::GaugeCheck => gauge_check(cfg, ctx),
        Command::TailMc => tail_mc(cfg, ctx),
        Command::VarianceTest => variance_test(cfg, ctx),
        Command::Trilinear => trilinear(cfg, ctx),
        Command::Sums => sums(cfg),
        Command::Divisors => divisors(cfg),
        Command::Criticality => criticality(cfg),
        Command::Sweep | Command::Rerun => Err(CliError::Config(format!("{} cannot run as a single cell", command.name()))),
    }
}

fn validated_solver(cfg: &ExperimentConfig) -> Result<SolverConfig, CliError> {
    let s = cfg.solver()?.clone();
    cfgerr(s.validate())?;
    Ok(s)
}

fn sample_noise(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let solver = validated_solver(cfg)?;
    let grid = cfgerr(solver.grid())?;
    let op = cfg.noise.build(solver.cutoff, &ctx.base)?;
    let count = solver.ensemble_size;
    let mut out = Outcome::default();
    out.task("noise paths", cfg.seed, Channel::Increments, 0, count as u64);
    let first = sample_convolution_path(&op, grid, cfg.seed, 0);
    out.file("psi.csv", "trajectory/v1", first.to_csv());
    let paths = run_indexed(count, ctx.workers, |j| {
        let psi = sample_convolution_path(&op, grid, cfg.seed, j as u64);
        psi.states
            .iter()
            .flat_map(|f| f.coeffs().iter().map(|c| c.norm_sqr()))
            .collect::<Vec<f64>>()
    });
    let dim = 2 * solver.cutoff + 1;
    let mut acc = MomentAccumulator::new(grid.len() * dim);
    for p in &paths {
        acc.push(p);
    }
    let mean = acc.mean();
    let mut csv = String::from("t,n,mean_abs2,expected,relative_error\n");
    let mut worst: f64 = 0.0;
    let c = solver.cutoff as i64;
    // the law is checked at the quarter marks when they fall on the grid
    let marks: Vec<usize> = if grid.steps % 4 == 0 {
        vec![grid.steps / 4, grid.steps / 2, grid.steps]
    } else {
        (1..grid.len()).collect()
    };
    for m in 0..grid.len() {
        let t = grid.time(m);
        for n in -c..=c {
            let got = mean[m * dim + (n + c) as usize];
            let want = rt(convolution_variance(&op, t, n))?;
            let err = if want > 0.0 { (got / want - 1.0).abs() } else { got.abs() };
            if marks.contains(&m) {
                worst = worst.max(err);
            }
            let _ = writeln!(csv, "{t},{n},{got},{want},{err}");
        }
    }
    out.file("variance.csv", "noise-variance/v1", csv);
    out.metric("max_relative_error", worst);
    out.metric("paths", count as f64);
    if count >= 100 {
        let tol = cfg.lab.tolerance.unwrap_or(4.0 / (count as f64).sqrt());
        out.check("variance_law", worst <= tol);
    }
    Ok(out)
}

fn solve_cmd(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let solver = validated_solver(cfg)?;
    let grid = cfgerr(solver.grid())?;
    let op = cfg.noise.build(solver.cutoff, &ctx.base)?;
    let u0 = cfg.initial.build(solver.cutoff, cfg.seed, &ctx.base)?;
    let mut out = Outcome::default();
    out.task("initial data", cfg.seed, Channel::InitialData, 0, 1);
    out.task("noise paths", cfg.seed, Channel::Increments, 0, solver.ensemble_size as u64);
    let runs = run_indexed(solver.ensemble_size, ctx.workers, |j| solve(&u0, &op, &solver, j as u64));
    let mut mass = MomentAccumulator::new(grid.len());
    let mut blowups = 0usize;
    let mut first = None;
    for (j, r) in runs.into_iter().enumerate() {
        let sol = rt(r)?;
        if sol.status == SolveStatus::Completed {
            let m: Vec<f64> = sol.trajectory.states.iter().map(|u| u.mass()).collect();
            mass.push(&m);
        } else {
            blowups += 1;
        }
        if j == 0 {
            first = Some(sol);
        }
    }
    let first = first.expect("ensemble size is positive");
    out.file("trajectory.csv", "trajectory/v1", first.trajectory.to_csv());
    if mass.count > 0 {
        let (mean, se) = (mass.mean(), mass.std_error());
        let mut csv = String::from("t,mean_mass,std_error\n");
        for (m, t) in grid.times().enumerate() {
            let _ = writeln!(csv, "{t},{},{}", mean[m], if mass.count > 1 { se[m] } else { 0.0 });
        }
        out.file("mass.csv", "mass/v1", csv);
        out.metric("final_mean_mass", mean[grid.len() - 1]);
    }
    out.metric("blowup_fraction", blowups as f64 / solver.ensemble_size as f64);
    out.check("completed", blowups == 0);
    out.details = json!({ "status": to_json(&first.status) });
    if let SolveStatus::BlowUp { step, last_valid_time } = first.status {
        out.flags.push("blow_up".into());
        out.failure = Some(format!("non-finite state at step {step}, last valid time {last_valid_time}"));
    }
    Ok(out)
}

fn picard(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let solver = validated_solver(cfg)?;
    let norm = cfg.norm()?;
    let grid = cfgerr(solver.grid())?;
    let op = cfg.noise.build(solver.cutoff, &ctx.base)?;
    let u0 = cfg.initial.build(solver.cutoff, cfg.seed, &ctx.base)?;
    let noise = NoisePath::generate(grid, solver.cutoff, cfg.seed, 0);
    let psi = convolution_from_path(&op, &noise);
    let rep = rt(picard_iterate(&u0, &op, &psi, &solver, &norm))?;
    let mut out = Outcome::default();
    out.task("initial data", cfg.seed, Channel::InitialData, 0, 1);
    out.task("noise path", cfg.seed, Channel::Increments, 0, 1);
    let mut csv = String::from("iteration,difference,ratio\n");
    for (j, d) in rep.differences.iter().enumerate() {
        let r = if j == 0 { String::new() } else { rep.ratios[j - 1].to_string() };
        let _ = writeln!(csv, "{},{d},{r}", j + 1);
    }
    out.file("iterations.csv", "picard-iterations/v1", csv);
    out.file("limit.csv", "trajectory/v1", rep.limit().to_csv());
    out.metric("iterations", rep.iterations as f64);
    if let Some(f) = rep.contraction_factor {
        out.metric("contraction_factor", f);
    }
    out.check("converged", rep.status == PicardStatus::Converged);
    out.details = json!({ "status": to_json(&rep.status) });
    if rep.status == PicardStatus::NonContraction {
        out.flags.push("non_contraction".into());
    }
    Ok(out)
}

fn norms(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let solver = cfg.solver()?;
    let norm = cfg.norm()?;
    let op = cfg.noise.build(solver.cutoff, &ctx.base)?;
    let u0 = cfg.initial.build(solver.cutoff, cfg.seed, &ctx.base)?;
    let mut out = Outcome::default();
    out.task("initial data", cfg.seed, Channel::InitialData, 0, 1);
    out.metric("fl_norm", fl_norm(&u0, norm.s, norm.p));
    out.metric("sobolev_norm", sobolev_norm(&u0, norm.s));
    out.metric("gamma_norm", cfgerr(gamma_norm(&op, norm.s, norm.p))?);
    out.metric("hs_norm", hs_norm(&op, norm.s));
    // the windowed norm of the free flow needs a resolved time grid
    let steps = (norm.t / solver.dt).round() as usize;
    if steps >= wickns_core::norms::xsb::MIN_POINTS {
        let grid = cfgerr(wickns_core::noise::TimeGrid::with_horizon(solver.dt, norm.t))?;
        let window = cfgerr(TimeWindow::new(norm.t))?;
        let flow = Trajectory::linear_flow(&u0, grid);
        let x = rt(xsb_norm(&flow, &norm, &window))?;
        let tf = rt(temporal_factor(&norm, &window, solver.dt))?;
        out.metric("xsb_linear_flow", x);
        out.metric("temporal_factor", tf);
        let product = tf * fl_norm(&u0, norm.s, norm.p);
        out.metric("factorization_gap", if product > 0.0 { (x / product - 1.0).abs() } else { x });
    } else {
        out.flags.push("xsb_skipped_coarse_grid".into());
    }
    let mut csv = String::from("name,value\n");
    for (k, v) in &out.metrics {
        let _ = writeln!(csv, "{k},{v}");
    }
    out.file("norms.csv", "norms/v1", csv);
    Ok(out)
}

fn wick_check(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let cutoffs = cfg.lab.cutoffs.clone().unwrap_or_else(|| vec![4, 8, 16, 32]);
    let samples = cfg.lab.samples.unwrap_or(100);
    let tol = cfg.lab.tolerance.unwrap_or(1e-12);
    let mut out = Outcome::default();
    out.task("random fields", cfg.seed, Channel::Auxiliary, 0, (cutoffs.len() * samples) as u64);
    let mut csv = String::from("cutoff,samples,max_split_gap,max_padded_gap\n");
    let mut worst: f64 = 0.0;
    for (i, &cutoff) in cutoffs.iter().enumerate() {
        let gaps = run_indexed(samples, ctx.workers, |j| -> wickns_core::Result<(f64, f64)> {
            let u = random_field(cutoff, cfg.seed, (i * samples + j) as u64);
            let direct = wick_nonlinearity_direct(&u);
            let split = wick_trilinear(&u, &u, &u)?.total();
            let padded = wick_nonlinearity_with(&u, ConvolutionMethod::Padded);
            Ok((split.max_abs_diff(&direct), padded.max_abs_diff(&direct)))
        });
        let (mut a, mut b): (f64, f64) = (0.0, 0.0);
        for g in gaps {
            let (x, y) = rt(g)?;
            a = a.max(x);
            b = b.max(y);
        }
        worst = worst.max(a);
        let _ = writeln!(csv, "{cutoff},{samples},{a},{b}");
    }
    out.file("wick_check.csv", "wick-check/v1", csv);
    out.metric("max_split_gap", worst);
    out.check("dual_form", worst <= tol);
    Ok(out)
}

/// Unit complex Gaussians on every mode.
pub fn random_field(cutoff: usize, seed: u64, index: u64) -> SpectralField {
    let mut s = NoiseStream::new(StreamKey::new(seed, index, Channel::Auxiliary));
    SpectralField::from_fn(cutoff, |_| s.complex_gaussian()).expect("finite")
}

fn single_mode(u: &SpectralField) -> Option<(i64, Complex64)> {
    let mut it = u.iter().filter(|(_, c)| c.norm() > 0.0);
    let first = it.next()?;
    if it.next().is_some() {
        None
    } else {
        Some(first)
    }
}

fn gauge_check(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let solver = validated_solver(cfg)?;
    let u0 = cfg.initial.build(solver.cutoff, cfg.seed, &ctx.base)?;
    let dts = cfg
        .lab
        .dts
        .clone()
        .unwrap_or_else(|| (0..5).map(|j| solver.dt / f64::powi(2.0, j)).collect());
    let mode = single_mode(&u0);
    let mut out = Outcome::default();
    let mut mode_errors = Vec::new();
    let mut gaps = Vec::new();
    for &dt in &dts {
        let mut c = SolverConfig::new(solver.cutoff, dt, solver.horizon);
        c.nonlinearity = Nonlinearity::Wick;
        c.convolution = solver.convolution;
        let op = wickns_core::noise::NoiseOperator::zero(solver.cutoff);
        if let Some((k, a)) = mode {
            let sol = rt(solve(&u0, &op, &c, 0))?;
            let last = sol.trajectory.states.last().expect("nonempty");
            let exact = single_mode_exact(a, k, sol.trajectory.grid.horizon(), Nonlinearity::Wick);
            let exact = cfgerr(SpectralField::mode(solver.cutoff, k, exact))?;
            if sol.status != SolveStatus::Completed {
                return Err(CliError::Runtime(format!("blow-up at dt = {dt}")));
            }
            mode_errors.push(last.max_abs_diff(&exact));
        }
        gaps.push(rt(gauge_equivalence_gap(&u0, dt, solver.horizon))?);
    }
    let mode_orders = observed_orders(&mode_errors);
    let gap_orders = observed_orders(&gaps);
    let mut csv = String::from("dt,mode_error,gauge_gap,mode_order,gauge_order\n");
    for (j, dt) in dts.iter().enumerate() {
        let cell = |v: &[f64], k: usize| v.get(k).map(|x| x.to_string()).unwrap_or_default();
        let order = |v: &[f64]| if j == 0 { String::new() } else { cell(v, j - 1) };
        let _ = writeln!(
            csv,
            "{dt},{},{},{},{}",
            cell(&mode_errors, j),
            gaps[j],
            order(&mode_orders),
            order(&gap_orders)
        );
    }
    out.file("gauge_check.csv", "gauge-check/v1", csv);
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    if !mode_orders.is_empty() {
        out.metric("min_mode_order", min(&mode_orders));
        out.check("mode_order", min(&mode_orders) >= 0.9);
    }
    if !gap_orders.is_empty() {
        out.metric("min_gauge_order", min(&gap_orders));
        out.check("gauge_order", min(&gap_orders) >= 0.9);
    }
    Ok(out)
}

fn tail_rows(csv: &mut String, fits: &mut String, r: &TailReport) {
    for ((l, p), u) in r.lambdas.iter().zip(&r.survival).zip(&r.used) {
        let _ = writeln!(csv, "{},{l},{},{p},{u}", r.horizon, l / r.median);
    }
    let _ = writeln!(
        fits,
        "{},{},{},{},{},{}",
        r.horizon, r.median, r.fit.slope, r.fit.intercept, r.fit.r_squared, r.normalised_rate
    );
}

fn tail_mc(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let solver = cfg.solver()?;
    let norm = cfg.norm()?;
    let op = cfg.noise.build(solver.cutoff, &ctx.base)?;
    let multiples = cfg.lab.lambda_multiples.clone().unwrap_or_else(|| vec![1.0, 1.2, 1.4, 1.6]);
    let samples = cfg.lab.samples.unwrap_or(10_000);
    let horizons = cfg.lab.horizons.clone().unwrap_or_else(|| vec![norm.t]);
    let mut out = Outcome::default();
    out.task("noise paths", cfg.seed, Channel::Increments, 0, samples as u64);
    let mut csv = String::from("T,lambda,multiple,survival,used\n");
    let mut fits = String::from("T,median,slope,intercept,r_squared,normalised_rate\n");
    let reports = if horizons.len() >= 2 {
        let sc = rt(tail_scaling(&op, &norm, &horizons, &multiples, solver.dt, samples, cfg.seed, ctx.workers))?;
        out.metric("exponent", sc.exponent);
        out.metric("expected_exponent", sc.expected);
        out.metric("rate_spread", sc.rate_spread);
        out.check("exponent", (sc.exponent - sc.expected).abs() <= 0.5);
        out.check("rate_stable", sc.rate_spread <= 3.0);
        sc.reports
    } else {
        let r = rt(tail_estimate_mc(&op, &norm.with_t(horizons[0]), &multiples, solver.dt, samples, cfg.seed, ctx.workers))?;
        vec![r]
    };
    for r in &reports {
        tail_rows(&mut csv, &mut fits, r);
    }
    out.check("negative_slope", reports.iter().all(|r| r.fit.slope < 0.0));
    out.check("r_squared", reports.iter().all(|r| r.fit.r_squared >= 0.9));
    out.metric("min_r_squared", reports.iter().map(|r| r.fit.r_squared).fold(f64::INFINITY, f64::min));
    out.file("tail.csv", "tail-survival/v1", csv);
    out.file("tail_fit.csv", "tail-fit/v1", fits);
    Ok(out)
}

fn variance_test(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let solver = validated_solver(cfg)?;
    let samples = cfg.lab.samples.unwrap_or(10_000);
    let vc = VarianceConfig {
        integrator: solver.integrator,
        convolution: solver.convolution,
        ..VarianceConfig::new(solver.cutoff, solver.horizon, solver.dt, samples, cfg.seed)
    };
    let rep = rt(variance_invariance_test(&vc, ctx.workers))?;
    let mut out = Outcome::default();
    out.task("initial data", cfg.seed, Channel::InitialData, 0, samples as u64);
    out.task("noise paths", cfg.seed, Channel::Increments, 0, samples as u64);
    let mut csv = String::from("t,n,variance,std_error,expected\n");
    let c = rep.cutoff as i64;
    for (k, t) in rep.times.iter().enumerate() {
        for n in -c..=c {
            let i = (n + c) as usize;
            let _ = writeln!(csv, "{t},{n},{},{},{}", rep.variances[k][i], rep.std_errors[k][i], 1.0 + t);
        }
    }
    out.file("variance.csv", "mode-variance/v1", csv);
    out.metric("max_relative_deviation", rep.max_relative_deviation);
    out.metric("drift_slope", rep.drift.slope);
    out.metric("blowup_fraction", rep.blowup_fraction);
    out.check("within_tolerance", rep.max_relative_deviation <= cfg.lab.tolerance.unwrap_or(0.05));
    out.check("drift_slope", (0.9..=1.1).contains(&rep.drift.slope));
    out.check("blowups", !rep.flagged);
    if rep.flagged {
        out.flags.push("blowup_fraction_exceeded".into());
    }
    Ok(out)
}

fn trilinear(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let norm: XsbParams = cfg.norm()?;
    let cutoffs = cfg.lab.cutoffs.clone().unwrap_or_else(|| vec![16, 32, 64]);
    let samples = cfg.lab.samples.unwrap_or(2000);
    let mut out = Outcome::default();
    out.task("input draws", cfg.seed, Channel::InitialData, 0, 3 * samples as u64);
    out.task("input noise paths", cfg.seed, Channel::Increments, 0, 3 * samples as u64);
    let mut csv = String::from("cutoff,samples,discarded,median,p99,max,p99_growth\n");
    let mut prev: Option<f64> = None;
    let mut worst_growth: f64 = 0.0;
    for &n in &cutoffs {
        let st = rt(trilinear_ratio(samples, &norm, n, cfg.seed, ctx.workers))?;
        let growth = prev.map(|p| st.p99 / p);
        if let Some(g) = growth {
            worst_growth = worst_growth.max(g);
        }
        let _ = writeln!(
            csv,
            "{n},{},{},{},{},{},{}",
            st.samples,
            st.discarded,
            st.median,
            st.p99,
            st.max,
            growth.map(|g| g.to_string()).unwrap_or_default()
        );
        prev = Some(st.p99);
    }
    out.file("trilinear.csv", "trilinear/v1", csv);
    if cutoffs.len() >= 2 {
        out.metric("max_p99_growth", worst_growth);
        out.check("p99_growth", worst_growth < 2.0);
    }
    if let Some(mc) = cfg.lab.multiplier_cutoffs.clone() {
        let per_sign = cfg.lab.sigma_per_sign.unwrap_or(24);
        let mut csv = String::from("cutoff,kappa,supremum,argmax_n,argmax_sigma0,ratio\n");
        let mut prev: Option<f64> = None;
        let mut last_ratio = None;
        for &n in &mc {
            let r = rt(multiplier_supremum(&norm, n, &geometric_sigma_grid(n, per_sign)))?;
            let ratio = prev.map(|p| r.supremum / p);
            let _ = writeln!(
                csv,
                "{n},{},{},{},{},{}",
                r.kappa,
                r.supremum,
                r.argmax_n,
                r.argmax_sigma0,
                ratio.map(|x| x.to_string()).unwrap_or_default()
            );
            prev = Some(r.supremum);
            last_ratio = ratio;
        }
        out.file("multiplier.csv", "multiplier/v1", csv);
        if let Some(r) = last_ratio {
            out.metric("multiplier_last_ratio", r);
            out.check("multiplier_plateau", (r - 1.0).abs() <= 0.1);
        }
    }
    Ok(out)
}

fn sums(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let lab = &cfg.lab;
    let beta = lab.beta.ok_or_else(|| CliError::Config("sums needs lab.beta".into()))?;
    let gamma = lab.gamma.ok_or_else(|| CliError::Config("sums needs lab.gamma".into()))?;
    let eps = lab.eps.unwrap_or(0.01);
    let ks = lab.ks.clone().unwrap_or_else(|| (4..=10).map(|j| 1i64 << j).collect());
    let cutoff = lab.sum_cutoff.unwrap_or(1 << 20);
    let fit = cfgerr(convolution_sum_regression(beta, gamma, &ks, cutoff, eps))?;
    let mut out = Outcome::default();
    let mut csv = String::from("k,lhs,weighted\n");
    for (k, s) in fit.ks.iter().zip(&fit.sums) {
        let _ = writeln!(csv, "{k},{s},{}", s * wickns_core::bracket(*k as f64).powf(fit.alpha));
    }
    out.file("sums.csv", "convolution-sums/v1", csv);
    out.metric("slope", fit.fit.slope);
    out.metric("alpha", lemma_alpha(beta, gamma, eps));
    out.metric("r_squared", fit.fit.r_squared);
    out.metric("weighted_spread", fit.weighted_spread);
    out.check("decay_exponent", (fit.fit.slope + fit.alpha).abs() <= lab.tolerance.unwrap_or(0.15));
    Ok(out)
}

fn divisors(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let nmax = cfg.lab.nmax.unwrap_or(1_000_000);
    let delta = cfg.lab.delta.unwrap_or(0.5);
    let scan = cfgerr(divisor_bound_scan(nmax, delta))?;
    let mut out = Outcome::default();
    let mut csv = String::from("n,ratio\n");
    for (n, r) in &scan.records {
        let _ = writeln!(csv, "{n},{r}");
    }
    out.file("divisor_records.csv", "divisor-records/v1", csv);
    out.metric("max_ratio", scan.max_ratio);
    out.metric("argmax", scan.argmax as f64);
    if delta >= 0.5 {
        out.check("bounded_by_two", scan.max_ratio <= 2.0);
    }
    Ok(out)
}

fn criticality(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let d = cfg.lab.dimension.unwrap_or(1);
    let p = cfg.lab.p.unwrap_or(2.0);
    let rep = cfgerr(criticality_report(d, p))?;
    let mut out = Outcome::default();
    let mut csv = String::from("family,critical_regularity,noise_regularity,classification\n");
    for v in &rep.verdicts {
        let fam = to_json(&v.family);
        let class = to_json(&v.classification);
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fam.as_str().unwrap_or_default(),
            v.critical_regularity,
            v.noise_regularity,
            class.as_str().unwrap_or_default()
        );
    }
    out.file("criticality.csv", "criticality/v1", csv);
    out.metric("s_crit_p", rep.s_crit_p);
    out.metric("s_hat_crit_p", rep.s_hat_crit_p);
    out.details = to_json(&rep);
    Ok(out)
}

