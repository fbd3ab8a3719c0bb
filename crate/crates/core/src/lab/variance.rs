//! Evolution of the per-mode variance from white-noise initial data under
//! identity noise.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, LinearFit};
use crate::ensemble::{run_indexed, MomentAccumulator};
use crate::error::{Error, Result};
use crate::noise::{sample_white_noise_field, NoiseOperator};
use crate::rng::{Channel, NoiseStream, StreamKey};
use crate::spectral::ConvolutionMethod;
use crate::wick::{solve, Integrator, Nonlinearity, SolveStatus, SolverConfig};

/// Paths that blow up beyond this fraction flag the report.
pub const BLOWUP_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConfig {
    pub cutoff: usize,
    pub horizon: f64,
    pub dt: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default)]
    pub convolution: ConvolutionMethod,
}

fn default_integrator() -> Integrator {
    Integrator::StrangMidpoint
}

impl VarianceConfig {
    pub fn new(cutoff: usize, horizon: f64, dt: f64, samples: usize, seed: u64) -> Self {
        Self {
            cutoff,
            horizon,
            dt,
            samples,
            seed,
            integrator: default_integrator(),
            convolution: ConvolutionMethod::default(),
        }
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            integrator: self.integrator,
            nonlinearity: Nonlinearity::Wick,
            seed: self.seed,
            convolution: self.convolution,
            ..SolverConfig::new(self.cutoff, self.dt, self.horizon)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub cutoff: usize,
    /// `0, T/4, T/2, T`.
    pub times: Vec<f64>,
    /// `variances[k][n + N]` at `times[k]`.
    pub variances: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    /// `max |var / (1 + t) - 1|` over modes and report times.
    pub max_relative_deviation: f64,
    /// Mode-averaged variance against `t` over the whole grid.
    pub drift: LinearFit,
    pub completed: usize,
    pub blowup_fraction: f64,
    pub flagged: bool,
}

/// Empirical `E|û(t, n)|²` for `u₀` white noise of unit variance, `φ = Id`
/// and the truncated Wick nonlinearity.
pub fn variance_invariance_test(cfg: &VarianceConfig, workers: Option<usize>) -> Result<VarianceReport> {
    let solver = cfg.solver();
    let grid = solver.grid()?;
    if grid.steps % 4 != 0 {
        return Err(Error::InvalidParameter(format!(
            "step count {} must be divisible by 4",
            grid.steps
        )));
    }
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let marks = [0, grid.steps / 4, grid.steps / 2, grid.steps];
    let op = NoiseOperator::identity(cfg.cutoff);
    let dim = 2 * cfg.cutoff + 1;
    let runs = run_indexed(cfg.samples, workers, |j| -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let mut st = NoiseStream::new(StreamKey::new(cfg.seed, j as u64, Channel::InitialData));
        let u0 = sample_white_noise_field(cfg.cutoff, 1.0, &mut st)?;
        let sol = solve(&u0, &op, &solver, j as u64)?;
        if sol.status != SolveStatus::Completed {
            return Ok(None);
        }
        let states = &sol.trajectory.states;
        let at_marks = marks
            .iter()
            .flat_map(|&m| states[m].coeffs().iter().map(|c| c.norm_sqr()))
            .collect();
        let averaged = states.iter().map(|u| u.mass() / dim as f64).collect();
        Ok(Some((at_marks, averaged)))
    });
    let mut per_mode = MomentAccumulator::new(marks.len() * dim);
    let mut averaged = MomentAccumulator::new(grid.len());
    for r in runs {
        if let Some((a, b)) = r? {
            per_mode.push(&a);
            averaged.push(&b);
        }
    }
    let completed = per_mode.count;
    let blowup_fraction = 1.0 - completed as f64 / cfg.samples as f64;
    if completed < 2 {
        return Err(Error::InsufficientData(format!("only {completed} paths completed")));
    }
    let times: Vec<f64> = marks.iter().map(|&m| grid.time(m)).collect();
    let means = per_mode.mean();
    let errs = per_mode.std_error();
    let variances: Vec<Vec<f64>> = means.chunks(dim).map(<[f64]>::to_vec).collect();
    let std_errors: Vec<Vec<f64>> = errs.chunks(dim).map(<[f64]>::to_vec).collect();
    let max_relative_deviation = variances
        .iter()
        .zip(&times)
        .flat_map(|(row, t)| row.iter().map(move |v| (v / (1.0 + t) - 1.0).abs()))
        .fold(0.0, f64::max);
    let ts: Vec<f64> = grid.times().collect();
    let drift = linear_fit(&ts, &averaged.mean())?;
    Ok(VarianceReport {
        cutoff: cfg.cutoff,
        times,
        variances,
        std_errors,
        max_relative_deviation,
        drift,
        completed,
        blowup_fraction,
        flagged: blowup_fraction > BLOWUP_TOLERANCE,
    })
}
