//! Picard iteration of the discrete mild formulation
//! `u = S(t)u₀ + i D(𝒩(u)) - iΨ`, with `D` the left-endpoint Duhamel sum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::solver::{Solution, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::noise::{convolution_step, NoiseOperator, NoisePath, Trajectory};
use crate::norms::{discrete_duhamel, xsb_norm, TimeWindow, XsbParams};
use crate::spectral::SpectralField;

/// Differences below this fraction of the iterate norm are treated as
/// roundoff and excluded from the contraction fit.
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PicardStatus {
    Converged,
    MaxIterations,
    /// Three consecutive difference ratios of at least one.
    NonContraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub status: PicardStatus,
    /// Number of maps applied.
    pub iterations: usize,
    /// `‖u^{(j+1)} - u^{(j)}‖` in the windowed norm.
    pub differences: Vec<f64>,
    /// `differences[j+1] / differences[j]`.
    pub ratios: Vec<f64>,
    /// Geometric mean of the ratios above roundoff; `None` if there are none.
    pub contraction_factor: Option<f64>,
    /// `u^{(0)}, u^{(1)}, …`.
    pub iterates: Vec<Trajectory>,
}

impl PicardReport {
    pub fn limit(&self) -> &Trajectory {
        self.iterates.last().expect("at least one iterate")
    }
}

/// `Ψ` driven by the recorded increments of `noise`.
pub fn convolution_from_path(op: &NoiseOperator, noise: &NoisePath) -> Trajectory {
    let mut psi = SpectralField::zeros(op.cutoff());
    let mut states = vec![psi.clone()];
    for zeta in &noise.increments {
        psi = convolution_step(&psi, op, noise.grid.dt, zeta);
        states.push(psi.clone());
    }
    Trajectory {
        grid: noise.grid,
        states,
        noise: Some(noise.clone()),
    }
}

fn picard_map(
    u0: &SpectralField,
    psi: &Trajectory,
    current: &Trajectory,
    cfg: &SolverConfig,
) -> Trajectory {
    let forcing = Trajectory {
        grid: current.grid,
        states: current
            .states
            .iter()
            .map(|u| cfg.nonlinearity.eval(u, cfg.convolution))
            .collect(),
        noise: None,
    };
    let duhamel = discrete_duhamel(&forcing);
    let i = Complex64::new(0.0, 1.0);
    let states = (0..current.grid.len())
        .map(|m| {
            let free = u0.propagate(current.grid.time(m));
            let coeffs = free
                .coeffs()
                .iter()
                .zip(duhamel.states[m].coeffs())
                .zip(psi.states[m].coeffs())
                .map(|((a, d), p)| a + i * d - i * p)
                .collect();
            SpectralField::from_raw(u0.cutoff(), coeffs)
        })
        .collect();
    Trajectory {
        grid: current.grid,
        states,
        noise: None,
    }
}

/// Iterates the mild map from `u^{(0)} = S(t)u₀ - iΨ`, measuring successive
/// differences with `norm` on `[0, norm.t]` under the window of that scale.
pub fn picard_iterate(
    u0: &SpectralField,
    op: &NoiseOperator,
    psi: &Trajectory,
    cfg: &SolverConfig,
    norm: &XsbParams,
) -> Result<PicardReport> {
    cfg.validate()?;
    if op.cutoff() != u0.cutoff() || psi.cutoff() != u0.cutoff() {
        return Err(Error::CutoffMismatch {
            left: u0.cutoff(),
            right: psi.cutoff(),
        });
    }
    let grid = cfg.grid()?;
    if psi.grid.steps != grid.steps || (psi.grid.dt - grid.dt).abs() > 1e-15 * grid.dt {
        return Err(Error::InvalidParameter("Ψ is not sampled on the solver grid".into()));
    }
    let window = TimeWindow::new(norm.t)?;
    let i = Complex64::new(0.0, 1.0);
    let first = Trajectory {
        grid,
        states: (0..grid.len())
            .map(|m| &u0.propagate(grid.time(m)) - &psi.states[m].scaled(i))
            .collect(),
        noise: None,
    };
    let mut iterates = vec![first];
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    let mut valid = Vec::new();
    let mut streak = 0;
    let mut status = PicardStatus::MaxIterations;
    for _ in 0..cfg.picard_max_iters {
        let current = iterates.last().expect("nonempty");
        let next = picard_map(u0, psi, current, cfg);
        if next.states.iter().any(|u| !u.is_finite()) {
            status = PicardStatus::NonContraction;
            break;
        }
        let diff = Trajectory {
            grid,
            states: next.states.iter().zip(&current.states).map(|(a, b)| a - b).collect(),
            noise: None,
        };
        let d = xsb_norm(&diff, norm, &window)?;
        let size = xsb_norm(&next, norm, &window)?;
        if let Some(&prev) = differences.last() {
            let r: f64 = if prev > 0.0 { d / prev } else { 0.0 };
            ratios.push(r);
            if prev > ROUNDOFF * size && d > ROUNDOFF * size {
                valid.push(r);
            }
            streak = if r >= 1.0 { streak + 1 } else { 0 };
        }
        differences.push(d);
        iterates.push(next);
        if d < cfg.picard_tolerance {
            status = PicardStatus::Converged;
            break;
        }
        if streak >= 3 {
            status = PicardStatus::NonContraction;
            break;
        }
    }
    let contraction_factor = if valid.is_empty() {
        None
    } else {
        Some((valid.iter().map(|r| r.ln()).sum::<f64>() / valid.len() as f64).exp())
    };
    Ok(PicardReport {
        status,
        iterations: differences.len(),
        differences,
        ratios,
        contraction_factor,
        iterates,
    })
}

/// Picard run used by `solve` when the configured integrator asks for it.
/// The differences are measured in plain `L²_t L²_x` over the horizon.
pub(crate) fn solve_by_picard(
    u0: &SpectralField,
    op: &NoiseOperator,
    cfg: &SolverConfig,
    noise: NoisePath,
) -> Result<Solution> {
    let psi = convolution_from_path(op, &noise);
    let norm = XsbParams {
        s: 0.0,
        b: 0.0,
        bprime: 0.0,
        p: 2.0,
        q: 2.0,
        t: cfg.horizon.min(1.0),
    };
    let report = picard_iterate(u0, op, &psi, cfg, &norm)?;
    if report.status != PicardStatus::Converged {
        return Err(Error::NoConvergence(format!(
            "{:?} after {} iterations",
            report.status, report.iterations
        )));
    }
    let mut trajectory = report.limit().clone();
    trajectory.noise = Some(noise);
    Ok(Solution {
        trajectory,
        status: SolveStatus::Completed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::bessel_operator;
    use crate::norms::fl_norm;
    use crate::rng::{Channel, NoiseStream, StreamKey};
    use crate::wick::solver::{solve, Integrator};

    fn data(cutoff: usize, seed: u64, size: f64, s: f64, p: f64) -> SpectralField {
        let mut st = NoiseStream::new(StreamKey::new(seed, 0, Channel::InitialData));
        let f = SpectralField::from_fn(cutoff, |_| st.complex_gaussian()).unwrap();
        f.scaled(Complex64::new(size / fl_norm(&f, s, p), 0.0))
    }

    fn norm(t: f64) -> XsbParams {
        XsbParams { s: 0.1, b: 0.6, bprime: -0.2, p: 4.0, q: 2.0, t }
    }

    #[test]
    fn zero_problem_converges_immediately() {
        let cfg = SolverConfig::new(4, 1.0 / 640.0, 0.1);
        let grid = cfg.grid().unwrap();
        let psi = Trajectory::zeros(4, grid);
        let rep = picard_iterate(&SpectralField::zeros(4), &NoiseOperator::zero(4), &psi, &cfg, &norm(0.1)).unwrap();
        assert_eq!(rep.status, PicardStatus::Converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.differences, vec![0.0]);
    }

    #[test]
    fn small_data_contracts_and_matches_euler() {
        let mut cfg = SolverConfig::new(8, 1.0 / 640.0, 0.1);
        cfg.seed = 4;
        let op = bessel_operator(8, 1.0);
        let u0 = data(8, 1, 0.1, 0.1, 4.0);
        let noise = NoisePath::generate(cfg.grid().unwrap(), 8, cfg.seed, 0);
        let psi = convolution_from_path(&op, &noise);
        let rep = picard_iterate(&u0, &op, &psi, &cfg, &norm(0.1)).unwrap();
        assert_eq!(rep.status, PicardStatus::Converged);
        assert!(rep.contraction_factor.unwrap() < 0.5);
        let euler = solve(&u0, &op, &cfg, 0).unwrap().trajectory;
        let gap = rep
            .limit()
            .states
            .iter()
            .zip(&euler.states)
            .map(|(a, b)| fl_norm(&(a - b), 0.1, 4.0))
            .fold(0.0, f64::max);
        assert!(gap < 10.0 * cfg.dt.max(cfg.picard_tolerance));
        assert!(gap < 1e-10, "{gap}");
        cfg.integrator = Integrator::PicardIteration;
        let via_solve = solve(&u0, &op, &cfg, 0).unwrap();
        assert!(via_solve.trajectory.states[25].max_abs_diff(&euler.states[25]) < 1e-12);
    }

    #[test]
    fn large_data_fails_to_contract() {
        let cfg = SolverConfig::new(8, 1.0 / 64.0, 0.5);
        let u0 = data(8, 2, 30.0, 0.0, 2.0);
        let psi = Trajectory::zeros(8, cfg.grid().unwrap());
        let rep = picard_iterate(&u0, &NoiseOperator::zero(8), &psi, &cfg, &norm(0.5)).unwrap();
        assert_eq!(rep.status, PicardStatus::NonContraction);
        assert!(rep.iterations < cfg.picard_max_iters);
    }

    #[test]
    fn contraction_improves_as_horizon_shrinks() {
        let u0 = data(8, 3, 1.0, 0.1, 4.0);
        let op = NoiseOperator::zero(8);
        let mut factors = Vec::new();
        for t in [0.2, 0.1, 0.05] {
            let cfg = SolverConfig::new(8, 1.0 / 640.0, t);
            let psi = Trajectory::zeros(8, cfg.grid().unwrap());
            let rep = picard_iterate(&u0, &op, &psi, &cfg, &norm(t)).unwrap();
            factors.push(rep.contraction_factor.unwrap());
        }
        assert!(factors.windows(2).all(|w| w[1] < w[0]), "{factors:?}");
    }
}
