//! The mass-dependent phase rotation linking the cubic and Wick-ordered flows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::solver::{solve, Nonlinearity, SolverConfig};
use crate::error::{Error, Result};
use crate::noise::{NoiseOperator, Trajectory};
use crate::norms::fl_norm;
use crate::spectral::{propagator_phase, ConvolutionMethod, SpectralField};

/// `Forward` maps cubic solutions to Wick-ordered ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeSign {
    Forward,
    Inverse,
}

impl GaugeSign {
    pub fn from_int(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Self::Forward),
            -1 => Ok(Self::Inverse),
            _ => Err(Error::InvalidParameter(format!("gauge sign must be ±1, got {sign}"))),
        }
    }

    fn value(self) -> f64 {
        match self {
            Self::Forward => 1.0,
            Self::Inverse => -1.0,
        }
    }
}

/// `u(t_m) ↦ e^{∓2i t_m M(t_m)} u(t_m)`.
pub fn gauge_transform(traj: &Trajectory, sign: GaugeSign) -> Trajectory {
    let states = traj
        .states
        .iter()
        .enumerate()
        .map(|(m, u)| {
            let phase = -2.0 * sign.value() * traj.grid.time(m) * u.mass();
            u.scaled(Complex64::from_polar(1.0, phase))
        })
        .collect();
    Trajectory {
        grid: traj.grid,
        states,
        noise: traj.noise.clone(),
    }
}

/// Per-step residual of the noiseless Wick equation in its one-step form,
/// `‖(u_{m+1} - S(dt)[u_m + i dt 𝒩(u_m)]) / dt‖_{L²}`.
pub fn wick_residual(traj: &Trajectory) -> Vec<f64> {
    let dt = traj.grid.dt;
    let i = Complex64::new(0.0, 1.0);
    traj.states
        .windows(2)
        .map(|w| {
            let f = Nonlinearity::Wick.eval(&w[0], ConvolutionMethod::Exact);
            let pred = SpectralField::from_fn(w[0].cutoff(), |n| {
                propagator_phase(dt, n) * (w[0].get(n) + i * dt * f.get(n))
            })
            .expect("finite prediction");
            fl_norm(&(&w[1] - &pred), 0.0, 2.0) / dt
        })
        .collect()
}

/// Largest `L²` gap over the grid between the gauged cubic solution and the
/// Wick solution, both from `u0` without noise.
pub fn gauge_equivalence_gap(u0: &SpectralField, dt: f64, horizon: f64) -> Result<f64> {
    let mut cfg = SolverConfig::new(u0.cutoff(), dt, horizon);
    let op = NoiseOperator::zero(u0.cutoff());
    cfg.nonlinearity = Nonlinearity::Cubic;
    let cubic = solve(u0, &op, &cfg, 0)?.trajectory;
    cfg.nonlinearity = Nonlinearity::Wick;
    let wick = solve(u0, &op, &cfg, 0)?.trajectory;
    if cubic.states.len() != wick.states.len() {
        return Err(Error::BlowUp {
            step: cubic.states.len().min(wick.states.len()),
            last_valid_time: cubic.grid.horizon().min(wick.grid.horizon()),
        });
    }
    let gauged = gauge_transform(&cubic, GaugeSign::Forward);
    Ok(gauged
        .states
        .iter()
        .zip(&wick.states)
        .map(|(a, b)| fl_norm(&(a - b), 0.0, 2.0))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::TimeGrid;
    use crate::rng::{Channel, NoiseStream, StreamKey};
    use crate::wick::solver::observed_orders;

    fn random_field(cutoff: usize, seed: u64, scale: f64) -> SpectralField {
        let mut s = NoiseStream::new(StreamKey::new(seed, 0, Channel::InitialData));
        SpectralField::from_fn(cutoff, |n| s.complex_gaussian() * scale / (1.0 + (n * n) as f64).sqrt()).unwrap()
    }

    #[test]
    fn round_trip_and_norms() {
        let grid = TimeGrid::with_horizon(0.05, 1.0).unwrap();
        let states = (0..grid.len()).map(|m| random_field(5, m as u64, 1.0)).collect();
        let traj = Trajectory::new(grid, states).unwrap();
        let g = gauge_transform(&traj, GaugeSign::Forward);
        assert_eq!(g.states[0], traj.states[0]);
        for (a, b) in g.states.iter().zip(&traj.states) {
            for (s, p) in [(0.0, 2.0), (0.5, 3.0), (-1.0, 1.5)] {
                let (x, y) = (fl_norm(a, s, p), fl_norm(b, s, p));
                assert!((x - y).abs() <= 1e-15 * y);
            }
        }
        let back = gauge_transform(&g, GaugeSign::Inverse);
        for (a, b) in back.states.iter().zip(&traj.states) {
            assert!(a.max_abs_diff(b) < 1e-14);
        }
        assert!(GaugeSign::from_int(0).is_err());
    }

    #[test]
    fn gauged_cubic_solution_solves_wick_equation() {
        let u0 = random_field(16, 3, 0.5);
        let mut res = Vec::new();
        for j in 0..3 {
            let dt = 1e-3 / 2f64.powi(j);
            let mut cfg = SolverConfig::new(16, dt, 0.1);
            cfg.nonlinearity = Nonlinearity::Cubic;
            let cubic = solve(&u0, &NoiseOperator::zero(16), &cfg, 0).unwrap().trajectory;
            let g = gauge_transform(&cubic, GaugeSign::Forward);
            res.push(wick_residual(&g).into_iter().fold(0.0, f64::max));
        }
        for o in observed_orders(&res) {
            assert!(o > 0.9, "{res:?}");
        }
    }

    #[test]
    fn gap_shrinks_with_step() {
        let u0 = random_field(8, 5, 0.8);
        let gaps: Vec<f64> = (0..4)
            .map(|j| gauge_equivalence_gap(&u0, 0.01 / 2f64.powi(j), 0.2).unwrap())
            .collect();
        for o in observed_orders(&gaps) {
            assert!(o > 0.9, "{gaps:?}");
        }
    }
}
