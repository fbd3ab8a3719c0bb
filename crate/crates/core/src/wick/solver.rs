//! Time stepping of `i u_t - u_xx + 𝒩(u) = φξ` on the truncated band.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::nonlinearity::{cubic_nonlinearity_with, wick_nonlinearity_with};
use crate::error::{Error, Result};
use crate::noise::{NoiseOperator, NoisePath, TimeGrid, Trajectory};
use crate::spectral::{propagator_phase, ConvolutionMethod, SpectralField};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `(|u|² - 2M) u`.
    #[default]
    Wick,
    /// `|u|² u`.
    Cubic,
    /// Linear equation.
    None,
}

impl Nonlinearity {
    pub fn eval(&self, u: &SpectralField, method: ConvolutionMethod) -> SpectralField {
        match self {
            Self::Wick => wick_nonlinearity_with(u, method),
            Self::Cubic => cubic_nonlinearity_with(u, method),
            Self::None => SpectralField::zeros(u.cutoff()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// `S(dt)[u + i dt 𝒩(u)] - iφζ`.
    #[default]
    ExponentialEuler,
    /// `S(dt/2)`, an implicit-midpoint step of `u' = i𝒩(u)`, `S(dt/2)`, then
    /// the noise kick. Symplectic and mass-preserving, so it keeps Gaussian
    /// white noise measures invariant.
    StrangMidpoint,
    /// Fixed point of the discrete mild formulation; see [`super::picard`].
    PicardIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub cutoff: usize,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(default = "default_picard_iters")]
    pub picard_max_iters: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub convolution: ConvolutionMethod,
}

fn default_picard_iters() -> usize {
    50
}

fn default_picard_tol() -> f64 {
    1e-12
}

fn default_ensemble() -> usize {
    1
}

impl SolverConfig {
    pub fn new(cutoff: usize, dt: f64, horizon: f64) -> Self {
        Self {
            cutoff,
            dt,
            horizon,
            integrator: Integrator::default(),
            nonlinearity: Nonlinearity::default(),
            picard_max_iters: default_picard_iters(),
            picard_tolerance: default_picard_tol(),
            seed: 0,
            ensemble_size: default_ensemble(),
            convolution: ConvolutionMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.picard_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "picard tolerance must be positive, got {}",
                self.picard_tolerance
            )));
        }
        if self.ensemble_size == 0 {
            return Err(Error::InvalidParameter("ensemble size must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::with_horizon(self.dt, self.horizon)
    }
}

/// One exponential-Euler step with mode increments `kick = φζ`.
pub fn step_exponential_euler(
    u: &SpectralField,
    nl: Nonlinearity,
    method: ConvolutionMethod,
    dt: f64,
    kick: &[Complex64],
) -> SpectralField {
    let f = nl.eval(u, method);
    let i = Complex64::new(0.0, 1.0);
    let coeffs = u
        .iter()
        .zip(f.coeffs())
        .zip(kick)
        .map(|(((n, a), b), k)| propagator_phase(dt, n) * (a + i * dt * b) - i * k)
        .collect();
    SpectralField::from_raw(u.cutoff(), coeffs)
}

/// Exponential-Euler step driven by raw increments `ζ` through `op`.
pub fn step_exponential_euler_op(
    u: &SpectralField,
    op: &NoiseOperator,
    dt: f64,
    zeta: &[Complex64],
    nl: Nonlinearity,
) -> SpectralField {
    step_exponential_euler(u, nl, ConvolutionMethod::Exact, dt, &op.apply(zeta))
}

const MIDPOINT_MAX_ITERS: usize = 60;
const MIDPOINT_MAX_DEPTH: u32 = 8;

/// Implicit midpoint `v = u + i h 𝒩((u + v)/2)` by fixed-point iteration;
/// halves the step when the iteration fails to contract.
fn implicit_midpoint(u: &SpectralField, nl: Nonlinearity, method: ConvolutionMethod, h: f64, depth: u32) -> SpectralField {
    let i = Complex64::new(0.0, h);
    let scale = u.coeffs().iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut v = u.clone();
    let mut last = f64::INFINITY;
    for _ in 0..MIDPOINT_MAX_ITERS {
        let mid = SpectralField::from_raw(
            u.cutoff(),
            u.coeffs().iter().zip(v.coeffs()).map(|(a, b)| (a + b) * 0.5).collect(),
        );
        let f = nl.eval(&mid, method);
        let next = SpectralField::from_raw(
            u.cutoff(),
            u.coeffs().iter().zip(f.coeffs()).map(|(a, b)| a + i * b).collect(),
        );
        let change = next.max_abs_diff(&v);
        v = next;
        if change <= 1e-13 * scale {
            return v;
        }
        if !change.is_finite() || change > 0.9 * last && change > 1e-9 * scale {
            break;
        }
        last = change;
    }
    if depth >= MIDPOINT_MAX_DEPTH {
        return v;
    }
    let half = implicit_midpoint(u, nl, method, h / 2.0, depth + 1);
    implicit_midpoint(&half, nl, method, h / 2.0, depth + 1)
}

/// One Strang/implicit-midpoint step with mode increments `kick = φζ`.
pub fn step_strang_midpoint(
    u: &SpectralField,
    nl: Nonlinearity,
    method: ConvolutionMethod,
    dt: f64,
    kick: &[Complex64],
) -> SpectralField {
    let half = u.propagate(dt / 2.0);
    let mid = match nl {
        Nonlinearity::None => half,
        _ => implicit_midpoint(&half, nl, method, dt, 0),
    };
    let i = Complex64::new(0.0, 1.0);
    let coeffs = mid
        .iter()
        .zip(kick)
        .map(|((n, a), k)| a * propagator_phase(dt / 2.0, n) - i * k)
        .collect();
    SpectralField::from_raw(u.cutoff(), coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Completed,
    BlowUp { step: usize, last_valid_time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub status: SolveStatus,
}

/// Integrates from `u0` with the increments of `trajectory` under `cfg.seed`.
/// On a non-finite state the trajectory is cut at the last finite state.
pub fn solve(u0: &SpectralField, op: &NoiseOperator, cfg: &SolverConfig, trajectory: u64) -> Result<Solution> {
    cfg.validate()?;
    u0.check_cutoff(&SpectralField::zeros(cfg.cutoff))?;
    if op.cutoff() != cfg.cutoff {
        return Err(Error::CutoffMismatch {
            left: cfg.cutoff,
            right: op.cutoff(),
        });
    }
    let grid = cfg.grid()?;
    let noise = NoisePath::generate(grid, cfg.cutoff, cfg.seed, trajectory);
    if cfg.integrator == Integrator::PicardIteration {
        return super::picard::solve_by_picard(u0, op, cfg, noise);
    }
    let mut states = Vec::with_capacity(grid.len());
    states.push(u0.clone());
    let mut status = SolveStatus::Completed;
    let mut u = u0.clone();
    for (m, zeta) in noise.increments.iter().enumerate() {
        let kick = op.apply(zeta);
        let next = match cfg.integrator {
            Integrator::StrangMidpoint => step_strang_midpoint(&u, cfg.nonlinearity, cfg.convolution, grid.dt, &kick),
            _ => step_exponential_euler(&u, cfg.nonlinearity, cfg.convolution, grid.dt, &kick),
        };
        if !next.is_finite() {
            status = SolveStatus::BlowUp {
                step: m + 1,
                last_valid_time: grid.time(m),
            };
            break;
        }
        states.push(next.clone());
        u = next;
    }
    let grid = TimeGrid {
        steps: states.len() - 1,
        ..grid
    };
    let mut noise = noise;
    noise.increments.truncate(grid.steps);
    noise.grid = grid;
    Ok(Solution {
        trajectory: Trajectory {
            grid,
            states,
            noise: Some(noise),
        },
        status,
    })
}

/// Exact solution of the noiseless single-mode equation from `A e_k`:
/// `A e^{i(k² - |A|²) t} e_k` for the Wick flow, `A e^{i(k² + |A|²) t} e_k`
/// for the cubic one.
pub fn single_mode_exact(amplitude: Complex64, k: i64, t: f64, nl: Nonlinearity) -> Complex64 {
    let m = amplitude.norm_sqr();
    let omega = (k * k) as f64
        + match nl {
            Nonlinearity::Wick => -m,
            Nonlinearity::Cubic => m,
            Nonlinearity::None => 0.0,
        };
    amplitude * Complex64::from_polar(1.0, omega * t)
}

/// Observed convergence order from errors at successively halved steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
