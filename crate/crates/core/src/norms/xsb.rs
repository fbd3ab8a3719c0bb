//! Windowed Fourier restriction norms on a discrete time grid.
//!
//! For a trajectory `u` the norm is taken of `v(t) = η(t/T) S(-t) u(t)`, where
//! the interaction representation `S(-t)u(t)` is extended to the whole line by
//! its values at `t = 0` and `t = T`. The time transform is a zero-padded DFT
//! over `[-2T, 2T)` and `L^q_τ` is a Riemann sum on the DFT frequencies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{fl_norm, lp_norm};
use crate::error::{Error, Result};
use crate::noise::{TimeGrid, Trajectory};
use crate::spectral::{bracket, fft_forward, propagator_phase, SpectralField};

/// Minimum number of grid points required on `[0, T]`.
pub const MIN_POINTS: usize = 16;
/// Zero-padding factor of the time transform.
pub const PAD_FACTOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsbParams {
    pub s: f64,
    pub b: f64,
    pub bprime: f64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl XsbParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must lie in (1, ∞), got {}", self.p));
        }
        if !(self.q > 1.0 && self.q.is_finite()) {
            return bad(format!("q must lie in (1, ∞), got {}", self.q));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return bad(format!("T must lie in (0, 1], got {}", self.t));
        }
        if self.bprime > 0.0 {
            return bad(format!("b' must be non-positive, got {}", self.bprime));
        }
        if !(self.s.is_finite() && self.b.is_finite() && self.bprime.is_finite()) {
            return bad("non-finite exponent".into());
        }
        Ok(())
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `-1/p < b' < 0 < b < 1 - 1/p`.
    pub fn check_trilinear_window(&self) -> Result<()> {
        self.validate()?;
        let lo = -1.0 / self.p;
        let hi = 1.0 - 1.0 / self.p;
        if lo < self.bprime && self.bprime < 0.0 && 0.0 < self.b && self.b < hi {
            Ok(())
        } else {
            Err(Error::ExponentWindow(format!(
                "need {lo} < b' < 0 < b < {hi}, got b = {}, b' = {}",
                self.b, self.bprime
            )))
        }
    }

    /// `(b - 1) p < -1`.
    pub fn check_solution_class(&self) -> Result<()> {
        self.validate()?;
        if (self.b - 1.0) * self.p < -1.0 {
            Ok(())
        } else {
            Err(Error::ExponentWindow(format!(
                "need (b - 1) p < -1, got b = {}, p = {}",
                self.b, self.p
            )))
        }
    }

    pub fn with_b(self, b: f64) -> Self {
        Self { b, ..self }
    }

    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }
}

/// Cutoff profile `η(t/T)`: 1 for `|t| ≤ T`, 0 for `|t| ≥ 2T`, and the C²
/// transition `1 - ρ(|t|/T - 1)` with `ρ(x) = x - sin(2πx)/(2π)` between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub scale: f64,
}

impl TimeWindow {
    pub fn new(scale: f64) -> Result<Self> {
        if scale > 0.0 && scale.is_finite() {
            Ok(Self { scale })
        } else {
            Err(Error::InvalidParameter(format!("window scale must be positive, got {scale}")))
        }
    }

    /// The unscaled profile `η`.
    pub fn profile(x: f64) -> f64 {
        let a = x.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let y = a - 1.0;
            1.0 - (y - (std::f64::consts::TAU * y).sin() / std::f64::consts::TAU)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        Self::profile(t / self.scale)
    }
}

/// Window sample times `t_j = -2T + j dt` and the index of `t = 0` and `t = T`.
struct WindowGrid {
    dt: f64,
    len: usize,
    zero: usize,
    end: usize,
}

fn window_grid(grid: &TimeGrid, t: f64) -> Result<WindowGrid> {
    let dt = grid.dt;
    let ratio = t / dt;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::NonUniformGrid(format!("T = {t} is not a multiple of dt = {dt}")));
    }
    let m = m as usize;
    if m + 1 < MIN_POINTS {
        return Err(Error::GridTooCoarse {
            points: m + 1,
            required: MIN_POINTS,
        });
    }
    if m > grid.steps {
        return Err(Error::InvalidParameter(format!(
            "trajectory ends at {} before T = {t}",
            grid.horizon()
        )));
    }
    Ok(WindowGrid {
        dt,
        len: 4 * m,
        zero: 2 * m,
        end: m,
    })
}

/// Interaction representation at `t_m`, `m ≤ end`.
fn interaction_rep(traj: &Trajectory, m: usize) -> SpectralField {
    traj.states[m].propagate(-traj.grid.time(m))
}

/// `(∫ ⟨τ⟩^{bq} |F(τ)|^q dτ)^{1/q}` for samples `v_j` at spacing `dt`, with
/// `F = (2π)^{-1/2} dt · DFT` on the padded grid.
fn temporal_lq(samples: &[Complex64], dt: f64, b: f64, q: f64) -> f64 {
    let len = samples.len() * PAD_FACTOR;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..samples.len()].copy_from_slice(samples);
    fft_forward(len).process(&mut buf);
    let dtau = std::f64::consts::TAU / (len as f64 * dt);
    let norm = dt / std::f64::consts::TAU.sqrt();
    let mut acc = 0.0;
    for (k, z) in buf.iter().enumerate() {
        let kk = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
        let tau = kk * dtau;
        acc += (bracket(tau).powf(b) * z.norm() * norm).powf(q);
    }
    (acc * dtau).powf(1.0 / q)
}

/// Windowed space-time norm `‖⟨n⟩^s ⟨τ⟩^b F_t v(τ, n)‖_{ℓ^p_n L^q_τ}`.
pub fn xsb_norm(traj: &Trajectory, params: &XsbParams, window: &TimeWindow) -> Result<f64> {
    params.validate()?;
    let wg = window_grid(&traj.grid, params.t)?;
    let reps: Vec<SpectralField> = (0..=wg.end).map(|m| interaction_rep(traj, m)).collect();
    let eta: Vec<f64> = (0..wg.len)
        .map(|j| window.eval((j as f64 - wg.zero as f64) * wg.dt))
        .collect();
    let cutoff = traj.cutoff();
    let mut per_mode = Vec::with_capacity(2 * cutoff + 1);
    let mut samples = vec![Complex64::new(0.0, 0.0); wg.len];
    for i in 0..2 * cutoff + 1 {
        for (j, s) in samples.iter_mut().enumerate() {
            let m = j.saturating_sub(wg.zero).min(wg.end);
            *s = reps[m].coeffs()[i] * eta[j];
        }
        let n = i as f64 - cutoff as f64;
        per_mode.push(bracket(n).powf(params.s) * temporal_lq(&samples, wg.dt, params.b, params.q));
    }
    Ok(lp_norm(per_mode, params.p))
}

/// Temporal factor of the windowed norm for a time-independent interaction
/// representation: the norm of the window alone.
pub fn temporal_factor(params: &XsbParams, window: &TimeWindow, dt: f64) -> Result<f64> {
    params.validate()?;
    let grid = TimeGrid::with_horizon(dt, params.t)
        .map_err(|_| Error::NonUniformGrid(format!("T = {} is not a multiple of dt = {dt}", params.t)))?;
    let wg = window_grid(&grid, params.t)?;
    let samples: Vec<Complex64> = (0..wg.len)
        .map(|j| Complex64::new(window.eval((j as f64 - wg.zero as f64) * dt), 0.0))
        .collect();
    Ok(temporal_lq(&samples, dt, params.b, params.q))
}

/// Ratio of the windowed norm of `t ↦ S(t)f` to `‖f‖_{FL^{s,p}}`, with the
/// flow sampled at spacing `dt`.
pub fn homogeneous_estimate_check(
    f: &SpectralField,
    params: &XsbParams,
    window: &TimeWindow,
    dt: f64,
) -> Result<f64> {
    let denom = fl_norm(f, params.s, params.p);
    if denom == 0.0 {
        return Err(Error::ZeroNorm("initial datum".into()));
    }
    let grid = TimeGrid::with_horizon(dt, params.t)?;
    let traj = Trajectory::linear_flow(f, grid);
    Ok(xsb_norm(&traj, params, window)? / denom)
}

/// Left-endpoint Duhamel sum `D(t_m) = Σ_{l<m} dt S(t_m - t_l) F(t_l)`.
pub fn discrete_duhamel(forcing: &Trajectory) -> Trajectory {
    let grid = forcing.grid;
    let cutoff = forcing.cutoff();
    let mut states = Vec::with_capacity(grid.len());
    let mut d = SpectralField::zeros(cutoff);
    states.push(d.clone());
    for m in 0..grid.steps {
        let coeffs = d
            .iter()
            .zip(forcing.states[m].coeffs())
            .map(|((n, a), f)| (a + f * grid.dt) * propagator_phase(grid.dt, n))
            .collect();
        d = SpectralField::from_raw(cutoff, coeffs);
        states.push(d.clone());
    }
    Trajectory {
        grid,
        states,
        noise: None,
    }
}

/// `(‖Duhamel(F)‖ at exponent b, ‖F‖ at exponent b')`, valid when
/// `-1/q < b' ≤ 0 ≤ b ≤ 1 + b'`.
pub fn duhamel_estimate_check(
    forcing: &Trajectory,
    params: &XsbParams,
    window: &TimeWindow,
) -> Result<(f64, f64)> {
    params.validate()?;
    let (b, bp, q) = (params.b, params.bprime, params.q);
    if !(-1.0 / q < bp && bp <= 0.0 && 0.0 <= b && b <= 1.0 + bp) {
        return Err(Error::ExponentWindow(format!(
            "need -1/q < b' <= 0 <= b <= 1 + b', got b = {b}, b' = {bp}, q = {q}"
        )));
    }
    let d = discrete_duhamel(forcing);
    let lhs = xsb_norm(&d, params, window)?;
    let rhs = xsb_norm(forcing, &params.with_b(bp), window)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Channel, NoiseStream, StreamKey};

    fn random_field(cutoff: usize, seed: u64) -> SpectralField {
        let mut s = NoiseStream::new(StreamKey::new(seed, 0, Channel::Auxiliary));
        SpectralField::from_fn(cutoff, |_| s.complex_gaussian()).unwrap()
    }

    fn params(s: f64, b: f64, p: f64, q: f64, t: f64) -> XsbParams {
        XsbParams { s, b, bprime: -0.1, p, q, t }
    }

    /// Direct evaluation of the continuous-τ quantity on the same τ-grid,
    /// summing exponentials instead of using the FFT.
    fn window_factor_oracle(p: &XsbParams, w: &TimeWindow, dt: f64) -> f64 {
        let m = (p.t / dt).round() as usize;
        let len = 4 * m;
        let big = len * PAD_FACTOR;
        let dtau = std::f64::consts::TAU / (big as f64 * dt);
        let mut acc = 0.0;
        for k in 0..big {
            let kk = if k <= big / 2 { k as f64 } else { k as f64 - big as f64 };
            let tau = kk * dtau;
            let mut z = Complex64::new(0.0, 0.0);
            for j in 0..len {
                let t = -2.0 * p.t + j as f64 * dt;
                z += Complex64::from_polar(w.eval(t), -tau * t);
            }
            let f = z.norm() * dt / std::f64::consts::TAU.sqrt();
            acc += (bracket(tau).powf(p.b) * f).powf(p.q);
        }
        (acc * dtau).powf(1.0 / p.q)
    }

    #[test]
    fn window_shape() {
        let w = TimeWindow::new(0.5).unwrap();
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(0.5), 1.0);
        assert_eq!(w.eval(-0.5), 1.0);
        assert_eq!(w.eval(1.0), 0.0);
        assert_eq!(w.eval(-3.0), 0.0);
        assert!((w.eval(0.75) - 0.5).abs() < 1e-15);
        for i in 0..=400 {
            let x = -2.5 + i as f64 * 0.0125;
            let v = TimeWindow::profile(x);
            assert!((0.0..=1.0).contains(&v));
        }
        // first and second one-sided derivatives vanish at the junctions
        let h = 1e-4;
        for x0 in [1.0, 2.0] {
            let d1 = (TimeWindow::profile(x0 + h) - TimeWindow::profile(x0 - h)) / (2.0 * h);
            let d2 = (TimeWindow::profile(x0 + h) - 2.0 * TimeWindow::profile(x0) + TimeWindow::profile(x0 - h)) / (h * h);
            assert!(d1.abs() < 1e-6 && d2.abs() < 1e-3, "x0={x0} d1={d1} d2={d2}");
        }
    }

    #[test]
    fn zero_trajectory_has_zero_norm() {
        let grid = TimeGrid::with_horizon(1.0 / 64.0, 0.5).unwrap();
        let traj = Trajectory::zeros(4, grid);
        let w = TimeWindow::new(0.5).unwrap();
        assert_eq!(xsb_norm(&traj, &params(0.2, 0.4, 3.0, 2.5, 0.5), &w).unwrap(), 0.0);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid = TimeGrid::with_horizon(1.0 / 8.0, 1.0).unwrap();
        let traj = Trajectory::zeros(2, grid);
        let w = TimeWindow::new(1.0).unwrap();
        assert!(matches!(
            xsb_norm(&traj, &params(0.0, 0.3, 2.0, 2.0, 1.0), &w),
            Err(Error::GridTooCoarse { points: 9, .. })
        ));
    }

    #[test]
    fn temporal_factor_matches_direct_sum() {
        let dt = 1.0 / 32.0;
        for (b, q, t) in [(0.0, 2.0, 0.5), (0.4, 3.0, 0.5), (0.7, 4.0, 1.0)] {
            let p = params(0.0, b, 2.0, q, t);
            let w = TimeWindow::new(t).unwrap();
            let fast = temporal_factor(&p, &w, dt).unwrap();
            let slow = window_factor_oracle(&p, &w, dt);
            assert!((fast / slow - 1.0).abs() < 1e-10, "{fast} vs {slow}");
        }
    }

    #[test]
    fn linear_flows_factorize() {
        let dt = 1.0 / 64.0;
        let p = params(0.3, 0.6, 4.0, 3.0, 0.5);
        let w = TimeWindow::new(p.t).unwrap();
        let factor = temporal_factor(&p, &w, dt).unwrap();
        let e0 = SpectralField::mode(8, 0, Complex64::new(1.0, 0.0)).unwrap();
        let r0 = homogeneous_estimate_check(&e0, &p, &w, dt).unwrap();
        assert!((r0 / factor - 1.0).abs() < 1e-10);
        for seed in 0..10 {
            let f = random_field(8, seed);
            let r = homogeneous_estimate_check(&f, &p, &w, dt).unwrap();
            assert!((r / r0 - 1.0).abs() < 1e-9);
            let r2 = homogeneous_estimate_check(&f.scaled(Complex64::new(2.0, 0.0)), &p, &w, dt).unwrap();
            assert!((r2 / r - 1.0).abs() < 1e-14);
        }
        assert!(matches!(
            homogeneous_estimate_check(&SpectralField::zeros(8), &p, &w, dt),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn plancherel_case_is_window_l2_norm() {
        let dt = 1.0 / 64.0;
        let p = params(0.0, 0.0, 2.0, 2.0, 0.5);
        let w = TimeWindow::new(p.t).unwrap();
        let f = random_field(5, 3);
        let ratio = homogeneous_estimate_check(&f, &p, &w, dt).unwrap();
        let m = (p.t / dt).round() as usize;
        let riemann: f64 = (0..4 * m)
            .map(|j| w.eval(-2.0 * p.t + j as f64 * dt).powi(2) * dt)
            .sum::<f64>()
            .sqrt();
        assert!((ratio / riemann - 1.0).abs() < 1e-12);
        // the continuous integral of η² over [-2T, 2T]
        let exact = {
            let k = 20_000;
            let h = 1.0 / k as f64;
            let tail: f64 = (0..k).map(|i| TimeWindow::profile(1.0 + (i as f64 + 0.5) * h).powi(2) * h).sum();
            (p.t * (2.0 + 2.0 * tail)).sqrt()
        };
        assert!((ratio / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn duhamel_recursion_matches_sum() {
        let grid = TimeGrid::with_horizon(1.0 / 16.0, 0.5).unwrap();
        let states: Vec<SpectralField> = (0..grid.len()).map(|m| random_field(3, m as u64)).collect();
        let forcing = Trajectory::new(grid, states).unwrap();
        let d = discrete_duhamel(&forcing);
        for m in [0usize, 1, 5, 8] {
            let mut direct = SpectralField::zeros(3);
            for l in 0..m {
                let term = forcing.states[l].propagate(grid.time(m) - grid.time(l)).scaled(Complex64::new(grid.dt, 0.0));
                direct = &direct + &term;
            }
            assert!(d.states[m].max_abs_diff(&direct) < 1e-13);
        }
    }

    #[test]
    fn duhamel_of_constant_forcing() {
        let dt = 1.0 / 64.0;
        let t = 0.5;
        let grid = TimeGrid::with_horizon(dt, t).unwrap();
        let e0 = SpectralField::mode(2, 0, Complex64::new(1.0, 0.0)).unwrap();
        let forcing = Trajectory::linear_flow(&e0, grid);
        let p = XsbParams { s: 0.0, b: 0.0, bprime: 0.0, p: 2.0, q: 2.0, t };
        let w = TimeWindow::new(t).unwrap();
        let (lhs, rhs) = duhamel_estimate_check(&forcing, &p, &w).unwrap();
        // D(t) = t e_0 on the grid, clamped to 0 and T outside [0, T]
        let m = (t / dt).round() as usize;
        let sq = |f: &dyn Fn(f64) -> f64| (0..4 * m).map(|j| f(-2.0 * t + j as f64 * dt).powi(2) * dt).sum::<f64>().sqrt();
        let d_oracle = sq(&|s: f64| w.eval(s) * s.clamp(0.0, t));
        let f_oracle = sq(&|s: f64| w.eval(s));
        assert!((lhs / d_oracle - 1.0).abs() < 1e-12);
        assert!((rhs / f_oracle - 1.0).abs() < 1e-12);
        let zero = Trajectory::zeros(2, grid);
        assert_eq!(duhamel_estimate_check(&zero, &p, &w).unwrap(), (0.0, 0.0));
        let bad = XsbParams { b: 0.9, bprime: -0.2, ..p };
        assert!(matches!(duhamel_estimate_check(&zero, &bad, &w), Err(Error::ExponentWindow(_))));
    }

    #[test]
    fn parameter_windows() {
        let p = XsbParams { s: 0.1, b: 0.74, bprime: -0.24, p: 4.0, q: 2.0, t: 1.0 };
        assert!(p.check_trilinear_window().is_ok());
        assert!(p.with_b(0.8).check_trilinear_window().is_err());
        assert!(p.check_solution_class().is_ok());
        assert!(p.with_b(0.8).check_solution_class().is_err());
        assert!(XsbParams { p: 1.0, ..p }.validate().is_err());
        assert!(XsbParams { t: 1.5, ..p }.validate().is_err());
    }
}
