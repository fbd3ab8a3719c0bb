//! Noise operators, cylindrical Wiener increments and the stochastic convolution.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Channel, NoiseStream, StreamKey};
use crate::spectral::{bracket, propagator_phase, SpectralField};

/// Largest cutoff accepted for dense matrix operators.
pub const MATRIX_CUTOFF_LIMIT: usize = 128;

/// The covariance operator applied to the cylindrical Wiener process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseOperator {
    /// Diagonal: mode `n` is scaled by `phi[n + N]`.
    Multiplier { cutoff: usize, phi: Vec<f64> },
    /// Dense, row-major: entry `(n, k)` is the coefficient of `φ(e_k)` on `e_n`.
    Matrix {
        cutoff: usize,
        entries: Vec<Complex64>,
    },
}

impl NoiseOperator {
    pub fn multiplier(cutoff: usize, phi: Vec<f64>) -> Result<Self> {
        let expected = 2 * cutoff + 1;
        if phi.len() != expected {
            return Err(Error::LengthMismatch {
                cutoff,
                expected,
                got: phi.len(),
            });
        }
        if let Some(i) = phi.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                freq: i as i64 - cutoff as i64,
            });
        }
        Ok(Self::Multiplier { cutoff, phi })
    }

    pub fn matrix(cutoff: usize, entries: Vec<Complex64>) -> Result<Self> {
        if cutoff > MATRIX_CUTOFF_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "matrix operators are limited to cutoff {MATRIX_CUTOFF_LIMIT}, got {cutoff}"
            )));
        }
        let dim = 2 * cutoff + 1;
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                cutoff,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                freq: (i / dim) as i64 - cutoff as i64,
            });
        }
        Ok(Self::Matrix { cutoff, entries })
    }

    pub fn identity(cutoff: usize) -> Self {
        Self::Multiplier {
            cutoff,
            phi: vec![1.0; 2 * cutoff + 1],
        }
    }

    pub fn zero(cutoff: usize) -> Self {
        Self::Multiplier {
            cutoff,
            phi: vec![0.0; 2 * cutoff + 1],
        }
    }

    pub fn cutoff(&self) -> usize {
        match self {
            Self::Multiplier { cutoff, .. } | Self::Matrix { cutoff, .. } => *cutoff,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff() + 1
    }

    /// Entry `(n, k)` of the operator on the truncated basis.
    pub fn entry(&self, n: i64, k: i64) -> Complex64 {
        let c = self.cutoff() as i64;
        if n.abs() > c || k.abs() > c {
            return Complex64::new(0.0, 0.0);
        }
        match self {
            Self::Multiplier { phi, .. } => {
                if n == k {
                    Complex64::new(phi[(n + c) as usize], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Self::Matrix { entries, .. } => {
                let dim = self.dim();
                entries[(n + c) as usize * dim + (k + c) as usize]
            }
        }
    }

    /// Dense row-major copy of the operator.
    pub fn to_dense(&self) -> Vec<Complex64> {
        match self {
            Self::Matrix { entries, .. } => entries.clone(),
            Self::Multiplier { phi, .. } => {
                let dim = phi.len();
                let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
                for (i, p) in phi.iter().enumerate() {
                    out[i * dim + i] = Complex64::new(*p, 0.0);
                }
                out
            }
        }
    }

    /// `Σ_k |φ(n, k)|²`.
    pub fn row_energy(&self, n: i64) -> f64 {
        let c = self.cutoff() as i64;
        if n.abs() > c {
            return 0.0;
        }
        match self {
            Self::Multiplier { phi, .. } => phi[(n + c) as usize].powi(2),
            Self::Matrix { entries, .. } => {
                let dim = self.dim();
                let row = (n + c) as usize * dim;
                entries[row..row + dim].iter().map(|z| z.norm_sqr()).sum()
            }
        }
    }

    /// Maps driving increments `(ζ_k)_k` to mode increments `(φζ)_n`.
    pub fn apply(&self, zeta: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(zeta.len(), self.dim());
        match self {
            Self::Multiplier { phi, .. } => phi.iter().zip(zeta).map(|(p, z)| z * *p).collect(),
            Self::Matrix { entries, .. } => entries
                .chunks_exact(zeta.len())
                .map(|row| row.iter().zip(zeta).map(|(a, z)| a * z).sum())
                .collect(),
        }
    }

    pub fn apply_field(&self, f: &SpectralField) -> Result<SpectralField> {
        if f.cutoff() != self.cutoff() {
            return Err(Error::CutoffMismatch {
                left: self.cutoff(),
                right: f.cutoff(),
            });
        }
        SpectralField::new(f.cutoff(), self.apply(f.coeffs()))
    }

    /// CSV `n,phi_n` for multipliers, `n,k,re,im` for matrices.
    pub fn to_csv(&self) -> String {
        let c = self.cutoff() as i64;
        let mut out = String::new();
        match self {
            Self::Multiplier { phi, .. } => {
                out.push_str("n,phi_n\n");
                for (i, p) in phi.iter().enumerate() {
                    let _ = writeln!(out, "{},{}", i as i64 - c, p);
                }
            }
            Self::Matrix { entries, .. } => {
                out.push_str("n,k,re,im\n");
                let dim = self.dim();
                for (i, z) in entries.iter().enumerate() {
                    let n = (i / dim) as i64 - c;
                    let k = (i % dim) as i64 - c;
                    let _ = writeln!(out, "{},{},{},{}", n, k, z.re, z.im);
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = lines.next().map(|(_, h)| h.trim().to_string());
        let rows: Vec<(usize, Vec<&str>)> = lines
            .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect()))
            .collect();
        let num = |line: usize, s: &str| -> Result<f64> {
            s.parse().map_err(|e| Error::Parse {
                line,
                message: format!("{e}"),
            })
        };
        let int = |line: usize, s: &str| -> Result<i64> {
            s.parse().map_err(|e| Error::Parse {
                line,
                message: format!("{e}"),
            })
        };
        match header.as_deref() {
            Some("n,phi_n") => {
                if rows.len() % 2 == 0 {
                    return Err(Error::Parse {
                        line: rows.len() + 1,
                        message: "row count must be odd".into(),
                    });
                }
                let c = (rows.len() / 2) as i64;
                let mut phi = Vec::with_capacity(rows.len());
                for (i, (line, cols)) in rows.iter().enumerate() {
                    if cols.len() != 2 || int(*line, cols[0])? != i as i64 - c {
                        return Err(Error::Parse {
                            line: *line,
                            message: "expected contiguous `n,phi_n` rows".into(),
                        });
                    }
                    phi.push(num(*line, cols[1])?);
                }
                Self::multiplier(c as usize, phi)
            }
            Some("n,k,re,im") => {
                let dim = (rows.len() as f64).sqrt().round() as usize;
                if dim * dim != rows.len() || dim % 2 == 0 {
                    return Err(Error::Parse {
                        line: rows.len() + 1,
                        message: "matrix rows must form an odd square".into(),
                    });
                }
                let c = (dim / 2) as i64;
                let mut entries = Vec::with_capacity(rows.len());
                for (i, (line, cols)) in rows.iter().enumerate() {
                    let n = (i / dim) as i64 - c;
                    let k = (i % dim) as i64 - c;
                    if cols.len() != 4 || int(*line, cols[0])? != n || int(*line, cols[1])? != k {
                        return Err(Error::Parse {
                            line: *line,
                            message: "expected row-major `n,k,re,im` rows".into(),
                        });
                    }
                    entries.push(Complex64::new(num(*line, cols[2])?, num(*line, cols[3])?));
                }
                Self::matrix(c as usize, entries)
            }
            _ => Err(Error::Parse {
                line: 1,
                message: "expected header `n,phi_n` or `n,k,re,im`".into(),
            }),
        }
    }
}

/// Bessel potential `φ_n = ⟨n⟩^{-α}`.
pub fn bessel_operator(cutoff: usize, alpha: f64) -> NoiseOperator {
    let c = cutoff as i64;
    NoiseOperator::Multiplier {
        cutoff,
        phi: (-c..=c).map(|n| bracket(n as f64).powf(-alpha)).collect(),
    }
}

/// Uniform time grid `t_m = m·dt`, `m = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { dt, steps })
    }

    /// Grid of step `dt` ending at `horizon`; `dt` must divide it to 1e-12.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be non-negative, got {horizon}")));
        }
        let grid = Self::new(dt, 0)?;
        let ratio = horizon / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() * dt > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "time step {dt} does not divide horizon {horizon}"
            )));
        }
        Ok(Self {
            steps: steps as usize,
            ..grid
        })
    }

    /// Accepts an explicit list of times starting at zero if it is uniform.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        match times {
            [] => Err(Error::NonUniformGrid("empty grid".into())),
            [t0] if *t0 == 0.0 => Ok(Self { dt: 1.0, steps: 0 }),
            [t0, ..] if *t0 != 0.0 => Err(Error::NonUniformGrid(format!("grid starts at {t0}, not 0"))),
            [_] => unreachable!(),
            _ => {
                let dt = times[1] - times[0];
                let tol = 1e-9 * dt.abs().max(1e-300);
                for (m, t) in times.iter().enumerate() {
                    if (t - m as f64 * dt).abs() > tol * (m as f64).max(1.0) {
                        return Err(Error::NonUniformGrid(format!("time {t} at index {m} breaks spacing {dt}")));
                    }
                }
                Self::new(dt, times.len() - 1).map_err(|_| Error::NonUniformGrid("non-increasing grid".into()))
            }
        }
    }

    #[inline]
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|m| self.time(m))
    }

    /// Grid index of time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let m = (t / self.dt).round();
        if m < 0.0 || m as usize > self.steps || (m * self.dt - t).abs() > 1e-9 * self.dt {
            None
        } else {
            Some(m as usize)
        }
    }
}

/// Recorded Wiener increments: `increments[m][k]` drives step `m → m+1`
/// through basis direction `k`, with `E|ζ|² = dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub grid: TimeGrid,
    pub seed: u64,
    pub trajectory: u64,
    pub increments: Vec<Vec<Complex64>>,
}

/// Increments for step `step`, read directly from its counter block.
pub fn step_increments(key: StreamKey, step: usize, dim: usize, dt: f64) -> Vec<Complex64> {
    let mut s = NoiseStream::at_block(key, step as u64, dim);
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    s.fill_gaussians(&mut out, dt.sqrt());
    out
}

impl NoisePath {
    /// Regenerates the increments of `trajectory` under `seed`.
    pub fn generate(grid: TimeGrid, cutoff: usize, seed: u64, trajectory: u64) -> Self {
        let key = StreamKey::new(seed, trajectory, Channel::Increments);
        let dim = 2 * cutoff + 1;
        let mut stream = NoiseStream::new(key);
        let increments = (0..grid.steps)
            .map(|_| {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                stream.fill_gaussians(&mut v, grid.dt.sqrt());
                v
            })
            .collect();
        Self {
            grid,
            seed,
            trajectory,
            increments,
        }
    }
}

/// Time series of fields on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<SpectralField>,
    pub noise: Option<NoisePath>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<SpectralField>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} states for a grid of {} points",
                states.len(),
                grid.len()
            )));
        }
        if let Some(first) = states.first() {
            for s in &states {
                first.check_cutoff(s)?;
            }
        }
        Ok(Self {
            grid,
            states,
            noise: None,
        })
    }

    /// `t ↦ S(t) f` sampled on the grid.
    pub fn linear_flow(f: &SpectralField, grid: TimeGrid) -> Self {
        Self {
            grid,
            states: grid.times().map(|t| f.propagate(t)).collect(),
            noise: None,
        }
    }

    pub fn zeros(cutoff: usize, grid: TimeGrid) -> Self {
        Self {
            grid,
            states: vec![SpectralField::zeros(cutoff); grid.len()],
            noise: None,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.states[0].cutoff()
    }

    pub fn state_at(&self, t: f64) -> Option<&SpectralField> {
        self.grid.index_of(t).map(|m| &self.states[m])
    }

    /// Interaction representation `S(-t_m) u(t_m)`.
    pub fn interaction(&self) -> Vec<SpectralField> {
        self.states
            .iter()
            .enumerate()
            .map(|(m, u)| u.propagate(-self.grid.time(m)))
            .collect()
    }

    /// CSV with header `t,n,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n,re,im\n");
        for (m, u) in self.states.iter().enumerate() {
            let t = self.grid.time(m);
            for (n, c) in u.iter() {
                let _ = writeln!(out, "{},{},{},{}", t, n, c.re, c.im);
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "t,n,re,im" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header `t,n,re,im`".into(),
                })
            }
        }
        let mut times: Vec<f64> = Vec::new();
        let mut blocks: Vec<String> = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (t, rest) = line.split_once(',').ok_or(Error::Parse {
                line: i + 1,
                message: "expected 4 columns".into(),
            })?;
            let t: f64 = t.trim().parse().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{e}"),
            })?;
            if times.last() != Some(&t) {
                times.push(t);
                blocks.push(String::from("n,re,im\n"));
            }
            let block = blocks.last_mut().expect("block exists");
            block.push_str(rest);
            block.push('\n');
        }
        let grid = TimeGrid::from_times(&times)?;
        let states = blocks
            .iter()
            .map(|b| SpectralField::from_csv(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, states)
    }
}

/// `û(n) = σ g_n` with i.i.d. standard complex Gaussians `g_n`.
pub fn sample_white_noise_field(
    cutoff: usize,
    variance: f64,
    stream: &mut NoiseStream,
) -> Result<SpectralField> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidParameter(format!("variance must be non-negative, got {variance}")));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1];
    stream.fill_gaussians(&mut coeffs, variance.sqrt());
    SpectralField::new(cutoff, coeffs)
}

/// One exact step of the stochastic convolution recursion
/// `Ψ(t+dt) = S(dt)Ψ(t) + φζ`.
pub fn convolution_step(psi: &SpectralField, op: &NoiseOperator, dt: f64, zeta: &[Complex64]) -> SpectralField {
    let kick = op.apply(zeta);
    let coeffs = psi
        .iter()
        .zip(kick)
        .map(|((n, c), k)| c * propagator_phase(dt, n) + k)
        .collect();
    SpectralField::new(psi.cutoff(), coeffs).expect("finite increments")
}

/// Samples `Ψ` on `grid` for trajectory `trajectory` under `seed`, recording
/// the driving increments.
pub fn sample_convolution_path(
    op: &NoiseOperator,
    grid: TimeGrid,
    seed: u64,
    trajectory: u64,
) -> Trajectory {
    let noise = NoisePath::generate(grid, op.cutoff(), seed, trajectory);
    let mut states = Vec::with_capacity(grid.len());
    let mut psi = SpectralField::zeros(op.cutoff());
    states.push(psi.clone());
    for zeta in &noise.increments {
        psi = convolution_step(&psi, op, grid.dt, zeta);
        states.push(psi.clone());
    }
    Trajectory {
        grid,
        states,
        noise: Some(noise),
    }
}

/// Continues a convolution path from `start` at grid index `from_step` up to
/// `grid.steps`, drawing the increments of the same counter blocks a single
/// run would use. Returns the states at indices `from_step..=grid.steps`.
pub fn continue_convolution_path(
    op: &NoiseOperator,
    start: &SpectralField,
    grid: TimeGrid,
    from_step: usize,
    seed: u64,
    trajectory: u64,
) -> Vec<SpectralField> {
    let key = StreamKey::new(seed, trajectory, Channel::Increments);
    let mut psi = start.clone();
    let mut out = vec![psi.clone()];
    for m in from_step..grid.steps {
        let zeta = step_increments(key, m, op.dim(), grid.dt);
        psi = convolution_step(&psi, op, grid.dt, &zeta);
        out.push(psi.clone());
    }
    out
}

/// Exact second moment `E|Ψ̂(t, n)|² = t Σ_k |φ(n, k)|²`.
pub fn convolution_variance(op: &NoiseOperator, t: f64, n: i64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    Ok(t * op.row_energy(n))
}

/// `(E|Σ a_n g_n|^p)^{1/p} / (√p ‖a‖_2)`, the expectation replaced by a
/// sample mean over `samples` draws.
pub fn moment_bound_check(
    coeffs: &[Complex64],
    p: f64,
    samples: usize,
    stream: &mut NoiseStream,
) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("moment exponent must be at least 2, got {p}")));
    }
    if samples == 0 {
        return Err(Error::InsufficientData("no samples requested".into()));
    }
    let l2 = coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Err(Error::ZeroNorm("coefficient sequence".into()));
    }
    let mut acc = 0.0;
    for _ in 0..samples {
        let x: Complex64 = coeffs.iter().map(|a| a * stream.complex_gaussian()).sum();
        acc += x.norm().powf(p);
    }
    Ok((acc / samples as f64).powf(1.0 / p) / (p.sqrt() * l2))
}
