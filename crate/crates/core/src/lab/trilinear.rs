//! Empirical ratios for the trilinear estimate on random space-time data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::stats::{median, quantile};
use crate::ensemble::run_indexed;
use crate::error::{Error, Result};
use crate::noise::{bessel_operator, sample_convolution_path, TimeGrid, Trajectory};
use crate::norms::{xsb_norm, TimeWindow, XsbParams};
use crate::rng::{Channel, NoiseStream, StreamKey};
use crate::spectral::{bracket, SpectralField};
use crate::wick::wick_trilinear;

/// Time samples per unit of the horizon used for the ensembles.
pub const STEPS_PER_HORIZON: usize = 32;

/// `‖𝒩₁ + 𝒩₂‖` at exponent `b'` over `∏ ‖u_j‖` at exponent `b`; `None` if a
/// factor has zero norm.
pub fn trilinear_ratio_for(us: [&Trajectory; 3], params: &XsbParams) -> Result<Option<f64>> {
    let window = TimeWindow::new(params.t)?;
    let mut denom = 1.0;
    for u in us {
        denom *= xsb_norm(u, params, &window)?;
    }
    if denom == 0.0 {
        return Ok(None);
    }
    let states = (0..us[0].grid.len())
        .map(|m| wick_trilinear(&us[0].states[m], &us[1].states[m], &us[2].states[m]).map(|s| s.total()))
        .collect::<Result<Vec<_>>>()?;
    let out = Trajectory {
        grid: us[0].grid,
        states,
        noise: None,
    };
    let num = xsb_norm(&out, &params.with_b(params.bprime), &window)?;
    Ok(Some(num / denom))
}

/// `S(t) f - iΨ` with `f̂(n) = g_n ⟨n⟩^{-1}` and `Ψ` driven by `⟨∂⟩^{-1}`.
pub fn random_input(cutoff: usize, grid: TimeGrid, seed: u64, index: u64) -> Trajectory {
    let mut s = NoiseStream::new(StreamKey::new(seed, index, Channel::InitialData));
    let f = SpectralField::from_fn(cutoff, |n| s.complex_gaussian() / bracket(n as f64)).expect("finite");
    let psi = sample_convolution_path(&bessel_operator(cutoff, 1.0), grid, seed, index);
    let i = Complex64::new(0.0, 1.0);
    Trajectory {
        grid,
        states: psi
            .states
            .iter()
            .enumerate()
            .map(|(m, p)| &f.propagate(grid.time(m)) - &p.scaled(i))
            .collect(),
        noise: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilinearStats {
    pub cutoff: usize,
    pub samples: usize,
    pub discarded: usize,
    pub median: f64,
    pub p99: f64,
    pub max: f64,
}

/// Ratio distribution over `ensemble` independent draws of three inputs.
pub fn trilinear_ratio(ensemble: usize, params: &XsbParams, cutoff: usize, seed: u64, workers: Option<usize>) -> Result<TrilinearStats> {
    params.check_trilinear_window()?;
    let grid = TimeGrid::with_horizon(params.t / STEPS_PER_HORIZON as f64, params.t)?;
    let ratios = run_indexed(ensemble, workers, |j| {
        let u: Vec<Trajectory> = (0..3).map(|k| random_input(cutoff, grid, seed, 3 * j as u64 + k)).collect();
        trilinear_ratio_for([&u[0], &u[1], &u[2]], params)
    });
    let mut kept = Vec::with_capacity(ensemble);
    for r in ratios {
        if let Some(x) = r? {
            kept.push(x);
        }
    }
    if kept.is_empty() {
        return Err(Error::InsufficientData("every draw had zero norm".into()));
    }
    Ok(TrilinearStats {
        cutoff,
        samples: kept.len(),
        discarded: ensemble - kept.len(),
        median: median(&kept)?,
        p99: quantile(&kept, 0.99)?,
        max: kept.iter().cloned().fold(0.0, f64::max),
    })
}
