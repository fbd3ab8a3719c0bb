//! Monte-Carlo survival curves of the stochastic convolution norm.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, log_log_fit, median, LinearFit};
use crate::ensemble::run_indexed;
use crate::error::{Error, Result};
use crate::noise::{sample_convolution_path, NoiseOperator, TimeGrid};
use crate::norms::{gamma_norm, xsb_norm, TimeWindow, XsbParams};

pub const MIN_SAMPLES: usize = 1000;

/// `‖Ψ‖` in the windowed norm for `samples` independent paths on `[0, T]`.
pub fn convolution_norm_samples(
    op: &NoiseOperator,
    params: &XsbParams,
    dt: f64,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    params.validate()?;
    let grid = TimeGrid::with_horizon(dt, params.t)?;
    let window = TimeWindow::new(params.t)?;
    run_indexed(samples, workers, |j| {
        let psi = sample_convolution_path(op, grid, seed, j as u64);
        xsb_norm(&psi, params, &window)
    })
    .into_iter()
    .collect()
}

/// Empirical `P(X > λ)`.
pub fn survival(samples: &[f64], lambda: f64) -> f64 {
    samples.iter().filter(|&&x| x > lambda).count() as f64 / samples.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub horizon: f64,
    pub samples: usize,
    pub median: f64,
    pub lambdas: Vec<f64>,
    pub survival: Vec<f64>,
    /// Whether each λ entered the fit.
    pub used: Vec<bool>,
    /// `log P` against `λ²`.
    pub fit: LinearFit,
    pub gamma_norm: f64,
    /// `-slope · T^{3-2b-2/q} · ‖φ‖²_γ`.
    pub normalised_rate: f64,
}

/// Fits `log P(X > λ)` against `λ²`, dropping λ where every or no sample
/// survives.
pub fn fit_tail(norms: &[f64], lambdas: &[f64]) -> Result<(Vec<f64>, Vec<bool>, LinearFit)> {
    let surv: Vec<f64> = lambdas.iter().map(|&l| survival(norms, l)).collect();
    let used: Vec<bool> = surv.iter().map(|&p| p > 0.0 && p < 1.0).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .zip(&surv)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((l, p), _)| (l * l, p.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} usable thresholds",
            xs.len()
        )));
    }
    Ok((surv, used, linear_fit(&xs, &ys)?))
}

/// Survival fit at thresholds `median · multiples`.
pub fn tail_estimate_mc(
    op: &NoiseOperator,
    params: &XsbParams,
    multiples: &[f64],
    dt: f64,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<TailReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if params.b >= 1.0 - 1.0 / params.q {
        return Err(Error::ExponentWindow(format!(
            "need b < 1 - 1/q, got b = {}, q = {}",
            params.b, params.q
        )));
    }
    let norms = convolution_norm_samples(op, params, dt, samples, seed, workers)?;
    let med = median(&norms)?;
    let lambdas: Vec<f64> = multiples.iter().map(|m| m * med).collect();
    let (survival, used, fit) = fit_tail(&norms, &lambdas)?;
    let g = gamma_norm(op, params.s, params.p)?;
    let e = 3.0 - 2.0 * params.b - 2.0 / params.q;
    Ok(TailReport {
        horizon: params.t,
        samples,
        median: med,
        lambdas,
        survival,
        used,
        fit,
        gamma_norm: g,
        normalised_rate: -fit.slope * params.t.powf(e) * g * g,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailScaling {
    pub reports: Vec<TailReport>,
    /// Fitted `e` in `-1/slope ∝ T^e`.
    pub exponent: f64,
    pub expected: f64,
    /// `max / min` of the normalised rates.
    pub rate_spread: f64,
}

/// Runs [`tail_estimate_mc`] at each horizon and fits the T-exponent of the
/// Gaussian tail scale `-1/slope`.
#[allow(clippy::too_many_arguments)]
pub fn tail_scaling(
    op: &NoiseOperator,
    params: &XsbParams,
    horizons: &[f64],
    multiples: &[f64],
    dt: f64,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<TailScaling> {
    let reports = horizons
        .iter()
        .map(|&t| tail_estimate_mc(op, &params.with_t(t), multiples, dt, samples, seed, workers))
        .collect::<Result<Vec<_>>>()?;
    if reports.iter().any(|r| r.fit.slope >= 0.0) {
        return Err(Error::InsufficientData("non-negative tail slope".into()));
    }
    let scales: Vec<f64> = reports.iter().map(|r| -1.0 / r.fit.slope).collect();
    let exponent = log_log_fit(horizons, &scales)?.slope;
    let rates: Vec<f64> = reports.iter().map(|r| r.normalised_rate).collect();
    let hi = rates.iter().cloned().fold(f64::MIN, f64::max);
    let lo = rates.iter().cloned().fold(f64::MAX, f64::min);
    Ok(TailScaling {
        reports,
        exponent,
        expected: 3.0 - 2.0 * params.b - 2.0 / params.q,
        rate_spread: hi / lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::bessel_operator;

    fn params(t: f64) -> XsbParams {
        XsbParams { s: 0.0, b: 0.7, bprime: 0.0, p: 4.0, q: 4.0, t }
    }

    #[test]
    fn survival_edges() {
        let xs: Vec<f64> = (1..=101).map(|k| k as f64).collect();
        assert_eq!(survival(&xs, 1e-9), 1.0);
        assert!((survival(&xs, median(&xs).unwrap()) - 0.5).abs() < 0.01);
        assert_eq!(survival(&xs, 1e9), 0.0);
    }

    #[test]
    fn fit_drops_degenerate_thresholds() {
        let xs: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        let (_, used, _) = fit_tail(&xs, &[0.5, 100.0, 300.0, 600.0, 5000.0]).unwrap();
        assert_eq!(used, vec![false, true, true, true, false]);
        assert!(fit_tail(&xs, &[0.5, 100.0, 5000.0]).is_err());
    }

    #[test]
    fn exact_gaussian_tail_is_recovered() {
        // |g| for a standard complex gaussian has P(|g| > λ) = e^{-λ²}
        let mut st = crate::rng::NoiseStream::new(crate::rng::StreamKey::new(5, 0, crate::rng::Channel::Auxiliary));
        let xs: Vec<f64> = (0..200_000).map(|_| st.complex_gaussian().norm()).collect();
        let (_, _, fit) = fit_tail(&xs, &[0.5, 1.0, 1.5, 2.0]).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.05, "{}", fit.slope);
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn small_ensemble_rejected() {
        let op = bessel_operator(4, 0.5);
        assert!(tail_estimate_mc(&op, &params(0.25), &[1.0, 1.5, 2.0], 1.0 / 64.0, 10, 1, None).is_err());
        let bad = XsbParams { b: 0.8, ..params(0.25) };
        assert!(tail_estimate_mc(&op, &bad, &[1.0, 1.5, 2.0], 1.0 / 64.0, 2000, 1, None).is_err());
    }

    #[test]
    fn small_tail_slope_is_negative() {
        let op = bessel_operator(8, 0.5);
        let rep = tail_estimate_mc(&op, &params(0.25), &[1.0, 1.25, 1.5, 1.75], 1.0 / 64.0, 2000, 3, None).unwrap();
        assert!(rep.fit.slope < 0.0);
        assert!((rep.survival[0] - 0.5).abs() < 0.01);
    }
}
