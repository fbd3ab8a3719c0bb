//! Scaling-critical regularities against the regularity of the forcing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Subcritical,
    Critical,
    Supercritical,
}

/// Forcing regularity `r` against critical regularity `s_c`.
pub fn classify(noise_regularity: f64, critical_regularity: f64) -> Classification {
    let gap = noise_regularity - critical_regularity;
    if gap.abs() <= TIE {
        Classification::Critical
    } else if gap > 0.0 {
        Classification::Subcritical
    } else {
        Classification::Supercritical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Schrödinger, `L²`-based Sobolev accounting.
    SchrodingerSobolev,
    /// Schrödinger, Fourier–Lebesgue `FL^{s,p}` accounting.
    SchrodingerFourierLebesgue,
    /// Stochastic quantisation (heat) equation, Hölder accounting.
    Quantisation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyVerdict {
    pub family: Family,
    pub critical_regularity: f64,
    pub noise_regularity: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub dimension: u32,
    /// `f64::INFINITY` serialises as `null`.
    pub p: f64,
    /// `d/p - 1`.
    pub s_crit_p: f64,
    /// `d/2 - 1`.
    pub s_crit_2: f64,
    pub s_crit_inf: f64,
    /// `d - 1 - d/p`.
    pub s_hat_crit_p: f64,
    /// `-d/p`.
    pub white_noise_fl: f64,
    /// `-d/2`.
    pub white_noise_sobolev: f64,
    /// `-d/2 + 1`.
    pub heat_convolution: f64,
    pub verdicts: Vec<FamilyVerdict>,
}

impl CriticalityReport {
    pub fn verdict(&self, family: Family) -> Classification {
        self.verdicts
            .iter()
            .find(|v| v.family == family)
            .map(|v| v.classification)
            .expect("every family is reported")
    }
}

/// Critical exponents in dimension `d` for the exponent `p ∈ (1, ∞]`.
pub fn criticality_report(d: u32, p: f64) -> Result<CriticalityReport> {
    if d == 0 || !(p > 1.0) || p.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "need d >= 1 and 1 < p <= ∞, got d = {d}, p = {p}"
        )));
    }
    let df = d as f64;
    let inv = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let s_crit_2 = df / 2.0 - 1.0;
    let s_hat = df - 1.0 - df * inv;
    let white_fl = -df * inv;
    let white_sob = -df / 2.0;
    let heat = 1.0 - df / 2.0;
    let verdict = |family, c, r| FamilyVerdict {
        family,
        critical_regularity: c,
        noise_regularity: r,
        classification: classify(r, c),
    };
    Ok(CriticalityReport {
        dimension: d,
        p,
        s_crit_p: df * inv - 1.0,
        s_crit_2,
        s_crit_inf: -1.0,
        s_hat_crit_p: s_hat,
        white_noise_fl: white_fl,
        white_noise_sobolev: white_sob,
        heat_convolution: heat,
        verdicts: vec![
            verdict(Family::SchrodingerSobolev, s_crit_2, white_sob),
            verdict(Family::SchrodingerFourierLebesgue, s_hat, white_fl),
            verdict(Family::Quantisation, -1.0, heat),
        ],
    })
}
