//! The cubic and Wick-ordered nonlinearities and the resonant split.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{fft_forward, fft_inverse, full_convolution, wrap, ConvolutionMethod, SpectralField};

/// `P_N(|u|² u)` from the exact double convolutions.
fn cubic_exact(u: &SpectralField) -> SpectralField {
    let n = u.cutoff();
    // |u|² lives on -2N..=2N and must not be truncated before the second product
    let density = full_convolution(u.coeffs(), u.conj_field().coeffs());
    let full = full_convolution(&density, u.coeffs());
    // full band is -3N..=3N
    SpectralField::from_raw(n, full[2 * n..4 * n + 1].to_vec())
}

/// Pseudo-spectral grid size that keeps `P_N(|u|²u)` free of aliasing.
pub fn dealiased_grid(cutoff: usize) -> usize {
    let min = 4 * cutoff + 1;
    // smallest 2^a 3^b at or above min
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 2 * min {
        let mut g = p2;
        while g < min {
            g *= 3;
        }
        best = best.min(g);
        p2 *= 2;
    }
    best
}

/// Same quantity evaluated pointwise on a dealiased grid.
fn cubic_padded(u: &SpectralField) -> SpectralField {
    let n = u.cutoff();
    let g = dealiased_grid(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); g];
    for (k, c) in u.iter() {
        buf[wrap(k, g)] = c;
    }
    fft_inverse(g).process(&mut buf);
    for z in &mut buf {
        *z *= z.norm_sqr();
    }
    fft_forward(g).process(&mut buf);
    let scale = 1.0 / g as f64;
    let c = n as i64;
    SpectralField::from_raw(n, (-c..=c).map(|k| buf[wrap(k, g)] * scale).collect())
}

/// Truncated cubic nonlinearity `P_N(|u|² u)`.
pub fn cubic_nonlinearity(u: &SpectralField) -> SpectralField {
    cubic_nonlinearity_with(u, ConvolutionMethod::Exact)
}

pub fn cubic_nonlinearity_with(u: &SpectralField, method: ConvolutionMethod) -> SpectralField {
    match method {
        ConvolutionMethod::Exact => cubic_exact(u),
        ConvolutionMethod::Padded => cubic_padded(u),
    }
}

/// Wick-ordered nonlinearity `(|u|² - 2M) u`, `M = Σ |û(n)|²`.
pub fn wick_nonlinearity_direct(u: &SpectralField) -> SpectralField {
    wick_nonlinearity_with(u, ConvolutionMethod::Exact)
}

pub fn wick_nonlinearity_with(u: &SpectralField, method: ConvolutionMethod) -> SpectralField {
    let cubic = cubic_nonlinearity_with(u, method);
    let m2 = 2.0 * u.mass();
    let coeffs = cubic
        .coeffs()
        .iter()
        .zip(u.coeffs())
        .map(|(c, a)| c - a * m2)
        .collect();
    SpectralField::from_raw(u.cutoff(), coeffs)
}

/// Non-resonant and resonant parts of the trilinear Wick form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickSplit {
    pub nonres: SpectralField,
    pub res: SpectralField,
}

impl WickSplit {
    pub fn total(&self) -> SpectralField {
        &self.nonres + &self.res
    }
}

/// `Σ_{n = n₁ - n₂ + n₃} û₁(n₁) conj(û₂(n₂)) û₃(n₃)` split into the terms with
/// `n ≠ n₁, n₃` and the resonant diagonal `-û₁(n) conj(û₂(n)) û₃(n)`.
pub fn wick_trilinear(u1: &SpectralField, u2: &SpectralField, u3: &SpectralField) -> Result<WickSplit> {
    u1.check_cutoff(u2)?;
    u1.check_cutoff(u3)?;
    let n = u1.cutoff();
    let pair = full_convolution(u1.coeffs(), u2.conj_field().coeffs());
    let full = full_convolution(&pair, u3.coeffs());
    let full = &full[2 * n..4 * n + 1];
    // n₁ = n forces n₂ = n₃; n₃ = n forces n₁ = n₂
    let s23: Complex64 = u2.coeffs().iter().zip(u3.coeffs()).map(|(a, b)| a.conj() * b).sum();
    let s12: Complex64 = u1.coeffs().iter().zip(u2.coeffs()).map(|(a, b)| a * b.conj()).sum();
    let mut nonres = Vec::with_capacity(2 * n + 1);
    let mut res = Vec::with_capacity(2 * n + 1);
    for i in 0..2 * n + 1 {
        let (a, b, c) = (u1.coeffs()[i], u2.coeffs()[i], u3.coeffs()[i]);
        let diag = a * b.conj() * c;
        nonres.push(full[i] - a * s23 - c * s12 + diag);
        res.push(-diag);
    }
    Ok(WickSplit {
        nonres: SpectralField::from_raw(n, nonres),
        res: SpectralField::from_raw(n, res),
    })
}
