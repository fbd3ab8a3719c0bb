//! Fourier-Lebesgue, Hilbert-Schmidt and γ-radonifying norms, plus the
//! windowed space-time norms in [`xsb`].

pub mod xsb;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::NoiseOperator;
use crate::spectral::{bracket, SpectralField};

pub use xsb::{
    discrete_duhamel, duhamel_estimate_check, homogeneous_estimate_check, temporal_factor, xsb_norm,
    TimeWindow, XsbParams,
};

/// `ℓ^p` norm of a non-negative sequence; `p = ∞` takes the maximum.
pub fn lp_norm(values: impl IntoIterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else if p == 2.0 {
        values.into_iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values.into_iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `(Σ_n ⟨n⟩^{sp} |û(n)|^p)^{1/p}`.
pub fn fl_norm(f: &SpectralField, s: f64, p: f64) -> f64 {
    lp_norm(f.iter().map(|(n, c)| bracket(n as f64).powf(s) * c.norm()), p)
}

/// Sobolev norm, the `p = 2` member of the Fourier-Lebesgue scale.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    fl_norm(f, s, 2.0)
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent must be at least 1, got {p}")))
    }
}

/// `‖ (Σ_k |⟨n⟩^s φ(n,k)|²)^{1/2} ‖_{ℓ^p_n}`.
pub fn gamma_norm(op: &NoiseOperator, s: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let c = op.cutoff() as i64;
    Ok(lp_norm(
        (-c..=c).map(|n| bracket(n as f64).powf(s) * op.row_energy(n).sqrt()),
        p,
    ))
}

/// Hilbert-Schmidt norm into `H^s`; agrees with `gamma_norm(op, s, 2)`.
pub fn hs_norm(op: &NoiseOperator, s: f64) -> f64 {
    gamma_norm(op, s, 2.0).expect("p = 2 is admissible")
}

fn matvec(dim: usize, a: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    a.chunks_exact(dim)
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

fn matvec_adjoint(dim: usize, a: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (row, yi) in a.chunks_exact(dim).zip(y) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += r.conj() * yi;
        }
    }
    out
}

/// Largest singular value of a dense `dim × dim` row-major matrix, by power
/// iteration on `A*A`.
pub fn spectral_norm(dim: usize, a: &[Complex64]) -> f64 {
    assert_eq!(a.len(), dim * dim, "matrix shape");
    // deterministic start with every component nonzero
    let mut x: Vec<Complex64> = (0..dim)
        .map(|i| Complex64::new(1.0 + 0.37 * i as f64, 0.11 * (i % 7) as f64))
        .collect();
    let normalize = |v: &mut Vec<Complex64>| {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|z| *z /= n);
        }
        n
    };
    normalize(&mut x);
    let mut sigma = 0.0;
    for _ in 0..10_000 {
        let y = matvec(dim, a, &x);
        let mut z = matvec_adjoint(dim, a, &y);
        let lambda = normalize(&mut z);
        let next = lambda.sqrt();
        x = z;
        if lambda == 0.0 || (next - sigma).abs() <= 1e-15 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    sigma
}

/// Operator norm `H^s → H^s` of a noise-operator-shaped matrix: the spectral
/// norm of `W A W^{-1}` with `W = diag ⟨n⟩^s`.
pub fn weighted_operator_norm(op: &NoiseOperator, s: f64) -> f64 {
    let dim = op.dim();
    let c = op.cutoff() as i64;
    let w: Vec<f64> = (-c..=c).map(|n| bracket(n as f64).powf(s)).collect();
    let mut a = op.to_dense();
    for (i, row) in a.chunks_exact_mut(dim).enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            *z *= w[i] / w[j];
        }
    }
    spectral_norm(dim, &a)
}
