//! The modulation-weighted multiplier that controls the non-resonant
//! trilinear estimate, after the temporal integrals are carried out:
//!
//! `M(n, σ₀) = ⟨n⟩^{sp'} Σ_{n₁,n₃ ≠ n} (⟨n₁⟩⟨n₂⟩⟨n₃⟩)^{-sp'} ⟨n-n₁⟩^{-ap'} ⟨n-n₃⟩^{-ap'} ⟨σ₀ + 2(n-n₁)(n-n₃)⟩^{-κ}`
//!
//! with `n₂ = n₁ + n₃ - n`, `a = -b'` and `κ = 3(b-a)p' - 2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::XsbParams;
use crate::spectral::{bracket, padded_convolution};

/// Exponents derived from the norm parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierExponents {
    pub sp: f64,
    pub ap: f64,
    pub kappa: f64,
}

impl MultiplierExponents {
    /// Requires the trilinear window and `2/3 ≤ (b+b')p' < 1` so the kernel
    /// exponent is non-negative.
    pub fn from_params(params: &XsbParams) -> Result<Self> {
        params.check_trilinear_window()?;
        let pc = params.p_conj();
        let a = -params.bprime;
        let mix = (params.b - a) * pc;
        if !(mix >= 2.0 / 3.0 - 1e-12 && mix < 1.0) {
            return Err(Error::ExponentWindow(format!(
                "need 2/3 <= (b + b')p' < 1, got {mix}"
            )));
        }
        Ok(Self {
            sp: params.s * pc,
            ap: a * pc,
            kappa: (3.0 * mix - 2.0).max(0.0),
        })
    }

    fn kernel(&self, x: f64) -> f64 {
        if self.kappa == 0.0 {
            1.0
        } else {
            bracket(x).powf(-self.kappa)
        }
    }
}

/// Pair weights of output mode `n` grouped by `h = (n-n₁)(n-n₃)`; entry
/// `h + 4N²`.
fn grouped_weights(exps: &MultiplierExponents, cutoff: usize, n: i64) -> Vec<f64> {
    let c = cutoff as i64;
    let hmax = 4 * c * c;
    let mut w = vec![0.0; (2 * hmax + 1) as usize];
    let spow: Vec<f64> = (0..=2 * c).map(|k| bracket(k as f64).powf(-exps.sp)).collect();
    let apow: Vec<f64> = (0..=3 * c).map(|k| bracket(k as f64).powf(-exps.ap)).collect();
    let lead = bracket(n as f64).powf(exps.sp);
    for n1 in -c..=c {
        if n1 == n {
            continue;
        }
        for n3 in -c..=c {
            let n2 = n1 + n3 - n;
            if n3 == n || n2.abs() > c {
                continue;
            }
            let h = (n - n1) * (n - n3);
            w[(h + hmax) as usize] += lead
                * spow[n1.unsigned_abs() as usize]
                * spow[n2.unsigned_abs() as usize]
                * spow[n3.unsigned_abs() as usize]
                * apow[(n - n1).unsigned_abs() as usize]
                * apow[(n - n3).unsigned_abs() as usize];
        }
    }
    w
}

/// `M(n, σ₀)` by direct summation over pairs.
pub fn multiplier_at(params: &XsbParams, cutoff: usize, n: i64, sigma0: f64) -> Result<f64> {
    let exps = MultiplierExponents::from_params(params)?;
    let c = cutoff as i64;
    if n.abs() > c {
        return Ok(0.0);
    }
    let b = |k: i64| bracket(k as f64);
    let mut acc = 0.0;
    for n1 in -c..=c {
        for n3 in -c..=c {
            let n2 = n1 + n3 - n;
            if n1 == n || n3 == n || n2.abs() > c {
                continue;
            }
            let h = ((n - n1) * (n - n3)) as f64;
            acc += (b(n1) * b(n2) * b(n3)).powf(-exps.sp)
                * (b(n - n1) * b(n - n3)).powf(-exps.ap)
                * exps.kernel(sigma0 + 2.0 * h);
        }
    }
    Ok(b(n).powf(exps.sp) * acc)
}

/// Index `h` carrying the largest grouped weight at output mode `n`.
pub fn dominant_resonance(params: &XsbParams, cutoff: usize, n: i64) -> Result<i64> {
    let exps = MultiplierExponents::from_params(params)?;
    let w = grouped_weights(&exps, cutoff, n);
    let hmax = 4 * (cutoff as i64).pow(2);
    let (i, _) = w
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &x)| if x > best.1 { (i, x) } else { best });
    Ok(i as i64 - hmax)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub cutoff: usize,
    pub kappa: f64,
    pub supremum: f64,
    pub argmax_n: i64,
    pub argmax_sigma0: f64,
}

/// Geometric σ₀ grid `±σ_min r^j` reaching `4N²`.
pub fn geometric_sigma_grid(cutoff: usize, per_sign: usize) -> Vec<f64> {
    let top = (4 * cutoff * cutoff).max(2) as f64;
    let mut out = vec![0.0];
    for j in 0..per_sign {
        let x = top.powf(j as f64 / (per_sign.max(2) - 1) as f64);
        out.push(x);
        out.push(-x);
    }
    out
}

/// `max M(n, σ₀)` over `|n| ≤ N`, every resonance point `σ₀ = -2h`, and the
/// extra σ₀ values in `sigma_grid`.
pub fn multiplier_supremum(params: &XsbParams, cutoff: usize, sigma_grid: &[f64]) -> Result<MultiplierReport> {
    let exps = MultiplierExponents::from_params(params)?;
    let c = cutoff as i64;
    let hmax = 4 * c * c;
    let span = 2 * hmax;
    // kernel K(2d) for d in [-2H, 2H]
    let kernel: Vec<Complex64> = (-span..=span)
        .map(|d| Complex64::new(exps.kernel(2.0 * d as f64), 0.0))
        .collect();
    let mut report = MultiplierReport {
        cutoff,
        kappa: exps.kappa,
        supremum: 0.0,
        argmax_n: 0,
        argmax_sigma0: 0.0,
    };
    // M(n, σ₀) = M(-n, σ₀) by the reflection n_j ↦ -n_j
    for n in 0..=c {
        let w = grouped_weights(&exps, cutoff, n);
        let nonzero: Vec<(i64, f64)> = w
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i as i64 - hmax, x))
            .collect();
        if nonzero.is_empty() {
            continue;
        }
        // resonance points: corr[s] = Σ_i w[i] K(2(i + s - 2H)), s = H - h'
        let rev: Vec<Complex64> = w.iter().rev().map(|&x| Complex64::new(x, 0.0)).collect();
        let conv = padded_convolution(&rev, &kernel);
        for hp in -hmax..=hmax {
            let s = hmax - hp;
            let v = conv[(s + span) as usize].re;
            if v > report.supremum {
                report.supremum = v;
                report.argmax_n = n;
                report.argmax_sigma0 = -2.0 * hp as f64;
            }
        }
        for &sigma0 in sigma_grid {
            let v: f64 = nonzero
                .iter()
                .map(|&(h, x)| x * exps.kernel(sigma0 + 2.0 * h as f64))
                .sum();
            if v > report.supremum {
                report.supremum = v;
                report.argmax_n = n;
                report.argmax_sigma0 = sigma0;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: f64, p: f64, b: f64, bprime: f64) -> XsbParams {
        XsbParams { s, b, bprime, p, q: 2.0, t: 1.0 }
    }

    #[test]
    fn exponent_window() {
        assert!(MultiplierExponents::from_params(&params(0.1, 4.0, 0.74, -0.01)).is_ok());
        let boundary = MultiplierExponents::from_params(&params(0.1, 4.0, 0.74, -0.24)).unwrap();
        assert_eq!(boundary.kappa, 0.0);
        assert!(MultiplierExponents::from_params(&params(0.1, 4.0, 0.5, -0.2)).is_err());
        assert!(MultiplierExponents::from_params(&params(0.1, 4.0, 0.8, -0.01)).is_err());
    }

    #[test]
    fn only_excluded_triples_give_zero() {
        let p = params(0.1, 4.0, 0.74, -0.01);
        assert_eq!(multiplier_at(&p, 0, 0, 0.0).unwrap(), 0.0);
        assert_eq!(multiplier_supremum(&p, 0, &[0.0, 5.0]).unwrap().supremum, 0.0);
    }

    #[test]
    fn fast_supremum_matches_direct_scan() {
        let p = params(0.2, 4.0, 0.74, -0.02);
        let cutoff = 5;
        let grid = geometric_sigma_grid(cutoff, 6);
        let fast = multiplier_supremum(&p, cutoff, &grid).unwrap();
        let mut best: f64 = 0.0;
        let h = 4 * (cutoff as i64).pow(2);
        for n in -(cutoff as i64)..=cutoff as i64 {
            for hp in -h..=h {
                best = best.max(multiplier_at(&p, cutoff, n, -2.0 * hp as f64).unwrap());
            }
            for &s in &grid {
                best = best.max(multiplier_at(&p, cutoff, n, s).unwrap());
            }
        }
        assert!((fast.supremum / best - 1.0).abs() < 1e-10, "{} vs {best}", fast.supremum);
        let at = multiplier_at(&p, cutoff, fast.argmax_n, fast.argmax_sigma0).unwrap();
        assert!((at / best - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kernel_peaks_at_dominant_resonance() {
        let p = params(0.1, 4.0, 0.74, -0.01);
        let (cutoff, n) = (6, 2);
        let h = dominant_resonance(&p, cutoff, n).unwrap();
        let sweep: Vec<f64> = (-300..=300).map(|x| x as f64).collect();
        let vals: Vec<f64> = sweep.iter().map(|&s| multiplier_at(&p, cutoff, n, s).unwrap()).collect();
        let (imax, _) = vals.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        assert!((sweep[imax] + 2.0 * h as f64).abs() <= 2.0, "peak at {} vs {}", sweep[imax], -2 * h);
    }

    #[test]
    fn reflection_symmetry() {
        let p = params(0.15, 4.0, 0.74, -0.05);
        for n in 1..4 {
            for s in [-7.0, 0.0, 12.5] {
                let a = multiplier_at(&p, 4, n, s).unwrap();
                let b = multiplier_at(&p, 4, -n, s).unwrap();
                assert!((a - b).abs() < 1e-12 * a);
            }
        }
    }
}
