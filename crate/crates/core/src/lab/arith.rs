//! Divisor counts, the modulation identity and weighted convolution sums.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::spectral::bracket;

/// Number of divisors of `n` by trial division up to `√n`.
pub fn divisor_count(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidParameter("divisor count needs n >= 1".into()));
    }
    let mut count = 0;
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            count += if d * d == n { 1 } else { 2 };
        }
        d += 1;
    }
    Ok(count)
}

/// `d(n)` for every `n ≤ nmax` by a divisor sieve; index 0 is unused.
pub fn divisor_counts(nmax: usize) -> Vec<u32> {
    let mut d = vec![0u32; nmax + 1];
    for i in 1..=nmax {
        for j in (i..=nmax).step_by(i) {
            d[j] += 1;
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorScan {
    pub nmax: u64,
    pub delta: f64,
    pub max_ratio: f64,
    pub argmax: u64,
    /// `(n, d(n)/n^δ)` each time the running maximum improves.
    pub records: Vec<(u64, f64)>,
}

/// `max_{n ≤ nmax} d(n) / n^δ`.
pub fn divisor_bound_scan(nmax: u64, delta: f64) -> Result<DivisorScan> {
    if nmax == 0 || !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need nmax >= 1 and delta > 0, got {nmax}, {delta}"
        )));
    }
    let d = divisor_counts(nmax as usize);
    let mut best = 0.0;
    let mut argmax = 1;
    let mut records = Vec::new();
    for (n, &dn) in d.iter().enumerate().skip(1) {
        let r = dn as f64 / (n as f64).powf(delta);
        if r > best {
            best = r;
            argmax = n as u64;
            records.push((argmax, r));
        }
    }
    Ok(DivisorScan {
        nmax,
        delta,
        max_ratio: best,
        argmax,
        records,
    })
}

/// Frequencies and modulations of one interaction `n = n₁ - n₂ + n₃`,
/// `τ = τ₁ - τ₂ + τ₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationPoint {
    pub n: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
}

impl ModulationPoint {
    /// Completes `n` and `τ₂` from the other entries.
    pub fn new(n1: i64, n3: i64, n: i64, tau: f64, tau1: f64, tau3: f64) -> Self {
        Self {
            n,
            n1,
            n2: n1 + n3 - n,
            n3,
            tau,
            tau1,
            tau2: tau1 + tau3 - tau,
            tau3,
        }
    }

    /// `(σ₀, σ₁, σ₂, σ₃)` with `σ₀ = τ - n²`, `σⱼ = τⱼ - nⱼ²`.
    pub fn sigmas(&self) -> [f64; 4] {
        let sq = |k: i64| (k * k) as f64;
        [
            self.tau - sq(self.n),
            self.tau1 - sq(self.n1),
            self.tau2 - sq(self.n2),
            self.tau3 - sq(self.n3),
        ]
    }
}

/// `n² - n₁² + n₂² - n₃²` and `2(n - n₁)(n - n₃)` for `n₂ = n₁ + n₃ - n`, in
/// exact integer arithmetic.
pub fn resonance_sides(n1: i64, n3: i64, n: i64) -> (i128, i128) {
    let (n, n1, n3) = (n as i128, n1 as i128, n3 as i128);
    let n2 = n1 + n3 - n;
    (n * n - n1 * n1 + n2 * n2 - n3 * n3, 2 * (n - n1) * (n - n3))
}

/// The `α` of the three-case decay rule for `Σ ⟨n-k₁⟩^{-β} ⟨n-k₂⟩^{-γ}`.
pub fn lemma_alpha(beta: f64, gamma: f64, eps: f64) -> f64 {
    if beta > 1.0 {
        gamma
    } else if beta == 1.0 {
        gamma - eps
    } else {
        beta + gamma - 1.0
    }
}

fn check_sum_params(beta: f64, gamma: f64) -> Result<()> {
    if beta >= gamma && gamma >= 0.0 && beta + gamma > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "need β >= γ >= 0 and β + γ > 1, got β = {beta}, γ = {gamma}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionSum {
    pub lhs: f64,
    pub alpha: f64,
    /// `lhs · ⟨k₁ - k₂⟩^α`.
    pub weighted: f64,
}

/// `Σ_{|n| ≤ cutoff} ⟨n - k₁⟩^{-β} ⟨n - k₂⟩^{-γ}` and its weighted form.
pub fn convolution_sum_check(beta: f64, gamma: f64, k1: i64, k2: i64, cutoff: u64, eps: f64) -> Result<ConvolutionSum> {
    check_sum_params(beta, gamma)?;
    let c = cutoff as i64;
    let lhs: f64 = (-c..=c)
        .map(|n| bracket((n - k1) as f64).powf(-beta) * bracket((n - k2) as f64).powf(-gamma))
        .sum();
    let alpha = lemma_alpha(beta, gamma, eps);
    Ok(ConvolutionSum {
        lhs,
        alpha,
        weighted: lhs * bracket((k1 - k2) as f64).powf(alpha),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub ks: Vec<i64>,
    pub sums: Vec<f64>,
    pub fit: LinearFit,
    /// `max_k lhs(k) ⟨k⟩^α / min_k lhs(k) ⟨k⟩^α`.
    pub weighted_spread: f64,
}

/// Regresses `log lhs(k, 0)` on `log ⟨k⟩` over `ks`; the slope should be
/// close to `-α`.
pub fn convolution_sum_regression(beta: f64, gamma: f64, ks: &[i64], cutoff: u64, eps: f64) -> Result<DecayFit> {
    check_sum_params(beta, gamma)?;
    let kmax = ks.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0);
    let len = (cutoff + kmax) as usize + 1;
    // tabulate the symmetric weights once
    let wb: Vec<f64> = (0..len).map(|m| bracket(m as f64).powf(-beta)).collect();
    let wg: Vec<f64> = (0..len).map(|m| bracket(m as f64).powf(-gamma)).collect();
    let c = cutoff as i64;
    let sums: Vec<f64> = ks
        .iter()
        .map(|&k| {
            (-c..=c)
                .map(|n| wb[(n - k).unsigned_abs() as usize] * wg[n.unsigned_abs() as usize])
                .sum()
        })
        .collect();
    let xs: Vec<f64> = ks.iter().map(|&k| bracket(k as f64).ln()).collect();
    let ys: Vec<f64> = sums.iter().map(|s| s.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    let alpha = lemma_alpha(beta, gamma, eps);
    let weighted: Vec<f64> = sums.iter().zip(&ks[..]).map(|(s, &k)| s * bracket(k as f64).powf(alpha)).collect();
    let hi = weighted.iter().cloned().fold(f64::MIN, f64::max);
    let lo = weighted.iter().cloned().fold(f64::MAX, f64::min);
    Ok(DecayFit {
        beta,
        gamma,
        alpha,
        ks: ks.to_vec(),
        sums,
        fit,
        weighted_spread: hi / lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn divisor_examples() {
        assert_eq!(divisor_count(1).unwrap(), 1);
        assert_eq!(divisor_count(12).unwrap(), 6);
        assert_eq!(divisor_count(36).unwrap(), 9);
        assert_eq!(divisor_count(97).unwrap(), 2);
        assert!(divisor_count(0).is_err());
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        let d = divisor_counts(5000);
        for n in 1..=5000u64 {
            assert_eq!(d[n as usize] as u64, divisor_count(n).unwrap());
        }
    }

    #[test]
    fn scan_properties() {
        let a = divisor_bound_scan(100_000, 0.5).unwrap();
        let b = divisor_bound_scan(100_000, 0.6).unwrap();
        assert!(b.max_ratio < a.max_ratio);
        assert!(a.max_ratio.is_finite());
        // every record holder has more divisors than all smaller integers
        let d = divisor_counts(100_000);
        for &(n, _) in &a.records {
            let dn = d[n as usize];
            assert!(d[1..n as usize].iter().all(|&x| x < dn), "n = {n}");
        }
        assert_eq!(a.argmax, 12);
        assert!((a.max_ratio - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn resonance_small_case() {
        let (lhs, rhs) = resonance_sides(1, 1, 2);
        assert_eq!(lhs, 2);
        assert_eq!(rhs, 2);
    }

    #[test]
    fn modulation_identity() {
        let p = ModulationPoint::new(3, -2, 4, 7.5, 1.25, -0.5);
        let [s0, s1, s2, s3] = p.sigmas();
        let (_, rhs) = resonance_sides(p.n1, p.n3, p.n);
        assert!((s0 - s1 + s2 - s3 + rhs as f64).abs() < 1e-12);
    }

    #[test]
    fn lemma_cases() {
        assert_eq!(lemma_alpha(2.0, 0.6, 0.01), 0.6);
        assert!((lemma_alpha(1.0, 0.6, 0.01) - 0.59).abs() < 1e-15);
        assert!((lemma_alpha(0.7, 0.7, 0.01) - 0.4).abs() < 1e-15);
        assert!(convolution_sum_check(0.5, 0.4, 0, 0, 10, 0.01).is_err());
        assert!(convolution_sum_check(0.5, 0.7, 0, 0, 10, 0.01).is_err());
    }

    #[test]
    fn centred_sum_is_direct_series() {
        let got = convolution_sum_check(1.1, 1.1, 0, 0, 1000, 0.01).unwrap();
        let direct: f64 = (-1000i64..=1000).map(|n| (1.0 + (n * n) as f64).powf(-1.1)).sum();
        assert!((got.lhs - direct).abs() < 1e-12 * direct);
        let reg = convolution_sum_regression(1.1, 1.1, &[0, 3], 1000, 0.01).unwrap();
        assert!((reg.sums[0] - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn decay_rates_follow_the_case_rule() {
        let ks: Vec<i64> = (1..=256).collect();
        let fit = convolution_sum_regression(2.0, 0.6, &ks, 1 << 17, 0.01).unwrap();
        assert!((-0.7..=-0.5).contains(&fit.fit.slope), "{}", fit.fit.slope);
        let ks: Vec<i64> = (4..=10).map(|j| 1i64 << j).collect();
        let fit = convolution_sum_regression(0.7, 0.7, &ks, 1 << 20, 0.01).unwrap();
        assert!((fit.fit.slope + 0.4).abs() < 0.15, "{}", fit.fit.slope);
    }

    proptest! {
        #[test]
        fn resonance_identity_exact(n1 in -1_000_000i64..1_000_000, n3 in -1_000_000i64..1_000_000, n in -1_000_000i64..1_000_000) {
            let (lhs, rhs) = resonance_sides(n1, n3, n);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
