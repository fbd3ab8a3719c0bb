//! Truncated Fourier representation of periodic complex fields on the circle.
//!
//! A [`SpectralField`] stores the amplitudes `û(n)` for the contiguous band
//! `n = -N..=N`. The circle is normalized so that `e_n` is an eigenfunction of
//! the Laplacian with eigenvalue `-n²`; the free Schrödinger propagator then
//! acts on mode `n` by the unimodular factor `e^{i t n²}`.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Japanese bracket `⟨x⟩ = (1 + x²)^{1/2}`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// How truncated convolutions are evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    /// Exact double sum.
    #[default]
    Exact,
    /// Zero-padded transforms; padding removes every alias from the kept band.
    Padded,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn fft_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Index of frequency `n` in a length-`len` DFT buffer.
#[inline]
pub(crate) fn wrap(n: i64, len: usize) -> usize {
    n.rem_euclid(len as i64) as usize
}

/// Complex field on the circle truncated to frequencies `|n| <= cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Binds `coeffs` to the frequencies `-cutoff..=cutoff` in order.
    pub fn new(cutoff: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = 2 * cutoff + 1;
        if coeffs.len() != expected {
            return Err(Error::LengthMismatch {
                cutoff,
                expected,
                got: coeffs.len(),
            });
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                freq: i as i64 - cutoff as i64,
            });
        }
        Ok(Self { cutoff, coeffs })
    }

    /// Like [`SpectralField::new`] but reports a non-finite amplitude instead of
    /// rejecting the length; used by integrators to detect blow-up.
    pub(crate) fn from_raw(cutoff: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * cutoff + 1);
        Self { cutoff, coeffs }
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self {
            cutoff,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1],
        }
    }

    /// `amplitude · e_n`.
    pub fn mode(cutoff: usize, n: i64, amplitude: Complex64) -> Result<Self> {
        if n.unsigned_abs() as usize > cutoff {
            return Err(Error::InvalidParameter(format!(
                "frequency {n} outside band of cutoff {cutoff}"
            )));
        }
        let mut f = Self::zeros(cutoff);
        f.coeffs[(n + cutoff as i64) as usize] = amplitude;
        Self::new(cutoff, f.coeffs)
    }

    pub fn from_fn(cutoff: usize, mut amp: impl FnMut(i64) -> Complex64) -> Result<Self> {
        let n0 = cutoff as i64;
        Self::new(cutoff, (-n0..=n0).map(&mut amp).collect())
    }

    #[inline]
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Amplitude at frequency `n`; zero outside the band.
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        let i = n + self.cutoff as i64;
        if i < 0 || i as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let n0 = self.cutoff as i64;
        -n0..=n0
    }

    /// `(n, û(n))` pairs in increasing frequency order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.frequencies().zip(self.coeffs.iter().copied())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Parseval mass `Σ |û(n)|² = ∫ |u|² dx`.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::from_raw(self.cutoff, self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Largest coefficient-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.cutoff, other.cutoff, "cutoff mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Free Schrödinger flow `S(t)`: `û(n) ↦ e^{i t n²} û(n)`.
    pub fn propagate(&self, t: f64) -> Self {
        let coeffs = self
            .iter()
            .map(|(n, c)| c * propagator_phase(t, n))
            .collect();
        Self::from_raw(self.cutoff, coeffs)
    }

    /// Truncated convolution `ĥ(n) = Σ_k f̂(k) ĝ(n-k)` for `|n| <= N`, computed
    /// by the exact double sum.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.convolve_with(other, ConvolutionMethod::Exact)
    }

    pub fn convolve_with(&self, other: &Self, method: ConvolutionMethod) -> Result<Self> {
        self.check_cutoff(other)?;
        let full = match method {
            ConvolutionMethod::Exact => full_convolution(&self.coeffs, &other.coeffs),
            ConvolutionMethod::Padded => padded_convolution(&self.coeffs, &other.coeffs),
        };
        // full band is -2N..=2N; keep the middle 2N+1 entries
        let n = self.cutoff;
        Ok(Self::from_raw(n, full[n..n + 2 * n + 1].to_vec()))
    }

    /// Dirichlet projection: zero every coefficient with `|n| > m`.
    pub fn project(&self, m: usize) -> Result<Self> {
        if m > self.cutoff {
            return Err(Error::ProjectionTooLarge {
                requested: m,
                cutoff: self.cutoff,
            });
        }
        let coeffs = self
            .iter()
            .map(|(n, c)| {
                if n.unsigned_abs() as usize > m {
                    Complex64::new(0.0, 0.0)
                } else {
                    c
                }
            })
            .collect();
        Ok(Self::from_raw(self.cutoff, coeffs))
    }

    /// Coefficients of the complex conjugate field: `n ↦ conj(û(-n))`.
    pub fn conj_field(&self) -> Self {
        Self::from_raw(self.cutoff, self.coeffs.iter().rev().map(|c| c.conj()).collect())
    }

    /// Samples `Σ û(n) e^{2πi n x_j}` on the uniform grid `x_j = j / points`.
    pub fn evaluate(&self, points: usize) -> Result<Vec<Complex64>> {
        if points < self.len() {
            return Err(Error::Aliasing {
                points,
                modes: self.len(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); points];
        for (n, c) in self.iter() {
            buf[wrap(n, points)] = c;
        }
        fft_inverse(points).process(&mut buf);
        Ok(buf)
    }

    /// Discrete forward transform of uniform samples, keeping `|n| <= cutoff`.
    pub fn from_samples(samples: &[Complex64], cutoff: usize) -> Result<Self> {
        let points = samples.len();
        if points < 2 * cutoff + 1 {
            return Err(Error::Aliasing {
                points,
                modes: 2 * cutoff + 1,
            });
        }
        let mut buf = samples.to_vec();
        fft_forward(points).process(&mut buf);
        let scale = 1.0 / points as f64;
        let n0 = cutoff as i64;
        Self::new(cutoff, (-n0..=n0).map(|n| buf[wrap(n, points)] * scale).collect())
    }

    pub(crate) fn check_cutoff(&self, other: &Self) -> Result<()> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch {
                left: self.cutoff,
                right: other.cutoff,
            });
        }
        Ok(())
    }

    /// CSV with header `n,re,im`, one row per frequency.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im\n");
        for (n, c) in self.iter() {
            let _ = writeln!(out, "{},{},{}", n, c.re, c.im);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "n,re,im" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header `n,re,im`".into(),
                })
            }
        }
        let mut rows: Vec<(i64, Complex64)> = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(parse_err(format!("expected 3 columns, got {}", cols.len())));
            }
            let n: i64 = cols[0].parse().map_err(|e| parse_err(format!("{e}")))?;
            let re: f64 = cols[1].parse().map_err(|e| parse_err(format!("{e}")))?;
            let im: f64 = cols[2].parse().map_err(|e| parse_err(format!("{e}")))?;
            rows.push((n, Complex64::new(re, im)));
        }
        if rows.is_empty() || rows.len() % 2 == 0 {
            return Err(Error::Parse {
                line: rows.len() + 1,
                message: "row count must be odd and positive".into(),
            });
        }
        let cutoff = rows.len() / 2;
        for (i, (n, _)) in rows.iter().enumerate() {
            if *n != i as i64 - cutoff as i64 {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("frequencies must run contiguously from -{cutoff}"),
                });
            }
        }
        Self::new(cutoff, rows.into_iter().map(|(_, c)| c).collect())
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: Self) -> SpectralField {
        assert_eq!(self.cutoff, rhs.cutoff, "cutoff mismatch");
        SpectralField::from_raw(
            self.cutoff,
            self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: Self) -> SpectralField {
        assert_eq!(self.cutoff, rhs.cutoff, "cutoff mismatch");
        SpectralField::from_raw(
            self.cutoff,
            self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        )
    }
}

/// `e^{i t n²}`.
#[inline]
pub fn propagator_phase(t: f64, n: i64) -> Complex64 {
    Complex64::from_polar(1.0, t * (n * n) as f64)
}

/// Full linear convolution of two centred coefficient vectors. Input bands
/// `-a..=a`, `-b..=b` give the output band `-(a+b)..=(a+b)`.
pub(crate) fn full_convolution(f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); f.len() + g.len() - 1];
    for (i, a) in f.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        for (j, b) in g.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Same result as [`full_convolution`] through zero-padded transforms.
pub(crate) fn padded_convolution(f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
    let out_len = f.len() + g.len() - 1;
    let len = out_len.next_power_of_two();
    let fwd = fft_forward(len);
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    let mut b = a.clone();
    a[..f.len()].copy_from_slice(f);
    b[..g.len()].copy_from_slice(g);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_inverse(len).process(&mut a);
    let scale = 1.0 / len as f64;
    a.truncate(out_len);
    for x in &mut a {
        *x *= scale;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pseudo_random(cutoff: usize, seed: u64) -> SpectralField {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        SpectralField::from_fn(cutoff, |_| c(next(), next())).unwrap()
    }

    fn brute_convolution(f: &SpectralField, g: &SpectralField) -> SpectralField {
        let n0 = f.cutoff() as i64;
        SpectralField::from_fn(f.cutoff(), |n| {
            let mut acc = c(0.0, 0.0);
            for k in -n0..=n0 {
                acc += f.get(k) * g.get(n - k);
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn make_field_indexing() {
        let f = SpectralField::new(0, vec![c(1.0, 0.0)]).unwrap();
        assert_eq!(f.get(0), c(1.0, 0.0));
        let z = SpectralField::new(1, vec![c(0.0, 0.0); 3]).unwrap();
        assert_eq!(z, SpectralField::zeros(1));
        let g = SpectralField::new(1, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(g.get(-1), c(0.0, 0.0));
        assert_eq!(g.get(0), c(1.0, 0.0));
        assert_eq!(g.get(1), c(1.0, 0.0));
    }

    #[test]
    fn make_field_rejects_bad_input() {
        assert!(matches!(
            SpectralField::new(2, vec![c(0.0, 0.0); 4]),
            Err(Error::LengthMismatch { expected: 5, got: 4, .. })
        ));
        assert!(matches!(
            SpectralField::new(1, vec![c(0.0, 0.0), c(f64::NAN, 0.0), c(0.0, 0.0)]),
            Err(Error::NonFinite { freq: 0 })
        ));
    }

    #[test]
    fn propagator_examples() {
        let e0 = SpectralField::mode(3, 0, c(1.0, 0.0)).unwrap();
        assert_eq!(e0.propagate(1.234), e0);
        let e1 = SpectralField::mode(3, 1, c(1.0, 0.0)).unwrap();
        let out = e1.propagate(std::f64::consts::PI);
        assert!((out.get(1) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn propagator_group_law() {
        let f = pseudo_random(16, 3);
        let back = f.propagate(0.731).propagate(-0.731);
        assert!(back.max_abs_diff(&f) < 1e-12);
        let two = f.propagate(0.3).propagate(0.45);
        assert!(two.max_abs_diff(&f.propagate(0.75)) < 1e-12);
    }

    #[test]
    fn convolution_examples() {
        let e0 = SpectralField::mode(2, 0, c(1.0, 0.0)).unwrap();
        assert_eq!(e0.convolve(&e0).unwrap(), e0);
        let e1 = SpectralField::mode(2, 1, c(1.0, 0.0)).unwrap();
        assert_eq!(
            e1.convolve(&e1).unwrap(),
            SpectralField::mode(2, 2, c(1.0, 0.0)).unwrap()
        );
        let e1 = SpectralField::mode(1, 1, c(1.0, 0.0)).unwrap();
        assert_eq!(e1.convolve(&e1).unwrap(), SpectralField::zeros(1));
        assert!(matches!(
            e1.convolve(&SpectralField::zeros(2)),
            Err(Error::CutoffMismatch { .. })
        ));
    }

    #[test]
    fn convolution_matches_double_sum_oracle() {
        for cutoff in [1usize, 4, 8, 16] {
            let f = pseudo_random(cutoff, 11 + cutoff as u64);
            let g = pseudo_random(cutoff, 97 + cutoff as u64);
            let oracle = brute_convolution(&f, &g);
            assert!(f.convolve(&g).unwrap().max_abs_diff(&oracle) < 1e-13);
            let padded = f.convolve_with(&g, ConvolutionMethod::Padded).unwrap();
            assert!(padded.max_abs_diff(&oracle) < 1e-12);
        }
    }

    #[test]
    fn projection() {
        let f = pseudo_random(5, 1);
        assert_eq!(f.project(5).unwrap(), f);
        let e2 = SpectralField::mode(3, 2, c(1.0, 0.0)).unwrap();
        assert_eq!(e2.project(1).unwrap(), SpectralField::zeros(3));
        assert!(matches!(f.project(6), Err(Error::ProjectionTooLarge { .. })));
        let p = f.project(2).unwrap();
        assert_eq!(p.project(2).unwrap(), p);
        assert!(p.mass() <= f.mass());
    }

    #[test]
    fn evaluate_examples() {
        let e0 = SpectralField::mode(2, 0, c(1.0, 0.0)).unwrap();
        for s in e0.evaluate(8).unwrap() {
            assert!((s - c(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(SpectralField::zeros(3)
            .evaluate(7)
            .unwrap()
            .iter()
            .all(|s| s.norm() == 0.0));
        assert!(matches!(e0.evaluate(4), Err(Error::Aliasing { .. })));
        let f = pseudo_random(12, 5);
        let samples = f.evaluate(48).unwrap();
        let back = SpectralField::from_samples(&samples, 12).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn evaluate_matches_direct_sum() {
        let f = pseudo_random(3, 9);
        let samples = f.evaluate(10).unwrap();
        for (j, s) in samples.iter().enumerate() {
            let x = j as f64 / 10.0;
            let direct: Complex64 = f
                .iter()
                .map(|(n, a)| a * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * n as f64 * x))
                .sum();
            assert!((s - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = pseudo_random(4, 21);
        let text = f.to_csv();
        assert!(text.starts_with("n,re,im\n-4,"));
        assert_eq!(SpectralField::from_csv(&text).unwrap(), f);
        assert!(SpectralField::from_csv("n,re,im\n0,1,0\n2,0,0\n1,0,0\n").is_err());
    }

    #[test]
    fn conj_field_is_pointwise_conjugate() {
        let f = pseudo_random(5, 2);
        let a = f.evaluate(16).unwrap();
        let b = f.conj_field().evaluate(16).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.conj() - y).norm() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn propagation_preserves_every_mode_modulus(
            amps in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 9),
            t in -50.0f64..50.0,
        ) {
            let f = SpectralField::new(4, amps.iter().map(|&(a, b)| c(a, b)).collect()).unwrap();
            let g = f.propagate(t);
            for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
                prop_assert!((a.norm() - b.norm()).abs() <= 1e-14 * a.norm().max(1e-300));
            }
        }

        #[test]
        fn convolution_is_commutative_and_bilinear(
            seed in 0u64..10_000,
            alpha in -3.0f64..3.0,
        ) {
            let f = pseudo_random(6, seed);
            let g = pseudo_random(6, seed + 1);
            let h = pseudo_random(6, seed + 2);
            let fg = f.convolve(&g).unwrap();
            prop_assert!(fg.max_abs_diff(&g.convolve(&f).unwrap()) < 1e-13);
            let lhs = (&f.scaled(c(alpha, 0.0)) + &h).convolve(&g).unwrap();
            let rhs = &fg.scaled(c(alpha, 0.0)) + &h.convolve(&g).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }
}
