//! Sampled 1-periodic functions on a dyadic grid.
//!
//! A [`GridFunction`] at resolution `j` holds `N = 2^j` samples at the points
//! `m / N`. The sample vector is the function: integrals are sample means and
//! Fourier operators act on the trigonometric interpolant through the
//! discrete transform.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};
use crate::report::fmt_sig;

pub const MAX_RESOLUTION: u32 = 16;
pub const DEFAULT_RESOLUTION: u32 = 12;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Unnormalized in-place DFT with kernel `e^{-2 pi i l m / N}` (forward) or
/// `e^{+2 pi i l m / N}` (inverse).
pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    if buf.len() > 1 {
        plan(buf.len(), inverse).process(buf);
    }
}

/// Signed frequency of FFT bin `b` for transform length `n`.
#[inline]
pub fn bin_frequency(b: usize, n: usize) -> i64 {
    if b < n / 2 {
        b as i64
    } else {
        b as i64 - n as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    j: u32,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(j: u32, samples: Vec<f64>) -> Result<Self> {
        if j > MAX_RESOLUTION {
            return Err(LabError::Resolution(j));
        }
        let expected = 1usize << j;
        if samples.len() != expected {
            return Err(LabError::SampleCount {
                j,
                expected,
                got: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { index });
        }
        Ok(Self { j, samples })
    }

    /// Samples `f(m / N)` for `m = 0..N`.
    pub fn sample(j: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        if j > MAX_RESOLUTION {
            return Err(LabError::Resolution(j));
        }
        let n = 1usize << j;
        Self::new(j, (0..n).map(|m| f(m as f64 / n as f64)).collect())
    }

    pub fn constant(j: u32, c: f64) -> Result<Self> {
        Self::sample(j, |_| c)
    }

    pub fn zeros(j: u32) -> Result<Self> {
        Self::constant(j, 0.0)
    }

    pub(crate) fn from_raw(j: u32, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), 1usize << j);
        Self { j, samples }
    }

    pub fn resolution(&self) -> u32 {
        self.j
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.j != other.j {
            return Err(LabError::ResolutionMismatch {
                left: self.j,
                right: other.j,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.j, self.samples.iter().map(|&v| f(v)).collect())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_raw(
            self.j,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// CSV with header `x,value`; `x = m / N`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.len() as f64;
        let mut out = String::from("x,value\n");
        for (m, v) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt_sig(m as f64 / n), fmt_sig(*v));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "x,value" => {}
            _ => {
                return Err(LabError::Parse {
                    line: 1,
                    reason: "expected header x,value".into(),
                })
            }
        }
        let mut samples = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let value = line
                .split(',')
                .nth(1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| LabError::Parse {
                    line: idx + 1,
                    reason: "expected two numeric columns".into(),
                })?;
            samples.push(value);
        }
        if !samples.len().is_power_of_two() {
            return Err(LabError::Parse {
                line: samples.len() + 1,
                reason: format!("{} rows is not a power of two", samples.len()),
            });
        }
        Self::new(samples.len().trailing_zeros(), samples)
    }
}

/// Fourier coefficients `c_l`, `l = -N/2 .. N/2 - 1`, stored in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    j: u32,
    bins: Vec<Complex64>,
}

impl SpectralFunction {
    pub(crate) fn from_bins(j: u32, bins: Vec<Complex64>) -> Self {
        debug_assert_eq!(bins.len(), 1usize << j);
        Self { j, bins }
    }

    pub fn resolution(&self) -> u32 {
        self.j
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    /// Coefficient at signed frequency `l`; zero outside `-N/2 .. N/2`.
    pub fn coeff(&self, l: i64) -> Complex64 {
        let n = self.len() as i64;
        if n == 1 {
            return if l == 0 {
                self.bins[0]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        if l < -n / 2 || l >= n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        self.bins[l.rem_euclid(n) as usize]
    }

    /// `(l, c_l)` in increasing order of `l`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.len();
        let half = (n / 2) as i64;
        let lo = if n == 1 { 0 } else { -half };
        let hi = if n == 1 { 1 } else { half };
        (lo..hi).map(move |l| (l, self.bins[l.rem_euclid(n as i64) as usize]))
    }

    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest coefficient modulus at `|l| >= limit`.
    pub fn mass_above(&self, limit: usize) -> f64 {
        let n = self.len();
        self.bins
            .iter()
            .enumerate()
            .filter(|(b, _)| bin_frequency(*b, n).unsigned_abs() as usize >= limit)
            .fold(0.0, |acc, (_, c)| acc.max(c.norm()))
    }

    pub(crate) fn map_in_place(&mut self, f: impl Fn(usize, Complex64) -> Complex64) {
        for (b, c) in self.bins.iter_mut().enumerate() {
            *c = f(b, *c);
        }
    }

    pub fn map_with_frequency(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let n = self.len();
        let bins = self
            .bins
            .iter()
            .enumerate()
            .map(|(b, &c)| f(bin_frequency(b, n), c))
            .collect();
        Self::from_bins(self.j, bins)
    }
}

pub fn forward_transform(f: &GridFunction) -> SpectralFunction {
    let n = f.len();
    let mut buf: Vec<Complex64> = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    SpectralFunction::from_bins(f.j, buf)
}

/// Complex samples `sum_l c_l e^{2 pi i l m / N}`.
pub fn inverse_transform_complex(s: &SpectralFunction) -> Vec<Complex64> {
    let mut buf = s.bins.clone();
    fft_in_place(&mut buf, true);
    buf
}

/// Real part of the synthesized samples.
pub fn inverse_transform(s: &SpectralFunction) -> GridFunction {
    let buf = inverse_transform_complex(s);
    GridFunction::from_raw(s.j, buf.into_iter().map(|c| c.re).collect())
}

/// `((1/N) sum |f_m|^p)^{1/p}`, or `max |f_m|` for `p = inf`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    lp_norm_slice(&f.samples, p)
}

pub(crate) fn lp_norm_slice(values: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(LabError::InvalidExponent(p));
    }
    let sup = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if p.is_infinite() || sup == 0.0 {
        return Ok(sup);
    }
    // scale by the sup so large p cannot overflow
    let sum: f64 = values.iter().map(|v| (v.abs() / sup).powf(p)).sum();
    Ok(sup * (sum / values.len() as f64).powf(1.0 / p))
}

/// `|f|` sorted in nonincreasing order; `f*(t) = out[floor(t N)]`.
pub fn rearrangement(f: &GridFunction) -> Vec<f64> {
    let mut out: Vec<f64> = f.samples.iter().map(|v| v.abs()).collect();
    out.sort_unstable_by(|a, b| b.total_cmp(a));
    out
}

/// Evaluates a nonincreasing rearrangement at `t` in `[0, 1)`.
pub fn rearranged_value(rearranged: &[f64], t: f64) -> f64 {
    let n = rearranged.len();
    let idx = ((t * n as f64).floor() as usize).min(n - 1);
    rearranged[idx]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_has_only_mean_coefficient() {
        let f = GridFunction::constant(3, 1.0).unwrap();
        let s = forward_transform(&f);
        for (l, c) in s.iter() {
            let want = if l == 0 { 1.0 } else { 0.0 };
            assert!((c.re - want).abs() < 1e-15 && c.im.abs() < 1e-15, "l={l}");
        }
    }

    #[test]
    fn cosine_splits_into_two_halves() {
        let f = GridFunction::sample(4, |x| (2.0 * PI * x).cos()).unwrap();
        let s = forward_transform(&f);
        for (l, c) in s.iter() {
            let want = if l.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-15, "l={l}");
        }
    }

    #[test]
    fn spectral_iteration_runs_from_minus_half() {
        let s = forward_transform(&GridFunction::zeros(3).unwrap());
        let ls: Vec<i64> = s.iter().map(|(l, _)| l).collect();
        assert_eq!(ls, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(s.coeff(4), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn lp_norm_of_constant_and_half_indicator() {
        let c = GridFunction::constant(5, -2.5).unwrap();
        for p in [1.0, 2.0, 3.7, 100.0, f64::INFINITY] {
            assert!((lp_norm(&c, p).unwrap() - 2.5).abs() < 1e-14);
        }
        let ind = GridFunction::sample(6, |x| if x < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert!((lp_norm(&ind, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_rejects_small_exponent() {
        let c = GridFunction::constant(2, 1.0).unwrap();
        assert_eq!(lp_norm(&c, 0.5), Err(LabError::InvalidExponent(0.5)));
        assert!(lp_norm(&c, f64::NAN).is_err());
    }

    #[test]
    fn rearrangement_sorts_magnitudes() {
        let f = GridFunction::new(2, vec![-3.0, 1.0, 0.0, 2.0]).unwrap();
        assert_eq!(rearrangement(&f), vec![3.0, 2.0, 1.0, 0.0]);
        assert_eq!(rearranged_value(&rearrangement(&f), 0.3), 2.0);
    }

    fn direct_dft(f: &[f64]) -> Vec<Complex64> {
        let n = f.len();
        (0..n)
            .map(|l| {
                f.iter()
                    .enumerate()
                    .map(|(m, v)| {
                        let a = -2.0 * PI * ((l * m) % n) as f64 / n as f64;
                        Complex64::new(a.cos(), a.sin()) * v
                    })
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn fft_agrees_with_direct_sum_and_round_trips() {
        let f = GridFunction::sample(10, |x| {
            (2.0 * PI * 3.0 * x).sin() + x * x - (17.0 * x).cos()
        })
        .unwrap();
        let s = forward_transform(&f);
        let d = direct_dft(f.samples());
        for (a, b) in s.bins().iter().zip(&d) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = inverse_transform(&s);
        assert!(back.max_abs_diff(&f).unwrap() < 1e-12);
        // Plancherel: mean |f|^2 = sum |c_l|^2
        let mean_sq = f.samples().iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
        assert!((s.energy() - mean_sq).abs() < 1e-12 * mean_sq);
    }

    #[test]
    fn construction_guards() {
        assert!(matches!(
            GridFunction::new(2, vec![0.0; 3]),
            Err(LabError::SampleCount { .. })
        ));
        assert!(matches!(
            GridFunction::new(1, vec![0.0, f64::INFINITY]),
            Err(LabError::NonFinite { index: 1 })
        ));
        assert!(GridFunction::zeros(17).is_err());
        let a = GridFunction::zeros(2).unwrap();
        let b = GridFunction::zeros(3).unwrap();
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_twelve_digits() {
        let f = GridFunction::sample(3, |x| (2.0 * PI * x).sin() / 3.0).unwrap();
        let text = f.to_csv();
        assert!(text.starts_with("x,value\n0,"));
        let back = GridFunction::from_csv(&text).unwrap();
        assert!(f.max_abs_diff(&back).unwrap() < 1e-12);
        assert!(GridFunction::from_csv("a,b\n1,2\n").is_err());
    }
}
