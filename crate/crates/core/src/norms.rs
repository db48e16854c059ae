//! Function-space norms on the grid.
//!
//! * exponential Orlicz norm `||f||_{exp L^nu} = sup_{p >= 1} p^{-1/nu} ||f||_p`
//! * Besov `B^inf_{0,q}`: `l^q` of `||L_k f||_inf`, `k = 0..=J-2`
//! * dyadic Besov: `l^q` of `||D_k f||_inf`, `k = 0..=J`
//! * Lorentz-Besov: the `l^{q,2}` quasinorm of the same sequence
//! * `LG^gamma`: `sup_k (1 + k)^gamma ||piece_k||_inf`, Fourier or dyadic

use serde::Serialize;

use crate::dyadic::decompose;
use crate::error::{param, LabError, Result};
use crate::grid::{forward_transform, inverse_transform, rearrangement, GridFunction};
use crate::multipliers::make_phi_k;

/// Relative size of spectral mass above `2^{J-2}` tolerated by band-limited
/// norms.
pub const BAND_LIMIT_TOLERANCE: f64 = 1e-10;

/// Largest exponent probed by [`luxemburg_norm`].
pub const LUXEMBURG_MAX_LOG2_P: u32 = 12;
const LUXEMBURG_STEPS_PER_OCTAVE: u32 = 8;

/// Width in `ln p` at which the golden-section search stops. The objective is
/// flat at its maximum, so the value is far more accurate than this.
const LUXEMBURG_REFINE_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormParams {
    pub q: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl NormParams {
    pub fn new(q: f64, nu: f64, gamma: f64) -> Result<Self> {
        check_q(q)?;
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(param("nu", format!("{nu} must be positive")));
        }
        if !(gamma > 0.5) || !gamma.is_finite() {
            return Err(param("gamma", format!("{gamma} must exceed 1/2")));
        }
        Ok(Self { q, nu, gamma })
    }

    pub fn q_conjugate(&self) -> f64 {
        conjugate(self.q)
    }
}

/// Hölder conjugate `q / (q - 1)`; infinite at `q = 1`.
pub fn conjugate(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else {
        q / (q - 1.0)
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&q) {
        return Err(param("q", format!("{q} outside [1, 2]")));
    }
    Ok(())
}

/// Sequence `b_k` with the bijection `n -> k(n)` listing it in nonincreasing
/// order (ties keep the smaller `k` first).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProfile {
    values: Vec<f64>,
    ordering: Vec<usize>,
}

impl CoefficientProfile {
    pub fn new(values: Vec<f64>) -> Self {
        let mut ordering: Vec<usize> = (0..values.len()).collect();
        ordering.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Self { values, ordering }
    }

    /// Profile of `||D_k f||_inf`.
    pub fn dyadic(f: &GridFunction) -> Self {
        Self::new(decompose(f).piece_sup_norms())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn rearranged(&self) -> Vec<f64> {
        self.ordering.iter().map(|&k| self.values[k]).collect()
    }

    pub fn lq(&self, q: f64) -> f64 {
        lq_norm(&self.values, q)
    }

    /// `(sum_{n >= 1} n^{2/q - 1} (b*_n)^2)^{1/2}`, indexing from `n = 1`.
    pub fn lorentz_q2(&self, q: f64) -> f64 {
        self.rearranged()
            .iter()
            .enumerate()
            .map(|(i, b)| ((i + 1) as f64).powf(2.0 / q - 1.0) * b * b)
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn lq_norm(values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    }
    let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sup == 0.0 {
        return 0.0;
    }
    sup * values
        .iter()
        .map(|v| (v.abs() / sup).powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Distinct magnitudes of a sample vector with multiplicities, used to
/// evaluate many `L^p` norms of one function cheaply.
#[derive(Debug, Clone)]
pub struct Magnitudes {
    sup: f64,
    total: f64,
    // (ln(|v| / sup), count), zeros dropped
    logs: Vec<(f64, f64)>,
}

impl Magnitudes {
    pub fn new(samples: &[f64]) -> Self {
        // the bit patterns of nonnegative floats sort like the floats
        let mut bits: Vec<u64> = samples
            .iter()
            .map(|v| v.abs().to_bits())
            .filter(|&b| b != 0)
            .collect();
        bits.sort_unstable_by(|a, b| b.cmp(a));
        let sup = bits.first().map_or(0.0, |&b| f64::from_bits(b));
        let mut logs: Vec<(f64, f64)> = Vec::new();
        let mut iter = bits.iter().copied().peekable();
        while let Some(b) = iter.next() {
            let mut count = 1.0;
            while iter.peek() == Some(&b) {
                iter.next();
                count += 1.0;
            }
            logs.push(((f64::from_bits(b) / sup).ln(), count));
        }
        Self {
            sup,
            total: samples.len() as f64,
            logs,
        }
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// `ln ||f||_p` for finite `p >= 1`; `-inf` for the zero function.
    pub fn ln_lp(&self, p: f64) -> f64 {
        if self.sup == 0.0 {
            return f64::NEG_INFINITY;
        }
        let s: f64 = self.logs.iter().map(|(l, c)| c * (p * l).exp()).sum();
        self.sup.ln() + (s / self.total).ln() / p
    }

    pub fn lp(&self, p: f64) -> f64 {
        self.ln_lp(p).exp()
    }

    /// `ln ||f||_p` at `p = 2^{i / steps}` for `i = 0..=steps * octaves`.
    pub fn ln_lp_octave_grid(&self, steps: u32, octaves: u32) -> Vec<f64> {
        let sums = octave_power_sums(self.logs.iter().copied(), steps, octaves);
        let len = sums.len();
        (0..len)
            .map(|i| {
                let p = 2f64.powf(i as f64 / steps as f64);
                if self.sup == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.sup.ln() + (sums[i] / self.total).ln() / p
                }
            })
            .collect()
    }
}

/// `sum_v c_v e^{p_i l_v}` at `p_i = 2^{i / steps}` for
/// `i = 0..=steps * octaves`, where `l_v <= 0`. Only the first octave needs
/// `exp`; each later exponent doubles one `steps` positions back, so its
/// power is a square.
pub(crate) fn octave_power_sums(
    logs: impl Iterator<Item = (f64, f64)>,
    steps: u32,
    octaves: u32,
) -> Vec<f64> {
    let steps = steps as usize;
    let len = steps * octaves as usize + 1;
    let base: Vec<f64> = (0..steps)
        .map(|i| 2f64.powf(i as f64 / steps as f64))
        .collect();
    let mut sums = vec![0.0; len];
    let mut powers = vec![0.0; len];
    for (l, c) in logs {
        for i in 0..len {
            powers[i] = if i < steps {
                (base[i] * l).exp()
            } else {
                powers[i - steps] * powers[i - steps]
            };
            sums[i] += c * powers[i];
        }
    }
    sums
}

/// Result of the `sup_p` search behind [`luxemburg_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuxemburgEstimate {
    pub value: f64,
    pub argmax_p: f64,
}

/// Geometric grid of probe exponents `p_j = 2^{j/8}`, `p <= 2^12`.
pub fn luxemburg_grid() -> Vec<f64> {
    (0..=LUXEMBURG_MAX_LOG2_P * LUXEMBURG_STEPS_PER_OCTAVE)
        .map(|j| 2f64.powf(j as f64 / LUXEMBURG_STEPS_PER_OCTAVE as f64))
        .collect()
}

pub fn luxemburg_estimate(m: &Magnitudes, nu: f64) -> LuxemburgEstimate {
    if m.sup() == 0.0 {
        return LuxemburgEstimate {
            value: 0.0,
            argmax_p: 1.0,
        };
    }
    // g(u) = ln ||f||_{e^u} - u / nu
    let g = |u: f64| m.ln_lp(u.exp()) - u / nu;
    let step = std::f64::consts::LN_2 / LUXEMBURG_STEPS_PER_OCTAVE as f64;
    let last = (LUXEMBURG_MAX_LOG2_P * LUXEMBURG_STEPS_PER_OCTAVE) as usize;
    let grid = m.ln_lp_octave_grid(LUXEMBURG_STEPS_PER_OCTAVE, LUXEMBURG_MAX_LOG2_P);
    let (mut best_i, mut best) = (0usize, f64::NEG_INFINITY);
    for (i, ln_lp) in grid.iter().enumerate() {
        let v = ln_lp - i as f64 * step / nu;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    debug_assert_eq!(grid.len(), last + 1);
    let mut lo = best_i.saturating_sub(1) as f64 * step;
    let mut hi = (best_i + 1).min(last) as f64 * step;
    let mut best_u = best_i as f64 * step;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    while hi - lo > LUXEMBURG_REFINE_TOLERANCE {
        if ga >= gb {
            hi = b;
            b = a;
            gb = ga;
            a = hi - inv_phi * (hi - lo);
            ga = g(a);
        } else {
            lo = a;
            a = b;
            ga = gb;
            b = lo + inv_phi * (hi - lo);
            gb = g(b);
        }
    }
    for (u, v) in [(a, ga), (b, gb)] {
        if v > best {
            best = v;
            best_u = u;
        }
    }
    LuxemburgEstimate {
        value: best.exp(),
        argmax_p: best_u.exp(),
    }
}

/// `sup_{p >= 1} p^{-1/nu} ||f||_p`, maximized over a geometric grid and
/// refined by golden-section search around the best grid point.
pub fn luxemburg_norm(f: &GridFunction, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(param("nu", format!("{nu} must be positive")));
    }
    Ok(luxemburg_estimate(&Magnitudes::new(f.samples()), nu).value)
}

/// `||L_k f||_inf` for `k = 0..=J-2`; fails unless `f` is band-limited to
/// `|l| < 2^{J-2}`.
pub fn littlewood_paley_sup_norms(f: &GridFunction) -> Result<Vec<f64>> {
    let j = f.resolution();
    if j < 2 {
        return Err(LabError::BandLimit {
            limit: 0,
            mass: f.sup_norm(),
        });
    }
    let spec = forward_transform(f);
    let limit = 1usize << (j - 2);
    let mass = spec.mass_above(limit);
    if mass > BAND_LIMIT_TOLERANCE * f.sup_norm().max(f64::MIN_POSITIVE) {
        return Err(LabError::BandLimit { limit, mass });
    }
    Ok((0..=j - 2)
        .map(|k| {
            let symbol = make_phi_k(k);
            let piece = spec.map_with_frequency(|l, c| c * symbol.real_value(l as f64));
            inverse_transform(&piece).sup_norm()
        })
        .collect())
}

pub fn besov_norm(f: &GridFunction, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(lq_norm(&littlewood_paley_sup_norms(f)?, q))
}

pub fn dyadic_besov_norm(f: &GridFunction, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(CoefficientProfile::dyadic(f).lq(q))
}

pub fn lorentz_besov_norm(f: &GridFunction, q: f64) -> Result<f64> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(param("q", format!("{q} outside (1, 2]")));
    }
    Ok(CoefficientProfile::dyadic(f).lorentz_q2(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LgFlavor {
    Fourier,
    Dyadic,
}

/// `sup_k (1 + k)^gamma s_k` of a piece sup-norm sequence.
pub fn lg_weighted_sup(pieces: &[f64], gamma: f64) -> f64 {
    pieces
        .iter()
        .enumerate()
        .map(|(k, v)| (1.0 + k as f64).powf(gamma) * v)
        .fold(0.0, f64::max)
}

pub fn lg_norm(f: &GridFunction, gamma: f64, flavor: LgFlavor) -> Result<f64> {
    let pieces = match flavor {
        LgFlavor::Fourier => littlewood_paley_sup_norms(f)?,
        LgFlavor::Dyadic => decompose(f).piece_sup_norms(),
    };
    Ok(lg_weighted_sup(&pieces, gamma))
}

/// `sup_t f*(t) (1 + ln(1/t))^{-1/q'}` over the grid's rearrangement; the
/// supremum over each constant stretch of `f*` is attained at its right end.
pub fn log_weighted_rearrangement_sup(f: &GridFunction, q_conj: f64) -> f64 {
    let r = rearrangement(f);
    let n = r.len() as f64;
    r.iter()
        .enumerate()
        .map(|(m, v)| {
            let t = (m + 1) as f64 / n;
            v * (1.0 - t.ln()).powf(-1.0 / q_conj)
        })
        .fold(0.0, f64::max)
}

/// Tolerance on the Besov normalization of envelope corpora.
pub const ENVELOPE_NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Lower estimate of the growth envelope: for each `t`, the largest `f*(t)`
/// over a corpus normalized to unit Besov norm.
pub fn growth_envelope_estimate(
    q: f64,
    t_grid: &[f64],
    corpus: &[GridFunction],
) -> Result<Vec<(f64, f64)>> {
    check_q(q)?;
    if corpus.is_empty() {
        return Err(LabError::EmptyCorpus);
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && **t <= 0.5)) {
        return Err(param("t_grid", format!("{t} outside (0, 1/2]")));
    }
    let rearranged = crate::par::try_map(corpus, |f| {
        let norm = besov_norm(f, q)?;
        if (norm - 1.0).abs() > ENVELOPE_NORMALIZATION_TOLERANCE {
            return Err(param("corpus", format!("member has Besov norm {norm}")));
        }
        Ok(rearrangement(f))
    })?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let est = rearranged
                .iter()
                .map(|r| crate::grid::rearranged_value(r, t))
                .fold(0.0, f64::max);
            (t, est)
        })
        .collect())
}
