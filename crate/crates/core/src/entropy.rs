//! Approximation profiles, covering bounds and entropy-number estimates for
//! the unit ball of `LG^gamma_dyad` measured in `exp L^nu`.
//!
//! The nested spaces are spans of the Haar-ordered dyadic indicator family,
//! so the space of dimension `2^M` is the level-`M` step functions and the
//! best-approximation error at dimension `n in [2^M, 2^{M+1})` is at most
//! `||f - E_M f||`.

use rand::Rng;
use serde::Serialize;

use crate::corpus::{lg_heights, member_rng, packet_decomposition};
use crate::dyadic::conditional_expectation;
use crate::error::{param, LabError, Result};
use crate::grid::GridFunction;
use crate::norms::{luxemburg_estimate, luxemburg_norm, octave_power_sums, Magnitudes};
use crate::regression::{fit_exponent, LinearFit};
use crate::report::CsvTable;

/// Margin applied to corpus maxima when they stand in for a supremum over
/// the ball.
pub const PROFILE_SAFETY_FACTOR: f64 = 1.1;

/// Restarts of the greedy packing.
pub const PACKING_RESTARTS: u64 = 8;

/// `||f - E_M f||_{exp L^nu}`.
pub fn approx_error(f: &GridFunction, m: u32, nu: f64) -> Result<f64> {
    let e = conditional_expectation(f, m)?;
    luxemburg_norm(&f.sub(&e)?, nu)
}

/// Errors for every `M` in `levels`.
pub fn approx_errors(f: &GridFunction, levels: &[u32], nu: f64) -> Result<Vec<f64>> {
    levels.iter().map(|&m| approx_error(f, m, nu)).collect()
}

/// `delta_n` for `n = 0, 1, ..., len - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximationProfile {
    deltas: Vec<f64>,
    family_descriptor: String,
}

impl ApproximationProfile {
    pub fn new(deltas: Vec<f64>, family_descriptor: impl Into<String>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(param("deltas", "empty profile"));
        }
        if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(param("deltas", format!("{d} is not positive")));
        }
        if deltas.windows(2).any(|w| w[1] > w[0]) {
            return Err(param("deltas", "profile must be nonincreasing"));
        }
        Ok(Self {
            deltas,
            family_descriptor: family_descriptor.into(),
        })
    }

    /// Profile that is constant on `[2^M, 2^{M+1})`: `delta_0 = d0` and
    /// `delta_n = level[M]` there. The running minimum keeps it nonincreasing.
    pub fn from_levels(
        d0: f64,
        level: &[f64],
        family_descriptor: impl Into<String>,
    ) -> Result<Self> {
        let mut deltas = vec![d0];
        let mut current = d0;
        for (m, &v) in level.iter().enumerate() {
            current = current.min(v);
            deltas.extend(std::iter::repeat_n(current, 1 << m));
        }
        Self::new(deltas, family_descriptor)
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn family_descriptor(&self) -> &str {
        &self.family_descriptor
    }

    pub fn delta0(&self) -> f64 {
        self.deltas[0]
    }

    /// Smallest `n` with `delta_n <= eps`.
    pub fn first_admissible(&self, eps: f64) -> Option<usize> {
        let n = self.deltas.partition_point(|&d| d > eps);
        (n < self.deltas.len()).then_some(n)
    }

    /// `n,delta` at the dyadic dimensions `0, 1, 2, 4, ...`.
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(["n", "delta"]);
        t.push_numbers(&[0.0, self.deltas[0]]);
        let mut n = 1usize;
        while n < self.deltas.len() {
            t.push_numbers(&[n as f64, self.deltas[n]]);
            n *= 2;
        }
        t.render()
    }
}

/// Natural-log covering bound `min{2n ln(18 delta_0 / eps) : delta_n <= eps}`,
/// clamped at zero.
pub fn lorentz_cover_bound(profile: &ApproximationProfile, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(param("eps", format!("{eps} must be positive")));
    }
    let n = profile
        .first_admissible(eps)
        .ok_or(LabError::NoAdmissibleIndex(eps))?;
    Ok((2.0 * n as f64 * (18.0 * profile.delta0() / eps).ln()).max(0.0))
}

/// Log of the size of the net of level-`M` step functions whose block values
/// lie on a grid of pitch `eps / 2` in `[-bound, bound]`, where `bound`
/// dominates `||E_M f||_inf` on the ball. It covers at radius `eps` once
/// `delta_{2^M} <= 3 eps / 4`; the result minimizes over such `M`.
pub fn quantization_cover_bound(
    profile: &ApproximationProfile,
    bound: f64,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(param("eps", format!("{eps} must be positive")));
    }
    let per_block = (4.0 * bound / eps).ceil() + 1.0;
    let deltas = profile.deltas();
    if deltas[0] <= 0.75 * eps {
        return Ok(0.0);
    }
    let mut dim = 1usize;
    while dim < deltas.len() {
        if deltas[dim] <= 0.75 * eps {
            return Ok(dim as f64 * per_block.ln());
        }
        dim *= 2;
    }
    Err(LabError::NoAdmissibleIndex(eps))
}

/// Parameter region where the `exp L^nu` approximation rates hold.
pub fn check_region(gamma: f64, nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(param("nu", format!("{nu} must be positive")));
    }
    let ok = (gamma > 0.5 && nu <= 2.0) || (nu >= 2.0 && gamma > 1.0 - 1.0 / nu);
    if !ok {
        return Err(param(
            "gamma",
            format!("(gamma, nu) = ({gamma}, {nu}) outside the admissible region"),
        ));
    }
    Ok(())
}

/// Predicted decay exponent `a` in `delta_{2^M} ~ M^{-a}`.
pub fn predicted_rate(gamma: f64, nu: f64) -> f64 {
    if nu <= 2.0 {
        gamma - 0.5
    } else {
        gamma + 1.0 / nu - 1.0
    }
}

/// Corpus maxima of `||f||` and of `||f - E_M f||` for `M = 0..levels`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEnvelope {
    pub nu: f64,
    pub sup_norm: f64,
    pub by_level: Vec<f64>,
}

pub fn error_envelope(corpus: &[GridFunction], levels: u32, nu: f64) -> Result<ErrorEnvelope> {
    if corpus.is_empty() {
        return Err(LabError::EmptyCorpus);
    }
    let ms: Vec<u32> = (0..levels).collect();
    let rows = crate::par::try_map(corpus, |f| -> Result<(f64, Vec<f64>)> {
        Ok((luxemburg_norm(f, nu)?, approx_errors(f, &ms, nu)?))
    })?;
    let sup_norm = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let by_level = (0..ms.len())
        .map(|i| rows.iter().map(|r| r.1[i]).fold(0.0, f64::max))
        .collect();
    Ok(ErrorEnvelope {
        nu,
        sup_norm,
        by_level,
    })
}

impl ErrorEnvelope {
    /// The profile `1.1 x` corpus maxima, dropping trailing zero levels.
    pub fn profile(&self) -> Result<ApproximationProfile> {
        let level: Vec<f64> = self
            .by_level
            .iter()
            .take_while(|v| **v > 0.0)
            .map(|v| PROFILE_SAFETY_FACTOR * v)
            .collect();
        ApproximationProfile::from_levels(
            PROFILE_SAFETY_FACTOR * self.sup_norm,
            &level,
            "haar-ordered dyadic indicators, dimension 2^M = level M",
        )
    }
}

/// `(n, upper, lower, reference)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyEntry {
    pub n: u64,
    pub upper: f64,
    pub lower: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyCurve {
    pub entries: Vec<EntropyEntry>,
    pub fitted_exponent: Option<LinearFit>,
}

impl EntropyCurve {
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(["n", "upper", "lower", "reference"]);
        for e in &self.entries {
            t.push_numbers(&[e.n as f64, e.upper, e.lower, e.reference]);
        }
        t.render()
    }

    /// Replaces the lower column with packing certificates for matching `n`.
    pub fn with_lower(mut self, lower: &[(u64, f64)]) -> Self {
        for e in &mut self.entries {
            if let Some((_, v)) = lower.iter().find(|(n, _)| *n == e.n) {
                e.lower = *v;
            }
        }
        self
    }
}

/// `n (max(1, ln ln n))`: the reindexing `n -> n~` with constant 1.
pub fn reindexed_dimension(n: u64) -> f64 {
    let lnln = if n >= 2 {
        (n as f64).ln().ln()
    } else {
        f64::NEG_INFINITY
    };
    n as f64 * lnln.max(1.0)
}

/// Upper bounds for `e_n` from an approximation profile: the level-`M`
/// error bounds `e_m` for every `m > 2^M max(1, ln ln 2^M)`, and `delta_0`
/// bounds every `e_m`.
pub fn upper_from_profile(profile: &ApproximationProfile, n: u64) -> f64 {
    let deltas = profile.deltas();
    let mut best = profile.delta0();
    let mut dim = 1usize;
    while dim < deltas.len() {
        if (n as f64) > reindexed_dimension(dim as u64) {
            best = best.min(deltas[dim]);
        }
        dim *= 2;
    }
    best
}

/// The same upper bounds obtained by inverting the covering estimate
/// directly: `e_m <= eps` as soon as `(m - 1) ln 2` reaches
/// `2n ln(18 delta_0 / eps)` with `delta_n <= eps`.
pub fn upper_from_cover(profile: &ApproximationProfile, m: u64) -> f64 {
    let deltas = profile.deltas();
    let d0 = profile.delta0();
    let budget = (m.saturating_sub(1)) as f64 * std::f64::consts::LN_2;
    let mut best = d0;
    let mut dim = 1usize;
    while dim < deltas.len() {
        let eps = deltas[dim].max(18.0 * d0 * (-budget / (2.0 * dim as f64)).exp());
        best = best.min(eps);
        dim *= 2;
    }
    best
}

/// Entropy upper curve for the unit `LG^gamma_dyad` ball, with the profile
/// measured from `corpus` (members of that ball at one resolution).
pub fn entropy_upper_curve(
    gamma: f64,
    nu: f64,
    n_list: &[u64],
    corpus: &[GridFunction],
) -> Result<(EntropyCurve, ApproximationProfile)> {
    check_region(gamma, nu)?;
    if n_list.is_empty() {
        return Err(param("n_list", "empty"));
    }
    if let Some(n) = n_list.iter().find(|n| **n < 1) {
        return Err(param("n_list", format!("{n} < 1")));
    }
    let j = corpus.first().ok_or(LabError::EmptyCorpus)?.resolution();
    let envelope = error_envelope(corpus, j, nu)?;
    let profile = envelope.profile()?;
    let a = predicted_rate(gamma, nu);
    let mut n_sorted = n_list.to_vec();
    n_sorted.sort_unstable();
    n_sorted.dedup();
    let entries: Vec<EntropyEntry> = n_sorted
        .iter()
        .map(|&n| EntropyEntry {
            n,
            upper: upper_from_profile(&profile, n),
            lower: 0.0,
            reference: if n >= 2 {
                (n as f64).ln().powf(-a)
            } else {
                1.0
            },
        })
        .collect();
    let fit_points: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.n >= 3)
        .map(|e| (e.n as f64, e.upper))
        .collect();
    let fitted_exponent = fit_exponent(&fit_points).ok();
    Ok((
        EntropyCurve {
            entries,
            fitted_exponent,
        },
        profile,
    ))
}

/// Corner points `(n~_M, delta_{2^M})` of the reindexed upper curve for
/// `M >= first_level`, fitted against `ln ln n~`.
pub fn corner_fit(profile: &ApproximationProfile, first_level: u32) -> Result<LinearFit> {
    let deltas = profile.deltas();
    let mut points = Vec::new();
    let mut dim = 1usize << first_level;
    while dim < deltas.len() {
        points.push((reindexed_dimension(dim as u64).floor() + 1.0, deltas[dim]));
        dim *= 2;
    }
    fit_exponent(&points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingParams {
    /// Resolution of the packing candidates; packets run over `k = 0..=j`.
    pub j: u32,
    pub budget: usize,
    pub seed: u64,
}

/// Lower estimate of the `exp L^nu` distance on a coarse exponent grid.
/// Any lower estimate keeps the packing certificate valid.
fn coarse_distance(a: &[f64], b: &[f64], nu: f64) -> f64 {
    let sup = a
        .iter()
        .zip(b)
        .fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
    if sup == 0.0 {
        return 0.0;
    }
    let logs = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .filter(|v| *v > 0.0)
        .map(|v| ((v / sup).ln(), 1.0));
    let sums = octave_power_sums(logs, COARSE_STEPS, COARSE_OCTAVES);
    let n = a.len() as f64;
    sums.iter()
        .enumerate()
        .map(|(i, s)| {
            let ln_p = i as f64 * std::f64::consts::LN_2 / COARSE_STEPS as f64;
            (s / n).ln() / ln_p.exp() - ln_p / nu
        })
        .fold(f64::NEG_INFINITY, f64::max)
        .exp()
        * sup
}

const COARSE_STEPS: u32 = 2;
const COARSE_OCTAVES: u32 = 8;

fn packing_candidate(j: u32, heights: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
    let signed: Vec<f64> = heights
        .iter()
        .map(|h| if rng.gen::<bool>() { *h } else { -*h })
        .collect();
    Ok(packet_decomposition(j, &signed, rng)?
        .reconstruct()
        .into_samples())
}

/// Greedy farthest-point insertion from the zero function. Returns the
/// insertion distances `d_1 >= ...`: the first `m` inserted points together
/// with zero are pairwise at least `min(d_1..d_m)` apart.
fn greedy_insertions(candidates: &[Vec<f64>], nu: f64, max_points: usize) -> Vec<f64> {
    let zero = vec![0.0; candidates.first().map_or(0, Vec::len)];
    let mut nearest: Vec<f64> = crate::par::map(candidates, |c| coarse_distance(c, &zero, nu));
    let mut used = vec![false; candidates.len()];
    let mut insertions = Vec::new();
    while insertions.len() < max_points {
        let pick = (0..candidates.len())
            .filter(|&i| !used[i])
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)));
        let Some(i) = pick else { break };
        if nearest[i] <= 0.0 {
            break;
        }
        used[i] = true;
        insertions.push(nearest[i]);
        let chosen = &candidates[i];
        let update = crate::par::map(&(0..candidates.len()).collect::<Vec<_>>(), |&c| {
            if used[c] {
                nearest[c]
            } else {
                nearest[c].min(coarse_distance(&candidates[c], chosen, nu))
            }
        });
        nearest = update;
    }
    insertions
}

/// Certified lower bounds `e_n >= eps` for every `n` in `n_list` from greedy
/// packings of `sum_k (1+k)^{-gamma} eps_k h_k`. A bound is certified when
/// more than `2^{n-1}` points are pairwise at least `2 eps` apart; otherwise
/// the entry is 0.
pub fn packing_lower_bounds(
    gamma: f64,
    nu: f64,
    n_list: &[u64],
    params: &PackingParams,
) -> Result<Vec<(u64, f64)>> {
    if params.budget < 2 {
        return Err(param("budget", format!("{} < 2", params.budget)));
    }
    if !(nu > 0.0) {
        return Err(param("nu", format!("{nu} must be positive")));
    }
    if params.j > 12 {
        return Err(param(
            "j",
            format!("packing resolution {} above 12", params.j),
        ));
    }
    let needed = |n: u64| -> Option<usize> {
        if n == 0 || n > 40 {
            return None;
        }
        Some((1usize << (n - 1)) + 1)
    };
    let max_points = n_list
        .iter()
        .filter_map(|&n| needed(n))
        .filter(|&m| m <= params.budget + 1)
        .max()
        .unwrap_or(2);
    let heights = lg_heights(gamma, params.j as usize + 1);
    let restarts: Vec<u64> = (0..PACKING_RESTARTS).collect();
    let runs = crate::par::map_sequential(&restarts, |&r| -> Result<Vec<f64>> {
        let mut rng = member_rng(params.seed, r);
        let candidates: Vec<Vec<f64>> = (0..params.budget)
            .map(|_| packing_candidate(params.j, &heights, &mut rng))
            .collect::<Result<_>>()?;
        // zero is the first point, so m points need m - 1 insertions
        Ok(greedy_insertions(&candidates, nu, max_points - 1))
    });
    let runs: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_>>()?;
    Ok(n_list
        .iter()
        .map(|&n| {
            let eps = match needed(n) {
                Some(m) => runs
                    .iter()
                    .filter(|ins| ins.len() + 1 >= m)
                    .map(|ins| ins[..m - 1].iter().copied().fold(f64::INFINITY, f64::min) / 2.0)
                    .fold(0.0, f64::max),
                None => 0.0,
            };
            (n, eps)
        })
        .collect())
}

/// Single-`n` form of [`packing_lower_bounds`].
pub fn packing_lower_bound(gamma: f64, nu: f64, n: u64, params: &PackingParams) -> Result<f64> {
    Ok(packing_lower_bounds(gamma, nu, &[n], params)?[0].1)
}

/// Per-level ratio of the largest approximation error over a Fourier `LG`
/// corpus to the largest over a dyadic `LG` corpus at the same resolution.
pub fn fourier_dyadic_error_ratios(
    fourier: &[GridFunction],
    dyadic: &[GridFunction],
    levels: &[u32],
    nu: f64,
) -> Result<Vec<(u32, f64)>> {
    if fourier.is_empty() || dyadic.is_empty() {
        return Err(LabError::EmptyCorpus);
    }
    let worst = |corpus: &[GridFunction]| -> Result<Vec<f64>> {
        let rows = crate::par::try_map(corpus, |f| approx_errors(f, levels, nu))?;
        Ok((0..levels.len())
            .map(|i| rows.iter().map(|r| r[i]).fold(0.0, f64::max))
            .collect())
    };
    let a = worst(fourier)?;
    let b = worst(dyadic)?;
    levels
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            if b[i] == 0.0 {
                return Err(LabError::Degenerate(format!(
                    "zero dyadic error at level {m}"
                )));
            }
            Ok((m, a[i] / b[i]))
        })
        .collect()
}

/// Exact `exp L^nu` distance between two grid functions; used to audit
/// packing certificates.
pub fn exp_distance(a: &GridFunction, b: &GridFunction, nu: f64) -> Result<f64> {
    Ok(luxemburg_estimate(&Magnitudes::new(a.sub(b)?.samples()), nu).value)
}
