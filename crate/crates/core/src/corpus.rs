//! Test-function generators that land exactly in unit balls.
//!
//! Two constructions realize prescribed piece profiles without any leakage:
//!
//! * lacunary cosines `sum_k a_k cos(2 pi 2^k x)`, where each term is its own
//!   Littlewood-Paley piece (`k = 0` uses frequency 1, which sits in `L_0`);
//! * dyadic packets `sum_k a_k h_k`, where `h_k` is `+-1` on the two halves of
//!   every level-`(k-1)` block, so `D_k h_k = h_k` and `||h_k||_inf = 1`.
//!
//! Every member is re-measured after construction and rejected if it is not
//! in the unit ball of its class.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicDecomposition;
use crate::error::{param, LabError, Result};
use crate::grid::GridFunction;
use crate::norms::{besov_norm, lg_norm, LgFlavor};

pub const MEMBERSHIP_TOLERANCE: f64 = 1e-6;

/// Deterministic per-member generator derived from a corpus seed.
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    // splitmix64 step keeps neighbouring indices decorrelated
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

pub fn random_signs(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Largest number of lacunary terms that stays band-limited at resolution `j`.
pub fn max_lacunary_terms(j: u32) -> usize {
    j.saturating_sub(2) as usize
}

/// `sum_k heights[k] signs[k] cos(2 pi 2^k x)`.
pub fn lacunary(j: u32, heights: &[f64], signs: &[f64]) -> Result<GridFunction> {
    if heights.len() > max_lacunary_terms(j) {
        return Err(param(
            "heights",
            format!(
                "{} lacunary terms exceed the band limit at J = {j}",
                heights.len()
            ),
        ));
    }
    let n = 1usize << j;
    let mut out = vec![0.0; n];
    for (k, (&a, &s)) in heights.iter().zip(signs).enumerate() {
        if a == 0.0 {
            continue;
        }
        let freq = 1usize << k;
        for (m, o) in out.iter_mut().enumerate() {
            // exact phase reduction keeps the grid maximum at exactly |a|
            let phase = ((freq * m) % n) as f64 / n as f64;
            *o += a * s * (2.0 * PI * phase).cos();
        }
    }
    GridFunction::new(j, out)
}

/// Block values of a random-sign packet at level `k` (`2^k` values).
pub fn packet_values(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    if k == 0 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    let parents = 1usize << (k - 1);
    let mut out = Vec::with_capacity(2 * parents);
    for _ in 0..parents {
        let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        out.push(s);
        out.push(-s);
    }
    out
}

/// Single random-sign packet `h_k` as a grid function.
pub fn packet(j: u32, k: u32, rng: &mut impl Rng) -> Result<GridFunction> {
    let mut heights = vec![0.0; k as usize + 1];
    heights[k as usize] = 1.0;
    packet_sum(j, &heights, rng)
}

/// `sum_k heights[k] h_k` with independent random-sign packets.
pub fn packet_sum(j: u32, heights: &[f64], rng: &mut impl Rng) -> Result<GridFunction> {
    Ok(packet_decomposition(j, heights, rng)?.reconstruct())
}

pub fn packet_decomposition(
    j: u32,
    heights: &[f64],
    rng: &mut impl Rng,
) -> Result<DyadicDecomposition> {
    if heights.len() > j as usize + 1 {
        return Err(param(
            "heights",
            format!("{} levels exceed J + 1 = {}", heights.len(), j + 1),
        ));
    }
    let pieces = (0..=j as usize)
        .map(|k| match heights.get(k) {
            Some(&a) if a != 0.0 => packet_values(k, rng).into_iter().map(|v| a * v).collect(),
            _ => vec![0.0; 1 << k],
        })
        .collect();
    DyadicDecomposition::from_pieces(pieces)
}

/// Like [`packet_sum`] but every parent block gets an independent amplitude
/// drawn uniformly from `[-1, 1]`, so the distribution of the sum depends on
/// the draw and not only on `heights`.
pub fn random_martingale(j: u32, heights: &[f64], rng: &mut impl Rng) -> Result<GridFunction> {
    if heights.len() > j as usize + 1 {
        return Err(param(
            "heights",
            format!("{} levels exceed J + 1 = {}", heights.len(), j + 1),
        ));
    }
    let pieces = (0..=j as usize)
        .map(|k| {
            let a = heights.get(k).copied().unwrap_or(0.0);
            if a == 0.0 {
                return vec![0.0; 1 << k];
            }
            if k == 0 {
                return vec![a * rng.gen_range(-1.0..=1.0)];
            }
            (0..1usize << (k - 1))
                .flat_map(|_| {
                    let v = a * rng.gen_range(-1.0..=1.0);
                    [v, -v]
                })
                .collect()
        })
        .collect();
    Ok(DyadicDecomposition::from_pieces(pieces)?.reconstruct())
}

/// `(1 + k)^{-gamma}` for `k < len`.
pub fn lg_heights(gamma: f64, len: usize) -> Vec<f64> {
    (0..len).map(|k| (1.0 + k as f64).powf(-gamma)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    /// Equal heights `K^{-1/q}`: unit Besov norm.
    Lacunary,
    /// Random-sign packets with heights `(1+k)^{-gamma}`: unit dyadic `LG`.
    DyadicPackets,
    /// Lacunary with heights `(1+k)^{-gamma}`: unit Fourier `LG`.
    LgProfile,
    /// Lacunary with random heights rescaled to unit Besov norm.
    BesovProfile,
    /// Weighted sum of an `LgProfile` and a `DyadicPackets` member, rescaled
    /// to unit dyadic `LG` norm.
    Mixture,
}

impl CorpusKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "lacunary" => Self::Lacunary,
            "dyadic_packets" => Self::DyadicPackets,
            "lg_profile" => Self::LgProfile,
            "besov_profile" => Self::BesovProfile,
            "mixture" => Self::Mixture,
            other => return Err(param("kind", format!("unknown corpus kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub j: u32,
    pub q: f64,
    pub gamma: f64,
    /// Fixed number of lacunary terms; drawn per member when `None`.
    pub terms: Option<usize>,
    pub lacunary_weight: f64,
    pub packet_weight: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            j: crate::grid::DEFAULT_RESOLUTION,
            q: 2.0,
            gamma: 1.0,
            terms: None,
            lacunary_weight: 1.0,
            packet_weight: 1.0,
        }
    }
}

fn check_membership(value: f64, what: &str) -> Result<()> {
    if !value.is_finite() || value == 0.0 {
        return Err(param(
            "corpus",
            format!("degenerate member ({what} = {value})"),
        ));
    }
    if (value - 1.0).abs() > MEMBERSHIP_TOLERANCE {
        return Err(param("corpus", format!("member has {what} = {value}")));
    }
    Ok(())
}

fn generate_member(
    kind: CorpusKind,
    params: &CorpusParams,
    rng: &mut ChaCha8Rng,
) -> Result<GridFunction> {
    let j = params.j;
    let max_terms = max_lacunary_terms(j);
    let draw_terms = |rng: &mut ChaCha8Rng| match params.terms {
        Some(t) => t,
        None => rng.gen_range(1..=max_terms.max(1)),
    };
    match kind {
        CorpusKind::Lacunary => {
            let terms = draw_terms(rng);
            if terms == 0 || terms > max_terms {
                return Err(param("terms", format!("{terms} outside 1..={max_terms}")));
            }
            let heights = vec![(terms as f64).powf(-1.0 / params.q); terms];
            let signs = random_signs(rng, terms);
            let f = lacunary(j, &heights, &signs)?;
            check_membership(besov_norm(&f, params.q)?, "Besov norm")?;
            Ok(f)
        }
        CorpusKind::BesovProfile => {
            let terms = draw_terms(rng);
            if terms == 0 || terms > max_terms {
                return Err(param("terms", format!("{terms} outside 1..={max_terms}")));
            }
            let raw: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.05..1.0)).collect();
            let scale = crate::norms::lq_norm(&raw, params.q);
            let heights: Vec<f64> = raw.iter().map(|a| a / scale).collect();
            let signs = random_signs(rng, terms);
            let f = lacunary(j, &heights, &signs)?;
            check_membership(besov_norm(&f, params.q)?, "Besov norm")?;
            Ok(f)
        }
        CorpusKind::LgProfile => {
            let heights = lg_heights(params.gamma, max_terms);
            let signs = random_signs(rng, max_terms);
            let f = lacunary(j, &heights, &signs)?;
            check_membership(
                lg_norm(&f, params.gamma, LgFlavor::Fourier)?,
                "Fourier LG norm",
            )?;
            Ok(f)
        }
        CorpusKind::DyadicPackets => {
            let heights = lg_heights(params.gamma, j as usize + 1);
            let f = packet_sum(j, &heights, rng)?;
            check_membership(
                lg_norm(&f, params.gamma, LgFlavor::Dyadic)?,
                "dyadic LG norm",
            )?;
            Ok(f)
        }
        CorpusKind::Mixture => {
            let lac = generate_member(CorpusKind::LgProfile, params, rng)?;
            let pack = generate_member(CorpusKind::DyadicPackets, params, rng)?;
            let mix = lac
                .scale(params.lacunary_weight)
                .add(&pack.scale(params.packet_weight))?;
            let norm = lg_norm(&mix, params.gamma, LgFlavor::Dyadic)?;
            if norm == 0.0 {
                return Err(param("corpus", "degenerate member (zero function)"));
            }
            let f = mix.scale(1.0 / norm);
            check_membership(
                lg_norm(&f, params.gamma, LgFlavor::Dyadic)?,
                "dyadic LG norm",
            )?;
            Ok(f)
        }
    }
}

/// `size` members of the unit ball named by `kind`, deterministic in `seed`.
pub fn generate_corpus(
    kind: CorpusKind,
    size: usize,
    seed: u64,
    params: &CorpusParams,
) -> Result<Vec<GridFunction>> {
    if size == 0 {
        return Err(param("size", "corpus size must be at least 1"));
    }
    if params.j > crate::grid::MAX_RESOLUTION {
        return Err(LabError::Resolution(params.j));
    }
    let indices: Vec<u64> = (0..size as u64).collect();
    crate::par::try_map(&indices, |&i| {
        let mut rng = member_rng(seed, i);
        generate_member(kind, params, &mut rng)
    })
}

/// Deterministic lacunary witnesses with `K = 1..=max` equal positive
/// heights `K^{-1/q}`; the `K`-th member peaks at `K^{1/q'}` at the origin.
pub fn lacunary_witnesses(j: u32, q: f64) -> Result<Vec<GridFunction>> {
    (1..=max_lacunary_terms(j))
        .map(|terms| {
            let heights = vec![(terms as f64).powf(-1.0 / q); terms];
            lacunary(j, &heights, &vec![1.0; terms])
        })
        .collect()
}
