//! Dyadic martingale structure on the grid.
//!
//! `E_k f` averages `f` over the `2^k` dyadic blocks of length `2^{-k}`;
//! `D_k f = E_k f - E_{k-1} f` for `k >= 1` and `D_0 f = E_0 f`. On a grid of
//! resolution `J` the operator `E_J` is the identity, so `f = sum_{k<=J} D_k f`
//! holds as a finite sum.

use std::fmt::Write as _;

use crate::error::{LabError, Result};
use crate::grid::GridFunction;
use crate::report::fmt_sig;

fn check_level(f: &GridFunction, k: u32) -> Result<()> {
    if k > f.resolution() {
        return Err(LabError::LevelOutOfRange {
            k,
            max: f.resolution(),
        });
    }
    Ok(())
}

fn block_means(samples: &[f64], blocks: usize) -> Vec<f64> {
    let len = samples.len() / blocks;
    samples
        .chunks_exact(len)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect()
}

fn expand(values: &[f64], j: u32) -> GridFunction {
    let n = 1usize << j;
    let len = n / values.len();
    let mut out = Vec::with_capacity(n);
    for &v in values {
        out.extend(std::iter::repeat_n(v, len));
    }
    GridFunction::from_raw(j, out)
}

/// `E_k f`: block means over the level-`k` dyadic intervals.
pub fn conditional_expectation(f: &GridFunction, k: u32) -> Result<GridFunction> {
    check_level(f, k)?;
    Ok(expand(&block_means(f.samples(), 1 << k), f.resolution()))
}

/// `D_k f`.
pub fn martingale_difference(f: &GridFunction, k: u32) -> Result<GridFunction> {
    check_level(f, k)?;
    let fine = block_means(f.samples(), 1 << k);
    if k == 0 {
        return Ok(expand(&fine, f.resolution()));
    }
    let diff: Vec<f64> = fine
        .chunks_exact(2)
        .flat_map(|pair| {
            let coarse = 0.5 * (pair[0] + pair[1]);
            [pair[0] - coarse, pair[1] - coarse]
        })
        .collect();
    Ok(expand(&diff, f.resolution()))
}

/// All levels of the martingale decomposition, stored compactly: level `k`
/// keeps one value per dyadic block (`2^k` values).
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicDecomposition {
    j: u32,
    expectations: Vec<Vec<f64>>,
    pieces: Vec<Vec<f64>>,
}

pub fn decompose(f: &GridFunction) -> DyadicDecomposition {
    let j = f.resolution();
    let mut expectations = vec![Vec::new(); j as usize + 1];
    expectations[j as usize] = f.samples().to_vec();
    for k in (0..j as usize).rev() {
        expectations[k] = expectations[k + 1]
            .chunks_exact(2)
            .map(|p| 0.5 * (p[0] + p[1]))
            .collect();
    }
    let mut pieces = Vec::with_capacity(j as usize + 1);
    pieces.push(expectations[0].clone());
    for k in 1..=j as usize {
        let coarse = &expectations[k - 1];
        pieces.push(
            expectations[k]
                .iter()
                .enumerate()
                .map(|(b, v)| v - coarse[b / 2])
                .collect(),
        );
    }
    DyadicDecomposition {
        j,
        expectations,
        pieces,
    }
}

impl DyadicDecomposition {
    /// Builds a decomposition directly from per-level block values; level `k`
    /// must hold `2^k` values whose sibling pairs sum to zero for `k >= 1`.
    pub fn from_pieces(pieces: Vec<Vec<f64>>) -> Result<Self> {
        let j = pieces.len().checked_sub(1).ok_or(LabError::Resolution(0))? as u32;
        for (k, p) in pieces.iter().enumerate() {
            if p.len() != 1 << k {
                return Err(LabError::SampleCount {
                    j: k as u32,
                    expected: 1 << k,
                    got: p.len(),
                });
            }
        }
        let mut expectations = Vec::with_capacity(pieces.len());
        expectations.push(pieces[0].clone());
        for k in 1..pieces.len() {
            let prev: &Vec<f64> = &expectations[k - 1];
            let next = pieces[k]
                .iter()
                .enumerate()
                .map(|(b, d)| prev[b / 2] + d)
                .collect();
            expectations.push(next);
        }
        Ok(Self {
            j,
            expectations,
            pieces,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.j
    }

    pub fn levels(&self) -> usize {
        self.pieces.len()
    }

    /// Block values of `D_k f`.
    pub fn piece_values(&self, k: usize) -> &[f64] {
        &self.pieces[k]
    }

    /// Block values of `E_k f`.
    pub fn expectation_values(&self, k: usize) -> &[f64] {
        &self.expectations[k]
    }

    pub fn piece(&self, k: usize) -> GridFunction {
        expand(&self.pieces[k], self.j)
    }

    pub fn expectation(&self, k: usize) -> GridFunction {
        expand(&self.expectations[k], self.j)
    }

    /// `||D_k f||_inf` for every level.
    pub fn piece_sup_norms(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .map(|p| p.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .collect()
    }

    /// `sum_k D_k f`, summed level by level.
    pub fn reconstruct(&self) -> GridFunction {
        self.reconstruct_from(|_| true)
    }

    /// Sum of the pieces whose level passes `keep`.
    pub fn reconstruct_from(&self, keep: impl Fn(usize) -> bool) -> GridFunction {
        let n = 1usize << self.j;
        let mut out = vec![0.0; n];
        for (k, p) in self.pieces.iter().enumerate() {
            if !keep(k) {
                continue;
            }
            let len = n >> k;
            for (b, v) in p.iter().enumerate() {
                for o in &mut out[b * len..(b + 1) * len] {
                    *o += v;
                }
            }
        }
        GridFunction::from_raw(self.j, out)
    }

    /// CSV with columns `k,block_index,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,block_index,value\n");
        for (k, p) in self.pieces.iter().enumerate() {
            for (b, v) in p.iter().enumerate() {
                let _ = writeln!(out, "{k},{b},{}", fmt_sig(*v));
            }
        }
        out
    }

    fn pointwise(&self, mut f: impl FnMut(usize, usize, f64)) {
        let n = 1usize << self.j;
        for (k, p) in self.pieces.iter().enumerate() {
            let shift = self.j as usize - k;
            for x in 0..n {
                f(k, x, p[x >> shift]);
            }
        }
    }
}

/// `S(f)(x) = (sum_k |D_k f(x)|^2)^{1/2}`.
pub fn square_function(d: &DyadicDecomposition) -> GridFunction {
    let mut acc = vec![0.0; 1 << d.j];
    d.pointwise(|_, x, v| acc[x] += v * v);
    GridFunction::from_raw(d.j, acc.into_iter().map(f64::sqrt).collect())
}

/// `M_0(f)(x) = max_k |E_k f(x) - E_0 f(x)|`.
pub fn maximal_function(d: &DyadicDecomposition) -> GridFunction {
    let n = 1usize << d.j;
    let base = d.expectations[0][0];
    let mut out = vec![0.0f64; n];
    for (k, e) in d.expectations.iter().enumerate() {
        let shift = d.j as usize - k;
        for (x, o) in out.iter_mut().enumerate() {
            *o = o.max((e[x >> shift] - base).abs());
        }
    }
    GridFunction::from_raw(d.j, out)
}

/// `max_k |E_k f(x)|`.
pub fn sup_expectation(d: &DyadicDecomposition) -> GridFunction {
    let n = 1usize << d.j;
    let mut out = vec![0.0f64; n];
    for (k, e) in d.expectations.iter().enumerate() {
        let shift = d.j as usize - k;
        for (x, o) in out.iter_mut().enumerate() {
            *o = o.max(e[x >> shift].abs());
        }
    }
    GridFunction::from_raw(d.j, out)
}

/// Empirical good-lambda quotient
/// `|{M_0 f > 2 lambda, S f < eps lambda}| / |{sup_k |E_k f| > lambda}|`
/// under counting measure on the grid. Returns `None` when the denominator
/// set is empty.
pub fn good_lambda_ratio(d: &DyadicDecomposition, lambda: f64, eps: f64) -> Option<f64> {
    let m0 = maximal_function(d);
    let s = square_function(d);
    let sup = sup_expectation(d);
    good_lambda_from_parts(&m0, &s, &sup, lambda, eps)
}

pub(crate) fn good_lambda_from_parts(
    m0: &GridFunction,
    s: &GridFunction,
    sup: &GridFunction,
    lambda: f64,
    eps: f64,
) -> Option<f64> {
    let denom = sup.samples().iter().filter(|&&v| v > lambda).count();
    if denom == 0 {
        return None;
    }
    let num = m0
        .samples()
        .iter()
        .zip(s.samples())
        .filter(|(&m, &sq)| m > 2.0 * lambda && sq < eps * lambda)
        .count();
    Some(num as f64 / denom as f64)
}

/// Largest good-lambda quotient over a corpus and a lambda grid, for each
/// `eps` in `eps_list`.
pub fn good_lambda_profile(
    corpus: &[GridFunction],
    lambdas: &[f64],
    eps_list: &[f64],
) -> Vec<(f64, f64)> {
    let parts: Vec<_> = crate::par::map(corpus, |f| {
        let d = decompose(f);
        (
            maximal_function(&d),
            square_function(&d),
            sup_expectation(&d),
        )
    });
    eps_list
        .iter()
        .map(|&eps| {
            let worst = parts
                .iter()
                .flat_map(|(m0, s, sup)| {
                    lambdas
                        .iter()
                        .filter_map(move |&l| good_lambda_from_parts(m0, s, sup, l, eps))
                })
                .fold(0.0f64, f64::max);
            (eps, worst)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random(j: u32, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction::new(j, (0..1 << j).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn haar_step(j: u32) -> GridFunction {
        GridFunction::sample(j, |x| if x < 0.5 { 1.0 } else { -1.0 }).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let c = GridFunction::sample(8, |x| (2.0 * PI * x).cos()).unwrap();
        assert!(conditional_expectation(&c, 0).unwrap().sup_norm() < 1e-15);
        let f = random(10, 1);
        assert_eq!(conditional_expectation(&f, 10).unwrap(), f);
        let e2 = conditional_expectation(&f, 2).unwrap();
        for (x, v) in e2.samples().iter().enumerate() {
            let b = x / 256;
            let oracle: f64 = f.samples()[b * 256..(b + 1) * 256].iter().sum::<f64>() / 256.0;
            assert!((v - oracle).abs() < 1e-15);
        }
        assert!(conditional_expectation(&f, 11).is_err());
    }

    #[test]
    fn expectation_nesting_and_idempotence() {
        let f = random(8, 2);
        for k in 0..=8 {
            let ek = conditional_expectation(&f, k).unwrap();
            assert!(
                conditional_expectation(&ek, k)
                    .unwrap()
                    .max_abs_diff(&ek)
                    .unwrap()
                    < 1e-14
            );
            for m in 0..=8 {
                let lhs = conditional_expectation(&ek, m).unwrap();
                let rhs = conditional_expectation(&f, k.min(m)).unwrap();
                assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn haar_step_is_a_single_packet() {
        let d = decompose(&haar_step(6));
        let norms = d.piece_sup_norms();
        assert_eq!(norms[1], 1.0);
        assert!(norms.iter().enumerate().all(|(k, v)| k == 1 || *v == 0.0));
        let s = square_function(&d);
        assert!(s.samples().iter().all(|&v| v == 1.0));
        let m = maximal_function(&d);
        assert!(m.samples().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_decomposition() {
        let d = decompose(&GridFunction::constant(5, -3.0).unwrap());
        assert_eq!(d.piece_sup_norms()[0], 3.0);
        assert!(d.piece_sup_norms()[1..].iter().all(|&v| v == 0.0));
        assert!(square_function(&d).samples().iter().all(|&v| v == 3.0));
        assert!(maximal_function(&d).sup_norm() == 0.0);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let f = random(12, 3);
        let d = decompose(&f);
        assert!(d.reconstruct().max_abs_diff(&f).unwrap() < 1e-12);
        let s = square_function(&d);
        let ratio = lp_norm(&s, 2.0).unwrap() / lp_norm(&f, 2.0).unwrap();
        assert!((ratio - 1.0).abs() < 1e-10);
        let m = maximal_function(&d);
        let mean = f.mean();
        for (mv, fv) in m.samples().iter().zip(f.samples()) {
            assert!(*mv >= (fv - mean).abs() - 1e-12);
        }
    }

    #[test]
    fn pieces_match_direct_differences() {
        let f = random(7, 4);
        let d = decompose(&f);
        for k in 0..=7u32 {
            let direct = martingale_difference(&f, k).unwrap();
            assert!(direct.max_abs_diff(&d.piece(k as usize)).unwrap() < 1e-14);
            for l in 0..=7u32 {
                let dl = d.piece(l as usize);
                let dkdl = martingale_difference(&dl, k).unwrap();
                if k == l {
                    assert!(dkdl.max_abs_diff(&dl).unwrap() < 1e-14);
                } else {
                    assert!(dkdl.sup_norm() < 1e-14, "k={k} l={l}");
                }
                if l > k {
                    assert!(conditional_expectation(&dl, k).unwrap().sup_norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn from_pieces_round_trips() {
        let f = random(6, 5);
        let d = decompose(&f);
        let back = DyadicDecomposition::from_pieces(d.pieces.clone()).unwrap();
        assert!(back.reconstruct().max_abs_diff(&f).unwrap() < 1e-14);
        assert!(back.expectation(6).max_abs_diff(&f).unwrap() < 1e-14);
        assert!(DyadicDecomposition::from_pieces(vec![vec![0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn csv_lists_every_block() {
        let d = decompose(&haar_step(2));
        let csv = d.to_csv();
        assert!(csv.starts_with("k,block_index,value\n0,0,0\n1,0,1\n1,1,-1\n"));
        assert_eq!(csv.lines().count(), 1 + 1 + 2 + 4);
    }

    #[test]
    fn good_lambda_quotient_counts_points() {
        let d = decompose(&haar_step(4));
        // sup_k |E_k f| = 1 everywhere; M_0 = 1 is never above 2 * 0.4
        assert_eq!(good_lambda_ratio(&d, 0.4, 0.5), Some(0.0));
        assert_eq!(good_lambda_ratio(&d, 2.0, 0.5), None);
    }
}
