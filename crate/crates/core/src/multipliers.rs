//! Littlewood-Paley symbols and Fourier multipliers on the grid.
//!
//! The bump `Phi` equals 1 on `|s| <= 1`, vanishes for `|s| >= 2` and is glued
//! smoothly in between with `h(u) = exp(-1/u)`:
//!
//! ```text
//! Phi(s) = h(2 - |s|) / (h(2 - |s|) + h(|s| - 1)),   1 < |s| < 2.
//! ```
//!
//! Everything else is built from `Phi`: the pieces `phi_k`, the annular bump
//! `psi(s) = Phi(s) - Phi(2s)`, its companions `psi(s) / (2 pi i s)` and
//! `s psi(s)`, and the reproducing bumps `Psi_n` with `Psi_n phi_n = phi_n`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::dyadic;
use crate::error::{param, LabError, Result};
use crate::grid::{
    bin_frequency, forward_transform, inverse_transform_complex, GridFunction, SpectralFunction,
};

fn h(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// The smooth bump `Phi`.
pub fn phi(s: f64) -> f64 {
    let a = s.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let left = h(2.0 - a);
        left / (left + h(a - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SymbolKind {
    Phi,
    PhiK(u32),
    Psi,
    PsiMinus1,
    PsiPlus1,
    /// `Psi(s) = Phi(|s|/4) (1 - Phi(4|s|))`, equal to 1 on `1/2 <= |s| <= 4`.
    BigPsi,
    /// `Psi_0(s) = Phi(s/2)`, and `Psi_n(s) = Psi(2^{-n} s)` for `n >= 1`.
    BigPsiN(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Auxiliary {
    Psi,
    PsiMinus1,
    PsiPlus1,
    BigPsi,
}

/// How a symbol behaves under `s -> -s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    EvenReal,
    OddImaginary,
    OddReal,
}

/// A compactly supported Fourier multiplier symbol, optionally dilated:
/// `value(s) = base(s / scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Symbol {
    kind: SymbolKind,
    scale: f64,
}

impl Symbol {
    fn new(kind: SymbolKind) -> Self {
        Self { kind, scale: 1.0 }
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `s -> self(s / lambda)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            kind: self.kind,
            scale: self.scale * lambda,
        }
    }

    pub fn parity(&self) -> Parity {
        match self.kind {
            SymbolKind::PsiMinus1 => Parity::OddImaginary,
            SymbolKind::PsiPlus1 => Parity::OddReal,
            _ => Parity::EvenReal,
        }
    }

    /// The symbol vanishes for `|s| >= support_radius`.
    pub fn support_radius(&self) -> f64 {
        let base = match self.kind {
            SymbolKind::Phi => 2.0,
            SymbolKind::PhiK(k) => 2f64.powi(k as i32 + 1),
            SymbolKind::Psi | SymbolKind::PsiMinus1 | SymbolKind::PsiPlus1 => 2.0,
            SymbolKind::BigPsi => 8.0,
            SymbolKind::BigPsiN(0) => 4.0,
            SymbolKind::BigPsiN(n) => 2f64.powi(n as i32 + 3),
        };
        base * self.scale
    }

    pub fn value(&self, s: f64) -> Complex64 {
        let u = s / self.scale;
        match self.kind {
            SymbolKind::PsiMinus1 => {
                if u == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    // psi(u) / (2 pi i u)
                    Complex64::new(0.0, -psi(u) / (2.0 * PI * u))
                }
            }
            SymbolKind::PsiPlus1 => Complex64::new(u * psi(u), 0.0),
            _ => Complex64::new(self.real_value(s), 0.0),
        }
    }

    /// Value of an even real symbol; the imaginary/odd companions return the
    /// real part of [`Symbol::value`].
    pub fn real_value(&self, s: f64) -> f64 {
        let u = s / self.scale;
        match self.kind {
            SymbolKind::Phi => phi(u),
            SymbolKind::PhiK(0) => phi(u),
            SymbolKind::PhiK(k) => {
                let scale = 2f64.powi(-(k as i32));
                phi(scale * u) - phi(2.0 * scale * u)
            }
            SymbolKind::Psi => psi(u),
            SymbolKind::BigPsi => big_psi(u),
            SymbolKind::BigPsiN(0) => phi(u / 2.0),
            SymbolKind::BigPsiN(n) => big_psi(u * 2f64.powi(-(n as i32))),
            SymbolKind::PsiMinus1 => 0.0,
            SymbolKind::PsiPlus1 => u * psi(u),
        }
    }

    /// Symbol values in FFT bin order for a grid of resolution `j`.
    pub fn bin_values(&self, j: u32) -> Vec<Complex64> {
        let n = 1usize << j;
        (0..n)
            .map(|b| self.value(bin_frequency(b, n) as f64))
            .collect()
    }
}

fn psi(u: f64) -> f64 {
    phi(u) - phi(2.0 * u)
}

fn big_psi(u: f64) -> f64 {
    let a = u.abs();
    phi(a / 4.0) * (1.0 - phi(4.0 * a))
}

pub fn make_phi() -> Symbol {
    Symbol::new(SymbolKind::Phi)
}

/// `phi_k(s) = Phi(2^{-k} s) - Phi(2^{-k+1} s)`, with `phi_0 = Phi`.
pub fn make_phi_k(k: u32) -> Symbol {
    Symbol::new(SymbolKind::PhiK(k))
}

pub fn make_auxiliary(which: Auxiliary) -> Symbol {
    Symbol::new(match which {
        Auxiliary::Psi => SymbolKind::Psi,
        Auxiliary::PsiMinus1 => SymbolKind::PsiMinus1,
        Auxiliary::PsiPlus1 => SymbolKind::PsiPlus1,
        Auxiliary::BigPsi => SymbolKind::BigPsi,
    })
}

pub fn make_big_psi_n(n: u32) -> Symbol {
    Symbol::new(SymbolKind::BigPsiN(n))
}

/// Fourier multiplier at a fixed resolution, with its periodized kernel
/// `K(x_m) = sum_l symbol(l) e^{2 pi i l x_m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierOperator {
    symbol: Symbol,
    j: u32,
    weights: Vec<Complex64>,
    kernel: GridFunction,
}

impl MultiplierOperator {
    /// Builds the operator; the symbol must produce real output (even real or
    /// odd imaginary) and its support must fit in `|l| <= N/2`.
    pub fn new(symbol: Symbol, j: u32) -> Result<Self> {
        if symbol.parity() == Parity::OddReal {
            return Err(param(
                "symbol",
                "odd real symbols do not map real functions to real functions",
            ));
        }
        let half = (1usize << j) as f64 / 2.0;
        if symbol.support_radius() > half {
            return Err(LabError::Aliasing {
                lambda: symbol.support_radius(),
                limit: half,
            });
        }
        let weights = symbol.bin_values(j);
        let kernel_c = inverse_transform_complex(&SpectralFunction::from_bins(j, weights.clone()));
        let kernel = GridFunction::from_raw(j, kernel_c.into_iter().map(|c| c.re).collect());
        Ok(Self {
            symbol,
            j,
            weights,
            kernel,
        })
    }

    /// `L_k = phi_k(D)`, defined for `k <= J - 2`.
    pub fn littlewood_paley(k: u32, j: u32) -> Result<Self> {
        if j < 2 || k > j - 2 {
            return Err(LabError::BandLimit {
                limit: 1usize << j.saturating_sub(1),
                mass: 2f64.powi(k as i32 + 1),
            });
        }
        Self::new(make_phi_k(k), j)
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn resolution(&self) -> u32 {
        self.j
    }

    pub fn kernel(&self) -> &GridFunction {
        &self.kernel
    }

    /// `sup |Lf| / sup |f|` on the grid, i.e. the mean of `|K|`.
    pub fn norm_infty(&self) -> f64 {
        self.kernel.samples().iter().map(|v| v.abs()).sum::<f64>() / self.kernel.len() as f64
    }

    pub fn apply_spectral(&self, s: &SpectralFunction) -> SpectralFunction {
        let mut out = s.clone();
        out.map_in_place(|b, c| c * self.weights[b]);
        out
    }

    fn apply_with(&self, f: &GridFunction, transpose: bool) -> Result<GridFunction> {
        if f.resolution() != self.j {
            return Err(LabError::ResolutionMismatch {
                left: self.j,
                right: f.resolution(),
            });
        }
        let n = f.len();
        let mut s = forward_transform(f);
        s.map_in_place(|b, c| {
            let w = if transpose {
                // symbol at -l
                self.weights[(n - b) % n]
            } else {
                self.weights[b]
            };
            c * w
        });
        let out = inverse_transform_complex(&s);
        Ok(GridFunction::from_raw(
            self.j,
            out.into_iter().map(|c| c.re).collect(),
        ))
    }
}

/// `op(f)`: multiply the coefficients by the symbol and synthesize.
pub fn apply(op: &MultiplierOperator, f: &GridFunction) -> Result<GridFunction> {
    op.apply_with(f, false)
}

/// One factor of a composition acting on resolution-`J` grid functions.
#[derive(Debug, Clone, PartialEq)]
pub enum GridOperator {
    Identity,
    Multiplier(MultiplierOperator),
    Expectation(u32),
    Difference(u32),
}

impl GridOperator {
    fn level(&self) -> Option<u32> {
        match self {
            GridOperator::Expectation(k) | GridOperator::Difference(k) => Some(*k),
            _ => None,
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.apply_with(f, false)
    }

    fn apply_with(&self, f: &GridFunction, transpose: bool) -> Result<GridFunction> {
        match self {
            GridOperator::Identity => Ok(f.clone()),
            GridOperator::Multiplier(m) => m.apply_with(f, transpose),
            GridOperator::Expectation(k) => dyadic::conditional_expectation(f, *k),
            GridOperator::Difference(k) => dyadic::martingale_difference(f, *k),
        }
    }
}

/// Applies `ops[0] ∘ ops[1] ∘ ... ∘ ops[last]` to `f`.
pub fn apply_composition(ops: &[GridOperator], f: &GridFunction) -> Result<GridFunction> {
    let mut g = f.clone();
    for op in ops.iter().rev() {
        g = op.apply(&g)?;
    }
    Ok(g)
}

/// Row `i` of the matrix of the composition, computed as `A^T e_i`.
pub fn composition_row(ops: &[GridOperator], j: u32, i: usize) -> Result<Vec<f64>> {
    let n = 1usize << j;
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    let mut g = GridFunction::from_raw(j, e);
    for op in ops {
        g = op.apply_with(&g, true)?;
    }
    Ok(g.into_samples())
}

/// Exact `L^inf -> L^inf` norm of a composition on the grid: the largest
/// absolute row sum of its matrix.
///
/// Multipliers commute with every grid shift and `E_k`, `D_k` with shifts by
/// whole level-`k` blocks, so rows repeat with period `N / 2^{k_max}`. When
/// the leftmost factor is `E_k` or `D_k` the rows are also constant on its
/// blocks, which leaves a single row to evaluate.
pub fn infty_operator_norm(ops: &[GridOperator], j: u32) -> Result<f64> {
    let n = 1usize << j;
    for op in ops {
        if let Some(k) = op.level() {
            if k > j {
                return Err(LabError::LevelOutOfRange { k, max: j });
            }
        }
        if let GridOperator::Multiplier(m) = op {
            if m.resolution() != j {
                return Err(LabError::ResolutionMismatch {
                    left: j,
                    right: m.resolution(),
                });
            }
        }
    }
    let k_max = ops.iter().filter_map(GridOperator::level).max();
    let period = k_max.map_or(1, |k| n >> k);
    let step = match ops.first().and_then(GridOperator::level) {
        Some(k) => n >> k,
        None => 1,
    };
    let mut best = 0.0f64;
    for i in (0..period).step_by(step) {
        let row = composition_row(ops, j, i)?;
        best = best.max(row.iter().map(|v| v.abs()).sum());
    }
    Ok(best)
}

/// The same norm from the full matrix, assembled column by column by
/// applying the composition to every unit vector. Quadratic in `N`; meant as
/// an oracle for [`infty_operator_norm`] on small grids.
pub fn dense_operator_norm(ops: &[GridOperator], j: u32) -> Result<f64> {
    let n = 1usize << j;
    let mut row_sums = vec![0.0; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let image = apply_composition(ops, &GridFunction::new(j, e)?)?;
        for (acc, v) in row_sums.iter_mut().zip(image.samples()) {
            *acc += v.abs();
        }
    }
    Ok(row_sums.into_iter().fold(0.0, f64::max))
}

/// `L^1(T)` norm of the periodized kernel of `which(lambda^{-1} D)` at
/// resolution `j`. Rejects `lambda > N/4`.
pub fn kernel_l1_bound(which: Auxiliary, lambda: f64, j: u32) -> Result<f64> {
    if lambda.is_nan() || lambda < 1.0 {
        return Err(param("lambda", format!("{lambda} < 1")));
    }
    let limit = (1usize << j) as f64 / 4.0;
    if lambda > limit {
        return Err(LabError::Aliasing { lambda, limit });
    }
    let symbol = make_auxiliary(which).scaled(lambda);
    let kernel = inverse_transform_complex(&SpectralFunction::from_bins(j, symbol.bin_values(j)));
    Ok(kernel.iter().map(|c| c.norm()).sum::<f64>() / kernel.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inverse_transform;

    #[test]
    fn phi_plateau_support_and_glue() {
        let p = make_phi();
        assert_eq!(p.real_value(0.5), 1.0);
        assert_eq!(p.real_value(-1.0), 1.0);
        assert_eq!(p.real_value(2.5), 0.0);
        assert_eq!(p.real_value(2.0), 0.0);
        let want = h(0.5) / (h(0.5) + h(0.5));
        assert!((p.real_value(1.5) - want).abs() < 1e-15);
        assert!((p.real_value(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = phi(1.0 + i as f64 / 200.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn phi_k_peaks_and_support() {
        for k in 1..10 {
            let pk = make_phi_k(k);
            let s = 2f64.powi(k as i32);
            assert_eq!(pk.real_value(s), 1.0);
            assert_eq!(pk.real_value(-s), 1.0);
            assert_eq!(pk.real_value(2f64.powi(k as i32 - 1)), 0.0);
            assert_eq!(pk.real_value(2f64.powi(k as i32 + 1)), 0.0);
        }
        assert_eq!(make_phi_k(3).real_value(3.0), 0.0);
    }

    #[test]
    fn partition_of_unity() {
        for i in -6400..=6400 {
            let s = i as f64 / 100.0;
            let total: f64 = (0..=6).map(|k| make_phi_k(k).real_value(s)).sum();
            assert!((total - 1.0).abs() < 1e-14, "s={s}");
        }
    }

    #[test]
    fn auxiliary_supports() {
        let psi = make_auxiliary(Auxiliary::Psi);
        assert_eq!(psi.real_value(0.25), 0.0);
        assert_eq!(psi.real_value(1.0), 1.0);
        assert_eq!(psi.real_value(2.0), 0.0);
        let big = make_auxiliary(Auxiliary::BigPsi);
        assert_eq!(big.real_value(1.0), 1.0);
        for s in [0.5, 0.75, 2.0, 4.0, -3.0] {
            assert_eq!(big.real_value(s), 1.0, "s={s}");
        }
        assert_eq!(big.real_value(0.125), 0.0);
        assert_eq!(big.real_value(8.0), 0.0);
        assert_eq!(
            make_auxiliary(Auxiliary::PsiMinus1).value(0.0),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn reproducing_bumps_fix_phi_n() {
        let mut worst = 0.0f64;
        for n in 0..=8u32 {
            let big = make_big_psi_n(n);
            let pn = make_phi_k(n);
            for s in -1200..=1200 {
                let s = s as f64;
                worst = worst.max((big.real_value(s) * pn.real_value(s) - pn.real_value(s)).abs());
            }
        }
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn symbols_are_even() {
        for sym in [
            make_phi(),
            make_phi_k(3),
            make_auxiliary(Auxiliary::BigPsi),
            make_big_psi_n(2),
        ] {
            for i in 0..500 {
                let s = i as f64 * 0.037;
                assert_eq!(sym.real_value(s), sym.real_value(-s));
                assert_eq!(sym.real_value(sym.support_radius() + s), 0.0);
            }
        }
    }

    #[test]
    fn apply_isolates_lacunary_frequencies() {
        let j = 8;
        let k = 3;
        let f = GridFunction::sample(j, |x| (2.0 * PI * 8.0 * x).cos()).unwrap();
        let l3 = MultiplierOperator::littlewood_paley(k, j).unwrap();
        assert!(apply(&l3, &f).unwrap().max_abs_diff(&f).unwrap() < 1e-13);
        let cos1 = GridFunction::sample(j, |x| (2.0 * PI * x).cos()).unwrap();
        assert!(apply(&l3, &cos1).unwrap().sup_norm() < 1e-15);
        let c = GridFunction::constant(j, 2.0).unwrap();
        let l0 = MultiplierOperator::littlewood_paley(0, j).unwrap();
        assert!(apply(&l0, &c).unwrap().max_abs_diff(&c).unwrap() < 1e-14);
        assert!(MultiplierOperator::littlewood_paley(7, j).is_err());
        let wrong = GridFunction::zeros(7).unwrap();
        assert!(apply(&l0, &wrong).is_err());
    }

    #[test]
    fn apply_matches_circular_convolution_with_kernel() {
        let j = 6;
        let n = 1usize << j;
        let f = GridFunction::sample(j, |x| (x * 17.0).sin() + x * x).unwrap();
        let op = MultiplierOperator::new(make_auxiliary(Auxiliary::Psi).scaled(5.0), j).unwrap();
        let fast = apply(&op, &f).unwrap();
        let k = op.kernel().samples();
        for i in 0..n {
            let direct: f64 = (0..n)
                .map(|m| k[(i + n - m) % n] * f.samples()[m])
                .sum::<f64>()
                / n as f64;
            assert!((direct - fast.samples()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_apply_agrees_with_grid_apply() {
        let j = 7;
        let f = GridFunction::sample(j, |x| (6.0 * x).exp().sin()).unwrap();
        let op = MultiplierOperator::littlewood_paley(2, j).unwrap();
        let via_spec = inverse_transform(&op.apply_spectral(&forward_transform(&f)));
        assert!(via_spec.max_abs_diff(&apply(&op, &f).unwrap()).unwrap() < 1e-13);
    }

    #[test]
    fn trivial_operator_norms() {
        let j = 6;
        assert!((infty_operator_norm(&[GridOperator::Identity], j).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (infty_operator_norm(&[GridOperator::Expectation(0)], j).unwrap() - 1.0).abs() < 1e-15
        );
        assert!(infty_operator_norm(&[GridOperator::Expectation(7)], j).is_err());
    }

    #[test]
    fn row_norm_matches_dense_matrix() {
        let j = 8;
        for lambda in [2.0, 8.0, 32.0, 64.0] {
            let m = GridOperator::Multiplier(
                MultiplierOperator::new(make_auxiliary(Auxiliary::Psi).scaled(lambda), j).unwrap(),
            );
            for k in [1, 3, 5, 8] {
                for lead in [GridOperator::Expectation(k), GridOperator::Difference(k)] {
                    let ops = [lead, m.clone()];
                    let fast = infty_operator_norm(&ops, j).unwrap();
                    let dense = dense_operator_norm(&ops, j).unwrap();
                    assert!((fast - dense).abs() < 1e-9, "k={k} lambda={lambda}");
                }
            }
            // multiplier on the left: every row is needed
            let ops = [m.clone(), GridOperator::Difference(4)];
            let fast = infty_operator_norm(&ops, j).unwrap();
            assert!((fast - dense_operator_norm(&ops, j).unwrap()).abs() < 1e-9);
        }
        let single = MultiplierOperator::new(make_big_psi_n(2), j).unwrap();
        let dense = dense_operator_norm(&[GridOperator::Multiplier(single.clone())], j).unwrap();
        assert!((single.norm_infty() - dense).abs() < 1e-9);
    }

    #[test]
    fn kernel_bound_guards_and_small_cases() {
        // psi at lambda = 1 keeps only l = +-1: kernel 2 cos(2 pi x)
        let v = kernel_l1_bound(Auxiliary::Psi, 1.0, 10).unwrap();
        assert!((v - 4.0 / PI).abs() < 1e-5);
        assert!(kernel_l1_bound(Auxiliary::Psi, 300.0, 10).is_err());
        assert!(kernel_l1_bound(Auxiliary::Psi, 0.5, 10).is_err());
        assert!(MultiplierOperator::new(make_auxiliary(Auxiliary::PsiPlus1), 6).is_err());
    }
}
