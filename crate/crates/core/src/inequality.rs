//! Ratio harnesses for the operator and norm inequalities.
//!
//! Every check produces a [`RatioReport`]: one sample per parameter cell with
//! the measured left side, the predicted right side and their quotient. The
//! fitted constant is the largest quotient. Where a growth exponent is part of
//! the claim, the report also carries log-log fits.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dyadic::{decompose, square_function, DyadicDecomposition};
use crate::error::{param, LabError, Result};
use crate::grid::{lp_norm, GridFunction};
use crate::multipliers::{
    infty_operator_norm, make_auxiliary, make_big_psi_n, Auxiliary, GridOperator,
    MultiplierOperator,
};
use crate::norms::{
    besov_norm, check_q, conjugate, dyadic_besov_norm, lg_norm, CoefficientProfile, LgFlavor,
};
use crate::regression::{ols, LinearFit};
use crate::report::{fmt_sig, CsvTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSample {
    pub param_key: String,
    pub params: Value,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub inequality_id: String,
    pub samples: Vec<RatioSample>,
    pub fitted_constant: f64,
    pub fitted_exponents: BTreeMap<String, LinearFit>,
}

fn ratio(lhs: f64, rhs: f64, key: &str) -> Result<f64> {
    if !(lhs.is_finite() && rhs.is_finite()) || lhs < 0.0 || rhs < 0.0 {
        return Err(LabError::Degenerate(format!("{key}: lhs {lhs}, rhs {rhs}")));
    }
    if rhs == 0.0 {
        if lhs == 0.0 {
            return Ok(0.0);
        }
        return Err(LabError::Degenerate(format!(
            "{key}: lhs {lhs} against a zero bound"
        )));
    }
    Ok(lhs / rhs)
}

impl RatioSample {
    pub fn new(param_key: String, params: Value, lhs: f64, rhs: f64) -> Result<Self> {
        let ratio = ratio(lhs, rhs, &param_key)?;
        Ok(Self {
            param_key,
            params,
            lhs,
            rhs,
            ratio,
        })
    }
}

impl RatioReport {
    pub fn new(inequality_id: impl Into<String>, samples: Vec<RatioSample>) -> Self {
        let fitted_constant = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        Self {
            inequality_id: inequality_id.into(),
            samples,
            fitted_constant,
            fitted_exponents: BTreeMap::new(),
        }
    }

    pub fn with_fit(mut self, name: &str, fit: LinearFit) -> Self {
        self.fitted_exponents.insert(name.to_string(), fit);
        self
    }

    pub fn exponent(&self, name: &str) -> Option<&LinearFit> {
        self.fitted_exponents.get(name)
    }

    /// Largest ratio among samples whose `params[name]` equals `value`.
    pub fn max_ratio_where(&self, name: &str, value: f64) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.params.get(name).and_then(Value::as_f64) == Some(value))
            .map(|s| s.ratio)
            .fold(0.0, f64::max)
    }

    /// Rows of the summary table `inequality,param_key,lhs,rhs,ratio`.
    pub fn push_rows(&self, table: &mut CsvTable) {
        for s in &self.samples {
            table.push(vec![
                self.inequality_id.clone(),
                s.param_key.clone(),
                fmt_sig(s.lhs),
                fmt_sig(s.rhs),
                fmt_sig(s.ratio),
            ]);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut table = summary_table();
        self.push_rows(&mut table);
        table.render()
    }
}

pub fn summary_table() -> CsvTable {
    CsvTable::new(["inequality", "param_key", "lhs", "rhs", "ratio"])
}

/// Slope of `ln(max ratio at p)` against `ln p`, one point per distinct `p`.
pub fn p_exponent(report: &RatioReport, p_list: &[f64]) -> Result<LinearFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &p in p_list {
        let m = report.max_ratio_where("p", p);
        if m > 0.0 {
            xs.push(p.ln());
            ys.push(m.ln());
        }
    }
    ols(&xs, &ys)
}

fn with_p_exponent(report: RatioReport, p_list: &[f64]) -> RatioReport {
    match p_exponent(&report, p_list) {
        Ok(fit) => report.with_fit("p_exponent", fit),
        Err(_) => report,
    }
}

fn key(parts: &[(&str, f64)]) -> String {
    parts
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_sig(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn check_p_list(p_list: &[f64]) -> Result<()> {
    if p_list.is_empty() {
        return Err(param("p_list", "empty"));
    }
    if let Some(p) = p_list.iter().find(|p| !(**p >= 2.0 && p.is_finite())) {
        return Err(param(
            "p_list",
            format!("{p} is not a finite exponent >= 2"),
        ));
    }
    Ok(())
}

/// `min{2^k / lambda, 1}`.
pub fn expectation_bound(k: u32, lambda: f64) -> f64 {
    (2f64.powi(k as i32) / lambda).min(1.0)
}

/// `min{2^k / lambda, lambda / 2^k}`.
pub fn difference_bound(k: u32, lambda: f64) -> f64 {
    let r = 2f64.powi(k as i32) / lambda;
    r.min(1.0 / r)
}

/// One cell of the `E_k` / `D_k` against `psi(D / lambda)` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma3Cell {
    pub k: u32,
    pub lambda: f64,
    pub expectation_norm: f64,
    pub difference_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub cells: Vec<Lemma3Cell>,
    pub report: RatioReport,
}

impl Lemma3Report {
    /// `k,lambda,norm,bound` for either variant.
    pub fn to_csv(&self, difference: bool) -> String {
        let mut t = CsvTable::new(["k", "lambda", "norm", "bound"]);
        for c in &self.cells {
            if difference {
                t.push_numbers(&[
                    c.k as f64,
                    c.lambda,
                    c.difference_norm,
                    difference_bound(c.k, c.lambda),
                ]);
            } else {
                t.push_numbers(&[
                    c.k as f64,
                    c.lambda,
                    c.expectation_norm,
                    expectation_bound(c.k, c.lambda),
                ]);
            }
        }
        t.render()
    }
}

/// Smallest `|log2(2^k / lambda)|` counted as asymptotic in the slope fits.
/// `psi(s / lambda)` lives on `lambda/2 < |s| < 2 lambda`, so within a factor
/// of 4 of `lambda` the sweep is still in the crossover.
pub const LEMMA3_ASYMPTOTIC_GAP: f64 = 3.0;

/// Exact grid norms of `E_k psi(D/lambda)` and `D_k psi(D/lambda)` against
/// their min-bounds. The exponents `slope_left` and `slope_right` fit
/// `log2 ||D_k psi(D/lambda)||` against `x = log2(2^k / lambda)` for
/// `x <= -3` and `x >= 3`; the `_all` variants use `|x| >= 1`.
pub fn check_lemma3(j: u32, ks: &[u32], lambdas: &[f64]) -> Result<Lemma3Report> {
    let limit = 2f64.powi(j as i32 - 2);
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 1.0 && **l <= limit)) {
        return Err(LabError::Aliasing { lambda: *l, limit });
    }
    if let Some(k) = ks.iter().find(|k| **k > j) {
        return Err(LabError::LevelOutOfRange { k: *k, max: j });
    }
    let multipliers = crate::par::try_map(lambdas, |&l| {
        MultiplierOperator::new(make_auxiliary(Auxiliary::Psi).scaled(l), j)
    })?;
    let mut cells_in = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        for &k in ks {
            cells_in.push((k, li, lambda));
        }
    }
    let cells = crate::par::try_map(&cells_in, |&(k, li, lambda)| -> Result<Lemma3Cell> {
        let m = GridOperator::Multiplier(multipliers[li].clone());
        let e = infty_operator_norm(&[GridOperator::Expectation(k), m.clone()], j)?;
        let d = infty_operator_norm(&[GridOperator::Difference(k), m], j)?;
        Ok(Lemma3Cell {
            k,
            lambda,
            expectation_norm: e,
            difference_norm: d,
        })
    })?;
    let mut samples = Vec::new();
    for c in &cells {
        let base = [("k", c.k as f64), ("lambda", c.lambda)];
        samples.push(RatioSample::new(
            format!("E;{}", key(&base)),
            json!({"variant": "E", "k": c.k, "lambda": c.lambda}),
            c.expectation_norm,
            expectation_bound(c.k, c.lambda),
        )?);
        if c.k >= 1 {
            samples.push(RatioSample::new(
                format!("D;{}", key(&base)),
                json!({"variant": "D", "k": c.k, "lambda": c.lambda}),
                c.difference_norm,
                difference_bound(c.k, c.lambda),
            )?);
        }
    }
    let mut report = RatioReport::new("lemma3", samples);
    let side = |sign: f64, from: f64| -> Option<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = cells
            .iter()
            .filter(|c| c.k >= 1 && c.difference_norm > 0.0)
            .map(|c| ((c.k as f64) - c.lambda.log2(), c.difference_norm.log2()))
            .filter(|(x, _)| sign * x >= from)
            .unzip();
        ols(&xs, &ys).ok()
    };
    let fits = [
        ("slope_left", -1.0, LEMMA3_ASYMPTOTIC_GAP),
        ("slope_right", 1.0, LEMMA3_ASYMPTOTIC_GAP),
        ("slope_left_all", -1.0, 1.0),
        ("slope_right_all", 1.0, 1.0),
    ];
    for (name, sign, from) in fits {
        if let Some(fit) = side(sign, from) {
            report = report.with_fit(name, fit);
        }
    }
    Ok(Lemma3Report { cells, report })
}

/// `||D_k Psi_n(D)||_{inf -> inf}` against `2^{-|k-n|}` for every `n` whose
/// reproducing bump fits the grid and every `k <= J` with `|k - n| <= max_gap`.
pub fn kernel_decay_sweep(j: u32, max_gap: u32) -> Result<RatioReport> {
    let half = (1usize << j) as f64 / 2.0;
    let ns: Vec<u32> = (0..=j)
        .take_while(|&n| make_big_psi_n(n).support_radius() <= half)
        .collect();
    let mut cells = Vec::new();
    for &n in &ns {
        for k in n.saturating_sub(max_gap)..=(n + max_gap).min(j) {
            cells.push((k, n));
        }
    }
    let ops = crate::par::try_map(&ns, |&n| MultiplierOperator::new(make_big_psi_n(n), j))?;
    let samples = crate::par::try_map(&cells, |&(k, n)| {
        let op = GridOperator::Multiplier(ops[n as usize].clone());
        let lhs = infty_operator_norm(&[GridOperator::Difference(k), op], j)?;
        let gap = (k as i64 - n as i64).unsigned_abs() as i32;
        RatioSample::new(
            key(&[("k", k as f64), ("n", n as f64)]),
            json!({"k": k, "n": n}),
            lhs,
            2f64.powi(-gap),
        )
    })?;
    Ok(RatioReport::new("prop_dy_kernel_decay", samples))
}

/// `dyadic_besov_norm / besov_norm` over a band-limited corpus.
pub fn check_prop_dy(corpus: &[GridFunction], q: f64) -> Result<RatioReport> {
    check_q(q)?;
    let indices: Vec<usize> = (0..corpus.len()).collect();
    let samples = crate::par::try_map(&indices, |&i| {
        let f = &corpus[i];
        RatioSample::new(
            format!("f={i};q={}", fmt_sig(q)),
            json!({"function": i, "q": q}),
            dyadic_besov_norm(f, q)?,
            besov_norm(f, q)?,
        )
    })?;
    Ok(RatioReport::new("prop_dy", samples))
}

/// `||f||_p / (sqrt(p) ||S f||_p)`, with the fitted exponent `p_exponent` of
/// the corpus-wide maximum.
pub fn check_cww(corpus: &[GridFunction], p_list: &[f64]) -> Result<RatioReport> {
    check_p_list(p_list)?;
    let indices: Vec<usize> = (0..corpus.len()).collect();
    let per_function = crate::par::try_map(&indices, |&i| -> Result<Vec<RatioSample>> {
        let f = &corpus[i];
        let s = square_function(&decompose(f));
        p_list
            .iter()
            .map(|&p| {
                RatioSample::new(
                    key(&[("f", i as f64), ("p", p)]),
                    json!({"function": i, "p": p}),
                    lp_norm(f, p)?,
                    p.sqrt() * lp_norm(&s, p)?,
                )
            })
            .collect()
    })?;
    let report = RatioReport::new("cww", per_function.into_iter().flatten().collect());
    Ok(with_p_exponent(report, p_list))
}

/// `1/s'`, zero for `s = 1`.
fn inverse_conjugate(s: f64) -> f64 {
    1.0 - 1.0 / s
}

/// `||sum_k D_k f_k||_p` against `p^{1/s'} (sum_k ||f_k||_p^s)^{1/s}`, where
/// `f_k` is the `k`-th member of a family. The exponent `p_exponent` is the
/// growth left over after dividing by `p^{1/s'}`.
pub fn check_interpol(
    families: &[Vec<GridFunction>],
    p_list: &[f64],
    s: f64,
) -> Result<RatioReport> {
    check_p_list(p_list)?;
    if !(1.0..=2.0).contains(&s) {
        return Err(param("s", format!("{s} outside [1, 2]")));
    }
    let indices: Vec<usize> = (0..families.len()).collect();
    let per_family = crate::par::try_map(&indices, |&i| -> Result<Vec<RatioSample>> {
        let family = &families[i];
        let first = family
            .first()
            .ok_or_else(|| param("families", format!("family {i} is empty")))?;
        let j = first.resolution();
        let mut g = GridFunction::zeros(j)?;
        for (k, fk) in family.iter().enumerate() {
            if k as u32 > j {
                if fk.sup_norm() > 0.0 {
                    return Err(param(
                        "families",
                        format!("family {i} has a nonzero member beyond level {j}"),
                    ));
                }
                continue;
            }
            g = g.add(&crate::dyadic::martingale_difference(fk, k as u32)?)?;
        }
        p_list
            .iter()
            .map(|&p| {
                let mut acc = 0.0;
                for fk in family {
                    acc += lp_norm(fk, p)?.powf(s);
                }
                RatioSample::new(
                    key(&[("family", i as f64), ("p", p), ("s", s)]),
                    json!({"family": i, "p": p, "s": s}),
                    lp_norm(&g, p)?,
                    p.powf(inverse_conjugate(s)) * acc.powf(1.0 / s),
                )
            })
            .collect()
    })?;
    let report = RatioReport::new("interpol", per_family.into_iter().flatten().collect());
    Ok(with_p_exponent(report, p_list))
}

/// The integer `N` with `p <= N < p + 1`.
pub fn split_index(p: f64) -> usize {
    p.ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpimbSplit {
    pub head: GridFunction,
    pub tail: GridFunction,
    pub report: RatioReport,
}

fn pieces_sum(d: &DyadicDecomposition, levels: &[usize]) -> GridFunction {
    let mut keep = vec![false; d.levels()];
    for &k in levels {
        keep[k] = true;
    }
    d.reconstruct_from(|k| keep[k])
}

/// Splits `f` into the `N + 1` largest martingale pieces (`head`) and the
/// rest (`tail`), and measures `||head||_p` against `p^{1/q'}` times the
/// dyadic Besov norm (`eq_head`) and `p^{-1/q'} ||tail||_p` against the
/// Lorentz-Besov norm (`eq_tail`).
pub fn expimb_split(f: &GridFunction, q: f64, p: f64) -> Result<ExpimbSplit> {
    check_q(q)?;
    if !(p >= 2.0 && p.is_finite()) {
        return Err(param("p", format!("{p} is not a finite exponent >= 2")));
    }
    let d = decompose(f);
    let profile = CoefficientProfile::new(d.piece_sup_norms());
    let n_head = (split_index(p) + 1).min(profile.ordering().len());
    let (head_levels, tail_levels) = profile.ordering().split_at(n_head);
    let head = pieces_sum(&d, head_levels);
    let tail = pieces_sum(&d, tail_levels);
    let qc = conjugate(q);
    let base = [("p", p), ("q", q)];
    let samples = vec![
        RatioSample::new(
            format!("head;{}", key(&base)),
            json!({"part": "head", "p": p, "q": q}),
            lp_norm(&head, p)?,
            p.powf(1.0 / qc) * profile.lq(q),
        )?,
        RatioSample::new(
            format!("tail;{}", key(&base)),
            json!({"part": "tail", "p": p, "q": q}),
            p.powf(-1.0 / qc) * lp_norm(&tail, p)?,
            profile.lorentz_q2(q),
        )?,
    ];
    Ok(ExpimbSplit {
        head,
        tail,
        report: RatioReport::new("expimb", samples),
    })
}

/// [`expimb_split`] over a corpus and a list of `p`; the report carries the
/// fitted exponents `head_p_exponent` and `tail_p_exponent`.
pub fn check_expimb(corpus: &[GridFunction], q: f64, p_list: &[f64]) -> Result<RatioReport> {
    check_p_list(p_list)?;
    let mut cells = Vec::new();
    for i in 0..corpus.len() {
        for &p in p_list {
            cells.push((i, p));
        }
    }
    let parts = crate::par::try_map(&cells, |&(i, p)| -> Result<Vec<RatioSample>> {
        let split = expimb_split(&corpus[i], q, p)?;
        Ok(split
            .report
            .samples
            .into_iter()
            .map(|mut s| {
                s.param_key = format!("f={i};{}", s.param_key);
                if let Value::Object(m) = &mut s.params {
                    m.insert("function".into(), json!(i));
                }
                s
            })
            .collect())
    })?;
    let samples: Vec<RatioSample> = parts.into_iter().flatten().collect();
    let part_report = |part: &str| {
        RatioReport::new(
            part,
            samples
                .iter()
                .filter(|s| s.params.get("part").and_then(Value::as_str) == Some(part))
                .cloned()
                .collect(),
        )
    };
    let mut report = RatioReport::new("expimb", samples.clone());
    for part in ["head", "tail"] {
        if let Ok(fit) = p_exponent(&part_report(part), p_list) {
            report = report.with_fit(&format!("{part}_p_exponent"), fit);
        }
    }
    Ok(report)
}

/// Largest ratio of one part (`head` or `tail`) of an expimb report.
pub fn expimb_part_constant(report: &RatioReport, part: &str) -> f64 {
    report
        .samples
        .iter()
        .filter(|s| s.params.get("part").and_then(Value::as_str) == Some(part))
        .map(|s| s.ratio)
        .fold(0.0, f64::max)
}

/// `lg_norm(dyadic) / lg_norm(fourier)` over a band-limited corpus.
pub fn check_lemma_star(corpus: &[GridFunction], gamma: f64) -> Result<RatioReport> {
    if !(gamma > 0.5) {
        return Err(param("gamma", format!("{gamma} must exceed 1/2")));
    }
    let indices: Vec<usize> = (0..corpus.len()).collect();
    let samples = crate::par::try_map(&indices, |&i| {
        let f = &corpus[i];
        RatioSample::new(
            key(&[("f", i as f64), ("gamma", gamma)]),
            json!({"function": i, "gamma": gamma}),
            lg_norm(f, gamma, LgFlavor::Dyadic)?,
            lg_norm(f, gamma, LgFlavor::Fourier)?,
        )
    })?;
    Ok(RatioReport::new("lemma_star", samples))
}
