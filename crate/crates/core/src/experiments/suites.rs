use rand::Rng;
use serde_json::{json, Value};

use super::config::{check_resolution, ConfigError, Params};
use super::{Artifact, Check, ExperimentConfig, ExperimentOutcome, Plot, RunError};
use crate::corpus::{
    generate_corpus, lacunary, lacunary_witnesses, lg_heights, max_lacunary_terms, member_rng,
    packet, packet_sum, random_martingale, CorpusKind, CorpusParams,
};
use crate::entropy::{
    approx_errors, corner_fit, entropy_upper_curve, packing_lower_bounds, predicted_rate,
    quantization_cover_bound, upper_from_cover, ApproximationProfile, EntropyCurve, PackingParams,
};
use crate::error::Result;
use crate::grid::GridFunction;
use crate::inequality::{
    check_cww, check_expimb, check_interpol, check_lemma3, check_lemma_star, check_prop_dy,
    expimb_part_constant, expimb_split, kernel_decay_sweep, summary_table, RatioReport,
    RatioSample,
};
use crate::multipliers::{
    dense_operator_norm, infty_operator_norm, make_auxiliary, Auxiliary, GridOperator,
    MultiplierOperator,
};
use crate::norms::{
    conjugate, growth_envelope_estimate, log_weighted_rearrangement_sup, luxemburg_norm,
};
use crate::regression::{loglog_fit, ols, LinearFit};
use crate::report::{fmt_sig, CsvTable, NormRecord};

/// Largest fitted constant allowed for the `E_k` / `D_k` sweep.
pub const LEMMA3_MAX_CONSTANT: f64 = 50.0;
pub const LEMMA3_SLOPE_TOLERANCE: f64 = 0.15;
/// Resolution of the dense-matrix cross-check.
pub const DENSE_ORACLE_RESOLUTION: u32 = 8;
pub const DENSE_ORACLE_TOLERANCE: f64 = 1e-9;
pub const MAX_P_EXPONENT: f64 = 0.05;
/// Allowed relative growth of a fitted constant when the corpus doubles.
pub const DOUBLING_STABILITY: f64 = 0.2;
pub const ENVELOPE_SLOPE_TOLERANCE: f64 = 0.15;
pub const MAX_EQUIVALENCE_SPREAD: f64 = 10.0;
pub const APPR_SLOPE_TOLERANCE: f64 = 0.15;
pub const ENTROPY_EXPONENT_TOLERANCE: f64 = 0.25;
/// Slack for the Luxemburg refinement when comparing errors across levels.
pub const MONOTONE_SLACK: f64 = 1e-4;
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-10;
/// Largest `n` probed by the packing search.
pub const PACKING_MAX_N: u64 = 16;
pub const PACKING_MAX_RESOLUTION: u32 = 8;

const GOOD_LAMBDA_EPS: [f64; 3] = [0.5, 0.25, 0.125];
const GOOD_LAMBDA_LEVELS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const KERNEL_DECAY_GAP: u32 = 6;

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn tag(parts: &[(&str, f64)]) -> String {
    parts
        .iter()
        .map(|(k, v)| format!("{k}{}", fmt_sig(*v)))
        .collect::<Vec<_>>()
        .join("_")
}

fn powers_of_two(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|e| 2f64.powi(e as i32)).collect()
}

fn q_values(p: &Params) -> std::result::Result<Vec<f64>, ConfigError> {
    match p.q {
        Some(q) if q > 1.0 && q <= 2.0 => Ok(vec![q]),
        Some(q) => Err(ConfigError::new("params.q", format!("{q} outside (1, 2]"))),
        None => Ok(vec![4.0 / 3.0, 2.0]),
    }
}

fn corpus_size(p: &Params, default: usize) -> std::result::Result<usize, ConfigError> {
    match p.corpus_size {
        Some(0) => Err(ConfigError::new("params.corpus_size", "must be at least 1")),
        Some(n) if n > 100_000 => Err(ConfigError::new(
            "params.corpus_size",
            format!("{n} too large"),
        )),
        Some(n) => Ok(n),
        None => Ok(default),
    }
}

fn p_values(p: &Params) -> std::result::Result<Vec<f64>, ConfigError> {
    let list = p.p_list.clone().unwrap_or_else(|| powers_of_two(1, 6));
    if let Some(x) = list.iter().find(|x| !(**x >= 2.0 && x.is_finite())) {
        return Err(ConfigError::new(
            "params.p_list",
            format!("{x} is not a finite exponent >= 2"),
        ));
    }
    Ok(list)
}

fn region_pairs(
    p: &Params,
    defaults: &[(f64, f64)],
) -> std::result::Result<Vec<(f64, f64)>, ConfigError> {
    let pairs = if p.gamma.is_some() || p.nu.is_some() {
        vec![(p.gamma.unwrap_or(1.0), p.nu.unwrap_or(2.0))]
    } else {
        defaults.to_vec()
    };
    for &(gamma, nu) in &pairs {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(ConfigError::new(
                "params.nu",
                format!("{nu} must be positive"),
            ));
        }
        if crate::entropy::check_region(gamma, nu).is_err() {
            return Err(ConfigError::new(
                "params.gamma",
                format!("(gamma, nu) = ({gamma}, {nu}) outside the admissible region"),
            ));
        }
    }
    Ok(pairs)
}

fn budget(p: &Params, default: usize) -> std::result::Result<usize, ConfigError> {
    match p.budget {
        Some(b) if b < 2 => Err(ConfigError::new("params.budget", format!("{b} < 2"))),
        Some(b) if b > 1 << 16 => Err(ConfigError::new("params.budget", format!("{b} too large"))),
        Some(b) => Ok(b),
        None => Ok(default),
    }
}

fn fit_json(fit: Option<&LinearFit>) -> Value {
    fit.map_or(Value::Null, |f| {
        serde_json::to_value(f).unwrap_or(Value::Null)
    })
}

fn slope_check(name: String, fit: Option<&LinearFit>, target: f64, tol: f64) -> Check {
    match fit {
        Some(f) => {
            Check::near(name, f.slope, target, tol).with_detail(format!("points {}", f.points))
        }
        None => Check::holds(
            name,
            false,
            f64::NAN,
            format!("{} +- {}", fmt_sig(target), fmt_sig(tol)),
        )
        .with_detail("fit unavailable"),
    }
}

fn exponent_check(name: String, fit: Option<&LinearFit>) -> Check {
    match fit {
        Some(f) => Check::at_most(name, f.slope, MAX_P_EXPONENT),
        None => Check::holds(
            name,
            false,
            f64::NAN,
            format!("<= {}", fmt_sig(MAX_P_EXPONENT)),
        )
        .with_detail("fit unavailable"),
    }
}

/// `max_p` ratio per exponent `p`, as a `p,max_ratio` table.
fn max_by_p_table(report: &RatioReport, p_list: &[f64]) -> String {
    let mut t = CsvTable::new(["p", "max_ratio"]);
    for &p in p_list {
        t.push_numbers(&[p, report.max_ratio_where("p", p)]);
    }
    t.render()
}

fn loglog_plot(title: impl Into<String>, columns: Vec<usize>) -> Plot {
    Plot {
        title: title.into(),
        columns,
        logx: true,
        logy: true,
    }
}

fn stability_check(name: String, half: f64, full: f64) -> Check {
    let growth = if half > 0.0 {
        full / half - 1.0
    } else {
        f64::INFINITY
    };
    Check::at_most(name, growth, DOUBLING_STABILITY).with_detail(format!(
        "C(n) = {}, C(2n) = {}",
        fmt_sig(half),
        fmt_sig(full)
    ))
}

fn max_ratio_over(samples: &[RatioSample], keep: impl Fn(&RatioSample) -> bool) -> f64 {
    samples
        .iter()
        .filter(|s| keep(s))
        .map(|s| s.ratio)
        .fold(0.0, f64::max)
}

fn function_index(s: &RatioSample) -> usize {
    s.params
        .get("function")
        .and_then(Value::as_u64)
        .unwrap_or(0) as usize
}

/// Largest gap between the row-sum norm and the dense-matrix norm.
pub fn dense_oracle_gap(j: u32) -> Result<f64> {
    let mut cells = Vec::new();
    for k in 1..=j {
        for e in 1..=j - 2 {
            cells.push((k, 2f64.powi(e as i32)));
        }
    }
    let gaps = crate::par::try_map(&cells, |&(k, lambda)| -> Result<f64> {
        let m = GridOperator::Multiplier(MultiplierOperator::new(
            make_auxiliary(Auxiliary::Psi).scaled(lambda),
            j,
        )?);
        let mut gap = 0.0f64;
        for lead in [GridOperator::Expectation(k), GridOperator::Difference(k)] {
            let ops = [lead, m.clone()];
            gap = gap.max((infty_operator_norm(&ops, j)? - dense_operator_norm(&ops, j)?).abs());
        }
        Ok(gap)
    })?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

pub(super) fn verify_lemma3(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 5)?;
    let ks = cfg
        .params
        .k_range
        .clone()
        .unwrap_or_else(|| (1..=10.min(j - 2)).collect());
    if let Some(k) = ks.iter().find(|k| **k > j) {
        return Err(ConfigError::new("params.k_range", format!("level {k} above J = {j}")).into());
    }
    let limit = 2f64.powi(j as i32 - 2);
    let lambdas = cfg
        .params
        .lambda_range
        .clone()
        .unwrap_or_else(|| powers_of_two(3, 10.min(j - 2)));
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 1.0 && **l <= limit)) {
        return Err(ConfigError::new(
            "params.lambda_range",
            format!("{l} outside [1, 2^(J-2)] = [1, {limit}]"),
        )
        .into());
    }
    let rep = check_lemma3(j, &ks, &lambdas)?;
    let r = &rep.report;
    out.checks.push(Check::at_most(
        "lemma3.constant",
        r.fitted_constant,
        LEMMA3_MAX_CONSTANT,
    ));
    out.checks.push(slope_check(
        "lemma3.slope_left".into(),
        r.exponent("slope_left"),
        1.0,
        LEMMA3_SLOPE_TOLERANCE,
    ));
    out.checks.push(slope_check(
        "lemma3.slope_right".into(),
        r.exponent("slope_right"),
        -1.0,
        LEMMA3_SLOPE_TOLERANCE,
    ));
    let gap = dense_oracle_gap(DENSE_ORACLE_RESOLUTION)?;
    out.checks.push(
        Check::at_most("lemma3.dense_oracle", gap, DENSE_ORACLE_TOLERANCE)
            .with_detail(format!("J = {DENSE_ORACLE_RESOLUTION}")),
    );
    out.record("fitted_constant", r.fitted_constant);
    out.record("fitted_exponents", &r.fitted_exponents);
    out.record("dense_oracle_gap", gap);
    let plot = |title: &str| Plot {
        title: title.into(),
        columns: vec![3, 4],
        logx: false,
        logy: true,
    };
    out.artifacts.push(Artifact::plotted(
        "lemma3_expectation.csv",
        rep.to_csv(false),
        plot("E_k psi(D/lambda)"),
    ));
    out.artifacts.push(Artifact::plotted(
        "lemma3_difference.csv",
        rep.to_csv(true),
        plot("D_k psi(D/lambda)"),
    ));
    out.artifacts
        .push(Artifact::table("lemma3_summary.csv", r.to_csv()));
    Ok(())
}

/// Lacunary and random-profile members with unit Besov norm, ordered so the
/// first half holds the first `n` members of each kind.
fn besov_corpus(j: u32, q: f64, n: usize, seed: u64) -> Result<Vec<GridFunction>> {
    let params = CorpusParams {
        j,
        q,
        ..Default::default()
    };
    let lac = generate_corpus(CorpusKind::Lacunary, 2 * n, sub_seed(seed, 1), &params)?;
    let bes = generate_corpus(CorpusKind::BesovProfile, 2 * n, sub_seed(seed, 2), &params)?;
    Ok([&lac[..n], &bes[..n], &lac[n..], &bes[n..]].concat())
}

pub(super) fn verify_prop_dy(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let qs = q_values(&cfg.params)?;
    let n = corpus_size(&cfg.params, 64)?;
    let mut summary = summary_table();
    let mut records = Vec::new();
    let mut constants = Vec::new();
    for (qi, &q) in qs.iter().enumerate() {
        let corpus = besov_corpus(j, q, n, sub_seed(cfg.seed, 10 + qi as u64))?;
        let qc = conjugate(q);
        let dy = check_prop_dy(&corpus, q)?;
        let lux = crate::par::try_map(&corpus, |f| luxemburg_norm(f, qc))?;
        let thm_samples = dy
            .samples
            .iter()
            .map(|s| {
                let i = function_index(s);
                RatioSample::new(
                    format!("f={i};q={}", fmt_sig(q)),
                    json!({"function": i, "q": q}),
                    lux[i],
                    s.lhs,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let thm = RatioReport::new("thm1", thm_samples);
        let half = |s: &RatioSample| function_index(s) < 2 * n;
        let qtag = fmt_sig(q);
        let (c1_half, c2_half) = (
            max_ratio_over(&dy.samples, half),
            max_ratio_over(&thm.samples, half),
        );
        out.checks.push(stability_check(
            format!("prop_dy.c1_stability[q={qtag}]"),
            c1_half,
            dy.fitted_constant,
        ));
        out.checks.push(stability_check(
            format!("thm1.c2_stability[q={qtag}]"),
            c2_half,
            thm.fitted_constant,
        ));
        constants.push(json!({
            "q": q, "corpus_size": corpus.len(),
            "c1": dy.fitted_constant, "c1_half": c1_half,
            "c2": thm.fitted_constant, "c2_half": c2_half,
        }));
        dy.push_rows(&mut summary);
        thm.push_rows(&mut summary);
        for (i, s) in dy.samples.iter().enumerate() {
            let id = format!("q={qtag};f={i}");
            let p = json!({"q": q});
            records.push(NormRecord {
                function_id: id.clone(),
                norm_name: "besov".into(),
                params: p.clone(),
                value: s.rhs,
            });
            records.push(NormRecord {
                function_id: id.clone(),
                norm_name: "dyadic_besov".into(),
                params: p,
                value: s.lhs,
            });
            records.push(NormRecord {
                function_id: id,
                norm_name: "luxemburg".into(),
                params: json!({"nu": qc}),
                value: lux[i],
            });
        }
    }
    let kernel = kernel_decay_sweep(j, KERNEL_DECAY_GAP)?;
    kernel.push_rows(&mut summary);
    out.record("constants", constants);
    out.record("kernel_decay_constant", kernel.fitted_constant);
    out.artifacts
        .push(Artifact::table("prop_dy_summary.csv", summary.render()));
    out.artifacts.push(Artifact::table(
        "norms.json",
        serde_json::to_string_pretty(&crate::report::round_json(
            serde_json::to_value(&records).unwrap_or(Value::Null),
        ))
        .unwrap_or_default()
            + "\n",
    ));
    Ok(())
}

/// `n` martingales: the first half random-sign packet sums, the second half
/// random-amplitude martingales. Member `i` has `(1+k)^{-g}` heights with
/// `g` uniform in `[0, gamma]` and a random number of levels.
fn martingale_corpus(j: u32, n: usize, gamma: f64, seed: u64) -> Result<Vec<GridFunction>> {
    let indices: Vec<u64> = (0..n as u64).collect();
    crate::par::try_map(&indices, |&i| {
        let mut rng = member_rng(seed, i);
        let g = rng.gen_range(0.0..=gamma);
        let len = rng.gen_range(1..=j as usize + 1);
        let heights = lg_heights(g, len);
        if (i as usize) < n / 2 {
            packet_sum(j, &heights, &mut rng)
        } else {
            random_martingale(j, &heights, &mut rng)
        }
    })
}

pub(super) fn verify_cww(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let n = corpus_size(&cfg.params, 200)?;
    let p_list = p_values(&cfg.params)?;
    let gamma = cfg.params.gamma.unwrap_or(1.0);
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(
            ConfigError::new("params.gamma", format!("{gamma} must be nonnegative")).into(),
        );
    }
    let corpus = martingale_corpus(j, n, gamma, sub_seed(cfg.seed, 30))?;
    let rep = check_cww(&corpus, &p_list)?;
    out.checks.push(Check::holds(
        "cww.finite",
        rep.fitted_constant.is_finite(),
        rep.fitted_constant,
        "finite",
    ));
    out.checks.push(exponent_check(
        "cww.p_exponent".into(),
        rep.exponent("p_exponent"),
    ));
    let good = crate::dyadic::good_lambda_profile(&corpus, &GOOD_LAMBDA_LEVELS, &GOOD_LAMBDA_EPS);
    let (xs, ys): (Vec<f64>, Vec<f64>) = good
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|(e, r)| (1.0 / (e * e), r.ln()))
        .unzip();
    out.record("fitted_constant", rep.fitted_constant);
    out.record("p_exponent", fit_json(rep.exponent("p_exponent")));
    out.record(
        "good_lambda",
        json!({
            "eps_ratio": good.iter().map(|(e, r)| json!({"eps": e, "ratio": r})).collect::<Vec<_>>(),
            "log_ratio_vs_inverse_eps_squared": fit_json(ols(&xs, &ys).ok().as_ref()),
        }),
    );
    out.artifacts
        .push(Artifact::table("cww_summary.csv", rep.to_csv()));
    out.artifacts.push(Artifact::plotted(
        "cww_max_ratio.csv",
        max_by_p_table(&rep, &p_list),
        loglog_plot("max ||f||_p / (sqrt(p) ||S f||_p)", vec![2]),
    ));
    Ok(())
}

/// For each height profile `(1+k)^{-g}` and family length: one family of
/// random-sign packets `f_k = a_k h_k` and `reps` families of random-amplitude
/// level-`k` martingale pieces. Then `reps` families of full-resolution
/// random signs, which `D_k` mostly annihilates.
fn interpol_families(j: u32, reps: usize, seed: u64) -> Result<Vec<Vec<GridFunction>>> {
    let mut lengths: Vec<usize> = vec![1, 2, 4, 8];
    lengths.retain(|&l| l <= j as usize);
    lengths.push(j as usize + 1);
    let mut families = Vec::new();
    let mut index = 0u64;
    let mut next_rng = || {
        index += 1;
        member_rng(seed, index - 1)
    };
    for gamma in [0.0, 0.5, 1.0] {
        for &len in &lengths {
            let heights = lg_heights(gamma, len);
            let mut rng = next_rng();
            families.push(
                heights
                    .iter()
                    .enumerate()
                    .map(|(k, a)| Ok(packet(j, k as u32, &mut rng)?.scale(*a)))
                    .collect::<Result<Vec<_>>>()?,
            );
            for _ in 0..reps {
                let mut rng = next_rng();
                families.push(
                    heights
                        .iter()
                        .enumerate()
                        .map(|(k, a)| {
                            let mut single = vec![0.0; k + 1];
                            single[k] = *a;
                            random_martingale(j, &single, &mut rng)
                        })
                        .collect::<Result<Vec<_>>>()?,
                );
            }
        }
    }
    for _ in 0..reps {
        let mut rng = next_rng();
        families.push(
            (0..=j)
                .map(|_| packet(j, j, &mut rng))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(families)
}

pub(super) fn verify_interpol(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let reps = corpus_size(&cfg.params, 4)?;
    let p_list = p_values(&cfg.params)?;
    let families = interpol_families(j, reps, sub_seed(cfg.seed, 40))?;
    let mut summary = summary_table();
    let mut max_table = CsvTable::new(["p", "s1", "s4/3", "s2"]);
    let mut per_s = Vec::new();
    let mut fits = serde_json::Map::new();
    for s in [1.0, 4.0 / 3.0, 2.0] {
        let rep = check_interpol(&families, &p_list, s)?;
        let stag = fmt_sig(s);
        out.checks.push(exponent_check(
            format!("interpol.p_exponent[s={stag}]"),
            rep.exponent("p_exponent"),
        ));
        fits.insert(
            stag,
            json!({"fitted_constant": rep.fitted_constant, "p_exponent": fit_json(rep.exponent("p_exponent"))}),
        );
        rep.push_rows(&mut summary);
        per_s.push(rep);
    }
    for &p in &p_list {
        let mut row = vec![p];
        row.extend(per_s.iter().map(|r| r.max_ratio_where("p", p)));
        max_table.push_numbers(&row);
    }
    out.record("families", families.len());
    out.record("by_s", fits);
    out.artifacts
        .push(Artifact::table("interpol_summary.csv", summary.render()));
    out.artifacts.push(Artifact::plotted(
        "interpol_max_ratio.csv",
        max_table.render(),
        loglog_plot("max ratio against p", vec![2, 3, 4]),
    ));
    Ok(())
}

pub(super) fn verify_expimb(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let qs = q_values(&cfg.params)?;
    let n = corpus_size(&cfg.params, 32)?;
    let p_list = p_values(&cfg.params)?;
    let mut summary = summary_table();
    let mut worst_gap = 0.0f64;
    let mut by_q = Vec::new();
    for (qi, &q) in qs.iter().enumerate() {
        let params = CorpusParams {
            j,
            q,
            ..Default::default()
        };
        let seed = sub_seed(cfg.seed, 50 + qi as u64);
        let mut corpus = generate_corpus(CorpusKind::Lacunary, n, sub_seed(seed, 1), &params)?;
        corpus.extend(generate_corpus(
            CorpusKind::BesovProfile,
            n,
            sub_seed(seed, 2),
            &params,
        )?);
        corpus.extend(generate_corpus(
            CorpusKind::DyadicPackets,
            n,
            sub_seed(seed, 3),
            &params,
        )?);
        let rep = check_expimb(&corpus, q, &p_list)?;
        let qtag = fmt_sig(q);
        for part in ["head", "tail"] {
            let name = format!("{part}_p_exponent");
            out.checks.push(exponent_check(
                format!("expimb.{name}[q={qtag}]"),
                rep.exponent(&name),
            ));
        }
        let gaps = crate::par::try_map(&corpus, |f| -> Result<f64> {
            let mut gap = 0.0f64;
            for p in [p_list[0], p_list[p_list.len() - 1]] {
                let split = expimb_split(f, q, p)?;
                let sum = split.head.add(&split.tail)?;
                gap = gap.max(sum.max_abs_diff(f)? / f.sup_norm().max(1.0));
            }
            Ok(gap)
        })?;
        worst_gap = gaps.into_iter().fold(worst_gap, f64::max);
        by_q.push(json!({
            "q": q,
            "head_constant": expimb_part_constant(&rep, "head"),
            "tail_constant": expimb_part_constant(&rep, "tail"),
            "head_p_exponent": fit_json(rep.exponent("head_p_exponent")),
            "tail_p_exponent": fit_json(rep.exponent("tail_p_exponent")),
        }));
        rep.push_rows(&mut summary);
    }
    out.checks.push(Check::at_most(
        "expimb.reconstruction",
        worst_gap,
        RECONSTRUCTION_TOLERANCE,
    ));
    out.record("by_q", by_q);
    out.record("reconstruction_gap", worst_gap);
    out.artifacts
        .push(Artifact::table("expimb_summary.csv", summary.render()));
    Ok(())
}

pub(super) fn verify_lemma_star(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let n = corpus_size(&cfg.params, 32)?;
    let gammas = match cfg.params.gamma {
        Some(g) if g > 0.5 && g.is_finite() => vec![g],
        Some(g) => {
            return Err(ConfigError::new("params.gamma", format!("{g} must exceed 1/2")).into())
        }
        None => vec![0.6, 1.0, 1.5],
    };
    let terms = max_lacunary_terms(j);
    let mut singles = Vec::new();
    for k in 0..terms {
        let mut heights = vec![0.0; terms];
        heights[k] = 1.0;
        singles.push(lacunary(j, &heights, &vec![1.0; terms])?);
    }
    let mut summary = summary_table();
    let mut by_gamma = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        let params = CorpusParams {
            j,
            gamma,
            ..Default::default()
        };
        let random = generate_corpus(
            CorpusKind::LgProfile,
            2 * n,
            sub_seed(cfg.seed, 60 + gi as u64),
            &params,
        )?;
        let first = singles.len() + n;
        let corpus: Vec<GridFunction> = singles.iter().chain(&random).cloned().collect();
        let rep = check_lemma_star(&corpus, gamma)?;
        let half = max_ratio_over(&rep.samples, |s| function_index(s) < first);
        out.checks.push(stability_check(
            format!("lemma_star.stability[gamma={}]", fmt_sig(gamma)),
            half,
            rep.fitted_constant,
        ));
        by_gamma.push(json!({"gamma": gamma, "c3": rep.fitted_constant, "c3_half": half}));
        rep.push_rows(&mut summary);
    }
    out.record("by_gamma", by_gamma);
    out.artifacts
        .push(Artifact::table("lemma_star_summary.csv", summary.render()));
    Ok(())
}

fn worst_per_level(rows: &[Vec<f64>], levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|i| rows.iter().map(|r| r[i]).fold(0.0, f64::max))
        .collect()
}

pub(super) fn appr_decay(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let pairs = region_pairs(&cfg.params, &[(1.0, 2.0), (0.75, 2.0), (1.0, 4.0)])?;
    let mut ms = cfg
        .params
        .m_list
        .clone()
        .unwrap_or_else(|| (2..=j - 2).collect());
    if let Some(m) = ms.iter().find(|m| **m < 1 || **m > j) {
        return Err(ConfigError::new("params.M_list", format!("level {m} outside 1..=J")).into());
    }
    ms.sort_unstable();
    ms.dedup();
    let n = corpus_size(&cfg.params, 64)?;
    let mut by_pair = Vec::new();
    for (pi, &(gamma, nu)) in pairs.iter().enumerate() {
        let params = CorpusParams {
            j,
            gamma,
            ..Default::default()
        };
        let seed = sub_seed(cfg.seed, 70 + pi as u64);
        let corpus = generate_corpus(CorpusKind::DyadicPackets, n, sub_seed(seed, 1), &params)?;
        let rows = crate::par::try_map(&corpus, |f| approx_errors(f, &ms, nu))?;
        let worst = worst_per_level(&rows, ms.len());
        let rise = rows
            .iter()
            .flat_map(|r| {
                r.windows(2)
                    .map(|w| if w[0] > 0.0 { w[1] / w[0] - 1.0 } else { 0.0 })
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
        let fit = loglog_fit(&xs, &worst).ok();
        let a = predicted_rate(gamma, nu);
        let ptag = tag(&[("g", gamma), ("nu", nu)]);
        out.checks.push(slope_check(
            format!("appr.slope[{ptag}]"),
            fit.as_ref(),
            -a,
            APPR_SLOPE_TOLERANCE,
        ));
        out.checks.push(
            Check::at_most(
                format!("appr.monotone[{ptag}]"),
                rise.max(0.0),
                MONOTONE_SLACK,
            )
            .with_detail("largest relative rise of a member's error"),
        );
        let fourier = generate_corpus(
            CorpusKind::LgProfile,
            (n / 8).max(1),
            sub_seed(seed, 2),
            &params,
        )?;
        let frows = crate::par::try_map(&fourier, |f| approx_errors(f, &ms, nu))?;
        let fworst = worst_per_level(&frows, ms.len());
        let ratios: Vec<Value> = ms
            .iter()
            .zip(fworst.iter().zip(&worst))
            .map(|(m, (f, d))| json!({"M": m, "ratio": if *d > 0.0 { f / d } else { f64::NAN }}))
            .collect();
        let mut t = CsvTable::new(["M", "error", "reference"]);
        for (m, w) in ms.iter().zip(&worst) {
            t.push_numbers(&[
                *m as f64,
                *w,
                worst[0] * (*m as f64 / ms[0] as f64).powf(-a),
            ]);
        }
        out.artifacts.push(Artifact::plotted(
            format!("appr_{ptag}.csv"),
            t.render(),
            loglog_plot(format!("max ||f - E_M f|| ({ptag})"), vec![2, 3]),
        ));
        by_pair.push(json!({
            "gamma": gamma, "nu": nu, "predicted_slope": -a,
            "fit": fit_json(fit.as_ref()), "max_errors": worst,
            "fourier_over_dyadic": ratios,
        }));
    }
    out.record("by_pair", by_pair);
    Ok(())
}

pub(super) fn envelope(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 8)?;
    let qs = q_values(&cfg.params)?;
    let n = corpus_size(&cfg.params, 32)?;
    let t_grid: Vec<f64> = (4..=12.min(j - 4))
        .map(|e| 2f64.powi(-(e as i32)))
        .collect();
    let mut by_q = Vec::new();
    let mut records = Vec::new();
    for (qi, &q) in qs.iter().enumerate() {
        let qc = conjugate(q);
        let qtag = fmt_sig(q);
        let params = CorpusParams {
            j,
            q,
            ..Default::default()
        };
        let seed = sub_seed(cfg.seed, 80 + qi as u64);
        let mut corpus = lacunary_witnesses(j, q)?;
        corpus.extend(generate_corpus(
            CorpusKind::Lacunary,
            n,
            sub_seed(seed, 1),
            &params,
        )?);
        corpus.extend(generate_corpus(
            CorpusKind::BesovProfile,
            n,
            sub_seed(seed, 2),
            &params,
        )?);
        let est = growth_envelope_estimate(q, &t_grid, &corpus)?;
        let rise = est
            .windows(2)
            .map(|w| w[0].1 - w[1].1)
            .fold(0.0f64, f64::max);
        let xs: Vec<f64> = est.iter().map(|(t, _)| -t.ln()).collect();
        let ys: Vec<f64> = est.iter().map(|(_, v)| *v).collect();
        let fit = loglog_fit(&xs, &ys).ok();
        out.checks.push(slope_check(
            format!("envelope.slope[q={qtag}]"),
            fit.as_ref(),
            1.0 / qc,
            ENVELOPE_SLOPE_TOLERANCE,
        ));
        out.checks.push(
            Check::at_most(format!("envelope.monotone[q={qtag}]"), rise, 0.0)
                .with_detail("largest rise of the estimate as t grows"),
        );
        let pairs = crate::par::try_map(&corpus, |f| -> Result<(f64, f64)> {
            Ok((
                luxemburg_norm(f, qc)?,
                log_weighted_rearrangement_sup(f, qc),
            ))
        })?;
        let ratios: Vec<f64> = pairs.iter().map(|(l, w)| w / l).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        out.checks.push(
            Check::at_most(
                format!("envelope.equivalence_spread[q={qtag}]"),
                hi / lo,
                MAX_EQUIVALENCE_SPREAD,
            )
            .with_detail(format!("ratio range [{}, {}]", fmt_sig(lo), fmt_sig(hi))),
        );
        let c2 = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
        for (i, (l, w)) in pairs.iter().enumerate() {
            let id = format!("q={qtag};f={i}");
            records.push(NormRecord {
                function_id: id.clone(),
                norm_name: "luxemburg".into(),
                params: json!({"nu": qc}),
                value: *l,
            });
            records.push(NormRecord {
                function_id: id,
                norm_name: "log_weighted_rearrangement_sup".into(),
                params: json!({"q_conjugate": qc}),
                value: *w,
            });
        }
        let mut t = CsvTable::new(["t", "estimate", "reference"]);
        for (t_val, v) in &est {
            t.push_numbers(&[*t_val, *v, (-t_val.ln()).powf(1.0 / qc)]);
        }
        out.artifacts.push(Artifact::plotted(
            format!("envelope_q{qtag}.csv"),
            t.render(),
            loglog_plot(format!("growth envelope, q = {qtag}"), vec![2, 3]),
        ));
        by_q.push(json!({
            "q": q, "predicted_slope": 1.0 / qc, "fit": fit_json(fit.as_ref()),
            "luxemburg_max": c2, "spread": hi / lo,
        }));
    }
    out.record("by_q", by_q);
    out.artifacts.push(Artifact::table(
        "norms.json",
        serde_json::to_string_pretty(&crate::report::round_json(
            serde_json::to_value(&records).unwrap_or(Value::Null),
        ))
        .unwrap_or_default()
            + "\n",
    ));
    Ok(())
}

fn n_values(p: &Params, default: Vec<u64>) -> std::result::Result<Vec<u64>, ConfigError> {
    let list = p.n_list.clone().unwrap_or(default);
    if list.iter().any(|n| *n < 1) {
        return Err(ConfigError::new(
            "params.n_list",
            "entries must be at least 1",
        ));
    }
    Ok(list)
}

fn packing_params(j: u32, budget: usize, seed: u64) -> PackingParams {
    PackingParams {
        j: j.min(PACKING_MAX_RESOLUTION),
        budget,
        seed,
    }
}

fn curve_checks(out: &mut ExperimentOutcome, prefix: &str, curve: &EntropyCurve) {
    let excess = curve
        .entries
        .iter()
        .map(|e| e.lower - e.upper)
        .fold(f64::NEG_INFINITY, f64::max);
    out.checks.push(
        Check::at_most(format!("{prefix}.lower_le_upper"), excess, 0.0)
            .with_detail("largest lower - upper"),
    );
    let rise = curve
        .entries
        .windows(2)
        .map(|w| w[1].upper - w[0].upper)
        .fold(0.0f64, f64::max);
    out.checks.push(Check::at_most(
        format!("{prefix}.upper_monotone"),
        rise,
        0.0,
    ));
}

fn curve_plot(title: String) -> Plot {
    Plot {
        title,
        columns: vec![2, 3, 4],
        logx: true,
        logy: false,
    }
}

pub(super) fn entropy_curve(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let pairs = region_pairs(&cfg.params, &[(1.0, 2.0), (1.0, 4.0)])?;
    let n_list = n_values(&cfg.params, (2..=16).map(|e| 1u64 << e).collect())?;
    let n = corpus_size(&cfg.params, 64)?;
    let budget = budget(&cfg.params, 2048)?;
    let mut by_pair = Vec::new();
    for (pi, &(gamma, nu)) in pairs.iter().enumerate() {
        let params = CorpusParams {
            j,
            gamma,
            ..Default::default()
        };
        let seed = sub_seed(cfg.seed, 90 + pi as u64);
        let corpus = generate_corpus(CorpusKind::DyadicPackets, n, sub_seed(seed, 1), &params)?;
        let (curve, profile) = entropy_upper_curve(gamma, nu, &n_list, &corpus)?;
        let probe: Vec<u64> = curve
            .entries
            .iter()
            .map(|e| e.n)
            .filter(|&m| m <= PACKING_MAX_N)
            .collect();
        let lower = if probe.is_empty() {
            Vec::new()
        } else {
            packing_lower_bounds(
                gamma,
                nu,
                &probe,
                &packing_params(j, budget, sub_seed(seed, 2)),
            )?
        };
        let curve = curve.with_lower(&lower);
        let a = predicted_rate(gamma, nu);
        let ptag = tag(&[("g", gamma), ("nu", nu)]);
        out.checks.push(slope_check(
            format!("entropy.exponent[{ptag}]"),
            curve.fitted_exponent.as_ref(),
            -a,
            ENTROPY_EXPONENT_TOLERANCE,
        ));
        curve_checks(out, &format!("entropy[{ptag}]"), &curve);
        let direct: Vec<Value> = curve
            .entries
            .iter()
            .map(|e| json!({"n": e.n, "upper": upper_from_cover(&profile, e.n)}))
            .collect();
        let eps_probe: Vec<Value> = [0.5, 0.25, 0.125]
            .iter()
            .map(|f| {
                let eps = f * profile.delta0();
                json!({"eps": eps, "quantization_cover_log": quantization_cover_bound(&profile, profile.delta0(), eps).ok()})
            })
            .collect();
        by_pair.push(json!({
            "gamma": gamma, "nu": nu, "predicted_exponent": -a,
            "fit": fit_json(curve.fitted_exponent.as_ref()),
            "corner_fit": fit_json(corner_fit(&profile, 2).ok().as_ref()),
            "direct_inversion": direct,
            "quantization": eps_probe,
            "profile_descriptor": profile.family_descriptor(),
        }));
        out.artifacts.push(Artifact::plotted(
            format!("entropy_{ptag}.csv"),
            curve.to_csv(),
            curve_plot(format!("entropy bounds ({ptag})")),
        ));
        out.artifacts
            .push(profile_artifact(format!("profile_{ptag}.csv"), &profile));
    }
    out.record("by_pair", by_pair);
    Ok(())
}

fn profile_artifact(name: String, profile: &ApproximationProfile) -> Artifact {
    Artifact::plotted(
        name,
        profile.to_csv(),
        Plot {
            title: "approximation profile".into(),
            columns: vec![2],
            logx: false,
            logy: true,
        },
    )
}

pub(super) fn packing(
    cfg: &ExperimentConfig,
    out: &mut ExperimentOutcome,
) -> std::result::Result<(), RunError> {
    let j = check_resolution(cfg, 6)?;
    let pairs = region_pairs(&cfg.params, &[(1.0, 2.0)])?;
    let n_list = n_values(&cfg.params, vec![1, 2, 4, 8, 16])?;
    let n = corpus_size(&cfg.params, 64)?;
    let budget = budget(&cfg.params, 2048)?;
    let mut by_pair = Vec::new();
    for (pi, &(gamma, nu)) in pairs.iter().enumerate() {
        let params = CorpusParams {
            j,
            gamma,
            ..Default::default()
        };
        let seed = sub_seed(cfg.seed, 100 + pi as u64);
        let corpus = generate_corpus(CorpusKind::DyadicPackets, n, sub_seed(seed, 1), &params)?;
        let (curve, profile) = entropy_upper_curve(gamma, nu, &n_list, &corpus)?;
        let pack = packing_params(j, budget, sub_seed(seed, 2));
        let lower = packing_lower_bounds(gamma, nu, &n_list, &pack)?;
        let curve = curve.with_lower(&lower);
        let ptag = tag(&[("g", gamma), ("nu", nu)]);
        curve_checks(out, &format!("packing[{ptag}]"), &curve);
        by_pair.push(json!({
            "gamma": gamma, "nu": nu, "packing": pack,
            "lower": lower.iter().map(|(n, e)| json!({"n": n, "eps": e})).collect::<Vec<_>>(),
            "upper": curve.entries.iter().map(|e| json!({"n": e.n, "upper": e.upper, "direct": upper_from_cover(&profile, e.n)})).collect::<Vec<_>>(),
        }));
        out.artifacts.push(Artifact::plotted(
            format!("packing_{ptag}.csv"),
            curve.to_csv(),
            curve_plot(format!("packing against upper bound ({ptag})")),
        ));
        out.artifacts
            .push(profile_artifact(format!("profile_{ptag}.csv"), &profile));
    }
    out.record("by_pair", by_pair);
    Ok(())
}
