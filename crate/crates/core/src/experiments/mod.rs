//! Named experiments: each one builds its corpora, runs the harnesses, and
//! returns pass/fail checks together with CSV tables, gnuplot scripts and a
//! JSON report.

mod config;
mod suites;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::LabError;
use crate::report::{fmt_sig, round_json};

pub use config::{
    apply_overrides, ConfigError, Experiment, ExperimentConfig, Params, DEFAULT_SEED,
};

/// Why an experiment could not produce an outcome.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lab(#[from] LabError),
}

/// One threshold evaluated by an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: String,
    pub passed: bool,
    pub value: f64,
    pub bound: String,
    pub detail: String,
}

impl Check {
    pub fn at_most(criterion: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            criterion: criterion.into(),
            passed: value <= limit,
            value,
            bound: format!("<= {}", fmt_sig(limit)),
            detail: String::new(),
        }
    }

    pub fn near(criterion: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            criterion: criterion.into(),
            passed: (value - target).abs() <= tol,
            value,
            bound: format!("{} +- {}", fmt_sig(target), fmt_sig(tol)),
            detail: String::new(),
        }
    }

    pub fn holds(
        criterion: impl Into<String>,
        passed: bool,
        value: f64,
        bound: impl Into<String>,
    ) -> Self {
        Self {
            criterion: criterion.into(),
            passed,
            value,
            bound: bound.into(),
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// `PASS name value (bound)` or `FAIL ...`.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {} = {} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            fmt_sig(self.value),
            self.bound
        );
        if !self.detail.is_empty() {
            let _ = write!(s, " {}", self.detail);
        }
        s
    }
}

/// How a CSV artifact is plotted.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    /// 1-based CSV columns drawn against column 1.
    pub columns: Vec<usize>,
    pub logx: bool,
    pub logy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub name: String,
    pub contents: String,
    pub plot: Option<Plot>,
}

impl Artifact {
    pub fn table(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
            plot: None,
        }
    }

    pub fn plotted(name: impl Into<String>, contents: String, plot: Plot) -> Self {
        Self {
            name: name.into(),
            contents,
            plot: Some(plot),
        }
    }

    /// Gnuplot script drawing this table, if it has a plot.
    pub fn gnuplot(&self) -> Option<(String, String)> {
        let plot = self.plot.as_ref()?;
        let path = Path::new(&self.name);
        let stem = path.file_stem()?.to_string_lossy().into_owned();
        let data = path.file_name()?.to_string_lossy().into_owned();
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set terminal pngcairo size 900,600");
        let _ = writeln!(s, "set output '{stem}.png'");
        let _ = writeln!(s, "set title '{}'", plot.title);
        if plot.logx {
            let _ = writeln!(s, "set logscale x 2");
        }
        if plot.logy {
            let _ = writeln!(s, "set logscale y");
        }
        let series: Vec<String> = plot
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let file = if i == 0 {
                    format!("'{data}'")
                } else {
                    "''".to_string()
                };
                format!("{file} using 1:{c} with linespoints")
            })
            .collect();
        let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
        Some((path.with_extension("gp").to_string_lossy().into_owned(), s))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub experiment: Experiment,
    pub config: Value,
    pub checks: Vec<Check>,
    pub results: Map<String, Value>,
    pub artifacts: Vec<Artifact>,
}

impl ExperimentOutcome {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            experiment: cfg.experiment,
            config: config::echo(cfg),
            checks: Vec::new(),
            results: Map::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, criterion: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.criterion == criterion)
    }

    fn record(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
    }

    /// `report.json`, every float at 12 significant digits.
    pub fn report_json(&self) -> String {
        let report = serde_json::json!({
            "experiment": self.experiment.name(),
            "config": self.config,
            "passed": self.passed(),
            "checks": self.checks,
            "results": self.results,
        });
        let mut s = serde_json::to_string_pretty(&round_json(report)).unwrap_or_default();
        s.push('\n');
        s
    }

    /// Writes `report.json`, every CSV table and its gnuplot script.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let put = |name: &str, contents: &str| -> io::Result<()> {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, contents)
        };
        for a in &self.artifacts {
            put(&a.name, &a.contents)?;
            if let Some((gp, script)) = a.gnuplot() {
                put(&gp, &script)?;
            }
        }
        put("report.json", &self.report_json())
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, RunError> {
    let mut out = ExperimentOutcome::new(cfg);
    match cfg.experiment {
        Experiment::VerifyLemma3 => suites::verify_lemma3(cfg, &mut out)?,
        Experiment::VerifyPropDy => suites::verify_prop_dy(cfg, &mut out)?,
        Experiment::VerifyCww => suites::verify_cww(cfg, &mut out)?,
        Experiment::VerifyInterpol => suites::verify_interpol(cfg, &mut out)?,
        Experiment::VerifyExpimb => suites::verify_expimb(cfg, &mut out)?,
        Experiment::VerifyLemmaStar => suites::verify_lemma_star(cfg, &mut out)?,
        Experiment::ApprDecay => suites::appr_decay(cfg, &mut out)?,
        Experiment::Envelope => suites::envelope(cfg, &mut out)?,
        Experiment::EntropyCurve => suites::entropy_curve(cfg, &mut out)?,
        Experiment::Packing => suites::packing(cfg, &mut out)?,
        Experiment::All => {
            for e in Experiment::SINGLE {
                let sub = run(&cfg.for_experiment(e))?;
                for a in sub.artifacts.iter() {
                    out.artifacts.push(Artifact {
                        name: format!("{e}/{}", a.name),
                        ..a.clone()
                    });
                }
                out.artifacts.push(Artifact::table(
                    format!("{e}/report.json"),
                    sub.report_json(),
                ));
                out.checks.extend(sub.checks.iter().cloned());
                out.results
                    .insert(e.name().into(), Value::Object(sub.results));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnuplot_script_points_at_its_table() {
        let a = Artifact::plotted(
            "sub/curve.csv",
            "n,upper\n1,2\n".into(),
            Plot {
                title: "curve".into(),
                columns: vec![2, 3],
                logx: true,
                logy: false,
            },
        );
        let (name, script) = a.gnuplot().unwrap();
        assert_eq!(name, "sub/curve.gp");
        assert!(script.contains("plot 'curve.csv' using 1:2 with linespoints"));
        assert!(script.contains("'' using 1:3"));
        assert!(script.contains("set logscale x 2"));
        assert!(Artifact::table("t.csv", String::new()).gnuplot().is_none());
    }

    #[test]
    fn check_lines() {
        assert!(Check::at_most("c", 1.0, 2.0).passed);
        assert!(!Check::at_most("c", f64::NAN, 2.0).passed);
        let c = Check::near("slope", -0.9, -1.0, 0.15);
        assert!(c.passed);
        assert_eq!(c.line(), "PASS slope = -0.9 (-1 +- 0.15)");
    }
}
