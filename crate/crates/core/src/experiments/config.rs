//! Experiment configuration: a JSON file plus command-line overrides.
//!
//! ```json
//! {
//!   "experiment": "verify-lemma3",
//!   "J": 12,
//!   "seed": 7,
//!   "output_dir": "out",
//!   "params": {"k_range": "1..10", "lambda_range": "8..1024"}
//! }
//! ```
//!
//! Every field is optional. Integer ranges (`k_range`, `M_list`) expand
//! `"a..b"` to `a, a+1, ..., b`; exponent ranges (`lambda_range`, `p_list`,
//! `n_list`) expand it to `a, 2a, 4a, ...` up to `b`. Explicit arrays are
//! taken as given.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::grid::MAX_RESOLUTION;

/// An invalid configuration, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Experiment {
    #[serde(rename = "verify-lemma3")]
    VerifyLemma3,
    #[serde(rename = "verify-prop-dy")]
    VerifyPropDy,
    #[serde(rename = "verify-cww")]
    VerifyCww,
    #[serde(rename = "verify-interpol")]
    VerifyInterpol,
    #[serde(rename = "verify-expimb")]
    VerifyExpimb,
    #[serde(rename = "verify-lemma-star")]
    VerifyLemmaStar,
    #[serde(rename = "appr-decay")]
    ApprDecay,
    #[serde(rename = "envelope")]
    Envelope,
    #[serde(rename = "entropy-curve")]
    EntropyCurve,
    #[serde(rename = "packing")]
    Packing,
    #[serde(rename = "all")]
    All,
}

impl Experiment {
    /// Every single experiment, in the order `all` runs them.
    pub const SINGLE: [Experiment; 10] = [
        Experiment::VerifyLemma3,
        Experiment::VerifyPropDy,
        Experiment::VerifyCww,
        Experiment::VerifyInterpol,
        Experiment::VerifyExpimb,
        Experiment::VerifyLemmaStar,
        Experiment::ApprDecay,
        Experiment::Envelope,
        Experiment::EntropyCurve,
        Experiment::Packing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyLemma3 => "verify-lemma3",
            Experiment::VerifyPropDy => "verify-prop-dy",
            Experiment::VerifyCww => "verify-cww",
            Experiment::VerifyInterpol => "verify-interpol",
            Experiment::VerifyExpimb => "verify-expimb",
            Experiment::VerifyLemmaStar => "verify-lemma-star",
            Experiment::ApprDecay => "appr-decay",
            Experiment::Envelope => "envelope",
            Experiment::EntropyCurve => "entropy-curve",
            Experiment::Packing => "packing",
            Experiment::All => "all",
        }
    }

    /// Resolution used when neither the file nor the command line sets one.
    pub fn default_resolution(self) -> u32 {
        match self {
            Experiment::ApprDecay | Experiment::Envelope | Experiment::EntropyCurve => 16,
            _ => 12,
        }
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::SINGLE
            .iter()
            .chain(std::iter::once(&Experiment::All))
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError::new("experiment", format!("unknown experiment {s:?}")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional experiment parameters; `None` selects the experiment's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Params {
    pub q: Option<f64>,
    pub nu: Option<f64>,
    pub gamma: Option<f64>,
    pub p_list: Option<Vec<f64>>,
    pub k_range: Option<Vec<u32>>,
    pub lambda_range: Option<Vec<f64>>,
    #[serde(rename = "M_list")]
    pub m_list: Option<Vec<u32>>,
    pub n_list: Option<Vec<u64>>,
    pub corpus_size: Option<usize>,
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Resolution override; each experiment has its own default.
    #[serde(rename = "J")]
    pub j: Option<u32>,
    pub seed: u64,
    pub params: Params,
    pub output_dir: PathBuf,
}

pub const DEFAULT_SEED: u64 = 1;

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            j: None,
            seed: DEFAULT_SEED,
            params: Params::default(),
            output_dir: PathBuf::from("out"),
        }
    }

    /// The resolution this experiment runs at.
    pub fn resolution(&self) -> u32 {
        self.j.unwrap_or(self.experiment.default_resolution())
    }

    /// The same configuration aimed at another experiment.
    pub fn for_experiment(&self, experiment: Experiment) -> Self {
        Self {
            experiment,
            ..self.clone()
        }
    }

    /// Parses a configuration file. `experiment` is the command-line choice;
    /// a file naming a different experiment is rejected.
    pub fn from_json(text: &str, experiment: Experiment) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| ConfigError::new("config", format!("not valid JSON: {e}")))?;
        let Value::Object(top) = value else {
            return Err(ConfigError::new(
                "config",
                "top level must be a JSON object",
            ));
        };
        let mut cfg = Self::new(experiment);
        for (key, v) in &top {
            match key.as_str() {
                "experiment" => {
                    let named: Experiment = as_str(v, key)?.parse()?;
                    if named != experiment {
                        return Err(ConfigError::new(
                            "experiment",
                            format!("file names {named} but {experiment} was requested"),
                        ));
                    }
                }
                "J" => cfg.j = Some(as_u64(v, key)? as u32),
                "seed" => cfg.seed = as_u64(v, key)?,
                "output_dir" => cfg.output_dir = PathBuf::from(as_str(v, key)?),
                "params" => cfg.params = parse_params(v)?,
                other => return Err(ConfigError::new(other, "unknown field")),
            }
        }
        Ok(cfg)
    }
}

fn as_str<'a>(v: &'a Value, field: &str) -> Result<&'a str, ConfigError> {
    v.as_str()
        .ok_or_else(|| ConfigError::new(field, "expected a string"))
}

fn as_u64(v: &Value, field: &str) -> Result<u64, ConfigError> {
    v.as_u64()
        .ok_or_else(|| ConfigError::new(field, "expected a nonnegative integer"))
}

fn as_f64(v: &Value, field: &str) -> Result<f64, ConfigError> {
    v.as_f64()
        .ok_or_else(|| ConfigError::new(field, "expected a number"))
}

fn parse_params(v: &Value) -> Result<Params, ConfigError> {
    let Value::Object(map) = v else {
        return Err(ConfigError::new("params", "expected an object"));
    };
    let mut p = Params::default();
    for (key, v) in map {
        let field = format!("params.{key}");
        match key.as_str() {
            "q" => p.q = Some(as_f64(v, &field)?),
            "nu" => p.nu = Some(as_f64(v, &field)?),
            "gamma" => p.gamma = Some(as_f64(v, &field)?),
            "p_list" => p.p_list = Some(geometric_list(v, &field)?),
            "lambda_range" => p.lambda_range = Some(geometric_list(v, &field)?),
            "n_list" => {
                p.n_list = Some(
                    geometric_list(v, &field)?
                        .into_iter()
                        .map(|x| to_integer(x, &field))
                        .collect::<Result<_, _>>()?,
                )
            }
            "k_range" => p.k_range = Some(integer_list(v, &field)?),
            "M_list" => p.m_list = Some(integer_list(v, &field)?),
            "corpus_size" => p.corpus_size = Some(as_u64(v, &field)? as usize),
            "budget" => p.budget = Some(as_u64(v, &field)? as usize),
            _ => return Err(ConfigError::new(field, "unknown parameter")),
        }
    }
    Ok(p)
}

fn to_integer(x: f64, field: &str) -> Result<u64, ConfigError> {
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) {
        Ok(x as u64)
    } else {
        Err(ConfigError::new(
            field,
            format!("{x} is not a nonnegative integer"),
        ))
    }
}

fn split_span(s: &str, field: &str) -> Result<(f64, f64), ConfigError> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| ConfigError::new(field, format!("expected \"a..b\", got {s:?}")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| ConfigError::new(field, format!("{t:?} is not a number")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(ConfigError::new(
            field,
            format!("empty or unbounded range {s:?}"),
        ));
    }
    Ok((a, b))
}

fn number_array(arr: &[Value], field: &str) -> Result<Vec<f64>, ConfigError> {
    if arr.is_empty() {
        return Err(ConfigError::new(field, "empty list"));
    }
    arr.iter().map(|x| as_f64(x, field)).collect()
}

/// `"a..b"` as `a, 2a, 4a, ... <= b`, or an explicit array.
fn geometric_list(v: &Value, field: &str) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(arr) => number_array(arr, field),
        Value::String(s) => {
            let (a, b) = split_span(s, field)?;
            if !(a > 0.0) {
                return Err(ConfigError::new(
                    field,
                    "geometric range must start above 0",
                ));
            }
            let mut out = Vec::new();
            let mut x = a;
            while x <= b * (1.0 + 1e-12) {
                out.push(x);
                x *= 2.0;
            }
            Ok(out)
        }
        _ => Err(ConfigError::new(field, "expected an array or \"a..b\"")),
    }
}

/// `"a..b"` as `a, a+1, ..., b`, or an explicit array.
fn integer_list(v: &Value, field: &str) -> Result<Vec<u32>, ConfigError> {
    let values = match v {
        Value::Array(arr) => number_array(arr, field)?,
        Value::String(s) => {
            let (a, b) = split_span(s, field)?;
            let (a, b) = (to_integer(a, field)?, to_integer(b, field)?);
            (a..=b).map(|x| x as f64).collect()
        }
        _ => return Err(ConfigError::new(field, "expected an array or \"a..b\"")),
    };
    values
        .into_iter()
        .map(|x| {
            let n = to_integer(x, field)?;
            u32::try_from(n).map_err(|_| ConfigError::new(field, format!("{n} too large")))
        })
        .collect()
}

/// Applies the `--J` and `--seed` command-line overrides.
pub fn apply_overrides(
    cfg: &mut ExperimentConfig,
    j: Option<u32>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) {
    if j.is_some() {
        cfg.j = j;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
}

pub(crate) fn check_resolution(cfg: &ExperimentConfig, min: u32) -> Result<u32, ConfigError> {
    let j = cfg.resolution();
    if j < min || j > MAX_RESOLUTION {
        return Err(ConfigError::new(
            "J",
            format!(
                "{j} outside {min}..={MAX_RESOLUTION} for {}",
                cfg.experiment
            ),
        ));
    }
    Ok(j)
}

/// The config as it is echoed into `report.json`.
pub(crate) fn echo(cfg: &ExperimentConfig) -> Value {
    let mut m = Map::new();
    m.insert("experiment".into(), Value::from(cfg.experiment.name()));
    m.insert("J".into(), Value::from(cfg.resolution()));
    m.insert("seed".into(), Value::from(cfg.seed));
    m.insert(
        "params".into(),
        serde_json::to_value(&cfg.params).unwrap_or(Value::Null),
    );
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges_and_overrides() {
        let text = r#"{"J": 12, "seed": 9, "params": {"k_range": "1..10", "lambda_range": "8..1024",
            "p_list": [2, 3.5], "n_list": "4..64", "M_list": [2, 5]}}"#;
        let mut cfg = ExperimentConfig::from_json(text, Experiment::VerifyLemma3).unwrap();
        assert_eq!(cfg.params.k_range, Some((1..=10).collect()));
        assert_eq!(
            cfg.params.lambda_range,
            Some(vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0])
        );
        assert_eq!(cfg.params.p_list, Some(vec![2.0, 3.5]));
        assert_eq!(cfg.params.n_list, Some(vec![4, 8, 16, 32, 64]));
        assert_eq!(cfg.params.m_list, Some(vec![2, 5]));
        apply_overrides(&mut cfg, Some(10), None, None);
        assert_eq!((cfg.resolution(), cfg.seed), (10, 9));
    }

    #[test]
    fn errors_name_the_field() {
        let bad = [
            (r#"{"params": {"q": "x"}}"#, "params.q"),
            (r#"{"params": {"k_range": "5..2"}}"#, "params.k_range"),
            (r#"{"params": {"zzz": 1}}"#, "params.zzz"),
            (r#"{"J": -1}"#, "J"),
            (r#"{"experiment": "packing"}"#, "experiment"),
            (r#"{"colour": 1}"#, "colour"),
            ("[1, 2]", "config"),
            ("{", "config"),
        ];
        for (text, field) in bad {
            let err = ExperimentConfig::from_json(text, Experiment::Envelope).unwrap_err();
            assert_eq!(err.field, field, "{text}");
        }
        assert_eq!(
            "nope".parse::<Experiment>().unwrap_err().field,
            "experiment"
        );
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::SINGLE {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert_eq!("all".parse::<Experiment>().unwrap(), Experiment::All);
    }
}
