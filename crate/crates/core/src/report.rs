//! Text output helpers shared by every exporter.
//!
//! All numbers leave the crate through [`fmt_sig`] so that identical inputs
//! give byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `v` with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// Minimal CSV table: fixed header, rows of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_sig(v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Rounds every non-integer number in `v` to 12 significant digits.
pub fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            fmt_sig(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// One line of a norm report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRecord {
    pub function_id: String,
    pub norm_name: String,
    pub params: serde_json::Value,
    pub value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_numbers_are_rounded() {
        let v = serde_json::json!({"a": [0.1 + 0.2, 3], "b": {"c": 1.0 / 3.0}});
        assert_eq!(
            serde_json::to_string(&round_json(v)).unwrap(),
            r#"{"a":[0.3,3],"b":{"c":0.333333333333}}"#
        );
    }

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.125), "0.125");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456.789), "123456.789");
        assert_eq!(fmt_sig(1e-7), "1e-7");
        assert_eq!(fmt_sig(2.0f64.powi(50)), "1.12589990684e15");
        assert_eq!(fmt_sig(std::f64::consts::PI * 1e-3), "0.00314159265359");
    }

    #[test]
    fn table_renders_header_first() {
        let mut t = CsvTable::new(["k", "value"]);
        t.push_numbers(&[1.0, 0.5]);
        assert_eq!(t.render(), "k,value\n1,0.5\n");
    }
}
