//! Report assembly and rendering in the three output formats.

use origami_entropy::numfmt::sig17;
use serde_json::{Map, Number, Value};

use crate::config::{Format, RunConfig};

/// 17 significant digits as a JSON number; `null` when not finite.
pub fn num(x: f64) -> Value {
    decimal(&digits17(x))
}

/// Positional for moderate magnitudes, scientific for tiny or huge ones.
pub fn digits17(x: f64) -> String {
    let a = x.abs();
    if x.is_finite() && a != 0.0 && !(1e-6..1e21).contains(&a) {
        format!("{x:.16e}")
    } else {
        sig17(x)
    }
}

/// A decimal string as a JSON number, kept digit for digit.
pub fn decimal(s: &str) -> Value {
    s.parse::<Number>()
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Ordered key/value report with optional format-specific bodies.
#[derive(Clone, Debug, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
    plain: Option<String>,
    csv: Option<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.entries.push((key.to_owned(), value.into()));
        self
    }

    pub fn plain(mut self, body: String) -> Self {
        self.plain = Some(body);
        self
    }

    pub fn csv(mut self, body: String) -> Self {
        self.csv = Some(body);
        self
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.entries {
            map.insert(k.clone(), v.clone());
        }
        map.insert(
            "config".into(),
            serde_json::to_value(cfg).expect("config serializes"),
        );
        Value::Object(map)
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json(cfg)).expect("json");
                s.push('\n');
                s
            }
            Format::Plain => self.plain.clone().unwrap_or_else(|| self.key_values("=")),
            Format::Csv => self.csv.clone().unwrap_or_else(|| {
                let mut s = String::from("key,value\n");
                for (k, v) in &self.entries {
                    s.push_str(&format!("{k},{}\n", csv_field(&scalar_text(v))));
                }
                s
            }),
        }
    }

    fn key_values(&self, sep: &str) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}{sep}{}\n", scalar_text(v)))
            .collect()
    }
}

/// Numbers and strings verbatim, everything else as compact JSON.
pub fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Null => "nan".into(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "0.10000000000000001");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(1.5e-45).to_string(), "1.5000000000000001e-45");
        assert_eq!(
            decimal("4.3493450461415029030313890213700").to_string(),
            "4.3493450461415029030313890213700"
        );
    }

    #[test]
    fn csv_fields_are_quoted() {
        assert_eq!(csv_field("(1,2)"), "\"(1,2)\"");
        assert_eq!(csv_field("3"), "3");
    }
}
