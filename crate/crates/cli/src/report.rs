//! Flat key/value reports, written as JSON objects or `key: value` lines.

use lingrad_core::certificate::CertificateReport;
use serde_json::{Map, Value};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    entries: Map<String, Value>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.entries.insert(key.into(), value.into());
    }

    /// Finite floats as numbers, others as the strings `inf`, `-inf`, `nan`.
    pub fn push_f64(&mut self, key: impl Into<String>, v: f64) {
        let value = serde_json::Number::from_f64(v)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(format!("{v}")));
        self.entries.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    /// Residuals of `cert` under `prefix`.
    pub fn push_certificate(&mut self, prefix: &str, cert: &CertificateReport) {
        self.push(format!("{prefix}kind"), cert.kind.to_string());
        for (key, label, res, tol) in cert.entries() {
            self.push(format!("{prefix}{key}.label"), label);
            self.push_f64(format!("{prefix}{key}.l1"), res.l1);
            self.push_f64(format!("{prefix}{key}.max"), res.max);
            self.push_f64(format!("{prefix}{key}.tol"), tol);
            let worst = match &res.worst {
                Some(p) => Value::Array(p.iter().map(|&v| Value::from(v)).collect()),
                None => Value::Null,
            };
            self.push(format!("{prefix}{key}.worst"), worst);
            self.push(format!("{prefix}{key}.pass"), res.l1 <= tol);
        }
        self.push(format!("{prefix}interior_samples"), cert.interior_samples);
        self.push(format!("{prefix}boundary_samples"), cert.boundary_samples);
        self.push(format!("{prefix}overall_pass"), cert.overall_pass);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.entries).expect("string keys");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            match v {
                Value::String(t) => s.push_str(&format!("{k}: {t}\n")),
                other => s.push_str(&format!("{k}: {other}\n")),
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_insertion_order_and_encodes_infinities() {
        let mut r = Report::new();
        r.push("b", 1);
        r.push_f64("a", f64::INFINITY);
        assert_eq!(r.to_text(), "b: 1\na: inf\n");
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["a"], "inf");
    }
}
