use serde::Serialize;
use serde_json::Value;

use crate::BUILD_ID;

/// Everything a command prints. Reports carry the seed, profile and build
/// so that any number in them can be regenerated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub profile: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<u8>,
    pub seed: String,
    pub build: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub body: Value,
}

impl Report {
    pub fn new(command: &str, profile: &str, protocol: Option<u8>, seed: &[u8; 32], body: Value) -> Self {
        Self {
            command: command.into(),
            profile: profile.into(),
            protocol,
            seed: hex::encode(seed),
            build: BUILD_ID.into(),
            criterion: None,
            pass: None,
            body,
        }
    }

    pub fn judged(mut self, criterion: String, pass: bool) -> Self {
        self.criterion = Some(criterion);
        self.pass = Some(pass);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("poqka {}\n", self.command);
        out += &format!("  profile: {}\n", self.profile);
        if let Some(p) = self.protocol {
            out += &format!("  protocol: {p}\n");
        }
        out += &format!("  seed: {}\n  build: {}\n", self.seed, self.build);
        let mut lines = Vec::new();
        flatten("", &self.body, &mut lines);
        for l in lines {
            out += &format!("  {l}\n");
        }
        if let (Some(c), Some(p)) = (&self.criterion, self.pass) {
            out += &format!("{}: {c}", if p { "PASS" } else { "FAIL" });
        }
        out.trim_end().to_string()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object()) => {
            out.push(format!("{prefix}: {v}"));
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), item, out);
            }
        }
        Value::Number(n) if n.is_f64() => out.push(format!("{prefix}: {:.6}", n.as_f64().unwrap_or_default())),
        other => out.push(format!("{prefix}: {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_flattens_nested_values() {
        let r = Report::new("x", "toy", Some(3), &[0; 32], json!({"a": {"b": 1, "c": [1, 2]}, "rate": 0.5}))
            .judged("rate <= 1".into(), true);
        let text = r.to_text();
        assert!(text.contains("  a.b: 1\n"));
        assert!(text.contains("  a.c: [1,2]\n"));
        assert!(text.contains("  rate: 0.500000\n"));
        assert!(text.ends_with("PASS: rate <= 1"));
        assert!(r.to_json().contains("\"build\""));
    }
}
