//! Report envelope and deterministic JSON output.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};

/// Significant digits kept for every float in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

pub struct Envelope {
    pub command: String,
    pub protocol: Option<String>,
    pub n: usize,
    pub seed: u64,
    pub tol: f64,
    pub deterministic: bool,
    started: Instant,
}

impl Envelope {
    pub fn new(command: &str, protocol: Option<&str>, n: usize, seed: u64, tol: f64, deterministic: bool) -> Self {
        Envelope {
            command: command.to_string(),
            protocol: protocol.map(str::to_string),
            n,
            seed,
            tol,
            deterministic,
            started: Instant::now(),
        }
    }

    pub fn finish(&self, pass: bool, result: Value) -> Value {
        let wall = if self.deterministic { 0.0 } else { self.started.elapsed().as_secs_f64() };
        let sdp = cdqs_core::sdp::SolverOptions::default();
        json!({
            "tool": "cdqs-lab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "protocol": self.protocol,
            "n": self.n,
            "seed": self.seed,
            "tolerances": { "report": self.tol, "sdp": sdp.tol, "sdp_max_iter": sdp.max_iter },
            "wall_time_s": wall,
            "pass": pass,
            "result": result,
        })
    }
}

fn round_significant(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Rounds floats to [`SIGNIFICANT_DIGITS`] and rebuilds objects with sorted keys.
pub fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            n.as_f64().map(round_significant).and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(obj) => {
            let mut entries: Vec<(String, Value)> = obj.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonicalize(v))).collect::<Map<_, _>>())
        }
        other => other,
    }
}

pub fn render(report: Value) -> String {
    let mut text = serde_json::to_string_pretty(&canonicalize(report)).expect("JSON values always serialize");
    text.push('\n');
    text
}

/// Writes to `out`, or to stdout when absent.
pub fn emit(report: Value, out: Option<&Path>) -> std::io::Result<()> {
    let text = render(report);
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_twelve_digits() {
        assert_eq!(round_significant(0.1 + 0.2), 0.3);
        assert_eq!(round_significant(1.234_567_890_123_4e-7), 1.234_567_890_12e-7);
    }

    #[test]
    fn keys_are_sorted() {
        let v = json!({"b": 1, "a": {"d": 0.5, "c": [1.0]}});
        let text = render(v);
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
        assert!(text.find("\"c\"").unwrap() < text.find("\"d\"").unwrap());
    }
}
