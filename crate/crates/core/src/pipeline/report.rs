use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// What one stage consumed, produced and measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub input_digest: String,
    pub output_digest: String,
    pub diagnostics: Value,
}

/// Stages in execution order. Each stage's `input_digest` equals the
/// previous stage's `output_digest`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub stages: Vec<StageRecord>,
}

impl RunReport {
    pub(crate) fn push(&mut self, name: &str, input_digest: String, output_digest: String, diagnostics: Value) {
        self.stages.push(StageRecord {
            name: name.to_string(),
            input_digest,
            output_digest,
            diagnostics,
        });
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// True when every stage consumed exactly what its predecessor produced.
    pub fn chain_is_intact(&self) -> bool {
        self.stages.windows(2).all(|w| w[1].input_digest == w[0].output_digest)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("report serializes") + "\n"
    }

    /// Indented `key: value` listing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.stages.iter().enumerate() {
            let _ = writeln!(out, "[{}] {}", i, s.name);
            let _ = writeln!(out, "  input  {}", s.input_digest);
            let _ = writeln!(out, "  output {}", s.output_digest);
            write_value(&mut out, &s.diagnostics, 1);
        }
        out
    }
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if child.is_object() || child.is_array() {
                    let _ = writeln!(out, "{pad}{k}:");
                    write_value(out, child, depth + 1);
                } else {
                    let _ = writeln!(out, "{pad}{k}: {child}");
                }
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                if child.is_object() || child.is_array() {
                    let _ = writeln!(out, "{pad}- [{i}]");
                    write_value(out, child, depth + 1);
                } else {
                    let _ = writeln!(out, "{pad}- {child}");
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{other}");
        }
    }
}
