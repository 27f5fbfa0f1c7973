//! Record emission: deterministic JSON (sorted keys) or CSV.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::OutputFormat;
use crate::CliError;

pub const SCHEMA_VERSION: u64 = 1;

/// Render a flat record as CSV: one header line, one value line. Array
/// fields expand into indexed columns (`key_0`, `key_1`, ...).
pub fn record_to_csv(record: &Value) -> String {
    let object = record.as_object().expect("records are JSON objects");
    let mut headers = Vec::new();
    let mut values = Vec::new();
    for (key, value) in object {
        match value {
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    headers.push(format!("{key}_{i}"));
                    values.push(scalar_to_csv(item));
                }
            }
            other => {
                headers.push(key.clone());
                values.push(scalar_to_csv(other));
            }
        }
    }
    format!("{}\n{}\n", headers.join(","), values.join(","))
}

fn scalar_to_csv(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Serialize a record in the requested format. JSON objects come out with
/// sorted keys, so identical records are byte-identical.
pub fn render(record: &Value, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(record).expect("record serializes");
            text.push('\n');
            text
        }
        OutputFormat::Csv => record_to_csv(record),
    }
}

pub fn write_output(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write '{}': {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Config(format!("stdout: {e}")))
        }
    }
}
