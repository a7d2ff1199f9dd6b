use serde_json::Value;

use crate::Format;

/// JSON is canonical; the table form lists top-level fields one per line
/// with nested values inlined compactly.
pub fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => bell_eff::json::to_canonical_string(v),
        Format::Table => match v {
            Value::Object(m) => {
                let width = m.keys().map(String::len).max().unwrap_or(0);
                m.iter().map(|(k, v)| format!("{k:<width$}  {}\n", cell(v))).collect()
            }
            other => format!("{}\n", cell(other)),
        },
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
