//! Reports shared by every verb: an ordered tree of values rendered either
//! as indented text or as one JSON document.

use serde_json::{Map, Value};

/// A float at 17 significant digits; non-finite values become `null`.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    serde_json::from_str(&format!("{v:.16e}")).expect("formatted float is valid JSON")
}

pub fn nums(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| num(v)).collect())
}

#[derive(Debug, Default)]
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new(verb: &str) -> Self {
        let mut r = Report::default();
        r.set("verb", verb);
        r
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.fields)
    }

    pub fn structured(self) -> String {
        let mut s = serde_json::to_string_pretty(&self.into_value()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn text(self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            render(&mut out, k, v, 0);
        }
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => Some(format!(
            "[{}]",
            items.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn render(out: &mut String, key: &str, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    if let Some(s) = scalar(v) {
        out.push_str(&format!("{pad}{key}: {s}\n"));
        return;
    }
    out.push_str(&format!("{pad}{key}:\n"));
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                render(out, k, v, depth + 1);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                render(out, &format!("[{i}]"), item, depth + 1);
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}
