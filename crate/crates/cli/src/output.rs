//! Result documents. Every float is written with 17 significant digits so
//! repeated runs are byte-identical and values round-trip exactly.

use serde_json::{Map, Number, Value};

use crate::args::Format;

pub fn fmt17(x: f64) -> String {
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
        _ => s,
    }
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(serde_json::from_str::<Number>(&fmt17(x)).expect("formatted float parses"))
    } else {
        Value::Null
    }
}

/// One branch or node-pair current.
pub struct PairValue {
    pub branch: Option<usize>,
    pub u: String,
    pub v: String,
    pub value: f64,
    pub std_error: Option<f64>,
}

/// An ordered result document, rendered as one JSON object or as CSV rows of
/// `quantity,node,peer,value`.
#[derive(Default)]
pub struct Output {
    json: Map<String, Value>,
    rows: Vec<[String; 4]>,
}

impl Output {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: &str) {
        self.json.insert(key.into(), Value::String(value.into()));
        self.rows.push([key.into(), String::new(), String::new(), value.into()]);
    }

    pub fn integer(&mut self, key: &str, value: u64) {
        self.json.insert(key.into(), Value::from(value));
        self.rows.push([key.into(), String::new(), String::new(), value.to_string()]);
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.json.insert(key.into(), Value::Bool(value));
        self.rows.push([key.into(), String::new(), String::new(), value.to_string()]);
    }

    pub fn scalar(&mut self, key: &str, x: f64) {
        self.json.insert(key.into(), num(x));
        self.rows.push([key.into(), String::new(), String::new(), fmt17(x)]);
    }

    pub fn node_map(&mut self, key: &str, entries: &[(String, f64)]) {
        let mut map = Map::new();
        for (name, x) in entries {
            map.insert(name.clone(), num(*x));
            self.rows.push([key.into(), name.clone(), String::new(), fmt17(*x)]);
        }
        self.json.insert(key.into(), Value::Object(map));
    }

    pub fn pairs(&mut self, key: &str, entries: &[PairValue]) {
        let mut list = Vec::with_capacity(entries.len());
        for e in entries {
            let mut obj = Map::new();
            if let Some(b) = e.branch {
                obj.insert("branch".into(), Value::from(b));
            }
            obj.insert("u".into(), Value::String(e.u.clone()));
            obj.insert("v".into(), Value::String(e.v.clone()));
            obj.insert("i".into(), num(e.value));
            if let Some(se) = e.std_error {
                obj.insert("std_error".into(), num(se));
            }
            list.push(Value::Object(obj));
            self.rows.push([key.into(), e.u.clone(), e.v.clone(), fmt17(e.value)]);
            if let Some(se) = e.std_error {
                self.rows.push([format!("{key}_std_error"), e.u.clone(), e.v.clone(), fmt17(se)]);
            }
        }
        self.json.insert(key.into(), Value::Array(list));
    }

    /// Nests another document under `key` (CSV quantities are prefixed with it).
    pub fn nested(&mut self, key: &str, inner: Output) {
        for row in inner.rows {
            let [q, a, b, v] = row;
            self.rows.push([format!("{key}.{q}"), a, b, v]);
        }
        self.json.insert(key.into(), Value::Object(inner.json));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string(&Value::Object(self.json.clone())).expect("serializable") + "\n",
            Format::Csv => {
                let mut out = String::from("quantity,node,peer,value\n");
                for row in &self.rows {
                    out.push_str(&row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                out
            }
        }
    }
}

fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
