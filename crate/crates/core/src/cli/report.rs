//! Report serialisation. JSON objects have sorted keys and every float is
//! rounded to six decimals so reruns diff cleanly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::{Error, Result};

pub fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round6(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialise");
    let mut s = serde_json::to_string_pretty(&round_value(v)).expect("values serialise");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn fmt6(x: f64) -> String {
    format!("{:.6}", round6(x))
}

/// CSV text from a header and rows of already formatted fields.
pub fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

/// Reads a label table: the first column is the key, the last the label.
/// Works for `user_id,cluster`, `instance_id,user_id,cluster` and
/// `instance_id,label` files.
pub fn read_label_table(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_label_table(&text).map_err(|e| match e {
        Error::Malformed { line, message, .. } => Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

pub fn parse_label_table(text: &str) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Malformed {
            path: Default::default(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() < 2 {
            return Err(Error::Malformed {
                path: Default::default(),
                line,
                message: "expected at least two columns".into(),
            });
        }
        let key = row[0].to_string();
        if out.insert(key.clone(), row[row.len() - 1].to_string()).is_some() {
            return Err(Error::Malformed {
                path: Default::default(),
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(out)
}
