//! Report serialisation.

use std::collections::BTreeSet;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn emit_report(report: &Value, format: Format) -> Vec<u8> {
    match format {
        Format::Json => emit_json(report),
        Format::Csv => emit_csv(report),
    }
}

/// Pretty JSON with sorted keys and shortest round-trip numbers.
pub fn emit_json(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("values serialise");
    out.push(b'\n');
    out
}

/// Number and boolean leaves keyed by JSON pointer, in key order.
pub fn flatten(v: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(x, &format!("{prefix}/{}", k.replace('~', "~0").replace('/', "~1")), out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(x, &format!("{prefix}/{i}"), out);
            }
        }
        Value::Number(_) | Value::Bool(_) => out.push((prefix.to_string(), v.to_string())),
        Value::Null | Value::String(_) => {}
    }
}

fn write_rows(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// A sweep report becomes one row per point with a column per flattened
/// result field; any other report becomes `path,value` rows.
pub fn emit_csv(report: &Value) -> Vec<u8> {
    if let Some(points) = report.get("points").and_then(Value::as_array) {
        let flat: Vec<Vec<(String, String)>> = points
            .iter()
            .map(|p| {
                let mut out = Vec::new();
                flatten(&p["result"], "", &mut out);
                out
            })
            .collect();
        let keys: BTreeSet<&str> = flat.iter().flatten().map(|(k, _)| k.as_str()).collect();
        let mut header = vec!["index".to_string(), "value".to_string()];
        header.extend(keys.iter().map(|k| k.to_string()));
        let rows: Vec<Vec<String>> = points
            .iter()
            .zip(&flat)
            .map(|(p, f)| {
                let lookup: Map<String, Value> =
                    f.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
                let mut row = vec![p["index"].to_string(), p["value"].to_string()];
                row.extend(keys.iter().map(|k| lookup.get(*k).and_then(Value::as_str).unwrap_or("").to_string()));
                row
            })
            .collect();
        return write_rows(&header, &rows);
    }
    let mut out = Vec::new();
    flatten(report.get("result").unwrap_or(report), "", &mut out);
    let rows: Vec<Vec<String>> = out.into_iter().map(|(k, v)| vec![k, v]).collect();
    write_rows(&["path".to_string(), "value".to_string()], &rows)
}
