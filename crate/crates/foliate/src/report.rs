//! Run reports: the JSON envelope, CSV tables, exit codes and atomic output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::descriptor::Descriptor;

/// Significant digits kept for every float in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Schema,
    Model,
    Numerical,
    Io,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<Descriptor>,
    pub scalar: String,
    pub tolerance: f64,
    pub status: Status,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub result: Value,
    /// Wall-clock seconds per phase; only with `--timings`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    #[serde(skip)]
    pub table: Table,
}

/// Exit code as a function of the status and error.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success, taut, pass |
/// | 1 | a check failed or the foliation is not taut |
/// | 2 | model error (invalid parameters, bad cover, missing fixture) |
/// | 3 | numerical instability or an inconclusive verdict |
/// | 4 | descriptor schema error |
/// | 5 | output could not be written |
pub fn exit_code(status: Status, error: Option<&ErrorInfo>) -> i32 {
    match (error.map(|e| e.kind), status) {
        (Some(ErrorKind::Schema), _) => 4,
        (Some(ErrorKind::Model), _) => 2,
        (Some(ErrorKind::Numerical), _) => 3,
        (Some(ErrorKind::Io), _) => 5,
        (None, Status::Pass) => 0,
        (None, Status::Fail) => 1,
        (None, Status::Unstable) => 3,
    }
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float")
}

/// Format a float for CSV with the report precision.
pub fn num(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() {
        serde_json::Number::from_f64(r).map(|n| n.to_string()).unwrap_or_else(|| r.to_string())
    } else {
        r.to_string()
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serialize a payload with every float rounded to the report precision.
pub fn to_value<T: Serialize>(x: &T) -> Value {
    let mut v = serde_json::to_value(x).expect("report payloads serialize");
    round_value(&mut v);
    v
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut v = to_value(self);
        // The echo stays exact so that it parses back to the same descriptor.
        if let (Some(d), Some(o)) = (&self.descriptor, v.as_object_mut()) {
            o.insert("descriptor".into(), serde_json::to_value(d).expect("descriptor serializes"));
        }
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.error {
            Some(e) => {
                w.write_record(["error", "message"]).expect("in-memory write");
                w.write_record([serde_json::to_value(e.kind).unwrap().as_str().unwrap(), &e.message]).expect("in-memory write");
            }
            None => {
                w.write_record(&self.table.header).expect("in-memory write");
                for r in &self.table.rows {
                    w.write_record(r).expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Write `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-2.0e-17 / 3.0), -6.66666666667e-18);
        assert_eq!(num(123456789.0123456), "123456789.012");
        let v = to_value(&serde_json::json!({"a": [1.0 / 7.0, 3], "b": {"c": 2.0f64.sqrt()}}));
        assert_eq!(v.to_string(), r#"{"a":[0.142857142857,3],"b":{"c":1.41421356237}}"#);
    }

    #[test]
    fn exit_codes() {
        let err = |kind| ErrorInfo { kind, message: String::new() };
        assert_eq!(exit_code(Status::Pass, None), 0);
        assert_eq!(exit_code(Status::Fail, None), 1);
        assert_eq!(exit_code(Status::Unstable, None), 3);
        assert_eq!(exit_code(Status::Pass, Some(&err(ErrorKind::Model))), 2);
        assert_eq!(exit_code(Status::Fail, Some(&err(ErrorKind::Schema))), 4);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
