//! CSV and JSON serialization of [`ExperimentReport`]s.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every finite `f64`. Non-finite values become empty CSV fields and JSON
//! `null`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Map, Number, Value};

use crate::experiments::{ExperimentReport, Location, ReportRow};

pub const CSV_HEADER: &str = "experiment,n,beta,x,measured,reference,bound,residual_mass";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn json_float(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(Number::from_str(&fmt_float(v)).expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

fn json_opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, json_float)
}

fn location_text(x: &Location) -> String {
    match x {
        Location::Point(v) => fmt_float(*v),
        Location::Interval(a, b) => format!("[{a};{b}]"),
    }
}

fn csv_row(out: &mut String, r: &ReportRow) {
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        r.experiment,
        r.n,
        fmt_float(r.beta),
        location_text(&r.x),
        fmt_float(r.measured),
        opt(r.reference),
        opt(r.bound),
        fmt_float(r.residual_mass),
    );
}

pub fn to_csv(report: &ExperimentReport) -> String {
    let mut out = String::with_capacity(64 * (report.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        csv_row(&mut out, r);
    }
    out
}

fn row_value(r: &ReportRow) -> Value {
    let mut m = Map::new();
    m.insert("experiment".into(), Value::String(r.experiment.clone()));
    m.insert("n".into(), json!(r.n));
    m.insert("beta".into(), json_float(r.beta));
    let x = match r.x {
        Location::Point(v) => json_float(v),
        Location::Interval(a, b) => json!({ "a": json_float(a), "b": json_float(b) }),
    };
    m.insert("x".into(), x);
    m.insert("measured".into(), json_float(r.measured));
    m.insert("reference".into(), json_opt(r.reference));
    m.insert("bound".into(), json_opt(r.bound));
    m.insert("residual_mass".into(), json_float(r.residual_mass));
    Value::Object(m)
}

pub fn to_json(report: &ExperimentReport) -> String {
    let v = json!({
        "schema_version": report.schema_version,
        "rows": report.rows.iter().map(row_value).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

pub fn render(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Csv => to_csv(report),
        Format::Json => to_json(report),
    }
}

/// Write to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &ExperimentReport, format: Format, path: Option<&Path>) -> io::Result<()> {
    let text = render(report, format);
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(x: Location, bound: Option<f64>) -> ReportRow {
        ReportRow {
            experiment: "voronovskaya".into(),
            n: 100,
            beta: 1e-4,
            x,
            measured: 0.1 + 0.2,
            reference: Some(1.0 / 3.0),
            bound,
            residual_mass: 0.0,
        }
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1 + 0.2, 1.0 / 3.0, 5e-324, f64::MAX, -2.5e-17, 0.0] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(f64::NAN), "");
    }

    #[test]
    fn empty_csv_is_header_only() {
        let r = ExperimentReport::new(vec![]);
        assert_eq!(to_csv(&r), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_columns() {
        let r = ExperimentReport::new(vec![
            row(Location::Point(1.0), None),
            row(Location::Interval(0.0, 2.0), Some(3.0)),
        ]);
        let text = to_csv(&r);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[1],
            "voronovskaya,100,1.0000000000000000e-4,1.0000000000000000e0,3.0000000000000004e-1,3.3333333333333331e-1,,0.0000000000000000e0"
        );
        assert!(lines[2].contains(",[0;2],"));
        for l in &lines {
            assert_eq!(l.split(',').count(), 8);
        }
    }

    #[test]
    fn json_shape() {
        let r = ExperimentReport::new(vec![row(Location::Point(1.0), None)]);
        let v: Value = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(v["schema_version"], json!(1));
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["bound"], Value::Null);
        assert_eq!(rows[0]["n"], json!(100));
        let m: f64 = rows[0]["measured"].to_string().parse().unwrap();
        assert_eq!(m, 0.1 + 0.2);
    }

    #[test]
    fn format_parse() {
        assert_eq!("csv".parse::<Format>(), Ok(Format::Csv));
        assert_eq!("json".parse::<Format>(), Ok(Format::Json));
        assert!("xml".parse::<Format>().is_err());
    }
}
