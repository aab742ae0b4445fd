//! Flat report rows and their CSV / JSON serialization.

use crate::electron::{Numeric, ObservableReport};
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::io::Write;

/// One output line. `m20` and `m21` are the kernel moments, so that every
/// analytic number can be re-derived from the row alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub observable: String,
    pub kernel: String,
    pub a: f64,
    pub eps: f64,
    pub numeric: f64,
    pub analytic: f64,
    pub rel_dev: f64,
    pub notes: String,
    pub m20: f64,
    pub m21: f64,
}

/// Shortest round-trip form, switching to exponent notation outside
/// `[1e-4, 1e15)` so that notes stay readable.
pub fn fmt_num(x: f64) -> String {
    let m = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&m) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Row {
    /// Vector observables are reported by norm with components in `notes`.
    pub fn from_report(r: &ObservableReport, m20: f64, m21: f64) -> Self {
        let mut notes = r.notes.clone();
        if let Numeric::Vector(v) = r.numeric {
            notes.push(format!("vector=({} {} {})", fmt_num(v.x), fmt_num(v.y), fmt_num(v.z)));
        }
        for (k, v) in &r.details {
            notes.push(format!("{k}={}", fmt_num(*v)));
        }
        Self {
            observable: r.name.name().to_string(),
            kernel: r.params.kernel.clone(),
            a: r.params.scales.a,
            eps: r.params.scales.eps,
            numeric: r.numeric.magnitude(),
            analytic: r.analytic_value.magnitude(),
            rel_dev: r.relative_deviation,
            notes: notes.join("; "),
            m20,
            m21,
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.observable
            .cmp(&other.observable)
            .then_with(|| self.kernel.cmp(&other.kernel))
            .then_with(|| self.a.total_cmp(&other.a))
            .then_with(|| self.eps.total_cmp(&other.eps))
    }
}

/// Sorts by `(observable, kernel, a, eps)`; stable for equal keys.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(Row::key_cmp);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(crate::Error::Domain(format!("unknown format '{s}' (csv|json)"))),
        }
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "observable", "kernel", "a", "eps", "numeric", "analytic", "rel_dev", "notes", "m20", "m21",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[Row], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows).map_err(|e| crate::Error::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_rows<W: Write>(rows: &[Row], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(rows, out),
        Format::Json => write_json(rows, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(obs: &str, kernel: &str, a: f64, eps: f64) -> Row {
        Row {
            observable: obs.into(),
            kernel: kernel.into(),
            a,
            eps,
            numeric: 1.5,
            analytic: 1.25,
            rel_dev: 0.2,
            notes: "x, \"quoted\"".into(),
            m20: 0.3989422804014327,
            m21: 0.0,
        }
    }

    #[test]
    fn rows_sort_by_key() {
        let mut rows = vec![
            row("U_mag", "gaussian", 0.1, 1e-3),
            row("U_ele", "gaussian", 0.1, 1e-3),
            row("U_ele", "compact-bump", 0.1, 1e-3),
            row("U_ele", "gaussian", 0.05, 1e-3),
            row("U_ele", "gaussian", 0.05, 5e-4),
        ];
        sort_rows(&mut rows);
        let keys: Vec<(&str, &str, f64, f64)> =
            rows.iter().map(|r| (&*r.observable, &*r.kernel, r.a, r.eps)).collect();
        assert_eq!(
            keys,
            vec![
                ("U_ele", "compact-bump", 0.1, 1e-3),
                ("U_ele", "gaussian", 0.05, 5e-4),
                ("U_ele", "gaussian", 0.05, 1e-3),
                ("U_ele", "gaussian", 0.1, 1e-3),
                ("U_mag", "gaussian", 0.1, 1e-3),
            ]
        );
    }

    #[test]
    fn csv_round_trip_and_quoting() {
        let rows = vec![row("U_ele", "gaussian", 0.1, 1e-3)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("observable,kernel,a,eps,numeric,analytic,rel_dev,notes,m20,m21\r\n"));
        assert!(text.contains("\"x, \"\"quoted\"\"\""));
        let mut rdr = csv::Reader::from_reader(&buf[..]);
        let back: Vec<Row> = rdr.deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn json_is_array_of_rows() {
        let rows = vec![row("S_vec", "gaussian", 0.1, 1e-3)];
        let mut buf = Vec::new();
        write_json(&rows, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 1);
        assert_eq!(v[0]["observable"], "S_vec");
        assert_eq!(v[0]["m20"], 0.3989422804014327);
    }

    #[test]
    fn compact_numbers() {
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(4.5e-11), "4.5e-11");
        assert_eq!(fmt_num(-3e20), "-3e20");
        assert_eq!(fmt_num(0.0), "0");
    }

    #[test]
    fn empty_csv_has_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("observable,"));
    }
}
