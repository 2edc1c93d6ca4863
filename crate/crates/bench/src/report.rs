//! Result tables and their CSV, JSON and SVG renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Method, Scenario};
use crate::error::{BenchError, Result};

pub const CSV_HEADER: [&str; 6] = ["method", "point", "rmse_deg", "fail_rate", "trials", "runtime_s"];
pub const FAILED: &str = "Failed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    /// SNR in dB or separation in degrees, depending on the scenario.
    #[serde(with = "extended_float")]
    pub point: f64,
    /// Pooled RMSE, `None` when the point is reported as failed.
    pub rmse_deg: Option<f64>,
    pub fail_rate: f64,
    pub trials: usize,
    /// Mean wall time per trial, only when timing was requested.
    pub runtime_s: Option<f64>,
    #[serde(default)]
    pub failed_trials: usize,
    /// Pooled RMSE of the successful trials regardless of the failure rule.
    #[serde(default)]
    pub successful_rmse_deg: Option<f64>,
    #[serde(default)]
    pub rmse_standard_error_deg: Option<f64>,
    #[serde(default)]
    pub per_source_rmse_deg: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    pub rows: Vec<ResultRow>,
}

/// Serializes infinite points as the strings `"inf"` and `"-inf"`.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn parse_field<T: std::str::FromStr>(value: &str, column: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| BenchError::Config(format!("CSV line {line}: bad {column} value {value:?}")))
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.method.to_string(),
                r.point.to_string(),
                r.rmse_deg.map_or_else(|| FAILED.to_string(), |v| v.to_string()),
                r.fail_rate.to_string(),
                r.trials.to_string(),
                r.runtime_s.map_or_else(String::new, |v| v.to_string()),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }

    /// Parses the CSV columns; fields beyond them are left at their defaults.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(BenchError::Config(format!("unexpected CSV header {header:?}")));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let field = |k: usize| record.get(k).unwrap_or("");
            let rmse_deg = match field(2) {
                FAILED => None,
                v => Some(parse_field(v, "rmse_deg", line)?),
            };
            let runtime_s = match field(5) {
                "" => None,
                v => Some(parse_field(v, "runtime_s", line)?),
            };
            let fail_rate: f64 = parse_field(field(3), "fail_rate", line)?;
            let trials: usize = parse_field(field(4), "trials", line)?;
            rows.push(ResultRow {
                method: parse_field(field(0), "method", line)?,
                point: parse_field(field(1), "point", line)?,
                rmse_deg,
                fail_rate,
                trials,
                runtime_s,
                failed_trials: (fail_rate * trials as f64).round() as usize,
                successful_rmse_deg: None,
                rmse_standard_error_deg: None,
                per_source_rmse_deg: Vec::new(),
            });
        }
        Ok(Self { scenario: None, rows })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Loads a table from a `.json` file, or from CSV otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read table {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }

    /// Line plot of RMSE against the scenario point, one series per method.
    /// Failed points break the line and are marked on the x axis.
    pub fn to_svg(&self, log_y: bool) -> Result<String> {
        if self.is_empty() {
            return Err(BenchError::EmptyTable);
        }
        let (w, h) = (640.0, 420.0);
        let (left, right, top, bottom) = (70.0, 130.0, 30.0, 60.0);
        let (pw, ph) = (w - left - right, h - top - bottom);

        let xs: Vec<f64> = self.rows.iter().map(|r| r.point).filter(|p| p.is_finite()).collect();
        let ys: Vec<f64> = self
            .rows
            .iter()
            .filter_map(|r| r.rmse_deg)
            .filter(|v| v.is_finite() && (!log_y || *v > 0.0))
            .collect();
        let (x0, x1) = padded_range(&xs, false);
        let (y0, y1) = padded_range(&ys, log_y);
        let ty = |v: f64| if log_y { v.log10() } else { v };
        let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| top + ph - (ty(y) - ty(y0)) / (ty(y1) - ty(y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let x = x0 + (x1 - x0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                px(x),
                top + ph + 18.0,
                tick(x)
            );
            let yv = if log_y {
                10f64.powf(ty(y0) + (ty(y1) - ty(y0)) * i as f64 / 4.0)
            } else {
                y0 + (y1 - y0) * i as f64 / 4.0
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                left - 6.0,
                py(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            h - 15.0,
            escape(self.x_label())
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">RMSE (deg){}</text>"#,
            top + ph / 2.0,
            if log_y { ", log scale" } else { "" }
        );

        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        let mut methods: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        for (mi, method) in methods.iter().enumerate() {
            let color = colors[mi % colors.len()];
            let mut rows: Vec<&ResultRow> =
                self.rows.iter().filter(|r| r.method == *method && r.point.is_finite()).collect();
            rows.sort_by(|a, b| a.point.total_cmp(&b.point));
            let mut segment: Vec<(f64, f64)> = Vec::new();
            let mut segments = Vec::new();
            for r in rows {
                match r.rmse_deg.filter(|v| v.is_finite() && (!log_y || *v > 0.0)) {
                    Some(v) => segment.push((px(r.point), py(v))),
                    None => {
                        segments.push(std::mem::take(&mut segment));
                        let _ = writeln!(
                            s,
                            r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="middle">x</text>"#,
                            px(r.point),
                            top + ph - 4.0 - 12.0 * mi as f64
                        );
                    }
                }
            }
            segments.push(segment);
            for seg in segments.iter().filter(|s| !s.is_empty()) {
                let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    pts.join(" ")
                );
                for (x, y) in seg {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                }
            }
            let ly = top + 14.0 + 18.0 * mi as f64;
            let lx = left + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&method.to_string()));
        }
        s.push_str("</svg>\n");
        Ok(s)
    }

    fn x_label(&self) -> &'static str {
        match self.scenario {
            Some(Scenario::Resolution) => "separation (deg)",
            Some(Scenario::RmseVsSnr) | Some(Scenario::SingleRun) => "SNR (dB)",
            None => "scenario point",
        }
    }
}

fn padded_range(values: &[f64], log: bool) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return if log { (0.1, 10.0) } else { (0.0, 1.0) };
    }
    if log {
        return (lo / 1.5, hi * 1.5);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 0.01 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

/// Writes `table` as `<stem>.<ext>` in `dir` for every requested format and
/// returns the written paths. An empty table is refused before touching disk.
pub fn emit_report(table: &ResultTable, dir: &Path, stem: &str, formats: &[Format], log_y: bool) -> Result<Vec<PathBuf>> {
    if table.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &format in formats {
        let body = match format {
            Format::Csv => table.to_csv()?,
            Format::Json => table.to_json()?,
            Format::Svg => table.to_svg(log_y)?,
        };
        let path = dir.join(format!("{stem}.{}", format.extension()));
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
