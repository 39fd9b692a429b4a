// SPDX-License-Identifier: Apache-2.0

//! Metric tables: CSV in and out, comparison rendering, SVG bar chart.

use std::fmt::Write as _;

use cla_core::metrics::{
    compare, delay_reduction_percent, fom_gain_percent, speedup_percent, MetricsReport,
};
use serde::Deserialize;

use crate::CliError;

pub const BENCH_HEADER: [&str; 5] = ["name", "power", "delay", "area", "fom"];

/// Input row of `bench --paper-mode`.
#[derive(Debug, Deserialize)]
struct PaperRow {
    name: String,
    power_uw: f64,
    delay_ns: f64,
    area_um2: f64,
}

/// Reads `name,power_uw,delay_ns,area_um2` rows.
pub fn read_paper_csv(text: &str) -> Result<Vec<MetricsReport>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<PaperRow>() {
        let row = row.map_err(|e| CliError::Usage(format!("paper-mode CSV: {e}")))?;
        let report = MetricsReport::from_values(row.name, row.power_uw, row.delay_ns, row.area_um2)
            .map_err(|e| CliError::Usage(format!("paper-mode CSV: {e}")))?;
        out.push(report);
    }
    Ok(out)
}

/// Reads either the paper-mode input schema or a `bench` output CSV.
pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricsReport>, CliError> {
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .unwrap_or("");
    if first.contains("power_uw") {
        return read_paper_csv(text);
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("metrics CSV: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("metrics CSV: missing column `{name}`")))
    };
    let (n, p, d, a) = (col("name")?, col("power")?, col("delay")?, col("area")?);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Usage(format!("metrics CSV: {e}")))?;
        let num = |i: usize| {
            record
                .get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("metrics CSV: bad number in {record:?}")))
        };
        let report =
            MetricsReport::from_values(record.get(n).unwrap_or(""), num(p)?, num(d)?, num(a)?)
                .map_err(|e| CliError::Usage(format!("metrics CSV: {e}")))?;
        out.push(report);
    }
    Ok(out)
}

pub fn write_bench_csv(rows: &[MetricsReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.name.clone(),
            format!("{:.4}", r.power.value),
            format!("{:.4}", r.delay.value),
            format!("{:.4}", r.area.value),
            format!("{:.4}", r.fom),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn bench_table(rows: &[MetricsReport]) -> String {
    let name_w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let (pu, du, au) = rows
        .first()
        .map(|r| {
            (
                r.power.unit.as_str(),
                r.delay.unit.as_str(),
                r.area.unit.as_str(),
            )
        })
        .unwrap_or(("", "", ""));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:>12}  {:>10}  {:>12}  {:>8}",
        "design",
        format!("power({pu})"),
        format!("delay({du})"),
        format!("area({au})"),
        "fom"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>12.4}  {:>10.4}  {:>12.4}  {:>8.2}",
            r.name, r.power.value, r.delay.value, r.area.value, r.fom
        );
    }
    out
}

/// A side of a comparison: a full design row or a bare published number.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Design(MetricsReport),
    Fom(f64),
    Delay(f64),
}

impl Operand {
    /// `fom:<x>`, `delay:<x>`, or a design name looked up in `source`.
    pub fn resolve(text: &str, source: &[MetricsReport]) -> Result<Self, CliError> {
        let literal = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| *x > 0.0 && x.is_finite())
                .ok_or_else(|| CliError::Usage(format!("`{text}`: expected a positive number")))
        };
        if let Some(v) = text.strip_prefix("fom:") {
            return Ok(Operand::Fom(literal(v)?));
        }
        if let Some(v) = text.strip_prefix("delay:") {
            return Ok(Operand::Delay(literal(v)?));
        }
        source
            .iter()
            .find(|r| r.name == text)
            .cloned()
            .map(Operand::Design)
            .ok_or_else(|| CliError::Usage(format!("design `{text}` is not in the source table")))
    }

    fn label(&self) -> String {
        match self {
            Operand::Design(r) => r.name.clone(),
            Operand::Fom(x) => format!("fom:{x}"),
            Operand::Delay(x) => format!("delay:{x}"),
        }
    }

    fn fom(&self) -> Option<f64> {
        match self {
            Operand::Design(r) => Some(r.fom),
            Operand::Fom(x) => Some(*x),
            Operand::Delay(_) => None,
        }
    }

    fn delay(&self) -> Option<f64> {
        match self {
            Operand::Design(r) => Some(r.delay.value),
            Operand::Delay(x) => Some(*x),
            Operand::Fom(_) => None,
        }
    }
}

/// Percentages of one comparison. Fields a pair of operands cannot supply
/// are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub power_delta_percent: Option<f64>,
    pub delay_delta_percent: Option<f64>,
    pub area_delta_percent: Option<f64>,
    pub fom_gain_percent: Option<f64>,
    pub delay_reduction_percent: Option<f64>,
    pub speedup_percent: Option<f64>,
    rows: Vec<(&'static str, f64, f64)>,
}

pub fn compare_operands(baseline: &Operand, candidate: &Operand) -> Result<Comparison, CliError> {
    if let (Operand::Design(b), Operand::Design(c)) = (baseline, candidate) {
        let row = compare(b, c).map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok(Comparison {
            baseline: b.name.clone(),
            candidate: c.name.clone(),
            power_delta_percent: Some(row.power_delta_percent),
            delay_delta_percent: Some(row.delay_delta_percent),
            area_delta_percent: Some(row.area_delta_percent),
            fom_gain_percent: Some(row.fom_gain_percent),
            delay_reduction_percent: Some(row.delay_reduction_percent),
            speedup_percent: Some(row.speedup_percent),
            rows: vec![
                ("power", b.power.value, c.power.value),
                ("delay", b.delay.value, c.delay.value),
                ("area", b.area.value, c.area.value),
                ("fom", b.fom, c.fom),
            ],
        });
    }
    let foms = baseline.fom().zip(candidate.fom());
    let delays = baseline.delay().zip(candidate.delay());
    let mut rows = Vec::new();
    let fom_gain = match (baseline, candidate) {
        (Operand::Delay(_), _) | (_, Operand::Delay(_)) => None,
        _ => foms.map(|(b, c)| {
            rows.push(("fom", b, c));
            fom_gain_percent(b, c)
        }),
    };
    let delay = match (baseline, candidate) {
        (Operand::Fom(_), _) | (_, Operand::Fom(_)) => None,
        _ => delays.inspect(|&(b, c)| rows.push(("delay", b, c))),
    };
    if fom_gain.is_none() && delay.is_none() {
        return Err(CliError::Usage(format!(
            "cannot compare {} with {}: no common metric",
            baseline.label(),
            candidate.label()
        )));
    }
    Ok(Comparison {
        baseline: baseline.label(),
        candidate: candidate.label(),
        power_delta_percent: None,
        delay_delta_percent: delay.map(|(b, c)| (c / b - 1.0) * 100.0),
        area_delta_percent: None,
        fom_gain_percent: fom_gain,
        delay_reduction_percent: delay.map(|(b, c)| delay_reduction_percent(b, c)),
        speedup_percent: delay.map(|(b, c)| speedup_percent(b, c)),
        rows,
    })
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.1}%")).unwrap_or_else(|| "-".into())
}

impl Comparison {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "baseline   {}", self.baseline);
        let _ = writeln!(out, "candidate  {}", self.candidate);
        let _ = writeln!(
            out,
            "{:<8} {:>12} {:>12} {:>9}",
            "metric", "baseline", "candidate", "change"
        );
        for &(metric, b, c) in &self.rows {
            let change = match metric {
                "power" => self.power_delta_percent,
                "delay" => self.delay_delta_percent,
                "area" => self.area_delta_percent,
                _ => self.fom_gain_percent,
            };
            let digits = if metric == "fom" { 2 } else { 4 };
            let _ = writeln!(
                out,
                "{metric:<8} {b:>12.digits$} {c:>12.digits$} {:>9}",
                pct(change)
            );
        }
        if let Some(g) = self.fom_gain_percent {
            let _ = writeln!(out, "fom gain           {}", pct(Some(g)));
        }
        if self.delay_reduction_percent.is_some() {
            let _ = writeln!(
                out,
                "delay reduction    {}",
                pct(self.delay_reduction_percent)
            );
            let _ = writeln!(out, "speedup            {}", pct(self.speedup_percent));
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let cell = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
        w.write_record([
            "baseline",
            "candidate",
            "power_delta_percent",
            "delay_delta_percent",
            "area_delta_percent",
            "fom_gain_percent",
            "delay_reduction_percent",
            "speedup_percent",
        ])
        .expect("in-memory write");
        w.write_record([
            self.baseline.clone(),
            self.candidate.clone(),
            cell(self.power_delta_percent),
            cell(self.delay_delta_percent),
            cell(self.area_delta_percent),
            cell(self.fom_gain_percent),
            cell(self.delay_reduction_percent),
            cell(self.speedup_percent),
        ])
        .expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Static bar chart of FOM per design.
pub fn fom_svg(rows: &[MetricsReport], title: &str) -> String {
    let (bar, gap, left, top, plot_h, bottom) = (48.0, 24.0, 60.0, 40.0, 300.0, 150.0);
    let width = left + rows.len() as f64 * (bar + gap) + gap;
    let height = top + plot_h + bottom;
    let max = rows
        .iter()
        .map(|r| r.fom)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        xml_escape(title)
    );
    let base = top + plot_h;
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        width - gap / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>"#
    );
    for (i, r) in rows.iter().enumerate() {
        let h = r.fom / max * plot_h;
        let x = left + gap + i as f64 * (bar + gap);
        let y = base - h;
        let cx = x + bar / 2.0;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{bar}" height="{h:.1}" fill="#4a7ab5"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
            y - 4.0,
            r.fom
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-45 {cx:.1} {:.1})">{}</text>"#,
            base + 14.0,
            base + 14.0,
            xml_escape(&r.name)
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLES: &str = include_str!("../data/paper_tables.csv");

    fn row<'a>(rows: &'a [MetricsReport], name: &str) -> &'a MetricsReport {
        rows.iter().find(|r| r.name == name).unwrap()
    }

    #[test]
    fn published_rows_parse() {
        let rows = read_paper_csv(TABLES).unwrap();
        assert_eq!(rows.len(), 10);
        assert!((row(&rows, "hybrid-ccla-3").fom - 40.34).abs() < 0.01);
        assert!((row(&rows, "hybrid-scbcla-4").fom - 46.52).abs() < 0.01);
    }

    #[test]
    fn bench_csv_reads_back() {
        let rows = read_paper_csv(TABLES).unwrap();
        let csv = write_bench_csv(&rows);
        assert!(csv.starts_with("name,power,delay,area,fom\n"));
        let back = read_metrics_csv(&csv).unwrap();
        assert_eq!(back.len(), 10);
        assert_eq!(back[0].name, rows[0].name);
    }

    #[test]
    fn literals_and_designs() {
        let rows = read_paper_csv(TABLES).unwrap();
        let base = Operand::resolve("fom:22.5", &rows).unwrap();
        let cand = Operand::resolve("hybrid-ccla-3", &rows).unwrap();
        let c = compare_operands(&base, &cand).unwrap();
        assert_eq!(pct(c.fom_gain_percent), "79.3%");
        assert!(c.delay_reduction_percent.is_none());

        let c = compare_operands(&Operand::Delay(2.18), &Operand::Delay(1.05)).unwrap();
        assert_eq!(pct(c.delay_reduction_percent), "51.8%");
        assert_eq!(pct(c.speedup_percent), "107.6%");

        assert!(compare_operands(&Operand::Fom(1.0), &Operand::Delay(1.0)).is_err());
        assert!(Operand::resolve("nope", &rows).is_err());
        assert!(Operand::resolve("fom:-1", &rows).is_err());
    }

    #[test]
    fn self_comparison_is_flat() {
        let rows = read_paper_csv(TABLES).unwrap();
        let d = Operand::Design(rows[0].clone());
        let table = compare_operands(&d, &d).unwrap().table();
        assert_eq!(table.matches("0.0%").count(), 7, "{table}");
        assert!(!table.contains("-0.0%"));
    }

    #[test]
    fn svg_has_one_bar_per_row() {
        let rows = read_paper_csv(TABLES).unwrap();
        let svg = fom_svg(&rows, "FOM");
        assert_eq!(svg.matches("fill=\"#4a7ab5\"").count(), 10);
        assert!(svg.contains("46.52"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
