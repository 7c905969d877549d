//! `results.csv`, `summary.json`, `plot.svg` and the non-deterministic
//! `timing.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Abscissa, ExperimentResult, Row, Summary};
use crate::error::{Error, Result};

pub const CSV_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "plot.svg";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" | "svg-plot" => Ok(Format::Svg),
            other => Err(Error::ConfigInvalid(format!("unknown format {other:?}"))),
        }
    }
}

pub fn csv(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    if rows.is_empty() {
        w.write_record(["n", "replica", "statistic", "exponent"])
            .expect("header");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ASCII output")
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::ConfigInvalid(format!("CSV header: {e}")))?;
    if header != vec!["n", "replica", "statistic", "exponent"] {
        return Err(Error::ConfigInvalid("unexpected CSV header".into()));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::ConfigInvalid(format!("bad CSV row: {e}"))))
        .collect()
}

pub fn json(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize, Deserialize)]
struct Timing {
    runtime_secs: f64,
    threads: usize,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the requested files into `dir`, creating it if needed.
pub fn emit(result: &ExperimentResult, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        written.push(match f {
            Format::Csv => write(dir.join(CSV_FILE), &csv(&result.rows))?,
            Format::Json => write(dir.join(SUMMARY_FILE), &json(&result.summary))?,
            Format::Svg => write(dir.join(PLOT_FILE), &svg(&result.summary))?,
        });
    }
    let timing = Timing {
        runtime_secs: result.runtime_secs,
        threads: result.threads,
    };
    written.push(write(
        dir.join(TIMING_FILE),
        &serde_json::to_string_pretty(&timing).expect("timing serializes"),
    )?);
    Ok(written)
}

/// Reads a previously emitted summary and rows back.
pub fn load(dir: &Path) -> Result<(Summary, Vec<Row>)> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    let summary: Summary = serde_json::from_str(&read(SUMMARY_FILE)?)
        .map_err(|e| Error::ConfigInvalid(format!("{SUMMARY_FILE}: {e}")))?;
    let rows = parse_csv(&read(CSV_FILE)?)?;
    Ok((summary, rows))
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

/// Mean statistic against the abscissa with error bars, the fitted line
/// (dashed) and the theoretical line through the data's centroid.
pub fn svg(summary: &Summary) -> String {
    let pts: Vec<(f64, f64, f64)> = summary
        .per_n
        .iter()
        .filter(|p| p.used > 0 && p.mean.is_finite())
        .map(|p| {
            let l = (p.n as f64).ln();
            let x = if summary.abscissa == Abscissa::NegLogN {
                -l
            } else {
                l
            };
            (x, p.mean, if p.stderr.is_finite() { p.stderr } else { 0.0 })
        })
        .collect();
    let (xlabel, ylabel) = match summary.abscissa {
        Abscissa::NegLogN => ("-log n", "mean log m_n"),
        Abscissa::LogN => ("log n", "mean statistic"),
        Abscissa::None => ("log n", "mean estimate"),
    };
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    let title = format!(
        "{} (k = {}, R = {})",
        summary.kind.tag(),
        summary.k,
        summary.replicas
    );
    writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    )
    .unwrap();

    if pts.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let centroid = (
        pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64,
        pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
    );
    let line = |slope: f64, through: (f64, f64), x: f64| through.1 + slope * (x - through.0);
    let theory_y = |x: f64| -> Option<f64> {
        let t = summary.theory?;
        Some(match summary.abscissa {
            Abscissa::None => t,
            _ => line(t, centroid, x),
        })
    };

    let (mut x0, mut x1) = bounds(pts.iter().map(|p| p.0));
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let mut ys: Vec<f64> = pts.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2]).collect();
    ys.extend([x0, x1].iter().filter_map(|&x| theory_y(x)));
    let (mut y0, mut y1) = bounds(ys.into_iter());
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    writeln!(
        out,
        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}" fill="none" stroke="black"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    )
    .unwrap();
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v:.3}</text>"#,
            sx(v),
            H - PAD + 16.0
        )
        .unwrap();
    }
    for v in [y0, y1] {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            PAD - 6.0,
            sy(v) + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        W / 2.0,
        H - 16.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();

    if let (Some(a), Some(b)) = (theory_y(x0), theory_y(x1)) {
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="1.5"/>"#,
            sx(x0),
            sy(a),
            sx(x1),
            sy(b)
        )
        .unwrap();
    }
    if let Some(fit) = summary.fit {
        let f = |x: f64| fit.intercept + fit.slope * x;
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-dasharray="6 4"/>"#,
            sx(x0),
            sy(f(x0)),
            sx(x1),
            sy(f(x1))
        )
        .unwrap();
    }
    for &(x, y, e) in &pts {
        if e > 0.0 {
            writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="steelblue"/>"#,
                sx(x),
                sy(y - e),
                sy(y + e)
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            sx(x),
            sy(y)
        )
        .unwrap();
    }

    let mut legend = Vec::new();
    if let Some(e) = summary.estimate {
        legend.push(("steelblue", format!("estimate {e:.4}")));
    }
    if let Some(t) = summary.theory {
        legend.push(("firebrick", format!("theory {t:.4}")));
    }
    for (i, (color, text)) in legend.iter().enumerate() {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{text}</text>"#,
            PAD + 10.0,
            PAD + 14.0 + 16.0 * i as f64
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
