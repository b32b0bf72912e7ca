//! CSV, JSON and SVG rendering. Output depends only on the report, so equal
//! reports give equal bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::config::Format;
use super::SweepReport;
use crate::error::{Error, Result};

const SWEEP_HEADER: [&str; 11] = [
    "kernel",
    "phi",
    "function",
    "n",
    "lambda",
    "sup_error",
    "modular_error",
    "denom_min",
    "bound_lhs",
    "bound_rhs",
    "pass",
];
const RATE_HEADER: [&str; 11] = ["kernel", "phi", "f", "n", "lambda0", "lambda1", "A1", "A2", "lhs", "rhs", "pass"];

/// 12 significant digits in scientific notation; `inf`, `-inf`, `nan`
/// for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Sweep schema, or the rate-bound schema for rate reports. Absent values
/// are empty fields; lines end in `\n`.
pub fn render_csv(report: &SweepReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let rows: Vec<[String; 11]> = if report.rate_records.is_empty() {
        let mut rows = vec![SWEEP_HEADER.map(String::from)];
        rows.extend(report.records.iter().map(|r| {
            [
                r.kernel.clone(),
                r.phi.clone().unwrap_or_default(),
                r.function.clone(),
                r.n.to_string(),
                opt_float(r.lambda),
                opt_float(r.sup_error),
                opt_float(r.modular_error),
                format_float(r.denom_min),
                opt_float(r.bound_lhs),
                opt_float(r.bound_rhs),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
            ]
        }));
        rows
    } else {
        let mut rows = vec![RATE_HEADER.map(String::from)];
        rows.extend(report.rate_records.iter().map(|r| {
            [
                r.kernel.clone(),
                r.phi.clone(),
                r.function.clone(),
                r.n.to_string(),
                format_float(r.lambda0),
                format_float(r.lambda1),
                format_float(r.a1),
                format_float(r.a2),
                format_float(r.lhs),
                format_float(r.rhs),
                r.pass.to_string(),
            ]
        }));
        rows
    };
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("utf-8 fields")
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float");
            if let Some(r) = serde_json::Number::from_f64(rounded) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats rounded to 12 significant
/// digits. Non-finite floats become `null`.
pub fn render_json(report: &SweepReport) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Log-log plot of error against `n`: one polyline per series (for
/// modular sweeps, one per λ within each kernel/φ/function), plus a dashed
/// reference line of slope −1.
pub fn render_svg(report: &SweepReport) -> String {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut push = |key: String, n: u32, y: f64| {
        if !(y > 0.0 && y.is_finite()) {
            return;
        }
        if !series.contains_key(&key) {
            order.push(key.clone());
        }
        series.entry(key).or_default().push((f64::from(n), y));
    };
    if report.rate_records.is_empty() {
        for r in &report.records {
            let y = r.modular_error.or(r.sup_error).unwrap_or(f64::NAN);
            let mut key = format!("{} {}", r.kernel, r.function);
            if let Some(phi) = &r.phi {
                key.push(' ');
                key.push_str(phi);
            }
            if let Some(l) = r.lambda {
                let _ = write!(key, " lambda={l}");
            }
            push(key, r.n, y);
        }
    } else {
        for r in &report.rate_records {
            push(format!("{} {} {} lhs", r.kernel, r.function, r.phi), r.n, r.lhs);
        }
    }

    let (w, h, margin) = (720.0, 480.0, 60.0);
    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{} error vs n (log-log)</text>",
        w / 2.0,
        report.kind.stem()
    );
    if all.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let lx: Vec<f64> = all.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = all.iter().map(|p| p.1.log10()).collect();
    let fold = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = fold(&lx);
    let (y0, y1) = fold(&ly);
    let px = |lx: f64| margin + (lx - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |ly: f64| h - margin - (ly - y0) / (y1 - y0) * (h - 2.0 * margin);
    let _ = writeln!(
        out,
        "<g stroke=\"black\" fill=\"none\"><line x1=\"{margin}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\"/><line x1=\"{margin}\" y1=\"{margin}\" x2=\"{margin}\" y2=\"{0}\"/></g>",
        h - margin,
        w - margin
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log10 n [{x0:.3}, {x1:.3}]</text>",
        w / 2.0,
        h - 20.0
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {0})\">log10 error [{y0:.3}, {y1:.3}]</text>",
        h / 2.0
    );
    // Slope −1 through the top-left data corner.
    let ref_a = (x0, y1);
    let ref_b = (x1, y1 - (x1 - x0));
    let _ = writeln!(
        out,
        "<polyline class=\"reference\" points=\"{:.2},{:.2} {:.2},{:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\" fill=\"none\"/>",
        px(ref_a.0),
        py(ref_a.1),
        px(ref_b.0),
        py(ref_b.1)
    );
    for (i, key) in order.iter().enumerate() {
        let pts = &series[key];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(n, e)| format!("{:.2},{:.2}", px(n.log10()), py(e.log10())))
            .collect();
        let _ = writeln!(
            out,
            "<polyline class=\"series\" points=\"{}\" stroke=\"{}\" fill=\"none\"><title>{}</title></polyline>",
            coords.join(" "),
            PALETTE[i % PALETTE.len()],
            xml_escape(key)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `<kind>.<ext>` into `dir`, creating it if needed.
pub fn emit_report(report: &SweepReport, format: Format, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let (ext, body) = match format {
        Format::Csv => ("csv", render_csv(report)),
        Format::Json => ("json", render_json(report)?),
        Format::Svg => ("svg", render_svg(report)),
    };
    let path = dir.join(format!("{}.{ext}", report.kind.stem()));
    fs::write(&path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}
