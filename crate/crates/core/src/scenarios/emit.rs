//! Writing reports to disk as JSON, CSV and SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::report::{Artifact, ArtifactKind, Report};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub fn parse_list(text: &str) -> Result<Vec<Format>> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| match s {
                "json" => Ok(Format::Json),
                "csv" => Ok(Format::Csv),
                "svg" => Ok(Format::Svg),
                other => Err(Error::Precondition(format!("unknown output format `{other}`"))),
            })
            .collect()
    }
}

fn ser(e: impl std::fmt::Display) -> Error {
    Error::Serialize(e.to_string())
}

/// Writes the requested formats under `dir` and returns the created files.
pub fn write_report(report: &Report, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for f in formats {
        match f {
            Format::Json => {
                let p = dir.join("report.json");
                fs::write(&p, report.to_json())?;
                out.push(p);
            }
            Format::Csv => {
                let p = dir.join("checks.csv");
                checks_csv(report, &p)?;
                out.push(p);
                for a in &report.artifacts {
                    let p = dir.join(format!("{}.csv", a.name));
                    artifact_csv(a, &p)?;
                    out.push(p);
                }
            }
            Format::Svg => {
                for a in &report.artifacts {
                    let p = dir.join(format!("{}.svg", a.name));
                    fs::write(&p, svg(a))?;
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn checks_csv(report: &Report, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(ser)?;
    w.write_record(["name", "status", "metric", "tolerance", "runtime_ms", "detail"]).map_err(ser)?;
    for c in &report.checks {
        let status = serde_json::to_value(c.status).map_err(ser)?;
        w.write_record([
            c.name.as_str(),
            status.as_str().unwrap_or_default(),
            &opt(c.metric),
            &opt(c.tolerance),
            &format!("{:.3}", c.runtime_ms),
            &c.detail,
        ])
        .map_err(ser)?;
    }
    w.flush()?;
    Ok(())
}

fn nums(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn pairs(v: &Value) -> Vec<[f64; 2]> {
    v.as_array()
        .map(|a| {
            a.iter()
                .filter_map(|p| {
                    let q = nums(p);
                    (q.len() == 2).then(|| [q[0], q[1]])
                })
                .collect()
        })
        .unwrap_or_default()
}

fn label(v: &Value, key: &str, idx: usize) -> String {
    v[key][idx].as_str().map(str::to_string).unwrap_or_else(|| format!("{key}{idx}"))
}

fn artifact_csv(a: &Artifact, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(ser)?;
    let d = &a.data;
    match a.kind {
        ArtifactKind::Grid => {
            let (lo, hi, counts) = (nums(&d["lo"]), nums(&d["hi"]), nums(&d["counts"]));
            w.write_record([label(d, "axes", 0), label(d, "axes", 1), "value".into()]).map_err(ser)?;
            let step = |k: usize| if counts[k] > 1.0 { (hi[k] - lo[k]) / (counts[k] - 1.0) } else { 0.0 };
            for (i, row) in d["values"].as_array().into_iter().flatten().enumerate() {
                for (j, v) in nums(row).into_iter().enumerate() {
                    let a = lo[0] + i as f64 * step(0);
                    let b = lo[1] + j as f64 * step(1);
                    w.write_record([a.to_string(), b.to_string(), v.to_string()]).map_err(ser)?;
                }
            }
        }
        ArtifactKind::Cloud => {
            w.write_record([label(d, "axes", 0), label(d, "axes", 1), "layer".into()]).map_err(ser)?;
            for (key, layer) in [("background", "background"), ("points", "points")] {
                for p in pairs(&d[key]) {
                    w.write_record([p[0].to_string(), p[1].to_string(), layer.into()]).map_err(ser)?;
                }
            }
        }
        ArtifactKind::Curve => {
            let xl = d["xlabel"].as_str().unwrap_or("x").to_string();
            let yl = d["ylabel"].as_str().unwrap_or("y").to_string();
            w.write_record([xl, yl]).map_err(ser)?;
            for (x, y) in nums(&d["x"]).into_iter().zip(nums(&d["y"])) {
                w.write_record([x.to_string(), y.to_string()]).map_err(ser)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

const W: f64 = 480.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn from(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in it.filter(|v| v.is_finite()) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-300 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn header(title: &str) -> String {
    let mut s = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    s.push('\n');
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn axes(s: &mut String, f: &Frame, xl: &str, yl: &str, tick: impl Fn(f64) -> String) {
    let _ = writeln!(s, r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * PAD, H - 2.0 * PAD);
    let font = r#"font-family="sans-serif" font-size="11""#;
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" {font}>{}</text>"#, H - PAD + 15.0, tick(f.x0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" {font}>{}</text>"#, W - PAD, H - PAD + 15.0, tick(f.x1));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" {font}>{}</text>"#, PAD - 4.0, H - PAD, tick(f.y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" {font}>{}</text>"#, PAD - 4.0, PAD + 10.0, tick(f.y1));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" {font}>{}</text>"#, W / 2.0, H - 12.0, escape(xl));
    let _ = writeln!(s, r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})" {font}>{}</text>"#, H / 2.0, H / 2.0, escape(yl));
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn heat(v: f64, lo: f64, hi: f64) -> String {
    let s = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let r = (255.0 * s) as u8;
    let b = (255.0 * (1.0 - s)) as u8;
    format!("rgb({r},{},{b})", 80)
}

/// Renders one artifact: a heatmap for grids, a scatter plot for clouds and a
/// log-log line chart for curves.
pub fn svg(a: &Artifact) -> String {
    let d = &a.data;
    let mut s = header(&a.name);
    match a.kind {
        ArtifactKind::Grid => {
            let (lo, hi) = (nums(&d["lo"]), nums(&d["hi"]));
            let rows: Vec<Vec<f64>> = d["values"].as_array().into_iter().flatten().map(nums).collect();
            let na = rows.len().max(1);
            let nb = rows.first().map_or(1, Vec::len).max(1);
            let f = Frame { x0: lo[0], x1: hi[0], y0: lo[1], y1: hi[1] };
            let all = rows.iter().flatten().copied();
            let vmin = all.clone().fold(f64::INFINITY, f64::min);
            let vmax = all.fold(f64::NEG_INFINITY, f64::max);
            let cw = (W - 2.0 * PAD) / na as f64;
            let ch = (H - 2.0 * PAD) / nb as f64;
            for (i, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let x = PAD + i as f64 * cw;
                    let y = H - PAD - (j + 1) as f64 * ch;
                    let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#, cw + 0.3, ch + 0.3, heat(*v, vmin, vmax));
                }
            }
            axes(&mut s, &f, &label(d, "axes", 0), &label(d, "axes", 1), |v| format!("{v:.3}"));
        }
        ArtifactKind::Cloud => {
            let bg = pairs(&d["background"]);
            let pts = pairs(&d["points"]);
            let both = bg.iter().chain(&pts);
            let f = Frame::from(both.clone().map(|p| p[0]), both.map(|p| p[1]));
            for p in &bg {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.2" fill="steelblue" fill-opacity="0.5"/>"#, f.px(p[0]), f.py(p[1]));
            }
            for p in &pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="darkorange"/>"#, f.px(p[0]), f.py(p[1]));
            }
            axes(&mut s, &f, &label(d, "axes", 0), &label(d, "axes", 1), |v| format!("{v:.3}"));
        }
        ArtifactKind::Curve => {
            let pts: Vec<(f64, f64)> = nums(&d["x"]).into_iter().zip(nums(&d["y"])).filter(|(x, y)| *x > 0.0 && *y > 0.0).collect();
            let f = Frame::from(pts.iter().map(|p| p.0.log10()), pts.iter().map(|p| p.1.log10()));
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", f.px(x.log10()), f.py(y.log10()))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, path.join(" "));
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, f.px(x.log10()), f.py(y.log10()));
            }
            let xl = d["xlabel"].as_str().unwrap_or("x");
            let yl = d["ylabel"].as_str().unwrap_or("y");
            axes(&mut s, &f, &format!("log10 {xl}"), &format!("log10 {yl}"), |v| format!("{v:.2}"));
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn formats_parse() {
        assert_eq!(Format::parse_list("json, svg").unwrap(), vec![Format::Json, Format::Svg]);
        assert!(Format::parse_list("png").is_err());
    }

    #[test]
    fn every_kind_renders() {
        let arts = [
            Artifact { kind: ArtifactKind::Grid, name: "g".into(), data: json!({"axes": ["x", "y"], "lo": [0, 0], "hi": [1, 1], "counts": [2, 2], "values": [[0, 2], [2, 2]]}) },
            Artifact { kind: ArtifactKind::Cloud, name: "c".into(), data: json!({"axes": ["x", "y"], "background": [[0, 0]], "points": [[1, 1]]}) },
            Artifact { kind: ArtifactKind::Curve, name: "k".into(), data: json!({"xlabel": "n", "ylabel": "d", "x": [10, 100], "y": [0.1, 0.01]}) },
        ];
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::empty("t", 0);
        r.artifacts = arts.to_vec();
        let files = write_report(&r, dir.path(), &[Format::Json, Format::Csv, Format::Svg]).unwrap();
        assert_eq!(files.len(), 8);
        for a in &arts {
            let s = svg(a);
            assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        }
        let grid = fs::read_to_string(dir.path().join("g.csv")).unwrap();
        assert_eq!(grid.lines().count(), 5);
    }
}
