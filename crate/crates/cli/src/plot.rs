//! Loss curves as a standalone SVG.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use adamuon::harness::{read_csv, TrainRecord};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 620.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 450.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("{}: {msg}", path.display())]
    Input { path: PathBuf, msg: String },
    #[error("no input files")]
    NoInputs,
    #[error("no finite positive loss values to plot")]
    NothingToPlot,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn load_series(paths: &[PathBuf]) -> Result<Vec<Series>, PlotError> {
    if paths.is_empty() {
        return Err(PlotError::NoInputs);
    }
    paths
        .iter()
        .map(|p| {
            let records = read_csv(p).map_err(|e| PlotError::Input {
                path: p.clone(),
                msg: match e {
                    adamuon::Error::Io { source, .. } => source.to_string(),
                    adamuon::Error::Parse { line, msg, .. } => format!("line {line}: {msg}"),
                    other => other.to_string(),
                },
            })?;
            if records.is_empty() {
                return Err(PlotError::Input {
                    path: p.clone(),
                    msg: "no data rows".into(),
                });
            }
            Ok(Series {
                label: stem(p),
                points: plottable(&records),
            })
        })
        .collect()
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(
        || p.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn plottable(records: &[TrainRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.loss.is_finite() && r.loss > 0.0)
        .map(|r| (r.step as f64, r.loss))
        .collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_svg(series: &[Series]) -> Result<String, PlotError> {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y.log10());
        y_hi = y_hi.max(y.log10());
    }
    if !x_lo.is_finite() {
        return Err(PlotError::NothingToPlot);
    }
    if x_hi == x_lo {
        x_hi = x_lo + 1.0;
    }
    let (mut d_lo, mut d_hi) = (y_lo.floor(), y_hi.ceil());
    if d_hi == d_lo {
        d_lo -= 1.0;
        d_hi += 1.0;
    }
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (RIGHT - LEFT);
    let sy = |ly: f64| BOTTOM - (ly - d_lo) / (d_hi - d_lo) * (BOTTOM - TOP);

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );

    let decades = (d_hi - d_lo) as i64;
    let stride = (decades / 10 + 1).max(1);
    for k in (0..=decades).step_by(stride as usize) {
        let d = d_lo + k as f64;
        let y = sy(d);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{RIGHT}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"##,
            LEFT - 6.0,
            y + 4.0,
            d as i64
        );
    }
    for k in 0..=4 {
        let x = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(x),
            BOTTOM + 18.0,
            x.round()
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 40.0
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">loss</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );

    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::new();
        for (j, &(x, y)) in series.points.iter().enumerate() {
            if j > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.2},{:.2}", sx(x), sy(y.log10()));
        }
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>"#
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            RIGHT + 15.0,
            RIGHT + 35.0,
            RIGHT + 40.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
