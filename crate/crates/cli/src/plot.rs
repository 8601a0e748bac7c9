//! Deterministic SVG line charts with a log10 value axis.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pvtune_core::Phase;

use crate::error::CliError;
use crate::output::{median, read_trace_csv, split_runs, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    None,
    Circle,
    Square,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, Marker)>,
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
/// Most markers drawn per phase per series; longer series mark every n-th point.
const MAX_MARKERS: usize = 150;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// Per-record median over runs, carrying each run's last value forward.
/// P records sit half an iteration before the V record of the same iteration.
pub fn median_curve(label: String, runs: &[&[pvtune_core::TraceRecord]]) -> Series {
    let longest = runs.iter().copied().max_by_key(|r| r.len()).unwrap_or(&[]);
    let points = (0..longest.len())
        .map(|k| {
            let losses: Vec<f64> = runs.iter().map(|r| r[k.min(r.len() - 1)].loss).collect();
            let rec = &longest[k];
            let (x, marker) = match rec.phase {
                Phase::Init => (rec.iteration as f64, Marker::None),
                Phase::P => (rec.iteration as f64 - 0.5, Marker::Circle),
                Phase::V => (rec.iteration as f64, Marker::Square),
            };
            (x, median(&losses), marker)
        })
        .collect();
    Series { label, points }
}

fn log_floor(series: &[Series]) -> f64 {
    let min_pos = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|&v| v > 0.0 && v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if min_pos.is_finite() {
        min_pos.log10().floor() - 1.0
    } else {
        -20.0
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series. Non-positive values are drawn on the bottom edge.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let floor = log_floor(series);
    let ly = |v: f64| if v > 0.0 && v.is_finite() { v.log10().max(floor) } else { floor };
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y0 = floor;
    let mut y1 = all().map(|p| ly(p.1)).fold(floor, f64::max).ceil();
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + (y1 - ly(v)) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, esc(title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    let decades = (y1 - y0).round() as i64;
    let step = (decades / 10).max(1);
    let mut e = y0 as i64;
    while e <= y1 as i64 {
        let y = TOP + (y1 - e as f64) / (y1 - y0) * ph;
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
        e += step;
    }
    for k in 0..=5 {
        let x = x0 + (x1 - x0) * k as f64 / 5.0;
        let px = sx(x);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_tick(x));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, esc(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(y_label)
    );

    for (n, ser) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let path: Vec<String> = ser.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for marker in [Marker::Circle, Marker::Square] {
            let pts: Vec<&(f64, f64, Marker)> = ser.points.iter().filter(|p| p.2 == marker).collect();
            let stride = pts.len().div_ceil(MAX_MARKERS).max(1);
            for p in pts.iter().step_by(stride) {
                let (px, py) = (sx(p.0), sy(p.1));
                match marker {
                    Marker::Circle => {
                        let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{color}"/>"#);
                    }
                    Marker::Square => {
                        let _ = writeln!(
                            s,
                            r#"<rect x="{:.2}" y="{:.2}" width="5" height="5" fill="white" stroke="{color}"/>"#,
                            px - 2.5,
                            py - 2.5
                        );
                    }
                    Marker::None => {}
                }
            }
        }
        let ly_ = TOP + 10.0 + 18.0 * n as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly_:.2}" x2="{:.2}" y2="{ly_:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly_ + 4.0, esc(&ser.label));
    }
    let ly_ = TOP + 10.0 + 18.0 * series.len() as f64 + 10.0;
    let lx = LEFT + pw + 15.0;
    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{ly_:.2}" r="2.5" fill="black"/>"#, lx + 10.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">P step</text>"#, lx + 26.0, ly_ + 4.0);
    let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="5" height="5" fill="white" stroke="black"/>"#, lx + 7.5, ly_ + 15.5);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">V step</text>"#, lx + 26.0, ly_ + 22.0);
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.1}")
    }
}

/// `trace_<algorithm>_c<c>.csv` → `(algorithm, c)`.
fn parse_trace_name(name: &str) -> Option<(String, usize)> {
    let stem = name.strip_prefix("trace_")?.strip_suffix(".csv")?;
    let (algo, c) = stem.rsplit_once("_c")?;
    Some((algo.to_string(), c.parse().ok()?))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    Ok(paths)
}

/// Renders every trace CSV in `dir` into `loss.svg` (one median line per file),
/// and `smoothness_summary.csv`, if present, into `smoothness.svg`.
pub fn plot_dir(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut groups: Vec<(String, usize, PathBuf)> = Vec::new();
    for p in sorted_entries(dir)? {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some((algo, c)) = parse_trace_name(name) {
            groups.push((algo, c, p));
        }
    }
    groups.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));

    let mut written = Vec::new();
    if !groups.is_empty() {
        let mut series = Vec::with_capacity(groups.len());
        for (algo, c, path) in &groups {
            let records = read_trace_csv(path)?;
            if records.is_empty() {
                return Err(CliError::EmptySeries(path.clone()));
            }
            series.push(median_curve(format!("{algo} c={c}"), &split_runs(&records)));
        }
        let svg = render_svg("median loss over runs", "iteration", "loss (log10)", &series);
        written.push(write_text(&dir.join("loss.svg"), &svg)?);
    }

    let smooth = dir.join("smoothness_summary.csv");
    if smooth.exists() {
        let series = smoothness_series(&smooth)?;
        let svg = render_svg("smoothness estimates by subspace size", "subspace size", "median estimate (log10)", &series);
        written.push(write_text(&dir.join("smoothness.svg"), &svg)?);
    }
    if written.is_empty() {
        return Err(CliError::NothingToPlot(dir.to_path_buf()));
    }
    Ok(written)
}

fn smoothness_series(path: &Path) -> Result<Vec<Series>, CliError> {
    let malformed = |line: u64, message: String| CliError::MalformedCsv { path: path.to_path_buf(), line, message };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let names = ["trajectory", "power iteration", "exact"];
    let mut series: Vec<Series> = names.iter().map(|n| Series { label: n.to_string(), points: Vec::new() }).collect();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| malformed(line, e.to_string()))?;
        let num = |k: usize| -> Result<f64, CliError> {
            row.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| malformed(line, format!("column {k}: not a number")))
        };
        let size = num(0)?;
        for (j, s) in series.iter_mut().enumerate() {
            s.points.push((size, num(2 + j)?, Marker::Square));
        }
    }
    if series[0].points.is_empty() {
        return Err(CliError::EmptySeries(path.to_path_buf()));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::{write_trace_csv, TRACE_COLUMNS};
    use pvtune_core::TraceRecord;

    fn rec(seed: u64, iteration: usize, phase: Phase, loss: f64) -> TraceRecord {
        TraceRecord { run_seed: seed, iteration, phase, loss, num_unique: 2, step_norm_rel: 0.0, l_subspace: None, tau_used: None }
    }

    #[test]
    fn names_parse() {
        assert_eq!(parse_trace_name("trace_pv_exact_c10.csv"), Some(("pv_exact".into(), 10)));
        assert_eq!(parse_trace_name("trace_sr-0-2_c80.csv"), Some(("sr-0-2".into(), 80)));
        assert_eq!(parse_trace_name("summary.csv"), None);
    }

    #[test]
    fn median_carries_short_runs_forward() {
        let a = [rec(1, 0, Phase::Init, 4.0), rec(1, 1, Phase::P, 2.0), rec(1, 1, Phase::V, 1.0)];
        let b = [rec(2, 0, Phase::Init, 8.0)];
        let c = [rec(3, 0, Phase::Init, 6.0), rec(3, 1, Phase::P, 5.0)];
        let s = median_curve("x".into(), &[&a, &b, &c]);
        let ys: Vec<f64> = s.points.iter().map(|p| p.1).collect();
        assert_eq!(ys, vec![6.0, 5.0, 5.0]);
        assert_eq!(s.points[1].0, 0.5);
        assert_eq!(s.points[2].2, Marker::Square);
    }

    #[test]
    fn empty_series_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("trace_pv_exact_c1.csv"), format!("{}\n", TRACE_COLUMNS.join(","))).unwrap();
        assert!(matches!(plot_dir(dir.path()), Err(CliError::EmptySeries(_))));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(plot_dir(empty.path()), Err(CliError::NothingToPlot(_))));
    }

    #[test]
    fn one_line_per_file_and_stable_bytes() {
        let dir = tempfile::tempdir().unwrap();
        for c in 1..=3 {
            let run = vec![rec(7, 0, Phase::Init, 1.0), rec(7, 1, Phase::P, 0.1 / c as f64), rec(7, 1, Phase::V, 0.0)];
            write_trace_csv(&dir.path().join(format!("trace_pv_exact_c{c}.csv")), &[run]).unwrap();
        }
        let out = plot_dir(dir.path()).unwrap();
        let first = std::fs::read(&out[0]).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert_eq!(text.matches("<polyline").count(), 3);
        assert!(text.contains("<circle") && text.contains("P step"));
        plot_dir(dir.path()).unwrap();
        assert_eq!(std::fs::read(&out[0]).unwrap(), first);
    }
}
