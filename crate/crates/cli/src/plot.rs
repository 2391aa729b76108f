//! Log-log SVG plots of sweep and comparison tables.

use std::fmt::Write as _;

use wavesense::{Error, Result};

/// One point of a series with its confidence whisker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

/// A parsed input table: its data, plus the exact text for pass-through.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub x_label: &'static str,
    pub series: Vec<Series>,
    pub text: String,
}

fn field<'a>(row: &'a [&'a str], header: &[&str], name: &str, line: usize) -> Result<&'a str> {
    let i = header
        .iter()
        .position(|h| *h == name)
        .ok_or_else(|| Error::InvalidInput(format!("missing column `{name}`")))?;
    row.get(i).copied().ok_or_else(|| Error::InvalidInput(format!("line {line}: missing `{name}`")))
}

fn number(row: &[&str], header: &[&str], name: &str, line: usize) -> Result<f64> {
    let v = field(row, header, name, line)?;
    v.trim().parse().map_err(|_| Error::InvalidInput(format!("line {line}: `{v}` is not a number")))
}

fn push(series: &mut Vec<Series>, name: String, p: Point) {
    match series.iter_mut().find(|s| s.name == name) {
        Some(s) => s.points.push(p),
        None => series.push(Series { name, points: vec![p] }),
    }
}

/// Parses a sweep table (one series per design, `x = n`) or a comparison
/// report (series per function and design, `x = sigma`).
pub fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::InvalidInput("empty plot input".into()))?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    let is_sweep = header.contains(&"design");
    let is_report = header.contains(&"uniform_median");
    if !is_sweep && !is_report {
        return Err(Error::InvalidInput("unrecognized table: expected a sweep or comparison CSV".into()));
    }
    let mut series = Vec::new();
    for (number_, line) in lines {
        let line_no = number_ + 1;
        let row: Vec<&str> = line.split(',').map(str::trim).collect();
        if row.len() != header.len() {
            return Err(Error::InvalidInput(format!("line {line_no}: expected {} fields", header.len())));
        }
        if is_sweep {
            let p = Point {
                x: number(&row, &header, "n", line_no)?,
                y: number(&row, &header, "median", line_no)?,
                lo: number(&row, &header, "lo", line_no)?,
                hi: number(&row, &header, "hi", line_no)?,
            };
            push(&mut series, field(&row, &header, "design", line_no)?.to_string(), p);
        } else {
            let function = field(&row, &header, "function", line_no)?;
            let x = number(&row, &header, "sigma", line_no)?;
            for design in ["uniform", "adaptive"] {
                let p = Point {
                    x,
                    y: number(&row, &header, &format!("{design}_median"), line_no)?,
                    lo: number(&row, &header, &format!("{design}_lo"), line_no)?,
                    hi: number(&row, &header, &format!("{design}_hi"), line_no)?,
                };
                push(&mut series, format!("{function} {design}"), p);
            }
        }
    }
    for s in &series {
        if let Some(p) = s.points.iter().find(|p| !(p.x > 0.0 && p.y > 0.0 && p.lo > 0.0 && p.hi > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "series `{}` has a non-positive value at x = {}; log axes need positive data",
                s.name, p.x
            )));
        }
    }
    let x_label = if is_sweep { "n" } else { "sigma" };
    Ok(Table { x_label, series, text: text.to_string() })
}

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Maps `[10^lo, 10^hi]` logarithmically onto `[start, end]` pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogAxis {
    pub lo: f64,
    pub hi: f64,
    pub start: f64,
    pub end: f64,
}

impl LogAxis {
    /// Axis covering `values`, padded to whole decades when degenerate.
    pub fn covering(values: impl Iterator<Item = f64>, start: f64, end: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v.log10()), b.max(v.log10()))
        });
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        LogAxis { lo, hi, start, end }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.start + (v.log10() - self.lo) / (self.hi - self.lo) * (self.end - self.start)
    }

    /// Powers of ten within the axis, or the endpoints when none fit.
    pub fn ticks(&self) -> Vec<f64> {
        let ticks: Vec<f64> = (self.lo.ceil() as i32..=self.hi.floor() as i32).map(|e| 10f64.powi(e)).collect();
        if ticks.is_empty() {
            vec![10f64.powf(self.lo), 10f64.powf(self.hi)]
        } else {
            ticks
        }
    }
}

fn tick_label(v: f64) -> String {
    if (1e-3..1e5).contains(&v) {
        format!("{}", (v * 1e4).round() / 1e4)
    } else {
        format!("{v:.0e}")
    }
}

/// Axes for the table's data (or a unit decade when empty).
pub fn axes(table: &Table) -> (LogAxis, LogAxis) {
    let points = || table.series.iter().flat_map(|s| &s.points);
    let x = LogAxis::covering(points().map(|p| p.x), LEFT, WIDTH - RIGHT);
    let y = LogAxis::covering(points().flat_map(|p| [p.lo, p.hi, p.y]), HEIGHT - BOTTOM, TOP);
    (x, y)
}

pub fn render_svg(table: &Table) -> String {
    let (xa, ya) = axes(table);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (xa.start, xa.end, ya.start, ya.end);
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    for t in xa.ticks() {
        let px = xa.map(t);
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}"/>"#, y0 + 5.0);
    }
    for t in ya.ticks() {
        let py = ya.map(t);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}"/>"#, x0 - 5.0);
    }
    let _ = writeln!(svg, "</g>");
    for t in xa.ticks() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            xa.map(t),
            y0 + 18.0,
            tick_label(t)
        );
    }
    for t in ya.ticks() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            ya.map(t) + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} (log scale)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        table.x_label
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">median max error (log scale)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (i, s) in table.series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        let coords: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", xa.map(p.x), ya.map(p.y))).collect();
        let _ = writeln!(svg, r#"<g class="series" data-name="{}" stroke="{colour}" fill="{colour}">"#, s.name);
        let _ = writeln!(svg, r#"<polyline fill="none" points="{}"/>"#, coords.join(" "));
        for p in &pts {
            let (px, py) = (xa.map(p.x), ya.map(p.y));
            let _ = writeln!(
                svg,
                r#"<line class="whisker" x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}"/>"#,
                ya.map(p.lo),
                ya.map(p.hi)
            );
            let _ = writeln!(svg, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3"/>"#);
        }
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}"/>"#, x1 + 15.0, x1 + 35.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" stroke="none" fill="black">{}</text>"#,
            x1 + 40.0,
            ly + 4.0,
            s.name
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}
