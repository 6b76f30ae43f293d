//! Static SVG charts. Output carries no timestamps, so it is deterministic.

use std::fmt::Write as _;

use sarima_core::{Forecast, MonthStamp, Series};

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";
const LINE: &str = "#1f4e79";
const ACCENT: &str = "#c0392b";
const BAND: &str = "#9ecae1";

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Frame {
    fn new(left: f64, top: f64, width: f64, height: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 1.0, a + 1.0) };
        Self {
            left,
            top,
            width,
            height,
            x_range: pad(x_range),
            y_range: pad(y_range),
        }
    }

    fn x(&self, v: f64) -> f64 {
        self.left + (v - self.x_range.0) / (self.x_range.1 - self.x_range.0) * self.width
    }

    fn y(&self, v: f64) -> f64 {
        self.top + self.height - (v - self.y_range.0) / (self.y_range.1 - self.y_range.0) * self.height
    }

    fn points(&self, pts: impl IntoIterator<Item = (f64, f64)>) -> String {
        pts.into_iter()
            .map(|(x, y)| format!("{:.2},{:.2}", self.x(x), self.y(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Roughly `count` round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / count.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + step * 1e-9 {
        out.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    out
}

fn extent(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn pad_range((lo, hi): (f64, f64), frac: f64) -> (f64, f64) {
    let d = (hi - lo).abs().max(1e-12) * frac;
    (lo - d, hi + d)
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open(width: u32, height: u32) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(svg: &mut String, f: &Frame, x_ticks: &[(f64, String)], title: &str) {
    let (b, l) = (f.top + f.height, f.left);
    let _ = writeln!(
        svg,
        "<rect x=\"{l:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
        f.top, f.width, f.height
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-weight=\"bold\" text-anchor=\"middle\">{}</text>",
        l + f.width / 2.0,
        f.top - 8.0,
        escape(title)
    );
    for v in ticks(f.y_range.0, f.y_range.1, 5) {
        let y = f.y(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{l:.2}\" y2=\"{y:.2}\" stroke=\"#444\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" {FONT} text-anchor=\"end\">{}</text>",
            l - 4.0,
            l - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    for (v, label) in x_ticks {
        let x = f.x(*v);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{b:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\
             <text x=\"{x:.2}\" y=\"{:.2}\" {FONT} text-anchor=\"middle\">{}</text>",
            b + 4.0,
            b + 16.0,
            escape(label)
        );
    }
}

fn polyline(svg: &mut String, f: &Frame, pts: impl IntoIterator<Item = (f64, f64)>, color: &str, extra: &str) {
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" {extra}/>",
        f.points(pts)
    );
}

/// January ticks for a monthly axis indexed from `start`, thinned to ~8 labels.
fn year_ticks(start: MonthStamp, len: usize) -> Vec<(f64, String)> {
    let years: Vec<(f64, String)> = (0..len)
        .filter(|&i| start.advance(i as i64).month() == 1)
        .map(|i| (i as f64, start.advance(i as i64).year().to_string()))
        .collect();
    let stride = years.len().div_ceil(8).max(1);
    years.into_iter().step_by(stride).collect()
}

/// One panel per category, two columns.
pub fn series_figure(series: &[(String, &Series)]) -> String {
    let (pw, ph) = (420.0, 220.0);
    let rows = series.len().div_ceil(2).max(1);
    let (w, h) = (2.0 * pw, rows as f64 * ph);
    let mut svg = open(w as u32, h as u32);
    for (k, (name, s)) in series.iter().enumerate() {
        let (left, top) = ((k % 2) as f64 * pw + 60.0, (k / 2) as f64 * ph + 30.0);
        let f = Frame::new(
            left,
            top,
            pw - 80.0,
            ph - 70.0,
            (0.0, (s.len().max(2) - 1) as f64),
            pad_range(extent(s.values().iter().copied()), 0.05),
        );
        axes(&mut svg, &f, &year_ticks(s.start(), s.len()), name);
        polyline(&mut svg, &f, s.values().iter().enumerate().map(|(i, &v)| (i as f64, v)), LINE, "");
    }
    svg.push_str("</svg>\n");
    svg
}

/// Residual histogram beside a normal QQ plot.
pub fn residual_figure(name: &str, residuals: &[f64], qq: &[(f64, f64)]) -> String {
    let mut svg = open(840, 320);
    let (lo, hi) = extent(residuals.iter().copied());
    let bins = ((residuals.len() as f64).sqrt().ceil() as usize).clamp(5, 30);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &r in residuals {
        let b = (((r - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&1) as f64;
    let f = Frame::new(60.0, 40.0, 330.0, 230.0, (lo, lo + width * bins as f64), (0.0, top * 1.05));
    let x_ticks: Vec<(f64, String)> = ticks(f.x_range.0, f.x_range.1, 5)
        .into_iter()
        .map(|v| (v, fmt_tick(v)))
        .collect();
    axes(&mut svg, &f, &x_ticks, &format!("{name}: standardized residuals"));
    for (i, &c) in counts.iter().enumerate() {
        let x0 = f.x(lo + i as f64 * width);
        let x1 = f.x(lo + (i + 1) as f64 * width);
        let y = f.y(c as f64);
        let _ = writeln!(
            svg,
            "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{BAND}\" stroke=\"{LINE}\"/>",
            x1 - x0,
            f.y(0.0) - y
        );
    }

    let theo = extent(qq.iter().map(|p| p.0));
    let emp = extent(qq.iter().map(|p| p.1));
    let both = (theo.0.min(emp.0), theo.1.max(emp.1));
    let g = Frame::new(480.0, 40.0, 330.0, 230.0, pad_range(theo, 0.05), pad_range(both, 0.05));
    let x_ticks: Vec<(f64, String)> = ticks(g.x_range.0, g.x_range.1, 5)
        .into_iter()
        .map(|v| (v, fmt_tick(v)))
        .collect();
    axes(&mut svg, &g, &x_ticks, &format!("{name}: normal QQ"));
    polyline(&mut svg, &g, [(theo.0, theo.0), (theo.1, theo.1)], ACCENT, "stroke-dasharray=\"4 3\"");
    for &(x, y) in qq {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{LINE}\"/>",
            g.x(x),
            g.y(y)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Recent history, holdout actuals and forecasts with their interval band.
pub fn forecast_figure(name: &str, history: &Series, actual: &Series, fc: &Forecast) -> String {
    let mut svg = open(760, 320);
    let shown = history.len().min(36);
    let first = history.len() - shown;
    let start = history.month_at(first);
    let offset = |m: MonthStamp| start.months_until(&m) as f64;
    let hist: Vec<(f64, f64)> = (first..history.len())
        .map(|i| (offset(history.month_at(i)), history.values()[i]))
        .collect();
    let act: Vec<(f64, f64)> = actual.iter().map(|(m, v)| (offset(m), v)).collect();
    let fx: Vec<f64> = (0..fc.horizon).map(|i| offset(fc.month(i))).collect();
    let y = extent(
        hist.iter()
            .chain(&act)
            .map(|p| p.1)
            .chain(fc.lower.iter().copied())
            .chain(fc.upper.iter().copied()),
    );
    let x_max = fx.last().copied().unwrap_or(0.0).max(act.last().map_or(0.0, |p| p.0));
    let f = Frame::new(70.0, 40.0, 650.0, 230.0, (0.0, x_max), pad_range(y, 0.05));
    let len = x_max as usize + 1;
    axes(
        &mut svg,
        &f,
        &year_ticks(start, len),
        &format!("{name}: forecasts with {:.0}% prediction intervals", fc.level * 100.0),
    );
    let band: Vec<(f64, f64)> = fx
        .iter()
        .zip(&fc.upper)
        .map(|(&x, &u)| (x, u))
        .chain(fx.iter().zip(&fc.lower).rev().map(|(&x, &l)| (x, l)))
        .collect();
    let _ = writeln!(
        svg,
        "<polygon points=\"{}\" fill=\"{BAND}\" fill-opacity=\"0.6\" stroke=\"none\"/>",
        f.points(band)
    );
    polyline(&mut svg, &f, hist, LINE, "");
    polyline(&mut svg, &f, act, LINE, "stroke-dasharray=\"2 2\"");
    polyline(&mut svg, &f, fx.iter().copied().zip(fc.point.iter().copied()), ACCENT, "");
    let _ = writeln!(
        svg,
        "<text x=\"80\" y=\"300\" {FONT}><tspan fill=\"{LINE}\">observed</tspan>  \
         <tspan fill=\"{ACCENT}\">forecast</tspan>  <tspan fill=\"#3182bd\">prediction interval</tspan></text>"
    );
    svg.push_str("</svg>\n");
    svg
}
