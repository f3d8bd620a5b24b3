//! Deterministic line plots.
//!
//! Data coordinates are kept at full precision in `data-*` attributes of the
//! plot group so an emitted file can be parsed back into its series.

use std::fmt::{self, Write as _};

use crate::table::fmt_f64;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn name(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    }

    fn parse(s: &str) -> Option<Scale> {
        match s {
            "linear" => Some(Scale::Linear),
            "log" => Some(Scale::Log),
            _ => None,
        }
    }

    fn map(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub x: Scale,
    pub y: Scale,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Axes {
    pub fn new(x: Scale, y: Scale, title: &str, x_label: &str, y_label: &str) -> Self {
        Axes {
            x,
            y,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl PlotSeries {
    pub fn new(label: impl Into<String>, t: Vec<f64>, y: Vec<f64>) -> Self {
        PlotSeries {
            label: label.into(),
            t,
            y,
        }
    }

    /// Keeps at most about `max_points` evenly spaced samples, always
    /// including the last one.
    pub fn thinned(&self, max_points: usize) -> PlotSeries {
        let n = self.t.len();
        if n <= max_points || max_points < 2 {
            return self.clone();
        }
        let stride = n.div_ceil(max_points - 1);
        let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
        if idx.last() != Some(&(n - 1)) {
            idx.push(n - 1);
        }
        PlotSeries {
            label: self.label.clone(),
            t: idx.iter().map(|&i| self.t[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SvgError {
    NoSeries,
    Empty(String),
    Length(String),
    NotMonotone(String, usize),
    NonFinite(String, usize),
    NonPositive(String, usize),
}

impl fmt::Display for SvgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SvgError::NoSeries => write!(f, "no series to plot"),
            SvgError::Empty(l) => write!(f, "series `{l}` is empty"),
            SvgError::Length(l) => write!(f, "series `{l}` has mismatched t and y lengths"),
            SvgError::NotMonotone(l, i) => write!(f, "series `{l}`: t decreases at sample {i}"),
            SvgError::NonFinite(l, i) => write!(f, "series `{l}`: non-finite value at sample {i}"),
            SvgError::NonPositive(l, i) => {
                write!(f, "series `{l}`: nonpositive value at sample {i} on a log axis")
            }
        }
    }
}

impl std::error::Error for SvgError {}

fn check(series: &[PlotSeries], axes: &Axes) -> Result<(), SvgError> {
    if series.is_empty() {
        return Err(SvgError::NoSeries);
    }
    for s in series {
        let l = || s.label.clone();
        if s.t.len() != s.y.len() {
            return Err(SvgError::Length(l()));
        }
        if s.t.is_empty() {
            return Err(SvgError::Empty(l()));
        }
        for i in 0..s.t.len() {
            if !s.t[i].is_finite() || !s.y[i].is_finite() {
                return Err(SvgError::NonFinite(l(), i));
            }
            if i > 0 && s.t[i] < s.t[i - 1] {
                return Err(SvgError::NotMonotone(l(), i));
            }
            if (axes.x == Scale::Log && s.t[i] <= 0.0) || (axes.y == Scale::Log && s.y[i] <= 0.0) {
                return Err(SvgError::NonPositive(l(), i));
            }
        }
    }
    Ok(())
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick positions in mapped coordinates with their labels.
fn ticks(scale: Scale, lo: f64, hi: f64) -> Vec<(f64, String)> {
    match scale {
        Scale::Log => {
            let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
            let step = ((b - a) / 8).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(|e| e as f64)
                .filter(|e| *e >= lo - 1e-9 && *e <= hi + 1e-9)
                .map(|e| (e, format!("1e{e}")))
                .collect()
        }
        Scale::Linear => {
            let raw = (hi - lo) / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let first = (lo / step).ceil() as i64;
            let last = (hi / step).floor() as i64;
            (first..=last)
                .map(|k| {
                    let v = k as f64 * step;
                    (v, format!("{}", (v / mag).round() * mag))
                })
                .collect()
        }
    }
}

/// Renders `series` on an 800×600 canvas.
pub fn emit_svg(series: &[PlotSeries], axes: &Axes) -> Result<String, SvgError> {
    check(series, axes)?;
    let (xmin, xmax) = range(series.iter().flat_map(|s| s.t.iter().map(|v| axes.x.map(*v))));
    let (ymin, ymax) = range(series.iter().flat_map(|s| s.y.iter().map(|v| axes.y.map(*v))));
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |v: f64| MARGIN_L + (v - xmin) / (xmax - xmin) * pw;
    let py = |v: f64| MARGIN_T + (ymax - v) / (ymax - ymin) * ph;

    let mut out = String::new();
    let w = &mut out;
    // writing to a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&axes.title)
    );
    let _ = writeln!(
        w,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, label) in ticks(axes.x, xmin, xmax) {
        let x = px(v);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{label}</text>"#,
            b = MARGIN_T + ph,
            b2 = MARGIN_T + ph + 5.0,
            ty = MARGIN_T + ph + 20.0
        );
    }
    for (v, label) in ticks(axes.y, ymin, ymax) {
        let y = py(v);
        let _ = writeln!(
            w,
            r#"<line x1="{l2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="black"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{label}</text>"#,
            l2 = MARGIN_L - 5.0,
            tx = MARGIN_L - 8.0,
            ty = y + 4.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 15.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="20" y="{cy}" text-anchor="middle" transform="rotate(-90 20 {cy})">{}</text>"#,
        escape(&axes.y_label),
        cy = MARGIN_T + ph / 2.0
    );
    let _ = writeln!(
        w,
        r#"<g class="plot" data-xscale="{}" data-yscale="{}" data-xmin="{}" data-xmax="{}" data-ymin="{}" data-ymax="{}">"#,
        axes.x.name(),
        axes.y.name(),
        fmt_f64(xmin),
        fmt_f64(xmax),
        fmt_f64(ymin),
        fmt_f64(ymax)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let screen: Vec<String> = s
            .t
            .iter()
            .zip(&s.y)
            .map(|(t, y)| format!("{:.2},{:.2}", px(axes.x.map(*t)), py(axes.y.map(*y))))
            .collect();
        let data: Vec<String> = s
            .t
            .iter()
            .zip(&s.y)
            .map(|(t, y)| format!("{} {}", fmt_f64(*t), fmt_f64(*y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" data-label="{}" data-points="{}" points="{}"/>"#,
            escape(&s.label),
            data.join(";"),
            screen.join(" ")
        );
        let ly = MARGIN_T + 20.0 + 20.0 * k as f64;
        let lx = MARGIN_L + pw + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    let len = tag[start..].find('"')?;
    Some(&tag[start..start + len])
}

fn unescape(s: &str) -> String {
    s.replace("&quot;", "\"").replace("&gt;", ">").replace("&lt;", "<").replace("&amp;", "&")
}

/// Recovers the series and axis scales from a file written by [`emit_svg`].
pub fn parse_svg(svg: &str) -> Option<(Scale, Scale, Vec<PlotSeries>)> {
    let group = svg.lines().find(|l| l.starts_with("<g class=\"plot\""))?;
    let xs = Scale::parse(attr(group, "data-xscale")?)?;
    let ys = Scale::parse(attr(group, "data-yscale")?)?;
    let mut series = Vec::new();
    for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
        let label = unescape(attr(line, "data-label")?);
        let mut t = Vec::new();
        let mut y = Vec::new();
        for pair in attr(line, "data-points")?.split(';') {
            let (a, b) = pair.split_once(' ')?;
            t.push(a.parse().ok()?);
            y.push(b.parse().ok()?);
        }
        series.push(PlotSeries { label, t, y });
    }
    Some((xs, ys, series))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loglog() -> Axes {
        Axes::new(Scale::Log, Scale::Log, "t", "t", "y")
    }

    #[test]
    fn two_point_loglog() {
        let s = PlotSeries::new("a", vec![1.0, 10.0], vec![1.0, 0.1]);
        let svg = emit_svg(&[s.clone()], &loglog()).unwrap();
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts: Vec<(f64, f64)> = attr(line, "points")
            .unwrap()
            .split(' ')
            .map(|p| {
                let (a, b) = p.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(pts.len(), 2);
        // one decade in x spans the plot width, one decade in y its height
        let (dx, dy) = (pts[1].0 - pts[0].0, pts[1].1 - pts[0].1);
        assert!((dx - (WIDTH - MARGIN_L - MARGIN_R)).abs() < 0.02);
        assert!((dy - (HEIGHT - MARGIN_T - MARGIN_B)).abs() < 0.02);
        assert_eq!(parse_svg(&svg).unwrap().2, vec![s]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(emit_svg(&[], &loglog()), Err(SvgError::NoSeries));
        let neg = PlotSeries::new("a", vec![1.0, 2.0], vec![1.0, 0.0]);
        assert!(matches!(emit_svg(&[neg.clone()], &loglog()), Err(SvgError::NonPositive(_, 1))));
        let lin = Axes::new(Scale::Linear, Scale::Linear, "", "", "");
        assert!(emit_svg(&[neg], &lin).is_ok());
        let back = PlotSeries::new("b", vec![2.0, 1.0], vec![1.0, 1.0]);
        assert!(matches!(emit_svg(&[back], &lin), Err(SvgError::NotMonotone(_, 1))));
    }

    #[test]
    fn deterministic_and_round_trips() {
        let t: Vec<f64> = (1..500).map(|k| k as f64 * 0.37).collect();
        let a = PlotSeries::new("d<1>", t.clone(), t.iter().map(|x| 1.0 / (1.0 + x * x)).collect());
        let b = PlotSeries::new("e", t.clone(), t.iter().map(|x| (x * 0.1).exp()).collect());
        let axes = Axes::new(Scale::Linear, Scale::Log, "x & y", "t", "y");
        let one = emit_svg(&[a.clone(), b.clone()], &axes).unwrap();
        assert_eq!(one, emit_svg(&[a.clone(), b.clone()], &axes).unwrap());
        let (xs, ys, back) = parse_svg(&one).unwrap();
        assert_eq!((xs, ys), (Scale::Linear, Scale::Log));
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn thinning_keeps_ends() {
        let t: Vec<f64> = (0..10_001).map(|k| k as f64).collect();
        let s = PlotSeries::new("s", t.clone(), t.clone()).thinned(2000);
        assert!(s.t.len() <= 2001);
        assert_eq!(s.t[0], 0.0);
        assert_eq!(*s.t.last().unwrap(), 10_000.0);
    }

    #[test]
    fn constant_series_gets_a_range() {
        let s = PlotSeries::new("c", vec![1.0, 2.0, 3.0], vec![5.0; 3]);
        let svg = emit_svg(&[s], &Axes::new(Scale::Linear, Scale::Linear, "", "", "")).unwrap();
        assert!(!svg.contains("NaN"));
    }
}
