use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::points::PointSet;

use super::{histogram, quantile_sorted, Binning};

const W: f64 = 480.0;
const H: f64 = 280.0;
const PAD: f64 = 36.0;

/// A named set of values drawn in one color.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

/// Self-contained static HTML page with inline SVG charts.
#[derive(Debug, Clone)]
pub struct HtmlReport {
    title: String,
    body: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Piecewise-linear blue-green-yellow ramp over `t` in [0, 1].
fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] = [
        (68.0, 1.0, 84.0),
        (49.0, 104.0, 142.0),
        (53.0, 183.0, 121.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 1.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let c = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn sx(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn sy(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }

    fn axes(&self, svg: &mut String) {
        let _ = write!(
            svg,
            r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        for (v, anchor, x, y) in [
            (self.x0, "start", PAD, H - PAD + 14.0),
            (self.x1, "end", W - PAD, H - PAD + 14.0),
        ] {
            let _ = write!(
                svg,
                r#"<text x="{x}" y="{y}" font-size="11" text-anchor="{anchor}">{}</text>"#,
                fmt_num(v)
            );
        }
        for (v, y) in [(self.y0, H - PAD), (self.y1, PAD + 10.0)] {
            let _ = write!(
                svg,
                r#"<text x="{}" y="{y}" font-size="11" text-anchor="end">{}</text>"#,
                PAD - 4.0,
                fmt_num(v)
            );
        }
    }
}

fn open_svg(title: &str) -> String {
    format!(
        r#"<figure><svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}"><text x="{}" y="18" font-size="13" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    )
}

fn legend(svg: &mut String, series: &[Series<'_>]) {
    for (i, s) in series.iter().enumerate() {
        let y = PAD + 14.0 + 14.0 * i as f64;
        let _ = write!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            W - PAD - 110.0,
            y - 9.0,
            s.color,
            W - PAD - 96.0,
            y,
            escape(s.label)
        );
    }
}

impl HtmlReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            body: String::new(),
        }
    }

    pub fn heading(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.body, "<h2>{}</h2>", escape(text));
        self
    }

    pub fn paragraph(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.body, "<p>{}</p>", escape(text));
        self
    }

    pub fn table(&mut self, headers: &[&str], rows: &[Vec<String>]) -> &mut Self {
        self.body.push_str("<table>\n<tr>");
        for h in headers {
            let _ = write!(self.body, "<th>{}</th>", escape(h));
        }
        self.body.push_str("</tr>\n");
        for r in rows {
            self.body.push_str("<tr>");
            for c in r {
                let _ = write!(self.body, "<td>{}</td>", escape(c));
            }
            self.body.push_str("</tr>\n");
        }
        self.body.push_str("</table>\n");
        self
    }

    /// Overlaid step histograms with solid median and dashed quartile lines
    /// per series. Non-finite values are left out.
    pub fn histogram(&mut self, title: &str, series: &[Series<'_>], bins: usize) -> &mut Self {
        let finite = |s: &Series<'_>| -> Vec<f64> {
            let mut v: Vec<f64> = s.values.iter().copied().filter(|v| v.is_finite()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let sorted: Vec<Vec<f64>> = series.iter().map(finite).collect();
        let lo = sorted.iter().filter_map(|v| v.first()).copied().fold(f64::INFINITY, f64::min);
        let hi = sorted.iter().filter_map(|v| v.last()).copied().fold(f64::NEG_INFINITY, f64::max);
        let mut svg = open_svg(title);
        if lo.is_finite() {
            let width = if hi > lo { (hi - lo) / bins.max(1) as f64 } else { 1.0 };
            let hists: Vec<Vec<(f64, usize)>> = sorted
                .iter()
                .map(|v| {
                    // align every series to the shared grid
                    let mut counts = vec![0usize; bins.max(1)];
                    for x in v {
                        let b = (((x - lo) / width).floor() as usize).min(counts.len() - 1);
                        counts[b] += 1;
                    }
                    counts
                        .into_iter()
                        .enumerate()
                        .map(|(i, c)| (lo + i as f64 * width, c))
                        .collect()
                })
                .collect();
            let ymax = hists.iter().flatten().map(|h| h.1).max().unwrap_or(1).max(1) as f64;
            let frame = Frame::new(lo, lo + width * bins.max(1) as f64, 0.0, ymax);
            frame.axes(&mut svg);
            for ((h, s), v) in hists.iter().zip(series).zip(&sorted) {
                let mut path = String::new();
                for (left, count) in h {
                    let (x0, x1, y) = (frame.sx(*left), frame.sx(left + width), frame.sy(*count as f64));
                    let _ = write!(
                        path,
                        "{}{x0:.1},{y:.1} L{x1:.1},{y:.1} ",
                        if path.is_empty() { "M" } else { "L" }
                    );
                }
                let _ = write!(
                    svg,
                    r#"<path d="{path}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    s.color
                );
                for (p, dash) in [(0.5, ""), (0.25, r#" stroke-dasharray="4 3""#), (0.75, r#" stroke-dasharray="4 3""#)] {
                    if v.is_empty() {
                        continue;
                    }
                    let x = frame.sx(quantile_sorted(v, p));
                    let _ = write!(
                        svg,
                        r#"<line x1="{x:.1}" x2="{x:.1}" y1="{PAD}" y2="{}" stroke="{}"{dash}/>"#,
                        H - PAD,
                        s.color
                    );
                }
            }
            legend(&mut svg, series);
        }
        svg.push_str("</svg></figure>\n");
        self.body.push_str(&svg);
        self
    }

    /// 2-d projection on coordinates `axes`, colored by `colors` (min..max
    /// mapped onto a ramp) or drawn in one color. At most `max_points`
    /// evenly strided rows are drawn.
    pub fn scatter(
        &mut self,
        title: &str,
        points: &PointSet,
        axes: (usize, usize),
        colors: Option<&[f64]>,
        max_points: usize,
    ) -> &mut Self {
        let mut svg = open_svg(title);
        let n = points.len();
        if n > 0 && axes.0 < points.dim() && axes.1 < points.dim() {
            let step = n.div_ceil(max_points.max(1)).max(1);
            let (lo, hi) = points.bounds();
            let frame = Frame::new(lo[axes.0], hi[axes.0], lo[axes.1], hi[axes.1]);
            frame.axes(&mut svg);
            let (cmin, cmax) = colors.map_or((0.0, 1.0), |c| {
                let mut f: Vec<f64> = c.iter().copied().filter(|v| v.is_finite()).collect();
                f.sort_by(f64::total_cmp);
                // clip the color range to the central 98% so outliers do not
                // wash out the ramp
                (quantile_sorted(&f, 0.01), quantile_sorted(&f, 0.99))
            });
            for i in (0..n).step_by(step) {
                let r = points.row(i);
                let fill = match colors {
                    Some(c) => ramp((c[i] - cmin) / (cmax - cmin).max(1e-12)),
                    None => "#3366aa".to_string(),
                };
                let _ = write!(
                    svg,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="1.6" fill="{fill}"/>"#,
                    frame.sx(r[axes.0]),
                    frame.sy(r[axes.1])
                );
            }
            if colors.is_some() {
                let _ = write!(
                    svg,
                    r#"<text x="{}" y="{}" font-size="11" text-anchor="end">color {} .. {}</text>"#,
                    W - PAD,
                    H - 6.0,
                    fmt_num(cmin),
                    fmt_num(cmax)
                );
            }
        }
        svg.push_str("</svg></figure>\n");
        self.body.push_str(&svg);
        self
    }

    /// Polylines over shared x values, with an optional horizontal reference
    /// line (e.g. the ground-truth ID).
    pub fn line_chart(
        &mut self,
        title: &str,
        x: &[f64],
        series: &[Series<'_>],
        reference: Option<f64>,
    ) -> &mut Self {
        let mut svg = open_svg(title);
        let ys = series
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .chain(reference)
            .filter(|v| v.is_finite());
        let (ylo, yhi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !x.is_empty() && ylo.is_finite() {
            let xlo = x.iter().copied().fold(f64::INFINITY, f64::min);
            let xhi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let frame = Frame::new(xlo, xhi, ylo.min(0.0), yhi * 1.05);
            frame.axes(&mut svg);
            if let Some(r) = reference {
                let y = frame.sy(r);
                let _ = write!(
                    svg,
                    r##"<line x1="{PAD}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#888" stroke-dasharray="2 3"/>"##,
                    W - PAD
                );
            }
            for s in series {
                let pts: Vec<String> = x
                    .iter()
                    .zip(s.values)
                    .filter(|(_, y)| y.is_finite())
                    .map(|(a, b)| format!("{:.1},{:.1}", frame.sx(*a), frame.sy(*b)))
                    .collect();
                let _ = write!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    pts.join(" "),
                    s.color
                );
            }
            legend(&mut svg, series);
        }
        svg.push_str("</svg></figure>\n");
        self.body.push_str(&svg);
        self
    }

    /// Histogram counts as a table, for readers who want the numbers.
    pub fn histogram_table(&mut self, values: &[f64], bins: usize) -> Result<&mut Self> {
        let rows: Vec<Vec<String>> = histogram(values, Binning::Count(bins))?
            .into_iter()
            .map(|(l, c)| vec![fmt_num(l), c.to_string()])
            .collect();
        Ok(self.table(&["bin left", "count"], &rows))
    }

    pub fn render(&self) -> String {
        format!(
            "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{t}</title>\n<style>\nbody {{ font-family: sans-serif; max-width: 1040px; margin: 2em auto; color: #222; }}\nfigure {{ display: inline-block; margin: 0.5em; }}\ntable {{ border-collapse: collapse; margin: 1em 0; }}\ntd, th {{ border: 1px solid #ccc; padding: 2px 8px; text-align: right; }}\n</style>\n</head>\n<body>\n<h1>{t}</h1>\n{body}</body>\n</html>\n",
            t = escape(&self.title),
            body = self.body
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}
