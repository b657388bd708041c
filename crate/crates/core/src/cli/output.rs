//! CSV tables with fixed formatting and hand-written SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use super::CliError;

/// Nine significant digits; plain decimals for moderate exponents, otherwise
/// scientific. Negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..=15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let rounded: f64 = sci.parse().expect("valid float");
        format!("{rounded:.decimals$}")
    } else {
        sci
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_num(v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.to_csv())
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Reads a two-column `frequency_mhz,contrast` CSV (extra columns ignored).
pub fn read_spectrum_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let (fi, ci) = (col("frequency_mhz")?, col("contrast")?);
    let (mut freqs, mut contrasts) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            bad(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<f64, CliError> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("line {line}: cannot parse {s:?} as a number")))
        };
        freqs.push(field(fi)?);
        contrasts.push(field(ci)?);
    }
    if let Some(k) = freqs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(bad(format!(
            "line {}: frequencies must be strictly ascending",
            k + 3
        )));
    }
    Ok((freqs, contrasts))
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const ML: f64 = 80.0;
const MR: f64 = 30.0;
const MT: f64 = 30.0;
const MB: f64 = 60.0;

pub struct Series<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub color: &'a str,
    pub label: &'a str,
    pub markers: bool,
}

/// Shaded region between `ys` and a baseline value.
pub struct Band<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub base: f64,
    pub color: &'a str,
    pub opacity: f64,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = min_max(xs);
        let (mut y0, mut y1) = min_max(ys);
        if x1 <= x0 {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if y1 <= y0 {
            y0 -= 1.0;
            y1 += 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        Self {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)
    }
}

fn min_max(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

fn header(svg: &mut String) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
}

fn axes(svg: &mut String, fr: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (ML, W - MR, MT, H - MB);
    let _ = writeln!(
        svg,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for k in 0..=4 {
        let fx = fr.x0 + (fr.x1 - fr.x0) * k as f64 / 4.0;
        let fy = fr.y0 + (fr.y1 - fr.y0) * k as f64 / 4.0;
        let (px, py) = (fr.px(fx), fr.py(fy));
        let _ = writeln!(svg, r#"<line x1="{px:.1}" y1="{b}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            b + 20.0,
            tick(fx)
        );
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{py:.1}" x2="{l}" y2="{py:.1}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 8.0,
            py + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        0.5 * (l + r),
        H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        0.5 * (t + b),
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(svg: &mut String, fr: &Frame, xs: &[f64], ys: &[f64], color: &str) {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| format!("{:.2},{:.2}", fr.px(*x), fr.py(*y)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        pts.join(" ")
    );
}

fn legend(svg: &mut String, entries: &[(&str, &str)]) {
    for (k, (label, color)) in entries.iter().filter(|e| !e.0.is_empty()).enumerate() {
        let y = MT + 15.0 + 16.0 * k as f64;
        let x = W - MR - 150.0;
        let _ = writeln!(svg, r#"<rect x="{x}" y="{:.1}" width="12" height="4" fill="{color}"/>"#, y - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, escape(label));
    }
}

pub fn line_plot(series: &[Series], bands: &[Band], x_label: &str, y_label: &str) -> String {
    let xs = series.iter().flat_map(|s| s.xs.iter().copied());
    let ys = series
        .iter()
        .flat_map(|s| s.ys.iter().copied())
        .chain(bands.iter().flat_map(|b| b.ys.iter().copied().chain([b.base])));
    let fr = Frame::fit(xs, ys);
    let mut svg = String::new();
    header(&mut svg);
    for b in bands {
        let mut pts: Vec<String> = b
            .xs
            .iter()
            .zip(b.ys)
            .map(|(x, y)| format!("{:.2},{:.2}", fr.px(*x), fr.py(*y)))
            .collect();
        if let (Some(first), Some(last)) = (b.xs.first(), b.xs.last()) {
            pts.push(format!("{:.2},{:.2}", fr.px(*last), fr.py(b.base)));
            pts.push(format!("{:.2},{:.2}", fr.px(*first), fr.py(b.base)));
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{}" fill-opacity="{}" stroke="none"/>"#,
            pts.join(" "),
            b.color,
            b.opacity
        );
    }
    axes(&mut svg, &fr, x_label, y_label);
    for s in series {
        if s.markers {
            for (x, y) in s.xs.iter().zip(s.ys) {
                if x.is_finite() && y.is_finite() {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                        fr.px(*x),
                        fr.py(*y),
                        s.color
                    );
                }
            }
        } else {
            polyline(&mut svg, &fr, s.xs, s.ys, s.color);
        }
    }
    let entries: Vec<(&str, &str)> = series.iter().map(|s| (s.label, s.color)).collect();
    legend(&mut svg, &entries);
    svg.push_str("</svg>\n");
    svg
}

pub fn stem_plot(xs: &[f64], ys: &[f64], colors: &[&str], x_label: &str, y_label: &str) -> String {
    let fr = Frame::fit(xs.iter().copied(), ys.iter().copied().chain([0.0]));
    let mut svg = String::new();
    header(&mut svg);
    axes(&mut svg, &fr, x_label, y_label);
    for ((x, y), c) in xs.iter().zip(ys).zip(colors) {
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/>"#,
            fr.py(0.0),
            fr.py(*y),
            px = fr.px(*x)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Color map of `grid[row][col]` with rows along y and columns along x.
pub fn heatmap(xs: &[f64], ys: &[f64], grid: &[Vec<f64>], x_label: &str, y_label: &str) -> String {
    let fr = Frame {
        x0: xs.first().copied().unwrap_or(0.0),
        x1: xs.last().copied().unwrap_or(1.0).max(xs.first().copied().unwrap_or(0.0) + 1e-9),
        y0: ys.first().copied().unwrap_or(0.0),
        y1: ys.last().copied().unwrap_or(1.0).max(ys.first().copied().unwrap_or(0.0) + 1e-9),
    };
    let (lo, hi) = min_max(grid.iter().flatten().copied());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut svg = String::new();
    header(&mut svg);
    let cw = (W - ML - MR) / xs.len().max(1) as f64;
    let ch = (H - MT - MB) / ys.len().max(1) as f64;
    for (r, row) in grid.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let t = ((v - lo) / span).clamp(0.0, 1.0);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                ML + c as f64 * cw,
                H - MB - (r + 1) as f64 * ch,
                cw + 0.3,
                ch + 0.3,
                ramp(t)
            );
        }
    }
    axes(&mut svg, &fr, x_label, y_label);
    svg.push_str("</svg>\n");
    svg
}

/// Dark blue (deepest dip) to white (zero).
fn ramp(t: f64) -> String {
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(20.0, 255.0), lerp(40.0, 255.0), lerp(120.0, 255.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(3398.47123456), "3398.47123");
        assert_eq!(fmt_num(-0.0511389357), "-0.0511389357");
        assert_eq!(fmt_num(1.0), "1.00000000");
        assert_eq!(fmt_num(9.9999999999), "10.0000000");
        assert_eq!(fmt_num(1.5e-9), "1.50000000e-9");
        assert_eq!(fmt_num(120.0), "120.000000");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push_nums(&[1.0, -0.0]);
        assert_eq!(t.to_csv(), "a,b\n1.00000000,0\n");
    }

    #[test]
    fn plots_are_well_formed() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [0.0, -1.0, 0.5];
        let s = line_plot(
            &[Series {
                xs: &xs,
                ys: &ys,
                color: "black",
                label: "a<b",
                markers: false,
            }],
            &[],
            "x",
            "y",
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a&lt;b"));
        let h = heatmap(&xs, &[0.0, 1.0], &[ys.to_vec(), ys.to_vec()], "x", "y");
        assert_eq!(h.matches("<rect").count(), 2 + 6);
    }
}
