//! Rendering: SVG Q-Q plots with the fitted line, histograms of
//! calibration runs, and result tables as text, CSV, or JSON.
//!
//! Everything here is a pure function of its inputs (no timestamps, no
//! randomness), so artifacts are byte-identical across runs.

use crate::error::{Error, Result};
use crate::gof_tests::GofResult;
use crate::mc_calibration::CalibrationTable;
use crate::normal;
use crate::qq_regression::QQFit;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 52.0;

/// A scatter plot with an optional straight line and annotation lines.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    /// (intercept, slope); drawn across the x-range of the points.
    pub line: Option<(f64, f64)>,
    pub annotations: Vec<String>,
}

/// Optional overrides for [`render_qq_svg`]; empty fields keep defaults
/// derived from the fit.
#[derive(Debug, Clone, Default)]
pub struct PlotOverrides {
    pub title: Option<String>,
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    /// Extra annotation lines (e.g. the test statistic and p-value),
    /// appended after the fit summary.
    pub annotations: Vec<String>,
}

/// Output format of [`render_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
    Json,
}

/// One row of the result table: a dataset with its test battery.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub dataset: String,
    pub n: usize,
    pub tests: Vec<GofResult>,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round tick positions covering [lo, hi], at most 6 of them.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()) as i64;
    let decimals = decimals.max(0) as usize;
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * range {
        // snap -0.0 and rounding residue
        let snapped = (t / step).round() * step;
        out.push(if snapped == 0.0 { 0.0 } else { snapped });
        t += step;
    }
    (out, decimals)
}

struct Scale {
    lo: f64,
    hi: f64,
    pix_lo: f64,
    pix_hi: f64,
}

impl Scale {
    /// Pads the data range 5% on each side; a zero range widens to +-1.
    fn padded(min: f64, max: f64, pix_lo: f64, pix_hi: f64) -> Scale {
        let (lo, hi) = if max > min {
            let pad = 0.05 * (max - min);
            (min - pad, max + pad)
        } else {
            (min - 1.0, max + 1.0)
        };
        Scale {
            lo,
            hi,
            pix_lo,
            pix_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.pix_lo + (v - self.lo) / (self.hi - self.lo) * (self.pix_hi - self.pix_lo)
    }
}

/// Renders a scatter plot (with optional line) as an SVG 1.1 document.
///
/// Data points are the only `<circle>` elements and the fitted line the
/// only `<line>` element in the output, so structural assertions on the
/// document stay simple.
pub fn render_scatter_svg(spec: &PlotSpec) -> Result<String> {
    if spec.points.is_empty() {
        return Err(Error::domain("plot needs at least one point"));
    }

    let xs_min = spec
        .points
        .iter()
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    let xs_max = spec
        .points
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut ys_min = spec
        .points
        .iter()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let mut ys_max = spec
        .points
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some((a, b)) = spec.line {
        ys_min = ys_min.min(a + b * xs_min).min(a + b * xs_max);
        ys_max = ys_max.max(a + b * xs_min).max(a + b * xs_max);
    }

    let sx = Scale::padded(xs_min, xs_max, MARGIN_L, WIDTH - MARGIN_R);
    let sy = Scale::padded(ys_min, ys_max, HEIGHT - MARGIN_B, MARGIN_T);

    let mut svg = String::with_capacity(4096);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" \
         height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!("  <title>{}</title>\n", xml_escape(&spec.title)));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        xml_escape(&spec.title)
    ));

    // frame
    svg.push_str(&format!(
        "  <rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    ));

    // ticks as path segments, labels as text
    let (tx, dx) = ticks(sx.lo, sx.hi);
    let (ty, dy) = ticks(sy.lo, sy.hi);
    let mut d = String::new();
    for &t in &tx {
        let px = sx.map(t);
        d.push_str(&format!(
            "M {:.2} {:.2} L {:.2} {:.2} ",
            px,
            HEIGHT - MARGIN_B,
            px,
            HEIGHT - MARGIN_B + 5.0
        ));
    }
    for &t in &ty {
        let py = sy.map(t);
        d.push_str(&format!(
            "M {:.2} {:.2} L {:.2} {:.2} ",
            MARGIN_L - 5.0,
            py,
            MARGIN_L,
            py
        ));
    }
    svg.push_str(&format!(
        "  <path d=\"{}\" stroke=\"black\" stroke-width=\"1\" fill=\"none\"/>\n",
        d.trim_end()
    ));
    for &t in &tx {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\">{:.*}</text>\n",
            sx.map(t),
            HEIGHT - MARGIN_B + 18.0,
            dx,
            t
        ));
    }
    for &t in &ty {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{:.*}</text>\n",
            MARGIN_L - 8.0,
            sy.map(t) + 4.0,
            dy,
            t
        ));
    }

    // axis labels
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        xml_escape(&spec.x_label)
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        xml_escape(&spec.y_label)
    ));

    // regression line across the x-range of the data
    if let Some((a, b)) = spec.line {
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"crimson\" stroke-width=\"1.5\"/>\n",
            sx.map(xs_min),
            sy.map(a + b * xs_min),
            sx.map(xs_max),
            sy.map(a + b * xs_max)
        ));
    }

    // data points
    for &(x, y) in &spec.points {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n",
            sx.map(x),
            sy.map(y)
        ));
    }

    // annotation box, top-left inside the frame
    if !spec.annotations.is_empty() {
        let box_w = 6.0
            + 7.2
                * spec
                    .annotations
                    .iter()
                    .map(|a| a.chars().count())
                    .max()
                    .unwrap_or(0) as f64;
        let box_h = 6.0 + 16.0 * spec.annotations.len() as f64;
        svg.push_str(&format!(
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{box_w:.2}\" height=\"{box_h:.2}\" \
             fill=\"white\" fill-opacity=\"0.85\" stroke=\"gray\" stroke-width=\"0.5\"/>\n",
            MARGIN_L + 8.0,
            MARGIN_T + 8.0
        ));
        for (i, a) in spec.annotations.iter().enumerate() {
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>\n",
                MARGIN_L + 12.0,
                MARGIN_T + 24.0 + 16.0 * i as f64,
                xml_escape(a)
            ));
        }
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Q-Q plot of a fit: scatter of (q_k, x_(k)) with the regression line and
/// an annotation box. Degenerate fits render the scatter without a line
/// and carry a warning annotation instead of the slope.
pub fn render_qq_svg(fit: &QQFit, overrides: &PlotOverrides) -> String {
    let mut annotations = vec![format!("n = {}", fit.n)];
    if fit.degenerate {
        annotations.push("degenerate fit: zero variance, no line drawn".to_string());
    } else {
        annotations.push(format!("mu_hat = {:.4}", fit.mu_hat));
        annotations.push(format!("sigma_hat = {:.4}", fit.sigma_hat));
        annotations.push(format!("rho = {:.4}", fit.rho));
    }
    annotations.extend(overrides.annotations.iter().cloned());

    let spec = PlotSpec {
        title: overrides
            .title
            .clone()
            .unwrap_or_else(|| format!("Q-Q plot ({})", fit.positions.family.name())),
        x_label: overrides
            .x_label
            .clone()
            .unwrap_or_else(|| "theoretical quantiles".to_string()),
        y_label: overrides
            .y_label
            .clone()
            .unwrap_or_else(|| "ordered observations".to_string()),
        points: fit
            .positions
            .q
            .iter()
            .copied()
            .zip(fit.sorted.iter().copied())
            .collect(),
        line: (!fit.degenerate).then_some((fit.mu_hat, fit.sigma_hat)),
        annotations,
    };
    render_scatter_svg(&spec).expect("fit carries at least 3 points")
}

/// Histogram of a null calibration run with the fitted normal density
/// overlaid.
pub fn render_histogram_svg(table: &CalibrationTable) -> String {
    let hist = &table.histogram;
    let bins = hist.counts.len();
    let bw = hist.bin_width();
    let total = hist.total().max(1) as f64;

    // density scale
    let dens: Vec<f64> = hist
        .counts
        .iter()
        .map(|&c| c as f64 / (total * bw))
        .collect();
    let peak = dens
        .iter()
        .copied()
        .fold(normal::pdf(0.0) / table.sigma, f64::max);

    let sx = Scale::padded(hist.lo, hist.hi, MARGIN_L, WIDTH - MARGIN_R);
    let sy = Scale::padded(0.0, peak, HEIGHT - MARGIN_B, MARGIN_T);

    let mut svg = String::with_capacity(8192);
    let title = format!("Null distribution of T, n = {}", table.n);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" \
         height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!("  <title>{}</title>\n", xml_escape(&title)));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        xml_escape(&title)
    ));
    svg.push_str(&format!(
        "  <rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    ));

    // bars
    for (i, &d) in dens.iter().enumerate() {
        if d <= 0.0 {
            continue;
        }
        let x0 = sx.map(hist.lo + i as f64 * bw);
        let x1 = sx.map(hist.lo + (i + 1) as f64 * bw);
        let y = sy.map(d);
        svg.push_str(&format!(
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"steelblue\" fill-opacity=\"0.7\"/>\n",
            x0,
            y,
            x1 - x0,
            sy.map(0.0) - y
        ));
    }

    // fitted normal density curve
    let mut d = String::new();
    for i in 0..=bins * 4 {
        let x = hist.lo + (hist.hi - hist.lo) * i as f64 / (bins * 4) as f64;
        let y = normal::pdf((x - table.mu) / table.sigma) / table.sigma;
        d.push_str(&format!(
            "{}{:.2} {:.2} ",
            if i == 0 { "M " } else { "L " },
            sx.map(x),
            sy.map(y)
        ));
    }
    svg.push_str(&format!(
        "  <path d=\"{}\" stroke=\"crimson\" stroke-width=\"1.5\" fill=\"none\"/>\n",
        d.trim_end()
    ));

    // x ticks
    let (tx, dx) = ticks(sx.lo, sx.hi);
    let mut dpath = String::new();
    for &t in &tx {
        let px = sx.map(t);
        dpath.push_str(&format!(
            "M {:.2} {:.2} L {:.2} {:.2} ",
            px,
            HEIGHT - MARGIN_B,
            px,
            HEIGHT - MARGIN_B + 5.0
        ));
    }
    svg.push_str(&format!(
        "  <path d=\"{}\" stroke=\"black\" stroke-width=\"1\" fill=\"none\"/>\n",
        dpath.trim_end()
    ));
    for &t in &tx {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\">{:.*}</text>\n",
            sx.map(t),
            HEIGHT - MARGIN_B + 18.0,
            dx,
            t
        ));
    }

    for (i, line) in [
        format!("mu = {:.4}", table.mu),
        format!("sigma = {:.4}", table.sigma),
        format!("reps = {}", table.reps),
    ]
    .iter()
    .enumerate()
    {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>\n",
            MARGIN_L + 12.0,
            MARGIN_T + 24.0 + 16.0 * i as f64,
            xml_escape(line)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders the result table in the requested format.
///
/// Text and CSV carry one statistic and one p-value column per test; the
/// JSON schema is
/// `[{dataset, n, tests: [{name, statistic, p_value, p_method}]}]`.
/// CSV uses a header row, comma separators and '.' decimal points, with
/// numbers in shortest round-trip form.
pub fn render_table(rows: &[TableRow], format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::domain("result table needs at least one dataset"));
    }
    for row in rows {
        if row.tests.is_empty() {
            return Err(Error::domain(format!(
                "dataset '{}' carries no test results",
                row.dataset
            )));
        }
    }
    match format {
        TableFormat::Text => Ok(render_text(rows)),
        TableFormat::Csv => Ok(render_csv(rows)),
        TableFormat::Json => Ok(render_json(rows)),
    }
}

fn render_text(rows: &[TableRow]) -> String {
    let mut header: Vec<String> = vec!["dataset".into(), "n".into()];
    for t in &rows[0].tests {
        header.push(t.test.name().to_string());
        header.push("p".into());
    }
    let mut body: Vec<Vec<String>> = Vec::with_capacity(rows.len());
    for row in rows {
        let mut cells = vec![row.dataset.clone(), row.n.to_string()];
        for t in &row.tests {
            cells.push(format!("{:.4}", t.statistic));
            cells.push(format!("{:.2}%", 100.0 * t.p_value));
        }
        body.push(cells);
    }
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for cells in &body {
        for (i, c) in cells.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: &[String]| -> String {
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i == 0 {
                line.push_str(&format!("{:<w$}", c, w = widths[0]));
            } else {
                line.push_str(&format!("  {:>w$}", c, w = widths[i]));
            }
        }
        line.push('\n');
        line
    };
    out.push_str(&fmt_row(&header));
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for cells in &body {
        out.push_str(&fmt_row(cells));
    }
    out
}

fn render_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("dataset,n");
    for t in &rows[0].tests {
        out.push_str(&format!(",{0}_statistic,{0}_p_value", t.test.name()));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{},{}", csv_field(&row.dataset), row.n));
        for t in &row.tests {
            out.push_str(&format!(",{},{}", t.statistic, t.p_value));
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_json(rows: &[TableRow]) -> String {
    let value: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            serde_json::json!({
                "dataset": row.dataset,
                "n": row.n,
                "tests": row.tests.iter().map(|t| {
                    serde_json::json!({
                        "name": t.test.name(),
                        "statistic": t.statistic,
                        "p_value": t.p_value,
                        "p_method": t.p_method.name(),
                    })
                }).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&value).expect("plain data serializes");
    s.push('\n');
    s
}
