//! Deterministic rendering of run artifacts: confusion heatmaps, ROC and
//! PR curves, attribution bar/beeswarm/force plots as standalone SVG 1.1
//! documents, plus the run-bundle writer with a content-hash manifest.
//!
//! Every emitted byte is a pure function of the inputs: numbers are
//! printed with four fixed fractional digits, beeswarm jitter comes from
//! a seeded hash of (feature, instance) rather than an RNG stream, and no
//! timestamps or locale-dependent formatting appear anywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::explain::{ForceBreakdown, ShapMatrix, ShapSummary};
use crate::metrics::{ConfusionMatrix, OvrCurves};
use crate::{Error, Result, N_CATEGORIES};

/// Fixed-point decimal used for every number rendered into SVG text.
fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Two-color ramp from blue (low) to red (high), `t` in [0, 1].
fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let lerp = |a: u8, b: u8| (a as f64 + t * (b as f64 - a as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(0x3b, 0xb4),
        lerp(0x4c, 0x04),
        lerp(0xc0, 0x26)
    )
}

/// Per-category line colors for curve plots.
const CATEGORY_COLORS: [&str; N_CATEGORIES] = ["#3b4cc0", "#e0922e", "#b40426"];

/// Deterministic jitter in [-0.5, 0.5] from a hash of (feature,
/// instance); no RNG stream is consumed.
fn jitter(feature: usize, instance: usize) -> f64 {
    let h = crate::stream::derive(0x6a69_7474, "jitter", &[feature as u64, instance as u64]);
    (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// What to draw; the payload carries everything the renderer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlotData {
    Confusion {
        matrix: ConfusionMatrix,
        categories: [String; N_CATEGORIES],
    },
    Roc {
        curves: OvrCurves,
        categories: [String; N_CATEGORIES],
    },
    Pr {
        curves: OvrCurves,
        categories: [String; N_CATEGORIES],
    },
    /// Mean-|phi| bars; `category` selects one output, `None` averages
    /// across all of them.
    ShapBar {
        summary: ShapSummary,
        category: Option<usize>,
    },
    ShapBeeswarm {
        summary: ShapSummary,
        category: usize,
    },
    Force {
        breakdown: ForceBreakdown,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub data: PlotData,
    pub title: String,
    pub width: u32,
    pub height: u32,
}

impl PlotSpec {
    /// A spec at the default 720x540 canvas.
    pub fn new(data: PlotData, title: impl Into<String>) -> PlotSpec {
        PlotSpec {
            data,
            title: title.into(),
            width: 720,
            height: 540,
        }
    }
}

/// Accumulates SVG elements with fixed-decimal coordinates.
struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Svg {
        Svg { body: String::new() }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: Option<&str>) {
        let _ = write!(
            self.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"",
            fmt4(x),
            fmt4(y),
            fmt4(w),
            fmt4(h),
            fill
        );
        if let Some(s) = stroke {
            let _ = write!(self.body, " stroke=\"{s}\"");
        }
        self.body.push_str("/>\n");
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, dash: Option<&str>) {
        let _ = write!(
            self.body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\"",
            fmt4(x1),
            fmt4(y1),
            fmt4(x2),
            fmt4(y2),
            stroke
        );
        if let Some(d) = dash {
            let _ = write!(self.body, " stroke-dasharray=\"{d}\"");
        }
        self.body.push_str("/>\n");
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{},{}", fmt4(*x), fmt4(*y)))
            .collect();
        let _ = write!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>\n",
            coords.join(" ")
        );
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = write!(
            self.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>\n",
            fmt4(cx),
            fmt4(cy),
            fmt4(r)
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, size: f64, anchor: &str, fill: &str) {
        let _ = write!(
            self.body,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" \
             text-anchor=\"{anchor}\" fill=\"{fill}\">{}</text>\n",
            fmt4(x),
            fmt4(y),
            fmt4(size),
            esc(s)
        );
    }

    fn finish(self, width: u32, height: u32, title: &str) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" \
             height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
             <title>{}</title>\n\
             <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n\
             {}</svg>\n",
            esc(title),
            self.body
        )
    }
}

/// Chart margins inside the canvas.
struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn plot(width: u32, height: u32, left: f64) -> Frame {
        Frame {
            left,
            right: width as f64 - 25.0,
            top: 55.0,
            bottom: height as f64 - 50.0,
        }
    }

    fn x(&self, t: f64) -> f64 {
        self.left + t * (self.right - self.left)
    }

    /// `t` in [0, 1] mapped bottom-up.
    fn y(&self, t: f64) -> f64 {
        self.bottom - t * (self.bottom - self.top)
    }
}

/// Renders one plot to a standalone SVG 1.1 document. Identical specs
/// produce byte-identical text.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::Render("plot dimensions must be positive".to_string()));
    }
    let mut svg = Svg::new();
    svg.text(
        spec.width as f64 / 2.0,
        24.0,
        &spec.title,
        15.0,
        "middle",
        "#111111",
    );
    match &spec.data {
        PlotData::Confusion { matrix, categories } => {
            confusion_svg(&mut svg, spec, matrix, categories)?
        }
        PlotData::Roc { curves, categories } => {
            curve_svg(&mut svg, spec, curves, categories, true)?
        }
        PlotData::Pr { curves, categories } => {
            curve_svg(&mut svg, spec, curves, categories, false)?
        }
        PlotData::ShapBar { summary, category } => bar_svg(&mut svg, spec, summary, *category)?,
        PlotData::ShapBeeswarm { summary, category } => {
            beeswarm_svg(&mut svg, spec, summary, *category)?
        }
        PlotData::Force { breakdown } => force_svg(&mut svg, spec, breakdown)?,
    }
    Ok(svg.finish(spec.width, spec.height, &spec.title))
}

fn confusion_svg(
    svg: &mut Svg,
    spec: &PlotSpec,
    matrix: &ConfusionMatrix,
    categories: &[String; N_CATEGORIES],
) -> Result<()> {
    if matrix.total() == 0 {
        return Err(Error::Render(
            "confusion matrix has no observations".to_string(),
        ));
    }
    let f = Frame::plot(spec.width, spec.height, 110.0);
    let n = N_CATEGORIES as f64;
    let cell_w = (f.right - f.left) / n;
    let cell_h = (f.bottom - f.top) / n;
    for (i, row) in matrix.counts.iter().enumerate() {
        let row_total: u64 = row.iter().sum();
        for (j, &count) in row.iter().enumerate() {
            let share = if row_total == 0 {
                0.0
            } else {
                count as f64 / row_total as f64
            };
            let x = f.left + j as f64 * cell_w;
            let y = f.top + i as f64 * cell_h;
            svg.rect(x, y, cell_w, cell_h, &ramp(share), Some("#ffffff"));
            let ink = if share > 0.6 { "#ffffff" } else { "#111111" };
            svg.text(
                x + cell_w / 2.0,
                y + cell_h / 2.0 - 4.0,
                &count.to_string(),
                13.0,
                "middle",
                ink,
            );
            // Row-normalized share as a whole percentage.
            svg.text(
                x + cell_w / 2.0,
                y + cell_h / 2.0 + 14.0,
                &format!("{}%", (share * 100.0).round() as i64),
                12.0,
                "middle",
                ink,
            );
        }
        svg.text(
            f.left - 8.0,
            f.top + (i as f64 + 0.5) * cell_h + 4.0,
            &categories[i],
            12.0,
            "end",
            "#111111",
        );
    }
    for (j, cat) in categories.iter().enumerate() {
        svg.text(
            f.left + (j as f64 + 0.5) * cell_w,
            f.bottom + 18.0,
            cat,
            12.0,
            "middle",
            "#111111",
        );
    }
    svg.text(
        f.left + (f.right - f.left) / 2.0,
        f.bottom + 36.0,
        "Predicted",
        12.0,
        "middle",
        "#444444",
    );
    svg.text(18.0, f.top + (f.bottom - f.top) / 2.0, "Actual", 12.0, "middle", "#444444");
    Ok(())
}

fn axes(svg: &mut Svg, f: &Frame, x_label: &str, y_label: &str) {
    svg.line(f.left, f.bottom, f.right, f.bottom, "#333333", None);
    svg.line(f.left, f.bottom, f.left, f.top, "#333333", None);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let label = fmt4(t);
        svg.line(f.x(t), f.bottom, f.x(t), f.bottom + 4.0, "#333333", None);
        svg.text(f.x(t), f.bottom + 16.0, &label, 10.0, "middle", "#444444");
        svg.line(f.left - 4.0, f.y(t), f.left, f.y(t), "#333333", None);
        svg.text(f.left - 7.0, f.y(t) + 3.0, &label, 10.0, "end", "#444444");
    }
    svg.text(
        f.left + (f.right - f.left) / 2.0,
        f.bottom + 34.0,
        x_label,
        12.0,
        "middle",
        "#444444",
    );
    svg.text(20.0, f.top - 10.0, y_label, 12.0, "start", "#444444");
}

fn curve_svg(
    svg: &mut Svg,
    spec: &PlotSpec,
    curves: &OvrCurves,
    categories: &[String; N_CATEGORIES],
    roc: bool,
) -> Result<()> {
    if curves.curves.iter().all(|c| c.is_none()) {
        return Err(Error::Render(
            "no categories with observations to plot".to_string(),
        ));
    }
    if curves
        .curves
        .iter()
        .flatten()
        .any(|c| c.points.is_empty())
    {
        return Err(Error::Render("curve has no points".to_string()));
    }
    let f = Frame::plot(spec.width, spec.height, 65.0);
    if roc {
        axes(svg, &f, "False positive rate", "True positive rate");
        svg.line(f.x(0.0), f.y(0.0), f.x(1.0), f.y(1.0), "#999999", Some("4 4"));
    } else {
        axes(svg, &f, "Recall", "Precision");
    }
    let metric = if roc { "AUC" } else { "AP" };
    let mut legend_y = f.top + 14.0;
    let legend_x = if roc { f.x(0.55) } else { f.x(0.05) };
    for (c, slot) in curves.curves.iter().enumerate() {
        match slot {
            Some(curve) => {
                let pts: Vec<(f64, f64)> =
                    curve.points.iter().map(|&(x, y)| (f.x(x), f.y(y))).collect();
                svg.polyline(&pts, CATEGORY_COLORS[c]);
                svg.rect(legend_x, legend_y - 8.0, 10.0, 10.0, CATEGORY_COLORS[c], None);
                svg.text(
                    legend_x + 16.0,
                    legend_y + 1.0,
                    &format!("{} ({metric} {})", categories[c], fmt4(curve.area)),
                    11.0,
                    "start",
                    "#111111",
                );
            }
            None => {
                svg.text(
                    legend_x + 16.0,
                    legend_y + 1.0,
                    &format!("{} (no observations)", categories[c]),
                    11.0,
                    "start",
                    "#999999",
                );
            }
        }
        legend_y += 16.0;
    }
    svg.text(
        legend_x + 16.0,
        legend_y + 1.0,
        &format!("macro {metric} {}", fmt4(curves.macro_area)),
        11.0,
        "start",
        "#111111",
    );
    Ok(())
}

/// Shared vertical layout for feature-row charts; returns row centers in
/// ranking order alongside the ordered feature list.
fn feature_rows(f: &Frame, order: &[usize]) -> Vec<(usize, f64)> {
    let row_h = (f.bottom - f.top) / order.len() as f64;
    order
        .iter()
        .enumerate()
        .map(|(r, &feat)| (feat, f.top + (r as f64 + 0.5) * row_h))
        .collect()
}

fn bar_svg(
    svg: &mut Svg,
    spec: &PlotSpec,
    summary: &ShapSummary,
    category: Option<usize>,
) -> Result<()> {
    if summary.feature_names.is_empty() {
        return Err(Error::Render("attribution summary is empty".to_string()));
    }
    if let Some(c) = category {
        if c >= N_CATEGORIES {
            return Err(Error::Render(format!(
                "category {c} out of range 0..{N_CATEGORIES}"
            )));
        }
    }
    let (scores, order): (Vec<f64>, &[usize]) = match category {
        Some(c) => (
            summary.mean_abs.iter().map(|m| m[c]).collect(),
            &summary.order_by_category[c],
        ),
        None => (summary.mean_abs_overall.clone(), &summary.order_overall),
    };
    let f = Frame::plot(spec.width, spec.height, 150.0);
    let max = scores.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let row_h = (f.bottom - f.top) / order.len() as f64;
    for (feat, cy) in feature_rows(&f, order) {
        let w = (f.right - f.left) * (scores[feat] / max);
        svg.rect(f.left, cy - row_h * 0.32, w, row_h * 0.64, "#3b4cc0", None);
        svg.text(
            f.left - 8.0,
            cy + 4.0,
            &summary.feature_names[feat],
            11.0,
            "end",
            "#111111",
        );
        svg.text(
            f.left + w + 6.0,
            cy + 4.0,
            &fmt4(scores[feat]),
            10.0,
            "start",
            "#444444",
        );
    }
    svg.line(f.left, f.top, f.left, f.bottom, "#333333", None);
    svg.text(
        f.left + (f.right - f.left) / 2.0,
        f.bottom + 24.0,
        "mean |contribution|",
        12.0,
        "middle",
        "#444444",
    );
    Ok(())
}

fn beeswarm_svg(
    svg: &mut Svg,
    spec: &PlotSpec,
    summary: &ShapSummary,
    category: usize,
) -> Result<()> {
    if summary.feature_names.is_empty() || summary.beeswarm.is_empty() {
        return Err(Error::Render("attribution summary is empty".to_string()));
    }
    if category >= N_CATEGORIES {
        return Err(Error::Render(format!(
            "category {category} out of range 0..{N_CATEGORIES}"
        )));
    }
    let order = &summary.order_by_category[category];
    let f = Frame::plot(spec.width, spec.height, 150.0);
    let max_abs = summary
        .beeswarm
        .iter()
        .map(|p| p.phi[category].abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    // Raw-value range per feature, driving the blue→red point color.
    let n_f = summary.feature_names.len();
    let mut lo = vec![f64::INFINITY; n_f];
    let mut hi = vec![f64::NEG_INFINITY; n_f];
    for p in &summary.beeswarm {
        lo[p.feature] = lo[p.feature].min(p.value);
        hi[p.feature] = hi[p.feature].max(p.value);
    }
    let rows = feature_rows(&f, order);
    let row_h = (f.bottom - f.top) / order.len() as f64;
    let zero_x = f.x(0.5);
    svg.line(zero_x, f.top, zero_x, f.bottom, "#999999", Some("4 4"));
    for &(feat, cy) in &rows {
        svg.text(
            f.left - 8.0,
            cy + 4.0,
            &summary.feature_names[feat],
            11.0,
            "end",
            "#111111",
        );
        svg.line(f.left, cy, f.right, cy, "#eeeeee", None);
    }
    // Points after the row furniture so they stay on top; iteration order
    // is ranking-major, then instance, for byte determinism.
    for &(feat, cy) in &rows {
        for p in summary.beeswarm.iter().filter(|p| p.feature == feat) {
            let t = 0.5 + p.phi[category] / (2.0 * max_abs);
            let x = f.x(t);
            let y = cy + jitter(p.feature, p.instance) * row_h * 0.7;
            let span = hi[feat] - lo[feat];
            let ct = if span > 0.0 { (p.value - lo[feat]) / span } else { 0.5 };
            svg.circle(x, y, 2.4, &ramp(ct));
        }
    }
    svg.text(
        f.left + (f.right - f.left) / 2.0,
        f.bottom + 24.0,
        "contribution (left: lowers, right: raises)",
        12.0,
        "middle",
        "#444444",
    );
    // Color legend: low value blue, high value red.
    let lx = f.right - 130.0;
    for k in 0..16 {
        svg.rect(lx + k as f64 * 5.0, f.top - 24.0, 5.0, 8.0, &ramp(k as f64 / 15.0), None);
    }
    svg.text(lx - 6.0, f.top - 16.0, "low", 10.0, "end", "#444444");
    svg.text(lx + 86.0, f.top - 16.0, "high", 10.0, "start", "#444444");
    Ok(())
}

fn force_svg(svg: &mut Svg, spec: &PlotSpec, breakdown: &ForceBreakdown) -> Result<()> {
    if breakdown.contributions.is_empty() {
        return Err(Error::Render("force breakdown has no contributions".to_string()));
    }
    let f = Frame::plot(spec.width, spec.height, 170.0);
    // Waterfall: cumulative sums from base, one row per contribution.
    let mut cum = vec![breakdown.base];
    for c in &breakdown.contributions {
        cum.push(cum[cum.len() - 1] + c.phi);
    }
    let lo = cum.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cum.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let pad = span * 0.08;
    let to_x = |v: f64| f.x(((v - lo) + pad) / (span + 2.0 * pad));
    let row_h = (f.bottom - f.top) / breakdown.contributions.len() as f64;
    let base_x = to_x(breakdown.base);
    let out_x = to_x(breakdown.output);
    svg.line(base_x, f.top - 6.0, base_x, f.bottom, "#999999", Some("4 4"));
    svg.text(
        base_x,
        f.top - 12.0,
        &format!("base {}", fmt4(breakdown.base)),
        11.0,
        "middle",
        "#444444",
    );
    svg.line(out_x, f.top - 28.0, out_x, f.bottom, "#333333", None);
    svg.text(
        out_x,
        f.top - 34.0,
        &format!("f(x) {}", fmt4(breakdown.output)),
        11.0,
        "middle",
        "#111111",
    );
    for (i, c) in breakdown.contributions.iter().enumerate() {
        let cy = f.top + (i as f64 + 0.5) * row_h;
        let (x0, x1) = (to_x(cum[i]), to_x(cum[i + 1]));
        let (left, width) = if x1 >= x0 { (x0, x1 - x0) } else { (x1, x0 - x1) };
        let fill = if c.phi >= 0.0 { "#b40426" } else { "#3b4cc0" };
        svg.rect(left, cy - row_h * 0.3, width.max(0.75), row_h * 0.6, fill, None);
        svg.text(
            f.left - 8.0,
            cy + 4.0,
            &format!("{} = {}", c.feature, fmt4(c.value)),
            11.0,
            "end",
            "#111111",
        );
        svg.text(
            f.right + 2.0,
            cy + 4.0,
            &format!("{:+.4}", c.phi),
            10.0,
            "end",
            "#444444",
        );
    }
    Ok(())
}

/// One file of a run bundle, addressed by a forward-slash relative path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(path: impl Into<String>, content: impl Into<String>) -> Artifact {
        Artifact {
            path: path.into(),
            bytes: content.into().into_bytes(),
        }
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn json<T: Serialize>(path: impl Into<String>, value: &T) -> Result<Artifact> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::Render(format!("serializing artifact: {e}")))?;
        bytes.push(b'\n');
        Ok(Artifact {
            path: path.into(),
            bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

/// Relative paths and content hashes of every bundle file except the
/// manifest itself, sorted by path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn check_artifact_path(path: &str) -> Result<()> {
    let bad = path.is_empty()
        || path.starts_with('/')
        || path.contains('\\')
        || path == MANIFEST_NAME
        || path.split('/').any(|seg| seg.is_empty() || seg == "." || seg == "..");
    if bad {
        return Err(Error::Render(format!(
            "artifact path '{path}' must be a clean relative path and not the manifest"
        )));
    }
    Ok(())
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let entries =
        fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = entry.path();
        let meta = fs::metadata(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        if meta.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays under root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.push(rel);
        }
    }
    Ok(())
}

/// Hashes every file under `dir` (recursively, excluding the manifest)
/// into a sorted manifest. Does not write anything.
pub fn manifest_of_dir(dir: &Path) -> Result<Manifest> {
    let mut paths = Vec::new();
    collect_files(dir, dir, &mut paths)?;
    paths.retain(|p| p != MANIFEST_NAME);
    paths.sort();
    let files = paths
        .into_iter()
        .map(|p| {
            let full = dir.join(&p);
            let bytes =
                fs::read(&full).map_err(|e| Error::io(full.display().to_string(), e))?;
            Ok(ManifestEntry {
                path: p,
                sha256: hex_digest(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Manifest { files })
}

/// Writes artifacts under `dir`, then rewrites `manifest.json` covering
/// every file in the directory (including ones from earlier stages).
/// Identical inputs reproduce identical bytes and hashes.
pub fn write_run_bundle(dir: &Path, artifacts: &[Artifact]) -> Result<Manifest> {
    for a in artifacts {
        check_artifact_path(&a.path)?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for a in artifacts {
        let full: PathBuf = dir.join(&a.path);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
        fs::write(&full, &a.bytes).map_err(|e| Error::io(full.display().to_string(), e))?;
    }
    let manifest = manifest_of_dir(dir)?;
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Render(format!("serializing manifest: {e}")))?;
    bytes.push(b'\n');
    let full = dir.join(MANIFEST_NAME);
    fs::write(&full, bytes).map_err(|e| Error::io(full.display().to_string(), e))?;
    Ok(manifest)
}

/// Leaderboard as CSV: one row per model with the five mean CV metrics,
/// full-precision floats.
pub fn leaderboard_csv(entries: &[crate::automl::LeaderboardEntry]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "accuracy", "auc", "recall", "precision", "f1"])
        .map_err(|e| Error::Render(format!("writing leaderboard csv: {e}")))?;
    for e in entries {
        w.write_record([
            e.kind.name().to_string(),
            format!("{}", e.accuracy),
            format!("{}", e.auc),
            format!("{}", e.recall),
            format!("{}", e.precision),
            format!("{}", e.f1),
        ])
        .map_err(|e| Error::Render(format!("writing leaderboard csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::Render(format!("writing leaderboard csv: {e}")))
}

/// Long-form CSV of attributions: one row per (instance, feature,
/// category), RFC-4180 quoting via the writer.
pub fn shap_values_csv(shap: &ShapMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "feature", "category", "value"])
        .map_err(|e| Error::Render(format!("writing attribution csv: {e}")))?;
    for (row, &id) in shap.instance_ids.iter().enumerate() {
        for (f, name) in shap.feature_names.iter().enumerate() {
            for k in 0..N_CATEGORIES {
                w.write_record([
                    id.to_string(),
                    name.clone(),
                    k.to_string(),
                    format!("{}", shap.values[row][f][k]),
                ])
                .map_err(|e| Error::Render(format!("writing attribution csv: {e}")))?;
            }
        }
    }
    w.into_inner()
        .map_err(|e| Error::Render(format!("writing attribution csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{BeeswarmPoint, ForceContribution, OutputKind, ShapSummary};
    use crate::metrics::{pr_average_precision, roc_auc_ovr};

    fn cats() -> [String; N_CATEGORIES] {
        ["Minor".to_string(), "Serious".to_string(), "Fatal".to_string()]
    }

    fn parse(svg: &str) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(svg).expect("well-formed XML")
    }

    fn demo_scores() -> (Vec<usize>, Vec<crate::models::Proba>) {
        let y = vec![0, 0, 1, 1, 2, 2, 0, 1, 2, 0];
        let scores = vec![
            [0.8, 0.1, 0.1],
            [0.6, 0.3, 0.1],
            [0.2, 0.7, 0.1],
            [0.3, 0.5, 0.2],
            [0.1, 0.2, 0.7],
            [0.2, 0.3, 0.5],
            [0.5, 0.4, 0.1],
            [0.4, 0.4, 0.2],
            [0.3, 0.3, 0.4],
            [0.7, 0.2, 0.1],
        ];
        (y, scores)
    }

    fn demo_summary() -> ShapSummary {
        let mut beeswarm = Vec::new();
        for f in 0..2 {
            for i in 0..3 {
                beeswarm.push(BeeswarmPoint {
                    feature: f,
                    instance: i,
                    value: (f * 3 + i) as f64,
                    phi: [0.1 * (f as f64 + 1.0), -0.05, 0.02 * i as f64],
                });
            }
        }
        ShapSummary {
            feature_names: vec!["Light".into(), "Age of pedestrian".into()],
            mean_abs: vec![[0.1, 0.05, 0.01], [0.2, 0.05, 0.03]],
            mean_abs_overall: vec![0.0533, 0.0933],
            order_overall: vec![1, 0],
            order_by_category: [vec![1, 0], vec![0, 1], vec![1, 0]],
            beeswarm,
        }
    }

    #[test]
    fn confusion_heatmap_annotates_row_normalized_percentages() {
        let matrix = ConfusionMatrix {
            counts: [[78, 12, 10], [5, 90, 5], [2, 8, 90]],
        };
        let spec = PlotSpec::new(
            PlotData::Confusion {
                matrix,
                categories: cats(),
            },
            "Holdout confusion",
        );
        let svg = render_svg(&spec).unwrap();
        parse(&svg);
        assert!(svg.contains(">78%<"), "row-0 diagonal share 0.78 renders 78%");
        assert!(svg.contains(">90%<"));
        assert!(svg.contains("Predicted"));
        assert_eq!(svg, render_svg(&spec).unwrap());
    }

    #[test]
    fn diagonal_confusion_matrix_is_all_one_hundred_percent() {
        let matrix = ConfusionMatrix {
            counts: [[5, 0, 0], [0, 9, 0], [0, 0, 2]],
        };
        let svg = render_svg(&PlotSpec::new(
            PlotData::Confusion {
                matrix,
                categories: cats(),
            },
            "t",
        ))
        .unwrap();
        assert_eq!(svg.matches(">100%<").count(), 3);
        assert_eq!(svg.matches(">0%<").count(), 6);
    }

    #[test]
    fn empty_confusion_matrix_is_a_render_error() {
        let spec = PlotSpec::new(
            PlotData::Confusion {
                matrix: ConfusionMatrix {
                    counts: [[0; 3]; 3],
                },
                categories: cats(),
            },
            "t",
        );
        assert!(matches!(render_svg(&spec), Err(Error::Render(_))));
    }

    #[test]
    fn roc_and_pr_plots_render_curves_with_legends() {
        let (y, scores) = demo_scores();
        let roc = roc_auc_ovr(&y, &scores).unwrap();
        let pr = pr_average_precision(&y, &scores).unwrap();
        let roc_svg = render_svg(&PlotSpec::new(
            PlotData::Roc {
                curves: roc,
                categories: cats(),
            },
            "ROC",
        ))
        .unwrap();
        parse(&roc_svg);
        assert!(roc_svg.contains("polyline"));
        assert!(roc_svg.contains("AUC"));
        assert!(roc_svg.contains("macro AUC"));
        let pr_svg = render_svg(&PlotSpec::new(
            PlotData::Pr {
                curves: pr,
                categories: cats(),
            },
            "PR",
        ))
        .unwrap();
        parse(&pr_svg);
        assert!(pr_svg.contains("AP"));
        assert!(pr_svg.contains("Recall"));
    }

    #[test]
    fn all_skipped_curves_are_a_render_error() {
        let curves = OvrCurves {
            curves: [None, None, None],
            macro_area: f64::NAN,
            skipped: vec![0, 1, 2],
        };
        let spec = PlotSpec::new(
            PlotData::Roc {
                curves,
                categories: cats(),
            },
            "t",
        );
        assert!(matches!(render_svg(&spec), Err(Error::Render(_))));
    }

    #[test]
    fn bar_plot_orders_rows_by_ranking() {
        let svg = render_svg(&PlotSpec::new(
            PlotData::ShapBar {
                summary: demo_summary(),
                category: None,
            },
            "Importance",
        ))
        .unwrap();
        parse(&svg);
        // order_overall puts feature 1 first.
        let age = svg.find("Age of pedestrian").unwrap();
        let light = svg.find(">Light<").unwrap();
        assert!(age < light);
        assert!(svg.contains("0.0933"));
        let per_cat = render_svg(&PlotSpec::new(
            PlotData::ShapBar {
                summary: demo_summary(),
                category: Some(1),
            },
            "Importance (Serious)",
        ))
        .unwrap();
        let age = per_cat.find("Age of pedestrian").unwrap();
        let light = per_cat.find(">Light<").unwrap();
        assert!(light < age, "category 1 ranking flips the order");
    }

    #[test]
    fn beeswarm_is_deterministic_and_row_ordered() {
        let spec = PlotSpec::new(
            PlotData::ShapBeeswarm {
                summary: demo_summary(),
                category: 0,
            },
            "Beeswarm",
        );
        let a = render_svg(&spec).unwrap();
        let b = render_svg(&spec).unwrap();
        assert_eq!(a, b);
        parse(&a);
        assert_eq!(a.matches("<circle").count(), 6);
        let age = a.find("Age of pedestrian").unwrap();
        let light = a.find(">Light<").unwrap();
        assert!(age < light, "beeswarm rows follow the category ranking");
        assert!(a.contains(">low<") && a.contains(">high<"));
    }

    #[test]
    fn force_plot_reconciles_base_and_output_text() {
        // Layout check with the published illustration values: output
        // 0.82 against base 0.775.
        let breakdown = ForceBreakdown {
            instance: 4,
            category: 0,
            predicted: 0,
            output_kind: OutputKind::Probability,
            base: 0.775,
            output: 0.82,
            contributions: vec![
                ForceContribution {
                    feature: "Light".into(),
                    value: 3.0,
                    phi: 0.06,
                },
                ForceContribution {
                    feature: "Speed limit".into(),
                    value: 40.0,
                    phi: -0.015,
                },
            ],
        };
        let svg = render_svg(&PlotSpec::new(PlotData::Force { breakdown }, "Force"))
            .unwrap();
        parse(&svg);
        assert!(svg.contains("base 0.7750"));
        assert!(svg.contains("f(x) 0.8200"));
        assert!(svg.contains("+0.0600"));
        assert!(svg.contains("-0.0150"));
        assert!(svg.contains("Light = 3.0000"));
    }

    #[test]
    fn zero_dimensions_are_a_render_error() {
        let mut spec = PlotSpec::new(
            PlotData::Force {
                breakdown: ForceBreakdown {
                    instance: 0,
                    category: 0,
                    predicted: 0,
                    output_kind: OutputKind::Probability,
                    base: 0.0,
                    output: 0.0,
                    contributions: vec![ForceContribution {
                        feature: "A".into(),
                        value: 0.0,
                        phi: 0.0,
                    }],
                },
            },
            "t",
        );
        spec.width = 0;
        assert!(matches!(render_svg(&spec), Err(Error::Render(_))));
    }

    #[test]
    fn titles_and_labels_are_xml_escaped() {
        let matrix = ConfusionMatrix {
            counts: [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        };
        let spec = PlotSpec::new(
            PlotData::Confusion {
                matrix,
                categories: [
                    "a<b".to_string(),
                    "c&d".to_string(),
                    "\"e\"".to_string(),
                ],
            },
            "x < y & z",
        );
        let svg = render_svg(&spec).unwrap();
        parse(&svg);
        assert!(svg.contains("x &lt; y &amp; z"));
    }

    #[test]
    fn bundle_writes_artifacts_and_hashes_them() {
        let dir = tempfile::tempdir().unwrap();
        let artifacts = vec![
            Artifact::text("leaderboard.json", "{\"a\":1}\n"),
            Artifact::text("plots/roc.svg", "<svg/>"),
        ];
        let manifest = write_run_bundle(dir.path(), &artifacts).unwrap();
        let paths: Vec<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["leaderboard.json", "plots/roc.svg"]);
        assert_eq!(manifest.files[1].sha256, hex_digest(b"<svg/>"));
        assert_eq!(manifest.files[1].sha256.len(), 64);
        assert!(dir.path().join(MANIFEST_NAME).exists());
        // Re-running over identical artifacts reproduces identical hashes
        // and the manifest covers files written by earlier stages.
        let again = write_run_bundle(dir.path(), &artifacts[..1]).unwrap();
        assert_eq!(manifest, again);
        let loaded: Manifest = serde_json::from_slice(
            &fs::read(dir.path().join(MANIFEST_NAME)).unwrap(),
        )
        .unwrap();
        assert_eq!(loaded, manifest);
    }

    #[test]
    fn empty_artifact_set_yields_an_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_run_bundle(dir.path(), &[]).unwrap();
        assert!(manifest.files.is_empty());
    }

    #[test]
    fn bundle_rejects_escaping_paths() {
        let dir = tempfile::tempdir().unwrap();
        for bad in ["../x", "/etc/passwd", "", "a/../b", "manifest.json", "a//b"] {
            let artifact = Artifact::text(bad, "x");
            assert!(
                matches!(write_run_bundle(dir.path(), &[artifact]), Err(Error::Render(_))),
                "path '{bad}' should be rejected"
            );
        }
    }

    #[test]
    fn attribution_csv_is_rfc_4180_quoted() {
        let shap = ShapMatrix {
            model_kind: crate::models::ModelKind::Dtree,
            output_kind: OutputKind::Probability,
            feature_names: vec!["plain".into(), "with, comma".into()],
            instance_ids: vec![7],
            base: [0.0; 3],
            values: vec![vec![[0.5, 0.0, -0.5], [1.25, 0.0, 0.0]]],
            se: vec![vec![[0.0; 3]; 2]],
            outputs: vec![[1.0, 0.0, 0.0]],
            feature_values: vec![vec![1.0, 2.0]],
        };
        let bytes = shap_values_csv(&shap).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("instance,feature,category,value"));
        assert!(text.contains("\"with, comma\""));
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 6);
        assert_eq!(&rows[0][3], "0.5");
        assert_eq!(&rows[3][1], "with, comma");
    }
}
