//! Deterministic SVG output. Numbers are printed with fixed precision so a
//! given input always renders to the same bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ClusterGraph;
use crate::error::{Error, Result};
use crate::geometry::Polyline;
use crate::inference::Region;
use crate::kernel_density::GridSpec;

const LIGHT: [f64; 3] = [222.0, 235.0, 247.0];
const DARK: [f64; 3] = [8.0, 48.0, 107.0];
const TITLE_HEIGHT: f64 = 28.0;
const LEGEND_ROW: f64 = 18.0;

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Color of level `k` of `count`, light for the lowest level and dark for the highest.
fn ramp(k: usize, count: usize) -> String {
    let t = if count > 1 { k as f64 / (count - 1) as f64 } else { 1.0 };
    let c: Vec<u8> = (0..3).map(|i| (LIGHT[i] + t * (DARK[i] - LIGHT[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn open_svg(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(width),
        h = num(height)
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, num(width), num(height));
}

fn title(out: &mut String, width: f64, text: Option<&str>) {
    if let Some(t) = text {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="19" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            num(width / 2.0),
            escape(t)
        );
    }
}

fn legend_label(lambda: f64, alpha: Option<f64>) -> String {
    match alpha {
        Some(a) => format!("alpha = {a} (level {lambda:.4e})"),
        None => format!("level {lambda:.4e}"),
    }
}

/// Renders a cluster graph. Circles have radius proportional to the mode
/// index, the largest index drawn at `max_radius_frac` of the canvas width;
/// edge widths are proportional to the summed indices of their ends.
pub fn render_svg(graph: &ClusterGraph) -> Result<String> {
    let style = &graph.style;
    if !(style.width > 0.0 && style.height > 0.0) {
        return Err(Error::invalid("canvas size must be positive"));
    }
    let max_index = graph.max_index();
    if !(max_index > 0.0) {
        return Err(Error::NothingToDraw);
    }
    let legend_h = LEGEND_ROW * graph.levels.len() as f64 + 8.0;
    let top = TITLE_HEIGHT;
    let bottom = style.height - legend_h;
    let max_r = style.max_radius_frac * style.width;
    let max_edge = graph.levels.iter().flat_map(|l| l.edges.iter().map(|e| e.width)).fold(0.0, f64::max);

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for m in &graph.modes {
        for k in 0..2 {
            lo[k] = lo[k].min(m.pos2d[k]);
            hi[k] = hi[k].max(m.pos2d[k]);
        }
    }
    let avail = [style.width - 2.0 * max_r, bottom - top - 2.0 * max_r];
    let mut scale = f64::INFINITY;
    for k in 0..2 {
        let span = hi[k] - lo[k];
        if span > 0.0 {
            scale = scale.min(avail[k].max(1.0) / span);
        }
    }
    if !scale.is_finite() {
        scale = 1.0;
    }
    let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let place = |p: [f64; 2]| -> (f64, f64) {
        (style.width / 2.0 + (p[0] - center[0]) * scale, (top + bottom) / 2.0 - (p[1] - center[1]) * scale)
    };
    let pos = |id: usize| -> Result<(f64, f64)> {
        graph
            .modes
            .iter()
            .find(|m| m.id == id)
            .map(|m| place(m.pos2d))
            .ok_or_else(|| Error::invalid(format!("graph references unknown mode {id}")))
    };

    let mut out = String::new();
    open_svg(&mut out, style.width, style.height);
    title(&mut out, style.width, style.title.as_deref());
    let count = graph.levels.len();
    for (k, level) in graph.levels.iter().enumerate() {
        let color = ramp(k, count);
        let _ = writeln!(out, r#"<g class="level" data-lambda="{:e}">"#, level.lambda);
        for e in &level.edges {
            let (x1, y1) = pos(e.a)?;
            let (x2, y2) = pos(e.b)?;
            let w = if max_edge > 0.0 { e.width / max_edge * style.max_edge_width } else { 0.0 };
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="{}" stroke-linecap="round"/>"#,
                num(x1),
                num(y1),
                num(x2),
                num(y2),
                num(w.max(0.5))
            );
        }
        for c in &level.circles {
            let (x, y) = pos(c.mode)?;
            let _ = writeln!(
                out,
                r##"<circle cx="{}" cy="{}" r="{}" fill="{color}" stroke="#333333" stroke-width="0.6"/>"##,
                num(x),
                num(y),
                num(c.r / max_index * max_r)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    for m in &graph.modes {
        let (x, y) = place(m.pos2d);
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle" fill="#cc3300">{}</text>"##,
            num(x),
            num(y + 3.5),
            m.id
        );
    }
    for (k, level) in graph.levels.iter().enumerate() {
        let y = bottom + 4.0 + LEGEND_ROW * k as f64;
        let _ = writeln!(
            out,
            r##"<rect x="10" y="{}" width="14" height="12" fill="{}" stroke="#333333" stroke-width="0.5"/>"##,
            num(y),
            ramp(k, count)
        );
        let _ = writeln!(
            out,
            r#"<text x="30" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            num(y + 10.0),
            escape(&legend_label(level.lambda, level.alpha))
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_svg(graph: &ClusterGraph, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(graph)?)?;
    Ok(())
}

/// Pointwise test outcome at every node of a 2-D grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRaster {
    pub grid: GridSpec,
    pub regions: Vec<Region>,
}

/// A planar picture of data, estimated and reference level sets, and
/// optionally a region raster underneath.
#[derive(Clone, Debug, Default)]
pub struct LevelSetPlot {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub title: Option<String>,
    pub data: Vec<[f64; 2]>,
    pub estimate: Vec<Polyline>,
    pub reference: Vec<Polyline>,
    pub raster: Option<RegionRaster>,
}

fn region_fill(r: Region) -> &'static str {
    match r {
        Region::InsideHigh => "#f5d90a",
        Region::InsideLow => "#5cb85c",
        Region::Band => "#4a7fd4",
    }
}

/// Renders a [`LevelSetPlot`]. Raster cells are merged into horizontal runs.
pub fn render_levelset_svg(plot: &LevelSetPlot) -> Result<String> {
    let (w, h) = (plot.width, plot.height);
    if !(w > 0.0 && h > 0.0) || !(plot.upper[0] > plot.lower[0] && plot.upper[1] > plot.lower[1]) {
        return Err(Error::invalid("plot needs a positive canvas and a non-degenerate window"));
    }
    let top = TITLE_HEIGHT;
    let legend_h = LEGEND_ROW * 2.0 + 8.0;
    let area = [w - 20.0, h - top - legend_h];
    let sx = area[0] / (plot.upper[0] - plot.lower[0]);
    let sy = area[1] / (plot.upper[1] - plot.lower[1]);
    let map = |p: [f64; 2]| (10.0 + (p[0] - plot.lower[0]) * sx, top + area[1] - (p[1] - plot.lower[1]) * sy);

    let mut out = String::new();
    open_svg(&mut out, w, h);
    title(&mut out, w, plot.title.as_deref());
    if let Some(r) = &plot.raster {
        let g = &r.grid;
        if g.dim() != 2 || r.regions.len() != g.node_count() {
            return Err(Error::invalid("region raster must cover a 2-D grid"));
        }
        let (nx, ny) = (g.resolution()[0], g.resolution()[1]);
        let (dx, dy) = (g.spacing(0), g.spacing(1));
        let _ = writeln!(out, r#"<g class="regions" fill-opacity="0.45">"#);
        for j in 0..ny {
            let mut i = 0;
            while i < nx {
                let region = r.regions[g.flat_index(&[i, j])];
                let mut end = i + 1;
                while end < nx && r.regions[g.flat_index(&[end, j])] == region {
                    end += 1;
                }
                let (x0, y0) = map([g.coord(0, i) - dx / 2.0, g.coord(1, j) + dy / 2.0]);
                let (x1, y1) = map([g.coord(0, end - 1) + dx / 2.0, g.coord(1, j) - dy / 2.0]);
                let _ = writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                    num(x0),
                    num(y0),
                    num(x1 - x0),
                    num(y1 - y0),
                    region_fill(region)
                );
                i = end;
            }
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, r##"<g class="data" fill="#555555">"##);
    for &p in &plot.data {
        let (x, y) = map(p);
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="1.2"/>"#, num(x), num(y));
    }
    let _ = writeln!(out, "</g>");
    for (lines, color, dash) in
        [(&plot.reference, "#888888", " stroke-dasharray=\"4 3\""), (&plot.estimate, "#d62728", "")]
    {
        for line in lines.iter() {
            let mut d = String::new();
            for (k, &p) in line.points.iter().enumerate() {
                let (x, y) = map(p);
                let _ = write!(d, "{}{},{} ", if k == 0 { "M" } else { "L" }, num(x), num(y));
            }
            if line.closed {
                d.push('Z');
            }
            let _ =
                writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.trim_end());
        }
    }
    let y = h - legend_h + 4.0;
    let mut entries = vec![("#d62728", "estimated level set")];
    if !plot.reference.is_empty() {
        entries.push(("#888888", "reference level set"));
    }
    if plot.raster.is_some() {
        entries = vec![
            (region_fill(Region::InsideHigh), "above level"),
            (region_fill(Region::InsideLow), "below level"),
            (region_fill(Region::Band), "undecided"),
        ];
    }
    for (k, (color, label)) in entries.iter().enumerate() {
        let x = 10.0 + 150.0 * k as f64;
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="14" height="12" fill="{color}"/>"#, num(x), num(y));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{label}</text>"#,
            num(x + 20.0),
            num(y + 10.0)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
