//! SVG heatmaps and CSV traces.

use std::fmt::Write as _;

use serde::Serialize;

use crate::diagnostics::{IdentitySample, NeumannTrace};
use crate::field::GridField;

/// Viridis, sampled at nine stops. Every heatmap uses this map.
const STOPS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];
const MASKED: &str = "#d9d9d9";

/// Colour for `t` in `[0, 1]`, clamped.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let mut c = [0u8; 3];
    for i in 0..3 {
        c[i] = (STOPS[k][i] as f64 * (1.0 - f) + STOPS[k + 1][i] as f64 * f).round() as u8;
    }
    c
}

/// Cells per side are capped at this; finer grids are subsampled.
const MAX_CELLS: usize = 192;

/// Heatmap of `values` (one entry per node of `field.grid`; `None` drawn grey).
pub fn heatmap_svg(field: &GridField, values: &[Option<f64>], title: &str) -> String {
    let grid = field.grid;
    let stride = grid.nx.max(grid.ny).div_ceil(MAX_CELLS).max(1);
    let (cols, rows) = (grid.nx.div_ceil(stride), grid.ny.div_ceil(stride));
    let defined = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = defined.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };

    let cell = 4usize;
    let (w, h) = (cols * cell, rows * cell);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w,
        h + 40,
        w,
        h + 40
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="{MASKED}"/>"#);
    for r in 0..rows {
        for c in 0..cols {
            let idx = grid.index(c * stride, r * stride);
            let Some(v) = values[idx].filter(|v| v.is_finite()) else { continue };
            let [cr, cg, cb] = colormap((v - lo) / span);
            // row 0 is the bottom of the domain
            let y = (rows - 1 - r) * cell;
            let _ = writeln!(s, r##"<rect x="{}" y="{y}" width="{cell}" height="{cell}" fill="#{cr:02x}{cg:02x}{cb:02x}"/>"##, c * cell);
        }
    }
    let esc = title.replace('&', "&amp;").replace('<', "&lt;");
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (f64::NAN, f64::NAN) };
    let _ = writeln!(s, r#"<text x="4" y="{}" font-family="monospace" font-size="12">{esc}</text>"#, h + 16);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-family="monospace" font-size="11">min {lo:.4e}  max {hi:.4e}</text>"#, h + 32);
    s.push_str("</svg>\n");
    s
}

/// The field's own values on nodes inside the domain.
pub fn inside_values(field: &GridField) -> Vec<Option<f64>> {
    field.values.iter().zip(&field.tags).map(|(v, t)| t.inside().then_some(*v)).collect()
}

#[derive(Serialize)]
struct TraceRow {
    component: usize,
    s: f64,
    x: f64,
    y: f64,
    nx: f64,
    ny: f64,
    curvature: f64,
    u_nu: f64,
}

#[derive(Serialize)]
struct IdentityRow {
    x: f64,
    y: f64,
    curvature: f64,
    u_nu: f64,
    u_nunu: f64,
    residual: f64,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows are flat records");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn trace_csv(trace: &NeumannTrace) -> String {
    to_csv(trace.samples.iter().map(|s| TraceRow {
        component: s.component,
        s: s.s,
        x: s.point.x,
        y: s.point.y,
        nx: s.normal.x,
        ny: s.normal.y,
        curvature: s.curvature,
        u_nu: s.u_nu,
    }))
}

pub fn identity_csv(samples: &[IdentitySample]) -> String {
    to_csv(samples.iter().map(|s| IdentityRow {
        x: s.point.x,
        y: s.point.y,
        curvature: s.curvature,
        u_nu: s.u_nu,
        u_nunu: s.u_nunu,
        residual: s.residual,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_grid, DomainSpec, Grid};

    #[test]
    fn colormap_endpoints_and_clamping() {
        assert_eq!(colormap(0.0), STOPS[0]);
        assert_eq!(colormap(1.0), STOPS[8]);
        assert_eq!(colormap(7.0), STOPS[8]);
        assert_eq!(colormap(f64::NAN), STOPS[0]);
        assert_eq!(colormap(0.5), STOPS[4]);
    }

    #[test]
    fn heatmap_is_subsampled_and_well_formed() {
        let d = DomainSpec::disk(1.0);
        let grid = Grid::covering(&d, 1.0 / 256.0, 0.1).unwrap();
        let class = classify_grid(&d, &grid, 0.01).unwrap();
        let f = GridField::from_fn(grid, class.tags, |x| x.x);
        let svg = heatmap_svg(&f, &inside_values(&f), "u <x>");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("u &lt;x>"));
        assert!(svg.matches("<rect").count() <= MAX_CELLS * MAX_CELLS + 1);
    }
}
