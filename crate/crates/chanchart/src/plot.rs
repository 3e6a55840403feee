//! Minimal hand-rolled SVG output.
//!
//! Two figures: chart scatters, where every sample keeps one color
//! derived from its true position so distortions are visible at a
//! glance, and the per-AP power-versus-distance cloud. Numbers are
//! written with fixed precision, so the same inputs always produce the
//! same bytes.

use std::fmt::Write;

use ndarray::Array2;

const VIEW: f64 = 640.0;
const MARGIN: f64 = 48.0;

/// Fixed stroke palette for per-AP series.
const AP_PALETTE: [&str; 8] = [
    "#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#2c3e50",
];

/// One scatter figure: points in plot coordinates with per-point fill
/// colors, optionally overlaid with AP markers.
pub struct ChartPlot<'a> {
    pub title: &'a str,
    /// N x 2 point coordinates (chart or truth).
    pub points: &'a Array2<f64>,
    /// Fill color per point, usually from [`position_colors`].
    pub colors: &'a [String],
    /// AP positions to mark; `None` for charts whose coordinates are not
    /// anchored to the deployment frame.
    pub ap_positions: Option<&'a [Vec<f64>]>,
}

/// Maps a point in the unit square to a hex color. Smooth in both
/// coordinates and distinct at the corners, so neighborhoods keep
/// similar hues in every figure.
pub fn color_for_position(u: f64, v: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let v = v.clamp(0.0, 1.0);
    let r = 40.0 + 200.0 * u;
    let g = 40.0 + 200.0 * v;
    let b = 230.0 - 95.0 * (u + v);
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// One color per row of `truth` (N x 2), keyed by normalized position
/// within the truth bounding box.
pub fn position_colors(truth: &Array2<f64>) -> Vec<String> {
    let (min, max) = bounds(truth.rows().into_iter().map(|r| (r[0], r[1])));
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (span(min.0, max.0), span(min.1, max.1));
    truth
        .rows()
        .into_iter()
        .map(|r| color_for_position((r[0] - min.0) / sx, (r[1] - min.1) / sy))
        .collect()
}

/// Renders a scatter figure to an SVG string.
pub fn scatter_svg(plot: &ChartPlot) -> String {
    assert_eq!(
        plot.points.nrows(),
        plot.colors.len(),
        "one color per point"
    );
    let all_points = plot
        .points
        .rows()
        .into_iter()
        .map(|r| (r[0], r[1]))
        .chain(
            plot.ap_positions
                .into_iter()
                .flatten()
                .map(|p| (p[0], p[1])),
        );
    let (min, max) = bounds(all_points);
    let to_view = viewport(min, max);

    let mut svg = svg_header(plot.title);
    for (row, color) in plot.points.rows().into_iter().zip(plot.colors) {
        let (x, y) = to_view(row[0], row[1]);
        writeln!(
            svg,
            r##"<circle cx="{x:.3}" cy="{y:.3}" r="2.5" fill="{color}"/>"##
        )
        .unwrap();
    }
    if let Some(aps) = plot.ap_positions {
        for (a, ap) in aps.iter().enumerate() {
            let (x, y) = to_view(ap[0], ap[1]);
            writeln!(
                svg,
                r##"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="#111111"/>"##,
                x,
                y - 7.0,
                x - 6.0,
                y + 5.0,
                x + 6.0,
                y + 5.0
            )
            .unwrap();
            writeln!(
                svg,
                r##"<text x="{:.3}" y="{:.3}" font-size="11" fill="#111111">AP{a}</text>"##,
                x + 8.0,
                y + 4.0
            )
            .unwrap();
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Shifts each AP's power column so its maximum sits at 0 dB, which
/// makes the distance falloff of different APs comparable. Columns
/// without a finite value are left untouched.
pub fn normalize_powers_per_ap(powers_db: &Array2<f64>) -> Array2<f64> {
    let mut out = powers_db.clone();
    for mut col in out.columns_mut() {
        let max = col.iter().copied().filter(|p| p.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if max.is_finite() {
            col.mapv_inplace(|p| p - max);
        }
    }
    out
}

/// Scatter of received power against true UE-AP distance, one color per
/// AP. `distances_m` and `powers_db` are both N x A; powers are plotted
/// as given (normalize first for a relative view).
pub fn power_distance_svg(distances_m: &Array2<f64>, powers_db: &Array2<f64>) -> String {
    assert_eq!(distances_m.dim(), powers_db.dim(), "one power per distance");
    let finite = distances_m
        .iter()
        .zip(powers_db.iter())
        .filter(|(_, p)| p.is_finite())
        .map(|(d, p)| (*d, *p));
    let (min, max) = bounds(finite);
    let to_view = viewport(min, max);

    let mut svg = svg_header("received power vs. distance");
    for a in 0..powers_db.ncols() {
        let color = AP_PALETTE[a % AP_PALETTE.len()];
        for i in 0..powers_db.nrows() {
            let p = powers_db[[i, a]];
            if !p.is_finite() {
                continue;
            }
            let (x, y) = to_view(distances_m[[i, a]], p);
            writeln!(
                svg,
                r##"<circle cx="{x:.3}" cy="{y:.3}" r="1.8" fill="{color}" fill-opacity="0.6"/>"##
            )
            .unwrap();
        }
        writeln!(
            svg,
            r##"<text x="{:.3}" y="{:.3}" font-size="11" fill="{color}">AP{a}</text>"##,
            MARGIN + 8.0 + 40.0 * a as f64,
            MARGIN - 8.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        r##"<text x="{:.3}" y="{:.3}" font-size="12" fill="#111111">distance [m]</text>"##,
        VIEW / 2.0 - 30.0,
        VIEW - 10.0
    )
    .unwrap();
    writeln!(
        svg,
        r##"<text x="12" y="{:.3}" font-size="12" fill="#111111" transform="rotate(-90 12 {:.3})">power [dB]</text>"##,
        VIEW / 2.0,
        VIEW / 2.0
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

fn svg_header(title: &str) -> String {
    let mut svg = String::with_capacity(4096);
    writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{VIEW}" height="{VIEW}" viewBox="0 0 {VIEW} {VIEW}">"##
    )
    .unwrap();
    writeln!(svg, r##"<rect width="{VIEW}" height="{VIEW}" fill="#ffffff"/>"##).unwrap();
    writeln!(
        svg,
        r##"<rect x="{m:.3}" y="{m:.3}" width="{w:.3}" height="{w:.3}" fill="none" stroke="#888888"/>"##,
        m = MARGIN,
        w = VIEW - 2.0 * MARGIN
    )
    .unwrap();
    writeln!(
        svg,
        r##"<text x="{m:.3}" y="24" font-size="14" fill="#111111">{title}</text>"##,
        m = MARGIN
    )
    .unwrap();
    svg
}

/// Bounding box of an (x, y) stream; a safe unit box when empty or flat.
fn bounds(points: impl Iterator<Item = (f64, f64)>) -> ((f64, f64), (f64, f64)) {
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in points {
        min.0 = min.0.min(x);
        min.1 = min.1.min(y);
        max.0 = max.0.max(x);
        max.1 = max.1.max(y);
    }
    if !min.0.is_finite() || !max.0.is_finite() {
        return ((0.0, 0.0), (1.0, 1.0));
    }
    if max.0 - min.0 <= 0.0 {
        max.0 = min.0 + 1.0;
    }
    if max.1 - min.1 <= 0.0 {
        max.1 = min.1 + 1.0;
    }
    (min, max)
}

/// Maps data coordinates to view coordinates, flipping y so "up" means
/// increasing data values.
fn viewport(min: (f64, f64), max: (f64, f64)) -> impl Fn(f64, f64) -> (f64, f64) {
    let inner = VIEW - 2.0 * MARGIN;
    let sx = inner / (max.0 - min.0);
    let sy = inner / (max.1 - min.1);
    move |x, y| {
        (
            MARGIN + (x - min.0) * sx,
            VIEW - MARGIN - (y - min.1) * sy,
        )
    }
}
