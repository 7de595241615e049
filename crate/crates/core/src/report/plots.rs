//! SVG path plots, learning curves and success-rate bar charts.
//!
//! Output is a pure function of the inputs, so identical inputs give identical bytes.

use crate::eval::EvalSummary;
use crate::report::svg::Svg;
use crate::report::{fmt_float, MatrixRow, ReportError};
use crate::world::ArenaMap;

const GOAL_GREEN: &str = "#2ca02c";
const COLLISION_RED: &str = "#d62728";
const LIDAR_RED: &str = "#d62728";
const CAMERA_BLUE: &str = "#1f77b4";
const TIMEOUT_GREY: &str = "#7f7f7f";
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Affine world-to-pixel map with equal x and y scale; the y axis is flipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub scale: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl Viewport {
    /// Largest uniform scale that fits `[min, max]` into the pixel box, centred.
    pub fn fit(min: (f64, f64), max: (f64, f64), left: f64, top: f64, width: f64, height: f64) -> Self {
        let (w, h) = (max.0 - min.0, max.1 - min.1);
        let scale = (width / w).min(height / h);
        let pad_x = (width - scale * w) / 2.0;
        let pad_y = (height - scale * h) / 2.0;
        Self { scale, origin_x: left + pad_x - scale * min.0, origin_y: top + pad_y + scale * max.1 }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.origin_x + self.scale * x, self.origin_y - self.scale * y)
    }
}

fn paths_style(zone_color: &str) -> String {
    format!(
        ".arena{{fill:#ffffff;stroke:#000000;stroke-width:2}}\
         .obstacle{{fill:#555555}}\
         .zone{{fill:{zone_color};fill-opacity:0.12;stroke:{zone_color};stroke-opacity:0.5}}\
         .path{{fill:none;stroke:#333333;stroke-opacity:0.35;stroke-width:1}}\
         .target{{fill:none;stroke:{GOAL_GREEN};stroke-width:1}}\
         .marker-goal,.legend-goal{{fill:{GOAL_GREEN}}}\
         .marker-collision,.legend-collision{{fill:{COLLISION_RED}}}\
         .marker-timeout,.legend-timeout{{fill:{TIMEOUT_GREY}}}\
         .label{{font-family:sans-serif;font-size:13px}}"
    )
}

/// Every trace of `summary` over the arena, with zones, terminal markers and an outcome legend.
pub fn plot_paths(summary: &EvalSummary, map: &ArenaMap) -> String {
    let (zone_class, zone_color) =
        if summary.zone_kind == "camera-blackout" { ("zone zone-camera", CAMERA_BLUE) } else { ("zone zone-lidar", LIDAR_RED) };
    let mut svg = Svg::new(780.0, 600.0, &paths_style(zone_color));
    let b = map.bounds;
    let vp = Viewport::fit((b.min.x, b.min.y), (b.max.x, b.max.y), 20.0, 20.0, 560.0, 560.0);
    let rect = |svg: &mut Svg, min: (f64, f64), max: (f64, f64), class: &str| {
        let (x0, y0) = vp.map(min.0, max.1);
        svg.rect(x0, y0, vp.scale * (max.0 - min.0), vp.scale * (max.1 - min.1), class);
    };
    rect(&mut svg, (b.min.x, b.min.y), (b.max.x, b.max.y), "arena");
    for ob in &map.obstacles {
        rect(&mut svg, (ob.min.x, ob.min.y), (ob.max.x, ob.max.y), "obstacle");
    }
    let mut zones: Vec<[f64; 3]> = Vec::new();
    for t in &summary.paths {
        for z in &t.zones {
            if !zones.contains(z) {
                zones.push(*z);
            }
        }
    }
    for z in &zones {
        let h = z[2] / 2.0;
        rect(&mut svg, (z[0] - h, z[1] - h), (z[0] + h, z[1] + h), zone_class);
    }
    if summary.paths.is_empty() {
        log::warn!("summary for zone size {} has no path traces; plotting an empty arena", summary.zone_size);
        svg.text(300.0, 300.0, "middle", "label", "no traces recorded");
    }
    for t in &summary.paths {
        let (gx, gy) = vp.map(t.goal[0], t.goal[1]);
        svg.circle(gx, gy, vp.scale * 0.5, "target");
        let points: Vec<(f64, f64)> = t.poses.iter().map(|p| vp.map(p[0], p[1])).collect();
        svg.polyline(&points, &format!("path path-{}", t.outcome));
    }
    for t in &summary.paths {
        if let Some(last) = t.poses.last() {
            let (x, y) = vp.map(last[0], last[1]);
            let kind = match t.outcome.as_str() {
                "goal" => "goal",
                "collision" => "collision",
                _ => "timeout",
            };
            svg.circle(x, y, 4.0, &format!("marker marker-{kind}"));
        }
    }
    let counts = summary.pooled();
    let mut y = 40.0;
    svg.text(600.0, y, "start", "label", &format!("{} {} zone {}", summary.map, summary.zone_kind, fmt_float(summary.zone_size)));
    for (kind, n) in [("goal", counts.success), ("collision", counts.collision), ("timeout", counts.timeout)] {
        y += 24.0;
        svg.rect(600.0, y - 10.0, 12.0, 12.0, &format!("legend-{kind}"));
        let label = if kind == "goal" { "success" } else { kind };
        svg.text(620.0, y, "start", "label", &format!("{label}: {n}"));
    }
    svg.finish()
}

/// Trailing moving average over `window` points; NaN entries are skipped.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let finite: Vec<f64> = values[lo..=i].iter().copied().filter(|v| v.is_finite()).collect();
            if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub label: String,
    /// `(step, mean episode reward)`.
    pub points: Vec<(f64, f64)>,
}

fn palette_style(extra: &str) -> String {
    let mut style = String::from(".axis{stroke:#000000;stroke-width:1}.grid{stroke:#dddddd;stroke-width:1}.label{font-family:sans-serif;font-size:12px}");
    for (i, c) in PALETTE.iter().enumerate() {
        style.push_str(&format!(".s{i}{{stroke:{c};fill:{c}}}"));
    }
    style.push_str(extra);
    style
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect()
}

/// Learning curves on shared axes, smoothed over `smoothing` points.
pub fn plot_curve(series: &[CurveSeries], smoothing: usize) -> String {
    let (left, top, width, height) = (70.0, 20.0, 560.0, 360.0);
    let mut svg = Svg::new(820.0, 430.0, &palette_style(".line{fill:none;stroke-width:1.5}"));
    let smoothed: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            let ys = smooth(&s.points.iter().map(|p| p.1).collect::<Vec<_>>(), smoothing);
            s.points.iter().zip(ys).map(|(p, y)| (p.0, y)).collect()
        })
        .collect();
    let finite = smoothed.iter().flatten().filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x_max, mut y_lo, mut y_hi) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for p in finite {
        x_max = x_max.max(p.0);
        y_lo = y_lo.min(p.1);
        y_hi = y_hi.max(p.1);
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (-1.0, 1.0);
    }
    if y_hi - y_lo < 1e-9 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let px = |x: f64| left + width * x / x_max;
    let py = |y: f64| top + height * (y_hi - y) / (y_hi - y_lo);
    for t in nice_ticks(y_lo, y_hi, 5) {
        svg.line(left, py(t), left + width, py(t), "grid");
        svg.text(left - 6.0, py(t) + 4.0, "end", "label", &fmt_float(round_tick(t)));
    }
    for t in nice_ticks(0.0, x_max, 5) {
        svg.text(px(t), top + height + 18.0, "middle", "label", &format!("{}", t.round()));
    }
    svg.line(left, top + height, left + width, top + height, "axis");
    svg.line(left, top, left, top + height, "axis");
    svg.text(left + width / 2.0, top + height + 40.0, "middle", "label", "environment steps");
    for (i, (s, pts)) in series.iter().zip(&smoothed).enumerate() {
        let class = format!("line s{}", i % PALETTE.len());
        // NaN points split the line
        let mut run = Vec::new();
        for &(x, y) in pts {
            if y.is_finite() {
                run.push((px(x), py(y)));
            } else if !run.is_empty() {
                svg.polyline(&std::mem::take(&mut run), &class);
            }
        }
        if !run.is_empty() {
            svg.polyline(&run, &class);
        }
        let ly = top + 14.0 + 20.0 * i as f64;
        svg.line(left + width + 16.0, ly - 4.0, left + width + 36.0, ly - 4.0, &class);
        svg.text(left + width + 42.0, ly, "start", "label", &s.label);
    }
    svg.finish()
}

fn round_tick(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn first_seen<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

/// Grouped success-rate bars, one panel per training zone size.
///
/// Bars are grouped by evaluation zone size with one bar per (algorithm, seed)
/// series. Error bars show the standard error across repeats; holes are hatched.
pub fn plot_matrix(rows: &[MatrixRow]) -> Result<String, ReportError> {
    let train_sizes = first_seen(rows.iter().map(|r| r.train_size));
    let eval_sizes = first_seen(rows.iter().map(|r| r.eval_size));
    let series = first_seen(rows.iter().map(|r| (r.algorithm.clone(), r.seed)));
    let complete = train_sizes.iter().any(|t| rows.iter().filter(|r| r.train_size == *t).all(|r| !r.is_hole()));
    if !complete {
        return Err(ReportError::Format { what: "matrix", message: "no training regime has a complete row".into() });
    }
    let multi_seed = first_seen(series.iter().map(|s| s.1)).len() > 1;
    let label = |s: &(String, u64)| if multi_seed { format!("{} seed {}", s.0, s.1) } else { s.0.clone() };

    let (left, panel_w, panel_h, gap) = (60.0, 520.0, 220.0, 60.0);
    let height = 20.0 + train_sizes.len() as f64 * (panel_h + gap);
    let mut svg = Svg::new(780.0, height, &palette_style(".bar{stroke:none}.hole{fill:url(#hatch);stroke:#888888}.errbar{stroke:#000000;stroke-width:1.5}"));
    svg.raw(r##"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" stroke="#888888" stroke-width="2"/></pattern></defs>"##);
    let group_w = panel_w / eval_sizes.len() as f64;
    let bar_w = group_w * 0.8 / series.len() as f64;
    for (pi, train) in train_sizes.iter().enumerate() {
        let top = 20.0 + pi as f64 * (panel_h + gap);
        let py = |y: f64| top + panel_h * (1.0 - y);
        for t in nice_ticks(0.0, 1.0, 4) {
            svg.line(left, py(t), left + panel_w, py(t), "grid");
            svg.text(left - 6.0, py(t) + 4.0, "end", "label", &fmt_float(t));
        }
        svg.line(left, top + panel_h, left + panel_w, top + panel_h, "axis");
        svg.line(left, top, left, top + panel_h, "axis");
        svg.text(left + panel_w / 2.0, top - 6.0, "middle", "label", &format!("trained on {}x{}", fmt_float(*train), fmt_float(*train)));
        for (gi, eval) in eval_sizes.iter().enumerate() {
            let gx = left + gi as f64 * group_w + group_w * 0.1;
            svg.text(left + (gi as f64 + 0.5) * group_w, top + panel_h + 16.0, "middle", "label", &format!("{}x{}", fmt_float(*eval), fmt_float(*eval)));
            for (si, s) in series.iter().enumerate() {
                let Some(row) = rows.iter().find(|r| r.train_size == *train && r.eval_size == *eval && r.algorithm == s.0 && r.seed == s.1)
                else {
                    continue;
                };
                let x = gx + si as f64 * bar_w;
                if row.is_hole() {
                    svg.rect(x, top, bar_w, panel_h, &format!("bar hole s{}", si % PALETTE.len()));
                    continue;
                }
                let m = row.mean_success_rate.clamp(0.0, 1.0);
                svg.rect(x, py(m), bar_w, panel_h * m, &format!("bar s{}", si % PALETTE.len()));
                let e = row.stderr_success_rate;
                svg.line(x + bar_w / 2.0, py((m - e).max(0.0)), x + bar_w / 2.0, py((m + e).min(1.0)), "errbar");
            }
        }
        if pi == 0 {
            for (si, s) in series.iter().enumerate() {
                let ly = top + 14.0 + 20.0 * si as f64;
                svg.rect(left + panel_w + 20.0, ly - 10.0, 12.0, 12.0, &format!("legend s{}", si % PALETTE.len()));
                svg.text(left + panel_w + 38.0, ly, "start", "label", &label(s));
            }
        }
    }
    svg.text(left + panel_w / 2.0, height - 8.0, "middle", "label", &format!("success rate by evaluation zone size ({} cells)", rows.len()));
    Ok(svg.finish())
}
