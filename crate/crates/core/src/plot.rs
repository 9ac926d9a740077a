//! Plain SVG figures for sweeps and personalisation runs.
//!
//! Elements carry class names (`rest-marker`, `theta-star`, ...) so tests and
//! scripts can find them without rendering.

use crate::harness::{RunRow, EVENT_REST};
use crate::objective::{CostSpec, SynergyCostMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("cannot write plot: {0}")]
    Io(#[from] std::io::Error),
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const TRUNK_COLOUR: &str = "#1f77b4";
const SHOULDER_COLOUR: &str = "#d62728";
const THETA_COLOUR: &str = "#2ca02c";
const COST_COLOUR: &str = "#9467bd";

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let (lo, hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !lo.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        let pad = if hi > lo {
            0.05 * (hi - lo)
        } else {
            0.5 * lo.abs().max(1e-3)
        };
        Range {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn include(self, v: f64) -> Range {
        Range {
            lo: self.lo.min(v),
            hi: self.hi.max(v),
        }
    }

    fn ticks(self) -> Vec<f64> {
        let span = self.hi - self.lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

struct Chart {
    x: Range,
    y: Range,
    body: String,
}

impl Chart {
    fn new(title: &str, x_label: &str, y_label: &str, x: Range, y: Range) -> Chart {
        let mut c = Chart {
            x,
            y,
            body: String::new(),
        };
        let (l, r, t, b) = (
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM,
        );
        let _ = writeln!(
            c.body,
            r#"<text class="title" x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(
            c.body,
            r##"<rect class="frame" x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            r - l,
            b - t
        );
        for tx in x.ticks() {
            let px = c.px(tx);
            let _ = writeln!(
                c.body,
                r##"<line x1="{px:.1}" y1="{b}" x2="{px:.1}" y2="{:.1}" stroke="#333"/><text x="{px:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"##,
                b + 5.0,
                b + 18.0,
                fmt_tick(tx)
            );
        }
        for ty in y.ticks() {
            let py = c.py(ty);
            let _ = writeln!(
                c.body,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{l}" y2="{py:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"##,
                l - 5.0,
                l - 8.0,
                py + 4.0,
                fmt_tick(ty)
            );
        }
        let _ = writeln!(
            c.body,
            r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
            (l + r) / 2.0,
            HEIGHT - 10.0,
            escape(x_label)
        );
        let _ = writeln!(
            c.body,
            r#"<text class="y-label" transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle" font-size="13">{}</text>"#,
            (t + b) / 2.0,
            escape(y_label)
        );
        c
    }

    fn px(&self, x: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x.lo) / (self.x.hi - self.x.lo) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (y - self.y.lo) / (self.y.hi - self.y.lo) * h
    }

    fn points(&mut self, class: &str, colour: &str, pts: impl Iterator<Item = (f64, f64)>) {
        let _ = writeln!(self.body, r#"<g class="{class}" fill="{colour}">"#);
        for (x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#,
                self.px(x),
                self.py(y)
            );
        }
        self.body.push_str("</g>\n");
    }

    fn polyline(
        &mut self,
        class: &str,
        colour: &str,
        dash: Option<&str>,
        pts: impl Iterator<Item = (f64, f64)>,
    ) {
        let coords: Vec<String> = pts
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = dash.map_or(String::new(), |d| format!(r#" stroke-dasharray="{d}""#));
        let _ = writeln!(
            self.body,
            r#"<polyline class="{class}" fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.join(" ")
        );
    }

    fn hline(&mut self, class: &str, colour: &str, y: f64) {
        self.polyline(
            class,
            colour,
            Some("6,4"),
            [(self.x.lo, y), (self.x.hi, y)].into_iter(),
        );
    }

    fn rest_marker(&mut self, x: f64) {
        let px = self.px(x);
        let _ = writeln!(
            self.body,
            r##"<line class="rest-marker" x1="{px:.2}" y1="{MARGIN_TOP}" x2="{px:.2}" y2="{:.1}" stroke="#888" stroke-dasharray="2,3"/>"##,
            HEIGHT - MARGIN_BOTTOM
        );
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (label, colour)) in entries.iter().enumerate() {
            let y = MARGIN_TOP + 14.0 + 16.0 * i as f64;
            let x = WIDTH - MARGIN_RIGHT - 150.0;
            let _ = writeln!(
                self.body,
                r#"<g class="legend"><rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{colour}"/><text x="{:.1}" y="{y:.1}" font-size="11">{}</text></g>"#,
                y - 9.0,
                x + 14.0,
                escape(label)
            );
        }
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn rest_iterations(rows: &[RunRow]) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.has_event(EVENT_REST))
        .map(|r| r.iteration as f64 - 0.5)
        .collect()
}

/// Synergy against peak trunk and shoulder displacement, with able-bodied
/// reference levels.
pub fn synergy_displacement_svg(rows: &[RunRow], title: &str) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let reference = CostSpec::able_bodied_targets();
    let x = Range::of(rows.iter().map(|r| r.theta_cmd));
    let y = Range::of(
        rows.iter()
            .flat_map(|r| [r.trunk_disp_m, r.shoulder_disp_m]),
    )
    .include(reference.target_trunk)
    .include(reference.target_shoulder);
    let mut c = Chart::new(title, "synergy θ", "displacement (m)", x, y);
    c.hline("reference-trunk", TRUNK_COLOUR, reference.target_trunk);
    c.hline(
        "reference-shoulder",
        SHOULDER_COLOUR,
        reference.target_shoulder,
    );
    c.points(
        "trunk",
        TRUNK_COLOUR,
        rows.iter().map(|r| (r.theta_cmd, r.trunk_disp_m)),
    );
    c.points(
        "shoulder",
        SHOULDER_COLOUR,
        rows.iter().map(|r| (r.theta_cmd, r.shoulder_disp_m)),
    );
    c.legend(&[("trunk", TRUNK_COLOUR), ("shoulder", SHOULDER_COLOUR)]);
    Ok(c.finish())
}

/// Cost samples with the fitted quadratic and the optimum marked.
pub fn cost_map_svg(
    rows: &[RunRow],
    map: &SynergyCostMap,
    title: &str,
) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let (lo, hi) = map.theta_range;
    let curve: Vec<(f64, f64)> = (0..=200)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / 200.0;
            (t, map.eval(t))
        })
        .collect();
    let x = Range::of(rows.iter().map(|r| r.theta_cmd));
    let y = Range::of(
        rows.iter()
            .map(|r| r.cost_m2)
            .chain(curve.iter().map(|p| p.1)),
    );
    let mut c = Chart::new(title, "synergy θ", "cost (m²)", x, y);
    c.points(
        "cost",
        COST_COLOUR,
        rows.iter().map(|r| (r.theta_cmd, r.cost_m2)),
    );
    c.polyline("fit", "#000", None, curve.into_iter());
    if let Some(star) = map.theta_star {
        let px = c.px(star);
        let _ = writeln!(
            c.body,
            r##"<g class="theta-star" data-theta-star="{star}"><line x1="{px:.2}" y1="{MARGIN_TOP}" x2="{px:.2}" y2="{:.1}" stroke="#000" stroke-dasharray="4,3"/><text x="{:.2}" y="{:.1}" font-size="12">θ* = {star:.3}</text></g>"##,
            HEIGHT - MARGIN_BOTTOM,
            px + 4.0,
            MARGIN_TOP + 14.0
        );
    }
    Ok(c.finish())
}

/// Commanded synergy and cost over iterations, one panel each.
pub fn theta_cost_svg(rows: &[RunRow], title: &str) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let rests = rest_iterations(rows);
    let x = Range::of(rows.iter().map(|r| r.iteration as f64));
    let panel = |label: &str,
                 y: Range,
                 class: &str,
                 colour: &str,
                 pts: Vec<(f64, f64)>,
                 estimate: Option<Vec<(f64, f64)>>| {
        let mut c = Chart::new(label, "iteration", label, x, y);
        c.polyline(class, colour, None, pts.into_iter());
        if let Some(est) = estimate {
            c.polyline("theta-hat", "#000", Some("3,2"), est.into_iter());
        }
        for &r in &rests {
            c.rest_marker(r);
        }
        c
    };
    let theta: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.iteration as f64, r.theta_cmd))
        .collect();
    let hat: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.theta_hat.map(|h| (r.iteration as f64, h)))
        .collect();
    let top = panel(
        "synergy θ",
        Range::of(theta.iter().map(|p| p.1).chain(hat.iter().map(|p| p.1))),
        "theta",
        THETA_COLOUR,
        theta,
        (!hat.is_empty()).then_some(hat),
    );
    let cost: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.iteration as f64, r.cost_m2))
        .collect();
    let bottom = panel(
        "cost (m²)",
        Range::of(cost.iter().map(|p| p.1)).include(0.0),
        "cost",
        COST_COLOUR,
        cost,
        None,
    );
    Ok(stack(title, &[top, bottom]))
}

/// Trunk and shoulder displacement over iterations.
pub fn displacement_svg(rows: &[RunRow], title: &str) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let x = Range::of(rows.iter().map(|r| r.iteration as f64));
    let y = Range::of(
        rows.iter()
            .flat_map(|r| [r.trunk_disp_m, r.shoulder_disp_m]),
    )
    .include(0.0);
    let mut c = Chart::new(title, "iteration", "displacement (m)", x, y);
    c.polyline(
        "trunk",
        TRUNK_COLOUR,
        None,
        rows.iter().map(|r| (r.iteration as f64, r.trunk_disp_m)),
    );
    c.polyline(
        "shoulder",
        SHOULDER_COLOUR,
        None,
        rows.iter().map(|r| (r.iteration as f64, r.shoulder_disp_m)),
    );
    for r in rest_iterations(rows) {
        c.rest_marker(r);
    }
    c.legend(&[("trunk", TRUNK_COLOUR), ("shoulder", SHOULDER_COLOUR)]);
    Ok(c.finish())
}

fn stack(title: &str, charts: &[Chart]) -> String {
    let total = HEIGHT * charts.len() as f64 + 30.0;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{total}\" viewBox=\"0 0 {WIDTH} {total}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text class=\"title\" x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
    for (i, c) in charts.iter().enumerate() {
        let _ = writeln!(
            out,
            "<g class=\"panel\" transform=\"translate(0,{:.1})\">\n{}</g>",
            30.0 + HEIGHT * i as f64,
            c.body
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes the figures that apply: the synergy maps when `map` is given,
/// the iteration traces otherwise.
pub fn emit_plots(
    rows: &[RunRow],
    map: Option<&SynergyCostMap>,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut emit = |suffix: &str, svg: String| -> Result<(), PlotError> {
        let path = dir.join(format!("{stem}_{suffix}.svg"));
        std::fs::write(&path, svg)?;
        files.push(path);
        Ok(())
    };
    match map {
        Some(map) => {
            emit(
                "displacement_map",
                synergy_displacement_svg(rows, &format!("{stem}: synergy vs displacement"))?,
            )?;
            emit(
                "cost_map",
                cost_map_svg(rows, map, &format!("{stem}: synergy-cost map"))?,
            )?;
        }
        None => {
            emit(
                "theta_cost",
                theta_cost_svg(rows, &format!("{stem}: synergy and cost"))?,
            )?;
            emit(
                "displacement",
                displacement_svg(rows, &format!("{stem}: compensation"))?,
            )?;
        }
    }
    Ok(files)
}
