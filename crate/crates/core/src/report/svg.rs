//! Deterministic SVG line diagrams.

use std::fmt::Write as _;

use thiserror::Error;

use crate::thermo::{FormationLine, StabilityMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvgError {
    #[error("nothing to draw")]
    EmptyData,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Fermi-level step for the sampled lower envelope, eV.
pub const FERMI_GRID_EV: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FormationDiagram {
    pub title: String,
    pub gap_ev: f64,
    pub lines: Vec<FormationLine>,
    pub stability: Option<StabilityMap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelsDiagram {
    pub title: String,
    pub fields_t: Vec<f64>,
    /// One energy series (MHz) per connected level, each as long as `fields_t`.
    pub branches: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagram {
    Formation(FormationDiagram),
    Levels(LevelsDiagram),
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn widen(a: f64, b: f64) -> (f64, f64) {
    if b > a {
        let pad = 0.05 * (b - a);
        (a - pad, b + pad)
    } else {
        let pad = a.abs().max(1.0) * 0.5;
        (a - pad, a + pad)
    }
}

/// Round tick step: 1, 2 or 5 times a power of ten, about six ticks.
fn tick_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(a: f64, b: f64) -> Vec<f64> {
    let step = tick_step(b - a);
    let first = (a / step).ceil() as i64;
    let last = (b / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        format!("{:.decimals$}", 0.0)
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{l:.3}" y="{t:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    let xs = tick_step(f.x1 - f.x0);
    for x in ticks(f.x0, f.x1) {
        let p = f.px(x);
        let _ = writeln!(out, r#"<line x1="{p:.3}" y1="{b:.3}" x2="{p:.3}" y2="{:.3}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{p:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            tick_label(x, xs)
        );
    }
    let ys = tick_step(f.y1 - f.y0);
    for y in ticks(f.y0, f.y1) {
        let p = f.py(y);
        let _ = writeln!(out, r#"<line x1="{:.3}" y1="{p:.3}" x2="{l:.3}" y2="{p:.3}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            l - 8.0,
            p + 4.0,
            tick_label(y, ys)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.3}" text-anchor="middle" transform="rotate(-90 20 {:.3})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, class: &str) {
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.3},{:.3}", f.px(x), f.py(y))).collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        coords.join(" ")
    );
}

fn formation_svg(d: &FormationDiagram) -> Result<String, SvgError> {
    if d.lines.is_empty() || !(d.gap_ev > 0.0) {
        return Err(SvgError::EmptyData);
    }
    let gap = d.gap_ev;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for l in &d.lines {
        for x in [0.0, gap] {
            lo = lo.min(l.at(x));
            hi = hi.max(l.at(x));
        }
    }
    let f = Frame::new(0.0, gap, lo, hi);
    let mut out = String::new();
    header(&mut out, &d.title);
    axes(&mut out, &f, "Fermi level E_F (eV)", "Formation energy (eV)");
    for (k, l) in d.lines.iter().enumerate() {
        polyline(&mut out, &f, &[(0.0, l.at(0.0)), (gap, l.at(gap))], PALETTE[k % PALETTE.len()], "line");
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" fill="{}">q = {:+}</text>"#,
            f.px(gap) - 40.0,
            f.py(l.at(gap)) - 4.0,
            PALETTE[k % PALETTE.len()],
            l.charge
        );
    }
    if let Some(map) = &d.stability {
        let n = (gap / FERMI_GRID_EV).round() as usize;
        let mut path = String::new();
        for i in 0..=n {
            let x = (i as f64 * FERMI_GRID_EV).min(gap);
            let q = map.stable_charge_at(x).unwrap_or(0);
            let y = d
                .lines
                .iter()
                .filter(|l| l.charge == q)
                .map(|l| l.at(x))
                .fold(f64::INFINITY, f64::min);
            let _ = write!(path, "{}{:.3},{:.3}", if i == 0 { "M" } else { " L" }, f.px(x), f.py(y));
        }
        let _ = writeln!(
            out,
            r#"<path class="envelope" d="{path}" fill="none" stroke="black" stroke-width="3" stroke-opacity="0.35"/>"#
        );
        for (x, q1, _) in map.breakpoints() {
            let y = d
                .lines
                .iter()
                .filter(|l| l.charge == q1)
                .map(|l| l.at(x))
                .fold(f64::INFINITY, f64::min);
            let _ = writeln!(
                out,
                r#"<circle class="crossing" cx="{:.3}" cy="{:.3}" r="4" fill="black"/>"#,
                f.px(x),
                f.py(y)
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn levels_svg(d: &LevelsDiagram) -> Result<String, SvgError> {
    if d.fields_t.is_empty() || d.branches.is_empty() || d.branches.iter().any(|b| b.len() != d.fields_t.len()) {
        return Err(SvgError::EmptyData);
    }
    let b0 = d.fields_t[0];
    let b1 = *d.fields_t.last().expect("non-empty");
    let (lo, hi) = d
        .branches
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let f = Frame::new(b0, b1, lo, hi);
    let mut out = String::new();
    header(&mut out, &d.title);
    axes(&mut out, &f, "Magnetic field B (T)", "Energy (MHz)");
    for (k, branch) in d.branches.iter().enumerate() {
        let pts: Vec<(f64, f64)> = if d.fields_t.len() == 1 {
            // A single field point is drawn as a level across the frame.
            vec![(f.x0, branch[0]), (f.x1, branch[0])]
        } else {
            d.fields_t.iter().copied().zip(branch.iter().copied()).collect()
        };
        polyline(&mut out, &f, &pts, PALETTE[k % PALETTE.len()], "level");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg_diagram(diagram: &Diagram) -> Result<String, SvgError> {
    match diagram {
        Diagram::Formation(d) => formation_svg(d),
        Diagram::Levels(d) => levels_svg(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::stability_map;

    fn line(q: i32, b: f64) -> FormationLine {
        FormationLine {
            label: "X".into(),
            charge: q,
            intercept_ev: b,
        }
    }

    #[test]
    fn two_lines_one_crossing() {
        let lines = vec![line(0, 4.0), line(-1, 6.1)];
        let map = stability_map(&lines, 5.5).unwrap();
        let svg = emit_svg_diagram(&Diagram::Formation(FormationDiagram {
            title: "X".into(),
            gap_ev: 5.5,
            lines,
            stability: Some(map),
        }))
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("(eV)"));
    }

    #[test]
    fn single_level_is_horizontal() {
        let svg = emit_svg_diagram(&Diagram::Levels(LevelsDiagram {
            title: "one".into(),
            fields_t: vec![0.0],
            branches: vec![vec![0.0]],
        }))
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert_eq!(ys[0], ys[1]);
    }

    #[test]
    fn empty_is_error() {
        let e = Diagram::Levels(LevelsDiagram {
            title: String::new(),
            fields_t: vec![],
            branches: vec![],
        });
        assert_eq!(emit_svg_diagram(&e), Err(SvgError::EmptyData));
        let f = Diagram::Formation(FormationDiagram {
            title: String::new(),
            gap_ev: 1.0,
            lines: vec![],
            stability: None,
        });
        assert_eq!(emit_svg_diagram(&f), Err(SvgError::EmptyData));
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(6.0), 1.0);
        assert_eq!(tick_step(12.0), 2.0);
        assert_eq!(tick_step(0.3), 0.05);
        assert_eq!(tick_label(-0.0, 0.5), "0.0");
    }
}
