//! SVG court plots: both halves of the court, each agent's trajectory as
//! segments shaded from light (early) to dark (late), and plus glyphs on the
//! points covered by discovery windows.

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::labeling::CourtGeometry;
use crate::model::TrajectoryMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("window [{start}, {end}] outside attack `{attack_id}` of length {len}")]
    WindowOutOfRange {
        attack_id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("agent name count {names} does not match {agents} agents")]
    AgentNames { names: usize, agents: usize },
}

/// Drawing options. `scale` is pixels per court unit; keep it a power of two
/// so the court-to-viewport transform round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub geometry: CourtGeometry,
    pub scale: f64,
    pub margin: f64,
    /// Colour at the end of each agent's trajectory, cycled if `K` exceeds it.
    pub agent_colors: Vec<[u8; 3]>,
    /// How far toward white the first segment is drawn.
    pub light_mix: f64,
    pub glyph_half: f64,
    pub stroke_width: f64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            geometry: CourtGeometry::default(),
            scale: 8.0,
            margin: 16.0,
            agent_colors: vec![
                [0xd9, 0x5f, 0x02],
                [0x1f, 0x78, 0xb4],
                [0xe3, 0x1a, 0x1c],
                [0x33, 0xa0, 0x2c],
                [0x6a, 0x3d, 0x9a],
            ],
            light_mix: 0.8,
            glyph_half: 3.0,
            stroke_width: 2.0,
        }
    }
}

impl RenderSpec {
    pub fn width_px(&self) -> f64 {
        self.geometry.court_length * self.scale + 2.0 * self.margin
    }

    pub fn height_px(&self) -> f64 {
        self.geometry.court_width * self.scale + 2.0 * self.margin
    }

    /// Court coordinates to viewport pixels (y axis flipped).
    pub fn to_viewport(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.margin + x * self.scale,
            self.margin + (self.geometry.court_width - y) * self.scale,
        )
    }

    pub fn from_viewport(&self, px: f64, py: f64) -> (f64, f64) {
        (
            (px - self.margin) / self.scale,
            self.geometry.court_width - (py - self.margin) / self.scale,
        )
    }

    fn color(&self, agent: usize, frac: f64) -> String {
        let dark = self.agent_colors[agent % self.agent_colors.len()];
        let mix = self.light_mix * (1.0 - frac);
        let c = |v: u8| (v as f64 + (255.0 - v as f64) * mix).round() as u8;
        format!("#{:02x}{:02x}{:02x}", c(dark[0]), c(dark[1]), c(dark[2]))
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
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
        .replace('"', "&quot;")
}

fn court(spec: &RenderSpec, out: &mut String) {
    let g = &spec.geometry;
    let u = |m: f64| m / g.unit_scale;
    let p = |x: f64, y: f64| {
        let (a, b) = spec.to_viewport(x, y);
        format!("{} {}", num(a), num(b))
    };
    let r = |len: f64| num(len * spec.scale);
    let (x0, y0) = spec.to_viewport(0.0, g.court_width);
    let _ = writeln!(out, r##"<g id="court" fill="none" stroke="#9a9a9a" stroke-width="1">"##);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
        num(x0),
        num(y0),
        r(g.court_length),
        r(g.court_width)
    );
    let mid = g.court_length / 2.0;
    let _ = writeln!(out, r#"<path d="M {} L {}"/>"#, p(mid, 0.0), p(mid, g.court_width));
    let (cx, cy) = spec.to_viewport(mid, g.court_width / 2.0);
    let _ = writeln!(
        out,
        r#"<circle cx="{}" cy="{}" r="{}"/>"#,
        num(cx),
        num(cy),
        r(u(1.8288))
    );

    let (hx, hy) = (g.hoop_center.x, g.hoop_center.y);
    let restricted = u(g.restricted_radius_m);
    let paint = u(g.paint_radius_m);
    let arc = u(g.three_point_arc_radius_m);
    let corner = u(g.three_point_corner_distance_m);
    let paint_depth = (paint * paint - restricted * restricted).max(0.0).sqrt();
    let brk = (arc * arc - corner * corner).max(0.0).sqrt();
    for (dir, base) in [(1.0, 0.0), (-1.0, g.court_length)] {
        let hx = if dir > 0.0 { hx } else { g.court_length - hx };
        let sweep = if dir > 0.0 { 1 } else { 0 };
        let (px, py) = spec.to_viewport(hx, hy);
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="{}"/>"#, num(px), num(py), r(0.75));
        let far = hx + dir * paint_depth;
        let (a, b) = (base.min(far), base.max(far));
        let (rx, ry) = spec.to_viewport(a, hy + restricted);
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
            num(rx),
            num(ry),
            r(b - a),
            r(2.0 * restricted)
        );
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" stroke-dasharray="4 3"/>"#,
            num(px),
            num(py),
            r(restricted)
        );
        let _ = writeln!(
            out,
            r#"<path d="M {} L {} A {} {} 0 0 {} {} L {}"/>"#,
            p(base, hy + corner),
            p(hx + dir * brk, hy + corner),
            r(arc),
            r(arc),
            sweep,
            p(hx + dir * brk, hy - corner),
            p(base, hy - corner)
        );
    }
    out.push_str("</g>\n");
}

/// Renders one attack. `windows` are `0`-based inclusive discovery windows.
pub fn render_attack_svg(
    matrix: &TrajectoryMatrix,
    windows: &[(usize, usize)],
    agent_names: &[String],
    spec: &RenderSpec,
) -> Result<String, RenderError> {
    let m = matrix.len();
    for &(start, end) in windows {
        if start > end || end >= m {
            return Err(RenderError::WindowOutOfRange {
                attack_id: matrix.attack_id().to_string(),
                start,
                end,
                len: m,
            });
        }
    }
    if agent_names.len() != matrix.agents() {
        return Err(RenderError::AgentNames {
            names: agent_names.len(),
            agents: matrix.agents(),
        });
    }
    let covered: BTreeSet<usize> = windows.iter().flat_map(|&(s, e)| s..=e).collect();

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let (w, h) = (num(spec.width_px()), num(spec.height_px()));
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        "<title>{} ({})</title>",
        escape(matrix.attack_id()),
        matrix.label()
    );
    court(spec, &mut out);

    let _ = writeln!(
        out,
        r#"<g id="trajectories" fill="none" stroke-width="{}" stroke-linecap="round">"#,
        num(spec.stroke_width)
    );
    for (k, name) in agent_names.iter().enumerate() {
        let _ = writeln!(out, r#"<g id="agent-{}">"#, escape(name));
        let pts: Vec<(f64, f64)> = (0..m)
            .map(|t| {
                let q = matrix.point(t, k);
                spec.to_viewport(q.x, q.y)
            })
            .collect();
        if m == 1 {
            let _ = writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                num(pts[0].0),
                num(pts[0].1),
                num(spec.stroke_width),
                spec.color(k, 1.0)
            );
        }
        for t in 0..m.saturating_sub(1) {
            let frac = (t as f64 + 0.5) / (m - 1) as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}"/>"#,
                num(pts[t].0),
                num(pts[t].1),
                num(pts[t + 1].0),
                num(pts[t + 1].1),
                spec.color(k, frac)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n");

    let _ = writeln!(out, r##"<g id="discoveries" stroke="#000000" stroke-width="1">"##);
    let gh = spec.glyph_half;
    for &t in &covered {
        for k in 0..matrix.agents() {
            let q = matrix.point(t, k);
            let (x, y) = spec.to_viewport(q.x, q.y);
            let _ = writeln!(
                out,
                r#"<path class="ssd" d="M {} {} H {} M {} {} V {}"/>"#,
                num(x - gh),
                num(y),
                num(x + gh),
                num(x),
                num(y - gh),
                num(y + gh)
            );
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
