//! Minimal hand-written SVG: polylines, circles and text. One user unit is
//! one millimetre and the y axis is flipped for screen coordinates.

use std::fmt::Write as _;

use crate::contact::{PlacedObject, ShapeKind, SimTrace};
use crate::drive::TracePoint;
use crate::geometry::Pt2;
use crate::linkage::ScalConfig;

use super::fmt9;

const MARGIN: f64 = 10.0;

#[derive(Default)]
struct Canvas {
    body: String,
    lo: Option<(f64, f64)>,
    hi: Option<(f64, f64)>,
}

impl Canvas {
    fn extend(&mut self, p: &Pt2) {
        let (lx, ly) = self.lo.unwrap_or((p.x, p.y));
        let (hx, hy) = self.hi.unwrap_or((p.x, p.y));
        self.lo = Some((lx.min(p.x), ly.min(p.y)));
        self.hi = Some((hx.max(p.x), hy.max(p.y)));
    }

    fn polyline(&mut self, pts: &[Pt2], stroke: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        pts.iter().for_each(|p| self.extend(p));
        let coords: Vec<String> = pts.iter().map(|p| format!("{},{}", fmt9(p.x), fmt9(-p.y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{}"/>"#,
            coords.join(" "),
            fmt9(width)
        );
    }

    fn circle(&mut self, c: &Pt2, r: f64, stroke: &str) {
        self.extend(&Pt2::new(c.x - r, c.y - r));
        self.extend(&Pt2::new(c.x + r, c.y + r));
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="{stroke}" stroke-width="0.5"/>"#,
            fmt9(c.x),
            fmt9(-c.y),
            fmt9(r)
        );
    }

    fn text(&mut self, at: &Pt2, label: &str) {
        self.extend(at);
        let _ = writeln!(self.body, r#"<text x="{}" y="{}" font-size="4">{}</text>"#, fmt9(at.x), fmt9(-at.y), escape(label));
    }

    fn finish(self) -> String {
        let (lx, ly) = self.lo.unwrap_or((0.0, 0.0));
        let (hx, hy) = self.hi.unwrap_or((0.0, 0.0));
        let (x, y) = (lx - MARGIN, -hy - MARGIN);
        let (w, h) = (hx - lx + 2.0 * MARGIN, hy - ly + 2.0 * MARGIN);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"{}mm\" height=\"{}mm\">\n{}</svg>\n",
            fmt9(x),
            fmt9(y),
            fmt9(w),
            fmt9(h),
            fmt9(w),
            fmt9(h),
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn finger(canvas: &mut Canvas, c: &ScalConfig, stroke: &str) {
    let links = [
        [c.a, c.b],
        [c.c, c.b],
        [c.b, c.d],
        [c.a, c.e],
        [c.e, c.f],
        [c.b, c.f],
        [c.b, c.g],
        [c.f, c.g],
        [c.g, c.h],
        [c.d, c.h],
        [c.d, c.i],
    ];
    for l in links {
        canvas.polyline(&l, stroke, 0.8);
    }
    canvas.polyline(&[c.a, c.c], "#999999", 0.4);
}

fn object(canvas: &mut Canvas, o: &PlacedObject, stroke: &str) {
    match o.kind {
        ShapeKind::Disk => canvas.circle(&o.center, o.half.x, stroke),
        ShapeKind::Rectangle => {
            let mut pts = o.outline(4);
            pts.push(pts[0]);
            canvas.polyline(&pts, stroke, 0.5);
        }
    }
}

/// Loci of `B`, `D` and `I` with the linkage drawn at the sweep ends.
pub fn trace_svg(points: &[TracePoint], ends: &[ScalConfig]) -> String {
    let mut c = Canvas::default();
    for cfg in ends {
        finger(&mut c, cfg, "#444444");
    }
    c.polyline(&points.iter().map(|p| p.b).collect::<Vec<_>>(), "#1f77b4", 0.6);
    c.polyline(&points.iter().map(|p| p.d).collect::<Vec<_>>(), "#d62728", 0.6);
    c.polyline(&points.iter().map(|p| p.i).collect::<Vec<_>>(), "#2ca02c", 0.6);
    c.finish()
}

/// Tip paths plus a keyframe of both fingers and the objects at each event.
pub fn sim_svg(trace: &SimTrace) -> String {
    const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
    let mut c = Canvas::default();
    for side in 0..2 {
        let path: Vec<Pt2> = trace.frames.iter().map(|f| f.fingers[side].config.i).collect();
        c.polyline(&path, "#bbbbbb", 0.3);
    }
    let resting: Vec<PlacedObject> = trace.objects.clone();
    for o in &resting {
        object(&mut c, o, "#bbbbbb");
    }
    let mut keyframes = Vec::new();
    if let Some(f) = trace.frames.first() {
        keyframes.push((f, "START".to_string()));
    }
    for e in &trace.events {
        if let Some(f) = trace.frames.iter().min_by(|a, b| {
            (a.progress - e.progress).abs().total_cmp(&(b.progress - e.progress).abs())
        }) {
            keyframes.push((f, e.kind.name().to_string()));
        }
    }
    for (k, (f, label)) in keyframes.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for ff in &f.fingers {
            finger(&mut c, &ff.config, color);
        }
        for o in trace.objects_at(f) {
            object(&mut c, &o, color);
        }
        let top = f.fingers[0].config.a;
        c.text(&Pt2::new(top.x, top.y + 6.0 + 5.0 * k as f64), &format!("{} {}", fmt9(f.progress), label));
    }
    let (lx, hx) = (c.lo.map_or(-50.0, |l| l.0), c.hi.map_or(50.0, |h| h.0));
    // support line spanning the drawing; ramps stay below 45 degrees
    let cos = trace.support.tangent().x;
    c.polyline(&[trace.support.point_at(lx / cos), trace.support.point_at(hx / cos)], "#000000", 0.8);
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::trace_sweep;
    use crate::linkage::{solve_finger, LinkageParams, Prototype};

    #[test]
    fn trace_drawing_is_flipped_and_closed() {
        let p = LinkageParams::preset(Prototype::ScalR);
        let pts = trace_sweep(&p, (p.s_min, p.s_max), 5).unwrap();
        let ends = [solve_finger(&p, p.s_min).unwrap()];
        let svg = trace_svg(&pts, &ends);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 3 + 12);
        // D hangs below A, so it is drawn at positive screen y
        let d = ends[0].d;
        assert!(d.y < -1.0);
        assert!(svg.contains(&format!("{},{}", fmt9(d.x), fmt9(-d.y))));
    }
}
