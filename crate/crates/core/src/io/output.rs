//! CSV tables, the event log and the force summary line.

use std::fmt::Write as _;

use crate::contact::SimTrace;
use crate::drive::{DriveMode, Side, TracePoint};
use crate::statics::{ForceCell, ForceModel};

use super::fmt9;

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn trace_csv(points: &[TracePoint]) -> String {
    let mut out = String::from("s,xB,yB,xD,yD,xI,yI\n");
    for p in points {
        let v = [p.s, p.b.x, p.b.y, p.d.x, p.d.y, p.i.x, p.i.y];
        row(&mut out, &v.map(fmt9));
    }
    out
}

fn headers(model: ForceModel) -> [&'static str; 3] {
    match model {
        ForceModel::Pinch => ["theta1_deg", "h1_mm", "F1_N"],
        ForceModel::Envelope => ["theta2_deg", "theta3_deg", "F2_N"],
    }
}

/// One row per cell; singular cells leave the force columns empty.
pub fn force_csv(model: ForceModel, cells: &[ForceCell]) -> String {
    let [hx, hy, hv] = headers(model);
    let mut out = match model {
        ForceModel::Pinch => format!("{hx},{hy},{hv},singular\n"),
        ForceModel::Envelope => format!("{hx},{hy},{hv},F3_N,singular\n"),
    };
    let opt = |v: Option<f64>| v.map(fmt9).unwrap_or_default();
    for c in cells {
        let flag = if c.value.is_none() { "1" } else { "0" }.to_string();
        let mut cols = vec![fmt9(c.x), fmt9(c.y), opt(c.value)];
        if model == ForceModel::Envelope {
            cols.push(opt(c.aux));
        }
        cols.push(flag);
        row(&mut out, &cols);
    }
    out
}

/// `min`/`max` over the regular cells; ties resolve to the first cell in
/// row-major order.
pub fn force_extrema(cells: &[ForceCell]) -> Option<(ForceCell, ForceCell)> {
    let mut it = cells.iter().filter(|c| c.value.is_some());
    let first = *it.next()?;
    Some(it.fold((first, first), |(lo, hi), c| {
        let v = c.value.unwrap();
        (if v < lo.value.unwrap() { *c } else { lo }, if v > hi.value.unwrap() { *c } else { hi })
    }))
}

pub fn force_summary(model: ForceModel, cells: &[ForceCell]) -> String {
    let [hx, hy, hv] = headers(model);
    let singular = cells.iter().filter(|c| c.value.is_none()).count();
    match force_extrema(cells) {
        Some((lo, hi)) => format!(
            "{} cells, {singular} singular; min {hv} = {} at ({hx} = {}, {hy} = {}); max {hv} = {} at ({hx} = {}, {hy} = {}); argmin ({}, {})",
            cells.len(),
            fmt9(lo.value.unwrap()),
            fmt9(lo.x),
            fmt9(lo.y),
            fmt9(hi.value.unwrap()),
            fmt9(hi.x),
            fmt9(hi.y),
            fmt9(lo.x),
            fmt9(lo.y),
        ),
        None => format!("{} cells, {singular} singular; no regular cells", cells.len()),
    }
}

/// Frame-per-row trajectory. `q` is the shared drive input in degrees
/// (rotational) or mm (linear).
pub fn sim_csv(trace: &SimTrace) -> String {
    let mut head = vec!["progress", "phase", "q", "fold_left", "fold_right", "s_left", "s_right"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for side in ["left", "right"] {
        for c in ["xB", "yB", "xD", "yD", "xI", "yI"] {
            head.push(format!("{c}_{side}"));
        }
    }
    for side in ["left", "right"] {
        head.push(format!("support_contact_{side}"));
        head.push(format!("object_contact_{side}"));
    }
    for k in 0..trace.objects.len() {
        head.push(format!("dx_obj{k}"));
        head.push(format!("dy_obj{k}"));
    }
    let mut out = String::new();
    row(&mut out, &head);
    for f in &trace.frames {
        let d = f.fingers[0].drive;
        let q = match d.mode {
            DriveMode::Rotational => d.q.to_degrees(),
            DriveMode::Linear => d.q,
        };
        let mut cols = vec![fmt9(f.progress), f.phase.name().to_string(), fmt9(q)];
        for side in Side::BOTH {
            cols.push(fmt9(f.fingers[side.index()].fold.to_degrees()));
        }
        for side in Side::BOTH {
            cols.push(fmt9(f.fingers[side.index()].config.s));
        }
        for side in Side::BOTH {
            let c = &f.fingers[side.index()].config;
            for p in [c.b, c.d, c.i] {
                cols.push(fmt9(p.x));
                cols.push(fmt9(p.y));
            }
        }
        for side in Side::BOTH {
            let ff = &f.fingers[side.index()];
            cols.push(u8::from(ff.support_contact).to_string());
            cols.push(u8::from(ff.object_contact).to_string());
        }
        for o in &f.object_offsets {
            cols.push(fmt9(o.x));
            cols.push(fmt9(o.y));
        }
        row(&mut out, &cols);
    }
    out
}

/// One `<progress>\t<EVENT_NAME>` line per event.
pub fn events_log(trace: &SimTrace) -> String {
    let mut out = String::new();
    for e in &trace.events {
        let _ = writeln!(out, "{}\t{}", fmt9(e.progress), e.kind.name());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::{LinkageParams, Prototype};
    use crate::statics::{force_surface, GridSpec, SurfaceParams};

    #[test]
    fn trace_rows_and_header() {
        let pts = crate::drive::trace_sweep(&LinkageParams::preset(Prototype::ScalR), (50.0, 110.0), 2).unwrap();
        let csv = trace_csv(&pts);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "s,xB,yB,xD,yD,xI,yI");
        let b = crate::linkage::solve_finger(&LinkageParams::preset(Prototype::ScalR), 50.0).unwrap().b;
        assert_eq!(lines[1].split(',').count(), 7);
        assert!(lines[1].starts_with(&format!("50,{},{},", fmt9(b.x), fmt9(b.y))));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn force_extrema_and_singular_cells() {
        let grid = GridSpec::parse("45:120:76,0:40:41").unwrap();
        let cells = force_surface(ForceModel::Pinch, &grid, &SurfaceParams::default());
        let (lo, hi) = force_extrema(&cells).unwrap();
        assert_eq!((hi.x, hi.y), (45.0, 0.0));
        assert_eq!((lo.x, lo.y), (90.0, 40.0));
        let sing = GridSpec::parse("-90:-90:1,85.27:85.27:1").unwrap();
        let cells = force_surface(ForceModel::Pinch, &sing, &SurfaceParams::default());
        assert_eq!(force_csv(ForceModel::Pinch, &cells), "theta1_deg,h1_mm,F1_N,singular\n-90,85.27,,1\n");
        assert!(force_summary(ForceModel::Pinch, &cells).contains("no regular cells"));
    }
}
