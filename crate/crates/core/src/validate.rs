//! Invariant suite run by `scalkit validate`, plus trace checks shared with
//! the test suites.

use nalgebra::Vector2;

use crate::contact::{simulate, Approach, Behavior, Environment, ObjectShape, Scenario, Schedule, SimSettings, SimTrace, CONTACT_TOL};
use crate::drive::{trace_sweep, DriveMode, GripperAssembly, Side};
use crate::io::ConfigDocument;
use crate::linkage::{solve_finger, LinkageParams};
use crate::statics::{
    envelope_forces, envelope_forces_numeric, envelope_jacobian, force_surface, EnvelopeGeometry, ForceModel, GridSpec,
    SurfaceParams,
};

pub const LOOP_SAMPLES: usize = 1000;
pub const LOOP_TOL: f64 = 1e-9;
pub const BEARING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn from(name: &'static str, r: Result<String, String>) -> Self {
        match r {
            Ok(detail) => Self { name, status: Status::Pass, detail },
            Err(detail) => Self { name, status: Status::Fail, detail },
        }
    }

    fn skip(name: &'static str, why: &str) -> Self {
        Self { name, status: Status::Skip, detail: why.to_string() }
    }
}

/// Largest link-length residual over `n` evenly spaced slot samples.
pub fn loop_closure_residual(p: &LinkageParams, n: usize) -> Result<f64, String> {
    let pts = (0..n).map(|k| p.s_min + (p.s_max - p.s_min) * k as f64 / (n - 1) as f64);
    let mut worst: f64 = 0.0;
    for s in pts {
        let c = solve_finger(p, s).map_err(|e| e.to_string())?;
        let r = [
            ((c.b - c.a).norm() - p.len_ab).abs(),
            ((c.b - c.c).norm() - p.len_cb).abs(),
            ((c.d - c.b).norm() - p.len_bd).abs(),
            ((c.c - c.a).norm() - s).abs(),
            ((c.e - c.a).norm() - p.len_ae).abs(),
            ((c.f - c.b).norm() - p.len_bf).abs(),
            ((c.g - c.b).norm() - p.len_bg).abs(),
            ((c.i - c.d).norm() - p.len_di).abs(),
            ((c.f - c.e).norm() - p.len_ab).abs(),
            ((c.h - c.g).norm() - p.len_bd).abs(),
            ((c.h - c.d).norm() - p.len_bg).abs(),
        ];
        worst = r.iter().fold(worst, |m, &v| m.max(v));
    }
    Ok(worst)
}

/// Population standard deviation of the tip bearing over the slot sweep.
pub fn tip_bearing_spread(p: &LinkageParams, n: usize) -> Result<f64, String> {
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        let s = p.s_min + (p.s_max - p.s_min) * k as f64 / (n - 1) as f64;
        v.push(solve_finger(p, s).map_err(|e| e.to_string())?.tip_bearing());
    }
    // unwrap about the first sample so a bearing near +-pi does not split
    let b0 = v[0];
    let d: Vec<f64> = v.iter().map(|b| crate::geometry::wrap_angle(b - b0)).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    Ok((d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt())
}

/// Smallest signed distance from either fingertip to the support and to
/// every object, over all frames.
pub fn min_tip_clearance(trace: &SimTrace) -> f64 {
    let mut worst = f64::INFINITY;
    for f in &trace.frames {
        let objects = trace.objects_at(f);
        for ff in &f.fingers {
            let tip = ff.config.i;
            worst = worst.min(trace.support.signed_distance(&tip));
            for o in &objects {
                worst = worst.min(o.signed_distance(&tip));
            }
        }
    }
    worst
}

/// Frames in which a finger's slot is extended without any contact flag.
pub fn spring_violations(trace: &SimTrace, assembly: &GripperAssembly) -> usize {
    let mut n = 0;
    for f in &trace.frames {
        for side in Side::BOTH {
            let ff = &f.fingers[side.index()];
            let s_min = assembly.mount(side).params.s_min;
            if ff.config.s > s_min + 1e-9 && !(ff.support_contact || ff.object_contact) {
                n += 1;
            }
        }
    }
    n
}

/// Non-penetration (tolerance 1e-6 mm) and spring consistency.
pub fn check_trace(trace: &SimTrace, assembly: &GripperAssembly) -> Result<String, String> {
    let clear = min_tip_clearance(trace);
    let spring = spring_violations(trace, assembly);
    let msg = format!("{} frames, min tip clearance {clear:.3e} mm, {spring} spring violations", trace.frames.len());
    if clear >= -CONTACT_TOL && spring == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Reference scenario for the config's drive mode: a pinch-lift of a
/// 30 x 10 mm box for rotational drive, a vertical probe on a 60 mm disk
/// for linear drive.
pub fn reference_scenario(config: &ConfigDocument) -> Scenario {
    match config.drive_mode() {
        DriveMode::Rotational => Scenario {
            environment: Environment::flat(vec![ObjectShape::rectangle(30.0, 10.0, 0.0)]),
            behavior: Behavior::PinchLift,
            approach: Approach { schedule: config.schedule(), ..Approach::default() },
            settings: SimSettings::default(),
        },
        DriveMode::Linear => {
            let carriage = 24.3;
            Scenario {
                environment: Environment::flat(vec![ObjectShape::disk(60.0, 0.0)]),
                behavior: Behavior::PassiveOpen,
                approach: Approach {
                    base_height: 185.0,
                    probe_carriage: carriage,
                    schedule: Schedule { start: carriage, end: config.drive.range[1], step: config.drive.step },
                    ..Approach::default()
                },
                settings: SimSettings::default(),
            }
        }
    }
}

fn envelope_samples(k1: f64) -> Vec<EnvelopeGeometry> {
    let mut out = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            let t2 = (-30.0 + 10.0 * i as f64).to_radians();
            let t3 = (-30.0 + 10.0 * j as f64).to_radians();
            out.push(EnvelopeGeometry { t_in: 1000.0, k1, theta2: t2, theta3: t3, l2: 70.0, h2: 40.0 + i as f64, h3: 20.0 + j as f64 });
        }
    }
    out
}

fn statics_checks(k1: f64) -> Vec<Check> {
    let mut out = Vec::new();
    let sp = SurfaceParams { k1, ..SurfaceParams::default() };
    let grid = GridSpec::default_for(ForceModel::Pinch);
    let cells = force_surface(ForceModel::Pinch, &grid, &sp);
    let ny = grid.y.n;
    out.push(Check::from(
        "pinch force decreases with h1",
        (|| {
            for row in cells.chunks(ny) {
                for w in row.windows(2) {
                    match (w[0].value, w[1].value) {
                        (Some(a), Some(b)) if b < a => {}
                        _ => return Err(format!("not decreasing at theta1 = {} deg", w[0].x)),
                    }
                }
            }
            Ok(format!("{} rows", cells.len() / ny))
        })(),
    ));
    let doubled = force_surface(ForceModel::Pinch, &grid, &SurfaceParams { t_in: 2.0 * sp.t_in, ..sp });
    out.push(Check::from(
        "pinch force scales with input moment",
        if cells.iter().zip(&doubled).all(|(a, b)| a.value.map(|v| 2.0 * v) == b.value) {
            Ok("exact doubling".into())
        } else {
            Err("doubling T_in does not double every cell".into())
        },
    ));
    let mut worst_inv: f64 = 0.0;
    let mut worst_pow: f64 = 0.0;
    let mut err = None;
    for g in envelope_samples(k1) {
        match (envelope_forces(&g), envelope_forces_numeric(&g)) {
            (Ok((f2, f3)), Ok((n2, n3))) => {
                worst_inv = worst_inv.max((f2 - n2).abs() / (1.0 + f2.abs())).max((f3 - n3).abs() / (1.0 + f3.abs()));
                let j = envelope_jacobian(&g);
                for dq in [Vector2::new(1e-3, 0.0), Vector2::new(0.0, 1e-3), Vector2::new(0.7e-3, -0.4e-3)] {
                    let ds = j * dq;
                    let input = g.t_in * dq.x - g.k1 * g.theta3 * dq.y;
                    let contact = f2 * ds.x + f3 * ds.y;
                    worst_pow = worst_pow.max((input - contact).abs());
                }
            }
            (Err(e), _) | (_, Err(e)) => err = Some(e.to_string()),
        }
    }
    out.push(Check::from(
        "envelope closed form matches Jacobian inverse",
        match &err {
            Some(e) => Err(e.clone()),
            None if worst_inv < 1e-9 => Ok(format!("max relative difference {worst_inv:.2e}")),
            None => Err(format!("max relative difference {worst_inv:.2e}")),
        },
    ));
    out.push(Check::from(
        "virtual-work power balance",
        match &err {
            Some(e) => Err(e.clone()),
            None if worst_pow < 1e-9 => Ok(format!("max residual {worst_pow:.2e}")),
            None => Err(format!("max residual {worst_pow:.2e}")),
        },
    ));
    out
}

/// Runs every invariant check on `config`.
pub fn run_suite(config: &ConfigDocument) -> Vec<Check> {
    let p = config.linkage_params();
    let mut out = Vec::new();
    let basic = p.check_basic();
    out.push(Check::from("linkage parameters", basic.clone().map(|_| "ok".into()).map_err(|e| e.to_string())));
    let closure = p.check_loop_closure();
    out.push(Check::from("loop-closure existence", closure.clone().map(|_| "ok".into()).map_err(|e| e.to_string())));
    let geometry_ok = basic.is_ok() && closure.is_ok();
    if geometry_ok {
        out.push(Check::from(
            "link-length residuals over slot sweep",
            loop_closure_residual(&p, LOOP_SAMPLES).and_then(|r| {
                let msg = format!("{LOOP_SAMPLES} samples, max residual {r:.2e} mm");
                if r < LOOP_TOL {
                    Ok(msg)
                } else {
                    Err(msg)
                }
            }),
        ));
        out.push(Check::from(
            "fixed fingertip orientation",
            tip_bearing_spread(&p, LOOP_SAMPLES).and_then(|sd| {
                let msg = format!("bearing std {sd:.2e} rad");
                if sd < BEARING_TOL {
                    Ok(msg)
                } else {
                    Err(msg)
                }
            }),
        ));
        out.push(Check::from(
            "free-space sweep determinism",
            match (trace_sweep(&p, (p.s_min, p.s_max), 601), trace_sweep(&p, (p.s_min, p.s_max), 601)) {
                (Ok(a), Ok(b)) if a == b => Ok("601 samples identical".into()),
                (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
                _ => Err("repeated sweeps differ".into()),
            },
        ));
    } else {
        for name in ["link-length residuals over slot sweep", "fixed fingertip orientation", "free-space sweep determinism"] {
            out.push(Check::skip(name, "linkage geometry invalid"));
        }
    }
    out.push(Check::from(
        "spring parameters",
        config.spring_params().validate().map(|_| "ok".into()).map_err(|e| e.to_string()),
    ));
    let asm = config.assembly();
    let (lo, hi) = asm.limits.range(config.drive_mode());
    let [a, b] = config.drive.range;
    let (a, b) = match config.drive_mode() {
        DriveMode::Rotational => (a.to_radians(), b.to_radians()),
        DriveMode::Linear => (a, b),
    };
    out.push(Check::from(
        "drive range within limits",
        if a >= lo && b <= hi + 1e-12 {
            Ok("ok".into())
        } else {
            Err(format!("range [{}, {}] outside [{lo}, {hi}]", config.drive.range[0], config.drive.range[1]))
        },
    ));
    out.extend(statics_checks(config.spring.k1));
    if geometry_ok {
        let sc = reference_scenario(config);
        let first = simulate(&asm, config.drive_mode(), &sc);
        let second = simulate(&asm, config.drive_mode(), &sc);
        match (first, second) {
            (Ok(t1), Ok(t2)) => {
                out.push(Check::from("contact invariants on reference scenario", check_trace(&t1, &asm)));
                out.push(Check::from(
                    "simulation determinism",
                    if t1 == t2 { Ok(format!("{} events", t1.events.len())) } else { Err("repeated runs differ".into()) },
                ));
                out.push(Check::from(
                    "event monotonicity",
                    event_order_ok(&t1).then(|| "ok".to_string()).ok_or_else(|| "events out of order".to_string()),
                ));
            }
            (Err(e), _) | (_, Err(e)) => {
                out.push(Check::from("contact invariants on reference scenario", Err(e.to_string())));
            }
        }
    } else {
        out.push(Check::skip("contact invariants on reference scenario", "linkage geometry invalid"));
    }
    out
}

/// First support contact precedes first object contact precedes lift-off,
/// whenever they occur.
pub fn event_order_ok(trace: &SimTrace) -> bool {
    use crate::contact::EventKind::*;
    let at = |k| trace.first_event(k).map(|e| e.progress);
    let chain = [at(FirstSupportContact), at(ObjectContact), at(LiftOff)];
    let present: Vec<f64> = chain.iter().flatten().copied().collect();
    present.windows(2).all(|w| w[0] <= w[1])
}

pub fn format_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!("{:<4}  {:<width$}  {}\n", c.status.label(), c.name, c.detail));
    }
    out
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status == Status::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::PresetName;

    #[test]
    fn presets_pass() {
        for p in [PresetName::ScalR, PresetName::ScalL] {
            let checks = run_suite(&ConfigDocument::preset(p));
            assert!(all_pass(&checks), "{}", format_table(&checks));
        }
    }

    #[test]
    fn coincident_slot_fails_loop_closure() {
        let mut c = ConfigDocument::preset(PresetName::ScalR);
        c.linkage.len_cb = c.linkage.len_ab;
        c.linkage.s_min = 0.0;
        let checks = run_suite(&c);
        let lc = checks.iter().find(|k| k.name == "loop-closure existence").unwrap();
        assert_eq!(lc.status, Status::Fail);
        assert!(!all_pass(&checks));
    }

    #[test]
    fn tangent_circles_report_degenerate_geometry() {
        let mut c = ConfigDocument::preset(PresetName::ScalR);
        c.linkage.s_max = 130.0;
        let checks = run_suite(&c);
        let res = checks.iter().find(|k| k.name == "link-length residuals over slot sweep").unwrap();
        assert_eq!(res.status, Status::Fail);
        assert!(res.detail.contains("tangent"), "{}", res.detail);
    }
}
