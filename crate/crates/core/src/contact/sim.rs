//! Event-driven quasi-static scenario runner.
//!
//! The drive advances on a fixed grid. Between grid points every pending
//! event predicate is checked, and a predicate that switches on is located by
//! bisection on the drive coordinate, so event positions do not depend on the
//! step size. Each run has a single monotone progress coordinate, in degrees
//! for rotational drive and millimetres for linear drive; the enveloping fold
//! and the probing descent continue the same coordinate.

use std::f64::consts::PI;

use crate::drive::{DriveMode, DriveState, GripperAssembly, Side};
use crate::geometry::{rotate, Placement, Pt2, Vec2};
use crate::linkage::ScalConfig;

use super::constrain::{step_constrained, Constraint, CONTACT_TOL};
use super::env::{Environment, PlacedObject, Support};
use super::ContactError;

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_ITERS: usize = 100;
const BISECT_ITERS: usize = 64;
const TANGENT_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    FreeApproach,
    SurfaceSlide,
    ObjectContact,
    Lift,
    Envelope,
    PassiveOpen,
    Secured,
    Failed,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::FreeApproach => "FREE_APPROACH",
            Phase::SurfaceSlide => "SURFACE_SLIDE",
            Phase::ObjectContact => "OBJECT_CONTACT",
            Phase::Lift => "LIFT",
            Phase::Envelope => "ENVELOPE",
            Phase::PassiveOpen => "PASSIVE_OPEN",
            Phase::Secured => "SECURED",
            Phase::Failed => "FAILED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    FirstSupportContact,
    ObjectContact,
    PassiveOpen,
    ApertureExceedsObject,
    EnvelopeStart,
    LiftOff,
    Secured,
    OpeningNotTriggered,
    Failed,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::FirstSupportContact => "FIRST_SUPPORT_CONTACT",
            EventKind::ObjectContact => "OBJECT_CONTACT",
            EventKind::PassiveOpen => "PASSIVE_OPEN",
            EventKind::ApertureExceedsObject => "APERTURE_EXCEEDS_OBJECT",
            EventKind::EnvelopeStart => "ENVELOPE_START",
            EventKind::LiftOff => "LIFT_OFF",
            EventKind::Secured => "SECURED",
            EventKind::OpeningNotTriggered => "OPENING_NOT_TRIGGERED",
            EventKind::Failed => "FAILED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub progress: f64,
    pub side: Option<Side>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProgressUnit {
    Degrees,
    Millimetres,
}

impl ProgressUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            ProgressUnit::Degrees => "deg",
            ProgressUnit::Millimetres => "mm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerFrame {
    pub drive: DriveState,
    pub fold: f64,
    pub config: ScalConfig,
    pub support_contact: bool,
    pub object_contact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub progress: f64,
    pub phase: Phase,
    pub fingers: [FingerFrame; 2],
    /// Translation of each object from its resting pose.
    pub object_offsets: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub unit: ProgressUnit,
    pub support: Support,
    pub objects: Vec<PlacedObject>,
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
}

impl SimTrace {
    pub fn final_phase(&self) -> Option<Phase> {
        match self.frames.last() {
            Some(f) => Some(f.phase),
            None => self.events.iter().any(|e| e.kind == EventKind::Failed).then_some(Phase::Failed),
        }
    }

    pub fn secured(&self) -> bool {
        self.final_phase() == Some(Phase::Secured)
    }

    pub fn failed(&self) -> bool {
        self.final_phase() == Some(Phase::Failed)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn objects_at(&self, frame: &Frame) -> Vec<PlacedObject> {
        self.objects.iter().zip(&frame.object_offsets).map(|(o, d)| o.translated(d)).collect()
    }
}

/// Drive grid in progress units (degrees or mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Schedule {
    pub fn validate(&self) -> Result<(), ContactError> {
        if !(self.start.is_finite() && self.end.is_finite() && self.step.is_finite()) {
            return Err(ContactError::InvalidSchedule("non-finite schedule value".into()));
        }
        if !(self.step > 0.0) {
            return Err(ContactError::InvalidSchedule(format!("step must be positive (got {})", self.step)));
        }
        if !(self.end > self.start) {
            return Err(ContactError::InvalidSchedule(format!(
                "schedule must increase (start {}, end {})",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    PinchLift,
    Envelope,
    PassiveOpen,
    ObliqueProbe,
}

impl Behavior {
    pub fn name(self) -> &'static str {
        match self {
            Behavior::PinchLift => "pinch_lift",
            Behavior::Envelope => "envelope",
            Behavior::PassiveOpen => "passive_open",
            Behavior::ObliqueProbe => "oblique_probe",
        }
    }
}

/// Gripper placement and commanded motion. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approach {
    /// Arc coordinate of the gripper centerline along the support.
    pub center: f64,
    /// Height of the base pivots above the support (probe start height for
    /// probing behaviors).
    pub base_height: f64,
    /// Closing drive grid (degrees for rotational, mm for linear).
    pub schedule: Schedule,
    pub fold_angle: f64,
    /// Fold increment in degrees.
    pub fold_step: f64,
    /// Clockwise tilt of the whole gripper while probing.
    pub probe_tilt: f64,
    /// Carriage position held during the probe (mm).
    pub probe_carriage: f64,
    /// Maximum probe travel (mm).
    pub probe_depth: f64,
    pub probe_step: f64,
    /// Lateral gap between the lowered fingertip path and the near top
    /// corner of the object when the probe is tilted (mm).
    pub aim_clearance: f64,
}

impl Default for Approach {
    fn default() -> Self {
        Self {
            center: 0.0,
            base_height: 120.0,
            schedule: Schedule { start: 0.0, end: 90.0, step: 0.1 },
            fold_angle: 45f64.to_radians(),
            fold_step: 0.1,
            probe_tilt: 0.0,
            probe_carriage: 0.0,
            probe_depth: 200.0,
            probe_step: 0.1,
            aim_clearance: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    /// Support clearance of the pinched object that counts as lift-off (mm).
    pub lift_clearance: f64,
    /// Support clearance at which a lifted object is secured (mm).
    pub secure_clearance: f64,
    /// Largest deviation from antiparallel contact normals that still counts
    /// as a pinch (rad).
    pub attach_angle: f64,
    /// Minimum outward lateral component of a probe contact normal that can
    /// open the slot.
    pub open_gate: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { lift_clearance: 0.5, secure_clearance: 5.0, attach_angle: 30f64.to_radians(), open_gate: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub environment: Environment,
    pub behavior: Behavior,
    pub approach: Approach,
    pub settings: SimSettings,
}

/// Dispatches on the scenario behavior.
pub fn simulate(assembly: &GripperAssembly, mode: DriveMode, scenario: &Scenario) -> Result<SimTrace, ContactError> {
    match scenario.behavior {
        Behavior::PinchLift => run_scenario(assembly, mode, scenario),
        Behavior::Envelope => {
            require_mode(mode, DriveMode::Rotational, scenario.behavior)?;
            run_envelope(assembly, scenario)
        }
        Behavior::PassiveOpen | Behavior::ObliqueProbe => {
            require_mode(mode, DriveMode::Linear, scenario.behavior)?;
            run_passive_open(assembly, scenario)
        }
    }
}

fn require_mode(mode: DriveMode, want: DriveMode, b: Behavior) -> Result<(), ContactError> {
    if mode != want {
        return Err(ContactError::InvalidScenario(format!("behavior `{}` requires {:?} drive", b.name(), want)));
    }
    Ok(())
}

/// Pinch-lift: closing drive with support and object contacts.
pub fn run_scenario(assembly: &GripperAssembly, mode: DriveMode, scenario: &Scenario) -> Result<SimTrace, ContactError> {
    let mut r = Runner::new(assembly, scenario, unit_for(mode))?;
    let sch = scenario.approach.schedule;
    check_schedule(assembly, mode, &sch)?;
    let motion = Motion::Drive { mode, p0: sch.start, q0: to_native(mode, sch.start), base: r.support_frame(0.0) };
    r.run(Stage::Free { motion, probe: false }, sch)?;
    Ok(r.finish())
}

/// Enveloping grasp: swing until the intermediate phalange of each finger
/// touches the object, then fold the distal phalange until it touches too.
pub fn run_envelope(assembly: &GripperAssembly, scenario: &Scenario) -> Result<SimTrace, ContactError> {
    if scenario.approach.fold_angle == 0.0 {
        return run_scenario(assembly, DriveMode::Rotational, scenario);
    }
    if !(scenario.approach.fold_angle > 0.0 && scenario.approach.fold_angle < PI) {
        return Err(ContactError::InvalidScenario("fold angle must lie in [0, 180) degrees".into()));
    }
    for o in &scenario.environment.objects {
        if o.width >= assembly.aperture {
            return Err(ContactError::EnvelopeUnreachable(format!(
                "object width {} mm is not below the pivot aperture {} mm",
                o.width, assembly.aperture
            )));
        }
    }
    let mode = DriveMode::Rotational;
    let sch = scenario.approach.schedule;
    check_schedule(assembly, mode, &sch)?;
    let mut r = Runner::new(assembly, scenario, ProgressUnit::Degrees)?;
    let motion = Motion::Drive { mode, p0: sch.start, q0: to_native(mode, sch.start), base: r.support_frame(0.0) };
    r.run(Stage::Swing { motion, locks: [None, None] }, sch)?;
    Ok(r.finish())
}

/// Contact-triggered passive opening: lower the gripper with the carriages
/// held, let object contact open the slots, then close horizontally.
pub fn run_passive_open(assembly: &GripperAssembly, scenario: &Scenario) -> Result<SimTrace, ContactError> {
    let a = &scenario.approach;
    if !(a.probe_tilt.abs() < PI / 4.0) {
        return Err(ContactError::InvalidScenario("probe tilt must lie in (-45, 45) degrees".into()));
    }
    if !(a.probe_depth > 0.0 && a.probe_step > 0.0) {
        return Err(ContactError::InvalidSchedule("probe depth and step must be positive".into()));
    }
    assembly.check_drive(DriveMode::Linear, a.probe_carriage)?;
    check_schedule(assembly, DriveMode::Linear, &a.schedule)?;
    let mut r = Runner::new(assembly, scenario, ProgressUnit::Millimetres)?;
    let rotation = r.env.support.angle() - a.probe_tilt;
    let mut base0 = Placement::new(r.support_frame(a.base_height).origin, rotation, false);
    let dir = rotate(&Vec2::new(0.0, -1.0), rotation);
    if a.probe_tilt != 0.0 {
        if let Some(shift) = r.aim_shift(&base0, dir, a.probe_carriage)? {
            base0.origin += r.env.support.tangent() * shift;
        }
    }
    let motion = Motion::Probe { p0: 0.0, q: a.probe_carriage, base0, dir };
    r.run(Stage::Free { motion, probe: true }, Schedule { start: 0.0, end: a.probe_depth, step: a.probe_step })?;
    Ok(r.finish())
}

fn unit_for(mode: DriveMode) -> ProgressUnit {
    match mode {
        DriveMode::Rotational => ProgressUnit::Degrees,
        DriveMode::Linear => ProgressUnit::Millimetres,
    }
}

fn to_native(mode: DriveMode, p: f64) -> f64 {
    match mode {
        DriveMode::Rotational => p.to_radians(),
        DriveMode::Linear => p,
    }
}

fn check_schedule(assembly: &GripperAssembly, mode: DriveMode, sch: &Schedule) -> Result<(), ContactError> {
    sch.validate()?;
    let (lo, hi) = assembly.limits.range(mode);
    let (a, b) = (to_native(mode, sch.start), to_native(mode, sch.end));
    let slack = 1e-9 * (1.0 + hi.abs());
    if a < lo - slack || b > hi + slack {
        return Err(ContactError::InvalidSchedule(format!(
            "schedule [{}, {}] {} leaves the drive range",
            sch.start,
            sch.end,
            unit_for(mode).symbol()
        )));
    }
    Ok(())
}

/// Maps progress to the shared drive input and base pose.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Motion {
    Drive { mode: DriveMode, p0: f64, q0: f64, base: Placement },
    Probe { p0: f64, q: f64, base0: Placement, dir: Vec2 },
}

impl Motion {
    fn drive(&self, p: f64, s: f64) -> DriveState {
        match *self {
            Motion::Drive { mode, p0, q0, base } => {
                DriveState::new(mode, q0 + to_native(mode, p - p0), s).with_base(base)
            }
            Motion::Probe { p0, q, base0, dir } => {
                let base = Placement { origin: base0.origin + dir * (p - p0), ..base0 };
                DriveState::new(DriveMode::Linear, q, s).with_base(base)
            }
        }
    }

    fn base_at(&self, p: f64) -> Placement {
        self.drive(p, 0.0).base_pose
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Attach {
    object: usize,
    points: [Pt2; 2],
    normals: [Vec2; 2],
    mid0: Pt2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    /// Objects fixed; tips constrained by support and objects.
    Free { motion: Motion, probe: bool },
    /// One object carried by the tip pair.
    Attached { motion: Motion, attach: Attach, lifted: bool },
    /// Enveloping swing; a finger stops once its intermediate phalange touches.
    Swing { motion: Motion, locks: [Option<f64>; 2] },
    /// Enveloping fold from progress `p0`.
    Fold { motion: Motion, locks: [f64; 2], p0: f64, fold_locks: [Option<f64>; 2] },
}

#[derive(Debug, Clone)]
struct Eval {
    fingers: [FingerFrame; 2],
    offsets: Vec<Vec2>,
    /// Object touched by each fingertip (or distal phalange while swinging).
    touched: [Option<usize>; 2],
    normals: [Option<Vec2>; 2],
    middle: [bool; 2],
    distal: [bool; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pred {
    Support(Side),
    Object(Side),
    Pinch,
    Opened(Side),
    Aperture,
    Lift,
    Secure,
    Middle(Side),
    Distal(Side),
}

struct Runner<'a> {
    asm: &'a GripperAssembly,
    scenario: &'a Scenario,
    env: Environment,
    placed: Vec<PlacedObject>,
    unit: ProgressUnit,
    frames: Vec<Frame>,
    events: Vec<Event>,
    phase: Phase,
    seen_support: [bool; 2],
    seen_object: [bool; 2],
    opened: [bool; 2],
    probe_target: Option<usize>,
    done: bool,
}

impl<'a> Runner<'a> {
    fn new(asm: &'a GripperAssembly, scenario: &'a Scenario, unit: ProgressUnit) -> Result<Self, ContactError> {
        scenario.environment.validate()?;
        let a = &scenario.approach;
        if !(a.base_height.is_finite() && a.center.is_finite()) {
            return Err(ContactError::InvalidScenario("gripper placement is not finite".into()));
        }
        for side in Side::BOTH {
            asm.mount(side).params.validate()?;
        }
        let env = scenario.environment.clone();
        let placed = env.placed();
        Ok(Self {
            asm,
            scenario,
            env,
            placed,
            unit,
            frames: Vec::new(),
            events: Vec::new(),
            phase: Phase::FreeApproach,
            seen_support: [false; 2],
            seen_object: [false; 2],
            opened: [false; 2],
            probe_target: None,
            done: false,
        })
    }

    fn finish(self) -> SimTrace {
        SimTrace { unit: self.unit, support: self.env.support, objects: self.placed, frames: self.frames, events: self.events }
    }

    fn settings(&self) -> &SimSettings {
        &self.scenario.settings
    }

    /// Gripper frame aligned with the support, pivots `height` above it.
    fn support_frame(&self, height: f64) -> Placement {
        let s = &self.env.support;
        let h = if height == 0.0 { self.scenario.approach.base_height } else { height };
        Placement::new(s.point_at(self.scenario.approach.center) + s.normal() * h, s.angle(), false)
    }

    /// Lateral shift placing the right fingertip's probe path
    /// `aim_clearance` outside the near top corner of the first object.
    fn aim_shift(&self, base0: &Placement, dir: Vec2, q: f64) -> Result<Option<f64>, ContactError> {
        let Some(obj) = self.placed.first() else { return Ok(None) };
        let drive = DriveState::new(DriveMode::Linear, q, self.asm.right.params.s_min).with_base(*base0);
        let tip = self.asm.finger_pose(Side::Right, &drive, 0.0)?.i;
        let n = self.env.support.normal();
        let corner = obj.center + rotate(&obj.half, obj.rotation);
        let along = dir.dot(&n);
        if along >= 0.0 {
            return Ok(None);
        }
        let t = (corner - tip).dot(&n) / along;
        let at = tip + dir * t;
        let shift = (corner - at).dot(&self.env.support.tangent()) + self.scenario.approach.aim_clearance;
        Ok(Some(shift))
    }

    fn fingertip_normal(&self, objects: &[PlacedObject], tip: &Pt2) -> (Option<usize>, Option<Vec2>) {
        let mut best: Option<(usize, f64)> = None;
        for (k, o) in objects.iter().enumerate() {
            let d = o.signed_distance(tip);
            if d <= CONTACT_TOL && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        match best {
            Some((k, _)) => (Some(k), Some(objects[k].normal_at(tip))),
            None => (None, None),
        }
    }

    fn eval(&self, stage: &Stage, p: f64) -> Result<Eval, ContactError> {
        match *stage {
            Stage::Free { motion, .. } => self.eval_free(&motion, p),
            Stage::Attached { motion, attach, .. } => self.eval_attached(&motion, &attach, p),
            Stage::Swing { motion, locks } => {
                let ps = [locks[0].map_or(p, |l| p.min(l)), locks[1].map_or(p, |l| p.min(l))];
                self.eval_envelope(&motion, ps, [0.0, 0.0], true)
            }
            Stage::Fold { motion, locks, p0, fold_locks } => {
                let f = |k: usize| fold_locks[k].map_or(p - p0, |l| (p - p0).min(l)).to_radians();
                self.eval_envelope(&motion, locks, [f(0), f(1)], false)
            }
        }
    }

    fn finger_frame(&self, drive: DriveState, fold: f64, config: ScalConfig, objects: &[PlacedObject]) -> FingerFrame {
        let tip = config.i;
        let support_contact = self.env.support.signed_distance(&tip) <= CONTACT_TOL;
        let object_contact = objects.iter().any(|o| o.signed_distance(&tip) <= CONTACT_TOL);
        FingerFrame { drive: DriveState { s: config.s, ..drive }, fold, config, support_contact, object_contact }
    }

    fn eval_free(&self, motion: &Motion, p: f64) -> Result<Eval, ContactError> {
        let mut cons = vec![Constraint::Support(self.env.support)];
        cons.extend(self.placed.iter().map(|o| Constraint::Object(*o)));
        let mut out: Vec<FingerFrame> = Vec::with_capacity(2);
        let mut touched = [None; 2];
        let mut normals = [None; 2];
        for side in Side::BOTH {
            let drive = motion.drive(p, self.asm.mount(side).params.s_min);
            let r = step_constrained(self.asm, side, &drive, 0.0, |c| Constraint::tip_clearance(&cons, c))?;
            let (t, n) = self.fingertip_normal(&self.placed, &r.config.i);
            touched[side.index()] = t;
            normals[side.index()] = n;
            out.push(self.finger_frame(drive, 0.0, r.config, &self.placed));
        }
        Ok(Eval {
            fingers: [out[0], out[1]],
            offsets: vec![Vec2::zeros(); self.placed.len()],
            touched,
            normals,
            middle: [false; 2],
            distal: [false; 2],
        })
    }

    fn eval_attached(&self, motion: &Motion, at: &Attach, p: f64) -> Result<Eval, ContactError> {
        let n_sup = self.env.support.normal();
        let mut d = Vec2::zeros();
        let mut frames = None;
        for _ in 0..FIXED_POINT_ITERS {
            let mut cfgs = Vec::with_capacity(2);
            for side in Side::BOTH {
                let k = side.index();
                let mut cons = vec![
                    Constraint::Support(self.env.support),
                    Constraint::HalfPlane { point: at.points[k] + d, normal: at.normals[k] },
                ];
                cons.extend(
                    self.placed.iter().enumerate().filter(|(j, _)| *j != at.object).map(|(_, o)| Constraint::Object(*o)),
                );
                let drive = motion.drive(p, self.asm.mount(side).params.s_min);
                let r = step_constrained(self.asm, side, &drive, 0.0, |c| Constraint::tip_clearance(&cons, c))?;
                cfgs.push((drive, r.config));
            }
            let mid = Pt2::from((cfgs[0].1.i.coords + cfgs[1].1.i.coords) * 0.5);
            let mut nd = mid - at.mid0;
            let h = nd.dot(&n_sup);
            if h < 0.0 {
                nd -= n_sup * h;
            }
            let delta = (nd - d).norm();
            d = nd;
            frames = Some(cfgs);
            if delta < FIXED_POINT_TOL {
                break;
            }
        }
        let cfgs = frames.expect("at least one iteration");
        let mut offsets = vec![Vec2::zeros(); self.placed.len()];
        offsets[at.object] = d;
        let objects: Vec<PlacedObject> = self.placed.iter().zip(&offsets).map(|(o, off)| o.translated(off)).collect();
        let mut fingers = Vec::with_capacity(2);
        let mut touched = [None; 2];
        let mut normals = [None; 2];
        for side in Side::BOTH {
            let k = side.index();
            let (drive, cfg) = cfgs[k];
            let mut ff = self.finger_frame(drive, 0.0, cfg, &objects);
            let on_grip = at.normals[k].dot(&(cfg.i - (at.points[k] + d))) <= CONTACT_TOL;
            ff.object_contact |= on_grip;
            if on_grip {
                touched[k] = Some(at.object);
                normals[k] = Some(at.normals[k]);
            }
            fingers.push(ff);
        }
        Ok(Eval { fingers: [fingers[0], fingers[1]], offsets, touched, normals, middle: [false; 2], distal: [false; 2] })
    }

    fn eval_envelope(&self, motion: &Motion, ps: [f64; 2], folds: [f64; 2], distal_constrained: bool) -> Result<Eval, ContactError> {
        let support = self.env.support;
        let mut fingers = Vec::with_capacity(2);
        let (mut touched, mut middle, mut distal) = ([None; 2], [false; 2], [false; 2]);
        for side in Side::BOTH {
            let k = side.index();
            let drive = motion.drive(ps[k], self.asm.mount(side).params.s_min);
            let clearance = |c: &ScalConfig| {
                let mut m = support.signed_distance(&c.i);
                if distal_constrained {
                    for o in &self.placed {
                        m = m.min(o.segment_distance(&c.d, &c.i));
                    }
                }
                m
            };
            let r = step_constrained(self.asm, side, &drive, folds[k], clearance)?;
            let c = r.config;
            let mut ff = self.finger_frame(drive, folds[k], c, &self.placed);
            for (j, o) in self.placed.iter().enumerate() {
                let mid_d = o.segment_distance(&c.b, &c.d);
                let dist_d = o.segment_distance(&c.d, &c.i);
                if mid_d <= CONTACT_TOL {
                    middle[k] = true;
                    touched[k] = Some(j);
                }
                if dist_d <= CONTACT_TOL {
                    distal[k] = true;
                    touched[k] = Some(j);
                }
            }
            ff.object_contact |= middle[k] || distal[k];
            fingers.push(ff);
        }
        Ok(Eval {
            fingers: [fingers[0], fingers[1]],
            offsets: vec![Vec2::zeros(); self.placed.len()],
            touched,
            normals: [None; 2],
            middle,
            distal,
        })
    }

    fn clearance_of(&self, stage: &Stage, e: &Eval) -> Option<f64> {
        match stage {
            Stage::Attached { attach, .. } => {
                Some(self.placed[attach.object].translated(&e.offsets[attach.object]).clearance(&self.env.support))
            }
            _ => None,
        }
    }

    fn both_on_object(e: &Eval) -> bool {
        e.touched[0].is_some() && e.touched[0] == e.touched[1]
    }

    fn holds(&self, pred: Pred, stage: &Stage, e: &Eval, p: f64) -> Result<bool, ContactError> {
        Ok(match pred {
            Pred::Support(side) => e.fingers[side.index()].support_contact,
            Pred::Object(side) => {
                let k = side.index();
                e.touched[k].is_some() || (matches!(stage, Stage::Swing { .. }) && e.fingers[k].object_contact)
            }
            Pred::Pinch => {
                Self::both_on_object(e)
                    && match (e.normals[0], e.normals[1]) {
                        (Some(a), Some(b)) => a.dot(&b) <= -self.settings().attach_angle.cos(),
                        _ => false,
                    }
            }
            Pred::Opened(side) => {
                let k = side.index();
                e.fingers[k].config.s > self.asm.mount(side).params.s_min && e.fingers[k].object_contact
            }
            Pred::Aperture => match self.probe_target {
                Some(j) => {
                    let o = &self.placed[j];
                    Side::BOTH.iter().all(|&side| {
                        let l = o.local(&e.fingers[side.index()].config.i);
                        side.outward().x * l.x > 0.0 && l.y < o.widest_section() - CONTACT_TOL
                    })
                }
                None => false,
            },
            Pred::Lift => {
                let clear = self.clearance_of(stage, e).unwrap_or(0.0);
                if !(clear > self.settings().lift_clearance && Self::both_on_object(e)) {
                    false
                } else {
                    let prev = self.eval(stage, p - TANGENT_STEP)?;
                    let mid = |x: &Eval| (x.fingers[0].config.i.coords + x.fingers[1].config.i.coords) * 0.5;
                    (mid(e) - mid(&prev)).dot(&self.env.support.normal()) > 0.0
                }
            }
            Pred::Secure => match stage {
                Stage::Fold { .. } => e.middle.iter().all(|&m| m) && e.distal.iter().all(|&m| m),
                _ => {
                    let clear = self.clearance_of(stage, e).unwrap_or(0.0);
                    clear >= self.settings().secure_clearance && Self::both_on_object(e)
                }
            },
            Pred::Middle(side) => e.middle[side.index()],
            Pred::Distal(side) => e.distal[side.index()],
        })
    }

    fn active(&self, stage: &Stage) -> Vec<Pred> {
        let mut v = Vec::new();
        for side in Side::BOTH {
            let k = side.index();
            if !self.seen_support[k] {
                v.push(Pred::Support(side));
            }
            if !self.seen_object[k] {
                v.push(Pred::Object(side));
            }
        }
        match stage {
            Stage::Free { probe: true, .. } => {
                for side in Side::BOTH {
                    if !self.opened[side.index()] {
                        v.push(Pred::Opened(side));
                    }
                }
                v.push(Pred::Aperture);
            }
            Stage::Free { probe: false, .. } => v.push(Pred::Pinch),
            Stage::Attached { lifted, .. } => v.push(if *lifted { Pred::Secure } else { Pred::Lift }),
            Stage::Swing { locks, .. } => {
                for side in Side::BOTH {
                    if locks[side.index()].is_none() {
                        v.push(Pred::Middle(side));
                    }
                }
            }
            Stage::Fold { fold_locks, .. } => {
                for side in Side::BOTH {
                    if fold_locks[side.index()].is_none() {
                        v.push(Pred::Distal(side));
                    }
                }
            }
        }
        v
    }

    fn event(&mut self, kind: EventKind, p: f64, side: Option<Side>) {
        self.events.push(Event { kind, progress: p, side });
    }

    fn push_frame(&mut self, p: f64, e: &Eval) {
        self.frames.push(Frame { progress: p, phase: self.phase, fingers: e.fingers, object_offsets: e.offsets.clone() });
    }

    fn fail(&mut self, p: f64) {
        self.phase = Phase::Failed;
        self.event(EventKind::Failed, p, None);
        self.done = true;
        if let Some(last) = self.frames.last_mut() {
            if last.progress == p {
                last.phase = Phase::Failed;
            }
        }
    }

    /// Locates the first progress in `(lo, hi]` where `pred` holds, given
    /// that it holds at `hi`.
    fn refine(&self, pred: Pred, stage: &Stage, mut lo: f64, mut hi: f64) -> Result<f64, ContactError> {
        for _ in 0..BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let e = self.eval(stage, mid)?;
            if self.holds(pred, stage, &e, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Last feasible progress in `[lo, hi)`, with `lo` feasible.
    fn last_feasible(&self, stage: &Stage, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(stage, mid).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Applies a fired predicate at progress `p`; may replace the stage and
    /// the active grid.
    fn apply(&mut self, pred: Pred, stage: &mut Stage, grid: &mut Schedule, p: f64, e: &Eval) {
        match pred {
            Pred::Support(side) => {
                self.seen_support[side.index()] = true;
                self.event(EventKind::FirstSupportContact, p, Some(side));
                if self.phase == Phase::FreeApproach {
                    self.phase = Phase::SurfaceSlide;
                }
                if let Stage::Free { probe: true, motion } = *stage {
                    // the probe bottomed out on the support
                    self.start_closure(stage, grid, &motion, p);
                }
            }
            Pred::Object(side) => {
                let k = side.index();
                self.seen_object[k] = true;
                self.event(EventKind::ObjectContact, p, Some(side));
                if matches!(self.phase, Phase::FreeApproach | Phase::SurfaceSlide) {
                    self.phase = Phase::ObjectContact;
                }
                if let Stage::Free { probe: true, motion } = *stage {
                    self.probe_target = e.touched[k].or(self.probe_target);
                    let lateral = rotate(&side.outward(), motion.base_at(p).rotation);
                    let gate = e.normals[k].map_or(0.0, |n| n.dot(&lateral));
                    if !(gate > self.settings().open_gate) {
                        self.event(EventKind::OpeningNotTriggered, p, Some(side));
                        self.fail(p);
                    }
                }
            }
            Pred::Opened(side) => {
                self.opened[side.index()] = true;
                self.event(EventKind::PassiveOpen, p, Some(side));
                self.phase = Phase::PassiveOpen;
            }
            Pred::Aperture => {
                self.event(EventKind::ApertureExceedsObject, p, None);
                self.phase = Phase::ObjectContact;
                if let Stage::Free { motion, .. } = *stage {
                    self.start_closure(stage, grid, &motion, p);
                }
            }
            Pred::Pinch => {
                if let Stage::Free { motion, .. } = *stage {
                    let k = e.touched[0].expect("pinch requires contact");
                    let pts = [e.fingers[0].config.i, e.fingers[1].config.i];
                    let attach = Attach {
                        object: k,
                        points: pts,
                        normals: [e.normals[0].unwrap(), e.normals[1].unwrap()],
                        mid0: Pt2::from((pts[0].coords + pts[1].coords) * 0.5),
                    };
                    *stage = Stage::Attached { motion, attach, lifted: false };
                }
            }
            Pred::Lift => {
                self.event(EventKind::LiftOff, p, None);
                self.phase = Phase::Lift;
                if let Stage::Attached { lifted, .. } = stage {
                    *lifted = true;
                }
            }
            Pred::Secure => {
                self.event(EventKind::Secured, p, None);
                self.phase = Phase::Secured;
                self.done = true;
            }
            Pred::Middle(side) => {
                if let Stage::Swing { motion, locks } = stage {
                    locks[side.index()] = Some(p);
                    if !self.seen_object[side.index()] {
                        self.seen_object[side.index()] = true;
                        self.event(EventKind::ObjectContact, p, Some(side));
                    }
                    if matches!(self.phase, Phase::FreeApproach | Phase::SurfaceSlide) {
                        self.phase = Phase::ObjectContact;
                    }
                    if let [Some(a), Some(b)] = *locks {
                        self.event(EventKind::EnvelopeStart, p, None);
                        self.phase = Phase::Envelope;
                        let fold_deg = self.scenario.approach.fold_angle.to_degrees();
                        *grid = Schedule { start: p, end: p + fold_deg, step: self.scenario.approach.fold_step };
                        *stage = Stage::Fold { motion: *motion, locks: [a, b], p0: p, fold_locks: [None, None] };
                    }
                }
            }
            Pred::Distal(side) => {
                if let Stage::Fold { p0, fold_locks, .. } = stage {
                    fold_locks[side.index()] = Some(p - *p0);
                }
            }
        }
    }

    fn start_closure(&mut self, stage: &mut Stage, grid: &mut Schedule, motion: &Motion, p: f64) {
        let sch = self.scenario.approach.schedule;
        let q = self.scenario.approach.probe_carriage;
        let travel = sch.end - q;
        let base = motion.base_at(p);
        let closing = Motion::Drive { mode: DriveMode::Linear, p0: p, q0: q, base };
        *stage = Stage::Free { motion: closing, probe: false };
        *grid = Schedule { start: p, end: p + travel.max(0.0), step: sch.step };
    }

    /// Fires every active predicate that already holds at `p`.
    fn settle(&mut self, stage: &mut Stage, grid: &mut Schedule, p: f64) -> Result<(), ContactError> {
        loop {
            if self.done {
                return Ok(());
            }
            let e = self.eval(stage, p)?;
            let mut fired = false;
            for pred in self.active(stage) {
                if self.holds(pred, stage, &e, p)? {
                    self.apply(pred, stage, grid, p, &e);
                    fired = true;
                    break;
                }
            }
            if !fired {
                return Ok(());
            }
        }
    }

    fn run(&mut self, stage0: Stage, sch: Schedule) -> Result<(), ContactError> {
        let mut stage = stage0;
        let mut grid = sch;
        let mut p = sch.start;
        let first = match self.eval(&stage, p) {
            Ok(e) => e,
            Err(ContactError::NoSolution { .. }) => {
                self.fail(p);
                return Ok(());
            }
            Err(err) => return Err(err),
        };
        self.settle(&mut stage, &mut grid, p)?;
        self.push_frame(p, &first);
        while !self.done {
            let span = grid.end - grid.start;
            let eps = 1e-9 * (1.0 + span.abs());
            if p >= grid.end - eps {
                match stage {
                    Stage::Fold { .. } | Stage::Free { probe: true, .. } => self.fail(p),
                    _ if !self.placed.is_empty() => self.fail(p),
                    _ => {}
                }
                break;
            }
            let k = ((p - grid.start) / grid.step + 1e-9).floor() + 1.0;
            let p_next = (grid.start + k * grid.step).min(grid.end);
            let (p_hi, e_hi, infeasible) = match self.eval(&stage, p_next) {
                Ok(e) => (p_next, e, false),
                Err(ContactError::NoSolution { .. }) => {
                    let pf = self.last_feasible(&stage, p, p_next);
                    (pf, self.eval(&stage, pf)?, true)
                }
                Err(err) => return Err(err),
            };
            let mut hits = Vec::new();
            for pred in self.active(&stage) {
                if self.holds(pred, &stage, &e_hi, p_hi)? {
                    hits.push((self.refine(pred, &stage, p, p_hi)?, pred));
                }
            }
            if hits.is_empty() {
                self.push_frame(p_hi, &e_hi);
                p = p_hi;
                if infeasible {
                    self.fail(p);
                }
                continue;
            }
            let p_e = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
            let e_e = self.eval(&stage, p_e)?;
            let tol = 1e-9 * (1.0 + p_e.abs());
            let before = stage;
            for &(pe, pred) in &hits {
                if pe <= p_e + tol && !self.done && stage == before && self.holds(pred, &stage, &e_e, p_e)? {
                    self.apply(pred, &mut stage, &mut grid, p_e, &e_e);
                }
            }
            self.settle(&mut stage, &mut grid, p_e)?;
            self.push_frame(p_e, &e_e);
            p = p_e;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::env::ObjectShape;
    use crate::linkage::{LinkageParams, Prototype};

    fn scal_r(aperture: f64) -> GripperAssembly {
        GripperAssembly::symmetric(LinkageParams::preset(Prototype::ScalR), aperture)
    }

    fn pinch_scenario(support: Support, objects: Vec<ObjectShape>) -> Scenario {
        Scenario {
            environment: Environment { support, objects },
            behavior: Behavior::PinchLift,
            approach: Approach { base_height: 120.0, ..Approach::default() },
            settings: SimSettings::default(),
        }
    }

    fn kinds(t: &SimTrace) -> Vec<EventKind> {
        t.events.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn empty_environment_has_no_events() {
        let sc = Scenario {
            approach: Approach { base_height: 200.0, ..Approach::default() },
            ..pinch_scenario(Support::Flat, vec![])
        };
        let t = run_scenario(&scal_r(80.0), DriveMode::Rotational, &sc).unwrap();
        assert!(t.events.is_empty());
        assert!(t.frames.iter().all(|f| f.phase == Phase::FreeApproach));
        assert_eq!(t.frames.len(), 901);
    }

    #[test]
    fn flat_table_pinch_lift_event_order() {
        let sc = pinch_scenario(Support::Flat, vec![ObjectShape::rectangle(30.0, 10.0, 0.0)]);
        let t = run_scenario(&scal_r(80.0), DriveMode::Rotational, &sc).unwrap();
        let k = kinds(&t);
        let pos = |x: EventKind| k.iter().position(|&y| y == x).unwrap_or_else(|| panic!("{x:?} missing in {k:?}"));
        assert!(pos(EventKind::FirstSupportContact) < pos(EventKind::ObjectContact));
        assert!(pos(EventKind::ObjectContact) < pos(EventKind::LiftOff));
        assert!(pos(EventKind::LiftOff) < pos(EventKind::Secured));
        assert!(t.secured());
    }

    #[test]
    fn schedule_must_increase() {
        let mut sc = pinch_scenario(Support::Flat, vec![]);
        sc.approach.schedule = Schedule { start: 10.0, end: 5.0, step: 0.1 };
        assert!(matches!(
            run_scenario(&scal_r(80.0), DriveMode::Rotational, &sc),
            Err(ContactError::InvalidSchedule(_))
        ));
    }

    #[test]
    fn envelope_rejects_object_wider_than_aperture() {
        let sc = Scenario { behavior: Behavior::Envelope, ..pinch_scenario(Support::Flat, vec![ObjectShape::disk(100.0, 0.0)]) };
        assert!(matches!(run_envelope(&scal_r(80.0), &sc), Err(ContactError::EnvelopeUnreachable(_))));
    }

    #[test]
    fn zero_fold_envelope_is_the_pinch_run() {
        let objects = vec![ObjectShape::rectangle(30.0, 10.0, 0.0)];
        let mut sc = Scenario { behavior: Behavior::Envelope, ..pinch_scenario(Support::Flat, objects) };
        sc.approach.fold_angle = 0.0;
        let a = run_envelope(&scal_r(80.0), &sc).unwrap();
        let b = run_scenario(&scal_r(80.0), DriveMode::Rotational, &sc).unwrap();
        assert_eq!(a, b);
    }
}
