//! Free-space motion of a two-finger gripper under rotational or linear drive.
//!
//! Gripper frame: origin at the gripper centerline, +y up. The right finger
//! uses the finger frame of [`crate::linkage`] directly (translated to its
//! anchor); the left finger is its mirror image about the centerline, so in
//! the left finger's view +x is the closing direction.
//!
//! Rotational drive turns the core chain `A–B–C–D` about `A` in the closing
//! sense while the bearing of `AE` stays fixed; linear drive slides the whole
//! finger toward the centerline.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{rotate_about, Placement, Pt2, Vec2};
use crate::linkage::{frame_kinematics_with_alpha, solve_finger, solve_scal, LinkageError, LinkageParams, ScalConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriveError {
    #[error(transparent)]
    Linkage(#[from] LinkageError),
    #[error("free-space pose requires s = s_min ({s_min}), got {s}")]
    NotFreeSpace { s: f64, s_min: f64 },
    #[error("drive input {q} outside configured range [{min}, {max}]")]
    OutOfDriveRange { q: f64, min: f64, max: f64 },
    #[error("sweep needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid sweep range [{0}, {1}]")]
    BadRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveMode {
    /// `q` in radians: rotation of the core chain about the base pivot.
    Rotational,
    /// `q` in mm: inward carriage travel of each finger.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    /// Unit vector (gripper frame) pointing away from the centerline.
    pub fn outward(self) -> Vec2 {
        match self {
            Side::Left => Vec2::new(-1.0, 0.0),
            Side::Right => Vec2::new(1.0, 0.0),
        }
    }
}

/// One quasi-static frame of one finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveState {
    pub mode: DriveMode,
    pub q: f64,
    pub s: f64,
    /// Pose of the gripper frame in the world.
    pub base_pose: Placement,
}

impl DriveState {
    pub fn new(mode: DriveMode, q: f64, s: f64) -> Self {
        Self { mode, q, s, base_pose: Placement::identity() }
    }

    pub fn with_base(mut self, base_pose: Placement) -> Self {
        self.base_pose = base_pose;
        self
    }
}

/// Allowed drive inputs per mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveLimits {
    /// Radians.
    pub rotational: (f64, f64),
    /// Millimetres.
    pub linear: (f64, f64),
}

impl Default for DriveLimits {
    fn default() -> Self {
        Self { rotational: (0.0, std::f64::consts::FRAC_PI_2), linear: (0.0, 120.0) }
    }
}

impl DriveLimits {
    pub fn range(&self, mode: DriveMode) -> (f64, f64) {
        match mode {
            DriveMode::Rotational => self.rotational,
            DriveMode::Linear => self.linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerMount {
    pub params: LinkageParams,
    /// Position of the base pivot `A` in the gripper frame.
    pub anchor: Pt2,
    pub mirrored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GripperAssembly {
    pub left: FingerMount,
    pub right: FingerMount,
    /// Distance between the two base pivots at zero drive input (mm).
    pub aperture: f64,
    pub limits: DriveLimits,
}

impl GripperAssembly {
    /// Mirror-symmetric gripper with both pivots on the gripper x axis.
    pub fn symmetric(params: LinkageParams, aperture: f64) -> Self {
        let half = aperture / 2.0;
        Self {
            left: FingerMount { params: params.clone(), anchor: Pt2::new(-half, 0.0), mirrored: true },
            right: FingerMount { params, anchor: Pt2::new(half, 0.0), mirrored: false },
            aperture,
            limits: DriveLimits::default(),
        }
    }

    pub fn with_limits(mut self, limits: DriveLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn mount(&self, side: Side) -> &FingerMount {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn check_drive(&self, mode: DriveMode, q: f64) -> Result<(), DriveError> {
        let (min, max) = self.limits.range(mode);
        let slack = 1e-9 * (1.0 + max.abs());
        if !(q >= min - slack && q <= max + slack) {
            return Err(DriveError::OutOfDriveRange { q, min, max });
        }
        Ok(())
    }

    /// Placement mapping finger-frame points of `side` into the world.
    pub fn finger_placement(&self, side: Side, drive: &DriveState) -> Placement {
        let m = self.mount(side);
        let mut anchor = m.anchor;
        if drive.mode == DriveMode::Linear {
            anchor -= side.outward() * drive.q;
        }
        drive.base_pose.compose(&Placement::new(anchor, 0.0, m.mirrored))
    }

    /// World configuration of one finger at an arbitrary slot extension.
    ///
    /// `fold` rotates `AE` (and with it the distal phalange) inward; it is the
    /// commanded fingertip fold of the enveloping grasp.
    pub fn finger_pose(&self, side: Side, drive: &DriveState, fold: f64) -> Result<ScalConfig, DriveError> {
        let params = &self.mount(side).params;
        let mut core = solve_scal(params, drive.s)?;
        if drive.mode == DriveMode::Rotational {
            // closing is clockwise in the (right-finger) finger frame
            let pivot = core.a;
            core.b = rotate_about(&core.b, &pivot, -drive.q);
            core.c = rotate_about(&core.c, &pivot, -drive.q);
            core.d = rotate_about(&core.d, &pivot, -drive.q);
        }
        let local = frame_kinematics_with_alpha(params, &core, params.alpha - fold);
        let place = self.finger_placement(side, drive);
        Ok(local.map_points(|p| place.point(p)))
    }

    /// World bearing of the distal phalange for the given drive and fold.
    pub fn tip_bearing(&self, side: Side, drive: &DriveState, fold: f64) -> f64 {
        let params = &self.mount(side).params;
        self.finger_placement(side, drive).bearing(params.tip_bearing() - fold)
    }
}

/// Both fingers in free space (slot held at `s_min`), world frame.
pub fn free_space_pose(assembly: &GripperAssembly, drive: &DriveState) -> Result<[ScalConfig; 2], DriveError> {
    for side in Side::BOTH {
        let s_min = assembly.mount(side).params.s_min;
        if drive.s != s_min {
            return Err(DriveError::NotFreeSpace { s: drive.s, s_min });
        }
    }
    assembly.check_drive(drive.mode, drive.q)?;
    Ok([assembly.finger_pose(Side::Left, drive, 0.0)?, assembly.finger_pose(Side::Right, drive, 0.0)?])
}

/// One sample of a slot sweep (finger frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub s: f64,
    pub b: Pt2,
    pub d: Pt2,
    pub i: Pt2,
}

/// Samples `n` uniformly spaced slot extensions over `s_range` (inclusive).
pub fn trace_sweep(params: &LinkageParams, s_range: (f64, f64), n: usize) -> Result<Vec<TracePoint>, DriveError> {
    if n < 2 {
        return Err(DriveError::TooFewSamples(n));
    }
    let (lo, hi) = s_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(DriveError::BadRange(lo, hi));
    }
    (0..n)
        .into_par_iter()
        .map(|k| {
            // pin the endpoints exactly
            let s = if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
            let cfg = solve_finger(params, s)?;
            Ok(TracePoint { s, b: cfg.b, d: cfg.d, i: cfg.i })
        })
        .collect()
}
