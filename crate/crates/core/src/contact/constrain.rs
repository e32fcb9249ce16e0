//! Slot extension under unilateral contact.

use crate::drive::{DriveState, GripperAssembly, Side};
use crate::geometry::{Pt2, Vec2};
use crate::linkage::ScalConfig;

use super::env::{PlacedObject, Support};
use super::ContactError;

/// Distance below which a feature counts as touching (mm).
pub const CONTACT_TOL: f64 = 1e-6;
/// Bisection tolerance on the slot extension (mm).
pub const ROOT_TOL: f64 = 1e-10;

const SCAN_SAMPLES: usize = 120;

/// A unilateral constraint acting on a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    Support(Support),
    Object(PlacedObject),
    /// `normal · (p - point) >= 0`.
    HalfPlane { point: Pt2, normal: Vec2 },
}

impl Constraint {
    pub fn distance(&self, p: &Pt2) -> f64 {
        match self {
            Constraint::Support(s) => s.signed_distance(p),
            Constraint::Object(o) => o.signed_distance(p),
            Constraint::HalfPlane { point, normal } => normal.dot(&(p - point)),
        }
    }

    /// Smallest distance of the fingertip to any constraint.
    pub fn tip_clearance(constraints: &[Constraint], cfg: &ScalConfig) -> f64 {
        constraints.iter().map(|c| c.distance(&cfg.i)).fold(f64::INFINITY, f64::min)
    }
}

/// Result of a constrained slot solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constrained {
    pub s: f64,
    pub config: ScalConfig,
    /// Whether penetration was non-increasing in `s` over the scanned bracket.
    pub monotone: bool,
}

/// Smallest slot extension at which `clearance` (signed, negative means
/// penetration) is non-negative for one finger at the given drive input.
///
/// The slot range is scanned on a fixed grid for the first non-penetrating
/// sample, then the bracket is bisected to [`ROOT_TOL`] and the
/// non-penetrating end is returned. `drive.s` is ignored.
pub fn step_constrained<F>(
    assembly: &GripperAssembly,
    side: Side,
    drive: &DriveState,
    fold: f64,
    clearance: F,
) -> Result<Constrained, ContactError>
where
    F: Fn(&ScalConfig) -> f64,
{
    let params = &assembly.mount(side).params;
    let (s_min, s_max) = (params.s_min, params.s_max);
    let pose = |s: f64| assembly.finger_pose(side, &DriveState { s, ..*drive }, fold);

    let first = pose(s_min)?;
    let mut prev_pen = -clearance(&first);
    if prev_pen <= 0.0 {
        return Ok(Constrained { s: s_min, config: first, monotone: true });
    }
    let mut prev_s = s_min;
    let mut monotone = true;
    for k in 1..=SCAN_SAMPLES {
        let s = if k == SCAN_SAMPLES { s_max } else { s_min + (s_max - s_min) * k as f64 / SCAN_SAMPLES as f64 };
        let cfg = pose(s)?;
        let pen = -clearance(&cfg);
        if pen > prev_pen + 1e-12 {
            monotone = false;
        }
        if pen <= 0.0 {
            let (mut lo, mut hi, mut best) = (prev_s, s, cfg);
            while hi - lo > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let c = pose(mid)?;
                if clearance(&c) >= 0.0 {
                    hi = mid;
                    best = c;
                } else {
                    lo = mid;
                }
            }
            return Ok(Constrained { s: hi, config: best, monotone });
        }
        prev_pen = pen;
        prev_s = s;
    }
    Err(ContactError::NoSolution { s_max, penetration: prev_pen })
}
