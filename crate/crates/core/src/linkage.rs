//! Geometry and forward kinematics of a single slot-constrained finger.
//!
//! The finger frame has the base pivot `A` at the origin. Coordinates are the
//! deployed frame of the *right* finger of a gripper: +y points away from the
//! support surface and +x points away from the gripper centerline. The left
//! finger is the mirror image (see [`crate::drive`]).
//!
//! The core chain is `A–B–C–D`: `C` slides along a slot of bearing `beta`
//! (`|AC| = s`), `B` closes the loop on circles `(A, |AB|)` and `(C, |CB|)`,
//! and `D` hangs off the bent member `CBD` with interior angle `gamma` at `B`.
//! Two parallelograms (`ABFE`, `BDHG`) and the connector triangle `BFG` carry
//! the bearing of `AE` through to the distal phalange `DI`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{rotate, unit, wrap_angle, Pt2, Vec2};

/// Relative tangency threshold on the circle-intersection discriminant.
pub const TANGENCY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkageError {
    #[error("slot extension {s} mm outside travel [{min}, {max}]")]
    OutOfRange { s: f64, min: f64, max: f64 },
    #[error("circles (A, |AB|) and (C, |CB|) are tangent or disjoint at s = {s} mm (discriminant {discriminant:.3e} mm^2)")]
    DegenerateGeometry { s: f64, discriminant: f64 },
    #[error("invalid linkage parameters: {0}")]
    InvalidParams(String),
}

/// Selects one of two mirror-image solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Pos,
    Neg,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Pos => 1.0,
            Branch::Neg => -1.0,
        }
    }

    pub fn from_sign(v: i64) -> Option<Self> {
        match v {
            1 => Some(Branch::Pos),
            -1 => Some(Branch::Neg),
            _ => None,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Branch::Pos => 1,
            Branch::Neg => -1,
        }
    }
}

/// Which of the two shipped prototypes a parameter set derives from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prototype {
    /// Rotational base drive with an actively folding fingertip.
    ScalR,
    /// Linear carriage drive with contact-triggered passive opening.
    ScalL,
}

impl Prototype {
    /// `(alpha, beta, theta_t)` in degrees.
    pub fn angles_deg(self) -> (f64, f64, f64) {
        match self {
            Prototype::ScalR => (30.0, 78.463, 60.0),
            Prototype::ScalL => (0.0, -15.0, 20.0),
        }
    }
}

/// Finger geometry. Lengths in mm, angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkageParams {
    pub base_unit_l: f64,
    pub len_ab: f64,
    pub len_cb: f64,
    pub len_bd: f64,
    pub len_ae: f64,
    pub len_bf: f64,
    pub len_bg: f64,
    pub len_di: f64,
    /// Interior angle of the bent member `CBD` at `B`.
    pub gamma: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// Bearing of the short side `AE`.
    pub alpha: f64,
    /// Bearing of the slot `AC`.
    pub beta: f64,
    /// Apex angle of the connector triangle `BFG` at `B`.
    pub theta_t: f64,
    /// `Pos` puts `B` on the left of `A -> C` (positive cross product).
    pub branch_b: Branch,
    /// Sense in which `BD` is deflected from the straight continuation of `CB`.
    pub branch_d: Branch,
    /// Sense in which `BG` is rotated from `BF` by `theta_t`.
    pub branch_t: Branch,
    /// Fixed bearing of `DI` relative to `DH`.
    pub tip_offset: f64,
}

impl LinkageParams {
    /// Shipped prototype geometry (base unit 10 mm).
    pub fn preset(p: Prototype) -> Self {
        let l = 10.0;
        let (alpha_deg, beta_deg, theta_deg) = p.angles_deg();
        let alpha = f64::to_radians(alpha_deg);
        let theta_t = f64::to_radians(theta_deg);
        // tip hangs straight down in the deployed frame
        let tip_offset = wrap_angle(-PI / 2.0 - alpha - theta_t);
        Self {
            base_unit_l: l,
            len_ab: 6.0 * l,
            len_cb: 7.0 * l,
            len_bd: 4.0 * l,
            len_ae: 2.0 * l,
            len_bf: 2.0 * l,
            len_bg: 2.0 * l,
            len_di: 4.0 * l,
            gamma: f64::to_radians(160.0),
            s_min: 5.0 * l,
            s_max: 11.0 * l,
            alpha,
            beta: f64::to_radians(beta_deg),
            theta_t,
            branch_b: Branch::Neg,
            branch_d: Branch::Neg,
            branch_t: Branch::Pos,
            tip_offset,
        }
    }

    /// Bearing of `DH` (equal to the bearing of `BG`).
    pub fn connector_bearing(&self) -> f64 {
        self.alpha + self.branch_t.sign() * self.theta_t
    }

    /// Bearing of the distal phalange `DI`; independent of `s`.
    pub fn tip_bearing(&self) -> f64 {
        wrap_angle(self.connector_bearing() + self.tip_offset)
    }

    /// Checks the type invariants. The loop-closure existence condition is
    /// reported separately by [`LinkageParams::check_loop_closure`].
    pub fn check_basic(&self) -> Result<(), LinkageError> {
        let lengths = [
            ("base_unit_l", self.base_unit_l),
            ("len_ab", self.len_ab),
            ("len_cb", self.len_cb),
            ("len_bd", self.len_bd),
            ("len_ae", self.len_ae),
            ("len_bf", self.len_bf),
            ("len_bg", self.len_bg),
            ("len_di", self.len_di),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(LinkageError::InvalidParams(format!("{name} must be > 0 (got {v})")));
            }
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("theta_t", self.theta_t),
            ("tip_offset", self.tip_offset),
            ("s_min", self.s_min),
            ("s_max", self.s_max),
        ] {
            if !v.is_finite() {
                return Err(LinkageError::InvalidParams(format!("{name} is not finite")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < PI) {
            return Err(LinkageError::InvalidParams(format!(
                "gamma must lie in (0, 180) degrees (got {:.6} deg)",
                self.gamma.to_degrees()
            )));
        }
        if !(self.s_min < self.s_max) {
            return Err(LinkageError::InvalidParams(format!(
                "s_min ({}) must be below s_max ({})",
                self.s_min, self.s_max
            )));
        }
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        if !(rel(self.len_ae, self.len_bf) && rel(self.len_ae, self.len_bg)) {
            return Err(LinkageError::InvalidParams(format!(
                "parallelogram short sides must match: |AE| = {}, |BF| = {}, |BG| = {}",
                self.len_ae, self.len_bf, self.len_bg
            )));
        }
        Ok(())
    }

    /// Circle intersection must exist across the whole slot:
    /// `||AB| - |CB|| <= s_min`, `s_max <= |AB| + |CB|` and `s_min > 0`.
    pub fn check_loop_closure(&self) -> Result<(), LinkageError> {
        let lo = (self.len_ab - self.len_cb).abs();
        let hi = self.len_ab + self.len_cb;
        if !(self.s_min > 0.0) {
            return Err(LinkageError::InvalidParams(format!(
                "loop closure undefined: s_min = {} leaves A and C coincident",
                self.s_min
            )));
        }
        if self.s_min < lo || self.s_max > hi {
            return Err(LinkageError::InvalidParams(format!(
                "loop closure fails: slot travel [{}, {}] not inside [{lo}, {hi}]",
                self.s_min, self.s_max
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LinkageError> {
        self.check_basic()?;
        self.check_loop_closure()
    }

    pub fn check_range(&self, s: f64) -> Result<(), LinkageError> {
        if !(s >= self.s_min && s <= self.s_max) {
            return Err(LinkageError::OutOfRange { s, min: self.s_min, max: self.s_max });
        }
        Ok(())
    }
}

/// Slot-bias spring and intermediate-joint stiffness.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringParams {
    /// Equivalent linear stiffness of the slot spring (N/mm).
    pub k_slot: f64,
    /// Force holding `C` at the near end of the slot (N).
    pub preload: f64,
    /// Torsional stiffness at the intermediate joint (N·mm/rad).
    pub k1: f64,
}

impl Default for SpringParams {
    fn default() -> Self {
        Self { k_slot: 0.05, preload: 2.0, k1: 500.0 }
    }
}

impl SpringParams {
    pub fn validate(&self) -> Result<(), LinkageError> {
        for (name, v) in [("k_slot", self.k_slot), ("preload", self.preload), ("k1", self.k1)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LinkageError::InvalidParams(format!("spring {name} must be >= 0 (got {v})")));
            }
        }
        Ok(())
    }
}

/// Solved joint positions of one finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalConfig {
    pub s: f64,
    pub a: Pt2,
    pub b: Pt2,
    pub c: Pt2,
    pub d: Pt2,
    pub e: Pt2,
    pub f: Pt2,
    pub g: Pt2,
    pub h: Pt2,
    pub i: Pt2,
}

impl ScalConfig {
    pub const JOINT_NAMES: [char; 9] = ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I'];

    pub fn joints(&self) -> [Pt2; 9] {
        [self.a, self.b, self.c, self.d, self.e, self.f, self.g, self.h, self.i]
    }

    pub fn map_points(&self, mut f: impl FnMut(&Pt2) -> Pt2) -> Self {
        Self {
            s: self.s,
            a: f(&self.a),
            b: f(&self.b),
            c: f(&self.c),
            d: f(&self.d),
            e: f(&self.e),
            f: f(&self.f),
            g: f(&self.g),
            h: f(&self.h),
            i: f(&self.i),
        }
    }

    /// Bearing of `I - D`.
    pub fn tip_bearing(&self) -> f64 {
        crate::geometry::bearing(&(self.i - self.d))
    }
}

/// Solves the core chain `A, B, C, D` for slot extension `s`. The frame
/// points `E..I` are left at `A`; see [`frame_kinematics`].
pub fn solve_scal(params: &LinkageParams, s: f64) -> Result<ScalConfig, LinkageError> {
    params.check_range(s)?;
    let a = Pt2::origin();
    let u = unit(params.beta);
    let c = a + u * s;

    // circle (A, |AB|) ∩ circle (C, |CB|), measured along and across the slot
    let along = (s * s + params.len_ab * params.len_ab - params.len_cb * params.len_cb) / (2.0 * s);
    let disc = params.len_ab * params.len_ab - along * along;
    if !(disc >= TANGENCY_REL_TOL * params.len_ab * params.len_ab) {
        return Err(LinkageError::DegenerateGeometry { s, discriminant: disc });
    }
    let across = disc.sqrt();
    let n = Vec2::new(-u.y, u.x);
    let b = a + u * along + n * (params.branch_b.sign() * across);

    // BD leaves B deflected by (pi - gamma) from the straight continuation of CB
    let w = (b - c).normalize();
    let d = b + rotate(&w, params.branch_d.sign() * (PI - params.gamma)) * params.len_bd;

    Ok(ScalConfig { s, a, b, c, d, e: a, f: a, g: a, h: a, i: a })
}

/// Fills `E, F, G, H, I` from the core chain with `AE` at bearing `alpha`.
pub fn frame_kinematics(params: &LinkageParams, core: &ScalConfig) -> ScalConfig {
    frame_kinematics_with_alpha(params, core, params.alpha)
}

/// As [`frame_kinematics`], with an explicit bearing for `AE`. Rotating `AE`
/// rotates the whole distal chain by the same amount.
pub fn frame_kinematics_with_alpha(params: &LinkageParams, core: &ScalConfig, alpha: f64) -> ScalConfig {
    let ae = unit(alpha) * params.len_ae;
    let connector = alpha + params.branch_t.sign() * params.theta_t;
    let bg = unit(connector) * params.len_bg;
    let e = core.a + ae;
    let f = core.b + ae;
    let g = core.b + bg;
    let h = core.d + bg;
    let i = core.d + unit(connector + params.tip_offset) * params.len_di;
    ScalConfig { e, f, g, h, i, ..*core }
}

/// Full finger configuration at slot extension `s`.
pub fn solve_finger(params: &LinkageParams, s: f64) -> Result<ScalConfig, LinkageError> {
    Ok(frame_kinematics(params, &solve_scal(params, s)?))
}

/// Fingertip contact point and the bearing of `DI`.
pub fn tip_pose(params: &LinkageParams, s: f64) -> Result<(Pt2, f64), LinkageError> {
    let cfg = solve_finger(params, s)?;
    Ok((cfg.i, params.tip_bearing()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angle_between, bearing, cross};
    use approx::assert_relative_eq;

    fn table_one_beta0() -> LinkageParams {
        LinkageParams { beta: 0.0, branch_b: Branch::Pos, ..LinkageParams::preset(Prototype::ScalR) }
    }

    /// Brute-force oracle: coarse-to-fine grid search for B minimising the
    /// sum of circle residuals in the upper half-plane.
    fn grid_search_b(s: f64) -> Pt2 {
        let cost = |x: f64, y: f64| {
            ((x * x + y * y).sqrt() - 60.0).abs() + (((x - s).powi(2) + y * y).sqrt() - 70.0).abs()
        };
        let (mut cx, mut cy, mut half) = (0.0, 30.0, 64.0);
        for _ in 0..60 {
            let mut best = (f64::INFINITY, cx, cy);
            for i in -20..=20 {
                for j in -20..=20 {
                    let x = cx + half * i as f64 / 20.0;
                    let y = cy + half * j as f64 / 20.0;
                    if y <= 0.0 {
                        continue;
                    }
                    let c = cost(x, y);
                    if c < best.0 {
                        best = (c, x, y);
                    }
                }
            }
            cx = best.1;
            cy = best.2;
            half *= 0.5;
        }
        Pt2::new(cx, cy)
    }

    #[test]
    fn b_matches_circle_intersection_oracle_at_slot_ends() {
        let p = table_one_beta0();
        // the quoted y at s = 110 is rounded in its last digit (exact 34.49757...)
        for (s, expected, tol) in [(50.0, Pt2::new(12.0, 58.7878), 1e-4), (110.0, Pt2::new(49.0909, 34.4977), 2e-4)] {
            let cfg = solve_scal(&p, s).unwrap();
            assert_relative_eq!(cfg.b, expected, epsilon = tol);
            let oracle = grid_search_b(s);
            assert_relative_eq!(cfg.b, oracle, epsilon = 1e-6);
        }
    }

    #[test]
    fn branch_pos_has_positive_cross() {
        let p = table_one_beta0();
        let cfg = solve_scal(&p, 80.0).unwrap();
        assert!(cross(&(cfg.c - cfg.a), &(cfg.b - cfg.a)) > 0.0);
        let q = LinkageParams { branch_b: Branch::Neg, ..p };
        let cfg = solve_scal(&q, 80.0).unwrap();
        assert!(cross(&(cfg.c - cfg.a), &(cfg.b - cfg.a)) < 0.0);
    }

    #[test]
    fn defining_lengths_and_bend_hold() {
        for proto in [Prototype::ScalR, Prototype::ScalL] {
            let p = LinkageParams::preset(proto);
            for k in 0..=60 {
                let s = 50.0 + k as f64;
                let cfg = solve_scal(&p, s).unwrap();
                assert!(((cfg.b - cfg.a).norm() - 60.0).abs() < 1e-9);
                assert!(((cfg.b - cfg.c).norm() - 70.0).abs() < 1e-9);
                assert!(((cfg.d - cfg.b).norm() - 40.0).abs() < 1e-9);
                assert!(((cfg.c - cfg.a).norm() - s).abs() < 1e-9);
                let ang = angle_between(&(cfg.c - cfg.b), &(cfg.d - cfg.b));
                assert!((ang - p.gamma).abs() < 1e-12, "{ang}");
            }
        }
    }

    #[test]
    fn preset_beta_levels_ab_at_near_end_of_slot() {
        // beta = acos(1/5) puts B on the +x axis at s_min
        let cfg = solve_scal(&LinkageParams::preset(Prototype::ScalR), 50.0).unwrap();
        assert!(cfg.b.y.abs() < 0.01, "{:?}", cfg.b);
        assert_relative_eq!(cfg.b.x, 60.0, epsilon = 1e-3);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let p = LinkageParams::preset(Prototype::ScalR);
        assert!(matches!(solve_scal(&p, 49.999), Err(LinkageError::OutOfRange { .. })));
        assert!(matches!(solve_scal(&p, 110.001), Err(LinkageError::OutOfRange { .. })));
        assert!(solve_scal(&p, 50.0).is_ok());
        assert!(solve_scal(&p, 110.0).is_ok());
    }

    #[test]
    fn tangent_circles_are_degenerate() {
        let p = LinkageParams { s_max: 130.0, ..LinkageParams::preset(Prototype::ScalR) };
        assert!(p.validate().is_ok());
        match solve_scal(&p, 130.0) {
            Err(LinkageError::DegenerateGeometry { discriminant, .. }) => assert!(discriminant.abs() < 1e-6),
            other => panic!("expected DegenerateGeometry, got {other:?}"),
        }
    }

    #[test]
    fn coincident_pivots_fail_loop_closure_check() {
        let p = LinkageParams { len_cb: 60.0, s_min: 0.0, ..LinkageParams::preset(Prototype::ScalR) };
        assert!(p.check_basic().is_ok());
        assert!(matches!(p.check_loop_closure(), Err(LinkageError::InvalidParams(_))));
    }

    #[test]
    fn basic_invariants_reject_bad_values() {
        let base = LinkageParams::preset(Prototype::ScalL);
        assert!(LinkageParams { len_bd: 0.0, ..base.clone() }.check_basic().is_err());
        assert!(LinkageParams { gamma: PI, ..base.clone() }.check_basic().is_err());
        assert!(LinkageParams { s_min: 120.0, ..base.clone() }.check_basic().is_err());
        assert!(LinkageParams { len_bg: 25.0, ..base.clone() }.check_basic().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn identity_chain_keeps_dh_parallel_to_ae() {
        let p = LinkageParams { alpha: 0.0, theta_t: 0.0, tip_offset: 0.0, ..LinkageParams::preset(Prototype::ScalL) };
        let cfg = solve_finger(&p, 70.0).unwrap();
        assert!(bearing(&(cfg.h - cfg.d)).abs() < 1e-12);
        assert!(bearing(&(cfg.e - cfg.a)).abs() < 1e-12);
    }

    #[test]
    fn frame_is_two_parallelograms_and_isosceles_connector() {
        let p = LinkageParams::preset(Prototype::ScalR);
        let cfg = solve_finger(&p, 77.0).unwrap();
        assert!(((cfg.f - cfg.e) - (cfg.b - cfg.a)).norm() < 1e-12);
        assert!(((cfg.h - cfg.g) - (cfg.d - cfg.b)).norm() < 1e-12);
        assert_relative_eq!((cfg.f - cfg.b).norm(), (cfg.g - cfg.b).norm(), epsilon = 1e-12);
        assert_relative_eq!(angle_between(&(cfg.f - cfg.b), &(cfg.g - cfg.b)), p.theta_t, epsilon = 1e-12);
    }

    #[test]
    fn preset_tip_hangs_vertically() {
        for proto in [Prototype::ScalR, Prototype::ScalL] {
            let p = LinkageParams::preset(proto);
            let (_, b) = tip_pose(&p, p.s_min).unwrap();
            assert_relative_eq!(b, -PI / 2.0, epsilon = 1e-12);
        }
        // SCAL-R: DH is vertical and DI points the opposite way
        let p = LinkageParams::preset(Prototype::ScalR);
        assert_relative_eq!(p.connector_bearing(), PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tip_pose_is_deterministic() {
        let p = LinkageParams::preset(Prototype::ScalL);
        let a = tip_pose(&p, 63.25).unwrap();
        let b = tip_pose(&p, 63.25).unwrap();
        assert_eq!(a.0.x.to_bits(), b.0.x.to_bits());
        assert_eq!(a.0.y.to_bits(), b.0.y.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
}
