//! Small planar geometry toolkit shared by the kinematics and contact code.

use nalgebra::{Point2, Rotation2, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Pt2 = Point2<f64>;

/// Unit vector with the given bearing (radians, CCW from +x).
#[inline]
pub fn unit(bearing: f64) -> Vec2 {
    Vec2::new(bearing.cos(), bearing.sin())
}

/// Bearing of `v` in (-pi, pi].
#[inline]
pub fn bearing(v: &Vec2) -> f64 {
    v.y.atan2(v.x)
}

/// Rotates `v` CCW by `angle`.
#[inline]
pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    Rotation2::new(angle) * v
}

/// Rotates `p` about `pivot` CCW by `angle`.
#[inline]
pub fn rotate_about(p: &Pt2, pivot: &Pt2, angle: f64) -> Pt2 {
    pivot + rotate(&(p - pivot), angle)
}

/// 2-D cross product (z component).
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Left-hand normal (`v` rotated by +90 degrees).
#[inline]
pub fn perp(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Unsigned interior angle between two vectors in [0, pi].
pub fn angle_between(a: &Vec2, b: &Vec2) -> f64 {
    cross(a, b).atan2(a.dot(b)).abs()
}

/// Closest point on segment `[a, b]` to `p`.
pub fn closest_on_segment(p: &Pt2, a: &Pt2, b: &Pt2) -> Pt2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Distance from `p` to segment `[a, b]`.
pub fn distance_to_segment(p: &Pt2, a: &Pt2, b: &Pt2) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

/// Proper intersection test for two closed segments (touching counts).
pub fn segments_intersect(p1: &Pt2, p2: &Pt2, q1: &Pt2, q2: &Pt2) -> bool {
    let d1 = cross(&(q2 - q1), &(p1 - q1));
    let d2 = cross(&(q2 - q1), &(p2 - q1));
    let d3 = cross(&(p2 - p1), &(q1 - p1));
    let d4 = cross(&(p2 - p1), &(q2 - p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: &Pt2, b: &Pt2, p: &Pt2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    // endpoints can beat the interior bracket for monotone functions
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Rigid (optionally mirrored) placement of a local planar frame in the world.
///
/// A local point `p` maps to `origin + R(rotation) * M * p`, where `M` flips the
/// x axis when `mirrored` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub origin: Pt2,
    pub rotation: f64,
    pub mirrored: bool,
}

impl Placement {
    pub fn identity() -> Self {
        Self { origin: Pt2::origin(), rotation: 0.0, mirrored: false }
    }

    pub fn new(origin: Pt2, rotation: f64, mirrored: bool) -> Self {
        Self { origin, rotation, mirrored }
    }

    pub fn vector(&self, v: &Vec2) -> Vec2 {
        let m = if self.mirrored { Vec2::new(-v.x, v.y) } else { *v };
        rotate(&m, self.rotation)
    }

    pub fn point(&self, p: &Pt2) -> Pt2 {
        self.origin + self.vector(&p.coords)
    }

    pub fn bearing(&self, b: f64) -> f64 {
        let m = if self.mirrored { std::f64::consts::PI - b } else { b };
        wrap_angle(m + self.rotation)
    }

    /// Composition `self ∘ inner`: first apply `inner`, then `self`.
    pub fn compose(&self, inner: &Placement) -> Placement {
        let origin = self.point(&inner.origin);
        let mirrored = self.mirrored ^ inner.mirrored;
        let rotation = if self.mirrored { self.rotation - inner.rotation } else { self.rotation + inner.rotation };
        Placement { origin, rotation: wrap_angle(rotation), mirrored }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn wrap_is_half_open() {
        assert_relative_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn placement_compose_matches_sequential_application() {
        let outer = Placement::new(Pt2::new(3.0, -1.0), 0.4, true);
        let inner = Placement::new(Pt2::new(-2.0, 5.0), -1.1, false);
        let p = Pt2::new(1.5, 2.5);
        let seq = outer.point(&inner.point(&p));
        let comp = outer.compose(&inner).point(&p);
        assert_relative_eq!(seq, comp, epsilon = 1e-12);
        let b = 0.3;
        let db = wrap_angle(outer.bearing(inner.bearing(b)) - outer.compose(&inner).bearing(b));
        assert!(db.abs() < 1e-12);
    }

    #[test]
    fn mirrored_bearing_reflects_about_vertical() {
        let m = Placement::new(Pt2::origin(), 0.0, true);
        assert_relative_eq!(m.bearing(0.0), PI);
        assert_relative_eq!(m.bearing(-FRAC_PI_2), -FRAC_PI_2);
        let v = m.vector(&unit(0.3));
        assert_relative_eq!(bearing(&v), m.bearing(0.3), epsilon = 1e-15);
    }

    #[test]
    fn crossing_segments() {
        let a = Pt2::new(0.0, 0.0);
        let b = Pt2::new(2.0, 2.0);
        assert!(segments_intersect(&a, &b, &Pt2::new(0.0, 2.0), &Pt2::new(2.0, 0.0)));
        assert!(!segments_intersect(&a, &b, &Pt2::new(3.0, 0.0), &Pt2::new(4.0, 1.0)));
        // shared endpoint counts
        assert!(segments_intersect(&a, &b, &b, &Pt2::new(5.0, 0.0)));
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden_min(|t| (t - 0.3).powi(2) + 1.0, 0.0, 1.0, 80);
        assert_relative_eq!(x, 0.3, epsilon = 1e-7);
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }
}
