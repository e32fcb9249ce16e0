//! Supports and objects: signed distances, normals and placement.

use std::f64::consts::FRAC_PI_4;

use crate::geometry::{golden_min, rotate, unit, Pt2, Vec2};

use super::ContactError;

/// Support half-plane through the world origin. Free space is on the side
/// of [`Support::normal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Flat,
    /// Incline angle in radians, rising toward +x for positive values.
    Ramp { angle: f64 },
}

impl Support {
    pub fn angle(&self) -> f64 {
        match *self {
            Support::Flat => 0.0,
            Support::Ramp { angle } => angle,
        }
    }

    pub fn tangent(&self) -> Vec2 {
        unit(self.angle())
    }

    pub fn normal(&self) -> Vec2 {
        unit(self.angle() + std::f64::consts::FRAC_PI_2)
    }

    pub fn signed_distance(&self, p: &Pt2) -> f64 {
        self.normal().dot(&p.coords)
    }

    /// Point at arc position `t` along the support line.
    pub fn point_at(&self, t: f64) -> Pt2 {
        Pt2::from(self.tangent() * t)
    }

    pub fn validate(&self) -> Result<(), ContactError> {
        let a = self.angle();
        if !(a.is_finite() && a.abs() < FRAC_PI_4) {
            return Err(ContactError::InvalidScenario(format!(
                "ramp angle must lie in (-45, 45) degrees (got {:.6})",
                a.to_degrees()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeKind {
    Rectangle,
    Disk,
}

/// Object resting on the support. `position` is the arc coordinate of the
/// object's center along the support line. For a disk, `width` and `height`
/// are both the diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectShape {
    pub kind: ShapeKind,
    pub width: f64,
    pub height: f64,
    pub position: f64,
}

impl ObjectShape {
    pub fn rectangle(width: f64, height: f64, position: f64) -> Self {
        Self { kind: ShapeKind::Rectangle, width, height, position }
    }

    pub fn disk(diameter: f64, position: f64) -> Self {
        Self { kind: ShapeKind::Disk, width: diameter, height: diameter, position }
    }

    pub fn validate(&self) -> Result<(), ContactError> {
        if !(self.width.is_finite() && self.width > 0.0 && self.height.is_finite() && self.height > 0.0) {
            return Err(ContactError::InvalidScenario(format!(
                "object dimensions must be positive (width {}, height {})",
                self.width, self.height
            )));
        }
        if self.kind == ShapeKind::Disk && self.width != self.height {
            return Err(ContactError::InvalidScenario("disk width and height must both equal the diameter".into()));
        }
        if !self.position.is_finite() {
            return Err(ContactError::InvalidScenario("object position is not finite".into()));
        }
        Ok(())
    }

    /// World placement of the object resting on `support`.
    pub fn place(&self, support: &Support) -> PlacedObject {
        let center = support.point_at(self.position) + support.normal() * (self.height / 2.0);
        PlacedObject { kind: self.kind, half: Vec2::new(self.width / 2.0, self.height / 2.0), center, rotation: support.angle() }
    }
}

/// Object at a world pose. Rectangles are axis-aligned in their own frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedObject {
    pub kind: ShapeKind,
    pub half: Vec2,
    pub center: Pt2,
    pub rotation: f64,
}

impl PlacedObject {
    pub fn translated(&self, d: &Vec2) -> Self {
        Self { center: self.center + d, ..*self }
    }

    fn to_local(&self, p: &Pt2) -> Vec2 {
        rotate(&(p - self.center), -self.rotation)
    }

    fn to_world_vec(&self, v: &Vec2) -> Vec2 {
        rotate(v, self.rotation)
    }

    /// Signed distance (negative inside).
    pub fn signed_distance(&self, p: &Pt2) -> f64 {
        match self.kind {
            ShapeKind::Disk => (p - self.center).norm() - self.half.x,
            ShapeKind::Rectangle => {
                let l = self.to_local(p);
                let q = Vec2::new(l.x.abs() - self.half.x, l.y.abs() - self.half.y);
                let outside = Vec2::new(q.x.max(0.0), q.y.max(0.0)).norm();
                outside + q.x.max(q.y).min(0.0)
            }
        }
    }

    /// Outward unit normal of the boundary feature nearest to `p`.
    pub fn normal_at(&self, p: &Pt2) -> Vec2 {
        match self.kind {
            ShapeKind::Disk => {
                let d = p - self.center;
                if d.norm() == 0.0 {
                    Vec2::new(0.0, 1.0)
                } else {
                    d.normalize()
                }
            }
            ShapeKind::Rectangle => {
                let l = self.to_local(p);
                let q = Vec2::new(l.x.abs() - self.half.x, l.y.abs() - self.half.y);
                let local = if q.x > 0.0 && q.y > 0.0 {
                    Vec2::new(q.x * l.x.signum(), q.y * l.y.signum()).normalize()
                } else if q.x >= q.y {
                    Vec2::new(l.x.signum(), 0.0)
                } else {
                    Vec2::new(0.0, l.y.signum())
                };
                self.to_world_vec(&local)
            }
        }
    }

    /// Minimum signed distance over a segment. The distance field of a
    /// convex shape is convex along a line, so a golden search is exact up
    /// to its tolerance.
    pub fn segment_distance(&self, a: &Pt2, b: &Pt2) -> f64 {
        match self.kind {
            ShapeKind::Disk => crate::geometry::distance_to_segment(&self.center, a, b) - self.half.x,
            ShapeKind::Rectangle => {
                let ab = b - a;
                golden_min(|t| self.signed_distance(&(a + ab * t)), 0.0, 1.0, 90).1
            }
        }
    }

    /// Boundary points for drawing and support clearance.
    pub fn outline(&self, n: usize) -> Vec<Pt2> {
        match self.kind {
            ShapeKind::Disk => (0..n)
                .map(|k| self.center + unit(std::f64::consts::TAU * k as f64 / n as f64) * self.half.x)
                .collect(),
            ShapeKind::Rectangle => [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .iter()
                .map(|&(sx, sy)| self.center + self.to_world_vec(&Vec2::new(sx * self.half.x, sy * self.half.y)))
                .collect(),
        }
    }

    /// Height of the lowest point above the support.
    pub fn clearance(&self, support: &Support) -> f64 {
        match self.kind {
            ShapeKind::Disk => support.signed_distance(&self.center) - self.half.x,
            ShapeKind::Rectangle => self
                .outline(4)
                .iter()
                .map(|p| support.signed_distance(p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Local coordinates of `p` in the object's support-aligned frame.
    pub fn local(&self, p: &Pt2) -> Vec2 {
        self.to_local(p)
    }

    /// Local height (from the center) of the widest horizontal section.
    pub fn widest_section(&self) -> f64 {
        match self.kind {
            ShapeKind::Disk => 0.0,
            ShapeKind::Rectangle => self.half.y,
        }
    }
}

/// Support plus the objects resting on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub support: Support,
    pub objects: Vec<ObjectShape>,
}

impl Environment {
    pub fn flat(objects: Vec<ObjectShape>) -> Self {
        Self { support: Support::Flat, objects }
    }

    pub fn validate(&self) -> Result<(), ContactError> {
        self.support.validate()?;
        for o in &self.objects {
            o.validate()?;
        }
        Ok(())
    }

    pub fn placed(&self) -> Vec<PlacedObject> {
        self.objects.iter().map(|o| o.place(&self.support)).collect()
    }
}
