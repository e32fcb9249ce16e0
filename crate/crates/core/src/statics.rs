//! Quasi-static fingertip force models: rigidized parallel pinch and
//! two-point enveloping via virtual work.

use nalgebra::{Matrix2, RowVector2, Vector2};
use rayon::prelude::*;
use thiserror::Error;

/// Denominators at or below this (mm) are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaticsError {
    #[error("singular force mapping: {what} = {value:.3e} mm")]
    Singular { what: &'static str, value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchGeometry {
    /// N·mm
    pub t_in: f64,
    /// mm
    pub h1: f64,
    /// mm
    pub l1: f64,
    /// rad, from horizontal
    pub theta1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeGeometry {
    /// N·mm
    pub t_in: f64,
    /// N·mm/rad
    pub k1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub l2: f64,
    pub h2: f64,
    pub h3: f64,
}

/// `F1 = T_in / (h1 + l1 sin θ1)`.
pub fn pinch_force(g: &PinchGeometry) -> Result<f64, StaticsError> {
    let den = g.h1 + g.l1 * g.theta1.sin();
    if !(den > SINGULAR_TOL) {
        return Err(StaticsError::Singular { what: "h1 + l1 sin(theta1)", value: den });
    }
    Ok(g.t_in / den)
}

/// Maps `(δθ2, δθ3)` to the contact-normal displacements `(δs1, δs2)`.
pub fn envelope_jacobian(g: &EnvelopeGeometry) -> Matrix2<f64> {
    Matrix2::new(g.h2, 0.0, g.l2 * (g.theta3 - g.theta2).cos(), g.h3)
}

fn check_levers(g: &EnvelopeGeometry) -> Result<(), StaticsError> {
    if !(g.h2 > SINGULAR_TOL) {
        return Err(StaticsError::Singular { what: "h2", value: g.h2 });
    }
    if !(g.h3 > SINGULAR_TOL) {
        return Err(StaticsError::Singular { what: "h3", value: g.h3 });
    }
    Ok(())
}

/// Closed-form `(F2, F3)`. `F3` keeps its sign: positive pushes along the
/// contact normal that increases `s2`.
pub fn envelope_forces(g: &EnvelopeGeometry) -> Result<(f64, f64), StaticsError> {
    check_levers(g)?;
    let f3 = -g.k1 * g.theta3 / g.h3;
    let f2 = g.t_in / g.h2 + g.k1 * g.theta3 * g.l2 * (g.theta3 - g.theta2).cos() / (g.h2 * g.h3);
    Ok((f2, f3))
}

/// `[F2 F3] = [T_in, -k1 θ3] J⁻¹`, solved numerically.
pub fn envelope_forces_numeric(g: &EnvelopeGeometry) -> Result<(f64, f64), StaticsError> {
    check_levers(g)?;
    let j = envelope_jacobian(g);
    let inv = j.try_inverse().ok_or(StaticsError::Singular { what: "det J", value: j.determinant() })?;
    let f = RowVector2::new(g.t_in, -g.k1 * g.theta3) * inv;
    Ok((f[0], f[1]))
}

fn u(a: f64) -> Vector2<f64> {
    Vector2::new(a.cos(), a.sin())
}

fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Contact points on the proximal and intermediate phalanges for joint
/// angles `(t2, t3)`, with the proximal joint at the origin.
pub fn envelope_contacts(g: &EnvelopeGeometry, t2: f64, t3: f64) -> (Vector2<f64>, Vector2<f64>) {
    (u(t2) * g.h2, u(t2) * g.l2 + u(t3) * g.h3)
}

/// Unit contact normals at the nominal pose.
pub fn envelope_normals(g: &EnvelopeGeometry) -> (Vector2<f64>, Vector2<f64>) {
    (perp(u(g.theta2)), perp(u(g.theta3)))
}

/// Central-difference Jacobian of the contact displacements projected on
/// the contact normals.
pub fn envelope_jacobian_fd(g: &EnvelopeGeometry, h: f64) -> Matrix2<f64> {
    let (n1, n2) = envelope_normals(g);
    let mut j = Matrix2::zeros();
    for col in 0..2 {
        let (d2, d3) = if col == 0 { (h, 0.0) } else { (0.0, h) };
        let (p1, p2) = envelope_contacts(g, g.theta2 + d2, g.theta3 + d3);
        let (m1, m2) = envelope_contacts(g, g.theta2 - d2, g.theta3 - d3);
        j[(0, col)] = (p1 - m1).dot(&n1) / (2.0 * h);
        j[(1, col)] = (p2 - m2).dot(&n2) / (2.0 * h);
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceModel {
    Pinch,
    Envelope,
}

/// Inclusive uniform axis: `n` samples from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, StaticsError> {
        if n == 0 {
            return Err(StaticsError::InvalidGrid("axis needs at least one sample".into()));
        }
        if !(lo.is_finite() && hi.is_finite()) || (n > 1 && !(hi > lo)) {
            return Err(StaticsError::InvalidGrid(format!("axis bounds [{lo}, {hi}] invalid for {n} samples")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else if k == self.n - 1 {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.n - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.value(k)).collect()
    }
}

/// Grid over `(x, y)`; angles in degrees, lengths in mm.
///
/// Pinch: `x = θ1`, `y = h1`. Envelope: `x = θ2`, `y = θ3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
}

impl GridSpec {
    pub fn default_for(model: ForceModel) -> Self {
        match model {
            ForceModel::Pinch => Self { x: Axis { lo: 45.0, hi: 120.0, n: 76 }, y: Axis { lo: 0.0, hi: 40.0, n: 41 } },
            ForceModel::Envelope => Self { x: Axis { lo: -30.0, hi: 60.0, n: 91 }, y: Axis { lo: -30.0, hi: 60.0, n: 91 } },
        }
    }

    /// Parses `x0:x1:nx,y0:y1:ny`.
    pub fn parse(text: &str) -> Result<Self, StaticsError> {
        let axes: Vec<&str> = text.split(',').collect();
        if axes.len() != 2 {
            return Err(StaticsError::InvalidGrid(format!("expected `x0:x1:nx,y0:y1:ny`, got `{text}`")));
        }
        let axis = |s: &str| -> Result<Axis, StaticsError> {
            let parts: Vec<&str> = s.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(StaticsError::InvalidGrid(format!("axis `{s}` is not `lo:hi:n`")));
            }
            let bad = |p: &str| StaticsError::InvalidGrid(format!("cannot parse `{p}` in axis `{s}`"));
            let lo: f64 = parts[0].parse().map_err(|_| bad(parts[0]))?;
            let hi: f64 = parts[1].parse().map_err(|_| bad(parts[1]))?;
            let n: usize = parts[2].parse().map_err(|_| bad(parts[2]))?;
            Axis::new(lo, hi, n)
        };
        Ok(Self { x: axis(axes[0])?, y: axis(axes[1])? })
    }
}

/// Fixed model parameters for a surface evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    pub t_in: f64,
    pub l1: f64,
    pub k1: f64,
    pub l2: f64,
    pub h2: f64,
    pub h3: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self { t_in: 1000.0, l1: 85.27, k1: 500.0, l2: 70.0, h2: 40.0, h3: 20.0 }
    }
}

/// One evaluated cell. `value` is `None` for singular cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceCell {
    pub x: f64,
    pub y: f64,
    pub value: Option<f64>,
    /// `F3` for the envelope model.
    pub aux: Option<f64>,
}

/// Row-major (`x` outer, `y` inner) evaluation of the chosen model.
pub fn force_surface(model: ForceModel, grid: &GridSpec, p: &SurfaceParams) -> Vec<ForceCell> {
    let (xs, ys) = (grid.x.values(), grid.y.values());
    let ny = ys.len();
    (0..xs.len() * ny)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (xs[k / ny], ys[k % ny]);
            match model {
                ForceModel::Pinch => {
                    let g = PinchGeometry { t_in: p.t_in, h1: y, l1: p.l1, theta1: x.to_radians() };
                    ForceCell { x, y, value: pinch_force(&g).ok(), aux: None }
                }
                ForceModel::Envelope => {
                    let g = EnvelopeGeometry {
                        t_in: p.t_in,
                        k1: p.k1,
                        theta2: x.to_radians(),
                        theta3: y.to_radians(),
                        l2: p.l2,
                        h2: p.h2,
                        h3: p.h3,
                    };
                    match envelope_forces(&g) {
                        Ok((f2, f3)) => ForceCell { x, y, value: Some(f2), aux: Some(f3) },
                        Err(_) => ForceCell { x, y, value: None, aux: None },
                    }
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fd_jacobian(g: &EnvelopeGeometry) -> Matrix2<f64> {
        envelope_jacobian_fd(g, 1e-6)
    }

    fn env(theta2: f64, theta3: f64) -> EnvelopeGeometry {
        EnvelopeGeometry { t_in: 1000.0, k1: 500.0, theta2, theta3, l2: 70.0, h2: 40.0, h3: 20.0 }
    }

    #[test]
    fn pinch_examples() {
        let g = PinchGeometry { t_in: 1000.0, h1: 0.0, l1: 85.27, theta1: 90f64.to_radians() };
        assert_relative_eq!(pinch_force(&g).unwrap(), 1000.0 / 85.27, epsilon = 1e-12);
        assert!((pinch_force(&g).unwrap() - 11.7274).abs() < 1e-4);
        assert_eq!(pinch_force(&PinchGeometry { t_in: 0.0, ..g }).unwrap(), 0.0);
        let g40 = PinchGeometry { h1: 40.0, ..g };
        assert!((pinch_force(&g40).unwrap() - 7.9827).abs() < 1e-4);
    }

    #[test]
    fn pinch_singular() {
        let g = PinchGeometry { t_in: 1.0, h1: 0.0, l1: 85.27, theta1: 0.0 };
        assert!(matches!(pinch_force(&g), Err(StaticsError::Singular { .. })));
    }

    #[test]
    fn jacobian_special_cases() {
        assert_eq!(envelope_jacobian(&env(0.4, 0.4))[(1, 0)], 70.0);
        assert!(envelope_jacobian(&env(0.0, std::f64::consts::FRAC_PI_2))[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn envelope_examples() {
        let (f2, f3) = envelope_forces(&env(0.3, 0.0)).unwrap();
        assert_eq!(f2, 25.0);
        assert_eq!(f3, 0.0);
        let (_, f3) = envelope_forces(&env(0.0, 1.0)).unwrap();
        assert_eq!(f3, -25.0);
        let (f2, _) = envelope_forces(&env(1.0, 1.0)).unwrap();
        assert_relative_eq!(f2, 68.75, epsilon = 1e-12);
        let (n2, _) = envelope_forces_numeric(&env(1.0, 1.0)).unwrap();
        assert_relative_eq!(n2, 68.75, epsilon = 1e-12);
    }

    #[test]
    fn zero_lever_is_singular() {
        let g = EnvelopeGeometry { h3: 0.0, ..env(0.0, 0.0) };
        assert!(matches!(envelope_forces(&g), Err(StaticsError::Singular { what: "h3", .. })));
    }

    #[test]
    fn grid_parsing() {
        let g = GridSpec::parse("45:120:4,0:40:3").unwrap();
        assert_eq!(g.x.values(), vec![45.0, 70.0, 95.0, 120.0]);
        assert_eq!(g.y.values(), vec![0.0, 20.0, 40.0]);
        assert!(GridSpec::parse("1:2:3").is_err());
        assert!(GridSpec::parse("1:2:0,0:1:2").is_err());
        assert!(GridSpec::parse("2:1:3,0:1:2").is_err());
        assert!(GridSpec::parse("a:1:3,0:1:2").is_err());
        let one = GridSpec::parse("90:90:1,0:0:1").unwrap();
        assert_eq!(force_surface(ForceModel::Pinch, &one, &SurfaceParams::default()).len(), 1);
    }

    #[test]
    fn singular_cells_are_flagged() {
        let grid = GridSpec::parse("-10:10:3,0:0:1").unwrap();
        let cells = force_surface(ForceModel::Pinch, &grid, &SurfaceParams::default());
        assert!(cells[0].value.is_none());
        assert!(cells[1].value.is_none());
        assert!(cells[2].value.is_some());
    }

    #[test]
    fn pinch_surface_shape() {
        let grid = GridSpec::default_for(ForceModel::Pinch);
        let cells = force_surface(ForceModel::Pinch, &grid, &SurfaceParams::default());
        let ny = grid.y.n;
        for row in cells.chunks(ny) {
            for w in row.windows(2) {
                assert!(w[1].value.unwrap() < w[0].value.unwrap());
            }
        }
        for j in 0..ny {
            let col: Vec<_> = (0..grid.x.n).map(|i| cells[i * ny + j]).collect();
            let best = col.iter().min_by(|a, b| a.value.partial_cmp(&b.value).unwrap()).unwrap();
            assert_eq!(best.x, 90.0);
        }
    }

    proptest! {
        #[test]
        fn closed_form_matches_numeric(
            t_in in -2000.0..2000.0f64, k1 in 0.0..2000.0f64,
            t2 in -1.5..1.5f64, t3 in -1.5..1.5f64,
            l2 in 10.0..150.0f64, h2 in 1.0..80.0f64, h3 in 1.0..80.0f64,
        ) {
            let g = EnvelopeGeometry { t_in, k1, theta2: t2, theta3: t3, l2, h2, h3 };
            let (a2, a3) = envelope_forces(&g).unwrap();
            let (b2, b3) = envelope_forces_numeric(&g).unwrap();
            prop_assert!((a2 - b2).abs() < 1e-9 * (1.0 + a2.abs()));
            prop_assert!((a3 - b3).abs() < 1e-9 * (1.0 + a3.abs()));
        }

        #[test]
        fn power_balance(
            t2 in -1.5..1.5f64, t3 in -1.5..1.5f64,
            d2 in -1.0..1.0f64, d3 in -1.0..1.0f64,
            h2 in 5.0..80.0f64, h3 in 5.0..80.0f64,
        ) {
            let g = EnvelopeGeometry { h2, h3, ..env(t2, t3) };
            let (f2, f3) = envelope_forces(&g).unwrap();
            let ds = envelope_jacobian(&g) * Vector2::new(d2, d3);
            let lhs = g.t_in * d2 - g.k1 * g.theta3 * d3;
            let rhs = f2 * ds[0] + f3 * ds[1];
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn jacobian_matches_finite_differences(t2 in -1.5..1.5f64, t3 in -1.5..1.5f64, l2 in 10.0..150.0f64) {
            let g = EnvelopeGeometry { l2, ..env(t2, t3) };
            let fd = fd_jacobian(&g);
            let j = envelope_jacobian(&g);
            for k in 0..4 {
                prop_assert!((fd[k] - j[k]).abs() < 1e-6, "{} vs {}", fd[k], j[k]);
            }
        }

        #[test]
        fn f3_is_affine_in_theta3(t3 in -1.5..1.5f64, h3 in 1.0..80.0f64) {
            let g = EnvelopeGeometry { h3, ..env(0.2, t3) };
            let (_, f3) = envelope_forces(&g).unwrap();
            prop_assert!((f3 - (-g.k1 / h3) * t3).abs() <= 1e-12 * (1.0 + f3.abs()));
        }
    }
}
