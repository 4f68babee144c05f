//! Unit-vector algebra, tangent frames, reflections, Rodrigues rotations and
//! solid-angle-weighted hemisphere grids.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Below this length of `(-n_y, n_x, 0)` the tangent construction switches
/// to the pole fallback.
pub const POLE_EPSILON: f64 = 1e-6;

/// Below this length of `from + to` the Rodrigues alignment treats the pair
/// as antiparallel.
const ANTIPARALLEL_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn max_abs_diff(self, o: Vec3) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// A direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    pub const X: UnitVec3 = UnitVec3(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVec3 = UnitVec3(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVec3 = UnitVec3(Vec3::new(0.0, 0.0, 1.0));

    /// Normalizes `v`. Fails on zero or non-finite input.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cannot normalize vector {:?}",
                v.to_array()
            )));
        }
        Ok(Self::renormalize(v * (1.0 / n)))
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vec3::new(x, y, z))
    }

    /// Direction at polar angle `theta` from +z and azimuth `phi` from +x.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::renormalize(Vec3::new(st * cp, st * sp, ct))
    }

    // One extra Newton step keeps the norm within a few ulps of 1.
    fn renormalize(v: Vec3) -> Self {
        let n2 = v.dot(v);
        UnitVec3(v * (1.5 - 0.5 * n2))
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn z(self) -> f64 {
        self.0.z
    }

    pub fn dot(self, o: UnitVec3) -> f64 {
        self.0.dot(o.0)
    }

    pub fn cross(self, o: UnitVec3) -> Vec3 {
        self.0.cross(o.0)
    }
}

impl Neg for UnitVec3 {
    type Output = UnitVec3;
    fn neg(self) -> UnitVec3 {
        UnitVec3(-self.0)
    }
}

/// Right-handed orthonormal triple: tangent, bitangent, normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: UnitVec3,
    pub b: UnitVec3,
    pub n: UnitVec3,
}

impl Frame {
    pub const CANONICAL: Frame = Frame {
        t: UnitVec3::X,
        b: UnitVec3::Y,
        n: UnitVec3::Z,
    };

    /// Largest violation of orthonormality or right-handedness.
    pub fn orthonormality_error(&self) -> f64 {
        let dots = self
            .t
            .dot(self.b)
            .abs()
            .max(self.t.dot(self.n).abs())
            .max(self.b.dot(self.n).abs());
        let handed = self.t.cross(self.b).max_abs_diff(self.n.vec());
        dots.max(handed)
    }

    pub fn to_world(&self, local: Vec3) -> Vec3 {
        self.t.vec() * local.x + self.b.vec() * local.y + self.n.vec() * local.z
    }

    pub fn to_local(&self, world: Vec3) -> Vec3 {
        Vec3::new(
            world.dot(self.t.vec()),
            world.dot(self.b.vec()),
            world.dot(self.n.vec()),
        )
    }
}

/// 3x3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    pub m: [[f64; 3]; 3],
}

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Rotation3 {
            m: [
                [c0.x, c1.x, c2.x],
                [c0.y, c1.y, c2.y],
                [c0.z, c1.z, c2.z],
            ],
        }
    }

    /// Rotation by `angle` about the unit `axis` (right-hand rule).
    pub fn from_axis_angle(axis: UnitVec3, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let (x, y, z) = (axis.x(), axis.y(), axis.z());
        let t = 1.0 - c;
        Rotation3 {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        }
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Rotates a direction; the result is renormalized to the unit sphere.
    pub fn rotate(&self, v: UnitVec3) -> UnitVec3 {
        UnitVec3::renormalize(self.apply(v.vec()))
    }

    pub fn compose(&self, rhs: &Rotation3) -> Rotation3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..3).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        Rotation3 { m }
    }

    pub fn transpose(&self) -> Rotation3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.m[j][i];
            }
        }
        Rotation3 { m }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn max_abs_diff(&self, o: &Rotation3) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }

    /// Max deviation of RᵀR from identity, together with |det R − 1|.
    pub fn orthogonality_error(&self) -> f64 {
        let rtr = self.transpose().compose(self);
        rtr.max_abs_diff(&Rotation3::IDENTITY)
            .max((self.determinant() - 1.0).abs())
    }

    // Householder reflection I - 2uuᵀ/(uᵀu); det = -1.
    fn householder(u: Vec3) -> Rotation3 {
        let s = 2.0 / u.dot(u);
        let a = u.to_array();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                *out = id - s * a[i] * a[j];
            }
        }
        Rotation3 { m }
    }
}

/// Orthonormal frame around `n_pred` whose tangent starts at
/// `t0 = (-n_y, n_x, 0)/|.|` and is turned by `phi` toward `b0 = n × t0`.
///
/// When `|(-n_y, n_x, 0)| < POLE_EPSILON` the tangent seed is the x-axis
/// projected onto the normal plane. `phi` is used as given, so `phi + π`
/// flips both tangent and bitangent.
pub fn build_tangent_frame(n_pred: UnitVec3, phi: f64) -> Frame {
    let n = n_pred.vec();
    let seed = Vec3::new(-n.y, n.x, 0.0);
    let len = seed.norm();
    let t0 = if len >= POLE_EPSILON {
        seed * (1.0 / len)
    } else {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let p = x - n * n.x;
        p * (1.0 / p.norm())
    };
    let t0 = UnitVec3::renormalize(t0);
    let b0 = UnitVec3::renormalize(n.cross(t0.vec()));
    let (s, c) = phi.sin_cos();
    let t = UnitVec3::renormalize(t0.vec() * c + b0.vec() * s);
    let b = UnitVec3::renormalize(t0.vec() * (-s) + b0.vec() * c);
    Frame { t, b, n: n_pred }
}

/// Mirror direction `2(-d·n)n + d` of the incoming ray `d` about `n_pred`.
pub fn reflect(d: UnitVec3, n_pred: UnitVec3) -> UnitVec3 {
    let n = n_pred.vec();
    UnitVec3::renormalize(n * (-2.0 * d.dot(n_pred)) + d.vec())
}

/// Minimal rotation carrying `from` onto `to`.
///
/// Built as a product of two Householder reflections (through the bisector
/// and then through `to`), which is the Rodrigues rotation about
/// `from × to` by the angle between the vectors. Antiparallel inputs rotate
/// by π about the x-axis, or the y-axis when `|from_x| > 0.9`.
pub fn rodrigues_align(from: UnitVec3, to: UnitVec3) -> Rotation3 {
    let bisector = from.vec() + to.vec();
    if bisector.norm() >= ANTIPARALLEL_EPSILON {
        let h_to = Rotation3::householder(to.vec());
        let h_mid = Rotation3::householder(bisector);
        return h_to.compose(&h_mid);
    }
    let seed = if from.x().abs() > 0.9 {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let axis = seed - from.vec() * seed.dot(from.vec());
    let axis = UnitVec3::renormalize(axis * (1.0 / axis.norm()));
    let half_turn = Rotation3::from_axis_angle(axis, PI);
    // Residual from exact antiparallel: -from is already close to `to`.
    let flipped = -from;
    let residual = if flipped.vec().max_abs_diff(to.vec()) == 0.0 {
        Rotation3::IDENTITY
    } else {
        rodrigues_align(flipped, to)
    };
    residual.compose(&half_turn)
}

/// Rotation whose columns are the frame axes; maps x, y, z onto t, b, n.
pub fn frame_to_rotation(f: &Frame) -> Rotation3 {
    Rotation3::from_columns(f.t.vec(), f.b.vec(), f.n.vec())
}

/// Latitude–longitude quadrature over the hemisphere around `pole`, cells
/// stored polar-major (`i_theta * n_phi + i_phi`).
#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereGrid {
    n_theta: usize,
    n_phi: usize,
    pole: UnitVec3,
    directions: Vec<UnitVec3>,
    solid_angles: Vec<f64>,
    quadrant: bool,
}

/// Cheap identity for a grid, used to reject divergences across grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridId {
    pub n_theta: usize,
    pub n_phi: usize,
    pub quadrant: bool,
    pole_bits: [u64; 3],
}

pub fn make_hemisphere_grid(n_theta: usize, n_phi: usize, pole: UnitVec3) -> Result<HemisphereGrid> {
    if n_theta < 2 || n_phi < 4 {
        return Err(Error::InvalidInput(format!(
            "hemisphere grid needs n_theta >= 2 and n_phi >= 4, got {n_theta}x{n_phi}"
        )));
    }
    let frame = build_tangent_frame(pole, 0.0);
    let d_theta = 0.5 * PI / n_theta as f64;
    let d_phi = 2.0 * PI / n_phi as f64;
    let mut directions = Vec::with_capacity(n_theta * n_phi);
    let mut solid_angles = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * d_theta;
        let w = theta.sin() * d_theta * d_phi;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * d_phi;
            let local = UnitVec3::from_spherical(theta, phi);
            directions.push(UnitVec3::renormalize(frame.to_world(local.vec())));
            solid_angles.push(w);
        }
    }
    Ok(HemisphereGrid {
        n_theta,
        n_phi,
        pole,
        directions,
        solid_angles,
        quadrant: false,
    })
}

impl HemisphereGrid {
    /// Canonical +z grid.
    pub fn canonical(n_theta: usize, n_phi: usize) -> Result<Self> {
        make_hemisphere_grid(n_theta, n_phi, UnitVec3::Z)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[UnitVec3] {
        &self.directions
    }

    pub fn solid_angles(&self) -> &[f64] {
        &self.solid_angles
    }

    pub fn pole(&self) -> UnitVec3 {
        self.pole
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    pub fn total_solid_angle(&self) -> f64 {
        self.solid_angles.iter().sum()
    }

    pub fn id(&self) -> GridId {
        let p = self.pole.vec();
        GridId {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            quadrant: self.quadrant,
            pole_bits: [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()],
        }
    }

    /// Same grid around the opposite pole; together the pair tiles the sphere.
    pub fn opposite(&self) -> Result<Self> {
        make_hemisphere_grid(self.n_theta, self.n_phi, -self.pole)
    }

    /// Sub-grid of cells with azimuth in (0, π/2) of a full grid.
    ///
    /// For densities symmetric under x → −x and y → −y in the pole frame,
    /// distributions normalized on the quadrant are the full-grid
    /// distributions restricted and scaled by 4, so KL and JS are unchanged.
    /// Requires `n_phi` divisible by 4.
    pub fn quadrant(&self) -> Result<Self> {
        if self.quadrant || !self.n_phi.is_multiple_of(4) {
            return Err(Error::InvalidInput(format!(
                "quadrant restriction needs a full grid with n_phi divisible by 4 (n_phi = {})",
                self.n_phi
            )));
        }
        let q = self.n_phi / 4;
        let mut directions = Vec::with_capacity(self.n_theta * q);
        let mut solid_angles = Vec::with_capacity(self.n_theta * q);
        for i in 0..self.n_theta {
            for j in 0..q {
                let k = i * self.n_phi + j;
                directions.push(self.directions[k]);
                solid_angles.push(self.solid_angles[k]);
            }
        }
        Ok(HemisphereGrid {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            pole: self.pole,
            directions,
            solid_angles,
            quadrant: true,
        })
    }

    pub fn is_quadrant(&self) -> bool {
        self.quadrant
    }

    /// Σ f(v_k) ω_k.
    pub fn integrate(&self, f: impl Fn(UnitVec3) -> f64) -> f64 {
        self.directions
            .iter()
            .zip(&self.solid_angles)
            .map(|(&v, &w)| f(v) * w)
            .sum()
    }
}

/// Integral of `f` over the whole sphere using a grid and its opposite.
pub fn integrate_sphere(grid: &HemisphereGrid, f: impl Fn(UnitVec3) -> f64) -> Result<f64> {
    let other = grid.opposite()?;
    Ok(grid.integrate(&f) + other.integrate(&f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uv(x: f64, y: f64, z: f64) -> UnitVec3 {
        UnitVec3::from_xyz(x, y, z).unwrap()
    }

    #[test]
    fn pole_fallback_frame() {
        let f = build_tangent_frame(UnitVec3::Z, 0.0);
        assert!(f.t.vec().max_abs_diff(Vec3::new(1.0, 0.0, 0.0)) < 1e-15);
        assert!(f.b.vec().max_abs_diff(Vec3::new(0.0, 1.0, 0.0)) < 1e-15);
        let f = build_tangent_frame(-UnitVec3::Z, 0.3);
        assert!(f.orthonormality_error() < 1e-12);
    }

    #[test]
    fn frame_examples() {
        let f = build_tangent_frame(UnitVec3::X, 0.0);
        assert!(f.t.vec().max_abs_diff(Vec3::new(0.0, 1.0, 0.0)) < 1e-15);
        assert!(f.b.vec().max_abs_diff(Vec3::new(0.0, 0.0, 1.0)) < 1e-15);

        let f = build_tangent_frame(UnitVec3::X, PI / 2.0);
        assert!(f.t.vec().max_abs_diff(Vec3::new(0.0, 0.0, 1.0)) < 1e-15);
        assert!(f.b.vec().max_abs_diff(Vec3::new(0.0, -1.0, 0.0)) < 1e-15);
    }

    // Gram–Schmidt oracle: project an arbitrary seed, then rotate by phi
    // with an explicit axis-angle matrix about n.
    #[test]
    fn frame_matches_gram_schmidt_oracle() {
        let n = uv(0.3, -0.5, 0.8);
        let phi = 1.1;
        let seed = Vec3::new(-n.y(), n.x(), 0.0);
        let t0 = seed * (1.0 / seed.norm());
        let rot = Rotation3::from_axis_angle(n, phi);
        let expected_t = rot.apply(t0);
        let f = build_tangent_frame(n, phi);
        assert!(f.t.vec().max_abs_diff(expected_t) < 1e-14);
        assert!(f.b.vec().max_abs_diff(n.cross(UnitVec3(expected_t))) < 1e-14);
    }

    #[test]
    fn half_turn_flips_tangent_line() {
        let n = uv(0.2, 0.7, -0.4);
        let a = build_tangent_frame(n, 0.4);
        let b = build_tangent_frame(n, 0.4 + PI);
        assert!(a.t.vec().max_abs_diff(-b.t.vec()) < 1e-12);
        assert!(a.b.vec().max_abs_diff(-b.b.vec()) < 1e-12);
    }

    #[test]
    fn reflect_examples() {
        let r = reflect(-UnitVec3::Z, UnitVec3::Z);
        assert!(r.vec().max_abs_diff(Vec3::new(0.0, 0.0, 1.0)) < 1e-15);
        let r = reflect(UnitVec3::X, UnitVec3::X);
        assert!(r.vec().max_abs_diff(Vec3::new(-1.0, 0.0, 0.0)) < 1e-15);

        // Householder oracle: I - 2nnᵀ mirrors across the plane, and the
        // reflected ray is the mirror image of d.
        let h = 0.5f64.sqrt();
        let d = uv(h, 0.0, -h);
        let house = Rotation3::householder(UnitVec3::Z.vec());
        let r = reflect(d, UnitVec3::Z);
        assert!(r.vec().max_abs_diff(house.apply(d.vec())) < 1e-15);
        assert!(r.vec().max_abs_diff(Vec3::new(h, 0.0, h)) < 1e-15);
    }

    #[test]
    fn rodrigues_examples() {
        let r = rodrigues_align(UnitVec3::Z, UnitVec3::Z);
        assert!(r.max_abs_diff(&Rotation3::IDENTITY) < 1e-15);

        // Exponential-map oracle: 90° about +y carries z to x.
        let r = rodrigues_align(UnitVec3::Z, UnitVec3::X);
        let axis = uv(0.0, 1.0, 0.0);
        let oracle = Rotation3::from_axis_angle(axis, PI / 2.0);
        assert!(r.max_abs_diff(&oracle) < 1e-12);
        assert!(r.apply(UnitVec3::Z.vec()).max_abs_diff(UnitVec3::X.vec()) < 1e-12);

        let r = rodrigues_align(UnitVec3::Z, -UnitVec3::Z);
        let oracle = Rotation3::from_axis_angle(UnitVec3::X, PI);
        assert!(r.max_abs_diff(&oracle) < 1e-12);
        assert!(r.apply(UnitVec3::Z.vec()).max_abs_diff(Vec3::new(0.0, 0.0, -1.0)) < 1e-15);
    }

    #[test]
    fn rodrigues_near_antiparallel_is_accurate() {
        let a = uv(0.2, 0.3, 0.9);
        let b = uv(-0.2, -0.3, -0.9 + 1e-9);
        let r = rodrigues_align(a, b);
        assert!(r.apply(a.vec()).max_abs_diff(b.vec()) < 1e-9);
        assert!(r.orthogonality_error() < 1e-9);
    }

    #[test]
    fn frame_to_rotation_examples() {
        let r = frame_to_rotation(&Frame::CANONICAL);
        assert_eq!(r, Rotation3::IDENTITY);
        let f = build_tangent_frame(UnitVec3::X, 0.0);
        let r = frame_to_rotation(&f);
        let expected = Rotation3::from_columns(
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
        );
        assert!(r.max_abs_diff(&expected) < 1e-15);
        assert!(r.orthogonality_error() < 1e-12);
    }

    #[test]
    fn grid_sizes_and_weights() {
        let g = HemisphereGrid::canonical(64, 128).unwrap();
        assert_eq!(g.len(), 8192);
        assert!((g.total_solid_angle() - 2.0 * PI).abs() < 1e-3);
        let uniform = g.integrate(|_| 1.0 / (2.0 * PI));
        assert!((uniform - 1.0).abs() < 1e-3);

        let g = HemisphereGrid::canonical(2, 4).unwrap();
        assert_eq!(g.len(), 8);
        assert!(g.solid_angles().iter().all(|&w| w > 0.0));
        assert!(g.directions().iter().all(|d| d.z() >= -1e-12));

        assert!(HemisphereGrid::canonical(1, 8).is_err());
        assert!(HemisphereGrid::canonical(8, 3).is_err());
    }

    #[test]
    fn tilted_grid_stays_on_its_hemisphere() {
        let pole = uv(1.0, 2.0, -0.5);
        let g = make_hemisphere_grid(16, 32, pole).unwrap();
        assert!(g.directions().iter().all(|d| d.dot(pole) >= -1e-12));
    }

    #[test]
    fn quadrant_covers_a_quarter() {
        let g = HemisphereGrid::canonical(8, 16).unwrap();
        let q = g.quadrant().unwrap();
        assert_eq!(q.len(), g.len() / 4);
        assert!(q.directions().iter().all(|d| d.x() > 0.0 && d.y() > 0.0));
        assert!((4.0 * q.total_solid_angle() - g.total_solid_angle()).abs() < 1e-12);
        assert!(HemisphereGrid::canonical(8, 18).unwrap().quadrant().is_err());
        assert_ne!(q.id(), g.id());
    }
}
