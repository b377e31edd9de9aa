//! Spherical/equirectangular geometry and the tangent-plane camera model.
//!
//! An omni-directional frame is an equirectangular image of width `w = 2h`.
//! Pixel column `u` maps linearly to azimuth `phi in [0, 2pi)` and row `v`
//! to polar angle `theta in [0, pi]` (0 = zenith, pi = nadir). A virtual
//! perspective camera is a tangent plane touching the unit sphere at the
//! view direction `o(alpha, beta)`; a world direction `d` projects onto the
//! plane at coordinates `(s, t)` along the plane's right/up axes `a`, `b`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical floor for `d . o` below which a direction counts as lying on or
/// behind the tangent plane's horizon and cannot be projected.
pub const FRONT_EPSILON: f64 = 1e-9;

/// Errors from geometric constructions and projections.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    /// Equirectangular dimensions must satisfy `width = 2 * height`, both nonzero.
    #[error("equirectangular image must be {0}x{1} with width = 2 x height, both nonzero")]
    BadAspect(u32, u32),
    /// Pixel row outside the vertical extent of the image.
    #[error("pixel row {v} outside image rows [0, {height}]")]
    PixelOutOfRange { v: f64, height: f64 },
    /// Polar angle outside `[0, pi]`.
    #[error("polar angle {0} outside [0, pi]")]
    InvalidTheta(f64),
    /// A direction vector of (near-)zero length has no orientation.
    #[error("cannot normalize a zero-length vector")]
    ZeroVector,
    /// The view direction points at a pole, so the image "up" is undefined.
    #[error("view direction at beta = {0} is a pole; image up direction undefined")]
    DegenerateUp(f64),
    /// The direction lies on or behind the tangent plane's horizon.
    #[error("direction behind the view plane (d.o = {0:e})")]
    BehindPlane(f64),
    /// Plane extents must be strictly positive.
    #[error("plane extents must be positive (l = {l}, m = {m})")]
    InvalidExtent { l: f64, m: f64 },
}

/// Validated equirectangular image dimensions (`width = 2 * height`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDims", into = "RawDims")]
pub struct EquirectDims {
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
struct RawDims {
    width: u32,
    height: u32,
}

impl TryFrom<RawDims> for EquirectDims {
    type Error = GeometryError;
    fn try_from(raw: RawDims) -> Result<Self, GeometryError> {
        EquirectDims::new(raw.width, raw.height)
    }
}

impl From<EquirectDims> for RawDims {
    fn from(d: EquirectDims) -> Self {
        RawDims { width: d.width, height: d.height }
    }
}

impl EquirectDims {
    /// Validates the 2:1 equirectangular aspect.
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if height == 0 || width != 2 * height {
            return Err(GeometryError::BadAspect(width, height));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width_f(&self) -> f64 {
        f64::from(self.width)
    }

    pub fn height_f(&self) -> f64 {
        f64::from(self.height)
    }
}

/// A direction on the unit sphere: azimuth `phi in [0, 2pi)` measured in the
/// horizontal plane, polar angle `theta in [0, pi]` from the zenith.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereAngles {
    phi: f64,
    theta: f64,
}

impl SphereAngles {
    /// Wraps `phi` into `[0, 2pi)`; rejects `theta` outside `[0, pi]` or non-finite.
    pub fn new(phi: f64, theta: f64) -> Result<Self, GeometryError> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(GeometryError::InvalidTheta(theta));
        }
        if !phi.is_finite() {
            return Err(GeometryError::InvalidTheta(phi));
        }
        let mut phi = phi.rem_euclid(TAU);
        // rem_euclid of a tiny negative can round up to the period itself.
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { phi, theta })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// A unit-length 3D direction. Constructed by normalizing, so downstream
/// math can rely on `|v| = 1` without re-checking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3 {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVec3 {
    /// Normalizes the components; a (near-)zero vector has no direction.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    /// For components already unit-length by construction (trig identities).
    fn from_normalized(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn dot(&self, other: &UnitVec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Orthonormal frame of a tangent-plane camera: `o` points at the plane's
/// touch point, `a` spans image-right, `b` spans image-up, with `a = o x b`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneBasis {
    o: UnitVec3,
    a: UnitVec3,
    b: UnitVec3,
}

impl PlaneBasis {
    pub fn o(&self) -> &UnitVec3 {
        &self.o
    }

    pub fn a(&self) -> &UnitVec3 {
        &self.a
    }

    pub fn b(&self) -> &UnitVec3 {
        &self.b
    }
}

/// Builds the tangent-plane basis for view direction `(alpha, beta)`
/// (azimuth / polar angle of the plane's touch point):
///
/// ```text
/// o = (sin b cos a, sin b sin a, cos b)    touch point
/// a = (sin a, -cos a, 0)                   image right, horizontal
/// b = (-cos a cos b, -sin a cos b, sin b)  image up
/// ```
///
/// `beta` at a pole leaves "up" undefined and is rejected.
pub fn plane_basis(alpha: f64, beta: f64) -> Result<PlaneBasis, GeometryError> {
    if !beta.is_finite() || !alpha.is_finite() {
        return Err(GeometryError::DegenerateUp(beta));
    }
    if beta <= 0.0 || beta >= PI {
        return Err(GeometryError::DegenerateUp(beta));
    }
    let (sin_a, cos_a) = alpha.sin_cos();
    let (sin_b, cos_b) = beta.sin_cos();
    let o = UnitVec3::from_normalized(sin_b * cos_a, sin_b * sin_a, cos_b);
    let a = UnitVec3::from_normalized(sin_a, -cos_a, 0.0);
    let b = UnitVec3::from_normalized(-cos_a * cos_b, -sin_a * cos_b, sin_b);
    Ok(PlaneBasis { o, a, b })
}

/// A perspective camera: view direction plus the physical extents of the
/// image rectangle on the tangent plane.
#[derive(Debug, Clone, Copy)]
pub struct PlaneCamera {
    alpha: f64,
    beta: f64,
    l: f64,
    m: f64,
}

impl PlaneCamera {
    /// `beta` must avoid the poles; `l`, `m` must be positive.
    pub fn new(alpha: f64, beta: f64, l: f64, m: f64) -> Result<Self, GeometryError> {
        // Validates beta and alpha; the basis itself is rebuilt on demand.
        plane_basis(alpha, beta)?;
        if !(l.is_finite() && m.is_finite() && l > 0.0 && m > 0.0) {
            return Err(GeometryError::InvalidExtent { l, m });
        }
        let mut alpha = alpha.rem_euclid(TAU);
        if alpha >= TAU {
            alpha = 0.0;
        }
        Ok(Self { alpha, beta, l, m })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Horizontal extent of the image rectangle on the tangent plane.
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Vertical extent of the image rectangle on the tangent plane.
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn basis(&self) -> PlaneBasis {
        plane_basis(self.alpha, self.beta).expect("validated at construction")
    }
}

/// Maps a pixel position to sphere angles: `phi = 2pi u / w`, `theta = pi v / h`.
/// `u` wraps around the seam; `v` outside `[0, h]` is an error.
pub fn angles_from_pixel(u: f64, v: f64, dims: EquirectDims) -> Result<SphereAngles, GeometryError> {
    let w = dims.width_f();
    let h = dims.height_f();
    if !v.is_finite() || !(0.0..=h).contains(&v) {
        return Err(GeometryError::PixelOutOfRange { v, height: h });
    }
    if !u.is_finite() {
        return Err(GeometryError::PixelOutOfRange { v: u, height: w });
    }
    let phi = u.rem_euclid(w) / w * TAU;
    let theta = (v / h * PI).min(PI);
    SphereAngles::new(phi, theta)
}

/// Inverse of [`angles_from_pixel`]: `u = w phi / 2pi in [0, w)`, `v = h theta / pi in [0, h]`.
pub fn pixel_from_angles(angles: SphereAngles, dims: EquirectDims) -> (f64, f64) {
    let w = dims.width_f();
    let h = dims.height_f();
    let mut u = angles.phi() / TAU * w;
    // phi just below 2pi can round up to exactly w; 0 is the same column.
    if u >= w {
        u = 0.0;
    }
    let v = angles.theta() / PI * h;
    (u, v)
}

/// Sphere angles to a unit direction:
/// `d = (sin theta cos phi, sin theta sin phi, cos theta)`.
pub fn direction_from_angles(angles: SphereAngles) -> UnitVec3 {
    let (sin_t, cos_t) = angles.theta().sin_cos();
    let (sin_p, cos_p) = angles.phi().sin_cos();
    UnitVec3::from_normalized(sin_t * cos_p, sin_t * sin_p, cos_t)
}

/// Unit direction back to sphere angles. At the poles (`x = y = 0`) the
/// azimuth is indeterminate and reported as 0.
pub fn angles_from_direction(d: UnitVec3) -> SphereAngles {
    let theta = d.z().clamp(-1.0, 1.0).acos();
    let phi = d.y().atan2(d.x());
    SphereAngles::new(phi, theta).expect("acos yields theta in [0, pi]")
}

/// Projects a direction onto the tangent plane: solves `k d = o + s a + t b`
/// for the plane coordinates, giving `s = (d.a)/(d.o)`, `t = (d.b)/(d.o)`.
/// Directions with `d.o <= FRONT_EPSILON` lie on or behind the plane horizon.
pub fn plane_coords_from_direction(d: UnitVec3, basis: &PlaneBasis) -> Result<(f64, f64), GeometryError> {
    let denom = d.dot(basis.o());
    if denom <= FRONT_EPSILON {
        return Err(GeometryError::BehindPlane(denom));
    }
    Ok((d.dot(basis.a()) / denom, d.dot(basis.b()) / denom))
}

/// Direction of the plane point `o + s a + t b` (normalized). The point is
/// at distance >= 1 from the origin, so the direction is always defined.
pub fn direction_from_plane_coords(s: f64, t: f64, basis: &PlaneBasis) -> UnitVec3 {
    let x = basis.o().x() + s * basis.a().x() + t * basis.b().x();
    let y = basis.o().y() + s * basis.a().y() + t * basis.b().y();
    let z = basis.o().z() + s * basis.a().z() + t * basis.b().z();
    UnitVec3::new(x, y, z).expect("plane points are at least unit distance from origin")
}
