//! Plane-referenced geometry: the operating plane, in-plane direction angles,
//! out-of-plane deviation, distance tiers, target zones and the mapping from
//! planar direction to a position on the wrist ring.
//!
//! Angles are in degrees. In-plane angles are measured from the plane's
//! `forward` axis and increase clockwise when the plane is viewed from its
//! `+normal` side (looking along `-normal`), so `forward` is 0° and
//! `forward × normal` (the lateral axis) is 90°.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::GuidanceConfig;

/// Minimum projected displacement (mm) for which a direction is defined.
pub const DIRECTION_EPSILON_MM: f64 = 1e-6;

const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("projected displacement {0:e} mm is too small to define a direction")]
    DegenerateDirection(f64),
    #[error("plane axis has zero length")]
    ZeroAxis,
    #[error("plane normal and forward axis are not orthogonal (dot = {0:e})")]
    NotOrthogonal(f64),
    #[error("zone list is empty")]
    EmptyZoneList,
    #[error("zone radii must satisfy 0 < T3 < T2 < T1, got T3={t3}, T2={t2}, T1={t1}")]
    InvalidZoneRadii { t3: f64, t2: f64, t1: f64 },
    #[error("calibration offset {0} is not a finite angle")]
    InvalidOffset(f64),
}

/// A point or displacement in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for a zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
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

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Wrap any finite angle into `[0, 360)`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let a = angle.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Smallest absolute angular separation between two angles, in `[0, 180]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_degrees(a - b);
    d.min(360.0 - d)
}

/// The reference surface on which planar guidance happens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPlane {
    origin: Vec3,
    normal: Vec3,
    forward: Vec3,
}

impl OperatingPlane {
    /// Build a plane from an origin and two axes. The axes are normalized;
    /// they must be orthogonal.
    pub fn new(origin: Vec3, normal: Vec3, forward: Vec3) -> Result<Self, GeometryError> {
        let normal = normal.normalized().ok_or(GeometryError::ZeroAxis)?;
        let forward = forward.normalized().ok_or(GeometryError::ZeroAxis)?;
        let dot = normal.dot(forward);
        if dot.abs() > UNIT_TOLERANCE {
            return Err(GeometryError::NotOrthogonal(dot));
        }
        Ok(Self {
            origin,
            normal,
            forward,
        })
    }

    /// Horizontal plane through the world origin: normal +Z, forward +Y.
    pub fn horizontal() -> Self {
        Self {
            origin: Vec3::ZERO,
            normal: Vec3::Z,
            forward: Vec3::Y,
        }
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn forward(&self) -> Vec3 {
        self.forward
    }

    /// The 90° in-plane axis.
    pub fn lateral(&self) -> Vec3 {
        self.forward.cross(self.normal)
    }

    /// Unit in-plane vector pointing at `angle` degrees.
    pub fn direction_vector(&self, angle: f64) -> Vec3 {
        let rad = angle.to_radians();
        self.forward * rad.cos() + self.lateral() * rad.sin()
    }

    /// The point at `radius` mm from the origin along in-plane `angle`.
    pub fn point_at(&self, angle: f64, radius: f64) -> Vec3 {
        self.origin + self.direction_vector(angle) * radius
    }

    /// Remove the normal component of a displacement.
    pub fn project_displacement(&self, v: Vec3) -> Vec3 {
        v - self.normal * v.dot(self.normal)
    }

    /// Angle of `target - tip` projected into the plane, in `[0, 360)`.
    pub fn planar_direction(&self, tip: Vec3, target: Vec3) -> Result<f64, GeometryError> {
        let d = target - tip;
        let along = d.dot(self.forward);
        let across = d.dot(self.lateral());
        let len = along.hypot(across);
        if len < DIRECTION_EPSILON_MM {
            return Err(GeometryError::DegenerateDirection(len));
        }
        Ok(wrap_degrees(across.atan2(along).to_degrees()))
    }

    /// Signed distance of `tip` from the plane; positive on the `+normal` side.
    pub fn out_of_plane_deviation(&self, tip: Vec3) -> f64 {
        (tip - self.origin).dot(self.normal)
    }

    /// Rotate a point about the axis through `origin` along `normal` by
    /// `angle` degrees in the plane's clockwise sense.
    pub fn rotate_about_normal(&self, p: Vec3, angle: f64) -> Vec3 {
        let rel = p - self.origin;
        let h = rel.dot(self.normal);
        let a = rel.dot(self.forward);
        let b = rel.dot(self.lateral());
        let (s, c) = angle.to_radians().sin_cos();
        self.origin
            + self.forward * (a * c - b * s)
            + self.lateral() * (a * s + b * c)
            + self.normal * h
    }
}

/// Free-function form of [`OperatingPlane::planar_direction`].
pub fn planar_direction(
    plane: &OperatingPlane,
    tip: Vec3,
    target: Vec3,
) -> Result<f64, GeometryError> {
    plane.planar_direction(tip, target)
}

/// Free-function form of [`OperatingPlane::out_of_plane_deviation`].
pub fn out_of_plane_deviation(plane: &OperatingPlane, tip: Vec3) -> f64 {
    plane.out_of_plane_deviation(tip)
}

/// One tracked tool sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolState {
    /// Tool tip position in mm.
    pub tip: Vec3,
    /// Seconds since trial onset.
    pub timestamp: f64,
}

impl ToolState {
    pub fn new(tip: Vec3, timestamp: f64) -> Self {
        Self { tip, timestamp }
    }
}

/// Proximity band controlling the planar pulse interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistanceTier {
    Close,
    Medium,
    Far,
}

impl DistanceTier {
    pub const ALL: [DistanceTier; 3] = [DistanceTier::Far, DistanceTier::Medium, DistanceTier::Close];

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceTier::Close => "close",
            DistanceTier::Medium => "medium",
            DistanceTier::Far => "far",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "close" => Some(DistanceTier::Close),
            "medium" => Some(DistanceTier::Medium),
            "far" => Some(DistanceTier::Far),
            _ => None,
        }
    }
}

impl fmt::Display for DistanceTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Far above `far_min`, Close below `close_max`, Medium on the closed band
/// between them.
pub fn distance_tier(distance: f64, config: &GuidanceConfig) -> DistanceTier {
    if distance > config.far_min {
        DistanceTier::Far
    } else if distance >= config.close_max {
        DistanceTier::Medium
    } else {
        DistanceTier::Close
    }
}

/// How an in-plane direction is placed on the wrist ring.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum ReferenceFrameMode {
    /// Forward always maps to the dorsal motor.
    #[default]
    WristUp,
    /// Directions are rotated by an offset captured once at session start.
    ToolOriented { calibration_offset: f64 },
}

impl ReferenceFrameMode {
    pub fn tool_oriented(calibration_offset: f64) -> Result<Self, GeometryError> {
        if !calibration_offset.is_finite() {
            return Err(GeometryError::InvalidOffset(calibration_offset));
        }
        Ok(ReferenceFrameMode::ToolOriented {
            calibration_offset: wrap_degrees(calibration_offset),
        })
    }

    pub fn offset(&self) -> f64 {
        match *self {
            ReferenceFrameMode::WristUp => 0.0,
            ReferenceFrameMode::ToolOriented { calibration_offset } => calibration_offset,
        }
    }

    /// Inverse of [`map_to_ring_angle`].
    pub fn ring_to_planar(&self, ring_angle: f64) -> f64 {
        wrap_degrees(ring_angle - self.offset())
    }
}

pub fn map_to_ring_angle(planar_angle: f64, frame: ReferenceFrameMode) -> f64 {
    match frame {
        ReferenceFrameMode::WristUp => wrap_degrees(planar_angle),
        ReferenceFrameMode::ToolOriented { calibration_offset } => {
            wrap_degrees(planar_angle + calibration_offset)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    T3,
    T2,
    T1,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::T3, Zone::T2, Zone::T1];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::T1 => "T1",
            Zone::T2 => "T2",
            Zone::T3 => "T3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "T1" | "t1" => Some(Zone::T1),
            "T2" | "t2" => Some(Zone::T2),
            "T3" | "t3" => Some(Zone::T3),
            _ => None,
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetZone {
    pub zone: Zone,
    pub radius: f64,
}

/// The three radial target zones, innermost first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneSet {
    zones: [TargetZone; 3],
}

impl ZoneSet {
    pub fn new(t3: f64, t2: f64, t1: f64) -> Result<Self, GeometryError> {
        if !(t3 > 0.0 && t3 < t2 && t2 < t1 && t1.is_finite()) {
            return Err(GeometryError::InvalidZoneRadii { t3, t2, t1 });
        }
        Ok(Self {
            zones: [
                TargetZone { zone: Zone::T3, radius: t3 },
                TargetZone { zone: Zone::T2, radius: t2 },
                TargetZone { zone: Zone::T1, radius: t1 },
            ],
        })
    }

    pub fn zones(&self) -> &[TargetZone] {
        &self.zones
    }

    pub fn radius(&self, zone: Zone) -> f64 {
        self.zones
            .iter()
            .find(|z| z.zone == zone)
            .map(|z| z.radius)
            .expect("every zone is present")
    }
}

impl Default for ZoneSet {
    fn default() -> Self {
        Self::new(30.0, 60.0, 90.0).expect("default radii are ordered")
    }
}

/// The zone whose radius is nearest to `distance_from_origin`. Ties go to
/// the inner zone.
pub fn classify_zone(
    distance_from_origin: f64,
    zones: &[TargetZone],
) -> Result<TargetZone, GeometryError> {
    zones
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = (a.radius - distance_from_origin).abs();
            let db = (b.radius - distance_from_origin).abs();
            da.total_cmp(&db).then(a.radius.total_cmp(&b.radius))
        })
        .ok_or(GeometryError::EmptyZoneList)
}
