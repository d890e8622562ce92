//! Pose normalization and continuous descriptors (angle, distance, axis offset).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skeleton::{angle_triplet, DescriptorKind, DescriptorTarget, JointId, SkeletonError, NUM_JOINTS};

pub type Vec3 = [f64; 3];

/// Norms and extents at or below this are treated as zero.
pub const DEGENERACY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("mesh needs at least 3 vertices, got {0}")]
    TooFewMeshVertices(usize),
    #[error("pose has zero extent on every axis")]
    DegeneratePose,
    #[error("zero-length bone at joint {0}")]
    DegenerateBone(JointId),
    #[error("target {0} does not match the requested descriptor")]
    KindMismatch(DescriptorTarget),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of_kind(kind: DescriptorKind) -> Option<Axis> {
        match kind {
            DescriptorKind::RelposX => Some(Axis::X),
            DescriptorKind::RelposY => Some(Axis::Y),
            DescriptorKind::RelposZ => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Joints in source units, optionally with the hand mesh used as the
/// normalization reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPose {
    pub joints: [Vec3; NUM_JOINTS],
    pub mesh_vertices: Option<Vec<Vec3>>,
}

impl RawPose {
    pub fn new(joints: [Vec3; NUM_JOINTS]) -> Self {
        RawPose {
            joints,
            mesh_vertices: None,
        }
    }

    pub fn with_mesh(joints: [Vec3; NUM_JOINTS], mesh: Vec<Vec3>) -> Self {
        RawPose {
            joints,
            mesh_vertices: Some(mesh),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.joints.iter().flatten().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite("joints"));
        }
        if let Some(mesh) = &self.mesh_vertices {
            if mesh.len() < 3 {
                return Err(GeometryError::TooFewMeshVertices(mesh.len()));
            }
            if !mesh.iter().flatten().all(|c| c.is_finite()) {
                return Err(GeometryError::NonFinite("mesh_vertices"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationSource {
    Mesh,
    Joints,
}

/// Centered, isotropically scaled joints.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPose {
    pub joints: [Vec3; NUM_JOINTS],
    pub source: NormalizationSource,
}

impl NormalizedPose {
    /// Wraps coordinates that are already in normalized units.
    pub fn from_normalized_joints(joints: [Vec3; NUM_JOINTS]) -> Self {
        NormalizedPose {
            joints,
            source: NormalizationSource::Joints,
        }
    }

    pub fn joint(&self, j: JointId) -> Vec3 {
        self.joints[j.index()]
    }
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn centroid(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for a in 0..3 {
            c[a] += p[a];
        }
    }
    c.map(|v| v / n)
}

/// Largest per-axis (max - min) over the points.
pub fn max_axis_extent(points: &[Vec3]) -> f64 {
    (0..3)
        .map(|a| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[a]), hi.max(p[a]))
            });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Centers on the mesh centroid (or the joint centroid without a mesh) and
/// scales so the reference point set has unit maximum axis extent.
pub fn normalize_pose(raw: &RawPose) -> Result<NormalizedPose, GeometryError> {
    raw.validate()?;
    let (reference, source): (&[Vec3], _) = match &raw.mesh_vertices {
        Some(mesh) => (mesh, NormalizationSource::Mesh),
        None => (&raw.joints, NormalizationSource::Joints),
    };
    let c = centroid(reference);
    // Extent is translation invariant, so it can be taken before centering.
    let extent = max_axis_extent(reference);
    if extent <= DEGENERACY_EPS {
        return Err(GeometryError::DegeneratePose);
    }
    let s = 1.0 / extent;
    let joints = raw.joints.map(|p| sub(p, c).map(|v| v * s));
    Ok(NormalizedPose { joints, source })
}

/// Bending angle at `j` in degrees, in [0, 180].
pub fn joint_angle(pose: &NormalizedPose, j: JointId) -> Result<f64, GeometryError> {
    let t = angle_triplet(j)?;
    let center = pose.joint(t.center);
    let u = sub(pose.joint(t.prev), center);
    let v = sub(pose.joint(t.next), center);
    let (nu, nv) = (norm(u), norm(v));
    if nu <= DEGENERACY_EPS || nv <= DEGENERACY_EPS {
        return Err(GeometryError::DegenerateBone(j));
    }
    let cos = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

pub fn joint_distance(pose: &NormalizedPose, a: JointId, b: JointId) -> f64 {
    norm(sub(pose.joint(a), pose.joint(b)))
}

/// Signed offset of `subject` relative to `object` along `axis`.
pub fn relative_offset(pose: &NormalizedPose, subject: JointId, object: JointId, axis: Axis) -> f64 {
    let a = axis.index();
    pose.joint(subject)[a] - pose.joint(object)[a]
}

/// A descriptor value tied to the target it was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousDescriptor {
    pub target: DescriptorTarget,
    /// Degrees for angles, normalized units otherwise.
    pub value: f64,
}

pub fn compute_descriptor(
    pose: &NormalizedPose,
    target: &DescriptorTarget,
) -> Result<ContinuousDescriptor, GeometryError> {
    let value = match (target.kind, target.object) {
        (DescriptorKind::Angle, None) => joint_angle(pose, target.subject)?,
        (DescriptorKind::Distance, Some(o)) => joint_distance(pose, target.subject, o),
        (k, Some(o)) => {
            let axis = Axis::of_kind(k).ok_or(GeometryError::KindMismatch(*target))?;
            relative_offset(pose, target.subject, o, axis)
        }
        _ => return Err(GeometryError::KindMismatch(*target)),
    };
    Ok(ContinuousDescriptor { target: *target, value })
}
