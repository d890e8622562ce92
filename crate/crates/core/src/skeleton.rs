//! Canonical 21-joint right-hand skeleton and the fixed descriptor catalogs.
//!
//! Joint order: wrist = 0, thumb CMC..tip = 1..4, then index, middle, ring and
//! little finger MCP..tip in blocks of four. Dataset adapters remap into this
//! order before ingestion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const NUM_JOINTS: usize = 21;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkeletonError {
    #[error("joint index {0} is outside 0..21")]
    InvalidJoint(usize),
    #[error("unknown joint name `{0}`")]
    UnknownJointName(String),
    #[error("joint {0} has no bending angle (wrist or fingertip)")]
    NotAnAngleJoint(JointId),
    #[error("target {0} is not in the descriptor catalog")]
    NotInCatalog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl Finger {
    pub const ALL: [Finger; 5] = [
        Finger::Thumb,
        Finger::Index,
        Finger::Middle,
        Finger::Ring,
        Finger::Little,
    ];

    fn short(self) -> &'static str {
        match self {
            Finger::Thumb => "Thumb",
            Finger::Index => "Index",
            Finger::Middle => "Middle",
            Finger::Ring => "Ring",
            Finger::Little => "Little",
        }
    }

    /// Phrase used in sentences: "thumb", "index finger", ...
    pub fn phrase(self) -> &'static str {
        match self {
            Finger::Thumb => "thumb",
            Finger::Index => "index finger",
            Finger::Middle => "middle finger",
            Finger::Ring => "ring finger",
            Finger::Little => "little finger",
        }
    }

    /// Position of the finger across the hand, thumb = 0.
    pub fn ordinal(self) -> usize {
        self as usize
    }
}

/// Anatomical type of a joint along its finger chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JointType {
    Wrist,
    /// Carpometacarpal (thumb only).
    Cmc,
    /// Metacarpophalangeal.
    Mcp,
    /// Interphalangeal (thumb only).
    Ip,
    /// Proximal interphalangeal.
    Pip,
    /// Distal interphalangeal.
    Dip,
    Tip,
}

impl JointType {
    fn short(self) -> &'static str {
        match self {
            JointType::Wrist => "Wrist",
            JointType::Cmc => "CMC",
            JointType::Mcp => "MCP",
            JointType::Ip => "IP",
            JointType::Pip => "PIP",
            JointType::Dip => "DIP",
            JointType::Tip => "Tip",
        }
    }

    pub fn phrase(self) -> &'static str {
        match self {
            JointType::Wrist => "wrist",
            JointType::Cmc => "carpometacarpal",
            JointType::Mcp => "metacarpophalangeal",
            JointType::Ip => "interphalangeal",
            JointType::Pip => "proximal interphalangeal",
            JointType::Dip => "distal interphalangeal",
            JointType::Tip => "tip",
        }
    }
}

/// One of the 21 skeleton joints.
///
/// Serializes as its short catalog name (`"Thumb-Tip"`, `"Index-PIP"`,
/// `"Wrist"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointId(u8);

impl JointId {
    pub const WRIST: JointId = JointId(0);
    pub const THUMB_CMC: JointId = JointId(1);
    pub const THUMB_MCP: JointId = JointId(2);
    pub const THUMB_IP: JointId = JointId(3);
    pub const THUMB_TIP: JointId = JointId(4);
    pub const INDEX_MCP: JointId = JointId(5);
    pub const INDEX_PIP: JointId = JointId(6);
    pub const INDEX_DIP: JointId = JointId(7);
    pub const INDEX_TIP: JointId = JointId(8);
    pub const MIDDLE_MCP: JointId = JointId(9);
    pub const MIDDLE_PIP: JointId = JointId(10);
    pub const MIDDLE_DIP: JointId = JointId(11);
    pub const MIDDLE_TIP: JointId = JointId(12);
    pub const RING_MCP: JointId = JointId(13);
    pub const RING_PIP: JointId = JointId(14);
    pub const RING_DIP: JointId = JointId(15);
    pub const RING_TIP: JointId = JointId(16);
    pub const LITTLE_MCP: JointId = JointId(17);
    pub const LITTLE_PIP: JointId = JointId(18);
    pub const LITTLE_DIP: JointId = JointId(19);
    pub const LITTLE_TIP: JointId = JointId(20);

    pub fn new(index: usize) -> Result<Self, SkeletonError> {
        if index < NUM_JOINTS {
            Ok(JointId(index as u8))
        } else {
            Err(SkeletonError::InvalidJoint(index))
        }
    }

    pub fn all() -> impl Iterator<Item = JointId> {
        (0..NUM_JOINTS as u8).map(JointId)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn finger(self) -> Option<Finger> {
        match self.0 {
            0 => None,
            i => Some(Finger::ALL[((i - 1) / 4) as usize]),
        }
    }

    /// Position along the finger chain, 0 = base (CMC/MCP) .. 3 = tip.
    fn chain_pos(self) -> Option<u8> {
        match self.0 {
            0 => None,
            i => Some((i - 1) % 4),
        }
    }

    pub fn joint_type(self) -> JointType {
        match (self.finger(), self.chain_pos()) {
            (None, _) => JointType::Wrist,
            (Some(Finger::Thumb), Some(0)) => JointType::Cmc,
            (Some(Finger::Thumb), Some(1)) => JointType::Mcp,
            (Some(Finger::Thumb), Some(2)) => JointType::Ip,
            (Some(_), Some(0)) => JointType::Mcp,
            (Some(_), Some(1)) => JointType::Pip,
            (Some(_), Some(2)) => JointType::Dip,
            (Some(_), _) => JointType::Tip,
        }
    }

    pub fn is_tip(self) -> bool {
        self.joint_type() == JointType::Tip
    }

    /// Catalog short name, e.g. `Middle-DIP`.
    pub fn short_name(self) -> String {
        match self.finger() {
            None => "Wrist".to_string(),
            Some(f) => format!("{}-{}", f.short(), self.joint_type().short()),
        }
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_name())
    }
}

impl FromStr for JointId {
    type Err = SkeletonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JointId::all()
            .find(|j| j.short_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SkeletonError::UnknownJointName(s.to_string()))
    }
}

impl Serialize for JointId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.short_name())
    }
}

impl<'de> Deserialize<'de> for JointId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Human-readable joint name, e.g. "distal interphalangeal joint of the
/// middle finger". The wrist is just "wrist".
pub fn joint_display_name(j: JointId) -> String {
    match j.finger() {
        None => "wrist".to_string(),
        Some(f) => format!("{} joint of the {}", j.joint_type().phrase(), f.phrase()),
    }
}

/// The joint whose bending angle is measured plus its two chain neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleTriplet {
    pub prev: JointId,
    pub center: JointId,
    pub next: JointId,
}

pub fn angle_triplet(j: JointId) -> Result<AngleTriplet, SkeletonError> {
    let pos = match j.chain_pos() {
        Some(p) if p < 3 => p,
        _ => return Err(SkeletonError::NotAnAngleJoint(j)),
    };
    let prev = if pos == 0 { JointId::WRIST } else { JointId(j.0 - 1) };
    Ok(AngleTriplet {
        prev,
        center: j,
        next: JointId(j.0 + 1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Angle,
    Distance,
    RelposX,
    RelposY,
    RelposZ,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 5] = [
        DescriptorKind::Angle,
        DescriptorKind::Distance,
        DescriptorKind::RelposX,
        DescriptorKind::RelposY,
        DescriptorKind::RelposZ,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::Angle => "angle",
            DescriptorKind::Distance => "distance",
            DescriptorKind::RelposX => "relpos_x",
            DescriptorKind::RelposY => "relpos_y",
            DescriptorKind::RelposZ => "relpos_z",
        }
    }

    pub fn is_pair(self) -> bool {
        self != DescriptorKind::Angle
    }

    pub fn is_relpos(self) -> bool {
        matches!(
            self,
            DescriptorKind::RelposX | DescriptorKind::RelposY | DescriptorKind::RelposZ
        )
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A catalog entry: one joint for angles, an ordered (subject, object) pair
/// for everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DescriptorTarget {
    pub kind: DescriptorKind,
    pub subject: JointId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<JointId>,
}

impl DescriptorTarget {
    pub fn angle(joint: JointId) -> Self {
        DescriptorTarget {
            kind: DescriptorKind::Angle,
            subject: joint,
            object: None,
        }
    }

    pub fn pair(kind: DescriptorKind, subject: JointId, object: JointId) -> Self {
        DescriptorTarget {
            kind,
            subject,
            object: Some(object),
        }
    }

    /// True if this exact target appears in the catalog of its kind.
    pub fn is_cataloged(&self) -> bool {
        match (self.kind, self.object) {
            (DescriptorKind::Angle, None) => ANGLE_JOINTS.contains(&self.subject),
            (k, Some(o)) if k.is_pair() => PAIR_CATALOG.contains(&(self.subject, o)),
            _ => false,
        }
    }
}

impl fmt::Display for DescriptorTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.object {
            None => write!(f, "{}:{}", self.kind, self.subject),
            Some(o) => write!(f, "{}:{} vs. {}", self.kind, self.subject, o),
        }
    }
}

/// Joints with a bending angle, in catalog order.
pub const ANGLE_JOINTS: [JointId; 15] = [
    JointId::THUMB_MCP,
    JointId::INDEX_PIP,
    JointId::MIDDLE_PIP,
    JointId::RING_PIP,
    JointId::LITTLE_PIP,
    JointId::THUMB_IP,
    JointId::INDEX_DIP,
    JointId::MIDDLE_DIP,
    JointId::RING_DIP,
    JointId::LITTLE_DIP,
    JointId::LITTLE_MCP,
    JointId::RING_MCP,
    JointId::MIDDLE_MCP,
    JointId::INDEX_MCP,
    JointId::THUMB_CMC,
];

/// Ordered joint pairs shared by distance and all three relative-position
/// axes. Sentences always describe the first joint relative to the second.
pub const PAIR_CATALOG: [(JointId, JointId); 23] = [
    (JointId::THUMB_MCP, JointId::INDEX_PIP),
    (JointId::INDEX_PIP, JointId::MIDDLE_PIP),
    (JointId::MIDDLE_PIP, JointId::RING_PIP),
    (JointId::RING_PIP, JointId::LITTLE_PIP),
    (JointId::THUMB_TIP, JointId::INDEX_TIP),
    (JointId::INDEX_TIP, JointId::MIDDLE_TIP),
    (JointId::MIDDLE_TIP, JointId::RING_TIP),
    (JointId::RING_TIP, JointId::LITTLE_TIP),
    (JointId::THUMB_TIP, JointId::INDEX_DIP),
    (JointId::THUMB_TIP, JointId::MIDDLE_DIP),
    (JointId::THUMB_TIP, JointId::RING_DIP),
    (JointId::THUMB_TIP, JointId::LITTLE_DIP),
    (JointId::THUMB_TIP, JointId::INDEX_MCP),
    (JointId::THUMB_TIP, JointId::MIDDLE_MCP),
    (JointId::THUMB_TIP, JointId::RING_MCP),
    (JointId::THUMB_TIP, JointId::LITTLE_MCP),
    (JointId::INDEX_MCP, JointId::INDEX_DIP),
    (JointId::INDEX_DIP, JointId::MIDDLE_DIP),
    (JointId::MIDDLE_DIP, JointId::RING_DIP),
    (JointId::RING_DIP, JointId::LITTLE_DIP),
    (JointId::THUMB_TIP, JointId::MIDDLE_TIP),
    (JointId::MIDDLE_TIP, JointId::LITTLE_TIP),
    (JointId::INDEX_TIP, JointId::RING_TIP),
];

/// Number of targets across all five descriptor kinds.
pub const TOTAL_TARGETS: usize = ANGLE_JOINTS.len() + 4 * PAIR_CATALOG.len();

/// The fixed target list for one descriptor kind, in stable catalog order.
pub fn catalog(kind: DescriptorKind) -> Vec<DescriptorTarget> {
    match kind {
        DescriptorKind::Angle => ANGLE_JOINTS.iter().map(|&j| DescriptorTarget::angle(j)).collect(),
        k => PAIR_CATALOG
            .iter()
            .map(|&(a, b)| DescriptorTarget::pair(k, a, b))
            .collect(),
    }
}

/// Every target of every kind, ordered by kind then catalog position.
pub fn full_catalog() -> Vec<DescriptorTarget> {
    DescriptorKind::ALL.iter().flat_map(|&k| catalog(k)).collect()
}
