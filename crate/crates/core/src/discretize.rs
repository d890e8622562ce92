//! Threshold table mapping continuous descriptor values to category labels.
//!
//! Every interval is half-open with an inclusive lower bound, so a value
//! sitting exactly on a cut falls into the upper category.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::Axis;
use crate::skeleton::DescriptorKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("{kind} value {value} is out of range")]
    OutOfRange { kind: DescriptorKind, value: f64 },
    #[error("invalid threshold config: {0}")]
    InvalidConfig(String),
    #[error("unknown category label `{0}`")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    BentCompletelyInward,
    BentInward,
    BentSlightlyInward,
    Straight,
    CloseTo,
    SpreadFrom,
    SpreadWideFrom,
    LeftOf,
    RightOf,
    Below,
    Above,
    Behind,
    InFrontOf,
    /// Within the relative-position band on an axis. Never asked about.
    Aligned,
}

const ANGLE_LABELS: [Category; 4] = [
    Category::BentCompletelyInward,
    Category::BentInward,
    Category::BentSlightlyInward,
    Category::Straight,
];
const DISTANCE_LABELS: [Category; 3] = [Category::CloseTo, Category::SpreadFrom, Category::SpreadWideFrom];
const X_LABELS: [Category; 3] = [Category::LeftOf, Category::Aligned, Category::RightOf];
const Y_LABELS: [Category; 3] = [Category::Below, Category::Aligned, Category::Above];
const Z_LABELS: [Category; 3] = [Category::Behind, Category::Aligned, Category::InFrontOf];
const X_ANSWERS: [Category; 2] = [Category::LeftOf, Category::RightOf];
const Y_ANSWERS: [Category; 2] = [Category::Below, Category::Above];
const Z_ANSWERS: [Category; 2] = [Category::Behind, Category::InFrontOf];

const ALL_CATEGORIES: [Category; 14] = [
    Category::BentCompletelyInward,
    Category::BentInward,
    Category::BentSlightlyInward,
    Category::Straight,
    Category::CloseTo,
    Category::SpreadFrom,
    Category::SpreadWideFrom,
    Category::LeftOf,
    Category::RightOf,
    Category::Below,
    Category::Above,
    Category::Behind,
    Category::InFrontOf,
    Category::Aligned,
];

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::BentCompletelyInward => "bent completely inward",
            Category::BentInward => "bent inward",
            Category::BentSlightlyInward => "bent slightly inward",
            Category::Straight => "straight",
            Category::CloseTo => "close to",
            Category::SpreadFrom => "spread from",
            Category::SpreadWideFrom => "spread wide from",
            Category::LeftOf => "at the left of",
            Category::RightOf => "at the right of",
            Category::Below => "below",
            Category::Above => "above",
            Category::Behind => "behind",
            Category::InFrontOf => "in front of",
            Category::Aligned => "aligned",
        }
    }

    /// All labels of a kind ordered by increasing underlying value,
    /// including "aligned" for relative positions.
    pub fn ordered_for(kind: DescriptorKind) -> &'static [Category] {
        match kind {
            DescriptorKind::Angle => &ANGLE_LABELS,
            DescriptorKind::Distance => &DISTANCE_LABELS,
            DescriptorKind::RelposX => &X_LABELS,
            DescriptorKind::RelposY => &Y_LABELS,
            DescriptorKind::RelposZ => &Z_LABELS,
        }
    }

    /// Labels that can appear as answer options (everything but "aligned").
    pub fn answers_for(kind: DescriptorKind) -> &'static [Category] {
        match kind {
            DescriptorKind::Angle => &ANGLE_LABELS,
            DescriptorKind::Distance => &DISTANCE_LABELS,
            DescriptorKind::RelposX => &X_ANSWERS,
            DescriptorKind::RelposY => &Y_ANSWERS,
            DescriptorKind::RelposZ => &Z_ANSWERS,
        }
    }

    pub fn belongs_to(self, kind: DescriptorKind) -> bool {
        Self::ordered_for(kind).contains(&self)
    }

    /// Rank by increasing underlying value within `kind`.
    pub fn rank_in(self, kind: DescriptorKind) -> Option<usize> {
        Self::ordered_for(kind).iter().position(|&c| c == self)
    }

    /// Ordinal class index for angle and distance labels.
    pub fn ordinal(self) -> Option<usize> {
        ANGLE_LABELS
            .iter()
            .position(|&c| c == self)
            .or_else(|| DISTANCE_LABELS.iter().position(|&c| c == self))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Category {
    type Err = DiscretizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_CATEGORIES
            .iter()
            .copied()
            .find(|c| c.label() == s)
            .ok_or_else(|| DiscretizeError::UnknownLabel(s.to_string()))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Category cut points. Defaults reproduce the published table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    /// Degrees separating completely-inward / inward / slightly-inward / straight.
    pub angle_cuts: [f64; 3],
    /// Separates close / spread / spread-wide.
    pub distance_cuts: [f64; 2],
    /// Half-width of the "aligned" band on each axis.
    pub relpos_band: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            angle_cuts: [105.0, 150.0, 170.0],
            distance_cuts: [0.1, 0.3],
            relpos_band: 0.15,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), DiscretizeError> {
        let all = self
            .angle_cuts
            .iter()
            .chain(&self.distance_cuts)
            .chain([&self.relpos_band]);
        if !all.into_iter().all(|v| v.is_finite()) {
            return Err(DiscretizeError::InvalidConfig("non-finite threshold".into()));
        }
        if !self.angle_cuts.windows(2).all(|w| w[0] < w[1]) {
            return Err(DiscretizeError::InvalidConfig(
                "angle cuts must be strictly increasing".into(),
            ));
        }
        if self.distance_cuts[0] >= self.distance_cuts[1] {
            return Err(DiscretizeError::InvalidConfig(
                "distance cuts must be strictly increasing".into(),
            ));
        }
        if self.relpos_band <= 0.0 {
            return Err(DiscretizeError::InvalidConfig("relpos band must be positive".into()));
        }
        Ok(())
    }

    /// Short stable fingerprint recorded in question provenance.
    pub fn id(&self) -> String {
        let canonical = serde_json::to_string(self).expect("threshold config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn categorize_angle(theta: f64, cfg: &ThresholdConfig) -> Result<Category, DiscretizeError> {
    if !(0.0..=180.0).contains(&theta) {
        return Err(DiscretizeError::OutOfRange {
            kind: DescriptorKind::Angle,
            value: theta,
        });
    }
    let [a, b, c] = cfg.angle_cuts;
    Ok(if theta < a {
        Category::BentCompletelyInward
    } else if theta < b {
        Category::BentInward
    } else if theta < c {
        Category::BentSlightlyInward
    } else {
        Category::Straight
    })
}

pub fn categorize_distance(d: f64, cfg: &ThresholdConfig) -> Result<Category, DiscretizeError> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(DiscretizeError::OutOfRange {
            kind: DescriptorKind::Distance,
            value: d,
        });
    }
    let [a, b] = cfg.distance_cuts;
    Ok(if d < a {
        Category::CloseTo
    } else if d < b {
        Category::SpreadFrom
    } else {
        Category::SpreadWideFrom
    })
}

pub fn categorize_offset(delta: f64, axis: Axis, cfg: &ThresholdConfig) -> Category {
    debug_assert!(delta.is_finite());
    let [neg, _, pos] = match axis {
        Axis::X => X_LABELS,
        Axis::Y => Y_LABELS,
        Axis::Z => Z_LABELS,
    };
    if delta < -cfg.relpos_band {
        neg
    } else if delta < cfg.relpos_band {
        Category::Aligned
    } else {
        pos
    }
}

/// Dispatches on the descriptor kind.
pub fn categorize(kind: DescriptorKind, value: f64, cfg: &ThresholdConfig) -> Result<Category, DiscretizeError> {
    match kind {
        DescriptorKind::Angle => categorize_angle(value, cfg),
        DescriptorKind::Distance => categorize_distance(value, cfg),
        k => {
            if !value.is_finite() {
                return Err(DiscretizeError::OutOfRange { kind: k, value });
            }
            let axis = Axis::of_kind(k).expect("relpos kind has an axis");
            Ok(categorize_offset(value, axis, cfg))
        }
    }
}
