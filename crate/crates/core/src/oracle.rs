//! Ground-truth answering straight from joints, and whole-dataset audits.
//!
//! The oracle never trusts stored continuous values or permutations: it
//! renormalizes the manifest pose, recomputes the descriptor, re-renders the
//! true statement and looks for it among the stored options.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    build_mcq, load_manifest, prepare_pose, read_dataset, thread_pool, DatasetError, DatasetReader, GenerationConfig,
    Mcq, PoseRecord, SkipReason,
};
use crate::discretize::{categorize, Category, DiscretizeError, ThresholdConfig};
use crate::geometry::{compute_descriptor, GeometryError, NormalizedPose};
use crate::skeleton::{full_catalog, DescriptorTarget};
use crate::textgen::{decode_statement, render_statement};

const CHUNK_SIZE: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("no option states the true category `{0}`")]
    NoMatchingOption(Category),
    #[error("true relative position is aligned")]
    AlignedTruth,
    #[error("target {0} is not in the descriptor catalog")]
    UnknownTarget(DescriptorTarget),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

/// Category of `target` on `pose` under `thresholds`.
pub fn true_category(
    pose: &NormalizedPose,
    target: &DescriptorTarget,
    thresholds: &ThresholdConfig,
) -> Result<Category, OracleError> {
    if !target.is_cataloged() {
        return Err(OracleError::UnknownTarget(*target));
    }
    let descriptor = compute_descriptor(pose, target)?;
    Ok(categorize(target.kind, descriptor.value, thresholds)?)
}

/// Index of the option that states the pose's true category.
pub fn answer_mcq(pose: &NormalizedPose, mcq: &Mcq, thresholds: &ThresholdConfig) -> Result<usize, OracleError> {
    if mcq.kind != mcq.target.kind {
        return Err(OracleError::UnknownTarget(mcq.target));
    }
    let category = true_category(pose, &mcq.target, thresholds)?;
    if category == Category::Aligned {
        return Err(OracleError::AlignedTruth);
    }
    let statement = render_statement(&mcq.target, category).map_err(|_| OracleError::NoMatchingOption(category))?;
    mcq.options
        .iter()
        .position(|o| *o == statement.text)
        .ok_or(OracleError::NoMatchingOption(category))
}

/// Every catalog target answered for one pose.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Enumeration {
    pub mcqs: Vec<Mcq>,
    pub aligned_skips: Vec<DescriptorTarget>,
    pub degenerate_skips: Vec<DescriptorTarget>,
}

impl Enumeration {
    pub fn accounted(&self) -> usize {
        self.mcqs.len() + self.aligned_skips.len() + self.degenerate_skips.len()
    }
}

/// One question per catalog target (at most 107), without sampling.
pub fn enumerate_all_mcqs(record: &PoseRecord, cfg: &GenerationConfig) -> Enumeration {
    let mut out = Enumeration::default();
    let pose = match prepare_pose(record, cfg) {
        Ok(p) => p,
        Err(_) => {
            out.degenerate_skips = full_catalog();
            return out;
        }
    };
    for target in full_catalog() {
        match build_mcq(&record.image_id, &pose, &target, cfg) {
            Ok(m) => out.mcqs.push(m),
            Err(SkipReason::Aligned) => out.aligned_skips.push(target),
            Err(_) => out.degenerate_skips.push(target),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub question_id: String,
    /// Category stated by the stored correct option, if decodable.
    pub expected_category: Option<Category>,
    pub oracle_category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub question_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    pub mismatches: Vec<Mismatch>,
    pub skipped: Vec<Skipped>,
}

impl ValidationReport {
    pub fn is_consistent(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("question {question_id} refers to image `{image_id}` missing from the manifest")]
    MissingPose { question_id: String, image_id: String },
}

enum Outcome {
    Ok,
    Mismatch(Mismatch),
    Skipped(Skipped),
}

fn check(mcq: &Mcq, pose: &Result<NormalizedPose, GeometryError>, thresholds: &ThresholdConfig) -> Outcome {
    let pose = match pose {
        Ok(p) => p,
        Err(e) => {
            return Outcome::Skipped(Skipped {
                question_id: mcq.question_id.clone(),
                reason: e.to_string(),
            })
        }
    };
    let expected_category = mcq
        .options
        .get(mcq.correct_index)
        .and_then(|text| decode_statement(&mcq.target, text));
    let mismatch = |oracle_category| {
        Outcome::Mismatch(Mismatch {
            question_id: mcq.question_id.clone(),
            expected_category,
            oracle_category,
        })
    };
    match answer_mcq(pose, mcq, thresholds) {
        Ok(i) if i == mcq.correct_index => Outcome::Ok,
        Ok(i) => mismatch(decode_statement(&mcq.target, &mcq.options[i]).unwrap_or(Category::Aligned)),
        Err(OracleError::AlignedTruth) => mismatch(Category::Aligned),
        Err(OracleError::NoMatchingOption(c)) => mismatch(c),
        Err(e) => Outcome::Skipped(Skipped {
            question_id: mcq.question_id.clone(),
            reason: e.to_string(),
        }),
    }
}

/// Replays the oracle over every question. Uses the dataset header's config
/// unless `thresholds` overrides the category cuts.
pub fn validate_streams<I, R>(
    records: I,
    dataset: DatasetReader<R>,
    thresholds: Option<&ThresholdConfig>,
    jobs: usize,
) -> Result<ValidationReport, ValidationError>
where
    I: IntoIterator<Item = Result<PoseRecord, DatasetError>>,
    R: BufRead,
{
    let cfg = dataset.header.config.clone();
    let thresholds = thresholds.copied().unwrap_or(cfg.thresholds);
    let mut poses = HashMap::new();
    for record in records {
        let record = record?;
        let pose = prepare_pose(&record, &cfg);
        poses.insert(record.image_id, pose);
    }

    let pool = thread_pool(jobs);
    let mut report = ValidationReport::default();
    let mut questions = dataset.into_iter();
    loop {
        let chunk = questions.by_ref().take(CHUNK_SIZE).collect::<Result<Vec<_>, _>>()?;
        if chunk.is_empty() {
            break;
        }
        if let Some(m) = chunk.iter().find(|m| !poses.contains_key(&m.image_id)) {
            return Err(ValidationError::MissingPose {
                question_id: m.question_id.clone(),
                image_id: m.image_id.clone(),
            });
        }
        let outcomes: Vec<Outcome> = pool.install(|| {
            chunk
                .par_iter()
                .map(|m| check(m, &poses[&m.image_id], &thresholds))
                .collect()
        });
        report.total += chunk.len();
        for outcome in outcomes {
            match outcome {
                Outcome::Ok => {}
                Outcome::Mismatch(m) => report.mismatches.push(m),
                Outcome::Skipped(s) => report.skipped.push(s),
            }
        }
    }
    Ok(report)
}

pub fn validate_dataset(
    manifest: &Path,
    dataset: &Path,
    thresholds: Option<&ThresholdConfig>,
    jobs: usize,
) -> Result<ValidationReport, ValidationError> {
    let records = load_manifest(manifest)?;
    let reader = read_dataset(dataset)?;
    validate_streams(records, reader, thresholds, jobs)
}
