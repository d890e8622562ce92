//! Manifest ingestion, per-image target sampling, question assembly and the
//! line-oriented dataset format.
//!
//! A manifest has one JSON object per line:
//!
//! ```text
//! {"image_id": "img_0001", "image_path": "rgb/0001.jpg",
//!  "joints": [[x, y, z], ... 21 entries ...],
//!  "mesh_vertices": [[x, y, z], ...], "axis_flips": {"y": true}}
//! ```
//!
//! `image_path`, `mesh_vertices` and `axis_flips` are optional. A dataset
//! file starts with a `{"header": ...}` line recording the generation config,
//! followed by one question per line in (manifest position, kind, sample)
//! order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::discretize::{categorize, Category, ThresholdConfig};
use crate::geometry::{
    compute_descriptor, normalize_pose, GeometryError, NormalizationSource, NormalizedPose, RawPose, Vec3,
};
use crate::skeleton::{catalog, DescriptorKind, DescriptorTarget, NUM_JOINTS};
use crate::textgen::build_options;

pub const DEFAULT_SEED: u64 = 2025;
pub const DEFAULT_SAMPLES_PER_TYPE: usize = 5;
pub const QUESTION_STEM: &str = "Which of the following statements about the hand in the image is correct?";
pub const OPTION_LETTERS: [char; 4] = ['a', 'b', 'c', 'd'];
pub const TOOL_NAME: &str = "handvqa";

/// Records handed to the worker pool at once. Bounds memory while streaming.
const CHUNK_SIZE: usize = 512;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate image_id `{image_id}`")]
    DuplicateImageId { line: usize, image_id: String },
    #[error("dataset has no header line")]
    MissingHeader,
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Per-axis sign flips applied to raw coordinates before normalization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisFlips {
    pub x: bool,
    pub y: bool,
    pub z: bool,
}

impl AxisFlips {
    fn apply(&self, p: Vec3) -> Vec3 {
        let sign = |flip: bool| if flip { -1.0 } else { 1.0 };
        [p[0] * sign(self.x), p[1] * sign(self.y), p[2] * sign(self.z)]
    }

    fn is_identity(&self) -> bool {
        !(self.x || self.y || self.z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub image_id: String,
    pub image_path: Option<String>,
    pub raw_pose: RawPose,
    /// Overrides the config-level flips for this record when present.
    pub axis_flips: Option<AxisFlips>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_path: Option<String>,
    joints: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mesh_vertices: Option<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis_flips: Option<AxisFlips>,
}

impl PoseRecord {
    pub fn new(image_id: impl Into<String>, raw_pose: RawPose) -> Self {
        PoseRecord {
            image_id: image_id.into(),
            image_path: None,
            raw_pose,
            axis_flips: None,
        }
    }

    /// Serializes to one manifest line (no trailing newline).
    pub fn to_manifest_line(&self) -> String {
        let line = ManifestLine {
            image_id: self.image_id.clone(),
            image_path: self.image_path.clone(),
            joints: self.raw_pose.joints.to_vec(),
            mesh_vertices: self.raw_pose.mesh_vertices.clone(),
            axis_flips: self.axis_flips,
        };
        serde_json::to_string(&line).expect("manifest record serializes")
    }

    fn parse_line(text: &str, line: usize) -> Result<Self, DatasetError> {
        let parsed: ManifestLine = serde_json::from_str(text).map_err(|e| DatasetError::Parse {
            line,
            reason: e.to_string(),
        })?;
        let joints: [Vec3; NUM_JOINTS] = parsed.joints.try_into().map_err(|j: Vec<Vec3>| DatasetError::Parse {
            line,
            reason: format!("expected {NUM_JOINTS} joints, got {}", j.len()),
        })?;
        if parsed.image_id.is_empty() {
            return Err(DatasetError::Parse {
                line,
                reason: "empty image_id".into(),
            });
        }
        let raw_pose = RawPose {
            joints,
            mesh_vertices: parsed.mesh_vertices,
        };
        raw_pose.validate().map_err(|e| DatasetError::Parse {
            line,
            reason: e.to_string(),
        })?;
        Ok(PoseRecord {
            image_id: parsed.image_id,
            image_path: parsed.image_path,
            raw_pose,
            axis_flips: parsed.axis_flips,
        })
    }
}

/// Streams `PoseRecord`s from a manifest, rejecting duplicate image ids.
pub struct ManifestReader<R> {
    lines: Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> ManifestReader<R> {
    pub fn new(reader: R) -> Self {
        ManifestReader {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
        }
    }
}

impl<R: BufRead> Iterator for ManifestReader<R> {
    type Item = Result<PoseRecord, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = self.lines.next()?;
            self.line_no += 1;
            let line = self.line_no;
            let text = match text {
                Ok(t) => t,
                Err(e) => {
                    return Some(Err(DatasetError::Parse {
                        line,
                        reason: e.to_string(),
                    }))
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            let record = PoseRecord::parse_line(&text, line).and_then(|r| {
                if self.seen.insert(r.image_id.clone()) {
                    Ok(r)
                } else {
                    Err(DatasetError::DuplicateImageId {
                        line,
                        image_id: r.image_id,
                    })
                }
            });
            return Some(record);
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<ManifestReader<BufReader<File>>, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    Ok(ManifestReader::new(BufReader::new(file)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub seed: u64,
    pub per_type_samples: usize,
    pub thresholds: ThresholdConfig,
    pub axis_flips: AxisFlips,
    /// Replace excluded targets (aligned truth, degenerate bone) with unused
    /// ones from the same kind.
    pub resample_on_aligned: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            seed: DEFAULT_SEED,
            per_type_samples: DEFAULT_SAMPLES_PER_TYPE,
            thresholds: ThresholdConfig::default(),
            axis_flips: AxisFlips::default(),
            resample_on_aligned: true,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.thresholds
            .validate()
            .map_err(|e| DatasetError::InvalidConfig(e.to_string()))?;
        let max = DescriptorKind::ALL.iter().map(|&k| catalog(k).len()).max().unwrap_or(0);
        if !(1..=max).contains(&self.per_type_samples) {
            return Err(DatasetError::InvalidConfig(format!(
                "per_type_samples must be in 1..={max}, got {}",
                self.per_type_samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub continuous_value: f64,
    pub category: Category,
    pub threshold_config_id: String,
    /// Seed of the option shuffle for this question.
    pub seed: u64,
    pub permutation: Vec<usize>,
    pub normalization: NormalizationSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mcq {
    pub question_id: String,
    pub image_id: String,
    pub kind: DescriptorKind,
    pub target: DescriptorTarget,
    pub prompt: String,
    pub options: Vec<String>,
    pub correct_index: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipReason {
    Aligned,
    DegenerateBone,
    DegeneratePose,
    /// A descriptor value outside its valid range.
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipNote {
    pub image_id: String,
    /// `None` when the whole pose was unusable.
    pub target: Option<DescriptorTarget>,
    #[serde(flatten)]
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub image_id: String,
    pub kind: DescriptorKind,
    pub requested: usize,
    pub produced: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageMcqs {
    pub mcqs: Vec<Mcq>,
    pub skips: Vec<SkipNote>,
    pub shortfalls: Vec<Shortfall>,
}

fn hash_parts(parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().into()
}

fn target_parts(target: &DescriptorTarget) -> [String; 3] {
    [
        target.kind.as_str().to_string(),
        target.subject.short_name(),
        target.object.map(|o| o.short_name()).unwrap_or_default(),
    ]
}

fn seed_from(digest: [u8; 32]) -> u64 {
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Seed of the target permutation for one (image, kind).
pub fn sampling_seed(seed: u64, image_id: &str, kind: DescriptorKind) -> u64 {
    seed_from(hash_parts(&["sample", &seed.to_string(), image_id, kind.as_str()]))
}

/// Seed of the option shuffle for one (image, target).
pub fn option_seed(seed: u64, image_id: &str, target: &DescriptorTarget) -> u64 {
    let [k, s, o] = target_parts(target);
    seed_from(hash_parts(&["options", &seed.to_string(), image_id, &k, &s, &o]))
}

/// Stable question id derived from (image_id, kind, target).
pub fn question_id(image_id: &str, target: &DescriptorTarget) -> String {
    let [k, s, o] = target_parts(target);
    hash_parts(&["question", image_id, &k, &s, &o])[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Renders the stem followed by lettered options.
pub fn format_prompt(options: &[String]) -> String {
    let mut prompt = QUESTION_STEM.to_string();
    for (letter, text) in OPTION_LETTERS.iter().zip(options) {
        prompt.push_str(&format!("\n({letter}) {text}"));
    }
    prompt
}

/// Applies axis flips and normalizes. Shared by generation and validation.
pub fn prepare_pose(record: &PoseRecord, cfg: &GenerationConfig) -> Result<NormalizedPose, GeometryError> {
    let flips = record.axis_flips.unwrap_or(cfg.axis_flips);
    if flips.is_identity() {
        return normalize_pose(&record.raw_pose);
    }
    let raw = RawPose {
        joints: record.raw_pose.joints.map(|p| flips.apply(p)),
        mesh_vertices: record
            .raw_pose
            .mesh_vertices
            .as_ref()
            .map(|m| m.iter().map(|&p| flips.apply(p)).collect()),
    };
    normalize_pose(&raw)
}

/// Builds the question for one target, or explains why it has none.
pub fn build_mcq(
    image_id: &str,
    pose: &NormalizedPose,
    target: &DescriptorTarget,
    cfg: &GenerationConfig,
) -> Result<Mcq, SkipReason> {
    let descriptor = compute_descriptor(pose, target).map_err(|e| match e {
        GeometryError::DegenerateBone(_) => SkipReason::DegenerateBone,
        _ => SkipReason::OutOfRange,
    })?;
    let category = categorize(target.kind, descriptor.value, &cfg.thresholds).map_err(|_| SkipReason::OutOfRange)?;
    if category == Category::Aligned {
        return Err(SkipReason::Aligned);
    }
    let seed = option_seed(cfg.seed, image_id, target);
    let set = build_options(target, category, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|_| SkipReason::Aligned)?;
    Ok(Mcq {
        question_id: question_id(image_id, target),
        image_id: image_id.to_string(),
        kind: target.kind,
        target: *target,
        prompt: format_prompt(&set.options),
        options: set.options,
        correct_index: set.correct_index,
        provenance: Provenance {
            continuous_value: descriptor.value,
            category,
            threshold_config_id: cfg.thresholds.id(),
            seed,
            permutation: set.permutation,
            normalization: pose.source,
        },
    })
}

/// Samples up to `per_type_samples` distinct targets per kind and builds
/// their questions. Excluded targets become skip notes; when the kind's pool
/// runs dry a shortfall is recorded instead of failing the image.
pub fn generate_image_mcqs(record: &PoseRecord, cfg: &GenerationConfig) -> ImageMcqs {
    let mut out = ImageMcqs::default();
    let pose = match prepare_pose(record, cfg) {
        Ok(p) => p,
        Err(_) => {
            out.skips.push(SkipNote {
                image_id: record.image_id.clone(),
                target: None,
                reason: SkipReason::DegeneratePose,
            });
            for kind in DescriptorKind::ALL {
                out.shortfalls.push(Shortfall {
                    image_id: record.image_id.clone(),
                    kind,
                    requested: cfg.per_type_samples.min(catalog(kind).len()),
                    produced: 0,
                });
            }
            return out;
        }
    };
    for kind in DescriptorKind::ALL {
        let mut targets = catalog(kind);
        let budget = cfg.per_type_samples.min(targets.len());
        targets.shuffle(&mut ChaCha8Rng::seed_from_u64(sampling_seed(
            cfg.seed,
            &record.image_id,
            kind,
        )));
        let considered = if cfg.resample_on_aligned { targets.len() } else { budget };
        let mut produced = 0;
        for target in targets.iter().take(considered) {
            if produced == budget {
                break;
            }
            match build_mcq(&record.image_id, &pose, target, cfg) {
                Ok(mcq) => {
                    out.mcqs.push(mcq);
                    produced += 1;
                }
                Err(reason) => out.skips.push(SkipNote {
                    image_id: record.image_id.clone(),
                    target: Some(*target),
                    reason,
                }),
            }
        }
        if produced < budget {
            out.shortfalls.push(Shortfall {
                image_id: record.image_id.clone(),
                kind,
                requested: budget,
                produced,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub images: usize,
    pub mcqs: usize,
    pub mcqs_by_kind: BTreeMap<DescriptorKind, usize>,
    pub aligned_skips: usize,
    pub degenerate_skips: usize,
    pub shortfalls: usize,
}

impl GenerationSummary {
    fn absorb(&mut self, image: &ImageMcqs) {
        self.images += 1;
        self.mcqs += image.mcqs.len();
        for m in &image.mcqs {
            *self.mcqs_by_kind.entry(m.kind).or_default() += 1;
        }
        for s in &image.skips {
            match s.reason {
                SkipReason::Aligned => self.aligned_skips += 1,
                _ => self.degenerate_skips += 1,
            }
        }
        self.shortfalls += image.shortfalls.len();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub tool: String,
    pub version: String,
    pub config: GenerationConfig,
}

impl DatasetHeader {
    pub fn new(config: GenerationConfig) -> Self {
        DatasetHeader {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    header: DatasetHeader,
}

pub(crate) fn thread_pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool builds")
}

/// Streams generated questions for every manifest record into `out`.
/// `jobs == 0` uses all available cores; output bytes never depend on it.
pub fn generate_to_writer<I, W>(
    records: I,
    cfg: &GenerationConfig,
    mut out: W,
    jobs: usize,
) -> Result<GenerationSummary, DatasetError>
where
    I: IntoIterator<Item = Result<PoseRecord, DatasetError>>,
    W: Write,
{
    cfg.validate()?;
    let io_err = |e| DatasetError::io(Path::new("<output>"), e);
    let header = serde_json::to_string(&HeaderLine {
        header: DatasetHeader::new(cfg.clone()),
    })
    .expect("header serializes");
    writeln!(out, "{header}").map_err(io_err)?;

    let pool = thread_pool(jobs);
    let mut summary = GenerationSummary::default();
    for kind in DescriptorKind::ALL {
        summary.mcqs_by_kind.insert(kind, 0);
    }
    let mut records = records.into_iter();
    loop {
        let chunk = records.by_ref().take(CHUNK_SIZE).collect::<Result<Vec<_>, _>>()?;
        if chunk.is_empty() {
            break;
        }
        let rendered: Vec<(ImageMcqs, String)> = pool.install(|| {
            chunk
                .par_iter()
                .map(|record| {
                    let image = generate_image_mcqs(record, cfg);
                    let mut text = String::new();
                    for mcq in &image.mcqs {
                        text.push_str(&serde_json::to_string(mcq).expect("mcq serializes"));
                        text.push('\n');
                    }
                    (image, text)
                })
                .collect()
        });
        for (image, text) in &rendered {
            for skip in &image.skips {
                log::debug!("skip {} {:?}: {:?}", skip.image_id, skip.target, skip.reason);
            }
            summary.absorb(image);
            out.write_all(text.as_bytes()).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(summary)
}

pub fn generate_dataset(
    manifest: &Path,
    cfg: &GenerationConfig,
    out_path: &Path,
    jobs: usize,
) -> Result<GenerationSummary, DatasetError> {
    let records = load_manifest(manifest)?;
    let file = File::create(out_path).map_err(|e| DatasetError::io(out_path, e))?;
    generate_to_writer(records, cfg, BufWriter::new(file), jobs).map_err(|e| match e {
        DatasetError::Io { source, .. } => DatasetError::io(out_path, source),
        other => other,
    })
}

/// Header plus a stream of questions.
pub struct DatasetReader<R> {
    pub header: DatasetHeader,
    lines: Lines<R>,
    line_no: usize,
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(reader: R) -> Result<Self, DatasetError> {
        let mut lines = reader.lines();
        let mut line_no = 0;
        let header = loop {
            line_no += 1;
            let text = match lines.next() {
                None => return Err(DatasetError::MissingHeader),
                Some(t) => t.map_err(|e| DatasetError::Parse {
                    line: line_no,
                    reason: e.to_string(),
                })?,
            };
            if text.trim().is_empty() {
                continue;
            }
            let parsed: HeaderLine = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
                line: line_no,
                reason: format!("bad header: {e}"),
            })?;
            break parsed.header;
        };
        Ok(DatasetReader { header, lines, line_no })
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<Mcq, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = self.lines.next()?;
            self.line_no += 1;
            let line = self.line_no;
            let parsed = text
                .map_err(|e| e.to_string())
                .and_then(|t| {
                    if t.trim().is_empty() {
                        Ok(None)
                    } else {
                        serde_json::from_str::<Mcq>(&t).map(Some).map_err(|e| e.to_string())
                    }
                })
                .map_err(|reason| DatasetError::Parse { line, reason });
            match parsed {
                Ok(None) => continue,
                Ok(Some(m)) => return Some(Ok(m)),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn read_dataset(path: &Path) -> Result<DatasetReader<BufReader<File>>, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    DatasetReader::new(BufReader::new(file))
}

/// Ground-truth category counts per kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub total: u64,
    /// Every answerable label of each kind, in ordinal order, with its count.
    pub counts: BTreeMap<DescriptorKind, Vec<(Category, u64)>>,
}

impl LabelStats {
    pub fn count(&self, kind: DescriptorKind, category: Category) -> u64 {
        self.counts
            .get(&kind)
            .and_then(|row| row.iter().find(|(c, _)| *c == category))
            .map_or(0, |(_, n)| *n)
    }
}

fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl fmt::Display for LabelStats {
    /// One row per kind, labels by descending frequency: `label (1,234)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (kind, row) in &self.counts {
            let mut sorted = row.clone();
            sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let cells: Vec<String> = sorted
                .iter()
                .map(|(c, n)| format!("{} ({})", c.label(), group_thousands(*n)))
                .collect();
            writeln!(f, "{:<9} {}", kind.as_str(), cells.join(", "))?;
        }
        Ok(())
    }
}

pub fn label_stats<I>(mcqs: I) -> Result<LabelStats, DatasetError>
where
    I: IntoIterator<Item = Result<Mcq, DatasetError>>,
{
    let mut counts: BTreeMap<DescriptorKind, Vec<(Category, u64)>> = DescriptorKind::ALL
        .iter()
        .map(|&k| (k, Category::answers_for(k).iter().map(|&c| (c, 0)).collect()))
        .collect();
    let mut total = 0;
    for mcq in mcqs {
        let mcq = mcq?;
        let category = mcq.provenance.category;
        let slot = counts
            .get_mut(&mcq.kind)
            .and_then(|row| row.iter_mut().find(|(c, _)| *c == category))
            .ok_or_else(|| DatasetError::Parse {
                line: 0,
                reason: format!(
                    "question {} has label `{category}` foreign to {}",
                    mcq.question_id, mcq.kind
                ),
            })?;
        slot.1 += 1;
        total += 1;
    }
    Ok(LabelStats { total, counts })
}
