//! Scoring of model answers: per-kind accuracy, ordinal MAE, confusion
//! matrices, a uniform random baseline and reliability (calibration) tables.
//!
//! Unparseable answers count as wrong for accuracy, are left out of MAE and
//! land in a dedicated confusion column.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, Mcq, OPTION_LETTERS};
use crate::discretize::Category;
use crate::skeleton::{DescriptorKind, DescriptorTarget};
use crate::textgen::decode_statement;

pub const DEFAULT_CALIBRATION_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction for unknown question `{0}`")]
    UnknownQuestionId(String),
    #[error("more than one prediction for question `{0}`")]
    DuplicatePrediction(String),
    #[error("gold dataset repeats question `{0}`")]
    DuplicateGoldQuestion(String),
    #[error("prediction for `{0}` has no confidence")]
    MissingConfidence(String),
    #[error("prediction for `{question_id}` has invalid confidence: {reason}")]
    InvalidConfidence { question_id: String, reason: String },
    #[error("`{0}` has no ordinal index")]
    NotOrdinal(Category),
    #[error("gold question `{0}` has an option that matches no category")]
    InvalidGold(String),
    #[error("calibration needs at least one bin")]
    NoBins,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Ordinal class index: angle 0..=3 and distance 0..=2, by increasing value.
pub fn ordinal_index(category: Category) -> Result<usize, EvalError> {
    category.ordinal().ok_or(EvalError::NotOrdinal(category))
}

static LEADING_PAREN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^[\(\[]([a-d])[\)\]]").unwrap());
static LEADING_BARE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^([a-d])(?:[.:)\]]|$)").unwrap());
static ANSWER_IS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:answer|option)(?:\s+is)?\s*:?\s*[\(\[]?([a-d])\b").unwrap());
static ISOLATED_PAREN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\(([a-d])\)").unwrap());

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Maps a raw model answer to an option index, or `None` if unparseable.
///
/// Accepts a leading letter (`(b)`, `b)`, `B.`, `b`), an explicit
/// "answer: b", a single distinct parenthesized letter anywhere, or the
/// exact option text up to whitespace.
pub fn parse_answer(raw: &str, options: &[String]) -> Option<usize> {
    let n = options.len().min(OPTION_LETTERS.len());
    let to_index = |s: &str| {
        let c = s.chars().next()?.to_ascii_lowercase();
        OPTION_LETTERS[..n].iter().position(|&l| l == c)
    };
    let text = raw.trim();
    for re in [&*LEADING_PAREN, &*LEADING_BARE, &*ANSWER_IS] {
        if let Some(c) = re.captures(text) {
            return to_index(&c[1]);
        }
    }
    let letters: HashSet<char> = ISOLATED_PAREN
        .captures_iter(text)
        .filter_map(|c| c[1].chars().next())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if letters.len() == 1 {
        let c = letters.into_iter().next()?;
        return to_index(&c.to_string());
    }
    let wanted = normalize_ws(text);
    options.iter().position(|o| normalize_ws(o) == wanted)
}

/// Either one confidence for the stated answer or one per option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Confidence {
    Scalar(f64),
    PerOption(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub question_id: String,
    #[serde(default)]
    pub raw_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, EvalError> {
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_predictions(BufReader::new(file))
}

pub fn parse_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldQuestion {
    pub question_id: String,
    pub kind: DescriptorKind,
    pub target: DescriptorTarget,
    pub options: Vec<String>,
    pub correct_index: usize,
    pub category: Category,
    /// Category stated by each option, in option order.
    option_categories: Vec<Category>,
}

impl GoldQuestion {
    pub fn from_mcq(mcq: Mcq) -> Result<Self, EvalError> {
        let option_categories = mcq
            .options
            .iter()
            .map(|o| decode_statement(&mcq.target, o))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| EvalError::InvalidGold(mcq.question_id.clone()))?;
        let category = *option_categories
            .get(mcq.correct_index)
            .ok_or_else(|| EvalError::InvalidGold(mcq.question_id.clone()))?;
        Ok(GoldQuestion {
            question_id: mcq.question_id,
            kind: mcq.kind,
            target: mcq.target,
            options: mcq.options,
            correct_index: mcq.correct_index,
            category,
            option_categories,
        })
    }

    pub fn option_category(&self, index: usize) -> Option<Category> {
        self.option_categories.get(index).copied()
    }
}

/// Gold questions indexed by id.
#[derive(Debug, Clone, Default)]
pub struct GoldSet {
    questions: Vec<GoldQuestion>,
    by_id: HashMap<String, usize>,
}

impl GoldSet {
    pub fn from_mcqs<I>(mcqs: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = Result<Mcq, DatasetError>>,
    {
        let mut set = GoldSet::default();
        for mcq in mcqs {
            let q = GoldQuestion::from_mcq(mcq?)?;
            if set.by_id.insert(q.question_id.clone(), set.questions.len()).is_some() {
                return Err(EvalError::DuplicateGoldQuestion(q.question_id));
            }
            set.questions.push(q);
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::from_mcqs(crate::dataset::read_dataset(path)?)
    }

    pub fn get(&self, question_id: &str) -> Option<&GoldQuestion> {
        self.by_id.get(question_id).map(|&i| &self.questions[i])
    }

    pub fn questions(&self) -> &[GoldQuestion] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

/// A prediction matched to its gold question.
#[derive(Debug, Clone, Copy)]
struct Resolved<'a> {
    gold: &'a GoldQuestion,
    predicted: Option<usize>,
    confidence: Option<f64>,
}

impl Resolved<'_> {
    fn correct(&self) -> bool {
        self.predicted == Some(self.gold.correct_index)
    }
}

fn resolve<'a>(gold: &'a GoldSet, p: &PredictionRecord) -> Result<Resolved<'a>, EvalError> {
    let g = gold
        .get(&p.question_id)
        .ok_or_else(|| EvalError::UnknownQuestionId(p.question_id.clone()))?;
    let invalid = |reason: String| EvalError::InvalidConfidence {
        question_id: p.question_id.clone(),
        reason,
    };
    match &p.confidence {
        None => Ok(Resolved {
            gold: g,
            predicted: parse_answer(&p.raw_answer, &g.options),
            confidence: None,
        }),
        Some(Confidence::Scalar(c)) => {
            if !(0.0..=1.0).contains(c) {
                return Err(invalid(format!("{c} outside [0, 1]")));
            }
            Ok(Resolved {
                gold: g,
                predicted: parse_answer(&p.raw_answer, &g.options),
                confidence: Some(*c),
            })
        }
        Some(Confidence::PerOption(cs)) => {
            if cs.len() != g.options.len() {
                return Err(invalid(format!("{} values for {} options", cs.len(), g.options.len())));
            }
            if !cs.iter().all(|c| c.is_finite() && *c >= 0.0) {
                return Err(invalid("negative or non-finite value".into()));
            }
            let total: f64 = cs.iter().sum();
            if total <= 0.0 {
                return Err(invalid("values sum to zero".into()));
            }
            // First maximum wins ties.
            let (best, max) = cs.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc },
            );
            Ok(Resolved {
                gold: g,
                predicted: Some(best),
                confidence: Some(max / total),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct KindTally {
    count: u64,
    correct: u64,
    unparseable: u64,
    abs_error_sum: u64,
    ordinal_count: u64,
    /// Rows: gold label; columns: predicted label, then "unparseable".
    confusion: Vec<Vec<u64>>,
}

impl KindTally {
    fn new(kind: DescriptorKind) -> Self {
        let k = Category::answers_for(kind).len();
        KindTally {
            count: 0,
            correct: 0,
            unparseable: 0,
            abs_error_sum: 0,
            ordinal_count: 0,
            confusion: vec![vec![0; k + 1]; k],
        }
    }
}

#[derive(Debug, Clone)]
struct Tallies(BTreeMap<DescriptorKind, KindTally>);

impl Tallies {
    fn new() -> Self {
        Tallies(DescriptorKind::ALL.iter().map(|&k| (k, KindTally::new(k))).collect())
    }

    fn record(&mut self, gold: &GoldQuestion, predicted: Option<usize>) {
        let labels = Category::answers_for(gold.kind);
        let t = self.0.get_mut(&gold.kind).expect("tally per kind");
        let row = labels
            .iter()
            .position(|&c| c == gold.category)
            .expect("gold label in kind");
        t.count += 1;
        let pred_category = predicted.and_then(|i| gold.option_category(i));
        match pred_category {
            None => {
                t.unparseable += 1;
                t.confusion[row][labels.len()] += 1;
            }
            Some(pc) => {
                let col = labels.iter().position(|&c| c == pc).expect("option label in kind");
                t.confusion[row][col] += 1;
                if pc == gold.category {
                    t.correct += 1;
                }
                if let (Some(a), Some(b)) = (pc.ordinal(), gold.category.ordinal()) {
                    t.abs_error_sum += a.abs_diff(b) as u64;
                    t.ordinal_count += 1;
                }
            }
        }
    }

    fn into_report(self, calibration: Option<CalibrationTable>) -> MetricsReport {
        let mut per_kind = Vec::new();
        let mut confusion = Vec::new();
        let mut unparseable = 0;
        let mut mae = BTreeMap::new();
        for (kind, t) in self.0 {
            unparseable += t.unparseable;
            per_kind.push(KindMetrics {
                kind,
                count: t.count,
                correct: t.correct,
                unparseable: t.unparseable,
                accuracy: (t.count > 0).then(|| 100.0 * t.correct as f64 / t.count as f64),
            });
            mae.insert(
                kind,
                (t.ordinal_count > 0).then(|| t.abs_error_sum as f64 / t.ordinal_count as f64),
            );
            confusion.push(ConfusionMatrix {
                kind,
                labels: Category::answers_for(kind).to_vec(),
                counts: t.confusion,
            });
        }
        MetricsReport {
            per_kind,
            angle_mae: mae[&DescriptorKind::Angle],
            distance_mae: mae[&DescriptorKind::Distance],
            confusion,
            unparseable,
            calibration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindMetrics {
    pub kind: DescriptorKind,
    pub count: u64,
    pub correct: u64,
    pub unparseable: u64,
    /// Percent; `None` when the kind has no predictions.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub kind: DescriptorKind,
    pub labels: Vec<Category>,
    /// `counts[gold][predicted]`; the last column counts unparseable answers.
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub bins: Vec<CalibrationBin>,
    /// Count-weighted mean |accuracy - confidence| over populated bins.
    pub ece: f64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_kind: Vec<KindMetrics>,
    pub angle_mae: Option<f64>,
    pub distance_mae: Option<f64>,
    pub confusion: Vec<ConfusionMatrix>,
    pub unparseable: u64,
    pub calibration: Option<CalibrationTable>,
}

impl MetricsReport {
    pub fn kind(&self, kind: DescriptorKind) -> &KindMetrics {
        self.per_kind
            .iter()
            .find(|k| k.kind == kind)
            .expect("every kind reported")
    }

    pub fn confusion_for(&self, kind: DescriptorKind) -> &ConfusionMatrix {
        self.confusion
            .iter()
            .find(|c| c.kind == kind)
            .expect("every kind reported")
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.digits$}"))
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>9} {:>8} {:>11}",
            "metric", "value", "count", "unparseable"
        )?;
        for k in &self.per_kind {
            writeln!(
                f,
                "{:<14} {:>9} {:>8} {:>11}",
                format!("{}_acc", k.kind),
                fmt_opt(k.accuracy, 2),
                k.count,
                k.unparseable
            )?;
        }
        writeln!(f, "{:<14} {:>9}", "angle_mae", fmt_opt(self.angle_mae, 3))?;
        writeln!(f, "{:<14} {:>9}", "distance_mae", fmt_opt(self.distance_mae, 3))?;
        for m in &self.confusion {
            writeln!(f, "\nconfusion {} (rows gold, columns predicted)", m.kind)?;
            let mut header: Vec<String> = m.labels.iter().map(|c| c.label().to_string()).collect();
            header.push("unparseable".into());
            let width = header.iter().map(|h| h.len()).max().unwrap_or(0).max(6);
            write!(f, "{:width$}", "")?;
            for h in &header {
                write!(f, " {h:>width$}")?;
            }
            writeln!(f)?;
            for (label, row) in m.labels.iter().zip(&m.counts) {
                write!(f, "{:width$}", label.label())?;
                for c in row {
                    write!(f, " {c:>width$}")?;
                }
                writeln!(f)?;
            }
        }
        if let Some(cal) = &self.calibration {
            writeln!(f, "\ncalibration (ece {:.4}, n {})", cal.ece, cal.total)?;
            for b in &cal.bins {
                writeln!(
                    f,
                    "[{:.2}, {:.2}) count {:>8} conf {:>7} acc {:>7}",
                    b.lower,
                    b.upper,
                    b.count,
                    fmt_opt(b.mean_confidence, 4),
                    fmt_opt(b.accuracy, 4)
                )?;
            }
        }
        Ok(())
    }
}

fn resolve_all<'a>(gold: &'a GoldSet, predictions: &[PredictionRecord]) -> Result<Vec<Resolved<'a>>, EvalError> {
    let mut seen = HashSet::new();
    predictions
        .iter()
        .map(|p| {
            if !seen.insert(p.question_id.as_str()) {
                return Err(EvalError::DuplicatePrediction(p.question_id.clone()));
            }
            resolve(gold, p)
        })
        .collect()
}

/// Scores predictions against the gold set. With `calibration_bins`, every
/// prediction must carry a confidence and a reliability table is attached.
pub fn score(
    gold: &GoldSet,
    predictions: &[PredictionRecord],
    calibration_bins: Option<usize>,
) -> Result<MetricsReport, EvalError> {
    let resolved = resolve_all(gold, predictions)?;
    let mut tallies = Tallies::new();
    for r in &resolved {
        tallies.record(r.gold, r.predicted);
    }
    let calibration = calibration_bins.map(|n| calibration_table(&resolved, n)).transpose()?;
    Ok(tallies.into_report(calibration))
}

/// Uniform random guessing, pooled over `trials` passes of the gold set.
pub fn random_baseline(gold: &GoldSet, seed: u64, trials: usize) -> MetricsReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies = Tallies::new();
    for _ in 0..trials.max(1) {
        for q in gold.questions() {
            let pick = rng.gen_range(0..q.options.len());
            tallies.record(q, Some(pick));
        }
    }
    tallies.into_report(None)
}

fn calibration_table(resolved: &[Resolved<'_>], n_bins: usize) -> Result<CalibrationTable, EvalError> {
    if n_bins == 0 {
        return Err(EvalError::NoBins);
    }
    let mut bins: Vec<(Vec<f64>, u64)> = vec![(Vec::new(), 0); n_bins];
    for r in resolved {
        let c = r
            .confidence
            .ok_or_else(|| EvalError::MissingConfidence(r.gold.question_id.clone()))?;
        let i = ((c * n_bins as f64) as usize).min(n_bins - 1);
        bins[i].0.push(c);
        bins[i].1 += r.correct() as u64;
    }
    let total = resolved.len() as u64;
    let mut ece = 0.0;
    let bins = bins
        .into_iter()
        .enumerate()
        .map(|(i, (mut confs, correct))| {
            // Sorted summation keeps the table independent of input order.
            confs.sort_by(f64::total_cmp);
            let count = confs.len() as u64;
            let (mean_confidence, accuracy) = if count > 0 {
                let mean = confs.iter().sum::<f64>() / count as f64;
                let acc = correct as f64 / count as f64;
                ece += count as f64 / total as f64 * (acc - mean).abs();
                (Some(mean), Some(acc))
            } else {
                (None, None)
            };
            CalibrationBin {
                lower: i as f64 / n_bins as f64,
                upper: (i + 1) as f64 / n_bins as f64,
                count,
                mean_confidence,
                accuracy,
            }
        })
        .collect();
    Ok(CalibrationTable { bins, ece, total })
}

/// Reliability table over confidence-tagged predictions.
pub fn reliability(
    gold: &GoldSet,
    predictions: &[PredictionRecord],
    n_bins: usize,
) -> Result<CalibrationTable, EvalError> {
    let resolved = resolve_all(gold, predictions)?;
    calibration_table(&resolved, n_bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{format_prompt, Provenance};
    use crate::geometry::NormalizationSource;
    use crate::skeleton::{catalog, JointId};
    use crate::textgen::render_statement;

    fn options(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("Statement number {i}.")).collect()
    }

    #[test]
    fn ordinal_mapping() {
        assert_eq!(ordinal_index(Category::BentCompletelyInward).unwrap(), 0);
        assert_eq!(ordinal_index(Category::BentSlightlyInward).unwrap(), 2);
        assert_eq!(ordinal_index(Category::SpreadWideFrom).unwrap(), 2);
        assert!(matches!(
            ordinal_index(Category::Above),
            Err(EvalError::NotOrdinal(Category::Above))
        ));
    }

    #[test]
    fn parses_letters() {
        let o = options(4);
        assert_eq!(parse_answer("(b)", &o), Some(1));
        assert_eq!(parse_answer("  B ", &o), Some(1));
        assert_eq!(parse_answer("c.", &o), Some(2));
        assert_eq!(parse_answer("d) Statement number 3.", &o), Some(3));
        assert_eq!(parse_answer("(A) something", &o), Some(0));
        assert_eq!(parse_answer("The answer is (c).", &o), Some(2));
        assert_eq!(parse_answer("Answer: d", &o), Some(3));
        assert_eq!(parse_answer("I think (b) fits best", &o), Some(1));
        assert_eq!(parse_answer("(d)", &options(2)), None);
    }

    #[test]
    fn parses_text_and_rejects_noise() {
        let o = options(4);
        assert_eq!(parse_answer("Statement number 0.", &o), Some(0));
        assert_eq!(parse_answer("  Statement   number\n2. ", &o), Some(2));
        assert_eq!(parse_answer("I am not sure", &o), None);
        assert_eq!(parse_answer("a hand with bent fingers", &o), None);
        assert_eq!(parse_answer("either (a) or (b)", &o), None);
        assert_eq!(parse_answer("", &o), None);
    }

    fn gold_question(id: &str, target: DescriptorTarget, truth: Category) -> Mcq {
        let opts: Vec<String> = Category::answers_for(target.kind)
            .iter()
            .map(|&c| render_statement(&target, c).unwrap().text)
            .collect();
        let correct = Category::answers_for(target.kind)
            .iter()
            .position(|&c| c == truth)
            .unwrap();
        Mcq {
            question_id: id.into(),
            image_id: "img".into(),
            kind: target.kind,
            target,
            prompt: format_prompt(&opts),
            options: opts.clone(),
            correct_index: correct,
            provenance: Provenance {
                continuous_value: 0.0,
                category: truth,
                threshold_config_id: String::new(),
                seed: 0,
                permutation: (0..opts.len()).collect(),
                normalization: NormalizationSource::Joints,
            },
        }
    }

    fn pred(id: &str, letter: &str) -> PredictionRecord {
        PredictionRecord {
            question_id: id.into(),
            raw_answer: letter.into(),
            confidence: None,
        }
    }

    #[test]
    fn hand_example_mae() {
        let t = DescriptorTarget::angle(JointId::INDEX_PIP);
        let gold = GoldSet::from_mcqs(vec![
            Ok(gold_question("q0", t, Category::BentCompletelyInward)),
            Ok(gold_question(
                "q1",
                DescriptorTarget::angle(JointId::RING_PIP),
                Category::Straight,
            )),
        ])
        .unwrap();
        // Options are in ordinal order here, so (d) is "straight".
        let report = score(&gold, &[pred("q0", "(d)"), pred("q1", "(d)")], None).unwrap();
        assert_eq!(report.kind(DescriptorKind::Angle).accuracy, Some(50.0));
        assert_eq!(report.angle_mae, Some(1.5));
        assert_eq!(report.distance_mae, None);
        let m = report.confusion_for(DescriptorKind::Angle);
        assert_eq!(m.counts[0][3], 1);
        assert_eq!(m.counts[3][3], 1);
    }

    #[test]
    fn close_biased_answerer() {
        // 10 close, 40 spread, 50 spread-wide; always answering "close to".
        let targets = catalog(DescriptorKind::Distance);
        let mut mcqs = Vec::new();
        for i in 0..100 {
            let truth = match i {
                0..=9 => Category::CloseTo,
                10..=49 => Category::SpreadFrom,
                _ => Category::SpreadWideFrom,
            };
            mcqs.push(Ok(gold_question(&format!("q{i}"), targets[i % 23], truth)));
        }
        let gold = GoldSet::from_mcqs(mcqs).unwrap();
        let preds: Vec<_> = (0..100).map(|i| pred(&format!("q{i}"), "a")).collect();
        let r = score(&gold, &preds, None).unwrap();
        assert_eq!(r.kind(DescriptorKind::Distance).accuracy, Some(10.0));
        assert!((r.distance_mae.unwrap() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn unparseable_policy() {
        let t = DescriptorTarget::pair(DescriptorKind::Distance, JointId::THUMB_TIP, JointId::INDEX_TIP);
        let gold = GoldSet::from_mcqs(vec![
            Ok(gold_question("q0", t, Category::CloseTo)),
            Ok(gold_question("q1", t, Category::SpreadFrom)),
        ])
        .unwrap();
        let r = score(&gold, &[pred("q0", "a"), pred("q1", "no idea")], None).unwrap();
        let k = r.kind(DescriptorKind::Distance);
        assert_eq!((k.count, k.correct, k.unparseable), (2, 1, 1));
        assert_eq!(r.distance_mae, Some(0.0));
        assert_eq!(r.confusion_for(DescriptorKind::Distance).counts[1][3], 1);
        assert_eq!(r.unparseable, 1);
    }

    #[test]
    fn rejects_unknown_and_duplicate_predictions() {
        let t = DescriptorTarget::angle(JointId::INDEX_PIP);
        let gold = GoldSet::from_mcqs(vec![Ok(gold_question("q0", t, Category::Straight))]).unwrap();
        assert!(matches!(
            score(&gold, &[pred("zz", "a")], None),
            Err(EvalError::UnknownQuestionId(_))
        ));
        assert!(matches!(
            score(&gold, &[pred("q0", "a"), pred("q0", "b")], None),
            Err(EvalError::DuplicatePrediction(_))
        ));
        assert!(matches!(
            GoldSet::from_mcqs(vec![
                Ok(gold_question("q0", t, Category::Straight)),
                Ok(gold_question("q0", t, Category::Straight))
            ]),
            Err(EvalError::DuplicateGoldQuestion(_))
        ));
    }

    #[test]
    fn calibration_extremes() {
        let t = DescriptorTarget::angle(JointId::INDEX_PIP);
        let gold = GoldSet::from_mcqs(
            (0..20)
                .map(|i| Ok(gold_question(&format!("q{i}"), t, Category::BentInward)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let with = |letter: &str| -> Vec<PredictionRecord> {
            (0..20)
                .map(|i| PredictionRecord {
                    question_id: format!("q{i}"),
                    raw_answer: letter.into(),
                    confidence: Some(Confidence::Scalar(1.0)),
                })
                .collect()
        };
        let right = reliability(&gold, &with("b"), 10).unwrap();
        assert_eq!(right.ece, 0.0);
        assert_eq!(right.bins.iter().filter(|b| b.count > 0).count(), 1);
        assert_eq!(right.bins[9].accuracy, Some(1.0));
        let wrong = reliability(&gold, &with("a"), 10).unwrap();
        assert_eq!(wrong.ece, 1.0);

        let missing = vec![pred("q0", "a")];
        assert!(matches!(
            reliability(&gold, &missing, 10),
            Err(EvalError::MissingConfidence(_))
        ));
        assert!(matches!(reliability(&gold, &with("a"), 0), Err(EvalError::NoBins)));
    }

    #[test]
    fn per_option_confidences() {
        let t = DescriptorTarget::pair(DescriptorKind::RelposX, JointId::THUMB_TIP, JointId::INDEX_TIP);
        let gold = GoldSet::from_mcqs(vec![Ok(gold_question("q0", t, Category::RightOf))]).unwrap();
        let p = PredictionRecord {
            question_id: "q0".into(),
            raw_answer: "(a)".into(),
            confidence: Some(Confidence::PerOption(vec![1.0, 3.0])),
        };
        let r = score(&gold, std::slice::from_ref(&p), Some(4)).unwrap();
        assert_eq!(r.kind(DescriptorKind::RelposX).correct, 1);
        let cal = r.calibration.unwrap();
        assert_eq!(cal.bins[3].mean_confidence, Some(0.75));
        let bad = PredictionRecord {
            confidence: Some(Confidence::PerOption(vec![1.0])),
            ..p
        };
        assert!(matches!(
            score(&gold, &[bad], None),
            Err(EvalError::InvalidConfidence { .. })
        ));
    }

    #[test]
    fn prediction_file_format() {
        let text = "{\"question_id\":\"q0\",\"raw_answer\":\"(a)\"}\n\n{\"question_id\":\"q1\",\"raw_answer\":\"b\",\"confidence\":0.5}\n{\"question_id\":\"q2\",\"confidence\":[0.2,0.8]}\n";
        let preds = parse_predictions(io::Cursor::new(text)).unwrap();
        assert_eq!(preds.len(), 3);
        assert_eq!(preds[1].confidence, Some(Confidence::Scalar(0.5)));
        assert_eq!(preds[2].confidence, Some(Confidence::PerOption(vec![0.2, 0.8])));
        assert!(matches!(
            parse_predictions(io::Cursor::new("{not json}\n")),
            Err(EvalError::Parse { line: 1, .. })
        ));
    }
}
