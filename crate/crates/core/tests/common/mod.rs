#![allow(dead_code)]

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use handvqa::dataset::{generate_to_writer, DatasetReader, GenerationConfig, Mcq, PoseRecord};
use handvqa::synthetic::{separated_pose, uniform_pose};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn separated_records(n: usize, seed: u64) -> Vec<PoseRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| PoseRecord::new(format!("sep_{i:06}"), separated_pose(&mut rng)))
        .collect()
}

pub fn uniform_records(n: usize, seed: u64) -> Vec<PoseRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| PoseRecord::new(format!("uni_{i:06}"), uniform_pose(&mut rng)))
        .collect()
}

pub fn write_manifest(dir: &Path, name: &str, records: &[PoseRecord]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::new();
    for r in records {
        text.push_str(&r.to_manifest_line());
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    path
}

/// Generates in memory and parses the result back.
pub fn generate_mcqs(records: &[PoseRecord], cfg: &GenerationConfig) -> Vec<Mcq> {
    let mut buf = Vec::new();
    generate_to_writer(records.iter().cloned().map(Ok), cfg, &mut buf, 0).unwrap();
    DatasetReader::new(Cursor::new(buf))
        .unwrap()
        .collect::<Result<Vec<_>, _>>()
        .unwrap()
}

pub const REF_LABELS: [(&str, &[&str]); 5] = [
    (
        "angle",
        &[
            "bent completely inward",
            "bent inward",
            "bent slightly inward",
            "straight",
        ],
    ),
    ("distance", &["close to", "spread from", "spread wide from"]),
    ("relpos_x", &["at the left of", "at the right of"]),
    ("relpos_y", &["below", "above"]),
    ("relpos_z", &["behind", "in front of"]),
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct RefKind {
    pub count: u64,
    pub correct: u64,
    pub unparseable: u64,
    pub abs_error: u64,
    pub ordinal: u64,
    /// `[gold][pred]`, last column unparseable.
    pub confusion: Vec<Vec<u64>>,
}

/// Brute-force scorer over (gold, raw answer) pairs. Answers are either
/// `(x)` with a letter, exact option text, or anything else (unparseable).
/// Option labels come from the stored permutation, not from the text.
pub fn reference_score(gold: &[Mcq], answers: &[(String, String)]) -> Vec<RefKind> {
    let mut out: Vec<RefKind> = REF_LABELS
        .iter()
        .map(|(_, labels)| RefKind {
            confusion: vec![vec![0; labels.len() + 1]; labels.len()],
            ..RefKind::default()
        })
        .collect();
    for (qid, raw) in answers {
        let g = gold.iter().find(|m| &m.question_id == qid).expect("known question");
        let k = REF_LABELS
            .iter()
            .position(|(name, _)| *name == g.kind.as_str())
            .unwrap();
        let n_labels = REF_LABELS[k].1.len();
        let perm = &g.provenance.permutation;
        let letters = ['a', 'b', 'c', 'd'];
        let picked = if raw.len() == 3 && raw.starts_with('(') && raw.ends_with(')') {
            letters
                .iter()
                .position(|&l| raw.chars().nth(1) == Some(l))
                .filter(|&i| i < g.options.len())
        } else {
            g.options.iter().position(|o| o == raw)
        };
        let gold_rank = perm[g.correct_index];
        let t = &mut out[k];
        t.count += 1;
        match picked {
            None => {
                t.unparseable += 1;
                t.confusion[gold_rank][n_labels] += 1;
            }
            Some(i) => {
                let pred_rank = perm[i];
                t.confusion[gold_rank][pred_rank] += 1;
                if pred_rank == gold_rank {
                    t.correct += 1;
                }
                if k < 2 {
                    t.abs_error += pred_rank.abs_diff(gold_rank) as u64;
                    t.ordinal += 1;
                }
            }
        }
    }
    out
}

/// Rotation matrix of a uniformly random unit quaternion.
pub fn random_rotation<R: rand::Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    let [w, x, y, z] = loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            break v.map(|a| a / n);
        }
    };
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}
