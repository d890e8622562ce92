//! Sentence templates and multiple-choice option pools.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::discretize::Category;
use crate::skeleton::{joint_display_name, DescriptorTarget};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextgenError {
    #[error("\"aligned\" has no statement form")]
    AlignedNotRenderable,
    #[error("ground truth for {0} is aligned; target must be skipped")]
    AlignedGroundTruth(DescriptorTarget),
    #[error("category `{category}` does not apply to {target}")]
    CategoryMismatch {
        target: DescriptorTarget,
        category: Category,
    },
    #[error("malformed target {0}")]
    MalformedTarget(DescriptorTarget),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub text: String,
    pub target: DescriptorTarget,
    pub category: Category,
}

/// Fills the angle or pair template for one (target, category).
pub fn render_statement(target: &DescriptorTarget, category: Category) -> Result<Statement, TextgenError> {
    if category == Category::Aligned {
        return Err(TextgenError::AlignedNotRenderable);
    }
    if !category.belongs_to(target.kind) {
        return Err(TextgenError::CategoryMismatch {
            target: *target,
            category,
        });
    }
    let subject = joint_display_name(target.subject);
    let text = match (target.kind.is_pair(), target.object) {
        (false, None) => format!("The {subject} is {}.", category.label()),
        (true, Some(o)) => format!("The {subject} is {} the {}.", category.label(), joint_display_name(o)),
        _ => return Err(TextgenError::MalformedTarget(*target)),
    };
    Ok(Statement {
        text,
        target: *target,
        category,
    })
}

/// Ordered answer options for one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionSet {
    pub options: Vec<String>,
    pub correct_index: usize,
    /// `options[i]` states `Category::answers_for(kind)[permutation[i]]`.
    pub permutation: Vec<usize>,
}

/// One statement per answerable category of the target's kind, shuffled by
/// `rng`; the truth's position is tracked in `correct_index`.
pub fn build_options<R: Rng + ?Sized>(
    target: &DescriptorTarget,
    truth: Category,
    rng: &mut R,
) -> Result<OptionSet, TextgenError> {
    if truth == Category::Aligned {
        return Err(TextgenError::AlignedGroundTruth(*target));
    }
    let answers = Category::answers_for(target.kind);
    let truth_rank = answers
        .iter()
        .position(|&c| c == truth)
        .ok_or(TextgenError::CategoryMismatch {
            target: *target,
            category: truth,
        })?;
    let mut permutation: Vec<usize> = (0..answers.len()).collect();
    permutation.shuffle(rng);
    let options = permutation
        .iter()
        .map(|&r| render_statement(target, answers[r]).map(|s| s.text))
        .collect::<Result<Vec<_>, _>>()?;
    let correct_index = permutation
        .iter()
        .position(|&r| r == truth_rank)
        .expect("truth is in the pool");
    Ok(OptionSet {
        options,
        correct_index,
        permutation,
    })
}

/// Recovers the category a rendered option states about `target`.
pub fn decode_statement(target: &DescriptorTarget, text: &str) -> Option<Category> {
    Category::answers_for(target.kind)
        .iter()
        .copied()
        .find(|&c| render_statement(target, c).map(|s| s.text == text).unwrap_or(false))
}
