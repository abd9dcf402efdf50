use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    TruePositive,
    TrueNegative,
    FalsePositive,
    FalseNegative,
}

impl Outcome {
    /// Outcome of a yes/no prediction; "yes" is the positive class.
    pub fn of(gold: &str, predicted: &str) -> Self {
        match (gold == "yes", predicted == "yes") {
            (true, true) => Outcome::TruePositive,
            (false, false) => Outcome::TrueNegative,
            (false, true) => Outcome::FalsePositive,
            (true, false) => Outcome::FalseNegative,
        }
    }
}

/// (TP + TN) / (TP + FP + FN + TN).
pub fn accuracy(outcomes: &[Outcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let right = outcomes
        .iter()
        .filter(|o| matches!(o, Outcome::TruePositive | Outcome::TrueNegative))
        .count();
    Ok(right as f64 / outcomes.len() as f64)
}

/// Mean of per-class TP / (TP + FP); a class never predicted scores 0.
pub fn macro_precision(per_class: &[(usize, usize)]) -> Result<f64> {
    if per_class.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let total: f64 = per_class
        .iter()
        .map(|&(tp, fp)| {
            if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            }
        })
        .sum();
    Ok(total / per_class.len() as f64)
}

/// Per-class (TP, FP) over the union of gold and predicted classes.
pub fn class_counts<S: AsRef<str>>(pairs: &[(S, S)]) -> BTreeMap<String, (usize, usize)> {
    let classes: BTreeSet<&str> = pairs.iter().flat_map(|(g, p)| [g.as_ref(), p.as_ref()]).collect();
    let mut counts: BTreeMap<String, (usize, usize)> =
        classes.into_iter().map(|c| (c.to_string(), (0, 0))).collect();
    for (g, p) in pairs {
        let entry = counts.get_mut(p.as_ref()).expect("class collected");
        if g.as_ref() == p.as_ref() {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
    counts
}

/// Macro precision of (gold, predicted) label pairs.
pub fn macro_precision_of<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<f64> {
    let counts: Vec<(usize, usize)> = class_counts(pairs).into_values().collect();
    macro_precision(&counts)
}
