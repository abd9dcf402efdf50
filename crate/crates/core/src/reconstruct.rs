//! Graph-to-text decoding and lexical similarity scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeKind, Relation, PATIENT_ID};

const STOPWORDS: &str = include_str!("../data/stopwords.txt");

pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|w| !w.is_empty() && !w.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn stopwords() -> &'static BTreeSet<String> {
    static SET: OnceLock<BTreeSet<String>> = OnceLock::new();
    SET.get_or_init(|| parse_stopwords(STOPWORDS))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub note_id: String,
    pub reconstruction: String,
    pub sts: f64,
}

/// One clause per symptom in node-id order, joined with "and".
pub fn graph_to_text(graph: &KnowledgeGraph) -> String {
    let mut clauses = Vec::new();
    for symptom in graph.symptoms() {
        let negated = graph.has_edge(PATIENT_ID, &symptom.id, &Relation::DoesNotHaveSymptom);
        if negated {
            clauses.push(format!("the patient does not have {}", symptom.label));
            continue;
        }
        let mut severities = Vec::new();
        let mut tail = Vec::new();
        for e in graph.edges() {
            if e.src != symptom.id {
                continue;
            }
            let Some(dst) = graph.node(&e.dst) else { continue };
            match (&e.relation, dst.kind) {
                (Relation::HasSeverity, _) => severities.push(dst.label.as_str()),
                (Relation::HasDuration, _) => tail.push(format!("for {}", dst.label)),
                (Relation::Other(rel), NodeKind::Other | NodeKind::Symptom) => {
                    tail.push(format!("{rel} {}", dst.label))
                }
                _ => {}
            }
        }
        let mut words = vec!["the patient has".to_string()];
        words.extend(severities.iter().map(|s| s.to_string()));
        words.push(symptom.label.clone());
        words.extend(tail);
        clauses.push(words.join(" "));
    }
    clauses.join(" and ")
}

fn content_counts(text: &str, stop: &BTreeSet<String>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for raw in text.split_whitespace() {
        let tok: String = raw
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect();
        if tok.is_empty() || stop.contains(&tok) {
            continue;
        }
        *counts.entry(tok).or_insert(0) += 1;
    }
    counts
}

/// Cosine similarity of content-word frequency vectors.
///
/// Two texts with no content words are identical (1.0); one empty side
/// scores 0.0.
pub fn sts(a: &str, b: &str) -> f64 {
    sts_with(a, b, stopwords())
}

pub fn sts_with(a: &str, b: &str, stop: &BTreeSet<String>) -> f64 {
    let va = content_counts(a, stop);
    let vb = content_counts(b, stop);
    match (va.is_empty(), vb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ if va == vb => return 1.0,
        _ => {}
    }
    let dot: usize = va.iter().map(|(k, x)| x * vb.get(k).copied().unwrap_or(0)).sum();
    let sq = |v: &BTreeMap<String, usize>| v.values().map(|x| x * x).sum::<usize>();
    (dot as f64 / ((sq(&va) * sq(&vb)) as f64).sqrt()).clamp(0.0, 1.0)
}

pub fn mean_sts<A: AsRef<str>, B: AsRef<str>>(pairs: &[(A, B)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let total: f64 = pairs.iter().map(|(a, b)| sts(a.as_ref(), b.as_ref())).sum();
    Ok(total / pairs.len() as f64)
}

pub fn reconstruct(graph: &KnowledgeGraph, source: &str, stop: &BTreeSet<String>) -> Reconstruction {
    let text = graph_to_text(graph);
    Reconstruction {
        note_id: graph.note_id.clone(),
        sts: sts_with(source, &text, stop),
        reconstruction: text,
    }
}
