//! Question answering over knowledge graphs via symbolic programs.

pub mod encode;
pub mod logic;
pub mod metrics;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use encode::{bundled_questions, kg_to_facts, Encoder, Question, QuestionKind};
pub use logic::{Literal, SolveResult, Status, SymbolicProgram};
pub use metrics::{accuracy, macro_precision, Outcome};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

/// One line of a gold (or predictions) file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldAnswers {
    pub note_id: String,
    pub answers: BTreeMap<String, String>,
}

pub fn parse_gold_jsonl(text: &str) -> Result<Vec<GoldAnswers>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Schema(format!("line {}: {e}", i + 1))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub per_question: BTreeMap<String, QuestionScore>,
    pub yes_no_accuracy: Option<f64>,
    pub multiclass_macro_precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// A scored (question, gold, predicted) triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgement {
    pub note_id: String,
    pub question: u8,
    pub gold: String,
    pub predicted: String,
}

/// Scores judgements. Multiclass precision pools all multiclass questions,
/// keeping their classes apart by prefixing the question id.
pub fn score(judgements: &[Judgement], questions: &[Question], warnings: Vec<String>) -> QaReport {
    let kind_of = |id: u8| questions.iter().find(|q| q.id == id).map(|q| q.kind);
    let mut per_question = BTreeMap::new();
    let mut yes_no = Vec::new();
    let mut pooled = Vec::new();
    for q in questions {
        let mine: Vec<&Judgement> = judgements.iter().filter(|j| j.question == q.id).collect();
        if mine.is_empty() {
            continue;
        }
        let pairs: Vec<(&str, &str)> = mine
            .iter()
            .map(|j| (j.gold.as_str(), j.predicted.as_str()))
            .collect();
        let entry = match q.kind {
            QuestionKind::YesNo => {
                let outcomes: Vec<Outcome> = pairs.iter().map(|(g, p)| Outcome::of(g, p)).collect();
                yes_no.extend(outcomes.iter().copied());
                QuestionScore {
                    n: mine.len(),
                    accuracy: accuracy(&outcomes).ok(),
                    macro_precision: None,
                }
            }
            QuestionKind::Multiclass => QuestionScore {
                n: mine.len(),
                accuracy: None,
                macro_precision: metrics::macro_precision_of(&pairs).ok(),
            },
        };
        per_question.insert(q.id.to_string(), entry);
    }
    for j in judgements {
        if kind_of(j.question) == Some(QuestionKind::Multiclass) {
            pooled.push((
                format!("q{}:{}", j.question, j.gold),
                format!("q{}:{}", j.question, j.predicted),
            ));
        }
    }
    QaReport {
        per_question,
        yes_no_accuracy: accuracy(&yes_no).ok(),
        multiclass_macro_precision: metrics::macro_precision_of(&pooled).ok(),
        warnings,
    }
}

/// Answers every gold question from the matching graph and scores the run.
pub fn evaluate(
    graphs: &[KnowledgeGraph],
    gold: &[GoldAnswers],
    questions: &[Question],
    encoder: &Encoder,
) -> Result<QaReport> {
    let by_id: BTreeMap<&str, &KnowledgeGraph> = graphs.iter().map(|g| (g.note_id.as_str(), g)).collect();
    let mut judgements = Vec::new();
    let mut warnings = Vec::new();
    for g in gold {
        let Some(graph) = by_id.get(g.note_id.as_str()) else {
            warnings.push(format!("no graph for note {}", g.note_id));
            continue;
        };
        let facts = kg_to_facts(graph);
        for (qid, answer) in &g.answers {
            let Some(q) = questions.iter().find(|q| q.id.to_string() == *qid) else {
                warnings.push(format!("note {}: unknown question {qid}", g.note_id));
                continue;
            };
            encoder.constraint(q, answer)?;
            judgements.push(Judgement {
                note_id: g.note_id.clone(),
                question: q.id,
                gold: answer.clone(),
                predicted: encoder.answer(q, &facts)?,
            });
        }
    }
    Ok(score(&judgements, questions, warnings))
}

/// Scores an external predictions file in the gold format.
pub fn evaluate_predictions(
    predictions: &[GoldAnswers],
    gold: &[GoldAnswers],
    questions: &[Question],
) -> QaReport {
    let by_id: BTreeMap<&str, &GoldAnswers> = predictions.iter().map(|p| (p.note_id.as_str(), p)).collect();
    let mut judgements = Vec::new();
    let mut warnings = Vec::new();
    for g in gold {
        for (qid, answer) in &g.answers {
            let Some(q) = questions.iter().find(|q| q.id.to_string() == *qid) else {
                warnings.push(format!("note {}: unknown question {qid}", g.note_id));
                continue;
            };
            match by_id.get(g.note_id.as_str()).and_then(|p| p.answers.get(qid)) {
                Some(pred) => judgements.push(Judgement {
                    note_id: g.note_id.clone(),
                    question: q.id,
                    gold: answer.clone(),
                    predicted: pred.clone(),
                }),
                None => warnings.push(format!("note {}: no prediction for question {qid}", g.note_id)),
            }
        }
    }
    score(&judgements, questions, warnings)
}
