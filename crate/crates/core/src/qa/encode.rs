//! Graph facts, question rules and gold-answer constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::logic::{c, neg, pos, v, Atom, BodyLiteral, Literal, Rule, SymbolicProgram};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeKind, Relation, PATIENT_ID};
use crate::lexicon::{concept_atom, Lexicon};

const QUESTIONS: &str = include_str!("../../data/questions.json");
const SEVERITY: &str = include_str!("../../data/severity_classes.json");
const ONSET: &str = include_str!("../../data/onset_bins.json");

pub const SEVERITY_RANK: [&str; 3] = ["severe", "moderate", "mild"];
pub const ONSET_RANK: [&str; 3] = ["over_14_days", "3_to_14_days", "under_3_days"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    YesNo,
    Multiclass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: u8,
    pub text: String,
    pub kind: QuestionKind,
    /// Concept id for yes/no questions, "severity" or "onset" otherwise.
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
}

impl Question {
    pub fn answer_domain(&self) -> Vec<String> {
        match self.kind {
            QuestionKind::YesNo => vec!["yes".into(), "no".into()],
            QuestionKind::Multiclass => self.classes.clone(),
        }
    }

    fn check_answer(&self, answer: &str) -> Result<()> {
        if self.answer_domain().iter().any(|a| a == answer) {
            Ok(())
        } else {
            Err(Error::InvalidAnswer {
                question: self.id,
                answer: answer.into(),
            })
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_questions(text: &str) -> Result<Vec<Question>> {
    let qs: Vec<Question> = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let mut seen = BTreeSet::new();
    for q in &qs {
        if !seen.insert(q.id) {
            return Err(Error::Schema(format!("question {} listed twice", q.id)));
        }
        let valid = match q.kind {
            QuestionKind::YesNo => q.classes.is_empty(),
            QuestionKind::Multiclass => {
                matches!(q.target.as_str(), "severity" | "onset") && !q.classes.is_empty()
            }
        };
        if !valid {
            return Err(Error::Schema(format!(
                "question {} has an inconsistent target",
                q.id
            )));
        }
    }
    Ok(qs)
}

pub fn bundled_questions() -> Vec<Question> {
    parse_questions(QUESTIONS).expect("bundled questions are valid")
}

pub fn load_questions(path: impl AsRef<Path>) -> Result<Vec<Question>> {
    parse_questions(&read(path.as_ref())?)
}

/// Severity cue -> class, where "modifier" cues count as `modifier_class`
/// only when no graded cue is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeverityTable {
    pub cues: BTreeMap<String, String>,
    pub modifier_class: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnsetTable {
    pub number_words: BTreeMap<String, u32>,
    pub unit_days: BTreeMap<String, u32>,
    pub fixed_phrases: BTreeMap<String, u32>,
    pub under_3_days_below: u32,
    pub over_14_days_above: u32,
}

fn parse_table<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl SeverityTable {
    pub fn bundled() -> Self {
        parse_table(SEVERITY).expect("bundled severity table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let t: Self = parse_table(&read(path.as_ref())?)?;
        let known = |c: &str| SEVERITY_RANK.contains(&c) || c == "modifier";
        if let Some((cue, class)) = t.cues.iter().find(|(_, c)| !known(c)) {
            return Err(Error::Config(format!(
                "cue {cue:?} maps to unknown class {class:?}"
            )));
        }
        if !SEVERITY_RANK.contains(&t.modifier_class.as_str()) {
            return Err(Error::Config(format!(
                "unknown modifier class {:?}",
                t.modifier_class
            )));
        }
        Ok(t)
    }
}

impl OnsetTable {
    pub fn bundled() -> Self {
        parse_table(ONSET).expect("bundled onset table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        parse_table(&read(path.as_ref())?)
    }

    /// Approximate age in days of a verbatim duration phrase.
    pub fn days(&self, phrase: &str) -> Option<u32> {
        let text = phrase.trim().to_lowercase();
        if let Some(d) = self.fixed_phrases.get(&text) {
            return Some(*d);
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        for (i, tok) in tokens.iter().enumerate() {
            let Some(unit) = self.unit_days.get(*tok) else {
                continue;
            };
            // nearest count to the left, skipping "of"
            let mut j = i;
            while j > 0 && tokens[j - 1] == "of" {
                j -= 1;
            }
            let count = j.checked_sub(1).and_then(|k| self.count(tokens[k])).unwrap_or(1);
            return Some(count * unit);
        }
        self.fixed_phrases
            .iter()
            .find(|(p, _)| text.ends_with(p.as_str()))
            .map(|(_, d)| *d)
    }

    fn count(&self, tok: &str) -> Option<u32> {
        tok.parse().ok().or_else(|| self.number_words.get(tok).copied())
    }

    pub fn class(&self, phrase: &str) -> Option<&'static str> {
        let d = self.days(phrase)?;
        Some(if d < self.under_3_days_below {
            "under_3_days"
        } else if d > self.over_14_days_above {
            "over_14_days"
        } else {
            "3_to_14_days"
        })
    }
}

/// Graph edges as ground literals.
pub fn kg_to_facts(graph: &KnowledgeGraph) -> BTreeSet<Literal> {
    let mut facts = BTreeSet::new();
    let atom = |id: &str| graph.node(id).map(|n| concept_atom(&n.label));
    for e in graph.edges() {
        let (Some(src), Some(dst)) = (graph.node(&e.src), graph.node(&e.dst)) else {
            continue;
        };
        let lit = match (&e.relation, src.kind, dst.kind) {
            (Relation::HasSymptom, NodeKind::Patient, NodeKind::Symptom) => {
                Literal::new("has_symptom", [PATIENT_ID.to_string(), atom(&e.dst).unwrap()])
            }
            (Relation::DoesNotHaveSymptom, NodeKind::Patient, NodeKind::Symptom) => {
                Literal::new("not_has_symptom", [PATIENT_ID.to_string(), atom(&e.dst).unwrap()])
            }
            (Relation::HasSeverity, NodeKind::Symptom, NodeKind::Severity) => {
                Literal::new("severity", [atom(&e.src).unwrap(), atom(&e.dst).unwrap()])
            }
            (Relation::HasDuration, NodeKind::Symptom, NodeKind::Duration) => {
                Literal::new("duration", [atom(&e.src).unwrap(), dst.label.clone()])
            }
            _ => continue,
        };
        facts.insert(lit);
    }
    facts
}

fn has_symptom(t: crate::qa::logic::Term) -> Atom {
    Atom::new("has_symptom", vec![c(PATIENT_ID), t])
}

/// Ranks candidate classes: the highest present candidate becomes the class,
/// `fallback` applies when none is present.
fn ranked_rules(cand: &str, class: &str, ranked: &[&str], fallback: &str) -> Vec<Rule> {
    let graded = format!("{class}_graded");
    let any = format!("{class}_any");
    let mut rules = Vec::new();
    for (i, cls) in ranked.iter().enumerate() {
        let mut body = vec![pos(Atom::new(cand, vec![c(cls)]))];
        body.extend(ranked[..i].iter().map(|h| neg(Atom::new(cand, vec![c(h)]))));
        rules.push(Rule {
            head: Atom::new(&graded, vec![c(cls)]),
            body,
        });
    }
    rules.push(Rule {
        head: Atom::new(class, vec![v("C")]),
        body: vec![pos(Atom::new(&graded, vec![v("C")]))],
    });
    rules.push(Rule {
        head: Atom::new(&any, vec![]),
        body: vec![pos(Atom::new(&graded, vec![v("C")]))],
    });
    rules.push(Rule {
        head: Atom::new(class, vec![c(fallback)]),
        body: vec![neg(Atom::new(&any, vec![]))],
    });
    rules
}

/// Builds symbolic programs for questions over a fixed lexicon and tables.
#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    pub lexicon: &'a Lexicon,
    pub severity: SeverityTable,
    pub onset: OnsetTable,
}

impl<'a> Encoder<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Encoder {
            lexicon,
            severity: SeverityTable::bundled(),
            onset: OnsetTable::bundled(),
        }
    }

    fn target_atoms(&self, q: &Question) -> Result<Vec<String>> {
        let fact = self
            .lexicon
            .fact_by_concept(&q.target)
            .ok_or_else(|| Error::UnknownConcept(q.target.clone()))?;
        Ok(vec![fact.atom()])
    }

    /// Background rules for `q`; onset rules are grounded over `facts`.
    pub fn question_rules(&self, q: &Question, facts: &BTreeSet<Literal>) -> Result<Vec<Rule>> {
        match (q.kind, q.target.as_str()) {
            (QuestionKind::YesNo, _) => {
                self.target_atoms(q)?;
                Ok(Vec::new())
            }
            (QuestionKind::Multiclass, "severity") => Ok(self.severity_rules()),
            (QuestionKind::Multiclass, "onset") => Ok(self.onset_rules(facts)),
            _ => Err(Error::Schema(format!("question {} has no encoding", q.id))),
        }
    }

    fn severity_rules(&self) -> Vec<Rule> {
        let mut rules = Vec::new();
        for (cue, class) in &self.severity.cues {
            rules.push(Rule {
                head: Atom::new("severity_candidate", vec![c(class)]),
                body: vec![
                    pos(Atom::new("severity", vec![v("X"), c(&concept_atom(cue))])),
                    pos(has_symptom(v("X"))),
                ],
            });
        }
        // modifiers only grade when nothing else does
        let mut body = vec![pos(Atom::new("severity_candidate", vec![c("modifier")]))];
        body.extend(
            SEVERITY_RANK
                .iter()
                .map(|h| neg(Atom::new("severity_candidate", vec![c(h)]))),
        );
        rules.push(Rule {
            head: Atom::new(
                "severity_candidate_folded",
                vec![c(&self.severity.modifier_class)],
            ),
            body,
        });
        for cls in SEVERITY_RANK {
            rules.push(Rule {
                head: Atom::new("severity_rank", vec![c(cls)]),
                body: vec![pos(Atom::new("severity_candidate", vec![c(cls)]))],
            });
            rules.push(Rule {
                head: Atom::new("severity_rank", vec![c(cls)]),
                body: vec![pos(Atom::new("severity_candidate_folded", vec![c(cls)]))],
            });
        }
        rules.extend(ranked_rules(
            "severity_rank",
            "severity_class",
            &SEVERITY_RANK,
            "none",
        ));
        rules
    }

    fn onset_rules(&self, facts: &BTreeSet<Literal>) -> Vec<Rule> {
        let mut rules = Vec::new();
        let phrases: BTreeSet<&str> = facts
            .iter()
            .filter(|f| f.predicate == "duration" && f.args.len() == 2)
            .map(|f| f.args[1].as_str())
            .collect();
        for p in phrases {
            if let Some(cls) = self.onset.class(p) {
                rules.push(Rule {
                    head: Atom::new("onset_candidate", vec![c(cls)]),
                    body: vec![
                        pos(Atom::new("duration", vec![v("X"), c(p)])),
                        pos(has_symptom(v("X"))),
                    ],
                });
            }
        }
        rules.extend(ranked_rules(
            "onset_candidate",
            "onset_class",
            &ONSET_RANK,
            "unknown",
        ));
        rules
    }

    /// Denials that fail the program when `gold` is contradicted.
    pub fn constraint(&self, q: &Question, gold: &str) -> Result<Vec<Vec<BodyLiteral>>> {
        q.check_answer(gold)?;
        Ok(match q.kind {
            QuestionKind::YesNo => {
                let targets = self.target_atoms(q)?;
                if gold == "yes" {
                    vec![targets.iter().map(|t| neg(has_symptom(c(t)))).collect()]
                } else {
                    targets.iter().map(|t| vec![pos(has_symptom(c(t)))]).collect()
                }
            }
            QuestionKind::Multiclass => {
                let class = format!("{}_class", q.target);
                vec![vec![neg(Atom::new(&class, vec![c(gold)]))]]
            }
        })
    }

    pub fn encode_question(
        &self,
        q: &Question,
        gold: &str,
        facts: &BTreeSet<Literal>,
    ) -> Result<SymbolicProgram> {
        Ok(SymbolicProgram {
            facts: facts.clone(),
            rules: self.question_rules(q, facts)?,
            denials: self.constraint(q, gold)?,
        })
    }

    /// Reads the answer directly off the least model.
    pub fn answer(&self, q: &Question, facts: &BTreeSet<Literal>) -> Result<String> {
        let program = SymbolicProgram {
            facts: facts.clone(),
            rules: self.question_rules(q, facts)?,
            denials: Vec::new(),
        };
        let model = program.model()?;
        match q.kind {
            QuestionKind::YesNo => {
                let targets = self.target_atoms(q)?;
                let yes = targets
                    .iter()
                    .any(|t| model.contains(&Literal::new("has_symptom", [PATIENT_ID, t.as_str()])));
                Ok(if yes { "yes" } else { "no" }.into())
            }
            QuestionKind::Multiclass => {
                let class = format!("{}_class", q.target);
                let found: Vec<&Literal> = model.iter().filter(|l| l.predicate == class).collect();
                match found.as_slice() {
                    [one] => Ok(one.args[0].clone()),
                    _ => Err(Error::InvalidProgram(format!(
                        "{} classes derived for question {}",
                        found.len(),
                        q.id
                    ))),
                }
            }
        }
    }

    pub fn answer_question(&self, graph: &KnowledgeGraph, q: &Question) -> Result<String> {
        self.answer(q, &kg_to_facts(graph))
    }
}
