//! Bundled evaluation corpus, noise injection and graph comparison.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KGNode, KnowledgeGraph, NodeKind};
use crate::lexicon::Lexicon;
use crate::preprocess::RawNote;
use crate::qa::{parse_gold_jsonl, GoldAnswers};

const NOTES: &str = include_str!("../corpus/notes.jsonl");
const GOLD_GRAPHS: &str = include_str!("../corpus/gold_graphs.jsonl");
const GOLD_ANSWERS: &str = include_str!("../corpus/gold_answers.jsonl");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Clean,
    Messy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusNote {
    pub note_id: String,
    pub tier: Tier,
    pub text: String,
}

impl CorpusNote {
    pub fn raw(&self) -> RawNote {
        RawNote {
            note_id: self.note_id.clone(),
            text: self.text.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub notes: Vec<CorpusNote>,
    pub gold_graphs: Vec<KnowledgeGraph>,
    pub gold_answers: Vec<GoldAnswers>,
}

fn parse_lines<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Schema(format!("line {}: {e}", i + 1))))
        .collect()
}

impl Corpus {
    pub fn bundled() -> Self {
        Self::parse(NOTES, GOLD_GRAPHS, GOLD_ANSWERS).expect("bundled corpus is valid")
    }

    pub fn parse(notes: &str, graphs: &str, answers: &str) -> Result<Self> {
        let gold_graphs = graphs
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(KnowledgeGraph::from_json)
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus {
            notes: parse_lines(notes)?,
            gold_graphs,
            gold_answers: parse_gold_jsonl(answers)?,
        })
    }

    pub fn tier(&self, tier: Tier) -> impl Iterator<Item = &CorpusNote> {
        self.notes.iter().filter(move |n| n.tier == tier)
    }

    pub fn gold_graph(&self, note_id: &str) -> Option<&KnowledgeGraph> {
        self.gold_graphs.iter().find(|g| g.note_id == note_id)
    }

    pub fn gold_answers_for(&self, tier: Tier) -> Vec<GoldAnswers> {
        let ids: BTreeSet<&str> = self.tier(tier).map(|n| n.note_id.as_str()).collect();
        self.gold_answers
            .iter()
            .filter(|g| ids.contains(g.note_id.as_str()))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub typo_rate: f64,
    pub abbreviation_rate: f64,
    pub subject_drop: bool,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none(seed: u64) -> Self {
        NoiseSpec {
            typo_rate: 0.0,
            abbreviation_rate: 0.0,
            subject_drop: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| (0.0..=1.0).contains(&r);
        if ok(self.typo_rate) && ok(self.abbreviation_rate) {
            Ok(())
        } else {
            Err(Error::Config("noise rates must lie in [0, 1]".into()))
        }
    }
}

/// Subject prefixes and what remains of them once the subject is dropped.
const SUBJECT_DROPS: &[(&str, &str)] = &[
    ("the patient does not have ", "no "),
    ("the patient has ", ""),
    ("the patient is ", ""),
    ("the patient had ", ""),
    ("the patient was ", ""),
];

/// Applies seeded noise: subject dropping, abbreviation and typos, in that
/// order. Sentence boundaries and note id are preserved.
pub fn inject_noise(note: &RawNote, spec: &NoiseSpec, lexicon: &Lexicon) -> RawNote {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut text = note.text.clone();
    if spec.subject_drop {
        text = drop_subjects(&text);
    }
    if spec.abbreviation_rate > 0.0 {
        text = abbreviate(&text, spec.abbreviation_rate, lexicon, &mut rng);
    }
    if spec.typo_rate > 0.0 {
        text = add_typos(&text, spec.typo_rate, &mut rng);
    }
    RawNote {
        note_id: note.note_id.clone(),
        text,
    }
}

fn drop_subjects(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut at_start = true;
    while !rest.is_empty() {
        if at_start {
            let trimmed = rest.trim_start();
            out.push_str(&rest[..rest.len() - trimmed.len()]);
            rest = trimmed;
            let lower = rest.to_lowercase();
            if let Some((prefix, repl)) = SUBJECT_DROPS.iter().find(|(p, _)| lower.starts_with(p)) {
                out.push_str(repl);
                rest = &rest[prefix.len()..];
            }
            at_start = false;
            continue;
        }
        let ch = rest.chars().next().expect("non-empty");
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
        if matches!(ch, '.' | ';' | '\n') {
            at_start = true;
        }
    }
    out
}

/// Expansion phrase -> shortest abbreviation for it.
fn reverse_abbreviations(lexicon: &Lexicon) -> BTreeMap<&str, &str> {
    let mut out: BTreeMap<&str, &str> = BTreeMap::new();
    for (abbr, expansion) in lexicon.abbreviations() {
        let e = expansion.as_str();
        let keep = out
            .get(e)
            .is_some_and(|cur| (cur.len(), *cur) <= (abbr.len(), abbr.as_str()));
        if !keep {
            out.insert(e, abbr);
        }
    }
    out
}

fn abbreviate(text: &str, rate: f64, lexicon: &Lexicon, rng: &mut ChaCha8Rng) -> String {
    if !text.is_ascii() {
        return text.to_string();
    }
    let reverse = reverse_abbreviations(lexicon);
    // longest expansions first so "shortness of breath on exertion" wins
    let mut phrases: Vec<(&str, &str)> = reverse.into_iter().collect();
    phrases.sort_by_key(|(p, _)| std::cmp::Reverse(p.len()));
    let mut out = String::new();
    let lower = text.to_lowercase();
    let mut i = 0;
    'scan: while i < text.len() {
        let boundary = i == 0 || !lower[..i].chars().next_back().is_some_and(char::is_alphanumeric);
        if boundary {
            for (phrase, abbr) in &phrases {
                let end = i + phrase.len();
                let fits = lower[i..].starts_with(phrase)
                    && !lower[end..].chars().next().is_some_and(char::is_alphanumeric);
                if fits && rng.gen_bool(rate) {
                    out.push_str(abbr);
                    i = end;
                    continue 'scan;
                }
            }
        }
        let ch = text[i..].chars().next().expect("in bounds");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

fn add_typos(text: &str, rate: f64, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String, rng: &mut ChaCha8Rng| {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() >= 5 && chars.iter().all(|c| c.is_ascii_alphabetic()) && rng.gen_bool(rate) {
            let mut chars = chars;
            let k = rng.gen_range(1..chars.len() - 1);
            if rng.gen_bool(0.5) {
                chars.swap(k, k + 1);
            } else {
                chars[k] = (b'a' + rng.gen_range(0..26u8)) as char;
            }
            out.extend(chars);
        } else {
            out.push_str(word);
        }
        word.clear();
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.push(ch);
        } else {
            flush(&mut word, &mut out, rng);
            out.push(ch);
        }
    }
    flush(&mut word, &mut out, rng);
    out
}

type NodeKey = (NodeKind, String, Option<String>);
type EdgeKey = (NodeKey, NodeKey, String);

fn node_key(n: &KGNode) -> NodeKey {
    (n.kind, n.label.clone(), n.concept_id.clone())
}

fn edge_keys(g: &KnowledgeGraph) -> BTreeSet<EdgeKey> {
    g.edges()
        .into_iter()
        .filter_map(|e| {
            let s = g.node(&e.src)?;
            let d = g.node(&e.dst)?;
            Some((node_key(s), node_key(d), e.relation.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphDiff {
    pub missing_nodes: Vec<NodeKey>,
    pub extra_nodes: Vec<NodeKey>,
    pub missing_edges: Vec<EdgeKey>,
    pub extra_edges: Vec<EdgeKey>,
    pub edge_precision: f64,
    pub edge_recall: f64,
    pub edge_f1: f64,
}

impl GraphDiff {
    pub fn is_exact(&self) -> bool {
        self.missing_nodes.is_empty()
            && self.extra_nodes.is_empty()
            && self.missing_edges.is_empty()
            && self.extra_edges.is_empty()
    }
}

/// Identity-based diff keyed on (kind, label, concept id).
pub fn compare_graphs(predicted: &KnowledgeGraph, gold: &KnowledgeGraph) -> GraphDiff {
    let pn: BTreeSet<NodeKey> = predicted.nodes().map(node_key).collect();
    let gn: BTreeSet<NodeKey> = gold.nodes().map(node_key).collect();
    let pe = edge_keys(predicted);
    let ge = edge_keys(gold);
    let hits = pe.intersection(&ge).count() as f64;
    let ratio = |n: usize| if n == 0 { 1.0 } else { hits / n as f64 };
    let (p, r) = (ratio(pe.len()), ratio(ge.len()));
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    GraphDiff {
        missing_nodes: gn.difference(&pn).cloned().collect(),
        extra_nodes: pn.difference(&gn).cloned().collect(),
        missing_edges: ge.difference(&pe).cloned().collect(),
        extra_edges: pe.difference(&ge).cloned().collect(),
        edge_precision: p,
        edge_recall: r,
        edge_f1: f1,
    }
}
