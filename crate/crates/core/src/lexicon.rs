//! Supported-facts dictionary and cue tables.
//!
//! A [`Lexicon`] holds the clinically relevant concepts the pipeline can
//! recognise, each with a canonical label plus noun and adjective synonym
//! phrases, along with the abbreviation, severity and duration cue tables used
//! by the preprocessing and augmentation stages. Lexicons are immutable after
//! loading and matching is a pure read.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest allowed support phrase, in tokens.
pub const MAX_PHRASE_TOKENS: usize = 6;

const BUNDLED_SAMPLE: &str = include_str!("../data/lexicon.json");
const BUNDLED_CURATED: &str = include_str!("../data/curated.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    SignSymptom,
    PreexistingCondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportedFact {
    pub concept_id: String,
    pub label: String,
    pub noun_supports: BTreeSet<String>,
    pub adjective_supports: BTreeSet<String>,
    pub category: Category,
}

impl SupportedFact {
    /// Snake-case atom used by the symbolic encoding.
    pub fn atom(&self) -> String {
        concept_atom(&self.label)
    }
}

pub fn concept_atom(label: &str) -> String {
    label
        .split_whitespace()
        .map(|t| t.to_lowercase())
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatchedVia {
    Noun,
    Adjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactMatch {
    pub fact: FactId,
    pub start: usize,
    pub end: usize,
    pub matched_via: MatchedVia,
}

impl FactMatch {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct IndexEntry {
    tokens: Vec<String>,
    fact: FactId,
    via: MatchedVia,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    facts: Vec<SupportedFact>,
    abbreviations: BTreeMap<String, String>,
    severity_cues: BTreeSet<String>,
    duration_cue_heads: BTreeSet<String>,
    phrase_index: BTreeMap<String, Vec<IndexEntry>>,
    longest_phrase: usize,
}

/// On-disk shape. Field order is alphabetical so serialization is canonical.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(default)]
    abbreviations: BTreeMap<String, String>,
    #[serde(default)]
    duration_cue_heads: Vec<String>,
    #[serde(default)]
    facts: Vec<FactRow>,
    #[serde(default)]
    severity_cues: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactRow {
    #[serde(default)]
    adjective_supports: Vec<String>,
    category: Category,
    concept_id: String,
    label: String,
    #[serde(default)]
    noun_supports: Vec<String>,
}

fn normalize_phrase(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// 1-based line of the `nth` (0-based) occurrence of `needle` in `text`, or 1.
fn line_of(text: &str, needle: &str, nth: usize) -> usize {
    text.match_indices(needle)
        .nth(nth)
        .map(|(pos, _)| text[..pos].matches('\n').count() + 1)
        .unwrap_or(1)
}

impl Lexicon {
    /// Sample concept dictionary merged with the curated list.
    pub fn bundled() -> Self {
        Self::from_sources(&[BUNDLED_SAMPLE, BUNDLED_CURATED]).expect("bundled lexicon is valid")
    }

    pub fn empty() -> Self {
        Self::from_sources(&[]).expect("empty lexicon is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_all(&[path])
    }

    /// Loads and merges several lexicon files. Facts sharing a concept id are
    /// merged; a phrase claimed by two concepts is an error.
    pub fn load_all<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut texts = Vec::with_capacity(paths.len());
        for p in paths {
            let p = p.as_ref();
            texts.push(std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?);
        }
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        Self::from_sources(&refs)
    }

    /// Bundled lexicon merged with extra files.
    pub fn bundled_with<P: AsRef<Path>>(extra: &[P]) -> Result<Self> {
        let mut texts = Vec::with_capacity(extra.len());
        for p in extra {
            let p = p.as_ref();
            texts.push(std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?);
        }
        let mut refs = vec![BUNDLED_SAMPLE, BUNDLED_CURATED];
        refs.extend(texts.iter().map(String::as_str));
        Self::from_sources(&refs)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_sources(&[text])
    }

    fn from_sources(texts: &[&str]) -> Result<Self> {
        let mut facts: BTreeMap<String, SupportedFact> = BTreeMap::new();
        let mut abbreviations = BTreeMap::new();
        let mut severity_cues = BTreeSet::new();
        let mut duration_cue_heads = BTreeSet::new();
        // phrase -> (concept_id, line) for duplicate detection
        let mut owners: BTreeMap<String, String> = BTreeMap::new();

        for text in texts {
            if text.trim().is_empty() {
                return Err(Error::malformed(1, "empty lexicon file"));
            }
            let file: LexiconFile =
                serde_json::from_str(text).map_err(|e| Error::malformed(e.line(), e.to_string()))?;

            for (key, expansion) in file.abbreviations {
                let k = normalize_phrase(&key);
                let v = normalize_phrase(&expansion);
                if k.is_empty() || k.contains(' ') {
                    return Err(Error::malformed(
                        line_of(text, &format!("\"{key}\""), 0),
                        format!("abbreviation key {key:?} must be a single token"),
                    ));
                }
                if v.is_empty() {
                    return Err(Error::malformed(
                        line_of(text, &format!("\"{key}\""), 0),
                        format!("abbreviation {key:?} has an empty expansion"),
                    ));
                }
                abbreviations.insert(k, v);
            }
            for cue in file.severity_cues {
                let c = normalize_phrase(&cue);
                if c.is_empty() {
                    return Err(Error::malformed(1, "empty severity cue"));
                }
                severity_cues.insert(c);
            }
            for cue in file.duration_cue_heads {
                let c = normalize_phrase(&cue);
                if c.is_empty() {
                    return Err(Error::malformed(1, "empty duration cue"));
                }
                duration_cue_heads.insert(c);
            }

            for row in file.facts {
                let line = line_of(text, &format!("\"{}\"", row.concept_id), 0);
                let label = row.label.trim().to_string();
                if label.is_empty() {
                    return Err(Error::malformed(line, "empty label"));
                }
                if row.concept_id.trim().is_empty() {
                    return Err(Error::malformed(line, "empty concept_id"));
                }
                let entry = facts
                    .entry(row.concept_id.clone())
                    .or_insert_with(|| SupportedFact {
                        concept_id: row.concept_id.clone(),
                        label: label.clone(),
                        noun_supports: BTreeSet::new(),
                        adjective_supports: BTreeSet::new(),
                        category: row.category,
                    });
                if entry.label != label {
                    return Err(Error::malformed(
                        line,
                        format!(
                            "concept {} has conflicting labels {:?} and {:?}",
                            row.concept_id, entry.label, label
                        ),
                    ));
                }
                let label_phrase = normalize_phrase(&label);
                let nouns = row
                    .noun_supports
                    .iter()
                    .map(|p| (p.as_str(), MatchedVia::Noun))
                    .chain(std::iter::once((label_phrase.as_str(), MatchedVia::Noun)));
                let adjs = row
                    .adjective_supports
                    .iter()
                    .map(|p| (p.as_str(), MatchedVia::Adjective));
                for (raw, via) in nouns.chain(adjs) {
                    let phrase = normalize_phrase(raw);
                    if phrase.is_empty() {
                        return Err(Error::malformed(line, "empty support phrase"));
                    }
                    let n = phrase.split(' ').count();
                    if n > MAX_PHRASE_TOKENS {
                        return Err(Error::malformed(
                            line,
                            format!("support phrase {phrase:?} has {n} tokens (max {MAX_PHRASE_TOKENS})"),
                        ));
                    }
                    match owners.get(&phrase) {
                        Some(owner) if owner != &row.concept_id => {
                            return Err(Error::malformed(
                                line_of(text, &format!("\"{raw}\""), 1).max(line_of(
                                    text,
                                    &format!("\"{raw}\""),
                                    0,
                                )),
                                format!(
                                    "support phrase {phrase:?} appears under both {owner} and {}",
                                    row.concept_id
                                ),
                            ));
                        }
                        _ => {}
                    }
                    let in_nouns = entry.noun_supports.contains(&phrase);
                    let in_adjs = entry.adjective_supports.contains(&phrase);
                    let clash = match via {
                        MatchedVia::Noun => in_adjs,
                        MatchedVia::Adjective => in_nouns,
                    };
                    if clash {
                        return Err(Error::malformed(
                            line,
                            format!("phrase {phrase:?} is both a noun and an adjective support"),
                        ));
                    }
                    owners.insert(phrase.clone(), row.concept_id.clone());
                    match via {
                        MatchedVia::Noun => entry.noun_supports.insert(phrase),
                        MatchedVia::Adjective => entry.adjective_supports.insert(phrase),
                    };
                }
            }
        }

        if let Some(cue) = severity_cues.iter().find(|c| abbreviations.contains_key(*c)) {
            return Err(Error::malformed(
                1,
                format!("{cue:?} is both a severity cue and an abbreviation"),
            ));
        }

        let facts: Vec<SupportedFact> = facts.into_values().collect();
        let (phrase_index, longest_phrase) = build_index(&facts);
        Ok(Lexicon {
            facts,
            abbreviations,
            severity_cues,
            duration_cue_heads,
            phrase_index,
            longest_phrase,
        })
    }

    pub fn facts(&self) -> &[SupportedFact] {
        &self.facts
    }

    pub fn fact(&self, id: FactId) -> &SupportedFact {
        &self.facts[id.0]
    }

    pub fn fact_by_concept(&self, concept_id: &str) -> Option<&SupportedFact> {
        self.facts
            .binary_search_by(|f| f.concept_id.as_str().cmp(concept_id))
            .ok()
            .map(|i| &self.facts[i])
    }

    pub fn abbreviations(&self) -> &BTreeMap<String, String> {
        &self.abbreviations
    }

    pub fn severity_cues(&self) -> &BTreeSet<String> {
        &self.severity_cues
    }

    pub fn duration_cue_heads(&self) -> &BTreeSet<String> {
        &self.duration_cue_heads
    }

    pub fn is_severity_cue(&self, token: &str) -> bool {
        self.severity_cues.contains(token)
    }

    pub fn is_duration_cue(&self, token: &str) -> bool {
        self.duration_cue_heads.contains(token)
    }

    /// Length in tokens of the longest support phrase (0 for an empty lexicon).
    pub fn longest_phrase(&self) -> usize {
        self.longest_phrase
    }

    /// Every support phrase paired with its owner and role, in index order.
    pub fn phrases(&self) -> impl Iterator<Item = (Vec<&str>, FactId, MatchedVia)> + '_ {
        self.phrase_index
            .values()
            .flatten()
            .map(|e| (e.tokens.iter().map(String::as_str).collect(), e.fact, e.via))
    }

    /// Whether `token` occurs in some single-token noun support.
    pub fn is_noun_token(&self, token: &str) -> bool {
        self.phrase_index
            .get(token)
            .is_some_and(|v| v.iter().any(|e| e.via == MatchedVia::Noun && e.tokens.len() == 1))
    }

    pub fn is_adjective_token(&self, token: &str) -> bool {
        self.phrase_index.get(token).is_some_and(|v| {
            v.iter()
                .any(|e| e.via == MatchedVia::Adjective && e.tokens.len() == 1)
        })
    }

    /// Resolves a free-text phrase to the concept whose support it is.
    pub fn resolve_phrase(&self, phrase: &str) -> Option<&SupportedFact> {
        let tokens: Vec<String> = normalize_phrase(phrase)
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        match self.match_longest(&tokens, 0) {
            Some(m) if m.end == tokens.len() => Some(self.fact(m.fact)),
            _ => None,
        }
    }

    /// All tokens appearing anywhere in the lexicon (phrases, cues, abbreviations).
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut v = BTreeSet::new();
        for entry in self.phrase_index.values().flatten() {
            v.extend(entry.tokens.iter().cloned());
        }
        for cue in self.severity_cues.iter().chain(&self.duration_cue_heads) {
            v.extend(cue.split(' ').map(str::to_string));
        }
        for (k, e) in &self.abbreviations {
            v.insert(k.clone());
            v.extend(e.split(' ').map(str::to_string));
        }
        v
    }

    /// Longest support phrase beginning at `start`.
    ///
    /// Ties at equal length prefer noun supports, then the smaller concept id.
    pub fn match_longest<S: AsRef<str>>(&self, tokens: &[S], start: usize) -> Option<FactMatch> {
        let first = tokens.get(start)?.as_ref();
        let candidates = self.phrase_index.get(first)?;
        let mut best: Option<(&IndexEntry, usize)> = None;
        for entry in candidates {
            let n = entry.tokens.len();
            if start + n > tokens.len() {
                continue;
            }
            let fits = entry
                .tokens
                .iter()
                .zip(&tokens[start..start + n])
                .all(|(a, b)| a == b.as_ref());
            if !fits {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, bn)) => {
                    let key = |e: &IndexEntry, n: usize| {
                        (
                            std::cmp::Reverse(n),
                            e.via,
                            self.facts[e.fact.0].concept_id.clone(),
                        )
                    };
                    key(entry, n) < key(b, bn)
                }
            };
            if better {
                best = Some((entry, n));
            }
        }
        best.map(|(e, n)| FactMatch {
            fact: e.fact,
            start,
            end: start + n,
            matched_via: e.via,
        })
    }

    /// Greedy left-to-right longest-match cover of `tokens`.
    pub fn scan_all_matches<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<FactMatch> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.match_longest(tokens, i) {
                Some(m) => {
                    i = m.end;
                    out.push(m);
                }
                None => i += 1,
            }
        }
        out
    }

    /// Canonical serialization: sorted keys, sorted arrays, two-space indent.
    pub fn to_canonical_json(&self) -> String {
        let file = LexiconFile {
            abbreviations: self.abbreviations.clone(),
            duration_cue_heads: self.duration_cue_heads.iter().cloned().collect(),
            facts: self
                .facts
                .iter()
                .map(|f| FactRow {
                    adjective_supports: f.adjective_supports.iter().cloned().collect(),
                    category: f.category,
                    concept_id: f.concept_id.clone(),
                    label: f.label.clone(),
                    noun_supports: f.noun_supports.iter().cloned().collect(),
                })
                .collect(),
            severity_cues: self.severity_cues.iter().cloned().collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("lexicon serializes");
        s.push('\n');
        s
    }
}

fn build_index(facts: &[SupportedFact]) -> (BTreeMap<String, Vec<IndexEntry>>, usize) {
    let mut index: BTreeMap<String, Vec<IndexEntry>> = BTreeMap::new();
    let mut longest = 0;
    for (i, fact) in facts.iter().enumerate() {
        let all = fact
            .noun_supports
            .iter()
            .map(|p| (p, MatchedVia::Noun))
            .chain(fact.adjective_supports.iter().map(|p| (p, MatchedVia::Adjective)));
        for (phrase, via) in all {
            let tokens: Vec<String> = phrase.split(' ').map(str::to_string).collect();
            longest = longest.max(tokens.len());
            index.entry(tokens[0].clone()).or_default().push(IndexEntry {
                tokens,
                fact: FactId(i),
                via,
            });
        }
    }
    for entries in index.values_mut() {
        entries.sort_by(|a, b| (&a.tokens, a.via, a.fact).cmp(&(&b.tokens, b.via, b.fact)));
    }
    (index, longest)
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::SignSymptom => f.write_str("SignSymptom"),
            Category::PreexistingCondition => f.write_str("PreexistingCondition"),
        }
    }
}
