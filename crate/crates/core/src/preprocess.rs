//! Note normalization: splitting, spell correction, abbreviation expansion
//! and pattern-based completion of segments into "the patient ..." sentences.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{FactMatch, Lexicon, MatchedVia};
use crate::parser::tagger::{self, PosTag};

pub const MAX_NOTE_CHARS: usize = 10_000;

const DELIMITERS: &[char] = &['.', ',', ';', ':', '\n', '\r'];
const SEGMENT_NEGATORS: &[&str] = &["no", "not", "denies"];
const SUBJECTS: &[&[&str]] = &[
    &["the", "patient"],
    &["the", "pt"],
    &["patient"],
    &["pt"],
    &["she"],
    &["he"],
];
const VERB_STARTS: &[&str] = &[
    "has", "have", "had", "is", "was", "are", "does", "did", "can", "cannot", "could",
];
const LIST_SEPARATORS: &[&str] = &["and", "or", ","];
const HEAD_MODIFIERS: &[&str] = &["a", "an", "any", "some"];

const BUNDLED_WORDS: &str = include_str!("../data/words.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawNote {
    pub note_id: String,
    pub text: String,
}

impl RawNote {
    pub fn new(note_id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let note = RawNote {
            note_id: note_id.into(),
            text: text.into(),
        };
        note.validate()?;
        Ok(note)
    }

    pub fn validate(&self) -> Result<()> {
        if self.note_id.is_empty() {
            return Err(Error::EmptyNoteId);
        }
        let n = self.text.chars().count();
        if n > MAX_NOTE_CHARS {
            return Err(Error::NoteTooLong(n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub tokens: Vec<String>,
    /// Character (not byte) range in the note text.
    pub source_span: Range<usize>,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    NegatedNounPhrase,
    NounPhraseOrList,
    AdjectivePhrase,
    VerbPhrase,
    AlreadyComplete,
    Unexpandable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Affirmed,
    Negated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedSentence {
    pub tokens: Vec<String>,
    pub pattern: Pattern,
    pub polarity: Polarity,
    /// Original text of the segment this sentence came from.
    pub source: String,
}

impl ExpandedSentence {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Spelling vocabulary: lexicon tokens, grammar words and a common-English list.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    words: BTreeSet<String>,
    /// Accepted verbatim but never proposed as a correction.
    shorthand: BTreeSet<String>,
}

impl Vocabulary {
    pub fn for_lexicon(lexicon: &Lexicon) -> Self {
        let mut words = lexicon.vocabulary();
        words.extend(
            BUNDLED_WORDS
                .lines()
                .map(str::trim)
                .filter(|w| !w.is_empty())
                .map(str::to_string),
        );
        words.extend(tagger::closed_class_words().map(str::to_string));
        words.extend(SEGMENT_NEGATORS.iter().map(|s| s.to_string()));
        words.extend(["pt", "she", "he", "unable"].map(String::from));
        let shorthand = lexicon.abbreviations().keys().cloned().collect();
        Vocabulary { words, shorthand }
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Vocabulary {
            words: words.into_iter().map(Into::into).collect(),
            shorthand: BTreeSet::new(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    fn targets(&self) -> impl Iterator<Item = &str> {
        self.iter().filter(|w| !self.shorthand.contains(*w))
    }
}

/// Corrects a single token against `vocabulary`.
///
/// Tokens in the vocabulary, of at most three characters, or containing a
/// digit are returned unchanged. Otherwise the closest vocabulary word by
/// Damerau-Levenshtein distance wins if it is within 1 (length <= 6) or 2
/// (length > 6); ties go to the lexicographically smaller word.
pub fn correct_spelling(token: &str, vocabulary: &Vocabulary) -> String {
    let len = token.chars().count();
    if vocabulary.contains(token) || len <= 3 || token.chars().any(|c| c.is_ascii_digit()) {
        return token.to_string();
    }
    let limit = if len <= 6 { 1 } else { 2 };
    let mut best: Option<(usize, &str)> = None;
    for word in vocabulary.targets() {
        let wl = word.chars().count();
        if wl.abs_diff(len) > limit {
            continue;
        }
        let d = strsim::damerau_levenshtein(token, word);
        if d > limit {
            continue;
        }
        // vocabulary iterates in sorted order, so strict improvement keeps the
        // lexicographically smallest word among equal distances
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, word));
        }
    }
    best.map_or_else(|| token.to_string(), |(_, w)| w.to_string())
}

pub fn expand_abbreviations<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        let t = t.as_ref();
        match lexicon.abbreviations().get(t) {
            Some(exp) => out.extend(exp.split(' ').map(str::to_string)),
            None => out.push(t.to_string()),
        }
    }
    out
}

fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Splits note text at delimiters. A '.' between two digits is a decimal
/// point, not a delimiter.
pub fn split_passage(note: &RawNote) -> Result<Vec<Segment>> {
    note.validate()?;
    let chars: Vec<char> = note.text.chars().collect();
    let mut segments = Vec::new();
    let mut start = 0;
    for i in 0..=chars.len() {
        let at_end = i == chars.len();
        let is_delim = !at_end && DELIMITERS.contains(&chars[i]) && {
            let decimal = chars[i] == '.'
                && i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_ascii_digit()
                && chars[i + 1].is_ascii_digit();
            !decimal
        };
        if at_end || is_delim {
            let piece: String = chars[start..i].iter().collect();
            let tokens = tokenize(&piece);
            if !tokens.is_empty() {
                segments.push(Segment {
                    tokens,
                    source_span: start..i,
                    source: piece.trim().to_string(),
                });
            }
            start = i + 1;
        }
    }
    if segments.is_empty() {
        return Err(Error::EmptyNote);
    }
    Ok(segments)
}

fn is_negator(t: &str) -> bool {
    SEGMENT_NEGATORS.contains(&t)
}

fn is_modifier(t: &str, lexicon: &Lexicon) -> bool {
    lexicon.is_severity_cue(t) || HEAD_MODIFIERS.contains(&t)
}

/// Splits a run-on segment into clauses, one per concept mention or list of
/// mentions. Mentions stay together when they are adjacent or joined only by
/// separators, share a syntactic role, and the later one carries no negator
/// or (when directly adjacent) modifier prefix.
pub fn split_clauses(tokens: &[String], lexicon: &Lexicon) -> Vec<Vec<String>> {
    let matches = lexicon.scan_all_matches(tokens);
    if matches.len() <= 1 {
        return vec![tokens.to_vec()];
    }
    let mut unit_starts = Vec::with_capacity(matches.len());
    let mut prev_end = 0;
    for m in &matches {
        let mut s = m.start;
        while s > prev_end && (is_modifier(&tokens[s - 1], lexicon) || is_negator(&tokens[s - 1])) {
            s -= 1;
        }
        unit_starts.push(s);
        prev_end = m.end;
    }

    let mut cuts = Vec::new();
    for i in 1..matches.len() {
        let prev = &matches[i - 1];
        let cur = &matches[i];
        let us = unit_starts[i];
        let prefix = &tokens[us..cur.start];
        let gap = &tokens[prev.end..us];
        let negated_prefix = prefix.iter().any(|t| is_negator(t));
        let continues = if gap.is_empty() {
            prefix.is_empty() && prev.matched_via == cur.matched_via
        } else if gap.iter().all(|t| LIST_SEPARATORS.contains(&t.as_str())) {
            prev.matched_via == cur.matched_via && !negated_prefix
        } else {
            false
        };
        if !continues {
            cuts.push(us);
        }
    }

    let mut out = Vec::new();
    let mut start = 0;
    for cut in cuts.into_iter().chain(std::iter::once(tokens.len())) {
        let mut chunk: Vec<String> = tokens[start..cut].to_vec();
        while chunk
            .last()
            .is_some_and(|t| LIST_SEPARATORS.contains(&t.as_str()))
        {
            chunk.pop();
        }
        if !chunk.is_empty() {
            out.push(chunk);
        }
        start = cut;
    }
    out
}

fn strip_subject(tokens: &[String]) -> Option<&[String]> {
    SUBJECTS.iter().find_map(|subj| {
        let n = subj.len();
        (tokens.len() >= n && tokens[..n].iter().zip(subj.iter()).all(|(a, b)| a == b)).then(|| &tokens[n..])
    })
}

fn normalize_modals(tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len() + 1);
    for t in tokens {
        if t == "cannot" {
            out.push("can".to_string());
            out.push("not".to_string());
        } else {
            out.push(t.clone());
        }
    }
    out
}

fn sentence(prefix: &[&str], rest: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    v.extend(rest);
    v
}

/// Inserts "," between list members that are directly adjacent.
fn insert_list_commas(tokens: &[String], matches: &[FactMatch]) -> Vec<String> {
    let adjacent: BTreeSet<usize> = matches
        .windows(2)
        .filter(|w| w[0].end == w[1].start)
        .map(|w| w[1].start)
        .collect();
    let mut out = Vec::with_capacity(tokens.len() + adjacent.len());
    for (i, t) in tokens.iter().enumerate() {
        if adjacent.contains(&i) {
            out.push(",".to_string());
        }
        out.push(t.clone());
    }
    out
}

fn polarity_of(negated: bool) -> Polarity {
    if negated {
        Polarity::Negated
    } else {
        Polarity::Affirmed
    }
}

/// Classifies a segment body (no subject) and completes it into a sentence.
fn expand_body(body: &[String], lexicon: &Lexicon) -> Option<(Vec<String>, Pattern, Polarity)> {
    if body.is_empty() {
        return None;
    }
    let negated = is_negator(&body[0]);
    let rest: Vec<String> = if negated {
        body[1..].to_vec()
    } else {
        body.to_vec()
    };
    if rest.is_empty() {
        return None;
    }
    let head = rest
        .iter()
        .position(|t| !is_modifier(t, lexicon))
        .unwrap_or(rest.len());
    let not: &[&str] = if negated { &["not"] } else { &[] };

    if head == rest.len() {
        // severity cues standing alone, e.g. "severe"
        let prefix = [&["the", "patient", "is"][..], not].concat();
        return Some((
            sentence(&prefix, rest),
            Pattern::AdjectivePhrase,
            polarity_of(negated),
        ));
    }

    let h = rest[head].as_str();
    if head == 0 && !negated {
        match h {
            "can" | "could" => {
                return Some((
                    sentence(&["the", "patient", "can"], rest[1..].iter().cloned()),
                    Pattern::VerbPhrase,
                    Polarity::Affirmed,
                ))
            }
            "cannot" => {
                return Some((
                    sentence(&["the", "patient", "can", "not"], rest[1..].iter().cloned()),
                    Pattern::VerbPhrase,
                    Polarity::Negated,
                ))
            }
            "unable" => {
                let skip = if rest.get(1).is_some_and(|t| t == "to") {
                    2
                } else {
                    1
                };
                if rest.len() > skip {
                    return Some((
                        sentence(&["the", "patient", "can", "not"], rest[skip..].iter().cloned()),
                        Pattern::VerbPhrase,
                        Polarity::Negated,
                    ));
                }
                return None;
            }
            _ => {}
        }
    }

    if tagger::is_gerund(h) {
        let prefix = [&["the", "patient", "is"][..], not].concat();
        return Some((sentence(&prefix, rest), Pattern::VerbPhrase, polarity_of(negated)));
    }

    let head_match = lexicon.match_longest(&rest, head);
    match head_match.map(|m| m.matched_via) {
        Some(MatchedVia::Noun) => {
            let matches = lexicon.scan_all_matches(&rest);
            let body = insert_list_commas(&rest, &matches);
            if negated {
                Some((
                    sentence(&["the", "patient", "does", "not", "have"], body),
                    Pattern::NegatedNounPhrase,
                    Polarity::Negated,
                ))
            } else {
                Some((
                    sentence(&["the", "patient", "has"], body),
                    Pattern::NounPhraseOrList,
                    Polarity::Affirmed,
                ))
            }
        }
        Some(MatchedVia::Adjective) => {
            let prefix = [&["the", "patient", "is"][..], not].concat();
            Some((
                sentence(&prefix, rest),
                Pattern::AdjectivePhrase,
                polarity_of(negated),
            ))
        }
        None if negated => {
            let tag = tagger::pos_tag(h, None, lexicon);
            let nounish =
                matches!(tag, PosTag::NN | PosTag::NNS) && h.chars().all(|c| c.is_alphabetic() || c == '-');
            nounish.then(|| {
                (
                    sentence(&["the", "patient", "does", "not", "have"], rest),
                    Pattern::NegatedNounPhrase,
                    Polarity::Negated,
                )
            })
        }
        None => None,
    }
}

/// Completes already-spell-corrected, abbreviation-expanded segment tokens.
pub fn expand_tokens(tokens: &[String], lexicon: &Lexicon) -> (Vec<String>, Pattern, Polarity) {
    if let Some(body) = strip_subject(tokens) {
        if body.first().is_some_and(|t| VERB_STARTS.contains(&t.as_str())) {
            let body = normalize_modals(body);
            let first_fact = lexicon
                .scan_all_matches(&body)
                .first()
                .map_or(body.len(), |m| m.start);
            let negated = body[..first_fact].iter().any(|t| is_negator(t));
            return (
                sentence(&["the", "patient"], body),
                Pattern::AlreadyComplete,
                polarity_of(negated),
            );
        }
        if let Some(done) = expand_body(body, lexicon) {
            return done;
        }
        return (tokens.to_vec(), Pattern::Unexpandable, Polarity::Affirmed);
    }
    match expand_body(tokens, lexicon) {
        Some(done) => done,
        None => {
            let negated = tokens.first().is_some_and(|t| is_negator(t));
            (tokens.to_vec(), Pattern::Unexpandable, polarity_of(negated))
        }
    }
}

pub fn expand_segment(segment: &Segment, lexicon: &Lexicon) -> ExpandedSentence {
    let (tokens, pattern, polarity) = expand_tokens(&segment.tokens, lexicon);
    ExpandedSentence {
        tokens,
        pattern,
        polarity,
        source: segment.source.clone(),
    }
}

/// Preprocessor bound to a lexicon and its spelling vocabulary.
#[derive(Debug, Clone)]
pub struct Preprocessor<'a> {
    lexicon: &'a Lexicon,
    vocabulary: Vocabulary,
}

impl<'a> Preprocessor<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Preprocessor {
            lexicon,
            vocabulary: Vocabulary::for_lexicon(lexicon),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// split -> spell -> abbreviations -> clause split -> expand, in order.
    /// Unexpandable sentences are kept so that dropped text stays visible.
    pub fn preprocess_note(&self, note: &RawNote) -> Result<Vec<ExpandedSentence>> {
        let segments = split_passage(note)?;
        let mut out = Vec::new();
        for seg in segments {
            let corrected: Vec<String> = seg
                .tokens
                .iter()
                .map(|t| correct_spelling(t, &self.vocabulary))
                .collect();
            let expanded = expand_abbreviations(&corrected, self.lexicon);
            for clause in split_clauses(&expanded, self.lexicon) {
                let (tokens, pattern, polarity) = expand_tokens(&clause, self.lexicon);
                out.push(ExpandedSentence {
                    tokens,
                    pattern,
                    polarity,
                    source: seg.source.clone(),
                });
            }
        }
        Ok(out)
    }
}

pub fn preprocess_note(note: &RawNote, lexicon: &Lexicon) -> Result<Vec<ExpandedSentence>> {
    Preprocessor::new(lexicon).preprocess_note(note)
}
