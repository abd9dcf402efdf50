//! Deterministic part-of-speech tagging over closed-class tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicon;

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosTag {
    DT,
    NN,
    NNS,
    JJ,
    RB,
    VB,
    VBZ,
    VBD,
    VBG,
    MD,
    IN,
    CC,
    CD,
    NEG,
}

pub const DETERMINERS: &[&str] = &["a", "an", "any", "some", "that", "the", "these", "this", "those"];

pub const PREPOSITIONS: &[&str] = &[
    "about", "across", "after", "around", "at", "before", "by", "during", "for", "from", "in", "into", "of",
    "on", "over", "per", "since", "than", "through", "till", "to", "under", "until", "with", "within",
    "without",
];

pub const CONJUNCTIONS: &[&str] = &[",", "and", "but", "nor", "or"];

pub const MODALS: &[&str] = &[
    "can", "cannot", "could", "may", "might", "must", "should", "will", "would",
];

pub const NEGATORS: &[&str] = &["never", "no", "not"];

pub const ADVERBS: &[&str] = &[
    "again",
    "ago",
    "already",
    "also",
    "even",
    "just",
    "mostly",
    "now",
    "often",
    "only",
    "quite",
    "rather",
    "sometimes",
    "soon",
    "still",
    "too",
];

pub const NUMBER_WORDS: &[&str] = &[
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
    "thirty",
    "forty",
    "fifty",
    "hundred",
];

pub const TIME_UNITS: &[&str] = &[
    "day",
    "days",
    "fortnight",
    "fortnights",
    "hour",
    "hours",
    "minute",
    "minutes",
    "month",
    "months",
    "night",
    "nights",
    "week",
    "weeks",
    "year",
    "years",
];

/// Non-gerund words ending in "-ing".
const ING_NOUNS: &[&str] = &[
    "anything",
    "ceiling",
    "during",
    "evening",
    "everything",
    "morning",
    "nothing",
    "something",
    "spring",
    "string",
    "thing",
    "things",
];

pub fn is_time_unit(token: &str) -> bool {
    TIME_UNITS.contains(&token)
}

pub fn is_number(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit()) || NUMBER_WORDS.contains(&token)
}

pub fn is_gerund(token: &str) -> bool {
    token.len() >= 5 && token.ends_with("ing") && !ING_NOUNS.contains(&token)
}

/// Every word covered by a closed-class table.
pub fn closed_class_words() -> impl Iterator<Item = &'static str> {
    DETERMINERS
        .iter()
        .chain(PREPOSITIONS)
        .chain(CONJUNCTIONS)
        .chain(MODALS)
        .chain(NEGATORS)
        .chain(ADVERBS)
        .chain(NUMBER_WORDS)
        .chain(TIME_UNITS)
        .chain(&[
            "has", "have", "had", "having", "is", "are", "am", "was", "were", "been", "be", "does", "do",
            "did", "patient",
        ])
        .copied()
}

fn verb_form(token: &str, prev: Option<PosTag>) -> Option<PosTag> {
    let after_aux = matches!(prev, Some(PosTag::NEG) | Some(PosTag::MD));
    Some(match token {
        "has" | "is" | "are" | "am" | "does" => PosTag::VBZ,
        "have" | "do" if after_aux => PosTag::VB,
        "have" | "do" => PosTag::VBZ,
        "had" | "was" | "were" | "been" | "did" => PosTag::VBD,
        "be" => PosTag::VB,
        "having" | "being" => PosTag::VBG,
        _ => return None,
    })
}

/// Tags one lowercase token given the tag of the token before it.
///
/// Priority: closed-class tables, digits and number words, severity cues,
/// adjective supports, "-ing", "-ly", plural "-s" with noun evidence, then NN.
pub fn pos_tag(token: &str, prev: Option<PosTag>, lexicon: &Lexicon) -> PosTag {
    if DETERMINERS.contains(&token) {
        return PosTag::DT;
    }
    if PREPOSITIONS.contains(&token) {
        return PosTag::IN;
    }
    if CONJUNCTIONS.contains(&token) {
        return PosTag::CC;
    }
    if MODALS.contains(&token) {
        return PosTag::MD;
    }
    if NEGATORS.contains(&token) {
        return PosTag::NEG;
    }
    if let Some(tag) = verb_form(token, prev) {
        return tag;
    }
    if ADVERBS.contains(&token) {
        return PosTag::RB;
    }
    if is_number(token) {
        return PosTag::CD;
    }
    if lexicon.is_severity_cue(token) {
        return PosTag::JJ;
    }
    if lexicon.is_adjective_token(token) {
        return PosTag::JJ;
    }
    let known = lexicon.is_noun_token(token) || is_time_unit(token);
    if matches!(prev, Some(PosTag::MD) | Some(PosTag::NEG))
        && !known
        && !is_gerund(token)
        && token != "patient"
    {
        return PosTag::VB;
    }
    if is_gerund(token) {
        return PosTag::VBG;
    }
    if token.len() > 4 && token.ends_with("ly") {
        return PosTag::RB;
    }
    if token.len() > 2 && token.ends_with('s') && !token.ends_with("ss") {
        let stem = &token[..token.len() - 1];
        if known || lexicon.is_noun_token(stem) || is_time_unit(stem) {
            return PosTag::NNS;
        }
    }
    PosTag::NN
}

/// Tags a whole token sequence left to right.
pub fn tag_sequence<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Vec<PosTag> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut prev = None;
    for t in tokens {
        let tag = pos_tag(t.as_ref(), prev, lexicon);
        out.push(tag);
        prev = Some(tag);
    }
    out
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "DT" => PosTag::DT,
            "NN" => PosTag::NN,
            "NNS" => PosTag::NNS,
            "JJ" => PosTag::JJ,
            "RB" => PosTag::RB,
            "VB" => PosTag::VB,
            "VBZ" => PosTag::VBZ,
            "VBD" => PosTag::VBD,
            "VBG" => PosTag::VBG,
            "MD" => PosTag::MD,
            "IN" => PosTag::IN,
            "CC" => PosTag::CC,
            "CD" => PosTag::CD,
            "NEG" => PosTag::NEG,
            other => return Err(format!("unknown tag {other:?}")),
        })
    }
}
