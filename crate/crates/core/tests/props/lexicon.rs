use std::collections::BTreeSet;

use consult_kg::lexicon::{FactMatch, Lexicon, MatchedVia};
use proptest::prelude::*;

const WORDS: &[&str] = &["ache", "back", "chest", "dry", "pain", "sore"];

/// (phrase, concept index, is_noun)
type Row = (Vec<&'static str>, usize, bool);

fn rows() -> impl Strategy<Value = Vec<Row>> {
    let phrase = prop::collection::vec(prop::sample::select(WORDS), 1..=3);
    prop::collection::vec((phrase, 0..4usize, any::<bool>()), 0..12).prop_map(|raw| {
        let mut seen = BTreeSet::new();
        raw.into_iter()
            .filter(|(p, _, _)| seen.insert(p.clone()))
            .collect()
    })
}

fn concept_id(c: usize) -> String {
    format!("10{c}")
}

fn lexicon_json(rows: &[Row], reverse: bool) -> String {
    let mut facts = Vec::new();
    let order: Vec<usize> = if reverse {
        (0..4).rev().collect()
    } else {
        (0..4).collect()
    };
    for c in order {
        let mut nouns: Vec<String> = rows
            .iter()
            .filter(|r| r.1 == c && r.2)
            .map(|r| r.0.join(" "))
            .collect();
        let mut adjs: Vec<String> = rows
            .iter()
            .filter(|r| r.1 == c && !r.2)
            .map(|r| r.0.join(" "))
            .collect();
        if reverse {
            nouns.reverse();
            adjs.reverse();
        }
        facts.push(serde_json::json!({
            "concept_id": concept_id(c),
            "label": format!("label{c}"),
            "category": "SignSymptom",
            "noun_supports": nouns,
            "adjective_supports": adjs,
        }));
    }
    serde_json::json!({ "facts": facts }).to_string()
}

/// Tries every (phrase, start) pair directly against the row list.
fn oracle_longest(rows: &[Row], tokens: &[&str], start: usize) -> Option<(usize, usize, MatchedVia, String)> {
    let mut all: Vec<(Vec<String>, usize, bool)> = rows
        .iter()
        .map(|(p, c, n)| (p.iter().map(|s| s.to_string()).collect(), *c, *n))
        .collect();
    all.extend((0..4).map(|c| (vec![format!("label{c}")], c, true)));
    all.iter()
        .filter(|(p, _, _)| {
            start + p.len() <= tokens.len() && p.iter().zip(&tokens[start..]).all(|(a, b)| a == b)
        })
        .map(|(p, c, n)| {
            let via = if *n {
                MatchedVia::Noun
            } else {
                MatchedVia::Adjective
            };
            (start, start + p.len(), via, concept_id(*c))
        })
        .min_by(|a, b| (b.1, a.2, &a.3).cmp(&(a.1, b.2, &b.3)))
}

fn oracle_scan(rows: &[Row], tokens: &[&str]) -> Vec<(usize, usize, MatchedVia, String)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        match oracle_longest(rows, tokens, i) {
            Some(m) => {
                i = m.1;
                out.push(m);
            }
            None => i += 1,
        }
    }
    out
}

fn view(lex: &Lexicon, m: &FactMatch) -> (usize, usize, MatchedVia, String) {
    (m.start, m.end, m.matched_via, lex.fact(m.fact).concept_id.clone())
}

fn tokens() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(
        prop::sample::select(&["ache", "back", "chest", "dry", "pain", "sore", "and", "label1"][..]),
        0..15,
    )
}

pub fn scan_matches_brute_force() {
    proptest!(super::cases(256), |(rows in rows(), toks in tokens())| {
        let lex = Lexicon::from_json_str(&lexicon_json(&rows, false)).unwrap();
        let got: Vec<_> = lex.scan_all_matches(&toks).iter().map(|m| view(&lex, m)).collect();
        prop_assert_eq!(got, oracle_scan(&rows, &toks));
    });
}

pub fn longest_match_dominates() {
    proptest!(super::cases(256), |(rows in rows(), toks in tokens(), start in 0..15usize)| {
        let lex = Lexicon::from_json_str(&lexicon_json(&rows, false)).unwrap();
        prop_assume!(start < toks.len());
        let got = lex.match_longest(&toks, start);
        let best = oracle_longest(&rows, &toks, start);
        prop_assert_eq!(got.map(|m| view(&lex, &m)), best.clone());
        if let Some(m) = got {
            prop_assert!(!m.is_empty() && m.len() <= lex.longest_phrase());
        }
    });
}

pub fn cover_is_disjoint_and_sorted() {
    proptest!(super::cases(256), |(rows in rows(), toks in tokens())| {
        let lex = Lexicon::from_json_str(&lexicon_json(&rows, false)).unwrap();
        let ms = lex.scan_all_matches(&toks);
        for w in ms.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
    });
}

pub fn load_order_does_not_matter() {
    proptest!(super::cases(256), |(rows in rows(), toks in tokens())| {
        let a = Lexicon::from_json_str(&lexicon_json(&rows, false)).unwrap();
        let b = Lexicon::from_json_str(&lexicon_json(&rows, true)).unwrap();
        prop_assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        let va: Vec<_> = a.scan_all_matches(&toks).iter().map(|m| view(&a, m)).collect();
        let vb: Vec<_> = b.scan_all_matches(&toks).iter().map(|m| view(&b, m)).collect();
        prop_assert_eq!(va, vb);
    });
}

pub fn bundled_lexicon_examples() {
    let lex = Lexicon::bundled();
    let m = lex
        .match_longest(&["magnetic", "resonance", "cholangiopancreatography"], 0)
        .unwrap();
    assert_eq!(m.len(), 3);
    assert!(lex.match_longest(&["wife", "called", "111"], 0).is_none());
    let spans: Vec<(usize, usize)> = lex
        .scan_all_matches(&["fever", "and", "cough"])
        .iter()
        .map(|m| (m.start, m.end))
        .collect();
    assert_eq!(spans, [(0, 1), (2, 3)]);
    let spans: Vec<(usize, usize)> = lex
        .scan_all_matches(&["severe", "headache"])
        .iter()
        .map(|m| (m.start, m.end))
        .collect();
    assert_eq!(spans, [(1, 2)]);
}

pub fn suite() -> Vec<(&'static str, fn())> {
    vec![
        ("scan_matches_brute_force", scan_matches_brute_force),
        ("longest_match_dominates", longest_match_dominates),
        ("cover_is_disjoint_and_sorted", cover_is_disjoint_and_sorted),
        ("load_order_does_not_matter", load_order_does_not_matter),
        ("bundled_lexicon_examples", bundled_lexicon_examples),
    ]
}
