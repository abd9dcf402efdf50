use std::collections::BTreeSet;
use std::sync::OnceLock;

use consult_kg::augment::{build_internal_tree, generate_semantic_nodes};
use consult_kg::kg::{merge_passage_graph, sentence_fragment, KnowledgeGraph, NodeKind, Pipeline, Relation};
use consult_kg::lexicon::Lexicon;
use consult_kg::parser::parse_sentence;
use consult_kg::preprocess::{preprocess_note, Pattern, Polarity, RawNote};
use consult_kg::tree::SemanticKind;
use proptest::prelude::*;

const SYMPTOMS: &[&str] = &[
    "headache",
    "fever",
    "cough",
    "rash",
    "wheeze",
    "fatigue",
    "sore throat",
    "chest pain",
    "shortness of breath",
    "nausea",
    "back pain",
    "dizziness",
];
const ADJECTIVES: &[&str] = &["feverish", "tired", "breathless", "wheezy", "confused", "dizzy"];
const SEVERITY: &[&str] = &["severe", "mild", "slight", "moderate", "terrible", "worsening"];
const TIMING: &[&str] = &[
    "for three days",
    "for two weeks",
    "since yesterday",
    "for a week",
    "at night",
    "for a couple of days",
    "today",
    "three days ago",
];

fn symptom() -> impl Strategy<Value = String> {
    (
        prop::option::of(prop::sample::select(SEVERITY)),
        prop::sample::select(SYMPTOMS),
    )
        .prop_map(|(sev, s)| sev.map_or(s.to_string(), |v| format!("{v} {s}")))
}

fn timing() -> impl Strategy<Value = Option<String>> {
    prop::option::of(prop::sample::select(TIMING).prop_map(str::to_string))
}

fn with_timing(body: String, t: Option<String>) -> String {
    t.map_or(body.clone(), |t| format!("{body} {t}"))
}

fn clause() -> impl Strategy<Value = String> {
    prop_oneof![
        (symptom(), timing()).prop_map(|(s, t)| with_timing(s, t)),
        prop::sample::select(SYMPTOMS).prop_map(|s| format!("no {s}")),
        (
            prop::collection::vec(prop::sample::select(SYMPTOMS), 2..4),
            timing()
        )
            .prop_map(|(v, t)| with_timing(v.join(" and "), t)),
        (symptom(), timing()).prop_map(|(s, t)| with_timing(format!("the patient has {s}"), t)),
        prop::sample::select(SYMPTOMS).prop_map(|s| format!("the patient does not have {s}")),
        prop::sample::select(ADJECTIVES).prop_map(|a| format!("the patient is {a}")),
        prop::sample::select(ADJECTIVES).prop_map(str::to_string),
        Just("wife called 111".to_string()),
    ]
}

fn note() -> impl Strategy<Value = String> {
    prop::collection::vec(clause(), 1..5).prop_map(|v| v.join(". "))
}

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(Lexicon::bundled)
}

fn pipeline() -> &'static Pipeline<'static> {
    static P: OnceLock<Pipeline<'static>> = OnceLock::new();
    P.get_or_init(|| Pipeline::new(lexicon()))
}

fn symptom_ids(g: &KnowledgeGraph) -> BTreeSet<String> {
    g.symptoms().map(|n| n.id.clone()).collect()
}

pub fn expanded_sentences_start_with_subject() {
    proptest!(super::cases(256), |(text in note())| {
        let lex = lexicon();
        let raw = RawNote::new("p", text).unwrap();
        for s in preprocess_note(&raw, lex).unwrap() {
            if s.pattern != Pattern::Unexpandable {
                prop_assert_eq!(&s.tokens[..2], &["the".to_string(), "patient".to_string()]);
                // a completed sentence comes back unchanged
                let again = preprocess_note(&RawNote::new("p", s.text()).unwrap(), lex).unwrap();
                prop_assert_eq!(again.len(), 1);
                prop_assert_eq!(again[0].pattern, Pattern::AlreadyComplete);
                prop_assert_eq!(&again[0].tokens, &s.tokens);
                prop_assert_eq!(again[0].polarity, s.polarity);
            }
        }
    });
}

pub fn augmentation_conserves_and_restores() {
    proptest!(super::cases(256), |(text in note())| {
        let lex = lexicon();
        let raw = RawNote::new("p", text).unwrap();
        for (i, s) in preprocess_note(&raw, lex).unwrap().iter().enumerate() {
            let Ok(parse) = parse_sentence(s, i, lex) else { continue };
            let before = generate_semantic_nodes(&parse, lex).unwrap();
            let after = build_internal_tree(&parse, lex).unwrap();
            let patients = after.root.walk().into_iter()
                .filter(|n| n.is_semantic(SemanticKind::PatientEntity)).count();
            prop_assert_eq!(patients, 1);
            for a in &after.attachments {
                prop_assert!(after.root.find_by_id(a.anchor).is_some());
            }
            prop_assert_eq!(after.restore().unwrap(), before.root.clone());

            let mut visible = after.root.yield_tokens();
            visible.extend(after.attachments.iter().flat_map(|a| a.tokens.clone()));
            visible.sort();
            let mut original = parse.root.yield_tokens();
            original.sort();
            prop_assert_eq!(visible, original);

            if s.polarity == Polarity::Negated {
                for sym in after.symptoms() {
                    prop_assert_eq!(sym.attr("negated"), Some("true"));
                }
            }
        }
    });
}

pub fn graphs_are_valid_and_deterministic() {
    proptest!(super::cases(256), |(text in note())| {
        let raw = RawNote::new("p", text).unwrap();
        let a = pipeline().extract(&raw).unwrap();
        let b = pipeline().extract(&raw).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        a.validate().unwrap();
        let back = KnowledgeGraph::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), a.to_json());
        for e in a.edges() {
            if let Relation::Other(rel) = &e.relation {
                let dst = a.node(&e.dst).unwrap();
                let copula = ["is", "was", "are", "be", "been"].contains(&rel.as_str());
                prop_assert!(!(copula && dst.kind == NodeKind::Other && dst.label.is_empty()));
            }
        }
    });
}

pub fn merged_symptoms_are_union_of_fragments() {
    proptest!(super::cases(256), |(text in note())| {
        let lex = lexicon();
        let raw = RawNote::new("p", text).unwrap();
        let sentences = preprocess_note(&raw, lex).unwrap();
        let fragments: Vec<_> = sentences
            .iter()
            .enumerate()
            .filter_map(|(i, s)| sentence_fragment(s, i, lex).ok())
            .collect();
        let merged = merge_passage_graph("p", &fragments);
        let union: BTreeSet<String> = fragments.iter().flat_map(|f| symptom_ids(&f.graph)).collect();
        prop_assert_eq!(symptom_ids(&merged), union);
    });
}

pub fn suite() -> Vec<(&'static str, fn())> {
    vec![
        (
            "expanded_sentences_start_with_subject",
            expanded_sentences_start_with_subject,
        ),
        (
            "augmentation_conserves_and_restores",
            augmentation_conserves_and_restores,
        ),
        (
            "graphs_are_valid_and_deterministic",
            graphs_are_valid_and_deterministic,
        ),
        (
            "merged_symptoms_are_union_of_fragments",
            merged_symptoms_are_union_of_fragments,
        ),
    ]
}
