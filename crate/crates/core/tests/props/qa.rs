use std::collections::BTreeSet;
use std::sync::OnceLock;

use consult_kg::error::Error;
use consult_kg::kg::{KGEdge, KGNode, KnowledgeGraph, Relation, PATIENT_ID};
use consult_kg::lexicon::{Lexicon, SupportedFact};
use consult_kg::qa::logic::{neg, pos, Atom, BodyLiteral, Rule};
use consult_kg::qa::{
    bundled_questions, kg_to_facts, Encoder, Literal, QuestionKind, Status, SymbolicProgram,
};
use proptest::prelude::*;

const ATOMS: usize = 12;

/// (head, positive body, negative body) over propositional atoms p0..p11.
type PRule = (usize, Vec<usize>, Vec<usize>);

fn name(i: usize) -> String {
    format!("p{i}")
}

fn program(
    facts: &BTreeSet<usize>,
    rules: &[PRule],
    denials: &[(Vec<usize>, Vec<usize>)],
) -> SymbolicProgram {
    let body = |p: &[usize], n: &[usize]| -> Vec<BodyLiteral> {
        p.iter()
            .map(|&i| pos(Atom::new(&name(i), vec![])))
            .chain(n.iter().map(|&i| neg(Atom::new(&name(i), vec![]))))
            .collect()
    };
    SymbolicProgram {
        facts: facts
            .iter()
            .map(|&i| Literal::new(&name(i), Vec::<String>::new()))
            .collect(),
        rules: rules
            .iter()
            .map(|(h, p, n)| Rule {
                head: Atom::new(&name(*h), vec![]),
                body: body(p, n),
            })
            .collect(),
        denials: denials.iter().map(|(p, n)| body(p, n)).collect(),
    }
}

/// Least model of the positive program left after the reduct by `m`.
fn reduct_model(facts: &BTreeSet<usize>, rules: &[PRule], m: u32) -> u32 {
    let mut model: u32 = facts.iter().map(|&i| 1 << i).sum();
    loop {
        let mut next = model;
        for (h, p, n) in rules {
            if n.iter().any(|&i| m & (1 << i) != 0) {
                continue;
            }
            if p.iter().all(|&i| model & (1 << i) != 0) {
                next |= 1 << h;
            }
        }
        if next == model {
            return model;
        }
        model = next;
    }
}

/// Every stable model, by checking each of the 2^ATOMS interpretations.
fn stable_models(facts: &BTreeSet<usize>, rules: &[PRule]) -> Vec<u32> {
    (0..1u32 << ATOMS)
        .filter(|&m| reduct_model(facts, rules, m) == m)
        .collect()
}

/// A negative dependency inside a dependency cycle.
fn has_negative_cycle(rules: &[PRule]) -> bool {
    let mut reach = [[false; ATOMS]; ATOMS];
    for (h, p, n) in rules {
        for &b in p.iter().chain(n) {
            reach[*h][b] = true;
        }
    }
    for k in 0..ATOMS {
        for i in 0..ATOMS {
            for j in 0..ATOMS {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    rules
        .iter()
        .any(|(h, _, n)| n.iter().any(|&b| b == *h || reach[b][*h]))
}

fn to_bits(model: &BTreeSet<Literal>) -> u32 {
    model
        .iter()
        .map(|l| 1u32 << l.predicate[1..].parse::<usize>().unwrap())
        .sum()
}

fn atom_set(max: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..ATOMS, 0..=max)
}

fn rules(stratified: bool) -> impl Strategy<Value = Vec<PRule>> {
    prop::collection::vec((0..ATOMS, atom_set(3), atom_set(2)), 0..14).prop_map(move |rs| {
        if !stratified {
            return rs;
        }
        // bodies only look at lower atoms, positive ones may also self-refer
        rs.into_iter()
            .map(|(h, p, n)| {
                let p = p.into_iter().filter(|&b| b <= h).collect();
                let n = n.into_iter().filter(|&b| b < h).collect();
                (h, p, n)
            })
            .collect()
    })
}

fn facts() -> impl Strategy<Value = BTreeSet<usize>> {
    prop::collection::btree_set(0..ATOMS, 0..5)
}

pub fn forward_chaining_is_the_unique_stable_model() {
    proptest!(super::cases(256), |(facts in facts(),
        rules in rules(true),
        denials in prop::collection::vec((atom_set(2), atom_set(1)), 0..3))| {
        let prog = program(&facts, &rules, &denials);
        let got = prog.solve().unwrap();
        let stable = stable_models(&facts, &rules);
        prop_assert_eq!(stable.len(), 1);
        prop_assert_eq!(to_bits(&got.derived), stable[0]);
        let m = stable[0];
        let violated = denials.iter().any(|(p, n)| {
            p.iter().all(|&i| m & (1 << i) != 0) && n.iter().all(|&i| m & (1 << i) == 0)
        });
        prop_assert_eq!(got.status == Status::Unsat, violated);
    });
}

pub fn non_stratified_programs_are_rejected() {
    proptest!(super::cases(256), |(facts in facts(), rules in rules(false))| {
        let prog = program(&facts, &rules, &[]);
        match prog.solve() {
            Err(Error::NonStratified(_)) => prop_assert!(has_negative_cycle(&rules)),
            Ok(got) => {
                prop_assert!(!has_negative_cycle(&rules));
                prop_assert_eq!(vec![to_bits(&got.derived)], stable_models(&facts, &rules));
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    });
}

const SEVERITY: &[&str] = &[
    "slight",
    "mild",
    "moderate",
    "bad",
    "severe",
    "terrible",
    "intermittent",
    "more",
    "very",
];
const DURATION: &[&str] = &[
    "three days",
    "a week",
    "couple weeks",
    "last 2 days",
    "yesterday",
    "two months",
    "a while",
    "10 days",
    "today",
    "a fortnight",
];

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(Lexicon::bundled)
}

/// Half the picks land on a concept some question asks about.
fn pick(lex: &Lexicon, i: usize) -> &SupportedFact {
    if i.is_multiple_of(2) {
        let targets: Vec<String> = bundled_questions()
            .into_iter()
            .filter(|q| q.kind == QuestionKind::YesNo)
            .map(|q| q.target)
            .collect();
        lex.fact_by_concept(&targets[(i / 2) % targets.len()]).unwrap()
    } else {
        &lex.facts()[(i / 2) % lex.facts().len()]
    }
}

/// (symptom pick, negated, severities, durations)
type SymptomSpec = (usize, bool, Vec<usize>, Vec<usize>);

fn graph_specs() -> impl Strategy<Value = Vec<SymptomSpec>> {
    prop::collection::vec(
        (
            0..400usize,
            prop::bool::weighted(0.25),
            prop::collection::vec(0..SEVERITY.len(), 0..3),
            prop::collection::vec(0..DURATION.len(), 0..3),
        ),
        0..6,
    )
}

fn build_graph(lex: &Lexicon, specs: &[SymptomSpec]) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new("q");
    for (fact, negated, sevs, durs) in specs {
        let f = pick(lex, *fact);
        let s = g.add_node(KGNode::symptom(&f.label, &f.concept_id));
        let rel = if *negated {
            Relation::DoesNotHaveSymptom
        } else {
            Relation::HasSymptom
        };
        g.add_edge(KGEdge::new(PATIENT_ID, &s, rel));
        if *negated {
            continue;
        }
        for &i in sevs {
            let v = g.add_node(KGNode::severity(SEVERITY[i]));
            g.add_edge(KGEdge::new(&s, &v, Relation::HasSeverity));
        }
        for &i in durs {
            let d = g.add_node(KGNode::duration(DURATION[i]));
            g.add_edge(KGEdge::new(&s, &d, Relation::HasDuration));
        }
    }
    g
}

pub fn answer_is_the_only_satisfiable_constraint() {
    proptest!(super::cases(256), |(specs in graph_specs())| {
        let lex = lexicon();
        let enc = Encoder::new(lex);
        let g = build_graph(lex, &specs);
        prop_assert!(g.validate().is_ok());
        let facts = kg_to_facts(&g);
        for q in bundled_questions() {
            let answer = enc.answer(&q, &facts).unwrap();
            let sat: Vec<String> = q
                .answer_domain()
                .into_iter()
                .filter(|a| enc.encode_question(&q, a, &facts).unwrap().solve().unwrap().status == Status::Sat)
                .collect();
            prop_assert_eq!(sat, vec![answer]);
        }
    });
}

pub fn adding_a_symptom_never_retracts_yes() {
    proptest!(super::cases(256), |(specs in graph_specs(), extra in 0..400usize)| {
        let lex = lexicon();
        let enc = Encoder::new(lex);
        let before = build_graph(lex, &specs);
        let mut after = before.clone();
        let f = pick(lex, extra);
        let s = after.add_node(KGNode::symptom(&f.label, &f.concept_id));
        after.add_edge(KGEdge::new(PATIENT_ID, &s, Relation::HasSymptom));
        for q in bundled_questions().into_iter().filter(|q| q.kind == QuestionKind::YesNo) {
            let was = enc.answer_question(&before, &q).unwrap();
            let now = enc.answer_question(&after, &q).unwrap();
            if was == "yes" {
                prop_assert_eq!(now.as_str(), "yes");
            }
            if q.target == f.concept_id {
                prop_assert_eq!(now.as_str(), "yes");
            }
        }
    });
}

pub fn unmentioned_concepts_answer_no() {
    proptest!(super::cases(256), |(specs in graph_specs())| {
        let lex = lexicon();
        let enc = Encoder::new(lex);
        let g = build_graph(lex, &specs);
        let present: BTreeSet<&str> = g.symptoms().filter_map(|n| n.concept_id.as_deref()).collect();
        for q in bundled_questions().into_iter().filter(|q| q.kind == QuestionKind::YesNo) {
            if !present.contains(q.target.as_str()) {
                prop_assert_eq!(enc.answer_question(&g, &q).unwrap(), "no");
            }
        }
    });
}

pub fn suite() -> Vec<(&'static str, fn())> {
    vec![
        (
            "forward_chaining_is_the_unique_stable_model",
            forward_chaining_is_the_unique_stable_model,
        ),
        (
            "non_stratified_programs_are_rejected",
            non_stratified_programs_are_rejected,
        ),
        (
            "answer_is_the_only_satisfiable_constraint",
            answer_is_the_only_satisfiable_constraint,
        ),
        (
            "adding_a_symptom_never_retracts_yes",
            adding_a_symptom_never_retracts_yes,
        ),
        ("unmentioned_concepts_answer_no", unmentioned_concepts_answer_no),
    ]
}
