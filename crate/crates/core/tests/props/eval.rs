use std::sync::OnceLock;

use consult_kg::corpus::{compare_graphs, inject_noise, Corpus, NoiseSpec, Tier};
use consult_kg::kg::{KGEdge, KGNode, KnowledgeGraph, Pipeline, Relation, PATIENT_ID};
use consult_kg::lexicon::Lexicon;
use consult_kg::reconstruct::{mean_sts, sts};
use proptest::prelude::*;

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(Lexicon::bundled)
}

fn corpus() -> &'static Corpus {
    static C: OnceLock<Corpus> = OnceLock::new();
    C.get_or_init(Corpus::bundled)
}

fn text() -> impl Strategy<Value = String> {
    let word = prop::sample::select(
        &[
            "the",
            "patient",
            "has",
            "severe",
            "headache",
            "fever",
            "for",
            "three",
            "days",
            "no",
            "cough",
            "and",
            "mild",
            "rash",
            "Fever,",
            "headache.",
        ][..],
    );
    prop::collection::vec(word, 0..12).prop_map(|v| v.join(" "))
}

pub fn sts_is_symmetric_and_bounded() {
    proptest!(super::cases(512), |(a in text(), b in text())| {
        let ab = sts(&a, &b);
        prop_assert_eq!(ab, sts(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(sts(&a, &a), 1.0);
    });
}

pub fn mean_sts_is_the_average() {
    proptest!(super::cases(512), |(pairs in prop::collection::vec((text(), text()), 1..6))| {
        let mean = mean_sts(&pairs).unwrap();
        let by_hand = pairs.iter().map(|(a, b)| sts(a, b)).sum::<f64>() / pairs.len() as f64;
        prop_assert!((mean - by_hand).abs() < 1e-12);
    });
}

pub fn noise_is_seed_deterministic() {
    proptest!(super::cases(256), |(idx in 0..50usize,
        typo in 0.0..=1.0f64,
        abbr in 0.0..=1.0f64,
        drop in any::<bool>(),
        seed in any::<u64>())| {
        let note = corpus().notes[idx % corpus().notes.len()].raw();
        let spec = NoiseSpec { typo_rate: typo, abbreviation_rate: abbr, subject_drop: drop, seed };
        prop_assert!(spec.validate().is_ok());
        let a = inject_noise(&note, &spec, lexicon());
        let b = inject_noise(&note, &spec, lexicon());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.note_id, &note.note_id);
        let clean = inject_noise(&note, &NoiseSpec::none(seed), lexicon());
        prop_assert_eq!(clean, note);
    });
}

pub fn node_diff_is_antisymmetric() {
    proptest!(super::cases(256), |(i in 0..30usize, j in 0..30usize)| {
        let gs = &corpus().gold_graphs;
        let (a, b) = (&gs[i % gs.len()], &gs[j % gs.len()]);
        let ab = compare_graphs(a, b);
        let ba = compare_graphs(b, a);
        prop_assert_eq!(&ab.missing_nodes, &ba.extra_nodes);
        prop_assert_eq!(&ab.extra_nodes, &ba.missing_nodes);
        prop_assert!((ab.edge_f1 - ba.edge_f1).abs() < 1e-12);
        if i % gs.len() == j % gs.len() {
            prop_assert!(ab.is_exact() && ab.edge_f1 == 1.0);
        }
    });
}

pub fn sts_examples() {
    assert_eq!(sts("fever", "fever"), 1.0);
    assert_eq!(sts("fever", "cough"), 0.0);
    // content words after stopwords: {severe, headache, three, days} on both
    // sides, "has"/"had" both stopwords, so the count vectors coincide
    let a = "the patient has severe headache for three days";
    let b = "the patient had severe headache for three days";
    let va = [1.0, 1.0, 1.0, 1.0];
    let vb = [1.0, 1.0, 1.0, 1.0];
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((sts(a, b) - dot / (norm(&va) * norm(&vb))).abs() < 1e-12);
    // {severe:1, headache:2} against {headache:1, fever:1}
    let got = sts("severe headache headache", "headache fever");
    let want = 2.0 / ((1.0f64 + 4.0).sqrt() * 2.0f64.sqrt());
    assert!((got - want).abs() < 1e-12);
}

pub fn edge_f1_with_one_missing_severity_edge() {
    let mut gold = KnowledgeGraph::new("g");
    let h = gold.add_node(KGNode::symptom("headache", "25064002"));
    let f = gold.add_node(KGNode::symptom("fever", "386661006"));
    let d = gold.add_node(KGNode::duration("three days"));
    gold.add_edge(KGEdge::new(PATIENT_ID, &h, Relation::HasSymptom));
    gold.add_edge(KGEdge::new(PATIENT_ID, &f, Relation::HasSymptom));
    gold.add_edge(KGEdge::new(&h, &d, Relation::HasDuration));
    let mut pred = gold.clone();
    let s = gold.add_node(KGNode::severity("severe"));
    gold.add_edge(KGEdge::new(&h, &s, Relation::HasSeverity));
    let diff = compare_graphs(&pred, &gold);
    // precision 3/3, recall 3/4
    let (p, r) = (1.0, 0.75);
    assert!((diff.edge_f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
    assert_eq!(diff.missing_edges.len(), 1);
    assert_eq!(diff.missing_nodes.len(), 1);

    pred = KnowledgeGraph::new("g");
    let c = pred.add_node(KGNode::symptom("cough", "49727002"));
    pred.add_edge(KGEdge::new(PATIENT_ID, &c, Relation::HasSymptom));
    assert_eq!(compare_graphs(&pred, &gold).edge_f1, 0.0);
    assert_eq!(compare_graphs(&gold, &gold).edge_f1, 1.0);
}

pub fn gold_graphs_are_valid() {
    for g in &corpus().gold_graphs {
        g.validate().unwrap();
    }
    assert_eq!(corpus().gold_graphs.len(), corpus().tier(Tier::Clean).count());
}

pub fn typos_keep_most_clean_notes_gold_equivalent() {
    let pipeline = Pipeline::new(lexicon());
    for seed in 0..5 {
        let spec = NoiseSpec {
            typo_rate: 0.1,
            abbreviation_rate: 0.0,
            subject_drop: false,
            seed,
        };
        let notes: Vec<_> = corpus().tier(Tier::Clean).collect();
        let exact = notes
            .iter()
            .filter(|n| {
                let g = pipeline
                    .extract(&inject_noise(&n.raw(), &spec, lexicon()))
                    .unwrap();
                compare_graphs(&g, corpus().gold_graph(&n.note_id).unwrap()).is_exact()
            })
            .count();
        assert!(
            exact * 10 >= notes.len() * 9,
            "seed {seed}: {exact}/{}",
            notes.len()
        );
    }
}

pub fn suite() -> Vec<(&'static str, fn())> {
    vec![
        ("sts_is_symmetric_and_bounded", sts_is_symmetric_and_bounded),
        ("mean_sts_is_the_average", mean_sts_is_the_average),
        ("noise_is_seed_deterministic", noise_is_seed_deterministic),
        ("node_diff_is_antisymmetric", node_diff_is_antisymmetric),
        ("sts_examples", sts_examples),
        (
            "edge_f1_with_one_missing_severity_edge",
            edge_f1_with_one_missing_severity_edge,
        ),
        ("gold_graphs_are_valid", gold_graphs_are_valid),
        (
            "typos_keep_most_clean_notes_gold_equivalent",
            typos_keep_most_clean_notes_gold_equivalent,
        ),
    ]
}
