//! Passage-level knowledge graphs built from internal trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::augment::{self, Attachment, AttachmentKind, InternalTree};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::parser::tagger::{self, PosTag};
use crate::parser::{self, ParseTree};
use crate::preprocess::{ExpandedSentence, Preprocessor, RawNote};
use crate::tree::{Label, ParseNode, SemanticKind};

pub const PATIENT_ID: &str = "patient";

const COPULAS: &[&str] = &["is", "was", "are", "be", "been"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Patient,
    Symptom,
    Severity,
    Duration,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
}

impl KGNode {
    pub fn patient() -> Self {
        KGNode {
            id: PATIENT_ID.into(),
            kind: NodeKind::Patient,
            label: "patient".into(),
            concept_id: None,
        }
    }

    pub fn symptom(label: &str, concept_id: &str) -> Self {
        KGNode {
            id: format!("symptom:{}", slug(label)),
            kind: NodeKind::Symptom,
            label: label.into(),
            concept_id: Some(concept_id.into()),
        }
    }

    pub fn severity(label: &str) -> Self {
        Self::plain(NodeKind::Severity, "severity", label)
    }

    pub fn duration(label: &str) -> Self {
        Self::plain(NodeKind::Duration, "duration", label)
    }

    pub fn other(label: &str) -> Self {
        Self::plain(NodeKind::Other, "other", label)
    }

    fn plain(kind: NodeKind, prefix: &str, label: &str) -> Self {
        KGNode {
            id: format!("{prefix}:{}", slug(label)),
            kind,
            label: label.into(),
            concept_id: None,
        }
    }
}

/// Lowercase id fragment: runs of non-alphanumerics become one underscore.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for part in label
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|p| !p.is_empty())
    {
        if !out.is_empty() {
            out.push('_');
        }
        out.push_str(part);
    }
    if out.is_empty() {
        out.push('-');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    HasSymptom,
    DoesNotHaveSymptom,
    HasSeverity,
    HasDuration,
    Other(String),
}

impl Relation {
    pub fn is_polarity(&self) -> bool {
        matches!(self, Relation::HasSymptom | Relation::DoesNotHaveSymptom)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::HasSymptom => f.write_str("has_symptom"),
            Relation::DoesNotHaveSymptom => f.write_str("does_not_have_symptom"),
            Relation::HasSeverity => f.write_str("has_severity"),
            Relation::HasDuration => f.write_str("has_duration"),
            Relation::Other(label) => write!(f, "other:{label}"),
        }
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "has_symptom" => Relation::HasSymptom,
            "does_not_have_symptom" => Relation::DoesNotHaveSymptom,
            "has_severity" => Relation::HasSeverity,
            "has_duration" => Relation::HasDuration,
            other => match other.strip_prefix("other:") {
                Some(label) => Relation::Other(label.into()),
                None => return Err(Error::Schema(format!("unknown relation {other:?}"))),
            },
        })
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGEdge {
    pub src: String,
    pub dst: String,
    pub relation: Relation,
}

impl KGEdge {
    pub fn new(src: &str, dst: &str, relation: Relation) -> Self {
        KGEdge {
            src: src.into(),
            dst: dst.into(),
            relation,
        }
    }

    fn sort_key(&self) -> (&str, &str, String) {
        (&self.src, &self.dst, self.relation.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub note_id: String,
    nodes: BTreeMap<String, KGNode>,
    edges: Vec<KGEdge>,
    pub unparsed_segments: Vec<String>,
    /// Polarity conflicts resolved while merging; not serialised.
    pub diagnostics: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    note_id: String,
    nodes: Vec<KGNode>,
    edges: Vec<KGEdge>,
    #[serde(default)]
    unparsed_segments: Vec<String>,
}

impl KnowledgeGraph {
    /// A graph holding only the patient node.
    pub fn new(note_id: impl Into<String>) -> Self {
        let mut g = KnowledgeGraph {
            note_id: note_id.into(),
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            unparsed_segments: Vec::new(),
            diagnostics: Vec::new(),
        };
        g.add_node(KGNode::patient());
        g
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KGNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: &str) -> Option<&KGNode> {
        self.nodes.get(id)
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> Vec<&KGEdge> {
        let mut out: Vec<&KGEdge> = self.edges.iter().collect();
        out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        out
    }

    pub fn edges_from<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a KGEdge> {
        self.edges.iter().filter(move |e| e.src == id)
    }

    pub fn symptoms(&self) -> impl Iterator<Item = &KGNode> {
        self.nodes().filter(|n| n.kind == NodeKind::Symptom)
    }

    pub fn has_edge(&self, src: &str, dst: &str, relation: &Relation) -> bool {
        self.edges
            .iter()
            .any(|e| e.src == src && e.dst == dst && &e.relation == relation)
    }

    /// Inserts `node` unless a node with the same id exists; returns the id.
    pub fn add_node(&mut self, node: KGNode) -> String {
        let id = node.id.clone();
        self.nodes.entry(id.clone()).or_insert(node);
        id
    }

    /// Adds an edge, ignoring exact duplicates. A polarity edge replaces the
    /// opposite polarity edge to the same symptom.
    pub fn add_edge(&mut self, edge: KGEdge) {
        if self.edges.contains(&edge) {
            return;
        }
        if edge.relation.is_polarity() {
            let before = self.edges.len();
            self.edges
                .retain(|e| !(e.relation.is_polarity() && e.src == edge.src && e.dst == edge.dst));
            if self.edges.len() != before {
                self.diagnostics.push(format!(
                    "polarity conflict on {}: later {} kept",
                    edge.dst, edge.relation
                ));
            }
        }
        self.edges.push(edge);
    }

    pub fn remove_node(&mut self, id: &str) {
        self.nodes.remove(id);
        self.edges.retain(|e| e.src != id && e.dst != id);
    }

    fn degree(&self, id: &str) -> usize {
        self.edges.iter().filter(|e| e.src == id || e.dst == id).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serialises")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph serialises")
    }

    fn to_file(&self) -> GraphFile {
        GraphFile {
            note_id: self.note_id.clone(),
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges().into_iter().cloned().collect(),
            unparsed_segments: self.unparsed_segments.clone(),
        }
    }

    /// Reads a graph file and checks it against the schema.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let mut g = KnowledgeGraph {
            note_id: file.note_id,
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            unparsed_segments: file.unparsed_segments,
            diagnostics: Vec::new(),
        };
        for n in file.nodes {
            if g.nodes.insert(n.id.clone(), n).is_some() {
                return Err(Error::Schema("duplicate node id".into()));
            }
        }
        for e in file.edges {
            if g.edges.contains(&e) {
                return Err(Error::Schema(format!("duplicate edge {} -> {}", e.src, e.dst)));
            }
            g.edges.push(e);
        }
        g.validate()?;
        Ok(g)
    }

    /// Checks the typed-edge schema and graph invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Schema(m));
        let patients = self.nodes().filter(|n| n.kind == NodeKind::Patient).count();
        if patients != 1 || self.node(PATIENT_ID).map(|n| n.kind) != Some(NodeKind::Patient) {
            return bad(format!("expected one patient node, found {patients}"));
        }
        for (id, n) in &self.nodes {
            if id != &n.id {
                return bad(format!("node key {id} differs from id {}", n.id));
            }
            if (n.kind == NodeKind::Symptom) != n.concept_id.is_some() {
                return bad(format!("node {id}: concept_id present iff symptom"));
            }
        }
        let mut polarity = BTreeSet::new();
        for e in &self.edges {
            let (Some(src), Some(dst)) = (self.node(&e.src), self.node(&e.dst)) else {
                return bad(format!("edge {} -> {} has a missing endpoint", e.src, e.dst));
            };
            if e.src == e.dst {
                return bad(format!("self loop on {}", e.src));
            }
            let expected = match e.relation {
                Relation::HasSymptom | Relation::DoesNotHaveSymptom => {
                    Some((NodeKind::Patient, NodeKind::Symptom))
                }
                Relation::HasSeverity => Some((NodeKind::Symptom, NodeKind::Severity)),
                Relation::HasDuration => Some((NodeKind::Symptom, NodeKind::Duration)),
                Relation::Other(_) => None,
            };
            if let Some(pair) = expected {
                if (src.kind, dst.kind) != pair {
                    return bad(format!(
                        "{} edge between {:?} and {:?}",
                        e.relation, src.kind, dst.kind
                    ));
                }
            }
            if e.relation.is_polarity() && !polarity.insert(e.dst.clone()) {
                return bad(format!("contradictory polarity edges to {}", e.dst));
            }
        }
        let reachable = self.reachable_from(PATIENT_ID);
        if let Some(s) = self.symptoms().find(|s| !reachable.contains(s.id.as_str())) {
            return bad(format!("symptom {} unreachable from patient", s.id));
        }
        Ok(())
    }

    fn reachable_from<'a>(&'a self, start: &'a str) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            for e in self.edges_from(id) {
                if seen.insert(e.dst.as_str()) {
                    stack.push(&e.dst);
                }
            }
        }
        seen
    }
}

/// A sentence subgraph together with the graph nodes each tree node maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub graph: KnowledgeGraph,
    /// Tree node id -> graph node ids (a list node maps to all its members).
    pub anchors: BTreeMap<usize, Vec<String>>,
    /// Tree id of the VP; attachments anchored there hang off the patient.
    pub vp: Option<usize>,
}

fn symptom_node(n: &ParseNode) -> KGNode {
    KGNode::symptom(n.attr("label").unwrap_or(""), n.attr("concept_id").unwrap_or(""))
}

fn polarity_of(n: &ParseNode) -> Relation {
    if n.attr("negated") == Some("true") {
        Relation::DoesNotHaveSymptom
    } else {
        Relation::HasSymptom
    }
}

/// Main subgraph of one sentence: patient, symptoms and the residual
/// subject-verb-complement relation.
pub fn extract_sentence_subgraph(tree: &InternalTree) -> Result<Fragment> {
    tree.patient().ok_or(Error::NoPatientNode)?;
    let mut graph = KnowledgeGraph::new("");
    let mut anchors = BTreeMap::new();
    for s in tree.symptoms() {
        let id = graph.add_node(symptom_node(s));
        graph.add_edge(KGEdge::new(PATIENT_ID, &id, polarity_of(s)));
        if let Some(tid) = s.id() {
            anchors.insert(tid, vec![id]);
        }
    }
    for n in tree.root.walk() {
        if n.is_semantic(SemanticKind::ListNode) {
            let members = n
                .walk()
                .into_iter()
                .filter(|m| m.is_semantic(SemanticKind::SymptomEntity))
                .map(|m| symptom_node(m).id)
                .collect();
            anchors.insert(n.id().expect("ids assigned"), members);
        }
    }
    let vp = tree.vp();
    if let Some(vp) = vp {
        residual_relation(vp, &mut graph);
    }
    Ok(Fragment {
        graph,
        anchors,
        vp: vp.and_then(ParseNode::id),
    })
}

fn contains_symptom(n: &ParseNode) -> bool {
    n.walk()
        .iter()
        .any(|m| m.is_semantic(SemanticKind::SymptomEntity))
}

/// Emits patient -verb-> content for complement material that is not a
/// symptom. Copulas are emitted even with no content, mirroring an
/// argument-less extraction that the nuisance pass later drops.
fn residual_relation(vp: &ParseNode, graph: &mut KnowledgeGraph) {
    let has_complement = vp.children.iter().any(|c| !c.is_leaf());
    let mut verb = Vec::new();
    let mut content = Vec::new();
    let last = vp.children.len().saturating_sub(1);
    for (i, c) in vp.children.iter().enumerate() {
        match (&c.token, c.label) {
            (Some(t), Label::Tag(PosTag::VB | PosTag::VBG)) if !has_complement && i == last && i > 0 => {
                content.push(t.clone());
            }
            (Some(t), _) => verb.push(t.clone()),
            (None, _) if !contains_symptom(c) => content.extend(c.yield_tokens()),
            _ => {}
        }
    }
    let copula = verb.len() == 1 && COPULAS.contains(&verb[0].as_str());
    if content.is_empty() && !copula {
        return;
    }
    let dst = graph.add_node(KGNode::other(&content.join(" ")));
    graph.add_edge(KGEdge::new(PATIENT_ID, &dst, Relation::Other(verb.join(" "))));
}

fn strip_leading_preposition(tokens: &[String]) -> (Option<&str>, &[String]) {
    match tokens.split_first() {
        Some((head, rest)) if tagger::PREPOSITIONS.contains(&head.as_str()) => (Some(head), rest),
        _ => (None, tokens),
    }
}

/// Reconnects attachment subgraphs to the nodes they modify.
pub fn attach_subgraphs(mut fragment: Fragment, attachments: &[Attachment]) -> Result<Fragment> {
    for a in attachments {
        let at_vp = fragment.vp == Some(a.anchor);
        let targets = if at_vp {
            vec![PATIENT_ID.to_string()]
        } else {
            fragment
                .anchors
                .get(&a.anchor)
                .cloned()
                .ok_or(Error::DanglingAttachment(a.anchor))?
        };
        let (head, rest) = strip_leading_preposition(&a.tokens);
        let label = rest.join(" ");
        let g = &mut fragment.graph;

        let inner: Vec<&ParseNode> = a
            .original_subtree
            .walk()
            .into_iter()
            .filter(|n| n.is_semantic(SemanticKind::SymptomEntity))
            .collect();
        if !inner.is_empty() {
            let relation = if head == Some("without") {
                Relation::DoesNotHaveSymptom
            } else {
                Relation::HasSymptom
            };
            for s in inner {
                let id = g.add_node(symptom_node(s));
                g.add_edge(KGEdge::new(PATIENT_ID, &id, relation.clone()));
                if !at_vp {
                    for t in &targets {
                        if t != &id {
                            g.add_edge(KGEdge::new(
                                t,
                                &id,
                                Relation::Other(head.unwrap_or("with").into()),
                            ));
                        }
                    }
                }
            }
            continue;
        }

        let (node, relation) = match a.kind {
            AttachmentKind::Severity if !at_vp => {
                (KGNode::severity(&a.tokens.join(" ")), Relation::HasSeverity)
            }
            AttachmentKind::Duration if !at_vp => (KGNode::duration(&label), Relation::HasDuration),
            _ => (
                KGNode::other(&label),
                Relation::Other(head.unwrap_or("modifier").into()),
            ),
        };
        let dst = g.add_node(node);
        for t in &targets {
            g.add_edge(KGEdge::new(t, &dst, relation.clone()));
        }
    }
    Ok(fragment)
}

/// Drops argument-less copula relations and any Other node left isolated.
pub fn remove_nuisance_relations(mut fragment: Fragment) -> Fragment {
    let g = &mut fragment.graph;
    let empty = |g: &KnowledgeGraph, id: &str| {
        g.node(id)
            .is_some_and(|n| n.kind == NodeKind::Other && n.label.trim().is_empty())
    };
    let nuisance: Vec<KGEdge> = g
        .edges
        .iter()
        .filter(|e| match &e.relation {
            Relation::Other(l) => COPULAS.contains(&l.as_str()) && (empty(g, &e.src) || empty(g, &e.dst)),
            _ => false,
        })
        .cloned()
        .collect();
    g.edges.retain(|e| !nuisance.contains(e));
    let orphans: Vec<String> = g
        .nodes()
        .filter(|n| n.kind == NodeKind::Other && g.degree(&n.id) == 0)
        .map(|n| n.id.clone())
        .collect();
    for id in orphans {
        g.remove_node(&id);
    }
    fragment
}

/// Ordered union of sentence fragments; later polarity edges win.
pub fn merge_passage_graph(note_id: &str, fragments: &[Fragment]) -> KnowledgeGraph {
    let mut out = KnowledgeGraph::new(note_id);
    for f in fragments {
        for n in f.graph.nodes() {
            out.add_node(n.clone());
        }
        for e in &f.graph.edges {
            out.add_edge(e.clone());
        }
    }
    out
}

/// One sentence through parsing, augmentation and subgraph extraction.
pub fn sentence_fragment(sentence: &ExpandedSentence, index: usize, lexicon: &Lexicon) -> Result<Fragment> {
    let tree: ParseTree = parser::parse_sentence(sentence, index, lexicon)?;
    let internal = augment::build_internal_tree(&tree, lexicon)?;
    let fragment = extract_sentence_subgraph(&internal)?;
    let fragment = attach_subgraphs(fragment, &internal.attachments)?;
    Ok(remove_nuisance_relations(fragment))
}

/// Result of running one note through the whole pipeline.
#[derive(Debug, Clone)]
pub struct NoteAnalysis {
    pub sentences: Vec<ExpandedSentence>,
    /// Indices of the sentences that parsed.
    pub parsed: Vec<usize>,
    pub graph: KnowledgeGraph,
}

impl NoteAnalysis {
    /// Text of the sentences that reached the graph.
    pub fn parsed_text(&self) -> String {
        self.parsed
            .iter()
            .map(|&i| self.sentences[i].text())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Full pipeline with a reusable preprocessor.
pub struct Pipeline<'a> {
    lexicon: &'a Lexicon,
    preprocessor: Preprocessor<'a>,
}

impl<'a> Pipeline<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Pipeline {
            lexicon,
            preprocessor: Preprocessor::new(lexicon),
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        self.lexicon
    }

    pub fn analyze(&self, note: &RawNote) -> Result<NoteAnalysis> {
        let sentences = self.preprocessor.preprocess_note(note)?;
        let mut fragments = Vec::new();
        let mut parsed = Vec::new();
        let mut unparsed: Vec<String> = Vec::new();
        for (i, s) in sentences.iter().enumerate() {
            match sentence_fragment(s, i, self.lexicon) {
                Ok(f) => {
                    fragments.push(f);
                    parsed.push(i);
                }
                Err(Error::ParseFailure(_)) => {
                    if !unparsed.contains(&s.source) {
                        unparsed.push(s.source.clone());
                    }
                }
                Err(e) => return Err(e),
            }
        }
        let mut graph = merge_passage_graph(&note.note_id, &fragments);
        graph.unparsed_segments = unparsed;
        Ok(NoteAnalysis {
            sentences,
            parsed,
            graph,
        })
    }

    pub fn extract(&self, note: &RawNote) -> Result<KnowledgeGraph> {
        Ok(self.analyze(note)?.graph)
    }
}

pub fn extract_note_graph(note: &RawNote, lexicon: &Lexicon) -> Result<KnowledgeGraph> {
    Pipeline::new(lexicon).extract(note)
}
