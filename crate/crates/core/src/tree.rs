use std::collections::BTreeMap;
use std::fmt;

use crate::parser::tagger::PosTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phrase {
    S,
    NP,
    VP,
    PP,
    ADJP,
    ADVP,
    CcList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticKind {
    PatientEntity,
    SymptomEntity,
    ListNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Phrase(Phrase),
    Tag(PosTag),
    Semantic(SemanticKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNode {
    pub label: Label,
    pub token: Option<String>,
    pub children: Vec<ParseNode>,
    pub attributes: BTreeMap<String, String>,
}

impl ParseNode {
    pub fn leaf(tag: PosTag, token: impl Into<String>) -> Self {
        ParseNode {
            label: Label::Tag(tag),
            token: Some(token.into()),
            children: Vec::new(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn phrase(label: Phrase, children: Vec<ParseNode>) -> Self {
        ParseNode {
            label: Label::Phrase(label),
            token: None,
            children,
            attributes: BTreeMap::new(),
        }
    }

    pub fn semantic(kind: SemanticKind, children: Vec<ParseNode>) -> Self {
        ParseNode {
            label: Label::Semantic(kind),
            token: None,
            children,
            attributes: BTreeMap::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }

    pub fn is_phrase(&self, p: Phrase) -> bool {
        self.label == Label::Phrase(p)
    }

    pub fn is_tag(&self, t: PosTag) -> bool {
        self.label == Label::Tag(t)
    }

    pub fn is_semantic(&self, k: SemanticKind) -> bool {
        self.label == Label::Semantic(k)
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }

    /// Node id assigned during augmentation.
    pub fn id(&self) -> Option<usize> {
        self.attr("id").and_then(|s| s.parse().ok())
    }

    /// Leaf tokens left to right. Semantic nodes contribute the original
    /// tokens they replaced.
    pub fn yield_tokens(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield(&self, out: &mut Vec<String>) {
        if let Some(t) = &self.token {
            out.push(t.clone());
            return;
        }
        if matches!(
            self.label,
            Label::Semantic(SemanticKind::PatientEntity | SemanticKind::SymptomEntity)
        ) {
            if let Some(toks) = self.attr("tokens") {
                out.extend(toks.split(' ').map(str::to_string));
            }
            return;
        }
        for c in &self.children {
            c.collect_yield(out);
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&ParseNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    pub fn find_by_id(&self, id: usize) -> Option<&ParseNode> {
        self.walk().into_iter().find(|n| n.id() == Some(id))
    }

    pub fn find_by_id_mut(&mut self, id: usize) -> Option<&mut ParseNode> {
        if self.id() == Some(id) {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_by_id_mut(id))
    }

    /// Checks the constituency-tree invariants: leaves carry a token and a
    /// POS tag, internal nodes have children and no token, root is S.
    pub fn check_parse_invariants(&self) -> Result<(), String> {
        if !self.is_phrase(Phrase::S) {
            return Err(format!("root label is {}, expected S", self.label));
        }
        self.check_node()
    }

    fn check_node(&self) -> Result<(), String> {
        match (&self.label, &self.token) {
            (Label::Tag(_), Some(_)) if self.children.is_empty() => Ok(()),
            (Label::Tag(t), _) => Err(format!("tag {t} must be a leaf with a token")),
            (Label::Phrase(p), None) if !self.children.is_empty() => {
                self.children.iter().try_for_each(ParseNode::check_node)
            }
            (Label::Phrase(p), _) => Err(format!("phrase {p:?} must have children and no token")),
            (Label::Semantic(k), _) => Err(format!("unexpected semantic node {k:?}")),
        }
    }

    /// Bracketed form, e.g. `(S (NP (DT the) (NN patient)) ...)`.
    pub fn bracketed(&self) -> String {
        let mut s = String::new();
        self.write_bracketed(&mut s);
        s
    }

    fn write_bracketed(&self, out: &mut String) {
        out.push('(');
        match self.label {
            Label::Semantic(SemanticKind::PatientEntity) => {
                out.push_str("PATIENT ");
                out.push_str(self.attr("tokens").unwrap_or(""));
                out.push(')');
                return;
            }
            Label::Semantic(SemanticKind::SymptomEntity) => {
                out.push_str("SYMPTOM");
                if self.attr("negated") == Some("true") {
                    out.push_str("-NEG");
                }
                out.push('[');
                out.push_str(self.attr("label").unwrap_or(""));
                out.push_str("] ");
                out.push_str(self.attr("tokens").unwrap_or(""));
                out.push(')');
                return;
            }
            Label::Semantic(SemanticKind::ListNode) => {
                out.push_str("LIST:");
                out.push_str(self.attr("connective").unwrap_or("and"));
            }
            _ => out.push_str(&self.label.to_string()),
        }
        if let Some(t) = &self.token {
            out.push(' ');
            out.push_str(t);
        }
        for c in &self.children {
            out.push(' ');
            c.write_bracketed(out);
        }
        out.push(')');
    }
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phrase::CcList => f.write_str("CC-LIST"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Phrase(p) => p.fmt(f),
            Label::Tag(t) => t.fmt(f),
            Label::Semantic(SemanticKind::PatientEntity) => f.write_str("PATIENT"),
            Label::Semantic(SemanticKind::SymptomEntity) => f.write_str("SYMPTOM"),
            Label::Semantic(SemanticKind::ListNode) => f.write_str("LIST"),
        }
    }
}
