//! Internal tree representation: semantic nodes and hidden attachments.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, MatchedVia};
use crate::parser::tagger::{self, PosTag};
use crate::parser::ParseTree;
use crate::tree::{Label, ParseNode, Phrase, SemanticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttachmentKind {
    Severity,
    Duration,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub kind: AttachmentKind,
    pub tokens: Vec<String>,
    /// Id of the symptom, list or VP node this attachment modifies.
    pub anchor: usize,
    pub original_subtree: ParseNode,
    /// Id of the node the subtree was removed from, and its child index then.
    pub parent: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InternalTree {
    pub root: ParseNode,
    pub attachments: Vec<Attachment>,
    pub sentence_ref: usize,
}

impl InternalTree {
    pub fn patient(&self) -> Option<&ParseNode> {
        self.root
            .walk()
            .into_iter()
            .find(|n| n.is_semantic(SemanticKind::PatientEntity))
    }

    pub fn symptoms(&self) -> Vec<&ParseNode> {
        self.root
            .walk()
            .into_iter()
            .filter(|n| n.is_semantic(SemanticKind::SymptomEntity))
            .collect()
    }

    pub fn vp(&self) -> Option<&ParseNode> {
        self.root.children.iter().find(|c| c.is_phrase(Phrase::VP))
    }

    /// Puts every hidden subtree back where it was taken from.
    pub fn restore(&self) -> Result<ParseNode> {
        let mut root = self.root.clone();
        for a in self.attachments.iter().rev() {
            let parent = root
                .find_by_id_mut(a.parent)
                .ok_or(Error::DanglingAttachment(a.parent))?;
            if a.index > parent.children.len() {
                return Err(Error::DanglingAttachment(a.parent));
            }
            parent.children.insert(a.index, a.original_subtree.clone());
        }
        Ok(root)
    }

    /// Bracketed tree followed by an `@attachments` block.
    pub fn debug_dump(&self) -> String {
        let mut out = self.root.bracketed();
        out.push_str("\n@attachments\n");
        for a in &self.attachments {
            let anchor = self
                .root
                .find_by_id(a.anchor)
                .map(anchor_name)
                .unwrap_or_else(|| "?".into());
            let _ = writeln!(out, "{:?} \"{}\" -> {}", a.kind, a.tokens.join(" "), anchor);
        }
        out
    }
}

fn anchor_name(node: &ParseNode) -> String {
    match node.label {
        Label::Semantic(SemanticKind::SymptomEntity) => node.attr("label").unwrap_or("").to_string(),
        Label::Semantic(SemanticKind::ListNode) => "LIST".into(),
        other => other.to_string(),
    }
}

/// Replaces the subject with a patient node and every lexicon match with a
/// symptom node, wraps coordinated symptoms in a list node and assigns ids.
pub fn generate_semantic_nodes(tree: &ParseTree, lexicon: &Lexicon) -> Result<InternalTree> {
    let mut root = tree.root.clone();
    let subject = root
        .children
        .first_mut()
        .filter(|n| n.is_phrase(Phrase::NP) && n.yield_tokens().last().map(String::as_str) == Some("patient"))
        .ok_or(Error::NoPatientNode)?;
    *subject = patient_node(subject);

    for child in root.children.iter_mut().skip(1) {
        mark_symptoms(child, lexicon);
    }
    if let Some(vp) = root.children.iter_mut().find(|c| c.is_phrase(Phrase::VP)) {
        let negated = vp.children.iter().any(|c| c.is_tag(PosTag::NEG));
        for c in vp.children.iter_mut() {
            if is_complement(c) && negated {
                set_negated(c);
            }
        }
    }
    assign_ids(&mut root, &mut 0);
    Ok(InternalTree {
        root,
        attachments: Vec::new(),
        sentence_ref: tree.sentence_ref,
    })
}

fn patient_node(np: &ParseNode) -> ParseNode {
    let mut node = ParseNode::semantic(SemanticKind::PatientEntity, Vec::new());
    node.attributes
        .insert("tokens".into(), np.yield_tokens().join(" "));
    node.attributes.insert("pos".into(), leaf_tags(np).join(" "));
    node
}

fn leaf_tags(node: &ParseNode) -> Vec<String> {
    node.walk()
        .into_iter()
        .filter_map(|n| match (n.label, &n.token) {
            (Label::Tag(t), Some(_)) => Some(t.to_string()),
            _ => None,
        })
        .collect()
}

/// Constituents of the VP that carry its content rather than modify it.
fn is_complement(node: &ParseNode) -> bool {
    match node.label {
        Label::Phrase(Phrase::NP) => node.attr("temporal") != Some("true"),
        Label::Phrase(Phrase::ADJP | Phrase::CcList) => true,
        Label::Semantic(SemanticKind::ListNode) => true,
        Label::Tag(PosTag::VBG) => true,
        _ => false,
    }
}

fn mark_symptoms(node: &mut ParseNode, lexicon: &Lexicon) {
    if node.is_leaf() || node.attr("temporal") == Some("true") {
        return;
    }
    for c in node.children.iter_mut() {
        mark_symptoms(c, lexicon);
    }
    if node.is_phrase(Phrase::NP) || node.is_phrase(Phrase::ADJP) {
        replace_matches(node, lexicon);
    }
    if node.is_phrase(Phrase::CcList) {
        let with_symptoms = node
            .children
            .iter()
            .filter(|c| {
                c.walk()
                    .iter()
                    .any(|n| n.is_semantic(SemanticKind::SymptomEntity))
            })
            .count();
        if with_symptoms >= 2 {
            let connective = node
                .children
                .iter()
                .filter_map(|c| c.token.as_deref())
                .find(|t| *t != ",")
                .map_or("and", |t| if t == "or" || t == "nor" { "or" } else { "and" });
            node.label = Label::Semantic(SemanticKind::ListNode);
            node.attributes.insert("connective".into(), connective.into());
        }
    }
}

/// Swaps each lexicon match among the direct leaf children of `node` for a
/// symptom node.
fn replace_matches(node: &mut ParseNode, lexicon: &Lexicon) {
    let mut out = Vec::with_capacity(node.children.len());
    let mut i = 0;
    let kids = std::mem::take(&mut node.children);
    while i < kids.len() {
        if !kids[i].is_leaf() {
            out.push(kids[i].clone());
            i += 1;
            continue;
        }
        let run_end = kids[i..]
            .iter()
            .position(|k| !k.is_leaf())
            .map_or(kids.len(), |p| i + p);
        let run = &kids[i..run_end];
        let tokens: Vec<&str> = run.iter().filter_map(|k| k.token.as_deref()).collect();
        let mut pos = 0;
        for m in lexicon.scan_all_matches(&tokens) {
            out.extend(run[pos..m.start].iter().cloned());
            let fact = lexicon.fact(m.fact);
            let mut sym = ParseNode::semantic(SemanticKind::SymptomEntity, Vec::new());
            let attrs = &mut sym.attributes;
            attrs.insert("concept_id".into(), fact.concept_id.clone());
            attrs.insert("label".into(), fact.label.clone());
            attrs.insert("tokens".into(), tokens[m.start..m.end].join(" "));
            let pos_tags: Vec<String> = run[m.start..m.end].iter().map(|k| k.label.to_string()).collect();
            attrs.insert("pos".into(), pos_tags.join(" "));
            let via = match m.matched_via {
                MatchedVia::Noun => "noun",
                MatchedVia::Adjective => "adjective",
            };
            attrs.insert("via".into(), via.into());
            attrs.insert("negated".into(), "false".into());
            out.push(sym);
            pos = m.end;
        }
        out.extend(run[pos..].iter().cloned());
        i = run_end;
    }
    node.children = out;
}

fn set_negated(node: &mut ParseNode) {
    if node.is_semantic(SemanticKind::SymptomEntity) {
        node.attributes.insert("negated".into(), "true".into());
    }
    for c in node.children.iter_mut() {
        set_negated(c);
    }
}

fn assign_ids(node: &mut ParseNode, next: &mut usize) {
    if node.is_leaf() {
        return;
    }
    node.attributes.insert("id".into(), next.to_string());
    *next += 1;
    for c in node.children.iter_mut() {
        assign_ids(c, next);
    }
}

/// Hides modifiers and post-complement constituents, top-down and left to
/// right, recording where each came from.
pub fn detect_attachments(mut tree: InternalTree, lexicon: &Lexicon) -> InternalTree {
    let mut found = Vec::new();
    if let Some(vp) = tree.root.children.iter_mut().find(|c| c.is_phrase(Phrase::VP)) {
        hide_in_vp(vp, lexicon, &mut found);
    }
    tree.attachments = found;
    tree
}

fn hide_in_vp(vp: &mut ParseNode, lexicon: &Lexicon, found: &mut Vec<Attachment>) {
    let vp_id = vp.id().expect("ids assigned");
    let complement_at = vp.children.iter().position(is_complement);
    let vp_anchor = complement_at
        .map(|i| &vp.children[i])
        .and_then(|c| {
            if c.is_semantic(SemanticKind::ListNode) {
                c.id()
            } else {
                last_symptom(c)
            }
        })
        .unwrap_or(vp_id);

    let mut i = 0;
    while i < vp.children.len() {
        let child = &vp.children[i];
        let post = complement_at.is_some_and(|c| i > c);
        let hideable = child.is_phrase(Phrase::PP)
            || child.is_phrase(Phrase::ADVP)
            || (child.is_phrase(Phrase::NP) && child.attr("temporal") == Some("true"));
        if post && hideable {
            let subtree = vp.children.remove(i);
            found.push(attachment(subtree, vp_anchor, vp_id, i, lexicon));
            continue;
        }
        if is_complement(child) {
            hide_modifiers(&mut vp.children[i], lexicon, found);
        }
        i += 1;
    }
}

fn last_symptom(node: &ParseNode) -> Option<usize> {
    node.walk()
        .into_iter()
        .rfind(|n| n.is_semantic(SemanticKind::SymptomEntity))
        .and_then(ParseNode::id)
}

/// Hides adjective and adverb leaves that sit beside a symptom node.
fn hide_modifiers(node: &mut ParseNode, lexicon: &Lexicon, found: &mut Vec<Attachment>) {
    if node.is_leaf() || node.is_semantic(SemanticKind::SymptomEntity) {
        return;
    }
    let has_symptom = node
        .children
        .iter()
        .any(|c| c.is_semantic(SemanticKind::SymptomEntity));
    if has_symptom {
        let id = node.id().expect("ids assigned");
        let mut i = 0;
        while i < node.children.len() {
            let c = &node.children[i];
            if c.is_tag(PosTag::JJ) || c.is_tag(PosTag::RB) {
                let anchor = nearest_symptom(&node.children, i).expect("symptom sibling");
                let subtree = node.children.remove(i);
                found.push(attachment(subtree, anchor, id, i, lexicon));
                continue;
            }
            i += 1;
        }
    }
    for c in node.children.iter_mut() {
        hide_modifiers(c, lexicon, found);
    }
}

fn nearest_symptom(siblings: &[ParseNode], at: usize) -> Option<usize> {
    let is_sym = |n: &&ParseNode| n.is_semantic(SemanticKind::SymptomEntity);
    siblings[at..]
        .iter()
        .find(is_sym)
        .or_else(|| siblings[..at].iter().rev().find(is_sym))
        .and_then(ParseNode::id)
}

fn attachment(
    subtree: ParseNode,
    anchor: usize,
    parent: usize,
    index: usize,
    lexicon: &Lexicon,
) -> Attachment {
    let tokens = subtree.yield_tokens();
    Attachment {
        kind: classify(&subtree, &tokens, lexicon),
        tokens,
        anchor,
        original_subtree: subtree,
        parent,
        index,
    }
}

/// Severity if every token is a severity cue; Duration for a cue head, a
/// number with a time unit, "ago", or a temporal noun phrase; else Generic.
pub fn classify(subtree: &ParseNode, tokens: &[String], lexicon: &Lexicon) -> AttachmentKind {
    if !tokens.is_empty() && tokens.iter().all(|t| lexicon.is_severity_cue(t)) {
        return AttachmentKind::Severity;
    }
    let temporal = subtree.attr("temporal") == Some("true")
        || subtree.walk().iter().any(|n| n.attr("temporal") == Some("true"));
    let head_cue = tokens.first().is_some_and(|t| lexicon.is_duration_cue(t));
    let counted =
        tokens.iter().any(|t| tagger::is_number(t)) && tokens.iter().any(|t| tagger::is_time_unit(t));
    if temporal || head_cue || counted || tokens.iter().any(|t| t == "ago") {
        AttachmentKind::Duration
    } else {
        AttachmentKind::Generic
    }
}

/// Semantic node generation followed by attachment detection.
pub fn build_internal_tree(tree: &ParseTree, lexicon: &Lexicon) -> Result<InternalTree> {
    Ok(detect_attachments(
        generate_semantic_nodes(tree, lexicon)?,
        lexicon,
    ))
}
