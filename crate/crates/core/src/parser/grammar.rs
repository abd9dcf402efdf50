//! The restricted sentence grammar.
//!
//! Terminals are lexical categories ([`Cat`]); a lexicon match spanning
//! several tokens is a single `FactN`/`FactA` terminal so that supported
//! facts stay atomic. Nonterminals whose [`Nt::label`] is `None` are helpers
//! that get spliced into their parent when a derivation is realised as a
//! [`ParseNode`].
//!
//! Rules are listed in priority order. Among competing derivations of the
//! same span the preferred one uses the earlier rule and, for the same rule,
//! gives earlier children the longer spans; children are compared the same
//! way, left to right.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use crate::lexicon::{Lexicon, MatchedVia};
use crate::parser::tagger::{self, PosTag};
use crate::tree::{ParseNode, Phrase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cat {
    Det,
    Patient,
    Noun,
    Time,
    Adj,
    Adv,
    Ago,
    VHave,
    VHad,
    VBe,
    VWas,
    VDo,
    Base,
    Ger,
    Modal,
    Prep,
    Conj,
    Comma,
    Num,
    Neg,
    FactN,
    FactA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nt {
    S,
    NpSubj,
    Vp,
    Np,
    NpT,
    CcList,
    Adjp,
    Pp,
    Advp,
    // helpers
    V,
    C,
    P,
    Po,
    H,
    Nn,
    Pre,
    Pw,
    Am,
    L,
    La,
    Sep,
    Tp,
    Tpre,
    Tw,
    Advs,
}

impl Nt {
    pub fn label(self) -> Option<Phrase> {
        Some(match self {
            Nt::S => Phrase::S,
            Nt::NpSubj | Nt::Np | Nt::NpT => Phrase::NP,
            Nt::Vp => Phrase::VP,
            Nt::CcList => Phrase::CcList,
            Nt::Adjp => Phrase::ADJP,
            Nt::Pp => Phrase::PP,
            Nt::Advp => Phrase::ADVP,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    N(Nt),
    T(Cat),
}

#[derive(Debug, Clone, Copy)]
pub struct Rule {
    pub lhs: Nt,
    pub rhs: &'static [Sym],
}

use Cat::*;
use Sym::{N, T};

macro_rules! rule {
    ($lhs:ident => $($sym:expr),+) => {
        Rule { lhs: Nt::$lhs, rhs: &[$($sym),+] }
    };
}

pub static RULES: &[Rule] = &[
    rule!(S => N(Nt::NpSubj), N(Nt::Vp)),
    rule!(NpSubj => T(Det), T(Patient)),
    rule!(Vp => N(Nt::V), N(Nt::C)),
    rule!(Vp => N(Nt::V), N(Nt::C), N(Nt::P)),
    // verb groups
    rule!(V => T(VHave)),
    rule!(V => T(VHad)),
    rule!(V => T(VHave), T(VHad)),
    rule!(V => T(VDo), T(Neg), T(Base)),
    rule!(V => T(VBe)),
    rule!(V => T(VWas)),
    rule!(V => T(VBe), T(Neg)),
    rule!(V => T(VWas), T(Neg)),
    rule!(V => T(Modal)),
    rule!(V => T(Modal), T(Neg)),
    // complements
    rule!(C => N(Nt::Np)),
    rule!(C => N(Nt::CcList)),
    rule!(C => N(Nt::Adjp)),
    rule!(C => T(Ger)),
    rule!(C => T(Base)),
    rule!(C => T(Base), N(Nt::Np)),
    // noun phrases
    rule!(Np => N(Nt::H)),
    rule!(Np => N(Nt::Pre), N(Nt::H)),
    rule!(H => T(FactN)),
    rule!(H => N(Nt::Nn)),
    rule!(Nn => T(Noun)),
    rule!(Nn => T(Noun), N(Nt::Nn)),
    rule!(Pre => N(Nt::Pw)),
    rule!(Pre => N(Nt::Pw), N(Nt::Pre)),
    rule!(Pw => T(Det)),
    rule!(Pw => T(Num)),
    rule!(Pw => T(Adj)),
    // adjective phrases
    rule!(Adjp => T(FactA)),
    rule!(Adjp => N(Nt::Am), T(FactA)),
    rule!(Adjp => T(Adj)),
    rule!(Am => T(Adj)),
    rule!(Am => T(Adv)),
    rule!(Am => T(Adj), N(Nt::Am)),
    rule!(Am => T(Adv), N(Nt::Am)),
    // coordination
    rule!(CcList => N(Nt::Np), N(Nt::L)),
    rule!(CcList => N(Nt::Adjp), N(Nt::La)),
    rule!(L => N(Nt::Sep), N(Nt::Np)),
    rule!(L => N(Nt::Sep), N(Nt::Np), N(Nt::L)),
    rule!(La => N(Nt::Sep), N(Nt::Adjp)),
    rule!(La => N(Nt::Sep), N(Nt::Adjp), N(Nt::La)),
    rule!(Sep => T(Conj)),
    rule!(Sep => T(Comma)),
    rule!(Sep => T(Comma), T(Conj)),
    // post-complement constituents
    rule!(P => N(Nt::Po)),
    rule!(P => N(Nt::Po), N(Nt::P)),
    rule!(Po => N(Nt::Pp)),
    rule!(Po => N(Nt::Advp)),
    rule!(Po => N(Nt::NpT)),
    rule!(Pp => T(Prep), N(Nt::Np)),
    rule!(Pp => T(Prep), N(Nt::NpT)),
    rule!(NpT => N(Nt::Tp)),
    rule!(NpT => N(Nt::Tpre), N(Nt::Tp)),
    rule!(Tp => T(Time)),
    rule!(Tp => T(Time), T(Ago)),
    rule!(Tpre => N(Nt::Tw)),
    rule!(Tpre => N(Nt::Tw), N(Nt::Tpre)),
    rule!(Tw => T(Det)),
    rule!(Tw => T(Num)),
    rule!(Tw => T(Adj)),
    rule!(Tw => T(Noun)),
    rule!(Advp => N(Nt::Advs)),
    rule!(Advs => T(Adv)),
    rule!(Advs => T(Adv), N(Nt::Advs)),
];

/// Rules for `nt` with their global priority index.
pub fn rules_for(nt: Nt) -> impl Iterator<Item = (usize, &'static Rule)> {
    RULES.iter().enumerate().filter(move |(_, r)| r.lhs == nt)
}

/// One grammar terminal covering `start..end` of the token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terminal {
    pub cat: Cat,
    pub start: usize,
    pub end: usize,
}

fn category(token: &str, tag: PosTag) -> Cat {
    match tag {
        PosTag::DT => Det,
        PosTag::NN | PosTag::NNS if token == "patient" => Patient,
        PosTag::NN | PosTag::NNS if tagger::is_time_unit(token) => Time,
        PosTag::NN | PosTag::NNS => Noun,
        PosTag::JJ => Adj,
        PosTag::RB if token == "ago" => Ago,
        PosTag::RB => Adv,
        PosTag::VBZ => match token {
            "has" | "have" => VHave,
            "does" | "do" => VDo,
            _ => VBe,
        },
        PosTag::VBD => match token {
            "had" => VHad,
            "did" => VDo,
            _ => VWas,
        },
        PosTag::VB => Base,
        PosTag::VBG => Ger,
        PosTag::MD => Modal,
        PosTag::IN => Prep,
        PosTag::CC if token == "," => Comma,
        PosTag::CC => Conj,
        PosTag::CD => Num,
        PosTag::NEG => Neg,
    }
}

/// Tags `tokens` and groups them into grammar terminals.
pub fn terminals<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> (Vec<PosTag>, Vec<Terminal>) {
    let tags = tagger::tag_sequence(tokens, lexicon);
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i].as_ref();
        // the subject noun is never a concept
        let fact = (tok != "patient")
            .then(|| lexicon.match_longest(tokens, i))
            .flatten();
        match fact {
            Some(m) => {
                let cat = match m.matched_via {
                    MatchedVia::Noun => FactN,
                    MatchedVia::Adjective => FactA,
                };
                out.push(Terminal {
                    cat,
                    start: m.start,
                    end: m.end,
                });
                i = m.end;
            }
            None => {
                out.push(Terminal {
                    cat: category(tok, tags[i]),
                    start: i,
                    end: i + 1,
                });
                i += 1;
            }
        }
    }
    (tags, out)
}

/// A derivation over terminal indices, before helper splicing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derivation {
    Leaf(usize),
    Node {
        nt: Nt,
        rule: usize,
        start: usize,
        end: usize,
        children: Vec<Derivation>,
    },
}

impl Derivation {
    pub fn span(&self) -> (usize, usize) {
        match self {
            Derivation::Leaf(i) => (*i, i + 1),
            Derivation::Node { start, end, .. } => (*start, *end),
        }
    }

    /// Pre-order ranking key: for every node its rule index and the lengths of
    /// its children. Smaller keys are preferred, which means lower rule index
    /// first and then longer earlier children.
    pub fn priority_key(&self) -> Vec<(usize, Vec<Reverse<usize>>)> {
        let mut out = Vec::new();
        self.collect_key(&mut out);
        out
    }

    fn collect_key(&self, out: &mut Vec<(usize, Vec<Reverse<usize>>)>) {
        if let Derivation::Node { rule, children, .. } = self {
            let lens = children
                .iter()
                .map(|c| {
                    let (a, b) = c.span();
                    Reverse(b - a)
                })
                .collect();
            out.push((*rule, lens));
            for c in children {
                c.collect_key(out);
            }
        }
    }
}

/// Converts a derivation into a constituency tree, splicing helper nodes.
pub fn realize<S: AsRef<str>>(
    deriv: &Derivation,
    terms: &[Terminal],
    tokens: &[S],
    tags: &[PosTag],
) -> ParseNode {
    let mut nodes = realize_into(deriv, terms, tokens, tags);
    debug_assert_eq!(nodes.len(), 1);
    nodes.remove(0)
}

fn realize_into<S: AsRef<str>>(
    deriv: &Derivation,
    terms: &[Terminal],
    tokens: &[S],
    tags: &[PosTag],
) -> Vec<ParseNode> {
    match deriv {
        Derivation::Leaf(i) => {
            let t = terms[*i];
            (t.start..t.end)
                .map(|k| ParseNode::leaf(tags[k], tokens[k].as_ref()))
                .collect()
        }
        Derivation::Node { nt, children, .. } => {
            let kids: Vec<ParseNode> = children
                .iter()
                .flat_map(|c| realize_into(c, terms, tokens, tags))
                .collect();
            match nt.label() {
                Some(label) => {
                    let mut node = ParseNode::phrase(label, kids);
                    if *nt == Nt::NpT {
                        node.attributes = BTreeMap::from([("temporal".into(), "true".into())]);
                    }
                    vec![node]
                }
                None => kids,
            }
        }
    }
}
