//! Constituency parsing of expanded sentences over a restricted grammar.

pub mod grammar;
pub mod tagger;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::preprocess::{ExpandedSentence, Pattern};
use crate::tree::ParseNode;

use grammar::{Derivation, Nt, Sym, Terminal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    pub root: ParseNode,
    pub sentence_ref: usize,
}

impl ParseTree {
    pub fn bracketed(&self) -> String {
        self.root.bracketed()
    }
}

pub fn parse_sentence(
    sentence: &ExpandedSentence,
    sentence_ref: usize,
    lexicon: &Lexicon,
) -> Result<ParseTree> {
    if sentence.pattern == Pattern::Unexpandable {
        return Err(Error::ParseFailure(format!(
            "segment {:?} has no expansion pattern",
            sentence.source
        )));
    }
    let root = parse_tokens(&sentence.tokens, lexicon)?;
    Ok(ParseTree { root, sentence_ref })
}

/// Parses a token sequence into its preferred derivation.
pub fn parse_tokens<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Result<ParseNode> {
    let (tags, terms) = grammar::terminals(tokens, lexicon);
    let deriv = Chart::new(&terms).best(Nt::S, 0, terms.len()).ok_or_else(|| {
        let text: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        Error::ParseFailure(format!("no derivation for {:?}", text.join(" ")))
    })?;
    Ok(grammar::realize(&deriv, &terms, tokens, &tags))
}

/// Preferred derivation of a whole sentence over a terminal sequence.
pub fn best_derivation(terms: &[Terminal]) -> Option<Derivation> {
    Chart::new(terms).best(Nt::S, 0, terms.len())
}

/// Memoised best derivation per `(nonterminal, start, end)` over terminals.
struct Chart<'a> {
    terms: &'a [Terminal],
    memo: HashMap<(Nt, usize, usize), Option<Derivation>>,
}

impl<'a> Chart<'a> {
    fn new(terms: &'a [Terminal]) -> Self {
        Chart {
            terms,
            memo: HashMap::new(),
        }
    }

    fn best(&mut self, nt: Nt, start: usize, end: usize) -> Option<Derivation> {
        if start >= end {
            return None;
        }
        if let Some(hit) = self.memo.get(&(nt, start, end)) {
            return hit.clone();
        }
        let mut found = None;
        for (idx, rule) in grammar::rules_for(nt) {
            if let Some(children) = self.split(rule.rhs, start, end) {
                found = Some(Derivation::Node {
                    nt,
                    rule: idx,
                    start,
                    end,
                    children,
                });
                break;
            }
        }
        self.memo.insert((nt, start, end), found.clone());
        found
    }

    /// Best assignment of `rhs` over `start..end`, earlier symbols longest.
    fn split(&mut self, rhs: &[Sym], start: usize, end: usize) -> Option<Vec<Derivation>> {
        let (first, rest) = rhs.split_first()?;
        if rest.is_empty() {
            return self.symbol(*first, start, end).map(|d| vec![d]);
        }
        // every remaining symbol needs at least one terminal
        let last_mid = end.checked_sub(rest.len())?;
        for mid in (start + 1..=last_mid).rev() {
            let Some(head) = self.symbol(*first, start, mid) else {
                continue;
            };
            if let Some(mut tail) = self.split(rest, mid, end) {
                tail.insert(0, head);
                return Some(tail);
            }
        }
        None
    }

    fn symbol(&mut self, sym: Sym, start: usize, end: usize) -> Option<Derivation> {
        match sym {
            Sym::T(cat) => {
                (end == start + 1 && self.terms[start].cat == cat).then_some(Derivation::Leaf(start))
            }
            Sym::N(nt) => self.best(nt, start, end),
        }
    }
}
