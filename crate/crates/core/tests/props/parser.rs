use std::collections::HashMap;

use consult_kg::lexicon::Lexicon;
use consult_kg::parser::grammar::{rules_for, Cat, Derivation, Nt, Sym, Terminal, RULES};
use consult_kg::parser::{best_derivation, parse_tokens};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_TERMS: usize = 12;

const CATS: &[Cat] = &[
    Cat::Det,
    Cat::Patient,
    Cat::Noun,
    Cat::Time,
    Cat::Adj,
    Cat::Adv,
    Cat::Ago,
    Cat::VHave,
    Cat::VHad,
    Cat::VBe,
    Cat::VWas,
    Cat::VDo,
    Cat::Base,
    Cat::Ger,
    Cat::Modal,
    Cat::Prep,
    Cat::Conj,
    Cat::Comma,
    Cat::Num,
    Cat::Neg,
    Cat::FactN,
    Cat::FactA,
];

/// Every derivation of `nt` over `start..end`, by exhaustive enumeration.
struct Enumerator<'a> {
    cats: &'a [Cat],
    memo: HashMap<(Nt, usize, usize), Vec<Derivation>>,
}

impl Enumerator<'_> {
    fn all(&mut self, nt: Nt, start: usize, end: usize) -> Vec<Derivation> {
        if let Some(v) = self.memo.get(&(nt, start, end)) {
            return v.clone();
        }
        // guards left recursion through the cell being computed
        self.memo.insert((nt, start, end), Vec::new());
        let mut out = Vec::new();
        for (idx, rule) in rules_for(nt) {
            for children in self.seqs(rule.rhs, start, end) {
                out.push(Derivation::Node {
                    nt,
                    rule: idx,
                    start,
                    end,
                    children,
                });
            }
        }
        self.memo.insert((nt, start, end), out.clone());
        out
    }

    fn seqs(&mut self, rhs: &[Sym], start: usize, end: usize) -> Vec<Vec<Derivation>> {
        let Some((first, rest)) = rhs.split_first() else {
            return if start == end {
                vec![Vec::new()]
            } else {
                Vec::new()
            };
        };
        let mut out = Vec::new();
        for mid in start + 1..=end {
            let heads = match *first {
                Sym::T(c) => {
                    if mid == start + 1 && self.cats[start] == c {
                        vec![Derivation::Leaf(start)]
                    } else {
                        Vec::new()
                    }
                }
                Sym::N(n) => self.all(n, start, mid),
            };
            if heads.is_empty() {
                continue;
            }
            let tails = self.seqs(rest, mid, end);
            for h in &heads {
                for t in &tails {
                    let mut v = vec![h.clone()];
                    v.extend(t.iter().cloned());
                    out.push(v);
                }
            }
        }
        out
    }
}

fn oracle(cats: &[Cat]) -> Option<Derivation> {
    let mut e = Enumerator {
        cats,
        memo: HashMap::new(),
    };
    e.all(Nt::S, 0, cats.len())
        .into_iter()
        .min_by_key(|d| d.priority_key())
}

fn generate(nt: Nt, rng: &mut ChaCha8Rng, depth: usize, out: &mut Vec<Cat>) {
    let rules: Vec<_> = rules_for(nt).collect();
    let (_, rule) = if depth > 8 {
        // prefer the shortest right-hand side to terminate
        *rules.iter().min_by_key(|(_, r)| r.rhs.len()).unwrap()
    } else {
        rules[rng.gen_range(0..rules.len())]
    };
    for sym in rule.rhs {
        if out.len() > MAX_TERMS {
            return;
        }
        match *sym {
            Sym::T(c) => out.push(c),
            Sym::N(n) => generate(n, rng, depth + 1, out),
        }
    }
}

fn sequence() -> impl Strategy<Value = Vec<Cat>> {
    let generated = (
        any::<u64>(),
        0..4usize,
        any::<usize>(),
        prop::sample::select(CATS),
    )
        .prop_map(|(seed, mutate, at, cat)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            generate(Nt::S, &mut rng, 0, &mut out);
            out.truncate(MAX_TERMS);
            if mutate == 0 && !out.is_empty() {
                let i = at % out.len();
                out[i] = cat;
            }
            out
        });
    let random = prop::collection::vec(prop::sample::select(CATS), 0..=MAX_TERMS);
    prop_oneof![3 => generated, 1 => random]
}

fn terms(cats: &[Cat]) -> Vec<Terminal> {
    cats.iter()
        .enumerate()
        .map(|(i, &cat)| Terminal {
            cat,
            start: i,
            end: i + 1,
        })
        .collect()
}

const WORDS: &[&str] = &[
    "the", "patient", "has", "had", "is", "was", "does", "not", "no", "have", "severe", "mild", "headache",
    "fever", "cough", "and", "or", ",", "for", "since", "three", "days", "two", "weeks", "ago", "very",
    "tired", "feverish", "a", "week", "pain", "chest", "worse", "today",
];

pub fn chart_matches_enumeration() {
    proptest!(super::cases(300), |(cats in sequence())| {
        prop_assert_eq!(best_derivation(&terms(&cats)), oracle(&cats));
    });
}

pub fn parses_satisfy_tree_invariants() {
    proptest!(super::cases(300), |(rest in prop::collection::vec(prop::sample::select(WORDS), 1..10))| {
        let lex = Lexicon::bundled();
        let mut toks = vec!["the", "patient"];
        toks.extend(rest);
        if let Ok(tree) = parse_tokens(&toks, &lex) {
            prop_assert_eq!(tree.check_parse_invariants(), Ok(()));
            prop_assert_eq!(tree.yield_tokens(), toks.iter().map(|s| s.to_string()).collect::<Vec<_>>());
            prop_assert_eq!(parse_tokens(&toks, &lex).unwrap(), tree);
        }
    });
}

pub fn generator_reaches_every_rule() {
    let mut used = vec![false; RULES.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3000 {
        let mut out = Vec::new();
        generate(Nt::S, &mut rng, 0, &mut out);
        if out.len() > MAX_TERMS {
            continue;
        }
        if let Some(d) = best_derivation(&terms(&out)) {
            for (rule, _) in d.priority_key() {
                used[rule] = true;
            }
        }
    }
    let unused: Vec<usize> = (0..RULES.len()).filter(|&i| !used[i]).collect();
    assert!(
        unused.len() <= RULES.len() / 4,
        "rarely preferred rules: {unused:?}"
    );
}

pub fn suite() -> Vec<(&'static str, fn())> {
    vec![
        ("chart_matches_enumeration", chart_matches_enumeration),
        ("parses_satisfy_tree_invariants", parses_satisfy_tree_invariants),
        ("generator_reaches_every_rule", generator_reaches_every_rule),
    ]
}
