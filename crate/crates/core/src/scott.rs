//! Finite Scott surrogate: from a finite structure `A` build the expanded
//! vocabulary with one predicate `P[a]` per tuple over `A`, the sentences of
//! the theory `T`, and decide whether a candidate `B` expands to a model.
//!
//! Sentences:
//! 1. `P[a](x) -> type_a(x)` with `type_a` the complete atomic type of `a`.
//! 2. every `y` lies in some `P[b]`, and every `P[b]` is realized.
//! 3. for `|a| < bound`: if `P[a](x)` then every `y` has some `b` with
//!    `P[ab](xy)`, and every `b` has some `y` with `P[ab](xy)`.
//!
//! Models of `T` on `B` are closed under union, so `B` expands iff the
//! largest set of pairs closed under (1) and (3) meets (2). That set is the
//! winning region of the `bound`-round back-and-forth game, which is what
//! [`check_expansion`] computes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Game, Position, Side};
use crate::notation::Notation;
use crate::structure::{Elem, FinStructure, Symbol, Tuple, Vocabulary};

pub const MAX_BASE: usize = 5;
pub const MAX_CANDIDATE: usize = 6;

/// Complete atomic type of a tuple: `eq[i]` is the first position holding
/// the same element as position `i`; `atoms` lists the facts among the
/// tuple's elements by first positions. Everything unlisted is false.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AtomicType {
    pub eq: Vec<usize>,
    pub atoms: BTreeSet<(String, Vec<usize>)>,
}

pub fn atomic_type(s: &FinStructure, tuple: &[Elem]) -> AtomicType {
    let first = |e: Elem| tuple.iter().position(|&x| x == e);
    let eq = tuple.iter().map(|&e| first(e).unwrap()).collect();
    let atoms = s
        .facts()
        .filter_map(|(sym, t)| {
            let pos = t.iter().map(|&e| first(e)).collect::<Option<Vec<_>>>()?;
            Some((sym.name().to_string(), pos))
        })
        .collect();
    AtomicType { eq, atoms }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Shape {
    Pi1,
    Pi2,
}

#[derive(Clone, Debug, Serialize)]
pub enum Sentence {
    Type1 { tuple: Tuple, qf: AtomicType },
    Type2 { universe: Vec<Elem> },
    Type3 { tuple: Tuple, universe: Vec<Elem> },
}

impl Sentence {
    pub fn quantifier_shape(&self) -> Shape {
        match self {
            Sentence::Type1 { .. } => Shape::Pi1,
            Sentence::Type2 { .. } | Sentence::Type3 { .. } => Shape::Pi2,
        }
    }
}

fn p_name(tuple: &[Elem]) -> String {
    let parts: Vec<String> = tuple.iter().map(|e| e.to_string()).collect();
    format!("P[{}]", parts.join(","))
}

fn vars(n: usize, from: usize) -> String {
    (from..from + n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sentence::Type1 { tuple, qf } => {
                let xs = vars(tuple.len(), 0);
                let mut parts = Vec::new();
                for (i, &j) in qf.eq.iter().enumerate() {
                    for (k, &l) in qf.eq.iter().enumerate().skip(i + 1) {
                        let rel = if j == l { "=" } else { "!=" };
                        parts.push(format!("x{i}{rel}x{k}"));
                    }
                }
                for (name, pos) in &qf.atoms {
                    let args: Vec<String> = pos.iter().map(|p| format!("x{p}")).collect();
                    parts.push(format!("{name}({})", args.join(",")));
                }
                parts.push("no other atoms".into());
                write!(f, "forall {xs} ({}({xs}) -> {})", p_name(tuple), parts.join(" & "))
            }
            Sentence::Type2 { universe } => {
                let any: Vec<String> = universe.iter().map(|&b| format!("{}(y)", p_name(&[b]))).collect();
                let each: Vec<String> = universe.iter().map(|&b| format!("exists y {}(y)", p_name(&[b]))).collect();
                write!(f, "(forall y ({})) & {}", any.join(" | "), each.join(" & "))
            }
            Sentence::Type3 { tuple, universe } => {
                let xs = vars(tuple.len(), 0);
                let ext = |b: Elem| {
                    let mut t = tuple.clone();
                    t.push(b);
                    format!("{}({xs},y)", p_name(&t))
                };
                let any: Vec<String> = universe.iter().map(|&b| ext(b)).collect();
                let each: Vec<String> = universe.iter().map(|&b| format!("exists y {}", ext(b))).collect();
                write!(
                    f,
                    "forall {xs} ({}({xs}) -> (forall y ({})) & {})",
                    p_name(tuple),
                    any.join(" | "),
                    each.join(" & ")
                )
            }
        }
    }
}

pub struct ExpansionSchema {
    pub base: FinStructure,
    pub tau_star: Arc<Vocabulary>,
    pub bound: usize,
    pub sentences: Vec<Sentence>,
}

impl ExpansionSchema {
    pub fn predicate(&self, tuple: &[Elem]) -> Option<Symbol> {
        self.tau_star.lookup(&p_name(tuple))
    }

    /// Every tuple over the base of length `1..=bound`, shortest first.
    pub fn tuples(&self) -> Vec<Tuple> {
        tuples_upto(&self.base.universe().iter().copied().collect::<Vec<_>>(), self.bound)
    }
}

fn tuples_upto(elems: &[Elem], bound: usize) -> Vec<Tuple> {
    let mut out = Vec::new();
    let mut layer: Vec<Tuple> = vec![Vec::new()];
    for _ in 0..bound {
        layer = layer
            .iter()
            .flat_map(|t| {
                elems.iter().map(move |&e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Builds `T` for `a`. The tuple length bound defaults to `|A| + 1`, the
/// least that rules out candidates larger than `A`.
pub fn build_schema(a: &FinStructure, bound: Option<usize>) -> Result<ExpansionSchema> {
    if a.len() > MAX_BASE {
        return Err(Error::BoundExceeded {
            what: "base structure",
            size: a.len(),
            bound: MAX_BASE,
        });
    }
    if a.is_empty() {
        return Err(Error::PreconditionFailed("the base structure must be nonempty".into()));
    }
    let bound = bound.unwrap_or(a.len() + 1).max(1);
    let universe: Vec<Elem> = a.universe().iter().copied().collect();
    let tuples = tuples_upto(&universe, bound);
    let preds: Vec<Symbol> = tuples.iter().map(|t| Symbol::new(p_name(t), t.len(), Notation::One)).collect();
    let base_vocab: Arc<Vocabulary> = a.vocabulary().clone();
    let tau_star = Vocabulary::new(format!("{}*", a.vocabulary().id()), preds, vec![base_vocab]);
    let mut sentences: Vec<Sentence> = tuples
        .iter()
        .map(|t| Sentence::Type1 {
            tuple: t.clone(),
            qf: atomic_type(a, t),
        })
        .collect();
    sentences.push(Sentence::Type2 {
        universe: universe.clone(),
    });
    sentences.extend(tuples.iter().filter(|t| t.len() < bound).map(|t| Sentence::Type3 {
        tuple: t.clone(),
        universe: universe.clone(),
    }));
    Ok(ExpansionSchema {
        base: a.clone(),
        tau_star,
        bound,
        sentences,
    })
}

/// Interpretation of the `P[a]` on a candidate: tuple over `A` to the set of
/// tuples over `B` in `P[a]`. Missing keys are empty predicates.
pub type Expansion = BTreeMap<Tuple, BTreeSet<Tuple>>;

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionVerdict {
    pub expandable: bool,
    pub witness: Option<Expansion>,
    /// The sentence the largest candidate expansion violates.
    pub failing: Option<String>,
}

fn check_candidate(schema: &ExpansionSchema, b: &FinStructure) -> Result<()> {
    if schema.base.vocabulary().id() != b.vocabulary().id() {
        return Err(Error::VocabularyMismatch {
            left: schema.base.vocabulary().id().to_string(),
            right: b.vocabulary().id().to_string(),
        });
    }
    if b.len() > MAX_CANDIDATE {
        return Err(Error::BoundExceeded {
            what: "candidate structure",
            size: b.len(),
            bound: MAX_CANDIDATE,
        });
    }
    Ok(())
}

fn position(a: &[Elem], c: &[Elem]) -> Position {
    let set: BTreeSet<(Elem, Elem)> = a.iter().copied().zip(c.iter().copied()).collect();
    set.into_iter().collect()
}

pub fn check_expansion(schema: &ExpansionSchema, b: &FinStructure) -> Result<ExpansionVerdict> {
    check_candidate(schema, b)?;
    let a = &schema.base;
    let mut game = Game::new(a, b);
    let root = Vec::new();
    if let Some((side, e)) = game.spoiler_move(&root, schema.bound) {
        let universe = a.universe().iter().copied().collect();
        let clause = match side {
            Side::Right => format!("{e} lies in no P[b]"),
            Side::Left => format!("{} is not realized", p_name(&[e])),
        };
        return Ok(ExpansionVerdict {
            expandable: false,
            witness: None,
            failing: Some(format!("{} fails: {clause}", Sentence::Type2 { universe })),
        });
    }
    let witness = diagonal_witness(&mut game, schema, b).unwrap_or_else(|| reachable_witness(&mut game, schema, b));
    Ok(ExpansionVerdict {
        expandable: true,
        witness: Some(witness),
        failing: None,
    })
}

/// When Duplicator's strategy on the points of `A` in order gives a
/// bijection `h`, the expansion `P[a] = {h(a)}`.
fn diagonal_witness(game: &mut Game, schema: &ExpansionSchema, b: &FinStructure) -> Option<Expansion> {
    let a = &schema.base;
    if a.len() != b.len() || schema.bound <= a.len() {
        return None;
    }
    let mut pos = Vec::new();
    for (k, &x) in a.universe().iter().enumerate() {
        pos = game.answer(&pos, schema.bound - k, Side::Left, x)?;
    }
    let h: BTreeMap<Elem, Elem> = pos.into_iter().collect();
    Some(
        schema
            .tuples()
            .into_iter()
            .map(|t| {
                let image = t.iter().map(|x| h[x]).collect();
                (t, BTreeSet::from([image]))
            })
            .collect(),
    )
}

/// Every pair reachable from the root through winning positions.
fn reachable_witness(game: &mut Game, schema: &ExpansionSchema, b: &FinStructure) -> Expansion {
    let a = &schema.base;
    let mut out = Expansion::new();
    let mut stack: Vec<(Tuple, Tuple)> = vec![(Vec::new(), Vec::new())];
    while let Some((ta, tb)) = stack.pop() {
        if ta.len() == schema.bound {
            continue;
        }
        let pos = position(&ta, &tb);
        for &x in a.universe() {
            for &y in b.universe() {
                if !game.extends(&pos, x, y) || !game.wins(&Game::with(&pos, x, y), schema.bound - ta.len() - 1) {
                    continue;
                }
                let (mut na, mut nb) = (ta.clone(), tb.clone());
                na.push(x);
                nb.push(y);
                if out.entry(na.clone()).or_default().insert(nb.clone()) {
                    stack.push((na, nb));
                }
            }
        }
    }
    out
}

/// The first sentence of `T` that `expansion` violates on `b`.
pub fn failing_sentence(schema: &ExpansionSchema, b: &FinStructure, expansion: &Expansion) -> Option<String> {
    let empty = BTreeSet::new();
    let get = |t: &[Elem]| expansion.get(t).unwrap_or(&empty);
    let elems_b: Vec<Elem> = b.universe().iter().copied().collect();
    for s in &schema.sentences {
        let bad = match s {
            Sentence::Type1 { tuple, qf } => get(tuple)
                .iter()
                .find(|c| c.len() != tuple.len() || !c.iter().all(|&e| b.contains(e)) || atomic_type(b, c) != *qf)
                .map(|c| format!("{c:?}")),
            Sentence::Type2 { universe } => elems_b
                .iter()
                .find(|&&y| universe.iter().all(|&x| !get(&[x]).contains(&vec![y])))
                .map(|y| format!("{y} lies in no P[b]"))
                .or_else(|| {
                    universe
                        .iter()
                        .find(|&&x| get(&[x]).is_empty())
                        .map(|x| format!("{} is not realized", p_name(&[*x])))
                }),
            Sentence::Type3 { tuple, universe } => get(tuple).iter().find_map(|c| {
                let ext = |t: &[Elem], e: Elem| {
                    let mut t = t.to_vec();
                    t.push(e);
                    t
                };
                let forth = universe
                    .iter()
                    .find(|&&x| !elems_b.iter().any(|&y| get(&ext(tuple, x)).contains(&ext(c, y))));
                let back = elems_b
                    .iter()
                    .find(|&&y| !universe.iter().any(|&x| get(&ext(tuple, x)).contains(&ext(c, y))));
                match (forth, back) {
                    (Some(x), _) => Some(format!("at {c:?}, {} is not realized", p_name(&ext(tuple, *x)))),
                    (_, Some(y)) => Some(format!("at {c:?}, {y} extends no P[{tuple:?}, b]")),
                    _ => None,
                }
            }),
        };
        if let Some(why) = bad {
            return Some(format!("{s} fails: {why}"));
        }
    }
    None
}

#[derive(Clone, Debug, Serialize)]
pub struct BackForthReport {
    pub holds: bool,
    pub failure: Option<String>,
}

impl BackForthReport {
    fn fail(why: String) -> Self {
        BackForthReport {
            holds: false,
            failure: Some(why),
        }
    }
}

/// Whether the family `F = {a -> c : P[a](c)}` is a nonempty family of
/// partial isomorphisms with the back and forth extension clauses. A
/// violated sentence of `T` is reported first.
pub fn back_and_forth_check(schema: &ExpansionSchema, b: &FinStructure, expansion: &Expansion) -> BackForthReport {
    if let Some(s) = failing_sentence(schema, b, expansion) {
        return BackForthReport::fail(s);
    }
    let a = &schema.base;
    let family: BTreeSet<(Tuple, Tuple)> = expansion
        .iter()
        .flat_map(|(t, cs)| cs.iter().map(move |c| (t.clone(), c.clone())))
        .collect();
    if family.is_empty() {
        return BackForthReport::fail("the family is empty".into());
    }
    let game = Game::new(a, b);
    for (ta, tc) in &family {
        let mut pos: Position = Vec::new();
        for (&x, &y) in ta.iter().zip(tc) {
            if !b.contains(y) || !game.extends(&pos, x, y) {
                return BackForthReport::fail(format!("{ta:?} -> {tc:?} is not a partial isomorphism"));
            }
            pos = Game::with(&pos, x, y);
        }
    }
    let has = |ta: &[Elem], tc: &[Elem]| family.contains(&(ta.to_vec(), tc.to_vec()));
    let mut roots: Vec<(Tuple, Tuple)> = vec![(Vec::new(), Vec::new())];
    roots.extend(family.iter().filter(|(t, _)| t.len() < schema.bound).cloned());
    for (ta, tc) in roots {
        for &x in a.universe() {
            let forth = b.universe().iter().any(|&y| has(&[&ta[..], &[x]].concat(), &[&tc[..], &[y]].concat()));
            if !forth {
                return BackForthReport::fail(format!("{ta:?} -> {tc:?} does not extend forth to {x}"));
            }
        }
        for &y in b.universe() {
            let back = a.universe().iter().any(|&x| has(&[&ta[..], &[x]].concat(), &[&tc[..], &[y]].concat()));
            if !back {
                return BackForthReport::fail(format!("{ta:?} -> {tc:?} does not extend back to {y}"));
            }
        }
    }
    BackForthReport {
        holds: true,
        failure: None,
    }
}

#[cfg(test)]
mod tests;
