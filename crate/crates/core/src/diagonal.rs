//! A representation of the age of finite structures in unary colours `U{n}`,
//! each point carrying at most one colour, built in stages against finite
//! enumeration traces so that no trace equals its embedding relation.
//!
//! Requirement `e` starts at stage `e` and takes the pair `2e, 2e + 1`:
//! `C_{2e}` on `{0, 1}`, `C_{2e+1}` on `{0, 1, 2}`, point 1 coloured `U{2e}`
//! in both, point 2 coloured `U{2e+1}` in the second. Point 0 of the second
//! stays colourless. Point 0 of the first stays colourless until the trace
//! shows `(2e, 2e+1, id)` for `e`, and then takes the least colour not yet
//! ruled out for it. Every other index lists the age canonically.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coding::{decode_set, idx, to_u64, unpair};
use crate::error::{Error, Result};
use crate::notation::Notation;
use crate::structure::{is_embedding, Elem, FinStructure, Literal, PartialMap, Symbol, SymbolFamily, Vocabulary};

/// The colours `U{n}`.
struct Colours;

impl SymbolFamily for Colours {
    fn resolve(&self, name: &str) -> Option<Symbol> {
        let n: u64 = name.strip_prefix('U')?.parse().ok()?;
        (name == format!("U{n}")).then(|| colour(n))
    }

    fn nth(&self, n: usize) -> Option<Symbol> {
        Some(colour(n as u64))
    }
}

pub fn colour(n: u64) -> Symbol {
    Symbol::new(format!("U{n}"), 1, Notation::One)
}

pub fn vocabulary() -> Arc<Vocabulary> {
    Vocabulary::new("colours", Vec::new(), vec![Arc::new(Colours)])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub stage: u64,
    pub e: u64,
    pub i: u64,
    pub j: u64,
    pub map: PartialMap,
}

/// A finite stand-in for the enumerations `W_e`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<TraceEvent>", into = "Vec<TraceEvent>")]
pub struct EnumerationTrace {
    events: Vec<TraceEvent>,
}

impl EnumerationTrace {
    /// Stages must increase strictly along each `e`.
    pub fn new(events: Vec<TraceEvent>) -> Result<Self> {
        let mut last: BTreeMap<u64, u64> = BTreeMap::new();
        for ev in &events {
            if let Some(&prev) = last.get(&ev.e) {
                if ev.stage <= prev {
                    return Err(Error::PreconditionFailed(format!(
                        "trace for e = {} has stage {} after stage {prev}",
                        ev.e, ev.stage
                    )));
                }
            }
            last.insert(ev.e, ev.stage);
        }
        Ok(EnumerationTrace { events })
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    /// Whether `W_e` holds `(i, j, f)` by the end of stage `s`.
    pub fn contains(&self, e: u64, i: u64, j: u64, f: &PartialMap, s: u64) -> bool {
        self.events.iter().any(|ev| ev.e == e && ev.i == i && ev.j == j && &ev.map == f && ev.stage <= s)
    }
}

impl TryFrom<Vec<TraceEvent>> for EnumerationTrace {
    type Error = Error;

    fn try_from(events: Vec<TraceEvent>) -> Result<Self> {
        EnumerationTrace::new(events)
    }
}

impl From<EnumerationTrace> for Vec<TraceEvent> {
    fn from(t: EnumerationTrace) -> Self {
        t.events
    }
}

pub fn identity_on_two() -> PartialMap {
    PartialMap::identity([0, 1])
}

#[derive(Clone, Debug, Serialize)]
pub struct RequirementRecord {
    pub e: u64,
    pub pair: (u64, u64),
    pub started: u64,
    pub fired_at: Option<u64>,
    pub colour: Option<u64>,
    /// Whether the designated triple is in the trace by the horizon.
    pub triple_in_trace: bool,
    /// Whether `id` embeds `C_i` into `C_{i+1}` at the horizon.
    pub id_embeds: bool,
}

/// The partial diagram of one designated structure.
#[derive(Clone, Debug)]
struct Diagram {
    universe: Vec<Elem>,
    decided: BTreeMap<(Elem, u64), bool>,
}

impl Diagram {
    fn new(universe: Vec<Elem>) -> Self {
        Diagram {
            universe,
            decided: BTreeMap::new(),
        }
    }

    /// Rules out, for every point, each colour below `upto` it does not carry.
    fn close_below(&mut self, upto: u64) {
        for &x in &self.universe {
            for n in 0..upto {
                self.decided.entry((x, n)).or_insert(false);
            }
        }
    }

    fn literals(&self) -> Vec<Literal> {
        self.decided
            .iter()
            .map(|(&(x, n), &positive)| Literal {
                symbol: colour(n),
                tuple: vec![x],
                positive,
            })
            .collect()
    }

    /// The structure the diagram converges to: unlisted colours are false.
    fn structure(&self, vocab: &Arc<Vocabulary>) -> FinStructure {
        let mut s = FinStructure::with_universe(vocab.clone(), self.universe.iter().copied());
        for (&(x, n), &v) in &self.decided {
            if v {
                s.add_fact(&colour(n), vec![x]).expect("unary colour on a universe point");
            }
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalReport {
    pub stages: u64,
    pub requirements: Vec<RequirementRecord>,
    #[serde(skip)]
    pub trace: EnumerationTrace,
    #[serde(skip)]
    pub structures: BTreeMap<u64, FinStructure>,
    /// Final diagrams of the designated structures, as literal strings.
    pub diagrams: BTreeMap<u64, Vec<String>>,
    #[serde(skip)]
    vocab: Option<Arc<Vocabulary>>,
}

impl DiagonalReport {
    /// `C_k`: designated structures from the run, the canonical listing
    /// elsewhere.
    pub fn structure(&self, k: u64) -> FinStructure {
        if let Some(s) = self.structures.get(&k) {
            return s.clone();
        }
        let designated = 2 * self.requirements.len() as u64;
        canonical(k - designated, self.vocab.clone().unwrap_or_else(vocabulary))
    }
}

/// The `t`-th structure of a fixed listing of the age: `t` codes a pair of a
/// finite colour set and a count of colourless points.
pub fn canonical(t: u64, vocab: Arc<Vocabulary>) -> FinStructure {
    let (set, plain) = unpair(&idx(t));
    let colours = decode_set(&set);
    let plain = to_u64(&plain).unwrap_or(0);
    let n = colours.len() as u64 + plain;
    let mut s = FinStructure::with_universe(vocab, 0..n);
    for (x, &c) in colours.iter().enumerate() {
        s.add_fact(&colour(c), vec![x as u64]).expect("point in universe");
    }
    s
}

/// Runs `stages` stages for requirements `0..requirements`. Requirement `e`
/// starts at stage `e`, so those with `e >= stages` are not simulated.
pub fn run(trace: &EnumerationTrace, requirements: u64, stages: u64) -> DiagonalReport {
    let vocab = vocabulary();
    let id = identity_on_two();
    let live = requirements.min(stages);
    let mut diagrams: BTreeMap<u64, Diagram> = BTreeMap::new();
    let mut records: Vec<RequirementRecord> = Vec::new();
    for s in 0..stages {
        if s < live {
            let (i, j) = (2 * s, 2 * s + 1);
            let mut ci = Diagram::new(vec![0, 1]);
            let mut cj = Diagram::new(vec![0, 1, 2]);
            ci.decided.insert((1, i), true);
            cj.decided.insert((1, i), true);
            cj.decided.insert((2, j), true);
            diagrams.insert(i, ci);
            diagrams.insert(j, cj);
            records.push(RequirementRecord {
                e: s,
                pair: (i, j),
                started: s,
                fired_at: None,
                colour: None,
                triple_in_trace: false,
                id_embeds: true,
            });
        }
        for r in records.iter_mut().filter(|r| r.fired_at.is_none()) {
            let (i, j) = r.pair;
            if trace.contains(r.e, i, j, &id, s) {
                let ci = diagrams.get_mut(&i).expect("designated");
                let n = (0..).find(|&n| !ci.decided.contains_key(&(0, n))).expect("some colour is open");
                ci.decided.insert((0, n), true);
                r.fired_at = Some(s);
                r.colour = Some(n);
            }
        }
        for d in diagrams.values_mut() {
            d.close_below(s + 1);
        }
    }
    let structures: BTreeMap<u64, FinStructure> = diagrams.iter().map(|(&k, d)| (k, d.structure(&vocab))).collect();
    let horizon = stages.saturating_sub(1);
    for r in &mut records {
        let (i, j) = r.pair;
        r.triple_in_trace = stages > 0 && trace.contains(r.e, i, j, &id, horizon);
        r.id_embeds = is_embedding(&id, &structures[&i], &structures[&j]).expect("same vocabulary");
    }
    DiagonalReport {
        stages,
        requirements: records,
        trace: trace.clone(),
        diagrams: diagrams
            .iter()
            .map(|(&k, d)| (k, d.literals().iter().map(|l| l.to_string()).collect()))
            .collect(),
        structures,
        vocab: Some(vocab),
    }
}

/// Whether each simulated requirement is met: the designated triple is in
/// the trace exactly when `id` fails to embed, checked on the report's own
/// structures by brute force.
pub fn verify(report: &DiagonalReport) -> bool {
    let id = identity_on_two();
    let horizon = report.stages.saturating_sub(1);
    report.requirements.iter().all(|r| {
        let (i, j) = r.pair;
        let in_trace = report.stages > 0 && report.trace.contains(r.e, i, j, &id, horizon);
        let (Some(a), Some(b)) = (report.structures.get(&i), report.structures.get(&j)) else {
            return false;
        };
        let embeds = crate::structure::enumerate_embeddings(a, b)
            .map(|fs| fs.contains(&id))
            .unwrap_or(false);
        in_trace != embeds
    })
}

/// Whether every point of `s` carries at most one colour.
pub fn in_age(s: &FinStructure) -> bool {
    let mut seen: BTreeSet<Elem> = BTreeSet::new();
    s.facts().all(|(_, t)| seen.insert(t[0]))
}

#[cfg(test)]
mod tests;
