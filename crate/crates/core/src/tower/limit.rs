//! Limit levels. For a limit notation `a` with fundamental sequence `a_n`,
//! a member is a disjoint union of blocks `Q_n`, block `n` carrying a member
//! of level `a_n`. Since the levels share symbols, block `n` speaks through
//! renamed copies `R#n` of the symbols `R` of level `a_n`. `U` is the union
//! of the blocks' `U` points, ordered inside a block by the block's order and
//! across blocks by block number.
//!
//! Index coding: `i` is read as a stream `x_0, x_1, ...`; `x_n = 0` leaves
//! block `n` out and `x_n = j + 1` puts a copy of member `j` of level `a_n`
//! there, element `k` becoming the slot `pair(n, k)`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use super::LevelAge;
use crate::age::{locate_checked, search_member, Age, Amalgam, AmalgamQuery, MemberCache};
use crate::coding::{decode_stream, encode_stream, Index};
use crate::error::{Error, Result};
use crate::notation::{lookup, FundamentalSequence, Notation};
use crate::structure::{Elem, FinStructure, PartialMap, Symbol, SymbolFamily, Vocabulary};

const LOWER_HORIZON: usize = 256;

/// Slot of element `k` in block `n` (Cantor pairing).
pub fn slot(n: u64, k: u64) -> Elem {
    let s = n + k;
    s * (s + 1) / 2 + k
}

pub fn unslot(e: Elem) -> (u64, u64) {
    let mut w = (((8.0 * e as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while w * (w + 1) / 2 > e {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= e {
        w += 1;
    }
    let k = e - w * (w + 1) / 2;
    (w - k, k)
}

fn renamed(sym: &Symbol, n: u64) -> Symbol {
    sym.renamed(format!("{}#{n}", sym.name()))
}

/// The levels `a_n`, materialized on first use.
struct Levels {
    limit: Notation,
    seq: FundamentalSequence,
    built: Mutex<BTreeMap<u64, Arc<dyn LevelAge>>>,
}

impl Levels {
    fn get(&self, n: u64) -> Result<Arc<dyn LevelAge>> {
        if let Some(hit) = self.built.lock().expect("level table poisoned").get(&n) {
            return Ok(hit.clone());
        }
        let a = self.seq.at(n);
        if a.is_limit() {
            return Err(Error::PreconditionFailed(format!(
                "position {n} of {} is the limit notation {a}",
                self.limit
            )));
        }
        let level = super::level(&a)?;
        Ok(self.built.lock().expect("level table poisoned").entry(n).or_insert(level).clone())
    }
}

struct BlockSymbols(Arc<Levels>);

impl SymbolFamily for BlockSymbols {
    fn resolve(&self, name: &str) -> Option<Symbol> {
        let (base, n) = name.rsplit_once('#')?;
        let n: u64 = n.parse().ok()?;
        if name != format!("{base}#{n}") {
            return None;
        }
        let sym = self.0.get(n).ok()?.vocabulary().lookup(base)?;
        Some(renamed(&sym, n))
    }

    fn nth(&self, k: usize) -> Option<Symbol> {
        let (n, j) = unslot(k as u64);
        let sym = self.0.get(n).ok()?.vocabulary().nth(j as usize)?;
        Some(renamed(&sym, n))
    }
}

struct BlockPredicates(Notation);

impl BlockPredicates {
    fn name(&self, n: u64) -> String {
        format!("Q{{{n}}}@{}", self.0)
    }
}

impl SymbolFamily for BlockPredicates {
    fn resolve(&self, name: &str) -> Option<Symbol> {
        let n: u64 = name.strip_prefix("Q{")?.split_once('}')?.0.parse().ok()?;
        (self.name(n) == name).then(|| Symbol::new(name, 1, self.0.clone()))
    }

    fn nth(&self, n: usize) -> Option<Symbol> {
        Some(Symbol::new(self.name(n as u64), 1, self.0.clone()))
    }
}

pub struct LimitAge {
    notation: Notation,
    tag: String,
    levels: Arc<Levels>,
    predicates: BlockPredicates,
    vocab: Arc<Vocabulary>,
    u: Symbol,
    lt: Symbol,
    horizon: usize,
    cache: MemberCache,
}

impl LimitAge {
    /// Materializes levels `a_0 ..= a_horizon` now and the rest on demand.
    pub fn new(a: &Notation, horizon: usize) -> Result<Self> {
        let Notation::Lim(name) = a else {
            return Err(Error::NotLimit(a.to_string()));
        };
        let levels = Arc::new(Levels {
            limit: a.clone(),
            seq: lookup(name)?,
            built: Mutex::new(BTreeMap::new()),
        });
        for n in 0..=horizon as u64 {
            levels.get(n)?;
        }
        let u = Symbol::new(format!("U@{a}"), 1, a.clone());
        let lt = Symbol::new(format!("<@{a}"), 2, a.clone());
        let vocab = Vocabulary::new(
            format!("tau@{a}"),
            vec![u.clone(), lt.clone()],
            vec![Arc::new(BlockPredicates(a.clone())), Arc::new(BlockSymbols(levels.clone()))],
        );
        Ok(LimitAge {
            notation: a.clone(),
            tag: format!("k@{a}"),
            levels,
            predicates: BlockPredicates(a.clone()),
            vocab,
            u,
            lt,
            horizon,
            cache: MemberCache::new(4096),
        })
    }

    /// Level `a_n`.
    pub fn level(&self, n: u64) -> Result<Arc<dyn LevelAge>> {
        self.levels.get(n)
    }

    /// The block predicate `Q_n`.
    pub fn block_symbol(&self, n: u64) -> Symbol {
        Symbol::new(self.predicates.name(n), 1, self.notation.clone())
    }

    /// `sigma(n) = j` for each block present in member `i`.
    pub fn sigma(&self, i: &Index) -> BTreeMap<u64, Index> {
        decode_stream(i)
            .into_iter()
            .enumerate()
            .filter(|(_, x)| *x != Index::from(0u32))
            .map(|(n, x)| (n as u64, x - 1u32))
            .collect()
    }

    /// The blocks of `s` as structures of their levels, on the elements of `s`.
    pub fn blocks(&self, s: &FinStructure) -> std::result::Result<BTreeMap<u64, FinStructure>, String> {
        let mut owner: BTreeMap<Elem, u64> = BTreeMap::new();
        let mut blocks: BTreeMap<u64, FinStructure> = BTreeMap::new();
        let mut level_facts: Vec<(u64, Symbol, &Vec<Elem>)> = Vec::new();
        for (sym, t) in s.facts() {
            if *sym == self.u || *sym == self.lt {
                continue;
            }
            if let Some(q) = self.predicates.resolve(sym.name()) {
                let n = self.block_number(&q);
                if owner.insert(t[0], n).is_some_and(|m| m != n) {
                    return Err(format!("{} lies in two blocks", t[0]));
                }
                continue;
            }
            let (base, n) = sym.name().rsplit_once('#').ok_or_else(|| format!("unexpected symbol {}", sym.name()))?;
            let n: u64 = n.parse().map_err(|_| format!("unexpected symbol {}", sym.name()))?;
            let level = self.level(n).map_err(|e| e.to_string())?;
            let inner = level
                .vocabulary()
                .lookup(base)
                .ok_or_else(|| format!("unexpected symbol {}", sym.name()))?;
            level_facts.push((n, inner, t));
        }
        for &e in s.universe() {
            let n = *owner.get(&e).ok_or_else(|| format!("{e} lies in no block"))?;
            if let std::collections::btree_map::Entry::Vacant(v) = blocks.entry(n) {
                let level = self.level(n).map_err(|e| e.to_string())?;
                v.insert(FinStructure::empty(level.vocabulary().clone()));
            }
            blocks.get_mut(&n).expect("just made").add_element(e);
        }
        for (n, sym, t) in level_facts {
            let block = blocks.get_mut(&n).ok_or_else(|| format!("{}#{n} holds outside block {n}", sym.name()))?;
            block
                .add_fact(&sym, t.clone())
                .map_err(|_| format!("{}#{n} holds outside block {n}", sym.name()))?;
        }
        Ok(blocks)
    }

    fn block_number(&self, q: &Symbol) -> u64 {
        q.name()[2..].split_once('}').and_then(|p| p.0.parse().ok()).expect("resolved block predicate")
    }

    /// Puts blocks (already on disjoint global elements) together, adding
    /// `Q_n`, `U` and the order.
    pub fn assemble(&self, blocks: &BTreeMap<u64, FinStructure>) -> Result<FinStructure> {
        let mut s = FinStructure::with_universe(self.vocab.clone(), blocks.values().flat_map(|b| b.universe().iter().copied()));
        let mut earlier: Vec<Elem> = Vec::new();
        for (&n, b) in blocks {
            let level = self.level(n)?;
            let q = self.block_symbol(n);
            for &e in b.universe() {
                s.add_fact(&q, vec![e])?;
            }
            for (sym, t) in b.facts() {
                s.add_fact(&renamed(sym, n), t.clone())?;
            }
            let points: Vec<Elem> = b.universe().iter().copied().filter(|&e| b.holds(level.u_symbol(), &[e])).collect();
            for &x in &points {
                s.add_fact(&self.u, vec![x])?;
                for &y in &points {
                    if b.holds(level.order_symbol(), &[x, y]) {
                        s.add_fact(&self.lt, vec![x, y])?;
                    }
                }
                for &w in &earlier {
                    s.add_fact(&self.lt, vec![w, x])?;
                }
            }
            earlier.extend(points);
        }
        Ok(s)
    }

    fn locate_in_level(&self, n: u64, b: &FinStructure) -> Option<(Index, PartialMap)> {
        let level = self.level(n).ok()?;
        locate_checked(level.as_ref(), b).or_else(|| search_member(level.as_ref(), b, LOWER_HORIZON))
    }
}

impl Age for LimitAge {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// Blocks whose level cannot be built are left out.
    fn member(&self, i: &Index) -> Arc<FinStructure> {
        self.cache.get_or(i, || {
            let mut blocks = BTreeMap::new();
            for (n, j) in self.sigma(i) {
                let Ok(level) = self.level(n) else { continue };
                let m = level.member(&j);
                let to_slots: PartialMap = m.universe().iter().map(|&k| (k, slot(n, k))).collect();
                blocks.insert(n, m.rename(&to_slots).expect("slots are injective"));
            }
            self.assemble(&blocks).expect("blocks are disjoint")
        })
    }

    fn member_size(&self, i: &Index) -> Option<usize> {
        let mut total = 0;
        for (n, j) in self.sigma(i) {
            if let Ok(level) = self.level(n) {
                total += level.member_size(&j).unwrap_or_else(|| level.member(&j).len());
            }
        }
        Some(total)
    }

    /// Blockwise: each nonempty block of `i` must go slot-for-slot into the
    /// same block of `j` by an embedding of its level.
    fn decide_embedding(&self, i: &Index, j: &Index, f: &PartialMap) -> bool {
        let (di, dj) = (self.member(i), self.member(j));
        if f.domain() != *di.universe() || !f.is_injective() || !f.range().is_subset(dj.universe()) {
            return false;
        }
        let (si, sj) = (self.sigma(i), self.sigma(j));
        let mut parts: BTreeMap<u64, PartialMap> = BTreeMap::new();
        for (x, y) in f.iter() {
            let ((n, k), (m, k2)) = (unslot(x), unslot(y));
            if n != m {
                return false;
            }
            parts.entry(n).or_default().insert(k, k2);
        }
        parts.iter().all(|(n, g)| match (si.get(n), sj.get(n), self.level(*n)) {
            (Some(a), Some(b), Ok(level)) => level.decide_embedding(a, b, g),
            _ => false,
        })
    }

    fn validate(&self, s: &FinStructure) -> std::result::Result<(), String> {
        if s.vocabulary().id() != self.vocab.id() {
            return Err(format!("vocabulary {} is not {}", s.vocabulary().id(), self.vocab.id()));
        }
        let blocks = self.blocks(s)?;
        for (n, b) in &blocks {
            let level = self.level(*n).map_err(|e| e.to_string())?;
            level.validate(b).map_err(|e| format!("block {n}: {e}"))?;
        }
        let expected = self.assemble(&blocks).map_err(|e| e.to_string())?;
        if expected != *s {
            return Err("U or its order disagrees with the blocks".into());
        }
        Ok(())
    }

    /// Absent and empty blocks are not told apart; the index omits both.
    fn locate(&self, s: &FinStructure) -> Option<(Index, PartialMap)> {
        self.validate(s).ok()?;
        let blocks = self.blocks(s).ok()?;
        let top = blocks.keys().next_back().map_or(0, |n| n + 1);
        let mut xs = vec![Index::from(0u32); top as usize];
        let mut iso = PartialMap::new();
        for (&n, b) in &blocks {
            let (j, g) = self.locate_in_level(n, b)?;
            for (k, e) in g.iter() {
                iso.insert(slot(n, k), e);
            }
            xs[n as usize] = j + 1u32;
        }
        Some((encode_stream(&xs), iso))
    }

    fn constructive_amalgamation(&self) -> bool {
        self.level(0).is_ok_and(|l| l.constructive_amalgamation())
    }

    /// Blockwise amalgams from the levels; blocks only in `A` are copied.
    fn amalgamate(&self, q: &AmalgamQuery<'_>) -> Option<Amalgam> {
        let (ba, bb, bc) = (self.blocks(q.a).ok()?, self.blocks(q.b).ok()?, self.blocks(q.c).ok()?);
        let mut next = q.b.universe().iter().next_back().map_or(0, |m| m + 1);
        let mut fresh = || {
            next += 1;
            next - 1
        };
        let mut out: BTreeMap<u64, FinStructure> = bb.clone();
        let mut f_prime = PartialMap::new();
        for (&n, a_block) in &ba {
            let level = self.level(n).ok()?;
            let empty = FinStructure::empty(level.vocabulary().clone());
            let c_block = bc.get(&n).unwrap_or(&empty);
            let Some(b_block) = bb.get(&n) else {
                let copy: PartialMap = a_block.universe().iter().map(|&e| (e, fresh())).collect();
                out.insert(n, a_block.rename(&copy).ok()?);
                f_prime.extend(copy.iter());
                continue;
            };
            let fc = q.f.restrict(c_block.universe());
            let gc = q.g.restrict(c_block.universe());
            let am = level.amalgamate(&AmalgamQuery {
                a: a_block,
                b: b_block,
                c: c_block,
                f: &fc,
                g: &gc,
            })?;
            let mut name = PartialMap::new();
            for (b, d) in am.g_prime.iter() {
                name.insert(d, b);
            }
            for &d in am.d.universe() {
                if name.get(d).is_none() {
                    name.insert(d, fresh());
                }
            }
            out.insert(n, am.d.rename(&name).ok()?);
            f_prime.extend(name.compose(&am.f_prime).iter());
        }
        Some(Amalgam {
            d: self.assemble(&out).ok()?,
            f_prime,
            g_prime: PartialMap::identity(q.b.universe().iter().copied()),
        })
    }
}

impl LevelAge for LimitAge {
    fn notation(&self) -> &Notation {
        &self.notation
    }

    fn u_symbol(&self) -> &Symbol {
        &self.u
    }

    fn order_symbol(&self) -> &Symbol {
        &self.lt
    }

    fn distinguished(&self) -> Vec<Symbol> {
        let mut out = vec![self.u.clone(), self.lt.clone()];
        out.extend((0..=self.horizon as u64).map(|n| self.block_symbol(n)));
        out
    }

    /// The new point goes into the block of `lo` (else of `hi`, else the
    /// least block), above `lo` and below `hi` when `hi` shares the block.
    fn insert_u_point(&self, m: &FinStructure, lo: Option<Elem>, hi: Option<Elem>, fresh: Elem) -> Option<FinStructure> {
        let mut blocks = self.blocks(m).ok()?;
        let block_of = |e: Elem| blocks.iter().find(|(_, b)| b.contains(e)).map(|(n, _)| *n);
        let (lo_n, hi_n) = (lo.map(block_of), hi.map(block_of));
        let (lo_n, hi_n) = (lo_n.map(|n| n.ok_or(())).transpose().ok()?, hi_n.map(|n| n.ok_or(())).transpose().ok()?);
        if let (Some(a), Some(b)) = (lo_n, hi_n) {
            if a > b || (a == b && !m.holds(&self.lt, &[lo?, hi?])) {
                return None;
            }
        }
        let n = lo_n.or(hi_n).or_else(|| blocks.keys().next().copied()).unwrap_or(0);
        let level = self.level(n).ok()?;
        let hi_here = if hi_n == Some(n) { hi } else { None };
        let lo_here = if lo_n == Some(n) { lo } else { None };
        let block = blocks.remove(&n).unwrap_or_else(|| FinStructure::empty(level.vocabulary().clone()));
        let grown = level.insert_u_point(&block, lo_here, hi_here, fresh)?;
        blocks.insert(n, grown);
        self.assemble(&blocks).ok()
    }
}
