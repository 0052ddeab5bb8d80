//! Finite linear orders, and a wrapper that removes one member from any age.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::One;

use super::{Age, Amalgam, AmalgamQuery, MemberCache};
use crate::coding::{idx, to_usize_capped, Index};
use crate::notation::Notation;
use crate::structure::{Elem, FinStructure, PartialMap, Symbol, Vocabulary};

/// Largest chain `member` will materialize.
const MAX_CHAIN: usize = 1 << 16;

/// Member `i` is the chain `0 < 1 < ... < i-1`.
pub struct LinearOrders {
    vocab: Arc<Vocabulary>,
    lt: Symbol,
    cache: MemberCache,
}

impl LinearOrders {
    pub fn new() -> Self {
        let lt = Symbol::new("<", 2, Notation::One);
        LinearOrders {
            vocab: Vocabulary::finite("linorders", vec![lt.clone()]),
            lt,
            cache: MemberCache::new(1024),
        }
    }

    pub fn order_symbol(&self) -> &Symbol {
        &self.lt
    }

    /// The elements of `s` listed in increasing order, if `<` is a strict
    /// linear order on them.
    fn sorted(&self, s: &FinStructure) -> Option<Vec<Elem>> {
        let mut below: BTreeMap<Elem, usize> = s.universe().iter().map(|&e| (e, 0)).collect();
        for t in s.relation(&self.lt) {
            *below.get_mut(&t[1])? += 1;
        }
        let mut by_rank: Vec<(usize, Elem)> = below.into_iter().map(|(e, r)| (r, e)).collect();
        by_rank.sort_unstable();
        let order: Vec<Elem> = by_rank.iter().map(|&(_, e)| e).collect();
        let ranks_ok = by_rank.iter().enumerate().all(|(k, &(r, _))| r == k);
        let n = order.len();
        let facts_ok = s.relation(&self.lt).count() == n * n.saturating_sub(1) / 2
            && order
                .iter()
                .enumerate()
                .all(|(k, &x)| order[k + 1..].iter().all(|&y| s.holds(&self.lt, &[x, y])));
        (ranks_ok && facts_ok).then_some(order)
    }
}

impl Default for LinearOrders {
    fn default() -> Self {
        Self::new()
    }
}

impl Age for LinearOrders {
    fn tag(&self) -> &str {
        "linorders"
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn member(&self, i: &Index) -> Arc<FinStructure> {
        self.cache.get_or(i, || {
            let n = to_usize_capped(i, MAX_CHAIN) as Elem;
            let mut s = FinStructure::with_universe(self.vocab.clone(), 0..n);
            for x in 0..n {
                for y in x + 1..n {
                    s.add_fact(&self.lt, vec![x, y]).expect("chain fact");
                }
            }
            s
        })
    }

    /// Total, strictly increasing, in range.
    fn decide_embedding(&self, i: &Index, j: &Index, f: &PartialMap) -> bool {
        let n = to_usize_capped(i, MAX_CHAIN) as Elem;
        let m = to_usize_capped(j, MAX_CHAIN) as Elem;
        if f.len() as Elem != n {
            return false;
        }
        let mut prev: Option<Elem> = None;
        for (k, (x, y)) in f.iter().enumerate() {
            if x != k as Elem || y >= m || prev.is_some_and(|p| p >= y) {
                return false;
            }
            prev = Some(y);
        }
        true
    }

    fn validate(&self, s: &FinStructure) -> Result<(), String> {
        if s.vocabulary().id() != self.vocab.id() {
            return Err("wrong vocabulary".into());
        }
        self.sorted(s).map(|_| ()).ok_or_else(|| "not a strict linear order".into())
    }

    fn locate(&self, s: &FinStructure) -> Option<(Index, PartialMap)> {
        let order = self.sorted(s)?;
        let iso = order.iter().enumerate().map(|(k, &e)| (k as Elem, e)).collect();
        Some((idx(order.len() as u64), iso))
    }

    fn constructive_amalgamation(&self) -> bool {
        true
    }

    fn member_size(&self, i: &Index) -> Option<usize> {
        Some(to_usize_capped(i, MAX_CHAIN))
    }

    /// Merges `A` into `B` gap by gap; new points of `A` precede new points
    /// of `B` within a gap.
    fn amalgamate(&self, q: &AmalgamQuery<'_>) -> Option<Amalgam> {
        let oa = self.sorted(q.a)?;
        let ob = self.sorted(q.b)?;
        let oc = self.sorted(q.c)?;
        let c_rank_a: BTreeMap<Elem, usize> = oc.iter().enumerate().map(|(k, &c)| (q.f.get(c).unwrap(), k)).collect();
        let c_rank_b: BTreeMap<Elem, usize> = oc.iter().enumerate().map(|(k, &c)| (q.g.get(c).unwrap(), k)).collect();
        // keys: C points get (2k+1, 0, 0); others (2 * #C below, side, rank)
        let keys = |order: &[Elem], c_rank: &BTreeMap<Elem, usize>, side: usize| {
            let mut seen = 0;
            let mut out = Vec::new();
            for (r, &e) in order.iter().enumerate() {
                match c_rank.get(&e) {
                    Some(&k) => {
                        seen = k + 1;
                        out.push(((2 * k + 1, 0, 0), e, true));
                    }
                    None => out.push(((2 * seen, side, r), e, false)),
                }
            }
            out
        };
        let mut all: Vec<((usize, usize, usize), Elem, bool, bool)> = Vec::new();
        for (key, e, is_c) in keys(&ob, &c_rank_b, 1) {
            all.push((key, e, is_c, false));
        }
        for (key, e, is_c) in keys(&oa, &c_rank_a, 0) {
            if !is_c {
                all.push((key, e, false, true));
            }
        }
        all.sort();
        let n = all.len() as Elem;
        let mut d = FinStructure::with_universe(self.vocab.clone(), 0..n);
        for x in 0..n {
            for y in x + 1..n {
                d.add_fact(&self.lt, vec![x, y]).ok()?;
            }
        }
        let mut g_prime = PartialMap::new();
        let mut f_prime = PartialMap::new();
        let mut b_pos = BTreeMap::new();
        for (pos, &(_, e, _, from_a)) in all.iter().enumerate() {
            if from_a {
                f_prime.insert(e, pos as Elem);
            } else {
                g_prime.insert(e, pos as Elem);
                b_pos.insert(e, pos as Elem);
            }
        }
        for (c, gc) in q.g.iter() {
            f_prime.insert(q.f.get(c)?, b_pos[&gc]);
        }
        Some(Amalgam { d, f_prime, g_prime })
    }
}

/// Wraps an age and removes member `skip` from its enumeration. Used to
/// exhibit a representation that fails the hereditary property.
pub struct SkipMember {
    inner: Arc<dyn Age>,
    skip: Index,
    tag: String,
}

impl SkipMember {
    pub fn new(inner: Arc<dyn Age>, skip: Index) -> Self {
        let tag = format!("{}-without-{}", inner.tag(), skip);
        SkipMember { inner, skip, tag }
    }

    /// Linear orders with the one-element chain removed.
    pub fn broken_linorders() -> Self {
        let mut s = SkipMember::new(Arc::new(LinearOrders::new()), Index::one());
        s.tag = "broken-linorders".into();
        s
    }

    fn shift(&self, i: &Index) -> Index {
        if *i >= self.skip {
            i + 1u32
        } else {
            i.clone()
        }
    }
}

impl Age for SkipMember {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        self.inner.vocabulary()
    }

    fn member(&self, i: &Index) -> Arc<FinStructure> {
        self.inner.member(&self.shift(i))
    }

    fn decide_embedding(&self, i: &Index, j: &Index, f: &PartialMap) -> bool {
        self.inner.decide_embedding(&self.shift(i), &self.shift(j), f)
    }

    fn validate(&self, s: &FinStructure) -> Result<(), String> {
        self.inner.validate(s)
    }

    fn member_size(&self, i: &Index) -> Option<usize> {
        self.inner.member_size(&self.shift(i))
    }
}
