//! The base level: finite sets of rationals, each point named by its own
//! colour predicate, all in `U`, ordered as the rationals are.
//!
//! Index coding: `0` is the empty structure; `2c + 1` is the singleton of the
//! rational with code `c`; `2m + 2` is the set of rationals whose codes are
//! listed by the stream `m` (duplicates dropped). A rational code `c` unpairs
//! to `(z, d)` and denotes the reduced fraction `zigzag(z) / (d + 1)`.
//! Elements of a member are `0..n` in increasing rational order.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::LevelAge;
use crate::age::{Age, Amalgam, AmalgamQuery, MemberCache};
use crate::coding::{decode_stream, encode_stream, pair, unpair, zigzag_decode, zigzag_encode, Index};
use crate::notation::Notation;
use crate::structure::{Elem, FinStructure, PartialMap, Symbol, SymbolFamily, Vocabulary};

pub fn decode_rational(code: &Index) -> BigRational {
    let (z, d) = unpair(code);
    BigRational::new(zigzag_decode(&z), BigInt::from(d + 1u32))
}

pub fn encode_rational(r: &BigRational) -> Index {
    let den = r.denom().magnitude() - 1u32;
    pair(&zigzag_encode(r.numer()), &den)
}

/// Name of the colour predicate for `r` at the base level.
pub fn colour_name(r: &BigRational) -> String {
    format!("Q[{r}]@1")
}

fn parse_colour(name: &str) -> Option<BigRational> {
    let inner = name.strip_prefix("Q[")?.strip_suffix("]@1")?;
    let r: BigRational = inner.parse().ok()?;
    (r.to_string() == inner).then_some(r)
}

struct Colours;

impl SymbolFamily for Colours {
    fn resolve(&self, name: &str) -> Option<Symbol> {
        parse_colour(name).map(|_| Symbol::new(name, 1, Notation::One))
    }

    /// Position `n` holds the colour of code `n` when that code is the
    /// canonical code of its rational.
    fn nth(&self, n: usize) -> Option<Symbol> {
        let code = Index::from(n);
        let r = decode_rational(&code);
        (encode_rational(&r) == code).then(|| Symbol::new(colour_name(&r), 1, Notation::One))
    }
}

pub struct BaseAge {
    vocab: Arc<Vocabulary>,
    u: Symbol,
    lt: Symbol,
    notation: Notation,
    cache: MemberCache,
}

impl BaseAge {
    pub fn new() -> Self {
        let u = Symbol::new("U@1", 1, Notation::One);
        let lt = Symbol::new("<@1", 2, Notation::One);
        BaseAge {
            vocab: Vocabulary::new("tau@1", vec![u.clone(), lt.clone()], vec![Arc::new(Colours)]),
            u,
            lt,
            notation: Notation::One,
            cache: MemberCache::new(4096),
        }
    }

    pub fn colour_symbol(&self, r: &BigRational) -> Symbol {
        Symbol::new(colour_name(r), 1, Notation::One)
    }

    /// The rationals of member `i`, increasing.
    pub fn rationals(&self, i: &Index) -> Vec<BigRational> {
        if i.is_zero() {
            return Vec::new();
        }
        if i.bit(0) {
            return vec![decode_rational(&(i >> 1u32))];
        }
        let m = (i - 2u32) >> 1u32;
        let mut rs: Vec<BigRational> = decode_stream(&m).iter().map(decode_rational).collect();
        rs.sort();
        rs.dedup();
        rs
    }

    pub fn index_of(&self, rs: &[BigRational]) -> Index {
        match rs {
            [] => Index::zero(),
            [r] => encode_rational(r) * 2u32 + 1u32,
            _ => {
                let codes: Vec<Index> = rs.iter().map(encode_rational).collect();
                encode_stream(&codes) * 2u32 + 2u32
            }
        }
    }

    fn assemble(&self, points: &[(Elem, BigRational)]) -> FinStructure {
        let mut s = FinStructure::with_universe(self.vocab.clone(), points.iter().map(|p| p.0));
        for (e, r) in points {
            s.add_fact(&self.u, vec![*e]).expect("point in universe");
            s.add_fact(&self.colour_symbol(r), vec![*e]).expect("point in universe");
        }
        for (x, rx) in points {
            for (y, ry) in points {
                if rx < ry {
                    s.add_fact(&self.lt, vec![*x, *y]).expect("points in universe");
                }
            }
        }
        s
    }

    /// The colour of every element, or why the structure is not a member.
    pub fn colouring(&self, s: &FinStructure) -> Result<BTreeMap<Elem, BigRational>, String> {
        let mut colour: BTreeMap<Elem, BigRational> = BTreeMap::new();
        let mut lt_facts: Vec<(Elem, Elem)> = Vec::new();
        for (sym, t) in s.facts() {
            if *sym == self.u {
                continue;
            }
            if *sym == self.lt {
                lt_facts.push((t[0], t[1]));
                continue;
            }
            let r = parse_colour(sym.name()).ok_or_else(|| format!("unexpected symbol {}", sym.name()))?;
            if colour.insert(t[0], r).is_some() {
                return Err(format!("{} carries two colours", t[0]));
            }
        }
        for &e in s.universe() {
            if !s.holds(&self.u, &[e]) {
                return Err(format!("{e} is not in U"));
            }
            if !colour.contains_key(&e) {
                return Err(format!("{e} has no colour"));
            }
        }
        let mut by_colour: Vec<(&BigRational, Elem)> = colour.iter().map(|(e, r)| (r, *e)).collect();
        by_colour.sort();
        for w in by_colour.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(format!("{} and {} share the colour {}", w[0].1, w[1].1, w[0].0));
            }
        }
        let rank: BTreeMap<Elem, usize> = by_colour.iter().enumerate().map(|(k, &(_, e))| (e, k)).collect();
        // distinct facts, all increasing, as many as increasing pairs
        for &(x, y) in &lt_facts {
            if rank[&x] >= rank[&y] {
                return Err(format!("order between {x} and {y} disagrees with colours"));
            }
        }
        let n = colour.len();
        if lt_facts.len() != n * n.saturating_sub(1) / 2 {
            return Err("order is not total on the colours".into());
        }
        Ok(colour)
    }
}

impl Default for BaseAge {
    fn default() -> Self {
        Self::new()
    }
}

impl Age for BaseAge {
    fn tag(&self) -> &str {
        "k1"
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn member(&self, i: &Index) -> Arc<FinStructure> {
        self.cache.get_or(i, || {
            let rs = self.rationals(i);
            let points: Vec<(Elem, BigRational)> = rs.into_iter().enumerate().map(|(k, r)| (k as Elem, r)).collect();
            self.assemble(&points)
        })
    }

    /// Colour-exact total maps. Distinct points carry distinct colours, so
    /// the order is preserved automatically.
    fn decide_embedding(&self, i: &Index, j: &Index, f: &PartialMap) -> bool {
        let (ri, rj) = (self.rationals(i), self.rationals(j));
        f.len() == ri.len()
            && f.iter()
                .enumerate()
                .all(|(k, (x, y))| x == k as Elem && rj.get(y as usize) == Some(&ri[k]))
    }

    fn validate(&self, s: &FinStructure) -> Result<(), String> {
        if s.vocabulary().id() != self.vocab.id() {
            return Err(format!("vocabulary {} is not {}", s.vocabulary().id(), self.vocab.id()));
        }
        self.colouring(s).map(|_| ())
    }

    fn locate(&self, s: &FinStructure) -> Option<(Index, PartialMap)> {
        if s.vocabulary().id() != self.vocab.id() {
            return None;
        }
        let mut by_colour: Vec<(BigRational, Elem)> = self.colouring(s).ok()?.into_iter().map(|(e, r)| (r, e)).collect();
        by_colour.sort();
        let rs: Vec<BigRational> = by_colour.iter().map(|(r, _)| r.clone()).collect();
        let iso = by_colour.iter().enumerate().map(|(k, (_, e))| (k as Elem, *e)).collect();
        Some((self.index_of(&rs), iso))
    }

    fn constructive_amalgamation(&self) -> bool {
        true
    }

    /// Union of the two colour sets; points of `A` whose colour already
    /// occurs in `B` are identified with that point.
    fn amalgamate(&self, q: &AmalgamQuery<'_>) -> Option<Amalgam> {
        let ca = self.colouring(q.a).ok()?;
        let cb = self.colouring(q.b).ok()?;
        let in_b: BTreeMap<&BigRational, Elem> = cb.iter().map(|(e, r)| (r, *e)).collect();
        let mut points: Vec<(Elem, BigRational)> = cb.iter().map(|(e, r)| (*e, r.clone())).collect();
        let mut next = q.b.universe().iter().next_back().map_or(0, |m| m + 1);
        let mut f_prime = PartialMap::new();
        for (a, r) in &ca {
            let image = match in_b.get(r) {
                Some(&b) => b,
                None => {
                    points.push((next, r.clone()));
                    next += 1;
                    next - 1
                }
            };
            f_prime.insert(*a, image);
        }
        Some(Amalgam {
            d: self.assemble(&points),
            f_prime,
            g_prime: PartialMap::identity(q.b.universe().iter().copied()),
        })
    }
}

/// A rational strictly between the bounds (either may be open) avoiding
/// `used`, preferring small denominators.
fn pick_between(lo: Option<&BigRational>, hi: Option<&BigRational>, used: &[&BigRational]) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    let mut lo = lo.cloned();
    let mut hi = hi.cloned();
    loop {
        let candidate = match (&lo, &hi) {
            (None, None) => BigRational::zero(),
            (Some(l), None) => l.floor() + BigRational::one(),
            (None, Some(h)) => h.ceil() - BigRational::one(),
            (Some(l), Some(h)) => {
                // an integer in the gap if there is one, else the midpoint
                let k = l.floor() + BigRational::one();
                if &k < h {
                    k
                } else {
                    (l + h) / &two
                }
            }
        };
        if !used.contains(&&candidate) {
            return candidate;
        }
        // shrink towards the open side
        match (&lo, &hi) {
            (_, None) => lo = Some(candidate),
            (None, Some(_)) => hi = Some(candidate),
            (Some(_), Some(_)) => hi = Some(candidate),
        }
    }
}

impl LevelAge for BaseAge {
    fn notation(&self) -> &Notation {
        &self.notation
    }

    fn u_symbol(&self) -> &Symbol {
        &self.u
    }

    fn order_symbol(&self) -> &Symbol {
        &self.lt
    }

    fn insert_u_point(&self, m: &FinStructure, lo: Option<Elem>, hi: Option<Elem>, fresh: Elem) -> Option<FinStructure> {
        let colour = self.colouring(m).ok()?;
        let bound = |e: Option<Elem>| match e {
            None => Some(None),
            Some(e) => colour.get(&e).map(Some),
        };
        let (lo_r, hi_r) = (bound(lo)?, bound(hi)?);
        if let (Some(l), Some(h)) = (lo_r, hi_r) {
            if l >= h {
                return None;
            }
        }
        if m.contains(fresh) {
            return None;
        }
        let used: Vec<&BigRational> = colour.values().collect();
        let r = pick_between(lo_r, hi_r, &used);
        let mut points: Vec<(Elem, BigRational)> = colour.iter().map(|(e, r)| (*e, r.clone())).collect();
        points.push((fresh, r));
        Some(self.assemble(&points))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::{check_age_axioms, search_amalgam, AxiomCheck};
    use crate::coding::idx;
    use crate::structure::enumerate_embeddings;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rational_codes() {
        assert_eq!(decode_rational(&idx(0)), q(0, 1));
        assert_eq!(decode_rational(&idx(1)), q(-1, 1));
        assert_eq!(decode_rational(&idx(3)), q(1, 1));
        for r in [q(1, 2), q(-7, 3), q(0, 1), q(22, 7)] {
            assert_eq!(decode_rational(&encode_rational(&r)), r);
        }
    }

    #[test]
    fn member_examples() {
        let k1 = BaseAge::new();
        assert!(k1.member(&idx(0)).is_empty());
        let half = q(1, 2);
        let single = k1.member(&k1.index_of(std::slice::from_ref(&half)));
        assert_eq!(single.len(), 1);
        assert!(single.holds(k1.u_symbol(), &[0]));
        assert!(single.holds(&k1.colour_symbol(&half), &[0]));
        let pair_index = k1.index_of(&[q(1, 2), q(2, 3)]);
        let two = k1.member(&pair_index);
        assert_eq!(two.len(), 2);
        assert!(two.holds(&k1.colour_symbol(&q(2, 3)), &[1]));
        assert!(two.holds(k1.order_symbol(), &[0, 1]));
        assert!(k1.validate(&two).is_ok());
    }

    #[test]
    fn different_colours_do_not_embed() {
        let k1 = BaseAge::new();
        let a = k1.index_of(&[q(1, 2)]);
        let b = k1.index_of(&[q(2, 3)]);
        assert!(!k1.decide_embedding(&a, &b, &PartialMap::parse("0:0").unwrap()));
        assert!(k1.decide_embedding(&a, &a, &PartialMap::parse("0:0").unwrap()));
    }

    #[test]
    fn decider_matches_oracle() {
        let k1 = BaseAge::new();
        for i in 0..=30u64 {
            for j in 0..=30u64 {
                let (mi, mj) = (k1.member(&idx(i)), k1.member(&idx(j)));
                let expected = enumerate_embeddings(&mi, &mj).unwrap();
                let dom: Vec<Elem> = mi.universe().iter().copied().collect();
                let range: Vec<Elem> = mj.universe().iter().copied().collect();
                for f in crate::structure::tests::all_injections(&dom, &range) {
                    assert_eq!(k1.decide_embedding(&idx(i), &idx(j), &f), expected.contains(&f));
                }
            }
        }
    }

    #[test]
    fn locate_inverts_member() {
        let k1 = BaseAge::new();
        for i in 0..200u64 {
            let m = k1.member(&idx(i));
            let (j, iso) = k1.locate(&m).unwrap();
            assert_eq!(*k1.member(&j), *m);
            assert_eq!(iso, PartialMap::identity(m.universe().iter().copied()));
        }
    }

    #[test]
    fn axioms_hold_at_small_bounds() {
        let report = check_age_axioms(&BaseAge::new(), &AxiomCheck::new(2, 50));
        assert!(report.is_clean(), "{:?}", report.counterexamples);
    }

    #[test]
    fn amalgam_identifies_shared_colours() {
        let k1 = BaseAge::new();
        let a = k1.index_of(&[q(0, 1), q(1, 1)]);
        let b = k1.index_of(&[q(1, 1), q(2, 1)]);
        let e = PartialMap::new();
        let cert = search_amalgam(&k1, &a, &b, &idx(0), &e, &e, 10).unwrap();
        assert_eq!(cert.d.len(), 3);
    }

    #[test]
    fn inserted_points_fall_in_the_gap() {
        let k1 = BaseAge::new();
        let m = k1.member(&k1.index_of(&[q(0, 1), q(1, 1)]));
        let grown = k1.insert_u_point(&m, Some(0), Some(1), 7).unwrap();
        assert!(k1.validate(&grown).is_ok());
        assert!(grown.holds(k1.order_symbol(), &[0, 7]) && grown.holds(k1.order_symbol(), &[7, 1]));
        let above = k1.insert_u_point(&m, Some(1), None, 7).unwrap();
        assert!(above.holds(k1.order_symbol(), &[1, 7]));
        assert!(k1.insert_u_point(&m, Some(1), Some(0), 7).is_none());
    }
}
