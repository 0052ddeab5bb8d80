//! Finite simple graphs.
//!
//! Members are listed by vertex count; the graphs on `n` vertices occupy a
//! block of `2^(n(n-1)/2)` indices, offset by the sizes of the earlier blocks,
//! and the position within the block is the edge mask over pairs `x < y` in
//! lexicographic order.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::One;

use super::{Age, Amalgam, AmalgamQuery, MemberCache};
use crate::coding::Index;
use crate::notation::Notation;
use crate::structure::{Elem, FinStructure, PartialMap, Symbol, Vocabulary};

pub struct FiniteGraphs {
    vocab: Arc<Vocabulary>,
    edge: Symbol,
    cache: MemberCache,
}

fn block_size(n: u64) -> Index {
    Index::one() << (n * n.saturating_sub(1) / 2)
}

/// Vertex count and in-block mask of index `i`.
fn split(i: &Index) -> (u64, Index) {
    let mut n = 0;
    let mut rest = i.clone();
    loop {
        let size = block_size(n);
        if rest < size {
            return (n, rest);
        }
        rest -= size;
        n += 1;
    }
}

fn offset(n: u64) -> Index {
    (0..n).map(block_size).sum()
}

fn pair_bits(n: u64) -> impl Iterator<Item = (Elem, Elem)> {
    (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y)))
}

impl FiniteGraphs {
    pub fn new() -> Self {
        let edge = Symbol::new("E", 2, Notation::One);
        FiniteGraphs {
            vocab: Vocabulary::finite("graphs", vec![edge.clone()]),
            edge,
            cache: MemberCache::new(4096),
        }
    }

    pub fn edge_symbol(&self) -> &Symbol {
        &self.edge
    }

    fn add_edge(&self, s: &mut FinStructure, x: Elem, y: Elem) {
        s.add_fact(&self.edge, vec![x, y]).expect("edge in universe");
        s.add_fact(&self.edge, vec![y, x]).expect("edge in universe");
    }
}

impl Default for FiniteGraphs {
    fn default() -> Self {
        Self::new()
    }
}

impl Age for FiniteGraphs {
    fn tag(&self) -> &str {
        "graphs"
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn member(&self, i: &Index) -> Arc<FinStructure> {
        self.cache.get_or(i, || {
            let (n, mask) = split(i);
            let mut s = FinStructure::with_universe(self.vocab.clone(), 0..n);
            for (bit, (x, y)) in pair_bits(n).enumerate() {
                if mask.bit(bit as u64) {
                    self.add_edge(&mut s, x, y);
                }
            }
            s
        })
    }

    fn validate(&self, s: &FinStructure) -> Result<(), String> {
        if s.vocabulary().id() != self.vocab.id() {
            return Err("wrong vocabulary".into());
        }
        for t in s.relation(&self.edge) {
            if t[0] == t[1] {
                return Err(format!("loop at {}", t[0]));
            }
            if !s.holds(&self.edge, &[t[1], t[0]]) {
                return Err(format!("edge ({},{}) not symmetric", t[0], t[1]));
            }
        }
        Ok(())
    }

    fn locate(&self, s: &FinStructure) -> Option<(Index, PartialMap)> {
        self.validate(s).ok()?;
        let verts: Vec<Elem> = s.universe().iter().copied().collect();
        let n = verts.len() as u64;
        let mut mask = Index::default();
        for (bit, (x, y)) in pair_bits(n).enumerate() {
            if s.holds(&self.edge, &[verts[x as usize], verts[y as usize]]) {
                mask.set_bit(bit as u64, true);
            }
        }
        let iso = verts.iter().enumerate().map(|(k, &v)| (k as Elem, v)).collect();
        Some((offset(n) + mask, iso))
    }

    fn constructive_amalgamation(&self) -> bool {
        true
    }

    fn member_size(&self, i: &Index) -> Option<usize> {
        Some(split(i).0 as usize)
    }

    /// Free amalgam: `B` plus fresh copies of the points of `A` outside `f(C)`.
    fn amalgamate(&self, q: &AmalgamQuery<'_>) -> Option<Amalgam> {
        let mut d = q.b.clone();
        let mut f_prime = PartialMap::new();
        let back: BTreeMap<Elem, Elem> = q.f.iter().map(|(c, a)| (a, c)).collect();
        let mut next = q.b.universe().iter().next_back().map_or(0, |m| m + 1);
        for &a in q.a.universe() {
            let image = match back.get(&a) {
                Some(&c) => q.g.get(c)?,
                None => {
                    next += 1;
                    next - 1
                }
            };
            d.add_element(image);
            f_prime.insert(a, image);
        }
        for t in q.a.relation(&self.edge) {
            let (x, y) = (f_prime.get(t[0])?, f_prime.get(t[1])?);
            self.add_edge(&mut d, x, y);
        }
        let g_prime = PartialMap::identity(q.b.universe().iter().copied());
        Some(Amalgam { d, f_prime, g_prime })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::idx;

    #[test]
    fn block_layout() {
        assert_eq!(split(&idx(0)), (0, idx(0)));
        assert_eq!(split(&idx(1)), (1, idx(0)));
        assert_eq!(split(&idx(3)), (2, idx(1)));
        assert_eq!(split(&idx(4)), (3, idx(0)));
        assert_eq!(split(&idx(12)), (4, idx(0)));
        assert_eq!(offset(4), idx(12));
    }

    #[test]
    fn locate_round_trips() {
        let g = FiniteGraphs::new();
        for i in 0..80u64 {
            let m = g.member(&idx(i));
            let (j, iso) = g.locate(&m).unwrap();
            assert_eq!(j, idx(i));
            assert_eq!(iso, PartialMap::identity(m.universe().iter().copied()));
        }
    }
}
