//! Successor levels. Over a level with distinguished `U_a`, `<_a`, a member
//! is a disjoint union of vertices `V`, a lower member `M` and a linearly
//! ordered set `U_b`, with a partial vertex colouring `P : V -> U_b` and a
//! partial symmetric edge colouring `F` of vertex pairs by points of `U_a`.
//!
//! A triangle whose three edges are coloured obeys the law: its two least
//! colours (in `<_a`) are equal and the third is strictly greater. Triangles
//! with an uncoloured edge are unconstrained.
//!
//! Index coding: `i = pair(i1, i2)` and `i2 = pair(pair(nv, nu), choices)`.
//! `M` is lower member `i1` with its own elements; the `nv` vertices and then
//! the `nu` points of `U_b` (increasing in `<_b`) follow its largest element.
//! `choices` is read in mixed radix, least significant digit first: one `P`
//! digit per vertex (`0` none, `k` the `k`-th point of `U_b`), then one `F`
//! digit per vertex pair in lexicographic order (`0` none, `k` the `k`-th
//! point of `U_a` in `<_a` order). An `F` digit that would break the law on a
//! coloured triangle is dropped, so every index decodes to a member and a
//! member's own index decodes to it unchanged.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};

use super::LevelAge;
use crate::age::{locate_checked, search_member, Age, Amalgam, AmalgamQuery, MemberCache};
use crate::coding::{pair, to_usize_capped, unpair, Index};
use crate::notation::{successor, Notation};
use crate::structure::{is_embedding, Elem, FinStructure, PartialMap, Symbol, SymbolFamily, Vocabulary};

/// Largest vertex or `U_b` count an index can request.
const MAX_PART: usize = 1 << 16;

/// Lower members are searched this far when the lower age has no locator.
const LOWER_HORIZON: usize = 256;

/// Whether three edge colours, given as `<_a` ranks, form a lawful triangle.
pub fn triangle_law(x: usize, y: usize, z: usize) -> bool {
    let mut c = [x, y, z];
    c.sort_unstable();
    c[0] == c[1] && c[2] > c[1]
}

fn edge(x: Elem, y: Elem) -> (Elem, Elem) {
    (x.min(y), x.max(y))
}

/// The parts of a member of a successor level.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layout {
    pub m: BTreeSet<Elem>,
    pub v: Vec<Elem>,
    /// Increasing in `<_b`.
    pub ub: Vec<Elem>,
    /// The `U_a` points of `M`, increasing in `<_a`.
    pub colours: Vec<Elem>,
    pub p: BTreeMap<Elem, Elem>,
    /// Keyed by `(min, max)`.
    pub f: BTreeMap<(Elem, Elem), Elem>,
}

impl Layout {
    fn colour_rank(&self) -> HashMap<Elem, usize> {
        self.colours.iter().enumerate().map(|(k, &c)| (c, k)).collect()
    }

    /// First coloured triangle breaking the law.
    fn law_violation(&self) -> Option<(Elem, Elem, Elem)> {
        let rank = self.colour_rank();
        for (&(x, y), c) in &self.f {
            for &w in &self.v {
                if w <= y || w == x {
                    continue;
                }
                if let (Some(cx), Some(cy)) = (self.f.get(&edge(x, w)), self.f.get(&edge(y, w))) {
                    if !triangle_law(rank[c], rank[cx], rank[cy]) {
                        return Some((x, y, w));
                    }
                }
            }
        }
        None
    }
}

/// Elements of `set` in the order `lt`, if `lt` is a strict linear order on
/// them.
fn sort_by_order(s: &FinStructure, set: &BTreeSet<Elem>, lt: &Symbol) -> Option<Vec<Elem>> {
    let mut ranked: Vec<(usize, Elem)> = set
        .iter()
        .map(|&e| (set.iter().filter(|&&d| s.holds(lt, &[d, e])).count(), e))
        .collect();
    ranked.sort_unstable();
    let order: Vec<Elem> = ranked.iter().map(|p| p.1).collect();
    let linear = ranked.iter().enumerate().all(|(k, p)| p.0 == k)
        && order
            .iter()
            .enumerate()
            .all(|(k, &x)| order[k + 1..].iter().all(|&y| s.holds(lt, &[x, y]) && !s.holds(lt, &[y, x])));
    linear.then_some(order)
}

pub struct SuccessorAge {
    lower: Arc<dyn LevelAge>,
    notation: Notation,
    tag: String,
    vocab: Arc<Vocabulary>,
    v: Symbol,
    m: Symbol,
    u: Symbol,
    p: Symbol,
    f: Symbol,
    lt: Symbol,
    cache: MemberCache,
}

impl SuccessorAge {
    pub fn new(lower: Arc<dyn LevelAge>) -> Self {
        let notation = successor(lower.notation());
        let sym = |name: &str, arity| Symbol::new(format!("{name}@{notation}"), arity, notation.clone());
        let (v, m, u) = (sym("V", 1), sym("M", 1), sym("U", 1));
        let (p, f, lt) = (sym("P", 2), sym("F", 3), sym("<", 2));
        let lower_vocab: Arc<dyn SymbolFamily> = lower.vocabulary().clone();
        let vocab = Vocabulary::new(
            format!("tau@{notation}"),
            vec![v.clone(), m.clone(), u.clone(), p.clone(), f.clone(), lt.clone()],
            vec![lower_vocab],
        );
        SuccessorAge {
            tag: format!("k@{notation}"),
            lower,
            notation,
            vocab,
            v,
            m,
            u,
            p,
            f,
            lt,
            cache: MemberCache::new(4096),
        }
    }

    pub fn lower(&self) -> &Arc<dyn LevelAge> {
        &self.lower
    }

    pub fn v_symbol(&self) -> &Symbol {
        &self.v
    }

    pub fn m_symbol(&self) -> &Symbol {
        &self.m
    }

    pub fn p_symbol(&self) -> &Symbol {
        &self.p
    }

    pub fn f_symbol(&self) -> &Symbol {
        &self.f
    }

    fn is_new(&self, sym: &Symbol) -> bool {
        [&self.v, &self.m, &self.u, &self.p, &self.f, &self.lt].contains(&sym)
    }

    /// The `M` part of `s` as a structure of the lower level.
    pub fn m_part(&self, s: &FinStructure, m: &BTreeSet<Elem>) -> FinStructure {
        s.restrict_unchecked(m).reduct(self.lower.vocabulary().clone(), |sym| !self.is_new(sym))
    }

    /// Splits `s` into its parts, checking every membership condition.
    pub fn layout(&self, s: &FinStructure) -> Result<Layout, String> {
        let mut out = Layout::default();
        let (mut v, mut ub) = (BTreeSet::new(), BTreeSet::new());
        for &e in s.universe() {
            let flags = [s.holds(&self.v, &[e]), s.holds(&self.m, &[e]), s.holds(&self.u, &[e])];
            match flags {
                [true, false, false] => v.insert(e),
                [false, true, false] => out.m.insert(e),
                [false, false, true] => ub.insert(e),
                _ => return Err(format!("{e} is not in exactly one of V, M, U")),
            };
        }
        for (sym, t) in s.facts() {
            if !self.is_new(sym) {
                if self.lower.vocabulary().lookup(sym.name()).is_none() {
                    return Err(format!("unexpected symbol {}", sym.name()));
                }
                if let Some(e) = t.iter().find(|e| !out.m.contains(e)) {
                    return Err(format!("{} holds of {e} outside M", sym.name()));
                }
            }
        }
        let m_part = self.m_part(s, &out.m);
        self.lower.validate(&m_part).map_err(|e| format!("M is not a lower member: {e}"))?;
        let ua: BTreeSet<Elem> = out.m.iter().copied().filter(|&e| m_part.holds(self.lower.u_symbol(), &[e])).collect();
        out.colours = sort_by_order(&m_part, &ua, self.lower.order_symbol()).ok_or("lower U is not linearly ordered")?;
        for t in s.relation(&self.p) {
            if !v.contains(&t[0]) || !ub.contains(&t[1]) {
                return Err(format!("P({},{}) outside V x U", t[0], t[1]));
            }
            if out.p.insert(t[0], t[1]).is_some() {
                return Err(format!("{} has two P colours", t[0]));
            }
        }
        for t in s.relation(&self.f) {
            let (x, y, c) = (t[0], t[1], t[2]);
            if !v.contains(&x) || !v.contains(&y) || x == y || !ua.contains(&c) {
                return Err(format!("F({x},{y},{c}) is not a vertex pair coloured in U_a"));
            }
            if !s.holds(&self.f, &[y, x, c]) {
                return Err(format!("F({x},{y},{c}) is not symmetric"));
            }
            if let Some(old) = out.f.insert(edge(x, y), c) {
                if old != c {
                    return Err(format!("pair ({x},{y}) has two F colours"));
                }
            }
        }
        for t in s.relation(&self.lt) {
            if !ub.contains(&t[0]) || !ub.contains(&t[1]) {
                return Err(format!("<({},{}) outside U", t[0], t[1]));
            }
        }
        out.ub = sort_by_order(s, &ub, &self.lt).ok_or("<_b is not a linear order on U")?;
        out.v = v.into_iter().collect();
        if let Some((x, y, w)) = out.law_violation() {
            return Err(format!("triangle ({x},{y},{w}) breaks the colouring law"));
        }
        Ok(out)
    }

    fn decode(&self, i: &Index) -> (Index, usize, usize, Index) {
        let (i1, i2) = unpair(i);
        let (sizes, choices) = unpair(&i2);
        let (nv, nu) = unpair(&sizes);
        (i1, to_usize_capped(&nv, MAX_PART), to_usize_capped(&nu, MAX_PART), choices)
    }

    fn assemble(&self, lower_m: &FinStructure, vs: &[Elem], ub: &[Elem], p: &BTreeMap<Elem, Elem>, f: &BTreeMap<(Elem, Elem), Elem>) -> FinStructure {
        let universe = lower_m.universe().iter().copied().chain(vs.iter().copied()).chain(ub.iter().copied());
        let mut s = FinStructure::with_universe(self.vocab.clone(), universe);
        for (sym, t) in lower_m.facts() {
            s.add_fact(sym, t.clone()).expect("lower fact");
        }
        for &e in lower_m.universe() {
            s.add_fact(&self.m, vec![e]).expect("in universe");
        }
        for &e in vs {
            s.add_fact(&self.v, vec![e]).expect("in universe");
        }
        for (k, &e) in ub.iter().enumerate() {
            s.add_fact(&self.u, vec![e]).expect("in universe");
            for &d in &ub[k + 1..] {
                s.add_fact(&self.lt, vec![e, d]).expect("in universe");
            }
        }
        for (&x, &u) in p {
            s.add_fact(&self.p, vec![x, u]).expect("in universe");
        }
        for (&(x, y), &c) in f {
            s.add_fact(&self.f, vec![x, y, c]).expect("in universe");
            s.add_fact(&self.f, vec![y, x, c]).expect("in universe");
        }
        s
    }

    fn build(&self, i: &Index) -> FinStructure {
        let (i1, nv, nu, mut choices) = self.decode(i);
        let lower_m = self.lower.member(&i1);
        let base = lower_m.universe().iter().next_back().map_or(0, |m| m + 1);
        let vs: Vec<Elem> = (base..base + nv as Elem).collect();
        let ub: Vec<Elem> = (base + nv as Elem..base + (nv + nu) as Elem).collect();
        let ua: BTreeSet<Elem> = lower_m
            .universe()
            .iter()
            .copied()
            .filter(|&e| lower_m.holds(self.lower.u_symbol(), &[e]))
            .collect();
        let colours = sort_by_order(&lower_m, &ua, self.lower.order_symbol()).unwrap_or_default();
        let mut digit = |radix: usize| -> usize {
            let r = Index::from(radix);
            let d = (&choices % &r).to_usize().expect("digit below radix");
            choices = &choices / &r;
            d
        };
        let mut p = BTreeMap::new();
        for &x in &vs {
            let d = digit(nu + 1);
            if d > 0 {
                p.insert(x, ub[d - 1]);
            }
        }
        let mut layout = Layout {
            colours: colours.clone(),
            v: vs.clone(),
            ..Layout::default()
        };
        let rank = layout.colour_rank();
        for (k, &x) in vs.iter().enumerate() {
            for &y in &vs[k + 1..] {
                let d = digit(colours.len() + 1);
                if d == 0 {
                    continue;
                }
                let c = colours[d - 1];
                let lawful = vs.iter().filter(|&&w| w != x && w != y).all(|&w| {
                    match (layout.f.get(&edge(x, w)), layout.f.get(&edge(y, w))) {
                        (Some(cx), Some(cy)) => triangle_law(rank[&c], rank[cx], rank[cy]),
                        _ => true,
                    }
                });
                if lawful {
                    layout.f.insert((x, y), c);
                }
            }
        }
        self.assemble(&lower_m, &vs, &ub, &p, &layout.f)
    }

    /// Layout of member `i`; members always have one.
    fn member_layout(&self, i: &Index) -> (Arc<FinStructure>, Layout) {
        let m = self.member(i);
        let l = self.layout(&m).expect("members satisfy the membership conditions");
        (m, l)
    }

    fn locate_lower(&self, m: &FinStructure) -> Option<(Index, PartialMap)> {
        locate_checked(self.lower.as_ref(), m).or_else(|| search_member(self.lower.as_ref(), m, LOWER_HORIZON))
    }
}

/// Merges two chains over shared points (`shared` maps points of `a` to
/// points of `b`). Within a gap the points of `a` come first. `None` if the
/// shared points are not in the same order on both sides.
fn merge_chains(a: &[Elem], b: &[Elem], shared: &BTreeMap<Elem, Elem>) -> Option<Vec<(bool, Elem)>> {
    let shared_b: BTreeSet<Elem> = shared.values().copied().collect();
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    loop {
        while i < a.len() && !shared.contains_key(&a[i]) {
            out.push((true, a[i]));
            i += 1;
        }
        while j < b.len() && !shared_b.contains(&b[j]) {
            out.push((false, b[j]));
            j += 1;
        }
        match (i < a.len(), j < b.len()) {
            (false, false) => return Some(out),
            (true, true) if shared[&a[i]] == b[j] => {
                out.push((false, b[j]));
                i += 1;
                j += 1;
            }
            _ => return None,
        }
    }
}

impl Age for SuccessorAge {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn member(&self, i: &Index) -> Arc<FinStructure> {
        self.cache.get_or(i, || self.build(i))
    }

    fn member_size(&self, i: &Index) -> Option<usize> {
        let (i1, nv, nu, _) = self.decode(i);
        let m = self.lower.member_size(&i1).unwrap_or_else(|| self.lower.member(&i1).len());
        Some(m + nv + nu)
    }

    /// The lower decider on `M`, then the new relations.
    fn decide_embedding(&self, i: &Index, j: &Index, f: &PartialMap) -> bool {
        let (di, li) = self.member_layout(i);
        let (dj, lj) = self.member_layout(j);
        if f.domain() != *di.universe() || !f.is_injective() || !f.range().is_subset(dj.universe()) {
            return false;
        }
        let (i1, j1) = (unpair(i).0, unpair(j).0);
        if !li.m.iter().all(|&x| lj.m.contains(&f.get(x).expect("total"))) {
            return false;
        }
        if !self.lower.decide_embedding(&i1, &j1, &f.restrict(&li.m)) {
            return false;
        }
        let vj: BTreeSet<Elem> = lj.v.iter().copied().collect();
        let ubj: HashMap<Elem, usize> = lj.ub.iter().enumerate().map(|(k, &u)| (u, k)).collect();
        let img = |x: Elem| f.get(x).expect("total");
        if !li.v.iter().all(|&x| vj.contains(&img(x))) || !li.ub.iter().all(|&u| ubj.contains_key(&img(u))) {
            return false;
        }
        // U_b order: images increase
        if li.ub.windows(2).any(|w| ubj[&img(w[0])] >= ubj[&img(w[1])]) {
            return false;
        }
        let range = f.range();
        let p_ok = li.v.iter().all(|&x| match (li.p.get(&x), lj.p.get(&img(x))) {
            (Some(&u), Some(&w)) => img(u) == w,
            (None, Some(w)) => !range.contains(w),
            (Some(_), None) => false,
            (None, None) => true,
        });
        if !p_ok {
            return false;
        }
        li.v.iter().enumerate().all(|(k, &x)| {
            li.v[k + 1..].iter().all(|&y| {
                match (li.f.get(&(x, y)), lj.f.get(&edge(img(x), img(y)))) {
                    (Some(&c), Some(&d)) => img(c) == d,
                    (None, Some(d)) => !range.contains(d),
                    (Some(_), None) => false,
                    (None, None) => true,
                }
            })
        })
    }

    fn validate(&self, s: &FinStructure) -> Result<(), String> {
        if s.vocabulary().id() != self.vocab.id() {
            return Err(format!("vocabulary {} is not {}", s.vocabulary().id(), self.vocab.id()));
        }
        self.layout(s).map(|_| ())
    }

    fn locate(&self, s: &FinStructure) -> Option<(Index, PartialMap)> {
        if s.vocabulary().id() != self.vocab.id() {
            return None;
        }
        let l = self.layout(s).ok()?;
        let (i1, g1) = self.locate_lower(&self.m_part(s, &l.m))?;
        let lower_m = self.lower.member(&i1);
        let base = lower_m.universe().iter().next_back().map_or(0, |m| m + 1);
        let mut iso = g1.clone();
        for (k, &x) in l.v.iter().chain(&l.ub).enumerate() {
            iso.insert(base + k as Elem, x);
        }
        // member colours in <_a order, as elements of s
        let back = g1.inverse()?;
        let colour_digit: HashMap<Elem, usize> = l.colours.iter().enumerate().map(|(k, &c)| (c, k + 1)).collect();
        debug_assert!(l.colours.iter().all(|&c| back.get(c).is_some()));
        let ub_digit: HashMap<Elem, usize> = l.ub.iter().enumerate().map(|(k, &u)| (u, k + 1)).collect();
        let (nv, nu, nc) = (l.v.len(), l.ub.len(), l.colours.len());
        let mut digits: Vec<(usize, usize)> = l.v.iter().map(|x| (l.p.get(x).map_or(0, |u| ub_digit[u]), nu + 1)).collect();
        for (k, &x) in l.v.iter().enumerate() {
            for &y in &l.v[k + 1..] {
                digits.push((l.f.get(&(x, y)).map_or(0, |c| colour_digit[c]), nc + 1));
            }
        }
        let mut choices = Index::zero();
        for &(d, radix) in digits.iter().rev() {
            choices = choices * Index::from(radix) + Index::from(d);
        }
        let sizes = pair(&Index::from(nv), &Index::from(nu));
        let i = pair(&i1, &pair(&sizes, &choices));
        Some((i, iso))
    }

    fn constructive_amalgamation(&self) -> bool {
        self.lower.constructive_amalgamation()
    }

    /// Staged amalgam: lower amalgam of the `M` parts, then vertices with
    /// cross pairs coloured greedily, then `U_b` merged with `P`. Pairs at a
    /// new vertex take the least lawful colour, or a fresh `U_a` point when
    /// none fits and the sides agree. New vertices without `P` take a `U_b`
    /// point outside the image of `A`. `None` when the two sides colour a
    /// pair or vertex left uncoloured in `C` in ways that cannot be
    /// identified, or when the result breaks the law.
    fn amalgamate(&self, q: &AmalgamQuery<'_>) -> Option<Amalgam> {
        let (la, lb, lc) = (self.layout(q.a).ok()?, self.layout(q.b).ok()?, self.layout(q.c).ok()?);
        let fa = |c: Elem| q.f.get(c);
        let gb = |c: Elem| q.g.get(c);
        // points left uncoloured in C but coloured on both sides must meet
        let mut forced_m: BTreeMap<Elem, Elem> = BTreeMap::new();
        let mut forced_u: BTreeMap<Elem, Elem> = BTreeMap::new();
        for (k, &x) in lc.v.iter().enumerate() {
            if !lc.p.contains_key(&x) {
                if let (Some(&ua), Some(&ub)) = (la.p.get(&fa(x)?), lb.p.get(&gb(x)?)) {
                    if forced_u.insert(ua, ub).is_some_and(|old| old != ub) {
                        return None;
                    }
                }
            }
            for &y in &lc.v[k + 1..] {
                if lc.f.contains_key(&(x, y)) {
                    continue;
                }
                let ca = la.f.get(&edge(fa(x)?, fa(y)?));
                let cb = lb.f.get(&edge(gb(x)?, gb(y)?));
                if let (Some(&ca), Some(&cb)) = (ca, cb) {
                    if forced_m.insert(ca, cb).is_some_and(|old| old != cb) {
                        return None;
                    }
                }
            }
        }
        // stage 1: M parts over M^C plus the forced colours
        let ma = self.m_part(q.a, &la.m);
        let mb = self.m_part(q.b, &lb.m);
        let mut glue = PartialMap::new();
        for &c in &lc.m {
            glue.insert(fa(c)?, gb(c)?);
        }
        for (&a, &b) in &forced_m {
            glue.insert(a, b);
        }
        if !glue.is_injective() {
            return None;
        }
        let mc = ma.restrict_unchecked(&glue.domain());
        if !is_embedding(&glue, &mc, &mb).ok()? {
            return None;
        }
        let id = PartialMap::identity(glue.domain());
        let lower_q = AmalgamQuery {
            a: &ma,
            b: &mb,
            c: &mc,
            f: &id,
            g: &glue,
        };
        let d1 = self.lower.amalgamate(&lower_q)?;
        let mut next = q.b.universe().iter().next_back().map_or(0, |m| m + 1);
        let mut fresh = || {
            next += 1;
            next - 1
        };
        let mut fin = PartialMap::new();
        for (b, e) in d1.g_prime.iter() {
            fin.insert(e, b);
        }
        for &e in d1.d.universe() {
            if fin.get(e).is_none() {
                fin.insert(e, fresh());
            }
        }
        let mut m_final = d1.d.rename(&fin).ok()?;
        let mut f_prime = PartialMap::new();
        for &a in &la.m {
            f_prime.insert(a, fin.get(d1.f_prime.get(a)?)?);
        }
        // stage 2: vertices
        let mut vertices: Vec<Elem> = lb.v.clone();
        let mut a_new = Vec::new();
        let from_c_a: BTreeMap<Elem, Elem> = lc.v.iter().map(|&c| Some((fa(c)?, gb(c)?))).collect::<Option<_>>()?;
        for &x in &la.v {
            let image = match from_c_a.get(&x) {
                Some(&y) => y,
                None => {
                    let y = fresh();
                    a_new.push(y);
                    vertices.push(y);
                    y
                }
            };
            f_prime.insert(x, image);
        }
        let mut colouring = lb.f.clone();
        for (&(x, y), &c) in &la.f {
            let key = edge(f_prime.get(x)?, f_prime.get(y)?);
            let c = f_prime.get(c)?;
            if colouring.insert(key, c).is_some_and(|old| old != c) {
                return None;
            }
        }
        // Cross pairs, then pairs inside A at a new vertex. The latter may
        // only take colours outside the image of A.
        let a_colours: BTreeSet<Elem> = la.colours.iter().filter_map(|&c| f_prime.get(c)).collect();
        let a_vertices: BTreeSet<Elem> = f_prime.range();
        vertices.sort_unstable();
        for &x in &a_new {
            for &y in &vertices {
                if y == x || colouring.contains_key(&edge(x, y)) {
                    continue;
                }
                let inside_a = a_vertices.contains(&y);
                let colours = self.colours_of(&m_final)?;
                let rank: HashMap<Elem, usize> = colours.iter().enumerate().map(|(k, &c)| (c, k)).collect();
                let sides: Vec<(Elem, Elem)> = vertices
                    .iter()
                    .filter(|&&w| w != x && w != y)
                    .filter_map(|&w| Some((*colouring.get(&edge(x, w))?, *colouring.get(&edge(y, w))?)))
                    .collect();
                let fits = |c: Elem| {
                    !(inside_a && a_colours.contains(&c))
                        && sides.iter().all(|&(cx, cy)| triangle_law(rank[&c], rank[&cx], rank[&cy]))
                };
                if let Some(&c) = colours.iter().find(|&&c| fits(c)) {
                    colouring.insert(edge(x, y), c);
                } else if sides.iter().all(|(cx, cy)| cx == cy) {
                    let lo = sides.iter().map(|s| s.0).max_by_key(|c| rank[c]);
                    let c = fresh();
                    if let Some(grown) = self.lower.insert_u_point(&m_final, lo, None, c) {
                        m_final = grown;
                        colouring.insert(edge(x, y), c);
                    }
                }
            }
        }
        // stage 3: U_b and P
        let mut shared: BTreeMap<Elem, Elem> = lc.ub.iter().map(|&c| Some((fa(c)?, gb(c)?))).collect::<Option<_>>()?;
        for (&a, &b) in &forced_u {
            if shared.insert(a, b).is_some_and(|old| old != b) {
                return None;
            }
        }
        let merged = merge_chains(&la.ub, &lb.ub, &shared)?;
        let mut chain = Vec::new();
        for (from_a, e) in merged {
            let image = if from_a { fresh() } else { e };
            if from_a {
                f_prime.insert(e, image);
            }
            chain.push(image);
        }
        for (&a, &b) in &shared {
            f_prime.insert(a, b);
        }
        let mut p = lb.p.clone();
        for (&x, &u) in &la.p {
            let (x, u) = (f_prime.get(x)?, f_prime.get(u)?);
            if p.insert(x, u).is_some_and(|old| old != u) {
                return None;
            }
        }
        // new vertices left without P take the least point outside A
        let a_points: BTreeSet<Elem> = la.ub.iter().filter_map(|&u| f_prime.get(u)).collect();
        for &x in &a_new {
            if !p.contains_key(&x) {
                let u = match chain.iter().find(|u| !a_points.contains(u)) {
                    Some(&u) => u,
                    None => {
                        let u = fresh();
                        chain.push(u);
                        u
                    }
                };
                p.insert(x, u);
            }
        }
        let d = self.assemble(&m_final, &vertices, &chain, &p, &colouring);
        self.layout(&d).ok()?;
        Some(Amalgam {
            d,
            f_prime,
            g_prime: PartialMap::identity(q.b.universe().iter().copied()),
        })
    }
}

impl SuccessorAge {
    fn colours_of(&self, m: &FinStructure) -> Option<Vec<Elem>> {
        let ua: BTreeSet<Elem> = m.universe().iter().copied().filter(|&e| m.holds(self.lower.u_symbol(), &[e])).collect();
        sort_by_order(m, &ua, self.lower.order_symbol())
    }
}

impl LevelAge for SuccessorAge {
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
        vec![self.v.clone(), self.m.clone(), self.u.clone(), self.p.clone(), self.f.clone(), self.lt.clone()]
    }

    fn insert_u_point(&self, m: &FinStructure, lo: Option<Elem>, hi: Option<Elem>, fresh: Elem) -> Option<FinStructure> {
        let l = self.layout(m).ok()?;
        if m.contains(fresh) {
            return None;
        }
        let pos = |e: Option<Elem>, default: usize| match e {
            None => Some(default),
            Some(e) => l.ub.iter().position(|&u| u == e),
        };
        let (lo_pos, hi_pos) = (pos(lo, 0)?, pos(hi, l.ub.len())?);
        let at = if lo.is_some() { lo_pos + 1 } else { 0 };
        if hi.is_some() && at > hi_pos {
            return None;
        }
        let mut chain = l.ub.clone();
        chain.insert(at, fresh);
        let lower_m = self.m_part(m, &l.m);
        Some(self.assemble(&lower_m, &l.v, &chain, &l.p, &l.f))
    }
}

#[cfg(test)]
mod tests;
