//! Finite relational structures over lazily materialized vocabularies.

use std::borrow::Cow;
use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::notation::Notation;

pub type Elem = u64;
pub type Tuple = Vec<Elem>;

/// Default cap on the domain size accepted by [`enumerate_embeddings`].
pub const DEFAULT_EMBEDDING_BOUND: usize = 8;

/// A relation symbol. Identity is the canonical name alone.
#[derive(Clone)]
pub struct Symbol {
    name: Arc<str>,
    arity: usize,
    mark: Notation,
}

impl Symbol {
    pub fn new(name: impl Into<Arc<str>>, arity: usize, mark: Notation) -> Symbol {
        Symbol {
            name: name.into(),
            arity,
            mark,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// The notation whose construction introduced the symbol.
    pub fn mark(&self) -> &Notation {
        &self.mark
    }

    /// Same arity and mark under a new name.
    pub fn renamed(&self, name: impl Into<Arc<str>>) -> Symbol {
        Symbol::new(name, self.arity, self.mark.clone())
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name.cmp(&other.name)
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// An infinite (or just unlisted) family of symbols, materialized on demand.
pub trait SymbolFamily: Send + Sync {
    fn resolve(&self, name: &str) -> Option<Symbol>;
    /// Duplicate-free enumeration; `None` marks a position with no symbol.
    fn nth(&self, n: usize) -> Option<Symbol>;
}

/// A computable vocabulary: finitely many listed symbols plus lazy families.
pub struct Vocabulary {
    id: Arc<str>,
    fixed: Vec<Symbol>,
    families: Vec<Arc<dyn SymbolFamily>>,
}

impl Vocabulary {
    pub fn new(
        id: impl Into<Arc<str>>,
        fixed: Vec<Symbol>,
        families: Vec<Arc<dyn SymbolFamily>>,
    ) -> Arc<Vocabulary> {
        Arc::new(Vocabulary {
            id: id.into(),
            fixed,
            families,
        })
    }

    pub fn finite(id: impl Into<Arc<str>>, symbols: Vec<Symbol>) -> Arc<Vocabulary> {
        Vocabulary::new(id, symbols, Vec::new())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        self.fixed
            .iter()
            .find(|s| s.name() == name)
            .cloned()
            .or_else(|| self.families.iter().find_map(|f| f.resolve(name)))
    }

    /// Symbol at enumeration position `n`: listed symbols first, then the
    /// families interleaved round-robin.
    pub fn nth(&self, n: usize) -> Option<Symbol> {
        if n < self.fixed.len() {
            return Some(self.fixed[n].clone());
        }
        if self.families.is_empty() {
            return None;
        }
        let k = n - self.fixed.len();
        let nf = self.families.len();
        self.families[k % nf].nth(k / nf)
    }

    /// The symbols found among the first `positions` enumeration positions.
    pub fn enumerate(&self, positions: usize) -> Vec<Symbol> {
        (0..positions).filter_map(|n| self.nth(n)).collect()
    }
}

impl SymbolFamily for Vocabulary {
    fn resolve(&self, name: &str) -> Option<Symbol> {
        self.lookup(name)
    }

    fn nth(&self, n: usize) -> Option<Symbol> {
        Vocabulary::nth(self, n)
    }
}

impl fmt::Debug for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vocabulary")
            .field("id", &self.id)
            .field("fixed", &self.fixed)
            .field("families", &self.families.len())
            .finish()
    }
}

/// A finite map on naturals. Embeddings and partial isomorphisms are the
/// injective ones; non-injective maps are representable so that deciders can
/// reject them.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialMap {
    pairs: BTreeMap<Elem, Elem>,
}

impl PartialMap {
    pub fn new() -> PartialMap {
        PartialMap::default()
    }

    pub fn identity(elems: impl IntoIterator<Item = Elem>) -> PartialMap {
        elems.into_iter().map(|e| (e, e)).collect()
    }

    /// Builds a map; a source listed twice with different targets is an error.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Elem, Elem)>) -> Result<PartialMap> {
        let mut map = BTreeMap::new();
        for (s, t) in pairs {
            if let Some(old) = map.insert(s, t) {
                if old != t {
                    return Err(Error::PreconditionFailed(format!(
                        "{s} mapped to both {old} and {t}"
                    )));
                }
            }
        }
        Ok(PartialMap { pairs: map })
    }

    pub fn get(&self, x: Elem) -> Option<Elem> {
        self.pairs.get(&x).copied()
    }

    pub fn insert(&mut self, x: Elem, y: Elem) {
        self.pairs.insert(x, y);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Elem, Elem)> + '_ {
        self.pairs.iter().map(|(&a, &b)| (a, b))
    }

    pub fn domain(&self) -> BTreeSet<Elem> {
        self.pairs.keys().copied().collect()
    }

    pub fn range(&self) -> BTreeSet<Elem> {
        self.pairs.values().copied().collect()
    }

    pub fn is_injective(&self) -> bool {
        self.range().len() == self.pairs.len()
    }

    /// `self ∘ inner`, defined where `inner` lands in the domain of `self`.
    pub fn compose(&self, inner: &PartialMap) -> PartialMap {
        inner
            .iter()
            .filter_map(|(x, y)| self.get(y).map(|z| (x, z)))
            .collect()
    }

    pub fn inverse(&self) -> Option<PartialMap> {
        self.is_injective()
            .then(|| self.iter().map(|(a, b)| (b, a)).collect())
    }

    pub fn restrict(&self, dom: &BTreeSet<Elem>) -> PartialMap {
        self.iter().filter(|(a, _)| dom.contains(a)).collect()
    }

    pub fn apply(&self, tuple: &[Elem]) -> Option<Tuple> {
        tuple.iter().map(|&x| self.get(x)).collect()
    }

    /// Parses `"0:3,1:5"`; the empty string is the empty map.
    pub fn parse(text: &str) -> Result<PartialMap> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(PartialMap::new());
        }
        let mut pairs = Vec::new();
        for item in text.split(',') {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected `src:dst`, got `{item}`")))?;
            let a = a.trim().parse().map_err(|e| Error::Parse(format!("{a}: {e}")))?;
            let b = b.trim().parse().map_err(|e| Error::Parse(format!("{b}: {e}")))?;
            pairs.push((a, b));
        }
        PartialMap::from_pairs(pairs)
    }
}

/// Serialized as its `"src:dst,..."` text.
impl serde::Serialize for PartialMap {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PartialMap {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        PartialMap::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl FromIterator<(Elem, Elem)> for PartialMap {
    fn from_iter<I: IntoIterator<Item = (Elem, Elem)>>(iter: I) -> Self {
        PartialMap {
            pairs: iter.into_iter().collect(),
        }
    }
}

impl Extend<(Elem, Elem)> for PartialMap {
    fn extend<I: IntoIterator<Item = (Elem, Elem)>>(&mut self, iter: I) {
        for (x, y) in iter {
            self.insert(x, y);
        }
    }
}

impl fmt::Display for PartialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, b) in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{a}:{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PartialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// One atomic or negated atomic sentence about named elements.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub symbol: Symbol,
    pub tuple: Tuple,
    pub positive: bool,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self
            .tuple
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(",");
        if self.positive {
            write!(f, "{}({args})", self.symbol)
        } else {
            write!(f, "¬{}({args})", self.symbol)
        }
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite structure: a finite universe of naturals and finitely many
/// nonempty relations. Symbols not stored are interpreted as empty.
#[derive(Clone)]
pub struct FinStructure {
    vocab: Arc<Vocabulary>,
    universe: BTreeSet<Elem>,
    relations: BTreeMap<Symbol, BTreeSet<Tuple>>,
}

impl PartialEq for FinStructure {
    fn eq(&self, other: &Self) -> bool {
        self.vocab.id() == other.vocab.id()
            && self.universe == other.universe
            && self.relations == other.relations
    }
}

impl Eq for FinStructure {}

impl fmt::Debug for FinStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?} ", self.vocab.id(), self.universe)?;
        f.debug_map()
            .entries(self.relations.iter().map(|(s, t)| (s.name(), t)))
            .finish()
    }
}

impl FinStructure {
    pub fn empty(vocab: Arc<Vocabulary>) -> FinStructure {
        FinStructure {
            vocab,
            universe: BTreeSet::new(),
            relations: BTreeMap::new(),
        }
    }

    pub fn with_universe(
        vocab: Arc<Vocabulary>,
        universe: impl IntoIterator<Item = Elem>,
    ) -> FinStructure {
        FinStructure {
            vocab,
            universe: universe.into_iter().collect(),
            relations: BTreeMap::new(),
        }
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn universe(&self) -> &BTreeSet<Elem> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.universe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.universe.is_empty()
    }

    pub fn contains(&self, e: Elem) -> bool {
        self.universe.contains(&e)
    }

    pub fn add_element(&mut self, e: Elem) {
        self.universe.insert(e);
    }

    /// Least natural not in the universe and not in `taken`.
    pub fn fresh_element(&self, taken: &BTreeSet<Elem>) -> Elem {
        (0..)
            .find(|e| !self.universe.contains(e) && !taken.contains(e))
            .expect("naturals are unbounded")
    }

    pub fn add_fact(&mut self, symbol: &Symbol, tuple: Tuple) -> Result<()> {
        if tuple.len() != symbol.arity() {
            return Err(Error::PreconditionFailed(format!(
                "{} has arity {}, got {} arguments",
                symbol,
                symbol.arity(),
                tuple.len()
            )));
        }
        if let Some(&e) = tuple.iter().find(|e| !self.universe.contains(e)) {
            return Err(Error::NotSubset(e));
        }
        self.relations.entry(symbol.clone()).or_default().insert(tuple);
        Ok(())
    }

    pub fn remove_fact(&mut self, symbol: &Symbol, tuple: &[Elem]) {
        if let Some(set) = self.relations.get_mut(symbol) {
            set.remove(tuple);
            if set.is_empty() {
                self.relations.remove(symbol);
            }
        }
    }

    pub fn holds(&self, symbol: &Symbol, tuple: &[Elem]) -> bool {
        self.relations
            .get(symbol)
            .is_some_and(|set| set.contains(tuple))
    }

    pub fn relation(&self, symbol: &Symbol) -> impl Iterator<Item = &Tuple> + '_ {
        self.relations.get(symbol).into_iter().flatten()
    }

    /// Symbols with a nonempty interpretation.
    pub fn realized_symbols(&self) -> impl Iterator<Item = &Symbol> + '_ {
        self.relations.keys()
    }

    pub fn facts(&self) -> impl Iterator<Item = (&Symbol, &Tuple)> + '_ {
        self.relations
            .iter()
            .flat_map(|(s, set)| set.iter().map(move |t| (s, t)))
    }

    pub fn fact_count(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    /// The induced substructure on `subset`.
    pub fn substructure(&self, subset: &BTreeSet<Elem>) -> Result<FinStructure> {
        if let Some(&e) = subset.iter().find(|e| !self.universe.contains(e)) {
            return Err(Error::NotSubset(e));
        }
        Ok(self.restrict_unchecked(subset))
    }

    pub(crate) fn restrict_unchecked(&self, subset: &BTreeSet<Elem>) -> FinStructure {
        let mut relations = BTreeMap::new();
        for (sym, set) in &self.relations {
            let kept: BTreeSet<Tuple> = set
                .iter()
                .filter(|t| t.iter().all(|e| subset.contains(e)))
                .cloned()
                .collect();
            if !kept.is_empty() {
                relations.insert(sym.clone(), kept);
            }
        }
        FinStructure {
            vocab: self.vocab.clone(),
            universe: subset.clone(),
            relations,
        }
    }

    /// Image of the structure under an injective map defined on its universe.
    pub fn rename(&self, map: &PartialMap) -> Result<FinStructure> {
        if !map.is_injective() {
            return Err(Error::PreconditionFailed("renaming must be injective".into()));
        }
        let mut out = FinStructure::empty(self.vocab.clone());
        for &e in &self.universe {
            out.universe
                .insert(map.get(e).ok_or(Error::RangeNotBuilt(e))?);
        }
        for (sym, t) in self.facts() {
            let image = map.apply(t).expect("universe covered");
            out.relations.entry(sym.clone()).or_default().insert(image);
        }
        Ok(out)
    }

    /// Keeps only the symbols accepted by `keep`, re-homed into `vocab`.
    pub fn reduct(&self, vocab: Arc<Vocabulary>, mut keep: impl FnMut(&Symbol) -> bool) -> FinStructure {
        FinStructure {
            vocab,
            universe: self.universe.clone(),
            relations: self
                .relations
                .iter()
                .filter(|(s, _)| keep(s))
                .map(|(s, t)| (s.clone(), t.clone()))
                .collect(),
        }
    }

    /// Same universe and facts, viewed over another vocabulary. Every realized
    /// symbol must resolve there with its arity.
    pub fn reinterpret(&self, vocab: Arc<Vocabulary>) -> Result<FinStructure> {
        let mut relations = BTreeMap::new();
        for (sym, set) in &self.relations {
            let target = vocab.lookup(sym.name()).ok_or_else(|| Error::VocabularyMismatch {
                left: format!("symbol {}", sym.name()),
                right: vocab.id().to_string(),
            })?;
            if target.arity() != sym.arity() {
                return Err(Error::VocabularyMismatch {
                    left: format!("{} with arity {}", sym.name(), sym.arity()),
                    right: format!("{} with arity {}", target.name(), target.arity()),
                });
            }
            relations.insert(target, set.clone());
        }
        Ok(FinStructure {
            vocab,
            universe: self.universe.clone(),
            relations,
        })
    }

    /// Facts whose entries all lie in `elems` and include at least one of `touching`.
    pub fn facts_touching<'a>(
        &'a self,
        touching: &'a BTreeSet<Elem>,
    ) -> impl Iterator<Item = (&'a Symbol, &'a Tuple)> + 'a {
        self.facts()
            .filter(move |(_, t)| t.iter().any(|e| touching.contains(e)))
    }

    pub fn atomic_diagram(&self) -> Vec<Literal> {
        let elems: Vec<Elem> = self.universe.iter().copied().collect();
        let mut out = Vec::new();
        for sym in self.relations.keys() {
            for tuple in tuples_over(&elems, sym.arity()) {
                let positive = self.holds(sym, &tuple);
                out.push(Literal {
                    symbol: sym.clone(),
                    tuple,
                    positive,
                });
            }
        }
        out
    }
}

/// All tuples of length `arity` over `elems`, lexicographic in the order given.
pub fn tuples_over(elems: &[Elem], arity: usize) -> Vec<Tuple> {
    let mut out = vec![Vec::with_capacity(arity)];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * elems.len());
        for prefix in &out {
            for &e in elems {
                let mut t = prefix.clone();
                t.push(e);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn check_vocab(a: &FinStructure, b: &FinStructure) -> Result<()> {
    if a.vocab.id() != b.vocab.id() {
        return Err(Error::VocabularyMismatch {
            left: a.vocab.id().to_string(),
            right: b.vocab.id().to_string(),
        });
    }
    Ok(())
}

/// Whether `f` embeds `a` into `b`: total on `a`, injective, into `b`, and
/// preserving every relation in both directions. Only realized symbols need
/// checking, since every other symbol is empty on both sides.
pub fn is_embedding(f: &PartialMap, a: &FinStructure, b: &FinStructure) -> Result<bool> {
    check_vocab(a, b)?;
    Ok(embeds_unchecked(f, a, b))
}

pub(crate) fn embeds_unchecked(f: &PartialMap, a: &FinStructure, b: &FinStructure) -> bool {
    if f.len() != a.universe.len() || !a.universe.iter().all(|x| f.get(*x).is_some()) {
        return false;
    }
    if !f.is_injective() || !f.iter().all(|(_, y)| b.universe.contains(&y)) {
        return false;
    }
    for (sym, t) in a.facts() {
        let image = f.apply(t).expect("total on universe");
        if !b.holds(sym, &image) {
            return false;
        }
    }
    let inv = f.inverse().expect("injective");
    let range = f.range();
    for (sym, t) in b.facts() {
        if t.iter().all(|e| range.contains(e)) {
            let pre = inv.apply(t).expect("inside range");
            if !a.holds(sym, &pre) {
                return false;
            }
        }
    }
    true
}

/// Per-element index of the facts an element occurs in.
#[derive(Clone)]
pub(crate) struct Incidence {
    by_elem: HashMap<Elem, Vec<(Symbol, Tuple)>>,
}

impl Incidence {
    pub(crate) fn new(s: &FinStructure) -> Self {
        let mut by_elem: HashMap<Elem, Vec<(Symbol, Tuple)>> = HashMap::new();
        for (sym, t) in s.facts() {
            let mut seen: Vec<Elem> = Vec::with_capacity(t.len());
            for &e in t {
                if !seen.contains(&e) {
                    seen.push(e);
                    by_elem.entry(e).or_default().push((sym.clone(), t.clone()));
                }
            }
        }
        Incidence { by_elem }
    }

    pub(crate) fn of(&self, e: Elem) -> &[(Symbol, Tuple)] {
        self.by_elem.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }
}

type LocalType = Vec<(Symbol, usize)>;

/// Facts whose every entry is `e`, e.g. unary facts and loops.
fn local_type(inc: &Incidence, e: Elem) -> LocalType {
    let mut out: LocalType = inc
        .of(e)
        .iter()
        .filter(|(_, t)| t.iter().all(|&x| x == e))
        .map(|(sym, t)| (sym.clone(), t.len()))
        .collect();
    out.sort();
    out
}

/// Search data for a fixed target structure, reusable across searches
/// while the target is unchanged.
#[derive(Clone)]
pub struct TargetIndex {
    inc: Incidence,
    by_type: HashMap<LocalType, Vec<Elem>>,
}

impl TargetIndex {
    pub fn new(b: &FinStructure) -> Self {
        let inc = Incidence::new(b);
        let mut by_type: HashMap<LocalType, Vec<Elem>> = HashMap::new();
        for &y in b.universe() {
            by_type.entry(local_type(&inc, y)).or_default().push(y);
        }
        TargetIndex { inc, by_type }
    }
}

/// Backtracking search for embeddings, domain elements assigned in increasing
/// order and targets tried in increasing order. Candidate targets are
/// filtered forward on unary facts and binary facts against assigned points.
struct EmbeddingSearch<'a> {
    a: &'a FinStructure,
    b: &'a FinStructure,
    inc_a: Incidence,
    target: Cow<'a, TargetIndex>,
    binary: Vec<&'a Symbol>,
    dom: Vec<Elem>,
    offset: usize,
    /// Search nodes left; `None` is unlimited.
    nodes: Cell<Option<usize>>,
}

impl<'a> EmbeddingSearch<'a> {
    fn new(a: &'a FinStructure, b: &'a FinStructure) -> Self {
        Self::with_target(a, b, Cow::Owned(TargetIndex::new(b)))
    }

    fn with_target(a: &'a FinStructure, b: &'a FinStructure, target: Cow<'a, TargetIndex>) -> Self {
        let mut binary: Vec<&Symbol> = a.realized_symbols().chain(b.realized_symbols()).filter(|s| s.arity() == 2).collect();
        binary.sort_by(|x, y| x.name().cmp(y.name()));
        binary.dedup_by(|x, y| x.name() == y.name());
        EmbeddingSearch {
            a,
            b,
            inc_a: Incidence::new(a),
            target,
            binary,
            dom: a.universe.iter().copied().collect(),
            offset: 0,
            nodes: Cell::new(None),
        }
    }

    /// Checks the facts that become fully assigned when `x -> y` is added.
    fn consistent(&self, f: &PartialMap, inv: &PartialMap, x: Elem, y: Elem) -> bool {
        for (sym, t) in self.inc_a.of(x) {
            if let Some(image) = f.apply(t) {
                if !self.b.holds(sym, &image) {
                    return false;
                }
            }
        }
        for (sym, t) in self.target.inc.of(y) {
            if let Some(pre) = inv.apply(t) {
                if !self.a.holds(sym, &pre) {
                    return false;
                }
            }
        }
        true
    }

    fn pair_agrees(&self, x: Elem, y: Elem, x2: Elem, y2: Elem) -> bool {
        self.binary.iter().all(|s| {
            self.a.holds(s, &[x, x2]) == self.b.holds(s, &[y, y2]) && self.a.holds(s, &[x2, x]) == self.b.holds(s, &[y2, y])
        })
    }

    /// Candidate targets for the unassigned domain points, given `f`.
    fn initial_domains(&self, f: &PartialMap, inv: &PartialMap) -> Vec<Vec<Elem>> {
        self.dom
            .iter()
            .map(|&x| {
                let cands = self.target.by_type.get(&local_type(&self.inc_a, x)).map(Vec::as_slice).unwrap_or(&[]);
                cands
                    .iter()
                    .copied()
                    .filter(|&y| inv.get(y).is_none() && f.iter().all(|(x0, y0)| self.pair_agrees(x0, y0, x, y)))
                    .collect()
            })
            .collect()
    }

    fn run(
        &self,
        f: &mut PartialMap,
        inv: &mut PartialMap,
        domains: &[Vec<Elem>],
        visit: &mut dyn FnMut(&PartialMap) -> bool,
    ) -> bool {
        let k = f.len() - self.offset;
        if k == self.dom.len() {
            return visit(f);
        }
        let x = self.dom[k];
        for &y in &domains[k] {
            if inv.get(y).is_some() {
                continue;
            }
            match self.nodes.get() {
                Some(0) => return true,
                Some(n) => self.nodes.set(Some(n - 1)),
                None => {}
            }
            f.insert(x, y);
            inv.insert(y, x);
            let mut stop = false;
            if self.consistent(f, inv, x, y) {
                let mut next: Vec<Vec<Elem>> = domains.to_vec();
                let mut ok = true;
                let mut union: HashSet<Elem> = HashSet::new();
                for (j, d) in next.iter_mut().enumerate().skip(k + 1) {
                    let x2 = self.dom[j];
                    d.retain(|&y2| y2 != y && inv.get(y2).is_none() && self.pair_agrees(x, y, x2, y2));
                    if d.is_empty() {
                        ok = false;
                        break;
                    }
                    union.extend(d.iter().copied());
                }
                if ok && union.len() >= self.dom.len() - k - 1 {
                    stop = self.run(f, inv, &next, visit);
                }
            }
            f.pairs.remove(&x);
            inv.pairs.remove(&y);
            if stop {
                return true;
            }
        }
        false
    }

    /// Visits embeddings until `visit` returns true.
    fn visit(&self, mut visit: impl FnMut(&PartialMap) -> bool) {
        let mut f = PartialMap::new();
        let mut inv = PartialMap::new();
        let domains = self.initial_domains(&f, &inv);
        self.run(&mut f, &mut inv, &domains, &mut visit);
    }
}

/// Visits embeddings of `a` into `b` in lexicographic order until `visit`
/// returns true. No vocabulary check.
pub(crate) fn visit_embeddings(a: &FinStructure, b: &FinStructure, visit: impl FnMut(&PartialMap) -> bool) {
    EmbeddingSearch::new(a, b).visit(visit)
}

/// Like [`visit_embeddings`] but only over embeddings extending `seed`.
pub(crate) fn visit_extensions(
    a: &FinStructure,
    b: &FinStructure,
    seed: &PartialMap,
    mut visit: impl FnMut(&PartialMap) -> bool,
) {
    let mut search = EmbeddingSearch::new(a, b);
    let mut f = PartialMap::new();
    let mut inv = PartialMap::new();
    for (x, y) in seed.iter() {
        if !a.contains(x) || !b.contains(y) || inv.get(y).is_some() {
            return;
        }
        f.insert(x, y);
        inv.insert(y, x);
        if !search.consistent(&f, &inv, x, y) {
            return;
        }
    }
    search.dom.retain(|x| seed.get(*x).is_none());
    search.offset = seed.len();
    let domains = search.initial_domains(&f, &inv);
    search.run(&mut f, &mut inv, &domains, &mut visit);
}

pub fn enumerate_embeddings(a: &FinStructure, b: &FinStructure) -> Result<Vec<PartialMap>> {
    enumerate_embeddings_bounded(a, b, DEFAULT_EMBEDDING_BOUND)
}

/// Every embedding of `a` into `b`, in lexicographic order of pair lists.
pub fn enumerate_embeddings_bounded(
    a: &FinStructure,
    b: &FinStructure,
    bound: usize,
) -> Result<Vec<PartialMap>> {
    check_vocab(a, b)?;
    if a.len() > bound {
        return Err(Error::BoundExceeded {
            what: "embedding domain",
            size: a.len(),
            bound,
        });
    }
    let mut out = Vec::new();
    EmbeddingSearch::new(a, b).visit(|f| {
        out.push(f.clone());
        false
    });
    Ok(out)
}

/// First embedding in lexicographic order. Unbounded: callers pass small `a`
/// or rely on pruning.
pub fn find_embedding(a: &FinStructure, b: &FinStructure) -> Result<Option<PartialMap>> {
    check_vocab(a, b)?;
    let mut found = None;
    EmbeddingSearch::new(a, b).visit(|f| {
        found = Some(f.clone());
        true
    });
    Ok(found)
}

/// [`find_embedding`] into `b` indexed by `target`, giving up after `nodes`
/// search nodes. `Ok(None)` means the budget ran out, not that no embedding
/// exists.
pub fn find_embedding_within(a: &FinStructure, b: &FinStructure, target: &TargetIndex, nodes: usize) -> Result<Option<Option<PartialMap>>> {
    check_vocab(a, b)?;
    let search = EmbeddingSearch::with_target(a, b, Cow::Borrowed(target));
    search.nodes.set(Some(nodes));
    let mut found = None;
    search.visit(|f| {
        found = Some(f.clone());
        true
    });
    Ok(match found {
        Some(f) => Some(Some(f)),
        None if search.nodes.get() == Some(0) => None,
        None => Some(None),
    })
}

/// An isomorphism from `a` onto `b`, if any.
pub fn find_isomorphism(a: &FinStructure, b: &FinStructure) -> Result<Option<PartialMap>> {
    check_vocab(a, b)?;
    if a.len() != b.len() || a.fact_count() != b.fact_count() {
        return Ok(None);
    }
    find_embedding(a, b)
}

pub fn is_isomorphic(a: &FinStructure, b: &FinStructure) -> Result<bool> {
    Ok(find_isomorphism(a, b)?.is_some())
}

/// Whether `f` is an isomorphism between the substructures it connects.
pub fn is_partial_isomorphism(f: &PartialMap, s: &FinStructure) -> Result<bool> {
    if let Some(e) = f.domain().into_iter().chain(f.range()).find(|e| !s.contains(*e)) {
        return Err(Error::RangeNotBuilt(e));
    }
    let dom = s.restrict_unchecked(&f.domain());
    Ok(embeds_unchecked(f, &dom, s))
}
