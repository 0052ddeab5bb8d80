//! Growing finite approximations of the Fraïssé limit of an age.
//!
//! The builder keeps a chain of stages `A_0 ⊆ A_1 ⊆ ...`, each located in the
//! age's enumeration by a witness index and isomorphism, and a FIFO queue of
//! tasks:
//!
//! * `EmbedMember(i)` makes member `i` embed into the current stage. One such
//!   task is injected per executed step, in index order.
//! * `Extend { base, shape }` realizes a one-point extension over the tuple
//!   `base`. Shapes are the one-point extensions `(ȳ, x)` found in members of
//!   size at most `iso_cap` among the first `shape_horizon` indices, over all
//!   orderings of `ȳ`. Realizing every shape over every realized tuple of
//!   matching type is what extending a partial isomorphism `p` by one point
//!   asks for, with `ȳ = dom p` and `base = ran p`.
//! * `Discover(z)` is bookkeeping: it enqueues the `Extend` tasks whose base
//!   has largest element `z`.
//!
//! Tasks that find their goal already met are free: they do not count as
//! steps. An `Extend` task whose amalgam the age reports impossible is
//! recorded as obstructed and counts as a step.
//!
//! Fairness: a task enqueued when the queue holds `q` tasks is executed within
//! `q` further steps, since everything ahead of it is executed first and free
//! tasks cost nothing.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::age::{
    anchor_on_b, check_age_axioms, locate_checked, search_amalgam, search_member, AgeRep, Amalgam, AmalgamQuery,
    AxiomCheck,
};
use crate::coding::{idx, Index};
use crate::error::{Error, Result};
use crate::structure::{embeds_unchecked, find_embedding_within, Elem, FinStructure, PartialMap, Symbol, TargetIndex};

pub const DEFAULT_SCHEDULE: u64 = 0;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Largest `|ȳ| + 1` for extension shapes.
    pub iso_cap: usize,
    /// Members `0..shape_horizon` are scanned for shapes.
    pub shape_horizon: u64,
    /// Index budget for brute-force amalgams when the age has no procedure.
    pub amalgam_budget: usize,
    /// Index horizon for locating structures when the age has no locator.
    pub locate_horizon: usize,
    /// Axiom check run by [`LimitBuilder::new`]; `None` skips it.
    pub smoke: Option<AxiomCheck>,
    /// Consecutive free tasks after which `grow` gives up.
    pub idle_limit: usize,
    /// Search nodes spent checking whether a member already embeds; past
    /// this the member is joined to the stage as a fresh copy.
    pub embed_nodes: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            iso_cap: 4,
            shape_horizon: 2048,
            amalgam_budget: 64,
            locate_horizon: 64,
            smoke: Some(AxiomCheck::new(2, 12)),
            idle_limit: 200_000,
            embed_nodes: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaskKind {
    EmbedMember(Index),
    Discover(Elem),
    Extend { base: Vec<Elem>, shape: usize },
}

#[derive(Clone, Debug)]
pub struct Task {
    pub kind: TaskKind,
    /// Steps executed when the task was enqueued.
    pub born_step: usize,
    /// Queue length when the task was enqueued.
    pub queue_at_birth: usize,
}

#[derive(Clone, Debug)]
pub struct StageRecord {
    pub size: usize,
    pub witness_index: Index,
    /// Isomorphism from `member(witness_index)` onto the stage.
    pub witness_map: PartialMap,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EngineStats {
    pub steps: usize,
    pub free_tasks: usize,
    pub members_embedded: usize,
    pub extensions: usize,
    pub obstructed: usize,
    pub max_delay: usize,
    pub fairness_violations: usize,
}

/// Quantifier-free type of a tuple, positions in place of elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct TypeKey {
    unary: Vec<Vec<Symbol>>,
    poly: Vec<(Symbol, Vec<u8>)>,
}

struct Shape {
    full: TypeKey,
    /// Universe `0..=k`, the new point is `k`.
    ext: FinStructure,
}

fn unary_signature(s: &FinStructure, e: Elem) -> Vec<Symbol> {
    s.realized_symbols()
        .filter(|sym| sym.arity() == 1 && s.holds(sym, &[e]))
        .cloned()
        .collect()
}

fn positions(k: usize, arity: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k as u8).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

fn type_key(s: &FinStructure, tuple: &[Elem], sig: &dyn Fn(Elem) -> Vec<Symbol>, poly: &[Symbol]) -> TypeKey {
    let unary = tuple.iter().map(|&e| sig(e)).collect();
    let mut facts = Vec::new();
    for sym in poly {
        for p in positions(tuple.len(), sym.arity()) {
            let t: Vec<Elem> = p.iter().map(|&i| tuple[i as usize]).collect();
            if s.holds(sym, &t) {
                facts.push((sym.clone(), p));
            }
        }
    }
    TypeKey { unary, poly: facts }
}

fn permutations(items: &[Elem]) -> Vec<Vec<Elem>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn subsets_up_to(items: &[Elem], max: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![Vec::new()];
    for &x in items {
        let grown: Vec<Vec<Elem>> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut t = s.clone();
                t.push(x);
                t
            })
            .collect();
        out.extend(grown);
    }
    out
}

pub struct LimitBuilder {
    age: AgeRep,
    cfg: EngineConfig,
    schedule: u64,
    current: FinStructure,
    stages: Vec<StageRecord>,
    queue: VecDeque<Task>,
    next_member: u64,
    shapes: Vec<Shape>,
    by_base: HashMap<TypeKey, Vec<usize>>,
    base_sigs: HashSet<Vec<Symbol>>,
    sigs: HashMap<Elem, Vec<Symbol>>,
    poly: Vec<Symbol>,
    compatible: Vec<Elem>,
    stats: EngineStats,
    obstructions: Vec<String>,
    /// Search index of `current`, dropped on every commit.
    target: Option<TargetIndex>,
}

impl LimitBuilder {
    /// Runs the smoke check, scans shapes and sets up stage 0 (empty).
    pub fn new(age: AgeRep, schedule: u64) -> Result<Self> {
        Self::with_config(age, schedule, EngineConfig::default())
    }

    pub fn with_config(age: AgeRep, schedule: u64, cfg: EngineConfig) -> Result<Self> {
        if let Some(smoke) = &cfg.smoke {
            let report = check_age_axioms(age.as_ref(), smoke);
            if let Some(first) = report.counterexamples.first() {
                return Err(Error::DefectiveAge {
                    tag: age.tag().to_string(),
                    reason: format!(
                        "{} counterexample(s), first: {}",
                        report.counterexamples.len(),
                        serde_json::to_string(first).expect("serializable")
                    ),
                });
            }
        }
        let current = FinStructure::empty(age.vocabulary().clone());
        let mut b = LimitBuilder {
            age,
            cfg,
            schedule,
            current,
            stages: Vec::new(),
            queue: VecDeque::new(),
            next_member: 0,
            shapes: Vec::new(),
            by_base: HashMap::new(),
            base_sigs: HashSet::new(),
            sigs: HashMap::new(),
            poly: Vec::new(),
            compatible: Vec::new(),
            stats: EngineStats::default(),
            obstructions: Vec::new(),
            target: None,
        };
        let witness = b.locate_stage(&b.current)?;
        b.stages.push(witness);
        b.scan_shapes();
        b.enqueue_extensions(&[], DEFAULT_SCHEDULE);
        Ok(b)
    }

    pub fn age(&self) -> &AgeRep {
        &self.age
    }

    pub fn current(&self) -> &FinStructure {
        &self.current
    }

    pub fn stages(&self) -> &[StageRecord] {
        &self.stages
    }

    /// Stage `s` as a structure: the current stage restricted to its universe.
    pub fn stage(&self, s: usize) -> Option<FinStructure> {
        let rec = self.stages.get(s)?;
        let universe: BTreeSet<Elem> = (0..rec.size as Elem).collect();
        Some(self.current.restrict_unchecked(&universe))
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn obstructions(&self) -> &[String] {
        &self.obstructions
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn shape_count(&self) -> usize {
        self.shapes.len()
    }

    fn sig_of(&self, s: &FinStructure, e: Elem) -> Vec<Symbol> {
        match self.sigs.get(&e) {
            Some(sig) => sig.clone(),
            None => unary_signature(s, e),
        }
    }

    fn scan_shapes(&mut self) {
        let cap = self.cfg.iso_cap.max(1);
        let mut seen: HashSet<TypeKey> = HashSet::new();
        for i in 0..self.cfg.shape_horizon {
            if self.age.member_size(&idx(i)).is_some_and(|n| n > cap) {
                continue;
            }
            let m = self.age.member(&idx(i));
            if m.len() > cap || m.is_empty() {
                continue;
            }
            let poly: Vec<Symbol> = m.realized_symbols().filter(|s| s.arity() > 1).cloned().collect();
            let sig = |e: Elem| unary_signature(&m, e);
            let elems: Vec<Elem> = m.universe().iter().copied().collect();
            for &x in &elems {
                let others: Vec<Elem> = elems.iter().copied().filter(|&e| e != x).collect();
                for subset in subsets_up_to(&others, cap - 1) {
                    for perm in permutations(&subset) {
                        let mut tuple = perm.clone();
                        tuple.push(x);
                        let full = type_key(&m, &tuple, &sig, &poly);
                        if !seen.insert(full.clone()) {
                            continue;
                        }
                        let base = type_key(&m, &perm, &sig, &poly);
                        let rename: PartialMap = tuple.iter().enumerate().map(|(k, &e)| (e, k as Elem)).collect();
                        let support: BTreeSet<Elem> = tuple.iter().copied().collect();
                        let ext = m.restrict_unchecked(&support).rename(&rename).expect("injective renaming");
                        for s in &base.unary {
                            self.base_sigs.insert(s.clone());
                        }
                        let id = self.shapes.len();
                        self.by_base.entry(base).or_default().push(id);
                        self.shapes.push(Shape { full, ext });
                    }
                }
            }
        }
    }

    fn push(&mut self, kind: TaskKind) {
        let task = Task {
            kind,
            born_step: self.stats.steps,
            queue_at_birth: self.queue.len(),
        };
        self.queue.push_back(task);
    }

    /// Extend tasks for every base tuple `R` with `max R = z` (or `R` empty).
    fn enqueue_extensions(&mut self, tail: &[Elem], salt: u64) {
        let mut batch = Vec::new();
        let cap = self.cfg.iso_cap.max(1);
        let (smaller, top): (Vec<Elem>, Option<Elem>) = match tail {
            [] => (Vec::new(), None),
            [z] => (self.compatible.iter().copied().filter(|e| e < z).collect(), Some(*z)),
            _ => unreachable!("one element at a time"),
        };
        let lead = if top.is_some() { cap.saturating_sub(2) } else { 0 };
        for mut r in subsets_up_to(&smaller, lead) {
            if let Some(z) = top {
                if cap < 2 {
                    break;
                }
                r.push(z);
            }
            let key = type_key(&self.current, &r, &|e| self.sig_of(&self.current, e), &self.poly);
            if let Some(ids) = self.by_base.get(&key) {
                for &shape in ids {
                    batch.push(TaskKind::Extend { base: r.clone(), shape });
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.schedule ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        if self.schedule != DEFAULT_SCHEDULE {
            batch.shuffle(&mut rng);
        }
        for kind in batch {
            self.push(kind);
        }
    }

    fn locate_stage(&self, s: &FinStructure) -> Result<StageRecord> {
        let (witness_index, witness_map) = locate_checked(self.age.as_ref(), s)
            .or_else(|| search_member(self.age.as_ref(), s, self.cfg.locate_horizon))
            .ok_or_else(|| Error::DefectiveAge {
                tag: self.age.tag().to_string(),
                reason: format!("stage of size {} matches no member within the horizon", s.len()),
            })?;
        Ok(StageRecord {
            size: s.len(),
            witness_index,
            witness_map,
        })
    }

    /// Amalgam of `a` with the current stage over `a` restricted to
    /// `c_elems`, glued by `g`. `Ok(None)` when the age's procedure says no
    /// amalgam exists.
    fn amalgamate_with_stage(&self, a: &FinStructure, c_elems: &BTreeSet<Elem>, g: &PartialMap) -> Result<Option<Amalgam>> {
        let c = a.restrict_unchecked(c_elems);
        let f = PartialMap::identity(c_elems.iter().copied());
        let q = AmalgamQuery {
            a,
            b: &self.current,
            c: &c,
            f: &f,
            g,
        };
        let am = match self.age.amalgamate(&q) {
            Some(am) => am,
            None if self.age.constructive_amalgamation() => return Ok(None),
            None => self.brute_amalgam(&q)?,
        };
        if !embeds_unchecked(&am.f_prime, a, &am.d)
            || !embeds_unchecked(&am.g_prime, &self.current, &am.d)
            || am.f_prime.compose(&f) != am.g_prime.compose(g)
        {
            return Ok(None);
        }
        Ok(Some(anchor_on_b(am, &self.current)?))
    }

    fn brute_amalgam(&self, q: &AmalgamQuery<'_>) -> Result<Amalgam> {
        let age = self.age.as_ref();
        let find = |s: &FinStructure| {
            locate_checked(age, s)
                .or_else(|| search_member(age, s, self.cfg.locate_horizon))
                .ok_or(Error::BudgetExhausted {
                    budget: self.cfg.locate_horizon,
                })
        };
        let (ia, fa) = find(q.a)?;
        let (ic, fc) = find(q.c)?;
        let rec = self.stages.last().expect("stage 0 exists");
        let fb = &rec.witness_map;
        let fa_inv = fa.inverse().expect("isomorphism");
        let fb_inv = fb.inverse().expect("isomorphism");
        let f_idx = fa_inv.compose(&q.f.compose(&fc));
        let g_idx = fb_inv.compose(&q.g.compose(&fc));
        let cert = search_amalgam(age, &ia, &rec.witness_index, &ic, &f_idx, &g_idx, self.cfg.amalgam_budget)?;
        Ok(Amalgam {
            d: (*cert.d).clone(),
            f_prime: cert.f_prime.compose(&fa_inv),
            g_prime: cert.g_prime.compose(&fb_inv),
        })
    }

    /// Replaces the current stage by `am.d` (which extends it) and records
    /// the new stage.
    fn commit(&mut self, d: FinStructure) -> Result<()> {
        let old: BTreeSet<Elem> = self.current.universe().clone();
        if d.restrict_unchecked(&old) != self.current {
            return Err(Error::PreconditionFailed("amalgam does not extend the stage".into()));
        }
        let new: Vec<Elem> = d.universe().difference(&old).copied().collect();
        let record = self.locate_stage(&d)?;
        self.current = d;
        self.target = None;
        self.poly = self.current.realized_symbols().filter(|s| s.arity() > 1).cloned().collect();
        for &z in &new {
            let sig = unary_signature(&self.current, z);
            self.sigs.insert(z, sig);
        }
        self.stages.push(record);
        for z in new {
            self.push(TaskKind::Discover(z));
        }
        Ok(())
    }

    fn inject(&mut self) {
        let i = idx(self.next_member);
        self.next_member += 1;
        self.push(TaskKind::EmbedMember(i));
    }

    /// Executes `steps` non-free tasks and returns the current stage.
    pub fn grow(&mut self, steps: usize) -> Result<&FinStructure> {
        let target = self.stats.steps + steps;
        let mut idle = 0;
        while self.stats.steps < target {
            while self.next_member <= self.stats.steps as u64 || self.queue.is_empty() {
                self.inject();
                if !self.queue.is_empty() && self.next_member > self.stats.steps as u64 {
                    break;
                }
            }
            let task = self.queue.pop_front().expect("queue refilled");
            let worked = self.run(&task)?;
            if worked {
                let delay = self.stats.steps - task.born_step;
                self.stats.max_delay = self.stats.max_delay.max(delay);
                if delay > task.queue_at_birth {
                    self.stats.fairness_violations += 1;
                }
                self.stats.steps += 1;
                idle = 0;
            } else {
                self.stats.free_tasks += 1;
                idle += 1;
                if idle >= self.cfg.idle_limit {
                    break;
                }
            }
        }
        Ok(&self.current)
    }

    /// Runs one task; returns whether it counted as a step.
    fn run(&mut self, task: &Task) -> Result<bool> {
        match &task.kind {
            TaskKind::Discover(z) => {
                let sig = self.sig_of(&self.current, *z);
                if self.base_sigs.contains(&sig) {
                    self.compatible.push(*z);
                    self.enqueue_extensions(&[*z], *z + 1);
                }
                Ok(false)
            }
            TaskKind::EmbedMember(i) => {
                let m = self.age.member(i);
                let target = self.target.get_or_insert_with(|| TargetIndex::new(&self.current));
                if let Some(Some(_)) = find_embedding_within(&m, &self.current, target, self.cfg.embed_nodes)? {
                    return Ok(false);
                }
                match self.amalgamate_with_stage(&m, &BTreeSet::new(), &PartialMap::new())? {
                    Some(am) => {
                        self.commit(am.d)?;
                        self.stats.members_embedded += 1;
                    }
                    None => self.obstructed(format!("member {i} does not embed jointly with the stage")),
                }
                Ok(true)
            }
            TaskKind::Extend { base, shape } => {
                if self.realized(base, *shape) {
                    return Ok(false);
                }
                let k = base.len();
                let ext = self.shapes[*shape].ext.clone();
                let c_elems: BTreeSet<Elem> = (0..k as Elem).collect();
                let g: PartialMap = base.iter().enumerate().map(|(p, &e)| (p as Elem, e)).collect();
                match self.amalgamate_with_stage(&ext, &c_elems, &g)? {
                    Some(am) => {
                        self.commit(am.d)?;
                        self.stats.extensions += 1;
                    }
                    None => self.obstructed(format!("shape {shape} over {base:?}")),
                }
                Ok(true)
            }
        }
    }

    fn obstructed(&mut self, what: String) {
        self.stats.obstructed += 1;
        if self.obstructions.len() < 1000 {
            self.obstructions.push(what);
        }
    }

    /// Whether some point outside `base` realizes the shape over it.
    fn realized(&self, base: &[Elem], shape: usize) -> bool {
        let sh = &self.shapes[shape];
        let want = &sh.full.unary[base.len()];
        let in_base: HashSet<Elem> = base.iter().copied().collect();
        let mut tuple = base.to_vec();
        tuple.push(0);
        for &w in self.current.universe() {
            if in_base.contains(&w) || self.sigs.get(&w).is_some_and(|s| s != want) {
                continue;
            }
            *tuple.last_mut().expect("nonempty") = w;
            let key = type_key(&self.current, &tuple, &|e| self.sig_of(&self.current, e), &self.poly);
            if key == sh.full {
                return true;
            }
        }
        false
    }

    /// Least stage containing `ran f`.
    fn stage_covering(&self, f: &PartialMap) -> Result<usize> {
        let top = match f.range().into_iter().next_back() {
            None => return Ok(0),
            Some(t) => t,
        };
        if !self.current.contains(top) {
            return Err(Error::RangeNotBuilt(top));
        }
        // universes are initial segments 0..size
        Ok(self.stages.partition_point(|r| (r.size as Elem) <= top))
    }

    /// Whether `f` embeds `member(i)` into the limit, decided through the
    /// least stage containing the range of `f`.
    pub fn decide_e_limit(&self, i: &Index, f: &PartialMap) -> Result<bool> {
        if let Some(e) = f.range().into_iter().find(|e| !self.current.contains(*e)) {
            return Err(Error::RangeNotBuilt(e));
        }
        let s = self.stage_covering(f)?;
        let rec = &self.stages[s];
        let back = rec.witness_map.inverse().expect("witness is injective");
        if !f.is_injective() {
            return Ok(false);
        }
        let g = back.compose(f);
        if g.len() != f.len() {
            return Ok(false);
        }
        Ok(self.age.decide_embedding(i, &rec.witness_index, &g))
    }

    /// Whether `f` is an isomorphism between the substructures of the limit
    /// induced on its domain and range.
    pub fn is_partial_iso(&self, f: &PartialMap) -> Result<bool> {
        if let Some(e) = f.domain().into_iter().chain(f.range()).find(|e| !self.current.contains(*e)) {
            return Err(Error::RangeNotBuilt(e));
        }
        let dom = self.current.restrict_unchecked(&f.domain());
        let (i, g) = locate_checked(self.age.as_ref(), &dom)
            .or_else(|| search_member(self.age.as_ref(), &dom, self.cfg.locate_horizon))
            .ok_or_else(|| Error::DefectiveAge {
                tag: self.age.tag().to_string(),
                reason: "induced substructure matches no member".into(),
            })?;
        debug_assert!(self.decide_e_limit(&i, &g)?);
        let h = f.compose(&g);
        if h.len() != g.len() {
            return Ok(false);
        }
        self.decide_e_limit(&i, &h)
    }

    /// Extends the partial isomorphism `f` so that `x` enters its domain
    /// (`forth`) or range (`!forth`), growing the stage by at most `budget`
    /// amalgamation attempts.
    pub fn extend_iso(&mut self, f: &PartialMap, x: Elem, forth: bool, budget: usize) -> Result<PartialMap> {
        if !forth {
            let inv = f.inverse().ok_or_else(|| Error::PreconditionFailed("map is not injective".into()))?;
            return self.extend_iso(&inv, x, true, budget)?.inverse().ok_or_else(|| {
                Error::PreconditionFailed("extension is not injective".into())
            });
        }
        if !self.is_partial_iso(f)? {
            return Err(Error::PreconditionFailed(format!("{f} is not a partial isomorphism")));
        }
        if !self.current.contains(x) {
            return Err(Error::RangeNotBuilt(x));
        }
        if f.get(x).is_some() {
            return Ok(f.clone());
        }
        let dom: Vec<Elem> = f.domain().into_iter().collect();
        for _ in 0..=budget {
            for &y in self.current.universe() {
                if f.range().contains(&y) {
                    continue;
                }
                let mut g = f.clone();
                g.insert(x, y);
                if self.is_partial_iso(&g)? {
                    return Ok(g);
                }
            }
            // realize the type of x over dom f at ran f
            let mut tuple = dom.clone();
            tuple.push(x);
            let support: BTreeSet<Elem> = tuple.iter().copied().collect();
            let rename: PartialMap = tuple.iter().enumerate().map(|(k, &e)| (e, k as Elem)).collect();
            let ext = self.current.restrict_unchecked(&support).rename(&rename)?;
            let c_elems: BTreeSet<Elem> = (0..dom.len() as Elem).collect();
            let g: PartialMap = dom.iter().enumerate().map(|(k, &d)| (k as Elem, f.get(d).expect("in domain"))).collect();
            match self.amalgamate_with_stage(&ext, &c_elems, &g)? {
                Some(am) => self.commit(am.d)?,
                None => break,
            }
        }
        Err(Error::BudgetExhausted { budget })
    }
}
