//! Computable representations of ages.
//!
//! An [`Age`] packages an enumerator of member structures together with a
//! total embedding decider. Ages may also expose a constructive membership
//! locator and an amalgamation procedure; the generic search below falls back
//! to brute force over member indices when they do not.

mod check;
mod graphs;
mod orders;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::coding::{idx, Index};
use crate::error::{Error, Result};
use crate::structure::{embeds_unchecked, visit_embeddings, visit_extensions, Elem, FinStructure, PartialMap, Vocabulary};

pub use check::{check_age_axioms, AxiomCheck, AxiomReport, Counterexample};
pub use graphs::FiniteGraphs;
pub use orders::{LinearOrders, SkipMember};

/// A computable representation of an age together with its embedding relation.
pub trait Age: Send + Sync {
    fn tag(&self) -> &str;

    fn vocabulary(&self) -> &Arc<Vocabulary>;

    /// The `i`-th member, with its full universe. Total.
    fn member(&self, i: &Index) -> Arc<FinStructure>;

    /// Whether `f` embeds `member(i)` into `member(j)`.
    fn decide_embedding(&self, i: &Index, j: &Index, f: &PartialMap) -> bool {
        embeds_unchecked(f, &self.member(i), &self.member(j))
    }

    /// Structural membership test for the class the age describes.
    fn validate(&self, s: &FinStructure) -> std::result::Result<(), String>;

    /// An index `i` and an isomorphism from `member(i)` onto `s`, when the
    /// representation can compute one directly.
    fn locate(&self, _s: &FinStructure) -> Option<(Index, PartialMap)> {
        None
    }

    /// A constructive amalgam for the query, if the age provides one.
    /// `None` means the procedure found none; callers may still search.
    fn amalgamate(&self, _q: &AmalgamQuery<'_>) -> Option<Amalgam> {
        None
    }

    /// Whether `amalgamate` is a complete procedure, so that `None` from it
    /// means no amalgam exists rather than "not implemented".
    fn constructive_amalgamation(&self) -> bool {
        false
    }

    /// Size of `member(i)` when it is cheaper to compute than the member.
    fn member_size(&self, _i: &Index) -> Option<usize> {
        None
    }
}

pub type AgeRep = Arc<dyn Age>;

/// Two embeddings `f: C -> A` and `g: C -> B` awaiting an amalgam.
#[derive(Clone, Copy)]
pub struct AmalgamQuery<'a> {
    pub a: &'a FinStructure,
    pub b: &'a FinStructure,
    pub c: &'a FinStructure,
    pub f: &'a PartialMap,
    pub g: &'a PartialMap,
}

/// `D` with `f_prime: A -> D` and `g_prime: B -> D`.
#[derive(Clone, Debug)]
pub struct Amalgam {
    pub d: FinStructure,
    pub f_prime: PartialMap,
    pub g_prime: PartialMap,
}

#[derive(Clone, Debug)]
pub struct AmalgamCertificate {
    pub d_index: Index,
    pub d: Arc<FinStructure>,
    pub f_prime: PartialMap,
    pub g_prime: PartialMap,
}

impl Amalgam {
    /// Checks both embeddings, commutation over `C`, and membership of `D`.
    pub fn verify(&self, age: &dyn Age, q: &AmalgamQuery<'_>) -> std::result::Result<(), String> {
        if !embeds_unchecked(&self.f_prime, q.a, &self.d) {
            return Err("f' is not an embedding of A".into());
        }
        if !embeds_unchecked(&self.g_prime, q.b, &self.d) {
            return Err("g' is not an embedding of B".into());
        }
        if self.f_prime.compose(q.f) != self.g_prime.compose(q.g) {
            return Err("square does not commute on C".into());
        }
        age.validate(&self.d).map_err(|e| format!("amalgam not in the age: {e}"))
    }
}

impl AmalgamCertificate {
    pub fn as_amalgam(&self) -> Amalgam {
        Amalgam {
            d: (*self.d).clone(),
            f_prime: self.f_prime.clone(),
            g_prime: self.g_prime.clone(),
        }
    }
}

/// Brute-force member lookup: the first index up to `horizon` whose member
/// is isomorphic to `s`, with the isomorphism.
pub fn search_member(age: &dyn Age, s: &FinStructure, horizon: usize) -> Option<(Index, PartialMap)> {
    (0..=horizon as u64).find_map(|i| {
        let i = idx(i);
        let m = age.member(&i);
        crate::structure::find_isomorphism(&m, s)
            .ok()
            .flatten()
            .map(|iso| (i, iso))
    })
}

/// `locate` cross-checked: the returned map must be an isomorphism.
pub fn locate_checked(age: &dyn Age, s: &FinStructure) -> Option<(Index, PartialMap)> {
    let (i, iso) = age.locate(s)?;
    let m = age.member(&i);
    (m.len() == s.len() && embeds_unchecked(&iso, &m, s)).then_some((i, iso))
}

/// Finds an amalgam of `member(a)` and `member(b)` over `member(c)`.
///
/// The age's own amalgamation procedure is tried first; its result is
/// verified and located in the enumeration. Otherwise indices `0..=budget`
/// are searched in order, and for each member the embeddings of `A` and of
/// `B` in lexicographic order; the first commuting pair wins.
pub fn search_amalgam(
    age: &dyn Age,
    a: &Index,
    b: &Index,
    c: &Index,
    f: &PartialMap,
    g: &PartialMap,
    budget: usize,
) -> Result<AmalgamCertificate> {
    if !age.decide_embedding(c, a, f) {
        return Err(Error::PreconditionFailed(format!("f = {f:?} does not embed C into A")));
    }
    if !age.decide_embedding(c, b, g) {
        return Err(Error::PreconditionFailed(format!("g = {g:?} does not embed C into B")));
    }
    let (ma, mb, mc) = (age.member(a), age.member(b), age.member(c));
    let q = AmalgamQuery {
        a: &ma,
        b: &mb,
        c: &mc,
        f,
        g,
    };
    if let Some(cert) = hinted_certificate(age, &q) {
        return Ok(cert);
    }
    brute_amalgam(age, &q, budget).ok_or(Error::BudgetExhausted { budget })
}

fn hinted_certificate(age: &dyn Age, q: &AmalgamQuery<'_>) -> Option<AmalgamCertificate> {
    let am = age.amalgamate(q)?;
    am.verify(age, q).ok()?;
    let (d_index, iso) = locate_checked(age, &am.d)?;
    // iso: member(d) -> am.d, so pull the maps back into member(d)
    let back = iso.inverse()?;
    Some(AmalgamCertificate {
        d: age.member(&d_index),
        d_index,
        f_prime: back.compose(&am.f_prime),
        g_prime: back.compose(&am.g_prime),
    })
}

fn brute_amalgam(age: &dyn Age, q: &AmalgamQuery<'_>, budget: usize) -> Option<AmalgamCertificate> {
    for d in 0..=budget as u64 {
        let d_index = idx(d);
        let md = age.member(&d_index);
        if md.len() < q.a.len().max(q.b.len()) {
            continue;
        }
        let mut found = None;
        visit_embeddings(q.a, &md, |fp| {
            // g' is pinned on g(C) by commutation
            let seed: PartialMap = q
                .g
                .iter()
                .filter_map(|(c, gc)| fp.get(q.f.get(c)?).map(|d| (gc, d)))
                .collect();
            visit_extensions(q.b, &md, &seed, |gp| {
                found = Some((fp.clone(), gp.clone()));
                true
            });
            found.is_some()
        });
        if let Some((f_prime, g_prime)) = found {
            return Some(AmalgamCertificate {
                d_index,
                d: md,
                f_prime,
                g_prime,
            });
        }
    }
    None
}

/// Renames an amalgam so that `g_prime` is the identity on `B`; elements
/// outside the image of `B` take the least naturals not used by `B`.
pub fn anchor_on_b(am: Amalgam, b: &FinStructure) -> Result<Amalgam> {
    let mut rename = PartialMap::new();
    for (x, y) in am.g_prime.iter() {
        rename.insert(y, x);
    }
    let image: BTreeSet<Elem> = am.g_prime.range();
    let mut taken: BTreeSet<Elem> = b.universe().clone();
    for &e in am.d.universe() {
        if !image.contains(&e) {
            let fresh = (0..).find(|n| !taken.contains(n)).expect("unbounded");
            taken.insert(fresh);
            rename.insert(e, fresh);
        }
    }
    Ok(Amalgam {
        d: am.d.rename(&rename)?,
        f_prime: rename.compose(&am.f_prime),
        g_prime: PartialMap::identity(b.universe().iter().copied()),
    })
}

/// Bounded memo for decoded members, keyed by index.
pub struct MemberCache {
    map: Mutex<HashMap<Index, Arc<FinStructure>>>,
    capacity: usize,
}

impl MemberCache {
    pub fn new(capacity: usize) -> Self {
        MemberCache {
            map: Mutex::new(HashMap::new()),
            capacity,
        }
    }

    pub fn get_or(&self, i: &Index, decode: impl FnOnce() -> FinStructure) -> Arc<FinStructure> {
        if let Some(hit) = self.map.lock().expect("member cache poisoned").get(i) {
            return hit.clone();
        }
        let value = Arc::new(decode());
        let mut map = self.map.lock().expect("member cache poisoned");
        if map.len() >= self.capacity {
            map.clear();
        }
        map.insert(i.clone(), value.clone());
        value
    }
}

/// One JSON-serializable line of an age report.
#[derive(Serialize)]
pub struct ReportLine<'a, T: Serialize> {
    pub age: &'a str,
    #[serde(flatten)]
    pub body: T,
}

#[cfg(test)]
mod tests;
