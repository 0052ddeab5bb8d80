//! The tower of levels indexed by ordinal notations: a base level of
//! coloured rationals, successor levels built from edge-coloured vertex sets,
//! and limit levels assembled blockwise from the levels below.

mod base;
mod limit;
mod successor;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::age::{Age, AgeRep};
use crate::engine::{EngineConfig, LimitBuilder};
use crate::error::Result;
use crate::notation::Notation;
use crate::structure::{Elem, FinStructure, Symbol, Vocabulary};

pub use base::{colour_name, decode_rational, encode_rational, BaseAge};
pub use limit::{slot, unslot, LimitAge};
pub use successor::{triangle_law, Layout, SuccessorAge};

/// Levels `a_n` of a limit built eagerly, `n <= LIMIT_HORIZON`.
pub const LIMIT_HORIZON: usize = 4;

/// An age in the tower: it carries a distinguished unary `U` linearly
/// ordered by a distinguished binary `<`.
pub trait LevelAge: Age {
    fn notation(&self) -> &Notation;

    fn u_symbol(&self) -> &Symbol;

    fn order_symbol(&self) -> &Symbol;

    /// The symbols the level's construction introduces.
    fn distinguished(&self) -> Vec<Symbol> {
        vec![self.u_symbol().clone(), self.order_symbol().clone()]
    }

    /// A copy of the member `m` with one more `U` point `fresh`, strictly
    /// between `lo` and `hi` in the order (a missing bound is open).
    fn insert_u_point(&self, _m: &FinStructure, _lo: Option<Elem>, _hi: Option<Elem>, _fresh: Elem) -> Option<FinStructure> {
        None
    }
}

fn memo() -> &'static Mutex<HashMap<Notation, Arc<dyn LevelAge>>> {
    static MEMO: OnceLock<Mutex<HashMap<Notation, Arc<dyn LevelAge>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The level for `a`, by recursion on the notation. Levels are built once
/// per process and shared.
pub fn level(a: &Notation) -> Result<Arc<dyn LevelAge>> {
    if let Some(hit) = memo().lock().expect("tower memo poisoned").get(a) {
        return Ok(hit.clone());
    }
    // built without the lock held: the recursion reenters
    let built: Arc<dyn LevelAge> = match a {
        Notation::One => Arc::new(BaseAge::new()),
        Notation::Succ(p) => Arc::new(SuccessorAge::new(level(p)?)),
        Notation::Lim(_) => Arc::new(LimitAge::new(a, LIMIT_HORIZON)?),
    };
    Ok(memo().lock().expect("tower memo poisoned").entry(a.clone()).or_insert(built).clone())
}

/// A level together with what is needed to grow its limit.
#[derive(Clone)]
pub struct TowerLevel {
    pub notation: Notation,
    pub age: Arc<dyn LevelAge>,
}

impl TowerLevel {
    pub fn build(a: &Notation) -> Result<TowerLevel> {
        Ok(TowerLevel {
            notation: a.clone(),
            age: level(a)?,
        })
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        self.age.vocabulary()
    }

    pub fn distinguished(&self) -> Vec<Symbol> {
        self.age.distinguished()
    }

    pub fn age_rep(&self) -> AgeRep {
        self.age.clone()
    }

    /// Engine settings that keep the level's searches at desk scale.
    pub fn engine_config(&self) -> EngineConfig {
        match self.notation {
            Notation::One => EngineConfig::default(),
            _ => EngineConfig {
                iso_cap: 3,
                ..EngineConfig::default()
            },
        }
    }

    pub fn builder(&self, schedule: u64) -> Result<LimitBuilder> {
        LimitBuilder::with_config(self.age_rep(), schedule, self.engine_config())
    }
}
