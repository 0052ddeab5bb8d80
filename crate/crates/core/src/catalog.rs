//! The shipped ages by tag, each with engine settings suited to it.

use std::sync::Arc;

use crate::age::{AgeRep, FiniteGraphs, LinearOrders, SkipMember};
use crate::engine::{EngineConfig, LimitBuilder};
use crate::error::{Error, Result};
use crate::notation::Notation;
use crate::tower::TowerLevel;

pub const TAGS: &[&str] = &["linorders", "graphs", "broken-linorders", "k1", "kb", "klim"];

/// Tower levels: `k1` is `1`, `kb` is `s(1)`, `klim` is `lim(omega)`.
pub fn tower_notation(tag: &str) -> Option<Notation> {
    match tag {
        "k1" => Some(Notation::One),
        "kb" => Some(Notation::finite(1)),
        "klim" => Some(Notation::limit("omega")),
        _ => None,
    }
}

pub fn age_by_tag(tag: &str) -> Result<(AgeRep, EngineConfig)> {
    if let Some(a) = tower_notation(tag) {
        let level = TowerLevel::build(&a)?;
        return Ok((level.age_rep(), level.engine_config()));
    }
    let age: AgeRep = match tag {
        "linorders" => Arc::new(LinearOrders::new()),
        "graphs" => Arc::new(FiniteGraphs::new()),
        "broken-linorders" => Arc::new(SkipMember::broken_linorders()),
        _ => return Err(Error::UnknownAge(format!("{tag} (known: {})", TAGS.join(", ")))),
    };
    Ok((age, EngineConfig::default()))
}

pub fn builder_by_tag(tag: &str, schedule: u64) -> Result<LimitBuilder> {
    let (age, cfg) = age_by_tag(tag)?;
    LimitBuilder::with_config(age, schedule, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tag_resolves() {
        for tag in TAGS {
            let (age, _) = age_by_tag(tag).unwrap();
            assert!(!age.tag().is_empty());
        }
        assert!(matches!(age_by_tag("nope"), Err(Error::UnknownAge(_))));
    }

    #[test]
    fn broken_age_is_refused_by_the_engine() {
        assert!(builder_by_tag("broken-linorders", 0).is_err());
        assert!(builder_by_tag("linorders", 0).is_ok());
    }
}
