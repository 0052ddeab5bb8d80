//! JSON and DOT forms of finite structures.
//!
//! The JSON vocabulary lists the realized symbols only. Decoding without a
//! target vocabulary yields a structure over a finite vocabulary with id
//! `"json"`; [`decode_into`] re-homes it into a given vocabulary instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::notation::Notation;
use crate::structure::{Elem, FinStructure, Symbol, Tuple, Vocabulary};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolJson {
    pub name: String,
    pub arity: usize,
    pub mark: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub vocabulary: Vec<SymbolJson>,
    pub universe: Vec<Elem>,
    pub relations: BTreeMap<String, Vec<Tuple>>,
}

impl StructureJson {
    pub fn from_structure(s: &FinStructure) -> Self {
        StructureJson {
            vocabulary: s
                .realized_symbols()
                .map(|sym| SymbolJson {
                    name: sym.name().to_string(),
                    arity: sym.arity(),
                    mark: sym.mark().to_string(),
                })
                .collect(),
            universe: s.universe().iter().copied().collect(),
            relations: s
                .realized_symbols()
                .map(|sym| (sym.name().to_string(), s.relation(sym).cloned().collect()))
                .collect(),
        }
    }

    pub fn to_structure(&self) -> Result<FinStructure> {
        let mut symbols = Vec::new();
        for entry in &self.vocabulary {
            if entry.arity == 0 {
                return Err(Error::Parse(format!("symbol {} has arity 0", entry.name)));
            }
            symbols.push(Symbol::new(entry.name.as_str(), entry.arity, Notation::parse(&entry.mark)?));
        }
        let by_name: BTreeMap<&str, &Symbol> = symbols.iter().map(|s| (s.name(), s)).collect();
        if by_name.len() != symbols.len() {
            return Err(Error::Parse("duplicate symbol in vocabulary".into()));
        }
        let mut out = FinStructure::with_universe(Vocabulary::finite("json", symbols.clone()), self.universe.iter().copied());
        for (name, tuples) in &self.relations {
            let sym = by_name
                .get(name.as_str())
                .ok_or_else(|| Error::Parse(format!("relation {name} not in vocabulary")))?;
            for t in tuples {
                out.add_fact(sym, t.clone())?;
            }
        }
        Ok(out)
    }
}

pub fn encode(s: &FinStructure) -> String {
    serde_json::to_string_pretty(&StructureJson::from_structure(s)).expect("serializable")
}

pub fn decode(text: &str) -> Result<FinStructure> {
    let parsed: StructureJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    parsed.to_structure()
}

pub fn decode_into(text: &str, vocab: Arc<Vocabulary>) -> Result<FinStructure> {
    decode(text)?.reinterpret(vocab)
}

/// DOT digraph: binary relations become labelled edges, unary facts become
/// node labels. Higher arities are listed in a comment.
pub fn to_dot(s: &FinStructure, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", name.replace('"', "'"));
    let mut labels: BTreeMap<Elem, Vec<&str>> = s.universe().iter().map(|&e| (e, Vec::new())).collect();
    for (sym, t) in s.facts() {
        if sym.arity() == 1 {
            labels.entry(t[0]).or_default().push(sym.name());
        }
    }
    for (e, ls) in &labels {
        if ls.is_empty() {
            let _ = writeln!(out, "  {e};");
        } else {
            let _ = writeln!(out, "  {e} [label=\"{e}: {}\"];", ls.join(", ").replace('"', "'"));
        }
    }
    for (sym, t) in s.facts() {
        match sym.arity() {
            1 => {}
            2 => {
                let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", t[0], t[1], sym.name().replace('"', "'"));
            }
            _ => {
                let args: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                let _ = writeln!(out, "  // {}({})", sym.name(), args.join(","));
            }
        }
    }
    out.push_str("}\n");
    out
}
