#![allow(dead_code)]

use std::collections::BTreeSet;

use fraisse::structure::{Elem, FinStructure, PartialMap, Symbol};

/// Every injective total map from `a` into `b`.
pub fn injections(a: &[Elem], b: &[Elem]) -> Vec<PartialMap> {
    fn go(a: &[Elem], b: &[Elem], cur: &mut Vec<(Elem, Elem)>, out: &mut Vec<PartialMap>) {
        if cur.len() == a.len() {
            out.push(cur.iter().copied().collect());
            return;
        }
        let x = a[cur.len()];
        for &y in b {
            if cur.iter().all(|&(_, t)| t != y) {
                cur.push((x, y));
                go(a, b, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(a, b, &mut Vec::new(), &mut out);
    out
}

/// Every injective partial map with domain and range inside `elems` and at
/// most `k` pairs.
pub fn partial_maps(elems: &[Elem], k: usize) -> Vec<PartialMap> {
    let mut out = Vec::new();
    fn subsets(elems: &[Elem], k: usize, start: usize, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        out.push(cur.clone());
        if cur.len() == k {
            return;
        }
        for i in start..elems.len() {
            cur.push(elems[i]);
            subsets(elems, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut doms = Vec::new();
    subsets(elems, k, 0, &mut Vec::new(), &mut doms);
    for d in doms {
        out.extend(injections(&d, elems));
    }
    out
}

pub fn elems(s: &FinStructure) -> Vec<Elem> {
    s.universe().iter().copied().collect()
}

/// Points of `s` in the unary relation `u`.
pub fn points(s: &FinStructure, u: &Symbol) -> BTreeSet<Elem> {
    s.relation(u).map(|t| t[0]).collect()
}

pub fn symbol(s: &FinStructure, name: &str) -> Symbol {
    s.vocabulary().lookup(name).unwrap_or_else(|| panic!("no symbol {name}"))
}
