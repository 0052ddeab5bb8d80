//! Property tests for the stated invariants, on randomly generated inputs.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use fraisse::age::{search_amalgam, Age, AmalgamQuery, FiniteGraphs, LinearOrders};
use fraisse::catalog::builder_by_tag;
use fraisse::coding::idx;
use fraisse::diagonal::{self, EnumerationTrace, TraceEvent};
use fraisse::game::ef_equivalent;
use fraisse::notation::{compare_o, fundamental_element, successor, Notation, OCompare};
use fraisse::scott::{back_and_forth_check, build_schema, check_expansion, Shape};
use fraisse::serial::{decode_into, encode};
use fraisse::structure::{
    enumerate_embeddings, is_embedding, is_isomorphic, Elem, FinStructure, PartialMap, Symbol, Vocabulary,
};
use proptest::prelude::*;

use common::{elems, injections};

fn vocab() -> (Arc<Vocabulary>, Symbol, Symbol) {
    let u = Symbol::new("U", 1, Notation::One);
    let r = Symbol::new("R", 2, Notation::One);
    (Vocabulary::finite("ur", vec![u.clone(), r.clone()]), u, r)
}

/// A structure on `0..n` with `U` and `R` read off the bits of `mask`.
fn structure(n: u64, mask: u64) -> FinStructure {
    let (v, u, r) = vocab();
    let mut s = FinStructure::with_universe(v, 0..n);
    for x in 0..n {
        if mask >> x & 1 == 1 {
            s.add_fact(&u, vec![x]).unwrap();
        }
        for y in 0..n {
            if mask >> (n + x * n + y) & 1 == 1 {
                s.add_fact(&r, vec![x, y]).unwrap();
            }
        }
    }
    s
}

fn small(max: u64) -> impl Strategy<Value = FinStructure> {
    (1..=max, any::<u64>()).prop_map(|(n, mask)| structure(n, mask))
}

fn shipped_notation() -> impl Strategy<Value = Notation> {
    prop_oneof![
        (0u64..6).prop_map(Notation::finite),
        (0u64..3).prop_map(|k| {
            let mut a = Notation::limit("omega");
            for _ in 0..k {
                a = successor(&a);
            }
            a
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embeddings_compose(a in small(3), b in small(3), c in small(4)) {
        for f in enumerate_embeddings(&a, &b).unwrap() {
            for g in enumerate_embeddings(&b, &c).unwrap() {
                prop_assert!(is_embedding(&g.compose(&f), &a, &c).unwrap());
            }
        }
    }

    #[test]
    fn enumeration_matches_filtered_injections(a in small(3), b in small(4)) {
        let all: Vec<PartialMap> = injections(&elems(&a), &elems(&b))
            .into_iter()
            .filter(|f| is_embedding(f, &a, &b).unwrap())
            .collect();
        let mut found = enumerate_embeddings(&a, &b).unwrap();
        found.sort_by_key(|f| f.iter().collect::<Vec<_>>());
        let mut want = all;
        want.sort_by_key(|f| f.iter().collect::<Vec<_>>());
        prop_assert_eq!(found, want);
    }

    #[test]
    fn substructure_is_idempotent_and_monotone(a in small(5), s_mask in any::<u8>(), t_mask in any::<u8>()) {
        let s: BTreeSet<Elem> = a.universe().iter().copied().filter(|&x| s_mask >> x & 1 == 1).collect();
        let t: BTreeSet<Elem> = s.iter().copied().filter(|&x| t_mask >> x & 1 == 1).collect();
        let sa = a.substructure(&s).unwrap();
        prop_assert_eq!(sa.substructure(&s).unwrap(), sa.clone());
        prop_assert_eq!(sa.substructure(&t).unwrap(), a.substructure(&t).unwrap());
    }

    #[test]
    fn json_round_trip(a in small(5)) {
        prop_assert_eq!(decode_into(&encode(&a), a.vocabulary().clone()).unwrap(), a);
    }

    #[test]
    fn games_are_symmetric(a in small(3), b in small(3), rounds in 0usize..4) {
        prop_assert_eq!(ef_equivalent(&a, &b, rounds).unwrap(), ef_equivalent(&b, &a, rounds).unwrap());
    }

    #[test]
    fn expansions_decide_isomorphism(a in small(3), b in small(4)) {
        let schema = build_schema(&a, None).unwrap();
        let verdict = check_expansion(&schema, &b).unwrap();
        prop_assert_eq!(verdict.expandable, is_isomorphic(&a, &b).unwrap());
        if verdict.expandable {
            let w = verdict.witness.expect("expandable verdicts carry a witness");
            let report = back_and_forth_check(&schema, &b, &w);
            prop_assert!(report.holds, "{:?}", report.failure);
        }
    }

    #[test]
    fn sentences_are_at_most_pi2(a in small(3)) {
        let schema = build_schema(&a, None).unwrap();
        prop_assert!(schema.sentences.iter().all(|s| matches!(s.quantifier_shape(), Shape::Pi1 | Shape::Pi2)));
        for t in schema.tuples() {
            prop_assert_eq!(schema.predicate(&t).unwrap().arity(), t.len());
        }
    }

    #[test]
    fn order_on_notations_is_strict(a in shipped_notation(), b in shipped_notation(), c in shipped_notation()) {
        let ab = compare_o(&a, &b).unwrap();
        let ba = compare_o(&b, &a).unwrap();
        let flip = |o: OCompare| match o {
            OCompare::Less => OCompare::Greater,
            OCompare::Greater => OCompare::Less,
            other => other,
        };
        prop_assert_eq!(ab, flip(ba));
        prop_assert_eq!(compare_o(&a, &a).unwrap(), OCompare::Equal);
        if ab == OCompare::Less && compare_o(&b, &c).unwrap() == OCompare::Less {
            prop_assert_eq!(compare_o(&a, &c).unwrap(), OCompare::Less);
        }
        if let (Some(x), Some(y)) = (a.ordinal_value(), successor(&a).ordinal_value()) {
            prop_assert_eq!(x.succ(), y);
        }
    }

    #[test]
    fn fundamental_sequences_increase(n in 0u64..20) {
        let lim = Notation::limit("omega");
        let (x, y) = (fundamental_element(&lim, n).unwrap(), fundamental_element(&lim, n + 1).unwrap());
        prop_assert_eq!(compare_o(&x, &y).unwrap(), OCompare::Less);
    }

    #[test]
    fn diagonal_runs_always_verify(
        stages in 0u64..30,
        requirements in 0u64..6,
        raw in proptest::collection::vec((0u64..6, 1u64..8, any::<bool>(), 0u64..12, 0u64..12, any::<bool>()), 0..20),
    ) {
        let mut last = std::collections::BTreeMap::new();
        let mut events = Vec::new();
        for (e, gap, designated, i, j, id) in raw {
            let stage = last.get(&e).map_or(gap - 1, |s| s + gap);
            last.insert(e, stage);
            let (i, j) = if designated { (2 * e, 2 * e + 1) } else { (i, j) };
            let map = if id { PartialMap::identity([0, 1]) } else { PartialMap::parse("0:1,1:0").unwrap() };
            events.push(TraceEvent { stage, e, i, j, map });
        }
        let trace = EnumerationTrace::new(events).unwrap();
        let report = diagonal::run(&trace, requirements, stages);
        prop_assert!(diagonal::verify(&report));
        for k in 0..2 * requirements + 8 {
            prop_assert!(diagonal::in_age(&report.structure(k)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn amalgam_certificates_validate(i in 0u64..16, j in 0u64..16, k in 0u64..8, graphs in any::<bool>()) {
        let age: Arc<dyn Age> = if graphs { Arc::new(FiniteGraphs::new()) } else { Arc::new(LinearOrders::new()) };
        let (a, b, c) = (age.member(&idx(i)), age.member(&idx(j)), age.member(&idx(k)));
        prop_assume!(a.len() <= 4 && b.len() <= 4 && c.len() <= 3);
        let (Some(f), Some(g)) = (
            enumerate_embeddings(&c, &a).unwrap().into_iter().next(),
            enumerate_embeddings(&c, &b).unwrap().into_iter().next(),
        ) else {
            return Ok(());
        };
        let cert = search_amalgam(age.as_ref(), &idx(i), &idx(j), &idx(k), &f, &g, 4096).unwrap();
        let q = AmalgamQuery { a: &a, b: &b, c: &c, f: &f, g: &g };
        prop_assert!(cert.as_amalgam().verify(age.as_ref(), &q).is_ok());
        let again = search_amalgam(age.as_ref(), &idx(i), &idx(j), &idx(k), &f, &g, 4096).unwrap();
        prop_assert_eq!(again.d_index, cert.d_index);
        prop_assert_eq!(again.f_prime, cert.f_prime);
    }

    #[test]
    fn builder_stages_form_a_chain(schedule in any::<u64>(), graphs in any::<bool>()) {
        let tag = if graphs { "graphs" } else { "linorders" };
        let mut b = builder_by_tag(tag, schedule).unwrap();
        b.grow(30).unwrap();
        let age = b.age().clone();
        for s in 0..b.stages().len() {
            let st = b.stage(s).unwrap();
            let rec = &b.stages()[s];
            let m = age.member(&rec.witness_index);
            prop_assert!(is_embedding(&rec.witness_map, &m, &st).unwrap());
            prop_assert_eq!(rec.witness_map.len(), st.len());
            if s + 1 < b.stages().len() {
                let next = b.stage(s + 1).unwrap();
                prop_assert_eq!(next.substructure(st.universe()).unwrap(), st);
            }
        }
    }
}
