use super::*;
use crate::structure::is_isomorphic;
use crate::structure::tests::{chain, order_vocab};

fn uv_vocab() -> (Arc<Vocabulary>, Symbol, Symbol) {
    let u = Symbol::new("U", 1, Notation::One);
    let r = Symbol::new("R", 2, Notation::One);
    (Vocabulary::finite("uv", vec![u.clone(), r.clone()]), u, r)
}

/// Every structure on `0..n` for one unary and one binary symbol.
fn all_structures(n: u64) -> Vec<FinStructure> {
    let (v, u, r) = uv_vocab();
    let pairs: Vec<(u64, u64)> = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect();
    let bits = n as usize + pairs.len();
    (0u64..1 << bits)
        .map(|mask| {
            let mut s = FinStructure::with_universe(v.clone(), 0..n);
            for x in 0..n {
                if mask >> x & 1 == 1 {
                    s.add_fact(&u, vec![x]).unwrap();
                }
            }
            for (k, &(x, y)) in pairs.iter().enumerate() {
                if mask >> (n as usize + k) & 1 == 1 {
                    s.add_fact(&r, vec![x, y]).unwrap();
                }
            }
            s
        })
        .collect()
}

/// Exhaustive search over every interpretation meeting the type (1)
/// sentences; the others are then checked directly.
fn brute_force_expands(schema: &ExpansionSchema, b: &FinStructure) -> bool {
    let elems: Vec<Elem> = b.universe().iter().copied().collect();
    let tuples = schema.tuples();
    let options: Vec<Vec<Tuple>> = tuples
        .iter()
        .map(|t| {
            let ty = atomic_type(&schema.base, t);
            tuples_upto(&elems, t.len())
                .into_iter()
                .filter(|c| c.len() == t.len() && atomic_type(b, c) == ty)
                .collect()
        })
        .collect();
    let total: usize = options.iter().map(Vec::len).sum();
    assert!(total <= 20, "oracle too large: {total}");
    (0u64..1 << total).any(|mask| {
        let mut exp = Expansion::new();
        let mut bit = 0;
        for (t, opts) in tuples.iter().zip(&options) {
            for c in opts {
                if mask >> bit & 1 == 1 {
                    exp.entry(t.clone()).or_default().insert(c.clone());
                }
                bit += 1;
            }
        }
        failing_sentence(schema, b, &exp).is_none()
    })
}

#[test]
fn matches_exhaustive_search_on_tiny_structures() {
    let ones = all_structures(1);
    let twos = all_structures(2);
    let mut agreements = 0;
    for a in &ones {
        let schema = build_schema(a, None).unwrap();
        for b in ones.iter().chain(&twos) {
            let v = check_expansion(&schema, b).unwrap();
            assert_eq!(v.expandable, brute_force_expands(&schema, b));
            agreements += 1;
        }
    }
    // an explicit bound of one leaves larger candidates expandable
    for a in twos.iter().step_by(7) {
        let schema = build_schema(a, Some(1)).unwrap();
        for b in ones.iter().chain(twos.iter().step_by(3)) {
            let v = check_expansion(&schema, b).unwrap();
            assert_eq!(v.expandable, brute_force_expands(&schema, b));
            agreements += 1;
        }
    }
    assert!(agreements > 50);
}

#[test]
fn expandable_exactly_for_isomorphic_copies() {
    let small: Vec<FinStructure> = all_structures(1).into_iter().chain(all_structures(2)).collect();
    let three: Vec<FinStructure> = all_structures(3).into_iter().step_by(17).collect();
    for a in &small {
        let schema = build_schema(a, None).unwrap();
        for b in small.iter().chain(&three) {
            let v = check_expansion(&schema, b).unwrap();
            assert_eq!(v.expandable, is_isomorphic(a, b).unwrap());
            if let Some(w) = &v.witness {
                assert!(back_and_forth_check(&schema, b, w).holds);
            } else {
                assert!(v.failing.is_some());
            }
        }
    }
}

#[test]
fn singleton_schema() {
    let (v, u, _) = uv_vocab();
    let mut a = FinStructure::with_universe(v, [0]);
    a.add_fact(&u, vec![0]).unwrap();
    let schema = build_schema(&a, None).unwrap();
    assert_eq!(schema.bound, 2);
    assert_eq!(schema.predicate(&[0]).unwrap().arity(), 1);
    assert_eq!(schema.predicate(&[0, 0]).unwrap().arity(), 2);
    assert!(schema.tau_star.lookup("U").is_some());
    let type2: Vec<&Sentence> = schema.sentences.iter().filter(|s| matches!(s, Sentence::Type2 { .. })).collect();
    assert_eq!(type2.len(), 1);
    assert_eq!(type2[0].to_string(), "(forall y (P[0](y))) & exists y P[0](y)");
    assert!(schema.sentences.iter().all(|s| matches!(s.quantifier_shape(), Shape::Pi1 | Shape::Pi2)));
    let v = check_expansion(&schema, &a).unwrap();
    let w = v.witness.unwrap();
    assert_eq!(w[&vec![0]], BTreeSet::from([vec![0]]));
}

#[test]
fn chain_examples() {
    let (v, lt) = order_vocab();
    let two = chain(&v, &lt, &[0, 1]);
    let schema = build_schema(&two, None).unwrap();
    let type3 = schema
        .sentences
        .iter()
        .find(|s| matches!(s, Sentence::Type3 { tuple, .. } if tuple == &vec![0]))
        .unwrap();
    assert!(type3.to_string().contains("exists y P[0,1](x0,y)"));
    // diagonal expansion on A itself
    let v2 = check_expansion(&schema, &two).unwrap();
    let w = v2.witness.unwrap();
    for (t, cs) in &w {
        assert_eq!(cs, &BTreeSet::from([t.clone()]));
    }
    assert!(back_and_forth_check(&schema, &two, &w).holds);
    let three = chain(&v, &lt, &[0, 1, 2]);
    let v3 = check_expansion(&schema, &three).unwrap();
    assert!(!v3.expandable && v3.failing.is_some());
    let moved = chain(&v, &lt, &[7, 3]);
    let vm = check_expansion(&schema, &moved).unwrap();
    assert!(vm.expandable);
    assert!(back_and_forth_check(&schema, &moved, &vm.witness.unwrap()).holds);
}

#[test]
fn emptied_predicates_fail_a_sentence() {
    let (v, lt) = order_vocab();
    let two = chain(&v, &lt, &[0, 1]);
    let schema = build_schema(&two, None).unwrap();
    let mut w = check_expansion(&schema, &two).unwrap().witness.unwrap();
    w.remove(&vec![1]);
    let r = back_and_forth_check(&schema, &two, &w);
    assert!(!r.holds);
    assert!(r.failure.unwrap().contains("1 lies in no P[b]"));
    assert!(back_and_forth_check(&schema, &two, &Expansion::new()).failure.is_some());
}

#[test]
fn preconditions() {
    let (v, lt) = order_vocab();
    let six = chain(&v, &lt, &[0, 1, 2, 3, 4, 5]);
    assert!(matches!(build_schema(&six, None), Err(Error::BoundExceeded { .. })));
    assert!(matches!(
        build_schema(&FinStructure::empty(v.clone()), None),
        Err(Error::PreconditionFailed(_))
    ));
    let schema = build_schema(&chain(&v, &lt, &[0]), None).unwrap();
    let seven = chain(&v, &lt, &[0, 1, 2, 3, 4, 5, 6]);
    assert!(matches!(check_expansion(&schema, &seven), Err(Error::BoundExceeded { .. })));
    let (other, _, _) = uv_vocab();
    let foreign = FinStructure::with_universe(other, [0]);
    assert!(matches!(check_expansion(&schema, &foreign), Err(Error::VocabularyMismatch { .. })));
}

#[test]
fn five_point_base_is_tractable() {
    let (v, lt) = order_vocab();
    let five = chain(&v, &lt, &[0, 1, 2, 3, 4]);
    let schema = build_schema(&five, None).unwrap();
    let six = chain(&v, &lt, &[0, 1, 2, 3, 4, 5]);
    assert!(!check_expansion(&schema, &six).unwrap().expandable);
    let copy = chain(&v, &lt, &[10, 20, 30, 40, 50]);
    let verdict = check_expansion(&schema, &copy).unwrap();
    assert!(back_and_forth_check(&schema, &copy, &verdict.witness.unwrap()).holds);
}
