use super::*;
use crate::structure::{enumerate_embeddings, tests::all_injections};

fn oracle_agrees(age: &dyn Age, max_index: u64, max_size: usize) {
    for i in 0..=max_index {
        let mi = age.member(&idx(i));
        if mi.len() > max_size {
            continue;
        }
        let dom: Vec<Elem> = mi.universe().iter().copied().collect();
        for j in 0..=max_index {
            let mj = age.member(&idx(j));
            let range: Vec<Elem> = mj.universe().iter().copied().collect();
            let expected = enumerate_embeddings(&mi, &mj).unwrap();
            for f in all_injections(&dom, &range) {
                assert_eq!(
                    age.decide_embedding(&idx(i), &idx(j), &f),
                    expected.contains(&f),
                    "{} {i} {j} {f}",
                    age.tag()
                );
            }
        }
    }
}

#[test]
fn linorder_members_and_embeddings() {
    let lo = LinearOrders::new();
    assert!(lo.member(&idx(0)).is_empty());
    let two = lo.member(&idx(2));
    assert_eq!(two.len(), 2);
    assert!(two.holds(lo.order_symbol(), &[0, 1]));
    let f = PartialMap::parse("0:0,1:2").unwrap();
    assert!(lo.decide_embedding(&idx(2), &idx(3), &f));
    assert!(!lo.decide_embedding(&idx(2), &idx(3), &PartialMap::parse("0:1,1:0").unwrap()));
    assert!(lo.decide_embedding(&idx(0), &idx(0), &PartialMap::new()));
    oracle_agrees(&lo, 6, 4);
}

#[test]
fn graph_decider_matches_oracle() {
    oracle_agrees(&FiniteGraphs::new(), 30, 4);
}

#[test]
fn jep_over_empty_base() {
    let lo = LinearOrders::new();
    let e = PartialMap::new();
    let cert = search_amalgam(&lo, &idx(1), &idx(1), &idx(0), &e, &e, 10).unwrap();
    assert_eq!(cert.d.len(), 2);
    assert_ne!(cert.f_prime.get(0), cert.g_prime.get(0));
}

#[test]
fn linorder_amalgam_over_point() {
    // A = {a < c}, B = {c < b}, C = {c}
    let lo = LinearOrders::new();
    let f = PartialMap::parse("0:1").unwrap();
    let g = PartialMap::parse("0:0").unwrap();
    let cert = search_amalgam(&lo, &idx(2), &idx(2), &idx(1), &f, &g, 10).unwrap();
    assert_eq!(cert.d_index, idx(3));
    let lt = lo.order_symbol();
    let (a, c, b) = (cert.f_prime.get(0).unwrap(), cert.f_prime.get(1).unwrap(), cert.g_prime.get(1).unwrap());
    assert!(cert.d.holds(lt, &[a, c]) && cert.d.holds(lt, &[c, b]));
    assert_eq!(cert.g_prime.get(0), Some(c));
}

#[test]
fn brute_force_matches_hint_on_small_orders() {
    // the broken wrapper has no hint, so its search is purely brute force
    let lo = LinearOrders::new();
    let skip = SkipMember::new(Arc::new(LinearOrders::new()), idx(50));
    let f = PartialMap::parse("0:1").unwrap();
    let g = PartialMap::parse("0:0").unwrap();
    let hinted = search_amalgam(&lo, &idx(2), &idx(2), &idx(1), &f, &g, 10).unwrap();
    let brute = search_amalgam(&skip, &idx(2), &idx(2), &idx(1), &f, &g, 10).unwrap();
    assert_eq!(hinted.d_index, brute.d_index);
    let again = search_amalgam(&skip, &idx(2), &idx(2), &idx(1), &f, &g, 10).unwrap();
    assert_eq!(brute.f_prime, again.f_prime);
    assert_eq!(brute.g_prime, again.g_prime);
}

#[test]
fn identity_amalgam() {
    let lo = LinearOrders::new();
    let id = PartialMap::identity(0..3);
    let cert = search_amalgam(&lo, &idx(3), &idx(3), &idx(3), &id, &id, 10).unwrap();
    assert_eq!(cert.d_index, idx(3));
    assert_eq!(cert.f_prime, id);
}

#[test]
fn precondition_and_budget() {
    let lo = LinearOrders::new();
    let bad = PartialMap::parse("0:1,1:0").unwrap();
    let id = PartialMap::identity(0..2);
    assert!(matches!(
        search_amalgam(&lo, &idx(2), &idx(2), &idx(2), &bad, &id, 10),
        Err(Error::PreconditionFailed(_))
    ));
    let skip = SkipMember::new(Arc::new(LinearOrders::new()), idx(50));
    let (f, g) = (PartialMap::parse("0:0").unwrap(), PartialMap::parse("0:1").unwrap());
    assert_eq!(
        search_amalgam(&skip, &idx(2), &idx(2), &idx(1), &f, &g, 2).unwrap_err(),
        Error::BudgetExhausted { budget: 2 }
    );
}

#[test]
fn axioms_hold_for_linorders_and_graphs() {
    let report = check_age_axioms(&LinearOrders::new(), &AxiomCheck::new(3, 50));
    assert!(report.is_clean(), "{:?}", report.counterexamples);
    assert!(report.certificates_validated > 0);
    let report = check_age_axioms(&FiniteGraphs::new(), &AxiomCheck::new(3, 11));
    assert!(report.is_clean(), "{:?}", report.counterexamples);
}

#[test]
fn broken_age_fails_hp() {
    let broken = SkipMember::broken_linorders();
    let report = check_age_axioms(&broken, &AxiomCheck::new(3, 10));
    assert!(report
        .counterexamples
        .iter()
        .any(|c| matches!(c, Counterexample::Hp { subset, .. } if subset.len() == 1)));
    let lines = report.json_lines(broken.tag());
    assert!(lines.last().unwrap().contains("\"counterexamples\""));
}
