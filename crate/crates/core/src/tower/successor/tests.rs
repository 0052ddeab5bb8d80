use num_bigint::BigInt;
use num_rational::BigRational;

use super::*;
use crate::age::{check_age_axioms, AxiomCheck};
use crate::coding::idx;
use crate::structure::tests::all_injections;
use crate::tower::BaseAge;

fn kb() -> SuccessorAge {
    SuccessorAge::new(Arc::new(BaseAge::new()))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `M` holds the given rationals as elements `0..`; vertices and `U_b`
/// points follow.
fn structure(k: &SuccessorAge, rs: &[BigRational], nv: usize, nu: usize, p: &[(Elem, Elem)], f: &[(Elem, Elem, Elem)]) -> FinStructure {
    let base = BaseAge::new();
    let m = base.member(&base.index_of(rs));
    let n = rs.len() as Elem;
    let vs: Vec<Elem> = (n..n + nv as Elem).collect();
    let ub: Vec<Elem> = (n + nv as Elem..n + (nv + nu) as Elem).collect();
    let p = p.iter().copied().collect();
    let f = f.iter().map(|&(x, y, c)| (edge(x, y), c)).collect();
    k.assemble(&m, &vs, &ub, &p, &f)
}

#[test]
fn vocabulary_extends_the_lower_one() {
    let k = kb();
    let vocab = k.vocabulary();
    for name in ["V@s(1)", "M@s(1)", "U@s(1)", "P@s(1)", "F@s(1)", "<@s(1)", "U@1", "<@1", "Q[1/2]@1"] {
        assert!(vocab.lookup(name).is_some(), "{name}");
    }
    assert_eq!(vocab.lookup("F@s(1)").unwrap().arity(), 3);
    assert_eq!(*vocab.lookup("P@s(1)").unwrap().mark(), Notation::finite(1));
}

#[test]
fn triangle_law_cases() {
    // two least equal, third above
    assert!(triangle_law(0, 1, 0));
    assert!(!triangle_law(0, 1, 1));
    assert!(!triangle_law(0, 0, 0));
    assert!(!triangle_law(0, 1, 2));
}

#[test]
fn validator_examples() {
    let k = kb();
    let empty = FinStructure::empty(k.vocabulary().clone());
    assert!(k.validate(&empty).is_ok());
    // colours 0 < 1 are u0 < u1; vertices 2, 3, 4
    let rs = [q(0, 1), q(1, 1)];
    let good = structure(&k, &rs, 3, 0, &[], &[(2, 3, 0), (2, 4, 1), (3, 4, 0)]);
    assert!(k.validate(&good).is_ok());
    let bad = structure(&k, &rs, 3, 0, &[], &[(2, 3, 0), (2, 4, 1), (3, 4, 1)]);
    assert!(k.validate(&bad).unwrap_err().contains("law"));
    let flat = structure(&k, &rs, 3, 0, &[], &[(2, 3, 0), (2, 4, 0), (3, 4, 0)]);
    assert!(k.validate(&flat).is_err());
    let partial = structure(&k, &rs, 3, 0, &[], &[(2, 3, 0), (2, 4, 1)]);
    assert!(k.validate(&partial).is_ok());
}

#[test]
fn validator_rejects_broken_parts() {
    let k = kb();
    let rs = [q(0, 1)];
    let mut s = structure(&k, &rs, 2, 1, &[(1, 3)], &[(1, 2, 0)]);
    assert!(k.validate(&s).is_ok());
    let mut twice = s.clone();
    twice.add_fact(&k.v, vec![0]).unwrap();
    assert!(k.validate(&twice).is_err());
    let mut second_p = s.clone();
    second_p.add_element(4);
    second_p.add_fact(&k.u, vec![4]).unwrap();
    second_p.add_fact(&k.lt, vec![3, 4]).unwrap();
    assert!(k.validate(&second_p).is_ok());
    second_p.add_fact(&k.p, vec![1, 4]).unwrap();
    assert!(k.validate(&second_p).unwrap_err().contains("two P"));
    s.remove_fact(&k.f, &[2, 1, 0]);
    assert!(k.validate(&s).unwrap_err().contains("symmetric"));
    let lower_outside = {
        let mut t = structure(&k, &rs, 1, 0, &[], &[]);
        t.add_fact(&BaseAge::new().colour_symbol(&q(3, 1)), vec![1]).unwrap();
        t
    };
    assert!(k.validate(&lower_outside).unwrap_err().contains("outside M"));
}

#[test]
fn members_validate_and_locate() {
    let k = kb();
    for i in 0..400u64 {
        let m = k.member(&idx(i));
        assert!(k.validate(&m).is_ok(), "member {i}");
        let (j, iso) = k.locate(&m).unwrap();
        assert!(k.decide_embedding(&j, &idx(i), &iso), "member {i} located at {j}");
        assert_eq!(k.member(&j).len(), m.len());
        // a located index is canonical
        assert_eq!(k.locate(&k.member(&j)).unwrap().0, j);
    }
}

#[test]
fn coded_examples() {
    let k = kb();
    let l = k.layout(&k.member(&idx(152))).unwrap();
    assert_eq!((l.v.len(), l.ub.len(), l.p.len()), (1, 1, 1));
    let l = k.layout(&k.member(&idx(89))).unwrap();
    assert_eq!((l.v.len(), l.colours.len(), l.f.len()), (2, 1, 1));
}

#[test]
fn dropped_digits_keep_members_lawful() {
    // V = 3 vertices, one colour: every full colouring breaks the law, so
    // the third F digit is dropped.
    let k = kb();
    let i1 = BaseAge::new().index_of(&[q(0, 1)]);
    let sizes = pair(&idx(3), &idx(0));
    // digits: three P digits of radix 1, three F digits of radix 2, all 1
    let choices = idx(0b111);
    let i = pair(&i1, &pair(&sizes, &choices));
    let l = k.layout(&k.member(&i)).unwrap();
    assert_eq!(l.f.len(), 2);
}

#[test]
fn decider_matches_oracle() {
    let k = kb();
    let small: Vec<u64> = (0..=60u64).filter(|&i| k.member(&idx(i)).len() <= 4).collect();
    for &i in &small {
        for &j in &small {
            let (mi, mj) = (k.member(&idx(i)), k.member(&idx(j)));
            let dom: Vec<Elem> = mi.universe().iter().copied().collect();
            let range: Vec<Elem> = mj.universe().iter().copied().collect();
            for f in all_injections(&dom, &range) {
                let oracle = is_embedding(&f, &mi, &mj).unwrap();
                assert_eq!(k.decide_embedding(&idx(i), &idx(j), &f), oracle, "{i} -> {j} by {f}");
            }
        }
    }
}

#[test]
fn decider_on_shared_m_part() {
    let k = kb();
    let rs = [q(0, 1), q(1, 1)];
    let a = structure(&k, &rs, 2, 0, &[], &[(2, 3, 1)]);
    let b = structure(&k, &rs, 3, 0, &[], &[(2, 3, 0), (2, 4, 1), (3, 4, 0)]);
    let (ia, _) = k.locate(&a).unwrap();
    let (ib, _) = k.locate(&b).unwrap();
    let (ma, mb) = (k.member(&ia), k.member(&ib));
    let dom: Vec<Elem> = ma.universe().iter().copied().collect();
    let range: Vec<Elem> = mb.universe().iter().copied().collect();
    let mut hits = 0;
    for f in all_injections(&dom, &range) {
        let oracle = is_embedding(&f, &ma, &mb).unwrap();
        hits += oracle as usize;
        assert_eq!(k.decide_embedding(&ia, &ib, &f), oracle);
    }
    // the edge coloured 1 maps onto (2,4) in either direction
    assert_eq!(hits, 2);
}

#[test]
fn staged_amalgams_validate() {
    let k = kb();
    let pool: Vec<u64> = (0..=160u64).filter(|&i| (1..=3).contains(&k.member(&idx(i)).len())).collect();
    let mut checked = 0;
    for &ia in pool.iter().take(30) {
        for &ib in pool.iter().take(30) {
            let (a, b) = (k.member(&idx(ia)), k.member(&idx(ib)));
            // glue one point of A to one point of B when they look alike
            for &x in a.universe() {
                for &y in b.universe() {
                    let c = a.restrict_unchecked(&BTreeSet::from([x]));
                    let g = PartialMap::from_pairs([(x, y)]).unwrap();
                    if !is_embedding(&g, &c, &b).unwrap() {
                        continue;
                    }
                    let f = PartialMap::identity([x]);
                    let query = AmalgamQuery { a: &a, b: &b, c: &c, f: &f, g: &g };
                    let am = k.amalgamate(&query).expect("one-point amalgams exist");
                    am.verify(&k, &query).unwrap();
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 50);
}

#[test]
fn cross_pairs_get_lawful_colours() {
    let k = kb();
    let rs = [q(0, 1), q(1, 1)];
    // A: vertices 2, 3 with F = 0; B: vertices 2, 3 with F(2,3) = 0 as well,
    // glued on vertex 2 and both colours
    let a = structure(&k, &rs, 2, 0, &[], &[(2, 3, 0)]);
    let b = a.clone();
    let shared: BTreeSet<Elem> = [0, 1, 2].into();
    let c = a.restrict_unchecked(&shared);
    let id = PartialMap::identity(shared.iter().copied());
    let query = AmalgamQuery { a: &a, b: &b, c: &c, f: &id, g: &id };
    let am = k.amalgamate(&query).unwrap();
    am.verify(&k, &query).unwrap();
    let l = k.layout(&am.d).unwrap();
    // the two copies of vertex 3 share colour 0 at the pivot, so their edge
    // gets a strictly larger colour
    let x = am.f_prime.get(3).unwrap();
    let c = l.f.get(&edge(x, 3)).copied().unwrap();
    let rank = l.colour_rank();
    assert!(rank[&c] > rank[&0]);
}

#[test]
fn rigid_colours_block_some_amalgams() {
    // C = two vertices with their edge uncoloured. A colours it 0, B colours
    // it 1. An amalgam would need one point carrying both colours.
    let k = kb();
    let a = structure(&k, &[q(0, 1)], 2, 0, &[], &[(1, 2, 0)]);
    let b = structure(&k, &[q(1, 1)], 2, 0, &[], &[(1, 2, 0)]);
    let shared: BTreeSet<Elem> = [1, 2].into();
    let c = a.restrict_unchecked(&shared);
    let id = PartialMap::identity(shared.iter().copied());
    assert!(k.validate(&c).is_ok());
    let query = AmalgamQuery { a: &a, b: &b, c: &c, f: &id, g: &id };
    assert!(k.amalgamate(&query).is_none());
}

#[test]
fn lawful_sides_can_force_a_bad_triangle() {
    // C = {v0, v1, colour 0} with v0 v1 uncoloured. A colours v0 v1 with 0.
    // B adds a pivot z with F(z,v0) = 0 and F(z,v1) = 1. Then the triangle
    // (z, v0, v1) has colours 0, 1, 0: lawful. With F(z,v1) = 0 instead it
    // is 0, 0, 0, which breaks the law, so that amalgam does not exist.
    let k = kb();
    let rs = [q(0, 1), q(1, 1)];
    let a = structure(&k, &rs, 2, 0, &[], &[(2, 3, 0)]);
    let shared: BTreeSet<Elem> = [0, 1, 2, 3].into();
    let c = a.restrict_unchecked(&shared);
    let id = PartialMap::identity(shared.iter().copied());
    let fine = structure(&k, &rs, 3, 0, &[], &[(4, 2, 0), (4, 3, 1)]);
    let query = AmalgamQuery { a: &a, b: &fine, c: &c, f: &id, g: &id };
    assert!(k.amalgamate(&query).is_some());
    let blocked = structure(&k, &rs, 3, 0, &[], &[(4, 2, 0), (4, 3, 0)]);
    let query = AmalgamQuery { a: &a, b: &blocked, c: &c, f: &id, g: &id };
    assert!(k.amalgamate(&query).is_none());
}

#[test]
fn u_points_insert_between() {
    let k = kb();
    let s = structure(&k, &[], 0, 2, &[], &[]);
    let grown = k.insert_u_point(&s, Some(0), Some(1), 7).unwrap();
    let l = k.layout(&grown).unwrap();
    assert_eq!(l.ub, vec![0, 7, 1]);
    assert!(k.insert_u_point(&s, Some(1), Some(0), 7).is_none());
}

#[test]
fn axioms_hold_at_small_bounds() {
    let k = kb();
    let report = check_age_axioms(&k, &AxiomCheck::new(3, 30));
    assert!(report.is_clean(), "{:?}", report.counterexamples);
}
