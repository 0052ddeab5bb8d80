use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn event(stage: u64, e: u64, map: &str) -> TraceEvent {
    TraceEvent {
        stage,
        e,
        i: 2 * e,
        j: 2 * e + 1,
        map: PartialMap::parse(map).unwrap(),
    }
}

#[test]
fn empty_trace_leaves_the_identity_an_embedding() {
    let r = run(&EnumerationTrace::default(), 1, 10);
    let rec = &r.requirements[0];
    assert!(rec.id_embeds && !rec.triple_in_trace);
    assert!(r.structure(0).facts().all(|(_, t)| t[0] == 1));
    assert!(verify(&r));
}

#[test]
fn firing_colours_the_left_point() {
    let trace = EnumerationTrace::new(vec![event(5, 0, "0:0,1:1")]).unwrap();
    let r = run(&trace, 1, 10);
    let rec = &r.requirements[0];
    assert_eq!(rec.fired_at, Some(5));
    // colours 0..=4 were ruled out for point 0 in stages 0..5
    assert_eq!(rec.colour, Some(5));
    assert!(r.structure(0).holds(&colour(5), &[0]));
    assert!(!r.structure(1).facts().any(|(_, t)| t[0] == 0));
    assert!(!rec.id_embeds && rec.triple_in_trace);
    assert!(verify(&r));
}

#[test]
fn two_requirements_go_opposite_ways() {
    let trace = EnumerationTrace::new(vec![event(3, 1, "0:0,1:1"), event(4, 0, "0:1,1:0")]).unwrap();
    let r = run(&trace, 2, 8);
    let (a, b) = (&r.requirements[0], &r.requirements[1]);
    assert!(a.id_embeds && !a.triple_in_trace);
    assert!(!b.id_embeds && b.triple_in_trace);
    assert!(verify(&r));
}

#[test]
fn sabotage_is_caught() {
    let trace = EnumerationTrace::new(vec![event(2, 0, "0:0,1:1")]).unwrap();
    let mut r = run(&trace, 1, 6);
    let plain = run(&EnumerationTrace::default(), 1, 6);
    r.structures = plain.structures.clone();
    assert!(!verify(&r));
    assert!(verify(&run(&trace, 0, 6)));
}

#[test]
fn traces_must_increase_per_requirement() {
    assert!(EnumerationTrace::new(vec![event(3, 0, ""), event(3, 0, "0:0")]).is_err());
    assert!(EnumerationTrace::new(vec![event(3, 0, ""), event(3, 1, "0:0")]).is_ok());
    let parsed: Result<EnumerationTrace, _> =
        serde_json::from_str(r#"[{"stage":2,"e":0,"i":0,"j":1,"map":"0:0"},{"stage":1,"e":0,"i":0,"j":1,"map":""}]"#);
    assert!(parsed.is_err());
}

#[test]
fn random_traces_are_diagonalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let reqs = rng.gen_range(0..6);
        let stages = rng.gen_range(0..20);
        let mut events = Vec::new();
        for e in 0..reqs {
            let mut s = 0;
            while rng.gen_bool(0.5) {
                s += rng.gen_range(1..6);
                let map = if rng.gen_bool(0.6) { "0:0,1:1" } else { "0:1,1:0" };
                let mut ev = event(s, e, map);
                if rng.gen_bool(0.2) {
                    ev.j += 2;
                }
                events.push(ev);
            }
        }
        let r = run(&EnumerationTrace::new(events).unwrap(), reqs, stages);
        assert!(verify(&r));
        for k in 0..(2 * reqs + 10) {
            assert!(in_age(&r.structure(k)));
        }
    }
}

#[test]
fn canonical_listing_covers_small_types() {
    let v = vocabulary();
    let mut seen = BTreeSet::new();
    for t in 0..400 {
        let s = canonical(t, v.clone());
        assert!(in_age(&s));
        let colours: Vec<String> = s.facts().map(|(c, _)| c.name().to_string()).collect();
        seen.insert((colours, s.len()));
    }
    for want in [(vec![], 0), (vec![], 2), (vec!["U0".to_string()], 1), (vec!["U1".to_string(), "U3".to_string()], 3)] {
        assert!(seen.contains(&want), "{want:?}");
    }
    assert_eq!(v.lookup("U12").unwrap().arity(), 1);
    assert!(v.lookup("U012").is_none());
}
