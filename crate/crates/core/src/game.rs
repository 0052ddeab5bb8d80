//! Ehrenfeucht-Fraïssé games on finite structures, decided exhaustively.
//!
//! A position is the set of pairs picked so far. Spoiler picks a point on
//! either side; Duplicator answers on the other side and loses at once if
//! the pairs stop forming a partial isomorphism. Positions are memoized.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structure::{Elem, FinStructure, Incidence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, Serialize)]
pub struct GameReport {
    pub rounds: usize,
    pub duplicator_wins: bool,
    /// When Duplicator loses: Spoiler's winning moves, each followed by
    /// some legal reply while one exists.
    pub spoiler_line: Vec<(Side, Elem)>,
    pub positions: usize,
}

/// Picked pairs, sorted and duplicate-free.
pub(crate) type Position = Vec<(Elem, Elem)>;

pub(crate) struct Game<'a> {
    a: &'a FinStructure,
    b: &'a FinStructure,
    inc_a: Incidence,
    inc_b: Incidence,
    memo: HashMap<(Position, usize), bool>,
}

impl<'a> Game<'a> {
    pub(crate) fn new(a: &'a FinStructure, b: &'a FinStructure) -> Self {
        Game {
            a,
            b,
            inc_a: Incidence::new(a),
            inc_b: Incidence::new(b),
            memo: HashMap::new(),
        }
    }

    pub(crate) fn with(pos: &Position, x: Elem, y: Elem) -> Position {
        let mut next: BTreeSet<(Elem, Elem)> = pos.iter().copied().collect();
        next.insert((x, y));
        next.into_iter().collect()
    }

    /// Whether adding `(x, y)` keeps `pos` a partial isomorphism.
    pub(crate) fn extends(&self, pos: &Position, x: Elem, y: Elem) -> bool {
        for &(p, q) in pos {
            if (p == x) != (q == y) {
                return false;
            }
        }
        let fwd = |e: Elem| if e == x { Some(y) } else { pos.iter().find(|p| p.0 == e).map(|p| p.1) };
        let back = |e: Elem| if e == y { Some(x) } else { pos.iter().find(|p| p.1 == e).map(|p| p.0) };
        for (sym, t) in self.inc_a.of(x) {
            if let Some(image) = t.iter().map(|&e| fwd(e)).collect::<Option<Vec<_>>>() {
                if !self.b.holds(sym, &image) {
                    return false;
                }
            }
        }
        for (sym, t) in self.inc_b.of(y) {
            if let Some(pre) = t.iter().map(|&e| back(e)).collect::<Option<Vec<_>>>() {
                if !self.a.holds(sym, &pre) {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn wins(&mut self, pos: &Position, rounds: usize) -> bool {
        if rounds == 0 {
            return true;
        }
        if rounds == 1 {
            // the last answer only has to keep the pairs consistent
            return self.last_round(pos);
        }
        let key = (pos.clone(), rounds);
        if let Some(&hit) = self.memo.get(&key) {
            return hit;
        }
        let result = self.spoiler_move(pos, rounds).is_none();
        self.memo.insert(key, result);
        result
    }

    fn last_round(&self, pos: &Position) -> bool {
        let a_free = self.a.universe().iter().all(|&x| {
            pos.iter().any(|p| p.0 == x) || self.b.universe().iter().any(|&y| self.extends(pos, x, y))
        });
        a_free
            && self.b.universe().iter().all(|&y| {
                pos.iter().any(|p| p.1 == y) || self.a.universe().iter().any(|&x| self.extends(pos, x, y))
            })
    }

    /// Duplicator's first winning answer to Spoiler's `(side, e)`.
    pub(crate) fn answer(&mut self, pos: &Position, rounds: usize, side: Side, e: Elem) -> Option<Position> {
        let others: Vec<Elem> = match side {
            Side::Left => self.b.universe().iter().copied().collect(),
            Side::Right => self.a.universe().iter().copied().collect(),
        };
        for o in others {
            let (x, y) = if side == Side::Left { (e, o) } else { (o, e) };
            if !self.extends(pos, x, y) {
                continue;
            }
            let next = Self::with(pos, x, y);
            if self.wins(&next, rounds - 1) {
                return Some(next);
            }
        }
        None
    }

    /// A Spoiler move Duplicator cannot answer, if any.
    pub(crate) fn spoiler_move(&mut self, pos: &Position, rounds: usize) -> Option<(Side, Elem)> {
        let left: Vec<Elem> = self.a.universe().iter().copied().collect();
        let right: Vec<Elem> = self.b.universe().iter().copied().collect();
        let moves = left.into_iter().map(|e| (Side::Left, e)).chain(right.into_iter().map(|e| (Side::Right, e)));
        for (side, e) in moves {
            // a point already picked has a forced answer that changes nothing
            let picked = pos.iter().any(|p| if side == Side::Left { p.0 == e } else { p.1 == e });
            if picked {
                continue;
            }
            if self.answer(pos, rounds, side, e).is_none() {
                return Some((side, e));
            }
        }
        None
    }
}

/// Plays the `rounds`-round game on `a` and `b` from the empty position.
pub fn play(a: &FinStructure, b: &FinStructure, rounds: usize) -> Result<GameReport> {
    if a.vocabulary().id() != b.vocabulary().id() {
        return Err(Error::VocabularyMismatch {
            left: a.vocabulary().id().to_string(),
            right: b.vocabulary().id().to_string(),
        });
    }
    let mut game = Game::new(a, b);
    let duplicator_wins = game.wins(&Vec::new(), rounds);
    let mut spoiler_line = Vec::new();
    let mut pos: Position = Vec::new();
    let mut left = rounds;
    while !duplicator_wins && left > 0 {
        let Some((side, e)) = game.spoiler_move(&pos, left) else { break };
        spoiler_line.push((side, e));
        // Duplicator's reply that survives longest is not tracked; any legal
        // one keeps the line going
        let reply = match side {
            Side::Left => b.universe().iter().copied().find(|&y| game.extends(&pos, e, y)).map(|y| (e, y)),
            Side::Right => a.universe().iter().copied().find(|&x| game.extends(&pos, x, e)).map(|x| (x, e)),
        };
        match reply {
            Some(pair) => {
                let other = if side == Side::Left { (Side::Right, pair.1) } else { (Side::Left, pair.0) };
                spoiler_line.push(other);
                pos = Game::with(&pos, pair.0, pair.1);
                left -= 1;
            }
            None => break,
        }
    }
    Ok(GameReport {
        rounds,
        duplicator_wins,
        spoiler_line,
        positions: game.memo.len(),
    })
}

/// Whether Duplicator wins the `rounds`-round game.
pub fn ef_equivalent(a: &FinStructure, b: &FinStructure, rounds: usize) -> Result<bool> {
    Ok(play(a, b, rounds)?.duplicator_wins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::tests::{chain, order_vocab};
    use crate::structure::is_isomorphic;

    fn chain_of(n: u64) -> FinStructure {
        let (v, lt) = order_vocab();
        chain(&v, &lt, &(0..n).collect::<Vec<_>>())
    }

    #[test]
    fn long_chains_agree_to_depth_three() {
        // chains of length at least 2^k - 1 are k-round equivalent
        assert!(ef_equivalent(&chain_of(7), &chain_of(8), 3).unwrap());
        assert!(ef_equivalent(&chain_of(20), &chain_of(25), 3).unwrap());
        assert!(!ef_equivalent(&chain_of(6), &chain_of(7), 3).unwrap());
        assert!(!ef_equivalent(&chain_of(2), &chain_of(3), 2).unwrap());
    }

    #[test]
    fn losing_games_report_a_line() {
        let r = play(&chain_of(2), &chain_of(3), 2).unwrap();
        assert!(!r.duplicator_wins);
        assert!(!r.spoiler_line.is_empty());
    }

    /// Brute-force cross-check: on tiny structures, winning with as many
    /// rounds as points is isomorphism.
    #[test]
    fn enough_rounds_decide_isomorphism() {
        let (v, lt) = order_vocab();
        let mut all = Vec::new();
        for mask in 0u32..(1 << 6) {
            let mut s = FinStructure::with_universe(v.clone(), 0..3);
            let pairs = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
            for (k, &(x, y)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    s.add_fact(&lt, vec![x, y]).unwrap();
                }
            }
            all.push(s);
        }
        for a in all.iter().step_by(3) {
            for b in all.iter().step_by(5) {
                assert_eq!(ef_equivalent(a, b, 3).unwrap(), is_isomorphic(a, b).unwrap());
            }
        }
    }
}
