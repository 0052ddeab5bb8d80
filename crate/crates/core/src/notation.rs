//! Ordinal notations in the style of Kleene's O, at desk scale.
//!
//! A notation is `1` (zero), `s(x)` (successor of `x`) or `lim(name)`, where
//! `name` resolves in a process-wide registry of total fundamental sequences.
//! Nothing here certifies membership in O; the registry ships `omega`,
//! `omega2` and `omega3` and accepts further registrations.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

pub const DEFAULT_HORIZON: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Notation {
    One,
    Succ(Arc<Notation>),
    Lim(Arc<str>),
}

/// Ordinals below omega^2, written `omega * k + n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrdinalValue {
    pub omega: u64,
    pub finite: u64,
}

impl OrdinalValue {
    pub const fn finite(n: u64) -> Self {
        OrdinalValue { omega: 0, finite: n }
    }

    pub fn succ(self) -> Self {
        OrdinalValue {
            finite: self.finite + 1,
            ..self
        }
    }

    pub fn is_limit(self) -> bool {
        self.omega > 0 && self.finite == 0
    }
}

impl fmt::Display for OrdinalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.omega, self.finite) {
            (0, n) => write!(f, "{n}"),
            (1, 0) => write!(f, "ω"),
            (1, n) => write!(f, "ω+{n}"),
            (k, 0) => write!(f, "ω·{k}"),
            (k, n) => write!(f, "ω·{k}+{n}"),
        }
    }
}

/// Outcome of comparing two notations under <_O.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OCompare {
    Less,
    Equal,
    Greater,
    Incomparable,
}

type Generator = Arc<dyn Fn(u64) -> Notation + Send + Sync>;

#[derive(Clone)]
pub struct FundamentalSequence {
    pub name: Arc<str>,
    pub value: Option<OrdinalValue>,
    generator: Generator,
}

impl FundamentalSequence {
    pub fn new(
        name: &str,
        value: Option<OrdinalValue>,
        generator: impl Fn(u64) -> Notation + Send + Sync + 'static,
    ) -> Self {
        FundamentalSequence {
            name: Arc::from(name),
            value,
            generator: Arc::new(generator),
        }
    }

    pub fn at(&self, n: u64) -> Notation {
        (self.generator)(n)
    }
}

impl fmt::Debug for FundamentalSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FundamentalSequence")
            .field("name", &self.name)
            .field("value", &self.value)
            .finish()
    }
}

fn registry() -> &'static RwLock<HashMap<Arc<str>, FundamentalSequence>> {
    static REGISTRY: OnceLock<RwLock<HashMap<Arc<str>, FundamentalSequence>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut map = HashMap::new();
        for seq in shipped_sequences() {
            map.insert(seq.name.clone(), seq);
        }
        RwLock::new(map)
    })
}

fn shipped_sequences() -> Vec<FundamentalSequence> {
    // omega:  n -> n-fold successor of 1
    // omega2: 0 -> s(1), n >= 1 -> omega + n
    // omega3: 0 -> s(1), n >= 1 -> omega2 + n
    vec![
        FundamentalSequence::new("omega", Some(OrdinalValue { omega: 1, finite: 0 }), |n| {
            iterate_successor(Notation::One, n)
        }),
        FundamentalSequence::new("omega2", Some(OrdinalValue { omega: 2, finite: 0 }), |n| {
            if n == 0 {
                successor(&Notation::One)
            } else {
                iterate_successor(Notation::limit("omega"), n)
            }
        }),
        FundamentalSequence::new("omega3", Some(OrdinalValue { omega: 3, finite: 0 }), |n| {
            if n == 0 {
                successor(&Notation::One)
            } else {
                iterate_successor(Notation::limit("omega2"), n)
            }
        }),
    ]
}

/// Adds a fundamental sequence to the registry. Names are insert-once.
pub fn register(seq: FundamentalSequence) -> Result<()> {
    let mut map = registry().write().expect("notation registry poisoned");
    if map.contains_key(&seq.name) {
        return Err(Error::DuplicateSequence(seq.name.to_string()));
    }
    map.insert(seq.name.clone(), seq);
    Ok(())
}

pub fn lookup(name: &str) -> Result<FundamentalSequence> {
    registry()
        .read()
        .expect("notation registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownSequence(name.to_string()))
}

pub fn successor(a: &Notation) -> Notation {
    Notation::Succ(Arc::new(a.clone()))
}

pub fn iterate_successor(mut a: Notation, n: u64) -> Notation {
    for _ in 0..n {
        a = successor(&a);
    }
    a
}

impl Notation {
    pub fn limit(name: &str) -> Notation {
        Notation::Lim(Arc::from(name))
    }

    pub fn finite(n: u64) -> Notation {
        iterate_successor(Notation::One, n)
    }

    pub fn is_limit(&self) -> bool {
        matches!(self, Notation::Lim(_))
    }

    pub fn predecessor(&self) -> Option<&Notation> {
        match self {
            Notation::Succ(p) => Some(p),
            _ => None,
        }
    }

    /// `|a|` when it is known: finite, or symbolic below omega^2 for registered limits.
    pub fn ordinal_value(&self) -> Option<OrdinalValue> {
        match self {
            Notation::One => Some(OrdinalValue::finite(0)),
            Notation::Succ(p) => p.ordinal_value().map(OrdinalValue::succ),
            Notation::Lim(name) => lookup(name).ok().and_then(|s| s.value),
        }
    }

    pub fn parse(text: &str) -> Result<Notation> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let n = parser.notation()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(Error::Parse(format!(
                "trailing input in notation `{text}` at byte {}",
                parser.pos
            )));
        }
        Ok(n)
    }
}

impl fmt::Display for Notation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Notation::One => write!(f, "1"),
            Notation::Succ(p) => write!(f, "s({p})"),
            Notation::Lim(name) => write!(f, "lim({name})"),
        }
    }
}

impl fmt::Debug for Notation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for Notation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Notation::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected `{token}` at byte {}", self.pos)))
        }
    }

    fn notation(&mut self) -> Result<Notation> {
        if self.eat("lim(") {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(Error::Parse(format!("missing sequence name at byte {start}")));
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            self.expect(")")?;
            lookup(name)?;
            Ok(Notation::limit(name))
        } else if self.eat("s(") {
            let inner = self.notation()?;
            self.expect(")")?;
            Ok(successor(&inner))
        } else if self.eat("1") {
            Ok(Notation::One)
        } else {
            Err(Error::Parse(format!("unexpected input at byte {}", self.pos)))
        }
    }
}

pub fn fundamental_element(a: &Notation, n: u64) -> Result<Notation> {
    match a {
        Notation::Lim(name) => Ok(lookup(name)?.at(n)),
        other => Err(Error::NotLimit(other.to_string())),
    }
}

/// Decides `x <=_O y` by walking down from `y`. `Ok(false)` is definitive;
/// a limit search that runs past the horizon reports `HorizonExceeded`.
fn below_or_equal(x: &Notation, y: &Notation, horizon: usize) -> Result<bool> {
    if x == y {
        return Ok(true);
    }
    match y {
        Notation::One => Ok(false),
        Notation::Succ(p) => below_or_equal(x, p, horizon),
        Notation::Lim(name) => {
            let seq = lookup(name)?;
            for n in 0..horizon as u64 {
                match below_or_equal(x, &seq.at(n), horizon) {
                    Ok(true) => return Ok(true),
                    Ok(false) | Err(Error::HorizonExceeded { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            Err(Error::HorizonExceeded { horizon })
        }
    }
}

fn strictly_below(x: &Notation, y: &Notation, horizon: usize) -> Result<bool> {
    if x == y {
        return Ok(false);
    }
    below_or_equal(x, y, horizon)
}

/// Position of the first fundamental-sequence element at or above `x`.
pub fn limit_witness(x: &Notation, lim: &Notation, horizon: usize) -> Result<u64> {
    let Notation::Lim(name) = lim else {
        return Err(Error::NotLimit(lim.to_string()));
    };
    let seq = lookup(name)?;
    for n in 0..horizon as u64 {
        if let Ok(true) = below_or_equal(x, &seq.at(n), horizon) {
            return Ok(n);
        }
    }
    Err(Error::HorizonExceeded { horizon })
}

pub fn compare_o(a: &Notation, b: &Notation) -> Result<OCompare> {
    compare_o_with(a, b, DEFAULT_HORIZON)
}

pub fn compare_o_with(a: &Notation, b: &Notation, horizon: usize) -> Result<OCompare> {
    if a == b {
        return Ok(OCompare::Equal);
    }
    let ab = strictly_below(a, b, horizon);
    if let Ok(true) = ab {
        return Ok(OCompare::Less);
    }
    let ba = strictly_below(b, a, horizon);
    if let Ok(true) = ba {
        return Ok(OCompare::Greater);
    }
    match (ab, ba) {
        (Ok(false), Ok(false)) => Ok(OCompare::Incomparable),
        (Err(e), _) | (_, Err(e)) => Err(e),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(text: &str) -> Notation {
        Notation::parse(text).unwrap()
    }

    #[test]
    fn successor_values() {
        assert_eq!(successor(&Notation::One).ordinal_value(), Some(OrdinalValue::finite(1)));
        assert_eq!(n("s(s(1))").ordinal_value(), Some(OrdinalValue::finite(2)));
        assert_eq!(
            successor(&n("lim(omega)")).ordinal_value(),
            Some(OrdinalValue { omega: 1, finite: 1 })
        );
        assert_eq!(successor(&n("lim(omega)")).ordinal_value().unwrap().to_string(), "ω+1");
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in ["1", "s(1)", "s(s(lim(omega2)))", "lim(omega3)"] {
            assert_eq!(n(text).to_string(), text);
        }
        assert!(Notation::parse("lim(nope)").is_err());
        assert!(Notation::parse("s(1").is_err());
        assert!(Notation::parse("2").is_err());
    }

    #[test]
    fn comparisons() {
        assert_eq!(compare_o(&Notation::One, &n("s(1)")).unwrap(), OCompare::Less);
        assert_eq!(compare_o(&n("s(1)"), &n("s(1)")).unwrap(), OCompare::Equal);
        let three = Notation::finite(3);
        assert_eq!(compare_o(&three, &n("lim(omega)")).unwrap(), OCompare::Less);
        assert_eq!(limit_witness(&three, &n("lim(omega)"), DEFAULT_HORIZON).unwrap(), 3);
        assert_eq!(compare_o(&n("lim(omega)"), &Notation::finite(5)).unwrap(), OCompare::Greater);
        assert_eq!(
            compare_o(&n("s(lim(omega))"), &n("lim(omega2)")).unwrap(),
            OCompare::Less
        );
    }

    #[test]
    fn incomparable_and_horizon() {
        register(FundamentalSequence::new("evens_test", None, |k| Notation::finite(2 * k + 1)))
            .unwrap();
        // lim(evens_test) and lim(omega) denote the same ordinal by different paths
        let r = compare_o(&n("lim(evens_test)"), &n("lim(omega)"));
        assert_eq!(r, Err(Error::HorizonExceeded { horizon: DEFAULT_HORIZON }));
        assert_eq!(compare_o(&n("s(1)"), &n("1")).unwrap(), OCompare::Greater);
        assert!(matches!(
            register(FundamentalSequence::new("omega", None, Notation::finite)),
            Err(Error::DuplicateSequence(_))
        ));
    }

    #[test]
    fn fundamental_elements() {
        assert_eq!(fundamental_element(&n("lim(omega)"), 2).unwrap(), Notation::finite(2));
        assert_eq!(
            fundamental_element(&n("lim(omega2)"), 1).unwrap().ordinal_value(),
            Some(OrdinalValue { omega: 1, finite: 1 })
        );
        assert!(matches!(
            fundamental_element(&n("s(1)"), 0),
            Err(Error::NotLimit(_))
        ));
    }

    #[test]
    fn shipped_sequences_increase() {
        for name in ["omega", "omega2", "omega3"] {
            let seq = lookup(name).unwrap();
            for k in 0..20 {
                assert_eq!(
                    compare_o(&seq.at(k), &seq.at(k + 1)).unwrap(),
                    OCompare::Less,
                    "{name} at {k}"
                );
                assert!(!seq.at(k).is_limit());
            }
        }
    }
}
