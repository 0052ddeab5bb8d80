//! Index codings on naturals: Cantor pairing, finite sequences, finite sets.
//!
//! Every decoder is total, so any natural decodes to something; encoders
//! return a code that decodes back to the value.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub type Index = BigUint;

pub fn idx(n: u64) -> Index {
    BigUint::from(n)
}

/// Cantor pairing `<x, y> = (x + y)(x + y + 1)/2 + y`.
pub fn pair(x: &Index, y: &Index) -> Index {
    let s = x + y;
    (&s * (&s + 1u32)) / 2u32 + y
}

pub fn unpair(z: &Index) -> (Index, Index) {
    // w = floor((sqrt(8z + 1) - 1) / 2)
    let w = ((z * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let y = z - &t;
    let x = &w - &y;
    (x, y)
}

/// Bijection between finite sequences and naturals:
/// `[] -> 0`, `x :: rest -> 1 + <x, code(rest)>`.
pub fn encode_seq(items: &[Index]) -> Index {
    let mut code = Index::zero();
    for x in items.iter().rev() {
        code = pair(x, &code) + 1u32;
    }
    code
}

pub fn decode_seq(code: &Index) -> Vec<Index> {
    let mut out = Vec::new();
    let mut cur = code.clone();
    while !cur.is_zero() {
        let (x, rest) = unpair(&(cur - 1u32));
        out.push(x);
        cur = rest;
    }
    out
}

/// Linear-size sequence coding. The bits of `code` below its top bit, read
/// from the least significant end, are a concatenation of Elias-gamma codes
/// of `x + 1`; an incomplete trailing code is ignored. Zero and one both
/// decode to the empty sequence. Every sequence is reached, and the code of
/// a sequence has bit length linear in the total bit length of its entries.
pub fn encode_stream(items: &[Index]) -> Index {
    let mut bits: Vec<bool> = Vec::new();
    for x in items {
        let v = x + 1u32;
        let len = v.bits();
        bits.extend(std::iter::repeat(false).take(len as usize - 1));
        bits.extend((0..len).rev().map(|k| v.bit(k)));
    }
    let mut code = Index::zero();
    code.set_bit(bits.len() as u64, true);
    for (k, b) in bits.into_iter().enumerate() {
        if b {
            code.set_bit(k as u64, true);
        }
    }
    code
}

pub fn decode_stream(code: &Index) -> Vec<Index> {
    let total = code.bits().saturating_sub(1);
    let mut out = Vec::new();
    let mut pos = 0;
    'outer: while pos < total {
        let mut zeros = 0;
        while !code.bit(pos) {
            zeros += 1;
            pos += 1;
            if pos >= total {
                break 'outer;
            }
        }
        if pos + zeros >= total {
            break;
        }
        let mut v = Index::zero();
        for k in 0..=zeros {
            v <<= 1;
            if code.bit(pos + k) {
                v += 1u32;
            }
        }
        pos += zeros + 1;
        out.push(v - 1u32);
    }
    out
}

/// Reads position `k` of a decoded sequence, defaulting to zero.
pub fn seq_get(items: &[Index], k: usize) -> Index {
    items.get(k).cloned().unwrap_or_default()
}

/// The canonical finite set `D_n`: bit `k` of `n` set iff `k` is a member.
pub fn decode_set(code: &Index) -> Vec<u64> {
    (0..code.bits()).filter(|&k| code.bit(k)).collect()
}

pub fn encode_set(members: impl IntoIterator<Item = u64>) -> Index {
    let mut code = Index::zero();
    for k in members {
        code.set_bit(k, true);
    }
    code
}

pub fn to_u64(i: &Index) -> Option<u64> {
    i.to_u64()
}

/// Saturating conversion used for sizes decoded from indices.
pub fn to_usize_capped(i: &Index, cap: usize) -> usize {
    i.to_usize().map_or(cap, |v| v.min(cap))
}

/// Zigzag map from naturals onto integers: 0, -1, 1, -2, 2, ...
pub fn zigzag_decode(n: &Index) -> num_bigint::BigInt {
    use num_bigint::BigInt;
    let n = BigInt::from(n.clone());
    if (&n % 2u32).is_one() {
        -((n + 1u32) / 2u32)
    } else {
        n / 2u32
    }
}

pub fn zigzag_encode(z: &num_bigint::BigInt) -> Index {
    use num_bigint::Sign;
    let mag = z.magnitude().clone();
    match z.sign() {
        Sign::Minus => mag * 2u32 - 1u32,
        _ => mag * 2u32,
    }
}
