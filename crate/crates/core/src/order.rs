//! Orderings on r-subsets of [n] and on all of 2^[n].
//!
//! For same-size sets A ≠ B:
//!   lex:   A before B  iff  min(A Δ B) ∈ A
//!   colex: A before B  iff  max(A Δ B) ∈ B
//! Colex on bitmasks is plain numeric order; lex is the dictionary order on
//! the ascending element tuples. The reversed-alphabet colex (alphabet
//! n < n-1 < ... < 1) compares by min(A Δ B) ∈ B, which is the same order as
//! relabeling every element i to n+1-i and comparing in colex.
//!
//! Simplicial order on 2^[n]: by size first, ties broken by lex.

use std::cmp::Ordering;

use num::{BigUint, One, Zero};

use crate::counting::{binomial, binomial_prefix_sum};
use crate::cube::{full_mask, weighted_masks, SetFamily, Vertex, VertexSet, MAX_DIMENSION};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderKind {
    Lex,
    Colex,
    ColexReversedAlphabet,
    Simplicial,
}

fn check_same_size(a: u64, b: u64) -> Result<()> {
    let (wa, wb) = (a.count_ones(), b.count_ones());
    if wa != wb {
        return Err(Error::SizeMismatch { left: wa, right: wb });
    }
    Ok(())
}

pub fn lex_compare(a: u64, b: u64) -> Result<Ordering> {
    check_same_size(a, b)?;
    if a == b {
        return Ok(Ordering::Equal);
    }
    let diff = a ^ b;
    let lowest = diff & diff.wrapping_neg();
    Ok(if a & lowest != 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    })
}

pub fn colex_compare(a: u64, b: u64) -> Result<Ordering> {
    check_same_size(a, b)?;
    // Highest differing bit decides; that is numeric order on the masks.
    Ok(a.cmp(&b))
}

pub fn colex_reversed_compare(a: u64, b: u64) -> Result<Ordering> {
    check_same_size(a, b)?;
    if a == b {
        return Ok(Ordering::Equal);
    }
    let diff = a ^ b;
    let lowest = diff & diff.wrapping_neg();
    Ok(if b & lowest != 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    })
}

/// Size first, lex inside a layer.
pub fn simplicial_compare(a: u64, b: u64) -> Ordering {
    a.count_ones()
        .cmp(&b.count_ones())
        .then_with(|| lex_compare(a, b).expect("equal sizes in tie branch"))
}

/// Relabel every element i of [n] to n+1-i.
pub fn relabel_reversed(n: u32, mask: u64) -> u64 {
    debug_assert!(n >= 1 && n <= MAX_DIMENSION);
    mask.reverse_bits() >> (64 - n)
}

/// Position of `mask` in colex order on its own layer. Independent of n.
pub fn colex_rank(mask: u64) -> BigUint {
    let mut rank = BigUint::zero();
    let mut rest = mask;
    let mut j = 0u64;
    while rest != 0 {
        j += 1;
        let b = rest.trailing_zeros() as u64; // element b+1, so C(b, j)
        rank += binomial(b, j);
        rest &= rest - 1;
    }
    rank
}

/// Inverse of `colex_rank` on [n]^(r).
pub fn colex_unrank(n: u32, r: u32, rank: &BigUint) -> Result<u64> {
    check_layer(n, r)?;
    let total = binomial(n as u64, r as u64);
    if *rank >= total {
        return Err(Error::RankOutOfRange {
            rank: rank.to_string(),
            size: total.to_string(),
        });
    }
    let mut rest = rank.clone();
    let mut mask = 0u64;
    let mut upper = n as u64; // candidate positions are 0-based, < upper
    for j in (1..=r as u64).rev() {
        // Largest position c < upper with C(c, j) <= rest.
        let mut c = upper - 1;
        loop {
            let val = binomial(c, j);
            if val <= rest {
                rest -= val;
                mask |= 1u64 << c;
                upper = c;
                break;
            }
            c -= 1; // c >= j-1 always exists since C(j-1, j) = 0 <= rest
        }
    }
    Ok(mask)
}

/// Position of `mask` in lex order on [n]^(r).
pub fn lex_rank(n: u32, mask: u64) -> Result<BigUint> {
    if mask & !full_mask(n) != 0 {
        return Err(Error::MaskOutOfRange { mask, n });
    }
    let r = mask.count_ones() as u64;
    let mut rank = BigUint::zero();
    let mut prev = 0u64; // previous chosen element, 1-based
    let mut rest = mask;
    let mut i = 0u64;
    while rest != 0 {
        i += 1;
        let a = rest.trailing_zeros() as u64 + 1;
        // Sets that picked an earlier i-th element x and anything above it.
        for x in prev + 1..a {
            rank += binomial(n as u64 - x, r - i);
        }
        prev = a;
        rest &= rest - 1;
    }
    Ok(rank)
}

/// Inverse of `lex_rank` on [n]^(r).
pub fn lex_unrank(n: u32, r: u32, rank: &BigUint) -> Result<u64> {
    check_layer(n, r)?;
    let total = binomial(n as u64, r as u64);
    if *rank >= total {
        return Err(Error::RankOutOfRange {
            rank: rank.to_string(),
            size: total.to_string(),
        });
    }
    let mut rest = rank.clone();
    let mut mask = 0u64;
    let mut prev = 0u64;
    for i in 1..=r as u64 {
        let mut x = prev + 1;
        loop {
            let below = binomial(n as u64 - x, r as u64 - i);
            if rest < below {
                break;
            }
            rest -= below;
            x += 1;
        }
        mask |= 1u64 << (x - 1);
        prev = x;
    }
    Ok(mask)
}

pub fn colex_reversed_rank(n: u32, mask: u64) -> Result<BigUint> {
    if mask & !full_mask(n) != 0 {
        return Err(Error::MaskOutOfRange { mask, n });
    }
    Ok(colex_rank(relabel_reversed(n, mask)))
}

pub fn colex_reversed_unrank(n: u32, r: u32, rank: &BigUint) -> Result<u64> {
    Ok(relabel_reversed(n, colex_unrank(n, r, rank)?))
}

/// Position of `mask` in simplicial order on 2^[n].
pub fn simplicial_rank(n: u32, mask: u64) -> Result<BigUint> {
    let w = mask.count_ones() as u64;
    let before = if w == 0 {
        BigUint::zero()
    } else {
        binomial_prefix_sum(n as u64, w - 1)
    };
    Ok(before + lex_rank(n, mask)?)
}

pub fn simplicial_unrank(n: u32, rank: &BigUint) -> Result<u64> {
    let mut layer = 0u32;
    let mut rest = rank.clone();
    loop {
        if layer > n {
            return Err(Error::RankOutOfRange {
                rank: rank.to_string(),
                size: (BigUint::one() << n).to_string(),
            });
        }
        let size = binomial(n as u64, layer as u64);
        if rest < size {
            return lex_unrank(n, layer, &rest);
        }
        rest -= size;
        layer += 1;
    }
}

fn check_layer(n: u32, r: u32) -> Result<()> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::DimensionOutOfRange {
            n,
            max: MAX_DIMENSION,
        });
    }
    if r > n {
        return Err(Error::LayerOutOfRange { r, n });
    }
    Ok(())
}

fn segment_len(n: u32, r: u32, m: &BigUint) -> Result<u64> {
    let total = binomial(n as u64, r as u64);
    if *m > total {
        return Err(Error::SegmentTooLong {
            len: m.to_string(),
            max: total.to_string(),
        });
    }
    let cap = BigUint::from(crate::cube::MATERIALIZE_LIMIT);
    if *m > cap {
        return Err(Error::ScaleLimit(format!(
            "segment of {m} sets is too large to materialize"
        )));
    }
    // Fits in u64 after the cap check.
    Ok(m.iter_u64_digits().next().unwrap_or(0))
}

/// Masks of [n]^(r) in lex order: the dictionary enumeration of ascending
/// element tuples.
pub fn lex_layer_masks(n: u32, r: u32) -> LexMasks {
    debug_assert!(r <= n && n >= 1 && n <= MAX_DIMENSION);
    LexMasks {
        n,
        r,
        elems: (1..=r).collect(),
        done: false,
        started: false,
    }
}

pub struct LexMasks {
    n: u32,
    r: u32,
    elems: Vec<u32>, // ascending, 1-based
    done: bool,
    started: bool,
}

impl Iterator for LexMasks {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else {
            // Usual combination successor: bump the rightmost element that
            // still has room, reset the suffix to consecutive values.
            let r = self.r as usize;
            let mut i = r;
            loop {
                if i == 0 {
                    self.done = true;
                    return None;
                }
                i -= 1;
                if self.elems[i] < self.n - (self.r - 1 - i as u32) {
                    self.elems[i] += 1;
                    for j in i + 1..r {
                        self.elems[j] = self.elems[j - 1] + 1;
                    }
                    break;
                }
            }
        }
        if self.r == 0 {
            self.done = true;
            return Some(0);
        }
        let mut mask = 0u64;
        for &e in &self.elems {
            mask |= 1u64 << (e - 1);
        }
        Some(mask)
    }
}

/// First m sets of [n]^(r) in lex order.
pub fn lex_initial_segment(n: u32, r: u32, m: &BigUint) -> Result<SetFamily> {
    check_layer(n, r)?;
    let take = segment_len(n, r, m)?;
    SetFamily::from_masks(n, r, lex_layer_masks(n, r).take(take as usize))
}

/// First m sets of [n]^(r) in colex order.
pub fn colex_initial_segment(n: u32, r: u32, m: &BigUint) -> Result<SetFamily> {
    check_layer(n, r)?;
    let take = segment_len(n, r, m)?;
    SetFamily::from_masks(n, r, weighted_masks(n, r).take(take as usize))
}

/// First m sets of [n]^(r) in colex over the reversed alphabet.
pub fn colex_reversed_initial_segment(n: u32, r: u32, m: &BigUint) -> Result<SetFamily> {
    check_layer(n, r)?;
    let take = segment_len(n, r, m)?;
    SetFamily::from_masks(
        n,
        r,
        weighted_masks(n, r)
            .take(take as usize)
            .map(|mask| relabel_reversed(n, mask)),
    )
}

/// S_l: the first l vertices of Q_n in simplicial order. Layers fill from the
/// bottom; the topmost partial layer is a lex initial segment.
pub fn simplicial_initial_segment(n: u32, l: &BigUint) -> Result<VertexSet> {
    check_layer(n, 0)?;
    let total = BigUint::one() << n;
    if *l > total {
        return Err(Error::SegmentTooLong {
            len: l.to_string(),
            max: total.to_string(),
        });
    }
    if *l > BigUint::from(crate::cube::MATERIALIZE_LIMIT) {
        return Err(Error::ScaleLimit(format!(
            "segment of {l} vertices is too large to materialize"
        )));
    }
    let mut remaining = l.iter_u64_digits().next().unwrap_or(0);
    let mut out = VertexSet::empty(n)?;
    for r in 0..=n {
        let size_big = binomial(n as u64, r as u64);
        let size = size_big.iter_u64_digits().next().unwrap_or(0);
        if remaining >= size {
            for mask in weighted_masks(n, r) {
                out.insert(Vertex::new(n, mask)?)?;
            }
            remaining -= size;
            if remaining == 0 {
                break;
            }
        } else {
            for mask in lex_layer_masks(n, r).take(remaining as usize) {
                out.insert(Vertex::new(n, mask)?)?;
            }
            break;
        }
    }
    Ok(out)
}

/// Complement duality: the complement of the lex initial segment of [n]^(r)
/// is the reversed-alphabet colex initial segment of [n]^(n-r) of equal size.
pub fn complement_family(f: &SetFamily) -> SetFamily {
    f.complement_family()
}
