//! The hypercube Q_n on {0,1}^n and its basic set algebra.
//!
//! A vertex is a bitmask: bit i-1 set means coordinate i is 1, so the vertex
//! is identified with the subset Z_v = { i : v_i = 1 } of [n]. Neighbourhoods
//! are open: gamma(U) = ∪_{u in U} Γ(u) may intersect U.

use std::collections::HashSet;

use num::BigUint;

use crate::counting::binomial;
use crate::error::{Error, Result};

/// Largest dimension the single-word encoding supports.
pub const MAX_DIMENSION: u32 = 64;

/// Cap on how many vertices or sets any one call will materialize.
pub(crate) const MATERIALIZE_LIMIT: u64 = 1 << 26;

/// All-ones mask on n coordinates.
pub fn full_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_dimension(n: u32) -> Result<()> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::DimensionOutOfRange {
            n,
            max: MAX_DIMENSION,
        });
    }
    Ok(())
}

fn check_mask(n: u32, mask: u64) -> Result<()> {
    if mask & !full_mask(n) != 0 {
        return Err(Error::MaskOutOfRange { mask, n });
    }
    Ok(())
}

/// A vertex of Q_n.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    n: u32,
    bits: u64,
}

impl std::fmt::Debug for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Vertex(n={}, {:#x})", self.n, self.bits)
    }
}

impl Vertex {
    pub fn new(n: u32, bits: u64) -> Result<Self> {
        check_dimension(n)?;
        check_mask(n, bits)?;
        Ok(Vertex { n, bits })
    }

    pub fn origin(n: u32) -> Result<Self> {
        Vertex::new(n, 0)
    }

    /// Vertex whose coordinate set is exactly `coords` (1-based).
    pub fn from_coords(n: u32, coords: &[u32]) -> Result<Self> {
        check_dimension(n)?;
        let mut bits = 0u64;
        for &c in coords {
            if c == 0 || c > n {
                return Err(Error::CoordinateOutOfRange { coord: c, n });
            }
            bits |= 1u64 << (c - 1);
        }
        Ok(Vertex { n, bits })
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Hamming weight, i.e. |Z_v|.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// The coordinate set Z_v, ascending and 1-based.
    pub fn coords(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.weight() as usize);
        let mut rest = self.bits;
        while rest != 0 {
            let b = rest.trailing_zeros();
            out.push(b + 1);
            rest &= rest - 1;
        }
        out
    }

    pub fn is_set(&self, coord: u32) -> Result<bool> {
        if coord == 0 || coord > self.n {
            return Err(Error::CoordinateOutOfRange { coord, n: self.n });
        }
        Ok(self.bits >> (coord - 1) & 1 == 1)
    }

    pub fn flip(&self, coord: u32) -> Result<Self> {
        if coord == 0 || coord > self.n {
            return Err(Error::CoordinateOutOfRange { coord, n: self.n });
        }
        Ok(Vertex {
            n: self.n,
            bits: self.bits ^ (1u64 << (coord - 1)),
        })
    }

    pub fn complement(&self) -> Self {
        Vertex {
            n: self.n,
            bits: self.bits ^ full_mask(self.n),
        }
    }

    pub fn distance(&self, other: &Vertex) -> Result<u32> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok((self.bits ^ other.bits).count_ones())
    }

    /// Γ(v): the n vertices at distance exactly 1.
    pub fn neighbours(&self) -> VertexSet {
        let mut members = HashSet::with_capacity(self.n as usize);
        for i in 0..self.n {
            members.insert(self.bits ^ (1u64 << i));
        }
        VertexSet {
            n: self.n,
            members,
        }
    }

    /// Γ^k(v): vertices at distance exactly k, enumerated directly as the
    /// weight-k masks XORed onto v. |Γ^k(v)| = C(n, k).
    pub fn kth_neighbourhood(&self, k: u32) -> Result<VertexSet> {
        if k > self.n {
            return Err(Error::LayerOutOfRange { r: k, n: self.n });
        }
        let count = binomial(self.n as u64, k as u64);
        if count > BigUint::from(MATERIALIZE_LIMIT) {
            return Err(Error::ScaleLimit(format!(
                "kth_neighbourhood would materialize C({}, {k}) vertices",
                self.n
            )));
        }
        let members: HashSet<u64> = weighted_masks(self.n, k)
            .map(|m| m ^ self.bits)
            .collect();
        Ok(VertexSet {
            n: self.n,
            members,
        })
    }

    /// Γ^k(v) by the recursive definition Γ^k = Γ(Γ^{k-1}) \ Γ^{k-2},
    /// with Γ^0 = {v}. Must agree with `kth_neighbourhood`.
    pub fn kth_neighbourhood_recursive(&self, k: u32) -> Result<VertexSet> {
        if k > self.n {
            return Err(Error::LayerOutOfRange { r: k, n: self.n });
        }
        let mut prev_prev = VertexSet::empty(self.n)?; // Γ^{-1} := ∅
        let mut prev = VertexSet::from_vertices(self.n, [*self])?; // Γ^0
        if k == 0 {
            return Ok(prev);
        }
        for _ in 1..=k {
            let mut next = prev.neighbourhood();
            for bits in prev_prev.members.iter() {
                next.members.remove(bits);
            }
            prev_prev = prev;
            prev = next;
        }
        Ok(prev)
    }
}

/// A finite set of vertices of one fixed Q_n. Equality is set equality.
#[derive(Clone, PartialEq, Eq)]
pub struct VertexSet {
    n: u32,
    pub(crate) members: HashSet<u64>,
}

impl std::fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VertexSet(n={}, |U|={})", self.n, self.members.len())
    }
}

impl VertexSet {
    pub fn empty(n: u32) -> Result<Self> {
        check_dimension(n)?;
        Ok(VertexSet {
            n,
            members: HashSet::new(),
        })
    }

    /// All 2^n vertices. Guarded: only sensible at desk scale.
    pub fn full(n: u32) -> Result<Self> {
        check_dimension(n)?;
        if n > 20 {
            return Err(Error::ScaleLimit(format!(
                "full vertex set of Q_{n} has 2^{n} members"
            )));
        }
        Ok(VertexSet {
            n,
            members: (0..=full_mask(n)).collect(),
        })
    }

    pub fn from_vertices(n: u32, vertices: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let mut set = VertexSet::empty(n)?;
        for v in vertices {
            set.insert(v)?;
        }
        Ok(set)
    }

    pub fn from_bits(n: u32, bits: impl IntoIterator<Item = u64>) -> Result<Self> {
        check_dimension(n)?;
        let mut members = HashSet::new();
        for b in bits {
            check_mask(n, b)?;
            members.insert(b);
        }
        Ok(VertexSet { n, members })
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// |U| as an exact count.
    pub fn cardinality(&self) -> BigUint {
        BigUint::from(self.members.len())
    }

    pub fn insert(&mut self, v: Vertex) -> Result<bool> {
        if v.n != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: v.n,
            });
        }
        Ok(self.members.insert(v.bits))
    }

    pub fn remove(&mut self, v: &Vertex) -> bool {
        self.members.remove(&v.bits)
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.n == self.n && self.members.contains(&v.bits)
    }

    pub fn contains_bits(&self, bits: u64) -> bool {
        self.members.contains(&bits)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.members.iter().map(move |&bits| Vertex { n: self.n, bits })
    }

    /// Members as raw masks, ascending. The canonical snapshot order.
    pub fn sorted_bits(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.members.iter().copied().collect();
        v.sort_unstable();
        v
    }

    fn check_same(&self, other: &VertexSet) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &VertexSet) -> Result<VertexSet> {
        self.check_same(other)?;
        let mut members = self.members.clone();
        members.extend(other.members.iter().copied());
        Ok(VertexSet { n: self.n, members })
    }

    pub fn intersection(&self, other: &VertexSet) -> Result<VertexSet> {
        self.check_same(other)?;
        let members = self
            .members
            .iter()
            .filter(|b| other.members.contains(b))
            .copied()
            .collect();
        Ok(VertexSet { n: self.n, members })
    }

    pub fn difference(&self, other: &VertexSet) -> Result<VertexSet> {
        self.check_same(other)?;
        let members = self
            .members
            .iter()
            .filter(|b| !other.members.contains(b))
            .copied()
            .collect();
        Ok(VertexSet { n: self.n, members })
    }

    pub fn is_subset(&self, other: &VertexSet) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.members.iter().all(|b| other.members.contains(b)))
    }

    /// Γ(U) = ∪_{u in U} Γ(u). Open: members of U adjacent to U stay in.
    pub fn neighbourhood(&self) -> VertexSet {
        let mut members = HashSet::with_capacity(self.members.len() * self.n as usize);
        for &u in &self.members {
            for i in 0..self.n {
                members.insert(u ^ (1u64 << i));
            }
        }
        VertexSet { n: self.n, members }
    }

    /// U ∪ Γ(U).
    pub fn closed_neighbourhood(&self) -> VertexSet {
        let mut out = self.neighbourhood();
        out.members.extend(self.members.iter().copied());
        out
    }

    /// How many members sit at distance exactly d from v.
    pub fn count_at_distance(&self, v: &Vertex, d: u32) -> Result<usize> {
        if v.n != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: v.n,
            });
        }
        Ok(self
            .members
            .iter()
            .filter(|&&b| (b ^ v.bits).count_ones() == d)
            .count())
    }

    /// The set { u XOR v : u in U }, i.e. U translated so v sits at the origin.
    pub fn translate(&self, v: &Vertex) -> Result<VertexSet> {
        if v.n != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: v.n,
            });
        }
        Ok(VertexSet {
            n: self.n,
            members: self.members.iter().map(|&b| b ^ v.bits).collect(),
        })
    }
}

/// A family of r-subsets of [n], each encoded as a weight-r bitmask.
/// Doubles as a set of weight-r vertices of Q_n.
#[derive(Clone, PartialEq, Eq)]
pub struct SetFamily {
    n: u32,
    r: u32,
    pub(crate) members: HashSet<u64>,
}

impl std::fmt::Debug for SetFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SetFamily(n={}, r={}, |F|={})",
            self.n,
            self.r,
            self.members.len()
        )
    }
}

impl SetFamily {
    pub fn new(n: u32, r: u32) -> Result<Self> {
        check_dimension(n)?;
        if r > n {
            return Err(Error::LayerOutOfRange { r, n });
        }
        Ok(SetFamily {
            n,
            r,
            members: HashSet::new(),
        })
    }

    pub fn from_masks(n: u32, r: u32, masks: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut f = SetFamily::new(n, r)?;
        for m in masks {
            f.insert(m)?;
        }
        Ok(f)
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn layer_index(&self) -> u32 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn cardinality(&self) -> BigUint {
        BigUint::from(self.members.len())
    }

    pub fn insert(&mut self, mask: u64) -> Result<bool> {
        check_mask(self.n, mask)?;
        let w = mask.count_ones();
        if w != self.r {
            return Err(Error::WrongSubsetSize {
                expected: self.r,
                actual: w,
            });
        }
        Ok(self.members.insert(mask))
    }

    pub fn contains(&self, mask: u64) -> bool {
        self.members.contains(&mask)
    }

    pub fn iter_masks(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied()
    }

    /// Members ascending by mask value, which is exactly colex order.
    pub fn sorted_members(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.members.iter().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn is_subfamily(&self, other: &SetFamily) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        if self.r != other.r {
            return Err(Error::SizeMismatch {
                left: self.r,
                right: other.r,
            });
        }
        Ok(self.members.iter().all(|m| other.members.contains(m)))
    }

    /// { [n] \ A : A in F }, a family of (n-r)-subsets.
    pub fn complement_family(&self) -> SetFamily {
        let full = full_mask(self.n);
        SetFamily {
            n: self.n,
            r: self.n - self.r,
            members: self.members.iter().map(|&m| m ^ full).collect(),
        }
    }

    pub fn to_vertex_set(&self) -> VertexSet {
        VertexSet {
            n: self.n,
            members: self.members.clone(),
        }
    }

    /// Reinterpret a set of vertices as a family; errors unless every member
    /// has weight r.
    pub fn from_vertex_set(set: &VertexSet, r: u32) -> Result<SetFamily> {
        let mut f = SetFamily::new(set.n, r)?;
        for &b in &set.members {
            f.insert(b)?;
        }
        Ok(f)
    }
}

/// The full layer [n]^(r), canonically enumerated in colex order.
pub fn layer(n: u32, r: u32) -> Result<SetFamily> {
    check_dimension(n)?;
    if r > n {
        return Err(Error::LayerOutOfRange { r, n });
    }
    let count = binomial(n as u64, r as u64);
    if count > BigUint::from(MATERIALIZE_LIMIT) {
        return Err(Error::ScaleLimit(format!(
            "layer({n}, {r}) has C({n}, {r}) = {count} members"
        )));
    }
    Ok(SetFamily {
        n,
        r,
        members: weighted_masks(n, r).collect(),
    })
}

/// Masks of weight r within [n], ascending (= colex order on r-subsets).
pub fn weighted_masks(n: u32, r: u32) -> WeightedMasks {
    debug_assert!(r <= n && n >= 1 && n <= 64);
    let first = if r == 0 { 0 } else { full_mask(r) };
    WeightedMasks {
        full: full_mask(n),
        next: Some(first),
    }
}

/// Gosper's hack iterator over same-weight masks.
pub struct WeightedMasks {
    full: u64,
    next: Option<u64>,
}

impl Iterator for WeightedMasks {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = gosper_next(cur, self.full);
        Some(cur)
    }
}

fn gosper_next(v: u64, full: u64) -> Option<u64> {
    if v == 0 {
        return None;
    }
    let u = v & v.wrapping_neg();
    let t = v.checked_add(u)?;
    let next = t | (((v ^ t) / u) >> 2);
    (next <= full).then_some(next)
}
