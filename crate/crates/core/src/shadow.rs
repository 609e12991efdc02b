//! Shadows, the isoperimetric profile, and every lower bound the toolkit
//! certifies. All bound values are exact rationals; the measured quantities
//! are exact integers. Nothing here rounds.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{BigUint, One, Signed, Zero};
use serde::Serialize;

use crate::counting::{binomial, binomial_signed, ratio, rational_from_uint};
use crate::cube::{SetFamily, Vertex, VertexSet};
use crate::error::{Error, Result};
use crate::order::simplicial_initial_segment;

/// ∂F: every (r-1)-subset obtained by deleting one element of a member.
pub fn shadow(f: &SetFamily) -> Result<SetFamily> {
    let r = f.layer_index();
    if r == 0 {
        return Err(Error::InvalidParameter(
            "shadow requires a layer index of at least 1".into(),
        ));
    }
    let mut out = SetFamily::new(f.dimension(), r - 1)?;
    for m in f.iter_masks() {
        let mut rest = m;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            out.insert(m ^ bit)?;
            rest ^= bit;
        }
    }
    Ok(out)
}

/// ∂⁺F: every (r+1)-subset obtained by adding one element of [n].
pub fn upper_shadow(f: &SetFamily) -> Result<SetFamily> {
    let (n, r) = (f.dimension(), f.layer_index());
    if r >= n {
        return Err(Error::InvalidParameter(
            "upper shadow requires a layer index below n".into(),
        ));
    }
    let mut out = SetFamily::new(n, r + 1)?;
    for m in f.iter_masks() {
        for i in 0..n {
            let bit = 1u64 << i;
            if m & bit == 0 {
                out.insert(m | bit)?;
            }
        }
    }
    Ok(out)
}

/// |∂F| for the colex initial segment of size m on layer r, by the exact
/// cascade formula: with m = Σ_j C(a_j, j) greedy, the shadow has size
/// Σ_j C(a_j, j-1). Independent of n.
pub fn colex_segment_shadow_size(r: u32, m: &BigUint) -> Result<BigUint> {
    if r == 0 {
        return Err(Error::InvalidParameter(
            "shadow requires a layer index of at least 1".into(),
        ));
    }
    let mut rem = m.clone();
    let mut total = BigUint::zero();
    let mut j = r as u64;
    let mut upper: Option<u64> = None; // previous a_j, exclusive bound
    while !rem.is_zero() {
        debug_assert!(j >= 1, "greedy cascade exhausted");
        // Largest a with C(a, j) <= rem (and a below the previous term).
        let mut a = j; // C(j, j) = 1 <= rem
        loop {
            let next = a + 1;
            if upper.is_some_and(|u| next >= u) {
                break;
            }
            if binomial(next, j) > rem {
                break;
            }
            a = next;
        }
        rem -= binomial(a, j);
        total += binomial(a, j - 1);
        upper = Some(a);
        j -= 1;
    }
    Ok(total)
}

/// |∂⁺F| for the lex initial segment of size m on [n]^(r): by complement
/// duality this is the cascade shadow size on layer n-r.
pub fn lex_segment_upper_shadow_size(n: u32, r: u32, m: &BigUint) -> Result<BigUint> {
    if r >= n {
        return Err(Error::InvalidParameter(
            "upper shadow requires a layer index below n".into(),
        ));
    }
    if m.is_zero() {
        return Ok(BigUint::zero());
    }
    colex_segment_shadow_size(n - r, m)
}

/// |S_l ∪ Γ(S_l)|: the exact isoperimetric profile value at l, computed from
/// the simplicial segment itself.
pub fn harper_min_closed(n: u32, l: &BigUint) -> Result<BigUint> {
    let seg = simplicial_initial_segment(n, l)?;
    Ok(seg.closed_neighbourhood().cardinality())
}

/// The whole isoperimetric profile at once: profile[l] = |S_l ∪ Γ(S_l)|,
/// computed incrementally along the size-then-lex enumeration with a closed
/// bitset, one route; `harper_min_closed` builds each segment afresh, the
/// other. They must agree everywhere.
pub fn harper_closed_profile(n: u32) -> Result<Vec<u64>> {
    if n > 20 {
        return Err(Error::ScaleLimit(format!(
            "profile table needs n <= 20, got {n}"
        )));
    }
    let total = 1usize << n;
    let mut seen = vec![0u64; total.div_ceil(64)];
    let mut count = 0u64;
    let mut profile = Vec::with_capacity(total + 1);
    profile.push(0);
    let mut grab = move |seen: &mut [u64], t: u64| {
        let (w, b) = ((t / 64) as usize, t % 64);
        if seen[w] >> b & 1 == 0 {
            seen[w] |= 1 << b;
            count += 1;
        }
        count
    };
    for w in 0..=n {
        for v in crate::order::lex_layer_masks(n, w) {
            let mut c = grab(&mut seen, v);
            for i in 0..n {
                c = grab(&mut seen, v ^ (1u64 << i));
            }
            profile.push(c);
        }
    }
    debug_assert_eq!(profile.len(), total + 1);
    Ok(profile)
}

/// m · C(n, r-1) / C(n, r): the local LYM lower bound on |∂F|.
pub fn lym_shadow_bound(n: u32, r: u32, m: &BigUint) -> Result<BigRational> {
    check_family_size(n, r, m)?;
    if r == 0 {
        return Err(Error::InvalidParameter(
            "shadow bound requires a layer index of at least 1".into(),
        ));
    }
    Ok(rational_from_uint(m)
        * ratio(binomial(n as u64, r as u64 - 1), binomial(n as u64, r as u64)))
}

/// m · C(n, r+1) / C(n, r): the local LYM lower bound on |∂⁺F|.
pub fn lym_upper_bound(n: u32, r: u32, m: &BigUint) -> Result<BigRational> {
    check_family_size(n, r, m)?;
    if r >= n {
        return Err(Error::InvalidParameter(
            "upper shadow bound requires a layer index below n".into(),
        ));
    }
    Ok(rational_from_uint(m)
        * ratio(binomial(n as u64, r as u64 + 1), binomial(n as u64, r as u64)))
}

/// |B| · n/(k+1) - 2·C(n, k): a closed-form lower bound on |Γ(B)| for any
/// B with |B| ≤ C(n, k). May be negative, in which case it is vacuous.
pub fn harper_gamma_lower(n: u32, k: u32, m: &BigUint) -> Result<BigRational> {
    if k > n {
        return Err(Error::LayerOutOfRange { r: k, n });
    }
    let cap = binomial(n as u64, k as u64);
    if *m > cap {
        return Err(Error::InvalidParameter(format!(
            "bound needs |B| <= C({n}, {k}) = {cap}, got {m}"
        )));
    }
    let first = rational_from_uint(m) * ratio(BigUint::from(n), BigUint::from(k + 1));
    let second = rational_from_uint(&(cap * BigUint::from(2u32)));
    Ok(first - second)
}

fn check_family_size(n: u32, r: u32, m: &BigUint) -> Result<()> {
    if r > n {
        return Err(Error::LayerOutOfRange { r, n });
    }
    let total = binomial(n as u64, r as u64);
    if *m > total {
        return Err(Error::InvalidParameter(format!(
            "family size {m} exceeds C({n}, {r}) = {total}"
        )));
    }
    Ok(())
}

/// Which band a family size falls into. Band i covers sizes in
/// [ C(n,r) - C(n-i+1,r) + 1 , C(n,r) - C(n-i,r) ]; the bands partition
/// [1, C(n,r)].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BandIndex {
    pub i: u32,
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub lo: BigUint,
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub hi: BigUint,
}

fn band_hi(n: u32, r: u32, i: u32) -> BigUint {
    binomial(n as u64, r as u64) - binomial_signed(n as i64 - i as i64, r as u64)
}

/// Locate m's band by descending search from the last (stabilized) band.
pub fn find_band_index(n: u32, r: u32, m: &BigUint) -> Result<BandIndex> {
    if r > n {
        return Err(Error::LayerOutOfRange { r, n });
    }
    let total = binomial(n as u64, r as u64);
    if m.is_zero() || *m > total {
        return Err(Error::InvalidParameter(format!(
            "band index needs 1 <= m <= C({n}, {r}) = {total}, got {m}"
        )));
    }
    let top = if r == 0 { n + 1 } else { n - r + 1 };
    let mut i = top;
    while i > 1 && *m <= band_hi(n, r, i - 1) {
        i -= 1;
    }
    Ok(BandIndex {
        i,
        lo: band_hi(n, r, i - 1) + BigUint::one(),
        hi: band_hi(n, r, i),
    })
}

/// The band-i growth factor (C(n,r+1) - C(n-i,r+1)) / (C(n,r) - C(n-i,r)).
pub fn kk_refined_factor(n: u32, r: u32, i: u32) -> Result<BigRational> {
    if r >= n {
        return Err(Error::InvalidParameter(
            "refined factor requires a layer index below n".into(),
        ));
    }
    if i == 0 {
        return Err(Error::InvalidParameter("band index starts at 1".into()));
    }
    let den = band_hi(n, r, i);
    if den.is_zero() {
        return Err(Error::InvalidParameter(format!(
            "band {i} on [{n}]^({r}) is empty"
        )));
    }
    let num = binomial(n as u64, r as u64 + 1)
        - binomial_signed(n as i64 - i as i64, r as u64 + 1);
    Ok(ratio(num, den))
}

/// Refined per-band lower bound on |∂⁺F| for |F| = m in band i:
/// m · (C(n,r+1) - C(n-i,r+1)) / (C(n,r) - C(n-i,r)).
pub fn kk_refined_bound(n: u32, r: u32, i: u32, m: &BigUint) -> Result<BigRational> {
    let band = find_band_index(n, r, m)?;
    if band.i != i {
        return Err(Error::BandMismatch {
            m: m.to_string(),
            i,
        });
    }
    Ok(rational_from_uint(m) * kk_refined_factor(n, r, i)?)
}

/// The band factors are non-increasing in i and stabilize to
/// C(n,r+1)/C(n,r) from i = n-r+1 on.
pub fn kk_factor_monotone_check(n: u32, r: u32, i_max: u32) -> Result<bool> {
    if r >= n {
        return Err(Error::InvalidParameter(
            "refined factor requires a layer index below n".into(),
        ));
    }
    let stable = ratio(
        binomial(n as u64, r as u64 + 1),
        binomial(n as u64, r as u64),
    );
    let mut prev: Option<BigRational> = None;
    for i in 1..=i_max {
        let f = kk_refined_factor(n, r, i)?;
        if let Some(p) = &prev {
            if f > *p {
                return Ok(false);
            }
        }
        if i >= n - r + 1 && f != stable {
            return Ok(false);
        }
        prev = Some(f);
    }
    Ok(true)
}

/// Σ_{j=0}^{i-1} C(n-j-1, r) = C(n, r+1) - C(n-i, r+1), exactly.
pub fn weighted_average_identity(n: u32, r: u32, i: u32) -> bool {
    let mut lhs = BigUint::zero();
    for j in 0..i as i64 {
        lhs += binomial_signed(n as i64 - j - 1, r as u64);
    }
    let rhs = binomial(n as u64, r as u64 + 1)
        - binomial_signed(n as i64 - i as i64, r as u64 + 1);
    lhs == rhs
}

/// c = (C(n,r) - C(a,r)) / C(n,r), the filled fraction at cut a.
pub fn band_fraction(n: u32, r: u32, a: u32) -> Result<BigRational> {
    if a > n {
        return Err(Error::InvalidParameter(format!("cut {a} exceeds n = {n}")));
    }
    let total = binomial(n as u64, r as u64);
    if total.is_zero() {
        return Err(Error::LayerOutOfRange { r, n });
    }
    Ok(ratio(total.clone() - binomial(a as u64, r as u64), total))
}

/// Exact left side (C(n,r+1) - C(a,r+1)) / (C(n,r) - C(a,r)) of the cleaned
/// growth-factor bound, evaluated at an integer cut r <= a < n.
pub fn cleaned_factor_lhs(n: u32, r: u32, a: u32) -> Result<BigRational> {
    if r == 0 || r >= n {
        return Err(Error::InvalidParameter(
            "cleaned factor requires 1 <= r < n".into(),
        ));
    }
    if a < r || a >= n {
        return Err(Error::InvalidParameter(format!(
            "cut must satisfy r <= a < n, got a = {a}"
        )));
    }
    let num = binomial(n as u64, r as u64 + 1) - binomial(a as u64, r as u64 + 1);
    let den = binomial(n as u64, r as u64) - binomial(a as u64, r as u64);
    Ok(ratio(num, den))
}

/// Cleaned right side ((n-r)/(r+1)) · (1 + (1-c)/r) for c in (0,1).
pub fn cleaned_factor_rhs(n: u32, r: u32, c: &BigRational) -> Result<BigRational> {
    if r == 0 || r >= n {
        return Err(Error::InvalidParameter(
            "cleaned factor requires 1 <= r < n".into(),
        ));
    }
    let zero = BigRational::zero();
    let one = BigRational::one();
    if *c <= zero || *c >= one {
        return Err(Error::InvalidParameter(format!(
            "fraction c must lie strictly inside (0, 1), got {c}"
        )));
    }
    let lead = ratio(BigUint::from(n - r), BigUint::from(r + 1));
    let boost = one.clone() + (one - c.clone()) / rational_from_uint(&BigUint::from(r));
    Ok(lead * boost)
}

/// An exact measured value against an exact rational bound.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub lhs: BigUint,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub rhs: BigRational,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub slack: BigRational,
    pub holds: bool,
    pub params: BTreeMap<String, String>,
}

impl BoundReport {
    pub fn new(lhs: BigUint, rhs: BigRational, params: BTreeMap<String, String>) -> Self {
        let slack = rational_from_uint(&lhs) - rhs.clone();
        let holds = !slack.is_negative();
        BoundReport {
            lhs,
            rhs,
            slack,
            holds,
            params,
        }
    }
}

/// |S| · (n/(k+1)) · (1 + 1/(8k)): the per-subset uniqueness budget.
pub fn uniqueness_threshold(n: u32, k: u32, s: &BigUint) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "uniqueness threshold requires k >= 1".into(),
        ));
    }
    let num = BigUint::from(n) * BigUint::from(8 * k as u64 + 1);
    let den = BigUint::from(k as u64 + 1) * BigUint::from(8 * k as u64);
    Ok(rational_from_uint(s) * ratio(num, den))
}

/// Whether the few-unique-neighbours hypothesis was verified or assumed.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status")]
pub enum HypothesisStatus {
    /// Every nonempty subset was checked (|J| <= 20).
    VerifiedExhaustive,
    /// Every singleton was checked; larger subsets are assumed.
    VerifiedSingletons,
    /// A checked subset breaks the budget; the conclusion is not guaranteed.
    Violated {
        subset: Vec<u64>,
        unique_count: u64,
        threshold: String,
    },
}

/// Two-layer expansion report around v: compares |J ∩ Γ^{j+2}(v)| with both
/// constant forms of the lower bound, and exposes the intermediate upper
/// shadow bound on the translated layer.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub n: u32,
    pub k: u32,
    pub j: u32,
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub layer_count: BigUint,
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub next_count: BigUint,
    /// rhs = layer_count · n / (64 k^3)
    pub conclusion: BoundReport,
    /// rhs = layer_count · n / (16 k (k+1)^2), the tighter intermediate form
    pub conclusion_tight: BoundReport,
    /// |∂⁺(J ∩ Γ^j(v))| vs layer_count · (n/(k+1)) (1 + 1/(4k))
    pub upper_shadow_bound: BoundReport,
    pub hypothesis: HypothesisStatus,
    /// 1 <= layer_count <= C(n, k)/2, the size window of the statement.
    pub range_ok: bool,
    /// j <= 2k, the depth window of the statement.
    pub depth_ok: bool,
}

fn unique_neighbour_count(sub: &VertexSet, whole: &VertexSet) -> Result<u64> {
    let rest = whole.difference(sub)?;
    Ok(sub
        .neighbourhood()
        .difference(&rest.neighbourhood())?
        .len() as u64)
}

/// Check the uniqueness budget on singletons of J (always) and on every
/// nonempty subset when |J| <= 20.
fn verify_few_uniques(j_set: &VertexSet, n: u32, k: u32) -> Result<HypothesisStatus> {
    let members = j_set.sorted_bits();
    let check = |bits: &[u64]| -> Result<Option<HypothesisStatus>> {
        let sub = VertexSet::from_bits(j_set.dimension(), bits.iter().copied())?;
        let unique = unique_neighbour_count(&sub, j_set)?;
        let threshold = uniqueness_threshold(n, k, &BigUint::from(bits.len()))?;
        if rational_from_uint(&BigUint::from(unique)) > threshold {
            return Ok(Some(HypothesisStatus::Violated {
                subset: bits.to_vec(),
                unique_count: unique,
                threshold: crate::io::rational_string(&threshold),
            }));
        }
        Ok(None)
    };
    if members.len() <= 20 {
        for pick in 1u32..(1u32 << members.len()) {
            let bits: Vec<u64> = (0..members.len())
                .filter(|&i| pick >> i & 1 == 1)
                .map(|i| members[i])
                .collect();
            if let Some(v) = check(&bits)? {
                return Ok(v);
            }
        }
        Ok(HypothesisStatus::VerifiedExhaustive)
    } else {
        for &b in &members {
            if let Some(v) = check(&[b])? {
                return Ok(v);
            }
        }
        Ok(HypothesisStatus::VerifiedSingletons)
    }
}

pub fn expansion_check(
    j_set: &VertexSet,
    v: &Vertex,
    j: u32,
    k: u32,
) -> Result<ExpansionReport> {
    let n = j_set.dimension();
    if v.dimension() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: v.dimension(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("expansion requires k >= 1".into()));
    }
    let layer_part = VertexSet::from_bits(
        n,
        j_set
            .iter()
            .filter(|u| (u.bits() ^ v.bits()).count_ones() == j)
            .map(|u| u.bits()),
    )?;
    let layer_count = layer_part.cardinality();
    let next_count = BigUint::from(j_set.count_at_distance(v, j + 2)?);

    let nk = |den: BigUint| -> BigRational {
        rational_from_uint(&layer_count) * ratio(BigUint::from(n), den)
    };
    let k64 = k as u64;
    let rough = nk(BigUint::from(64 * k64 * k64 * k64));
    let tight = nk(BigUint::from(16 * k64 * (k64 + 1) * (k64 + 1)));

    let mut params = BTreeMap::new();
    params.insert("n".into(), n.to_string());
    params.insert("k".into(), k.to_string());
    params.insert("j".into(), j.to_string());

    // Upper shadow of the translated layer part, when the layer exists.
    let ush = if j < n && !layer_part.is_empty() {
        let family =
            SetFamily::from_vertex_set(&layer_part.translate(v)?, j)?;
        upper_shadow(&family)?.cardinality()
    } else {
        BigUint::zero()
    };
    let ush_rhs = rational_from_uint(&layer_count)
        * ratio(BigUint::from(n), BigUint::from(k64 + 1))
        * ratio(BigUint::from(4 * k64 + 1), BigUint::from(4 * k64));

    let half_layer = ratio(binomial(n as u64, k64), BigUint::from(2u32));
    let range_ok = !layer_count.is_zero()
        && rational_from_uint(&layer_count) <= half_layer;

    Ok(ExpansionReport {
        n,
        k,
        j,
        layer_count: layer_count.clone(),
        next_count: next_count.clone(),
        conclusion: BoundReport::new(next_count.clone(), rough, params.clone()),
        conclusion_tight: BoundReport::new(next_count, tight, params.clone()),
        upper_shadow_bound: BoundReport::new(ush, ush_rhs, params),
        hypothesis: verify_few_uniques(j_set, n, k)?,
        range_ok,
        depth_ok: j <= 2 * k,
    })
}
