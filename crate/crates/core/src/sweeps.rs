//! Verification sweep engines: exhaustive oracles at small scale, seeded
//! random probes beyond, and the end-to-end stability grid. Every engine
//! returns a serializable report carrying witnesses, and every parallelizable
//! scan reduces canonically, so reports are byte-identical across thread
//! counts.

use num::rational::BigRational;
use num::{BigUint, One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::counting::{binomial, binomial_signed};
use crate::cube::{layer, Vertex, VertexSet};
use crate::error::{Error, Result};
use crate::exec::{reduce_range, ExecMode};
use crate::io::rational_string;
use crate::order::{
    colex_rank, colex_reversed_initial_segment, lex_initial_segment, lex_layer_masks,
};
use crate::shadow::{
    band_fraction, cleaned_factor_lhs, cleaned_factor_rhs, colex_segment_shadow_size,
    find_band_index, harper_closed_profile, harper_min_closed, kk_factor_monotone_check,
    lex_segment_upper_shadow_size, shadow, upper_shadow, weighted_average_identity,
};
use crate::stability::{
    minimal_hypothesis_p, place_far_centers, sharpness_example, stability_report, CenterMode,
    SearchClass, StabilityParams, StabilityReport,
};

/// The stability instances the end-to-end grid exercises: (n, k, p_int).
pub const STABILITY_GRID: [(u32, u32, u32); 4] = [(12, 2, 1), (16, 2, 1), (16, 2, 2), (20, 3, 1)];

fn small(x: &BigUint) -> u64 {
    u64::try_from(x).expect("value fits in u64 at sweep scale")
}

// Membership words for one seeded sample: the first draw picks a density,
// the rest decide each candidate, so sizes stratify across the whole range.
fn sample_words(rng: &mut ChaCha8Rng, bits: usize) -> (Vec<u64>, u64) {
    let q = rng.next_u32();
    let mut words = vec![0u64; bits.div_ceil(64).max(1)];
    let mut count = 0u64;
    for b in 0..bits {
        if rng.next_u32() < q {
            words[b / 64] |= 1u64 << (b % 64);
            count += 1;
        }
    }
    (words, count)
}

const COORD_MASKS: [u64; 6] = [
    0x5555555555555555,
    0x3333333333333333,
    0x0f0f0f0f0f0f0f0f,
    0x00ff00ff00ff00ff,
    0x0000ffff0000ffff,
    0x00000000ffffffff,
];

// Open neighbourhood of a set given as a bitset over vertex ids: coordinate
// i is an XOR-shift by 2^i, within words for i < 6, across words after.
pub(crate) fn bitset_neighbourhood(words: &[u64], n: u32) -> Vec<u64> {
    let mut out = vec![0u64; words.len()];
    for i in 0..n.min(6) {
        let s = 1u32 << i;
        let m = COORD_MASKS[i as usize];
        for (o, &w) in out.iter_mut().zip(words) {
            *o |= ((w & m) << s) | ((w >> s) & m);
        }
    }
    for i in 6..n {
        let d = 1usize << (i - 6);
        for j in 0..words.len() {
            out[j] |= words[j ^ d];
        }
    }
    out
}

/// One profile size: the brute-force minimum against the segment value.
#[derive(Clone, Debug, Serialize)]
pub struct HarperRow {
    pub l: u64,
    pub brute_min: u64,
    pub profile: u64,
    #[serde(serialize_with = "crate::io::ser::hex_mask")]
    pub witness: u64,
    pub matches: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarperSweep {
    pub n: u32,
    pub subsets: u64,
    pub rows: Vec<HarperRow>,
    pub all_match: bool,
}

/// Minimize |D ∪ Γ(D)| over every subset of the cube, per size, and compare
/// with the segment profile. The witness is the first minimizer in subset
/// order (a bitset over vertex ids).
pub fn harper_exhaustive(n: u32, mode: ExecMode) -> Result<HarperSweep> {
    if n == 0 || n > 4 {
        return Err(Error::ScaleLimit(format!(
            "exhaustive subset scan needs 1 <= n <= 4, got {n}"
        )));
    }
    let verts = 1usize << n;
    let closed_rows: Vec<u64> = (0..verts as u64)
        .map(|v| {
            let mut row = 1u64 << v;
            for i in 0..n {
                row |= 1u64 << (v ^ (1u64 << i));
            }
            row
        })
        .collect();
    let identity = vec![(u64::MAX, u64::MAX); verts + 1];
    let fold = |mut acc: Vec<(u64, u64)>, s: u64| {
        let mut closed = 0u64;
        let mut rest = s;
        while rest != 0 {
            closed |= closed_rows[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        let cand = (closed.count_ones() as u64, s);
        let slot = &mut acc[s.count_ones() as usize];
        if cand < *slot {
            *slot = cand;
        }
        acc
    };
    let reduce = |mut a: Vec<(u64, u64)>, b: Vec<(u64, u64)>| {
        for (x, y) in a.iter_mut().zip(b) {
            if y < *x {
                *x = y;
            }
        }
        a
    };
    let mins = reduce_range(mode, 0, 1u64 << verts, identity, fold, reduce);
    let mut rows = Vec::with_capacity(verts + 1);
    let mut all_match = true;
    for (l, &(brute_min, witness)) in mins.iter().enumerate() {
        let profile = small(&harper_min_closed(n, &BigUint::from(l))?);
        let matches = brute_min == profile;
        all_match &= matches;
        rows.push(HarperRow {
            l: l as u64,
            brute_min,
            profile,
            witness,
            matches,
        });
    }
    Ok(HarperSweep {
        n,
        subsets: 1u64 << verts,
        rows,
        all_match,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HarperSampledSweep {
    pub n: u32,
    pub samples: u64,
    pub violations: u64,
    pub first_violation: Option<u64>,
}

/// Seeded random subsets of the cube, each checked against the profile
/// table. Sample i is drawn from its own stream, so the report does not
/// depend on thread count.
pub fn harper_sampled(n: u32, samples: u64, seed: u64, mode: ExecMode) -> Result<HarperSampledSweep> {
    if n == 0 || n > 12 {
        return Err(Error::ScaleLimit(format!(
            "sampled subset scan needs 1 <= n <= 12, got {n}"
        )));
    }
    let profile = harper_closed_profile(n)?;
    let bits = 1usize << n;
    type St = (u64, Option<u64>);
    let fold = |acc: St, idx: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx + 1);
        let (words, l) = sample_words(&mut rng, bits);
        let nb = bitset_neighbourhood(&words, n);
        let closed: u64 = nb
            .iter()
            .zip(&words)
            .map(|(a, b)| u64::from((a | b).count_ones()))
            .sum();
        if closed < profile[l as usize] {
            (acc.0 + 1, Some(acc.1.map_or(idx, |f| f.min(idx))))
        } else {
            acc
        }
    };
    let reduce = |a: St, b: St| {
        let first = match (a.1, b.1) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        (a.0 + b.0, first)
    };
    let (violations, first_violation) = reduce_range(mode, 0, samples, (0, None), fold, reduce);
    Ok(HarperSampledSweep {
        n,
        samples,
        violations,
        first_violation,
    })
}

/// One family size on one layer: the true minimum shadow over all families
/// against the segment and the cascade formula.
#[derive(Clone, Debug, Serialize)]
pub struct KkRow {
    pub m: u64,
    pub min_shadow: u64,
    pub segment_shadow: u64,
    pub cascade: u64,
    #[serde(serialize_with = "crate::io::ser::hex_mask")]
    pub witness: u64,
    pub kk_ok: bool,
    pub lym_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KkSweep {
    pub n: u32,
    pub r: u32,
    pub members: u64,
    pub families: u64,
    pub rows: Vec<KkRow>,
    pub all_ok: bool,
}

/// Enumerate every family on [n]^(r) (member bits in colex order, so a
/// prefix mask is exactly the colex initial segment) and minimize |∂F| per
/// size. Checks the segment attains each minimum, the cascade formula agrees,
/// and the shadow bound m·C(n,r-1)/C(n,r) holds for the minima.
pub fn layer_family_sweep(n: u32, r: u32, mode: ExecMode) -> Result<KkSweep> {
    if r == 0 || r > n {
        return Err(Error::InvalidParameter(format!(
            "layer sweep needs 1 <= r <= n, got r = {r}, n = {n}"
        )));
    }
    let members = layer(n, r)?.sorted_members();
    let t = members.len();
    if t > 20 {
        return Err(Error::ScaleLimit(format!(
            "family enumeration needs C(n,r) <= 20, got {t}"
        )));
    }
    // With C(n,r) <= 20 the shadow space C(n,r-1) never exceeds 190 = 3 words.
    let mut member_shadows = vec![[0u64; 4]; t];
    for (i, &m) in members.iter().enumerate() {
        let mut rest = m;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            let rank = small(&colex_rank(m ^ bit)) as usize;
            member_shadows[i][rank / 64] |= 1u64 << (rank % 64);
            rest ^= bit;
        }
    }
    let shadow_of = |fam: u64| {
        let mut sh = [0u64; 4];
        let mut rest = fam;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            for w in 0..4 {
                sh[w] |= member_shadows[i][w];
            }
            rest &= rest - 1;
        }
        sh.iter().map(|w| u64::from(w.count_ones())).sum::<u64>()
    };
    let identity = vec![(u64::MAX, u64::MAX); t + 1];
    let fold = |mut acc: Vec<(u64, u64)>, fam: u64| {
        let cand = (shadow_of(fam), fam);
        let slot = &mut acc[fam.count_ones() as usize];
        if cand < *slot {
            *slot = cand;
        }
        acc
    };
    let reduce = |mut a: Vec<(u64, u64)>, b: Vec<(u64, u64)>| {
        for (x, y) in a.iter_mut().zip(b) {
            if y < *x {
                *x = y;
            }
        }
        a
    };
    let mins = reduce_range(mode, 0, 1u64 << t, identity, fold, reduce);
    let layer_size = binomial(n as u64, r as u64);
    let below = binomial(n as u64, r as u64 - 1);
    let mut rows = Vec::with_capacity(t + 1);
    let mut all_ok = true;
    for (m, &(min_shadow, witness)) in mins.iter().enumerate() {
        let prefix = if m == 0 { 0 } else { (1u64 << m) - 1 };
        let segment_shadow = shadow_of(prefix);
        let cascade = small(&colex_segment_shadow_size(r, &BigUint::from(m))?);
        let kk_ok = min_shadow == segment_shadow && segment_shadow == cascade;
        let lym_ok =
            BigUint::from(min_shadow) * &layer_size >= BigUint::from(m as u64) * &below;
        all_ok &= kk_ok && lym_ok;
        rows.push(KkRow {
            m: m as u64,
            min_shadow,
            segment_shadow,
            cascade,
            witness,
            kk_ok,
            lym_ok,
        });
    }
    Ok(KkSweep {
        n,
        r,
        members: t as u64,
        families: 1u64 << t,
        rows,
        all_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LymSweep {
    pub n: u32,
    pub r: u32,
    pub samples: u64,
    pub lower_violations: u64,
    pub upper_violations: u64,
    pub first_violation: Option<u64>,
}

/// Seeded random families on [n]^(r), each checked against both local LYM
/// bounds with exact cross-multiplied integer comparisons.
pub fn lym_sampled(n: u32, r: u32, samples: u64, seed: u64, mode: ExecMode) -> Result<LymSweep> {
    if n == 0 || n > 10 {
        return Err(Error::ScaleLimit(format!(
            "sampled families need n <= 10, got {n}"
        )));
    }
    if r == 0 || r >= n {
        return Err(Error::InvalidParameter(format!(
            "both shadow bounds need 1 <= r <= n-1, got r = {r}, n = {n}"
        )));
    }
    let members = layer(n, r)?.sorted_members();
    let t = members.len();
    let mut down_ranks = vec![Vec::new(); t];
    let mut up_ranks = vec![Vec::new(); t];
    for (i, &m) in members.iter().enumerate() {
        let mut rest = m;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            down_ranks[i].push(small(&colex_rank(m ^ bit)) as u32);
            rest ^= bit;
        }
        for b in 0..n {
            let bit = 1u64 << b;
            if m & bit == 0 {
                up_ranks[i].push(small(&colex_rank(m | bit)) as u32);
            }
        }
    }
    let layer_size = small(&binomial(n as u64, r as u64));
    let below = small(&binomial(n as u64, r as u64 - 1));
    let above = small(&binomial(n as u64, r as u64 + 1));
    type St = (u64, u64, Option<u64>);
    let fold = |acc: St, idx: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx + 1);
        let q = rng.next_u32();
        // Layer spaces at n <= 10 are at most C(10,5) = 252 bits = 4 words.
        let mut down = [0u64; 4];
        let mut up = [0u64; 4];
        let mut m_count = 0u64;
        for i in 0..t {
            if rng.next_u32() < q {
                m_count += 1;
                for &rk in &down_ranks[i] {
                    down[(rk / 64) as usize] |= 1u64 << (rk % 64);
                }
                for &rk in &up_ranks[i] {
                    up[(rk / 64) as usize] |= 1u64 << (rk % 64);
                }
            }
        }
        let shadow: u64 = down.iter().map(|w| u64::from(w.count_ones())).sum();
        let upper: u64 = up.iter().map(|w| u64::from(w.count_ones())).sum();
        let lower_ok = (shadow as u128) * (layer_size as u128) >= (m_count as u128) * (below as u128);
        let upper_ok = (upper as u128) * (layer_size as u128) >= (m_count as u128) * (above as u128);
        if lower_ok && upper_ok {
            acc
        } else {
            (
                acc.0 + u64::from(!lower_ok),
                acc.1 + u64::from(!upper_ok),
                Some(acc.2.map_or(idx, |f| f.min(idx))),
            )
        }
    };
    let reduce = |a: St, b: St| {
        let first = match (a.2, b.2) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        (a.0 + b.0, a.1 + b.1, first)
    };
    let (lower_violations, upper_violations, first_violation) =
        reduce_range(mode, 0, samples, (0, 0, None), fold, reduce);
    Ok(LymSweep {
        n,
        r,
        samples,
        lower_violations,
        upper_violations,
        first_violation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Corollary2Sweep {
    pub n: u32,
    pub k: u32,
    pub checked: u64,
    pub violations: u64,
    pub min_slack: String,
    #[serde(serialize_with = "crate::io::ser::hex_mask")]
    pub witness: u64,
}

/// Exhaustive |Γ(B)| >= |B| n/(k+1) - 2 C(n,k) over every B with
/// |B| <= C(n,k). Slack is tracked as an exact rational.
pub fn corollary2_exhaustive(n: u32, k: u32, mode: ExecMode) -> Result<Corollary2Sweep> {
    if n == 0 || n > 4 {
        return Err(Error::ScaleLimit(format!(
            "exhaustive subset scan needs 1 <= n <= 4, got {n}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::LayerOutOfRange { r: k, n });
    }
    let verts = 1usize << n;
    let open_rows: Vec<u64> = (0..verts as u64)
        .map(|v| {
            let mut row = 0u64;
            for i in 0..n {
                row |= 1u64 << (v ^ (1u64 << i));
            }
            row
        })
        .collect();
    let cap = small(&binomial(n as u64, k as u64));
    let base = 2 * (cap as i128) * (k as i128 + 1);
    // (checked, violations, min scaled slack, witness, first violation)
    type St = (u64, u64, i128, u64, Option<u64>);
    let fold = |acc: St, s: u64| {
        let m = u64::from(s.count_ones());
        if m > cap {
            return acc;
        }
        let mut open = 0u64;
        let mut rest = s;
        while rest != 0 {
            open |= open_rows[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        let gamma = u64::from(open.count_ones()) as i128;
        // slack * (k+1) = |Γ(B)|(k+1) - m n + 2 C(n,k)(k+1)
        let scaled = gamma * (k as i128 + 1) - (m as i128) * (n as i128) + base;
        let (mut checked, mut violations, mut min_slack, mut witness, mut first) = acc;
        checked += 1;
        if (scaled, s) < (min_slack, witness) {
            (min_slack, witness) = (scaled, s);
        }
        if scaled < 0 {
            violations += 1;
            first = Some(first.map_or(s, |f| f.min(s)));
        }
        (checked, violations, min_slack, witness, first)
    };
    let reduce = |a: St, b: St| {
        let (min_slack, witness) = if (a.2, a.3) <= (b.2, b.3) {
            (a.2, a.3)
        } else {
            (b.2, b.3)
        };
        let first = match (a.4, b.4) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        (a.0 + b.0, a.1 + b.1, min_slack, witness, first)
    };
    let identity = (0u64, 0u64, i128::MAX, u64::MAX, None);
    let (checked, violations, min_slack, witness, _first) =
        reduce_range(mode, 0, 1u64 << verts, identity, fold, reduce);
    let slack = BigRational::new(min_slack.into(), (k as i64 + 1).into());
    Ok(Corollary2Sweep {
        n,
        k,
        checked,
        violations,
        min_slack: rational_string(&slack),
        witness,
    })
}

/// One band of one layer: every size checked against the banded growth
/// factor, with equality required at the band's right endpoint.
#[derive(Clone, Debug, Serialize)]
pub struct RefinedBandRow {
    pub n: u32,
    pub r: u32,
    pub i: u32,
    pub lo: String,
    pub hi: String,
    pub sizes: u64,
    pub bound_ok: bool,
    pub endpoint_equality: bool,
    pub dominates_lym: bool,
    pub cascade_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinedSweep {
    pub n_max: u32,
    pub rows: Vec<RefinedBandRow>,
    pub all_ok: bool,
}

/// Walk every lex initial segment of every layer for n <= n_max, maintaining
/// its upper shadow incrementally, and check the banded lower bound, endpoint
/// equality, domination over plain LYM, and the cascade formula.
pub fn refined_band_sweep(n_max: u32) -> Result<RefinedSweep> {
    if n_max > 12 {
        return Err(Error::ScaleLimit(format!(
            "band sweep needs n <= 12, got {n_max}"
        )));
    }
    let mut rows: Vec<RefinedBandRow> = Vec::new();
    let mut all_ok = true;
    for n in 1..=n_max {
        for r in 0..n {
            let up_space = small(&binomial(n as u64, r as u64 + 1)) as usize;
            let mut seen = vec![0u64; up_space.div_ceil(64).max(1)];
            let mut shadow = 0u64;
            let layer_r = small(&binomial(n as u64, r as u64));
            let layer_r1 = up_space as u64;
            let mut m_big = BigUint::zero();
            let mut cur: Option<(RefinedBandRow, u64, u64)> = None; // row, num, den
            for mask in lex_layer_masks(n, r) {
                for b in 0..n {
                    let bit = 1u64 << b;
                    if mask & bit == 0 {
                        let rank = small(&colex_rank(mask | bit));
                        let (w, o) = ((rank / 64) as usize, rank % 64);
                        if seen[w] >> o & 1 == 0 {
                            seen[w] |= 1 << o;
                            shadow += 1;
                        }
                    }
                }
                m_big += BigUint::one();
                let m = small(&m_big);
                let band = find_band_index(n, r, &m_big)?;
                if cur.as_ref().map(|(row, _, _)| row.i) != Some(band.i) {
                    if let Some((row, _, _)) = cur.take() {
                        all_ok &= row.bound_ok
                            && row.endpoint_equality
                            && row.dominates_lym
                            && row.cascade_ok;
                        rows.push(row);
                    }
                    let num = small(
                        &(binomial(n as u64, r as u64 + 1)
                            - binomial_signed(n as i64 - band.i as i64, r as u64 + 1)),
                    );
                    let den = small(
                        &(binomial(n as u64, r as u64)
                            - binomial_signed(n as i64 - band.i as i64, r as u64)),
                    );
                    let dominates =
                        (num as u128) * (layer_r as u128) >= (den as u128) * (layer_r1 as u128);
                    cur = Some((
                        RefinedBandRow {
                            n,
                            r,
                            i: band.i,
                            lo: band.lo.to_string(),
                            hi: band.hi.to_string(),
                            sizes: 0,
                            bound_ok: true,
                            endpoint_equality: true,
                            dominates_lym: dominates,
                            cascade_ok: true,
                        },
                        num,
                        den,
                    ));
                }
                let (row, num, den) = cur.as_mut().expect("band row was just opened");
                row.sizes += 1;
                row.bound_ok &=
                    (shadow as u128) * (*den as u128) >= (m as u128) * (*num as u128);
                if m_big == band.hi {
                    row.endpoint_equality &=
                        (shadow as u128) * (*den as u128) == (m as u128) * (*num as u128);
                }
                row.cascade_ok &=
                    shadow == small(&lex_segment_upper_shadow_size(n, r, &m_big)?);
            }
            if let Some((row, _, _)) = cur.take() {
                all_ok &= row.bound_ok
                    && row.endpoint_equality
                    && row.dominates_lym
                    && row.cascade_ok;
                rows.push(row);
            }
        }
    }
    Ok(RefinedSweep {
        n_max,
        rows,
        all_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneRow {
    pub n: u32,
    pub r: u32,
    pub i_max: u32,
    pub factors_ok: bool,
    pub weighted_identity: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneSweep {
    pub rows: Vec<MonotoneRow>,
    pub all_ok: bool,
}

/// Band factors non-increasing and eventually constant, plus the exact
/// weighted-average identity, over the whole (n, r) grid.
pub fn monotone_sweep(n_max: u32, r_max: u32) -> Result<MonotoneSweep> {
    let mut rows = Vec::new();
    let mut all_ok = true;
    for n in 2..=n_max {
        for r in 1..=r_max.min(n - 1) {
            let i_max = n - r + 3;
            let factors_ok = kk_factor_monotone_check(n, r, i_max)?;
            let weighted_identity = (1..=n + 2).all(|i| weighted_average_identity(n, r, i));
            all_ok &= factors_ok && weighted_identity;
            rows.push(MonotoneRow {
                n,
                r,
                i_max,
                factors_ok,
                weighted_identity,
            });
        }
    }
    Ok(MonotoneSweep { rows, all_ok })
}

#[derive(Clone, Debug, Serialize)]
pub struct CleanedRow {
    pub n: u32,
    pub r: u32,
    pub checked: u64,
    pub all_ok: bool,
    pub min_slack: String,
    pub argmin_a: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct CleanedSweep {
    pub rows: Vec<CleanedRow>,
    pub all_ok: bool,
}

/// Exact growth-factor cleanup bound over the grid: for every integer cut a,
/// the banded ratio dominates ((n-r)/(r+1))(1 + (1-c)/r).
pub fn cleaned_factor_sweep(n_max: u32, r_max: u32) -> Result<CleanedSweep> {
    let mut rows = Vec::new();
    let mut all_ok = true;
    for n in 2..=n_max {
        for r in 1..=r_max.min(n - 1) {
            let mut checked = 0u64;
            let mut row_ok = true;
            let mut min_slack: Option<(BigRational, u32)> = None;
            for a in r..n {
                let lhs = cleaned_factor_lhs(n, r, a)?;
                let c = band_fraction(n, r, a)?;
                let rhs = cleaned_factor_rhs(n, r, &c)?;
                let slack = lhs - rhs;
                row_ok &= !slack.is_negative();
                checked += 1;
                if min_slack.as_ref().is_none_or(|(s, _)| slack < *s) {
                    min_slack = Some((slack, a));
                }
            }
            let (slack, argmin_a) = min_slack.expect("every (n, r) admits a cut");
            all_ok &= row_ok;
            rows.push(CleanedRow {
                n,
                r,
                checked,
                all_ok: row_ok,
                min_slack: rational_string(&slack),
                argmin_a,
            });
        }
    }
    Ok(CleanedSweep { rows, all_ok })
}

#[derive(Clone, Debug, Serialize)]
pub struct DualitySweep {
    pub n: u32,
    pub r: u32,
    pub samples: u64,
    pub violations: u64,
    pub first_violation: Option<u64>,
}

/// Seeded random families, each checked for ∂⁺(F) = (∂(F^c))^c by building
/// both sides as explicit families.
pub fn duality_sampled(n: u32, r: u32, samples: u64, seed: u64, mode: ExecMode) -> Result<DualitySweep> {
    if n == 0 || n > 8 {
        return Err(Error::ScaleLimit(format!(
            "sampled duality needs n <= 8, got {n}"
        )));
    }
    if r >= n {
        return Err(Error::InvalidParameter(format!(
            "upper shadow needs r <= n-1, got r = {r}, n = {n}"
        )));
    }
    let members = layer(n, r)?.sorted_members();
    type St = (u64, Option<u64>);
    let fold = |acc: St, idx: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx + 1);
        let q = rng.next_u32();
        let picked = members.iter().copied().filter(|_| rng.next_u32() < q);
        let fam = crate::cube::SetFamily::from_masks(n, r, picked).expect("layer members");
        let direct = upper_shadow(&fam).expect("r < n");
        let via = shadow(&fam.complement_family())
            .expect("complement layer >= 1")
            .complement_family();
        if direct == via {
            acc
        } else {
            (acc.0 + 1, Some(acc.1.map_or(idx, |f| f.min(idx))))
        }
    };
    let reduce = |a: St, b: St| {
        let first = match (a.1, b.1) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        (a.0 + b.0, first)
    };
    let (violations, first_violation) = reduce_range(mode, 0, samples, (0, None), fold, reduce);
    Ok(DualitySweep {
        n,
        r,
        samples,
        violations,
        first_violation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentDualityReport {
    pub n: u32,
    pub checked: u64,
    pub all_ok: bool,
    pub first_mismatch: Option<String>,
}

/// Complementing a lex initial segment of [n]^(r) must give the reversed
/// alphabet colex initial segment of [n]^(n-r), for every r and every size.
pub fn segment_duality_exhaustive(n: u32) -> Result<SegmentDualityReport> {
    if n == 0 || n > 10 {
        return Err(Error::ScaleLimit(format!(
            "segment duality sweep needs n <= 10, got {n}"
        )));
    }
    let mut checked = 0u64;
    let mut all_ok = true;
    let mut first_mismatch = None;
    for r in 0..=n {
        let total = binomial(n as u64, r as u64);
        let mut m = BigUint::zero();
        while m <= total {
            let lex = lex_initial_segment(n, r, &m)?;
            let reversed = colex_reversed_initial_segment(n, n - r, &m)?;
            checked += 1;
            if lex.complement_family() != reversed {
                all_ok = false;
                if first_mismatch.is_none() {
                    first_mismatch = Some(format!("r = {r}, m = {m}"));
                }
            }
            m += BigUint::one();
        }
    }
    Ok(SegmentDualityReport {
        n,
        checked,
        all_ok,
        first_mismatch,
    })
}

/// Build the sharpness instance at (n, k, p_int) around the origin, with
/// greedily packed far centers and the least p that satisfies the
/// neighbourhood budget, so the hypothesis holds exactly.
pub fn sharpness_instance(n: u32, k: u32, p_int: u32) -> Result<(VertexSet, StabilityParams)> {
    let w = Vertex::origin(n)?;
    let far = place_far_centers(n, k, p_int, &w)?;
    let a = sharpness_example(n, k, p_int, &w, &far)?;
    let p = minimal_hypothesis_p(&a, k)?;
    if p <= BigRational::zero() {
        return Err(Error::Infeasible(format!(
            "instance ({n}, {k}, {p_int}) needs no positive p"
        )));
    }
    let params = StabilityParams::for_instance(n, k, p)?;
    Ok((a, params))
}

#[derive(Clone, Debug, Serialize)]
pub struct GridEntry {
    pub n: u32,
    pub k: u32,
    pub p_int: u32,
    pub p: String,
    pub expected_outliers: String,
    pub outliers_exact: bool,
    pub center_recovered: bool,
    pub report: StabilityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityGridSweep {
    pub entries: Vec<GridEntry>,
    pub all_ok: bool,
}

/// Run the full pipeline on every instance of the stability grid with exact
/// center recovery, checking the construction's outlier count on the nose.
pub fn stability_grid_sweep(exec: ExecMode) -> Result<StabilityGridSweep> {
    let mut entries = Vec::new();
    let mut all_ok = true;
    for (n, k, p_int) in STABILITY_GRID {
        let (a, params) = sharpness_instance(n, k, p_int)?;
        let report = stability_report(
            &a,
            &params,
            SearchClass::Singletons,
            CenterMode::Exact,
            exec,
        )?;
        let expected =
            BigUint::from(p_int) * binomial(n as u64, k as u64 - 1);
        let outliers_exact = report.outliers == expected;
        let center_recovered = report.center == 0 && report.center_certified;
        all_ok &= report.hypothesis_ok
            && report.satisfied
            && report.accounting_ok
            && report.claim1_ok
            && outliers_exact
            && center_recovered;
        entries.push(GridEntry {
            n,
            k,
            p_int,
            p: rational_string(&params.p),
            expected_outliers: expected.to_string(),
            outliers_exact,
            center_recovered,
            report,
        });
    }
    Ok(StabilityGridSweep { entries, all_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn bitset_neighbourhood_matches_set_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=9u32 {
            for _ in 0..20 {
                let bits = 1usize << n;
                let mut words = vec![0u64; bits.div_ceil(64).max(1)];
                let mut picks = Vec::new();
                for b in 0..bits as u64 {
                    if rng.gen_bool(0.3) {
                        words[(b / 64) as usize] |= 1u64 << (b % 64);
                        picks.push(b);
                    }
                }
                let set = VertexSet::from_bits(n, picks).unwrap();
                let direct = set.neighbourhood();
                let via = bitset_neighbourhood(&words, n);
                let mut got = Vec::new();
                for (wi, &w) in via.iter().enumerate() {
                    for o in 0..64 {
                        if w >> o & 1 == 1 {
                            got.push((wi * 64 + o) as u64);
                        }
                    }
                }
                assert_eq!(VertexSet::from_bits(n, got).unwrap(), direct, "n={n}");
            }
        }
    }

    #[test]
    fn harper_exhaustive_matches_profile_and_witnesses_check_out() {
        for n in [3u32, 4] {
            let sweep = harper_exhaustive(n, ExecMode::Auto).unwrap();
            assert!(sweep.all_match, "n={n}");
            assert_eq!(sweep.rows.len(), (1 << n) + 1);
            for row in &sweep.rows {
                // Recompute the witness's closed size through the set API.
                let picks =
                    (0..1u64 << n).filter(|v| row.witness >> v & 1 == 1);
                let d = VertexSet::from_bits(n, picks).unwrap();
                assert_eq!(d.len() as u64, row.l);
                assert_eq!(
                    d.closed_neighbourhood().len() as u64,
                    row.brute_min,
                    "n={n} l={}",
                    row.l
                );
            }
        }
        assert!(harper_exhaustive(5, ExecMode::Auto).is_err());
    }

    #[test]
    fn harper_sampled_finds_no_counterexample() {
        let sweep = harper_sampled(6, 2000, 1, ExecMode::Auto).unwrap();
        assert_eq!(sweep.violations, 0);
        assert_eq!(sweep.first_violation, None);
        // Same bytes in sequential mode.
        let seq = harper_sampled(6, 2000, 1, ExecMode::Sequential).unwrap();
        assert_eq!(
            serde_json::to_string(&sweep).unwrap(),
            serde_json::to_string(&seq).unwrap()
        );
    }

    #[test]
    fn layer_sweep_5_3_matches_known_minimum() {
        let sweep = layer_family_sweep(5, 3, ExecMode::Auto).unwrap();
        assert!(sweep.all_ok);
        // 4 triples minimize at 6; the bound m C(n,r-1)/C(n,r) only gives 4.
        assert_eq!(sweep.rows[4].min_shadow, 6);
        assert_eq!(sweep.rows[10].min_shadow, 10);
        let seq = layer_family_sweep(5, 3, ExecMode::Sequential).unwrap();
        assert_eq!(
            serde_json::to_string(&sweep).unwrap(),
            serde_json::to_string(&seq).unwrap()
        );
        assert!(layer_family_sweep(7, 3, ExecMode::Auto).is_err()); // 35 members
    }

    #[test]
    fn lym_sampled_finds_no_counterexample() {
        let sweep = lym_sampled(6, 3, 5000, 3, ExecMode::Auto).unwrap();
        assert_eq!((sweep.lower_violations, sweep.upper_violations), (0, 0));
        assert!(sweep.first_violation.is_none());
    }

    #[test]
    fn corollary2_spot_run() {
        for k in [1u32, 2] {
            let sweep = corollary2_exhaustive(4, k, ExecMode::Auto).unwrap();
            assert_eq!(sweep.violations, 0, "k={k}");
            // Slack is a nonnegative rational.
            assert!(!sweep.min_slack.starts_with('-'), "k={k}");
        }
    }

    #[test]
    fn refined_band_sweep_small() {
        let sweep = refined_band_sweep(8).unwrap();
        assert!(sweep.all_ok);
        // Band structure of [6]^(2): i = 1 covers sizes 1..=5.
        let row = sweep
            .rows
            .iter()
            .find(|row| (row.n, row.r, row.i) == (6, 2, 1))
            .unwrap();
        assert_eq!((row.lo.as_str(), row.hi.as_str(), row.sizes), ("1", "5", 5));
        assert!(refined_band_sweep(13).is_err());
    }

    #[test]
    fn monotone_and_cleaned_sweeps_hold() {
        assert!(monotone_sweep(14, 6).unwrap().all_ok);
        let cleaned = cleaned_factor_sweep(12, 3).unwrap();
        assert!(cleaned.all_ok);
        let row = cleaned
            .rows
            .iter()
            .find(|row| (row.n, row.r) == (10, 1))
            .unwrap();
        assert_eq!((row.min_slack.as_str(), row.argmin_a), ("1/20", 1));
    }

    #[test]
    fn duality_checks_hold() {
        let sweep = duality_sampled(7, 3, 2000, 5, ExecMode::Auto).unwrap();
        assert_eq!(sweep.violations, 0);
        let seg = segment_duality_exhaustive(6).unwrap();
        assert!(seg.all_ok);
        assert_eq!(seg.checked, (0..=6u64).map(|r| small(&binomial(6, r)) + 1).sum::<u64>());
    }

    #[test]
    fn sharpness_instance_12_2_1_has_exact_minimal_p() {
        let (a, params) = sharpness_instance(12, 2, 1).unwrap();
        assert_eq!(a.cardinality(), BigUint::from(66u32));
        // |Γ(A)| = 297 against C(12,3) = 220 over C(12,2) = 66.
        assert_eq!(a.neighbourhood().cardinality(), BigUint::from(297u32));
        assert_eq!(rational_string(&params.p), "7/6");
        assert!(crate::stability::hypothesis_check(&a, &params).unwrap());
    }

    #[test]
    fn stability_pipeline_first_grid_instance() {
        let (a, params) = sharpness_instance(12, 2, 1).unwrap();
        let report = stability_report(
            &a,
            &params,
            SearchClass::Singletons,
            CenterMode::Exact,
            ExecMode::Auto,
        )
        .unwrap();
        assert!(report.hypothesis_ok);
        assert!(report.satisfied);
        assert!(report.accounting_ok);
        assert!(report.claim1_ok);
        assert_eq!(report.center, 0);
        assert_eq!(report.outliers, BigUint::from(12u32));
        assert_eq!(report.overlap, BigUint::from(54u32));
    }
}
