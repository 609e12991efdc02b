//! The constructive stability pipeline: exact parameter bookkeeping, the
//! few-unique-neighbours deletion algorithm, center recovery, the sharpness
//! construction, and the end-to-end report tying them together.

use std::collections::HashMap;

use num::rational::BigRational;
use num::{BigUint, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::counting::{binomial, rational_from_uint, rational_int};
use crate::cube::{full_mask, Vertex, VertexSet, MAX_DIMENSION};
use crate::error::{Error, Result};
use crate::exec::{reduce_range, ExecMode};
use crate::order::colex_initial_segment;
use crate::shadow::uniqueness_threshold;

/// k <= log n / (3 log log n). Advisory only: it gates nothing, it is merely
/// reported, so floating point is acceptable here.
pub fn log_condition_holds(n: u32, k: u32) -> bool {
    let ln_n = (n as f64).ln();
    if ln_n <= 1.0 {
        return false;
    }
    (k as f64) <= ln_n / (3.0 * ln_n.ln())
}

/// Exact parameters of one stability instance. The two derived constants are
/// private so they can never be set by hand.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityParams {
    pub n: u32,
    pub k: u32,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub p: BigRational,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub rho: BigRational,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub kappa: BigRational,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub delta: BigRational,
    #[serde(rename = "C", serialize_with = "crate::io::ser::rational")]
    c_const: BigRational,
    #[serde(rename = "D", serialize_with = "crate::io::ser::rational")]
    d_const: BigRational,
    pub log_condition_ok: bool,
}

impl StabilityParams {
    pub fn new(
        n: u32,
        k: u32,
        p: BigRational,
        rho: BigRational,
        kappa: BigRational,
        delta: BigRational,
    ) -> Result<Self> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::DimensionOutOfRange {
                n,
                max: MAX_DIMENSION,
            });
        }
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "k must satisfy 1 <= k <= n, got k = {k}, n = {n}"
            )));
        }
        let zero = BigRational::zero();
        if p <= zero || rho <= zero || kappa <= zero || delta <= zero {
            return Err(Error::InvalidParameter(
                "p, rho, kappa, delta must all be positive".into(),
            ));
        }
        if p < rho {
            return Err(Error::InvalidParameter(format!("p = {p} is below rho = {rho}")));
        }
        if rational_int(k as i64) > kappa.clone() * p.clone() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds kappa * p = {}",
                kappa.clone() * p.clone()
            )));
        }
        let pk3n = p.clone() * rational_int((k as i64).pow(3)) / rational_int(n as i64);
        if pk3n > delta {
            return Err(Error::InvalidParameter(format!(
                "p k^3 / n = {pk3n} exceeds delta = {delta}"
            )));
        }
        let c_const =
            rational_int(24) + rational_int(33) / rho.clone() + rational_int(32) * kappa.clone();
        let d_const = rational_int(16) + rational_int(32) / rho.clone();
        Ok(StabilityParams {
            n,
            k,
            p,
            rho,
            kappa,
            delta,
            c_const,
            d_const,
            log_condition_ok: log_condition_holds(n, k),
        })
    }

    /// Tightest admissible parameters for a given (n, k, p):
    /// rho = min(1, p), kappa = k/p, delta = p k^3 / n.
    pub fn for_instance(n: u32, k: u32, p: BigRational) -> Result<Self> {
        let one = BigRational::one();
        let rho = if p < one { p.clone() } else { one };
        if p <= BigRational::zero() {
            return Err(Error::InvalidParameter("p must be positive".into()));
        }
        if n == 0 {
            return Err(Error::DimensionOutOfRange {
                n,
                max: MAX_DIMENSION,
            });
        }
        let kappa = rational_int(k as i64) / p.clone();
        let delta = p.clone() * rational_int((k as i64).pow(3)) / rational_int(n as i64);
        StabilityParams::new(n, k, p, rho, kappa, delta)
    }

    /// 24 + 33/rho + 32 kappa.
    pub fn c_const(&self) -> &BigRational {
        &self.c_const
    }

    /// 16 + 32/rho.
    pub fn d_const(&self) -> &BigRational {
        &self.d_const
    }

    /// C * C(n, k-1) * p * k, the overlap error budget.
    pub fn error_term(&self) -> BigRational {
        self.c_const.clone() * self.side_terms()
    }

    /// D * C(n, k-1) * p * k, the deletion budget.
    pub fn discard_budget(&self) -> BigRational {
        self.d_const.clone() * self.side_terms()
    }

    fn side_terms(&self) -> BigRational {
        rational_from_uint(&binomial(self.n as u64, self.k as u64 - 1))
            * self.p.clone()
            * rational_int(self.k as i64)
    }

    /// C(n, k) - C * C(n, k-1) * p * k, the promised overlap.
    pub fn conclusion_rhs(&self) -> BigRational {
        rational_from_uint(&binomial(self.n as u64, self.k as u64)) - self.error_term()
    }

    /// C(n, k) - D * C(n, k-1) * p * k, the promised survivor count.
    pub fn claim1_min_size(&self) -> BigRational {
        rational_from_uint(&binomial(self.n as u64, self.k as u64)) - self.discard_budget()
    }

    /// C(n, k+1) + C(n, k) * p, the neighbourhood budget of the hypothesis.
    pub fn gamma_budget(&self) -> BigRational {
        rational_from_uint(&binomial(self.n as u64, self.k as u64 + 1))
            + rational_from_uint(&binomial(self.n as u64, self.k as u64)) * self.p.clone()
    }

    /// (65 k^3 / n) * C(n, k), the trigger size of the cleaning step.
    pub fn cleaning_threshold(&self) -> BigRational {
        rational_from_uint(&binomial(self.n as u64, self.k as u64))
            * rational_int(65 * (self.k as i64).pow(3))
            / rational_int(self.n as i64)
    }

    /// |S| * (n/(k+1)) * (1 + 1/(8k)) for |S| = s.
    pub fn uniqueness_threshold(&self, s: &BigUint) -> BigRational {
        uniqueness_threshold(self.n, self.k, s).expect("k >= 1 is enforced at construction")
    }
}

/// |A| = C(n, k) and |Γ(A)| <= C(n, k+1) + C(n, k) p, both exact.
pub fn hypothesis_check(a: &VertexSet, params: &StabilityParams) -> Result<bool> {
    if a.dimension() != params.n {
        return Err(Error::DimensionMismatch {
            left: params.n,
            right: a.dimension(),
        });
    }
    let size_ok = a.cardinality() == binomial(params.n as u64, params.k as u64);
    let gamma = a.neighbourhood().cardinality();
    Ok(size_ok && rational_from_uint(&gamma) <= params.gamma_budget())
}

/// The least p for which the neighbourhood budget holds:
/// (|Γ(A)| - C(n, k+1)) / C(n, k). May be zero or negative.
pub fn minimal_hypothesis_p(a: &VertexSet, k: u32) -> Result<BigRational> {
    let n = a.dimension();
    if k > n {
        return Err(Error::LayerOutOfRange { r: k, n });
    }
    let gamma = rational_from_uint(&a.neighbourhood().cardinality());
    let upper = rational_from_uint(&binomial(n as u64, k as u64 + 1));
    let layer = rational_from_uint(&binomial(n as u64, k as u64));
    Ok((gamma - upper) / layer)
}

/// |Γ(S) \ Γ(B \ S)|: neighbours seen from S only. Requires S ⊆ B.
pub fn uniqueness_count(s: &VertexSet, b: &VertexSet) -> Result<BigUint> {
    if !s.is_subset(b)? {
        return Err(Error::NotASubset);
    }
    let rest = b.difference(s)?;
    Ok(s.neighbourhood()
        .difference(&rest.neighbourhood())?
        .cardinality())
}

/// Which candidate sets the deletion algorithm scans for violations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SearchClass {
    Singletons,
    SingletonsAndPairs,
    /// Every nonempty subset; only feasible for |A| <= 20.
    Exhaustive,
}

/// One deletion: the removed set, its unique-neighbour count at removal
/// time, the budget it broke, and how many vertices survived it.
#[derive(Clone, Debug, Serialize)]
pub struct DiscardStep {
    #[serde(serialize_with = "crate::io::ser::hex_masks")]
    pub removed: Vec<u64>,
    pub unique_count: u64,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub threshold: BigRational,
    pub remaining: u64,
}

// uniq > s * (n/(k+1)) (1 + 1/(8k))  <=>  uniq * 8k(k+1) > s * n * (8k+1),
// compared in integers. Counts stay far below 2^64, so u128 never overflows.
fn breaks_budget(uniq: u64, s: u64, n: u32, k: u32) -> bool {
    let k = k as u128;
    (uniq as u128) * 8 * k * (k + 1) > (s as u128) * (n as u128) * (8 * k + 1)
}

// cover[w] = number of members adjacent to w, for every w in Γ(B).
fn cover_map(members: &[u64], n: u32) -> HashMap<u64, u32> {
    let mut cover = HashMap::with_capacity(members.len() * n as usize);
    for &v in members {
        for i in 0..n {
            *cover.entry(v ^ (1u64 << i)).or_insert(0) += 1;
        }
    }
    cover
}

// First singleton {v} (ascending mask) whose unique-neighbour count breaks
// the budget. w is unique to v exactly when v is w's only member neighbour.
fn first_singleton_violator(
    members: &[u64],
    cover: &HashMap<u64, u32>,
    n: u32,
    k: u32,
) -> Option<(Vec<u64>, u64)> {
    for &v in members {
        let mut uniq = 0u64;
        for i in 0..n {
            if cover[&(v ^ (1u64 << i))] == 1 {
                uniq += 1;
            }
        }
        if breaks_budget(uniq, 1, n, k) {
            return Some((vec![v], uniq));
        }
    }
    None
}

// First pair {u, v} (ascending by sorted member position) breaking the
// budget. w is unique to the pair exactly when its member neighbours all lie
// inside the pair, i.e. cover[w] equals w's adjacency count within the pair.
fn first_pair_violator(
    members: &[u64],
    cover: &HashMap<u64, u32>,
    n: u32,
    k: u32,
) -> Option<(Vec<u64>, u64)> {
    for (i, &u) in members.iter().enumerate() {
        for &v in &members[i + 1..] {
            let mut uniq = 0u64;
            for b in 0..n {
                let w = u ^ (1u64 << b);
                let within = 1 + u32::from((w ^ v).count_ones() == 1);
                if cover[&w] == within {
                    uniq += 1;
                }
            }
            for b in 0..n {
                let w = v ^ (1u64 << b);
                if (w ^ u).count_ones() == 1 {
                    continue; // already counted from u's side
                }
                let within = 1 + u32::from(w == u);
                if cover[&w] == within {
                    uniq += 1;
                }
            }
            if breaks_budget(uniq, 2, n, k) {
                return Some((vec![u, v], uniq));
            }
        }
    }
    None
}

// First violating subset in ascending subset-mask order over the sorted
// members. counts[s] = #{w : 0 != adj(w) ⊆ s} via a subset-sum transform.
fn first_exhaustive_violator(members: &[u64], n: u32, k: u32) -> Option<(Vec<u64>, u64)> {
    let t = members.len();
    debug_assert!(t <= 20);
    if t == 0 {
        return None;
    }
    let mut adj: HashMap<u64, u32> = HashMap::new();
    for (idx, &v) in members.iter().enumerate() {
        for i in 0..n {
            *adj.entry(v ^ (1u64 << i)).or_insert(0) |= 1u32 << idx;
        }
    }
    let mut counts = vec![0u64; 1usize << t];
    for &m in adj.values() {
        counts[m as usize] += 1;
    }
    for i in 0..t {
        for s in 0..counts.len() {
            if s >> i & 1 == 1 {
                counts[s] += counts[s ^ (1 << i)];
            }
        }
    }
    for s in 1u32..(1u32 << t) as u32 {
        let uniq = counts[s as usize];
        if breaks_budget(uniq, u64::from(s.count_ones()), n, k) {
            let bits = (0..t).filter(|&i| s >> i & 1 == 1).map(|i| members[i]).collect();
            return Some((bits, uniq));
        }
    }
    None
}

/// Repeatedly delete the first candidate set whose unique-neighbour count
/// exceeds its budget, until no candidate in the class violates. Returns the
/// surviving set and the deletion trace.
pub fn discard_algorithm(
    a: &VertexSet,
    params: &StabilityParams,
    class: SearchClass,
) -> Result<(VertexSet, Vec<DiscardStep>)> {
    if a.dimension() != params.n {
        return Err(Error::DimensionMismatch {
            left: params.n,
            right: a.dimension(),
        });
    }
    if class == SearchClass::Exhaustive && a.len() > 20 {
        return Err(Error::ScaleLimit(format!(
            "exhaustive subset search needs |A| <= 20, got {}",
            a.len()
        )));
    }
    let (n, k) = (params.n, params.k);
    let mut b = a.clone();
    let mut steps = Vec::new();
    loop {
        let members = b.sorted_bits();
        let found = match class {
            SearchClass::Singletons => {
                let cover = cover_map(&members, n);
                first_singleton_violator(&members, &cover, n, k)
            }
            SearchClass::SingletonsAndPairs => {
                let cover = cover_map(&members, n);
                first_singleton_violator(&members, &cover, n, k)
                    .or_else(|| first_pair_violator(&members, &cover, n, k))
            }
            SearchClass::Exhaustive => first_exhaustive_violator(&members, n, k),
        };
        let Some((bits, uniq)) = found else { break };
        let threshold = params.uniqueness_threshold(&BigUint::from(bits.len()));
        for &bit in &bits {
            b.remove(&Vertex::new(n, bit)?);
        }
        steps.push(DiscardStep {
            removed: bits,
            unique_count: uniq,
            threshold,
            remaining: b.len() as u64,
        });
    }
    Ok((b, steps))
}

/// How the center vertex is searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterMode {
    /// Scan all 2^n candidates; requires n <= 24.
    Exact,
    /// Coordinate-flip hill climbing from sampled members shifted to
    /// distance k; deterministic for a fixed seed, not certified optimal.
    Heuristic { seeds: u32, seed: u64 },
}

/// A center candidate with its layer-k overlap.
#[derive(Clone, Debug)]
pub struct CenterResult {
    pub center: Vertex,
    pub overlap: u64,
    pub certified: bool,
}

fn better(a: (u64, u64), b: (u64, u64)) -> (u64, u64) {
    // Max count, ties to the smaller mask: a total order, so the reduction
    // is associative and commutative.
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn overlap_at(members: &[u64], w: u64, k: u32) -> u64 {
    members.iter().filter(|&&m| (m ^ w).count_ones() == k).count() as u64
}

fn shift_to_distance(n: u32, m: u64, k: u32) -> u64 {
    // Flip the k lowest set bits; if fewer, flip the lowest clear bits too.
    let mut x = m;
    let mut left = k;
    for i in 0..n {
        if left == 0 {
            break;
        }
        if m >> i & 1 == 1 {
            x ^= 1u64 << i;
            left -= 1;
        }
    }
    for i in 0..n {
        if left == 0 {
            break;
        }
        if m >> i & 1 == 0 {
            x |= 1u64 << i;
            left -= 1;
        }
    }
    x
}

fn hill_climb(n: u32, members: &[u64], k: u32, start: u64) -> (u64, u64) {
    let mut w = start;
    let mut c = overlap_at(members, w, k);
    loop {
        let mut improved = false;
        for i in 0..n {
            let cand = w ^ (1u64 << i);
            let cc = overlap_at(members, cand, k);
            if cc > c {
                (w, c) = (cand, cc);
                improved = true;
                break;
            }
        }
        if improved {
            continue;
        }
        // Single flips stalled: try double flips before giving up.
        'outer: for i in 0..n {
            for j in i + 1..n {
                let cand = w ^ (1u64 << i) ^ (1u64 << j);
                let cc = overlap_at(members, cand, k);
                if cc > c {
                    (w, c) = (cand, cc);
                    improved = true;
                    break 'outer;
                }
            }
        }
        if !improved {
            return (c, w);
        }
    }
}

/// Maximize |Γ^k(w) ∩ A| over centers w.
pub fn best_center(a: &VertexSet, k: u32, mode: CenterMode, exec: ExecMode) -> Result<CenterResult> {
    let n = a.dimension();
    if k > n {
        return Err(Error::LayerOutOfRange { r: k, n });
    }
    let members = a.sorted_bits();
    match mode {
        CenterMode::Exact => {
            if n > 24 {
                return Err(Error::ScaleLimit(format!(
                    "exact center scan needs n <= 24, got {n}"
                )));
            }
            let fold = |acc: (u64, u64), w: u64| better(acc, (overlap_at(&members, w, k), w));
            let (count, mask) = reduce_range(
                exec,
                0,
                1u64 << n,
                (0, u64::MAX),
                fold,
                |x, y| better(x, y),
            );
            Ok(CenterResult {
                center: Vertex::new(n, mask)?,
                overlap: count,
                certified: true,
            })
        }
        CenterMode::Heuristic { seeds, seed } => {
            if members.is_empty() {
                return Err(Error::InvalidParameter(
                    "cannot search a center for an empty set".into(),
                ));
            }
            if seeds == 0 {
                return Err(Error::InvalidParameter("need at least one seed".into()));
            }
            let mut best = (0u64, u64::MAX);
            for s in 0..seeds {
                // One independent, thread-count-free stream per seed index.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64 + 1);
                let pick = members[rng.gen_range(0..members.len())];
                let (c, w) = hill_climb(n, &members, k, shift_to_distance(n, pick, k));
                best = better(best, (c, w));
            }
            Ok(CenterResult {
                center: Vertex::new(n, best.1)?,
                overlap: best.0,
                certified: false,
            })
        }
    }
}

/// The sharpness construction: the colex-first C(n,k) - p_int * C(n,k-1)
/// vertices of Γ^k(w) plus the full (k-1)-spheres of p_int far centers.
/// Spacing >= 2k+3 keeps all pieces and their neighbourhoods disjoint.
pub fn sharpness_example(
    n: u32,
    k: u32,
    p_int: u32,
    w: &Vertex,
    far_centers: &[Vertex],
) -> Result<VertexSet> {
    if w.dimension() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: w.dimension(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k <= n, got k = {k}"
        )));
    }
    if far_centers.len() != p_int as usize {
        return Err(Error::InvalidParameter(format!(
            "expected {p_int} far centers, got {}",
            far_centers.len()
        )));
    }
    let mut all = vec![*w];
    all.extend_from_slice(far_centers);
    for (i, u) in all.iter().enumerate() {
        for v in &all[i + 1..] {
            let d = u.distance(v)?;
            if d < 2 * k + 3 {
                return Err(Error::Infeasible(format!(
                    "centers {:#x} and {:#x} are at distance {d} < {}",
                    u.bits(),
                    v.bits(),
                    2 * k + 3
                )));
            }
        }
    }
    let total = binomial(n as u64, k as u64);
    let drop = binomial(n as u64, k as u64 - 1) * BigUint::from(p_int);
    if drop > total {
        return Err(Error::Infeasible(format!(
            "{p_int} * C({n}, {}) exceeds C({n}, {k})",
            k - 1
        )));
    }
    let kept = total.clone() - drop;
    let mut a = VertexSet::empty(n)?;
    for m in colex_initial_segment(n, k, &kept)?.iter_masks() {
        a.insert(Vertex::new(n, m ^ w.bits())?)?;
    }
    for u in far_centers {
        for v in u.kth_neighbourhood(k - 1)?.iter() {
            if !a.insert(v)? {
                return Err(Error::Infeasible(
                    "sphere pieces overlap despite the spacing check".into(),
                ));
            }
        }
    }
    debug_assert_eq!(a.cardinality(), total);
    Ok(a)
}

/// Greedy far-center packing: scan masks downward from all-ones, keeping
/// every vertex at distance >= 2k+3 from w and all earlier picks.
pub fn place_far_centers(n: u32, k: u32, count: u32, w: &Vertex) -> Result<Vec<Vertex>> {
    if w.dimension() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: w.dimension(),
        });
    }
    let mut placed: Vec<Vertex> = Vec::new();
    if count == 0 {
        return Ok(placed);
    }
    let need = 2 * k + 3;
    let mut mask = full_mask(n);
    loop {
        let v = Vertex::new(n, mask)?;
        let ok = v.distance(w)? >= need
            && placed
                .iter()
                .map(|u| v.distance(u).expect("same dimension"))
                .all(|d| d >= need);
        if ok {
            placed.push(v);
            if placed.len() == count as usize {
                return Ok(placed);
            }
        }
        if mask == 0 {
            return Err(Error::Infeasible(format!(
                "cannot place {count} centers at pairwise distance {need} in dimension {n}"
            )));
        }
        mask -= 1;
    }
}

/// Everything the pipeline certifies about one instance.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub n: u32,
    pub k: u32,
    pub params: StabilityParams,
    pub search_class: SearchClass,
    pub hypothesis_ok: bool,
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub gamma_size: BigUint,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub gamma_budget: BigRational,
    /// hypothesis_ok and the advisory log condition; when false the theorem
    /// promises nothing and `satisfied` is merely observational.
    pub theorem_applies: bool,
    #[serde(serialize_with = "crate::io::ser::hex_mask")]
    pub center: u64,
    pub center_certified: bool,
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub overlap: BigUint,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub conclusion_rhs: BigRational,
    pub satisfied: bool,
    #[serde(serialize_with = "crate::io::ser::biguint")]
    pub outliers: BigUint,
    pub retained: u64,
    #[serde(serialize_with = "crate::io::ser::rational")]
    pub claim1_min_size: BigRational,
    pub claim1_ok: bool,
    /// |Γ(A)| = Σ_i |Γ(L_i) \ Γ(B_{i-1} \ L_i)| + |Γ(B_m)|, replayed from
    /// scratch with the direct uniqueness counter.
    pub accounting_ok: bool,
    pub trace: Vec<DiscardStep>,
}

///// Run the full pipeline: hypothesis check, deletion algorithm with
/// accounting replay, center search, and the final overlap verdict.
pub fn stability_report(
    a: &VertexSet,
    params: &StabilityParams,
    class: SearchClass,
    mode: CenterMode,
    exec: ExecMode,
) -> Result<StabilityReport> {
    if a.dimension() != params.n {
        return Err(Error::DimensionMismatch {
            left: params.n,
            right: a.dimension(),
        });
    }
    let total = binomial(params.n as u64, params.k as u64);
    if a.cardinality() != total {
        return Err(Error::InvalidParameter(format!(
            "instance needs |A| = C({}, {}) = {total}, got {}",
            params.n,
            params.k,
            a.cardinality()
        )));
    }
    let gamma_size = a.neighbourhood().cardinality();
    let gamma_budget = params.gamma_budget();
    let hypothesis_ok = rational_from_uint(&gamma_size) <= gamma_budget;

    let (b, trace) = discard_algorithm(a, params, class)?;

    // Accounting replay, independent of the deletion engine's bookkeeping.
    let mut cur = a.clone();
    let mut seen = BigUint::zero();
    let mut steps_ok = true;
    for step in &trace {
        let s = VertexSet::from_bits(params.n, step.removed.iter().copied())?;
        let uniq = uniqueness_count(&s, &cur)?;
        if uniq != BigUint::from(step.unique_count) {
            steps_ok = false;
        }
        seen += uniq;
        cur = cur.difference(&s)?;
    }
    seen += cur.neighbourhood().cardinality();
    let accounting_ok = steps_ok && seen == gamma_size && cur == b;

    let center = best_center(a, params.k, mode, exec)?;
    let overlap = BigUint::from(center.overlap);
    let conclusion_rhs = params.conclusion_rhs();
    let satisfied = rational_from_uint(&overlap) >= conclusion_rhs;
    let claim1_min_size = params.claim1_min_size();
    let claim1_ok = rational_from_uint(&b.cardinality()) >= claim1_min_size;

    Ok(StabilityReport {
        n: params.n,
        k: params.k,
        params: params.clone(),
        search_class: class,
        hypothesis_ok,
        gamma_size,
        gamma_budget,
        theorem_applies: hypothesis_ok && params.log_condition_ok,
        center: center.center.bits(),
        center_certified: center.certified,
        overlap: overlap.clone(),
        conclusion_rhs,
        satisfied,
        outliers: total - overlap,
        retained: b.len() as u64,
        claim1_min_size,
        claim1_ok,
        accounting_ok,
        trace,
    })
}

/// B split by the least j <= k with |B ∩ Γ^{2j}(v)| >= threshold; vertices
/// admitting no such j land in `unassigned`.
#[derive(Clone, Debug)]
pub struct HPartition {
    pub threshold: BigRational,
    pub classes: Vec<VertexSet>,
    pub unassigned: VertexSet,
}

/// Partition with the theorem's own threshold |B| - C * C(n,k-1) * p * k.
pub fn h_partition(b: &VertexSet, params: &StabilityParams) -> Result<HPartition> {
    if b.dimension() != params.n {
        return Err(Error::DimensionMismatch {
            left: params.n,
            right: b.dimension(),
        });
    }
    let threshold = rational_from_uint(&b.cardinality()) - params.error_term();
    h_partition_with_threshold(b, params.k, &threshold)
}

/// Partition under an explicit per-vertex mass threshold.
pub fn h_partition_with_threshold(
    b: &VertexSet,
    k: u32,
    threshold: &BigRational,
) -> Result<HPartition> {
    let n = b.dimension();
    let mut classes = vec![VertexSet::empty(n)?; k as usize + 1];
    let mut unassigned = VertexSet::empty(n)?;
    for v in b.iter() {
        let mut assigned = false;
        for j in 0..=k {
            let cnt = b.count_at_distance(&v, 2 * j)?;
            if rational_from_uint(&BigUint::from(cnt)) >= *threshold {
                classes[j as usize].insert(v)?;
                assigned = true;
                break;
            }
        }
        if !assigned {
            unassigned.insert(v)?;
        }
    }
    Ok(HPartition {
        threshold: threshold.clone(),
        classes,
        unassigned,
    })
}

/// First pair of members at distance exactly 2j, in sorted order, if any.
pub fn distance_collision(h: &VertexSet, j: u32) -> Option<(Vertex, Vertex)> {
    let bits = h.sorted_bits();
    for (i, &u) in bits.iter().enumerate() {
        for &v in &bits[i + 1..] {
            if (u ^ v).count_ones() == 2 * j {
                let n = h.dimension();
                return Some((
                    Vertex::new(n, u).expect("member in range"),
                    Vertex::new(n, v).expect("member in range"),
                ));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn params(n: u32, k: u32, p: i64) -> StabilityParams {
        StabilityParams::for_instance(n, k, rat(p, 1)).unwrap()
    }

    #[test]
    fn derived_constants() {
        let pr = params(12, 2, 1);
        assert_eq!(pr.rho, rat(1, 1));
        assert_eq!(pr.kappa, rat(2, 1));
        assert_eq!(pr.delta, rat(2, 3));
        assert_eq!(*pr.c_const(), rat(121, 1));
        assert_eq!(*pr.d_const(), rat(48, 1));
        assert_eq!(pr.error_term(), rat(121 * 12 * 2, 1));
        assert_eq!(pr.claim1_min_size(), rat(66 - 48 * 12 * 2, 1));
        assert_eq!(pr.gamma_budget(), rat(220 + 66, 1));
    }

    #[test]
    fn params_reject_broken_invariants() {
        let one = rat(1, 1);
        // p below rho
        assert!(StabilityParams::new(12, 2, rat(1, 2), one.clone(), rat(4, 1), one.clone()).is_err());
        // k above kappa p
        assert!(StabilityParams::new(12, 2, one.clone(), one.clone(), rat(1, 1), one.clone()).is_err());
        // delta too small for p k^3 / n
        assert!(StabilityParams::new(12, 2, one.clone(), one.clone(), rat(4, 1), rat(1, 2)).is_err());
        // k out of range
        assert!(StabilityParams::new(12, 0, one.clone(), one.clone(), rat(4, 1), one.clone()).is_err());
        assert!(StabilityParams::new(12, 13, one.clone(), one.clone(), rat(40, 1), one).is_err());
    }

    #[test]
    fn log_condition_is_advisory() {
        // Tiny n slips through the formula; moderate n does not.
        assert!(log_condition_holds(3, 1));
        assert!(!log_condition_holds(12, 2));
        assert!(!log_condition_holds(2, 1));
        assert!(!params(12, 2, 1).log_condition_ok);
    }

    #[test]
    fn hypothesis_on_a_full_sphere() {
        // Γ(Γ^2(w)) is the union of the two adjacent layers.
        let w = Vertex::new(10, 0b1100110011).unwrap();
        let a = w.kth_neighbourhood(2).unwrap();
        assert_eq!(a.neighbourhood().cardinality(), BigUint::from(130u32));
        assert!(hypothesis_check(&a, &params(10, 2, 1)).unwrap());
        // (130 - C(10,3)) / C(10,2) = 10/45.
        assert_eq!(minimal_hypothesis_p(&a, 2).unwrap(), rat(2, 9));
    }

    #[test]
    fn uniqueness_full_set_and_outlier() {
        let v = Vertex::origin(10).unwrap();
        let b = v.kth_neighbourhood(1).unwrap();
        assert_eq!(
            uniqueness_count(&b, &b).unwrap(),
            b.neighbourhood().cardinality()
        );
        // Add the antipodal vertex: its whole neighbourhood is unique to it.
        let z = v.complement();
        let mut with_z = b.clone();
        with_z.insert(z).unwrap();
        let s = VertexSet::from_bits(10, [z.bits()]).unwrap();
        assert_eq!(uniqueness_count(&s, &with_z).unwrap(), BigUint::from(10u32));
        // S must be contained in B.
        let outside = VertexSet::from_bits(10, [0b11]).unwrap();
        assert!(matches!(
            uniqueness_count(&outside, &b),
            Err(Error::NotASubset)
        ));
    }

    // A = Γ^1(w) ∪ {antipode} minus one neighbour: the antipode has 10
    // unique neighbours against a singleton budget of 45/8, so it is the
    // one deletion; afterwards every survivor has exactly 1.
    fn lopsided_instance() -> (VertexSet, StabilityParams) {
        let w = Vertex::origin(10).unwrap();
        let mut a = w.kth_neighbourhood(1).unwrap();
        a.remove(&Vertex::new(10, 1 << 9).unwrap());
        a.insert(w.complement()).unwrap();
        (a, params(10, 1, 1))
    }

    #[test]
    fn discard_deletes_the_outlier() {
        let (a, pr) = lopsided_instance();
        assert_eq!(pr.uniqueness_threshold(&BigUint::one()), rat(45, 8));
        for class in [
            SearchClass::Singletons,
            SearchClass::SingletonsAndPairs,
            SearchClass::Exhaustive,
        ] {
            let (b, trace) = discard_algorithm(&a, &pr, class).unwrap();
            assert_eq!(b.len(), 9, "{class:?}");
            assert_eq!(trace.len(), 1, "{class:?}");
            assert_eq!(trace[0].removed, vec![0b1111111111]);
            assert_eq!(trace[0].unique_count, 10);
            assert_eq!(trace[0].threshold, rat(45, 8));
            assert_eq!(trace[0].remaining, 9);
            assert!(!b.contains_bits(0b1111111111));
        }
    }

    #[test]
    fn discard_keeps_clean_spheres() {
        let w = Vertex::new(12, 0xABC).unwrap();
        let a = w.kth_neighbourhood(2).unwrap();
        let (b, trace) = discard_algorithm(&a, &params(12, 2, 1), SearchClass::Singletons).unwrap();
        assert!(trace.is_empty());
        assert_eq!(b, a);
    }

    #[test]
    fn exhaustive_scan_is_limited() {
        let a = Vertex::origin(8).unwrap().kth_neighbourhood(2).unwrap();
        assert!(matches!(
            discard_algorithm(&a, &params(8, 2, 1), SearchClass::Exhaustive),
            Err(Error::ScaleLimit(_))
        ));
    }

    #[test]
    fn exact_center_matches_brute_force() {
        let a = crate::order::simplicial_initial_segment(8, &BigUint::from(28u32)).unwrap();
        let got = best_center(&a, 2, CenterMode::Exact, ExecMode::Sequential).unwrap();
        let members = a.sorted_bits();
        let mut best = (0u64, u64::MAX);
        for w in 0..1u64 << 8 {
            best = better(best, (overlap_at(&members, w, 2), w));
        }
        assert_eq!((got.overlap, got.center.bits()), best);
        assert!(got.certified);
        // Parallel-capable mode must agree bit for bit.
        let auto = best_center(&a, 2, CenterMode::Exact, ExecMode::Auto).unwrap();
        assert_eq!((auto.overlap, auto.center.bits()), best);
    }

    #[test]
    fn exact_center_recovers_a_sphere() {
        let w = Vertex::new(8, 0xA5).unwrap();
        let a = w.kth_neighbourhood(2).unwrap();
        let got = best_center(&a, 2, CenterMode::Exact, ExecMode::Auto).unwrap();
        assert_eq!(got.center, w);
        assert_eq!(got.overlap, 28);
        assert!(best_center(&a, 2, CenterMode::Exact, ExecMode::Auto).is_ok());
        let big = VertexSet::from_bits(30, [0]).unwrap();
        assert!(matches!(
            best_center(&big, 1, CenterMode::Exact, ExecMode::Auto),
            Err(Error::ScaleLimit(_))
        ));
    }

    #[test]
    fn heuristic_center_recovers_translated_spheres() {
        let w = Vertex::new(10, 0b1010101010).unwrap();
        let a = w.kth_neighbourhood(1).unwrap();
        let mode = CenterMode::Heuristic { seeds: 3, seed: 7 };
        let got = best_center(&a, 1, mode, ExecMode::Auto).unwrap();
        assert_eq!(got.center, w);
        assert_eq!(got.overlap, 10);
        assert!(!got.certified);
        // Deterministic for a fixed seed.
        let again = best_center(&a, 1, mode, ExecMode::Sequential).unwrap();
        assert_eq!(again.center, got.center);
        assert_eq!(again.overlap, got.overlap);
    }

    #[test]
    fn sharpness_with_no_far_centers_is_a_sphere() {
        let w = Vertex::new(9, 0b111000111).unwrap();
        let a = sharpness_example(9, 2, 0, &w, &[]).unwrap();
        assert_eq!(a, w.kth_neighbourhood(2).unwrap());
    }

    #[test]
    fn sharpness_12_2_1_shape() {
        let w = Vertex::origin(12).unwrap();
        let far = place_far_centers(12, 2, 1, &w).unwrap();
        assert_eq!(far, vec![Vertex::new(12, 0xFFF).unwrap()]);
        let a = sharpness_example(12, 2, 1, &w, &far).unwrap();
        assert_eq!(a.cardinality(), BigUint::from(66u32));
        // 66 - 12 sphere vertices kept, 12 outliers around the far center.
        assert_eq!(a.count_at_distance(&w, 2).unwrap(), 54);
        assert_eq!(a.count_at_distance(&far[0], 1).unwrap(), 12);
    }

    #[test]
    fn sharpness_rejects_close_centers() {
        let w = Vertex::origin(12).unwrap();
        let near = Vertex::new(12, 0b111111).unwrap(); // distance 6 < 7
        assert!(matches!(
            sharpness_example(12, 2, 1, &w, &[near]),
            Err(Error::Infeasible(_))
        ));
        // Too many spheres to fit inside the layer budget.
        let far = Vertex::new(4, 0xF).unwrap();
        assert!(sharpness_example(4, 1, 2, &Vertex::origin(4).unwrap(), &[far, far]).is_err());
    }

    #[test]
    fn far_center_packing_spacing() {
        let w = Vertex::origin(16).unwrap();
        let far = place_far_centers(16, 2, 2, &w).unwrap();
        assert_eq!(
            far.iter().map(|v| v.bits()).collect::<Vec<_>>(),
            vec![0xFFFF, 0xFF80]
        );
        for (i, u) in far.iter().enumerate() {
            assert!(u.distance(&w).unwrap() >= 7);
            for v in &far[i + 1..] {
                assert!(u.distance(v).unwrap() >= 7);
            }
        }
        assert!(place_far_centers(4, 2, 2, &Vertex::origin(4).unwrap()).is_err());
    }

    #[test]
    fn report_on_a_pure_sphere() {
        let w = Vertex::origin(10).unwrap();
        let a = w.kth_neighbourhood(2).unwrap();
        let pr = params(10, 2, 1);
        let rep = stability_report(
            &a,
            &pr,
            SearchClass::Singletons,
            CenterMode::Exact,
            ExecMode::Auto,
        )
        .unwrap();
        assert!(rep.hypothesis_ok);
        assert!(rep.satisfied);
        assert!(rep.accounting_ok);
        assert!(rep.claim1_ok);
        assert_eq!(rep.center, 0);
        assert_eq!(rep.overlap, BigUint::from(45u32));
        assert_eq!(rep.outliers, BigUint::zero());
        assert_eq!(rep.retained, 45);
        assert!(rep.trace.is_empty());
        assert!(!rep.theorem_applies); // advisory log condition fails at n=10
    }

    #[test]
    fn report_accounts_for_deletions() {
        let (a, pr) = lopsided_instance();
        let rep = stability_report(
            &a,
            &pr,
            SearchClass::Singletons,
            CenterMode::Exact,
            ExecMode::Auto,
        )
        .unwrap();
        assert!(rep.accounting_ok);
        assert_eq!(rep.trace.len(), 1);
        assert_eq!(rep.retained, 9);
        // Γ(A) splits exactly into the outlier's 10 uniques plus Γ(B).
        let b = VertexSet::from_bits(
            10,
            a.sorted_bits().into_iter().filter(|&m| m != 0b1111111111),
        )
        .unwrap();
        assert_eq!(
            a.neighbourhood().cardinality(),
            BigUint::from(10u32) + b.neighbourhood().cardinality()
        );
    }

    #[test]
    fn report_flags_bad_hypothesis() {
        // Two half spheres around antipodal centers: Γ is far too large.
        let n = 14;
        let w = Vertex::origin(n).unwrap();
        let z = w.complement();
        let mut a = VertexSet::empty(n).unwrap();
        for m in colex_initial_segment(n, 2, &BigUint::from(45u32))
            .unwrap()
            .iter_masks()
        {
            a.insert(Vertex::new(n, m).unwrap()).unwrap();
        }
        for m in colex_initial_segment(n, 2, &BigUint::from(46u32))
            .unwrap()
            .iter_masks()
        {
            a.insert(Vertex::new(n, m ^ z.bits()).unwrap()).unwrap();
        }
        assert_eq!(a.cardinality(), BigUint::from(91u32));
        let rep = stability_report(
            &a,
            &params(14, 2, 1),
            SearchClass::Singletons,
            CenterMode::Exact,
            ExecMode::Auto,
        )
        .unwrap();
        assert!(!rep.hypothesis_ok);
        assert!(!rep.theorem_applies);
    }

    #[test]
    fn partition_thresholds_on_a_sphere() {
        let w = Vertex::origin(12).unwrap();
        let b = w.kth_neighbourhood(2).unwrap();
        // Distance profile inside the sphere: 1 at distance 0, 20 at 2, 45 at 4.
        let v = Vertex::new(12, 0b11).unwrap();
        assert_eq!(b.count_at_distance(&v, 0).unwrap(), 1);
        assert_eq!(b.count_at_distance(&v, 2).unwrap(), 20);
        assert_eq!(b.count_at_distance(&v, 4).unwrap(), 45);
        // A threshold in (20, 45] forces j(v) = 2 for every vertex.
        let part = h_partition_with_threshold(&b, 2, &rat(30, 1)).unwrap();
        assert!(part.classes[0].is_empty());
        assert!(part.classes[1].is_empty());
        assert_eq!(part.classes[2], b);
        assert!(part.unassigned.is_empty());
        // A threshold of 1 is met already at distance 0.
        let part = h_partition_with_threshold(&b, 2, &rat(1, 1)).unwrap();
        assert_eq!(part.classes[0], b);
        // An unreachable threshold leaves everything unassigned.
        let part = h_partition_with_threshold(&b, 2, &rat(1000, 1)).unwrap();
        assert_eq!(part.unassigned, b);
        // The theorem threshold is negative at this scale: all of B in H(0).
        let part = h_partition(&b, &params(12, 2, 1)).unwrap();
        assert_eq!(part.classes[0], b);
    }

    #[test]
    fn collision_scan_finds_distance_pairs() {
        let h = VertexSet::from_bits(6, [0b000000, 0b000011, 0b111100]).unwrap();
        let hit = distance_collision(&h, 1).unwrap();
        assert_eq!((hit.0.bits(), hit.1.bits()), (0b000000, 0b000011));
        assert!(distance_collision(&h, 0).is_none());
        assert_eq!(
            distance_collision(&h, 2).map(|(a, b)| (a.bits(), b.bits())),
            Some((0b000000, 0b111100))
        );
        assert_eq!(
            distance_collision(&h, 3).map(|(a, b)| (a.bits(), b.bits())),
            Some((0b000011, 0b111100))
        );
    }
}
