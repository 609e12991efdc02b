//! Structural invariants: exhaustive loops where the state space is small,
//! seeded random generation where it is not.

use num::{BigInt, BigRational, BigUint};
use proptest::prelude::*;

use harperlab_core::counting::binomial;
use harperlab_core::cube::{full_mask, layer, Vertex, VertexSet};
use harperlab_core::io::{parse_rational, parse_vertex_set, rational_string, vertex_set_string};
use harperlab_core::order::{
    colex_compare, colex_initial_segment, colex_rank, colex_reversed_compare,
    colex_reversed_initial_segment, colex_reversed_rank, colex_reversed_unrank, colex_unrank,
    lex_compare, lex_initial_segment, lex_rank, lex_unrank, simplicial_compare,
    simplicial_initial_segment, simplicial_rank, simplicial_unrank,
};
use harperlab_core::shadow::{
    find_band_index, harper_closed_profile, kk_refined_bound, lym_upper_bound, upper_shadow,
};
use harperlab_core::sweeps::{
    harper_sampled, layer_family_sweep, lym_sampled, segment_duality_exhaustive,
};
use harperlab_core::ExecMode;

#[test]
fn recursive_layers_match_distance_filtering() {
    for n in 1..=7u32 {
        for bits in 0..1u64 << n {
            let v = Vertex::new(n, bits).unwrap();
            for k in 0..=n {
                let direct = v.kth_neighbourhood(k).unwrap();
                let recursive = v.kth_neighbourhood_recursive(k).unwrap();
                assert_eq!(direct, recursive, "n={n} v={bits:#x} k={k}");
                assert_eq!(
                    direct.cardinality(),
                    binomial(n as u64, k as u64),
                    "n={n} v={bits:#x} k={k}"
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn layer_members_sit_at_exact_distance(
        n in 8u32..=10,
        seed in any::<u64>(),
        k in 0u32..=10,
    ) {
        let k = k.min(n);
        let bits = seed & full_mask(n);
        let v = Vertex::new(n, bits).unwrap();
        let sphere = v.kth_neighbourhood(k).unwrap();
        prop_assert_eq!(sphere.cardinality(), binomial(n as u64, k as u64));
        for u in sphere.iter() {
            prop_assert_eq!(v.distance(&u).unwrap(), k);
        }
    }
}

#[test]
fn rank_unrank_roundtrip_every_layer_member() {
    for n in 1..=8u32 {
        for r in 0..=n {
            for (i, &mask) in layer(n, r).unwrap().sorted_members().iter().enumerate() {
                let _ = i;
                let rk = lex_rank(n, mask).unwrap();
                assert_eq!(lex_unrank(n, r, &rk).unwrap(), mask);
                let rk = colex_rank(mask);
                assert_eq!(colex_unrank(n, r, &rk).unwrap(), mask);
                let rk = colex_reversed_rank(n, mask).unwrap();
                assert_eq!(colex_reversed_unrank(n, r, &rk).unwrap(), mask);
            }
        }
        for bits in 0..1u64 << n {
            let rk = simplicial_rank(n, bits).unwrap();
            assert_eq!(simplicial_unrank(n, &rk).unwrap(), bits);
        }
    }
}

#[test]
fn initial_segments_are_sorted_prefixes() {
    for n in 1..=7u32 {
        for r in 0..=n {
            let members = layer(n, r).unwrap().sorted_members();
            let mut by_lex = members.clone();
            by_lex.sort_by(|&a, &b| lex_compare(a, b).unwrap());
            let mut by_colex = members.clone();
            by_colex.sort_by(|&a, &b| colex_compare(a, b).unwrap());
            let mut by_rev = members.clone();
            by_rev.sort_by(|&a, &b| colex_reversed_compare(a, b).unwrap());
            for m in 0..=members.len() {
                let m_big = BigUint::from(m);
                let seg = lex_initial_segment(n, r, &m_big).unwrap();
                assert_eq!(seg.sorted_members(), {
                    let mut p = by_lex[..m].to_vec();
                    p.sort_unstable();
                    p
                });
                let seg = colex_initial_segment(n, r, &m_big).unwrap();
                assert_eq!(seg.sorted_members(), by_colex[..m].to_vec());
                let seg = colex_reversed_initial_segment(n, r, &m_big).unwrap();
                assert_eq!(seg.sorted_members(), {
                    let mut p = by_rev[..m].to_vec();
                    p.sort_unstable();
                    p
                });
            }
        }
        let mut all: Vec<u64> = (0..1u64 << n).collect();
        all.sort_by(|&a, &b| simplicial_compare(a, b));
        for l in 0..=all.len() {
            let seg = simplicial_initial_segment(n, &BigUint::from(l)).unwrap();
            let expect = VertexSet::from_bits(n, all[..l].iter().copied()).unwrap();
            assert_eq!(seg, expect, "n={n} l={l}");
        }
    }
}

proptest! {
    #[test]
    fn rank_orders_agree_with_comparators(
        n in 2u32..=16,
        a_seed in any::<u64>(),
        b_seed in any::<u64>(),
        r in 1u32..=16,
    ) {
        let r = r.min(n);
        // Two random r-subsets of [n], built by trimming random masks.
        let trim = |seed: u64| {
            let mut m = seed & full_mask(n);
            while m.count_ones() > r {
                m &= m - 1;
            }
            let mut b = 0;
            while m.count_ones() < r {
                if m >> b & 1 == 0 {
                    m |= 1 << b;
                }
                b += 1;
            }
            m
        };
        let (a, b) = (trim(a_seed), trim(b_seed));
        let by_rank = lex_rank(n, a).unwrap().cmp(&lex_rank(n, b).unwrap());
        prop_assert_eq!(by_rank, lex_compare(a, b).unwrap());
        let by_rank = colex_rank(a).cmp(&colex_rank(b));
        prop_assert_eq!(by_rank, colex_compare(a, b).unwrap());
        let by_rank = colex_reversed_rank(n, a).unwrap().cmp(&colex_reversed_rank(n, b).unwrap());
        prop_assert_eq!(by_rank, colex_reversed_compare(a, b).unwrap());
        let by_rank = simplicial_rank(n, a).unwrap().cmp(&simplicial_rank(n, b).unwrap());
        prop_assert_eq!(by_rank, simplicial_compare(a, b));
    }
}

proptest! {
    #[test]
    fn upper_shadow_equals_complemented_shadow(
        n in 2u32..=8,
        r in 0u32..=7,
        picks in any::<u64>(),
    ) {
        let r = r.min(n - 1);
        let members = layer(n, r).unwrap().sorted_members();
        // Up to 64 members at n <= 8, so one word of picks decides them all.
        let fam = harperlab_core::SetFamily::from_masks(
            n,
            r,
            members
                .iter()
                .enumerate()
                .filter(|(i, _)| picks >> (i % 64) & 1 == 1 || *i >= 64)
                .map(|(_, &m)| m),
        )
        .unwrap();
        let direct = upper_shadow(&fam).unwrap();
        let via = harperlab_core::shadow::shadow(&fam.complement_family())
            .unwrap()
            .complement_family();
        prop_assert_eq!(direct, via);
    }
}

#[test]
fn segment_complements_swap_orders() {
    let report = segment_duality_exhaustive(8).unwrap();
    assert!(report.all_ok, "{:?}", report.first_mismatch);
    let expect: u64 = (0..=8u64)
        .map(|r| u64::try_from(&binomial(8, r)).unwrap() + 1)
        .sum();
    assert_eq!(report.checked, expect);
}

#[test]
fn shadow_minima_follow_the_cascade_on_small_layers() {
    for n in 1..=6u32 {
        for r in 1..=n {
            let sweep = layer_family_sweep(n, r, ExecMode::Auto).unwrap();
            assert!(sweep.all_ok, "n={n} r={r}");
        }
    }
}

#[test]
fn random_probes_find_no_counterexamples() {
    for n in 5..=8u32 {
        let sweep = harper_sampled(n, 3_000, 42, ExecMode::Auto).unwrap();
        assert_eq!(sweep.violations, 0, "n={n}");
    }
    for (n, r) in [(6u32, 2u32), (8, 3), (10, 5)] {
        let sweep = lym_sampled(n, r, 3_000, 42, ExecMode::Auto).unwrap();
        assert_eq!(
            (sweep.lower_violations, sweep.upper_violations),
            (0, 0),
            "n={n} r={r}"
        );
    }
}

#[test]
fn refined_bound_dominates_plain_lym() {
    for n in 2..=9u32 {
        for r in 1..n {
            let total = u64::try_from(&binomial(n as u64, r as u64)).unwrap();
            for m in 1..=total {
                let m_big = BigUint::from(m);
                let band = find_band_index(n, r, &m_big).unwrap();
                let refined = kk_refined_bound(n, r, band.i, &m_big).unwrap();
                let plain = lym_upper_bound(n, r, &m_big).unwrap();
                assert!(refined >= plain, "n={n} r={r} m={m} band {}", band.i);
            }
        }
    }
}

#[test]
fn closed_profiles_are_monotone_with_pinned_ends() {
    for n in 1..=12u32 {
        let profile = harper_closed_profile(n).unwrap();
        assert_eq!(profile.len(), (1usize << n) + 1);
        assert_eq!(profile[0], 0);
        assert_eq!(profile[1], n as u64 + 1);
        assert_eq!(profile[1 << n], 1u64 << n);
        assert!(profile.windows(2).all(|w| w[0] <= w[1]), "n={n}");
    }
}

proptest! {
    #[test]
    fn vertex_sets_round_trip_through_text(
        n in 1u32..=64,
        raw in prop::collection::vec(any::<u64>(), 0..24),
    ) {
        let set = VertexSet::from_bits(
            n,
            raw.iter().map(|&b| b & full_mask(n)),
        )
        .unwrap();
        let text = vertex_set_string(&set);
        let back = parse_vertex_set(&text).unwrap();
        prop_assert_eq!(back, set.clone());
        // Serialization is canonical: a second pass gives identical bytes.
        prop_assert_eq!(vertex_set_string(&set), text);
    }
}

proptest! {
    #[test]
    fn rationals_round_trip_through_text(num in any::<i32>(), den in 1u32..=1_000_000) {
        let q = BigRational::new(BigInt::from(num), BigInt::from(den));
        let text = rational_string(&q);
        prop_assert_eq!(parse_rational(&text).unwrap(), q);
    }
}
