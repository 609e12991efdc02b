//! Exact counting helpers. Everything here is integer or rational arithmetic;
//! no floating point is used anywhere in a comparison.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, Zero};

/// Binomial coefficient C(n, k), exact. Zero when k > n.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    // Multiplicative form; each intermediate product is divisible by (i + 1).
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// C(top, k) where the top argument may run negative, in which case the
/// coefficient is zero. Keeps band formulas like C(n - i, r) total in i.
pub fn binomial_signed(top: i64, k: u64) -> BigUint {
    if top < 0 {
        BigUint::zero()
    } else {
        binomial(top as u64, k)
    }
}

/// Machine-width binomial. None exactly when the value overflows u128.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    u128::try_from(&binomial(n, k)).ok()
}

/// Σ_{i=0}^{k} C(n, i): the size of a simplicial segment cut at layer k.
pub fn binomial_prefix_sum(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::zero();
    for i in 0..=k.min(n) {
        acc += binomial(n, i);
    }
    acc
}

pub fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_from_uint(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

pub fn rational_int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(0, 0), BigUint::from(1u32));
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(6, 3), BigUint::from(20u32));
        assert_eq!(binomial(5, 6), BigUint::zero());
        assert_eq!(binomial(64, 32).to_string(), "1832624140942590534");
    }

    #[test]
    fn binomial_signed_negative_top_is_zero() {
        assert_eq!(binomial_signed(-1, 0), BigUint::zero());
        assert_eq!(binomial_signed(-3, 2), BigUint::zero());
        assert_eq!(binomial_signed(4, 2), BigUint::from(6u32));
    }

    #[test]
    fn binomial_u128_matches_big() {
        for n in 0..=70u64 {
            for k in 0..=n {
                if let Some(v) = binomial_u128(n, k) {
                    assert_eq!(BigUint::from(v), binomial(n, k), "C({n},{k})");
                }
            }
        }
        // Large enough to exercise the wide path but still exact.
        assert_eq!(
            BigUint::from(binomial_u128(128, 64).unwrap()),
            binomial(128, 64)
        );
    }

    #[test]
    fn prefix_sum_is_running_total() {
        let mut acc = BigUint::zero();
        for k in 0..=10u64 {
            acc += binomial(10, k);
            assert_eq!(binomial_prefix_sum(10, k), acc);
        }
        assert_eq!(binomial_prefix_sum(10, 10), BigUint::from(1024u32));
    }

    #[test]
    fn pascal_identity_holds() {
        for n in 1..=40u64 {
            for k in 1..=n {
                assert_eq!(
                    binomial(n, k),
                    binomial(n - 1, k) + binomial(n - 1, k - 1)
                );
            }
        }
    }
}
