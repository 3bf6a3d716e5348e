use crnash::chern::{evaluate, obstruction_class, SymPoly, MAX_N};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Expansions of `Π_k (−2h + k·a + (n−k)·b)` in `h, e1, e2`, computed
/// offline with a computer algebra system. Keys are `(h, e1, e2)` exponents.
fn frozen(n: usize) -> Vec<([u32; 3], i64)> {
    match n {
        1 => vec![([2, 0, 0], 4), ([1, 1, 0], -2), ([0, 0, 1], 1)],
        2 => vec![
            ([3, 0, 0], -8),
            ([2, 1, 0], 12),
            ([1, 2, 0], -4),
            ([1, 0, 1], -8),
            ([0, 1, 1], 4),
        ],
        3 => vec![
            ([4, 0, 0], 16),
            ([3, 1, 0], -48),
            ([2, 2, 0], 44),
            ([2, 0, 1], 40),
            ([1, 3, 0], -12),
            ([1, 1, 1], -60),
            ([0, 2, 1], 18),
            ([0, 0, 2], 9),
        ],
        4 => vec![
            ([5, 0, 0], -32),
            ([4, 1, 0], 160),
            ([3, 2, 0], -280),
            ([3, 0, 1], -160),
            ([2, 3, 0], 200),
            ([2, 1, 1], 480),
            ([1, 4, 0], -48),
            ([1, 2, 1], -416),
            ([1, 0, 2], -128),
            ([0, 3, 1], 96),
            ([0, 1, 2], 128),
        ],
        _ => unreachable!(),
    }
}

fn assert_matches(p: &SymPoly, table: &[([u32; 3], i64)]) {
    assert_eq!(p.terms.len(), table.len(), "{p}");
    for (m, c) in table {
        assert_eq!(p.coeff(m[0], m[1], m[2]), q(*c), "coefficient of {m:?} in {p}");
    }
}

#[test]
fn frozen_expansions_up_to_four() {
    for n in 1..=4 {
        assert_matches(&obstruction_class(n).unwrap(), &frozen(n));
    }
}

#[test]
fn rank_one_prints_canonically() {
    assert_eq!(obstruction_class(1).unwrap().to_string(), "4*h^2 - 2*h*e1 + e2");
    assert_eq!(obstruction_class(0).unwrap().to_string(), "0");
}

/// `(−2h + n·u)^{n+1}` by the binomial theorem, keyed `(h, u, 0)`.
fn equal_roots_oracle(n: usize) -> Vec<([u32; 3], BigRational)> {
    let e = n as u32 + 1;
    let mut out = Vec::new();
    let mut binom = BigInt::one();
    for i in 0..=e {
        // term C(e, i) (−2h)^i (n u)^{e−i}
        let c = &binom * BigInt::from(-2).pow(i) * BigInt::from(n).pow(e - i);
        if !c.is_zero() {
            out.push(([i, e - i, 0], BigRational::from_integer(c)));
        }
        binom = binom * BigInt::from(e - i) / BigInt::from(i + 1);
    }
    out.sort_by_key(|a| a.0);
    out
}

#[test]
fn equal_roots_collapse_to_a_power() {
    for n in 1..=8 {
        let got: Vec<_> = obstruction_class(n).unwrap().equal_roots().into_iter().collect();
        assert_eq!(got, equal_roots_oracle(n), "n = {n}");
    }
}

#[test]
fn guard_rejects_large_n() {
    assert!(obstruction_class(MAX_N).is_ok());
    assert!(obstruction_class(MAX_N + 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Substituting roots back in reproduces the product over the roots.
    #[test]
    fn evaluation_matches_root_product(n in 0usize..7, h in -5i64..6, a in -5i64..6, b in -5i64..6) {
        let p = obstruction_class(n).unwrap();
        let got = evaluate(&p, &q(h), &q(a + b), &q(a * b));
        let want = if n == 0 {
            BigRational::zero()
        } else {
            (0..=n as i64).fold(BigRational::one(), |acc, k| acc * q(-2 * h + k * a + (n as i64 - k) * b))
        };
        prop_assert_eq!(got, want);
    }

    /// Every term has weighted degree n + 1.
    #[test]
    fn homogeneous(n in 1usize..9) {
        prop_assert_eq!(obstruction_class(n).unwrap().degrees(), vec![n as u32 + 1]);
    }
}
