//! Exact obstruction class `c_{n+1}(ΛⁿH^{01*} ⊗ ΛⁿH^{01*} ⊗ SⁿW)` as a
//! polynomial in `h = c₁(H^{01})`, `e1 = c₁(W)`, `e2 = c₂(W)`.
//!
//! With Chern roots `a, b` of `W` the bundle splits into the line bundles
//! `ℓ + k·a + (n−k)·b`, `k = 0..n`, where `ℓ = −2h` is the first Chern
//! class of `ΛⁿH^{01*} ⊗ ΛⁿH^{01*}`. The product of the roots is expanded
//! in `a, b` and rewritten in the elementary symmetric functions.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Largest supported `n`.
pub const MAX_N: usize = 12;

/// Sparse polynomial in three commuting variables with rational coefficients.
pub type Poly3 = BTreeMap<[u32; 3], BigRational>;

fn add_term(p: &mut Poly3, m: [u32; 3], c: BigRational) {
    if c.is_zero() {
        return;
    }
    let entry = p.entry(m).or_insert_with(BigRational::zero);
    *entry += c;
    if entry.is_zero() {
        p.remove(&m);
    }
}

/// Product of two sparse polynomials.
pub fn poly_mul(a: &Poly3, b: &Poly3) -> Poly3 {
    let mut out = Poly3::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            add_term(&mut out, [ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]], ca * cb);
        }
    }
    out
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn linear(terms: &[([u32; 3], i64)]) -> Poly3 {
    let mut p = Poly3::new();
    for (m, c) in terms {
        add_term(&mut p, *m, int(*c));
    }
    p
}

/// `Π_{k=0}^{n} (−2h + k·a + (n−k)·b)` in the variables `(h, a, b)`.
pub fn root_product(n: usize) -> Poly3 {
    let mut p = linear(&[([0, 0, 0], 1)]);
    for k in 0..=n {
        let f = linear(&[([1, 0, 0], -2), ([0, 1, 0], k as i64), ([0, 0, 1], (n - k) as i64)]);
        p = poly_mul(&p, &f);
    }
    p
}

/// Polynomial in `h`, `e1`, `e2` with exact rational coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymPoly {
    /// Exponents `(h, e1, e2)` to nonzero coefficient.
    pub terms: Poly3,
}

impl SymPoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, h: u32, e1: u32, e2: u32) -> BigRational {
        self.terms.get(&[h, e1, e2]).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Weighted degrees present, with `deg h = deg e1 = 1`, `deg e2 = 2`.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.terms.keys().map(|m| m[0] + m[1] + 2 * m[2]).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Substitute `e1 = a + b`, `e2 = ab` and expand in `(h, a, b)`.
    pub fn to_roots(&self) -> Poly3 {
        let e1 = linear(&[([0, 1, 0], 1), ([0, 0, 1], 1)]);
        let e2 = linear(&[([0, 1, 1], 1)]);
        let mut out = Poly3::new();
        for (m, c) in &self.terms {
            let mut t = linear(&[([m[0], 0, 0], 1)]);
            for _ in 0..m[1] {
                t = poly_mul(&t, &e1);
            }
            for _ in 0..m[2] {
                t = poly_mul(&t, &e2);
            }
            for (tm, tc) in t {
                add_term(&mut out, tm, tc * c);
            }
        }
        out
    }

    /// Substitute `e1 = 2u`, `e2 = u²`; keys of the result are `(h, u, 0)`.
    pub fn equal_roots(&self) -> Poly3 {
        let mut out = Poly3::new();
        for (m, c) in &self.terms {
            let scale = BigRational::from_integer(BigInt::from(2).pow(m[1]));
            add_term(&mut out, [m[0], m[1] + 2 * m[2], 0], c * scale);
        }
        out
    }
}

/// Rewrite a symmetric polynomial in `(h, a, b)` through `e1 = a + b`,
/// `e2 = ab`, peeling off the lexicographically leading `a`-monomial.
pub fn symmetric_reduce(p: &Poly3) -> Result<SymPoly> {
    let mut rest = p.clone();
    let mut terms = Poly3::new();
    while let Some((m, c)) = rest
        .iter()
        .max_by(|x, y| (x.0[1], x.0[2], x.0[0]).cmp(&(y.0[1], y.0[2], y.0[0])))
    {
        let (m, c) = (*m, c.clone());
        let (h, i, j) = (m[0], m[1], m[2]);
        if i < j {
            return Err(Error::Internal(format!(
                "asymmetric remainder h^{h} a^{i} b^{j} in symmetric reduction"
            )));
        }
        let mono = SymPoly {
            terms: [([h, i - j, j], c.clone())].into_iter().collect(),
        };
        for (tm, tc) in mono.to_roots() {
            add_term(&mut rest, tm, -tc);
        }
        add_term(&mut terms, [h, i - j, j], c);
    }
    Ok(SymPoly { terms })
}

/// The obstruction class for complex tangent rank `n`.
pub fn obstruction_class(n: usize) -> Result<SymPoly> {
    if n > MAX_N {
        return Err(Error::Invalid(format!(
            "obstruction class supports n <= {MAX_N}, got {n}"
        )));
    }
    if n == 0 {
        // rank-zero H: every twist is trivial and the bundle is a trivial line
        return Ok(SymPoly::default());
    }
    symmetric_reduce(&root_product(n))
}

/// Substitute rational values for `(h, e1, e2)`.
pub fn evaluate(p: &SymPoly, h: &BigRational, e1: &BigRational, e2: &BigRational) -> BigRational {
    p.terms.iter().fold(BigRational::zero(), |acc, (m, c)| {
        acc + c * pow(h, m[0]) * pow(e1, m[1]) * pow(e2, m[2])
    })
}

fn pow(x: &BigRational, k: u32) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

impl fmt::Display for SymPoly {
    /// Terms in lexicographically descending `(h, e1, e2)` order, e.g.
    /// `4*h^2 - 2*h*e1 + e2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (idx, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            for (name, e) in ["h", "e1", "e2"].iter().zip(m) {
                match e {
                    0 => {}
                    1 => factors.push(name.to_string()),
                    _ => factors.push(format!("{name}^{e}")),
                }
            }
            if !abs.is_one() || factors.is_empty() {
                factors.insert(0, abs.to_string());
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(v: i64) -> BigRational {
        int(v)
    }

    #[test]
    fn rank_one_class() {
        let p = obstruction_class(1).unwrap();
        assert_eq!(p.to_string(), "4*h^2 - 2*h*e1 + e2");
        assert_eq!(evaluate(&p, &r(1), &r(0), &r(0)), r(4));
        assert_eq!(evaluate(&p, &r(0), &r(0), &r(1)), r(1));
    }

    #[test]
    fn rank_zero_class_is_zero() {
        let p = obstruction_class(0).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.to_string(), "0");
    }

    #[test]
    fn guard() {
        assert!(obstruction_class(MAX_N + 1).is_err());
        assert!(obstruction_class(MAX_N).is_ok());
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let p = linear(&[([0, 1, 0], 1)]);
        assert!(symmetric_reduce(&p).is_err());
    }

    #[test]
    fn rational_printing() {
        let mut t = Poly3::new();
        t.insert([0, 0, 1], BigRational::new(BigInt::from(-3), BigInt::from(2)));
        t.insert([1, 0, 0], r(1));
        assert_eq!(SymPoly { terms: t }.to_string(), "h - 3/2*e2");
    }

    #[test]
    fn homogeneous_and_trivial_twist() {
        for n in 1..=6 {
            let p = obstruction_class(n).unwrap();
            assert_eq!(p.degrees(), vec![n as u32 + 1]);
        }
        // h = 0 leaves the top Chern class of SⁿW; for n = 1 that is e2
        let p = obstruction_class(1).unwrap();
        let top: Vec<_> = p.terms.iter().filter(|(m, _)| m[0] == 0).collect();
        assert_eq!(top, vec![(&[0, 0, 1], &r(1))]);
    }

    proptest! {
        #[test]
        fn evaluation_matches_root_product(n in 1usize..5, h in -5i64..5, a in -5i64..5, b in -5i64..5) {
            let p = obstruction_class(n).unwrap();
            let direct: i64 = (0..=n as i64).map(|k| -2 * h + k * a + (n as i64 - k) * b).product();
            prop_assert_eq!(evaluate(&p, &r(h), &r(a + b), &r(a * b)), r(direct));
        }
    }
}
