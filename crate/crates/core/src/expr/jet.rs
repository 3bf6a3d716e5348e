//! Forward-mode truncated Taylor jets.
//!
//! A jet of order `K` at `p` stores, for every multi-index over the `2N`
//! formal slots `(z_1..z_N, z̄_1..z̄_N)` of total degree `≤ K`, the Taylor
//! coefficient: the mixed Wirtinger partial divided by the multi-index
//! factorial. Arithmetic on jets is truncated polynomial arithmetic, so the
//! coefficients are exact up to floating-point rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{seed_slots, Expr, Node, VarRef};
use crate::{Error, Result, C64};

/// Default maximum jet order (transversality needs 2).
pub const DEFAULT_MAX_ORDER: usize = 3;

/// Monomial layout and multiplication table for `nslots` variables up to
/// total degree `order`. Shared between jets of the same shape.
#[derive(Debug)]
pub struct JetSpace {
    nslots: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// For each output monomial, the `(a, b)` index pairs with `a + b = c`.
    products: Vec<Vec<(usize, usize)>>,
}

impl JetSpace {
    fn build(nslots: usize, order: usize) -> Self {
        let mut monomials = vec![vec![0u8; nslots]];
        let mut frontier = vec![vec![0u8; nslots]];
        for _ in 0..order {
            let mut next = Vec::new();
            for m in &frontier {
                // extend only at or after the last nonzero slot: each monomial once
                let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
                for s in last..nslots {
                    let mut n = m.clone();
                    n[s] += 1;
                    next.push(n);
                }
            }
            monomials.extend(next.iter().cloned());
            frontier = next;
        }
        let index: HashMap<Vec<u8>, usize> = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut products = vec![Vec::new(); monomials.len()];
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                let deg: usize = ma.iter().chain(mb).map(|&e| e as usize).sum();
                if deg > order {
                    continue;
                }
                let sum: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                products[index[&sum]].push((a, b));
            }
        }
        JetSpace {
            nslots,
            order,
            monomials,
            index,
            products,
        }
    }

    /// Shared instance for this shape.
    pub fn shared(nslots: usize, order: usize) -> Arc<JetSpace> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<JetSpace>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("jet space cache poisoned");
        Arc::clone(
            guard
                .entry((nslots, order))
                .or_insert_with(|| Arc::new(JetSpace::build(nslots, order))),
        )
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nslots(&self) -> usize {
        self.nslots
    }

    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monomials
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }

    fn mul(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        self.products
            .iter()
            .map(|pairs| pairs.iter().map(|&(i, j)| a[i] * b[j]).sum())
            .collect()
    }

    fn constant(&self, c: C64) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.len()];
        v[0] = c;
        v
    }
}

/// Truncated Taylor expansion of an expression at a base point.
#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    base: Vec<C64>,
    coeffs: Vec<C64>,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn base(&self) -> &[C64] {
        &self.base
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn nvars(&self) -> usize {
        self.space.nslots / 2
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// Taylor coefficient at the multi-index `(alpha, beta)` over `(z, z̄)`.
    pub fn coeff(&self, alpha: &[u8], beta: &[u8]) -> C64 {
        let key: Vec<u8> = alpha.iter().chain(beta).copied().collect();
        self.space.index_of(&key).map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// `∂^{|α|+|β|} e / ∂z^α ∂z̄^β` at the base point.
    pub fn partial(&self, alpha: &[u8], beta: &[u8]) -> C64 {
        let fact: f64 = alpha
            .iter()
            .chain(beta)
            .map(|&e| (1..=e as u64).product::<u64>() as f64)
            .product();
        self.coeff(alpha, beta) * fact
    }

    /// Partial derivative with respect to one or two formal variables.
    pub fn partial_of(&self, vars: &[VarRef]) -> C64 {
        let n = self.nvars();
        let mut exps = vec![0u8; 2 * n];
        for v in vars {
            exps[v.slot(n)] += 1;
        }
        let (a, b) = exps.split_at(n);
        self.partial(a, b)
    }
}

/// Jet of order `k` with the default maximum order.
pub fn eval_jet(e: &Expr, p: &[C64], k: usize) -> Result<Jet> {
    eval_jet_with_max(e, p, k, DEFAULT_MAX_ORDER)
}

pub fn eval_jet_with_max(e: &Expr, p: &[C64], k: usize, max_order: usize) -> Result<Jet> {
    if p.len() != e.nvars() {
        return Err(Error::Dimension {
            expected: e.nvars(),
            got: p.len(),
        });
    }
    if k > max_order {
        return Err(Error::JetOrder {
            requested: k,
            max: max_order,
        });
    }
    let space = JetSpace::shared(2 * e.nvars(), k);
    let slots = seed_slots(p);
    let coeffs = propagate(&space, e.root(), &slots);
    Ok(Jet {
        space,
        base: p.to_vec(),
        coeffs,
    })
}

fn propagate(space: &JetSpace, node: &Node, slots: &[C64]) -> Vec<C64> {
    match node {
        Node::Const(c) => space.constant(c.value()),
        Node::Var(v) => {
            let s = v.slot(slots.len() / 2);
            let mut out = space.constant(slots[s]);
            if space.order >= 1 {
                let mut e = vec![0u8; space.nslots];
                e[s] = 1;
                out[space.index[&e]] = C64::new(1.0, 0.0);
            }
            out
        }
        Node::Add(a, b) => zip(propagate(space, a, slots), propagate(space, b, slots), |x, y| x + y),
        Node::Sub(a, b) => zip(propagate(space, a, slots), propagate(space, b, slots), |x, y| x - y),
        Node::Mul(a, b) => space.mul(&propagate(space, a, slots), &propagate(space, b, slots)),
        Node::Neg(a) => propagate(space, a, slots).into_iter().map(|x| -x).collect(),
        Node::Pow(a, m) => {
            let base = propagate(space, a, slots);
            let mut acc = space.constant(C64::new(1.0, 0.0));
            let mut sq = base;
            let mut m = *m;
            while m > 0 {
                if m & 1 == 1 {
                    acc = space.mul(&acc, &sq);
                }
                m >>= 1;
                if m > 0 {
                    sq = space.mul(&sq, &sq);
                }
            }
            acc
        }
    }
}

fn zip(a: Vec<C64>, b: Vec<C64>, f: impl Fn(C64, C64) -> C64) -> Vec<C64> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_with, Vars};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn monomial_count() {
        // C(2N + K, K)
        assert_eq!(JetSpace::shared(4, 2).len(), 15);
        assert_eq!(JetSpace::shared(6, 3).len(), 84);
        assert_eq!(JetSpace::shared(6, 0).len(), 1);
    }

    #[test]
    fn modulus_squared_mixed_partial() {
        let e = parse("z1*conj(z1)", 1).unwrap();
        for p in [c(0., 0.), c(1.5, -2.0)] {
            let j = eval_jet(&e, &[p], 2).unwrap();
            assert!((j.partial(&[1], &[1]) - c(1., 0.)).norm() < 1e-15);
            assert!((j.coeff(&[1], &[1]) - c(1., 0.)).norm() < 1e-15);
        }
    }

    #[test]
    fn antiholomorphic_square() {
        let e = parse("conj(z1)^2", 1).unwrap();
        let j = eval_jet(&e, &[c(0., 0.)], 2).unwrap();
        for (i, m) in j.space().monomials().iter().enumerate() {
            let expected = if m == &vec![0, 2] { c(1., 0.) } else { c(0., 0.) };
            assert!((j.coeffs()[i] - expected).norm() < 1e-15, "{m:?}");
        }
    }

    #[test]
    fn graph_first_order_coefficients() {
        let vars = std::sync::Arc::new(Vars::new(&["z1", "w"]).unwrap());
        let e = parse_with("re(w - conj(z1)^2)", &vars).unwrap();
        let j = eval_jet(&e, &[c(0., 0.), c(0., 0.)], 1).unwrap();
        assert!((j.partial(&[1, 0], &[0, 0])).norm() < 1e-15);
        assert!((j.partial(&[0, 1], &[0, 0]) - c(0.5, 0.)).norm() < 1e-15);
    }

    #[test]
    fn order_guard_and_dimension() {
        let e = parse("z1", 1).unwrap();
        assert!(matches!(
            eval_jet(&e, &[c(0., 0.)], 4),
            Err(Error::JetOrder { requested: 4, max: 3 })
        ));
        assert!(matches!(eval_jet(&e, &[], 1), Err(Error::Dimension { .. })));
        assert!(eval_jet_with_max(&e, &[c(0., 0.)], 4, 4).is_ok());
    }

    #[test]
    fn degree_zero_is_plain_evaluation() {
        let e = parse("z1^3*conj(z2) - 2*i*z2 + re(z1*z2)", 2).unwrap();
        let p = [c(0.3, -0.7), c(1.1, 0.4)];
        let j = eval_jet(&e, &p, 3).unwrap();
        assert!((j.value() - e.eval(&p).unwrap()).norm() < 1e-14);
    }
}
