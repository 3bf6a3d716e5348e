//! Real-valued polynomial expressions in complex variables.
//!
//! Expressions are parsed from a small grammar, normalized so that `conj`
//! sits only on leaves and `re`/`im` are expanded away, and then evaluated
//! either pointwise or as truncated Taylor jets in the `2(n+2)` formal
//! variables `z_k, z̄_k` (Wirtinger calculus).

mod diff;
mod jet;
mod parser;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use diff::wirtinger;
pub use jet::{eval_jet, eval_jet_with_max, Jet, JetSpace, DEFAULT_MAX_ORDER};
pub use parser::{parse, parse_with, ParseError};

use crate::{Error, Result, C64};

/// Exact complex rational.
pub type Exact = Complex<BigRational>;

/// Declared variable names; `names.len()` is `n + 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vars {
    names: Vec<String>,
}

const RESERVED: [&str; 4] = ["i", "conj", "re", "im"];

impl Vars {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().trim().to_string()).collect();
        for (k, name) in names.iter().enumerate() {
            let mut chars = name.chars();
            let ok_start = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
            if !ok_start || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Invalid(format!("invalid variable name {name:?}")));
            }
            if RESERVED.contains(&name.as_str()) {
                return Err(Error::Invalid(format!("variable name {name:?} is reserved")));
            }
            if names[..k].contains(name) {
                return Err(Error::Invalid(format!("duplicate variable name {name:?}")));
            }
        }
        Ok(Vars { names })
    }

    /// `z1, …, z{n}`.
    pub fn default_names(n: usize) -> Self {
        Vars {
            names: (1..=n).map(|k| format!("z{k}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A formal variable: `z_k` or `z̄_k` (0-based `index`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub index: usize,
    pub conj: bool,
}

impl VarRef {
    pub fn z(index: usize) -> Self {
        VarRef { index, conj: false }
    }

    pub fn zbar(index: usize) -> Self {
        VarRef { index, conj: true }
    }

    /// Position among the `2·nvars` formal slots: `z` first, then `z̄`.
    pub fn slot(self, nvars: usize) -> usize {
        if self.conj {
            nvars + self.index
        } else {
            self.index
        }
    }

    pub fn from_slot(slot: usize, nvars: usize) -> Self {
        if slot < nvars {
            VarRef::z(slot)
        } else {
            VarRef::zbar(slot - nvars)
        }
    }
}

/// Literal with its exact value and a cached floating-point copy.
#[derive(Debug, Clone)]
pub struct Literal {
    exact: Exact,
    value: C64,
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Literal {
    pub fn new(exact: Exact) -> Self {
        let value = C64::new(
            exact.re.to_f64().unwrap_or(f64::NAN),
            exact.im.to_f64().unwrap_or(f64::NAN),
        );
        Literal { exact, value }
    }

    pub fn real(r: BigRational) -> Self {
        Self::new(Exact::new(r, BigRational::zero()))
    }

    pub fn from_ints(re: i64, im: i64, den: i64) -> Self {
        let d = BigInt::from(den);
        Self::new(Exact::new(
            BigRational::new(BigInt::from(re), d.clone()),
            BigRational::new(BigInt::from(im), d),
        ))
    }

    pub fn exact(&self) -> &Exact {
        &self.exact
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    fn is_zero(&self) -> bool {
        self.exact.re.is_zero() && self.exact.im.is_zero()
    }

    fn is_one(&self) -> bool {
        self.exact.re.is_one() && self.exact.im.is_zero()
    }

    fn conj(&self) -> Self {
        Self::new(self.exact.conj())
    }
}

/// Normalized expression tree. `conj`, `re` and `im` never appear: they are
/// resolved into [`VarRef::conj`] flags and conjugated literals.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Literal),
    Var(VarRef),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, u32),
}

impl Node {
    fn konst(l: Literal) -> Node {
        Node::Const(l)
    }

    /// Structural conjugation: swap `z ↔ z̄` and conjugate literals.
    pub fn conj(&self) -> Node {
        match self {
            Node::Const(c) => Node::Const(c.conj()),
            Node::Var(v) => Node::Var(VarRef {
                index: v.index,
                conj: !v.conj,
            }),
            Node::Add(a, b) => Node::Add(Box::new(a.conj()), Box::new(b.conj())),
            Node::Sub(a, b) => Node::Sub(Box::new(a.conj()), Box::new(b.conj())),
            Node::Mul(a, b) => Node::Mul(Box::new(a.conj()), Box::new(b.conj())),
            Node::Neg(a) => Node::Neg(Box::new(a.conj())),
            Node::Pow(a, m) => Node::Pow(Box::new(a.conj()), *m),
        }
    }

    /// Fold constant subtrees and the neutral elements `0` and `1`.
    pub fn fold(self) -> Node {
        use Node::*;
        match self {
            Const(_) | Var(_) => self,
            Add(a, b) => match (a.fold(), b.fold()) {
                (Const(x), Const(y)) => Node::konst(Literal::new(x.exact + y.exact)),
                (Const(x), e) | (e, Const(x)) if x.is_zero() => e,
                (x, y) => Add(Box::new(x), Box::new(y)),
            },
            Sub(a, b) => match (a.fold(), b.fold()) {
                (Const(x), Const(y)) => Node::konst(Literal::new(x.exact - y.exact)),
                (e, Const(y)) if y.is_zero() => e,
                (Const(x), e) if x.is_zero() => Neg(Box::new(e)).fold(),
                (x, y) => Sub(Box::new(x), Box::new(y)),
            },
            Mul(a, b) => match (a.fold(), b.fold()) {
                (Const(x), Const(y)) => Node::konst(Literal::new(x.exact * y.exact)),
                (Const(x), _) | (_, Const(x)) if x.is_zero() => Node::konst(x),
                (Const(x), e) | (e, Const(x)) if x.is_one() => e,
                (x, y) => Mul(Box::new(x), Box::new(y)),
            },
            Neg(a) => match a.fold() {
                Const(x) => Node::konst(Literal::new(-x.exact)),
                Neg(inner) => *inner,
                e => Neg(Box::new(e)),
            },
            Pow(a, m) => match (a.fold(), m) {
                (_, 0) => Node::konst(Literal::from_ints(1, 0, 1)),
                (e, 1) => e,
                (Const(x), m) => Node::konst(Literal::new(pow_exact(&x.exact, m))),
                (e, m) => Pow(Box::new(e), m),
            },
        }
    }

    fn eval(&self, slots: &[C64]) -> C64 {
        match self {
            Node::Const(c) => c.value,
            Node::Var(v) => slots[v.slot(slots.len() / 2)],
            Node::Add(a, b) => a.eval(slots) + b.eval(slots),
            Node::Sub(a, b) => a.eval(slots) - b.eval(slots),
            Node::Mul(a, b) => a.eval(slots) * b.eval(slots),
            Node::Neg(a) => -a.eval(slots),
            Node::Pow(a, m) => a.eval(slots).powu(*m),
        }
    }

    /// Largest variable index referenced, if any.
    fn max_index(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(v) => Some(v.index),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => a.max_index().max(b.max_index()),
            Node::Neg(a) | Node::Pow(a, _) => a.max_index(),
        }
    }

    /// Total polynomial degree in the formal variables.
    pub fn degree(&self) -> u32 {
        match self {
            Node::Const(_) => 0,
            Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) => a.degree().max(b.degree()),
            Node::Mul(a, b) => a.degree() + b.degree(),
            Node::Neg(a) => a.degree(),
            Node::Pow(a, m) => a.degree() * m,
        }
    }
}

fn pow_exact(x: &Exact, m: u32) -> Exact {
    let mut acc = Exact::new(BigRational::one(), BigRational::zero());
    for _ in 0..m {
        acc *= x.clone();
    }
    acc
}

/// A normalized expression bound to its variable declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Arc<Vars>,
}

impl Expr {
    pub(crate) fn from_node(root: Node, vars: Arc<Vars>) -> Self {
        Expr {
            root: root.fold(),
            vars,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn shared_vars(&self) -> Arc<Vars> {
        Arc::clone(&self.vars)
    }

    /// Number of complex variables (`n + 2`).
    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    /// Structural conjugate.
    pub fn conj(&self) -> Expr {
        Expr::from_node(self.root.conj(), Arc::clone(&self.vars))
    }

    /// Value at `p` with `z_k := p_k`, `z̄_k := conj(p_k)`.
    pub fn eval(&self, p: &[C64]) -> Result<C64> {
        if p.len() != self.nvars() {
            return Err(Error::Dimension {
                expected: self.nvars(),
                got: p.len(),
            });
        }
        Ok(self.root.eval(&seed_slots(p)))
    }

    /// Value at `p` with an explicit substitution for every formal slot
    /// (`z` then `z̄`), i.e. without imposing `z̄ = conj(z)`.
    pub fn eval_formal(&self, slots: &[C64]) -> Result<C64> {
        if slots.len() != 2 * self.nvars() {
            return Err(Error::Dimension {
                expected: 2 * self.nvars(),
                got: slots.len(),
            });
        }
        Ok(self.root.eval(slots))
    }

    /// Whether the expression references only declared variables.
    pub fn max_var_index(&self) -> Option<usize> {
        self.root.max_index()
    }

    pub fn degree(&self) -> u32 {
        self.root.degree()
    }
}

pub(crate) fn seed_slots(p: &[C64]) -> Vec<C64> {
    let mut slots = p.to_vec();
    slots.extend(p.iter().map(|z| z.conj()));
    slots
}

/// Randomized check that `e` takes real values: `|Im e(p)| ≤ tol·max(1, |e(p)|)`
/// on `trials` seeded points drawn from `[-2, 2]²` per variable.
pub fn is_real_valued(e: &Expr, trials: usize, tol: f64) -> bool {
    is_real_valued_seeded(e, trials, tol, 0x5eed)
}

pub fn is_real_valued_seeded(e: &Expr, trials: usize, tol: f64, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials.max(1)).all(|_| {
        let p: Vec<C64> = (0..e.nvars())
            .map(|_| C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let v = e.eval(&p).expect("dimension matches");
        v.im.abs() <= tol * v.norm().max(1.0)
    })
}

/// Default trial count and tolerance for [`is_real_valued`].
pub const REAL_CHECK_TRIALS: usize = 16;
pub const REAL_CHECK_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// printing

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &Vars) -> fmt::Result {
    match node {
        Node::Const(c) => write_literal(f, &c.exact),
        Node::Var(v) => {
            let name = &vars.names[v.index];
            if v.conj {
                write!(f, "conj({name})")
            } else {
                write!(f, "{name}")
            }
        }
        Node::Add(a, b) => write_binary(f, a, "+", b, vars),
        Node::Sub(a, b) => write_binary(f, a, "-", b, vars),
        Node::Mul(a, b) => write_binary(f, a, "*", b, vars),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(f, a, vars)?;
            write!(f, ")")
        }
        Node::Pow(a, m) => {
            if matches!(**a, Node::Pow(..)) {
                write!(f, "(")?;
                write_node(f, a, vars)?;
                write!(f, ")^{m}")
            } else {
                write_node(f, a, vars)?;
                write!(f, "^{m}")
            }
        }
    }
}

fn write_binary(f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node, vars: &Vars) -> fmt::Result {
    write!(f, "(")?;
    write_node(f, a, vars)?;
    write!(f, " {op} ")?;
    write_node(f, b, vars)?;
    write!(f, ")")
}

fn write_literal(f: &mut fmt::Formatter<'_>, c: &Exact) -> fmt::Result {
    let re = (!c.re.is_zero()).then(|| decimal(&c.re));
    let im = (!c.im.is_zero()).then(|| decimal(&c.im.abs()));
    match (re, im) {
        (None, None) => write!(f, "0"),
        (Some(r), None) if c.re.is_negative() => write!(f, "(-{})", r.trim_start_matches('-')),
        (Some(r), None) => write!(f, "{r}"),
        (re, Some(i)) => {
            let unit = if i == "1" { "i".to_string() } else { format!("{i}*i") };
            let sign = if c.im.is_negative() { "-" } else { "+" };
            match re {
                None if sign == "+" => write!(f, "({unit})"),
                None => write!(f, "(-{unit})"),
                Some(r) if c.re.is_negative() => {
                    write!(f, "(-{} {sign} {unit})", r.trim_start_matches('-'))
                }
                Some(r) => write!(f, "({r} {sign} {unit})"),
            }
        }
    }
}

/// Exact decimal expansion of a rational whose denominator is `2^a·5^b`;
/// other denominators fall back to 17 significant digits.
fn decimal(r: &BigRational) -> String {
    let mut den = r.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{:.16e}", r.to_f64().unwrap_or(f64::NAN));
    }
    let k = twos.max(fives);
    let scaled = r * BigRational::from_integer(BigInt::from(10).pow(k));
    let digits = scaled.to_integer().abs().to_string();
    let sign = if r.is_negative() { "-" } else { "" };
    if k == 0 {
        return format!("{sign}{digits}");
    }
    let k = k as usize;
    let padded = format!("{digits:0>width$}", width = k + 1);
    let (int, frac) = padded.split_at(padded.len() - k);
    format!("{sign}{int}.{frac}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let e = parse("z1*conj(z1)", 1).unwrap();
        assert!((e.eval(&[c(3., 4.)]).unwrap() - c(25., 0.)).norm() < 1e-12);
        let e = parse("i*(z1 - conj(z1))", 1).unwrap();
        assert!((e.eval(&[c(2., 5.)]).unwrap() - c(-10., 0.)).norm() < 1e-12);
        let vars = Arc::new(Vars::new(&["x", "y"]).unwrap());
        let e = parse_with("y^2 - x^3 - x^2", &vars).unwrap();
        assert!((e.eval(&[c(2., 0.), c(3., 0.)]).unwrap() - c(-3., 0.)).norm() < 1e-12);
        assert!(matches!(e.eval(&[c(1., 0.)]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn re_im_normalize_away() {
        let vars = Arc::new(Vars::new(&["z1", "w"]).unwrap());
        let e = parse_with("re(w) - re(conj(z1)^2)", &vars).unwrap();
        assert!((e.eval(&[c(1., 0.), c(2., 0.)]).unwrap() - c(1., 0.)).norm() < 1e-15);
        let e = parse("conj(z1*z2)", 2).unwrap();
        assert_eq!(
            e.root(),
            &Node::Mul(
                Box::new(Node::Var(VarRef::zbar(0))),
                Box::new(Node::Var(VarRef::zbar(1)))
            )
        );
    }

    #[test]
    fn real_valued_examples() {
        assert!(is_real_valued(&parse("z1*conj(z1)", 1).unwrap(), 16, 1e-9));
        assert!(!is_real_valued(&parse("z1", 1).unwrap(), 16, 1e-9));
        assert!(is_real_valued(&parse("i*(z1 - conj(z1))", 1).unwrap(), 16, 1e-9));
        assert!(is_real_valued(
            &parse("im(z2 - conj(z1)^3) + re(z1*z2)", 2).unwrap(),
            16,
            1e-9
        ));
    }

    #[test]
    fn decimal_printing() {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert_eq!(decimal(&half), "0.5");
        assert_eq!(decimal(&-half), "-0.5");
        let r = BigRational::new(BigInt::from(-3), BigInt::from(400));
        assert_eq!(decimal(&r), "-0.0075");
        assert_eq!(decimal(&BigRational::from_integer(BigInt::from(42))), "42");
    }

    #[test]
    fn printing_literals_reparses() {
        for src in [
            "0.5*z1",
            "(-0.25 + 3*i)*z1",
            "(-i)*z1",
            "i*z1 - 2.125",
            "(0.5 - 1.5*i)^2*z1",
        ] {
            let e = parse(src, 1).unwrap();
            let again = parse(&e.to_string(), 1).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    fn arb_source() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            Just("z1".to_string()),
            Just("z2".to_string()),
            Just("conj(z1)".to_string()),
            Just("i".to_string()),
            (0u32..20, 0u32..100).prop_map(|(a, b)| format!("{a}.{b:02}")),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
                (inner.clone(), 0u32..4).prop_map(|(a, m)| format!("({a})^{m}")),
                inner.clone().prop_map(|a| format!("conj({a})")),
                inner.clone().prop_map(|a| format!("re({a})")),
                inner.clone().prop_map(|a| format!("im({a})")),
                inner.prop_map(|a| format!("-{a}")),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_print_parse_is_idempotent(src in arb_source()) {
            let e = parse(&src, 2).unwrap();
            let printed = e.to_string();
            let again = parse(&printed, 2).unwrap();
            prop_assert_eq!(&e, &again);
            prop_assert_eq!(printed, again.to_string());
        }

        #[test]
        fn structural_conj_matches_pointwise_conj(src in arb_source(), a in -2.0..2.0f64, b in -2.0..2.0f64, d in -2.0..2.0f64) {
            let e = parse(&src, 2).unwrap();
            let p = [c(a, b), c(d, a - b)];
            let lhs = e.conj().eval(&p).unwrap();
            let rhs = e.eval(&p).unwrap().conj();
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }
    }
}
