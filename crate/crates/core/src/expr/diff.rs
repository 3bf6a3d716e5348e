//! Exact symbolic Wirtinger derivatives, treating `z_k` and `z̄_k` as
//! independent variables.

use super::{Expr, Literal, Node, VarRef};
use crate::{Error, Result};

/// `∂e/∂var` as a new normalized expression.
pub fn wirtinger(e: &Expr, var: VarRef) -> Result<Expr> {
    if var.index >= e.nvars() {
        return Err(Error::Invalid(format!(
            "variable index {} out of range for {} variables",
            var.index,
            e.nvars()
        )));
    }
    Ok(Expr::from_node(derive(e.root(), var), e.shared_vars()))
}

fn zero() -> Node {
    Node::Const(Literal::from_ints(0, 0, 1))
}

fn derive(node: &Node, var: VarRef) -> Node {
    use Node::*;
    match node {
        Const(_) => zero(),
        Var(v) if *v == var => Const(Literal::from_ints(1, 0, 1)),
        Var(_) => zero(),
        Add(a, b) => Add(Box::new(derive(a, var)), Box::new(derive(b, var))),
        Sub(a, b) => Sub(Box::new(derive(a, var)), Box::new(derive(b, var))),
        Mul(a, b) => Add(
            Box::new(Mul(Box::new(derive(a, var)), b.clone())),
            Box::new(Mul(a.clone(), Box::new(derive(b, var)))),
        ),
        Neg(a) => Neg(Box::new(derive(a, var))),
        Pow(_, 0) => zero(),
        Pow(a, m) => Mul(
            Box::new(Mul(
                Box::new(Const(Literal::from_ints(*m as i64, 0, 1))),
                Box::new(Pow(a.clone(), m - 1)),
            )),
            Box::new(derive(a, var)),
        ),
    }
    .fold()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn product_rule() {
        let e = parse("z1*conj(z1)", 1).unwrap();
        let d = wirtinger(&e, VarRef::z(0)).unwrap();
        assert_eq!(d.root(), &Node::Var(VarRef::zbar(0)));
    }

    #[test]
    fn holomorphic_has_zero_zbar_derivative() {
        let e = parse("z1^3", 1).unwrap();
        let d = wirtinger(&e, VarRef::zbar(0)).unwrap();
        assert_eq!(d.to_string(), "0");
    }

    #[test]
    fn derivative_of_real_part() {
        let e = parse("re(z1^2)", 1).unwrap();
        let d = wirtinger(&e, VarRef::z(0)).unwrap();
        for p in [crate::C64::new(0.3, 0.8), crate::C64::new(-2.0, 1.0)] {
            assert!((d.eval(&[p]).unwrap() - p).norm() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_variable() {
        let e = parse("z1", 1).unwrap();
        assert!(wirtinger(&e, VarRef::z(1)).is_err());
    }
}
