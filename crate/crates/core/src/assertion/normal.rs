//! Canonical form for schema matching: flattened and sorted `&&`/`||`,
//! constant folding, and a few truth-preserving atom rewrites. Two formulas
//! are treated as the same assertion when their normal forms are equal.

use super::ast::*;
use crate::lang::BinOp;

/// Normalize to a canonical form. Every rewrite preserves satisfaction at
/// every store (pair).
pub fn normalize(f: &Formula) -> Formula {
    match f {
        Formula::Bool(_) => f.clone(),
        Formula::Cmp(op, a, b) => norm_cmp(*op, norm_term(a), norm_term(b)),
        Formula::Truthy(t) => norm_truthy(norm_term(t)),
        Formula::Bagree(a, b) => {
            let a = norm_term(a);
            let b = norm_term(b);
            match (&a, &b) {
                (Term::Int(x), Term::Int(y)) => Formula::Bool((*x != 0) == (*y != 0)),
                _ => Formula::Bagree(a, b),
            }
        }
        Formula::Not(g) => match normalize(g) {
            Formula::Bool(b) => Formula::Bool(!b),
            Formula::Not(inner) => *inner,
            other => Formula::not(other),
        },
        Formula::And(fs) => {
            let mut parts = Vec::new();
            for g in fs {
                match normalize(g) {
                    Formula::Bool(true) => {}
                    Formula::Bool(false) => return Formula::ff(),
                    Formula::And(inner) => parts.extend(inner),
                    other => parts.push(other),
                }
            }
            parts.sort();
            parts.dedup();
            Formula::and(parts)
        }
        Formula::Or(fs) => {
            let mut parts = Vec::new();
            for g in fs {
                match normalize(g) {
                    Formula::Bool(false) => {}
                    Formula::Bool(true) => return Formula::tt(),
                    Formula::Or(inner) => parts.extend(inner),
                    other => parts.push(other),
                }
            }
            parts.sort();
            parts.dedup();
            Formula::or(parts)
        }
        Formula::Implies(a, b) => normalize(&Formula::Or(vec![
            Formula::not((**a).clone()),
            (**b).clone(),
        ])),
        Formula::Ext(e) => {
            if e.rows.is_empty() {
                Formula::ff()
            } else {
                f.clone()
            }
        }
        Formula::Subst(g, m) => {
            let g = normalize(g);
            if m.is_empty() {
                return g;
            }
            match g {
                Formula::Bool(b) => Formula::Bool(b),
                other => Formula::Subst(Box::new(other), m.clone()),
            }
        }
    }
}

pub fn equivalent(a: &Formula, b: &Formula) -> bool {
    normalize(a) == normalize(b)
}

fn norm_term(t: &Term) -> Term {
    match t {
        Term::Var(_, _) | Term::Int(_) => t.clone(),
        Term::Not(a) => match norm_term(a) {
            Term::Int(k) => Term::Int(i64::from(k == 0)),
            other => Term::Not(Box::new(other)),
        },
        Term::Bin(op, a, b) => {
            let a = norm_term(a);
            let b = norm_term(b);
            if let (Term::Int(x), Term::Int(y)) = (&a, &b) {
                let dummy = Term::bin(*op, Term::Int(*x), Term::Int(*y));
                return Term::Int(eval_term(&dummy, &zero_store(), None));
            }
            Term::bin(*op, a, b)
        }
    }
}

fn zero_store() -> crate::semantics::Store {
    crate::semantics::Store::zeroes(crate::semantics::Footprint::new(std::iter::empty()))
}

fn norm_cmp(op: CmpOp, a: Term, b: Term) -> Formula {
    if let (Term::Int(x), Term::Int(y)) = (&a, &b) {
        return Formula::Bool(op.apply(*x, *y));
    }
    // Orient strict/non-strict pairs one way; sort operands of symmetric ops.
    match op {
        CmpOp::Gt => Formula::Cmp(CmpOp::Lt, b, a),
        CmpOp::Ge => Formula::Cmp(CmpOp::Le, b, a),
        CmpOp::Eq | CmpOp::Ne => {
            if b < a {
                Formula::Cmp(op, b, a)
            } else {
                Formula::Cmp(op, a, b)
            }
        }
        _ => Formula::Cmp(op, a, b),
    }
}

/// Truth of a term, pushed down into formula structure where the term is
/// itself boolean-shaped.
fn norm_truthy(t: Term) -> Formula {
    match t {
        Term::Int(k) => Formula::Bool(k != 0),
        Term::Not(a) => normalize(&Formula::not(norm_truthy(*a))),
        Term::Bin(op, a, b) if op.is_comparison() => {
            let cmp = match op {
                BinOp::Eq => CmpOp::Eq,
                BinOp::Ne => CmpOp::Ne,
                BinOp::Lt => CmpOp::Lt,
                BinOp::Le => CmpOp::Le,
                BinOp::Gt => CmpOp::Gt,
                BinOp::Ge => CmpOp::Ge,
                _ => unreachable!(),
            };
            norm_cmp(cmp, *a, *b)
        }
        Term::Bin(BinOp::And, a, b) => {
            normalize(&Formula::And(vec![norm_truthy(*a), norm_truthy(*b)]))
        }
        Term::Bin(BinOp::Or, a, b) => {
            normalize(&Formula::Or(vec![norm_truthy(*a), norm_truthy(*b)]))
        }
        other => Formula::Truthy(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::quick_expr;

    #[test]
    fn and_flattens_sorts_dedups() {
        let x = Formula::test(&quick_expr("x > 0"));
        let y = Formula::test(&quick_expr("y > 0"));
        let a = Formula::And(vec![
            y.clone(),
            Formula::And(vec![x.clone(), Formula::tt()]),
            x.clone(),
        ]);
        let b = Formula::And(vec![x, y]);
        assert!(equivalent(&a, &b));
    }

    #[test]
    fn implies_becomes_or() {
        let x = Formula::test(&quick_expr("x > 0"));
        let y = Formula::test(&quick_expr("y > 0"));
        let a = Formula::implies(x.clone(), y.clone());
        let b = Formula::Or(vec![Formula::not(x), y]);
        assert!(equivalent(&a, &b));
    }

    #[test]
    fn truthy_of_negated_test() {
        // left(!e) and !left(e) denote the same relation.
        let e = quick_expr("y != 0");
        let neg = crate::lang::Expr::Not(Box::new(e.clone()));
        assert!(equivalent(&Formula::left(&neg), &Formula::not(Formula::left(&e))));
    }

    #[test]
    fn truthy_of_comparison_is_cmp() {
        let f = Formula::test(&quick_expr("x = y"));
        match normalize(&f) {
            Formula::Cmp(CmpOp::Eq, _, _) => {}
            other => panic!("expected comparison, got {other:?}"),
        }
    }

    #[test]
    fn empty_ext_is_false() {
        let e = Formula::Ext(ExtSet::unary(vec!["x".into()], Vec::<Vec<i64>>::new()));
        assert!(equivalent(&e, &Formula::ff()));
    }

    #[test]
    fn constant_folding() {
        let f = Formula::test(&quick_expr("3 < 4"));
        assert!(equivalent(&f, &Formula::tt()));
        let g = Formula::test(&quick_expr("2 * 3"));
        assert!(equivalent(&g, &Formula::tt()));
    }
}
