//! Formula file syntax.
//!
//! ```text
//! formula := disj ('->' formula)?
//! disj    := conj (('||' | 'or') conj)*
//! conj    := neg (('&&' | 'and') neg)*
//! neg     := '!' neg | 'true' | 'false'
//!          | 'agree' '(' expr ',' expr ')' | 'bagree' '(' expr ',' expr ')'
//!          | 'left' '(' expr ')' | 'right' '(' expr ')'
//!          | '(' formula ')' | chain
//! chain   := sum (cmpop sum)*          -- a < b <= c conjoins adjacent pairs
//! ```
//!
//! In relational formulas a primed identifier (`x'`) reads the right store
//! and an unprimed one the left; inside `agree`/`bagree` the slot fixes the
//! side, and inside `left(e)`/`right(e)` the whole program expression `e` is
//! read on that side. In unary formulas every identifier (primed or not) is
//! a plain variable, which is how predicates over doubled variables are
//! written.

use crate::lang::parse::{lex, Cursor, Tok};
use crate::lang::{BinOp, Expr, LangError};

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Unary,
    Relational,
}

pub fn parse_formula(src: &str, arity: Arity) -> Result<Formula, LangError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(toks);
    let f = parse_imp(&mut cur, arity)?;
    if !cur.at_end() {
        return Err(LangError::Syntax(
            cur.here(),
            format!("unexpected trailing input: {}", cur.describe()),
        ));
    }
    Ok(f)
}

/// Parse the remainder of an existing token cursor as a formula.
pub fn parse_formula_at(cur: &mut Cursor, arity: Arity) -> Result<Formula, LangError> {
    parse_imp(cur, arity)
}

fn parse_imp(cur: &mut Cursor, arity: Arity) -> Result<Formula, LangError> {
    let lhs = parse_disj(cur, arity)?;
    if cur.eat_sym("->") {
        let rhs = parse_imp(cur, arity)?;
        return Ok(Formula::implies(lhs, rhs));
    }
    Ok(lhs)
}

fn parse_disj(cur: &mut Cursor, arity: Arity) -> Result<Formula, LangError> {
    let mut parts = vec![parse_conj(cur, arity)?];
    while cur.eat_sym("||") || cur.eat_kw("or") {
        parts.push(parse_conj(cur, arity)?);
    }
    Ok(Formula::or(parts))
}

fn parse_conj(cur: &mut Cursor, arity: Arity) -> Result<Formula, LangError> {
    let mut parts = vec![parse_neg(cur, arity)?];
    while cur.eat_sym("&&") || cur.eat_kw("and") {
        parts.push(parse_neg(cur, arity)?);
    }
    Ok(Formula::and(parts))
}

fn parse_neg(cur: &mut Cursor, arity: Arity) -> Result<Formula, LangError> {
    if cur.eat_sym("!") {
        return Ok(Formula::not(parse_neg(cur, arity)?));
    }
    if cur.eat_kw("true") {
        return Ok(Formula::tt());
    }
    if cur.eat_kw("false") {
        return Ok(Formula::ff());
    }
    for (kw, two_slots) in [("agree", true), ("bagree", true), ("left", false), ("right", false)]
    {
        if peek_kw(cur, kw) {
            if arity == Arity::Unary {
                return Err(LangError::Syntax(
                    cur.here(),
                    format!("`{kw}` is not allowed in a unary formula"),
                ));
            }
            cur.bump();
            cur.expect_sym("(")?;
            let e1 = parse_sided_expr(cur, if kw == "right" { Side::Right } else { Side::Left })?;
            let f = if two_slots {
                cur.expect_sym(",")?;
                let e2 = parse_sided_expr(cur, Side::Right)?;
                match kw {
                    "agree" => Formula::agree(&e1, &e2),
                    _ => Formula::bagree(&e1, &e2),
                }
            } else if kw == "left" {
                Formula::left(&e1)
            } else {
                Formula::right(&e1)
            };
            cur.expect_sym(")")?;
            return Ok(f);
        }
    }
    if matches!(cur.peek(), Some(Tok::Sym("("))) {
        // Either a grouped formula or a parenthesized arithmetic term; try
        // the formula reading first and fall back to a term chain when an
        // arithmetic or comparison operator follows the closing paren.
        let lparen = cur.pos;
        cur.bump();
        if let Ok(f) = parse_imp(cur, arity) {
            if cur.eat_sym(")") && !term_continues(cur) {
                return Ok(f);
            }
        }
        cur.pos = lparen;
        let first = parse_sum(cur, arity)?;
        return parse_chain_from(cur, arity, first);
    }
    let first = parse_sum(cur, arity)?;
    parse_chain_from(cur, arity, first)
}

fn term_continues(cur: &Cursor) -> bool {
    comparison_next(cur)
        || matches!(cur.peek(), Some(Tok::Sym("*" | "%" | "+" | "-")))
        || matches!(cur.peek(), Some(Tok::Ident(w)) if w == "mod")
}

fn peek_kw(cur: &Cursor, kw: &str) -> bool {
    matches!(cur.peek(), Some(Tok::Ident(w)) if w == kw)
}

fn comparison_next(cur: &Cursor) -> bool {
    matches!(
        cur.peek(),
        Some(Tok::Sym("=" | "==" | "!=" | "<>" | "<" | "<=" | ">" | ">="))
    )
}

fn cmp_op(cur: &mut Cursor) -> Option<CmpOp> {
    let op = match cur.peek() {
        Some(Tok::Sym("=" | "==")) => CmpOp::Eq,
        Some(Tok::Sym("!=" | "<>")) => CmpOp::Ne,
        Some(Tok::Sym("<")) => CmpOp::Lt,
        Some(Tok::Sym("<=")) => CmpOp::Le,
        Some(Tok::Sym(">")) => CmpOp::Gt,
        Some(Tok::Sym(">=")) => CmpOp::Ge,
        _ => return None,
    };
    cur.bump();
    Some(op)
}

/// Comparison chain: `a op b op c` conjoins `a op b` and `b op c`. A lone
/// term is its own truth value.
fn parse_chain_from(cur: &mut Cursor, arity: Arity, first: Term) -> Result<Formula, LangError> {
    let mut terms = vec![first];
    let mut ops = Vec::new();
    while let Some(op) = cmp_op(cur) {
        ops.push(op);
        terms.push(parse_sum(cur, arity)?);
    }
    if ops.is_empty() {
        return Ok(Formula::Truthy(terms.into_iter().next().unwrap()));
    }
    let mut parts = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        parts.push(Formula::Cmp(*op, terms[i].clone(), terms[i + 1].clone()));
    }
    Ok(Formula::and(parts))
}

fn parse_sum(cur: &mut Cursor, arity: Arity) -> Result<Term, LangError> {
    let mut t = parse_product(cur, arity)?;
    loop {
        if cur.eat_sym("+") {
            t = Term::bin(BinOp::Add, t, parse_product(cur, arity)?);
        } else if cur.eat_sym("-") {
            t = Term::bin(BinOp::Sub, t, parse_product(cur, arity)?);
        } else {
            break;
        }
    }
    Ok(t)
}

fn parse_product(cur: &mut Cursor, arity: Arity) -> Result<Term, LangError> {
    let mut t = parse_term_atom(cur, arity)?;
    loop {
        if cur.eat_sym("*") {
            t = Term::bin(BinOp::Mul, t, parse_term_atom(cur, arity)?);
        } else if cur.eat_sym("%") || cur.eat_kw("mod") {
            t = Term::bin(BinOp::Mod, t, parse_term_atom(cur, arity)?);
        } else {
            break;
        }
    }
    Ok(t)
}

fn parse_term_atom(cur: &mut Cursor, arity: Arity) -> Result<Term, LangError> {
    if cur.eat_sym("-") {
        let t = parse_term_atom(cur, arity)?;
        return Ok(match t {
            Term::Int(k) => Term::Int(-k),
            other => Term::bin(BinOp::Sub, Term::Int(0), other),
        });
    }
    if cur.eat_sym("(") {
        let t = parse_sum(cur, arity)?;
        cur.expect_sym(")")?;
        return Ok(t);
    }
    match cur.peek().cloned() {
        Some(Tok::Int(k)) => {
            cur.bump();
            Ok(Term::Int(k))
        }
        Some(Tok::Ident(x)) => {
            cur.bump();
            Ok(ident_term(&x, arity))
        }
        _ => Err(LangError::Syntax(
            cur.here(),
            format!("expected a term, found {}", cur.describe()),
        )),
    }
}

fn ident_term(x: &str, arity: Arity) -> Term {
    match arity {
        Arity::Unary => Term::Var(Side::Plain, x.to_string()),
        Arity::Relational => {
            if let Some(base) = x.strip_suffix('\'') {
                Term::Var(Side::Right, base.to_string())
            } else {
                Term::Var(Side::Left, x.to_string())
            }
        }
    }
}

/// A whole program expression inside `agree`/`bagree`/`left`/`right`; primes
/// are accepted and stripped, the slot alone fixes the side.
fn parse_sided_expr(cur: &mut Cursor, side: Side) -> Result<Expr, LangError> {
    let e = crate::lang::parse::parse_expr(cur)?;
    let stripped = e.rename(&|x| x.strip_suffix('\'').unwrap_or(x).to_string());
    if side == Side::Left {
        // Primes in a left slot would silently read the wrong store.
        let mut vars = std::collections::BTreeSet::new();
        e.vars(&mut vars);
        if let Some(bad) = vars.iter().find(|v| v.ends_with('\'')) {
            return Err(LangError::Syntax(
                cur.here(),
                format!("primed variable `{bad}` in a left-side slot"),
            ));
        }
    }
    Ok(stripped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertion::{equivalent, holds_r, holds_u, normalize};
    use crate::semantics::{Footprint, Store};

    #[test]
    fn relational_primes() {
        let f = parse_formula("x = x' && x > 3", Arity::Relational).unwrap();
        assert!(f.is_relational());
        let fp = Footprint::new(["x".to_string()]);
        let s = Store::from_pairs(fp.clone(), &[("x", 4)]);
        assert!(holds_r(&f, &s, &s));
        let t = Store::from_pairs(fp, &[("x", 5)]);
        assert!(!holds_r(&f, &s, &t));
    }

    #[test]
    fn chained_comparisons() {
        let f = parse_formula("z > z' > 0", Arity::Relational).unwrap();
        let fp = Footprint::new(["z".to_string()]);
        let s = Store::from_pairs(fp.clone(), &[("z", 5)]);
        let t = Store::from_pairs(fp.clone(), &[("z", 2)]);
        assert!(holds_r(&f, &s, &t));
        let zero = Store::from_pairs(fp, &[("z", 0)]);
        assert!(!holds_r(&f, &s, &zero));
    }

    #[test]
    fn unary_primes_are_plain_names() {
        let f = parse_formula("x = x'", Arity::Unary).unwrap();
        assert!(f.is_unary());
        let fp = Footprint::new(["x".to_string(), "x'".to_string()]);
        let s = Store::from_pairs(fp.clone(), &[("x", 3), ("x'", 3)]);
        assert!(holds_u(&f, &s));
        let t = Store::from_pairs(fp, &[("x", 3), ("x'", 4)]);
        assert!(!holds_u(&t_f(), &t));
        fn t_f() -> Formula {
            parse_formula("x = x'", Arity::Unary).unwrap()
        }
    }

    #[test]
    fn sugar_forms() {
        let f = parse_formula("agree(x, x) && bagree(y != 0, y' != 0) && left(z > 0) && right(w % 3 != 0)", Arity::Relational).unwrap();
        assert!(f.is_relational());
        assert!(parse_formula("agree(x, x)", Arity::Unary).is_err());
        assert!(parse_formula("left(x' > 0)", Arity::Relational).is_err());
    }

    #[test]
    fn grouped_formula_vs_term_parens() {
        let a = parse_formula("(x > 0 || y > 0) && z = 1", Arity::Unary).unwrap();
        match normalize(&a) {
            Formula::And(_) => {}
            other => panic!("unexpected {other:?}"),
        }
        let b = parse_formula("(x + 1) * 2 = y", Arity::Unary).unwrap();
        let fp = Footprint::new(["x".to_string(), "y".to_string()]);
        let s = Store::from_pairs(fp, &[("x", 1), ("y", 4)]);
        assert!(holds_u(&b, &s));
        // A parenthesized formula followed by a comparison re-parses as term.
        let c = parse_formula("(x) = y", Arity::Unary).unwrap();
        let c2 = parse_formula("x = y", Arity::Unary).unwrap();
        assert!(equivalent(&c, &c2));
    }

    #[test]
    fn implication_and_keywords() {
        let f = parse_formula("x > 0 -> x >= 1", Arity::Unary).unwrap();
        let fp = Footprint::new(["x".to_string()]);
        for v in -3..=3 {
            assert!(holds_u(&f, &Store::from_pairs(fp.clone(), &[("x", v)])));
        }
    }
}
