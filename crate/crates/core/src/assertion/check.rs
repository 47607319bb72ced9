//! Bounded entailment: decide `F => G` by exhaustive enumeration of stores
//! over a declared interval, extended with the explicit rows of any
//! extensional subformulas.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use super::ast::*;
use crate::lang::VarName;
use crate::par;
use crate::semantics::{Domain, Footprint, SemError, Store, ENUM_BUDGET};

/// Outcome of a bounded entailment check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entailment {
    Holds,
    /// Unary counterexample store, or a left/right pair.
    Fails(Store, Option<Store>),
}

impl Entailment {
    pub fn holds(&self) -> bool {
        matches!(self, Entailment::Holds)
    }
}

/// Candidate stores drawn from extensional rows, projected onto `fp` (values
/// for footprint variables missing from a row default to 0).
fn ext_candidates(fs: &[&Formula], fp: &Arc<Footprint>, relational: bool) -> Vec<(Store, Option<Store>)> {
    let mut sets = Vec::new();
    for f in fs {
        collect_ext(f, &mut sets);
    }
    let mut out = Vec::new();
    for e in sets {
        if e.relational != relational {
            continue;
        }
        for row in e.rows.iter() {
            if relational {
                let k = e.vars.len();
                let mut s = Store::zeroes(fp.clone());
                let mut t = Store::zeroes(fp.clone());
                for (i, x) in e.vars.iter().enumerate() {
                    s.set(x, row[i]);
                    t.set(x, row[k + i]);
                }
                out.push((s, Some(t)));
            } else {
                let mut s = Store::zeroes(fp.clone());
                for (i, x) in e.vars.iter().enumerate() {
                    s.set(x, row[i]);
                }
                out.push((s, None));
            }
        }
    }
    out
}

fn collect_ext(f: &Formula, out: &mut Vec<ExtSet>) {
    match f {
        Formula::Ext(e) => out.push(e.clone()),
        Formula::Not(g) | Formula::Subst(g, _) => collect_ext(g, out),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_ext(g, out);
            }
        }
        Formula::Implies(a, b) => {
            collect_ext(a, out);
            collect_ext(b, out);
        }
        _ => {}
    }
}

/// The footprint a unary entailment ranges over.
pub fn unary_footprint(fs: &[&Formula], extra: &BTreeSet<VarName>) -> Arc<Footprint> {
    let mut vars = extra.clone();
    for f in fs {
        f.vars(Side::Plain, &mut vars);
    }
    Footprint::new(vars)
}

/// The per-side footprints a relational entailment ranges over.
pub fn rel_footprints(
    fs: &[&Formula],
    extra_l: &BTreeSet<VarName>,
    extra_r: &BTreeSet<VarName>,
) -> (Arc<Footprint>, Arc<Footprint>) {
    let mut lv = extra_l.clone();
    let mut rv = extra_r.clone();
    for f in fs {
        f.vars(Side::Left, &mut lv);
        f.vars(Side::Right, &mut rv);
    }
    (Footprint::new(lv), Footprint::new(rv))
}

fn check_budget(total: u64, vars: usize, dom: &Domain) -> Result<(), SemError> {
    if total > ENUM_BUDGET {
        return Err(SemError::EnumerationTooLarge {
            vars,
            domain: dom.to_string(),
            budget: ENUM_BUDGET,
        });
    }
    Ok(())
}

/// Bounded `F => G` over unary stores.
pub fn implies_bounded_u(
    f: &Formula,
    g: &Formula,
    dom: Domain,
    extra_vars: &BTreeSet<VarName>,
) -> Result<Entailment, SemError> {
    let fp = unary_footprint(&[f, g], extra_vars);
    for (s, _) in ext_candidates(&[f, g], &fp, false) {
        if holds_u(f, &s) && !holds_u(g, &s) {
            return Ok(Entailment::Fails(s, None));
        }
    }
    let total = dom
        .count_stores(fp.len())
        .ok_or(SemError::EnumerationTooLarge {
            vars: fp.len(),
            domain: dom.to_string(),
            budget: ENUM_BUDGET,
        })?;
    check_budget(total, fp.len(), &dom)?;
    let found = par::pool().install(|| {
        (0..total).into_par_iter().find_first(|&i| {
            let s = dom.store_at(&fp, i);
            holds_u(f, &s) && !holds_u(g, &s)
        })
    });
    Ok(match found {
        Some(i) => Entailment::Fails(dom.store_at(&fp, i), None),
        None => Entailment::Holds,
    })
}

/// Bounded `F => G` over pairs of stores.
pub fn implies_bounded_r(
    f: &Formula,
    g: &Formula,
    dom: Domain,
    extra_l: &BTreeSet<VarName>,
    extra_r: &BTreeSet<VarName>,
) -> Result<Entailment, SemError> {
    let (fl, fr) = rel_footprints(&[f, g], extra_l, extra_r);
    for (s, t) in ext_candidates(&[f, g], &fl, true) {
        let t = t.expect("relational candidate");
        // Re-project the right store onto the right footprint.
        let mut tr = Store::zeroes(fr.clone());
        for x in fr.names() {
            tr.set(x, t.get(x));
        }
        if holds_r(f, &s, &tr) && !holds_r(g, &s, &tr) {
            return Ok(Entailment::Fails(s, Some(tr)));
        }
    }
    let nl = dom
        .count_stores(fl.len())
        .ok_or(SemError::EnumerationTooLarge {
            vars: fl.len(),
            domain: dom.to_string(),
            budget: ENUM_BUDGET,
        })?;
    let nr = dom
        .count_stores(fr.len())
        .ok_or(SemError::EnumerationTooLarge {
            vars: fr.len(),
            domain: dom.to_string(),
            budget: ENUM_BUDGET,
        })?;
    let total = nl.checked_mul(nr).ok_or(SemError::EnumerationTooLarge {
        vars: fl.len() + fr.len(),
        domain: dom.to_string(),
        budget: ENUM_BUDGET,
    })?;
    check_budget(total, fl.len() + fr.len(), &dom)?;
    let found = par::pool().install(|| {
        (0..total).into_par_iter().find_first(|&i| {
            let s = dom.store_at(&fl, i % nl);
            let t = dom.store_at(&fr, i / nl);
            holds_r(f, &s, &t) && !holds_r(g, &s, &t)
        })
    });
    Ok(match found {
        Some(i) => Entailment::Fails(dom.store_at(&fl, i % nl), Some(dom.store_at(&fr, i / nl))),
        None => Entailment::Holds,
    })
}

/// Bounded entailment dispatching on formula arity. Relational when either
/// side mentions a tagged variable.
pub fn implies_bounded(f: &Formula, g: &Formula, dom: Domain) -> Result<Entailment, SemError> {
    let relational = !f.is_unary() || !g.is_unary();
    if relational {
        implies_bounded_r(f, g, dom, &BTreeSet::new(), &BTreeSet::new())
    } else {
        implies_bounded_u(f, g, dom, &BTreeSet::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertion::parse::{parse_formula, Arity};
    use crate::lang::parse::quick_expr;

    fn rel(src: &str) -> Formula {
        parse_formula(src, Arity::Relational).unwrap()
    }

    #[test]
    fn holds_of_agreement_forms() {
        let fpx = Footprint::new(["x".to_string(), "y".to_string()]);
        let s3 = Store::from_pairs(fpx.clone(), &[("x", 3)]);
        assert!(holds_r(&rel("agree(x, x)"), &s3, &s3));
        let s_l = Store::from_pairs(fpx.clone(), &[("y", 2)]);
        let s_r = Store::from_pairs(fpx.clone(), &[("y", 0)]);
        assert!(holds_r(&rel("left(y != 0)"), &s_l, &s_r));
        assert!(!holds_r(&rel("right(y != 0)"), &s_l, &s_r));
        // Truth-value agreement only needs both sides nonzero.
        let s5 = Store::from_pairs(fpx.clone(), &[("y", 5)]);
        let sm1 = Store::from_pairs(fpx, &[("y", -1)]);
        assert!(holds_r(&rel("bagree(y != 0, y != 0)"), &s5, &sm1));
    }

    #[test]
    fn subst_rel_matches_semantic_definition() {
        // R[x|x' := x+1 | x+2] at (x=0, x'=-1): holds iff 0+1 = -1+2.
        let r = rel("agree(x, x)");
        let e1 = quick_expr("x + 1");
        let e2 = quick_expr("x + 2");
        let sub = subst_rel(&r, Some(("x", &e1)), Some(("x", &e2)));
        let fpx = Footprint::new(["x".to_string()]);
        let s = Store::from_pairs(fpx.clone(), &[("x", 0)]);
        let t = Store::from_pairs(fpx, &[("x", -1)]);
        assert!(holds_r(&sub, &s, &t));
    }

    #[test]
    fn one_sided_subst_leaves_other_side() {
        let r = rel("left(x > 0) && right(x > 0)");
        let zero = quick_expr("0");
        let sub = subst_rel(&r, Some(("x", &zero)), None);
        let fpx = Footprint::new(["x".to_string()]);
        let pos = Store::from_pairs(fpx.clone(), &[("x", 5)]);
        // Left conjunct becomes 0 > 0: false everywhere.
        assert!(!holds_r(&sub, &pos, &pos));
        // Right conjunct untouched: substituting on the right too would differ.
        let sub_r = subst_rel(&r, None, Some(("x", &zero)));
        assert!(!holds_r(&sub_r, &pos, &pos));
        let only_left = rel("left(x > 0)");
        let sub2 = subst_rel(&only_left, None, Some(("x", &zero)));
        assert!(holds_r(&sub2, &pos, &pos));
    }

    #[test]
    fn encode_plus_matches_pair_semantics() {
        let dom = Domain::new(-2, 2).unwrap();
        let r = rel("agree(x, y) && left(x > y)");
        let enc = encode_plus(&r);
        assert!(enc.is_unary());
        let fpx = Footprint::new(["x".to_string(), "y".to_string()]);
        let fpu = unary_footprint(&[&enc], &BTreeSet::new());
        let n = dom.count_stores(2).unwrap();
        for i in 0..n {
            for j in 0..n {
                let s = dom.store_at(&fpx, i);
                let t = dom.store_at(&fpx, j);
                // Merge s with the primed rename of t.
                let mut u = Store::zeroes(fpu.clone());
                for x in ["x", "y"] {
                    u.set(x, s.get(x));
                    u.set(&format!("{x}'"), t.get(x));
                }
                assert_eq!(holds_r(&r, &s, &t), holds_u(&enc, &u));
            }
        }
    }

    #[test]
    fn encode_plus_of_left_is_undotted() {
        let f = rel("left(y != 0)");
        let enc = encode_plus(&f);
        let expect = Formula::test(&quick_expr("y != 0"));
        assert!(crate::assertion::equivalent(&enc, &expect));
        // agree(x,x) encodes to x = x'.
        let a = encode_plus(&rel("agree(x, x)"));
        let mut vars = BTreeSet::new();
        a.vars(Side::Plain, &mut vars);
        assert!(vars.contains("x") && vars.contains("x'"));
    }

    #[test]
    fn implies_bounded_examples() {
        let dom = Domain::new(-2, 2).unwrap();
        let f = rel("left(x > 0)");
        let g = rel("agree(x, x)");
        match implies_bounded(&f, &g, dom).unwrap() {
            Entailment::Fails(s, Some(t)) => {
                assert!(s.get("x") > 0);
                assert_ne!(s.get("x"), t.get("x"));
            }
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(implies_bounded(&f, &f, dom).unwrap().holds());
        let dom8 = Domain::new(-8, 8).unwrap();
        // agree(x,x) && left(x>3) => bagree(y != 4, y != 4)[y:=x | y:=x]
        let pre = rel("agree(x, x) && left(x > 3)");
        let bag = rel("bagree(y != 4, y != 4)");
        let x = quick_expr("x");
        let post = subst_rel(&bag, Some(("y", &x)), Some(("y", &x)));
        assert!(implies_bounded(&pre, &post, dom8).unwrap().holds());
    }

    #[test]
    fn empty_domain_rejected() {
        assert!(Domain::new(3, 2).is_err());
    }

    #[test]
    fn ext_rows_outside_domain_are_checked() {
        // A one-row extensional set far outside the interval still drives
        // the check.
        let ext = Formula::Ext(ExtSet::unary(vec!["x".into()], vec![vec![100]]));
        let g = parse_formula("x < 50", Arity::Unary).unwrap();
        let dom = Domain::new(-2, 2).unwrap();
        match implies_bounded(&ext, &g, dom).unwrap() {
            Entailment::Fails(s, None) => assert_eq!(s.get("x"), 100),
            other => panic!("expected ext-row witness, got {other:?}"),
        }
    }
}
