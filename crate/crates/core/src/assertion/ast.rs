//! Unary store predicates and binary store relations in one assertion AST.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::lang::{dot_expr, dotted, BinOp, Expr, VarName};
use crate::semantics::{eval, Store};

/// Which store a term variable reads. Unary formulas use only `Plain`;
/// relational formulas use only `Left`/`Right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Plain,
    Left,
    Right,
}

/// An expression whose variables are tagged with the store they read.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Side, VarName),
    Int(i64),
    Bin(BinOp, Box<Term>, Box<Term>),
    Not(Box<Term>),
}

impl Term {
    pub fn bin(op: BinOp, a: Term, b: Term) -> Term {
        Term::Bin(op, Box::new(a), Box::new(b))
    }

    /// Tag every variable of a program expression with `side`.
    pub fn of_expr(e: &Expr, side: Side) -> Term {
        match e {
            Expr::Var(x) => Term::Var(side, x.clone()),
            Expr::Int(k) => Term::Int(*k),
            Expr::Bin(op, a, b) => {
                Term::bin(*op, Term::of_expr(a, side), Term::of_expr(b, side))
            }
            Expr::Not(a) => Term::Not(Box::new(Term::of_expr(a, side))),
        }
    }

    /// The underlying program expression, if every variable has tag `side`.
    pub fn to_expr(&self, side: Side) -> Option<Expr> {
        match self {
            Term::Var(s, x) => (*s == side).then(|| Expr::Var(x.clone())),
            Term::Int(k) => Some(Expr::Int(*k)),
            Term::Bin(op, a, b) => Some(Expr::bin(*op, a.to_expr(side)?, b.to_expr(side)?)),
            Term::Not(a) => Some(Expr::Not(Box::new(a.to_expr(side)?))),
        }
    }

    pub fn sides(&self, out: &mut BTreeSet<Side>) {
        match self {
            Term::Var(s, _) => {
                out.insert(*s);
            }
            Term::Int(_) => {}
            Term::Bin(_, a, b) => {
                a.sides(out);
                b.sides(out);
            }
            Term::Not(a) => a.sides(out),
        }
    }

    pub fn vars(&self, side: Side, out: &mut BTreeSet<VarName>) {
        match self {
            Term::Var(s, x) => {
                if *s == side {
                    out.insert(x.clone());
                }
            }
            Term::Int(_) => {}
            Term::Bin(_, a, b) => {
                a.vars(side, out);
                b.vars(side, out);
            }
            Term::Not(a) => a.vars(side, out),
        }
    }

    fn map_vars(&self, f: &dyn Fn(Side, &str) -> Term) -> Term {
        match self {
            Term::Var(s, x) => f(*s, x),
            Term::Int(k) => Term::Int(*k),
            Term::Bin(op, a, b) => Term::bin(*op, a.map_vars(f), b.map_vars(f)),
            Term::Not(a) => Term::Not(Box::new(a.map_vars(f))),
        }
    }
}

/// Evaluate a term; `Plain` and `Left` read the first store, `Right` the
/// second (absent for unary evaluation).
pub fn eval_term(t: &Term, s: &Store, s2: Option<&Store>) -> i64 {
    match t {
        Term::Var(Side::Right, x) => s2.unwrap_or(s).get(x),
        Term::Var(_, x) => s.get(x),
        Term::Int(k) => *k,
        Term::Bin(op, a, b) => {
            let l = eval_term(a, s, s2);
            let r = eval_term(b, s, s2);
            let t = |b: bool| i64::from(b);
            match op {
                BinOp::Add => l.wrapping_add(r),
                BinOp::Sub => l.wrapping_sub(r),
                BinOp::Mul => l.wrapping_mul(r),
                BinOp::Mod => l.checked_rem(r).unwrap_or(0),
                BinOp::Eq => t(l == r),
                BinOp::Ne => t(l != r),
                BinOp::Lt => t(l < r),
                BinOp::Le => t(l <= r),
                BinOp::Gt => t(l > r),
                BinOp::Ge => t(l >= r),
                BinOp::And => t(l != 0 && r != 0),
                BinOp::Or => t(l != 0 || r != 0),
            }
        }
        Term::Not(a) => i64::from(eval_term(a, s, s2) == 0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn apply(self, l: i64, r: i64) -> bool {
        match self {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Gt => l > r,
            CmpOp::Ge => l >= r,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// An explicit finite set of stores (unary) or store pairs (relational),
/// listed as valuations of `vars`. The set constrains only `vars`; other
/// variables are unconstrained. A relational row is the left valuation
/// followed by the right valuation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExtSet {
    pub vars: Arc<Vec<VarName>>,
    pub relational: bool,
    pub rows: Arc<BTreeSet<Vec<i64>>>,
}

impl ExtSet {
    pub fn unary<I: IntoIterator<Item = Vec<i64>>>(vars: Vec<VarName>, rows: I) -> ExtSet {
        ExtSet {
            vars: Arc::new(vars),
            relational: false,
            rows: Arc::new(rows.into_iter().collect()),
        }
    }

    pub fn relational<I: IntoIterator<Item = Vec<i64>>>(vars: Vec<VarName>, rows: I) -> ExtSet {
        ExtSet {
            vars: Arc::new(vars),
            relational: true,
            rows: Arc::new(rows.into_iter().collect()),
        }
    }

    pub fn contains_store(&self, s: &Store) -> bool {
        self.rows.contains(&s.project(&self.vars))
    }

    pub fn contains_pair(&self, s: &Store, t: &Store) -> bool {
        let mut row = s.project(&self.vars);
        row.extend(t.project(&self.vars));
        self.rows.contains(&row)
    }
}

/// Pending semantic substitution, applied lazily at evaluation time. Used
/// when substituting into extensional sets, where syntactic replacement is
/// impossible. Each side's bindings are simultaneous.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SubstMap {
    pub left: Vec<(VarName, Expr)>,
    pub right: Vec<(VarName, Expr)>,
}

impl SubstMap {
    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    fn apply(&self, s: &Store, right: bool) -> Store {
        let binds = if right { &self.right } else { &self.left };
        if binds.is_empty() {
            return s.clone();
        }
        let vals: Vec<i64> = binds.iter().map(|(_, e)| eval(e, s)).collect();
        let mut out = s.clone();
        for ((x, _), v) in binds.iter().zip(vals) {
            out.set(x, v);
        }
        out
    }
}

/// Assertions: boolean combinations of term atoms, plus extensional sets.
///
/// `Truthy(t)` holds when `t` evaluates nonzero; it embeds program tests.
/// `Bagree(t, t')` holds when `t` and `t'` agree on truth value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bool(bool),
    Cmp(CmpOp, Term, Term),
    Truthy(Term),
    Bagree(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Ext(ExtSet),
    /// `Subst(f, m)` holds at stores exactly when `f` holds at the updated
    /// stores described by `m`.
    Subst(Box<Formula>, SubstMap),
}

impl Formula {
    pub fn tt() -> Formula {
        Formula::Bool(true)
    }

    pub fn ff() -> Formula {
        Formula::Bool(false)
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::tt(),
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::And(parts),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::ff(),
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Agreement on value: `<e> = <e'>`.
    pub fn agree(e: &Expr, e2: &Expr) -> Formula {
        Formula::Cmp(
            CmpOp::Eq,
            Term::of_expr(e, Side::Left),
            Term::of_expr(e2, Side::Right),
        )
    }

    /// Agreement on truth value.
    pub fn bagree(e: &Expr, e2: &Expr) -> Formula {
        Formula::Bagree(Term::of_expr(e, Side::Left), Term::of_expr(e2, Side::Right))
    }

    /// The left embedding: `e` is true in the left store.
    pub fn left(e: &Expr) -> Formula {
        Formula::Truthy(Term::of_expr(e, Side::Left))
    }

    /// The right embedding.
    pub fn right(e: &Expr) -> Formula {
        Formula::Truthy(Term::of_expr(e, Side::Right))
    }

    /// Test embedding for unary assertions: `e` is true in the store.
    pub fn test(e: &Expr) -> Formula {
        Formula::Truthy(Term::of_expr(e, Side::Plain))
    }

    pub fn sides(&self) -> BTreeSet<Side> {
        let mut out = BTreeSet::new();
        self.collect_sides(&mut out);
        out
    }

    fn collect_sides(&self, out: &mut BTreeSet<Side>) {
        match self {
            Formula::Bool(_) => {}
            Formula::Cmp(_, a, b) | Formula::Bagree(a, b) => {
                a.sides(out);
                b.sides(out);
            }
            Formula::Truthy(t) => t.sides(out),
            Formula::Not(f) => f.collect_sides(out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_sides(out);
                }
            }
            Formula::Implies(a, b) => {
                a.collect_sides(out);
                b.collect_sides(out);
            }
            Formula::Ext(e) => {
                if !e.vars.is_empty() {
                    if e.relational {
                        out.insert(Side::Left);
                        out.insert(Side::Right);
                    } else {
                        out.insert(Side::Plain);
                    }
                }
            }
            Formula::Subst(f, m) => {
                f.collect_sides(out);
                if !m.left.is_empty() && !m.right.is_empty() {
                    out.insert(Side::Left);
                    out.insert(Side::Right);
                }
            }
        }
    }

    /// Usable as a unary predicate: no Left/Right tags anywhere.
    pub fn is_unary(&self) -> bool {
        let s = self.sides();
        !s.contains(&Side::Left) && !s.contains(&Side::Right)
    }

    /// Usable as a store relation: no Plain tags anywhere.
    pub fn is_relational(&self) -> bool {
        !self.sides().contains(&Side::Plain)
    }

    /// Free variables on a given side. `Ext` sets contribute their variable
    /// list; pending substitutions contribute both replaced variables and
    /// replacement expressions (a safe over-approximation).
    pub fn vars(&self, side: Side, out: &mut BTreeSet<VarName>) {
        match self {
            Formula::Bool(_) => {}
            Formula::Cmp(_, a, b) | Formula::Bagree(a, b) => {
                a.vars(side, out);
                b.vars(side, out);
            }
            Formula::Truthy(t) => t.vars(side, out),
            Formula::Not(f) => f.vars(side, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.vars(side, out);
                }
            }
            Formula::Implies(a, b) => {
                a.vars(side, out);
                b.vars(side, out);
            }
            Formula::Ext(e) => {
                let include = match side {
                    Side::Plain => !e.relational,
                    Side::Left | Side::Right => e.relational,
                };
                if include {
                    out.extend(e.vars.iter().cloned());
                }
            }
            Formula::Subst(f, m) => {
                f.vars(side, out);
                let binds = match side {
                    Side::Right => &m.right,
                    _ => &m.left,
                };
                for (x, e) in binds {
                    out.insert(x.clone());
                    e.vars(out);
                }
            }
        }
    }

    pub fn map_terms(&self, f: &dyn Fn(&Term) -> Term) -> Formula {
        match self {
            Formula::Bool(_) | Formula::Ext(_) => self.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, f(a), f(b)),
            Formula::Truthy(t) => Formula::Truthy(f(t)),
            Formula::Bagree(a, b) => Formula::Bagree(f(a), f(b)),
            Formula::Not(g) => Formula::not(g.map_terms(f)),
            Formula::And(fs) => Formula::And(fs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.map_terms(f), b.map_terms(f)),
            Formula::Subst(g, m) => Formula::Subst(Box::new(g.map_terms(f)), m.clone()),
        }
    }
}

/// Satisfaction of a unary formula.
pub fn holds_u(f: &Formula, s: &Store) -> bool {
    match f {
        Formula::Bool(b) => *b,
        Formula::Cmp(op, a, b) => {
            op.apply(eval_term(a, s, None), eval_term(b, s, None))
        }
        Formula::Truthy(t) => eval_term(t, s, None) != 0,
        Formula::Bagree(a, b) => (eval_term(a, s, None) != 0) == (eval_term(b, s, None) != 0),
        Formula::Not(g) => !holds_u(g, s),
        Formula::And(fs) => fs.iter().all(|g| holds_u(g, s)),
        Formula::Or(fs) => fs.iter().any(|g| holds_u(g, s)),
        Formula::Implies(a, b) => !holds_u(a, s) || holds_u(b, s),
        Formula::Ext(e) => e.contains_store(s),
        Formula::Subst(g, m) => holds_u(g, &m.apply(s, false)),
    }
}

/// Satisfaction of a relational formula at a store pair.
pub fn holds_r(f: &Formula, s: &Store, t: &Store) -> bool {
    match f {
        Formula::Bool(b) => *b,
        Formula::Cmp(op, a, b) => {
            op.apply(eval_term(a, s, Some(t)), eval_term(b, s, Some(t)))
        }
        Formula::Truthy(u) => eval_term(u, s, Some(t)) != 0,
        Formula::Bagree(a, b) => {
            (eval_term(a, s, Some(t)) != 0) == (eval_term(b, s, Some(t)) != 0)
        }
        Formula::Not(g) => !holds_r(g, s, t),
        Formula::And(fs) => fs.iter().all(|g| holds_r(g, s, t)),
        Formula::Or(fs) => fs.iter().any(|g| holds_r(g, s, t)),
        Formula::Implies(a, b) => !holds_r(a, s, t) || holds_r(b, s, t),
        Formula::Ext(e) => e.contains_pair(s, t),
        Formula::Subst(g, m) => holds_r(g, &m.apply(s, false), &m.apply(t, true)),
    }
}

/// Substitute `e` for the plain variable `x` (capture-free; the language has
/// no binders). Extensional subformulas defer the substitution.
pub fn subst_unary(f: &Formula, x: &str, e: &Expr) -> Formula {
    let repl = Term::of_expr(e, Side::Plain);
    map_subst(f, &|side, name| {
        if side == Side::Plain && name == x {
            repl.clone()
        } else {
            Term::Var(side, name.to_string())
        }
    }, &SubstMap {
        left: vec![(x.to_string(), e.clone())],
        right: vec![],
    })
}

/// Relational substitution `R[x|x' := e|e']`; either side may be absent.
pub fn subst_rel(
    f: &Formula,
    left: Option<(&str, &Expr)>,
    right: Option<(&str, &Expr)>,
) -> Formula {
    let lrepl = left.map(|(x, e)| (x.to_string(), Term::of_expr(e, Side::Left)));
    let rrepl = right.map(|(x, e)| (x.to_string(), Term::of_expr(e, Side::Right)));
    let map = SubstMap {
        left: left
            .map(|(x, e)| vec![(x.to_string(), e.clone())])
            .unwrap_or_default(),
        right: right
            .map(|(x, e)| vec![(x.to_string(), e.clone())])
            .unwrap_or_default(),
    };
    map_subst(f, &|side, name| {
        match side {
            Side::Left => {
                if let Some((x, t)) = &lrepl {
                    if name == x {
                        return t.clone();
                    }
                }
            }
            Side::Right => {
                if let Some((x, t)) = &rrepl {
                    if name == x {
                        return t.clone();
                    }
                }
            }
            Side::Plain => {}
        }
        Term::Var(side, name.to_string())
    }, &map)
}

fn map_subst(f: &Formula, var_map: &dyn Fn(Side, &str) -> Term, pending: &SubstMap) -> Formula {
    match f {
        Formula::Ext(_) => Formula::Subst(Box::new(f.clone()), pending.clone()),
        Formula::Subst(_, _) => Formula::Subst(Box::new(f.clone()), pending.clone()),
        Formula::Not(g) => Formula::not(map_subst(g, var_map, pending)),
        Formula::And(fs) => {
            Formula::And(fs.iter().map(|g| map_subst(g, var_map, pending)).collect())
        }
        Formula::Or(fs) => {
            Formula::Or(fs.iter().map(|g| map_subst(g, var_map, pending)).collect())
        }
        Formula::Implies(a, b) => Formula::implies(
            map_subst(a, var_map, pending),
            map_subst(b, var_map, pending),
        ),
        _ => f.map_terms(&|t| t.map_vars(var_map)),
    }
}

/// Encode a relation as a unary predicate over doubled variables:
/// `Left(x)` becomes `x` and `Right(x)` becomes `x'`.
pub fn encode_plus(f: &Formula) -> Formula {
    match f {
        Formula::Ext(e) if e.relational => {
            let mut vars: Vec<VarName> = e.vars.iter().cloned().collect();
            vars.extend(e.vars.iter().map(|x| dotted(x)));
            let order: Vec<usize> = sorted_permutation(&vars);
            let sorted_vars: Vec<VarName> = order.iter().map(|&i| vars[i].clone()).collect();
            let rows = e
                .rows
                .iter()
                .map(|row| order.iter().map(|&i| row[i]).collect::<Vec<i64>>());
            Formula::Ext(ExtSet::unary(sorted_vars, rows))
        }
        Formula::Ext(_) => f.clone(),
        Formula::Subst(g, m) => {
            let mut left = m.left.clone();
            left.extend(
                m.right
                    .iter()
                    .map(|(x, e)| (dotted(x), dot_expr(e))),
            );
            Formula::Subst(
                Box::new(encode_plus(g)),
                SubstMap {
                    left,
                    right: vec![],
                },
            )
        }
        Formula::Not(g) => Formula::not(encode_plus(g)),
        Formula::And(fs) => Formula::And(fs.iter().map(encode_plus).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(encode_plus).collect()),
        Formula::Implies(a, b) => Formula::implies(encode_plus(a), encode_plus(b)),
        _ => f.map_terms(&|t| {
            t.map_vars(&|side, name| match side {
                Side::Right => Term::Var(Side::Plain, dotted(name)),
                _ => Term::Var(Side::Plain, name.to_string()),
            })
        }),
    }
}

fn sorted_permutation(names: &[VarName]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..names.len()).collect();
    idx.sort_by(|&a, &b| names[a].cmp(&names[b]));
    idx
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(Side::Plain, x) => write!(f, "{x}"),
            Term::Var(Side::Left, x) => write!(f, "{x}"),
            Term::Var(Side::Right, x) => write!(f, "{x}'"),
            Term::Int(k) => write!(f, "{k}"),
            Term::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Term::Not(a) => write!(f, "!{a}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Bool(true) => write!(f, "true"),
            Formula::Bool(false) => write!(f, "false"),
            Formula::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Truthy(t) => match t {
                Term::Var(_, _) | Term::Int(_) | Term::Not(_) => write!(f, "truthy({t})"),
                _ => write!(f, "truthy{t}"),
            },
            Formula::Bagree(a, b) => write!(f, "bagree({a}, {b})"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(fs) => {
                write!(f, "(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " && ")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " || ")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Ext(e) => {
                write!(f, "ext[{} rows over ", e.rows.len())?;
                for (i, v) in e.vars.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
            Formula::Subst(g, m) => {
                write!(f, "{g}[")?;
                for (i, (x, e)) in m.left.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}:={e}")?;
                }
                write!(f, "|")?;
                for (i, (x, e)) in m.right.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}':={e}")?;
                }
                write!(f, "]")
            }
        }
    }
}
