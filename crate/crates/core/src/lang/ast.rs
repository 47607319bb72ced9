//! Labelled command syntax and the structural label functions.

use std::collections::BTreeSet;
use std::fmt;

use super::LangError;

pub type VarName = String;

/// Control label attached to atomic and compound commands. Labels in main
/// programs are non-negative; negative labels appear only in intermediate
/// configurations produced by the transition semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub i64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Mod => "%",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

/// Integer expressions. Evaluation is total: comparisons and logical
/// operators yield 1 or 0, truth is any nonzero value, and `%` with divisor
/// zero yields 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Var(VarName),
    Int(i64),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    /// All variable names occurring in the expression.
    pub fn vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Int(_) => {}
            Expr::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Not(a) => a.vars(out),
        }
    }

    /// Rename every variable with `f`.
    pub fn rename(&self, f: &dyn Fn(&str) -> VarName) -> Expr {
        match self {
            Expr::Var(x) => Expr::Var(f(x)),
            Expr::Int(k) => Expr::Int(*k),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.rename(f), b.rename(f)),
            Expr::Not(a) => Expr::Not(Box::new(a.rename(f))),
        }
    }
}

/// Commands with integer labels. Sequences carry no label of their own:
/// the label of `c;d` is the label of `c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmd {
    Skip(Label),
    Assign(Label, VarName, Expr),
    Seq(Box<Cmd>, Box<Cmd>),
    Choice(Label, Box<Cmd>, Box<Cmd>),
    If(Label, Expr, Box<Cmd>, Box<Cmd>),
    While(Label, Expr, Box<Cmd>),
}

/// Coarse command kind, used when comparing control structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmdKind {
    Skip,
    Assign,
    Choice,
    If,
    While,
}

impl Cmd {
    pub fn seq(a: Cmd, b: Cmd) -> Cmd {
        Cmd::Seq(Box::new(a), Box::new(b))
    }

    /// Entry label: `lab(c;d) = lab(c)`.
    pub fn lab(&self) -> Label {
        match self {
            Cmd::Skip(n)
            | Cmd::Assign(n, _, _)
            | Cmd::Choice(n, _, _)
            | Cmd::If(n, _, _, _)
            | Cmd::While(n, _, _) => *n,
            Cmd::Seq(a, _) => a.lab(),
        }
    }

    /// Kind of the labelled head node (sequences defer to their head).
    pub fn kind(&self) -> CmdKind {
        match self {
            Cmd::Skip(_) => CmdKind::Skip,
            Cmd::Assign(_, _, _) => CmdKind::Assign,
            Cmd::Choice(_, _, _) => CmdKind::Choice,
            Cmd::If(_, _, _, _) => CmdKind::If,
            Cmd::While(_, _, _) => CmdKind::While,
            Cmd::Seq(a, _) => a.kind(),
        }
    }

    /// The set of labels occurring in the command.
    pub fn labs(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.collect_labs(&mut out);
        out
    }

    fn collect_labs(&self, out: &mut BTreeSet<Label>) {
        match self {
            Cmd::Skip(n) => {
                out.insert(*n);
            }
            Cmd::Assign(n, _, _) => {
                out.insert(*n);
            }
            Cmd::Seq(a, b) => {
                a.collect_labs(out);
                b.collect_labs(out);
            }
            Cmd::Choice(n, a, b) | Cmd::If(n, _, a, b) => {
                out.insert(*n);
                a.collect_labs(out);
                b.collect_labs(out);
            }
            Cmd::While(n, _, a) => {
                out.insert(*n);
                a.collect_labs(out);
            }
        }
    }

    /// Labels unique and non-negative.
    pub fn ok(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.ok_walk(&mut seen)
    }

    fn ok_walk(&self, seen: &mut BTreeSet<Label>) -> bool {
        let fresh = |n: &Label, seen: &mut BTreeSet<Label>| n.0 >= 0 && seen.insert(*n);
        match self {
            Cmd::Skip(n) | Cmd::Assign(n, _, _) => fresh(n, seen),
            Cmd::Seq(a, b) => a.ok_walk(seen) && b.ok_walk(seen),
            Cmd::Choice(n, a, b) | Cmd::If(n, _, a, b) => {
                fresh(n, seen) && a.ok_walk(seen) && b.ok_walk(seen)
            }
            Cmd::While(n, _, a) => fresh(n, seen) && a.ok_walk(seen),
        }
    }

    /// The unique subcommand whose own label is `n` (never a sequence node).
    pub fn sub(&self, n: Label) -> Result<&Cmd, LangError> {
        self.find_sub(n).ok_or(LangError::NoSuchLabel(n))
    }

    fn find_sub(&self, n: Label) -> Option<&Cmd> {
        match self {
            Cmd::Skip(m) | Cmd::Assign(m, _, _) => (*m == n).then_some(self),
            Cmd::Seq(a, b) => a.find_sub(n).or_else(|| b.find_sub(n)),
            Cmd::Choice(m, a, b) | Cmd::If(m, _, a, b) => {
                if *m == n {
                    Some(self)
                } else {
                    a.find_sub(n).or_else(|| b.find_sub(n))
                }
            }
            Cmd::While(m, _, a) => {
                if *m == n {
                    Some(self)
                } else {
                    a.find_sub(n)
                }
            }
        }
    }

    /// True iff `b` occurs as a subterm (sequence nodes included).
    pub fn contains_subterm(&self, b: &Cmd) -> bool {
        if self == b {
            return true;
        }
        match self {
            Cmd::Skip(_) | Cmd::Assign(_, _, _) => false,
            Cmd::Seq(x, y) | Cmd::Choice(_, x, y) | Cmd::If(_, _, x, y) => {
                x.contains_subterm(b) || y.contains_subterm(b)
            }
            Cmd::While(_, _, x) => x.contains_subterm(b),
        }
    }

    /// Replace the (unique) subterm equal to `from` with `to`.
    pub fn replace_subterm(&self, from: &Cmd, to: &Cmd) -> Cmd {
        if self == from {
            return to.clone();
        }
        match self {
            Cmd::Skip(_) | Cmd::Assign(_, _, _) => self.clone(),
            Cmd::Seq(a, b) => Cmd::seq(a.replace_subterm(from, to), b.replace_subterm(from, to)),
            Cmd::Choice(n, a, b) => Cmd::Choice(
                *n,
                Box::new(a.replace_subterm(from, to)),
                Box::new(b.replace_subterm(from, to)),
            ),
            Cmd::If(n, e, a, b) => Cmd::If(
                *n,
                e.clone(),
                Box::new(a.replace_subterm(from, to)),
                Box::new(b.replace_subterm(from, to)),
            ),
            Cmd::While(n, e, a) => {
                Cmd::While(*n, e.clone(), Box::new(a.replace_subterm(from, to)))
            }
        }
    }

    pub fn contains_choice(&self) -> bool {
        match self {
            Cmd::Skip(_) | Cmd::Assign(_, _, _) => false,
            Cmd::Choice(_, _, _) => true,
            Cmd::Seq(a, b) | Cmd::If(_, _, a, b) => a.contains_choice() || b.contains_choice(),
            Cmd::While(_, _, a) => a.contains_choice(),
        }
    }

    /// All variable names occurring in the command.
    pub fn vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Cmd::Skip(_) => {}
            Cmd::Assign(_, x, e) => {
                out.insert(x.clone());
                e.vars(out);
            }
            Cmd::Seq(a, b) | Cmd::Choice(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Cmd::If(_, e, a, b) => {
                e.vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Cmd::While(_, e, a) => {
                e.vars(out);
                a.collect_vars(out);
            }
        }
    }

    /// Variables read or written by the head action at this node only
    /// (assignment target and expression, or branch test).
    pub fn head_vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        match self {
            Cmd::Skip(_) | Cmd::Choice(_, _, _) => {}
            Cmd::Assign(_, x, e) => {
                out.insert(x.clone());
                e.vars(&mut out);
            }
            Cmd::If(_, e, _, _) | Cmd::While(_, e, _) => e.vars(&mut out),
            Cmd::Seq(a, _) => return a.head_vars(),
        }
        out
    }

    /// Rename every variable with `f`, keeping labels unchanged.
    pub fn rename_vars(&self, f: &dyn Fn(&str) -> VarName) -> Cmd {
        match self {
            Cmd::Skip(n) => Cmd::Skip(*n),
            Cmd::Assign(n, x, e) => Cmd::Assign(*n, f(x), e.rename(f)),
            Cmd::Seq(a, b) => Cmd::seq(a.rename_vars(f), b.rename_vars(f)),
            Cmd::Choice(n, a, b) => {
                Cmd::Choice(*n, Box::new(a.rename_vars(f)), Box::new(b.rename_vars(f)))
            }
            Cmd::If(n, e, a, b) => Cmd::If(
                *n,
                e.rename(f),
                Box::new(a.rename_vars(f)),
                Box::new(b.rename_vars(f)),
            ),
            Cmd::While(n, e, a) => Cmd::While(*n, e.rename(f), Box::new(a.rename_vars(f))),
        }
    }

    /// Structural equality with all labels ignored.
    pub fn eq_mod_labels(&self, other: &Cmd) -> bool {
        match (self, other) {
            (Cmd::Skip(_), Cmd::Skip(_)) => true,
            (Cmd::Assign(_, x, e), Cmd::Assign(_, x2, e2)) => x == x2 && e == e2,
            (Cmd::Seq(a, b), Cmd::Seq(a2, b2)) => a.eq_mod_labels(a2) && b.eq_mod_labels(b2),
            (Cmd::Choice(_, a, b), Cmd::Choice(_, a2, b2)) => {
                a.eq_mod_labels(a2) && b.eq_mod_labels(b2)
            }
            (Cmd::If(_, e, a, b), Cmd::If(_, e2, a2, b2)) => {
                e == e2 && a.eq_mod_labels(a2) && b.eq_mod_labels(b2)
            }
            (Cmd::While(_, e, a), Cmd::While(_, e2, a2)) => e == e2 && a.eq_mod_labels(a2),
            _ => false,
        }
    }
}

/// A main program `c ; skip^fin`. Requires `fin` not to occur in `c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Program {
    pub body: Cmd,
    pub fin: Label,
}

impl Program {
    pub fn new(body: Cmd, fin: Label) -> Result<Program, LangError> {
        let p = Program { body, fin };
        p.check_ok()?;
        Ok(p)
    }

    pub fn check_ok(&self) -> Result<(), LangError> {
        if self.fin.0 < 0 {
            return Err(LangError::NegativeLabel(self.fin));
        }
        if !self.body.ok() {
            return Err(LangError::NotOk);
        }
        if self.body.labs().contains(&self.fin) {
            return Err(LangError::FinInBody(self.fin));
        }
        Ok(())
    }

    pub fn init(&self) -> Label {
        self.body.lab()
    }

    /// Control points: labels of the body plus `fin`.
    pub fn points(&self) -> BTreeSet<Label> {
        let mut s = self.body.labs();
        s.insert(self.fin);
        s
    }
}

/// Following successor: the control point reached once the command at `n`
/// (within `c`, with following label `f`) terminates.
pub fn fsuc(n: Label, c: &Cmd, f: Label) -> Result<Label, LangError> {
    match c {
        Cmd::Skip(m) | Cmd::Assign(m, _, _) => {
            if *m == n {
                Ok(f)
            } else {
                Err(LangError::NoSuchLabel(n))
            }
        }
        Cmd::Seq(a, b) => {
            if a.labs().contains(&n) {
                fsuc(n, a, b.lab())
            } else {
                fsuc(n, b, f)
            }
        }
        Cmd::While(m, _, body) => {
            if *m == n {
                Ok(f)
            } else {
                fsuc(n, body, *m)
            }
        }
        Cmd::If(m, _, a, b) | Cmd::Choice(m, a, b) => {
            if a.labs().contains(&n) {
                fsuc(n, a, f)
            } else if b.labs().contains(&n) {
                fsuc(n, b, f)
            } else if *m == n {
                Ok(f)
            } else {
                Err(LangError::NoSuchLabel(n))
            }
        }
    }
}

/// Exit label of subcommand `b` within `c`: the point control reaches after
/// every path through `b`. For a sequence this is the exit of its last
/// command.
pub fn elab(b: &Cmd, c: &Cmd, fin: Label) -> Result<Label, LangError> {
    if !c.contains_subterm(b) {
        return Err(LangError::NotASubterm);
    }
    match b {
        Cmd::Seq(_, b1) => elab(b1, c, fin),
        _ => fsuc(b.lab(), c, fin),
    }
}

/// Variable renaming used to encode the second of two programs: `x` becomes
/// `x'`. User programs may not declare variables ending in `'`, so the
/// namespaces are disjoint.
pub fn dotted(x: &str) -> VarName {
    format!("{x}'")
}

pub fn dot_expr(e: &Expr) -> Expr {
    e.rename(&|x| dotted(x))
}

pub fn dot_cmd(c: &Cmd) -> Cmd {
    c.rename_vars(&|x| dotted(x))
}
