//! Product automata: alignments of two automata as one automaton over store
//! pairs, trace projections, and bounded adequacy checking.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::assertion::{holds_r, Formula, Side};
use crate::automaton::{
    aut_of, AutMeta, AutTrace, Automaton, Ctrl, State, Stepper, StoreShape, StoreVal, Tag,
};
use crate::lang::{elab, fsuc, Cmd, CmdKind, Expr, Label, LangError, Program, VarName};
use crate::semantics::{enum_guard, eval, Domain, SemError, Store};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProductError {
    #[error("product components must be single-store automata")]
    PairComponent,
    #[error("this product kind requires program automata")]
    NeedsPrograms,
    #[error("programs must share the final label (left {0}, right {1})")]
    DifferentFin(Label, Label),
    #[error("sameCtl fails: {0}")]
    NotSameCtl(String),
    #[error("sameExcept fails ({clause}): {detail}")]
    NotSameExcept { clause: &'static str, detail: String },
    #[error("no subcommand with entry {beg} and exit {end}")]
    HoleNotFound { beg: Label, end: Label },
    #[error("label {0} is not a while loop")]
    NotAWhile(Label),
    #[error("alignment guard must be a relational formula")]
    GuardArity,
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

/// Which alignment discipline a product encodes.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductKind {
    OnlyLockstep,
    LeftOnly,
    RightOnly,
    Interleaved,
    EagerLockstep,
    Sequential,
    /// One-sided and joint steps gated by control-pair membership.
    CtrlConditioned {
        lo: BTreeSet<(i64, i64)>,
        ro: BTreeSet<(i64, i64)>,
        joint: BTreeSet<(i64, i64)>,
    },
    LockstepControl,
    Dovetail,
    /// Lockstep contexts around designated subprograms run sequentially:
    /// the hole is identified by its entry and exit labels.
    SameExcept { beg: Label, end: Label },
    /// Same-control programs with one distinguished loop whose iterations
    /// align conditionally on the store relations `guard_left`/`guard_right`.
    CaLoop {
        beg: Label,
        guard_left: Formula,
        guard_right: Formula,
    },
}

impl ProductKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProductKind::OnlyLockstep => "only-lockstep",
            ProductKind::LeftOnly => "left-only",
            ProductKind::RightOnly => "right-only",
            ProductKind::Interleaved => "interleaved",
            ProductKind::EagerLockstep => "eager-lockstep",
            ProductKind::Sequential => "sequential",
            ProductKind::CtrlConditioned { .. } => "ctrl-conditioned",
            ProductKind::LockstepControl => "lockstep-control",
            ProductKind::Dovetail => "dovetail",
            ProductKind::SameExcept { .. } => "lockstep-sequential",
            ProductKind::CaLoop { .. } => "conditionally-aligned-loop",
        }
    }
}

/// Left/right projections of product control points.
pub fn lt(c: &Ctrl) -> Ctrl {
    Ctrl::L(c.left_label())
}

pub fn rt(c: &Ctrl) -> Ctrl {
    Ctrl::L(c.right_label())
}

pub fn left_of_state(st: &State) -> State {
    let (s, _) = st.1.pair();
    (lt(&st.0), StoreVal::U(s.clone()))
}

pub fn right_of_state(st: &State) -> State {
    let (_, t) = st.1.pair();
    (rt(&st.0), StoreVal::U(t.clone()))
}

fn destutter(states: Vec<State>) -> AutTrace {
    let mut out: AutTrace = Vec::new();
    for s in states {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

/// `left(T) = destutter(map(left, T))`.
pub fn project_left(trace: &[State]) -> AutTrace {
    destutter(trace.iter().map(left_of_state).collect())
}

pub fn project_right(trace: &[State]) -> AutTrace {
    destutter(trace.iter().map(right_of_state).collect())
}

struct Resolved {
    kind: ProductKind,
    left: Arc<Automaton>,
    right: Arc<Automaton>,
    fin_l: i64,
    fin_r: i64,
    init_r: i64,
    /// SameExcept payload: hole label sets and boundary labels.
    hole: Option<HoleInfo>,
    /// CaLoop payload.
    ca: Option<CaInfo>,
}

#[derive(Debug, Clone)]
struct HoleInfo {
    beg: i64,
    end: i64,
    labs_left: BTreeSet<i64>,
    labs_right: BTreeSet<i64>,
}

#[derive(Clone)]
struct CaInfo {
    beg: i64,
    body: i64,
    exit: i64,
    body_labs: BTreeSet<i64>,
    test_left: Expr,
    test_right: Expr,
    guard_left: Formula,
    guard_right: Formula,
}

impl Resolved {
    fn lsucc(&self, n: i64, s: &Store) -> Vec<(i64, Store)> {
        self.left
            .succ(&Ctrl::L(n), &StoreVal::U(s.clone()))
            .into_iter()
            .map(|(c, v)| (c.left_label(), v.unary().clone()))
            .collect()
    }

    fn rsucc(&self, n: i64, s: &Store) -> Vec<(i64, Store)> {
        self.right
            .succ(&Ctrl::L(n), &StoreVal::U(s.clone()))
            .into_iter()
            .map(|(c, v)| (c.left_label(), v.unary().clone()))
            .collect()
    }

    fn dov(&self, n: i64, m: i64, bit: bool) -> Ctrl {
        // Collapse the scheduling bit at the final point so it is unique.
        if n == self.fin_l && m == self.fin_r {
            Ctrl::D(n, m, false)
        } else {
            Ctrl::D(n, m, bit)
        }
    }
}

impl Stepper for Resolved {
    fn succ(&self, c: &Ctrl, v: &StoreVal) -> Vec<(Ctrl, StoreVal)> {
        let (s, t) = v.pair();
        let mut out = Vec::new();
        match (&self.kind, c) {
            (ProductKind::OnlyLockstep, Ctrl::P(n, m)) => {
                both_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
            }
            (ProductKind::LeftOnly, Ctrl::P(n, m)) => {
                left_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
            }
            (ProductKind::RightOnly, Ctrl::P(n, m)) => {
                right_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
            }
            (ProductKind::Interleaved, Ctrl::P(n, m)) => {
                left_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                right_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
            }
            (ProductKind::EagerLockstep, Ctrl::P(n, m)) => {
                both_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                if *n == self.fin_l {
                    right_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
                if *m == self.fin_r {
                    left_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
            }
            (ProductKind::Sequential, Ctrl::P(n, m)) => {
                if *m == self.init_r {
                    left_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
                if *n == self.fin_l {
                    right_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
            }
            (ProductKind::CtrlConditioned { lo, ro, joint }, Ctrl::P(n, m)) => {
                if lo.contains(&(*n, *m)) {
                    left_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
                if ro.contains(&(*n, *m)) {
                    right_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
                if joint.contains(&(*n, *m)) {
                    both_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
            }
            (ProductKind::LockstepControl, Ctrl::P(n, m)) => {
                if n == m {
                    both_steps(self, *n, *m, s, t, &mut out, |a, b| Ctrl::P(a, b));
                }
            }
            (ProductKind::Dovetail, Ctrl::D(n, m, bit)) => {
                if !*bit {
                    left_steps(self, *n, *m, s, t, &mut out, |a, b| self.dov(a, b, true));
                    if *n == self.fin_l {
                        right_steps(self, *n, *m, s, t, &mut out, |a, b| {
                            self.dov(a, b, false)
                        });
                    }
                } else {
                    right_steps(self, *n, *m, s, t, &mut out, |a, b| self.dov(a, b, false));
                    if *m == self.fin_r {
                        left_steps(self, *n, *m, s, t, &mut out, |a, b| self.dov(a, b, true));
                    }
                }
            }
            (ProductKind::SameExcept { .. }, Ctrl::T(n, m, tag)) => {
                let h = self.hole.as_ref().expect("resolved hole");
                self.same_except_succ(h, *n, *m, *tag, s, t, &mut out);
            }
            (ProductKind::CaLoop { .. }, Ctrl::T(n, m, tag)) => {
                let ca = self.ca.as_ref().expect("resolved loop info");
                self.ca_loop_succ(ca, *n, *m, *tag, s, t, &mut out);
            }
            _ => {}
        }
        out
    }

    fn action_vars(&self, c: &Ctrl) -> Option<BTreeSet<VarName>> {
        let mut vars = BTreeSet::new();
        match self.left.action_vars(&lt(c)) {
            Some(v) => vars.extend(v),
            None => return None,
        }
        match self.right.action_vars(&rt(c)) {
            Some(v) => vars.extend(v),
            None => return None,
        }
        if let Some(ca) = &self.ca {
            if c.left_label() == ca.beg || c.right_label() == ca.beg {
                for side in [Side::Left, Side::Right] {
                    ca.guard_left.vars(side, &mut vars);
                    ca.guard_right.vars(side, &mut vars);
                }
            }
        }
        Some(vars)
    }
}

fn both_steps(
    r: &Resolved,
    n: i64,
    m: i64,
    s: &Store,
    t: &Store,
    out: &mut Vec<(Ctrl, StoreVal)>,
    mk: impl Fn(i64, i64) -> Ctrl,
) {
    for (ln, ls) in r.lsucc(n, s) {
        for (rn, rs) in r.rsucc(m, t) {
            out.push((mk(ln, rn), StoreVal::P(ls.clone(), rs)));
        }
    }
}

fn left_steps(
    r: &Resolved,
    n: i64,
    m: i64,
    s: &Store,
    t: &Store,
    out: &mut Vec<(Ctrl, StoreVal)>,
    mk: impl Fn(i64, i64) -> Ctrl,
) {
    for (ln, ls) in r.lsucc(n, s) {
        out.push((mk(ln, m), StoreVal::P(ls, t.clone())));
    }
}

fn right_steps(
    r: &Resolved,
    n: i64,
    m: i64,
    s: &Store,
    t: &Store,
    out: &mut Vec<(Ctrl, StoreVal)>,
    mk: impl Fn(i64, i64) -> Ctrl,
) {
    for (rn, rs) in r.rsucc(m, t) {
        out.push((mk(n, rn), StoreVal::P(s.clone(), rs)));
    }
}

impl Resolved {
    /// Transitions of the tagged lockstep-with-hole product.
    fn same_except_succ(
        &self,
        h: &HoleInfo,
        n: i64,
        m: i64,
        tag: Tag,
        s: &Store,
        t: &Store,
        out: &mut Vec<(Ctrl, StoreVal)>,
    ) {
        match tag {
            Tag::Lck => {
                if n != m || h.labs_left.contains(&n) || h.labs_right.contains(&n) {
                    return;
                }
                for (ln, ls) in self.lsucc(n, s) {
                    for (rn, rs) in self.rsucc(m, t) {
                        if ln != rn {
                            continue;
                        }
                        let tag = if ln == h.beg { Tag::Lo } else { Tag::Lck };
                        out.push((Ctrl::T(ln, rn, tag), StoreVal::P(ls.clone(), rs)));
                    }
                }
            }
            Tag::Lo => {
                if m != h.beg || !h.labs_left.contains(&n) {
                    return;
                }
                for (ln, ls) in self.lsucc(n, s) {
                    if ln == h.end {
                        out.push((Ctrl::T(h.end, h.beg, Tag::Ro), StoreVal::P(ls, t.clone())));
                    } else {
                        out.push((Ctrl::T(ln, h.beg, Tag::Lo), StoreVal::P(ls, t.clone())));
                    }
                }
            }
            Tag::Ro => {
                if n != h.end || !h.labs_right.contains(&m) {
                    return;
                }
                for (rn, rs) in self.rsucc(m, t) {
                    if rn == h.end {
                        out.push((Ctrl::T(h.end, h.end, Tag::Lck), StoreVal::P(s.clone(), rs)));
                    } else {
                        out.push((Ctrl::T(h.end, rn, Tag::Ro), StoreVal::P(s.clone(), rs)));
                    }
                }
            }
        }
    }

    /// Transitions of the data-conditioned loop product.
    fn ca_loop_succ(
        &self,
        ca: &CaInfo,
        n: i64,
        m: i64,
        tag: Tag,
        s: &Store,
        t: &Store,
        out: &mut Vec<(Ctrl, StoreVal)>,
    ) {
        match tag {
            Tag::Lck => {
                if n != m {
                    return;
                }
                if n == ca.beg {
                    let le = eval(&ca.test_left, s) != 0;
                    let re = eval(&ca.test_right, t) != 0;
                    let lam = holds_r(&ca.guard_left, s, t);
                    let rho = holds_r(&ca.guard_right, s, t);
                    if !le && !re {
                        out.push((
                            Ctrl::T(ca.exit, ca.exit, Tag::Lck),
                            StoreVal::P(s.clone(), t.clone()),
                        ));
                    }
                    if le && re && !lam && !rho {
                        out.push((
                            Ctrl::T(ca.body, ca.body, Tag::Lck),
                            StoreVal::P(s.clone(), t.clone()),
                        ));
                    }
                    if lam && le {
                        out.push((
                            Ctrl::T(ca.body, ca.beg, Tag::Lo),
                            StoreVal::P(s.clone(), t.clone()),
                        ));
                    }
                    if rho && re {
                        out.push((
                            Ctrl::T(ca.beg, ca.body, Tag::Ro),
                            StoreVal::P(s.clone(), t.clone()),
                        ));
                    }
                    return;
                }
                for (ln, ls) in self.lsucc(n, s) {
                    for (rn, rs) in self.rsucc(m, t) {
                        out.push((Ctrl::T(ln, rn, Tag::Lck), StoreVal::P(ls.clone(), rs)));
                    }
                }
            }
            Tag::Lo => {
                if m != ca.beg || !ca.body_labs.contains(&n) {
                    return;
                }
                for (ln, ls) in self.lsucc(n, s) {
                    let tag = if ln == ca.beg { Tag::Lck } else { Tag::Lo };
                    out.push((Ctrl::T(ln, ca.beg, tag), StoreVal::P(ls, t.clone())));
                }
            }
            Tag::Ro => {
                if n != ca.beg || !ca.body_labs.contains(&m) {
                    return;
                }
                for (rn, rs) in self.rsucc(m, t) {
                    let tag = if rn == ca.beg { Tag::Lck } else { Tag::Ro };
                    out.push((Ctrl::T(ca.beg, rn, tag), StoreVal::P(s.clone(), rs)));
                }
            }
        }
    }
}

fn same_ctl_impl(
    left: &Program,
    right: &Program,
    allow_assign_skip: bool,
) -> Result<(), ProductError> {
    if left.fin != right.fin {
        return Err(ProductError::DifferentFin(left.fin, right.fin));
    }
    if left.init() != right.init() {
        return Err(ProductError::NotSameCtl(format!(
            "entry labels differ: {} vs {}",
            left.init(),
            right.init()
        )));
    }
    let ll = left.body.labs();
    let rl = right.body.labs();
    if ll != rl {
        return Err(ProductError::NotSameCtl("label sets differ".into()));
    }
    for n in &ll {
        let a = left.body.sub(*n)?.kind();
        let b = right.body.sub(*n)?.kind();
        let matched = a == b
            || (allow_assign_skip
                && matches!(
                    (a, b),
                    (CmdKind::Assign, CmdKind::Skip) | (CmdKind::Skip, CmdKind::Assign)
                ));
        if !matched {
            return Err(ProductError::NotSameCtl(format!(
                "label {n} is {a:?} on the left and {b:?} on the right"
            )));
        }
    }
    let la = aut_of(left)?;
    let ra = aut_of(right)?;
    if la.cfg().edges != ra.cfg().edges {
        return Err(ProductError::NotSameCtl(
            "control-flow successors differ".into(),
        ));
    }
    Ok(())
}

/// Same control: equal entry labels, equal label sets, matching command
/// kinds at every label, and identical control-flow successors.
pub fn same_ctl(left: &Program, right: &Program) -> Result<(), ProductError> {
    same_ctl_impl(left, right, false)
}

/// Relaxed variant: an assignment may face a skip (either direction).
pub fn same_ctl_relaxed(left: &Program, right: &Program) -> Result<(), ProductError> {
    same_ctl_impl(left, right, true)
}

/// The unique subcommand of `c` with entry `beg` and exit `end`. Nested
/// sequences share the entry label of their head, so the exit label picks
/// one of them out.
pub fn hole_subcommand<'a>(
    p: &'a Program,
    beg: Label,
    end: Label,
) -> Result<&'a Cmd, ProductError> {
    let mut found = None;
    collect_candidates(&p.body, beg, &mut |cand| {
        if let Ok(e) = elab(cand, &p.body, p.fin) {
            if e == end && found.is_none() {
                found = Some(cand);
            }
        }
    });
    found.ok_or(ProductError::HoleNotFound { beg, end })
}

fn collect_candidates<'a>(c: &'a Cmd, beg: Label, f: &mut impl FnMut(&'a Cmd)) {
    if c.lab() == beg {
        f(c);
    }
    match c {
        Cmd::Skip(_) | Cmd::Assign(_, _, _) => {}
        Cmd::Seq(a, b) | Cmd::Choice(_, a, b) | Cmd::If(_, _, a, b) => {
            collect_candidates(a, beg, f);
            collect_candidates(b, beg, f);
        }
        Cmd::While(_, _, a) => collect_candidates(a, beg, f),
    }
}

/// The five conditions for relating `c = ctx[b]` and `c' = ctx'[b']` in
/// lockstep outside the holes. Returns the two hole subcommands.
pub fn check_same_except<'a>(
    left: &'a Program,
    right: &'a Program,
    beg: Label,
    end: Label,
) -> Result<(&'a Cmd, &'a Cmd), ProductError> {
    if left.fin != right.fin {
        return Err(ProductError::DifferentFin(left.fin, right.fin));
    }
    let b = hole_subcommand(left, beg, end)?;
    let b2 = hole_subcommand(right, beg, end)?;
    if b.lab() != b2.lab() {
        return Err(ProductError::NotSameExcept {
            clause: "entry labels",
            detail: format!("{} vs {}", b.lab(), b2.lab()),
        });
    }
    let inter: BTreeSet<Label> = b.labs().intersection(&b2.labs()).copied().collect();
    if inter != [beg].into_iter().collect() {
        return Err(ProductError::NotSameExcept {
            clause: "hole labels may share only the entry",
            detail: format!("shared labels {inter:?}"),
        });
    }
    let hole_l = Cmd::Skip(beg);
    let ctx_l = Program::new(left.body.replace_subterm(b, &hole_l), left.fin)?;
    let ctx_r = Program::new(right.body.replace_subterm(b2, &hole_l), right.fin)?;
    same_ctl(&ctx_l, &ctx_r).map_err(|e| ProductError::NotSameExcept {
        clause: "contexts have same control",
        detail: e.to_string(),
    })?;
    if ctx_l.body.contains_choice() || ctx_r.body.contains_choice() {
        return Err(ProductError::NotSameExcept {
            clause: "contexts are choice-free",
            detail: "choice occurs outside the hole".into(),
        });
    }
    Ok((b, b2))
}

fn require_programs<'a>(
    left: &'a Automaton,
    right: &'a Automaton,
) -> Result<(&'a Arc<Program>, &'a Arc<Program>), ProductError> {
    match (left.program(), right.program()) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(ProductError::NeedsPrograms),
    }
}

fn labels_of(a: &Automaton) -> Result<Vec<i64>, ProductError> {
    a.ctrl
        .iter()
        .map(|c| match c {
            Ctrl::L(n) => Ok(*n),
            _ => Err(ProductError::PairComponent),
        })
        .collect()
}

/// Build a product automaton. `cfg_dom` bounds the satisfiability check
/// used to include data-guarded CFG edges.
pub fn build_product(
    left: &Arc<Automaton>,
    right: &Arc<Automaton>,
    kind: ProductKind,
    cfg_dom: Domain,
) -> Result<Arc<Automaton>, ProductError> {
    if left.shape.is_pair() || right.shape.is_pair() {
        return Err(ProductError::PairComponent);
    }
    let l_labels = labels_of(left)?;
    let r_labels = labels_of(right)?;
    let fin_l = left.fin.left_label();
    let fin_r = right.fin.left_label();
    let init_l = left.init.left_label();
    let init_r = right.init.left_label();

    let mut hole = None;
    let mut ca = None;
    let mut meta = AutMeta::Other(kind.name());
    match &kind {
        ProductKind::SameExcept { beg, end } => {
            let (lp, rp) = require_programs(left, right)?;
            let (b, b2) = check_same_except(lp, rp, *beg, *end)?;
            hole = Some(HoleInfo {
                beg: beg.0,
                end: end.0,
                labs_left: b.labs().iter().map(|l| l.0).collect(),
                labs_right: b2.labs().iter().map(|l| l.0).collect(),
            });
        }
        ProductKind::CaLoop {
            beg,
            guard_left,
            guard_right,
        } => {
            let (lp, rp) = require_programs(left, right)?;
            same_ctl(lp, rp)?;
            if lp.body.contains_choice() || rp.body.contains_choice() {
                return Err(ProductError::NotSameCtl("choice not supported here".into()));
            }
            if !guard_left.is_relational() || !guard_right.is_relational() {
                return Err(ProductError::GuardArity);
            }
            let (test_left, lbody) = match lp.body.sub(*beg)? {
                Cmd::While(_, e, body) => (e.clone(), body),
                _ => return Err(ProductError::NotAWhile(*beg)),
            };
            let test_right = match rp.body.sub(*beg)? {
                Cmd::While(_, e, _) => e.clone(),
                _ => return Err(ProductError::NotAWhile(*beg)),
            };
            ca = Some(CaInfo {
                beg: beg.0,
                body: lbody.lab().0,
                exit: fsuc(*beg, &lp.body, lp.fin)?.0,
                body_labs: lbody.labs().iter().map(|l| l.0).collect(),
                test_left,
                test_right,
                guard_left: guard_left.clone(),
                guard_right: guard_right.clone(),
            });
        }
        ProductKind::Sequential => {
            if let (Some(lp), Some(rp)) = (left.program(), right.program()) {
                meta = AutMeta::SeqProduct {
                    left: lp.clone(),
                    right: rp.clone(),
                };
            }
        }
        ProductKind::LockstepControl => {
            if let (Some(lp), Some(rp)) = (left.program(), right.program()) {
                if same_ctl(lp, rp).is_ok() || same_ctl_relaxed(lp, rp).is_ok() {
                    meta = AutMeta::LockstepProduct {
                        left: lp.clone(),
                        right: rp.clone(),
                    };
                }
            }
        }
        _ => {}
    }

    // Control set and structural CFG edges.
    let el: Vec<(i64, i64)> = left
        .cfg()
        .edges
        .iter()
        .map(|(a, b)| (a.left_label(), b.left_label()))
        .collect();
    let er: Vec<(i64, i64)> = right
        .cfg()
        .edges
        .iter()
        .map(|(a, b)| (a.left_label(), b.left_label()))
        .collect();

    let (ctrl, init, fin, edges) = match &kind {
        ProductKind::Dovetail => {
            let mut ctrl = BTreeSet::new();
            for &n in &l_labels {
                for &m in &r_labels {
                    if n == fin_l && m == fin_r {
                        ctrl.insert(Ctrl::D(n, m, false));
                    } else {
                        ctrl.insert(Ctrl::D(n, m, false));
                        ctrl.insert(Ctrl::D(n, m, true));
                    }
                }
            }
            let dov = |n: i64, m: i64, b: bool| {
                if n == fin_l && m == fin_r {
                    Ctrl::D(n, m, false)
                } else {
                    Ctrl::D(n, m, b)
                }
            };
            let mut edges = BTreeSet::new();
            for &(n, n2) in &el {
                for &m in &r_labels {
                    edges.insert((Ctrl::D(n, m, false), dov(n2, m, true)));
                    if m == fin_r {
                        edges.insert((Ctrl::D(n, m, true), dov(n2, m, true)));
                    }
                }
            }
            for &(m, m2) in &er {
                for &n in &l_labels {
                    edges.insert((Ctrl::D(n, m, true), dov(n, m2, false)));
                    if n == fin_l {
                        edges.insert((Ctrl::D(n, m, false), dov(n, m2, false)));
                    }
                }
            }
            (
                ctrl,
                Ctrl::D(init_l, init_r, false),
                Ctrl::D(fin_l, fin_r, false),
                edges,
            )
        }
        ProductKind::SameExcept { .. } => {
            let h = hole.as_ref().unwrap();
            let mut ctrl = BTreeSet::new();
            for &n in &l_labels {
                for &m in &r_labels {
                    for tag in [Tag::Lck, Tag::Lo, Tag::Ro] {
                        ctrl.insert(Ctrl::T(n, m, tag));
                    }
                }
            }
            let in_hole =
                |n: i64| h.labs_left.contains(&n) || h.labs_right.contains(&n);
            let mut edges = BTreeSet::new();
            let er_set: BTreeSet<(i64, i64)> = er.iter().copied().collect();
            for &(n, m) in &el {
                // (i)/(ii): joint context steps.
                if er_set.contains(&(n, m)) && !in_hole(n) {
                    let tag = if m == h.beg { Tag::Lo } else { Tag::Lck };
                    edges.insert((Ctrl::T(n, n, Tag::Lck), Ctrl::T(m, m, tag)));
                }
                // (iii)/(iv): left-only hole steps.
                if h.labs_left.contains(&n) {
                    if m == h.end {
                        edges.insert((
                            Ctrl::T(n, h.beg, Tag::Lo),
                            Ctrl::T(h.end, h.beg, Tag::Ro),
                        ));
                    } else {
                        edges
                            .insert((Ctrl::T(n, h.beg, Tag::Lo), Ctrl::T(m, h.beg, Tag::Lo)));
                    }
                }
            }
            for &(n, m) in &er {
                // (v)/(vi): right-only hole steps.
                if h.labs_right.contains(&n) {
                    if m == h.end {
                        edges.insert((
                            Ctrl::T(h.end, n, Tag::Ro),
                            Ctrl::T(h.end, h.end, Tag::Lck),
                        ));
                    } else {
                        edges
                            .insert((Ctrl::T(h.end, n, Tag::Ro), Ctrl::T(h.end, m, Tag::Ro)));
                    }
                }
            }
            let init_tag = if init_l == h.beg { Tag::Lo } else { Tag::Lck };
            (
                ctrl,
                Ctrl::T(init_l, init_r, init_tag),
                Ctrl::T(fin_l, fin_r, Tag::Lck),
                edges,
            )
        }
        ProductKind::CaLoop { .. } => {
            let info = ca.as_ref().unwrap();
            let mut ctrl = BTreeSet::new();
            for &n in &l_labels {
                for &m in &r_labels {
                    for tag in [Tag::Lck, Tag::Lo, Tag::Ro] {
                        ctrl.insert(Ctrl::T(n, m, tag));
                    }
                }
            }
            let mut edges = BTreeSet::new();
            // Data-guarded edges at the distinguished loop head, included
            // when the guard is satisfiable over the bounded domain.
            let sat = guarded_edge_sat(info, cfg_dom)?;
            if sat.exit {
                edges.insert((
                    Ctrl::T(info.beg, info.beg, Tag::Lck),
                    Ctrl::T(info.exit, info.exit, Tag::Lck),
                ));
            }
            if sat.joint {
                edges.insert((
                    Ctrl::T(info.beg, info.beg, Tag::Lck),
                    Ctrl::T(info.body, info.body, Tag::Lck),
                ));
            }
            if sat.lo {
                edges.insert((
                    Ctrl::T(info.beg, info.beg, Tag::Lck),
                    Ctrl::T(info.body, info.beg, Tag::Lo),
                ));
            }
            if sat.ro {
                edges.insert((
                    Ctrl::T(info.beg, info.beg, Tag::Lck),
                    Ctrl::T(info.beg, info.body, Tag::Ro),
                ));
            }
            // Lockstep-control elsewhere.
            for &(n, m) in &el {
                if n == info.beg {
                    continue;
                }
                for &(n2, m2) in &er {
                    if n2 == n {
                        edges.insert((Ctrl::T(n, n, Tag::Lck), Ctrl::T(m, m2, Tag::Lck)));
                    }
                }
            }
            // One-sided body passes.
            for &(n, m) in &el {
                if info.body_labs.contains(&n) {
                    let tgt = if m == info.beg {
                        Ctrl::T(info.beg, info.beg, Tag::Lck)
                    } else {
                        Ctrl::T(m, info.beg, Tag::Lo)
                    };
                    edges.insert((Ctrl::T(n, info.beg, Tag::Lo), tgt));
                }
            }
            for &(n, m) in &er {
                if info.body_labs.contains(&n) {
                    let tgt = if m == info.beg {
                        Ctrl::T(info.beg, info.beg, Tag::Lck)
                    } else {
                        Ctrl::T(info.beg, m, Tag::Ro)
                    };
                    edges.insert((Ctrl::T(info.beg, n, Tag::Ro), tgt));
                }
            }
            (
                ctrl,
                Ctrl::T(init_l, init_r, Tag::Lck),
                Ctrl::T(fin_l, fin_r, Tag::Lck),
                edges,
            )
        }
        _ => {
            // Pair-control kinds.
            let mut ctrl = BTreeSet::new();
            for &n in &l_labels {
                for &m in &r_labels {
                    ctrl.insert(Ctrl::P(n, m));
                }
            }
            let mut edges = BTreeSet::new();
            let lo_edge = |edges: &mut BTreeSet<(Ctrl, Ctrl)>, pred: &dyn Fn(i64, i64) -> bool| {
                for &(n, m) in &el {
                    for &r in &r_labels {
                        if pred(n, r) {
                            edges.insert((Ctrl::P(n, r), Ctrl::P(m, r)));
                        }
                    }
                }
            };
            let ro_edge = |edges: &mut BTreeSet<(Ctrl, Ctrl)>, pred: &dyn Fn(i64, i64) -> bool| {
                for &(n, m) in &er {
                    for &l in &l_labels {
                        if pred(l, n) {
                            edges.insert((Ctrl::P(l, n), Ctrl::P(l, m)));
                        }
                    }
                }
            };
            let joint_edge =
                |edges: &mut BTreeSet<(Ctrl, Ctrl)>, pred: &dyn Fn(i64, i64) -> bool| {
                    for &(n, m) in &el {
                        for &(n2, m2) in &er {
                            if pred(n, n2) {
                                edges.insert((Ctrl::P(n, n2), Ctrl::P(m, m2)));
                            }
                        }
                    }
                };
            match &kind {
                ProductKind::OnlyLockstep => joint_edge(&mut edges, &|_, _| true),
                ProductKind::LeftOnly => lo_edge(&mut edges, &|_, _| true),
                ProductKind::RightOnly => ro_edge(&mut edges, &|_, _| true),
                ProductKind::Interleaved => {
                    lo_edge(&mut edges, &|_, _| true);
                    ro_edge(&mut edges, &|_, _| true);
                }
                ProductKind::EagerLockstep => {
                    joint_edge(&mut edges, &|_, _| true);
                    lo_edge(&mut edges, &|_, r| r == fin_r);
                    ro_edge(&mut edges, &|l, _| l == fin_l);
                }
                ProductKind::Sequential => {
                    lo_edge(&mut edges, &|_, r| r == init_r);
                    ro_edge(&mut edges, &|l, _| l == fin_l);
                }
                ProductKind::CtrlConditioned { lo, ro, joint } => {
                    lo_edge(&mut edges, &|l, r| lo.contains(&(l, r)));
                    ro_edge(&mut edges, &|l, r| ro.contains(&(l, r)));
                    joint_edge(&mut edges, &|l, r| joint.contains(&(l, r)));
                }
                ProductKind::LockstepControl => joint_edge(&mut edges, &|l, r| l == r),
                _ => unreachable!(),
            }
            (
                ctrl,
                Ctrl::P(init_l, init_r),
                Ctrl::P(fin_l, fin_r),
                edges,
            )
        }
    };

    let (fl, _) = left.footprints();
    let (fr, _) = right.footprints();
    let resolved = Resolved {
        kind,
        left: left.clone(),
        right: right.clone(),
        fin_l,
        fin_r,
        init_r,
        hole,
        ca,
    };
    Ok(Arc::new(Automaton::new(
        ctrl,
        init,
        fin,
        StoreShape::Pair(fl, fr),
        meta,
        Arc::new(resolved),
        edges,
    )))
}

struct GuardSat {
    exit: bool,
    joint: bool,
    lo: bool,
    ro: bool,
}

/// Bounded satisfiability of the four loop-head guards, over the variables
/// they mention.
fn guarded_edge_sat(ca: &CaInfo, dom: Domain) -> Result<GuardSat, ProductError> {
    let mut lv = BTreeSet::new();
    let mut rv = BTreeSet::new();
    ca.test_left.vars(&mut lv);
    ca.test_right.vars(&mut rv);
    for g in [&ca.guard_left, &ca.guard_right] {
        g.vars(Side::Left, &mut lv);
        g.vars(Side::Right, &mut rv);
    }
    let fl = crate::semantics::Footprint::new(lv);
    let fr = crate::semantics::Footprint::new(rv);
    let nl = dom
        .count_stores(fl.len())
        .ok_or(SemError::EmptyDomain { lo: 0, hi: 0 })?;
    let nr = dom
        .count_stores(fr.len())
        .ok_or(SemError::EmptyDomain { lo: 0, hi: 0 })?;
    enum_guard(nl.saturating_mul(nr), fl.len() + fr.len(), dom)?;
    let mut sat = GuardSat {
        exit: false,
        joint: false,
        lo: false,
        ro: false,
    };
    for i in 0..nl {
        let s = dom.store_at(&fl, i);
        let le = eval(&ca.test_left, &s) != 0;
        for j in 0..nr {
            let t = dom.store_at(&fr, j);
            let re = eval(&ca.test_right, &t) != 0;
            let lam = holds_r(&ca.guard_left, &s, &t);
            let rho = holds_r(&ca.guard_right, &s, &t);
            sat.exit |= !le && !re;
            sat.joint |= le && re && !lam && !rho;
            sat.lo |= lam && le;
            sat.ro |= rho && re;
            if sat.exit && sat.joint && sat.lo && sat.ro {
                return Ok(sat);
            }
        }
    }
    Ok(sat)
}

/// Build the product of two programs' automata.
pub fn product_of_programs(
    left: &Program,
    right: &Program,
    kind: ProductKind,
    cfg_dom: Domain,
) -> Result<Arc<Automaton>, ProductError> {
    let la = aut_of(left)?;
    let ra = aut_of(right)?;
    build_product(&la, &ra, kind, cfg_dom)
}

/// Outcome of the bounded adequacy check.
#[derive(Debug, Clone)]
pub enum AdequacyVerdict {
    /// Every pair of terminated initial traces within the bounds is covered.
    AdequateOnBounds { pairs: usize },
    /// A pair of terminated initial traces the product does not cover.
    Counterexample {
        left: AutTrace,
        right: AutTrace,
    },
    Inconclusive(String),
}

impl AdequacyVerdict {
    pub fn is_adequate(&self) -> bool {
        matches!(self, AdequacyVerdict::AdequateOnBounds { .. })
    }
}

/// Terminated traces of `a` from `(init, s)`, each at most `max_len` states.
fn terminated_traces(
    a: &Automaton,
    s: &Store,
    max_len: usize,
) -> (Vec<AutTrace>, bool) {
    let (traces, cut) =
        crate::automaton::enumerate_aut_traces(a, (a.init, StoreVal::U(s.clone())), max_len);
    let term: Vec<AutTrace> = traces
        .into_iter()
        .filter(|t| t.last().map(|(c, _)| *c == a.fin).unwrap_or(false))
        .collect();
    (term, cut)
}

/// Search for a product trace projecting exactly onto the pair of traces.
/// The store pair at search node `(pc, i, j)` is determined by the trace
/// positions, so the memo key is control and positions alone.
fn covers(prod: &Automaton, tau: &AutTrace, tau2: &AutTrace, node_budget: &mut usize) -> Option<bool> {
    if lt(&prod.init) != tau[0].0 || rt(&prod.init) != tau2[0].0 {
        return Some(false);
    }
    let mut seen: BTreeSet<(Ctrl, usize, usize)> = BTreeSet::new();
    let mut stack: Vec<(Ctrl, usize, usize)> = vec![(prod.init, 0, 0)];
    seen.insert((prod.init, 0, 0));
    while let Some((pc, i, j)) = stack.pop() {
        if i == tau.len() - 1 && j == tau2.len() - 1 {
            return Some(true);
        }
        if *node_budget == 0 {
            return None;
        }
        *node_budget -= 1;
        let sv = StoreVal::P(tau[i].1.unary().clone(), tau2[j].1.unary().clone());
        for (pc2, v2) in prod.succ(&pc, &sv) {
            let (u, w) = v2.pair();
            let li = advance(tau, i, lt(&pc2), u);
            let rj = advance(tau2, j, rt(&pc2), w);
            if let (Some(i2), Some(j2)) = (li, rj) {
                if seen.insert((pc2, i2, j2)) {
                    stack.push((pc2, i2, j2));
                }
            }
        }
    }
    Some(false)
}

/// Where a projected component state sits relative to the trace: unchanged
/// at `i`, or advanced to `i + 1`.
fn advance(tau: &AutTrace, i: usize, c: Ctrl, s: &Store) -> Option<usize> {
    let (tc, tv) = &tau[i];
    if *tc == c && tv.unary() == s {
        return Some(i);
    }
    if i + 1 < tau.len() {
        let (nc, nv) = &tau[i + 1];
        if *nc == c && nv.unary() == s {
            return Some(i + 1);
        }
    }
    None
}

/// Bounded R-adequacy: every pair of terminated initial traces (within
/// `max_len`) from R-related stores over `dom` must be covered by a product
/// trace. Budget exhaustion is reported, never treated as adequate.
pub fn check_adequacy(
    prod: &Automaton,
    left: &Automaton,
    right: &Automaton,
    r: &Formula,
    dom: Domain,
    max_len: usize,
) -> Result<AdequacyVerdict, SemError> {
    let (lv, rv) = crate::automaton::formula_vars(&[r]);
    let (fl, _) = left.footprints();
    let (fr, _) = right.footprints();
    let fl = crate::semantics::Footprint::union(&fl, &crate::semantics::Footprint::new(lv));
    let fr = crate::semantics::Footprint::union(&fr, &crate::semantics::Footprint::new(rv));
    let nl = dom.count_stores(fl.len()).ok_or(SemError::EmptyDomain { lo: 0, hi: 0 })?;
    let nr = dom.count_stores(fr.len()).ok_or(SemError::EmptyDomain { lo: 0, hi: 0 })?;
    enum_guard(nl.saturating_mul(nr), fl.len() + fr.len(), dom)?;

    let mut l_traces: BTreeMap<Store, Vec<AutTrace>> = BTreeMap::new();
    let mut r_traces: BTreeMap<Store, Vec<AutTrace>> = BTreeMap::new();
    let mut pairs = 0usize;
    let mut node_budget = 4_000_000usize;
    for i in 0..nl {
        let s = dom.store_at(&fl, i);
        for j in 0..nr {
            let t = dom.store_at(&fr, j);
            if !holds_r(r, &s, &t) {
                continue;
            }
            if !l_traces.contains_key(&s) {
                let (tr, cut) = terminated_traces(left, &s, max_len);
                if cut {
                    return Ok(AdequacyVerdict::Inconclusive(format!(
                        "left traces from {s} exceed {max_len} states"
                    )));
                }
                l_traces.insert(s.clone(), tr);
            }
            if !r_traces.contains_key(&t) {
                let (tr, cut) = terminated_traces(right, &t, max_len);
                if cut {
                    return Ok(AdequacyVerdict::Inconclusive(format!(
                        "right traces from {t} exceed {max_len} states"
                    )));
                }
                r_traces.insert(t.clone(), tr);
            }
            for tau in &l_traces[&s] {
                for tau2 in &r_traces[&t] {
                    pairs += 1;
                    match covers(prod, tau, tau2, &mut node_budget) {
                        Some(true) => {}
                        Some(false) => {
                            return Ok(AdequacyVerdict::Counterexample {
                                left: tau.clone(),
                                right: tau2.clone(),
                            })
                        }
                        None => {
                            return Ok(AdequacyVerdict::Inconclusive(
                                "search budget exhausted".into(),
                            ))
                        }
                    }
                }
            }
        }
    }
    Ok(AdequacyVerdict::AdequateOnBounds { pairs })
}

/// Verdict of the product-free relational oracle.
#[derive(Debug, Clone)]
pub enum RelVerdict {
    Holds,
    Fails {
        left: AutTrace,
        right: AutTrace,
    },
    Inconclusive(String),
}

impl RelVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, RelVerdict::Holds)
    }
}

/// Direct bounded check of `A|A' |= <R><S>`: enumerate pairs of terminated
/// runs from R-related stores and check S on the final pairs.
pub fn rel_satisfies_bounded(
    left: &Automaton,
    right: &Automaton,
    r: &Formula,
    s_post: &Formula,
    dom: Domain,
    max_steps: usize,
) -> Result<RelVerdict, SemError> {
    let (lv, rv) = crate::automaton::formula_vars(&[r, s_post]);
    let (fl, _) = left.footprints();
    let (fr, _) = right.footprints();
    let fl = crate::semantics::Footprint::union(&fl, &crate::semantics::Footprint::new(lv));
    let fr = crate::semantics::Footprint::union(&fr, &crate::semantics::Footprint::new(rv));
    let nl = dom.count_stores(fl.len()).ok_or(SemError::EmptyDomain { lo: 0, hi: 0 })?;
    let nr = dom.count_stores(fr.len()).ok_or(SemError::EmptyDomain { lo: 0, hi: 0 })?;
    enum_guard(nl.saturating_mul(nr), fl.len() + fr.len(), dom)?;

    let mut l_final: BTreeMap<Store, (BTreeSet<Store>, bool)> = BTreeMap::new();
    let mut r_final: BTreeMap<Store, (BTreeSet<Store>, bool)> = BTreeMap::new();
    let mut capped = false;
    for i in 0..nl {
        let s = dom.store_at(&fl, i);
        for j in 0..nr {
            let t = dom.store_at(&fr, j);
            if !holds_r(r, &s, &t) {
                continue;
            }
            let (lf, lc) = final_stores(left, &s, max_steps, &mut l_final);
            let (rf, rc) = final_stores(right, &t, max_steps, &mut r_final);
            capped = capped || lc || rc;
            for u in &lf {
                for w in &rf {
                    if !holds_r(s_post, u, w) {
                        let lt_trace = find_trace_to(left, &s, u, max_steps)
                            .expect("final store is reachable");
                        let rt_trace = find_trace_to(right, &t, w, max_steps)
                            .expect("final store is reachable");
                        return Ok(RelVerdict::Fails {
                            left: lt_trace,
                            right: rt_trace,
                        });
                    }
                }
            }
        }
    }
    if capped {
        return Ok(RelVerdict::Inconclusive(format!(
            "some run exceeded {max_steps} steps"
        )));
    }
    Ok(RelVerdict::Holds)
}

fn final_stores(
    a: &Automaton,
    s: &Store,
    max_steps: usize,
    memo: &mut BTreeMap<Store, (BTreeSet<Store>, bool)>,
) -> (BTreeSet<Store>, bool) {
    if let Some(hit) = memo.get(s) {
        return hit.clone();
    }
    let (states, capped) = crate::automaton::reachable_states(
        a,
        vec![(a.init, StoreVal::U(s.clone()))],
        max_steps,
    );
    let finals: BTreeSet<Store> = states
        .into_iter()
        .filter(|(c, _)| *c == a.fin)
        .map(|(_, v)| v.unary().clone())
        .collect();
    memo.insert(s.clone(), (finals.clone(), capped));
    (finals, capped)
}

/// BFS path from `(init, s)` to the final state with store `target`.
fn find_trace_to(a: &Automaton, s: &Store, target: &Store, max_steps: usize) -> Option<AutTrace> {
    let start: State = (a.init, StoreVal::U(s.clone()));
    let goal: State = (a.fin, StoreVal::U(target.clone()));
    let mut parents: BTreeMap<State, Option<State>> = BTreeMap::new();
    parents.insert(start.clone(), None);
    let mut frontier = VecDeque::from([start]);
    for _ in 0..=max_steps {
        let mut next = VecDeque::new();
        while let Some(st) = frontier.pop_front() {
            if st == goal {
                let mut trace = vec![st.clone()];
                let mut cur = st;
                while let Some(Some(p)) = parents.get(&cur) {
                    trace.push(p.clone());
                    cur = p.clone();
                }
                trace.reverse();
                return Some(trace);
            }
            for nxt in a.succ(&st.0, &st.1) {
                if !parents.contains_key(&nxt) {
                    parents.insert(nxt.clone(), Some(st.clone()));
                    next.push_back(nxt);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    None
}
