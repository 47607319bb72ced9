//! Stores, expression evaluation, the small-step configuration transition
//! relation, and bounded execution.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::lang::{BinOp, Cmd, Expr, Label, Program, VarName};

/// The variables a store is defined over. Variables outside the footprint
/// read as 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Footprint {
    names: Vec<VarName>,
}

impl Footprint {
    pub fn new<I: IntoIterator<Item = VarName>>(names: I) -> Arc<Footprint> {
        let set: BTreeSet<VarName> = names.into_iter().collect();
        Arc::new(Footprint {
            names: set.into_iter().collect(),
        })
    }

    pub fn union(a: &Footprint, b: &Footprint) -> Arc<Footprint> {
        Footprint::new(a.names.iter().chain(b.names.iter()).cloned())
    }

    pub fn names(&self) -> &[VarName] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, x: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(x)).ok()
    }
}

/// A variable store over a fixed footprint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store {
    fp: Arc<Footprint>,
    vals: Vec<i64>,
}

impl Store {
    pub fn zeroes(fp: Arc<Footprint>) -> Store {
        let vals = vec![0; fp.len()];
        Store { fp, vals }
    }

    pub fn from_pairs(fp: Arc<Footprint>, pairs: &[(&str, i64)]) -> Store {
        let mut s = Store::zeroes(fp);
        for (x, v) in pairs {
            s.set(x, *v);
        }
        s
    }

    pub fn footprint(&self) -> &Arc<Footprint> {
        &self.fp
    }

    pub fn get(&self, x: &str) -> i64 {
        match self.fp.index_of(x) {
            Some(i) => self.vals[i],
            None => 0,
        }
    }

    /// In-place set; ignores variables outside the footprint.
    pub fn set(&mut self, x: &str, v: i64) {
        if let Some(i) = self.fp.index_of(x) {
            self.vals[i] = v;
        }
    }

    /// The store like `self` but mapping `x` to `v`.
    pub fn update(&self, x: &str, v: i64) -> Store {
        let mut t = self.clone();
        t.set(x, v);
        t
    }

    pub fn vals(&self) -> &[i64] {
        &self.vals
    }

    /// Project onto the given variable names, in order.
    pub fn project(&self, names: &[VarName]) -> Vec<i64> {
        names.iter().map(|x| self.get(x)).collect()
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, v) in self.fp.names().iter().zip(&self.vals) {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{x}={v}")?;
            first = false;
        }
        Ok(())
    }
}

/// An inclusive integer interval used for bounded enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    pub lo: i64,
    pub hi: i64,
}

impl Domain {
    pub fn new(lo: i64, hi: i64) -> Result<Domain, SemError> {
        if lo > hi {
            return Err(SemError::EmptyDomain { lo, hi });
        }
        Ok(Domain { lo, hi })
    }

    pub fn size(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Number of stores over a footprint of `k` variables, if it fits.
    pub fn count_stores(&self, k: usize) -> Option<u64> {
        let mut total: u64 = 1;
        for _ in 0..k {
            total = total.checked_mul(self.size())?;
        }
        Some(total)
    }

    /// Decode enumeration index `idx` into a store over `fp`.
    pub fn store_at(&self, fp: &Arc<Footprint>, mut idx: u64) -> Store {
        let size = self.size();
        let mut vals = vec![0i64; fp.len()];
        for slot in vals.iter_mut() {
            *slot = self.lo + (idx % size) as i64;
            idx /= size;
        }
        Store {
            fp: fp.clone(),
            vals,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

/// Default enumeration interval.
pub const DEFAULT_DOMAIN: Domain = Domain { lo: -8, hi: 8 };
/// Default execution budget.
pub const DEFAULT_MAX_STEPS: usize = 10_000;
/// Hard cap on enumerated candidates, to fail loudly instead of hanging.
pub const ENUM_BUDGET: u64 = 2_000_000_000;

pub fn enum_guard(total: u64, vars: usize, dom: Domain) -> Result<(), SemError> {
    if total > ENUM_BUDGET {
        return Err(SemError::EnumerationTooLarge {
            vars,
            domain: dom.to_string(),
            budget: ENUM_BUDGET,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SemError {
    #[error("empty domain {lo}..{hi}")]
    EmptyDomain { lo: i64, hi: i64 },
    #[error("enumeration over {vars} variables in {domain} exceeds the budget of {budget} stores")]
    EnumerationTooLarge {
        vars: usize,
        domain: String,
        budget: u64,
    },
}

fn truthy(v: i64) -> bool {
    v != 0
}

fn b2i(b: bool) -> i64 {
    i64::from(b)
}

/// Total integer evaluation. Comparisons and logic return 1/0; `%` by zero
/// returns 0; arithmetic wraps.
pub fn eval(e: &Expr, s: &Store) -> i64 {
    match e {
        Expr::Var(x) => s.get(x),
        Expr::Int(k) => *k,
        Expr::Not(a) => b2i(!truthy(eval(a, s))),
        Expr::Bin(op, a, b) => {
            let l = eval(a, s);
            let r = eval(b, s);
            match op {
                BinOp::Add => l.wrapping_add(r),
                BinOp::Sub => l.wrapping_sub(r),
                BinOp::Mul => l.wrapping_mul(r),
                BinOp::Mod => l.checked_rem(r).unwrap_or(0),
                BinOp::Eq => b2i(l == r),
                BinOp::Ne => b2i(l != r),
                BinOp::Lt => b2i(l < r),
                BinOp::Le => b2i(l <= r),
                BinOp::Gt => b2i(l > r),
                BinOp::Ge => b2i(l >= r),
                BinOp::And => b2i(truthy(l) && truthy(r)),
                BinOp::Or => b2i(truthy(l) || truthy(r)),
            }
        }
    }
}

/// A labelled command paired with a store. Commands here may carry negative
/// labels introduced by the transition rules.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub cmd: Cmd,
    pub store: Store,
}

impl Configuration {
    pub fn new(cmd: Cmd, store: Store) -> Configuration {
        Configuration { cmd, store }
    }

    /// Stuck iff the command is a lone skip.
    pub fn is_terminal(&self) -> bool {
        matches!(self.cmd, Cmd::Skip(_))
    }
}

/// One small step. Empty iff the command is a lone skip.
pub fn step(k: &Configuration) -> Vec<Configuration> {
    match &k.cmd {
        Cmd::Skip(_) => vec![],
        Cmd::Assign(n, x, e) => {
            let v = eval(e, &k.store);
            vec![Configuration::new(
                Cmd::Skip(Label(-n.0)),
                k.store.update(x, v),
            )]
        }
        Cmd::If(_, e, c, d) => {
            let branch = if truthy(eval(e, &k.store)) { c } else { d };
            vec![Configuration::new((**branch).clone(), k.store.clone())]
        }
        Cmd::While(n, e, c) => {
            if truthy(eval(e, &k.store)) {
                vec![Configuration::new(
                    Cmd::seq((**c).clone(), k.cmd.clone()),
                    k.store.clone(),
                )]
            } else {
                vec![Configuration::new(Cmd::Skip(Label(-n.0)), k.store.clone())]
            }
        }
        Cmd::Choice(_, c, d) => vec![
            Configuration::new((**c).clone(), k.store.clone()),
            Configuration::new((**d).clone(), k.store.clone()),
        ],
        Cmd::Seq(c, d) => {
            if matches!(**c, Cmd::Skip(_)) {
                vec![Configuration::new((**d).clone(), k.store.clone())]
            } else {
                step(&Configuration::new((**c).clone(), k.store.clone()))
                    .into_iter()
                    .map(|k2| {
                        Configuration::new(Cmd::seq(k2.cmd, (**d).clone()), k2.store)
                    })
                    .collect()
            }
        }
    }
}

/// All outcomes of running a program, exploring choice exhaustively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    /// Stores of configurations that reduced to a lone skip.
    pub terminals: BTreeSet<Store>,
    /// Some execution path exhausted the step budget.
    pub diverged: bool,
    /// Length of the longest explored path.
    pub steps_used: usize,
}

impl RunOutcome {
    pub fn single_terminal(&self) -> Option<&Store> {
        if self.terminals.len() == 1 && !self.diverged {
            self.terminals.iter().next()
        } else {
            None
        }
    }
}

/// The initial configuration `<c ; skip^fin, s>` of a program.
pub fn initial_config(p: &Program, s: Store) -> Configuration {
    Configuration::new(Cmd::seq(p.body.clone(), Cmd::Skip(p.fin)), s)
}

/// Breadth-first exploration of all executions from `s0`, each path bounded
/// by `max_steps` steps. A path that hits the budget is reported as
/// divergence, never dropped silently.
pub fn run(p: &Program, s0: Store, max_steps: usize) -> RunOutcome {
    run_config(initial_config(p, s0), max_steps)
}

pub fn run_config(start: Configuration, max_steps: usize) -> RunOutcome {
    let mut frontier = vec![start];
    let mut out = RunOutcome {
        terminals: BTreeSet::new(),
        diverged: false,
        steps_used: 0,
    };
    for depth in 0..=max_steps {
        if frontier.is_empty() {
            break;
        }
        out.steps_used = depth;
        if depth == max_steps {
            // Anything still live has exhausted its budget.
            if frontier.iter().any(|k| !k.is_terminal()) {
                out.diverged = true;
            }
            for k in &frontier {
                if k.is_terminal() {
                    out.terminals.insert(k.store.clone());
                }
            }
            return out;
        }
        let mut next = Vec::new();
        for k in frontier.drain(..) {
            if k.is_terminal() {
                out.terminals.insert(k.store);
            } else {
                next.extend(step(&k));
            }
        }
        frontier = next;
    }
    out
}

/// A non-empty sequence of configurations consecutive under `step`.
pub type CmdTrace = Vec<Configuration>;

/// Enumerate all maximal traces from `start`, cutting each at `max_len`
/// configurations. Returns the traces and whether any was cut.
pub fn enumerate_cmd_traces(start: Configuration, max_len: usize) -> (Vec<CmdTrace>, bool) {
    let mut out = Vec::new();
    let mut cut = false;
    let mut stack: Vec<CmdTrace> = vec![vec![start]];
    while let Some(trace) = stack.pop() {
        let last = trace.last().expect("non-empty");
        if trace.len() >= max_len {
            cut = cut || !last.is_terminal();
            out.push(trace);
            continue;
        }
        let succs = step(last);
        if succs.is_empty() {
            out.push(trace);
        } else {
            for s in succs {
                let mut t = trace.clone();
                t.push(s);
                stack.push(t);
            }
        }
    }
    (out, cut)
}

/// Footprint of a program extended with extra variable names (for example
/// those mentioned by a spec or annotation).
pub fn program_footprint(p: &Program, extra: &BTreeSet<VarName>) -> Arc<Footprint> {
    Footprint::new(p.body.vars().into_iter().chain(extra.iter().cloned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn c0() -> Program {
        parse_program("fin 6\ny := x; z := 1; while y != 0 do z := z * y; y := y - 1 od")
            .unwrap()
    }

    fn fp(names: &[&str]) -> Arc<Footprint> {
        Footprint::new(names.iter().map(|s| s.to_string()))
    }

    fn store(pairs: &[(&str, i64)]) -> Store {
        let names: Vec<String> = pairs.iter().map(|(x, _)| x.to_string()).collect();
        Store::from_pairs(Footprint::new(names), pairs)
    }

    #[test]
    fn eval_basics() {
        let s = store(&[("y", 3)]);
        assert_eq!(eval(&crate::lang::parse::quick_expr("y != 0"), &s), 1);
        let s = store(&[("w", 4)]);
        assert_eq!(eval(&crate::lang::parse::quick_expr("w mod 2 = 0"), &s), 1);
        let s = store(&[("x", 7)]);
        assert_eq!(eval(&crate::lang::parse::quick_expr("x mod 0"), &s), 0);
        assert_eq!(eval(&crate::lang::parse::quick_expr("not 5"), &s), 0);
        assert_eq!(eval(&crate::lang::parse::quick_expr("-3 + 1"), &s), -2);
    }

    #[test]
    fn step_while_false_produces_negative_skip() {
        let p = c0();
        let w = p.body.sub(Label(3)).unwrap().clone();
        let k = Configuration::new(w, store(&[("y", 0)]));
        let succ = step(&k);
        assert_eq!(succ.len(), 1);
        assert!(matches!(succ[0].cmd, Cmd::Skip(Label(-3))));
        assert_eq!(succ[0].store, k.store);
    }

    #[test]
    fn step_assign_updates() {
        let k = Configuration::new(
            Cmd::Assign(Label(2), "x".into(), crate::lang::parse::quick_expr("x + 1")),
            store(&[("x", 3)]),
        );
        let succ = step(&k);
        assert_eq!(succ.len(), 1);
        assert!(matches!(succ[0].cmd, Cmd::Skip(Label(-2))));
        assert_eq!(succ[0].store.get("x"), 4);
    }

    #[test]
    fn step_choice_two_successors() {
        let c = crate::lang::parse_cmd_str("choice skip or skip end", 0).unwrap();
        let k = Configuration::new(c, store(&[]));
        assert_eq!(step(&k).len(), 2);
    }

    #[test]
    fn nonterminal_configs_have_successors() {
        // Progress: every non-skip configuration steps.
        let p = c0();
        let mut k = initial_config(&p, store(&[("x", 2)]));
        for _ in 0..200 {
            if k.is_terminal() {
                break;
            }
            let succ = step(&k);
            assert!(!succ.is_empty(), "stuck non-terminal {:?}", k.cmd);
            assert_eq!(succ.len(), 1, "choice-free must be deterministic");
            k = succ.into_iter().next().unwrap();
        }
        assert!(k.is_terminal());
    }

    #[test]
    fn run_factorial() {
        let p = c0();
        let s0 = Store::from_pairs(fp(&["x", "y", "z"]), &[("x", 4)]);
        let out = run(&p, s0, 1000);
        assert!(!out.diverged);
        let t = out.single_terminal().unwrap();
        assert_eq!(t.get("z"), 24);
        assert_eq!(t.get("y"), 0);
    }

    #[test]
    fn run_skip_unchanged() {
        let p = parse_program("skip").unwrap();
        let s0 = Store::from_pairs(fp(&["a"]), &[("a", 9)]);
        let out = run(&p, s0.clone(), 10);
        assert_eq!(out.single_terminal(), Some(&s0));
    }

    #[test]
    fn run_gated_factorial() {
        let src = "fin 0\n\
            y := x; z := 24; w := 0;\n\
            while y != 4 do\n\
              if w % 2 = 0 then z := z * y; y := y - 1 else skip fi; w := w + 1\n\
            od";
        let p = parse_program(src).unwrap();
        let s0 = Store::from_pairs(fp(&["x", "y", "z", "w"]), &[("x", 5)]);
        let out = run(&p, s0, 10_000);
        // Oracle: invariant x! * 4! = z * y!, applied at exit y = 4 gives
        // z = 24 * 5!/4! = 120.
        assert_eq!(out.single_terminal().unwrap().get("z"), 120);
    }

    #[test]
    fn run_reports_divergence() {
        let p = parse_program("while 1 = 1 do skip od").unwrap();
        let out = run(&p, Store::zeroes(fp(&[])), 50);
        assert!(out.diverged);
        assert!(out.terminals.is_empty());
    }

    #[test]
    fn negative_labels_only_on_skip() {
        let p = c0();
        let (traces, _) =
            enumerate_cmd_traces(initial_config(&p, store(&[("x", 3)])), 500);
        for t in traces {
            for k in t {
                for l in k.cmd.labs() {
                    if l.0 < 0 {
                        // A negative label may only appear on a skip node.
                        let sub = find_negative(&k.cmd, l);
                        assert!(matches!(sub, Some(Cmd::Skip(_))));
                    }
                }
            }
        }
    }

    fn find_negative(c: &Cmd, l: Label) -> Option<&Cmd> {
        match c {
            Cmd::Skip(n) | Cmd::Assign(n, _, _) if *n == l => Some(c),
            Cmd::Seq(a, b) => find_negative(a, l).or_else(|| find_negative(b, l)),
            Cmd::Choice(n, a, b) | Cmd::If(n, _, a, b) => {
                if *n == l {
                    Some(c)
                } else {
                    find_negative(a, l).or_else(|| find_negative(b, l))
                }
            }
            Cmd::While(n, _, a) => {
                if *n == l {
                    Some(c)
                } else {
                    find_negative(a, l)
                }
            }
            _ => None,
        }
    }
}
