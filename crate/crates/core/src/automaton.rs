//! Floyd automata: control points over stores, the automaton of a program,
//! CFGs, cutpoint sets, segments, traces, and bounded spec satisfaction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::assertion::{holds_r, holds_u, Formula, Side};
use crate::lang::{fsuc, Cmd, Label, Program, VarName};
use crate::semantics::{enum_guard, step, Configuration, Domain, Footprint, SemError, Store};

/// Auxiliary alignment tag carried by some product control points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Lck,
    Lo,
    Ro,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Lck => write!(f, "lck"),
            Tag::Lo => write!(f, "lo"),
            Tag::Ro => write!(f, "ro"),
        }
    }
}

/// Opaque control id: a program label, a pair, a tagged triple, or a pair
/// with a scheduling bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ctrl {
    L(i64),
    P(i64, i64),
    T(i64, i64, Tag),
    D(i64, i64, bool),
}

impl Ctrl {
    pub fn left_label(&self) -> i64 {
        match self {
            Ctrl::L(n) => *n,
            Ctrl::P(n, _) | Ctrl::T(n, _, _) | Ctrl::D(n, _, _) => *n,
        }
    }

    pub fn right_label(&self) -> i64 {
        match self {
            Ctrl::L(n) => *n,
            Ctrl::P(_, n) | Ctrl::T(_, n, _) | Ctrl::D(_, n, _) => *n,
        }
    }
}

impl fmt::Display for Ctrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ctrl::L(n) => write!(f, "{n}"),
            Ctrl::P(n, m) => write!(f, "({n},{m})"),
            Ctrl::T(n, m, t) => write!(f, "({n},{m},{t})"),
            Ctrl::D(n, m, b) => write!(f, "({n},{m},#{})", u8::from(*b)),
        }
    }
}

/// Store component of a state: one store, or a pair for products.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StoreVal {
    U(Store),
    P(Store, Store),
}

impl StoreVal {
    pub fn unary(&self) -> &Store {
        match self {
            StoreVal::U(s) => s,
            StoreVal::P(_, _) => panic!("pair store where unary expected"),
        }
    }

    pub fn pair(&self) -> (&Store, &Store) {
        match self {
            StoreVal::P(s, t) => (s, t),
            StoreVal::U(_) => panic!("unary store where pair expected"),
        }
    }

    /// Satisfaction of a formula of matching arity.
    pub fn sat(&self, f: &Formula) -> bool {
        match self {
            StoreVal::U(s) => holds_u(f, s),
            StoreVal::P(s, t) => holds_r(f, s, t),
        }
    }
}

impl fmt::Display for StoreVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreVal::U(s) => write!(f, "{{{s}}}"),
            StoreVal::P(s, t) => write!(f, "{{{s} | {t}}}"),
        }
    }
}

pub type State = (Ctrl, StoreVal);

/// Transition function provider. Implementations must respect finality and
/// non-stuttering; the wrapper asserts both in test builds.
pub trait Stepper: Send + Sync {
    fn succ(&self, c: &Ctrl, v: &StoreVal) -> Vec<(Ctrl, StoreVal)>;

    /// Variables that the action at `c` may read or write, used to restrict
    /// store enumeration. `None` means unknown (use the full footprint).
    fn action_vars(&self, c: &Ctrl) -> Option<BTreeSet<VarName>>;
}

/// Store shape plus per-side footprints.
#[derive(Debug, Clone)]
pub enum StoreShape {
    Unary(Arc<Footprint>),
    Pair(Arc<Footprint>, Arc<Footprint>),
}

impl StoreShape {
    pub fn is_pair(&self) -> bool {
        matches!(self, StoreShape::Pair(_, _))
    }
}

/// Origin of an automaton, used to pick specialized VC renderings.
#[derive(Clone)]
pub enum AutMeta {
    Program(Arc<Program>),
    /// Sequential product of two program automata.
    SeqProduct { left: Arc<Program>, right: Arc<Program> },
    /// Lockstep-control product of two same-control program automata.
    LockstepProduct { left: Arc<Program>, right: Arc<Program> },
    Other(&'static str),
}

/// A Floyd automaton. Finality: no successors of `fin`. Non-stuttering:
/// every transition changes the control point.
pub struct Automaton {
    pub ctrl: BTreeSet<Ctrl>,
    pub init: Ctrl,
    pub fin: Ctrl,
    pub shape: StoreShape,
    pub meta: AutMeta,
    stepper: Arc<dyn Stepper>,
    cfg: Cfg,
}

/// Control flow graph: vertices, root, and the edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub vertices: BTreeSet<Ctrl>,
    pub root: Ctrl,
    pub edges: BTreeSet<(Ctrl, Ctrl)>,
}

impl Cfg {
    pub fn successors<'a>(&'a self, n: &'a Ctrl) -> impl Iterator<Item = &'a Ctrl> + 'a {
        self.edges
            .range((*n, Ctrl::L(i64::MIN))..)
            .take_while(move |(a, _)| a == n)
            .map(|(_, b)| b)
    }

    /// DOT digraph, one `n -> m` line per edge, the root double-circled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfg {\n");
        out.push_str(&format!("  \"{}\" [shape=doublecircle];\n", self.root));
        for v in &self.vertices {
            if *v != self.root {
                out.push_str(&format!("  \"{v}\" [shape=circle];\n"));
            }
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  \"{a}\" -> \"{b}\";\n"));
        }
        out.push_str("}\n");
        out
    }
}

impl Automaton {
    pub fn new(
        ctrl: BTreeSet<Ctrl>,
        init: Ctrl,
        fin: Ctrl,
        shape: StoreShape,
        meta: AutMeta,
        stepper: Arc<dyn Stepper>,
        edges: BTreeSet<(Ctrl, Ctrl)>,
    ) -> Automaton {
        let cfg = Cfg {
            vertices: ctrl.clone(),
            root: init,
            edges,
        };
        Automaton {
            ctrl,
            init,
            fin,
            shape,
            meta,
            stepper,
            cfg,
        }
    }

    /// Successor states. Asserts finality and non-stuttering in test builds.
    pub fn succ(&self, c: &Ctrl, v: &StoreVal) -> Vec<(Ctrl, StoreVal)> {
        let out = self.stepper.succ(c, v);
        debug_assert!(
            *c != self.fin || out.is_empty(),
            "finality violated at {c}"
        );
        debug_assert!(
            out.iter().all(|(m, _)| m != c),
            "stuttering transition at {c}"
        );
        out
    }

    pub fn action_vars(&self, c: &Ctrl) -> Option<BTreeSet<VarName>> {
        self.stepper.action_vars(c)
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    pub fn program(&self) -> Option<&Arc<Program>> {
        match &self.meta {
            AutMeta::Program(p) => Some(p),
            _ => None,
        }
    }

    /// Per-side footprints (unary automata use the left slot).
    pub fn footprints(&self) -> (Arc<Footprint>, Option<Arc<Footprint>>) {
        match &self.shape {
            StoreShape::Unary(fp) => (fp.clone(), None),
            StoreShape::Pair(l, r) => (l.clone(), Some(r.clone())),
        }
    }
}

/// Stepper for the automaton of a program.
struct ProgStepper {
    /// Per label: the subcommand and its following successor.
    nodes: BTreeMap<i64, (Cmd, Label)>,
    fin: Label,
}

impl Stepper for ProgStepper {
    fn succ(&self, c: &Ctrl, v: &StoreVal) -> Vec<(Ctrl, StoreVal)> {
        let n = match c {
            Ctrl::L(n) => *n,
            _ => return vec![],
        };
        if n == self.fin.0 {
            return vec![];
        }
        let Some((sub, fsuc_n)) = self.nodes.get(&n) else {
            return vec![];
        };
        let s = v.unary();
        if matches!(sub, Cmd::Skip(_)) {
            return vec![(Ctrl::L(fsuc_n.0), StoreVal::U(s.clone()))];
        }
        step(&Configuration::new(sub.clone(), s.clone()))
            .into_iter()
            .map(|k| {
                let lab = k.cmd.lab();
                let m = if lab.0 >= 0 { lab } else { *fsuc_n };
                (Ctrl::L(m.0), StoreVal::U(k.store))
            })
            .collect()
    }

    fn action_vars(&self, c: &Ctrl) -> Option<BTreeSet<VarName>> {
        match c {
            Ctrl::L(n) => Some(
                self.nodes
                    .get(n)
                    .map(|(cmd, _)| cmd.head_vars())
                    .unwrap_or_default(),
            ),
            _ => None,
        }
    }
}

/// The automaton of an ok program `c ; skip^fin`.
pub fn aut_of(p: &Program) -> Result<Arc<Automaton>, crate::lang::LangError> {
    p.check_ok()?;
    let prog = Arc::new(p.clone());
    let body = &prog.body;
    let mut nodes = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for n in body.labs() {
        let sub = body.sub(n)?.clone();
        let f = fsuc(n, body, p.fin)?;
        match &sub {
            Cmd::Skip(_) | Cmd::Assign(_, _, _) => {
                edges.insert((Ctrl::L(n.0), Ctrl::L(f.0)));
            }
            Cmd::If(_, _, a, b) | Cmd::Choice(_, a, b) => {
                edges.insert((Ctrl::L(n.0), Ctrl::L(a.lab().0)));
                edges.insert((Ctrl::L(n.0), Ctrl::L(b.lab().0)));
            }
            Cmd::While(_, _, a) => {
                edges.insert((Ctrl::L(n.0), Ctrl::L(a.lab().0)));
                edges.insert((Ctrl::L(n.0), Ctrl::L(f.0)));
            }
            Cmd::Seq(_, _) => unreachable!("sub never returns a sequence"),
        }
        nodes.insert(n.0, (sub, f));
    }
    let ctrl: BTreeSet<Ctrl> = p.points().iter().map(|l| Ctrl::L(l.0)).collect();
    let fp = crate::semantics::program_footprint(p, &BTreeSet::new());
    Ok(Arc::new(Automaton::new(
        ctrl,
        Ctrl::L(p.init().0),
        Ctrl::L(p.fin.0),
        StoreShape::Unary(fp),
        AutMeta::Program(prog.clone()),
        Arc::new(ProgStepper { nodes, fin: p.fin }),
        edges,
    )))
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum AutError {
    #[error("cutset is missing {0}")]
    CutsetMissingEndpoint(Ctrl),
    #[error("cutset contains {0}, which is not a control point")]
    CutsetUnknownPoint(Ctrl),
    #[error("cutset leaves an uncut cycle: {}", render_path(.0))]
    UncutCycle(Vec<Ctrl>),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error("exploration exhausted its budget of {0} states")]
    Budget(usize),
}

pub fn render_path(p: &[Ctrl]) -> String {
    let parts: Vec<String> = p.iter().map(|c| c.to_string()).collect();
    format!("[{}]", parts.join(","))
}

/// Cutpoint set: includes init and fin and cuts every CFG cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cutset {
    pub points: BTreeSet<Ctrl>,
}

impl Cutset {
    pub fn new(a: &Automaton, points: BTreeSet<Ctrl>) -> Result<Cutset, AutError> {
        for p in &points {
            if !a.ctrl.contains(p) {
                return Err(AutError::CutsetUnknownPoint(*p));
            }
        }
        if !points.contains(&a.init) {
            return Err(AutError::CutsetMissingEndpoint(a.init));
        }
        if !points.contains(&a.fin) {
            return Err(AutError::CutsetMissingEndpoint(a.fin));
        }
        if let Some(cycle) = find_uncut_cycle(a.cfg(), &points) {
            return Err(AutError::UncutCycle(cycle));
        }
        Ok(Cutset { points })
    }

    pub fn all(a: &Automaton) -> Cutset {
        Cutset {
            points: a.ctrl.clone(),
        }
    }
}

/// A cycle in the CFG avoiding `points`, if any, as a closed path.
fn find_uncut_cycle(cfg: &Cfg, points: &BTreeSet<Ctrl>) -> Option<Vec<Ctrl>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        InProgress,
        Done,
    }
    let mut marks: BTreeMap<Ctrl, Mark> = BTreeMap::new();
    let verts: Vec<Ctrl> = cfg
        .vertices
        .iter()
        .filter(|v| !points.contains(v))
        .copied()
        .collect();
    // Iterative DFS with an explicit path stack.
    for &start in &verts {
        if marks.contains_key(&start) {
            continue;
        }
        let mut path: Vec<Ctrl> = Vec::new();
        let mut stack: Vec<(Ctrl, Vec<Ctrl>)> = vec![(
            start,
            cfg.successors(&start)
                .filter(|m| !points.contains(m))
                .copied()
                .collect(),
        )];
        marks.insert(start, Mark::InProgress);
        path.push(start);
        while let Some((v, succs)) = stack.last_mut() {
            if let Some(m) = succs.pop() {
                match marks.get(&m) {
                    Some(Mark::InProgress) => {
                        // Close the cycle at m.
                        let at = path.iter().position(|x| *x == m).unwrap();
                        let mut cycle: Vec<Ctrl> = path[at..].to_vec();
                        cycle.push(m);
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        let next: Vec<Ctrl> = cfg
                            .successors(&m)
                            .filter(|x| !points.contains(x))
                            .copied()
                            .collect();
                        marks.insert(m, Mark::InProgress);
                        path.push(m);
                        stack.push((m, next));
                    }
                }
            } else {
                marks.insert(*v, Mark::Done);
                path.pop();
                stack.pop();
            }
        }
    }
    None
}

/// Segments for a cutset: CFG paths of length > 1 that start and end at
/// cutpoints with no interior cutpoint.
pub fn segments(a: &Automaton, k: &Cutset) -> Vec<Vec<Ctrl>> {
    let mut out = Vec::new();
    for &start in &k.points {
        let mut stack: Vec<Vec<Ctrl>> = vec![vec![start]];
        while let Some(path) = stack.pop() {
            let last = *path.last().unwrap();
            for &m in a.cfg().successors(&last).collect::<Vec<_>>().iter() {
                let mut p = path.clone();
                p.push(*m);
                if k.points.contains(m) {
                    out.push(p);
                } else {
                    stack.push(p);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Stores reachable from `(vs[0], v)` by a trace whose control path is
/// exactly `vs`.
pub fn seg_rel(a: &Automaton, vs: &[Ctrl], v: &StoreVal) -> BTreeSet<StoreVal> {
    let mut states: Vec<StoreVal> = vec![v.clone()];
    for i in 1..vs.len() {
        let mut next = Vec::new();
        for s in &states {
            for (m, t) in a.succ(&vs[i - 1], s) {
                if m == vs[i] {
                    next.push(t);
                }
            }
        }
        states = next;
        if states.is_empty() {
            break;
        }
    }
    states.into_iter().collect()
}

/// Verdict of a bounded check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails(Box<WitnessTrace>),
    Inconclusive,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessTrace {
    pub states: Vec<State>,
}

impl fmt::Display for WitnessTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, v)) in self.states.iter().enumerate() {
            if i > 0 {
                write!(f, " -> ")?;
            }
            write!(f, "{c} {v}")?;
        }
        Ok(())
    }
}

/// Result of bounded satisfaction checking, with optional stuckness report.
#[derive(Debug, Clone)]
pub struct SatReport {
    pub verdict: Verdict,
    /// Reachable non-final states with no successor (product deadlocks and
    /// the like). Informational only under the basic spec semantics.
    pub stuck_nonfinal: usize,
    pub explored: usize,
}

/// Per-side extra variables to include in store enumeration.
pub fn formula_vars(fs: &[&Formula]) -> (BTreeSet<VarName>, BTreeSet<VarName>) {
    let mut l = BTreeSet::new();
    let mut r = BTreeSet::new();
    for f in fs {
        f.vars(Side::Plain, &mut l);
        f.vars(Side::Left, &mut l);
        f.vars(Side::Right, &mut r);
    }
    (l, r)
}

/// Enumerate initial store values over `dom` on the automaton footprint
/// extended by the formulas' variables.
pub fn initial_vals(
    a: &Automaton,
    fs: &[&Formula],
    dom: Domain,
) -> Result<Vec<StoreVal>, SemError> {
    let (extra_l, extra_r) = formula_vars(fs);
    match &a.shape {
        StoreShape::Unary(fp) => {
            let fp = Footprint::union(fp, &Footprint::new(extra_l.into_iter().chain(extra_r)));
            let n = dom.count_stores(fp.len()).ok_or_else(|| too_big(&fp, dom))?;
            enum_guard(n, fp.len(), dom)?;
            Ok((0..n).map(|i| StoreVal::U(dom.store_at(&fp, i))).collect())
        }
        StoreShape::Pair(fl, fr) => {
            let fl = Footprint::union(fl, &Footprint::new(extra_l));
            let fr = Footprint::union(fr, &Footprint::new(extra_r));
            let nl = dom.count_stores(fl.len()).ok_or_else(|| too_big(&fl, dom))?;
            let nr = dom.count_stores(fr.len()).ok_or_else(|| too_big(&fr, dom))?;
            let total = nl.checked_mul(nr).ok_or_else(|| too_big(&fl, dom))?;
            enum_guard(total, fl.len() + fr.len(), dom)?;
            let mut out = Vec::with_capacity(total as usize);
            for i in 0..nl {
                for j in 0..nr {
                    out.push(StoreVal::P(dom.store_at(&fl, i), dom.store_at(&fr, j)));
                }
            }
            Ok(out)
        }
    }
}

fn too_big(fp: &Arc<Footprint>, dom: Domain) -> SemError {
    SemError::EnumerationTooLarge {
        vars: fp.len(),
        domain: dom.to_string(),
        budget: crate::semantics::ENUM_BUDGET,
    }
}

/// Bounded basic-semantics satisfaction of `{pre}{post}`: explore all
/// initial traces from pre-states over `dom`, up to `max_steps` levels;
/// fails with a terminated witness trace ending outside `post`.
pub fn satisfies_bounded(
    a: &Automaton,
    pre: &Formula,
    post: &Formula,
    dom: Domain,
    max_steps: usize,
) -> Result<SatReport, SemError> {
    let starts: Vec<State> = initial_vals(a, &[pre, post], dom)?
        .into_iter()
        .filter(|v| v.sat(pre))
        .map(|v| (a.init, v))
        .collect();
    Ok(explore_for_post(a, starts, post, max_steps))
}

/// BFS with parent links; checks `post` at terminated states.
pub fn explore_for_post(
    a: &Automaton,
    starts: Vec<State>,
    post: &Formula,
    max_steps: usize,
) -> SatReport {
    let mut parents: BTreeMap<State, Option<State>> = BTreeMap::new();
    let mut frontier: VecDeque<State> = VecDeque::new();
    let mut stuck = 0usize;
    for s in starts {
        if !parents.contains_key(&s) {
            parents.insert(s.clone(), None);
            frontier.push_back(s);
        }
    }
    let mut inconclusive = false;
    let mut depth = 0usize;
    while !frontier.is_empty() {
        if depth >= max_steps {
            inconclusive = true;
            break;
        }
        depth += 1;
        let mut next = VecDeque::new();
        while let Some(st) = frontier.pop_front() {
            let (c, v) = &st;
            if *c == a.fin {
                if !v.sat(post) {
                    return SatReport {
                        verdict: Verdict::Fails(Box::new(rebuild_trace(&parents, &st))),
                        stuck_nonfinal: stuck,
                        explored: parents.len(),
                    };
                }
                continue;
            }
            let succs = a.succ(c, v);
            if succs.is_empty() {
                stuck += 1;
                continue;
            }
            for nxt in succs {
                if !parents.contains_key(&nxt) {
                    parents.insert(nxt.clone(), Some(st.clone()));
                    next.push_back(nxt);
                }
            }
        }
        frontier = next;
    }
    // Final states discovered exactly at the cutoff still need checking, and
    // only live non-final states make the cutoff inconclusive.
    for st in frontier.iter() {
        if st.0 == a.fin && !st.1.sat(post) {
            return SatReport {
                verdict: Verdict::Fails(Box::new(rebuild_trace(&parents, st))),
                stuck_nonfinal: stuck,
                explored: parents.len(),
            };
        }
    }
    inconclusive = inconclusive && frontier.iter().any(|st| st.0 != a.fin);
    SatReport {
        verdict: if inconclusive {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        },
        stuck_nonfinal: stuck,
        explored: parents.len(),
    }
}

fn rebuild_trace(parents: &BTreeMap<State, Option<State>>, last: &State) -> WitnessTrace {
    let mut states = vec![last.clone()];
    let mut cur = last.clone();
    while let Some(Some(p)) = parents.get(&cur) {
        states.push(p.clone());
        cur = p.clone();
    }
    states.reverse();
    WitnessTrace { states }
}

/// All reachable states from the given starts (bounded), with a flag when
/// the budget was exhausted.
pub fn reachable_states(
    a: &Automaton,
    starts: Vec<State>,
    max_steps: usize,
) -> (BTreeSet<State>, bool) {
    let mut seen: BTreeSet<State> = starts.iter().cloned().collect();
    let mut frontier: VecDeque<State> = starts.into();
    let mut depth = 0usize;
    let mut capped = false;
    while !frontier.is_empty() {
        if depth >= max_steps {
            capped = true;
            break;
        }
        depth += 1;
        let mut next = VecDeque::new();
        while let Some((c, v)) = frontier.pop_front() {
            for nxt in a.succ(&c, &v) {
                if seen.insert(nxt.clone()) {
                    next.push_back(nxt);
                }
            }
        }
        frontier = next;
    }
    (seen, capped)
}

/// A trace of an automaton.
pub type AutTrace = Vec<State>;

/// Enumerate maximal traces from `start`, cut at `max_len` states.
pub fn enumerate_aut_traces(
    a: &Automaton,
    start: State,
    max_len: usize,
) -> (Vec<AutTrace>, bool) {
    let mut out = Vec::new();
    let mut cut = false;
    let mut stack: Vec<AutTrace> = vec![vec![start]];
    while let Some(trace) = stack.pop() {
        let (c, v) = trace.last().unwrap();
        if trace.len() >= max_len {
            cut = cut || !a.succ(c, v).is_empty();
            out.push(trace);
            continue;
        }
        let succs = a.succ(c, v);
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

/// Stepwise correspondence between the command semantics of `c ; skip^fin`
/// and its automaton, from one store: the traces agree on stores and labels
/// once the administrative configurations introduced by assignment and loop
/// exit (which carry negative labels and are erased by the next silent step)
/// are dropped from the command side.
pub fn check_trace_correspondence(
    p: &Program,
    a: &Automaton,
    s0: &Store,
    depth: usize,
) -> Result<(), String> {
    let start_cfg = crate::semantics::initial_config(p, s0.clone());
    let start_state: State = (a.init, StoreVal::U(s0.clone()));
    let mut seen: BTreeSet<(Configuration, State)> = BTreeSet::new();
    let mut frontier = vec![(start_cfg, start_state, 0usize)];
    while let Some((cfg, st, d)) = frontier.pop() {
        if d >= depth || !seen.insert((cfg.clone(), st.clone())) {
            continue;
        }
        if cfg.cmd.lab().0 != st.0.left_label() {
            return Err(format!(
                "label mismatch: command at {} vs automaton at {}",
                cfg.cmd.lab(),
                st.0
            ));
        }
        if StoreVal::U(cfg.store.clone()) != st.1 {
            return Err(format!("store mismatch at {}", st.0));
        }
        let cmd_succs = absorbed_cmd_steps(&cfg)?;
        let aut_succs = a.succ(&st.0, &st.1);
        let mut cmd_keys: Vec<(i64, Store)> = cmd_succs
            .iter()
            .map(|k| (k.cmd.lab().0, k.store.clone()))
            .collect();
        let mut aut_keys: Vec<(i64, Store)> = aut_succs
            .iter()
            .map(|(c, v)| (c.left_label(), v.unary().clone()))
            .collect();
        cmd_keys.sort();
        aut_keys.sort();
        if cmd_keys != aut_keys {
            return Err(format!(
                "successor mismatch at {}: command side {:?} vs automaton side {:?}",
                st.0,
                cmd_keys.iter().map(|(l, _)| l).collect::<Vec<_>>(),
                aut_keys.iter().map(|(l, _)| l).collect::<Vec<_>>(),
            ));
        }
        for k in cmd_succs {
            let key = (k.cmd.lab().0, k.store.clone());
            let matching = aut_succs
                .iter()
                .find(|(c, v)| c.left_label() == key.0 && *v.unary() == key.1)
                .expect("matched above");
            frontier.push((k, matching.clone(), d + 1));
        }
    }
    Ok(())
}

/// Command steps with negative-label administrative configurations stepped
/// through (the following silent step does not change the store).
fn absorbed_cmd_steps(cfg: &Configuration) -> Result<Vec<Configuration>, String> {
    let mut out = Vec::new();
    for k in step(cfg) {
        if k.cmd.lab().0 < 0 {
            let inner = step(&k);
            if inner.len() != 1 {
                return Err("administrative configuration did not step silently".into());
            }
            let next = inner.into_iter().next().unwrap();
            if next.store != k.store {
                return Err("administrative step changed the store".into());
            }
            out.push(next);
        } else {
            out.push(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertion::{parse_formula, Arity};
    use crate::lang::parse_program;

    fn c0() -> Program {
        parse_program("fin 6\ny := x; z := 1; while y != 0 do z := z * y; y := y - 1 od")
            .unwrap()
    }

    fn labels(cs: &[i64]) -> Vec<Ctrl> {
        cs.iter().map(|&n| Ctrl::L(n)).collect()
    }

    #[test]
    fn factorial_cfg_edges() {
        let a = aut_of(&c0()).unwrap();
        let want: BTreeSet<(Ctrl, Ctrl)> = [
            (1, 2),
            (2, 3),
            (3, 4),
            (3, 6),
            (4, 5),
            (5, 3),
        ]
        .iter()
        .map(|&(x, y)| (Ctrl::L(x), Ctrl::L(y)))
        .collect();
        assert_eq!(a.cfg().edges, want);
    }

    #[test]
    fn skip_program_single_edge() {
        let p = parse_program("fin 0\n1: skip").unwrap();
        let a = aut_of(&p).unwrap();
        let want: BTreeSet<(Ctrl, Ctrl)> = [(Ctrl::L(1), Ctrl::L(0))].into_iter().collect();
        assert_eq!(a.cfg().edges, want);
    }

    #[test]
    fn segments_of_factorial() {
        let a = aut_of(&c0()).unwrap();
        let k = Cutset::new(&a, labels(&[1, 3, 6]).into_iter().collect()).unwrap();
        let segs = segments(&a, &k);
        let want = vec![labels(&[1, 2, 3]), labels(&[3, 4, 5, 3]), labels(&[3, 6])];
        assert_eq!(segs, want);
    }

    #[test]
    fn full_cutset_segments_are_edges() {
        let a = aut_of(&c0()).unwrap();
        let k = Cutset::all(&a);
        let segs = segments(&a, &k);
        assert_eq!(segs.len(), a.cfg().edges.len());
        assert!(segs.iter().all(|s| s.len() == 2));
    }

    #[test]
    fn invalid_cutset_reports_cycle() {
        let a = aut_of(&c0()).unwrap();
        match Cutset::new(&a, labels(&[1, 6]).into_iter().collect()) {
            Err(AutError::UncutCycle(cycle)) => {
                assert_eq!(cycle.first(), cycle.last());
                assert!(cycle.len() == 4, "cycle {cycle:?}");
            }
            other => panic!("expected uncut cycle, got {other:?}"),
        }
    }

    #[test]
    fn seg_rel_examples() {
        let a = aut_of(&c0()).unwrap();
        let fp = Footprint::new(["x", "y", "z"].map(String::from));
        // Exit edge copies the store when y = 0.
        let s = StoreVal::U(Store::from_pairs(fp.clone(), &[("y", 0), ("z", 7)]));
        let out = seg_rel(&a, &labels(&[3, 6]), &s);
        assert_eq!(out, [s.clone()].into_iter().collect());
        // y = 2 drives the automaton into the body instead.
        let s2 = StoreVal::U(Store::from_pairs(fp.clone(), &[("y", 2), ("z", 1)]));
        assert!(seg_rel(&a, &labels(&[3, 6]), &s2).is_empty());
        // One loop body pass: z := z*y; y := y-1.
        let out2 = seg_rel(&a, &labels(&[3, 4, 5, 3]), &s2);
        let want = StoreVal::U(Store::from_pairs(fp, &[("y", 1), ("z", 2)]));
        assert_eq!(out2, [want].into_iter().collect());
    }

    #[test]
    fn satisfies_factorial_spec() {
        let a = aut_of(&c0()).unwrap();
        let pre = parse_formula("x = 4", Arity::Unary).unwrap();
        let post = parse_formula("z = 24", Arity::Unary).unwrap();
        let dom = Domain::new(4, 4).unwrap();
        let rep = satisfies_bounded(&a, &pre, &post, dom, 1000).unwrap();
        assert!(rep.verdict.holds());
        // Vacuous precondition.
        let rep2 =
            satisfies_bounded(&a, &Formula::ff(), &post, dom, 1000).unwrap();
        assert!(rep2.verdict.holds());
        // Wrong output: witness trace ends with z = 6.
        let pre3 = parse_formula("x = 3", Arity::Unary).unwrap();
        let post3 = parse_formula("z = 5", Arity::Unary).unwrap();
        let dom3 = Domain::new(3, 3).unwrap();
        let rep3 = satisfies_bounded(&a, &pre3, &post3, dom3, 1000).unwrap();
        match rep3.verdict {
            Verdict::Fails(tr) => {
                let last = tr.states.last().unwrap();
                assert_eq!(last.1.unary().get("z"), 6);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn only_stuck_states_are_terminated() {
        let a = aut_of(&c0()).unwrap();
        let dom = Domain::new(-2, 2).unwrap();
        let starts: Vec<State> = initial_vals(&a, &[], dom)
            .unwrap()
            .into_iter()
            .map(|v| (a.init, v))
            .collect();
        let (states, _) = reachable_states(&a, starts, 300);
        for (c, v) in states {
            if a.succ(&c, &v).is_empty() {
                assert_eq!(c, a.fin);
            }
        }
    }

    #[test]
    fn trace_correspondence_on_factorial() {
        let p = c0();
        let a = aut_of(&p).unwrap();
        let fp = crate::semantics::program_footprint(&p, &BTreeSet::new());
        let dom = Domain::new(-2, 2).unwrap();
        let n = dom.count_stores(fp.len()).unwrap();
        for i in 0..n {
            let s = dom.store_at(&fp, i);
            check_trace_correspondence(&p, &a, &s, 300).unwrap();
        }
    }

    #[test]
    fn dot_output_shape() {
        let a = aut_of(&c0()).unwrap();
        let dot = a.cfg().to_dot();
        assert!(dot.contains("\"1\" [shape=doublecircle]"));
        assert!(dot.contains("\"3\" -> \"6\";"));
    }
}
