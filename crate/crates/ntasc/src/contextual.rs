//! Knowledge of A2 about A1: unobservable-reach sets, the contextual
//! transition system over joint regions, and restriction detection.
//!
//! A contextual state pairs an A2 location with a set of joint region-states
//! (members). All members agree on the key clocks: A2's own clocks, one
//! reference copy of every A1 clock taken at the last synchronization, and a
//! clock measuring time since that synchronization. The references and the
//! elapsed-time clock let member regions track A1's clocks relative to what
//! A2 has observed.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::model::{Action, Automaton, Network};
use crate::parser::dot::{DotGraph, EdgeStyle};
use crate::regions::{compile_automaton, CAutomaton, ClockSpace, Region, RegionError};

/// A1 location with a joint region.
pub type Member = (usize, Region);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtxState {
    pub l2: usize,
    /// Sorted and deduplicated.
    pub members: Vec<Member>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CtxLabel {
    Delay,
    Local {
        edge: usize,
        action: Action,
    },
    /// Synchronization enriched with the A1 location and X1 region reached.
    Sync {
        action: String,
        l1: usize,
        region: Region,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RestrictionKind {
    Local { edge: usize, action: Action },
    Delay,
}

/// Two A1 states that A2 cannot tell apart at the same instant, one of which
/// allows a step of A2 that the other forbids.
#[derive(Clone, Debug)]
pub struct RestrictionWitness {
    /// A2 location.
    pub l2: usize,
    pub kind: RestrictionKind,
    pub enabling: Member,
    pub disabling: Member,
    /// Labels from the initial contextual state.
    pub path: Vec<CtxLabel>,
    /// `X1 ++ Y`, the space of the two members.
    pub space: ClockSpace,
}

/// The two automata compiled over the joint clock space `X1 ++ Y ++ refs ++ [w]`.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub space: ClockSpace,
    pub a1: CAutomaton,
    pub a2: CAutomaton,
    pub x1_idx: Vec<usize>,
    pub key_idx: Vec<usize>,
    /// `(reference, source)` pairs refreshed at each synchronization.
    pub refs: Vec<(usize, usize)>,
    pub w: usize,
    pub x1_space: ClockSpace,
}

/// `(A2 edge, successor, restriction pair if the edge splits the members)`.
pub type LocalMove = (usize, CtxState, Option<(Member, Member)>);

pub fn ref_name(x: &str) -> String {
    format!("ref:{x}")
}

pub const ELAPSED: &str = "w:since-sync";

impl Ctx {
    pub fn new(net: &Network) -> Ctx {
        let maxc = crate::model::max_constants(net);
        let (a1, a2) = (net.a1(), net.a2());
        let mut names: Vec<String> = a1.clocks.clone();
        names.extend(a2.clocks.iter().cloned());
        names.extend(a1.clocks.iter().map(|x| ref_name(x)));
        names.push(ELAPSED.to_string());
        let m = |n: &str| maxc.get(n).copied().unwrap_or(0);
        let mut mc: Vec<u32> = a1.clocks.iter().map(|x| m(x)).collect();
        mc.extend(a2.clocks.iter().map(|y| m(y)));
        mc.extend(a1.clocks.iter().map(|x| m(x)));
        mc.push(a1.clocks.iter().map(|x| m(x)).max().unwrap_or(0));
        let space = ClockSpace::new(names, mc);
        let n1 = a1.clocks.len();
        let n2 = a2.clocks.len();
        let index = |c: &str| space.index(c).unwrap_or_else(|| panic!("unknown clock {c}"));
        let x1_idx: Vec<usize> = (0..n1).collect();
        let key_idx: Vec<usize> = (n1..space.len()).collect();
        let refs = (0..n1).map(|i| (n1 + n2 + i, i)).collect();
        Ctx {
            a1: compile_automaton(a1, &index),
            a2: compile_automaton(a2, &index),
            x1_space: space.subspace(&x1_idx),
            w: space.len() - 1,
            space,
            x1_idx,
            key_idx,
            refs,
        }
    }

    pub fn key_of(&self, r: &Region) -> Region {
        r.project(&self.key_idx)
    }

    pub fn legal(&self, l1: usize, l2: usize, r: &Region) -> bool {
        r.satisfies(&self.space, &self.a1.inv[l1]) && r.satisfies(&self.space, &self.a2.inv[l2])
    }

    /// A1-local moves of one member in zero delay.
    fn local_a1(&self, l2: usize, m: &Member) -> Vec<Member> {
        let mut out = Vec::new();
        for &eid in &self.a1.out[m.0] {
            let e = &self.a1.edges[eid];
            if e.action.is_sync() || !m.1.satisfies(&self.space, &e.guard) {
                continue;
            }
            let r = m.1.reset(&e.resets);
            if self.legal(e.dst, l2, &r) {
                out.push((e.dst, r));
            }
        }
        out
    }

    /// UR: closure under zero-delay A1-local moves.
    pub fn ur(&self, l2: usize, seeds: impl IntoIterator<Item = Member>) -> BTreeSet<Member> {
        self.closure(l2, seeds, false)
    }

    /// UR plus time steps that leave the key region unchanged.
    pub fn close(&self, l2: usize, seeds: impl IntoIterator<Item = Member>) -> BTreeSet<Member> {
        self.closure(l2, seeds, true)
    }

    fn closure(&self, l2: usize, seeds: impl IntoIterator<Item = Member>, timed: bool) -> BTreeSet<Member> {
        let mut set: BTreeSet<Member> = BTreeSet::new();
        let mut work: Vec<Member> = Vec::new();
        for s in seeds {
            if set.insert(s.clone()) {
                work.push(s);
            }
        }
        while let Some(m) = work.pop() {
            let mut next = self.local_a1(l2, &m);
            if timed {
                if let Some(r) = m.1.time_successor(&self.space) {
                    if self.key_of(&r) == self.key_of(&m.1) && self.legal(m.0, l2, &r) {
                        next.push((m.0, r));
                    }
                }
            }
            for n in next {
                if set.insert(n.clone()) {
                    work.push(n);
                }
            }
        }
        set
    }

    pub fn state(&self, l2: usize, members: BTreeSet<Member>) -> CtxState {
        CtxState { l2, members: members.into_iter().collect() }
    }

    pub fn init(&self) -> Option<CtxState> {
        let r = Region::zero(self.space.len());
        let (l1, l2) = (self.a1.init, self.a2.init);
        if !self.legal(l1, l2, &r) {
            return None;
        }
        Some(self.state(l2, self.close(l2, [(l1, r)])))
    }

    /// Delay step to the next key region, with a restriction witness
    /// `(blocked, unblocked)` when A2's invariant stops some members only.
    ///
    /// A member is unblocked when its time chain inside the key either leaves
    /// the key legally or never ends; it is blocked when the chain stops on
    /// A2's invariant while A1's invariant still holds.
    pub fn delay(&self, st: &CtxState) -> (Option<CtxState>, Option<(Member, Member)>) {
        let key = self.key_of(&st.members[0].1);
        let mut seeds = Vec::new();
        let mut blocked: Option<Member> = None;
        let mut ok: Option<Member> = None;
        for m in &st.members {
            let mut cur = m.1.clone();
            loop {
                let Some(r) = cur.time_successor(&self.space) else {
                    ok.get_or_insert_with(|| m.clone());
                    break;
                };
                if !self.legal(m.0, st.l2, &r) {
                    if r.satisfies(&self.space, &self.a1.inv[m.0]) {
                        blocked.get_or_insert_with(|| m.clone());
                    }
                    break;
                }
                if self.key_of(&r) != key {
                    ok.get_or_insert_with(|| m.clone());
                    if cur == m.1 {
                        seeds.push((m.0, r));
                    }
                    break;
                }
                cur = r;
            }
        }
        let next = (!seeds.is_empty()).then(|| self.state(st.l2, self.close(st.l2, seeds)));
        (next, blocked.zip(ok))
    }

    /// Local A2 steps (including ε): `(edge, next, restriction)`.
    pub fn local_moves(&self, st: &CtxState) -> Vec<LocalMove> {
        let mut out = Vec::new();
        for &eid in &self.a2.out[st.l2] {
            let e = &self.a2.edges[eid];
            if e.action.is_sync() {
                continue;
            }
            let mut enablers = Vec::new();
            let mut disabler = None;
            for m in &st.members {
                let r = m.1.reset(&e.resets);
                if m.1.satisfies(&self.space, &e.guard) && self.legal(m.0, e.dst, &r) {
                    enablers.push((m.0, r));
                } else if disabler.is_none() {
                    disabler = Some(m.clone());
                }
            }
            if enablers.is_empty() {
                continue;
            }
            let restriction = disabler.map(|d| {
                let en = st
                    .members
                    .iter()
                    .find(|m| m.1.satisfies(&self.space, &e.guard) && self.legal(m.0, e.dst, &m.1.reset(&e.resets)))
                    .unwrap()
                    .clone();
                (en, d)
            });
            out.push((eid, self.state(e.dst, self.close(e.dst, enablers)), restriction));
        }
        out
    }

    /// Synchronizations enriched with the A1 target: `(label, a2 edge, a1 edge, next)`.
    pub fn sync_moves(&self, st: &CtxState) -> Vec<(CtxLabel, usize, usize, CtxState)> {
        let mut out: BTreeSet<(CtxLabel, usize, usize, CtxState)> = BTreeSet::new();
        for &e2id in &self.a2.out[st.l2] {
            let e2 = &self.a2.edges[e2id];
            let Action::Sync(a) = &e2.action else { continue };
            for m in &st.members {
                if !m.1.satisfies(&self.space, &e2.guard) {
                    continue;
                }
                for &e1id in &self.a1.out[m.0] {
                    let e1 = &self.a1.edges[e1id];
                    if e1.action != e2.action || !m.1.satisfies(&self.space, &e1.guard) {
                        continue;
                    }
                    let mut resets = e1.resets.clone();
                    resets.extend(e2.resets.iter().copied());
                    resets.push(self.w);
                    let mut copies = e1.copies.clone();
                    copies.extend(e2.copies.iter().copied());
                    let t = m.1.reset(&resets).copy(&self.space, &copies).copy(&self.space, &self.refs);
                    if !self.legal(e1.dst, e2.dst, &t) {
                        continue;
                    }
                    let label = CtxLabel::Sync { action: a.clone(), l1: e1.dst, region: t.project(&self.x1_idx) };
                    let next = self.state(e2.dst, self.close(e2.dst, [(e1.dst, t)]));
                    out.insert((label, e2id, e1id, next));
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn label_text(&self, l: &CtxLabel) -> String {
        match l {
            CtxLabel::Delay => "delay".into(),
            CtxLabel::Local { action, .. } => action.to_string(),
            CtxLabel::Sync { action, l1, region } => {
                format!("({action},{}@{})", self.a1.locs[*l1], region.id(&self.x1_space))
            }
        }
    }

    pub fn member_text(&self, m: &Member) -> String {
        format!("({}, {})", self.a1.locs[m.0], m.1.describe(&self.space))
    }
}

#[derive(Clone, Debug, Default)]
pub struct ContextualGraph {
    pub states: Vec<CtxState>,
    pub edges: Vec<(usize, usize, CtxLabel)>,
    pub parent: Vec<Option<(usize, usize)>>,
}

impl ContextualGraph {
    pub fn path_to(&self, mut s: usize) -> Vec<CtxLabel> {
        let mut path = Vec::new();
        while let Some((p, e)) = self.parent[s] {
            path.push(self.edges[e].2.clone());
            s = p;
        }
        path.reverse();
        path
    }
}

/// Breadth-first exploration (level by level, each level in canonical order).
pub fn explore(ctx: &Ctx, budget: usize) -> Result<ContextualGraph, RegionError> {
    let mut g = ContextualGraph::default();
    let mut index: HashMap<CtxState, usize> = HashMap::new();
    let Some(init) = ctx.init() else { return Ok(g) };
    index.insert(init.clone(), 0);
    g.states.push(init);
    g.parent.push(None);
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next_frontier = Vec::new();
        for s in frontier {
            let st = g.states[s].clone();
            let mut succs: Vec<(CtxLabel, CtxState)> = Vec::new();
            for (eid, next, _) in ctx.local_moves(&st) {
                let action = ctx.a2.edges[eid].action.clone();
                succs.push((CtxLabel::Local { edge: eid, action }, next));
            }
            if let (Some(n), _) = ctx.delay(&st) {
                succs.push((CtxLabel::Delay, n));
            }
            for (label, _, _, n) in ctx.sync_moves(&st) {
                succs.push((label, n));
            }
            for (label, t) in succs {
                let ti = match index.get(&t) {
                    Some(&i) => i,
                    None => {
                        if g.states.len() >= budget {
                            return Err(RegionError::StateBudgetExceeded(budget));
                        }
                        let i = g.states.len();
                        index.insert(t.clone(), i);
                        g.states.push(t);
                        g.parent.push(Some((s, g.edges.len())));
                        next_frontier.push(i);
                        i
                    }
                };
                g.edges.push((s, ti, label));
            }
        }
        next_frontier.sort_by(|a, b| g.states[*a].cmp(&g.states[*b]));
        frontier = next_frontier;
    }
    Ok(g)
}

pub fn build_contextual_graph(net: &Network, budget: usize) -> Result<(Ctx, ContextualGraph), RegionError> {
    let ctx = Ctx::new(net);
    let g = explore(&ctx, budget)?;
    Ok((ctx, g))
}

/// Two A1 copies under one run of A2: `(copy a, copy b, A2 location, region)`.
/// The region ranges over the contextual space followed by copy b's X1 clocks.
type PairState = (usize, usize, usize, Region);

struct PairSearch {
    /// `X1 ++ Y`, the space of each copy's view.
    view_space: ClockSpace,
    a1: CAutomaton,
    a2: CAutomaton,
    /// `X1 ++ Y ++ X1#b`.
    space: ClockSpace,
    view_a: Vec<usize>,
    view_b: Vec<usize>,
    /// Copy b's X1 clock indices.
    xb: Vec<usize>,
}

enum PairMove {
    Next(Option<CtxLabel>, PairState),
    Restriction(RestrictionKind, bool),
}

impl PairSearch {
    fn new(net: &Network) -> Self {
        let maxc = crate::model::max_constants(net);
        let (a1, a2) = (net.a1(), net.a2());
        let mut names: Vec<String> = a1.clocks.iter().chain(&a2.clocks).cloned().collect();
        let view_space =
            ClockSpace::new(names.clone(), names.iter().map(|c| maxc.get(c).copied().unwrap_or(0)).collect());
        let index = |c: &str| view_space.index(c).unwrap_or_else(|| panic!("unknown clock {c}"));
        let (ca1, ca2) = (compile_automaton(a1, &index), compile_automaton(a2, &index));
        let j = names.len();
        let n1 = a1.clocks.len();
        names.extend(a1.clocks.iter().map(|c| format!("{c}#b")));
        let mut mc = view_space.maxc.clone();
        mc.extend_from_slice(&view_space.maxc[..n1]);
        let xb: Vec<usize> = (j..j + n1).collect();
        let view_a = (0..j).collect();
        let view_b = xb.iter().copied().chain(n1..j).collect();
        PairSearch { view_space, a1: ca1, a2: ca2, space: ClockSpace::new(names, mc), view_a, view_b, xb }
    }

    fn view(&self, r: &Region, b: bool) -> Region {
        r.project(if b { &self.view_b } else { &self.view_a })
    }

    fn legal(&self, l1: usize, l2: usize, r: &Region, b: bool) -> bool {
        let v = self.view(r, b);
        v.satisfies(&self.view_space, &self.a1.inv[l1]) && v.satisfies(&self.view_space, &self.a2.inv[l2])
    }

    fn moves(&self, s: &PairState) -> Vec<PairMove> {
        let ctx = self;
        let sp = &self.view_space;
        let (la, lb, l2, r) = s;
        let mut out = Vec::new();
        // A1-local moves of either copy
        for (b, l1) in [(false, *la), (true, *lb)] {
            for &eid in &ctx.a1.out[l1] {
                let e = &ctx.a1.edges[eid];
                if e.action.is_sync() || !self.view(r, b).satisfies(sp, &e.guard) {
                    continue;
                }
                let resets: Vec<usize> =
                    if b { e.resets.iter().map(|&c| self.xb[c]).collect() } else { e.resets.clone() };
                let n = r.reset(&resets);
                if self.legal(e.dst, *l2, &n, b) {
                    let next = if b { (*la, e.dst, *l2, n) } else { (e.dst, *lb, *l2, n) };
                    out.push(PairMove::Next(None, next));
                }
            }
        }
        // delay
        if let Some(n) = r.time_successor(&self.space) {
            let ok = |l1: usize, b: bool| self.legal(l1, *l2, &n, b);
            let a1_ok = |l1: usize, b: bool| self.view(&n, b).satisfies(sp, &ctx.a1.inv[l1]);
            match (ok(*la, false), ok(*lb, true)) {
                (true, true) => out.push(PairMove::Next(Some(CtxLabel::Delay), (*la, *lb, *l2, n))),
                (true, false) if a1_ok(*lb, true) => out.push(PairMove::Restriction(RestrictionKind::Delay, false)),
                (false, true) if a1_ok(*la, false) => out.push(PairMove::Restriction(RestrictionKind::Delay, true)),
                _ => {}
            }
        }
        // A2-local moves
        for &eid in &ctx.a2.out[*l2] {
            let e = &ctx.a2.edges[eid];
            if e.action.is_sync() {
                continue;
            }
            let n = r.reset(&e.resets);
            let en = |l1: usize, b: bool| self.view(r, b).satisfies(sp, &e.guard) && self.legal(l1, e.dst, &n, b);
            let kind = RestrictionKind::Local { edge: eid, action: e.action.clone() };
            match (en(*la, false), en(*lb, true)) {
                (true, true) => {
                    let label = CtxLabel::Local { edge: eid, action: e.action.clone() };
                    out.push(PairMove::Next(Some(label), (*la, *lb, e.dst, n)));
                }
                (true, false) => out.push(PairMove::Restriction(kind, false)),
                (false, true) => out.push(PairMove::Restriction(kind, true)),
                (false, false) => {}
            }
        }
        // synchronizations collapse both copies onto copy a's target
        let va = self.view(r, false);
        for &e2id in &ctx.a2.out[*l2] {
            let e2 = &ctx.a2.edges[e2id];
            let Action::Sync(a) = &e2.action else { continue };
            if !va.satisfies(sp, &e2.guard) {
                continue;
            }
            for &e1id in &ctx.a1.out[*la] {
                let e1 = &ctx.a1.edges[e1id];
                if e1.action != e2.action || !va.satisfies(sp, &e1.guard) {
                    continue;
                }
                let resets: Vec<usize> = e1.resets.iter().chain(&e2.resets).copied().collect();
                let copies: Vec<(usize, usize)> = e1.copies.iter().chain(&e2.copies).copied().collect();
                let mine: Vec<(usize, usize)> = (0..self.xb.len()).map(|i| (self.xb[i], i)).collect();
                let n = r.reset(&resets).copy(&self.space, &copies).copy(&self.space, &mine);
                if !self.legal(e1.dst, e2.dst, &n, false) {
                    continue;
                }
                let label = CtxLabel::Sync {
                    action: a.clone(),
                    l1: e1.dst,
                    region: n.project(&(0..self.xb.len()).collect::<Vec<_>>()),
                };
                out.push(PairMove::Next(Some(label), (e1.dst, e1.dst, e2.dst, n)));
            }
        }
        out
    }
}

/// First restriction in breadth-first order, if any.
///
/// Explores pairs of A1 runs that share one run of A2 and one time line, and
/// reports a pair in which one A1 state allows a step of A2 that the other
/// forbids. Synchronizations reveal A1's state, so they merge the pair.
pub fn find_restriction(net: &Network, budget: usize) -> Result<Option<RestrictionWitness>, RegionError> {
    let ps = PairSearch::new(net);
    let r0 = Region::zero(ps.space.len());
    let (l1, l2) = (ps.a1.init, ps.a2.init);
    if !ps.legal(l1, l2, &r0, false) {
        return Ok(None);
    }
    let mut states: Vec<PairState> = vec![(l1, l1, l2, r0)];
    let mut parent: Vec<Option<(usize, Option<CtxLabel>)>> = vec![None];
    let mut index: HashMap<PairState, usize> = HashMap::from([(states[0].clone(), 0)]);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        for m in ps.moves(&s) {
            match m {
                PairMove::Next(label, n) => {
                    if index.contains_key(&n) {
                        continue;
                    }
                    if states.len() >= budget {
                        return Err(RegionError::StateBudgetExceeded(budget));
                    }
                    index.insert(n.clone(), states.len());
                    states.push(n);
                    parent.push(Some((i, label)));
                    queue.push_back(states.len() - 1);
                }
                PairMove::Restriction(kind, b_enables) => {
                    let mut path = Vec::new();
                    let mut cur = i;
                    while let Some((p, label)) = &parent[cur] {
                        path.extend(label.clone());
                        cur = *p;
                    }
                    path.reverse();
                    let a = (s.0, ps.view(&s.3, false));
                    let b = (s.1, ps.view(&s.3, true));
                    let (enabling, disabling) = if b_enables { (b, a) } else { (a, b) };
                    return Ok(Some(RestrictionWitness {
                        l2: s.2,
                        kind,
                        enabling,
                        disabling,
                        path,
                        space: ps.view_space,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// UR of a joint region-state given as (A1 location, A2 location, region over the joint space).
pub fn ur_set(ctx: &Ctx, l1: usize, l2: usize, r: &Region) -> BTreeSet<Member> {
    ctx.ur(l2, [(l1, r.clone())])
}

/// No ε-edges and at most one edge per (location, label).
pub fn is_deterministic(ta: &Automaton) -> bool {
    let mut seen = BTreeSet::new();
    ta.edges.iter().all(|e| match e.action.label() {
        None => false,
        Some(l) => seen.insert((e.src.clone(), l.to_string())),
    })
}

impl fmt::Display for RestrictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RestrictionKind::Local { action, .. } => write!(f, "local action {action}"),
            RestrictionKind::Delay => write!(f, "delay"),
        }
    }
}

/// Human-readable witness description.
pub fn describe_witness(ctx: &Ctx, w: &RestrictionWitness) -> String {
    let mut s = String::new();
    let path: Vec<String> = w.path.iter().map(|l| ctx.label_text(l)).collect();
    s.push_str(&format!("after: {}\n", if path.is_empty() { "<start>".into() } else { path.join(" ") }));
    let y: Vec<usize> = (ctx.x1_idx.len()..w.space.len()).collect();
    let key = if y.is_empty() { "true".to_string() } else { w.enabling.1.project(&y).describe(&w.space.subspace(&y)) };
    s.push_str(&format!("A2 in {} with clocks {key}\n", ctx.a2.locs[w.l2]));
    let text = |m: &Member| format!("({}, {})", ctx.a1.locs[m.0], m.1.describe(&w.space));
    s.push_str(&format!("{} enabled by {}\n", w.kind, text(&w.enabling)));
    s.push_str(&format!("{} disabled by {}\n", w.kind, text(&w.disabling)));
    s
}

/// DOT export; nodes show the A2 location and the knowledge-set cardinality.
pub fn to_dot(ctx: &Ctx, g: &ContextualGraph) -> String {
    let mut d = DotGraph::new("contextual");
    for (i, st) in g.states.iter().enumerate() {
        let key = ctx.key_of(&st.members[0].1).describe(&ctx.space.subspace(&ctx.key_idx));
        let label = format!("{}\n{}\n|S1|={}", ctx.a2.locs[st.l2], key, st.members.len());
        d.node(&format!("c{i}"), &label, i == 0);
    }
    for (s, t, l) in &g.edges {
        let style = if matches!(l, CtxLabel::Sync { .. }) { EdgeStyle::Dashed } else { EdgeStyle::Solid };
        d.edge(&format!("c{s}"), &format!("c{t}"), &ctx.label_text(l), style);
    }
    d.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::regions::DEFAULT_BUDGET;

    fn fixture(name: &str) -> Network {
        let p = format!("{}/fixtures/{name}.nta", env!("CARGO_MANIFEST_DIR"));
        parse(&std::fs::read_to_string(p).unwrap()).unwrap()
    }

    #[test]
    fn ur_of_initial_state_fires_zero_delay_reset() {
        let net = fixture("fig2");
        let ctx = Ctx::new(&net);
        let ur = ur_set(&ctx, 0, 0, &Region::zero(ctx.space.len()));
        let locs: BTreeSet<&str> = ur.iter().map(|m| ctx.a1.locs[m.0].as_str()).collect();
        assert_eq!(locs, ["l0", "l1"].into_iter().collect());
    }

    #[test]
    fn ur_is_singleton_without_enabled_local_edge() {
        let net = fixture("fig1");
        let ctx = Ctx::new(&net);
        assert_eq!(ur_set(&ctx, 0, 0, &Region::zero(ctx.space.len())).len(), 1);
    }

    #[test]
    fn knowledge_after_delay_two_holds_both_branches() {
        let net = fixture("fig3");
        let ctx = Ctx::new(&net);
        let g = explore(&ctx, DEFAULT_BUDGET).unwrap();
        // some state with A2 in q1 knows A1 is in p1 with x=2 or in p2 with x=1
        let st = g
            .states
            .iter()
            .find(|s| ctx.a2.locs[s.l2] == "q1" && s.members.len() == 2)
            .expect("two-member state in q1");
        let mut seen: Vec<(String, String)> = st
            .members
            .iter()
            .map(|m| (ctx.a1.locs[m.0].clone(), m.1.project(&ctx.x1_idx).describe(&ctx.x1_space)))
            .collect();
        seen.sort();
        assert_eq!(seen, vec![("p1".into(), "x=2".into()), ("p2".into(), "x=1".into())]);
    }

    #[test]
    fn restriction_verdicts_on_small_figures() {
        assert!(find_restriction(&fixture("fig1"), DEFAULT_BUDGET).unwrap().is_none());
        assert!(find_restriction(&fixture("fig2"), DEFAULT_BUDGET).unwrap().is_none());
        let w = find_restriction(&fixture("fig3"), DEFAULT_BUDGET).unwrap().unwrap();
        assert!(matches!(w.kind, RestrictionKind::Local { .. }));
        let w = find_restriction(&fixture("fig4"), DEFAULT_BUDGET).unwrap().unwrap();
        assert!(matches!(w.kind, RestrictionKind::Local { .. }));
        assert!(find_restriction(&fixture("fig6"), DEFAULT_BUDGET).unwrap().is_some());
        assert!(find_restriction(&fixture("fig7"), DEFAULT_BUDGET).unwrap().is_none());
        assert!(find_restriction(&fixture("fig10"), DEFAULT_BUDGET).unwrap().is_none());
        assert!(find_restriction(&fixture("fig2-plus-f"), DEFAULT_BUDGET).unwrap().is_some());
    }

    #[test]
    fn fig4_witness_separates_x_values_at_y_two() {
        let net = fixture("fig4");
        let ctx = Ctx::new(&net);
        let w = find_restriction(&net, DEFAULT_BUDGET).unwrap().unwrap();
        let x = |m: &Member| m.1.project(&ctx.x1_idx).describe(&ctx.x1_space);
        let mut xs = vec![x(&w.enabling), x(&w.disabling)];
        xs.sort();
        assert_eq!(xs, vec!["x=1".to_string(), "x=2".to_string()]);
    }

    #[test]
    fn singleton_members_without_a1_local_actions() {
        let net = parse(
            "automaton A { clocks x; init p; loc p; edge p -> p when x >= 1 sync s reset x; }
             automaton B { clocks y; init q; loc q; edge q -> q when x <= 1 && y >= 1 sync s reset y; }",
        )
        .unwrap();
        let (_, g) = build_contextual_graph(&net, DEFAULT_BUDGET).unwrap();
        assert!(g.states.iter().all(|s| s.members.len() == 1));
    }

    #[test]
    fn determinism_table() {
        assert!(!is_deterministic(fixture("fig6").a2()));
        assert!(is_deterministic(fixture("fig4").a2()));
        let empty = parse("automaton A { init l; loc l; }").unwrap();
        assert!(is_deterministic(empty.a1()));
    }
}
