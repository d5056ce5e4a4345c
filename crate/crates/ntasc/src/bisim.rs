//! Timed bisimulation on region abstractions.
//!
//! Two systems are placed side by side over the disjoint union of their
//! clocks, so a joint region fixes both sides at once and a delay step is a
//! simultaneous region advance. A generic game engine explores the joint
//! states needed to answer every move of either side and computes the
//! greatest (weak or strong) bisimulation by elimination.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use num_rational::Rational64;

use crate::contextual::{Ctx, CtxState, Member};
use crate::model::{max_constants, Action, Automaton, Network};
use crate::regions::{compile_automaton, CAutomaton, ClockSpace, Region, RegionError, RegionState, System};
use crate::smod::{unpair, FINAL_REGION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Silent,
    Visible(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Silent => write!(f, "eps"),
            Label::Visible(s) => write!(f, "{s}"),
        }
    }
}

/// Joint state space of two systems.
pub trait Arena {
    type S: Clone + Eq + Hash + Ord + fmt::Debug;
    fn init(&self) -> Option<Self::S>;
    /// Discrete moves of one side; the other side's own state is untouched.
    fn moves(&self, side: Side, s: &Self::S) -> Vec<(Label, Self::S)>;
    /// Could this side alone let time pass?
    fn can_delay(&self, side: Side, s: &Self::S) -> bool;
    /// Joint delay step when both sides let time pass.
    fn delay(&self, s: &Self::S) -> Option<Self::S>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisimResult {
    pub bisimilar: bool,
    /// Joint states explored.
    pub states: usize,
    /// On failure, moves from the initial state leading to a pair one side cannot match.
    pub distinguishing: Vec<String>,
}

impl fmt::Display for BisimResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bisimilar {
            write!(f, "bisimilar ({} joint states)", self.states)
        } else {
            write!(f, "not bisimilar; distinguishing: {}", self.distinguishing.join(" "))
        }
    }
}

struct Obligation {
    label: String,
    cands: Vec<usize>,
}

fn silent_closure<A: Arena>(a: &A, side: Side, t: &A::S) -> Vec<A::S> {
    let mut seen: BTreeSet<A::S> = BTreeSet::new();
    let mut out = vec![t.clone()];
    seen.insert(t.clone());
    let mut i = 0;
    while i < out.len() {
        let u = out[i].clone();
        for (l, v) in a.moves(side, &u) {
            if l == Label::Silent && seen.insert(v.clone()) {
                out.push(v);
            }
        }
        i += 1;
    }
    out
}

fn responses<A: Arena>(a: &A, side: Side, t: &A::S, lab: &Label, weak: bool) -> Vec<A::S> {
    if !weak {
        return a.moves(side, t).into_iter().filter(|(l, _)| l == lab).map(|(_, v)| v).collect();
    }
    if *lab == Label::Silent {
        return silent_closure(a, side, t);
    }
    let mut out: BTreeSet<A::S> = BTreeSet::new();
    for u in silent_closure(a, side, t) {
        for (l, v) in a.moves(side, &u) {
            if l == *lab {
                out.extend(silent_closure(a, side, &v));
            }
        }
    }
    out.into_iter().collect()
}

/// Greatest weak (or strong) bisimulation between the two sides of `arena`,
/// restricted to the joint states reachable by move-and-answer exploration.
pub fn check<A: Arena>(arena: &A, weak: bool, budget: usize) -> Result<BisimResult, RegionError> {
    let Some(init) = arena.init() else {
        return Ok(BisimResult { bisimilar: true, states: 0, distinguishing: Vec::new() });
    };
    let mut ids: HashMap<A::S, usize> = HashMap::new();
    let mut states: Vec<A::S> = Vec::new();
    let mut obligations: Vec<Vec<Obligation>> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |s: A::S, states: &mut Vec<A::S>, queue: &mut VecDeque<usize>| -> Result<usize, RegionError> {
        if let Some(&i) = ids.get(&s) {
            return Ok(i);
        }
        if states.len() >= budget {
            return Err(RegionError::StateBudgetExceeded(budget));
        }
        let i = states.len();
        ids.insert(s.clone(), i);
        states.push(s);
        queue.push_back(i);
        Ok(i)
    };
    intern(init, &mut states, &mut queue)?;
    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        let mut obs = Vec::new();
        for side in [Side::Left, Side::Right] {
            let other = side.other();
            for (lab, t) in arena.moves(side, &s) {
                let mut cands = Vec::new();
                for u in responses(arena, other, &t, &lab, weak) {
                    cands.push(intern(u, &mut states, &mut queue)?);
                }
                obs.push(Obligation { label: format!("{}:{lab}", side.tag()), cands });
            }
            if arena.can_delay(side, &s) {
                let pre = if weak { silent_closure(arena, other, &s) } else { vec![s.clone()] };
                let mut cands = Vec::new();
                for u in pre {
                    if let Some(v) = arena.delay(&u) {
                        cands.push(intern(v, &mut states, &mut queue)?);
                    }
                }
                obs.push(Obligation { label: format!("{}:delay", side.tag()), cands });
            }
        }
        obligations.push(obs);
        debug_assert_eq!(obligations.len(), i + 1);
    }
    // elimination rounds; `bad[s]` is the round in which `s` was removed
    let n = states.len();
    let mut bad: Vec<Option<usize>> = vec![None; n];
    let mut round = 0;
    loop {
        round += 1;
        let snapshot = bad.clone();
        let mut changed = false;
        for s in 0..n {
            if snapshot[s].is_some() {
                continue;
            }
            if obligations[s].iter().any(|o| o.cands.iter().all(|&c| snapshot[c].is_some())) {
                bad[s] = Some(round);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut distinguishing = Vec::new();
    let mut cur = 0usize;
    while let Some(r) = bad[cur] {
        let Some(o) = obligations[cur].iter().find(|o| o.cands.iter().all(|&c| matches!(bad[c], Some(rc) if rc < r)))
        else {
            break;
        };
        distinguishing.push(o.label.clone());
        match o.cands.iter().min_by_key(|&&c| (bad[c], c)) {
            Some(&c) => cur = c,
            None => break,
        }
    }
    Ok(BisimResult { bisimilar: bad[0].is_none(), states: n, distinguishing })
}

// ---------------------------------------------------------------------------
// Region arena

fn rename_automaton(a: &Automaton, f: &dyn Fn(&str) -> String) -> Automaton {
    let mut b = a.clone();
    b.clocks = a.clocks.iter().map(|c| f(c)).collect();
    for l in &mut b.locations {
        l.inv = l.inv.map_clocks(f);
    }
    for e in &mut b.edges {
        e.guard = e.guard.map_clocks(f);
        e.resets = e.resets.iter().map(|c| f(c)).collect();
        e.copies = e.copies.iter().map(|(t, s)| (f(t), f(s))).collect();
    }
    b
}

/// One side of a region arena.
#[derive(Clone, Debug)]
pub struct SideSpec {
    pub network: Network,
    /// Component whose synchronizations are enriched with its target state.
    pub a1: Option<usize>,
    /// Map pair labels back to their original label.
    pub relabel: bool,
    pub enriched: bool,
}

impl SideSpec {
    pub fn plain(network: Network) -> SideSpec {
        SideSpec { network, a1: Some(0), relabel: false, enriched: true }
    }

    pub fn synthesized(network: Network) -> SideSpec {
        SideSpec { network, a1: Some(0), relabel: true, enriched: true }
    }
}

struct RegionSide {
    sys: System,
    spec: SideSpec,
    x1_idx: Vec<usize>,
    x1_space: ClockSpace,
}

impl RegionSide {
    fn label(&self, action: &Action, locs: &[usize], region: &Region, edges: &[(usize, usize)]) -> Label {
        match action {
            Action::Eps => Label::Silent,
            Action::Local(a) => Label::Visible(a.clone()),
            Action::Sync(l) if l.starts_with(FINAL_REGION) => Label::Silent,
            Action::Sync(l) => {
                let base = if self.spec.relabel { unpair(l) } else { l.as_str() };
                match self.spec.a1 {
                    Some(c) if self.spec.enriched && edges.iter().any(|(ci, _)| *ci == c) => {
                        let loc = &self.sys.comps[c].locs[locs[c]];
                        let id = region.project(&self.x1_idx).id(&self.x1_space);
                        Label::Visible(format!("{base}@{loc}@{id}"))
                    }
                    _ => Label::Visible(base.to_string()),
                }
            }
        }
    }
}

/// Two networks over the disjoint union of their clocks.
pub struct RegionArena {
    pub space: ClockSpace,
    sides: [RegionSide; 2],
}

pub fn side_prefix(side: Side, c: &str) -> String {
    format!("{}.{c}", side.tag())
}

/// Host space for two clock lists; same-named clocks share their max constant
/// so that region identifiers compare across sides.
/// Base clock names, renamed clocks, and max constants of one side.
type SidePart = (Vec<String>, Vec<String>, BTreeMap<String, u32>);

fn host_space(parts: &[SidePart]) -> ClockSpace {
    let mut unified: BTreeMap<&str, u32> = BTreeMap::new();
    for (base, _, mc) in parts {
        for b in base {
            let k = mc.get(b).copied().unwrap_or(0);
            let e = unified.entry(b.as_str()).or_insert(0);
            *e = (*e).max(k);
        }
    }
    let mut names = Vec::new();
    let mut maxc = Vec::new();
    for (base, renamed, _) in parts {
        for (b, r) in base.iter().zip(renamed) {
            names.push(r.clone());
            maxc.push(unified[b.as_str()]);
        }
    }
    ClockSpace::new(names, maxc)
}

impl RegionArena {
    pub fn new(left: SideSpec, right: SideSpec) -> RegionArena {
        let specs = [left, right];
        let parts: Vec<SidePart> = [Side::Left, Side::Right]
            .iter()
            .zip(&specs)
            .map(|(&side, spec)| {
                let base = spec.network.all_clocks();
                let renamed = base.iter().map(|c| side_prefix(side, c)).collect();
                (base, renamed, max_constants(&spec.network))
            })
            .collect();
        let space = host_space(&parts);
        let build = |side: Side, spec: SideSpec| {
            let autos: Vec<Automaton> =
                spec.network.automata.iter().map(|a| rename_automaton(a, &|c| side_prefix(side, c))).collect();
            let sys = System::compile(&autos, space.clone());
            let x1_idx: Vec<usize> = match spec.a1 {
                Some(c) => autos[c].clocks.iter().map(|x| space.index(x).expect("clock")).collect(),
                None => Vec::new(),
            };
            let x1_space = space.subspace(&x1_idx);
            RegionSide { sys, spec, x1_idx, x1_space }
        };
        let [l, r] = specs;
        let sides = [build(Side::Left, l), build(Side::Right, r)];
        RegionArena { space, sides }
    }

    fn side(&self, s: Side) -> &RegionSide {
        &self.sides[s as usize]
    }
}

/// `(left locations, right locations, joint region)`.
pub type RegionPair = (Vec<usize>, Vec<usize>, Region);

impl Arena for RegionArena {
    type S = RegionPair;

    fn init(&self) -> Option<RegionPair> {
        let r = Region::zero(self.space.len());
        let (l, rr) = (self.sides[0].sys.init_locs(), self.sides[1].sys.init_locs());
        (self.sides[0].sys.legal(&l, &r) && self.sides[1].sys.legal(&rr, &r)).then_some((l, rr, r))
    }

    fn moves(&self, side: Side, s: &RegionPair) -> Vec<(Label, RegionPair)> {
        let sd = self.side(side);
        let locs = if side == Side::Left { &s.0 } else { &s.1 };
        sd.sys
            .steps(locs, &s.2)
            .into_iter()
            .map(|st| {
                let lab = sd.label(&st.action, &st.locs, &st.region, &st.edges);
                let next = match side {
                    Side::Left => (st.locs, s.1.clone(), st.region),
                    Side::Right => (s.0.clone(), st.locs, st.region),
                };
                (lab, next)
            })
            .collect()
    }

    fn can_delay(&self, side: Side, s: &RegionPair) -> bool {
        let locs = if side == Side::Left { &s.0 } else { &s.1 };
        self.side(side).sys.legal(locs, &s.2.delay(&self.space))
    }

    fn delay(&self, s: &RegionPair) -> Option<RegionPair> {
        let next = s.2.delay(&self.space);
        (self.sides[0].sys.legal(&s.0, &next) && self.sides[1].sys.legal(&s.1, &next))
            .then(|| (s.0.clone(), s.1.clone(), next))
    }
}

/// Compare two networks; the left one may use pair labels.
pub fn compare_networks(
    left: SideSpec,
    right: SideSpec,
    weak: bool,
    budget: usize,
) -> Result<BisimResult, RegionError> {
    check(&RegionArena::new(left, right), weak, budget)
}

/// Weak timed bisimulation of two plain networks with enriched A1 synchronizations.
pub fn weak_timed_bisim(left: &Network, right: &Network, budget: usize) -> Result<BisimResult, RegionError> {
    compare_networks(SideSpec::plain(left.clone()), SideSpec::plain(right.clone()), true, budget)
}

// ---------------------------------------------------------------------------
// Paired contextual arena

struct CtxSide {
    a1: CAutomaton,
    a2: CAutomaton,
    relabel: bool,
}

/// Knowledge sets of two A2 variants over a shared space
/// `X1 ++ Y_left ++ Y_right ++ refs ++ [w]`; all members of both sets agree
/// on the key (everything but X1).
pub struct CtxPairArena {
    space: ClockSpace,
    sides: [CtxSide; 2],
    x1_idx: Vec<usize>,
    key_idx: Vec<usize>,
    refs: Vec<(usize, usize)>,
    w: usize,
    x1_space: ClockSpace,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pending {
    /// Side that must answer.
    pub waiting: Side,
    pub label: String,
    /// The mover's post-synchronization member.
    pub member: Member,
    pub resets: Vec<usize>,
    pub copies: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtxPair {
    pub l2: [usize; 2],
    pub members: [Vec<Member>; 2],
    pub pending: Option<Pending>,
}

impl CtxPairArena {
    /// `left` and `right` are `[A1 variant, A2 variant]` networks over the same A1 clocks.
    pub fn new(left: &Network, right: &Network, relabel_left: bool) -> CtxPairArena {
        let x1: Vec<String> = right.a1().clocks.clone();
        let (ml, mr) = (max_constants(left), max_constants(right));
        let m = |c: &str| ml.get(c).copied().unwrap_or(0).max(mr.get(c).copied().unwrap_or(0));
        let mut names: Vec<String> = x1.clone();
        let mut maxc: Vec<u32> = x1.iter().map(|c| m(c)).collect();
        for (side, net, mc) in [(Side::Left, left, &ml), (Side::Right, right, &mr)] {
            for y in &net.a2().clocks {
                names.push(side_prefix(side, y));
                maxc.push(mc.get(y).copied().unwrap_or(0));
            }
        }
        for c in &x1 {
            names.push(crate::contextual::ref_name(c));
            maxc.push(m(c));
        }
        names.push(crate::contextual::ELAPSED.to_string());
        maxc.push(x1.iter().map(|c| m(c)).max().unwrap_or(0));
        let space = ClockSpace::new(names, maxc);
        let n1 = x1.len();
        let compile = |side: Side, net: &Network, relabel: bool| {
            let x1set: BTreeSet<&String> = x1.iter().collect();
            let rename = |c: &str| if x1set.contains(&c.to_string()) { c.to_string() } else { side_prefix(side, c) };
            let index = |c: &str| space.index(c).unwrap_or_else(|| panic!("unknown clock {c}"));
            let a1 = compile_automaton(net.a1(), &index);
            let a2 = compile_automaton(&rename_automaton(net.a2(), &rename), &index);
            CtxSide { a1, a2, relabel }
        };
        let sides = [compile(Side::Left, left, relabel_left), compile(Side::Right, right, false)];
        let x1_idx: Vec<usize> = (0..n1).collect();
        let w = space.len() - 1;
        let refs = (0..n1).map(|i| (w - n1 + i, i)).collect();
        CtxPairArena {
            x1_space: space.subspace(&x1_idx),
            key_idx: (n1..space.len()).collect(),
            space,
            sides,
            x1_idx,
            refs,
            w,
        }
    }

    fn key(&self, r: &Region) -> Region {
        r.project(&self.key_idx)
    }

    fn legal(&self, side: Side, l1: usize, l2: usize, r: &Region) -> bool {
        let sd = &self.sides[side as usize];
        r.satisfies(&self.space, &sd.a1.inv[l1]) && r.satisfies(&self.space, &sd.a2.inv[l2])
    }

    fn close(&self, side: Side, l2: usize, seeds: impl IntoIterator<Item = Member>) -> Vec<Member> {
        let sd = &self.sides[side as usize];
        let mut set: BTreeSet<Member> = BTreeSet::new();
        let mut work: Vec<Member> = Vec::new();
        for s in seeds {
            if self.legal(side, s.0, l2, &s.1) && set.insert(s.clone()) {
                work.push(s);
            }
        }
        while let Some(m) = work.pop() {
            let mut next = Vec::new();
            for &eid in &sd.a1.out[m.0] {
                let e = &sd.a1.edges[eid];
                if e.action.is_sync() || !m.1.satisfies(&self.space, &e.guard) {
                    continue;
                }
                let r = m.1.reset(&e.resets);
                if self.legal(side, e.dst, l2, &r) {
                    next.push((e.dst, r));
                }
            }
            if let Some(r) = m.1.time_successor(&self.space) {
                if self.key(&r) == self.key(&m.1) && self.legal(side, m.0, l2, &r) {
                    next.push((m.0, r));
                }
            }
            for n in next {
                if set.insert(n.clone()) {
                    work.push(n);
                }
            }
        }
        set.into_iter().collect()
    }

    fn delay_seeds(&self, side: Side, s: &CtxPair) -> Vec<Member> {
        let i = side as usize;
        let Some(first) = s.members[i].first() else { return Vec::new() };
        let key = self.key(&first.1);
        s.members[i]
            .iter()
            .filter_map(|m| {
                let r = m.1.time_successor(&self.space)?;
                (self.legal(side, m.0, s.l2[i], &r) && self.key(&r) != key).then_some((m.0, r))
            })
            .collect()
    }

    fn sync_label(&self, side: Side, a: &str, l1: usize, r: &Region) -> String {
        let sd = &self.sides[side as usize];
        let base = if sd.relabel { unpair(a) } else { a };
        format!("{base}@{}@{}", sd.a1.locs[l1], r.project(&self.x1_idx).id(&self.x1_space))
    }

    /// Post-synchronization regions from member `m`: `(label, e1 dst, e2, region)`.
    fn syncs_from(
        &self,
        side: Side,
        l2: usize,
        m: &Member,
        extra: &[usize],
        extra_copies: &[(usize, usize)],
    ) -> Vec<(String, usize, usize, Region)> {
        let sd = &self.sides[side as usize];
        let mut out = Vec::new();
        for &e2id in &sd.a2.out[l2] {
            let e2 = &sd.a2.edges[e2id];
            let Action::Sync(a) = &e2.action else { continue };
            if !m.1.satisfies(&self.space, &e2.guard) {
                continue;
            }
            for &e1id in &sd.a1.out[m.0] {
                let e1 = &sd.a1.edges[e1id];
                if e1.action != e2.action || !m.1.satisfies(&self.space, &e1.guard) {
                    continue;
                }
                let mut resets: Vec<usize> = e1.resets.iter().chain(&e2.resets).chain(extra).copied().collect();
                resets.push(self.w);
                let copies: Vec<(usize, usize)> =
                    e1.copies.iter().chain(&e2.copies).chain(extra_copies).copied().collect();
                let t = m.1.reset(&resets).copy(&self.space, &copies).copy(&self.space, &self.refs);
                if self.legal(side, e1.dst, e2.dst, &t) {
                    out.push((self.sync_label(side, a, e1.dst, &t), e1.dst, e2id, t));
                }
            }
        }
        out
    }

    fn local_moves(&self, side: Side, s: &CtxPair) -> Vec<(Label, CtxPair)> {
        let i = side as usize;
        let o = side.other();
        let sd = &self.sides[i];
        let mut out = Vec::new();
        for &eid in &sd.a2.out[s.l2[i]] {
            let e = &sd.a2.edges[eid];
            if e.action.is_sync() {
                continue;
            }
            let lab = match &e.action {
                Action::Local(a) => Label::Visible(a.clone()),
                _ => Label::Silent,
            };
            if s.pending.is_some() && lab != Label::Silent {
                continue;
            }
            let enablers: Vec<Member> = s.members[i]
                .iter()
                .filter(|m| m.1.satisfies(&self.space, &e.guard))
                .map(|m| (m.0, m.1.reset(&e.resets)))
                .filter(|m| self.legal(side, m.0, e.dst, &m.1))
                .collect();
            if enablers.is_empty() {
                continue;
            }
            let mut next = s.clone();
            next.l2[i] = e.dst;
            next.members[i] = self.close(side, e.dst, enablers);
            match &mut next.pending {
                Some(p) => p.member.1 = p.member.1.reset(&e.resets),
                None => {
                    let moved: Vec<Member> =
                        s.members[o as usize].iter().map(|m| (m.0, m.1.reset(&e.resets))).collect();
                    next.members[o as usize] = self.close(o, s.l2[o as usize], moved);
                }
            }
            out.push((lab, next));
        }
        out
    }
}

impl Arena for CtxPairArena {
    type S = CtxPair;

    fn init(&self) -> Option<CtxPair> {
        let r = Region::zero(self.space.len());
        let mut members: [Vec<Member>; 2] = [Vec::new(), Vec::new()];
        let mut l2 = [0; 2];
        for side in [Side::Left, Side::Right] {
            let sd = &self.sides[side as usize];
            l2[side as usize] = sd.a2.init;
            members[side as usize] = self.close(side, sd.a2.init, [(sd.a1.init, r.clone())]);
            if members[side as usize].is_empty() {
                return None;
            }
        }
        Some(CtxPair { l2, members, pending: None })
    }

    fn moves(&self, side: Side, s: &CtxPair) -> Vec<(Label, CtxPair)> {
        let i = side as usize;
        let mut out = self.local_moves(side, s);
        match &s.pending {
            Some(p) if p.waiting != side => return Vec::new(),
            Some(p) => {
                let o = side.other() as usize;
                let mut done: BTreeSet<CtxPair> = BTreeSet::new();
                for m in &s.members[i] {
                    for (lab, l1, e2, t) in self.syncs_from(side, s.l2[i], m, &p.resets, &p.copies) {
                        if lab != p.label {
                            continue;
                        }
                        let sd = &self.sides[i];
                        let e2e = &sd.a2.edges[e2];
                        let mover = p.member.1.reset(&e2e.resets).copy(&self.space, &e2e.copies);
                        if self.key(&mover) != self.key(&t) || !self.legal(side.other(), p.member.0, s.l2[o], &mover) {
                            continue;
                        }
                        let mut next = s.clone();
                        next.pending = None;
                        next.l2[i] = e2e.dst;
                        next.members[i] = self.close(side, e2e.dst, [(l1, t)]);
                        next.members[o] = self.close(side.other(), s.l2[o], [(p.member.0, mover)]);
                        done.insert(next);
                    }
                }
                out.extend(done.into_iter().map(|n| (Label::Visible(p.label.clone()), n)));
            }
            None => {
                let mut done: BTreeSet<(String, CtxPair)> = BTreeSet::new();
                for m in &s.members[i] {
                    for (lab, l1, e2, t) in self.syncs_from(side, s.l2[i], m, &[], &[]) {
                        let e2e = &self.sides[i].a2.edges[e2];
                        let mut next = s.clone();
                        next.l2[i] = e2e.dst;
                        next.members[i] = Vec::new();
                        next.pending = Some(Pending {
                            waiting: side.other(),
                            label: lab.clone(),
                            member: (l1, t),
                            resets: e2e.resets.clone(),
                            copies: e2e.copies.clone(),
                        });
                        done.insert((lab, next));
                    }
                }
                out.extend(done.into_iter().map(|(l, n)| (Label::Visible(l), n)));
            }
        }
        out
    }

    fn can_delay(&self, side: Side, s: &CtxPair) -> bool {
        s.pending.is_none() && !self.delay_seeds(side, s).is_empty()
    }

    fn delay(&self, s: &CtxPair) -> Option<CtxPair> {
        if s.pending.is_some() {
            return None;
        }
        let (a, b) = (self.delay_seeds(Side::Left, s), self.delay_seeds(Side::Right, s));
        if a.is_empty() || b.is_empty() {
            return None;
        }
        Some(CtxPair {
            l2: s.l2,
            members: [self.close(Side::Left, s.l2[0], a), self.close(Side::Right, s.l2[1], b)],
            pending: None,
        })
    }
}

// ---------------------------------------------------------------------------
// Product of A1 with the contextual system, against the joint system

/// Left: A1 in product with A2's contextual system; right: `A1 ∥ A2`.
/// The host space is the contextual space followed by the right side's clocks.
pub struct DistribArena {
    ctx: Ctx,
    space: ClockSpace,
    right: RegionSide,
    jlen: usize,
}

/// `(A1 location, contextual state, right locations, host region)`.
pub type DistribState = (usize, CtxState, Vec<usize>, Region);

impl DistribArena {
    pub fn new(net: &Network) -> DistribArena {
        let ctx = Ctx::new(net);
        let mc = max_constants(net);
        let mut names = ctx.space.names.clone();
        let mut maxc = ctx.space.maxc.clone();
        let base = net.all_clocks();
        for c in &base {
            names.push(side_prefix(Side::Right, c));
            maxc.push(mc.get(c).copied().unwrap_or(0));
        }
        let space = ClockSpace::new(names, maxc);
        let autos: Vec<Automaton> =
            net.automata.iter().map(|a| rename_automaton(a, &|c| side_prefix(Side::Right, c))).collect();
        let sys = System::compile(&autos, space.clone());
        let x1_idx: Vec<usize> = autos[0].clocks.iter().map(|x| space.index(x).expect("clock")).collect();
        let right = RegionSide { x1_space: space.subspace(&x1_idx), x1_idx, sys, spec: SideSpec::plain(net.clone()) };
        DistribArena { jlen: ctx.space.len(), ctx, space, right }
    }

    fn j(&self, host: &Region) -> Region {
        host.project(&(0..self.jlen).collect::<Vec<_>>())
    }

    fn left_delay(&self, s: &DistribState) -> Option<CtxState> {
        let next = s.3.delay(&self.space);
        if !next.satisfies(&self.space, &self.ctx.a1.inv[s.0]) {
            return None;
        }
        let (kj, kn) = (self.ctx.key_of(&self.j(&s.3)), self.ctx.key_of(&self.j(&next)));
        if kj == kn {
            return Some(s.1.clone());
        }
        let (c, _) = self.ctx.delay(&s.1);
        c.filter(|c| self.ctx.key_of(&c.members[0].1) == kn)
    }
}

impl Arena for DistribArena {
    type S = DistribState;

    fn init(&self) -> Option<DistribState> {
        let c = self.ctx.init()?;
        let r = Region::zero(self.space.len());
        let locs = self.right.sys.init_locs();
        self.right.sys.legal(&locs, &r).then_some((self.ctx.a1.init, c, locs, r))
    }

    fn moves(&self, side: Side, s: &DistribState) -> Vec<(Label, DistribState)> {
        if side == Side::Right {
            return self
                .right
                .sys
                .steps(&s.2, &s.3)
                .into_iter()
                .map(|st| {
                    let lab = self.right.label(&st.action, &st.locs, &st.region, &st.edges);
                    (lab, (s.0, s.1.clone(), st.locs, st.region))
                })
                .collect();
        }
        let sp = &self.space;
        let ctx = &self.ctx;
        let mut out = Vec::new();
        for &eid in &ctx.a1.out[s.0] {
            let e = &ctx.a1.edges[eid];
            if e.action.is_sync() || !s.3.satisfies(sp, &e.guard) {
                continue;
            }
            let r = s.3.reset(&e.resets);
            if r.satisfies(sp, &ctx.a1.inv[e.dst]) {
                let lab = match &e.action {
                    Action::Local(a) => Label::Visible(a.clone()),
                    _ => Label::Silent,
                };
                out.push((lab, (e.dst, s.1.clone(), s.2.clone(), r)));
            }
        }
        for (eid, next, _) in ctx.local_moves(&s.1) {
            let e = &ctx.a2.edges[eid];
            let lab = match &e.action {
                Action::Local(a) => Label::Visible(a.clone()),
                _ => Label::Silent,
            };
            out.push((lab, (s.0, next, s.2.clone(), s.3.reset(&e.resets))));
        }
        for &e1id in &ctx.a1.out[s.0] {
            let e1 = &ctx.a1.edges[e1id];
            let Action::Sync(a) = &e1.action else { continue };
            if !s.3.satisfies(sp, &e1.guard) {
                continue;
            }
            for &e2id in &ctx.a2.out[s.1.l2] {
                let e2 = &ctx.a2.edges[e2id];
                if e2.action != e1.action {
                    continue;
                }
                let mut resets: Vec<usize> = e1.resets.iter().chain(&e2.resets).copied().collect();
                resets.push(ctx.w);
                let copies: Vec<(usize, usize)> = e1.copies.iter().chain(&e2.copies).copied().collect();
                let t = s.3.reset(&resets).copy(sp, &copies).copy(sp, &ctx.refs);
                let tj = self.j(&t);
                if !ctx.legal(e1.dst, e2.dst, &tj) {
                    continue;
                }
                // the contextual side must offer the same synchronization
                let offered = s.1.members.iter().any(|m| {
                    m.1.satisfies(&ctx.space, &e2.guard)
                        && ctx.a1.out[m.0].iter().any(|&f| {
                            let f1 = &ctx.a1.edges[f];
                            f1.action == e1.action && f1.dst == e1.dst && m.1.satisfies(&ctx.space, &f1.guard) && {
                                let mut rs: Vec<usize> = f1.resets.iter().chain(&e2.resets).copied().collect();
                                rs.push(ctx.w);
                                let cs: Vec<(usize, usize)> = f1.copies.iter().chain(&e2.copies).copied().collect();
                                m.1.reset(&rs).copy(&ctx.space, &cs).copy(&ctx.space, &ctx.refs) == tj
                            }
                        })
                });
                if !offered {
                    continue;
                }
                let lab = format!("{a}@{}@{}", ctx.a1.locs[e1.dst], tj.project(&ctx.x1_idx).id(&ctx.x1_space));
                let c = ctx.state(e2.dst, ctx.close(e2.dst, [(e1.dst, tj)]));
                out.push((Label::Visible(lab), (e1.dst, c, s.2.clone(), t)));
            }
        }
        out
    }

    fn can_delay(&self, side: Side, s: &DistribState) -> bool {
        match side {
            Side::Left => self.left_delay(s).is_some(),
            Side::Right => self.right.sys.legal(&s.2, &s.3.delay(&self.space)),
        }
    }

    fn delay(&self, s: &DistribState) -> Option<DistribState> {
        let c = self.left_delay(s)?;
        let next = s.3.delay(&self.space);
        self.right.sys.legal(&s.2, &next).then(|| (s.0, c, s.2.clone(), next))
    }
}

/// Strong bisimulation between `A1 ⊗ contextual(A2)` and `A1 ∥ A2`.
pub fn check_distrib(net: &Network, budget: usize) -> Result<BisimResult, RegionError> {
    check(&DistribArena::new(net), false, budget)
}

// ---------------------------------------------------------------------------
// The three conditions on a synthesized network

#[derive(Clone, Debug)]
pub struct NscReport {
    pub global: BisimResult,
    pub first: BisimResult,
    pub contextual: BisimResult,
}

impl NscReport {
    pub fn all_pass(&self) -> bool {
        self.global.bisimilar && self.first.bisimilar && self.contextual.bisimilar
    }
}

/// Check the synthesized network `[A'1, A'2]` against the original `[A1, A2]`:
/// the whole systems, A1 alone, and A2 in the context of A1.
pub fn check_def_nsc(net: &Network, synth: &Network, budget: usize) -> Result<NscReport, RegionError> {
    let global = compare_networks(SideSpec::synthesized(synth.clone()), SideSpec::plain(net.clone()), true, budget)?;
    let alone = |n: &Network| Network { automata: vec![n.a1().clone()], synthesized: true };
    let first = compare_networks(SideSpec::synthesized(alone(synth)), SideSpec::plain(alone(net)), true, budget)?;
    let contextual = check(&CtxPairArena::new(synth, net, true), true, budget)?;
    Ok(NscReport { global, first, contextual })
}

// ---------------------------------------------------------------------------
// Discrete-grid oracle

/// Location vector and clock valuation.
pub type ConcreteState = (Vec<usize>, Vec<Rational64>);

/// Concrete states reachable with delays in multiples of `1/den`, up to `horizon`.
/// A subset of the real reachable states.
pub fn discrete_simulate(
    net: &Network,
    den: i64,
    horizon: Rational64,
    budget: usize,
) -> Result<BTreeSet<ConcreteState>, RegionError> {
    let sys = System::for_network(net);
    let step = Rational64::new(1, den);
    let init = (sys.init_locs(), vec![Rational64::from_integer(0); sys.space.len()]);
    let mut seen: BTreeSet<(Vec<usize>, Vec<Rational64>)> = BTreeSet::new();
    if !sys.legal_at(&init.0, &init.1) {
        return Ok(seen);
    }
    let mut queue = VecDeque::from([(init, Rational64::from_integer(0))]);
    while let Some(((locs, v), t)) = queue.pop_front() {
        if !seen.insert((locs.clone(), v.clone())) {
            continue;
        }
        if seen.len() > budget {
            return Err(RegionError::StateBudgetExceeded(budget));
        }
        for st in sys.concrete_steps(&locs, &v) {
            queue.push_back(((st.locs, st.valuation), t));
        }
        if t + step <= horizon {
            let w: Vec<Rational64> = v.iter().map(|x| x + step).collect();
            if sys.legal_at(&locs, &w) {
                queue.push_back(((locs, w), t + step));
            }
        }
    }
    Ok(seen)
}

/// Region states of a set of concrete states.
pub fn regions_of(sys: &System, states: &BTreeSet<ConcreteState>) -> BTreeSet<RegionState> {
    states.iter().map(|(l, v)| RegionState { locs: l.clone(), region: Region::of_valuation(&sys.space, v) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::regions::{build_region_graph, state_set, DEFAULT_BUDGET};

    fn fixture(name: &str) -> Network {
        let p = format!("{}/fixtures/{name}.nta", env!("CARGO_MANIFEST_DIR"));
        parse(&std::fs::read_to_string(p).unwrap()).unwrap()
    }

    #[test]
    fn a_network_is_bisimilar_to_itself() {
        for name in ["fig1", "fig2", "fig3"] {
            let n = fixture(name);
            let r = compare_networks(SideSpec::plain(n.clone()), SideSpec::plain(n), false, DEFAULT_BUDGET).unwrap();
            assert!(r.bisimilar, "{name}");
        }
    }

    #[test]
    fn guard_change_is_distinguished() {
        let a = parse("automaton A { clocks x; init p; loc p; loc q; edge p -> q when x <= 1 do a; }").unwrap();
        let b = parse("automaton A { clocks x; init p; loc p; loc q; edge p -> q when x <= 2 do a; }").unwrap();
        let r = compare_networks(SideSpec::plain(a), SideSpec::plain(b), true, DEFAULT_BUDGET).unwrap();
        assert!(!r.bisimilar);
        assert!(r.distinguishing.contains(&"R:a".to_string()));
    }

    #[test]
    fn fig3_unenriched_systems_are_weakly_bisimilar() {
        let n = fixture("fig3");
        let alt = fixture("fig3-alt");
        let spec = |n: Network| SideSpec { network: n, a1: Some(0), relabel: false, enriched: false };
        let r = compare_networks(spec(alt), spec(n), true, DEFAULT_BUDGET).unwrap();
        assert!(r.bisimilar, "{r}");
    }

    #[test]
    fn fig3_contextual_systems_differ_with_enriched_labels() {
        let r = check(&CtxPairArena::new(&fixture("fig3-alt"), &fixture("fig3"), false), true, DEFAULT_BUDGET).unwrap();
        assert!(!r.bisimilar);
        assert!(!r.distinguishing.is_empty());
    }

    #[test]
    fn distribution_holds_without_restriction() {
        for name in ["fig1", "fig2", "fig7", "fig10"] {
            let r = check_distrib(&fixture(name), DEFAULT_BUDGET).unwrap();
            assert!(r.bisimilar, "{name}: {r}");
        }
    }

    #[test]
    fn distribution_fails_with_restriction_and_deterministic_a2() {
        for name in ["fig3", "fig4"] {
            let r = check_distrib(&fixture(name), DEFAULT_BUDGET).unwrap();
            assert!(!r.bisimilar, "{name}");
            assert!(!r.distinguishing.is_empty());
        }
    }

    #[test]
    fn grid_states_are_region_reachable() {
        for name in ["fig1", "fig2", "fig4", "fig7"] {
            let n = fixture(name);
            let sys = System::for_network(&n);
            let states = discrete_simulate(&n, 3, Rational64::from_integer(4), DEFAULT_BUDGET).unwrap();
            let reach = state_set(&build_region_graph(&sys, DEFAULT_BUDGET).unwrap());
            assert!(regions_of(&sys, &states).is_subset(&reach), "{name}");
        }
    }

    #[test]
    fn zero_horizon_stays_at_time_zero() {
        let n = fixture("fig1");
        let states = discrete_simulate(&n, 3, Rational64::from_integer(0), DEFAULT_BUDGET).unwrap();
        assert!(states.iter().all(|(_, v)| v.iter().all(|x| *x == Rational64::from_integer(0))));
    }
}
