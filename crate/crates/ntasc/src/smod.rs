//! The analysis system `S_mod = A'1 ∥ (A12 × A2mod)`.
//!
//! `A'1` is A1 with synchronizations relabeled by their target location,
//! `A12` is a local mirror of A1 over primed clocks that is refreshed by a
//! full copy at every synchronization, and `A2mod` is A2 reading the primed
//! clocks plus error edges into `SAD` that fire whenever the mirror and the
//! real clocks disagree on an A2 constraint.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::ops::{Add, Sub};

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{max_constants, Action, Atom, Automaton, Constraint, Edge, Location, Network, Rel};
pub use crate::parser::dot::SAD;
use crate::regions::{
    build_region_graph_with, explore_from, ClockSpace, GraphLabel, Region, RegionError, RegionGraph, RegionState,
    System,
};

/// Prefix of the case-2 labels signalling that the mirror is stuck.
pub const FINAL_REGION: &str = "final_region";

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SmodError {
    #[error("A1 has an urgent synchronization; the plain mirror cannot be used")]
    UrgentSyncPresent,
    #[error("some most time consuming run has a supremum that is not attained")]
    SupremumNotAttained,
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Which mirror construction an [`SModSystem`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MirrorKind {
    /// Nondeterministic mirror of every local run.
    Simple,
    /// Scheduler forcing a most time consuming run, all suprema attained.
    Case1,
    /// Scheduler plus `final_region` signalling for unattained suprema.
    Case2,
}

#[derive(Clone, Debug)]
pub struct SModSystem {
    pub a1_prime: Automaton,
    pub a12: Automaton,
    pub a2mod: Automaton,
    pub kind: MirrorKind,
    /// A1 clock → primed clock.
    pub primes: BTreeMap<String, String>,
    /// Scheduler clock of the case-1/2 mirrors.
    pub z: Option<String>,
}

impl SModSystem {
    pub fn network(&self) -> Network {
        Network { automata: vec![self.a1_prime.clone(), self.a12.clone(), self.a2mod.clone()], synthesized: true }
    }

    pub fn system(&self) -> System {
        System::for_network(&self.network())
    }

    /// Is `locs` (a state of [`SModSystem::system`]) at the error location?
    pub fn is_sad(sys: &System, locs: &[usize]) -> bool {
        sys.comps[2].locs[locs[2]] == SAD
    }
}

/// Primed names for the A1 clocks, avoiding every clock of the network.
pub fn prime_map(net: &Network) -> BTreeMap<String, String> {
    let taken: BTreeSet<String> = net.all_clocks().into_iter().collect();
    net.a1()
        .clocks
        .iter()
        .map(|x| {
            let mut p = format!("{x}'");
            while taken.contains(&p) {
                p.push('\'');
            }
            (x.clone(), p)
        })
        .collect()
}

fn fresh_clock(net: &Network, primes: &BTreeMap<String, String>, base: &str) -> String {
    let taken: BTreeSet<String> = net.all_clocks().into_iter().chain(primes.values().cloned()).collect();
    let mut z = base.to_string();
    while taken.contains(&z) {
        z.push('_');
    }
    z
}

/// Synchronization label paired with the A1 target location.
pub fn pair_label(a: &str, l: &str) -> String {
    format!("{a}@{l}")
}

/// The original label of a pair label.
pub fn unpair(label: &str) -> &str {
    label.split('@').next().unwrap_or(label)
}

fn primed(c: &Constraint, primes: &BTreeMap<String, String>) -> Constraint {
    c.map_clocks(&|x| primes.get(x).cloned().unwrap_or_else(|| x.to_string()))
}

fn primed_resets(rs: &[String], primes: &BTreeMap<String, String>) -> Vec<String> {
    rs.iter().map(|r| primes.get(r).cloned().unwrap_or_else(|| r.clone())).collect()
}

/// Distinct `(label, target)` pairs of the A1 synchronization edges, in edge order.
pub fn sync_pairs(a1: &Automaton) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for e in &a1.edges {
        if let Action::Sync(a) = &e.action {
            let p = (a.clone(), e.dst.clone());
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

pub fn build_a1_prime(net: &Network) -> Automaton {
    let mut a = net.a1().clone();
    for e in &mut a.edges {
        if let Action::Sync(l) = &e.action {
            e.action = Action::Sync(pair_label(l, &e.dst));
        }
    }
    a
}

fn copy_all(primes: &BTreeMap<String, String>) -> Vec<(String, String)> {
    primes.iter().map(|(x, p)| (p.clone(), x.clone())).collect()
}

fn mirror(net: &Network, primes: &BTreeMap<String, String>) -> Automaton {
    let a1 = net.a1();
    let mut a = Automaton {
        name: "A12".into(),
        clocks: primes.values().cloned().collect(),
        init: a1.init.clone(),
        locations: a1
            .locations
            .iter()
            .map(|l| Location { name: l.name.clone(), inv: primed(&l.inv, primes) })
            .collect(),
        edges: Vec::new(),
    };
    for e in &a1.edges {
        if !e.action.is_sync() {
            a.edges.push(Edge {
                src: e.src.clone(),
                dst: e.dst.clone(),
                guard: primed(&e.guard, primes),
                action: Action::Eps,
                resets: primed_resets(&e.resets, primes),
                copies: Vec::new(),
            });
        }
    }
    for l in &a1.locations {
        for (s, dst) in sync_pairs(a1) {
            a.edges.push(Edge {
                src: l.name.clone(),
                dst: dst.clone(),
                guard: Constraint::truth(),
                action: Action::Sync(pair_label(&s, &dst)),
                resets: Vec::new(),
                copies: copy_all(primes),
            });
        }
    }
    a
}

/// Plain mirror; refuses an A1 with an urgent synchronization.
pub fn build_a12_simple(net: &Network) -> Result<Automaton, SmodError> {
    if has_urgent_sync(net)? {
        return Err(SmodError::UrgentSyncPresent);
    }
    Ok(mirror(net, &prime_map(net)))
}

fn negated(a: &Atom) -> Vec<Atom> {
    a.rel.negate().into_iter().map(|r| Atom::new(a.clock.clone(), r, a.k)).collect()
}

fn push_unique(edges: &mut Vec<Edge>, e: Edge) {
    if !edges.contains(&e) {
        edges.push(e);
    }
}

fn a2mod_with(net: &Network, primes: &BTreeMap<String, String>) -> Automaton {
    let a2 = net.a2();
    let shared = |c: &str| primes.contains_key(c);
    let mut a = Automaton {
        name: "A2mod".into(),
        clocks: a2.clocks.clone(),
        init: a2.init.clone(),
        locations: a2
            .locations
            .iter()
            .map(|l| Location { name: l.name.clone(), inv: primed(&l.inv, primes) })
            .collect(),
        edges: Vec::new(),
    };
    a.locations.push(Location { name: SAD.into(), inv: Constraint::truth() });
    let pairs = sync_pairs(net.a1());
    for e in &a2.edges {
        match &e.action {
            Action::Sync(s) => {
                for (_, l1) in pairs.iter().filter(|(b, _)| b == s) {
                    a.edges.push(Edge { action: Action::Sync(pair_label(s, l1)), ..e.clone() });
                }
            }
            _ => a.edges.push(Edge { guard: primed(&e.guard, primes), copies: Vec::new(), ..e.clone() }),
        }
    }
    let to_sad = |src: &str, guard: Constraint| Edge {
        src: src.to_string(),
        dst: SAD.into(),
        guard,
        action: Action::Eps,
        resets: Vec::new(),
        copies: Vec::new(),
    };
    let mut bad = Vec::new();
    for l in &a2.locations {
        for at in l.inv.atoms.iter().filter(|at| shared(&at.clock)) {
            for n in negated(at) {
                push_unique(&mut bad, to_sad(&l.name, Constraint::of(vec![n])));
            }
        }
    }
    for e in a2.edges.iter().filter(|e| !e.action.is_sync()) {
        // the target invariant gates the step too; clocks reset by the edge are 0
        let mut inv_pre = Vec::new();
        let mut dead = false;
        for at in &a2.inv(&e.dst).atoms {
            if e.resets.contains(&at.clock) {
                dead |= !at.rel.holds(0, at.k);
            } else {
                inv_pre.push(at.clone());
            }
        }
        if dead {
            continue;
        }
        let guard = e.guard.and(&Constraint::of(inv_pre));
        let gp = primed(&guard, primes);
        for at in guard.atoms.iter().filter(|at| shared(&at.clock)) {
            // g' ∧ ¬g, one edge per negated atom
            for n in negated(at) {
                push_unique(&mut bad, to_sad(&e.src, gp.and(&Constraint::of(vec![n]))));
            }
        }
        for at in guard.atoms.iter().filter(|at| shared(&at.clock)) {
            // ¬g' ∧ g
            let ap = Atom::new(primes[&at.clock].clone(), at.rel, at.k);
            for n in negated(&ap) {
                push_unique(&mut bad, to_sad(&e.src, Constraint::of(vec![n]).and(&guard)));
            }
        }
    }
    a.edges.extend(bad);
    a
}

/// A2 over primed clocks, with error edges into `SAD`.
pub fn build_a2mod(net: &Network) -> Automaton {
    a2mod_with(net, &prime_map(net))
}

/// `S_mod` with the plain mirror, regardless of urgency. Used for the
/// error-location analysis, where the mirror may follow any run of A1.
pub fn analysis_smod(net: &Network) -> SModSystem {
    let primes = prime_map(net);
    SModSystem {
        a1_prime: build_a1_prime(net),
        a12: mirror(net, &primes),
        a2mod: a2mod_with(net, &primes),
        kind: MirrorKind::Simple,
        primes,
        z: None,
    }
}

// ---------------------------------------------------------------------------
// Urgent synchronizations and most time consuming runs

/// System of A1 alone over the network-wide max constants of its clocks.
fn a1_system(net: &Network) -> System {
    System::new(std::slice::from_ref(net.a1()), &max_constants(net))
}

/// Some reachable A1 state can neither delay nor take a local edge but can synchronize.
pub fn has_urgent_sync(net: &Network) -> Result<bool, RegionError> {
    let sys = a1_system(net);
    let g = crate::regions::build_region_graph(&sys, crate::regions::DEFAULT_BUDGET)?;
    Ok(g.states.iter().any(|st| {
        if sys.delay(&st.locs, &st.region).is_some() {
            return false;
        }
        let steps = sys.steps(&st.locs, &st.region);
        !steps.iter().any(|s| !s.action.is_sync()) && steps.iter().any(|s| s.action.is_sync())
    }))
}

/// `r + e·ε` with ε a positive infinitesimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Eps {
    pub r: Rational64,
    pub e: i64,
}

impl Eps {
    pub fn of(r: Rational64) -> Eps {
        Eps { r, e: 0 }
    }

    pub fn int(k: i64) -> Eps {
        Eps::of(Rational64::from_integer(k))
    }

    pub fn zero() -> Eps {
        Eps::int(0)
    }

    fn is_natural(&self) -> bool {
        self.e == 0 && self.r.is_integer() && !self.r.is_negative()
    }
}

impl Add for Eps {
    type Output = Eps;
    fn add(self, o: Eps) -> Eps {
        Eps { r: self.r + o.r, e: self.e + o.e }
    }
}

impl Sub for Eps {
    type Output = Eps;
    fn sub(self, o: Eps) -> Eps {
        Eps { r: self.r - o.r, e: self.e - o.e }
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.e {
            0 => write!(f, "{}", self.r),
            e if e < 0 => write!(f, "{}-{}ε", self.r, -e),
            e => write!(f, "{}+{}ε", self.r, e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupDuration {
    Infinite,
    Attained(Rational64),
    Supremum(Rational64),
}

impl fmt::Display for SupDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupDuration::Infinite => write!(f, "infinite"),
            SupDuration::Attained(d) => write!(f, "{d} (attained)"),
            SupDuration::Supremum(d) => write!(f, "sup {d} (not attained)"),
        }
    }
}

/// An action fired along a run; times are relative to entering its location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Firing {
    /// Edge index in the local graph.
    pub edge: usize,
    /// Delay spent in the location before firing.
    pub delay: Eps,
    /// Open firing region: the delay window `(lo, hi)`.
    pub window: Option<(Eps, Eps)>,
}

/// A most time consuming run from one state of the local region graph.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub kind: SupDuration,
    /// Edge indices of the local graph; a lasso for `Infinite`.
    pub path: Vec<usize>,
}

/// Local region graph of A1 (synchronizations removed) rooted at the initial
/// state and at every synchronization target.
#[derive(Clone, Debug)]
pub struct LocalGraph {
    pub sys: System,
    pub graph: RegionGraph,
    out: Vec<Vec<usize>>,
    /// Sync targets: (label, A1 edge id, target state).
    pub sync_targets: Vec<(String, usize, usize)>,
    pub init: usize,
}

const PATH_CAP: usize = 200_000;

impl LocalGraph {
    pub fn new(net: &Network, budget: usize) -> Result<LocalGraph, RegionError> {
        let sys = a1_system(net);
        let (full, _) = build_region_graph_with(&sys, budget, &|_| true, &|_| false)?;
        let mut roots = vec![full.states[0].clone()];
        let mut targets = Vec::new();
        for (_, t, l) in &full.edges {
            if let GraphLabel::Step { action: Action::Sync(a), edges } = l {
                roots.push(full.states[*t].clone());
                targets.push((a.clone(), edges[0].1, full.states[*t].clone()));
            }
        }
        let (graph, _) = explore_from(&sys, roots, budget, &|s| !s.action.is_sync(), &|_| false)?;
        let mut out = vec![Vec::new(); graph.states.len()];
        for (i, (s, _, _)) in graph.edges.iter().enumerate() {
            out[*s].push(i);
        }
        let sync_targets = targets.into_iter().map(|(a, e, st)| (a, e, graph.index[&st])).collect();
        Ok(LocalGraph { sys, graph, out, sync_targets, init: 0 })
    }

    pub fn space(&self) -> &ClockSpace {
        &self.sys.space
    }

    pub fn state(&self, i: usize) -> &RegionState {
        &self.graph.states[i]
    }

    pub fn loc_name(&self, i: usize) -> &str {
        &self.sys.comps[0].locs[self.graph.states[i].locs[0]]
    }

    /// `ℓ@regionid` naming of a state.
    pub fn state_id(&self, i: usize) -> String {
        format!("{}@{}", self.loc_name(i), self.graph.states[i].region.id(self.space()))
    }

    fn edge_key(&self, ei: usize) -> Option<usize> {
        match &self.graph.edges[ei].2 {
            GraphLabel::Delay => None,
            GraphLabel::Step { edges, .. } => Some(edges[0].1),
        }
    }

    fn a1_resets(&self, ei: usize) -> Vec<usize> {
        match &self.graph.edges[ei].2 {
            GraphLabel::Delay => Vec::new(),
            GraphLabel::Step { edges, .. } => self.sys.comps[0].edges[edges[0].1].resets.clone(),
        }
    }

    /// Delay window `(lo, hi)` relative to valuation `v` during which the
    /// trajectory `v + δ` lies in `r`; `lo == hi` for point regions.
    fn window(&self, r: &Region, v: &[Eps]) -> Option<(Eps, Eps)> {
        let sp = self.space();
        if let Some(c) = (0..r.len()).find(|&c| r.fracs[c] == 0) {
            let d = Eps::int(r.ints[c] as i64) - v[c];
            return Some((d, d));
        }
        let mut lo: Option<Eps> = None;
        let mut hi: Option<Eps> = None;
        for (c, &vc) in v.iter().enumerate().take(r.len()) {
            let l = if r.is_above(sp, c) { sp.maxc[c] } else { r.ints[c] } as i64;
            let cand = Eps::int(l) - vc;
            lo = Some(lo.map_or(cand, |x: Eps| x.max(cand)));
            if !r.is_above(sp, c) {
                let h = Eps::int(l + 1) - vc;
                hi = Some(hi.map_or(h, |x: Eps| x.min(h)));
            }
        }
        let lo = lo.unwrap_or_else(Eps::zero).max(Eps::zero());
        hi.map(|h| (lo, h))
    }

    /// Latest-firing timing of `path` from `from`, sampling the entry region
    /// with `variant`. Returns the total duration and the firings.
    pub fn simulate(&self, from: usize, path: &[usize], variant: u32) -> (Eps, Vec<Firing>) {
        let sp = self.space();
        let mut v: Vec<Eps> = self.state(from).region.sample(sp, variant).into_iter().map(Eps::of).collect();
        let mut since = Eps::zero();
        let mut firings = Vec::new();
        let mut total = Eps::zero();
        let latest = |w: (Eps, Eps)| if w.0 == w.1 { w.1 } else { w.1 - Eps { r: Rational64::zero(), e: 1 } };
        let mut cur = from;
        for &ei in path {
            let (s, t, label) = &self.graph.edges[ei];
            cur = *t;
            if matches!(label, GraphLabel::Delay) {
                continue;
            }
            let r = &self.state(*s).region;
            let w = self.window(r, &v).unwrap_or((Eps::zero(), Eps::zero()));
            let d = latest(w);
            for x in v.iter_mut() {
                *x = *x + d;
            }
            total = total + d;
            firings.push(Firing {
                edge: ei,
                delay: since + d,
                window: (w.0 != w.1).then_some((since + w.0, since + w.1)),
            });
            for c in self.a1_resets(ei) {
                v[c] = Eps::zero();
            }
            since = Eps::zero();
        }
        if let Some(w) = self.window(&self.state(cur).region, &v) {
            total = total + latest(w);
        }
        (total, firings)
    }

    fn find_lasso(&self, from: usize) -> Option<Vec<usize>> {
        // iterative DFS with colors; the first back edge closes the lasso
        let n = self.graph.states.len();
        let mut color = vec![0u8; n];
        let mut stack: Vec<(usize, usize)> = vec![(from, 0)];
        let mut path: Vec<usize> = Vec::new();
        color[from] = 1;
        while let Some(&mut (s, ref mut k)) = stack.last_mut() {
            if *k < self.out[s].len() {
                let ei = self.out[s][*k];
                *k += 1;
                let t = self.graph.edges[ei].1;
                if color[t] == 1 {
                    path.push(ei);
                    return Some(path);
                }
                if color[t] == 0 {
                    color[t] = 1;
                    path.push(ei);
                    stack.push((t, 0));
                }
            } else {
                color[s] = 2;
                stack.pop();
                path.pop();
            }
        }
        None
    }

    /// Most time consuming local run from state `from`.
    pub fn max_duration_run(&self, from: usize) -> RunPlan {
        if let Some(path) = self.find_lasso(from) {
            return RunPlan { kind: SupDuration::Infinite, path };
        }
        let mut best: Option<(Eps, Vec<usize>, Vec<usize>)> = None;
        let mut path = Vec::new();
        let mut count = 0usize;
        self.enumerate(from, &mut path, &mut count, &mut |p: &[usize]| {
            let (total, _) = self.simulate(from, p, 0);
            let key: Vec<usize> = p.iter().filter_map(|&e| self.edge_key(e)).collect();
            let better = match &best {
                None => true,
                Some((bt, bk, _)) => total > *bt || (total == *bt && key < *bk),
            };
            if better {
                best = Some((total, key, p.to_vec()));
            }
        });
        let (total, _, path) = best.expect("at least the empty run");
        let kind = if total.e == 0 { SupDuration::Attained(total.r) } else { SupDuration::Supremum(total.r) };
        RunPlan { kind, path }
    }

    fn enumerate(&self, s: usize, path: &mut Vec<usize>, count: &mut usize, visit: &mut dyn FnMut(&[usize])) {
        if *count >= PATH_CAP {
            return;
        }
        if self.out[s].is_empty() {
            *count += 1;
            visit(path);
            return;
        }
        for &ei in &self.out[s] {
            path.push(ei);
            self.enumerate(self.graph.edges[ei].1, path, count, visit);
            path.pop();
        }
    }
}

/// Most time consuming local run of A1 from its initial state.
pub fn max_duration_runs(net: &Network, budget: usize) -> Result<(SupDuration, Vec<String>), RegionError> {
    let lg = LocalGraph::new(net, budget)?;
    let plan = lg.max_duration_run(lg.init);
    let labels = plan
        .path
        .iter()
        .map(|&e| match &lg.graph.edges[e].2 {
            GraphLabel::Delay => "delay".to_string(),
            GraphLabel::Step { action, .. } => action.to_string(),
        })
        .collect();
    Ok((plan.kind, labels))
}

// ---------------------------------------------------------------------------
// Scheduler mirrors for urgent synchronizations

struct SchedBuilder<'a> {
    lg: &'a LocalGraph,
    primes: &'a BTreeMap<String, String>,
    z: String,
    a1: &'a Automaton,
    a: Automaton,
    /// Local-graph state → mirror location.
    loc_of: HashMap<usize, String>,
    /// Final-region labels with their region state.
    finals: Vec<(String, usize)>,
}

fn integral_nonneg(e: Eps) -> Option<u32> {
    e.is_natural().then(|| *e.r.numer() as u32)
}

fn strictly_upper(c: &Constraint) -> Constraint {
    let mut c = c.clone();
    for a in &mut c.atoms {
        if a.rel == Rel::Lt {
            a.rel = Rel::Le;
        }
    }
    c
}

impl<'a> SchedBuilder<'a> {
    fn pname(&self, c: usize) -> String {
        self.primes[&self.lg.space().names[c]].clone()
    }

    fn inv1(&self, st: usize) -> Constraint {
        primed(self.a1.inv(self.lg.loc_name(st)), self.primes)
    }

    fn add_loc(&mut self, name: &str, inv: Constraint) {
        if self.a.loc_index(name).is_none() {
            self.a.locations.push(Location { name: name.to_string(), inv });
        }
    }

    /// Guard and invariant forcing firing `f`; `alt` is the same firing in a
    /// second sample run, used to tell exact delays from windows.
    fn timing(&self, f: &Firing, alt: &Firing) -> (Constraint, Constraint) {
        let sp = self.lg.space();
        let r = &self.lg.graph.states[self.lg.graph.edges[f.edge].0].region;
        match (f.window, alt.window) {
            (None, _) => {
                if let (Some(d), true) = (integral_nonneg(f.delay), f.delay == alt.delay) {
                    return (
                        Constraint::of(vec![Atom::new(&self.z, Rel::Eq, d)]),
                        Constraint::of(vec![Atom::new(&self.z, Rel::Le, d)]),
                    );
                }
                let c = (0..r.len()).find(|&c| r.fracs[c] == 0).expect("point region");
                let k = r.ints[c];
                (
                    Constraint::of(vec![Atom::new(self.pname(c), Rel::Eq, k)]),
                    Constraint::of(vec![Atom::new(self.pname(c), Rel::Le, k)]),
                )
            }
            (Some((lo, hi)), Some(w)) => {
                if let (Some(l), Some(h), true) = (integral_nonneg(lo), integral_nonneg(hi), (lo, hi) == w) {
                    return (
                        Constraint::of(vec![Atom::new(&self.z, Rel::Gt, l)]),
                        Constraint::of(vec![Atom::new(&self.z, Rel::Lt, h)]),
                    );
                }
                let mut g = Constraint::truth();
                let mut inv = Constraint::truth();
                for c in 0..r.len() {
                    let k = if r.is_above(sp, c) { sp.maxc[c] } else { r.ints[c] };
                    g.atoms.push(Atom::new(self.pname(c), Rel::Gt, k));
                    if !r.is_above(sp, c) {
                        inv.atoms.push(Atom::new(self.pname(c), Rel::Lt, k + 1));
                    }
                }
                (g, inv)
            }
            (Some(_), None) => unreachable!("variants disagree on the firing region kind"),
        }
    }

    fn step_edge(&self, ei: usize, src: &str, dst: &str, guard: Constraint) -> Edge {
        let e1 = match &self.lg.graph.edges[ei].2 {
            GraphLabel::Step { edges, .. } => &self.a1.edges[edges[0].1],
            GraphLabel::Delay => unreachable!(),
        };
        let mut resets = primed_resets(&e1.resets, self.primes);
        resets.push(self.z.clone());
        Edge { src: src.into(), dst: dst.into(), guard, action: Action::Eps, resets, copies: Vec::new() }
    }

    /// Location scheduling the most time consuming run from `st`.
    fn entry(&mut self, st: usize) -> String {
        if let Some(n) = self.loc_of.get(&st) {
            return n.clone();
        }
        let plan = self.lg.max_duration_run(st);
        let (_, f0) = self.lg.simulate(st, &plan.path, 0);
        let (_, f1) = self.lg.simulate(st, &plan.path, 1);
        if f0.is_empty() {
            let name = self.lg.loc_name(st).to_string();
            self.loc_of.insert(st, name.clone());
            let inv = self.inv1(st);
            self.add_loc(&name, inv);
            return name;
        }
        let name = self.lg.state_id(st);
        self.loc_of.insert(st, name.clone());
        if let SupDuration::Supremum(_) = plan.kind {
            self.chain(st, &name, &plan, &f0, &f1);
            return name;
        }
        let (g, zinv) = self.timing(&f0[0], &f1[0]);
        let mut inv = self.inv1(st);
        if plan.kind != SupDuration::Infinite {
            inv = inv.and(&zinv);
        }
        self.add_loc(&name, inv);
        let target = self.lg.graph.edges[f0[0].edge].1;
        let dst = self.entry(target);
        let e = self.step_edge(f0[0].edge, &name, &dst, g);
        self.a.edges.push(e);
        name
    }

    /// Dedicated chain following a run whose supremum is not attained.
    fn chain(&mut self, st: usize, name: &str, plan: &RunPlan, f0: &[Firing], f1: &[Firing]) {
        let lg = self.lg;
        let sp = lg.space();
        let mut cur_name = name.to_string();
        let mut cur_state = st;
        for (k, (a, b)) in f0.iter().zip(f1).enumerate() {
            let (g, inv) = self.timing(a, b);
            let full = self.inv1(cur_state).and(&inv);
            self.add_loc(&cur_name, full);
            let target = lg.graph.edges[a.edge].1;
            let next = format!("{name}.{}", k + 1);
            let e = self.step_edge(a.edge, &cur_name, &next, g);
            self.a.edges.push(e);
            cur_name = next;
            cur_state = target;
        }
        // last location: wait to the boundary, then signal the final region
        let last_inv = strictly_upper(&self.inv1(cur_state));
        self.add_loc(&cur_name, last_inv);
        let end = plan.path.last().map_or(st, |&e| lg.graph.edges[e].1);
        let end_r = &lg.state(end).region;
        let (rstate, guard) = if let Some(c) = (0..end_r.len()).find(|&c| end_r.fracs[c] == 0) {
            let pred = plan
                .path
                .last()
                .filter(|&&e| matches!(lg.graph.edges[e].2, GraphLabel::Delay))
                .map_or(end, |&e| lg.graph.edges[e].0);
            (pred, Constraint::of(vec![Atom::new(self.pname(c), Rel::Eq, end_r.ints[c])]))
        } else {
            let top = end_r.blocks();
            let c = (0..end_r.len()).find(|&c| end_r.fracs[c] == top && !end_r.is_above(sp, c)).expect("open region");
            (end, Constraint::of(vec![Atom::new(self.pname(c), Rel::Eq, end_r.ints[c] + 1)]))
        };
        let label = format!("{FINAL_REGION}@{}", lg.state_id(rstate));
        if !self.finals.iter().any(|(l, _)| *l == label) {
            self.finals.push((label.clone(), rstate));
        }
        let stuck = format!("{name}.stuck");
        self.add_loc(&stuck, Constraint::truth());
        self.a.edges.push(Edge {
            src: cur_name,
            dst: stuck,
            guard,
            action: Action::Sync(label),
            resets: Vec::new(),
            copies: Vec::new(),
        });
    }
}

/// Scheduler mirror for an A1 with urgent synchronizations, plus the final
/// regions it may signal (empty in case 1).
fn build_scheduler(
    net: &Network,
    lg: &LocalGraph,
    primes: &BTreeMap<String, String>,
) -> (Automaton, String, Vec<(String, usize)>) {
    let a1 = net.a1();
    let z = fresh_clock(net, primes, "z");
    let mut b = SchedBuilder {
        lg,
        primes,
        z: z.clone(),
        a1,
        a: Automaton {
            name: "A12".into(),
            clocks: primes.values().cloned().chain([z.clone()]).collect(),
            init: String::new(),
            locations: Vec::new(),
            edges: Vec::new(),
        },
        loc_of: HashMap::new(),
        finals: Vec::new(),
    };
    b.a.init = b.entry(lg.init);
    // dispatch per synchronization target location
    let mut per_target: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (_, eid, st) in &lg.sync_targets {
        let v = per_target.entry(a1.edges[*eid].dst.clone()).or_default();
        if !v.contains(st) {
            v.push(*st);
        }
    }
    let mut dest: BTreeMap<String, String> = BTreeMap::new();
    let mut dispatch_edges = Vec::new();
    let mut dispatch_locs = Vec::new();
    for (l1, states) in &per_target {
        let locs: Vec<String> = states.iter().map(|&s| b.entry(s)).collect();
        if locs.iter().all(|l| *l == locs[0]) {
            dest.insert(l1.clone(), locs[0].clone());
            continue;
        }
        let d = format!("{l1}@dispatch");
        dispatch_locs.push(Location { name: d.clone(), inv: Constraint::of(vec![Atom::new(&z, Rel::Le, 0)]) });
        for (&s, target) in states.iter().zip(&locs) {
            let g = lg.state(s).region.to_constraint(lg.space(), &|x| primes[x].clone());
            dispatch_edges.push(Edge {
                src: d.clone(),
                dst: target.clone(),
                guard: g,
                action: Action::Eps,
                resets: Vec::new(),
                copies: Vec::new(),
            });
        }
        dest.insert(l1.clone(), d);
    }
    let sources: Vec<String> = b.a.locations.iter().map(|l| l.name.clone()).collect();
    let mut a = b.a;
    for src in &sources {
        for (s, l1) in sync_pairs(a1) {
            a.edges.push(Edge {
                src: src.clone(),
                dst: dest[&l1].clone(),
                guard: Constraint::truth(),
                action: Action::Sync(pair_label(&s, &l1)),
                resets: vec![z.clone()],
                copies: copy_all(primes),
            });
        }
    }
    a.locations.extend(dispatch_locs);
    a.edges.extend(dispatch_edges);
    (a, z, b.finals)
}

/// Replace primed atoms by their truth value in region `r` (over the A1 clocks);
/// `None` if some atom is false.
fn fold_primed(c: &Constraint, r: &Region, sp: &ClockSpace, unprime: &BTreeMap<String, usize>) -> Option<Constraint> {
    let mut out = Constraint::truth();
    for a in &c.atoms {
        match unprime.get(&a.clock) {
            Some(&i) => {
                if !r.sat_atom(sp, i, a.rel, a.k) {
                    return None;
                }
            }
            None => out.atoms.push(a.clone()),
        }
    }
    out.diagonals = c.diagonals.clone();
    Some(out)
}

/// Add a duplicated tier per final region.
fn add_final_tiers(
    a2mod: &mut Automaton,
    finals: &[(String, usize)],
    lg: &LocalGraph,
    primes: &BTreeMap<String, String>,
) {
    let sp = lg.space();
    let unprime: BTreeMap<String, usize> =
        primes.iter().map(|(x, p)| (p.clone(), sp.index(x).expect("A1 clock"))).collect();
    let base: Vec<Location> = a2mod.locations.iter().filter(|l| l.name != SAD).cloned().collect();
    let base_edges = a2mod.edges.clone();
    // an always-false invariant: any clock below zero
    let falsum = |c: &str| Constraint::of(vec![Atom::new(c, Rel::Lt, 0)]);
    let any_clock = primes.values().next().cloned();
    for (k, (label, st)) in finals.iter().enumerate() {
        let r = &lg.state(*st).region;
        let dup = |n: &str| format!("{n}@R{}", k + 1);
        for l in &base {
            let inv = match (fold_primed(&l.inv, r, sp, &unprime), &any_clock) {
                (Some(c), _) => c,
                (None, Some(c)) => falsum(c),
                (None, None) => Constraint::truth(),
            };
            a2mod.locations.push(Location { name: dup(&l.name), inv });
            a2mod.edges.push(Edge {
                src: l.name.clone(),
                dst: dup(&l.name),
                guard: Constraint::truth(),
                action: Action::Sync(label.clone()),
                resets: Vec::new(),
                copies: Vec::new(),
            });
        }
        for e in &base_edges {
            let Some(g) = fold_primed(&e.guard, r, sp, &unprime) else { continue };
            let dst = if e.dst == SAD || e.action.is_sync() { e.dst.clone() } else { dup(&e.dst) };
            a2mod.edges.push(Edge { src: dup(&e.src), dst, guard: g, ..e.clone() });
        }
    }
}

/// Assemble `S_mod`, choosing the mirror construction from the shape of A1.
pub fn build_smod(net: &Network, budget: usize) -> Result<SModSystem, SmodError> {
    if !has_urgent_sync(net)? {
        return Ok(analysis_smod(net));
    }
    let primes = prime_map(net);
    let lg = LocalGraph::new(net, budget)?;
    let (a12, z, finals) = build_scheduler(net, &lg, &primes);
    let mut a2mod = a2mod_with(net, &primes);
    let kind = if finals.is_empty() { MirrorKind::Case1 } else { MirrorKind::Case2 };
    add_final_tiers(&mut a2mod, &finals, &lg, &primes);
    Ok(SModSystem { a1_prime: build_a1_prime(net), a12, a2mod, kind, primes, z: Some(z) })
}

/// Case-1 mirror alone; fails when some run needs the case-2 signalling.
pub fn build_a12_urgent_case1(net: &Network, budget: usize) -> Result<Automaton, SmodError> {
    let primes = prime_map(net);
    let lg = LocalGraph::new(net, budget)?;
    let (a12, _, finals) = build_scheduler(net, &lg, &primes);
    if finals.is_empty() {
        Ok(a12)
    } else {
        Err(SmodError::SupremumNotAttained)
    }
}

/// Case-2 mirror and the duplicated-tier `A2mod`.
pub fn build_case2(net: &Network, budget: usize) -> Result<(Automaton, Automaton), SmodError> {
    let primes = prime_map(net);
    let lg = LocalGraph::new(net, budget)?;
    let (a12, _, finals) = build_scheduler(net, &lg, &primes);
    let mut a2mod = a2mod_with(net, &primes);
    add_final_tiers(&mut a2mod, &finals, &lg, &primes);
    Ok((a12, a2mod))
}

// ---------------------------------------------------------------------------
// Error-location reachability and traces

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Region,
    Zone,
}

/// One discrete step of a timed trace, with the valuation after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub time: Rational64,
    pub label: String,
    pub locs: Vec<String>,
    pub valuation: Vec<(String, Rational64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    /// False when the grid search failed and the steps carry region samples.
    pub exact: bool,
}

impl Trace {
    pub fn value(&self, step: usize, clock: &str) -> Option<Rational64> {
        self.steps.get(step)?.valuation.iter().find(|(c, _)| c == clock).map(|(_, v)| *v)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "t={} {}", s.time, s.label)?;
            let vals: Vec<String> = s.valuation.iter().map(|(c, v)| format!("{c}={v}")).collect();
            writeln!(f, "  at ({}) {}", s.locs.join(","), vals.join(" "))?;
        }
        Ok(())
    }
}

/// Is the error location reachable? Returns a trace when it is.
pub fn sad_reachable(smod: &SModSystem, engine: Engine, budget: usize) -> Result<Option<Trace>, RegionError> {
    let sys = smod.system();
    let stop = |locs: &[usize]| SModSystem::is_sad(&sys, locs);
    let found = match engine {
        Engine::Region => {
            let (g, hit) = build_region_graph_with(&sys, budget, &|_| true, &|s| stop(&s.locs))?;
            hit.map(|h| (g, h))
        }
        Engine::Zone => {
            if crate::zones::reachable(&sys, budget, &stop)? {
                let (g, hit) = build_region_graph_with(&sys, budget, &|_| true, &|s| stop(&s.locs))?;
                hit.map(|h| (g, h))
            } else {
                None
            }
        }
    };
    let Some((g, hit)) = found else { return Ok(None) };
    let clocks = sys.space.len() as i64;
    let mut d = clocks + 1;
    for _ in 0..4 {
        if let Some(t) = grid_trace(&sys, d, budget, &stop) {
            return Ok(Some(t));
        }
        d *= 2;
    }
    Ok(Some(region_trace(&sys, &g, hit)))
}

fn region_trace(sys: &System, g: &RegionGraph, hit: usize) -> Trace {
    let mut steps = Vec::new();
    for ei in g.path_to(hit) {
        let (_, t, l) = &g.edges[ei];
        let st = &g.states[*t];
        let v = st.region.sample(&sys.space, 0);
        steps.push(TraceStep {
            time: Rational64::zero(),
            label: match l {
                GraphLabel::Delay => format!("delay to {}", st.region.describe(&sys.space)),
                GraphLabel::Step { action, .. } => action.to_string(),
            },
            locs: sys.loc_names(&st.locs).iter().map(|s| s.to_string()).collect(),
            valuation: sys.space.names.iter().cloned().zip(v).collect(),
        });
    }
    Trace { steps, exact: false }
}

/// Breadth-first search over valuations on the grid `1/d`; values above the
/// max constant are clipped to `maxc + 1/d`.
pub fn grid_trace(sys: &System, d: i64, budget: usize, stop: &dyn Fn(&[usize]) -> bool) -> Option<Trace> {
    type Node = (Vec<usize>, Vec<i64>);
    let sp = &sys.space;
    let clip = |v: &mut Vec<i64>| {
        for (i, x) in v.iter_mut().enumerate() {
            let cap = sp.maxc[i] as i64 * d + 1;
            if *x > cap {
                *x = cap;
            }
        }
    };
    let to_q = |v: &[i64]| -> Vec<Rational64> { v.iter().map(|&n| Rational64::new(n, d)).collect() };
    let init: Node = (sys.init_locs(), vec![0; sp.len()]);
    if !sys.legal_at(&init.0, &to_q(&init.1)) {
        return None;
    }
    let mut seen: HashMap<Node, (Option<usize>, String, i64)> = HashMap::new();
    let mut order: Vec<Node> = vec![init.clone()];
    seen.insert(init.clone(), (None, "init".into(), 0));
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let node = order[i].clone();
        let time = seen[&node].2;
        if stop(&node.0) {
            let mut steps = Vec::new();
            let mut cur = Some(i);
            while let Some(c) = cur {
                let n = &order[c];
                let (p, label, t) = seen[n].clone();
                steps.push(TraceStep {
                    time: Rational64::new(t, d),
                    label,
                    locs: sys.loc_names(&n.0).iter().map(|s| s.to_string()).collect(),
                    valuation: sp.names.iter().cloned().zip(to_q(&n.1)).collect(),
                });
                cur = p;
            }
            steps.reverse();
            // delays are implicit in the timestamps
            steps.retain(|s| s.label != "delay");
            return Some(Trace { steps, exact: true });
        }
        let q = to_q(&node.1);
        let mut succ: Vec<(Node, String, i64)> = Vec::new();
        for st in sys.concrete_steps(&node.0, &q) {
            let mut v: Vec<i64> = st.valuation.iter().map(|x| (x * d).to_integer()).collect();
            clip(&mut v);
            let label = if sys.comps.len() == 3 && st.locs[2] != node.0[2] && stop(&st.locs) {
                format!("{} -> {SAD}", st.action)
            } else {
                st.action.to_string()
            };
            succ.push(((st.locs, v), label, time));
        }
        let mut v: Vec<i64> = node.1.iter().map(|x| x + 1).collect();
        clip(&mut v);
        if sys.legal_at(&node.0, &to_q(&v)) {
            succ.push(((node.0.clone(), v), "delay".into(), time + 1));
        }
        for (n, label, t) in succ {
            if seen.contains_key(&n) {
                continue;
            }
            if order.len() >= budget {
                return None;
            }
            seen.insert(n.clone(), (Some(i), label, t));
            order.push(n);
            queue.push_back(order.len() - 1);
        }
    }
    None
}

/// Outcome of the decision procedure.
#[derive(Clone, Debug)]
pub enum Verdict {
    /// A2 can avoid reading X1; carries the shared-clock-free network.
    NotNeeded(Box<crate::synth::SynthesizedNetwork>),
    /// Error location reachable, and either A2 is deterministic or the
    /// product of A1 with A2's contextual system is not bisimilar to `A1 ∥ A2`.
    Needed(Trace),
    /// Error location reachable, A2 nondeterministic, and the product check
    /// passes: the restriction alone does not settle the question.
    Inconclusive(Trace, Option<Box<crate::contextual::RestrictionWitness>>),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::NotNeeded(_) => "NOT-NEEDED",
            Verdict::Needed(_) => "NEEDED",
            Verdict::Inconclusive(..) => "INCONCLUSIVE",
        }
    }

    /// Stable process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::NotNeeded(_) => 0,
            Verdict::Needed(_) => 1,
            Verdict::Inconclusive(..) => 2,
        }
    }
}

/// Decide whether A2 needs to read the clocks of A1.
pub fn decide_need(net: &Network, engine: Engine, budget: usize) -> Result<Verdict, crate::synth::SynthError> {
    let net = crate::model::normalize_sync_guards(net);
    match sad_reachable(&analysis_smod(&net), engine, budget)? {
        None => Ok(Verdict::NotNeeded(Box::new(crate::synth::synthesize(&net, budget)?))),
        Some(trace) if crate::contextual::is_deterministic(net.a2()) => Ok(Verdict::Needed(trace)),
        Some(trace) if !crate::bisim::check_distrib(&net, budget)?.bisimilar => Ok(Verdict::Needed(trace)),
        Some(trace) => {
            Ok(Verdict::Inconclusive(trace, crate::contextual::find_restriction(&net, budget)?.map(Box::new)))
        }
    }
}
