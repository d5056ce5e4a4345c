//! Alur–Dill regions and region graphs over products of timed automata.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::model::{Action, Atom, Automaton, Constraint, DiagAtom, Network, Rel};

/// Fraction rank of a clock above its max constant.
pub const NONE: u8 = u8::MAX;

/// Default cap on explored symbolic states.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("state budget of {0} exceeded")]
    StateBudgetExceeded(usize),
    #[error("constant {k} compared with clock `{clock}` exceeds its max constant {maxc}")]
    ConstantAboveMax { clock: String, k: u32, maxc: u32 },
}

/// Clock names and max constants; regions are defined relative to one of these.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClockSpace {
    pub names: Vec<String>,
    pub maxc: Vec<u32>,
}

impl ClockSpace {
    pub fn new(names: Vec<String>, maxc: Vec<u32>) -> Self {
        assert_eq!(names.len(), maxc.len());
        ClockSpace { names, maxc }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn concat(&self, other: &ClockSpace) -> ClockSpace {
        let mut s = self.clone();
        s.names.extend(other.names.iter().cloned());
        s.maxc.extend(other.maxc.iter().cloned());
        s
    }

    pub fn subspace(&self, idx: &[usize]) -> ClockSpace {
        ClockSpace {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            maxc: idx.iter().map(|&i| self.maxc[i]).collect(),
        }
    }
}

/// Per clock: the clipped integer part (`maxc + 1` means above max) and the
/// rank of its fractional part (0 = zero, 1.. ordered blocks, `NONE` above max).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub ints: Vec<u32>,
    pub fracs: Vec<u8>,
}

impl Region {
    pub fn zero(n: usize) -> Self {
        Region { ints: vec![0; n], fracs: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.ints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ints.is_empty()
    }

    pub fn is_above(&self, sp: &ClockSpace, i: usize) -> bool {
        self.ints[i] > sp.maxc[i]
    }

    pub fn blocks(&self) -> u8 {
        self.fracs.iter().filter(|&&f| f != NONE).copied().max().unwrap_or(0)
    }

    fn normalize(&mut self) {
        let mut ranks: Vec<u8> = self.fracs.iter().copied().filter(|&f| f != 0 && f != NONE).collect();
        ranks.sort_unstable();
        ranks.dedup();
        for f in self.fracs.iter_mut() {
            if *f != 0 && *f != NONE {
                *f = ranks.binary_search(f).unwrap() as u8 + 1;
            }
        }
    }

    pub fn of_valuation(sp: &ClockSpace, v: &[Rational64]) -> Region {
        let n = v.len();
        let mut ints = vec![0; n];
        let mut fracs = vec![0u8; n];
        let mut positive: Vec<(Rational64, usize)> = Vec::new();
        for i in 0..n {
            let fl = v[i].floor();
            let int = fl.to_integer().max(0) as u64;
            let fr = v[i] - fl;
            let m = sp.maxc[i] as u64;
            if int > m || (int == m && !fr.is_zero()) {
                ints[i] = sp.maxc[i] + 1;
                fracs[i] = NONE;
            } else {
                ints[i] = int as u32;
                if !fr.is_zero() {
                    positive.push((fr, i));
                }
            }
        }
        positive.sort();
        let mut rank = 0u8;
        let mut last: Option<Rational64> = None;
        for (fr, i) in positive {
            if last != Some(fr) {
                rank += 1;
                last = Some(fr);
            }
            fracs[i] = rank;
        }
        Region { ints, fracs }
    }

    /// The immediate time successor, or `None` at the all-above-max fixpoint.
    pub fn time_successor(&self, sp: &ClockSpace) -> Option<Region> {
        let mut r = self.clone();
        if self.fracs.contains(&0) {
            for f in r.fracs.iter_mut() {
                if *f != 0 && *f != NONE {
                    *f += 1;
                }
            }
            for i in 0..r.len() {
                if self.fracs[i] == 0 {
                    if r.ints[i] >= sp.maxc[i] {
                        r.ints[i] = sp.maxc[i] + 1;
                        r.fracs[i] = NONE;
                    } else {
                        r.fracs[i] = 1;
                    }
                }
            }
        } else {
            let top = self.blocks();
            if top == 0 {
                return None;
            }
            for i in 0..r.len() {
                if r.fracs[i] == top {
                    r.ints[i] += 1;
                    r.fracs[i] = 0;
                }
            }
        }
        r.normalize();
        Some(r)
    }

    /// Time successor that stays put at the fixpoint.
    pub fn delay(&self, sp: &ClockSpace) -> Region {
        self.time_successor(sp).unwrap_or_else(|| self.clone())
    }

    pub fn reset(&self, clocks: &[usize]) -> Region {
        let mut r = self.clone();
        for &c in clocks {
            r.ints[c] = 0;
            r.fracs[c] = 0;
        }
        r.normalize();
        r
    }

    /// Apply `target := source` for every pair (simultaneously).
    pub fn copy(&self, sp: &ClockSpace, pairs: &[(usize, usize)]) -> Region {
        let mut r = self.clone();
        for &(t, s) in pairs {
            if self.is_above(sp, s) {
                debug_assert!(sp.maxc[t] <= sp.maxc[s], "copy into a clock with a larger max constant");
                r.ints[t] = sp.maxc[t] + 1;
                r.fracs[t] = NONE;
            } else {
                let (i, f) = (self.ints[s], self.fracs[s]);
                if i > sp.maxc[t] || (i == sp.maxc[t] && f != 0) {
                    r.ints[t] = sp.maxc[t] + 1;
                    r.fracs[t] = NONE;
                } else {
                    r.ints[t] = i;
                    r.fracs[t] = f;
                }
            }
        }
        r.normalize();
        r
    }

    pub fn sat_atom(&self, sp: &ClockSpace, i: usize, rel: Rel, k: u32) -> bool {
        debug_assert!(k <= sp.maxc[i], "constant above max for clock {}", sp.names[i]);
        if self.is_above(sp, i) {
            return matches!(rel, Rel::Gt | Rel::Ge);
        }
        let int = self.ints[i];
        if self.fracs[i] == 0 {
            rel.holds(int, k)
        } else {
            match rel {
                Rel::Lt | Rel::Le => int < k,
                Rel::Eq => false,
                Rel::Gt | Rel::Ge => int >= k,
            }
        }
    }

    /// `x - y ⋈ k`; both clocks must be at or below their max constants.
    pub fn sat_diag(&self, sp: &ClockSpace, x: usize, y: usize, rel: Rel, k: i32) -> bool {
        if self.is_above(sp, x) || self.is_above(sp, y) {
            debug_assert!(false, "diagonal evaluated on an above-max clock");
            return false;
        }
        let d = self.ints[x] as i64 - self.ints[y] as i64;
        let k = k as i64;
        let (fx, fy) = (self.fracs[x], self.fracs[y]);
        if fx == fy {
            return rel.holds(d, k);
        }
        // difference lies strictly inside (d-1, d) or (d, d+1)
        let (lo, hi) = if fx < fy { (d - 1, d) } else { (d, d + 1) };
        match rel {
            Rel::Lt | Rel::Le => hi <= k,
            Rel::Eq => false,
            Rel::Gt | Rel::Ge => lo >= k,
        }
    }

    pub fn satisfies(&self, sp: &ClockSpace, g: &CConstraint) -> bool {
        g.atoms.iter().all(|a| self.sat_atom(sp, a.clock, a.rel, a.k))
            && g.diags.iter().all(|d| self.sat_diag(sp, d.x, d.y, d.rel, d.k))
    }

    /// Checked variant reporting constants above the max constant.
    pub fn satisfies_checked(&self, sp: &ClockSpace, g: &CConstraint) -> Result<bool, RegionError> {
        for a in &g.atoms {
            if a.k > sp.maxc[a.clock] {
                return Err(RegionError::ConstantAboveMax {
                    clock: sp.names[a.clock].clone(),
                    k: a.k,
                    maxc: sp.maxc[a.clock],
                });
            }
        }
        Ok(self.satisfies(sp, g))
    }

    pub fn project(&self, idx: &[usize]) -> Region {
        let mut r = Region {
            ints: idx.iter().map(|&i| self.ints[i]).collect(),
            fracs: idx.iter().map(|&i| self.fracs[i]).collect(),
        };
        r.normalize();
        r
    }

    /// True when time cannot stay in this region (some tracked clock is integral).
    pub fn is_point(&self) -> bool {
        self.fracs.contains(&0)
    }

    /// A valuation inside the region; `variant` picks distinct samples.
    pub fn sample(&self, sp: &ClockSpace, variant: u32) -> Vec<Rational64> {
        let b = self.blocks() as i64;
        let den = b + 1 + variant as i64;
        (0..self.len())
            .map(|i| {
                if self.is_above(sp, i) {
                    Rational64::new((sp.maxc[i] as i64 + 1) * (variant as i64 + 2) + variant as i64, variant as i64 + 2)
                } else {
                    Rational64::from_integer(self.ints[i] as i64) + Rational64::new(self.fracs[i] as i64, den)
                }
            })
            .collect()
    }

    /// Canonical identifier, one token per clock.
    pub fn id(&self, sp: &ClockSpace) -> String {
        let toks: Vec<String> =
            (0..self.len())
                .map(|i| {
                    if self.is_above(sp, i) {
                        "iT".to_string()
                    } else {
                        format!("i{}r{}", self.ints[i], self.fracs[i])
                    }
                })
                .collect();
        if toks.is_empty() {
            "i".to_string()
        } else {
            toks.join(".")
        }
    }

    /// Human-readable description such as `x=2, 1<y<2`.
    pub fn describe(&self, sp: &ClockSpace) -> String {
        let mut parts = Vec::new();
        for i in 0..self.len() {
            let n = &sp.names[i];
            if self.is_above(sp, i) {
                parts.push(format!("{n}>{}", sp.maxc[i]));
            } else if self.fracs[i] == 0 {
                parts.push(format!("{n}={}", self.ints[i]));
            } else {
                parts.push(format!("{}<{n}<{}", self.ints[i], self.ints[i] + 1));
            }
        }
        let b = self.blocks();
        let tracked = self.fracs.iter().filter(|&&f| f != 0 && f != NONE).count();
        if tracked >= 2 {
            let mut s = String::from("frac:");
            for k in 1..=b {
                let names: Vec<&str> =
                    (0..self.len()).filter(|&i| self.fracs[i] == k).map(|i| sp.names[i].as_str()).collect();
                if k > 1 {
                    s.push('<');
                }
                let _ = write!(s, "{{{}}}", names.join(","));
            }
            parts.push(s);
        }
        if parts.is_empty() {
            "true".into()
        } else {
            parts.join(", ")
        }
    }

    /// Constraint characterizing exactly this region over the clock names
    /// produced by `rename`; uses diagonal atoms to pin fractional order.
    pub fn to_constraint(&self, sp: &ClockSpace, rename: &dyn Fn(&str) -> String) -> Constraint {
        let mut c = Constraint::truth();
        for i in 0..self.len() {
            let n = rename(&sp.names[i]);
            if self.is_above(sp, i) {
                c.atoms.push(Atom::new(n, Rel::Gt, sp.maxc[i]));
            } else if self.fracs[i] == 0 {
                c.atoms.push(Atom::new(n, Rel::Eq, self.ints[i]));
            } else {
                c.atoms.push(Atom::new(n.clone(), Rel::Gt, self.ints[i]));
                c.atoms.push(Atom::new(n, Rel::Lt, self.ints[i] + 1));
            }
        }
        let b = self.blocks();
        let rep = |k: u8| (0..self.len()).find(|&i| self.fracs[i] == k);
        for k in 1..=b {
            let r = rep(k).unwrap();
            for i in 0..self.len() {
                if self.fracs[i] == k && i != r {
                    c.diagonals.push(DiagAtom {
                        x: rename(&sp.names[i]),
                        y: rename(&sp.names[r]),
                        rel: Rel::Eq,
                        k: self.ints[i] as i32 - self.ints[r] as i32,
                    });
                }
            }
            if k < b {
                let s = rep(k + 1).unwrap();
                c.diagonals.push(DiagAtom {
                    x: rename(&sp.names[r]),
                    y: rename(&sp.names[s]),
                    rel: Rel::Lt,
                    k: self.ints[r] as i32 - self.ints[s] as i32,
                });
            }
        }
        c
    }

    /// Every region over the space.
    pub fn enumerate_all(sp: &ClockSpace) -> Vec<Region> {
        // per clock: (int, frac kind) where kind 0 = zero, 1 = positive, 2 = above
        let n = sp.len();
        let mut out = Vec::new();
        let mut choice: Vec<(u32, u8)> = Vec::with_capacity(n);
        fn rec(sp: &ClockSpace, i: usize, choice: &mut Vec<(u32, u8)>, out: &mut Vec<Region>) {
            if i == sp.len() {
                let positive: Vec<usize> = (0..i).filter(|&j| choice[j].1 == 1).collect();
                for ranks in ordered_partitions(positive.len()) {
                    let mut r = Region { ints: vec![0; i], fracs: vec![0; i] };
                    for (j, &(int, kind)) in choice.iter().enumerate().take(i) {
                        r.ints[j] = int;
                        r.fracs[j] = if kind == 2 { NONE } else { 0 };
                    }
                    for (p, &j) in positive.iter().enumerate() {
                        r.fracs[j] = ranks[p];
                    }
                    out.push(r);
                }
                return;
            }
            let m = sp.maxc[i];
            for int in 0..=m {
                choice.push((int, 0));
                rec(sp, i + 1, choice, out);
                choice.pop();
                if int < m {
                    choice.push((int, 1));
                    rec(sp, i + 1, choice, out);
                    choice.pop();
                }
            }
            choice.push((m + 1, 2));
            rec(sp, i + 1, choice, out);
            choice.pop();
        }
        rec(sp, 0, &mut choice, &mut out);
        out
    }
}

/// All assignments of ranks 1..=b (surjective, any b) to `n` items.
fn ordered_partitions(n: usize) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for sub in ordered_partitions(n - 1) {
        let b = sub.iter().copied().max().unwrap_or(0);
        // join an existing block
        for k in 1..=b {
            let mut v = sub.clone();
            v.push(k);
            out.push(v);
        }
        // new block inserted at any position
        for k in 1..=b + 1 {
            let mut v: Vec<u8> = sub.iter().map(|&r| if r >= k { r + 1 } else { r }).collect();
            v.push(k);
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CAtom {
    pub clock: usize,
    pub rel: Rel,
    pub k: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CDiag {
    pub x: usize,
    pub y: usize,
    pub rel: Rel,
    pub k: i32,
}

/// A constraint compiled to clock indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CConstraint {
    pub atoms: Vec<CAtom>,
    pub diags: Vec<CDiag>,
}

impl CConstraint {
    pub fn compile(c: &Constraint, index: &dyn Fn(&str) -> usize) -> CConstraint {
        CConstraint {
            atoms: c.atoms.iter().map(|a| CAtom { clock: index(&a.clock), rel: a.rel, k: a.k }).collect(),
            diags: c.diagonals.iter().map(|d| CDiag { x: index(&d.x), y: index(&d.y), rel: d.rel, k: d.k }).collect(),
        }
    }

    pub fn eval(&self, v: &[Rational64]) -> bool {
        self.atoms.iter().all(|a| a.rel.holds(v[a.clock], Rational64::from_integer(a.k as i64)))
            && self.diags.iter().all(|d| d.rel.holds(v[d.x] - v[d.y], Rational64::from_integer(d.k as i64)))
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty() && self.diags.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CEdge {
    /// Index in the automaton's edge list.
    pub id: usize,
    pub src: usize,
    pub dst: usize,
    pub guard: CConstraint,
    pub action: Action,
    pub resets: Vec<usize>,
    pub copies: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct CAutomaton {
    pub name: String,
    pub locs: Vec<String>,
    pub inv: Vec<CConstraint>,
    pub init: usize,
    pub edges: Vec<CEdge>,
    pub out: Vec<Vec<usize>>,
}

/// A product of automata compiled against a host clock space.
#[derive(Clone, Debug)]
pub struct System {
    /// The host space (own clocks, possibly embedded at an offset).
    pub space: ClockSpace,
    pub comps: Vec<CAutomaton>,
    /// Sync label → participating components.
    pub sync_groups: BTreeMap<String, Vec<usize>>,
    /// Host indices of this system's own clocks.
    pub own: Vec<usize>,
}

/// A discrete step of a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub action: Action,
    /// `(component, edge id)` of the participating edges.
    pub edges: Vec<(usize, usize)>,
    pub locs: Vec<usize>,
    pub region: Region,
}

impl System {
    /// Compile `automata` with max constants looked up by name.
    pub fn new(automata: &[Automaton], maxc: &BTreeMap<String, u32>) -> System {
        let names: Vec<String> = automata.iter().flat_map(|a| a.clocks.iter().cloned()).collect();
        let mc = names.iter().map(|n| maxc.get(n).copied().unwrap_or(0)).collect();
        Self::compile(automata, ClockSpace::new(names, mc))
    }

    /// Compile `automata` against `host`; every clock they mention must be in `host`.
    pub fn compile(automata: &[Automaton], host: ClockSpace) -> System {
        let lookup: HashMap<&str, usize> = host.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let index = |n: &str| *lookup.get(n).unwrap_or_else(|| panic!("unknown clock {n}"));
        let own: Vec<usize> = automata.iter().flat_map(|a| a.clocks.iter()).map(|n| index(n)).collect();
        let mut comps = Vec::new();
        let mut sync_groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (ci, a) in automata.iter().enumerate() {
            comps.push(compile_automaton(a, &index));
            for l in a.sync_labels() {
                sync_groups.entry(l).or_default().push(ci);
            }
        }
        System { space: host, comps, sync_groups, own }
    }

    pub fn for_network(net: &Network) -> System {
        System::new(&net.automata, &crate::model::max_constants(net))
    }

    pub fn init_locs(&self) -> Vec<usize> {
        self.comps.iter().map(|c| c.init).collect()
    }

    pub fn legal(&self, locs: &[usize], r: &Region) -> bool {
        self.comps.iter().zip(locs).all(|(c, &l)| r.satisfies(&self.space, &c.inv[l]))
    }

    /// Region-level delay step: `None` if an invariant blocks it.
    pub fn delay(&self, locs: &[usize], r: &Region) -> Option<Region> {
        let next = r.delay(&self.space);
        self.legal(locs, &next).then_some(next)
    }

    /// All discrete steps from a legal state (solo edges and joint syncs).
    pub fn steps(&self, locs: &[usize], r: &Region) -> Vec<Step> {
        let sp = &self.space;
        let mut out = Vec::new();
        for (ci, c) in self.comps.iter().enumerate() {
            for &eid in &c.out[locs[ci]] {
                let e = &c.edges[eid];
                let solo = match &e.action {
                    Action::Sync(l) => self.sync_groups.get(l).is_none_or(|g| g.len() == 1),
                    _ => true,
                };
                if !solo || !r.satisfies(sp, &e.guard) {
                    continue;
                }
                let nr = r.reset(&e.resets).copy(sp, &e.copies);
                let mut nl = locs.to_vec();
                nl[ci] = e.dst;
                if self.legal(&nl, &nr) {
                    out.push(Step { action: e.action.clone(), edges: vec![(ci, eid)], locs: nl, region: nr });
                }
            }
        }
        for (label, group) in &self.sync_groups {
            if group.len() < 2 {
                continue;
            }
            let options: Vec<Vec<usize>> = group
                .iter()
                .map(|&ci| {
                    let c = &self.comps[ci];
                    c.out[locs[ci]]
                        .iter()
                        .copied()
                        .filter(|&eid| {
                            let e = &c.edges[eid];
                            matches!(&e.action, Action::Sync(l) if l == label) && r.satisfies(sp, &e.guard)
                        })
                        .collect()
                })
                .collect();
            for combo in cartesian(&options) {
                let mut nl = locs.to_vec();
                let mut resets = Vec::new();
                let mut copies = Vec::new();
                let mut edges = Vec::new();
                for (k, &ci) in group.iter().enumerate() {
                    let e = &self.comps[ci].edges[combo[k]];
                    nl[ci] = e.dst;
                    resets.extend(e.resets.iter().copied());
                    copies.extend(e.copies.iter().copied());
                    edges.push((ci, e.id));
                }
                let nr = r.reset(&resets).copy(sp, &copies);
                if self.legal(&nl, &nr) {
                    out.push(Step { action: Action::Sync(label.clone()), edges, locs: nl, region: nr });
                }
            }
        }
        out
    }

    pub fn loc_names(&self, locs: &[usize]) -> Vec<&str> {
        self.comps.iter().zip(locs).map(|(c, &l)| c.locs[l].as_str()).collect()
    }
}

/// Compile one automaton with clock names resolved by `index`.
pub fn compile_automaton(a: &Automaton, index: &dyn Fn(&str) -> usize) -> CAutomaton {
    let locs: Vec<String> = a.locations.iter().map(|l| l.name.clone()).collect();
    let li = |n: &str| locs.iter().position(|l| l == n).unwrap();
    let inv = a.locations.iter().map(|l| CConstraint::compile(&l.inv, index)).collect();
    let mut out = vec![Vec::new(); locs.len()];
    let edges: Vec<CEdge> = a
        .edges
        .iter()
        .enumerate()
        .map(|(id, e)| {
            out[li(&e.src)].push(id);
            CEdge {
                id,
                src: li(&e.src),
                dst: li(&e.dst),
                guard: CConstraint::compile(&e.guard, index),
                action: e.action.clone(),
                resets: e.resets.iter().map(|r| index(r)).collect(),
                copies: e.copies.iter().map(|(t, s)| (index(t), index(s))).collect(),
            }
        })
        .collect();
    CAutomaton { name: a.name.clone(), init: li(&a.init), locs, inv, edges, out }
}

/// A discrete step on concrete valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteStep {
    pub action: Action,
    pub edges: Vec<(usize, usize)>,
    pub locs: Vec<usize>,
    pub valuation: Vec<Rational64>,
}

impl System {
    pub fn legal_at(&self, locs: &[usize], v: &[Rational64]) -> bool {
        self.comps.iter().zip(locs).all(|(c, &l)| c.inv[l].eval(v))
    }

    fn apply(&self, v: &[Rational64], resets: &[usize], copies: &[(usize, usize)]) -> Vec<Rational64> {
        let mut w = v.to_vec();
        for &r in resets {
            w[r] = Rational64::zero();
        }
        let before = w.clone();
        for &(t, s) in copies {
            w[t] = before[s];
        }
        w
    }

    /// Discrete steps from a concrete legal state.
    pub fn concrete_steps(&self, locs: &[usize], v: &[Rational64]) -> Vec<ConcreteStep> {
        let mut out = Vec::new();
        for (ci, c) in self.comps.iter().enumerate() {
            for &eid in &c.out[locs[ci]] {
                let e = &c.edges[eid];
                let solo = match &e.action {
                    Action::Sync(l) => self.sync_groups.get(l).is_none_or(|g| g.len() == 1),
                    _ => true,
                };
                if !solo || !e.guard.eval(v) {
                    continue;
                }
                let w = self.apply(v, &e.resets, &e.copies);
                let mut nl = locs.to_vec();
                nl[ci] = e.dst;
                if self.legal_at(&nl, &w) {
                    out.push(ConcreteStep { action: e.action.clone(), edges: vec![(ci, eid)], locs: nl, valuation: w });
                }
            }
        }
        for (label, group) in &self.sync_groups {
            if group.len() < 2 {
                continue;
            }
            let options: Vec<Vec<usize>> = group
                .iter()
                .map(|&ci| {
                    let c = &self.comps[ci];
                    c.out[locs[ci]]
                        .iter()
                        .copied()
                        .filter(|&eid| {
                            let e = &c.edges[eid];
                            matches!(&e.action, Action::Sync(l) if l == label) && e.guard.eval(v)
                        })
                        .collect()
                })
                .collect();
            for combo in cartesian(&options) {
                let mut nl = locs.to_vec();
                let mut resets = Vec::new();
                let mut copies = Vec::new();
                let mut edges = Vec::new();
                for (k, &ci) in group.iter().enumerate() {
                    let e = &self.comps[ci].edges[combo[k]];
                    nl[ci] = e.dst;
                    resets.extend(e.resets.iter().copied());
                    copies.extend(e.copies.iter().copied());
                    edges.push((ci, e.id));
                }
                let w = self.apply(v, &resets, &copies);
                if self.legal_at(&nl, &w) {
                    out.push(ConcreteStep { action: Action::Sync(label.clone()), edges, locs: nl, valuation: w });
                }
            }
        }
        out
    }
}

pub fn cartesian(options: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut acc: Vec<Vec<usize>> = vec![vec![]];
    for opts in options {
        let mut next = Vec::new();
        for prefix in &acc {
            for &o in opts {
                let mut p = prefix.clone();
                p.push(o);
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphLabel {
    Delay,
    Step { action: Action, edges: Vec<(usize, usize)> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionState {
    pub locs: Vec<usize>,
    pub region: Region,
}

/// Explicit region graph; state 0 is initial.
#[derive(Clone, Debug)]
pub struct RegionGraph {
    pub states: Vec<RegionState>,
    pub edges: Vec<(usize, usize, GraphLabel)>,
    pub index: HashMap<RegionState, usize>,
    /// BFS parent (state, edge index) for trace reconstruction.
    pub parent: Vec<Option<(usize, usize)>>,
}

impl RegionGraph {
    pub fn succ(&self, s: usize) -> impl Iterator<Item = &(usize, usize, GraphLabel)> {
        self.edges.iter().filter(move |e| e.0 == s)
    }

    /// Path of edge indices from the initial state to `s`.
    pub fn path_to(&self, mut s: usize) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some((p, e)) = self.parent[s] {
            path.push(e);
            s = p;
        }
        path.reverse();
        path
    }
}

/// Build the reachable region graph, optionally dropping some steps and
/// stopping as soon as `stop` holds for a state.
pub fn build_region_graph_with(
    sys: &System,
    budget: usize,
    keep_step: &dyn Fn(&Step) -> bool,
    stop: &dyn Fn(&RegionState) -> bool,
) -> Result<(RegionGraph, Option<usize>), RegionError> {
    let init = RegionState { locs: sys.init_locs(), region: Region::zero(sys.space.len()) };
    explore_from(sys, vec![init], budget, keep_step, stop)
}

/// Region graph reachable from several roots (illegal roots are skipped).
/// States are numbered in breadth-first order, each level sorted canonically.
pub fn explore_from(
    sys: &System,
    roots: Vec<RegionState>,
    budget: usize,
    keep_step: &dyn Fn(&Step) -> bool,
    stop: &dyn Fn(&RegionState) -> bool,
) -> Result<(RegionGraph, Option<usize>), RegionError> {
    let mut g = RegionGraph { states: Vec::new(), edges: Vec::new(), index: HashMap::new(), parent: Vec::new() };
    let mut frontier = Vec::new();
    for root in roots {
        if !sys.legal(&root.locs, &root.region) || g.index.contains_key(&root) {
            continue;
        }
        let i = g.states.len();
        g.index.insert(root.clone(), i);
        g.states.push(root);
        g.parent.push(None);
        frontier.push(i);
        if stop(&g.states[i]) {
            return Ok((g, Some(i)));
        }
    }
    while !frontier.is_empty() {
        let mut next_frontier = Vec::new();
        for s in frontier {
            let st = g.states[s].clone();
            let mut succs: Vec<(RegionState, GraphLabel)> = Vec::new();
            if let Some(nr) = sys.delay(&st.locs, &st.region) {
                succs.push((RegionState { locs: st.locs.clone(), region: nr }, GraphLabel::Delay));
            }
            for step in sys.steps(&st.locs, &st.region) {
                if keep_step(&step) {
                    succs.push((
                        RegionState { locs: step.locs, region: step.region },
                        GraphLabel::Step { action: step.action, edges: step.edges },
                    ));
                }
            }
            for (t, label) in succs {
                let ti = match g.index.get(&t) {
                    Some(&i) => i,
                    None => {
                        if g.states.len() >= budget {
                            return Err(RegionError::StateBudgetExceeded(budget));
                        }
                        let i = g.states.len();
                        g.index.insert(t.clone(), i);
                        g.states.push(t);
                        g.parent.push(Some((s, g.edges.len())));
                        next_frontier.push(i);
                        i
                    }
                };
                g.edges.push((s, ti, label));
                if g.parent[ti].map(|(_, e)| e) == Some(g.edges.len() - 1) && stop(&g.states[ti]) {
                    return Ok((g, Some(ti)));
                }
            }
        }
        next_frontier.sort_by(|a, b| g.states[*a].cmp(&g.states[*b]));
        frontier = next_frontier;
    }
    Ok((g, None))
}

pub fn build_region_graph(sys: &System, budget: usize) -> Result<RegionGraph, RegionError> {
    Ok(build_region_graph_with(sys, budget, &|_| true, &|_| false)?.0)
}

/// Region graph of one automaton alone, with max constants of its own
/// guards and invariants.
pub fn automaton_alone(a: &Automaton) -> System {
    let net = Network { automata: vec![a.clone()], synthesized: true };
    System::for_network(&net)
}

/// Set of (location vector, region) pairs of a graph, for comparisons.
pub fn state_set(g: &RegionGraph) -> BTreeSet<RegionState> {
    g.states.iter().cloned().collect()
}

/// Convert a rational to f64 for display only.
pub fn approx(q: Rational64) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
