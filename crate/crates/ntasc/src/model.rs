//! Syntax of networks of timed automata with clock-copy updates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Rational64;

/// Source position (1-based line and column).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "==",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    /// Negation as a disjunction of relations (equality splits in two).
    pub fn negate(self) -> Vec<Rel> {
        match self {
            Rel::Lt => vec![Rel::Ge],
            Rel::Le => vec![Rel::Gt],
            Rel::Eq => vec![Rel::Lt, Rel::Gt],
            Rel::Ge => vec![Rel::Lt],
            Rel::Gt => vec![Rel::Le],
        }
    }

    pub fn holds<T: Ord>(self, lhs: T, rhs: T) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    pub fn is_upper(self) -> bool {
        matches!(self, Rel::Lt | Rel::Le)
    }
}

/// `clock ⋈ k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub clock: String,
    pub rel: Rel,
    pub k: u32,
}

impl Atom {
    pub fn new(clock: impl Into<String>, rel: Rel, k: u32) -> Self {
        Atom { clock: clock.into(), rel, k }
    }
}

/// `x - y ⋈ k`; synthesized tier only.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagAtom {
    pub x: String,
    pub y: String,
    pub rel: Rel,
    pub k: i32,
}

/// A conjunction of atoms. The empty conjunction is `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub atoms: Vec<Atom>,
    pub diagonals: Vec<DiagAtom>,
}

impl Constraint {
    pub fn truth() -> Self {
        Constraint::default()
    }

    pub fn of(atoms: Vec<Atom>) -> Self {
        Constraint { atoms, diagonals: Vec::new() }
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty() && self.diagonals.is_empty()
    }

    pub fn and(&self, other: &Constraint) -> Constraint {
        let mut c = self.clone();
        for a in &other.atoms {
            if !c.atoms.contains(a) {
                c.atoms.push(a.clone());
            }
        }
        for d in &other.diagonals {
            if !c.diagonals.contains(d) {
                c.diagonals.push(d.clone());
            }
        }
        c
    }

    pub fn clocks(&self) -> BTreeSet<&str> {
        let mut s: BTreeSet<&str> = self.atoms.iter().map(|a| a.clock.as_str()).collect();
        for d in &self.diagonals {
            s.insert(&d.x);
            s.insert(&d.y);
        }
        s
    }

    /// True if every atom is an upper bound (`<` or `<=`), as invariants require.
    pub fn is_upper_only(&self) -> bool {
        self.atoms.iter().all(|a| a.rel.is_upper()) && self.diagonals.is_empty()
    }

    /// Evaluate on a valuation given as clock-name lookup.
    pub fn eval(&self, v: &dyn Fn(&str) -> Rational64) -> bool {
        self.atoms.iter().all(|a| a.rel.holds(v(&a.clock), Rational64::from_integer(a.k as i64)))
            && self.diagonals.iter().all(|d| d.rel.holds(v(&d.x) - v(&d.y), Rational64::from_integer(d.k as i64)))
    }

    /// Rename clocks through `f`.
    pub fn map_clocks(&self, f: &dyn Fn(&str) -> String) -> Constraint {
        Constraint {
            atoms: self.atoms.iter().map(|a| Atom { clock: f(&a.clock), rel: a.rel, k: a.k }).collect(),
            diagonals: self.diagonals.iter().map(|d| DiagAtom { x: f(&d.x), y: f(&d.y), rel: d.rel, k: d.k }).collect(),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_true() {
            return write!(f, "true");
        }
        let mut first = true;
        for a in &self.atoms {
            if !first {
                write!(f, " && ")?;
            }
            first = false;
            write!(f, "{} {} {}", a.clock, a.rel.symbol(), a.k)?;
        }
        for d in &self.diagonals {
            if !first {
                write!(f, " && ")?;
            }
            first = false;
            write!(f, "{} - {} {} {}", d.x, d.y, d.rel.symbol(), d.k)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Eps,
    Local(String),
    Sync(String),
}

impl Action {
    pub fn label(&self) -> Option<&str> {
        match self {
            Action::Eps => None,
            Action::Local(l) | Action::Sync(l) => Some(l),
        }
    }

    pub fn is_sync(&self) -> bool {
        matches!(self, Action::Sync(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Eps => write!(f, "eps"),
            Action::Local(l) => write!(f, "{l}"),
            Action::Sync(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub guard: Constraint,
    pub action: Action,
    pub resets: Vec<String>,
    /// `(target, source)`: after resets, `target := source`.
    pub copies: Vec<(String, String)>,
}

impl Edge {
    pub fn new(src: &str, dst: &str, guard: Constraint, action: Action, resets: &[&str]) -> Self {
        Edge {
            src: src.to_string(),
            dst: dst.to_string(),
            guard,
            action,
            resets: resets.iter().map(|s| s.to_string()).collect(),
            copies: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Location {
    pub name: String,
    pub inv: Constraint,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Automaton {
    pub name: String,
    pub clocks: Vec<String>,
    pub init: String,
    pub locations: Vec<Location>,
    pub edges: Vec<Edge>,
}

impl Automaton {
    pub fn new(name: &str, clocks: &[&str], init: &str) -> Self {
        Automaton {
            name: name.to_string(),
            clocks: clocks.iter().map(|s| s.to_string()).collect(),
            init: init.to_string(),
            locations: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn add_loc(&mut self, name: &str, inv: Constraint) -> &mut Self {
        self.locations.push(Location { name: name.to_string(), inv });
        self
    }

    pub fn add_edge(&mut self, e: Edge) -> &mut Self {
        self.edges.push(e);
        self
    }

    pub fn loc_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn inv(&self, loc: &str) -> &Constraint {
        static TRUE: Constraint = Constraint { atoms: Vec::new(), diagonals: Vec::new() };
        self.locations.iter().find(|l| l.name == loc).map(|l| &l.inv).unwrap_or(&TRUE)
    }

    /// Derived reset set C.
    pub fn reset_set(&self) -> BTreeSet<String> {
        self.edges.iter().flat_map(|e| e.resets.iter().cloned()).collect()
    }

    /// Labels of all non-ε edges.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.edges.iter().filter_map(|e| e.action.label().map(str::to_string)).collect()
    }

    pub fn sync_labels(&self) -> BTreeSet<String> {
        self.edges
            .iter()
            .filter_map(|e| match &e.action {
                Action::Sync(l) => Some(l.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn local_labels(&self) -> BTreeSet<String> {
        self.edges
            .iter()
            .filter_map(|e| match &e.action {
                Action::Local(l) => Some(l.clone()),
                _ => None,
            })
            .collect()
    }

    /// Clocks read by guards and invariants.
    pub fn read_clocks(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for l in &self.locations {
            s.extend(l.inv.clocks().into_iter().map(str::to_string));
        }
        for e in &self.edges {
            s.extend(e.guard.clocks().into_iter().map(str::to_string));
        }
        s
    }
}

/// A network; analysis uses exactly two components `a1 ∥ a2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Network {
    pub automata: Vec<Automaton>,
    /// Output of synthesis: diagonal atoms and copies are legal.
    pub synthesized: bool,
}

impl Network {
    pub fn new(a1: Automaton, a2: Automaton) -> Self {
        Network { automata: vec![a1, a2], synthesized: false }
    }

    pub fn a1(&self) -> &Automaton {
        &self.automata[0]
    }

    pub fn a2(&self) -> &Automaton {
        &self.automata[1]
    }

    pub fn all_clocks(&self) -> Vec<String> {
        self.automata.iter().flat_map(|a| a.clocks.iter().cloned()).collect()
    }

    pub fn owner(&self, clock: &str) -> Option<usize> {
        self.automata.iter().position(|a| a.clocks.iter().any(|c| c == clock))
    }

    /// X1 clocks read by A2.
    pub fn shared_reads(&self) -> BTreeSet<String> {
        let x1: BTreeSet<&String> = self.a1().clocks.iter().collect();
        self.a2().read_clocks().into_iter().filter(|c| x1.contains(c)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// (a) A1 reads a clock reset by A2.
    A1ReadsC2 {
        clock: String,
    },
    /// (b) unknown clock reference.
    UnknownClock {
        automaton: String,
        clock: String,
    },
    /// (b) unknown location reference.
    UnknownLocation {
        automaton: String,
        location: String,
    },
    /// (c) diagonal atom in an input model.
    DiagonalInInput {
        automaton: String,
    },
    /// (c) copy update in an input model.
    CopyInInput {
        automaton: String,
    },
    /// A clock reset by an automaton that does not declare it.
    ForeignReset {
        automaton: String,
        clock: String,
    },
    /// A copy whose target is not owned by the copying automaton.
    ForeignCopyTarget {
        automaton: String,
        clock: String,
    },
    /// Copies on a non-synchronizing edge.
    CopyOnLocalEdge {
        automaton: String,
    },
    /// Non-upper-bound atom in an invariant.
    BadInvariant {
        automaton: String,
        location: String,
    },
    /// A label used with `sync` on one side only, or as both `do` and `sync`.
    LabelMismatch {
        label: String,
    },
    DuplicateClock {
        clock: String,
    },
    DuplicateLocation {
        automaton: String,
        location: String,
    },
    WrongComponentCount {
        found: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::A1ReadsC2 { clock } => write!(f, "A1 reads clock `{clock}` reset by A2"),
            Violation::UnknownClock { automaton, clock } => {
                write!(f, "{automaton}: unknown clock `{clock}`")
            }
            Violation::UnknownLocation { automaton, location } => {
                write!(f, "{automaton}: unknown location `{location}`")
            }
            Violation::DiagonalInInput { automaton } => {
                write!(f, "{automaton}: diagonal atom outside synthesized output")
            }
            Violation::CopyInInput { automaton } => {
                write!(f, "{automaton}: copy update outside synthesized output")
            }
            Violation::ForeignReset { automaton, clock } => {
                write!(f, "{automaton}: resets clock `{clock}` declared elsewhere")
            }
            Violation::ForeignCopyTarget { automaton, clock } => {
                write!(f, "{automaton}: copies into clock `{clock}` declared elsewhere")
            }
            Violation::CopyOnLocalEdge { automaton } => {
                write!(f, "{automaton}: copy update on a non-synchronizing edge")
            }
            Violation::BadInvariant { automaton, location } => {
                write!(f, "{automaton}: invariant of `{location}` is not an upper bound")
            }
            Violation::LabelMismatch { label } => {
                write!(f, "label `{label}` is not used consistently as a synchronization")
            }
            Violation::DuplicateClock { clock } => write!(f, "clock `{clock}` declared twice"),
            Violation::DuplicateLocation { automaton, location } => {
                write!(f, "{automaton}: location `{location}` declared twice")
            }
            Violation::WrongComponentCount { found } => {
                write!(f, "expected 2 automata, found {found}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub shared_reads: BTreeSet<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_network(net: &Network) -> ValidationReport {
    let mut v = Vec::new();
    let mut declared: BTreeSet<&str> = BTreeSet::new();
    for a in &net.automata {
        for c in &a.clocks {
            if !declared.insert(c) {
                v.push(Violation::DuplicateClock { clock: c.clone() });
            }
        }
    }
    if net.automata.len() != 2 {
        v.push(Violation::WrongComponentCount { found: net.automata.len() });
    }
    for a in &net.automata {
        let name = &a.name;
        let mut locs = BTreeSet::new();
        for l in &a.locations {
            if !locs.insert(l.name.as_str()) {
                v.push(Violation::DuplicateLocation { automaton: name.clone(), location: l.name.clone() });
            }
            if !l.inv.is_upper_only() {
                v.push(Violation::BadInvariant { automaton: name.clone(), location: l.name.clone() });
            }
        }
        if !locs.contains(a.init.as_str()) {
            v.push(Violation::UnknownLocation { automaton: name.clone(), location: a.init.clone() });
        }
        let check_clock = |c: &str, v: &mut Vec<Violation>| {
            if !declared.contains(c) {
                v.push(Violation::UnknownClock { automaton: name.clone(), clock: c.to_string() });
            }
        };
        let constraint_checks = |g: &Constraint, v: &mut Vec<Violation>| {
            for c in g.clocks() {
                check_clock(c, v);
            }
            if !net.synthesized && !g.diagonals.is_empty() {
                v.push(Violation::DiagonalInInput { automaton: name.clone() });
            }
        };
        for l in &a.locations {
            constraint_checks(&l.inv, &mut v);
        }
        for e in &a.edges {
            for l in [&e.src, &e.dst] {
                if !locs.contains(l.as_str()) {
                    v.push(Violation::UnknownLocation { automaton: name.clone(), location: l.clone() });
                }
            }
            constraint_checks(&e.guard, &mut v);
            for r in &e.resets {
                if !declared.contains(r.as_str()) {
                    v.push(Violation::UnknownClock { automaton: name.clone(), clock: r.clone() });
                } else if !a.clocks.contains(r) {
                    v.push(Violation::ForeignReset { automaton: name.clone(), clock: r.clone() });
                }
            }
            if !e.copies.is_empty() {
                if !net.synthesized {
                    v.push(Violation::CopyInInput { automaton: name.clone() });
                }
                if !e.action.is_sync() {
                    v.push(Violation::CopyOnLocalEdge { automaton: name.clone() });
                }
                for (t, s) in &e.copies {
                    for c in [t, s] {
                        if !declared.contains(c.as_str()) {
                            v.push(Violation::UnknownClock { automaton: name.clone(), clock: c.clone() });
                        }
                    }
                    if declared.contains(t.as_str()) && !a.clocks.contains(t) {
                        v.push(Violation::ForeignCopyTarget { automaton: name.clone(), clock: t.clone() });
                    }
                }
            }
        }
    }
    // Label discipline: `sync` on both sides, never mixed with `do`.
    let mut labels: BTreeSet<String> = BTreeSet::new();
    for (i, a) in net.automata.iter().enumerate() {
        for l in a.sync_labels() {
            let elsewhere = net.automata.iter().enumerate().any(|(j, b)| j != i && b.sync_labels().contains(&l));
            if !elsewhere || a.local_labels().contains(&l) {
                labels.insert(l);
            }
        }
        for l in a.local_labels() {
            let as_sync = net.automata.iter().any(|b| b.sync_labels().contains(&l));
            let shared = net.automata.iter().enumerate().any(|(j, b)| j != i && b.local_labels().contains(&l));
            if as_sync || shared {
                labels.insert(l);
            }
        }
    }
    v.extend(labels.into_iter().map(|label| Violation::LabelMismatch { label }));
    if net.automata.len() == 2 {
        let c2 = net.a2().reset_set();
        for c in net.a1().read_clocks() {
            if c2.contains(&c) || net.a2().clocks.contains(&c) {
                v.push(Violation::A1ReadsC2 { clock: c });
            }
        }
    }
    let shared_reads = if net.automata.len() == 2 { net.shared_reads() } else { BTreeSet::new() };
    ValidationReport { violations: v, shared_reads }
}

/// Σsync: non-ε labels common to both alphabets.
pub fn sync_alphabet(net: &Network) -> BTreeSet<String> {
    let a = net.a1().alphabet();
    let b = net.a2().alphabet();
    a.intersection(&b).cloned().collect()
}

/// Move X1 atoms of A2 synchronization guards onto the matching A1 edges.
///
/// A label is rewritten only when all its A2 edges agree on their X1 atoms;
/// otherwise conjoining would over-restrict and the edges are left as they are.
pub fn normalize_sync_guards(net: &Network) -> Network {
    let x1: BTreeSet<&String> = net.a1().clocks.iter().collect();
    let mut moved: BTreeMap<String, Vec<Atom>> = BTreeMap::new();
    let mut conflicting: BTreeSet<String> = BTreeSet::new();
    for e in &net.a2().edges {
        if let Action::Sync(l) = &e.action {
            let mut part: Vec<Atom> = e.guard.atoms.iter().filter(|a| x1.contains(&a.clock)).cloned().collect();
            part.sort();
            match moved.get(l) {
                None => {
                    moved.insert(l.clone(), part);
                }
                Some(prev) if *prev != part => {
                    conflicting.insert(l.clone());
                }
                _ => {}
            }
        }
    }
    for l in conflicting {
        moved.remove(&l);
    }
    moved.retain(|_, atoms| !atoms.is_empty());
    if moved.is_empty() {
        return net.clone();
    }
    let mut out = net.clone();
    for e in &mut out.automata[1].edges {
        if let Action::Sync(l) = &e.action {
            if moved.contains_key(l) {
                e.guard.atoms.retain(|a| !x1.contains(&a.clock));
            }
        }
    }
    for e in &mut out.automata[0].edges {
        if let Action::Sync(l) = &e.action {
            if let Some(atoms) = moved.get(l) {
                e.guard = e.guard.and(&Constraint::of(atoms.clone()));
            }
        }
    }
    out
}

/// Per clock, the largest constant it is compared with anywhere in the network.
pub fn max_constants(net: &Network) -> BTreeMap<String, u32> {
    let mut m: BTreeMap<String, u32> = net.all_clocks().into_iter().map(|c| (c, 0)).collect();
    let mut bump = |g: &Constraint| {
        for a in &g.atoms {
            let e = m.entry(a.clock.clone()).or_insert(0);
            *e = (*e).max(a.k);
        }
        for d in &g.diagonals {
            for c in [&d.x, &d.y] {
                let e = m.entry(c.clone()).or_insert(0);
                *e = (*e).max(d.k.unsigned_abs());
            }
        }
    };
    for a in &net.automata {
        for l in &a.locations {
            bump(&l.inv);
        }
        for e in &a.edges {
            bump(&e.guard);
        }
    }
    // a copy target and its source must agree, or copying an above-max
    // value would lose information
    loop {
        let mut changed = false;
        for a in &net.automata {
            for e in &a.edges {
                for (t, s) in &e.copies {
                    let k = m.get(t).copied().unwrap_or(0).max(m.get(s).copied().unwrap_or(0));
                    for c in [t, s] {
                        let e = m.entry(c.clone()).or_insert(0);
                        if *e < k {
                            *e = k;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return m;
        }
    }
}

/// Sufficient non-Zeno test: every cycle of the location graph resets some
/// clock and also requires it to be at least 1 somewhere on the cycle.
pub fn check_nonzeno(ta: &Automaton) -> bool {
    let n = ta.locations.len();
    let idx = |l: &str| ta.loc_index(l).unwrap_or(usize::MAX);
    let edges: Vec<(usize, usize, &Edge)> =
        ta.edges.iter().filter(|e| idx(&e.src) < n && idx(&e.dst) < n).map(|e| (idx(&e.src), idx(&e.dst), e)).collect();
    let progresses = |cycle: &[&Edge]| {
        ta.clocks.iter().any(|x| {
            let reset = cycle.iter().any(|e| e.resets.contains(x));
            let lower = cycle.iter().any(|e| {
                e.guard.atoms.iter().any(|a| {
                    &a.clock == x
                        && ((matches!(a.rel, Rel::Ge | Rel::Eq) && a.k >= 1) || (a.rel == Rel::Gt && a.k >= 1))
                })
            });
            reset && lower
        })
    };
    // Enumerate simple cycles whose smallest location is `start`.
    fn dfs<'a>(
        start: usize,
        at: usize,
        edges: &[(usize, usize, &'a Edge)],
        on_path: &mut Vec<bool>,
        path: &mut Vec<&'a Edge>,
        ok: &dyn Fn(&[&Edge]) -> bool,
    ) -> bool {
        for &(s, d, e) in edges {
            if s != at || d < start {
                continue;
            }
            path.push(e);
            if d == start {
                if !ok(path) {
                    return false;
                }
            } else if !on_path[d] {
                on_path[d] = true;
                let good = dfs(start, d, edges, on_path, path, ok);
                on_path[d] = false;
                if !good {
                    return false;
                }
            }
            path.pop();
        }
        true
    }
    for start in 0..n {
        let mut on_path = vec![false; n];
        on_path[start] = true;
        let mut path = Vec::new();
        if !dfs(start, start, &edges, &mut on_path, &mut path, &progresses) {
            return false;
        }
    }
    true
}

/// Clock valuation with exact rationals.
pub type Valuation = BTreeMap<String, Rational64>;

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Network {
        let mut a1 = Automaton::new("A1", &["x"], "l0");
        a1.add_loc("l0", Constraint::of(vec![Atom::new("x", Rel::Le, 2)])).add_loc("l1", Constraint::truth());
        a1.add_edge(Edge::new(
            "l0",
            "l1",
            Constraint::of(vec![Atom::new("x", Rel::Ge, 1)]),
            Action::Local("a".into()),
            &["x"],
        ));
        let mut a2 = Automaton::new("A2", &["y"], "q0");
        a2.add_loc("q0", Constraint::truth()).add_loc("q1", Constraint::truth());
        a2.add_edge(Edge::new(
            "q0",
            "q1",
            Constraint::of(vec![Atom::new("x", Rel::Le, 2), Atom::new("y", Rel::Le, 3)]),
            Action::Local("b".into()),
            &[],
        ));
        Network::new(a1, a2)
    }

    #[test]
    fn shared_read_set_is_reported() {
        let r = validate_network(&fig1());
        assert!(r.is_valid(), "{:?}", r.violations);
        assert_eq!(r.shared_reads, ["x".to_string()].into_iter().collect());
    }

    #[test]
    fn swapped_components_violate_read_direction() {
        let n = fig1();
        let swapped = Network::new(n.a2().clone(), n.a1().clone());
        let r = validate_network(&swapped);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::A1ReadsC2 { .. })));
    }

    #[test]
    fn normalization_moves_x1_atoms_to_every_matching_edge() {
        let mut a1 = Automaton::new("A1", &["x"], "l0");
        a1.add_loc("l0", Constraint::truth()).add_loc("l1", Constraint::truth());
        a1.add_edge(Edge::new("l0", "l1", Constraint::truth(), Action::Sync("s".into()), &[]));
        a1.add_edge(Edge::new("l1", "l0", Constraint::truth(), Action::Sync("s".into()), &[]));
        let mut a2 = Automaton::new("A2", &["y"], "q0");
        a2.add_loc("q0", Constraint::truth());
        a2.add_edge(Edge::new(
            "q0",
            "q0",
            Constraint::of(vec![Atom::new("x", Rel::Le, 2), Atom::new("y", Rel::Ge, 1)]),
            Action::Sync("s".into()),
            &[],
        ));
        let n = normalize_sync_guards(&Network::new(a1, a2));
        assert_eq!(n.a2().edges[0].guard, Constraint::of(vec![Atom::new("y", Rel::Ge, 1)]));
        for e in &n.a1().edges {
            assert_eq!(e.guard, Constraint::of(vec![Atom::new("x", Rel::Le, 2)]));
        }
        assert_eq!(normalize_sync_guards(&n), n);
    }

    #[test]
    fn zeno_self_loop_is_rejected() {
        let mut a = Automaton::new("A", &["x"], "l");
        a.add_loc("l", Constraint::of(vec![Atom::new("x", Rel::Le, 1)]));
        a.add_edge(Edge::new("l", "l", Constraint::truth(), Action::Local("t".into()), &[]));
        assert!(!check_nonzeno(&a));
        let mut b = Automaton::new("B", &["x"], "l");
        b.add_loc("l", Constraint::truth());
        b.add_edge(Edge::new(
            "l",
            "l",
            Constraint::of(vec![Atom::new("x", Rel::Ge, 1)]),
            Action::Local("b".into()),
            &["x"],
        ));
        assert!(check_nonzeno(&b));
    }
}
