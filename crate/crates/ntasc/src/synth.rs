//! Synthesis of a network without shared clocks: `A'1 ∥ A'2` with
//! `A'2 = A12 × A2mod` minus the error location, plus the label map ψ.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;

use thiserror::Error;

use crate::model::{max_constants, normalize_sync_guards, Action, Automaton, Constraint, Edge, Location, Network};
use crate::regions::{build_region_graph, CConstraint, RegionError, System};
use crate::smod::{
    analysis_smod, build_smod, pair_label, sad_reachable, unpair, Engine, MirrorKind, SModSystem, SmodError,
    FINAL_REGION, SAD,
};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("A2 needs to read the clocks of A1 (the error location is reachable)")]
    NeedDetected,
    #[error(transparent)]
    Smod(#[from] SmodError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// One ψ entry: `(pair, region) -> (label, region)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PsiEntry {
    pub pair: String,
    /// `ℓ@regionid` of the A1 state reached by the synchronization.
    pub state: String,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct SynthesizedNetwork {
    /// `[A'1, A'2]`.
    pub network: Network,
    pub psi: Vec<PsiEntry>,
    pub kind: MirrorKind,
    /// A1 clock → primed copy.
    pub primes: BTreeMap<String, String>,
    pub z: Option<String>,
}

impl SynthesizedNetwork {
    pub fn a1_prime(&self) -> &Automaton {
        self.network.a1()
    }

    pub fn a2_prime(&self) -> &Automaton {
        self.network.a2()
    }

    /// The `psi.map` sidecar, one mapping per line.
    pub fn psi_text(&self) -> String {
        let mut s = String::new();
        for p in &self.psi {
            let _ = writeln!(s, "({},{}) -> ({},{})", p.pair, p.state, p.label, p.state);
        }
        s
    }
}

/// ψ on a single label: pair labels map to their original label.
pub fn psi_label(label: &str) -> &str {
    unpair(label)
}

fn product_name(a: &str, b: &str) -> String {
    format!("{a}.{b}")
}

/// Reachable explicit product `A12 × A2mod` without the error location;
/// `final_region` synchronizations become silent.
pub fn product(a12: &Automaton, a2mod: &Automaton, name: &str) -> Automaton {
    let shared: BTreeSet<String> = a12.sync_labels().intersection(&a2mod.sync_labels()).cloned().collect();
    let mut out = Automaton {
        name: name.to_string(),
        clocks: a2mod.clocks.iter().chain(&a12.clocks).cloned().collect(),
        init: product_name(&a12.init, &a2mod.init),
        locations: Vec::new(),
        edges: Vec::new(),
    };
    let mut seen: HashMap<(String, String), ()> = HashMap::new();
    let mut queue = VecDeque::from([(a12.init.clone(), a2mod.init.clone())]);
    seen.insert((a12.init.clone(), a2mod.init.clone()), ());
    let joint = |e1: &Edge, e2: &Edge, action: Action| Edge {
        src: product_name(&e1.src, &e2.src),
        dst: product_name(&e1.dst, &e2.dst),
        guard: e1.guard.and(&e2.guard),
        action,
        resets: e1.resets.iter().chain(&e2.resets).cloned().collect(),
        copies: e1.copies.iter().chain(&e2.copies).cloned().collect(),
    };
    while let Some((p, q)) = queue.pop_front() {
        out.locations.push(Location { name: product_name(&p, &q), inv: a12.inv(&p).and(a2mod.inv(&q)) });
        let mut edges = Vec::new();
        for e in a12.edges.iter().filter(|e| e.src == p) {
            match &e.action {
                Action::Sync(l) if shared.contains(l) => {
                    for f in a2mod.edges.iter().filter(|f| f.src == q && f.dst != SAD && f.action == e.action) {
                        let action = if l.starts_with(FINAL_REGION) { Action::Eps } else { e.action.clone() };
                        edges.push(joint(e, f, action));
                    }
                }
                _ => edges.push(Edge { src: product_name(&p, &q), dst: product_name(&e.dst, &q), ..e.clone() }),
            }
        }
        for f in a2mod.edges.iter().filter(|f| f.src == q && f.dst != SAD) {
            if matches!(&f.action, Action::Sync(l) if shared.contains(l)) {
                continue;
            }
            edges.push(Edge { src: product_name(&p, &q), dst: product_name(&p, &f.dst), ..f.clone() });
        }
        out.edges.extend(edges);
        // successors, computed from the component edges to avoid splitting names
        for e in a12.edges.iter().filter(|e| e.src == p) {
            let targets: Vec<(String, String)> = match &e.action {
                Action::Sync(l) if shared.contains(l) => a2mod
                    .edges
                    .iter()
                    .filter(|f| f.src == q && f.dst != SAD && f.action == e.action)
                    .map(|f| (e.dst.clone(), f.dst.clone()))
                    .collect(),
                _ => vec![(e.dst.clone(), q.clone())],
            };
            for t in targets {
                if seen.insert(t.clone(), ()).is_none() {
                    queue.push_back(t);
                }
            }
        }
        for f in a2mod.edges.iter().filter(|f| f.src == q && f.dst != SAD) {
            if matches!(&f.action, Action::Sync(l) if shared.contains(l)) {
                continue;
            }
            let t = (p.clone(), f.dst.clone());
            if seen.insert(t.clone(), ()).is_none() {
                queue.push_back(t);
            }
        }
    }
    out
}

/// Drop primed atoms that are constant over the reachable regions of their
/// edge's source location; drop edges that can never be enabled.
pub fn simplify_guards(net: &mut Network, primed: &BTreeSet<String>) -> Result<(), RegionError> {
    let sys = System::for_network(net);
    let g = build_region_graph(&sys, crate::regions::DEFAULT_BUDGET)?;
    let sp = sys.space.clone();
    let index = |n: &str| sp.index(n).expect("known clock");
    let mut at: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, st) in g.states.iter().enumerate() {
        at.entry(st.locs[1]).or_default().push(i);
    }
    let a2 = &net.automata[1];
    let loc = |n: &str| a2.loc_index(n).expect("location");
    let mut keep = Vec::new();
    for e in &a2.edges {
        let states = at.get(&loc(&e.src)).cloned().unwrap_or_default();
        let mut guard = e.guard.clone();
        let mut dead = false;
        let mut i = 0;
        while i < guard.atoms.len() {
            if !primed.contains(&guard.atoms[i].clock) {
                i += 1;
                continue;
            }
            let mut rest = guard.clone();
            let atom = rest.atoms.remove(i);
            let crest = CConstraint::compile(&rest, &index);
            let catom = CConstraint::compile(&Constraint::of(vec![atom]), &index);
            let holding: Vec<bool> = states
                .iter()
                .filter(|&&s| g.states[s].region.satisfies(&sp, &crest))
                .map(|&s| g.states[s].region.satisfies(&sp, &catom))
                .collect();
            if holding.is_empty() {
                dead = true;
                break;
            } else if holding.iter().all(|&b| b) {
                guard = rest;
            } else if holding.iter().all(|&b| !b) {
                dead = true;
                break;
            } else {
                i += 1;
            }
        }
        if !dead {
            keep.push(Edge { guard, ..e.clone() });
        }
    }
    net.automata[1].edges = keep;
    Ok(())
}

/// ψ entries for every A1 synchronization target over the network's constants.
pub fn psi_entries(net: &Network) -> Result<Vec<PsiEntry>, RegionError> {
    let sys = System::new(std::slice::from_ref(net.a1()), &max_constants(net));
    let g = build_region_graph(&sys, crate::regions::DEFAULT_BUDGET)?;
    let mut out = BTreeSet::new();
    for (_, t, l) in &g.edges {
        if let crate::regions::GraphLabel::Step { action: Action::Sync(a), .. } = l {
            let st = &g.states[*t];
            let loc = &sys.comps[0].locs[st.locs[0]];
            out.insert(PsiEntry {
                pair: pair_label(a, loc),
                state: format!("{loc}@{}", st.region.id(&sys.space)),
                label: a.clone(),
            });
        }
    }
    Ok(out.into_iter().collect())
}

/// Build `A'1 ∥ A'2`; fails with `NeedDetected` when the error location is reachable.
pub fn synthesize(net: &Network, budget: usize) -> Result<SynthesizedNetwork, SynthError> {
    let net = normalize_sync_guards(net);
    if sad_reachable(&analysis_smod(&net), Engine::Region, budget)?.is_some() {
        return Err(SynthError::NeedDetected);
    }
    let smod = build_smod(&net, budget)?;
    Ok(assemble(&net, &smod)?)
}

/// Materialize the synthesized network from an assembled `S_mod`.
pub fn assemble(net: &Network, smod: &SModSystem) -> Result<SynthesizedNetwork, RegionError> {
    let a2p = product(&smod.a12, &smod.a2mod, &format!("{}'", net.a2().name));
    let mut a1p = smod.a1_prime.clone();
    a1p.name = format!("{}'", net.a1().name);
    let mut out = Network { automata: vec![a1p, a2p], synthesized: true };
    let primed: BTreeSet<String> = smod.primes.values().cloned().collect();
    simplify_guards(&mut out, &primed)?;
    Ok(SynthesizedNetwork {
        network: out,
        psi: psi_entries(net)?,
        kind: smod.kind,
        primes: smod.primes.clone(),
        z: smod.z.clone(),
    })
}

/// No guard or invariant of A'2 reads an A1 clock, and A'1 reads only its own clocks.
pub fn verify_no_shared_reads(s: &SynthesizedNetwork) -> bool {
    let x1: BTreeSet<&str> = s.a1_prime().clocks.iter().map(|c| c.as_str()).collect();
    let reads = |a: &Automaton| -> BTreeSet<String> {
        let mut r: BTreeSet<String> = BTreeSet::new();
        for l in &a.locations {
            r.extend(l.inv.clocks().into_iter().map(|c| c.to_string()));
        }
        for e in &a.edges {
            r.extend(e.guard.clocks().into_iter().map(|c| c.to_string()));
        }
        r
    };
    let a2_ok = reads(s.a2_prime()).iter().all(|c| !x1.contains(c.as_str()));
    let a1_ok = reads(s.a1_prime()).iter().all(|c| x1.contains(c.as_str()));
    a2_ok && a1_ok
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
    fn fig2_synthesis_copies_and_reads_no_shared_clock() {
        let s = synthesize(&fixture("fig2"), DEFAULT_BUDGET).unwrap();
        assert!(verify_no_shared_reads(&s));
        assert!(s.a2_prime().edges.iter().filter(|e| e.action.is_sync()).all(|e| !e.copies.is_empty()));
        assert!(s.psi_text().contains("(s@ls,ls@i2r0) -> (s,ls@i2r0)"));
    }

    #[test]
    fn fig1_guard_on_mirrored_clock_simplifies_away() {
        let s = synthesize(&fixture("fig1"), DEFAULT_BUDGET).unwrap();
        for e in s.a2_prime().edges.iter().filter(|e| e.action.to_string() == "b") {
            assert_eq!(e.guard.to_string(), "y <= 3");
        }
    }

    #[test]
    fn needed_networks_are_refused() {
        assert_eq!(synthesize(&fixture("fig3"), DEFAULT_BUDGET).unwrap_err(), SynthError::NeedDetected);
    }

    #[test]
    fn leftover_shared_atom_is_detected() {
        let mut s = synthesize(&fixture("fig2"), DEFAULT_BUDGET).unwrap();
        let a2 = &mut s.network.automata[1];
        a2.edges[0].guard =
            a2.edges[0].guard.and(&Constraint::of(vec![crate::model::Atom::new("x", crate::model::Rel::Le, 1)]));
        assert!(!verify_no_shared_reads(&s));
    }

    #[test]
    fn urgent_fixtures_synthesize_without_shared_reads() {
        for name in ["fig7", "fig10"] {
            let s = synthesize(&fixture(name), DEFAULT_BUDGET).unwrap();
            assert!(verify_no_shared_reads(&s), "{name}");
            assert!(s.a2_prime().clocks.contains(&"z".to_string()));
        }
    }
}
