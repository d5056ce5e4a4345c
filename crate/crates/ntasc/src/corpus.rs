//! Seeded random networks for cross-checks.
//!
//! Each side has at most 3 locations and 2 clocks; constants are at most 3.
//! Every synchronization label appears on both sides, A1 never reads A2's
//! clocks, and A2 may read the clocks of A1.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Action, Atom, Automaton, Constraint, Edge, Network, Rel};

const RELS: [Rel; 5] = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ge, Rel::Gt];

fn guard(rng: &mut ChaCha8Rng, clocks: &[String]) -> Constraint {
    let n = if clocks.is_empty() { 0 } else { rng.gen_range(0..=2) };
    let atoms = (0..n)
        .map(|_| Atom::new(clocks.choose(rng).unwrap().clone(), *RELS.choose(rng).unwrap(), rng.gen_range(0..=3)))
        .collect();
    Constraint::of(atoms)
}

fn invariant(rng: &mut ChaCha8Rng, clocks: &[String]) -> Constraint {
    if clocks.is_empty() || !rng.gen_bool(0.3) {
        return Constraint::truth();
    }
    let rel = if rng.gen_bool(0.5) { Rel::Le } else { Rel::Lt };
    let k = rng.gen_range(if rel == Rel::Lt { 1 } else { 0 }..=3);
    Constraint::of(vec![Atom::new(clocks.choose(rng).unwrap().clone(), rel, k)])
}

struct Shape<'a> {
    name: &'a str,
    loc: &'a str,
    clock: &'a str,
    locals: &'a [&'a str],
}

fn automaton(rng: &mut ChaCha8Rng, shape: &Shape, reads: &[String], syncs: &[String]) -> Automaton {
    let clocks: Vec<String> = (0..rng.gen_range(if shape.name == "A1" { 1 } else { 0 }..=2))
        .map(|i| format!("{}{}", shape.clock, i + 1))
        .collect();
    let locs: Vec<String> = (0..rng.gen_range(1..=3)).map(|i| format!("{}{i}", shape.loc)).collect();
    let mut a = Automaton::new(shape.name, &[], &locs[0]);
    a.clocks = clocks.clone();
    let mut readable = clocks.clone();
    readable.extend(reads.iter().cloned());
    for l in &locs {
        let inv = invariant(rng, &readable);
        a.add_loc(l, inv);
    }
    let mut actions: Vec<Action> = syncs.iter().map(|s| Action::Sync(s.clone())).collect();
    for _ in 0..rng.gen_range(1..=3) {
        actions.push(match rng.gen_range(0..6) {
            0 => Action::Eps,
            1 if !syncs.is_empty() => Action::Sync(syncs.choose(rng).unwrap().clone()),
            _ => Action::Local(shape.locals.choose(rng).unwrap().to_string()),
        });
    }
    for action in actions {
        let resets: Vec<&str> = clocks.iter().filter(|_| rng.gen_bool(0.4)).map(String::as_str).collect();
        let src = locs.choose(rng).unwrap().clone();
        let dst = locs.choose(rng).unwrap().clone();
        let g = guard(rng, &readable);
        a.add_edge(Edge::new(&src, &dst, g, action, &resets));
    }
    a
}

/// One random network.
pub fn random_network(rng: &mut ChaCha8Rng) -> Network {
    let syncs: Vec<String> = (0..rng.gen_range(0..=2)).map(|i| format!("s{i}")).collect();
    let a1 = automaton(rng, &Shape { name: "A1", loc: "p", clock: "x", locals: &["d", "e"] }, &[], &syncs);
    let a2 = automaton(rng, &Shape { name: "A2", loc: "q", clock: "y", locals: &["a", "b"] }, &a1.clocks, &syncs);
    Network::new(a1, a2)
}

/// `count` networks from `seed`.
pub fn corpus(seed: u64, count: usize) -> Vec<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_network(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_network;

    #[test]
    fn generated_networks_are_valid_and_small() {
        for n in corpus(0, 200) {
            let r = validate_network(&n);
            assert!(r.is_valid(), "{:?}", r.violations);
            for a in &n.automata {
                assert!(a.locations.len() <= 3 && a.clocks.len() <= 2);
                assert!(a.edges.iter().all(|e| e.guard.atoms.iter().all(|t| t.k <= 3)));
            }
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(corpus(7, 20), corpus(7, 20));
    }
}
