use std::collections::BTreeSet;

use ntasc::bisim::{check_def_nsc, discrete_simulate, regions_of, weak_timed_bisim};
use ntasc::contextual::{build_contextual_graph, find_restriction};
use ntasc::corpus::corpus;
use ntasc::model::{normalize_sync_guards, sync_alphabet, validate_network, Action, Atom, Constraint, Network, Rel};
use ntasc::parser::{parse, serialize};
use ntasc::regions::{automaton_alone, build_region_graph, state_set, GraphLabel, Region, System, DEFAULT_BUDGET};
use ntasc::smod::{analysis_smod, build_a12_simple, build_smod, unpair, SModSystem};
use ntasc::synth::synthesize;
use ntasc::zones;
use num_rational::Rational64;
use proptest::prelude::*;

const ALL: [&str; 14] = [
    "fig1",
    "fig2",
    "fig2-plus-f",
    "fig3",
    "fig3-alt",
    "fig4",
    "fig4-alt",
    "fig6",
    "fig6-alt",
    "fig7",
    "fig10",
    "gadget-reachable",
    "gadget-unreachable",
    "gadget-vacuous",
];

const NOT_NEEDED: [&str; 4] = ["fig1", "fig2", "fig7", "fig10"];

fn fixture(name: &str) -> Network {
    let p = format!("{}/fixtures/{name}.nta", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn network(seed: u64) -> Network {
    corpus(seed, 1).remove(0)
}

// ---------------------------------------------------------------------------
// model and parser

#[test]
fn fixtures_round_trip_through_text() {
    for name in ALL {
        let n = fixture(name);
        assert_eq!(parse(&serialize(&n)).unwrap(), n, "{name}");
    }
}

#[test]
fn validation_accepts_fixtures_and_rejects_reads_of_the_second_clocks() {
    for name in ALL {
        let n = fixture(name);
        assert!(validate_network(&n).is_valid(), "{name}");
        let Some(y) = n.a2().clocks.first().cloned() else { continue };
        let mut bad = n.clone();
        let inv = &mut bad.automata[0].locations[0].inv;
        *inv = inv.and(&Constraint::of(vec![Atom::new(y, Rel::Le, 5)]));
        assert!(!validate_network(&bad).is_valid(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_networks_round_trip_through_text(seed in any::<u64>()) {
        let n = network(seed);
        prop_assert_eq!(parse(&serialize(&n)).unwrap(), n);
    }

    #[test]
    fn parse_never_panics_and_locates_errors(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        if let Err(e) = parse(&text) {
            prop_assert!(e.pos().line >= 1 && e.pos().col >= 1);
        }
    }

    #[test]
    fn mutated_fixture_text_never_panics(idx in 0usize..ALL.len(), cut in 0usize..400, junk in "[a-z{};<=>& 0-9]{0,8}") {
        let text = serialize(&fixture(ALL[idx]));
        let cut = cut.min(text.len());
        let _ = parse(&format!("{}{junk}{}", &text[..cut], &text[cut..]));
    }

    #[test]
    fn sync_alphabet_is_shared_and_visible(seed in any::<u64>()) {
        let n = network(seed);
        let shared: BTreeSet<String> = n.a1().alphabet().intersection(&n.a2().alphabet()).cloned().collect();
        for a in sync_alphabet(&n) {
            prop_assert!(shared.contains(&a));
            prop_assert!(a != "eps");
        }
    }

    #[test]
    fn sync_guard_normalization_is_idempotent(seed in any::<u64>()) {
        let once = normalize_sync_guards(&network(seed));
        prop_assert_eq!(normalize_sync_guards(&once), once.clone());
    }
}

// ---------------------------------------------------------------------------
// regions and zones

fn fixture_systems() -> Vec<(String, System)> {
    let mut out = Vec::new();
    for name in ALL {
        let n = fixture(name);
        out.push((name.to_string(), System::for_network(&n)));
        out.push((format!("{name} smod"), analysis_smod(&normalize_sync_guards(&n)).system()));
    }
    out
}

#[test]
fn constraint_verdicts_agree_on_three_samples_of_each_region() {
    for (name, sys) in fixture_systems() {
        let g = build_region_graph(&sys, DEFAULT_BUDGET).unwrap();
        let constraints: Vec<_> =
            sys.comps.iter().flat_map(|c| c.inv.iter().chain(c.edges.iter().map(|e| &e.guard))).collect();
        for st in &g.states {
            let samples: Vec<Vec<Rational64>> = (0..3).map(|v| st.region.sample(&sys.space, v)).collect();
            for s in &samples {
                assert_eq!(Region::of_valuation(&sys.space, s), st.region, "{name}");
            }
            for g in &constraints {
                let v = st.region.satisfies(&sys.space, g);
                for s in &samples {
                    assert_eq!(Region::of_valuation(&sys.space, s).satisfies(&sys.space, g), v, "{name}");
                }
            }
        }
    }
}

#[test]
fn successor_chains_reach_the_fixpoint_within_the_bound() {
    for (name, sys) in fixture_systems() {
        let bound: u32 = sys.space.maxc.iter().map(|m| 2 * m + 2).sum();
        for r in Region::enumerate_all(&sys.space) {
            let mut r = r;
            let mut steps = 0;
            while let Some(n) = r.time_successor(&sys.space) {
                r = n;
                steps += 1;
                assert!(steps <= bound.max(1), "{name}");
            }
        }
    }
}

#[test]
fn copy_then_reset_of_source_keeps_target_bounds() {
    let mut z = zones::Dbm::zero(2);
    z.up();
    z.constrain(1, 0, zones::bound(2, false));
    z.constrain(0, 1, zones::bound(-1, true));
    // clock indices are DBM indices minus one
    z.copy(1, 0);
    z.canonicalize();
    let (upper, lower) = (z.get(2, 0), z.get(0, 2));
    z.reset(0);
    z.canonicalize();
    assert_eq!((z.get(2, 0), z.get(0, 2)), (upper, lower));
    assert_eq!(z.get(1, 0), zones::LE_ZERO);
}

fn reachable_locations(sys: &System) -> BTreeSet<Vec<usize>> {
    let g = build_region_graph(sys, DEFAULT_BUDGET).unwrap();
    g.states.iter().map(|s| s.locs.clone()).collect()
}

fn all_location_vectors(sys: &System) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for c in &sys.comps {
        out = out.into_iter().flat_map(|v| (0..c.locs.len()).map(move |l| [v.clone(), vec![l]].concat())).collect();
    }
    out
}

fn zones_match_regions(sys: &System) -> Result<(), String> {
    let reach = reachable_locations(sys);
    for locs in all_location_vectors(sys) {
        let z = zones::reachable(sys, DEFAULT_BUDGET, &|l| l == locs.as_slice()).unwrap();
        if z != reach.contains(&locs) {
            return Err(format!("{locs:?}: zone {z}, region {}", !z));
        }
    }
    Ok(())
}

#[test]
fn zone_and_region_reach_the_same_locations_on_fixtures() {
    for (name, sys) in fixture_systems() {
        zones_match_regions(&sys).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn coarser_and_finer_extrapolation_agree_on_error_reachability() {
    for name in ALL {
        let smod = analysis_smod(&normalize_sync_guards(&fixture(name)));
        let sys = smod.system();
        let mut finer = sys.clone();
        finer.space.maxc.iter_mut().for_each(|m| *m += 2);
        let sad = |s: &System| zones::reachable(s, DEFAULT_BUDGET, &|l| SModSystem::is_sad(s, l)).unwrap();
        assert_eq!(sad(&sys), sad(&finer), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn zone_and_region_reach_the_same_locations(seed in any::<u64>()) {
        let n = normalize_sync_guards(&network(seed));
        prop_assert_eq!(zones_match_regions(&System::for_network(&n)), Ok(()));
        prop_assert_eq!(zones_match_regions(&analysis_smod(&n).system()), Ok(()));
    }
}

// ---------------------------------------------------------------------------
// contextual graph and S_mod

/// `(l1, l2, region id over X1 ++ Y)` of every member of every contextual state.
fn contextual_members(n: &Network) -> BTreeSet<(usize, usize, String)> {
    let (ctx, g) = build_contextual_graph(n, DEFAULT_BUDGET).unwrap();
    let idx: Vec<usize> = (0..n.a1().clocks.len() + n.a2().clocks.len()).collect();
    let sp = ctx.space.subspace(&idx);
    let mut out = BTreeSet::new();
    for st in &g.states {
        for (l1, r) in &st.members {
            out.insert((*l1, st.l2, r.project(&idx).id(&sp)));
        }
    }
    out
}

fn check_members_are_reachable(n: &Network) -> Result<(), String> {
    let n = normalize_sync_guards(n);
    let sys = System::for_network(&n);
    let joint: BTreeSet<(usize, usize, String)> = build_region_graph(&sys, DEFAULT_BUDGET)
        .unwrap()
        .states
        .iter()
        .map(|s| (s.locs[0], s.locs[1], s.region.id(&sys.space)))
        .collect();
    match contextual_members(&n).difference(&joint).next() {
        Some(m) => Err(format!("member {m:?} not reachable")),
        None => Ok(()),
    }
}

#[test]
fn every_member_is_a_reachable_joint_state_on_fixtures() {
    for name in ALL {
        check_members_are_reachable(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn every_member_is_a_reachable_joint_state(seed in any::<u64>()) {
        prop_assert_eq!(check_members_are_reachable(&network(seed)), Ok(()));
    }
}

/// Every state of the analysis system off the error location pairs a member
/// with its A2 location, both for A'1 and for the mirror.
fn check_analysis_members(n: &Network) -> Result<(), String> {
    let n = normalize_sync_guards(n);
    let members = contextual_members(&n);
    let sys = analysis_smod(&n).system();
    let (n1, n2) = (n.a1().clocks.len(), n.a2().clocks.len());
    // host order: A'1 clocks, primed mirror clocks, A2 clocks
    let real: Vec<usize> = (0..n1).chain(2 * n1..2 * n1 + n2).collect();
    let mirrored: Vec<usize> = (n1..2 * n1 + n2).collect();
    for st in &build_region_graph(&sys, DEFAULT_BUDGET).unwrap().states {
        let Some(l2) = n.a2().loc_index(&sys.comps[2].locs[st.locs[2]]) else { continue };
        let a = (st.locs[0], l2, st.region.project(&real).id(&sys.space.subspace(&real)));
        let b = (st.locs[1], l2, st.region.project(&mirrored).id(&sys.space.subspace(&mirrored)));
        if !members.contains(&a) {
            return Err(format!("A'1 state {a:?}"));
        }
        if !members.contains(&b) {
            return Err(format!("mirrored state {b:?}"));
        }
    }
    Ok(())
}

fn has_restriction(n: &Network) -> bool {
    find_restriction(&normalize_sync_guards(n), DEFAULT_BUDGET).unwrap().is_some()
}

#[test]
fn analysis_states_are_members_without_restriction() {
    for name in ALL.into_iter().filter(|n| !has_restriction(&fixture(n))) {
        check_analysis_members(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn analysis_states_are_members_on_random_networks(seed in any::<u64>()) {
        let n = network(seed);
        if !has_restriction(&n) {
            prop_assert_eq!(check_analysis_members(&n), Ok(()));
        }
    }
}

#[test]
fn plain_mirror_refuses_urgent_synchronization() {
    for name in ["fig7", "fig10"] {
        assert!(build_a12_simple(&normalize_sync_guards(&fixture(name))).is_err(), "{name}");
    }
    assert!(build_a12_simple(&fixture("fig2")).is_ok());
}

#[test]
fn assembled_systems_have_no_deadlock() {
    for name in NOT_NEEDED {
        let n = normalize_sync_guards(&fixture(name));
        let sys = build_smod(&n, DEFAULT_BUDGET).unwrap().system();
        let g = build_region_graph(&sys, DEFAULT_BUDGET).unwrap();
        let mut out = vec![0usize; g.states.len()];
        for (s, _, _) in &g.edges {
            out[*s] += 1;
        }
        assert!(out.iter().all(|&k| k > 0), "{name}");
    }
}

#[test]
fn restriction_iff_zone_engine_reaches_error_on_fixtures() {
    for name in ALL {
        let n = normalize_sync_guards(&fixture(name));
        let has = find_restriction(&n, DEFAULT_BUDGET).unwrap().is_some();
        let sys = analysis_smod(&n).system();
        let reach = zones::reachable(&sys, DEFAULT_BUDGET, &|l| SModSystem::is_sad(&sys, l)).unwrap();
        assert_eq!(has, reach, "{name}");
    }
}

// ---------------------------------------------------------------------------
// synthesis and bisimulation

#[test]
fn synthesis_keeps_local_alphabets() {
    for name in NOT_NEEDED {
        let n = fixture(name);
        let s = synthesize(&n, DEFAULT_BUDGET).unwrap();
        assert_eq!(s.a1_prime().local_labels(), n.a1().local_labels(), "{name}");
        assert_eq!(s.a2_prime().local_labels(), n.a2().local_labels(), "{name}");
    }
}

/// `(label, A1 location @ X1 region id)` of every synchronization in the joint region graph.
fn enriched_sync_labels(n: &Network, relabel: bool) -> BTreeSet<(String, String)> {
    let sys = System::for_network(n);
    let x1: Vec<usize> = (0..n.a1().clocks.len()).collect();
    let sp = sys.space.subspace(&x1);
    let g = build_region_graph(&sys, DEFAULT_BUDGET).unwrap();
    let mut out = BTreeSet::new();
    for (_, t, l) in &g.edges {
        if let GraphLabel::Step { action: Action::Sync(a), .. } = l {
            let st = &g.states[*t];
            let a = if relabel { unpair(a).to_string() } else { a.clone() };
            out.insert((a, format!("{}@{}", sys.comps[0].locs[st.locs[0]], st.region.project(&x1).id(&sp))));
        }
    }
    out
}

#[test]
fn relabeled_sync_labels_match_the_original() {
    for name in NOT_NEEDED {
        let n = fixture(name);
        let s = synthesize(&n, DEFAULT_BUDGET).unwrap();
        assert_eq!(enriched_sync_labels(&s.network, true), enriched_sync_labels(&n, false), "{name}");
    }
}

#[test]
fn joint_bisimulation_states_are_bounded_by_the_product() {
    for (l, r) in [("fig3", "fig3-alt"), ("fig4", "fig4-alt"), ("fig6", "fig6-alt"), ("fig1", "fig1")] {
        let (a, b) = (fixture(l), fixture(r));
        let res = weak_timed_bisim(&a, &b, DEFAULT_BUDGET).unwrap();
        let size = |n: &Network| build_region_graph(&System::for_network(n), DEFAULT_BUDGET).unwrap().states.len();
        assert!(res.states <= size(&a) * size(&b), "{l} vs {r}");
    }
}

#[test]
fn synthesized_networks_pass_all_checks() {
    for name in NOT_NEEDED {
        let n = fixture(name);
        let s = synthesize(&n, DEFAULT_BUDGET).unwrap();
        assert!(check_def_nsc(&n, &s.network, DEFAULT_BUDGET).unwrap().all_pass(), "{name}");
    }
}

#[test]
fn grid_states_are_region_reachable_on_all_fixtures() {
    for name in ALL {
        let n = fixture(name);
        let sys = System::for_network(&n);
        let states = discrete_simulate(&n, 2, Rational64::from_integer(5), DEFAULT_BUDGET).unwrap();
        let reach = state_set(&build_region_graph(&sys, DEFAULT_BUDGET).unwrap());
        assert!(regions_of(&sys, &states).is_subset(&reach), "{name}");
    }
}

#[test]
fn first_automaton_alone_has_eighteen_regions_in_fig7() {
    let g = build_region_graph(&automaton_alone(fixture("fig7").a1()), DEFAULT_BUDGET).unwrap();
    assert_eq!(g.states.len(), 18);
    let locs: BTreeSet<usize> = g.states.iter().map(|s| s.locs[0]).collect();
    assert_eq!(locs.len(), fixture("fig7").a1().locations.len());
}
