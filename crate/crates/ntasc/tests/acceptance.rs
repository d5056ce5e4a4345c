//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any FAIL.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use ntasc::bisim::{check_def_nsc, check_distrib};
use ntasc::cli::run_args;
use ntasc::contextual::find_restriction;
use ntasc::corpus::corpus;
use ntasc::model::{normalize_sync_guards, Network};
use ntasc::parser::parse;
use ntasc::regions::{automaton_alone, build_region_graph, ClockSpace, Region, DEFAULT_BUDGET};
use ntasc::smod::{
    analysis_smod, build_smod, decide_need, sad_reachable, Engine, MirrorKind, Verdict, FINAL_REGION, SAD,
};
use ntasc::synth::{synthesize, verify_no_shared_reads};
use num_rational::Rational64;

const FIXTURE_LIMIT: Duration = Duration::from_secs(5);
const CORPUS_LIMIT: Duration = Duration::from_secs(600);
const VERIFY_LIMIT: Duration = Duration::from_secs(60);
const CORPUS_SEED: u64 = 0;
const CORPUS_SIZE: usize = 500;

const FIXTURES: [&str; 8] = ["fig1", "fig2", "fig3", "fig4", "fig6", "fig7", "fig10", "fig2-plus-f"];

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.nta"))
}

fn fixture(name: &str) -> Network {
    parse(&std::fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed<T>(limit: Duration, what: &str, f: impl FnOnce() -> T) -> Result<T, String> {
    let t = Instant::now();
    let v = f();
    let el = t.elapsed();
    ensure(el < limit, format!("{what} took {el:?}, limit {limit:?}"))?;
    Ok(v)
}

fn fixture_verdicts() -> Check {
    let want = [
        ("fig1", "NOT-NEEDED"),
        ("fig2", "NOT-NEEDED"),
        ("fig3", "NEEDED"),
        ("fig4", "NEEDED"),
        ("fig6", "INCONCLUSIVE"),
        ("fig7", "NOT-NEEDED"),
        ("fig10", "NOT-NEEDED"),
        ("fig2-plus-f", "NEEDED"),
    ];
    for (name, w) in want {
        let v = timed(FIXTURE_LIMIT, name, || decide_need(&fixture(name), Engine::Region, DEFAULT_BUDGET))?
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(v.name() == w, format!("{name}: got {}, want {w}", v.name()))?;
        if name == "fig2-plus-f" {
            let Verdict::Needed(t) = v else { unreachable!() };
            let last = t.steps.len() - 1;
            let (x, xp) = (t.value(last, "x").unwrap(), t.value(last, "x'").unwrap());
            ensure(t.steps[last].label.ends_with(SAD), "trace does not end in the error location")?;
            ensure(
                x == Rational64::from_integer(0) && xp == Rational64::from_integer(2),
                format!("last step x={x} x'={xp}"),
            )?;
            ensure(x < Rational64::from_integer(1) && xp >= Rational64::from_integer(1), "shared atom not violated")?;
        }
    }
    Ok("8 fixtures; fig2-plus-f ends with x=0, x'=2".into())
}

fn cross_check_networks() -> Vec<(String, Network)> {
    let mut v: Vec<(String, Network)> = FIXTURES.iter().map(|n| (n.to_string(), fixture(n))).collect();
    v.extend(corpus(CORPUS_SEED, CORPUS_SIZE).into_iter().enumerate().map(|(i, n)| (format!("corpus #{i}"), n)));
    v
}

fn sad_iff_restriction() -> Check {
    let nets = cross_check_networks();
    let n = nets.len();
    let mismatches = timed(CORPUS_LIMIT, "cross-check", || {
        let mut bad = Vec::new();
        for (name, net) in nets {
            let net = normalize_sync_guards(&net);
            let sad = sad_reachable(&analysis_smod(&net), Engine::Region, DEFAULT_BUDGET).map(|t| t.is_some());
            let restr = find_restriction(&net, DEFAULT_BUDGET).map(|w| w.is_some());
            match (sad, restr) {
                (Ok(a), Ok(b)) if a == b => {}
                (a, b) => bad.push(format!("{name}: sad {a:?} restriction {b:?}")),
            }
        }
        bad
    })?;
    ensure(mismatches.is_empty(), mismatches.join("; "))?;
    Ok(format!("{n} networks, 0 mismatches"))
}

fn transform_verifies() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in ["fig1", "fig2", "fig7", "fig10"] {
        let out = dir.path().join(format!("{name}.out.nta"));
        let input = fixture_path(name);
        let args = ["ntasc", "transform", "--verify", input.to_str().unwrap(), "-o", out.to_str().unwrap()];
        let o = timed(VERIFY_LIMIT, name, || run_args(args))?.map_err(|e| e.to_string())?;
        ensure(o.code == 0, format!("{name}: exit {} {}", o.code, o.stderr))?;
        let passes = o.stdout.lines().filter(|l| l.starts_with("PASS ")).count();
        ensure(passes == 3, format!("{name}: {passes} of 3 conditions pass"))?;
    }
    Ok("fig1, fig2, fig7, fig10 pass all three conditions".into())
}

fn distribution_both_ways() -> Check {
    let mut holds = Vec::new();
    for name in FIXTURES {
        let net = normalize_sync_guards(&fixture(name));
        if find_restriction(&net, DEFAULT_BUDGET).map_err(|e| e.to_string())?.is_none() {
            let r = check_distrib(&net, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            ensure(r.bisimilar, format!("{name}: {r}"))?;
            holds.push(name);
        }
    }
    for name in ["fig3", "fig4"] {
        let r = check_distrib(&fixture(name), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        ensure(!r.bisimilar && !r.distinguishing.is_empty(), format!("{name}: {r}"))?;
    }
    Ok(format!("holds on {}; fails on fig3, fig4", holds.join(", ")))
}

fn nondeterministic_counterexample() -> Check {
    let (orig, alt) = (fixture("fig6"), fixture("fig6-alt"));
    let r = check_def_nsc(&orig, &alt, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(r.all_pass(), format!("{} / {} / {}", r.global, r.first, r.contextual))?;
    let w = find_restriction(&normalize_sync_guards(&orig), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(w.is_some(), "no restriction witness on fig6")?;
    Ok("fig6-alt passes all three conditions; fig6 has a restriction".into())
}

fn structural_outputs() -> Check {
    let s = synthesize(&fixture("fig2"), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(verify_no_shared_reads(&s), "fig2: shared reads left")?;
    let a2 = s.a2_prime();
    ensure(
        a2.edges.iter().filter(|e| e.action.is_sync()).all(|e| !e.copies.is_empty()),
        "fig2: sync edge without copy",
    )?;

    let s = synthesize(&fixture("fig7"), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let a2 = s.a2_prime();
    ensure(verify_no_shared_reads(&s) && a2.clocks.iter().any(|c| c == "z"), "fig7: no fresh clock z")?;
    ensure(a2.inv(&a2.init).to_string().contains("z <= 1"), "fig7: initial invariant lacks z <= 1")?;
    let forced = a2
        .edges
        .iter()
        .any(|e| e.src == a2.init && e.guard.to_string() == "z == 1" && e.resets.contains(&"z".to_string()));
    ensure(forced, "fig7: no edge forced at z == 1")?;

    let net = fixture("fig10");
    let smod = build_smod(&net, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(smod.kind == MirrorKind::Case2, "fig10: not the final-region construction")?;
    ensure(
        smod.a12.edges.iter().any(|e| e.action.to_string().starts_with(FINAL_REGION)),
        "fig10: no final_region edge",
    )?;
    let dup_e = smod.a2mod.edges.iter().find(|e| e.src.ends_with("@R1") && e.action.to_string() == "e");
    ensure(dup_e.is_some_and(|e| e.guard.is_true()), "fig10: duplicated e-guard not folded")?;
    let mut dup_bad = smod.a2mod.edges.iter().filter(|e| e.src.ends_with("@R1") && e.dst == SAD);
    ensure(
        dup_bad.all(|e| !e.guard.clocks().iter().any(|c| c.ends_with('\''))),
        "fig10: primed clock left in folded tier",
    )?;
    let s = synthesize(&net, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(verify_no_shared_reads(&s), "fig10: shared reads left")?;
    Ok("fig2 copies, fig7 z schedule, fig10 final_region tier".into())
}

fn region_counts() -> Check {
    for m in 0..=4u32 {
        let sp = ClockSpace::new(vec!["x".into()], vec![m]);
        let n = Region::enumerate_all(&sp).len() as u32;
        ensure(n == 2 * m + 2, format!("m={m}: {n} regions"))?;
    }
    let sys = automaton_alone(fixture("fig7").a1());
    let g = build_region_graph(&sys, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(g.states.len() == 18, format!("fig7 A1 region graph has {} states", g.states.len()))?;
    Ok("2m+2 for m in 0..=4; fig7 A1 has 18 region states".into())
}

fn engines_agree() -> Check {
    let nets = cross_check_networks();
    let n = nets.len();
    let mut bad = Vec::new();
    for (name, net) in nets {
        let s = analysis_smod(&normalize_sync_guards(&net));
        let r = sad_reachable(&s, Engine::Region, DEFAULT_BUDGET).map(|t| t.is_some());
        let z = sad_reachable(&s, Engine::Zone, DEFAULT_BUDGET).map(|t| t.is_some());
        if r != z {
            bad.push(format!("{name}: region {r:?} zone {z:?}"));
        }
    }
    ensure(bad.is_empty(), bad.join("; "))?;
    Ok(format!("{n} networks agree"))
}

fn reduction_gadgets() -> Check {
    for (name, want) in
        [("gadget-reachable", "NEEDED"), ("gadget-unreachable", "NOT-NEEDED"), ("gadget-vacuous", "NEEDED")]
    {
        let v = timed(FIXTURE_LIMIT, name, || decide_need(&fixture(name), Engine::Region, DEFAULT_BUDGET))?
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(v.name() == want, format!("{name}: got {}, want {want}", v.name()))?;
    }
    Ok("NEEDED exactly when the target location is reachable".into())
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 9] = [
        ("fixture verdicts", fixture_verdicts),
        ("error reachability iff restriction", sad_iff_restriction),
        ("transform --verify", transform_verifies),
        ("distribution both directions", distribution_both_ways),
        ("nondeterministic counterexample", nondeterministic_counterexample),
        ("structural outputs", structural_outputs),
        ("region counts", region_counts),
        ("region and zone agreement", engines_agree),
        ("reduction gadgets", reduction_gadgets),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match f() {
            Ok(msg) => println!("PASS {} {name}: {msg} ({:.2}s)", i + 1, t.elapsed().as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
