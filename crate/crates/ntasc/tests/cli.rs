use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.nta")).display().to_string()
}

fn ntasc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ntasc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn node_count(dot: &str) -> usize {
    dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count()
}

#[test]
fn check_exit_codes_follow_verdicts() {
    for (name, code, word) in [("fig1", 0, "NOT-NEEDED"), ("fig3", 1, "NEEDED"), ("fig6", 2, "INCONCLUSIVE")] {
        let o = ntasc(&["check", &fixture(name)]);
        assert_eq!(o.status.code(), Some(code), "{name}");
        assert!(stdout(&o).contains(&format!("verdict: {word}")), "{name}");
    }
}

#[test]
fn check_prints_trace_for_needed() {
    let o = ntasc(&["check", &fixture("fig3")]);
    let out = stdout(&o);
    assert!(out.contains("trace to the error location"));
    assert!(out.contains("SAD"));
}

#[test]
fn each_engine_alone_agrees_on_fig4() {
    for engine in ["region", "zone", "contextual"] {
        assert_eq!(ntasc(&["check", "--engine", engine, &fixture("fig4")]).status.code(), Some(1), "{engine}");
    }
}

#[test]
fn missing_and_malformed_inputs_exit_3() {
    assert_eq!(ntasc(&["check", "/nonexistent/model.nta"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.nta");
    std::fs::write(&bad, "automaton A { init l; loc l; edge l -> m; }").unwrap();
    let o = ntasc(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.nta:1:"));
}

#[test]
fn exhausted_budget_is_an_error() {
    let o = ntasc(&["--budget", "3", "check", &fixture("fig7")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn transform_writes_network_and_label_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.out.nta");
    let o = ntasc(&["transform", &fixture("fig2"), "-o", out.to_str().unwrap(), "--dot"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("copy x' := x"));
    assert!(std::fs::read_to_string(dir.path().join("psi.map")).unwrap().contains("->"));
    assert!(out.with_extension("dot").exists());
    let reparsed = ntasc::parser::parse(&text).unwrap();
    assert_eq!(reparsed.automata.len(), 2);
}

#[test]
fn transform_verify_reports_three_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.nta");
    let o = ntasc(&["transform", "--verify", &fixture("fig2"), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS ")).count(), 3);
}

#[test]
fn transform_adds_scheduler_clock_for_urgent_sync() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.nta");
    assert_eq!(ntasc(&["transform", &fixture("fig7"), "-o", out.to_str().unwrap()]).status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().contains("clocks y, x', z;"));
}

#[test]
fn transform_refuses_when_clocks_are_needed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.nta");
    let o = ntasc(&["transform", &fixture("fig3"), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing"));
    assert!(!out.exists());
}

#[test]
fn explain_without_witness() {
    let o = ntasc(&["explain", &fixture("fig1")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no witness: ⊥ unreachable"));
}

#[test]
fn explain_shows_reset_after_sync() {
    let o = ntasc(&["explain", &fixture("fig2-plus-f")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("t=2 f\n  at (lf,ls,m1) x=0 x'=2 y=2"));
}

#[test]
fn explain_separates_members_at_y_two() {
    let out = stdout(&ntasc(&["explain", &fixture("fig4")]));
    assert!(out.contains("with clocks y=2"));
    assert!(out.contains("x=2, y=2)") && out.contains("x=1, y=2)"));
}

#[test]
fn export_region_graph_of_first_automaton() {
    let o = ntasc(&["export", "--dot", "regions-a1", &fixture("fig7")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(node_count(&stdout(&o)), 18);
}

#[test]
fn export_trivial_model_is_one_node() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("one.nta");
    std::fs::write(&p, "automaton A { init l; loc l; }").unwrap();
    for what in ["network", "regions"] {
        let o = ntasc(&["export", "--dot", what, p.to_str().unwrap()]);
        assert_eq!(node_count(&stdout(&o)), 1, "{what}");
    }
}

#[test]
fn export_contextual_graph_has_enriched_sync_labels() {
    let out = stdout(&ntasc(&["export", "--dot", "contextual", &fixture("fig2")]));
    assert!(out.contains("(s,ls@i2r0)"));
}

#[test]
fn bisim_exit_codes() {
    assert_eq!(ntasc(&["bisim", &fixture("fig3"), &fixture("fig3-alt")]).status.code(), Some(0));
    let o = ntasc(&["bisim", &fixture("fig1"), &fixture("fig3")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("distinguishing"));
}

#[test]
fn fuzz_small_corpus_is_clean() {
    let o = ntasc(&["--seed", "3", "fuzz", "--count", "30"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("30 networks, 0 mismatches (seed 3)"));
}
