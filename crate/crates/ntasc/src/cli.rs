//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use num_rational::Rational64;

use crate::bisim::{check_def_nsc, compare_networks, discrete_simulate, regions_of, SideSpec};
use crate::contextual::{build_contextual_graph, describe_witness, find_restriction, to_dot, Ctx};
use crate::corpus::random_network;
use crate::model::{normalize_sync_guards, validate_network, Network};
use crate::parser::dot::{network_to_dot, region_graph_to_dot};
use crate::parser::{parse, serialize};
use crate::regions::{automaton_alone, build_region_graph, state_set, System, DEFAULT_BUDGET};
use crate::smod::{analysis_smod, build_smod, decide_need, sad_reachable, Engine, Verdict};
use crate::synth::{synthesize, verify_no_shared_reads, SynthError};

pub const EXIT_ERROR: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineSel {
    Region,
    Zone,
    Contextual,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DotWhat {
    /// The input network.
    Network,
    /// Region graph of the whole network.
    Regions,
    /// Region graph of the first automaton alone.
    RegionsA1,
    /// Contextual graph of the second automaton.
    Contextual,
    /// The modified system used for the error-location analysis.
    Smod,
}

#[derive(Debug, Parser)]
#[command(name = "ntasc", version, about = "Decide whether a timed automaton needs to read the clocks of its partner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// State budget for every exploration.
    #[arg(long, global = true, env = "NTASC_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Grid denominator for the discrete oracle and concrete traces.
    #[arg(long, global = true)]
    pub grid: Option<i64>,
    /// Seed for random corpus generation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the verdict for a network.
    Check {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        engine: EngineSel,
    },
    /// Write the shared-clock-free network and its label map.
    Transform {
        input: PathBuf,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "region")]
        engine: EngineSel,
        /// Check the three bisimulation conditions on the output.
        #[arg(long)]
        verify: bool,
        /// Also write the output as DOT next to it.
        #[arg(long)]
        dot: bool,
    },
    /// Print a trace to the error location and a restriction witness.
    Explain { input: PathBuf },
    /// Print an intermediate artifact as DOT.
    Export {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "network")]
        dot: DotWhat,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Compare two networks; exit 0 when bisimilar, 1 when not, 2 on error.
    Bisim {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        weak: bool,
        #[arg(long)]
        enriched: bool,
    },
    /// Cross-check the engines on seeded random networks.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

/// Output of one command.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Outcome {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn err(code: i32, msg: impl std::fmt::Display) -> Outcome {
        Outcome { code, stdout: String::new(), stderr: format!("error: {msg}\n") }
    }
}

fn load(path: &Path) -> Result<Network, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn load_valid(path: &Path) -> Result<Network, String> {
    let net = load(path)?;
    let report = validate_network(&net);
    if !report.is_valid() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(format!("{}: invalid network: {}", path.display(), msgs.join("; ")));
    }
    Ok(net)
}

fn write_out(path: Option<&Path>, text: &str, out: &mut String) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            out.push_str(text);
            Ok(())
        }
    }
}

fn engine_of(sel: EngineSel) -> Engine {
    match sel {
        EngineSel::Zone => Engine::Zone,
        _ => Engine::Region,
    }
}

/// Run one command without touching the process state.
pub fn run(cli: &Cli) -> Outcome {
    let budget = cli.budget.max(1);
    match &cli.command {
        Command::Check { input, engine } => match load_valid(input) {
            Ok(net) => {
                let mut o = cmd_check(&net, *engine, budget);
                if let Some(d) = cli.grid {
                    o.stdout.push_str(&grid_report(&net, d, budget));
                }
                o
            }
            Err(e) => Outcome::err(EXIT_ERROR, e),
        },
        Command::Transform { input, output, engine, verify, dot } => match load_valid(input) {
            Ok(net) => cmd_transform(&net, input, output.as_deref(), *engine, *verify, *dot, budget),
            Err(e) => Outcome::err(EXIT_ERROR, e),
        },
        Command::Explain { input } => match load_valid(input) {
            Ok(net) => cmd_explain(&net, budget),
            Err(e) => Outcome::err(EXIT_ERROR, e),
        },
        Command::Export { input, dot, output } => match load(input) {
            Ok(net) => cmd_export(&net, *dot, output.as_deref(), budget),
            Err(e) => Outcome::err(EXIT_ERROR, e),
        },
        Command::Bisim { left, right, weak, enriched } => {
            let (l, r) = match (load(left), load(right)) {
                (Ok(l), Ok(r)) => (l, r),
                (Err(e), _) | (_, Err(e)) => return Outcome::err(2, e),
            };
            let spec = |n: Network, relabel: bool| SideSpec { network: n, a1: Some(0), relabel, enriched: *enriched };
            match compare_networks(spec(l, true), spec(r, false), *weak, budget) {
                Ok(res) => Outcome::ok(if res.bisimilar { 0 } else { 1 }, format!("{res}\n")),
                Err(e) => Outcome::err(2, e),
            }
        }
        Command::Fuzz { count } => cmd_fuzz(cli.seed, *count, budget),
    }
}

fn cmd_check(net: &Network, sel: EngineSel, budget: usize) -> Outcome {
    let mut out = String::new();
    let norm = normalize_sync_guards(net);
    let smod = analysis_smod(&norm);
    let mut answers: Vec<(&str, bool)> = Vec::new();
    let mut timed = |name: &'static str, f: &dyn Fn() -> Result<bool, String>| -> Result<(), String> {
        let t = Instant::now();
        let r = f()?;
        let _ = writeln!(
            out,
            "engine {name}: error location {} ({:.3}s)",
            if r { "reachable" } else { "unreachable" },
            t.elapsed().as_secs_f64()
        );
        answers.push((name, r));
        Ok(())
    };
    let region = || sad_reachable(&smod, Engine::Region, budget).map(|t| t.is_some()).map_err(|e| e.to_string());
    let zone = || sad_reachable(&smod, Engine::Zone, budget).map(|t| t.is_some()).map_err(|e| e.to_string());
    let ctx = || find_restriction(&norm, budget).map(|w| w.is_some()).map_err(|e| e.to_string());
    type Run<'a> = (&'static str, &'a dyn Fn() -> Result<bool, String>);
    let runs: Vec<Run> = match sel {
        EngineSel::Region => vec![("region", &region)],
        EngineSel::Zone => vec![("zone", &zone)],
        EngineSel::Contextual => vec![("contextual", &ctx)],
        EngineSel::All => vec![("region", &region), ("zone", &zone), ("contextual", &ctx)],
    };
    for (name, f) in runs {
        if let Err(e) = timed(name, f) {
            return Outcome::err(EXIT_ERROR, e);
        }
    }
    if answers.windows(2).any(|w| w[0].1 != w[1].1) {
        let detail: Vec<String> = answers.iter().map(|(n, r)| format!("{n}={r}")).collect();
        return Outcome {
            code: EXIT_ERROR,
            stdout: out,
            stderr: format!("error: engines disagree: {}\n", detail.join(", ")),
        };
    }
    let verdict = match decide_need(net, engine_of(sel), budget) {
        Ok(v) => v,
        Err(e) => return Outcome::err(EXIT_ERROR, e),
    };
    let _ = writeln!(out, "verdict: {}", verdict.name());
    match &verdict {
        Verdict::NotNeeded(s) => {
            let _ = writeln!(out, "A2 can avoid reading {}", s.a1_prime().clocks.join(", "));
        }
        Verdict::Needed(t) => {
            let _ = write!(out, "trace to the error location:\n{t}");
        }
        Verdict::Inconclusive(t, w) => {
            let _ = write!(out, "trace to the error location:\n{t}");
            if let Some(w) = w {
                let _ = write!(out, "restriction (A2 is nondeterministic):\n{}", describe_witness(&Ctx::new(&norm), w));
            }
        }
    }
    Outcome::ok(verdict.exit_code(), out)
}

/// Discrete-grid sanity check: every grid state must be region-reachable.
fn grid_report(net: &Network, den: i64, budget: usize) -> String {
    let sys = System::for_network(net);
    let horizon = sys.space.maxc.iter().map(|&k| k as i64).sum::<i64>() + 1;
    let states = match discrete_simulate(net, den.max(1), Rational64::from_integer(horizon), budget) {
        Ok(s) => s,
        Err(e) => return format!("grid 1/{den}: {e}\n"),
    };
    let reach = match build_region_graph(&sys, budget) {
        Ok(g) => state_set(&g),
        Err(e) => return format!("grid 1/{den}: {e}\n"),
    };
    let ok = regions_of(&sys, &states).is_subset(&reach);
    format!("grid 1/{den} up to t={horizon}: {} states, region-consistent: {ok}\n", states.len())
}

fn cmd_transform(
    net: &Network,
    input: &Path,
    output: Option<&Path>,
    sel: EngineSel,
    verify: bool,
    dot: bool,
    budget: usize,
) -> Outcome {
    if sel == EngineSel::Zone || sel == EngineSel::All {
        let norm = normalize_sync_guards(net);
        let smod = analysis_smod(&norm);
        match (sad_reachable(&smod, Engine::Region, budget), sad_reachable(&smod, Engine::Zone, budget)) {
            (Ok(r), Ok(z)) if r.is_some() != z.is_some() => {
                return Outcome::err(EXIT_ERROR, "region and zone engines disagree");
            }
            (Err(e), _) | (_, Err(e)) => return Outcome::err(EXIT_ERROR, e),
            _ => {}
        }
    }
    let s = match synthesize(net, budget) {
        Ok(s) => s,
        Err(SynthError::NeedDetected) => {
            return Outcome::err(1, "refusing to transform: A2 needs to read the clocks of A1 (run `ntasc explain`)");
        }
        Err(e) => return Outcome::err(EXIT_ERROR, e),
    };
    let out_path = output.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("nsc.nta"));
    let psi_path = out_path.with_file_name("psi.map");
    let mut out = String::new();
    if let Err(e) = std::fs::write(&out_path, serialize(&s.network)) {
        return Outcome::err(EXIT_ERROR, format!("{}: {e}", out_path.display()));
    }
    if let Err(e) = std::fs::write(&psi_path, s.psi_text()) {
        return Outcome::err(EXIT_ERROR, format!("{}: {e}", psi_path.display()));
    }
    let _ = writeln!(out, "wrote {} and {}", out_path.display(), psi_path.display());
    if dot {
        let p = out_path.with_extension("dot");
        if let Err(e) = std::fs::write(&p, network_to_dot(&s.network)) {
            return Outcome::err(EXIT_ERROR, format!("{}: {e}", p.display()));
        }
        let _ = writeln!(out, "wrote {}", p.display());
    }
    let _ = writeln!(out, "no shared reads: {}", verify_no_shared_reads(&s));
    if verify {
        let t = Instant::now();
        let report = match check_def_nsc(net, &s.network, budget) {
            Ok(r) => r,
            Err(e) => return Outcome::err(EXIT_ERROR, e),
        };
        for (name, r) in [
            ("global system", &report.global),
            ("first automaton", &report.first),
            ("contextual system", &report.contextual),
        ] {
            let _ = writeln!(out, "{} {name}: {r}", if r.bisimilar { "PASS" } else { "FAIL" });
        }
        let _ = writeln!(out, "verification took {:.3}s", t.elapsed().as_secs_f64());
        if !report.all_pass() {
            return Outcome { code: EXIT_ERROR, stdout: out, stderr: "error: verification failed\n".into() };
        }
    }
    Outcome::ok(0, out)
}

fn cmd_explain(net: &Network, budget: usize) -> Outcome {
    let norm = normalize_sync_guards(net);
    let trace = match sad_reachable(&analysis_smod(&norm), Engine::Region, budget) {
        Ok(t) => t,
        Err(e) => return Outcome::err(EXIT_ERROR, e),
    };
    let Some(trace) = trace else {
        return Outcome::ok(0, "no witness: ⊥ unreachable\n".into());
    };
    let mut out = String::new();
    let _ = write!(out, "trace to ⊥{}:\n{trace}", if trace.exact { "" } else { " (region samples)" });
    match find_restriction(&norm, budget) {
        Ok(Some(w)) => {
            let _ = write!(out, "restriction:\n{}", describe_witness(&Ctx::new(&norm), &w));
        }
        Ok(None) => {}
        Err(e) => return Outcome::err(EXIT_ERROR, e),
    }
    Outcome::ok(1, out)
}

fn cmd_export(net: &Network, what: DotWhat, output: Option<&Path>, budget: usize) -> Outcome {
    let text = match what {
        DotWhat::Network => Ok(network_to_dot(net)),
        DotWhat::Regions => {
            let sys = System::for_network(net);
            build_region_graph(&sys, budget).map(|g| region_graph_to_dot(&sys, &g)).map_err(|e| e.to_string())
        }
        DotWhat::RegionsA1 => match net.automata.first() {
            Some(a) => {
                let sys = automaton_alone(a);
                build_region_graph(&sys, budget).map(|g| region_graph_to_dot(&sys, &g)).map_err(|e| e.to_string())
            }
            None => {
                let sys = System::for_network(net);
                build_region_graph(&sys, budget).map(|g| region_graph_to_dot(&sys, &g)).map_err(|e| e.to_string())
            }
        },
        DotWhat::Contextual => {
            if net.automata.len() != 2 {
                Err("the contextual graph needs exactly two automata".to_string())
            } else {
                build_contextual_graph(&normalize_sync_guards(net), budget)
                    .map(|(ctx, g)| to_dot(&ctx, &g))
                    .map_err(|e| e.to_string())
            }
        }
        DotWhat::Smod => {
            if net.automata.len() != 2 {
                Err("the modified system needs exactly two automata".to_string())
            } else {
                let norm = normalize_sync_guards(net);
                match build_smod(&norm, budget) {
                    Ok(s) => Ok(network_to_dot(&s.network())),
                    Err(_) => Ok(network_to_dot(&analysis_smod(&norm).network())),
                }
            }
        }
    };
    let mut out = String::new();
    match text.and_then(|t| write_out(output, &t, &mut out)) {
        Ok(()) => Outcome::ok(0, out),
        Err(e) => Outcome::err(EXIT_ERROR, e),
    }
}

fn cmd_fuzz(seed: u64, count: usize, budget: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut mismatches = 0;
    for i in 0..count {
        let net = normalize_sync_guards(&random_network(&mut rng));
        let smod = analysis_smod(&net);
        let r = sad_reachable(&smod, Engine::Region, budget).map(|t| t.is_some());
        let z = sad_reachable(&smod, Engine::Zone, budget).map(|t| t.is_some());
        let c = find_restriction(&net, budget).map(|w| w.is_some());
        match (r, z, c) {
            (Ok(r), Ok(z), Ok(c)) if r == z && r == c => {}
            (Ok(r), Ok(z), Ok(c)) => {
                mismatches += 1;
                let _ = writeln!(out, "network {i}: region={r} zone={z} contextual={c}\n{}", serialize(&net));
            }
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                return Outcome::err(EXIT_ERROR, format!("network {i}: {e}"));
            }
        }
    }
    let _ = writeln!(out, "{count} networks, {mismatches} mismatches (seed {seed})");
    Outcome::ok(if mismatches == 0 { 0 } else { 1 }, out)
}

/// Parse arguments and run without printing.
pub fn run_args<I, T>(args: I) -> Result<Outcome, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map(|c| run(&c))
}

/// Parse arguments, run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let o = run(&cli);
    print!("{}", o.stdout);
    eprint!("{}", o.stderr);
    o.code
}
