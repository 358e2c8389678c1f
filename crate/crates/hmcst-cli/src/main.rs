//! `hmcst` — command-line front end for the lock model.
//!
//! Four subcommands: `check-nfa` runs the structural graph properties over
//! the cell transition tables, `explore` exhaustively enumerates a preset and
//! reports counters plus edge coverage, `export` renders the tables as DOT
//! text, and `replay` re-executes a recorded schedule with every runtime
//! check re-armed.
//!
//! Exit codes are a stable contract: 0 pass, 1 property violation (or a
//! coverage shortfall on an unmodified preset), 2 usage or internal error,
//! 3 state-cap hit. Every invocation ends with exactly one run manifest;
//! with `--no-timing` the full output is byte-deterministic.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use hmcst_model::explore::{explore, ExplorationReport};
use hmcst_model::nfa::{all_nfas, next_cell, nonroot_status, root_status, Nfa, Verdict};
use hmcst_model::protocol::Engine;
use hmcst_model::topology::{Config, Preset};
use hmcst_model::trace;
use hmcst_model::ModelError;

#[derive(Parser)]
#[command(
    name = "hmcst",
    version,
    about = "Exhaustive model checker for a hierarchical timeout-capable queue lock",
    max_term_width = 100
)]
struct Cli {
    /// Omit timing lines so repeated runs produce byte-identical reports.
    #[arg(long, global = true)]
    no_timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural properties of the cell transition tables.
    CheckNfa {
        /// Which table(s) to check.
        #[arg(value_enum)]
        which: WhichNfa,
    },
    /// Exhaustively explore a preset; report counters and edge coverage.
    Explore {
        /// Built-in topology to explore.
        #[arg(value_enum)]
        preset: PresetArg,
        /// Acquisition rounds for the first thread (the others keep their
        /// preset value). Overriding this turns coverage shortfalls into
        /// warnings: reduced configs are expected to miss edges.
        #[arg(long)]
        rounds: Option<u8>,
        /// Cohort handoffs allowed before a release must cross levels.
        /// Overriding this also downgrades coverage shortfalls to warnings.
        #[arg(long)]
        passing_threshold: Option<u8>,
        /// Abort (exit 3) after visiting this many states.
        #[arg(long)]
        state_cap: Option<u64>,
        /// Where to write the first counterexample schedule on violation.
        #[arg(long, default_value = "violation.trace")]
        trace_out: PathBuf,
    },
    /// Render cell transition tables as DOT graph text.
    Export {
        /// Which table(s) to render.
        #[arg(value_enum)]
        which: WhichNfa,
        /// Directory to write one .dot file per table into (default: print
        /// to standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a recorded schedule, re-checking every step along the way.
    Replay {
        /// Trace file produced by `explore --trace-out` or by the test
        /// harness.
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichNfa {
    RootStatus,
    NonrootStatus,
    Next,
    All,
}

impl WhichNfa {
    fn tables(self) -> Vec<Nfa> {
        match self {
            WhichNfa::RootStatus => vec![root_status()],
            WhichNfa::NonrootStatus => vec![nonroot_status()],
            WhichNfa::Next => vec![next_cell()],
            WhichNfa::All => all_nfas(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Root,
    Nonroot,
}

impl PresetArg {
    fn preset(self) -> Preset {
        match self {
            PresetArg::Root => Preset::Root,
            PresetArg::Nonroot => Preset::NonRoot,
        }
    }
}

/// Outcome token for the manifest, and the exit code it maps to.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Pass,
    Fail,
    Violation,
    Cap,
    Error,
}

impl Outcome {
    fn token(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Violation => "violation",
            Outcome::Cap => "state-cap",
            Outcome::Error => "error",
        }
    }

    fn exit(self) -> ExitCode {
        ExitCode::from(match self {
            Outcome::Pass => 0,
            Outcome::Fail | Outcome::Violation => 1,
            Outcome::Error => 2,
            Outcome::Cap => 3,
        })
    }
}

/// Machine-readable sidecar line. Keys are dotted lowercase; values must not
/// contain newlines.
fn kv(key: &str, value: impl std::fmt::Display) {
    println!("#kv {key}={value}");
}

/// The one-per-invocation run manifest. `config` is the run digest for
/// exploration and replay; commands without a run configuration show "-".
fn manifest(command: &str, config: &str, outcome: Outcome, started: Instant, no_timing: bool) {
    kv("manifest.command", command);
    kv("manifest.config", config);
    kv("manifest.version", env!("CARGO_PKG_VERSION"));
    kv("manifest.result", outcome.token());
    if !no_timing {
        kv("manifest.elapsed-ms", started.elapsed().as_millis());
    }
}

fn main() -> ExitCode {
    // Die quietly when a pipe consumer closes stdout early (`hmcst ... | head`),
    // like any other line-oriented tool, instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let started = Instant::now();
    let no_timing = cli.no_timing;
    let (command, config_digest, outcome) = match cli.command {
        Command::CheckNfa { which } => ("check-nfa", "-".to_string(), cmd_check_nfa(which)),
        Command::Explore { preset, rounds, passing_threshold, state_cap, trace_out } => {
            let mut config = Config::preset(preset.preset());
            let overridden = rounds.is_some() || passing_threshold.is_some();
            if let Some(r) = rounds {
                config = config.with_rounds(r);
            }
            if let Some(k) = passing_threshold {
                config.passing_threshold = k;
            }
            if let Some(cap) = state_cap {
                config.state_cap = cap;
            }
            let digest = config.digest();
            ("explore", digest, cmd_explore(config, overridden, &trace_out))
        }
        Command::Export { which, out } => ("export", "-".to_string(), cmd_export(which, out.as_deref())),
        Command::Replay { path } => {
            let (digest, outcome) = cmd_replay(&path);
            ("replay", digest, outcome)
        }
    };
    manifest(command, &config_digest, outcome, started, no_timing);
    outcome.exit()
}

// ---------------------------------------------------------------------------
// check-nfa

type PropertyCheck = fn(&Nfa) -> Result<Verdict, ModelError>;

/// The named structural properties, in report order. Each returns a verdict
/// or an error meaning the property does not apply to this table.
const PROPERTIES: [(&str, PropertyCheck); 6] = [
    ("livelock-freedom", Nfa::check_livelock_free),
    ("starvation-freedom", Nfa::check_starvation_free),
    ("bounded-release", Nfa::check_bounded_release),
    ("bounded-timeout", Nfa::check_bounded_timeout),
    ("deadlock-freedom", Nfa::check_deadlock_free),
    ("two-effort-reachability", Nfa::check_edges_within_two_begins),
];

fn cmd_check_nfa(which: WhichNfa) -> Outcome {
    let mut failures = 0u32;
    let mut checks = 0u32;
    for nfa in which.tables() {
        println!(
            "table {}: {} states, {} edges",
            nfa.name,
            nfa.states.len(),
            nfa.edges.len()
        );
        for (prop, check) in PROPERTIES {
            match check(&nfa) {
                Ok(Verdict::Holds) => {
                    checks += 1;
                    println!("  PASS {prop}");
                    kv(&format!("check.{}.{prop}", nfa.name), "pass");
                }
                Ok(Verdict::Fails { witness }) => {
                    checks += 1;
                    failures += 1;
                    println!("  FAIL {prop}: {witness}");
                    kv(&format!("check.{}.{prop}", nfa.name), "fail");
                }
                Err(ModelError::NoOwnerStates(_)) => {
                    // A table with no owner states (the pointer cell) has no
                    // notion of being served; the property is vacuous there.
                    println!("  N/A  {prop}: no owner states in this table");
                    kv(&format!("check.{}.{prop}", nfa.name), "n/a");
                }
                Err(e) => {
                    println!("  ERROR {prop}: {e}");
                    kv(&format!("check.{}.{prop}", nfa.name), "error");
                    return Outcome::Error;
                }
            }
        }
    }
    kv("check.total", checks);
    kv("check.failures", failures);
    if failures == 0 {
        println!("all structural checks pass");
        Outcome::Pass
    } else {
        println!("{failures} structural check(s) failed");
        Outcome::Fail
    }
}

// ---------------------------------------------------------------------------
// explore

fn print_report(report: &ExplorationReport) {
    println!("config digest: {}", report.config_digest);
    println!("states visited: {}", report.states_visited);
    println!("transitions: {}", report.transitions);
    println!("max depth: {}", report.max_depth);
    println!("terminal states: {}", report.terminal_states);
    println!("step violations: {}", report.step_violations);
    println!("deadlocks: {}", report.deadlocks);
    println!("non-quiescent terminals: {}", report.nonquiescent_terminals);
    kv("explore.config", &report.config_digest);
    kv("explore.states", report.states_visited);
    kv("explore.transitions", report.transitions);
    kv("explore.max-depth", report.max_depth);
    kv("explore.terminals", report.terminal_states);
    kv("explore.step-violations", report.step_violations);
    kv("explore.deadlocks", report.deadlocks);
    kv("explore.nonquiescent", report.nonquiescent_terminals);
    for cov in &report.coverage {
        println!(
            "coverage {}: {}/{} edges{}",
            cov.nfa_name,
            cov.covered,
            cov.total,
            if cov.required { " (required)" } else { "" }
        );
        for edge in &cov.uncovered {
            println!("  uncovered: {edge}");
        }
        kv(
            &format!("coverage.{}", cov.nfa_name),
            format!("{}/{}", cov.covered, cov.total),
        );
    }
}

fn cmd_explore(config: Config, overridden: bool, trace_out: &Path) -> Outcome {
    let engine = Engine::new(config);
    println!("exploring {}", engine.config.canonical_text());
    let report = match explore(&engine) {
        Ok(report) => report,
        Err(ModelError::ResourceBudgetExceeded { visited, cap }) => {
            println!("state cap hit: visited {visited} states (cap {cap}); exploration aborted");
            kv("explore.state-cap", cap);
            return Outcome::Cap;
        }
        Err(e) => {
            println!("internal error: {e}");
            return Outcome::Error;
        }
    };
    print_report(&report);

    if report.violations_total() > 0 {
        println!(
            "violations: {} ({} step, {} deadlock, {} non-quiescent)",
            report.violations_total(),
            report.step_violations,
            report.deadlocks,
            report.nonquiescent_terminals
        );
        for (i, v) in report.violations.iter().enumerate() {
            println!("violation {}: {}", i + 1, v.error);
        }
        if let Some(first) = report.violations.first() {
            let text = trace::render(&engine.config, &first.decisions);
            match std::fs::write(trace_out, text) {
                Ok(()) => {
                    println!("first counterexample schedule written to {}", trace_out.display());
                    kv("explore.trace", trace_out.display());
                }
                Err(e) => {
                    println!("internal error: cannot write {}: {e}", trace_out.display());
                    return Outcome::Error;
                }
            }
        }
        return Outcome::Violation;
    }

    if !report.required_coverage_complete() {
        let gaps: Vec<&str> = report
            .coverage
            .iter()
            .filter(|c| c.required && !c.complete())
            .map(|c| c.nfa_name)
            .collect();
        if overridden {
            // Deliberately under-powered configs are how the coverage
            // necessity arguments are demonstrated; the gap is the point.
            for name in gaps {
                println!("warning: coverage incomplete on {name} (expected under overridden settings)");
            }
            println!("result: PASS (with coverage warnings)");
            return Outcome::Pass;
        }
        for name in gaps {
            println!("coverage incomplete on {name}");
        }
        println!("result: FAIL (required coverage not reached)");
        return Outcome::Fail;
    }

    println!("result: PASS");
    Outcome::Pass
}

// ---------------------------------------------------------------------------
// export

fn cmd_export(which: WhichNfa, out: Option<&Path>) -> Outcome {
    let tables = which.tables();
    match out {
        None => {
            for nfa in &tables {
                print!("{}", nfa.to_dot());
            }
        }
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                println!("internal error: cannot create {}: {e}", dir.display());
                return Outcome::Error;
            }
            for nfa in &tables {
                let path = dir.join(format!("{}.dot", nfa.name));
                if let Err(e) = std::fs::write(&path, nfa.to_dot()) {
                    println!("internal error: cannot write {}: {e}", path.display());
                    return Outcome::Error;
                }
                println!("wrote {}", path.display());
                kv("export.file", path.display());
            }
        }
    }
    kv("export.tables", tables.len());
    Outcome::Pass
}

// ---------------------------------------------------------------------------
// replay

fn cmd_replay(path: &Path) -> (String, Outcome) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            println!("cannot read {}: {e}", path.display());
            return ("-".into(), Outcome::Error);
        }
    };
    let file = match trace::parse(&text) {
        Ok(f) => f,
        Err(e) => {
            println!("malformed trace: {e}");
            return ("-".into(), Outcome::Error);
        }
    };
    let config = match trace::config_from_trace(&file) {
        Ok(c) => c,
        Err(e) => {
            println!("rejected trace: {e}");
            return (file.digest.clone(), Outcome::Error);
        }
    };
    let digest = config.digest();
    println!("replaying {} decisions against {}", file.decisions.len(), config.canonical_text());
    let engine = Engine::new(config);
    let outcome = trace::replay(&engine, &file.decisions);
    kv("replay.decisions", file.decisions.len());
    kv("replay.applied", outcome.outputs.len());
    match outcome.failure {
        Some((idx, err)) => {
            // 1-based to match the trace file's line numbering intuition.
            println!("step {} fails: {err}", idx + 1);
            kv("replay.failed-step", idx + 1);
            (digest, Outcome::Violation)
        }
        None => {
            let terminal = engine.is_terminal(&outcome.state);
            println!(
                "all {} steps re-checked clean; final state is {}",
                outcome.outputs.len(),
                if terminal { "terminal" } else { "not terminal" }
            );
            if terminal {
                match engine.check_quiescent(&outcome.state) {
                    Ok(()) => println!("final state is quiescent"),
                    Err(msg) => println!("final state is not quiescent: {msg}"),
                }
            }
            kv("replay.terminal", terminal);
            (digest, Outcome::Pass)
        }
    }
}
