//! Versioned, self-contained schedule traces. A trace file records the
//! configuration (as a digest plus the canonical text it was computed from,
//! so the file replays without external context) and the ordered scheduling
//! decisions. Replaying a trace against the same configuration reproduces
//! the exact run, including any violation at the same step index.

use crate::error::ModelError;
use crate::explore::Decision;
use crate::protocol::{Choice, Engine, GlobalState, StepOutput};
use crate::topology::{Config, Preset, RootMode, DEFAULT_STATE_CAP};
use crate::values::ThreadId;

/// First line of every trace file; bump on any format change.
pub const TRACE_HEADER: &str = "hmcst-trace-v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFile {
    /// Digest the file claims for its configuration.
    pub digest: String,
    /// Canonical configuration text the digest was computed from.
    pub canonical: String,
    pub decisions: Vec<Decision>,
}

/// Serialize a schedule against its configuration.
pub fn render(config: &Config, decisions: &[Decision]) -> String {
    let mut s = String::new();
    s.push_str(TRACE_HEADER);
    s.push('\n');
    s.push_str(&format!("config {} {}\n", config.digest(), config.canonical_text()));
    for (tid, choice) in decisions {
        s.push_str(&format!("{tid} {}\n", choice.name()));
    }
    s
}

/// Parse a trace file; errors carry 1-based line numbers.
pub fn parse(text: &str) -> Result<TraceFile, ModelError> {
    let bad = |line: usize, what: String| ModelError::MalformedTrace(format!("line {line}: {what}"));
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| ModelError::MalformedTrace("empty trace".into()))?;
    if header.trim_end() != TRACE_HEADER {
        return Err(bad(1, format!("expected header {TRACE_HEADER:?}, found {header:?}")));
    }
    let (_, config_line) = lines
        .next()
        .ok_or_else(|| ModelError::MalformedTrace("missing config line".into()))?;
    let mut toks = config_line.split_whitespace();
    if toks.next() != Some("config") {
        return Err(bad(2, format!("expected a config line, found {config_line:?}")));
    }
    let digest = toks
        .next()
        .ok_or_else(|| bad(2, "config line is missing the digest".into()))?
        .to_string();
    let canonical: Vec<&str> = toks.collect();
    if canonical.is_empty() {
        return Err(bad(2, "config line is missing the canonical text".into()));
    }
    let canonical = canonical.join(" ");
    let mut decisions = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tid_tok = parts.next().expect("non-empty line has a first token");
        let tid: ThreadId = tid_tok
            .parse()
            .map_err(|_| bad(idx + 1, format!("bad thread id {tid_tok:?}")))?;
        let choice_tok = parts
            .next()
            .ok_or_else(|| bad(idx + 1, "missing the choice token".into()))?;
        let choice = Choice::parse(choice_tok)
            .ok_or_else(|| bad(idx + 1, format!("bad choice {choice_tok:?}")))?;
        if let Some(extra) = parts.next() {
            return Err(bad(idx + 1, format!("unexpected trailing token {extra:?}")));
        }
        decisions.push((tid, choice));
    }
    Ok(TraceFile { digest, canonical, decisions })
}

/// Rebuild the configuration a trace was recorded against and verify that
/// its digest matches what the file claims.
pub fn config_from_trace(file: &TraceFile) -> Result<Config, ModelError> {
    let config = parse_canonical(&file.canonical)?;
    let actual = config.digest();
    if actual != file.digest {
        return Err(ModelError::DigestMismatch { expected: file.digest.clone(), actual });
    }
    Ok(config)
}

fn parse_canonical(text: &str) -> Result<Config, ModelError> {
    let bad = |what: String| ModelError::MalformedTrace(format!("config text: {what}"));
    let mut preset: Option<Preset> = None;
    let mut rounds: Option<Vec<u8>> = None;
    let mut threshold: Option<u8> = None;
    let mut root_mode: Option<RootMode> = None;
    for tok in text.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("token {tok:?} is not key=value")))?;
        match key {
            "preset" => {
                preset =
                    Some(Preset::parse(value).ok_or_else(|| bad(format!("unknown preset {value:?}")))?);
            }
            "rounds" => {
                let parsed: Result<Vec<u8>, _> = value.split(',').map(str::parse).collect();
                rounds = Some(parsed.map_err(|_| bad(format!("bad rounds list {value:?}")))?);
            }
            "passing-threshold" => {
                threshold =
                    Some(value.parse().map_err(|_| bad(format!("bad threshold {value:?}")))?);
            }
            "root-mode" => {
                root_mode = Some(
                    RootMode::parse(value).ok_or_else(|| bad(format!("unknown root mode {value:?}")))?,
                );
            }
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
    }
    let preset = preset.ok_or_else(|| bad("missing preset".into()))?;
    let mut config = Config::preset(preset);
    config.rounds = rounds.ok_or_else(|| bad("missing rounds".into()))?;
    if config.rounds.is_empty() || config.rounds.contains(&0) {
        return Err(bad("rounds must name at least one thread, each with at least one round".into()));
    }
    config.passing_threshold = threshold.ok_or_else(|| bad("missing passing-threshold".into()))?;
    if let Some(mode) = root_mode {
        config.root_mode = mode;
    }
    config.state_cap = DEFAULT_STATE_CAP;
    Ok(config)
}

#[derive(Debug)]
pub struct ReplayOutcome {
    /// State after the last successfully applied decision.
    pub state: GlobalState,
    pub outputs: Vec<StepOutput>,
    /// Step index and error of the first failing decision, if any.
    pub failure: Option<(usize, ModelError)>,
}

/// Apply a recorded schedule decision-by-decision. An empty schedule yields
/// the initial state. A failing step ends the replay, reporting its index.
pub fn replay(engine: &Engine, decisions: &[Decision]) -> ReplayOutcome {
    let mut state = engine.initial_state();
    let mut outputs = Vec::new();
    for (i, &(tid, choice)) in decisions.iter().enumerate() {
        match engine.step(&state, tid, choice) {
            Ok((next, out)) => {
                state = next;
                outputs.push(out);
            }
            Err(e) => {
                return ReplayOutcome { state, outputs, failure: Some((i, e)) };
            }
        }
    }
    ReplayOutcome { state, outputs, failure: None }
}
