//! Randomized-schedule properties: step-level invariants that must hold on
//! every legal execution, checked over proptest-driven prefixes of both
//! presets.

use proptest::prelude::*;

use hmcst_model::explore::decisions;
use hmcst_model::protocol::{Choice, Engine, GlobalState, StepOutput};
use hmcst_model::topology::{Config, Preset};
use hmcst_model::trace;

fn preset_strategy() -> impl Strategy<Value = Preset> {
    prop_oneof![Just(Preset::Root), Just(Preset::NonRoot)]
}

/// Drive a schedule prefix: each pick selects among the enabled decisions.
/// Stops at the first state with no enabled decision.
fn walk(engine: &Engine, picks: &[u16]) -> (Vec<GlobalState>, Vec<StepOutput>) {
    let mut states = vec![engine.initial_state()];
    let mut outputs = Vec::new();
    for &p in picks {
        let st = states.last().unwrap();
        let options = decisions(engine, st);
        if options.is_empty() {
            break;
        }
        let (tid, choice) = options[p as usize % options.len()];
        let (next, out) = engine
            .step(st, tid, choice)
            .expect("an enabled step of the unmutated protocol never violates");
        states.push(next);
        outputs.push(out);
    }
    (states, outputs)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// One step is one shared-cell access: at most two labels, and a second
    /// label is always a same-value ride on the same node (a context change
    /// carried by the one physical write, not a second write).
    #[test]
    fn each_step_performs_at_most_one_real_write(
        preset in preset_strategy(),
        picks in proptest::collection::vec(any::<u16>(), 0..250),
    ) {
        let engine = Engine::new(Config::preset(preset));
        let (_, outputs) = walk(&engine, &picks);
        for out in &outputs {
            prop_assert!(out.labels.len() <= 2, "labels: {:?}", out.labels);
            if let [a, b] = out.labels[..] {
                prop_assert_eq!(a.node, b.node, "ride must stay on the touched node");
                prop_assert!(
                    a.old == a.new || b.old == b.new,
                    "one of a double step's labels must be a same-value ride: {:?}",
                    out.labels
                );
            }
        }
    }

    /// The visited-set key is injective: along any reachable prefix, two
    /// states are equal exactly when their encodings are equal.
    #[test]
    fn state_encoding_is_injective_on_reachable_states(
        preset in preset_strategy(),
        picks in proptest::collection::vec(any::<u16>(), 0..120),
    ) {
        let engine = Engine::new(Config::preset(preset));
        let (states, _) = walk(&engine, &picks);
        let encoded: Vec<_> = states.iter().map(|s| s.encode()).collect();
        for i in 0..states.len() {
            for j in (i + 1)..states.len() {
                prop_assert_eq!(
                    states[i] == states[j],
                    encoded[i] == encoded[j],
                    "states {} and {} disagree with their encodings", i, j
                );
            }
        }
    }

    /// Stepping is a function of (state, thread, choice): re-running a
    /// schedule reproduces every intermediate state and every step output.
    #[test]
    fn schedules_replay_deterministically(
        preset in preset_strategy(),
        picks in proptest::collection::vec(any::<u16>(), 0..250),
    ) {
        let engine = Engine::new(Config::preset(preset));
        let (states_a, outputs_a) = walk(&engine, &picks);
        let (states_b, outputs_b) = walk(&engine, &picks);
        prop_assert_eq!(states_a.len(), states_b.len());
        for (a, b) in states_a.iter().zip(&states_b) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(format!("{outputs_a:?}"), format!("{outputs_b:?}"));
    }

    /// Schedule files round-trip: render -> parse recovers the decisions and
    /// a config whose digest matches the recorded one.
    #[test]
    fn trace_files_round_trip(
        preset in preset_strategy(),
        raw in proptest::collection::vec((0u8..4, any::<bool>()), 0..300),
    ) {
        let config = Config::preset(preset);
        let schedule: Vec<_> = raw
            .iter()
            .map(|&(tid, t)| (tid, if t { Choice::Timeout } else { Choice::Proceed }))
            .collect();
        let text = trace::render(&config, &schedule);
        let file = trace::parse(&text).expect("rendered schedules parse");
        prop_assert_eq!(&file.decisions, &schedule);
        let recovered = trace::config_from_trace(&file).expect("digest verifies");
        prop_assert_eq!(recovered.canonical_text(), config.canonical_text());
        prop_assert_eq!(trace::render(&recovered, &file.decisions), text);
    }
}
