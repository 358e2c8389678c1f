//! Standalone validator for the per-round lock-usage discipline over recorded
//! witness events. Within one thread's round the level sequence must be
//! bitonic: acquisitions climb strictly, an abandonment (at most one) tops the
//! climb, and releases/delegations then descend strictly through exactly the
//! acquired levels in reverse. A round with no abandonment must reach the top
//! level — a thread that never gives up is served.
//!
//! The engine enforces the same discipline incrementally while stepping; this
//! validator re-derives the verdict from nothing but the event stream, so the
//! two can cross-check each other on whole executions.

use std::collections::BTreeMap;

use crate::protocol::{EventKind, WitnessEvent};
use crate::values::Level;

/// Validate every (thread, round) group in the event stream of one execution.
pub fn validate_rounds(events: &[WitnessEvent], top_level: Level) -> Result<(), String> {
    let mut groups: BTreeMap<(u8, u8), Vec<WitnessEvent>> = BTreeMap::new();
    for e in events {
        groups.entry((e.thread, e.round)).or_default().push(*e);
    }
    for ((thread, round), evs) in &groups {
        validate_one(*thread, *round, evs, top_level)?;
    }
    Ok(())
}

fn validate_one(
    thread: u8,
    round: u8,
    evs: &[WitnessEvent],
    top_level: Level,
) -> Result<(), String> {
    let ctx = |msg: String| format!("thread {thread} round {round}: {msg}");
    let mut acquired: Vec<Level> = Vec::new();
    let mut abandoned = false;
    let mut i = 0;

    // Ascent: strictly climbing acquisitions, optionally topped by one
    // abandonment at a level above everything acquired.
    while i < evs.len() {
        let e = &evs[i];
        match e.kind {
            EventKind::Acquire => {
                if acquired.last().is_some_and(|&l| e.level <= l) {
                    return Err(ctx(format!(
                        "acquired level {} after level {}",
                        e.level,
                        acquired.last().unwrap()
                    )));
                }
                acquired.push(e.level);
                i += 1;
            }
            EventKind::Abandon => {
                if acquired.last().is_some_and(|&l| e.level <= l) {
                    return Err(ctx(format!(
                        "abandoned level {} at or below an acquired level",
                        e.level
                    )));
                }
                abandoned = true;
                i += 1;
                break;
            }
            _ => break,
        }
    }

    // Descent: strictly falling releases/delegations, nothing else after.
    let mut released: Vec<Level> = Vec::new();
    while i < evs.len() {
        let e = &evs[i];
        match e.kind {
            EventKind::Release | EventKind::Delegate => {
                if released.last().is_some_and(|&l| e.level >= l) {
                    return Err(ctx(format!(
                        "released level {} after level {}",
                        e.level,
                        released.last().unwrap()
                    )));
                }
                released.push(e.level);
                i += 1;
            }
            k => return Err(ctx(format!("{k:?} at level {} after the descent began", e.level))),
        }
    }

    let expected: Vec<Level> = acquired.iter().rev().copied().collect();
    if released != expected {
        return Err(ctx(format!(
            "released levels {released:?} are not the acquired levels {acquired:?} in reverse"
        )));
    }
    if !abandoned && acquired.last() != Some(&top_level) {
        return Err(ctx(format!(
            "never abandoned yet topped out at {:?} instead of level {top_level}",
            acquired.last()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(thread: u8, round: u8, level: Level, kind: EventKind) -> WitnessEvent {
        WitnessEvent { thread, round, level, kind }
    }

    #[test]
    fn served_and_abandoned_rounds_validate() {
        use EventKind::*;
        let events = vec![
            // Round 0: full climb to level 3 and descent.
            ev(0, 0, 1, Acquire),
            ev(0, 0, 2, Acquire),
            ev(0, 0, 3, Acquire),
            ev(0, 0, 3, Release),
            ev(0, 0, 2, Delegate),
            ev(0, 0, 1, Delegate),
            // Round 1: abandoned above level 1.
            ev(0, 1, 1, Acquire),
            ev(0, 1, 2, Abandon),
            ev(0, 1, 1, Release),
            // Another thread, interleaved ordering irrelevant.
            ev(1, 0, 2, Acquire),
            ev(1, 0, 3, Acquire),
            ev(1, 0, 3, Release),
            ev(1, 0, 2, Release),
        ];
        validate_rounds(&events, 3).expect("discipline holds");
    }

    #[test]
    fn violations_are_caught() {
        use EventKind::*;
        // Re-acquisition after a release.
        let e1 = vec![
            ev(0, 0, 1, Acquire),
            ev(0, 0, 1, Release),
            ev(0, 0, 2, Acquire),
        ];
        assert!(validate_rounds(&e1, 2).is_err());
        // Non-ascending climb.
        let e2 = vec![ev(0, 0, 2, Acquire), ev(0, 0, 1, Acquire)];
        assert!(validate_rounds(&e2, 2).is_err());
        // Released a level never acquired.
        let e3 = vec![ev(0, 0, 1, Acquire), ev(0, 0, 2, Release), ev(0, 0, 1, Release)];
        assert!(validate_rounds(&e3, 2).is_err());
        // Served round that never reached the top.
        let e4 = vec![ev(0, 0, 1, Acquire), ev(0, 0, 1, Release)];
        assert!(validate_rounds(&e4, 2).is_err());
        // Two abandonments in one round.
        let e5 = vec![ev(0, 0, 1, Abandon), ev(0, 0, 2, Abandon)];
        assert!(validate_rounds(&e5, 2).is_err());
    }
}
