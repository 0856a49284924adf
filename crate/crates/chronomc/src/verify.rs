//! Property suites over randomly generated programs.
//!
//! Each suite enumerates every execution of small straight-line programs
//! by brute force and checks one core property against an independent
//! oracle:
//!
//! - trace equivalence: partitioning completed executions by Shasha-Snir
//!   trace and by chronological trace yields the same partition;
//! - clock oracle: the vector-clock order equals the transitive closure
//!   of the chronological trace, and the emitted races are exactly the
//!   non-implied cross-thread uu/src/cf edges;
//! - coverage: DPOR finds the same set of chronological traces as brute
//!   force under SC, TSO and PSO;
//! - SC collapse: under SC, chronological-trace equality coincides with
//!   equality of the per-location conflict orders (Mazurkiewicz traces).
//!
//! The oracles only use positional reachability over the trace
//! definitions, never the clock calculus, so each check compares two
//! independent routes.

use std::collections::{BTreeMap, BTreeSet};

use crate::clocks::races_of;
use crate::explore::{brute_force, dpor_explore, random_program, Limits, RandomParams};
use crate::lang::{pretty_print, Program};
use crate::semantics::{Event, MemoryModel};
use crate::traces::{chronological_trace, happens_before, shasha_snir_trace, HappensBefore};

/// Outcome of one suite run.
#[derive(Debug, Default)]
pub struct SuiteOutcome {
    pub programs: u64,
    pub executions: u64,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn describe(seed: u64, program: &Program, model: MemoryModel, what: &str) -> String {
    format!("seed {seed} under {model}: {what}\n{}", pretty_print(program))
}

/// The cross-thread uu, src and cf edges of the chronological trace that
/// are not implied by a path through a third event.
pub fn non_implied_cross_edges(
    events: &[Event],
    model: MemoryModel,
    hb: &HappensBefore,
) -> Result<BTreeSet<(Event, Event)>, crate::traces::TraceError> {
    let trace = chronological_trace(events, model)?;
    let mut out = BTreeSet::new();
    let candidates = trace
        .uu
        .iter()
        .chain(trace.src.iter())
        .chain(trace.cf.iter());
    for (a, b) in candidates {
        if a.tid.owner() == b.tid.owner() {
            continue;
        }
        let implied = hb
            .events()
            .iter()
            .any(|c| c != a && c != b && hb.lt(a, c) && hb.lt(c, b));
        if !implied {
            out.insert((a.clone(), b.clone()));
        }
    }
    Ok(out)
}

/// Partition equality of completed executions: grouping by Shasha-Snir
/// trace must equal grouping by chronological trace.
pub fn theorem1_suite(count: u64, seed: u64, limits: Limits) -> SuiteOutcome {
    let params = RandomParams::default();
    let mut outcome = SuiteOutcome::default();
    for i in 0..count {
        let s = seed + i;
        let program = random_program(s, &params);
        outcome.programs += 1;
        for model in [MemoryModel::Tso, MemoryModel::Pso] {
            let bf = match brute_force(&program, model, limits) {
                Ok(e) => e,
                Err(e) => {
                    outcome.failures.push(describe(s, &program, model, &format!("exploration failed: {e}")));
                    continue;
                }
            };
            let mut ct_ids: BTreeMap<_, usize> = BTreeMap::new();
            let mut ss_ids: BTreeMap<_, usize> = BTreeMap::new();
            let mut ct_to_ss: BTreeMap<usize, usize> = BTreeMap::new();
            let mut ss_to_ct: BTreeMap<usize, usize> = BTreeMap::new();
            for exec in &bf.executions {
                outcome.executions += 1;
                let ct = match chronological_trace(&exec.events, model) {
                    Ok(t) => t,
                    Err(e) => {
                        outcome.failures.push(describe(s, &program, model, &format!("trace failed: {e}")));
                        continue;
                    }
                };
                let ss = shasha_snir_trace(&exec.events, model).expect("completed execution");
                let next_ct = ct_ids.len();
                let ci = *ct_ids.entry(ct).or_insert(next_ct);
                let next_ss = ss_ids.len();
                let si = *ss_ids.entry(ss).or_insert(next_ss);
                if *ct_to_ss.entry(ci).or_insert(si) != si || *ss_to_ct.entry(si).or_insert(ci) != ci {
                    outcome.failures.push(describe(
                        s,
                        &program,
                        model,
                        "Shasha-Snir and chronological partitions disagree",
                    ));
                }
            }
        }
    }
    outcome
}

/// Clock order against the closure oracle, and the emitted race union
/// against the non-implied cross-thread edge oracle.
pub fn clock_oracle_suite(count: u64, seed: u64, limits: Limits) -> SuiteOutcome {
    let params = RandomParams::default();
    let mut outcome = SuiteOutcome::default();
    for i in 0..count {
        let s = seed + i;
        let program = random_program(s, &params);
        outcome.programs += 1;
        for model in [MemoryModel::Tso, MemoryModel::Pso] {
            let bf = match brute_force(&program, model, limits) {
                Ok(e) => e,
                Err(e) => {
                    outcome.failures.push(describe(s, &program, model, &format!("exploration failed: {e}")));
                    continue;
                }
            };
            for exec in &bf.executions {
                outcome.executions += 1;
                let events = &exec.events;
                let ra = match races_of(events, &program, model) {
                    Ok(ra) => ra,
                    Err(e) => {
                        outcome.failures.push(describe(s, &program, model, &format!("clocks failed: {e}")));
                        continue;
                    }
                };
                let trace = chronological_trace(events, model).expect("completed");
                let hb = match happens_before(&trace, Some(&program)) {
                    Ok(hb) => hb,
                    Err(e) => {
                        outcome.failures.push(describe(s, &program, model, &format!("cycle: {e}")));
                        continue;
                    }
                };
                for a in events {
                    for b in events {
                        if a != b && ra.happens_before(a, b) != hb.lt(a, b) {
                            outcome.failures.push(describe(
                                s,
                                &program,
                                model,
                                &format!(
                                    "clock order disagrees with closure on {} -> {}",
                                    a.text(&program),
                                    b.text(&program)
                                ),
                            ));
                        }
                    }
                }
                let emitted: BTreeSet<(Event, Event)> = ra
                    .all_races()
                    .into_iter()
                    .map(|r| (r.earlier, r.later))
                    .collect();
                let expected = non_implied_cross_edges(events, model, &hb).expect("completed");
                if emitted != expected {
                    outcome.failures.push(describe(
                        s,
                        &program,
                        model,
                        &format!("race set mismatch: emitted {emitted:?} expected {expected:?}"),
                    ));
                }
            }
        }
    }
    outcome
}

/// DPOR must find exactly the brute-force set of chronological traces.
pub fn coverage_suite(count: u64, seed: u64, limits: Limits) -> SuiteOutcome {
    let params = RandomParams::default();
    let mut outcome = SuiteOutcome::default();
    for i in 0..count {
        let s = seed + i;
        let program = random_program(s, &params);
        outcome.programs += 1;
        for model in [MemoryModel::Sc, MemoryModel::Tso, MemoryModel::Pso] {
            let (bf, dp) = match (brute_force(&program, model, limits), dpor_explore(&program, model, limits)) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => {
                    let e = a.err().or(b.err()).unwrap();
                    outcome.failures.push(describe(s, &program, model, &format!("exploration failed: {e}")));
                    continue;
                }
            };
            outcome.executions += bf.report.executions_explored + dp.report.executions_explored;
            let bf_set: BTreeSet<_> = bf.chronological_traces.keys().cloned().collect();
            let dp_set: BTreeSet<_> = dp.chronological_traces.keys().cloned().collect();
            if bf_set != dp_set {
                let missing = bf_set.difference(&dp_set).count();
                let extra = dp_set.difference(&bf_set).count();
                outcome.failures.push(describe(
                    s,
                    &program,
                    model,
                    &format!("DPOR coverage mismatch: {missing} missing, {extra} extra"),
                ));
            }
        }
    }
    outcome
}

/// Conflict order of an SC execution: ordered pairs of same-location
/// accesses (update/update or update/load), together with the event set.
fn conflict_order(events: &[Event]) -> (BTreeSet<Event>, BTreeSet<(Event, Event)>) {
    let accesses: Vec<&Event> = events.iter().filter(|e| e.is_load() || e.is_update()).collect();
    let mut rel = BTreeSet::new();
    for (i, a) in accesses.iter().enumerate() {
        for b in &accesses[i + 1..] {
            if a.loc_accessed() == b.loc_accessed() && (a.is_update() || b.is_update()) {
                rel.insert(((*a).clone(), (*b).clone()));
            }
        }
    }
    (events.iter().cloned().collect(), rel)
}

/// Under SC, chronological-trace equality must coincide with
/// Mazurkiewicz (conflict-order) equality.
pub fn mazurkiewicz_suite(count: u64, seed: u64, limits: Limits) -> SuiteOutcome {
    let params = RandomParams::default();
    let mut outcome = SuiteOutcome::default();
    for i in 0..count {
        let s = seed + i;
        let program = random_program(s, &params);
        outcome.programs += 1;
        let bf = match brute_force(&program, MemoryModel::Sc, limits) {
            Ok(e) => e,
            Err(e) => {
                outcome.failures.push(describe(s, &program, MemoryModel::Sc, &format!("exploration failed: {e}")));
                continue;
            }
        };
        let mut ct_ids: BTreeMap<_, usize> = BTreeMap::new();
        let mut mz_ids: BTreeMap<_, usize> = BTreeMap::new();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for exec in &bf.executions {
            outcome.executions += 1;
            let ct = chronological_trace(&exec.events, MemoryModel::Sc).expect("completed");
            let mz = conflict_order(&exec.events);
            let next_ct = ct_ids.len();
            let ci = *ct_ids.entry(ct).or_insert(next_ct);
            let next_mz = mz_ids.len();
            let mi = *mz_ids.entry(mz).or_insert(next_mz);
            pairs.push((ci, mi));
        }
        let mut ct_to_mz: BTreeMap<usize, usize> = BTreeMap::new();
        let mut mz_to_ct: BTreeMap<usize, usize> = BTreeMap::new();
        for (ci, mi) in pairs {
            if *ct_to_mz.entry(ci).or_insert(mi) != mi || *mz_to_ct.entry(mi).or_insert(ci) != ci {
                outcome.failures.push(describe(
                    s,
                    &program,
                    MemoryModel::Sc,
                    "chronological and Mazurkiewicz partitions disagree",
                ));
                break;
            }
        }
    }
    outcome
}
