//! On-the-fly happens-before computation with vector clocks.
//!
//! An auxiliary configuration is evolved alongside an execution. It
//! tracks, per thread id, a vector clock of observed events; per real
//! thread, a mirror of the store buffer whose entries carry the store
//! event and the latest buffer-forwarded load; and per memory location,
//! the latest update event plus the latest reader event of each thread.
//!
//! A buffer-forwarded load does not synchronize with memory at all: it
//! is parked in its buffer entry and only becomes observable to later
//! updates once that entry reaches memory. This is what keeps a load
//! unordered with updates of its own thread and makes the clock order
//! coincide with the chronological-trace happens-before.
//!
//! Each step also emits the race set R(e): the cross-thread uu, src and
//! cf edges ending in `e` that are not already implied transitively. A
//! candidate race partner is suppressed exactly when its clock is
//! dominated by the joined clocks of the event's other predecessors, so
//! the union of all R(e) equals the non-implied cross-thread edge set of
//! the chronological trace.

use std::collections::HashMap;
use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::lang::{Instr, LocId, Program};
use crate::semantics::{Event, EventInstr, MemoryModel, ThreadId};

/// A vector clock: thread id to number of observed events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VectorClock(BTreeMap<ThreadId, u32>);

impl VectorClock {
    pub fn zero() -> Self {
        VectorClock::default()
    }

    pub fn get(&self, tid: ThreadId) -> u32 {
        self.0.get(&tid).copied().unwrap_or(0)
    }

    pub fn set(&mut self, tid: ThreadId, v: u32) {
        self.0.insert(tid, v);
    }

    /// Pointwise max, written `+` in the clock calculus.
    pub fn join(&self, other: &VectorClock) -> VectorClock {
        let mut out = self.clone();
        out.join_in_place(other);
        out
    }

    pub fn join_in_place(&mut self, other: &VectorClock) {
        for (&tid, &v) in &other.0 {
            let slot = self.0.entry(tid).or_insert(0);
            *slot = (*slot).max(v);
        }
    }

    /// Pointwise comparison.
    pub fn le(&self, other: &VectorClock) -> bool {
        self.0.iter().all(|(&tid, &v)| v <= other.get(tid))
    }
}

/// Pointwise max of two clocks.
pub fn clock_join(a: &VectorClock, b: &VectorClock) -> VectorClock {
    a.join(b)
}

/// A race: an immediate cross-thread happens-before edge whose endpoints
/// could be scheduled in the opposite order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Race {
    pub earlier: Event,
    pub later: Event,
}

/// Mirror of one store buffer entry.
#[derive(Debug, Clone)]
struct BufEntry {
    loc: LocId,
    store: Event,
    /// Latest load that buffer-forwarded from this entry.
    forwarded: Option<Event>,
}

/// Per-location memory bookkeeping.
#[derive(Debug, Clone, Default)]
struct MemCell {
    last_update: Option<Event>,
    /// Latest reader event per real thread.
    readers: BTreeMap<usize, Event>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClockError {
    #[error("auxiliary configuration out of sync with the execution: {0}")]
    Desync(String),
}

/// The auxiliary configuration of the clock calculus.
#[derive(Debug, Clone)]
pub struct AuxConfig {
    model: MemoryModel,
    thread_clocks: HashMap<ThreadId, VectorClock>,
    event_clocks: HashMap<Event, VectorClock>,
    /// Under SC/TSO one queue per thread; under PSO one per (thread, loc),
    /// stored flat as thread * nlocs + loc.
    buffers: Vec<VecDeque<BufEntry>>,
    memory: Vec<MemCell>,
    nlocs: usize,
}

impl AuxConfig {
    pub fn new(program: &Program, model: MemoryModel) -> Self {
        let nthreads = program.threads.len();
        let nlocs = program.locations.len();
        let nbuffers = match model {
            MemoryModel::Pso => nthreads * nlocs,
            _ => nthreads,
        };
        AuxConfig {
            model,
            thread_clocks: HashMap::new(),
            event_clocks: HashMap::new(),
            buffers: vec![VecDeque::new(); nbuffers],
            memory: vec![MemCell::default(); nlocs],
            nlocs,
        }
    }

    fn buffer_slot(&self, p: usize, loc: LocId) -> usize {
        match self.model {
            MemoryModel::Pso => p * self.nlocs + loc,
            _ => p,
        }
    }

    /// The auxiliary thread responsible for updates of `p` to `loc`.
    fn updater(&self, p: usize, loc: LocId) -> ThreadId {
        match self.model {
            MemoryModel::Pso => ThreadId::AuxPso(p, loc),
            _ => ThreadId::AuxTso(p),
        }
    }

    pub fn clock_of_event(&self, e: &Event) -> Option<&VectorClock> {
        self.event_clocks.get(e)
    }

    /// Advance by one event, returning the race set R(e).
    pub fn step(&mut self, event: &Event) -> Result<Vec<Race>, ClockError> {
        let tid = event.tid;
        let prev = self.thread_clocks.get(&tid).cloned().unwrap_or_default();
        let expected = prev.get(tid) + 1;
        if event.index != expected {
            return Err(ClockError::Desync(format!(
                "event index {} but {} events of {:?} seen",
                event.index,
                expected - 1,
                tid
            )));
        }
        let mut cp = prev;
        cp.set(tid, event.index);

        let mut races = Vec::new();
        let clock = match (&event.instr, tid) {
            (EventInstr::Op(Instr::Store { loc, .. }), ThreadId::Real(p)) => {
                let slot = self.buffer_slot(p, *loc);
                self.buffers[slot].push_back(BufEntry {
                    loc: *loc,
                    store: event.clone(),
                    forwarded: None,
                });
                cp
            }
            (EventInstr::Op(Instr::Load { loc, .. }), ThreadId::Real(p)) => {
                let slot = self.buffer_slot(p, *loc);
                let fwd_entry = self.buffers[slot].iter_mut().rev().find(|b| b.loc == *loc);
                match fwd_entry {
                    Some(entry) => {
                        // Buffer forwarding: the load replaces the prior
                        // forwarded load of the entry; no synchronization,
                        // no races.
                        entry.forwarded = Some(event.clone());
                        cp
                    }
                    None => {
                        // Load from memory: ordered after the latest
                        // update to the location when that update came
                        // from another thread.
                        let updater = self.updater(p, *loc);
                        let cell = &mut self.memory[*loc];
                        let mut c = cp.clone();
                        if let Some(upd) = cell.last_update.clone() {
                            if upd.tid != updater {
                                let upd_clock = self.event_clocks[&upd].clone();
                                if !upd_clock.le(&cp) {
                                    races.push(Race { earlier: upd, later: event.clone() });
                                }
                                c.join_in_place(&upd_clock);
                            }
                        }
                        cell.readers.insert(p, event.clone());
                        c
                    }
                }
            }
            (EventInstr::Op(Instr::Fence), ThreadId::Real(p)) => {
                // The fence's side condition already flushed the buffers;
                // joining the updater clocks orders it after the last
                // update of each.
                let mut c = cp;
                let updaters: Vec<ThreadId> = match self.model {
                    MemoryModel::Pso => (0..self.nlocs).map(|x| ThreadId::AuxPso(p, x)).collect(),
                    _ => vec![ThreadId::AuxTso(p)],
                };
                for u in updaters {
                    if let Some(uc) = self.thread_clocks.get(&u) {
                        let uc = uc.clone();
                        c.join_in_place(&uc);
                    }
                }
                c
            }
            (EventInstr::Op(_), ThreadId::Real(_)) => cp,
            (EventInstr::Update(loc), aux) => {
                let p = aux.owner();
                let slot = self.buffer_slot(p, *loc);
                let entry = self.buffers[slot].pop_front().ok_or_else(|| {
                    ClockError::Desync(format!("update of empty buffer by {aux:?}"))
                })?;
                if entry.loc != *loc {
                    return Err(ClockError::Desync(format!(
                        "buffer head is for location {} but the update accesses {}",
                        entry.loc, loc
                    )));
                }
                let store_clock = self.event_clocks[&entry.store].clone();
                let cell = self.memory[*loc].clone();

                // Race candidates: the previous update and the latest
                // readers, excluding those of the owner. A candidate
                // races unless its clock is dominated by the joined
                // clocks of the update's other predecessors.
                let mut candidates: Vec<Event> = Vec::new();
                if let Some(u) = &cell.last_update {
                    if u.tid.owner() != p {
                        candidates.push(u.clone());
                    }
                }
                for (rt, r) in &cell.readers {
                    if *rt != p {
                        candidates.push(r.clone());
                    }
                }
                let base = cp.join(&store_clock);
                for cand in &candidates {
                    let mut rest = base.clone();
                    if let Some(u) = &cell.last_update {
                        if u != cand {
                            let uc = self.event_clocks[u].clone();
                            rest.join_in_place(&uc);
                        }
                    }
                    for (_, r) in &cell.readers {
                        if r != cand {
                            let rc = self.event_clocks[r].clone();
                            rest.join_in_place(&rc);
                        }
                    }
                    if !self.event_clocks[cand].le(&rest) {
                        races.push(Race { earlier: cand.clone(), later: event.clone() });
                    }
                }

                // New clock: program order, the store, the previous
                // update, and the cross-thread readers.
                let mut c = base;
                if let Some(u) = &cell.last_update {
                    let uc = self.event_clocks[u].clone();
                    c.join_in_place(&uc);
                }
                for (rt, r) in &cell.readers {
                    if *rt != p {
                        let rc = self.event_clocks[r].clone();
                        c.join_in_place(&rc);
                    }
                }

                let cell = &mut self.memory[*loc];
                cell.last_update = Some(event.clone());
                if let Some(l) = entry.forwarded {
                    cell.readers.insert(p, l);
                }
                c
            }
            (instr, tid) => {
                return Err(ClockError::Desync(format!("unexpected event {instr:?} by {tid:?}")));
            }
        };

        races.sort();
        self.thread_clocks.insert(tid, clock.clone());
        self.event_clocks.insert(event.clone(), clock);
        Ok(races)
    }
}

/// The race analysis of an execution (a prefix is fine): per-event race
/// sets plus the final per-event clocks.
#[derive(Debug)]
pub struct RaceAnalysis {
    pub per_event: Vec<(Event, Vec<Race>)>,
    pub clocks: HashMap<Event, VectorClock>,
}

impl RaceAnalysis {
    /// True when `a` strictly happens before `b` in the clock order.
    pub fn happens_before(&self, a: &Event, b: &Event) -> bool {
        a != b && self.clocks[a].le(&self.clocks[b])
    }

    /// Union of the per-event race sets.
    pub fn all_races(&self) -> Vec<Race> {
        self.per_event.iter().flat_map(|(_, rs)| rs.iter().cloned()).collect()
    }
}

/// Fold [`AuxConfig::step`] over an execution.
pub fn races_of(
    events: &[Event],
    program: &Program,
    model: MemoryModel,
) -> Result<RaceAnalysis, ClockError> {
    let mut aux = AuxConfig::new(program, model);
    let mut per_event = Vec::with_capacity(events.len());
    for e in events {
        let races = aux.step(e)?;
        per_event.push((e.clone(), races));
    }
    Ok(RaceAnalysis { per_event, clocks: aux.event_clocks })
}

/// Debug dump: one row per event, one column per thread id, TSV.
pub fn clock_table_tsv(analysis: &RaceAnalysis, program: &Program) -> String {
    let events: Vec<&Event> = analysis.per_event.iter().map(|(e, _)| e).collect();
    let mut tids: Vec<ThreadId> = Vec::new();
    for e in &events {
        if !tids.contains(&e.tid) {
            tids.push(e.tid);
        }
    }
    tids.sort();
    let mut out = String::from("event");
    for t in &tids {
        out.push('\t');
        out.push_str(&t.text(program));
    }
    out.push('\n');
    for e in events {
        out.push_str(&e.text(program));
        let c = &analysis.clocks[e];
        for t in &tids {
            out.push('\t');
            out.push_str(&c.get(*t).to_string());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_program, Program};
    use crate::semantics::{parse_schedule, run};
    use crate::traces::{chronological_trace, happens_before};

    const SB: &str = "\
locations x y
thread p:
  store x 1
  load $r y
thread q:
  store y 1
  load $s x
";

    const FORWARD: &str = "\
locations x
thread p:
  store x 1
  load $r x
thread q:
  store x 2
";

    fn analyze(
        src: &str,
        schedule: &str,
        model: MemoryModel,
    ) -> (Program, Vec<Event>, RaceAnalysis) {
        let p = parse_program(src).unwrap();
        let s = parse_schedule(schedule, &p).unwrap();
        let (events, _) = run(&p, &s, model).unwrap();
        let ra = races_of(&events, &p, model).unwrap();
        (p, events, ra)
    }

    #[test]
    fn join_with_zero_is_identity() {
        let mut v = VectorClock::zero();
        v.set(ThreadId::Real(0), 3);
        assert_eq!(clock_join(&v, &VectorClock::zero()), v);
    }

    #[test]
    fn join_is_pointwise_max() {
        let mut a = VectorClock::zero();
        a.set(ThreadId::Real(0), 1);
        a.set(ThreadId::Real(1), 3);
        let mut b = VectorClock::zero();
        b.set(ThreadId::Real(0), 2);
        b.set(ThreadId::Real(1), 1);
        let j = clock_join(&a, &b);
        assert_eq!(j.get(ThreadId::Real(0)), 2);
        assert_eq!(j.get(ThreadId::Real(1)), 3);
    }

    #[test]
    fn store_events_never_race() {
        let (_p, _events, ra) = analyze(SB, "p,q,p,q,upd(p),upd(q)", MemoryModel::Tso);
        for (e, rs) in &ra.per_event {
            if e.is_store() {
                assert!(rs.is_empty());
            }
        }
    }

    #[test]
    fn buffer_forwarded_load_has_no_races() {
        let (_p, events, ra) = analyze(FORWARD, "p,p,q,upd(p),upd(q)", MemoryModel::Tso);
        let ld = events.iter().find(|e| e.is_load()).unwrap();
        let (_, rs) = ra.per_event.iter().find(|(e, _)| e == ld).unwrap();
        assert!(rs.is_empty());
    }

    #[test]
    fn fig2_update_races_with_the_earlier_load() {
        // In the SB execution, p's update of x races with q's load of x
        // that read the initial value before it.
        let (_p, events, ra) = analyze(SB, "p,p,q,upd(q),q,upd(p)", MemoryModel::Tso);
        let upd_p = events.iter().find(|e| e.is_update() && e.tid.owner() == 0).unwrap();
        let ld_x = events.iter().find(|e| e.is_load() && e.loc_accessed() == Some(0)).unwrap();
        let (_, rs) = ra.per_event.iter().find(|(e, _)| e == upd_p).unwrap();
        assert_eq!(rs, &vec![Race { earlier: ld_x.clone(), later: upd_p.clone() }]);
    }

    #[test]
    fn fig9a_races_are_the_two_reversible_edges() {
        // Initial DPOR execution of the forwarding program: the races
        // are p:update vs q:update and p:load vs q:update.
        let (_p, events, ra) = analyze(FORWARD, "p,upd(p),p,q,upd(q)", MemoryModel::Tso);
        let upd_p = events.iter().find(|e| e.is_update() && e.tid.owner() == 0).unwrap();
        let upd_q = events.iter().find(|e| e.is_update() && e.tid.owner() == 1).unwrap();
        let ld = events.iter().find(|e| e.is_load()).unwrap();
        let mut all = ra.all_races();
        all.sort();
        let mut expected = vec![
            Race { earlier: upd_p.clone(), later: upd_q.clone() },
            Race { earlier: ld.clone(), later: upd_q.clone() },
        ];
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn single_thread_execution_has_no_races() {
        let (_p, _events, ra) = analyze(
            "locations x\nthread p:\n  store x 1\n  load $r x\n  store x 2\n",
            "p,p,upd(p),p,upd(p)",
            MemoryModel::Tso,
        );
        assert!(ra.all_races().is_empty());
    }

    #[test]
    fn clock_order_equals_trace_closure() {
        for schedule in
            ["p,p,q,upd(q),q,upd(p)", "p,q,upd(p),p,q,upd(q)", "q,upd(q),p,p,q,upd(p)"]
        {
            let (p, events, ra) = analyze(SB, schedule, MemoryModel::Tso);
            let trace = chronological_trace(&events, MemoryModel::Tso).unwrap();
            let hb = happens_before(&trace, Some(&p)).unwrap();
            for a in &events {
                for b in &events {
                    if a != b {
                        assert_eq!(
                            ra.happens_before(a, b),
                            hb.lt(a, b),
                            "clock/closure disagreement on {} -> {} in {schedule}",
                            a.text(&p),
                            b.text(&p),
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn transitively_implied_reader_race_is_suppressed() {
        // r reads x, s updates x (cf race), then q updates x. The pair
        // (r's load, q's update) is implied through s's update and must
        // not be reported again.
        let src =
            "locations x\nthread q:\n  store x 2\nthread r:\n  load $a x\nthread s:\n  store x 1\n";
        let (_p, events, ra) = analyze(src, "r,s,upd(s),q,upd(q)", MemoryModel::Tso);
        let ld = events.iter().find(|e| e.is_load()).unwrap();
        let upd_s = events.iter().find(|e| e.is_update() && e.tid.owner() == 2).unwrap();
        let upd_q = events.iter().find(|e| e.is_update() && e.tid.owner() == 0).unwrap();
        let mut all = ra.all_races();
        all.sort();
        let mut expected = vec![
            Race { earlier: ld.clone(), later: upd_s.clone() },
            Race { earlier: upd_s.clone(), later: upd_q.clone() },
        ];
        expected.sort();
        assert_eq!(all, expected, "no (load, {}) pair", upd_q.text(&_p));
    }

    #[test]
    fn desync_is_detected() {
        let p = parse_program(FORWARD).unwrap();
        let s = parse_schedule("p,p,q,upd(p),upd(q)", &p).unwrap();
        let (events, _) = run(&p, &s, MemoryModel::Tso).unwrap();
        let mut aux = AuxConfig::new(&p, MemoryModel::Tso);
        // Feeding an update before its store desynchronizes the mirror.
        let upd = events.iter().find(|e| e.is_update()).unwrap();
        assert!(matches!(aux.step(upd), Err(ClockError::Desync(_))));
    }

    #[test]
    fn clock_table_lists_all_threads() {
        let (p, _events, ra) = analyze(SB, "p,p,q,upd(q),q,upd(p)", MemoryModel::Tso);
        let tsv = clock_table_tsv(&ra, &p);
        let header = tsv.lines().next().unwrap();
        assert_eq!(header, "event\tp\tq\tupd(p)\tupd(q)");
        assert_eq!(tsv.lines().count(), 1 + 6);
    }
}
