//! Deterministic operational semantics for SC, TSO and PSO.
//!
//! A configuration holds per-thread register files, program counters and
//! store buffers, plus shared memory. Under TSO each thread has one FIFO
//! buffer of `(location, value)` pairs drained by an auxiliary thread
//! `upd(p)`; under PSO each thread has one FIFO buffer per location,
//! drained by `upd(p,x)`. SC runs on the TSO machinery with the
//! constraint that after a store the only enabled transition is the
//! store's own update, so buffers never hold more than one entry.
//!
//! An execution is a word of events `(thread, instruction, index)` and is
//! uniquely determined by its schedule (the word of thread ids), which is
//! what makes schedules replayable witnesses.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::lang::{Instr, LocId, Operand, Program, Value};

/// The memory model an exploration or replay runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MemoryModel {
    Sc,
    Tso,
    Pso,
}

impl MemoryModel {
    pub fn name(self) -> &'static str {
        match self {
            MemoryModel::Sc => "sc",
            MemoryModel::Tso => "tso",
            MemoryModel::Pso => "pso",
        }
    }

    pub fn from_name(s: &str) -> Option<MemoryModel> {
        match s {
            "sc" => Some(MemoryModel::Sc),
            "tso" => Some(MemoryModel::Tso),
            "pso" => Some(MemoryModel::Pso),
            _ => None,
        }
    }
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A real thread or one of the auxiliary updater threads.
///
/// The derived order is the deterministic scheduling tie-break: real
/// threads by name (thread indices are name-sorted), then auxiliary
/// threads by owner name, then location name under PSO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ThreadId {
    Real(usize),
    AuxTso(usize),
    AuxPso(usize, LocId),
}

impl ThreadId {
    /// The real thread this id belongs to (an auxiliary belongs to its owner).
    pub fn owner(self) -> usize {
        match self {
            ThreadId::Real(p) | ThreadId::AuxTso(p) | ThreadId::AuxPso(p, _) => p,
        }
    }

    pub fn is_aux(self) -> bool {
        !matches!(self, ThreadId::Real(_))
    }

    pub fn text(self, program: &Program) -> String {
        match self {
            ThreadId::Real(p) => program.threads[p].name.clone(),
            ThreadId::AuxTso(p) => format!("upd({})", program.threads[p].name),
            ThreadId::AuxPso(p, x) => {
                format!("upd({},{})", program.threads[p].name, program.loc_name(x))
            }
        }
    }

    /// Parse the schedule text form: a thread name, `upd(p)` or `upd(p,x)`.
    pub fn parse(text: &str, program: &Program) -> Option<ThreadId> {
        if let Some(inner) = text.strip_prefix("upd(").and_then(|s| s.strip_suffix(')')) {
            return match inner.split_once(',') {
                None => program.thread_index(inner.trim()).map(ThreadId::AuxTso),
                Some((p, x)) => {
                    let p = program.thread_index(p.trim())?;
                    let x = program.location_index(x.trim())?;
                    Some(ThreadId::AuxPso(p, x))
                }
            };
        }
        program.thread_index(text.trim()).map(ThreadId::Real)
    }
}

/// What an event did: a program instruction or a buffer-to-memory update.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventInstr {
    Op(Instr),
    Update(LocId),
}

/// One transition of the execution: `(thread, instruction, index)` where
/// `index` is one plus the count of earlier events of the same thread.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub tid: ThreadId,
    pub instr: EventInstr,
    pub index: u32,
}

impl Event {
    pub fn text(&self, program: &Program) -> String {
        let instr = match &self.instr {
            EventInstr::Update(x) => format!("upd {}", program.loc_name(*x)),
            EventInstr::Op(i) => crate::lang::instr_text(program, self.tid.owner(), i),
        };
        format!("{}:{} {}", self.tid.text(program), self.index, instr)
    }

    pub fn loc_accessed(&self) -> Option<LocId> {
        match &self.instr {
            EventInstr::Update(x) => Some(*x),
            EventInstr::Op(Instr::Store { loc, .. }) | EventInstr::Op(Instr::Load { loc, .. }) => {
                Some(*loc)
            }
            _ => None,
        }
    }

    pub fn is_update(&self) -> bool {
        matches!(self.instr, EventInstr::Update(_))
    }

    pub fn is_store(&self) -> bool {
        matches!(self.instr, EventInstr::Op(Instr::Store { .. }))
    }

    pub fn is_load(&self) -> bool {
        matches!(self.instr, EventInstr::Op(Instr::Load { .. }))
    }
}

/// Execution status of one real thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreadStatus {
    Running,
    Finished,
    /// `assume` failed: the execution is silently discarded from
    /// final-condition evaluation, the thread takes no further steps.
    Blocked,
    /// `assert` failed: the execution is a violation witness.
    Violated,
    /// The per-thread step bound was hit.
    BoundExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadState {
    pub regs: Vec<Value>,
    pub pc: usize,
    pub steps: u64,
    pub status: ThreadStatus,
}

/// Store buffers, laid out per model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Buffers {
    /// One FIFO word of `(location, value)` pairs per thread (SC and TSO).
    Tso(Vec<VecDeque<(LocId, Value)>>),
    /// One FIFO word of values per thread and location (PSO).
    Pso(Vec<Vec<VecDeque<Value>>>),
}

/// Per-thread-id event counters, used to assign event indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventCounts {
    real: Vec<u32>,
    aux_tso: Vec<u32>,
    aux_pso: Vec<Vec<u32>>,
}

impl EventCounts {
    fn new(threads: usize, locs: usize, model: MemoryModel) -> Self {
        EventCounts {
            real: vec![0; threads],
            aux_tso: match model {
                MemoryModel::Pso => Vec::new(),
                _ => vec![0; threads],
            },
            aux_pso: match model {
                MemoryModel::Pso => vec![vec![0; locs]; threads],
                _ => Vec::new(),
            },
        }
    }

    fn bump(&mut self, tid: ThreadId) -> u32 {
        let slot = match tid {
            ThreadId::Real(p) => &mut self.real[p],
            ThreadId::AuxTso(p) => &mut self.aux_tso[p],
            ThreadId::AuxPso(p, x) => &mut self.aux_pso[p][x],
        };
        *slot += 1;
        *slot
    }
}

/// A machine configuration: thread-local state, buffers and memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub threads: Vec<ThreadState>,
    pub buffers: Buffers,
    pub memory: Vec<Value>,
    pub counts: EventCounts,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("thread {tid:?} is not enabled (caller bug)")]
    NotEnabled { tid: ThreadId },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("schedule infeasible at position {position}: {tid:?} is not enabled")]
    ScheduleInfeasible { position: usize, tid: ThreadId },
}

/// All registers and memory 0, buffers empty, program counters at the
/// first real instruction of each thread.
pub fn initial_config(program: &Program, model: MemoryModel) -> Configuration {
    let nthreads = program.threads.len();
    let nlocs = program.locations.len();
    let threads = program
        .threads
        .iter()
        .map(|t| {
            let mut st = ThreadState {
                regs: vec![0; t.regs.len()],
                pc: 0,
                steps: 0,
                status: ThreadStatus::Running,
            };
            normalize(&mut st, &t.instrs);
            st
        })
        .collect();
    let buffers = match model {
        MemoryModel::Pso => Buffers::Pso(vec![vec![VecDeque::new(); nlocs]; nthreads]),
        _ => Buffers::Tso(vec![VecDeque::new(); nthreads]),
    };
    Configuration {
        threads,
        buffers,
        memory: vec![0; nlocs],
        counts: EventCounts::new(nthreads, nlocs, model),
    }
}

/// Advance the pc past labels; mark the thread finished at the end.
fn normalize(st: &mut ThreadState, instrs: &[Instr]) {
    while st.pc < instrs.len() && instrs[st.pc].is_label() {
        st.pc += 1;
    }
    if st.pc >= instrs.len() && st.status == ThreadStatus::Running {
        st.status = ThreadStatus::Finished;
    }
}

impl Configuration {
    /// The next instruction of a running thread, labels skipped.
    pub fn next_instr<'p>(&self, program: &'p Program, p: usize) -> Option<&'p Instr> {
        let st = &self.threads[p];
        if st.status != ThreadStatus::Running {
            return None;
        }
        program.threads[p].instrs.get(st.pc)
    }

    fn tso_buffers(&self) -> &Vec<VecDeque<(LocId, Value)>> {
        match &self.buffers {
            Buffers::Tso(b) => b,
            Buffers::Pso(_) => unreachable!("TSO buffers requested under PSO"),
        }
    }

    fn pso_buffers(&self) -> &Vec<Vec<VecDeque<Value>>> {
        match &self.buffers {
            Buffers::Pso(b) => b,
            Buffers::Tso(_) => unreachable!("PSO buffers requested under SC/TSO"),
        }
    }

    /// True when every store buffer is empty.
    pub fn buffers_empty(&self) -> bool {
        match &self.buffers {
            Buffers::Tso(b) => b.iter().all(|q| q.is_empty()),
            Buffers::Pso(b) => b.iter().all(|per| per.iter().all(|q| q.is_empty())),
        }
    }

    fn thread_buffers_empty(&self, p: usize) -> bool {
        match &self.buffers {
            Buffers::Tso(b) => b[p].is_empty(),
            Buffers::Pso(b) => b[p].iter().all(|q| q.is_empty()),
        }
    }

    /// Buffer lookup B(x): the value of the newest pending store of `p`
    /// to `x`, if any.
    pub fn buffer_value(&self, model: MemoryModel, p: usize, x: LocId) -> Option<Value> {
        match model {
            MemoryModel::Pso => self.pso_buffers()[p][x].back().copied(),
            _ => self.tso_buffers()[p]
                .iter()
                .rev()
                .find(|(l, _)| *l == x)
                .map(|(_, v)| *v),
        }
    }

    fn eval_operand(&self, p: usize, op: Operand) -> Value {
        match op {
            Operand::Reg(r) => self.threads[p].regs[r],
            Operand::Const(v) => v,
        }
    }

    fn is_enabled(&self, program: &Program, model: MemoryModel, tid: ThreadId) -> bool {
        match tid {
            ThreadId::Real(p) => {
                if p >= self.threads.len() {
                    return false;
                }
                let instr = match self.next_instr(program, p) {
                    Some(i) => i,
                    None => return false,
                };
                // Under SC a pending store's own update preempts everything.
                if model == MemoryModel::Sc && !self.buffers_empty() {
                    return false;
                }
                match instr {
                    Instr::Fence => self.thread_buffers_empty(p),
                    _ => true,
                }
            }
            ThreadId::AuxTso(p) => match (&self.buffers, model) {
                (Buffers::Tso(b), MemoryModel::Tso | MemoryModel::Sc) => {
                    p < b.len() && !b[p].is_empty()
                }
                _ => false,
            },
            ThreadId::AuxPso(p, x) => match (&self.buffers, model) {
                (Buffers::Pso(b), MemoryModel::Pso) => {
                    p < b.len() && x < b[p].len() && !b[p][x].is_empty()
                }
                _ => false,
            },
        }
    }

    /// The set of enabled thread ids, in the deterministic scheduling order.
    pub fn enabled(&self, program: &Program, model: MemoryModel) -> Vec<ThreadId> {
        let mut out = Vec::new();
        // Under SC, a nonempty buffer forces the pending update next.
        if model == MemoryModel::Sc {
            if let Buffers::Tso(b) = &self.buffers {
                for (p, q) in b.iter().enumerate() {
                    if !q.is_empty() {
                        return vec![ThreadId::AuxTso(p)];
                    }
                }
            }
        }
        for p in 0..self.threads.len() {
            if self.is_enabled(program, model, ThreadId::Real(p)) {
                out.push(ThreadId::Real(p));
            }
        }
        match &self.buffers {
            Buffers::Tso(b) => {
                for (p, q) in b.iter().enumerate() {
                    if !q.is_empty() {
                        out.push(ThreadId::AuxTso(p));
                    }
                }
            }
            Buffers::Pso(b) => {
                for (p, per) in b.iter().enumerate() {
                    for (x, q) in per.iter().enumerate() {
                        if !q.is_empty() {
                            out.push(ThreadId::AuxPso(p, x));
                        }
                    }
                }
            }
        }
        out
    }

    /// Execute one transition of `tid`, returning the event performed.
    pub fn step(
        &mut self,
        program: &Program,
        model: MemoryModel,
        tid: ThreadId,
    ) -> Result<Event, StepError> {
        if !self.is_enabled(program, model, tid) {
            return Err(StepError::NotEnabled { tid });
        }
        let instr = match tid {
            ThreadId::Real(p) => {
                let instr = self.next_instr(program, p).expect("enabled thread has an instruction").clone();
                self.exec_real(program, model, p, &instr);
                EventInstr::Op(instr)
            }
            ThreadId::AuxTso(p) => {
                let (x, v) = match &mut self.buffers {
                    Buffers::Tso(b) => b[p].pop_front().expect("enabled update has a buffer entry"),
                    Buffers::Pso(_) => unreachable!(),
                };
                self.memory[x] = v;
                EventInstr::Update(x)
            }
            ThreadId::AuxPso(p, x) => {
                let v = match &mut self.buffers {
                    Buffers::Pso(b) => b[p][x].pop_front().expect("enabled update has a buffer entry"),
                    Buffers::Tso(_) => unreachable!(),
                };
                self.memory[x] = v;
                EventInstr::Update(x)
            }
        };
        let index = self.counts.bump(tid);
        Ok(Event { tid, instr, index })
    }

    fn exec_real(&mut self, program: &Program, model: MemoryModel, p: usize, instr: &Instr) {
        let mut next_pc = self.threads[p].pc + 1;
        match instr {
            Instr::Store { loc, src } => {
                let v = self.eval_operand(p, *src);
                match &mut self.buffers {
                    Buffers::Tso(b) => b[p].push_back((*loc, v)),
                    Buffers::Pso(b) => b[p][*loc].push_back(v),
                }
            }
            Instr::Load { dst, loc } => {
                let v = self
                    .buffer_value(model, p, *loc)
                    .unwrap_or(self.memory[*loc]);
                self.threads[p].regs[*dst] = v;
            }
            Instr::Fence => {}
            Instr::Mov { dst, src } => {
                self.threads[p].regs[*dst] = self.eval_operand(p, *src);
            }
            Instr::Add { dst, a, b } => {
                let va = self.eval_operand(p, *a);
                let vb = self.eval_operand(p, *b);
                self.threads[p].regs[*dst] = va.wrapping_add(vb);
            }
            Instr::Bnz { cond, target, .. } => {
                if self.threads[p].regs[*cond] != 0 {
                    next_pc = *target;
                }
            }
            Instr::Label { .. } => unreachable!("labels are skipped by pc normalization"),
            Instr::Assume { reg, cmp, rhs } => {
                let lhs = self.threads[p].regs[*reg];
                let rhs = self.eval_operand(p, *rhs);
                if !cmp.eval(lhs, rhs) {
                    self.threads[p].status = ThreadStatus::Blocked;
                }
            }
            Instr::Assert { reg, cmp, rhs } => {
                let lhs = self.threads[p].regs[*reg];
                let rhs = self.eval_operand(p, *rhs);
                if !cmp.eval(lhs, rhs) {
                    self.threads[p].status = ThreadStatus::Violated;
                }
            }
        }
        let st = &mut self.threads[p];
        st.steps += 1;
        if st.status == ThreadStatus::Running {
            st.pc = next_pc;
            normalize(st, &program.threads[p].instrs);
        }
    }
}

/// Replay a schedule from the initial configuration.
pub fn run(
    program: &Program,
    schedule: &[ThreadId],
    model: MemoryModel,
) -> Result<(Vec<Event>, Configuration), RunError> {
    let mut config = initial_config(program, model);
    let mut events = Vec::with_capacity(schedule.len());
    for (position, &tid) in schedule.iter().enumerate() {
        match config.step(program, model, tid) {
            Ok(e) => events.push(e),
            Err(StepError::NotEnabled { tid }) => {
                return Err(RunError::ScheduleInfeasible { position, tid });
            }
        }
    }
    Ok((events, config))
}

/// Append update events in a fixed order (thread name order, FIFO per
/// buffer, location name order under PSO) until all buffers are empty.
pub fn complete(
    program: &Program,
    model: MemoryModel,
    events: &mut Vec<Event>,
    config: &mut Configuration,
) {
    for p in 0..config.threads.len() {
        loop {
            let tid = match &config.buffers {
                Buffers::Tso(b) => {
                    if b[p].is_empty() {
                        break;
                    }
                    ThreadId::AuxTso(p)
                }
                Buffers::Pso(b) => match b[p].iter().position(|q| !q.is_empty()) {
                    Some(x) => ThreadId::AuxPso(p, x),
                    None => break,
                },
            };
            let e = config.step(program, model, tid).expect("nonempty buffer update is enabled");
            events.push(e);
        }
    }
}

/// The matching update event of a store, or `Pending` when the store has
/// not reached memory within the execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreUpdate {
    Update(Event),
    Pending,
}

/// The update event a load would buffer-forward from: the update of the
/// latest preceding same-thread store to the location. `Init` when there
/// is no such store, `Pending` when that store has not reached memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rowe {
    Init,
    Update(Event),
    Pending,
}

/// stupd: map a store event to its update event by counting the owning
/// thread's stores (all stores under SC/TSO, same-location stores under
/// PSO).
pub fn stupd(events: &[Event], store: &Event, model: MemoryModel) -> StoreUpdate {
    let (p, loc) = match (&store.tid, &store.instr) {
        (ThreadId::Real(p), EventInstr::Op(Instr::Store { loc, .. })) => (*p, *loc),
        _ => panic!("stupd called on a non-store event"),
    };
    let k = events
        .iter()
        .filter(|e| {
            e.tid == store.tid
                && e.index <= store.index
                && match (&e.instr, model) {
                    (EventInstr::Op(Instr::Store { loc: l, .. }), MemoryModel::Pso) => *l == loc,
                    (EventInstr::Op(Instr::Store { .. }), _) => true,
                    _ => false,
                }
        })
        .count() as u32;
    let target_tid = match model {
        MemoryModel::Pso => ThreadId::AuxPso(p, loc),
        _ => ThreadId::AuxTso(p),
    };
    events
        .iter()
        .find(|e| e.tid == target_tid && e.index == k)
        .map(|e| StoreUpdate::Update(e.clone()))
        .unwrap_or(StoreUpdate::Pending)
}

/// rowe: see [`Rowe`].
pub fn rowe(events: &[Event], load: &Event, model: MemoryModel) -> Rowe {
    let (_p, loc) = match (&load.tid, &load.instr) {
        (ThreadId::Real(p), EventInstr::Op(Instr::Load { loc, .. })) => (*p, *loc),
        _ => panic!("rowe called on a non-load event"),
    };
    let prev_store = events
        .iter()
        .filter(|e| {
            e.tid == load.tid
                && e.index < load.index
                && matches!(&e.instr, EventInstr::Op(Instr::Store { loc: l, .. }) if *l == loc)
        })
        .max_by_key(|e| e.index);
    match prev_store {
        None => Rowe::Init,
        Some(s) => match stupd(events, s, model) {
            StoreUpdate::Update(u) => Rowe::Update(u),
            StoreUpdate::Pending => Rowe::Pending,
        },
    }
}

/// An execution is completed when every store has reached memory.
pub fn is_completed(events: &[Event], model: MemoryModel) -> bool {
    events
        .iter()
        .filter(|e| e.is_store())
        .all(|s| stupd(events, s, model) != StoreUpdate::Pending)
}

/// Parse the comma-separated schedule text form,
/// e.g. `p,p,q,upd(q),q,upd(p)`. Commas inside `upd(p,x)` do not split.
pub fn parse_schedule(text: &str, program: &Program) -> Result<Vec<ThreadId>, String> {
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                items.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    items.push(&text[start..]);
    items
        .into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| ThreadId::parse(s, program).ok_or_else(|| format!("unknown thread id `{s}`")))
        .collect()
}

/// Render a schedule in the text form.
pub fn schedule_text(schedule: &[Event], program: &Program) -> String {
    schedule
        .iter()
        .map(|e| e.tid.text(program))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    const SB: &str = "\
locations x y
thread p:
  store x 1
  load $r y
thread q:
  store y 1
  load $s x
";

    fn sched(program: &Program, text: &str) -> Vec<ThreadId> {
        parse_schedule(text, program).unwrap()
    }

    fn reg(program: &Program, config: &Configuration, thread: &str, reg: &str) -> Value {
        let p = program.thread_index(thread).unwrap();
        let r = program.threads[p].regs.iter().position(|x| x == reg).unwrap();
        config.threads[p].regs[r]
    }

    #[test]
    fn initial_config_is_zeroed() {
        let p = parse_program(SB).unwrap();
        let c = initial_config(&p, MemoryModel::Tso);
        assert_eq!(c.memory, vec![0, 0]);
        assert!(c.buffers_empty());
        assert!(c.threads.iter().all(|t| t.pc == 0 && t.status == ThreadStatus::Running));
    }

    #[test]
    fn zero_thread_program_has_empty_locals() {
        let p = parse_program("locations\n").unwrap();
        let c = initial_config(&p, MemoryModel::Tso);
        assert!(c.threads.is_empty());
        assert!(c.enabled(&p, MemoryModel::Tso).is_empty());
    }

    #[test]
    fn pso_has_one_buffer_per_thread_and_location() {
        let p = parse_program(SB).unwrap();
        let c = initial_config(&p, MemoryModel::Pso);
        match &c.buffers {
            Buffers::Pso(b) => {
                assert_eq!(b.len(), 2);
                assert!(b.iter().all(|per| per.len() == p.locations.len()));
            }
            Buffers::Tso(_) => panic!("expected PSO buffers"),
        }
    }

    #[test]
    fn store_enables_own_update_under_tso() {
        let prog = parse_program(SB).unwrap();
        let mut c = initial_config(&prog, MemoryModel::Tso);
        let p = ThreadId::Real(prog.thread_index("p").unwrap());
        c.step(&prog, MemoryModel::Tso, p).unwrap();
        let enabled = c.enabled(&prog, MemoryModel::Tso);
        assert!(enabled.contains(&ThreadId::AuxTso(0)));
    }

    #[test]
    fn fence_requires_empty_buffer() {
        let prog = parse_program("locations x\nthread p:\n  store x 1\n  fence\n").unwrap();
        let mut c = initial_config(&prog, MemoryModel::Tso);
        c.step(&prog, MemoryModel::Tso, ThreadId::Real(0)).unwrap();
        let enabled = c.enabled(&prog, MemoryModel::Tso);
        assert!(!enabled.contains(&ThreadId::Real(0)));
        assert_eq!(enabled, vec![ThreadId::AuxTso(0)]);
        c.step(&prog, MemoryModel::Tso, ThreadId::AuxTso(0)).unwrap();
        assert!(c.enabled(&prog, MemoryModel::Tso).contains(&ThreadId::Real(0)));
    }

    #[test]
    fn update_writes_memory_and_empties_buffer() {
        let prog = parse_program("locations x\nthread p:\n  store x 1\n").unwrap();
        let mut c = initial_config(&prog, MemoryModel::Tso);
        c.step(&prog, MemoryModel::Tso, ThreadId::Real(0)).unwrap();
        let e = c.step(&prog, MemoryModel::Tso, ThreadId::AuxTso(0)).unwrap();
        assert_eq!(e, Event { tid: ThreadId::AuxTso(0), instr: EventInstr::Update(0), index: 1 });
        assert_eq!(c.memory[0], 1);
        assert!(c.buffers_empty());
    }

    #[test]
    fn load_forwards_from_own_buffer() {
        let prog = parse_program("locations x\nthread p:\n  store x 1\n  load $r x\n").unwrap();
        let mut c = initial_config(&prog, MemoryModel::Tso);
        c.step(&prog, MemoryModel::Tso, ThreadId::Real(0)).unwrap();
        c.step(&prog, MemoryModel::Tso, ThreadId::Real(0)).unwrap();
        assert_eq!(reg(&prog, &c, "p", "r"), 1);
        assert_eq!(c.memory[0], 0, "memory untouched by forwarding");
    }

    #[test]
    fn local_instructions_only_touch_registers() {
        let prog = parse_program("locations x\nthread p:\n  mov $r 5\n").unwrap();
        let mut c = initial_config(&prog, MemoryModel::Tso);
        let before_mem = c.memory.clone();
        c.step(&prog, MemoryModel::Tso, ThreadId::Real(0)).unwrap();
        assert_eq!(reg(&prog, &c, "p", "r"), 5);
        assert_eq!(c.memory, before_mem);
        assert!(c.buffers_empty());
    }

    #[test]
    fn sb_schedule_reaches_both_zero() {
        // Fig 2 schedule: both loads run before the buffered stores land.
        let prog = parse_program(SB).unwrap();
        let s = sched(&prog, "p,p,q,upd(q),q,upd(p)");
        let (events, config) = run(&prog, &s, MemoryModel::Tso).unwrap();
        assert_eq!(reg(&prog, &config, "p", "r"), 0);
        assert_eq!(reg(&prog, &config, "q", "s"), 0);
        assert_eq!(config.memory, vec![1, 1]);
        assert!(is_completed(&events, MemoryModel::Tso));
    }

    #[test]
    fn mp_schedule_reaches_one_zero_under_pso() {
        let prog = parse_program(
            "locations x y\nthread p:\n  store x 1\n  store y 1\nthread q:\n  load $r y\n  load $s x\n",
        )
        .unwrap();
        let s = sched(&prog, "p,p,upd(p,y),q,q,upd(p,x)");
        let (_, config) = run(&prog, &s, MemoryModel::Pso).unwrap();
        assert_eq!(reg(&prog, &config, "q", "r"), 1);
        assert_eq!(reg(&prog, &config, "q", "s"), 0);
    }

    #[test]
    fn single_thread_sc_schedule_is_sequential() {
        let prog =
            parse_program("locations x\nthread p:\n  mov $a 2\n  add $a $a 3\n  store x $a\n  load $r x\n")
                .unwrap();
        let s = sched(&prog, "p,p,p,upd(p),p");
        let (_, config) = run(&prog, &s, MemoryModel::Sc).unwrap();
        assert_eq!(reg(&prog, &config, "p", "a"), 5);
        assert_eq!(reg(&prog, &config, "p", "r"), 5);
        assert_eq!(config.memory[0], 5);
    }

    #[test]
    fn sc_forces_update_after_store() {
        let prog = parse_program(SB).unwrap();
        let mut c = initial_config(&prog, MemoryModel::Sc);
        c.step(&prog, MemoryModel::Sc, ThreadId::Real(0)).unwrap();
        assert_eq!(c.enabled(&prog, MemoryModel::Sc), vec![ThreadId::AuxTso(0)]);
    }

    #[test]
    fn infeasible_schedule_reports_position() {
        let prog = parse_program(SB).unwrap();
        let s = sched(&prog, "upd(p)");
        let err = run(&prog, &s, MemoryModel::Tso).unwrap_err();
        assert_eq!(err, RunError::ScheduleInfeasible { position: 0, tid: ThreadId::AuxTso(0) });
    }

    #[test]
    fn assume_false_blocks_thread() {
        let prog = parse_program("locations x\nthread p:\n  load $r x\n  assume $r == 1\n  store x 2\n").unwrap();
        let s = sched(&prog, "p,p");
        let (_, config) = run(&prog, &s, MemoryModel::Tso).unwrap();
        assert_eq!(config.threads[0].status, ThreadStatus::Blocked);
        assert!(config.enabled(&prog, MemoryModel::Tso).is_empty());
    }

    #[test]
    fn assert_false_marks_violation() {
        let prog = parse_program("locations x\nthread p:\n  load $r x\n  assert $r == 1\n").unwrap();
        let s = sched(&prog, "p,p");
        let (_, config) = run(&prog, &s, MemoryModel::Tso).unwrap();
        assert_eq!(config.threads[0].status, ThreadStatus::Violated);
    }

    #[test]
    fn complete_appends_pending_updates() {
        let prog = parse_program(SB).unwrap();
        let s = sched(&prog, "p,q");
        let (mut events, mut config) = run(&prog, &s, MemoryModel::Tso).unwrap();
        assert!(!is_completed(&events, MemoryModel::Tso));
        complete(&prog, MemoryModel::Tso, &mut events, &mut config);
        assert!(is_completed(&events, MemoryModel::Tso));
        assert_eq!(config.memory, vec![1, 1]);
        let len = events.len();
        // already-completed execution is unchanged
        complete(&prog, MemoryModel::Tso, &mut events, &mut config);
        assert_eq!(events.len(), len);
    }

    #[test]
    fn stupd_matches_fig2_execution() {
        let prog = parse_program(SB).unwrap();
        let s = sched(&prog, "p,p,q,upd(q),q,upd(p)");
        let (events, _) = run(&prog, &s, MemoryModel::Tso).unwrap();
        let store_p = &events[0];
        assert!(store_p.is_store());
        match stupd(&events, store_p, MemoryModel::Tso) {
            StoreUpdate::Update(u) => {
                assert_eq!(u.tid, ThreadId::AuxTso(prog.thread_index("p").unwrap()));
                assert_eq!(u.index, 1);
            }
            StoreUpdate::Pending => panic!("expected an update"),
        }
    }

    #[test]
    fn stupd_is_pending_without_update() {
        let prog = parse_program("locations x\nthread p:\n  store x 1\n").unwrap();
        let s = sched(&prog, "p");
        let (events, _) = run(&prog, &s, MemoryModel::Tso).unwrap();
        assert_eq!(stupd(&events, &events[0], MemoryModel::Tso), StoreUpdate::Pending);
    }

    #[test]
    fn stupd_under_pso_counts_same_location_stores() {
        let prog = parse_program(
            "locations x y\nthread p:\n  store x 1\n  store y 1\nthread q:\n  load $r y\n  load $s x\n",
        )
        .unwrap();
        let s = sched(&prog, "p,p,upd(p,y),q,q,upd(p,x)");
        let (events, _) = run(&prog, &s, MemoryModel::Pso).unwrap();
        // (p, st y, 2) maps to (upd(p,y), upd y, 1)
        let store_y = &events[1];
        match stupd(&events, store_y, MemoryModel::Pso) {
            StoreUpdate::Update(u) => {
                assert_eq!(u.tid, ThreadId::AuxPso(0, prog.location_index("y").unwrap()));
                assert_eq!(u.index, 1);
            }
            StoreUpdate::Pending => panic!("expected an update"),
        }
    }

    #[test]
    fn rowe_is_init_without_preceding_store() {
        let prog = parse_program(SB).unwrap();
        let s = sched(&prog, "p,p,q,upd(q),q,upd(p)");
        let (events, _) = run(&prog, &s, MemoryModel::Tso).unwrap();
        // (q, ld x, 2): q never stored to x
        let load_x = &events[4];
        assert!(load_x.is_load());
        assert_eq!(rowe(&events, load_x, MemoryModel::Tso), Rowe::Init);
    }

    #[test]
    fn rowe_points_to_own_store_update() {
        let prog = parse_program("locations x\nthread p:\n  store x 1\n  load $r x\nthread q:\n  store x 2\n").unwrap();
        let s = sched(&prog, "p,p,q,upd(p),upd(q)");
        let (events, _) = run(&prog, &s, MemoryModel::Tso).unwrap();
        let load = &events[1];
        let store = &events[0];
        assert_eq!(
            rowe(&events, load, MemoryModel::Tso),
            match stupd(&events, store, MemoryModel::Tso) {
                StoreUpdate::Update(u) => Rowe::Update(u),
                StoreUpdate::Pending => Rowe::Pending,
            }
        );
    }

    #[test]
    fn run_is_deterministic() {
        let prog = parse_program(SB).unwrap();
        let s = sched(&prog, "p,q,upd(q),p,q,upd(p)");
        let a = run(&prog, &s, MemoryModel::Tso).unwrap();
        let b = run(&prog, &s, MemoryModel::Tso).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
