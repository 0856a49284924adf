//! Exploration engines: exhaustive schedule enumeration and
//! race-reversal DPOR with sleep sets.
//!
//! Both engines run the same depth-first search over scheduling choices.
//! Brute force backtracks over every enabled thread at every node and
//! serves as the coverage oracle. DPOR explores a first execution, asks
//! the clock calculus for its races, and for every race inserts one
//! thread into the backtrack set of the node before the earlier race
//! event: the first weak initial of the happens-before chain leading to
//! the later event, preferring an initial that reaches it through
//! structural (po/su/uf) edges. Sleep sets prune branches whose first
//! step commutes with everything already explored at the node.
//!
//! Under SC the engine fuses every store with its forced update into one
//! scheduling step, so chronological traces degenerate to Mazurkiewicz
//! traces and backtrack points stay schedulable.
//!
//! Every report carries the runtime self-check that the number of
//! distinct chronological traces equals the number of distinct
//! Shasha-Snir traces.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::clocks::{races_of, Race, RaceAnalysis};
use crate::lang::{
    FinalCondition, Formula, Instr, Operand, Program, Quantifier, Thread, Value,
};
use crate::semantics::{
    initial_config, schedule_text, Configuration, Event, MemoryModel, ThreadId, ThreadStatus,
};
use crate::traces::{
    chronological_trace, shasha_snir_trace, to_json, ChronologicalTrace, ShashaSnirTrace, Trace,
};

/// Exploration limits. `max_steps` cuts loops per thread; `max_nodes`
/// caps the total number of scheduling steps across the search.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_steps: u64,
    pub max_nodes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_steps: 10_000, max_nodes: 1_000_000 }
    }
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("exploration budget exceeded after {nodes} nodes")]
    LimitExceeded { nodes: u64 },
    #[error("internal error: {0}")]
    Internal(String),
}

/// A reported violation with its replayable witness schedule.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Violation {
    pub description: String,
    pub witness: String,
}

/// One final state rendered for reports.
#[derive(Debug, Clone, Serialize)]
pub struct FinalStateEntry {
    pub registers: BTreeMap<String, BTreeMap<String, Value>>,
    pub memory: BTreeMap<String, Value>,
    pub witness: String,
}

/// Summary of one exploration, serializable as the report JSON.
#[derive(Debug, Serialize)]
pub struct ExplorationReport {
    pub model: String,
    pub algorithm: String,
    pub executions_explored: u64,
    pub blocked: u64,
    pub bound_exceeded: u64,
    pub distinct_chronological_traces: usize,
    pub distinct_shasha_snir_traces: usize,
    pub distinct_access_orderings: usize,
    pub redundancy: f64,
    pub violations: Vec<Violation>,
    pub final_states: Vec<FinalStateEntry>,
    pub chronological_traces: Vec<serde_json::Value>,
    pub wall_time_ms: u64,
}

/// Register files and memory of a terminal configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FinalState {
    pub regs: Vec<Vec<Value>>,
    pub memory: Vec<Value>,
}

impl FinalState {
    pub fn eval(&self, f: &Formula) -> bool {
        match f {
            Formula::Atom { thread, reg, cmp, rhs } => cmp.eval(self.regs[*thread][*reg], *rhs),
            Formula::Not(g) => !self.eval(g),
            Formula::And(a, b) => self.eval(a) && self.eval(b),
            Formula::Or(a, b) => self.eval(a) || self.eval(b),
        }
    }
}

/// One maximal execution recorded by brute force.
#[derive(Debug, Clone)]
pub struct RecordedExecution {
    pub events: Vec<Event>,
    pub blocked: bool,
    pub bound_exceeded: bool,
    pub violated: bool,
}

/// Full outcome of an exploration: the report plus the typed trace sets
/// the acceptance oracles compare.
#[derive(Debug)]
pub struct Exploration {
    pub report: ExplorationReport,
    pub chronological_traces: BTreeMap<ChronologicalTrace, String>,
    pub shasha_snir_traces: BTreeMap<ShashaSnirTrace, String>,
    pub final_states: BTreeMap<FinalState, String>,
    /// Populated by brute force only.
    pub executions: Vec<RecordedExecution>,
}

/// How a thread's next step interacts with shared memory, for the sleep
/// set independence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StepKind {
    /// An update to the location (or a fused SC store).
    Write(usize),
    /// A load that will read the location from memory.
    MemRead(usize),
    /// Store appends, buffer-forwarded loads, fences and local steps.
    Silent,
}

fn dependent(a: StepKind, b: StepKind) -> bool {
    match (a, b) {
        (StepKind::Write(x), StepKind::Write(y)) => x == y,
        (StepKind::Write(x), StepKind::MemRead(y)) => x == y,
        (StepKind::MemRead(x), StepKind::Write(y)) => x == y,
        _ => false,
    }
}

struct Node {
    config: Configuration,
    enabled: Vec<ThreadId>,
    backtrack: BTreeSet<ThreadId>,
    done: BTreeSet<ThreadId>,
    sleep: BTreeSet<ThreadId>,
    chosen: Option<ThreadId>,
    event_start: usize,
}

struct Engine<'p> {
    program: &'p Program,
    model: MemoryModel,
    limits: Limits,
    dpor: bool,
    record_executions: bool,
    nodes_used: u64,
    executions_explored: u64,
    blocked: u64,
    bound_exceeded: u64,
    ct_set: BTreeMap<ChronologicalTrace, String>,
    ss_set: BTreeMap<ShashaSnirTrace, String>,
    access_orderings: BTreeSet<Vec<Event>>,
    finals: BTreeMap<FinalState, String>,
    violations: BTreeMap<String, String>,
    executions: Vec<RecordedExecution>,
}

impl<'p> Engine<'p> {
    fn new(program: &'p Program, model: MemoryModel, limits: Limits, dpor: bool) -> Self {
        Engine {
            program,
            model,
            limits,
            dpor,
            record_executions: !dpor,
            nodes_used: 0,
            executions_explored: 0,
            blocked: 0,
            bound_exceeded: 0,
            ct_set: BTreeMap::new(),
            ss_set: BTreeMap::new(),
            access_orderings: BTreeSet::new(),
            finals: BTreeMap::new(),
            violations: BTreeMap::new(),
            executions: Vec::new(),
        }
    }

    fn step_kind(&self, config: &Configuration, tid: ThreadId) -> StepKind {
        match tid {
            ThreadId::Real(p) => match config.next_instr(self.program, p) {
                Some(Instr::Store { loc, .. }) if self.model == MemoryModel::Sc => {
                    StepKind::Write(*loc)
                }
                Some(Instr::Load { loc, .. }) => {
                    if config.buffer_value(self.model, p, *loc).is_some() {
                        StepKind::Silent
                    } else {
                        StepKind::MemRead(*loc)
                    }
                }
                _ => StepKind::Silent,
            },
            ThreadId::AuxTso(p) => match &config.buffers {
                crate::semantics::Buffers::Tso(b) => match b[p].front() {
                    Some((loc, _)) => StepKind::Write(*loc),
                    None => StepKind::Silent,
                },
                _ => StepKind::Silent,
            },
            ThreadId::AuxPso(_, x) => StepKind::Write(x),
        }
    }

    /// Execute one scheduling step; under SC a store drags its forced
    /// update along as part of the same step.
    fn exec_step(
        &mut self,
        config: &mut Configuration,
        tid: ThreadId,
        events: &mut Vec<Event>,
        node_of_event: &mut Vec<usize>,
        node_idx: usize,
    ) -> Result<(), ExploreError> {
        let e = config
            .step(self.program, self.model, tid)
            .map_err(|e| ExploreError::Internal(format!("engine scheduled a disabled thread: {e}")))?;
        let was_store = e.is_store();
        events.push(e);
        node_of_event.push(node_idx);
        if let ThreadId::Real(p) = tid {
            let st = &mut config.threads[p];
            if st.status == ThreadStatus::Running && st.steps >= self.limits.max_steps {
                st.status = ThreadStatus::BoundExceeded;
            }
            if self.model == MemoryModel::Sc && was_store {
                let e = config
                    .step(self.program, self.model, ThreadId::AuxTso(p))
                    .map_err(|e| ExploreError::Internal(format!("forced SC update failed: {e}")))?;
                events.push(e);
                node_of_event.push(node_idx);
            }
        }
        Ok(())
    }

    fn new_node(&self, config: Configuration, sleep: BTreeSet<ThreadId>, event_start: usize) -> Node {
        let enabled = config.enabled(self.program, self.model);
        Node {
            config,
            enabled,
            backtrack: BTreeSet::new(),
            done: BTreeSet::new(),
            sleep,
            chosen: None,
            event_start,
        }
    }

    fn explore(&mut self) -> Result<(), ExploreError> {
        let mut events: Vec<Event> = Vec::new();
        let mut node_of_event: Vec<usize> = Vec::new();
        let mut stack: Vec<Node> =
            vec![self.new_node(initial_config(self.program, self.model), BTreeSet::new(), 0)];
        loop {
            let top = stack.len() - 1;
            if stack[top].enabled.is_empty() {
                self.process_leaf(&mut stack, &events, &node_of_event)?;
                if !Self::pop_to_pending(self.dpor, &mut stack, &mut events, &mut node_of_event) {
                    return Ok(());
                }
                continue;
            }
            if stack[top].backtrack.is_empty() {
                if self.dpor {
                    let n = &stack[top];
                    match n.enabled.iter().find(|t| !n.sleep.contains(t)).copied() {
                        Some(t) => {
                            stack[top].backtrack.insert(t);
                        }
                        None => {
                            // Everything enabled here is asleep: the whole
                            // subtree is covered by earlier exploration.
                            if !Self::pop_to_pending(
                                self.dpor,
                                &mut stack,
                                &mut events,
                                &mut node_of_event,
                            ) {
                                return Ok(());
                            }
                            continue;
                        }
                    }
                } else {
                    let all: Vec<ThreadId> = stack[top].enabled.clone();
                    stack[top].backtrack.extend(all);
                }
            }
            let next = {
                let n = &stack[top];
                n.backtrack
                    .iter()
                    .find(|t| !n.done.contains(t) && !n.sleep.contains(t))
                    .copied()
            };
            match next {
                None => {
                    if !Self::pop_to_pending(self.dpor, &mut stack, &mut events, &mut node_of_event)
                    {
                        return Ok(());
                    }
                }
                Some(t) => {
                    self.nodes_used += 1;
                    if self.nodes_used > self.limits.max_nodes {
                        return Err(ExploreError::LimitExceeded { nodes: self.nodes_used });
                    }
                    let child_sleep: BTreeSet<ThreadId> = if self.dpor {
                        let n = &stack[top];
                        let tk = self.step_kind(&n.config, t);
                        n.sleep
                            .iter()
                            .filter(|u| !dependent(self.step_kind(&n.config, **u), tk))
                            .copied()
                            .collect()
                    } else {
                        BTreeSet::new()
                    };
                    let event_start = events.len();
                    let mut config = stack[top].config.clone();
                    self.exec_step(&mut config, t, &mut events, &mut node_of_event, top)?;
                    stack[top].chosen = Some(t);
                    let node = self.new_node(config, child_sleep, event_start);
                    stack.push(node);
                }
            }
        }
    }

    /// Pop exhausted nodes, maintaining sleep sets, until some node has a
    /// pending backtrack choice. Returns false when the root is exhausted.
    fn pop_to_pending(
        dpor: bool,
        stack: &mut Vec<Node>,
        events: &mut Vec<Event>,
        node_of_event: &mut Vec<usize>,
    ) -> bool {
        loop {
            let child = stack.pop().expect("pop from nonempty stack");
            events.truncate(child.event_start);
            node_of_event.truncate(child.event_start);
            let parent = match stack.last_mut() {
                Some(p) => p,
                None => return false,
            };
            if let Some(t) = parent.chosen.take() {
                parent.done.insert(t);
                if dpor {
                    parent.sleep.insert(t);
                }
            }
            let pending = parent
                .backtrack
                .iter()
                .any(|t| !parent.done.contains(t) && !parent.sleep.contains(t));
            if pending {
                return true;
            }
        }
    }

    fn process_leaf(
        &mut self,
        stack: &mut [Node],
        events: &[Event],
        node_of_event: &[usize],
    ) -> Result<(), ExploreError> {
        let config = &stack[stack.len() - 1].config;
        let statuses: Vec<ThreadStatus> = config.threads.iter().map(|t| t.status).collect();
        let blocked = statuses.iter().any(|s| *s == ThreadStatus::Blocked);
        let bound = statuses.iter().any(|s| *s == ThreadStatus::BoundExceeded);
        let violated = statuses.iter().any(|s| *s == ThreadStatus::Violated);

        self.executions_explored += 1;
        if blocked {
            self.blocked += 1;
        }
        if bound {
            self.bound_exceeded += 1;
        }

        let witness = schedule_text(events, self.program);

        if violated {
            for (p, s) in statuses.iter().enumerate() {
                if *s == ThreadStatus::Violated {
                    let t = &self.program.threads[p];
                    let instr = &t.instrs[config.threads[p].pc];
                    let description = format!(
                        "{}: {} failed",
                        t.name,
                        crate::lang::instr_text(self.program, p, instr)
                    );
                    self.violations.entry(description).or_insert_with(|| witness.clone());
                }
            }
        }

        if !blocked && !bound {
            let ct = chronological_trace(events, self.model)
                .map_err(|e| ExploreError::Internal(format!("trace of a maximal execution: {e}")))?;
            let ss = shasha_snir_trace(events, self.model)
                .map_err(|e| ExploreError::Internal(format!("trace of a maximal execution: {e}")))?;
            self.ct_set.entry(ct).or_insert_with(|| witness.clone());
            self.ss_set.entry(ss).or_insert_with(|| witness.clone());
            let ordering: Vec<Event> = events
                .iter()
                .filter(|e| e.is_load() || e.is_update())
                .cloned()
                .collect();
            self.access_orderings.insert(ordering);
            let state = FinalState {
                regs: config.threads.iter().map(|t| t.regs.clone()).collect(),
                memory: config.memory.clone(),
            };
            self.finals.entry(state).or_insert_with(|| witness.clone());
        }

        if self.record_executions {
            self.executions.push(RecordedExecution {
                events: events.to_vec(),
                blocked,
                bound_exceeded: bound,
                violated,
            });
        }

        if self.dpor {
            let ra = races_of(events, self.program, self.model)
                .map_err(|e| ExploreError::Internal(format!("race analysis: {e}")))?;
            let pos: HashMap<Event, usize> =
                events.iter().cloned().zip(0..).collect();
            for (_, rs) in &ra.per_event {
                for race in rs {
                    self.process_race(stack, events, node_of_event, &ra, &pos, race);
                }
            }
        }
        Ok(())
    }

    /// Insert a backtrack point that can reverse the race: at the node
    /// before the earlier event, schedule the first weak initial of the
    /// happens-before chain of the later event.
    fn process_race(
        &mut self,
        stack: &mut [Node],
        events: &[Event],
        node_of_event: &[usize],
        ra: &RaceAnalysis,
        pos: &HashMap<Event, usize>,
        race: &Race,
    ) {
        let ia = pos[&race.earlier];
        let ib = pos[&race.later];
        let target_node = node_of_event[ia];

        // Scheduling steps in (ia, ib] whose events are in the
        // happens-before chain of the later event.
        let mut v_nodes: Vec<usize> = Vec::new();
        for k in (ia + 1)..=ib {
            let e = &events[k];
            if e == &race.later || ra.happens_before(e, &race.later) {
                let nd = node_of_event[k];
                if v_nodes.last() != Some(&nd) {
                    v_nodes.push(nd);
                }
            }
        }
        debug_assert!(!v_nodes.is_empty());

        // Events of each step in the window.
        let window_events = |nd: usize| {
            ((ia + 1)..=ib).filter(move |&k| node_of_event[k] == nd)
        };

        // Weak initials: v-steps with no happens-before predecessor among
        // the other v-steps.
        let step_hb = |a: usize, b: usize| {
            window_events(a).any(|ka| {
                window_events(b).any(|kb| ra.happens_before(&events[ka], &events[kb]))
            })
        };
        let initials: Vec<usize> = v_nodes
            .iter()
            .copied()
            .filter(|&nd| v_nodes.iter().all(|&other| other == nd || !step_hb(other, nd)))
            .collect();
        debug_assert!(!initials.is_empty());

        // Prefer an initial that reaches the later event's step through
        // structural po/su/uf edges; break ties toward the latest one.
        let structural = self.structural_steps(events, node_of_event, ia, ib);
        let candidate_node = initials
            .iter()
            .copied()
            .filter(|nd| structural.contains(nd))
            .max()
            .or_else(|| initials.iter().copied().max())
            .expect("nonempty initials");

        let tid = stack[candidate_node]
            .chosen
            .expect("window steps have a chosen thread");
        debug_assert!(stack[target_node].enabled.contains(&tid) || target_node == candidate_node);
        stack[target_node].backtrack.insert(tid);
    }

    /// Steps in the window that reach the final step of the window via
    /// program-order, store-to-update or update-to-fence edges.
    fn structural_steps(
        &self,
        events: &[Event],
        node_of_event: &[usize],
        ia: usize,
        ib: usize,
    ) -> BTreeSet<usize> {
        let window: Vec<usize> = ((ia + 1)..=ib).collect();
        let mut succs: HashMap<usize, Vec<usize>> = HashMap::new();
        // po: next event of the same thread id.
        for (i, &k1) in window.iter().enumerate() {
            for &k2 in &window[i + 1..] {
                if events[k1].tid == events[k2].tid {
                    succs.entry(k1).or_default().push(k2);
                    break;
                }
            }
        }
        // su: a store to its update.
        for &k in &window {
            if events[k].is_store() {
                if let crate::semantics::StoreUpdate::Update(u) =
                    crate::semantics::stupd(events, &events[k], self.model)
                {
                    if let Some(ku) = window.iter().copied().find(|&j| events[j] == u) {
                        succs.entry(k).or_default().push(ku);
                    }
                }
            }
        }
        // uf: the last update of each of the owner's updaters before a fence.
        for &kf in &window {
            if matches!(&events[kf].instr, crate::semantics::EventInstr::Op(Instr::Fence)) {
                let owner = events[kf].tid.owner();
                let mut latest: BTreeMap<ThreadId, usize> = BTreeMap::new();
                for &k in &window {
                    if k < kf && events[k].is_update() && events[k].tid.owner() == owner {
                        latest.insert(events[k].tid, k);
                    }
                }
                for (_, k) in latest {
                    succs.entry(k).or_default().push(kf);
                }
            }
        }
        // Reverse reachability from the final step of the window.
        let target = node_of_event[ib];
        let mut reach: BTreeSet<usize> = window
            .iter()
            .copied()
            .filter(|&k| node_of_event[k] == target)
            .collect();
        loop {
            let mut grew = false;
            for &k in &window {
                if !reach.contains(&k)
                    && succs.get(&k).is_some_and(|ss| ss.iter().any(|s| reach.contains(s)))
                {
                    reach.insert(k);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        reach.iter().map(|&k| node_of_event[k]).collect()
    }

    fn into_exploration(self, started: Instant) -> Result<Exploration, ExploreError> {
        if self.ct_set.len() != self.ss_set.len() {
            return Err(ExploreError::Internal(format!(
                "trace count self-check failed: {} chronological vs {} Shasha-Snir",
                self.ct_set.len(),
                self.ss_set.len()
            )));
        }
        let completed = self.executions_explored - self.blocked - self.bound_exceeded;
        let redundancy = if self.ct_set.is_empty() {
            0.0
        } else {
            completed as f64 / self.ct_set.len() as f64
        };
        let final_states = self
            .finals
            .iter()
            .map(|(state, witness)| {
                let registers = self
                    .program
                    .threads
                    .iter()
                    .enumerate()
                    .map(|(p, t)| {
                        let regs = t
                            .regs
                            .iter()
                            .enumerate()
                            .map(|(r, name)| (format!("${name}"), state.regs[p][r]))
                            .collect();
                        (t.name.clone(), regs)
                    })
                    .collect();
                let memory = self
                    .program
                    .locations
                    .iter()
                    .enumerate()
                    .map(|(x, name)| (name.clone(), state.memory[x]))
                    .collect();
                FinalStateEntry { registers, memory, witness: witness.clone() }
            })
            .collect();
        let report = ExplorationReport {
            model: self.model.name().to_string(),
            algorithm: if self.dpor { "dpor".to_string() } else { "brute-force".to_string() },
            executions_explored: self.executions_explored,
            blocked: self.blocked,
            bound_exceeded: self.bound_exceeded,
            distinct_chronological_traces: self.ct_set.len(),
            distinct_shasha_snir_traces: self.ss_set.len(),
            distinct_access_orderings: self.access_orderings.len(),
            redundancy,
            violations: self
                .violations
                .iter()
                .map(|(description, witness)| Violation {
                    description: description.clone(),
                    witness: witness.clone(),
                })
                .collect(),
            final_states,
            chronological_traces: self
                .ct_set
                .keys()
                .map(|t| to_json(&Trace::Chronological(t.clone()), self.program))
                .collect(),
            wall_time_ms: started.elapsed().as_millis() as u64,
        };
        Ok(Exploration {
            report,
            chronological_traces: self.ct_set,
            shasha_snir_traces: self.ss_set,
            final_states: self.finals,
            executions: self.executions,
        })
    }
}

/// Exhaustively enumerate every maximal schedule. The oracle engine:
/// slow but complete, and it returns the full execution set.
pub fn brute_force(
    program: &Program,
    model: MemoryModel,
    limits: Limits,
) -> Result<Exploration, ExploreError> {
    let started = Instant::now();
    let mut engine = Engine::new(program, model, limits, false);
    engine.explore()?;
    engine.into_exploration(started)
}

/// Race-reversal DPOR with sleep sets. Explores at least one execution
/// per chronological trace; brute-force equality over the corpus is the
/// coverage check.
pub fn dpor_explore(
    program: &Program,
    model: MemoryModel,
    limits: Limits,
) -> Result<Exploration, ExploreError> {
    let started = Instant::now();
    let mut engine = Engine::new(program, model, limits, true);
    engine.explore()?;
    engine.into_exploration(started)
}

/// Evaluate the final condition against the explored final states.
/// An `exists` condition that is satisfied reports the reaching witness
/// (the condition marks the behavior being hunted); a `forall` condition
/// reports any mismatching state.
pub fn check_final(
    program: &Program,
    fc: &FinalCondition,
    exploration: &Exploration,
) -> Option<Violation> {
    let text = crate::lang::final_condition_text(program, fc);
    match fc.quantifier {
        Quantifier::Exists => exploration
            .final_states
            .iter()
            .find(|(s, _)| s.eval(&fc.formula))
            .map(|(_, witness)| Violation {
                description: format!("final {text} is reachable"),
                witness: witness.clone(),
            }),
        Quantifier::Forall => exploration
            .final_states
            .iter()
            .find(|(s, _)| !s.eval(&fc.formula))
            .map(|(_, witness)| Violation {
                description: format!("final {text} is violated"),
                witness: witness.clone(),
            }),
    }
}

/// Robustness verdict for one relaxed model.
#[derive(Debug, Serialize)]
pub struct RobustnessEntry {
    pub model: String,
    pub classes: usize,
    pub robust: bool,
    /// A schedule reaching a trace that does not exist under SC.
    pub witness: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RobustnessReport {
    pub sc_classes: usize,
    pub entries: Vec<RobustnessEntry>,
    pub robust: bool,
    pub wall_time_ms: u64,
}

/// A program is robust against a relaxed model when the number of trace
/// equivalence classes does not grow from SC to that model. Since every
/// SC execution is also an execution of the relaxed models, equal counts
/// mean equal Shasha-Snir trace sets.
pub fn check_robustness(
    program: &Program,
    against: &[MemoryModel],
    limits: Limits,
    use_dpor: bool,
) -> Result<RobustnessReport, ExploreError> {
    let started = Instant::now();
    let explore = |model| {
        if use_dpor {
            dpor_explore(program, model, limits)
        } else {
            brute_force(program, model, limits)
        }
    };
    let sc = explore(MemoryModel::Sc)?;
    let mut entries = Vec::new();
    for &model in against {
        let relaxed = explore(model)?;
        let robust = relaxed.shasha_snir_traces.len() == sc.shasha_snir_traces.len();
        let witness = if robust {
            None
        } else {
            relaxed
                .shasha_snir_traces
                .iter()
                .find(|(t, _)| !sc.shasha_snir_traces.contains_key(*t))
                .map(|(_, w)| w.clone())
        };
        entries.push(RobustnessEntry {
            model: model.name().to_string(),
            classes: relaxed.shasha_snir_traces.len(),
            robust,
            witness,
        });
    }
    Ok(RobustnessReport {
        sc_classes: sc.shasha_snir_traces.len(),
        robust: entries.iter().all(|e| e.robust),
        entries,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

/// Parameters of the random straight-line program generator.
#[derive(Debug, Clone, Copy)]
pub struct RandomParams {
    pub max_threads: usize,
    pub max_instrs: usize,
    pub max_locs: usize,
    pub max_regs: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { max_threads: 3, max_instrs: 5, max_locs: 2, max_regs: 2 }
    }
}

const LOC_NAMES: [&str; 4] = ["x", "y", "z", "w"];
const REG_NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// Deterministic pseudo-random straight-line program over stores, loads
/// and fences. Same seed, same program.
pub fn random_program(seed: u64, params: &RandomParams) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nthreads = rng.gen_range(1..=params.max_threads.max(1));
    let nlocs = rng.gen_range(1..=params.max_locs.max(1).min(LOC_NAMES.len()));
    let total_instrs = rng.gen_range(1..=params.max_instrs.max(1));

    let mut threads: Vec<Thread> = (0..nthreads)
        .map(|i| Thread { name: format!("t{i}"), instrs: Vec::new(), regs: Vec::new() })
        .collect();
    for _ in 0..total_instrs {
        let t = rng.gen_range(0..nthreads);
        let roll: f64 = rng.gen();
        let instr = if roll < 0.15 {
            Instr::Fence
        } else if roll < 0.575 {
            Instr::Store {
                loc: rng.gen_range(0..nlocs),
                src: Operand::Const(rng.gen_range(1..=3)),
            }
        } else {
            let reg_name = REG_NAMES[rng.gen_range(0..params.max_regs.max(1).min(REG_NAMES.len()))];
            let dst = match threads[t].regs.iter().position(|r| r == reg_name) {
                Some(r) => r,
                None => {
                    threads[t].regs.push(reg_name.to_string());
                    threads[t].regs.len() - 1
                }
            };
            Instr::Load { dst, loc: rng.gen_range(0..nlocs) }
        };
        threads[t].instrs.push(instr);
    }
    let locations = LOC_NAMES[..nlocs].iter().map(|s| s.to_string()).collect();
    Program { threads, locations, final_condition: None }
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
final exists (p:$r == 0 and q:$s == 0)
";

    const FORWARD: &str = "\
locations x
thread p:
  store x 1
  load $r x
thread q:
  store x 2
";

    fn final_values(e: &Exploration) -> BTreeSet<Vec<Value>> {
        e.final_states.keys().map(|s| s.regs.iter().flatten().copied().collect()).collect()
    }

    #[test]
    fn sb_final_states_per_model() {
        let p = parse_program(SB).unwrap();
        let sc = brute_force(&p, MemoryModel::Sc, Limits::default()).unwrap();
        // registers flattened as [p.$r, q.$s]
        let sc_vals = final_values(&sc);
        let expected: BTreeSet<Vec<Value>> =
            [vec![0, 1], vec![1, 0], vec![1, 1]].into_iter().collect();
        assert_eq!(sc_vals, expected);
        let tso = brute_force(&p, MemoryModel::Tso, Limits::default()).unwrap();
        let mut with_zero = expected.clone();
        with_zero.insert(vec![0, 0]);
        assert_eq!(final_values(&tso), with_zero);
        let pso = brute_force(&p, MemoryModel::Pso, Limits::default()).unwrap();
        assert_eq!(final_values(&pso), with_zero);
    }

    #[test]
    fn forwarding_collapses_six_orderings_to_three_traces() {
        let p = parse_program(FORWARD).unwrap();
        let bf = brute_force(&p, MemoryModel::Tso, Limits::default()).unwrap();
        assert_eq!(bf.report.distinct_access_orderings, 6);
        assert_eq!(bf.report.distinct_chronological_traces, 3);
        assert_eq!(bf.report.distinct_shasha_snir_traces, 3);
    }

    #[test]
    fn dpor_explores_forwarding_program_with_redundancy_one() {
        let p = parse_program(FORWARD).unwrap();
        let d = dpor_explore(&p, MemoryModel::Tso, Limits::default()).unwrap();
        assert_eq!(d.report.distinct_chronological_traces, 3);
        assert_eq!(d.report.executions_explored, 3, "one execution per trace");
        assert_eq!(d.report.redundancy, 1.0);
    }

    #[test]
    fn dpor_matches_brute_force_on_sb() {
        let p = parse_program(SB).unwrap();
        for model in [MemoryModel::Sc, MemoryModel::Tso, MemoryModel::Pso] {
            let bf = brute_force(&p, model, Limits::default()).unwrap();
            let d = dpor_explore(&p, model, Limits::default()).unwrap();
            let bf_set: BTreeSet<_> = bf.chronological_traces.keys().cloned().collect();
            let d_set: BTreeSet<_> = d.chronological_traces.keys().cloned().collect();
            assert_eq!(bf_set, d_set, "coverage under {model}");
        }
    }

    #[test]
    fn single_thread_program_explores_once() {
        let p = parse_program("locations x\nthread p:\n  store x 1\n  load $r x\n").unwrap();
        let d = dpor_explore(&p, MemoryModel::Tso, Limits::default()).unwrap();
        assert_eq!(d.report.executions_explored, 1);
    }

    #[test]
    fn exists_condition_reports_reaching_witness() {
        let p = parse_program(SB).unwrap();
        let fc = p.final_condition.clone().unwrap();
        let tso = brute_force(&p, MemoryModel::Tso, Limits::default()).unwrap();
        let v = check_final(&p, &fc, &tso).expect("reachable under TSO");
        // the witness replays to the flagged state
        let schedule = crate::semantics::parse_schedule(&v.witness, &p).unwrap();
        let (_, config) = crate::semantics::run(&p, &schedule, MemoryModel::Tso).unwrap();
        assert_eq!(config.threads[0].regs[0], 0);
        assert_eq!(config.threads[1].regs[0], 0);
        let sc = brute_force(&p, MemoryModel::Sc, Limits::default()).unwrap();
        assert!(check_final(&p, &fc, &sc).is_none(), "unreachable under SC");
    }

    #[test]
    fn forall_condition_over_value_domain_holds() {
        let src = "\
locations x y
thread p:
  store x 1
  load $r y
thread q:
  store y 1
  load $s x
final forall (p:$r == 0 or p:$r == 1)
";
        let p = parse_program(src).unwrap();
        for model in [MemoryModel::Sc, MemoryModel::Tso, MemoryModel::Pso] {
            let e = brute_force(&p, model, Limits::default()).unwrap();
            assert!(check_final(&p, &p.final_condition.clone().unwrap(), &e).is_none());
        }
    }

    #[test]
    fn blocked_executions_are_excluded_from_final_evaluation() {
        // The assume-false branch never contributes a final state.
        let src = "\
locations x
thread p:
  load $r x
  assume $r == 1
thread q:
  store x 1
final exists (p:$r == 0)
";
        let p = parse_program(src).unwrap();
        let e = brute_force(&p, MemoryModel::Tso, Limits::default()).unwrap();
        assert!(e.report.blocked > 0);
        let fc = p.final_condition.clone().unwrap();
        assert!(check_final(&p, &fc, &e).is_none(), "only non-blocked states evaluated");
    }

    #[test]
    fn assert_violation_carries_replayable_witness() {
        let src = "locations x\nthread p:\n  load $r x\n  assert $r == 1\nthread q:\n  store x 1\n";
        let p = parse_program(src).unwrap();
        let e = brute_force(&p, MemoryModel::Tso, Limits::default()).unwrap();
        assert_eq!(e.report.violations.len(), 1);
        let v = &e.report.violations[0];
        let schedule = crate::semantics::parse_schedule(&v.witness, &p).unwrap();
        let (_, config) = crate::semantics::run(&p, &schedule, MemoryModel::Tso).unwrap();
        assert!(config.threads.iter().any(|t| t.status == ThreadStatus::Violated));
    }

    #[test]
    fn step_bound_is_reported_separately() {
        let src = "\
locations x
thread p:
  mov $i 1
L:
  bnz $i L
";
        let p = parse_program(src).unwrap();
        let e = brute_force(&p, MemoryModel::Sc, Limits { max_steps: 50, max_nodes: 10_000 })
            .unwrap();
        assert_eq!(e.report.bound_exceeded, 1);
        assert_eq!(e.report.distinct_chronological_traces, 0);
    }

    #[test]
    fn node_budget_is_enforced() {
        let p = parse_program(SB).unwrap();
        let err = brute_force(&p, MemoryModel::Tso, Limits { max_steps: 100, max_nodes: 5 })
            .unwrap_err();
        assert!(matches!(err, ExploreError::LimitExceeded { .. }));
    }

    #[test]
    fn sb_is_not_robust_but_fenced_sb_is() {
        let p = parse_program(SB).unwrap();
        let r = check_robustness(
            &p,
            &[MemoryModel::Tso, MemoryModel::Pso],
            Limits::default(),
            false,
        )
        .unwrap();
        assert!(!r.robust);
        assert!(r.entries.iter().all(|e| !e.robust && e.witness.is_some()));
        assert!(r.entries.iter().all(|e| e.classes > r.sc_classes));

        let fenced = "\
locations x y
thread p:
  store x 1
  fence
  load $r y
thread q:
  store y 1
  fence
  load $s x
";
        let p = parse_program(fenced).unwrap();
        let r = check_robustness(
            &p,
            &[MemoryModel::Tso, MemoryModel::Pso],
            Limits::default(),
            false,
        )
        .unwrap();
        assert!(r.robust);
        assert!(r.entries.iter().all(|e| e.classes == r.sc_classes));
    }

    #[test]
    fn single_thread_program_is_robust() {
        let p = parse_program("locations x\nthread p:\n  store x 1\n  load $r x\n").unwrap();
        let r = check_robustness(
            &p,
            &[MemoryModel::Tso, MemoryModel::Pso],
            Limits::default(),
            true,
        )
        .unwrap();
        assert!(r.robust);
    }

    #[test]
    fn random_program_is_deterministic() {
        let params = RandomParams::default();
        for seed in 0..50 {
            assert_eq!(random_program(seed, &params), random_program(seed, &params));
        }
    }

    #[test]
    fn random_programs_parse_back() {
        let params = RandomParams::default();
        for seed in 0..200 {
            let p = random_program(seed, &params);
            let text = crate::lang::pretty_print(&p);
            let reparsed = parse_program(&text).unwrap_or_else(|e| {
                panic!("seed {seed}: generated program fails to parse: {e}\n{text}")
            });
            assert_eq!(reparsed, p, "seed {seed}");
        }
    }

    #[test]
    fn random_programs_cover_fence_and_fence_free() {
        let params = RandomParams::default();
        let mut with = 0;
        let mut without = 0;
        for seed in 0..1000 {
            let p = random_program(seed, &params);
            let has_fence = p
                .threads
                .iter()
                .any(|t| t.instrs.iter().any(|i| matches!(i, Instr::Fence)));
            if has_fence {
                with += 1;
            } else {
                without += 1;
            }
        }
        assert!(with > 100, "fences too rare: {with}");
        assert!(without > 100, "fences too common: {without}");
    }
}
