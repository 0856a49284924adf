//! Chronological and Shasha-Snir traces of completed executions.
//!
//! A chronological trace is a graph over all events of an execution
//! (updates included) with six labeled edge relations:
//!
//! - `po`: consecutive events of the same thread id,
//! - `su`: store to its own update,
//! - `uu`: consecutive updates to the same location,
//! - `src`: the update a load read its value from, when that update
//!   belongs to a different thread (a load is never src-related to an
//!   update of its own thread),
//! - `cf`: the update that overwrites the value a load read,
//! - `uf`: the last update of a thread's updater before one of its fences.
//!
//! The union of the six relations is acyclic, so its transitive closure
//! is a happens-before partial order. A Shasha-Snir trace drops the
//! update events and relates the instructions directly (`po`, `st`,
//! `src`, `cf`); it may be cyclic. The two representations induce the
//! same equivalence on completed executions, which the test suites check
//! by exhaustive enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde_json::json;
use thiserror::Error;

use crate::lang::{Instr, LocId, Program};
use crate::semantics::{rowe, stupd, Event, EventInstr, MemoryModel, Rowe, StoreUpdate, ThreadId};

pub type EdgeSet = BTreeSet<(Event, Event)>;

/// Trace over all events with the six chronological relations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChronologicalTrace {
    pub vertices: BTreeSet<Event>,
    pub po: EdgeSet,
    pub su: EdgeSet,
    pub uu: EdgeSet,
    pub src: EdgeSet,
    pub cf: EdgeSet,
    pub uf: EdgeSet,
}

impl ChronologicalTrace {
    pub fn edge_relations(&self) -> [(&'static str, &EdgeSet); 6] {
        [
            ("po", &self.po),
            ("su", &self.su),
            ("uu", &self.uu),
            ("src", &self.src),
            ("cf", &self.cf),
            ("uf", &self.uf),
        ]
    }
}

/// Trace over non-update events with the four Shasha-Snir relations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShashaSnirTrace {
    pub vertices: BTreeSet<Event>,
    pub po: EdgeSet,
    pub st: EdgeSet,
    pub src: EdgeSet,
    pub cf: EdgeSet,
}

impl ShashaSnirTrace {
    pub fn edge_relations(&self) -> [(&'static str, &EdgeSet); 4] {
        [("po", &self.po), ("st", &self.st), ("src", &self.src), ("cf", &self.cf)]
    }
}

/// Either trace kind, for operations that accept both.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trace {
    Chronological(ChronologicalTrace),
    ShashaSnir(ShashaSnirTrace),
}

impl Trace {
    pub fn kind(&self) -> &'static str {
        match self {
            Trace::Chronological(_) => "chronological",
            Trace::ShashaSnir(_) => "shasha-snir",
        }
    }

    pub fn vertices(&self) -> &BTreeSet<Event> {
        match self {
            Trace::Chronological(t) => &t.vertices,
            Trace::ShashaSnir(t) => &t.vertices,
        }
    }

    fn labeled_edges(&self) -> Vec<(&'static str, &EdgeSet)> {
        match self {
            Trace::Chronological(t) => t.edge_relations().to_vec(),
            Trace::ShashaSnir(t) => t.edge_relations().to_vec(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("execution is not completed: a store has no matching update")]
    NotCompleted,
    #[error("cannot compare a {left} trace with a {right} trace")]
    KindMismatch { left: &'static str, right: &'static str },
    #[error("happens-before relation has a cycle through {witness:?}")]
    CycleDetected { witness: Vec<String> },
}

/// Positional bookkeeping shared by the two trace constructions.
struct Indexed<'e> {
    events: &'e [Event],
    pos: HashMap<&'e Event, usize>,
    /// Update positions per location, ascending.
    updates_per_loc: BTreeMap<LocId, Vec<usize>>,
}

impl<'e> Indexed<'e> {
    fn new(events: &'e [Event]) -> Self {
        let mut pos = HashMap::new();
        let mut updates_per_loc: BTreeMap<LocId, Vec<usize>> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            pos.insert(e, i);
            if let EventInstr::Update(x) = &e.instr {
                updates_per_loc.entry(*x).or_default().push(i);
            }
        }
        Indexed { events, pos, updates_per_loc }
    }

    /// Position of rowe(load) in the execution; -1 encodes the dummy
    /// initial event. Errors when the execution is not completed.
    fn rowe_pos(&self, load: &Event, model: MemoryModel) -> Result<isize, TraceError> {
        match rowe(self.events, load, model) {
            Rowe::Init => Ok(-1),
            Rowe::Update(u) => Ok(self.pos[&u] as isize),
            Rowe::Pending => Err(TraceError::NotCompleted),
        }
    }

    /// First update to `x` strictly after position `after`.
    fn first_update_after(&self, x: LocId, after: isize) -> Option<usize> {
        self.updates_per_loc.get(&x)?.iter().copied().find(|&u| u as isize > after)
    }

    /// Last update to `x` strictly before position `before`.
    fn last_update_before(&self, x: LocId, before: usize) -> Option<usize> {
        self.updates_per_loc.get(&x)?.iter().copied().take_while(|&u| u < before).last()
    }
}

fn program_order(events: &[Event]) -> EdgeSet {
    let mut per_tid: BTreeMap<ThreadId, Vec<&Event>> = BTreeMap::new();
    for e in events {
        per_tid.entry(e.tid).or_default().push(e);
    }
    let mut po = EdgeSet::new();
    for evs in per_tid.values() {
        for w in evs.windows(2) {
            po.insert((w[0].clone(), w[1].clone()));
        }
    }
    po
}

/// Build the chronological trace of a completed execution.
pub fn chronological_trace(
    events: &[Event],
    model: MemoryModel,
) -> Result<ChronologicalTrace, TraceError> {
    let ix = Indexed::new(events);
    let vertices: BTreeSet<Event> = events.iter().cloned().collect();
    let po = program_order(events);

    let mut su = EdgeSet::new();
    for e in events.iter().filter(|e| e.is_store()) {
        match stupd(events, e, model) {
            StoreUpdate::Update(u) => {
                su.insert((e.clone(), u));
            }
            StoreUpdate::Pending => return Err(TraceError::NotCompleted),
        }
    }

    let mut uu = EdgeSet::new();
    for ups in ix.updates_per_loc.values() {
        for w in ups.windows(2) {
            uu.insert((events[w[0]].clone(), events[w[1]].clone()));
        }
    }

    let mut src = EdgeSet::new();
    let mut cf = EdgeSet::new();
    for e in events.iter().filter(|e| e.is_load()) {
        let x = e.loc_accessed().expect("loads access a location");
        let r = ix.rowe_pos(e, model)?;
        let epos = ix.pos[e];
        // src: the latest update to x before the load, provided it is
        // strictly after rowe(load). By FIFO order an update of the
        // load's own thread can never satisfy that strict inequality.
        if let Some(u) = ix.last_update_before(x, epos) {
            if u as isize > r {
                src.insert((events[u].clone(), e.clone()));
            }
        }
        // cf: the first update to x after both the load and rowe(load).
        if let Some(u) = ix.first_update_after(x, r.max(epos as isize)) {
            cf.insert((e.clone(), events[u].clone()));
        }
    }

    let mut uf = EdgeSet::new();
    for f in events.iter().filter(|e| matches!(&e.instr, EventInstr::Op(Instr::Fence))) {
        let fpos = ix.pos[f];
        let owner = f.tid.owner();
        // Latest update before the fence, per auxiliary thread of the owner.
        let mut latest: BTreeMap<ThreadId, usize> = BTreeMap::new();
        for (i, e) in events.iter().enumerate().take(fpos) {
            if e.is_update() && e.tid.owner() == owner {
                latest.insert(e.tid, i);
            }
        }
        for (_, i) in latest {
            uf.insert((events[i].clone(), f.clone()));
        }
    }

    Ok(ChronologicalTrace { vertices, po, su, uu, src, cf, uf })
}

/// Build the Shasha-Snir trace of a completed execution.
pub fn shasha_snir_trace(
    events: &[Event],
    model: MemoryModel,
) -> Result<ShashaSnirTrace, TraceError> {
    let ix = Indexed::new(events);
    let non_updates: Vec<&Event> = events.iter().filter(|e| !e.is_update()).collect();
    let vertices: BTreeSet<Event> = non_updates.iter().map(|e| (*e).clone()).collect();
    let po = program_order(events)
        .into_iter()
        .filter(|(a, b)| !a.is_update() && !b.is_update())
        .collect();

    // Stores per location, ordered by the position of their update.
    // That ordering is the store order st.
    let mut stores_by_loc: BTreeMap<LocId, Vec<(usize, &Event)>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.is_store()) {
        let x = e.loc_accessed().unwrap();
        match stupd(events, e, model) {
            StoreUpdate::Update(u) => stores_by_loc.entry(x).or_default().push((ix.pos[&u], e)),
            StoreUpdate::Pending => return Err(TraceError::NotCompleted),
        }
    }
    for v in stores_by_loc.values_mut() {
        v.sort_by_key(|(u, _)| *u);
    }

    let mut st = EdgeSet::new();
    for v in stores_by_loc.values() {
        for w in v.windows(2) {
            st.insert((w[0].1.clone(), w[1].1.clone()));
        }
    }

    let mut src = EdgeSet::new();
    let mut cf = EdgeSet::new();
    for e in non_updates.iter().filter(|e| e.is_load()) {
        let x = e.loc_accessed().unwrap();
        let epos = ix.pos[*e];
        // The source is the st-maximal store whose update precedes the
        // load or which program-order-precedes the load in the same
        // thread. Stores are scanned in ascending st order.
        let mut source: Option<usize> = None;
        if let Some(stores) = stores_by_loc.get(&x) {
            for (k, (upos, s)) in stores.iter().enumerate() {
                let updated_before = *upos < epos;
                let po_before = s.tid == e.tid && s.index < e.index;
                if updated_before || po_before {
                    source = Some(k);
                }
            }
            if let Some(k) = source {
                src.insert((stores[k].1.clone(), (*e).clone()));
                // cf: the st-successor of the source store overwrites the
                // value read.
                if let Some((_, succ)) = stores.get(k + 1) {
                    cf.insert(((*e).clone(), (*succ).clone()));
                }
            } else if let Some((_, first)) = stores.first() {
                // Load of the initial value: the overwriting store is the
                // one with no st-predecessor.
                cf.insert(((*e).clone(), (*first).clone()));
            }
        }
    }

    Ok(ShashaSnirTrace { vertices, po, st, src, cf })
}

/// Graph identity: equal vertex sets and equal labeled edge sets.
/// Events are canonical identifiers, so set equality is graph equality.
pub fn trace_equal(a: &Trace, b: &Trace) -> Result<bool, TraceError> {
    match (a, b) {
        (Trace::Chronological(x), Trace::Chronological(y)) => Ok(x == y),
        (Trace::ShashaSnir(x), Trace::ShashaSnir(y)) => Ok(x == y),
        _ => Err(TraceError::KindMismatch { left: a.kind(), right: b.kind() }),
    }
}

/// Reflexive-transitive closure of a trace's edge relation.
pub struct HappensBefore {
    order: Vec<Event>,
    index: HashMap<Event, usize>,
    reach: Vec<Vec<bool>>,
}

impl HappensBefore {
    /// True when `a` happens before or equals `b`.
    pub fn le(&self, a: &Event, b: &Event) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.reach[i][j],
            _ => false,
        }
    }

    /// True when `a` strictly happens before `b`.
    pub fn lt(&self, a: &Event, b: &Event) -> bool {
        a != b && self.le(a, b)
    }

    /// All strictly ordered pairs.
    pub fn pairs(&self) -> BTreeSet<(Event, Event)> {
        let mut out = BTreeSet::new();
        for i in 0..self.order.len() {
            for j in 0..self.order.len() {
                if i != j && self.reach[i][j] {
                    out.insert((self.order[i].clone(), self.order[j].clone()));
                }
            }
        }
        out
    }

    pub fn events(&self) -> &[Event] {
        &self.order
    }
}

fn closure_of(
    vertices: &BTreeSet<Event>,
    edges: impl Iterator<Item = (Event, Event)>,
    program: Option<&Program>,
) -> Result<HappensBefore, TraceError> {
    let order: Vec<Event> = vertices.iter().cloned().collect();
    let index: HashMap<Event, usize> = order.iter().cloned().zip(0..).collect();
    let n = order.len();
    let mut reach: Vec<Vec<bool>> = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in edges {
        reach[index[&a]][index[&b]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    // Antisymmetry: a cycle shows up as mutual reachability.
    for i in 0..n {
        for j in (i + 1)..n {
            if reach[i][j] && reach[j][i] {
                let name = |e: &Event| match program {
                    Some(p) => e.text(p),
                    None => format!("{e:?}"),
                };
                return Err(TraceError::CycleDetected {
                    witness: vec![name(&order[i]), name(&order[j]), name(&order[i])],
                });
            }
        }
    }
    Ok(HappensBefore { order, index, reach })
}

/// Happens-before partial order of a chronological trace. Reports a
/// cycle witness if the edge relation is cyclic, which would signal an
/// implementation bug.
pub fn happens_before(
    trace: &ChronologicalTrace,
    program: Option<&Program>,
) -> Result<HappensBefore, TraceError> {
    let edges: Vec<(Event, Event)> = trace
        .edge_relations()
        .into_iter()
        .flat_map(|(_, s)| s.iter().cloned())
        .collect();
    closure_of(&trace.vertices, edges.into_iter(), program)
}

/// True when the union of the trace's edge relations has a cycle.
pub fn shasha_snir_has_cycle(trace: &ShashaSnirTrace) -> bool {
    let edges: Vec<(Event, Event)> = trace
        .edge_relations()
        .into_iter()
        .flat_map(|(_, s)| s.iter().cloned())
        .collect();
    closure_of(&trace.vertices, edges.into_iter(), None).is_err()
}

/// Vertices sorted by (thread, index), as used by DOT and JSON export.
fn sorted_vertices(trace: &Trace) -> Vec<&Event> {
    let mut vs: Vec<&Event> = trace.vertices().iter().collect();
    vs.sort_by(|a, b| (a.tid, a.index).cmp(&(b.tid, b.index)));
    vs
}

/// Graphviz DOT output: node label `p:j instr`, edge label = relation
/// name, stable ordering by (thread, index).
pub fn to_dot(trace: &Trace, program: &Program) -> String {
    let vs = sorted_vertices(trace);
    let id_of: HashMap<&Event, usize> = vs.iter().copied().zip(0..).collect();
    let mut out = String::from("digraph trace {\n");
    for (i, v) in vs.iter().enumerate() {
        out.push_str(&format!("  n{} [label=\"{}\"];\n", i, v.text(program)));
    }
    for (name, set) in trace.labeled_edges() {
        for (a, b) in set {
            out.push_str(&format!("  n{} -> n{} [label=\"{}\"];\n", id_of[a], id_of[b], name));
        }
    }
    out.push_str("}\n");
    out
}

/// JSON dump: `{vertices:[{thread,instr,index}], edges:{po:[[i,j],..],..}}`
/// with vertices sorted by (thread, index).
pub fn to_json(trace: &Trace, program: &Program) -> serde_json::Value {
    let vs = sorted_vertices(trace);
    let id_of: HashMap<&Event, usize> = vs.iter().copied().zip(0..).collect();
    let vertices: Vec<_> = vs
        .iter()
        .map(|v| {
            let instr = match &v.instr {
                EventInstr::Update(x) => format!("upd {}", program.loc_name(*x)),
                EventInstr::Op(i) => crate::lang::instr_text(program, v.tid.owner(), i),
            };
            json!({
                "thread": v.tid.text(program),
                "instr": instr,
                "index": v.index,
            })
        })
        .collect();
    let mut edges = serde_json::Map::new();
    for (name, set) in trace.labeled_edges() {
        let pairs: Vec<_> = set.iter().map(|(a, b)| json!([id_of[a], id_of[b]])).collect();
        edges.insert(name.to_string(), json!(pairs));
    }
    json!({ "vertices": vertices, "edges": edges })
}
