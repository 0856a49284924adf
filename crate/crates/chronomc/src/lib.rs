//! Stateless model checking of small assembly-like concurrent programs
//! under the SC, TSO and PSO memory models.
//!
//! The crate is organised around the pipeline
//!
//! ```text
//! litmus text --(lang)--> Program --(semantics)--> Execution
//!     --(traces)--> chronological / Shasha-Snir trace
//!     --(clocks)--> happens-before clocks + races
//!     --(explore)--> brute-force or DPOR exploration reports
//! ```
//!
//! Executions are words of events `(thread, instruction, index)`. Store
//! buffering is modelled with auxiliary updater threads: one `upd(p)` per
//! thread under TSO, one `upd(p,x)` per thread and location under PSO.
//! SC is run on the same machinery with every store immediately followed
//! by its update.

pub mod clocks;
pub mod explore;
pub mod lang;
pub mod semantics;
pub mod traces;
pub mod verify;
