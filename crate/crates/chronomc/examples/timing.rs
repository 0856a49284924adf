use chronomc::explore::*;
use chronomc::lang::parse_program;
use chronomc::semantics::MemoryModel;
use std::collections::BTreeSet;

fn main() {
    // shrunk from coverage failure seed 390
    let src = "locations x\nthread t1:\n  store x 3\n  store x 2\nthread t2:\n  store x 1\n  load $b x\n";
    let p = parse_program(src).unwrap();
    let bf = brute_force(&p, MemoryModel::Tso, Limits::default()).unwrap();
    let dp = dpor_explore(&p, MemoryModel::Tso, Limits::default()).unwrap();
    let bf_set: BTreeSet<_> = bf.chronological_traces.clone().into_iter().collect();
    let dp_set: BTreeSet<_> = dp.chronological_traces.clone().into_iter().collect();
    println!("bf traces {}  dpor traces {}  dpor execs {}", bf_set.len(), dp_set.len(), dp.report.executions_explored);
    for (t, w) in &bf.chronological_traces {
        let covered = dp.chronological_traces.contains_key(t);
        println!("{} witness {w}", if covered { "ok     " } else { "MISSING" });
    }
}
