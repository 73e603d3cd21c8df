//! Regenerates the shipped fixture traces with their recorded outcomes.
//!
//! Usage: cargo run --example record_fixtures [-- <output dir>]

use std::path::PathBuf;

use droidsec::io::{emit_trace, write_file, TraceFile};
use droidsec::traces::run_unchecked;
use droidsec::{fixtures, Platform};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    let platform = Platform::sample();
    for (name, initial, actions) in fixtures::build_all() {
        let start = initial.clone().unwrap_or_default();
        let report = run_unchecked(&start, &actions, &platform, false);
        let mut file = TraceFile::new(initial, platform.clone(), actions);
        file.expected = Some(report.records());
        let path = dir.join(name);
        write_file(&path, &emit_trace(&file)).expect("write fixture");
        println!("{}", path.display());
    }
}
