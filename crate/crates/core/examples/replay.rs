//! Drive the closure loop from recorded proof runs instead of the engine.

use covloop::closure::{run_closure_with, AutoApprove, ClosureConfig, ClosureEnv, Design};
use covloop::formal::ReplayBackend;

const RECORDING: &str = r#"[
  {"design": "listing1", "iteration": 1, "coverage_pct": 50.0,
   "targets": [
     {"id": "listing1.v:listing1:stmt@3.3-3.10", "kind": "STATEMENT", "start": [3, 3], "end": [3, 10], "status": "COVERED"},
     {"id": "listing1.v:listing1:stmt@5.3-5.10", "kind": "STATEMENT", "start": [5, 3], "end": [5, 10], "status": "UNCOVERED"}
   ],
   "proofs": {}},
  {"design": "listing1", "iteration": 2, "coverage_pct": 100.0,
   "targets": [
     {"id": "listing1.v:listing1:stmt@3.3-3.10", "kind": "STATEMENT", "start": [3, 3], "end": [3, 10], "status": "COVERED"},
     {"id": "listing1.v:listing1:stmt@5.3-5.10", "kind": "STATEMENT", "start": [5, 3], "end": [5, 10], "status": "COVERED"}
   ],
   "proofs": {}}
]"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/extra/listing1.v");
    let design = Design::load(&[path], None)?;
    let mut backend = ReplayBackend::from_json(RECORDING)?;
    let mut env = ClosureEnv {
        backend: &mut backend,
        reviewer: &mut AutoApprove,
        chat: None,
    };
    let run = run_closure_with(&design, "", &ClosureConfig::default(), &mut env)?;
    for r in &run.state.history {
        println!("iteration {}: {:.2}% {:?}", r.iteration, r.coverage_pct, r.new_properties);
    }
    println!("{:?}", run.state.outcome);
    Ok(())
}
