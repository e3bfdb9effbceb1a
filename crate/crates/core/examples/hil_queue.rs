//! File-based review: a second thread plays the reviewer, approving the
//! first pending property and rejecting the rest.

use std::time::Duration;

use covloop::closure::hil::{DecisionsFile, NamedDecision};
use covloop::closure::{bind_design, hil_checkpoint, Decision, Design, QueueReviewer};
use covloop::rtl::resolve_signals;
use covloop::sva::parse_sva;

const CANDIDATES: &str = "property p_then;
  @(posedge clk) (a && b) |=> (c == $past(d1));
endproperty
assert property (p_then);
property p_else;
  @(posedge clk) !(a && b) |=> (c == $past(d2));
endproperty
assert property (p_else);
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/extra/listing1.v");
    let design = Design::load(&[path], None)?;
    let parsed = parse_sva(CANDIDATES)?;
    let mut res = parsed.resources.clone();
    bind_design(&mut res, &resolve_signals(design.unit())?);

    let dir = std::env::temp_dir().join(format!("covloop-review-{}", std::process::id()));
    let mut queue = QueueReviewer::new(&dir, Duration::from_secs(30));
    queue.poll = Duration::from_millis(20);
    let (pending, decisions) = (queue.pending_path("listing1", 1), queue.decisions_path("listing1", 1));
    let reviewer = std::thread::spawn(move || -> std::io::Result<()> {
        while !pending.exists() {
            std::thread::sleep(Duration::from_millis(10));
        }
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&pending)?)?;
        let names = doc["pending"].as_array().into_iter().flatten().filter_map(|p| p["name"].as_str());
        let file = DecisionsFile {
            decisions: names
                .enumerate()
                .map(|(i, n)| NamedDecision {
                    name: n.to_string(),
                    decision: if i == 0 { Decision::Approve } else { Decision::Reject },
                })
                .collect(),
        };
        std::fs::write(&decisions, serde_json::to_string_pretty(&file)?)
    });
    let cp = hil_checkpoint("listing1", 1, parsed.properties, &res, &mut queue)?;
    reviewer.join().expect("reviewer thread")?;
    for r in &cp.records {
        println!("{:<8} {}", r.name, r.decision);
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
