mod common;

use common::oracle::{self, Sim, Vals};
use common::{load, LISTING_ONE, LISTING_TWO};
use covloop::closure::{run_closure, ClosureConfig, Design};
use covloop::coverage::{enumerate_targets, Status, TargetKind};
use covloop::formal::{
    elaborate, explore, BuiltinBackend, CheckConfig, Constraint, ElabConfig, FormalBackend, FormalError, ProofJob,
    ProofRun, ProofStatus, ReplayBackend, TraceStep,
};
use covloop::sva::parse::Macro;
use covloop::sva::{parse_sva, SvaProperty};

fn prove(design: &Design, sva: &str) -> (ProofRun, Vec<SvaProperty>, Vec<Macro>) {
    let parsed = parse_sva(sva).unwrap();
    let file = design.file_name();
    let job = ProofJob {
        unit: design.unit(),
        file: &file,
        properties: &parsed.properties,
        macros: &parsed.resources.macros,
        iteration: 0,
        exclude_unreachable: false,
    };
    let run = BuiltinBackend::new(2).run(&job).unwrap();
    (run, parsed.properties, parsed.resources.macros)
}

fn listing_one() -> Design {
    Design::parse("listing1.v", LISTING_ONE).unwrap()
}

#[test]
fn listing_two_is_proven_and_covers_line_three_only() {
    let (run, _, _) = prove(&listing_one(), LISTING_TWO);
    assert_eq!(run.results.len(), 1);
    assert_eq!(run.results[0].status, ProofStatus::Proven);
    assert!(run.results[0].non_vacuous);
    assert_eq!(run.report.status_of("listing1.v:listing1:stmt@3.3-3.10"), Some(Status::Covered));
    assert_eq!(run.report.status_of("listing1.v:listing1:stmt@5.3-5.10"), Some(Status::Uncovered));
    let stmts: Vec<_> = run.report.targets.iter().filter(|t| t.kind == TargetKind::Statement).collect();
    let covered = stmts.iter().filter(|t| t.status == Status::Covered).count();
    assert_eq!((covered, stmts.len()), (1, 2));
}

#[test]
fn tautology_is_proven_without_touching_design_coverage() {
    let sva = "assert property (@(posedge clk) 1'b1 |-> 1'b1);\n";
    let (run, _, _) = prove(&listing_one(), sva);
    assert_eq!(run.results[0].status, ProofStatus::Proven);
    assert_eq!(run.report.coverage_pct, 0.0);
}

#[test]
fn no_properties_give_zero_coverage() {
    let (run, _, _) = prove(&listing_one(), "");
    assert!(run.results.is_empty());
    assert_eq!(run.report.coverage_pct, 0.0);
}

#[test]
fn counter_reaches_eight_states() {
    let (design, _) = load("counter3");
    let ts = elaborate(design.unit(), "counter3.v", &ElabConfig::default()).unwrap();
    let graph = explore(&ts, &[], &CheckConfig::default());
    assert!(graph.complete);
    assert_eq!(graph.states.len(), 8);
    let sim = Sim::new(design.unit());
    assert_eq!(sim.reachable().len(), 8);
}

#[test]
fn constraint_blocking_the_guard_makes_line_three_unreachable() {
    let sva = format!("{LISTING_TWO}assume property (@(posedge clk) 1'b1 |-> !a);\n");
    let (run, _, _) = prove(&listing_one(), &sva);
    assert_eq!(run.report.status_of("listing1.v:listing1:stmt@3.3-3.10"), Some(Status::Unreachable));
    // The assertion never fires, so it proves vacuously.
    assert_eq!(run.results.len(), 1);
    assert!(!run.results[0].non_vacuous);
}

#[test]
fn constraints_must_be_same_cycle() {
    let design = listing_one();
    let ts = elaborate(design.unit(), "listing1.v", &ElabConfig::default()).unwrap();
    let parsed = parse_sva("assume property (@(posedge clk) a |=> b);\n").unwrap();
    let err = Constraint::new(&ts, &parsed.properties[0], &[]).unwrap_err();
    assert!(matches!(err, FormalError::Unsupported { .. }), "{err:?}");
}

fn replay_violates(sim: &Sim, p: &SvaProperty, macros: &[Macro], cex: &[TraceStep]) {
    let to_vals = |v: &[(String, u64)]| -> Vals { v.iter().cloned().collect() };
    let steps: Vec<_> = cex.iter().map(|s| (to_vals(&s.state), to_vals(&s.inputs))).collect();
    if let Err(e) = oracle::replay_violation(sim, p, macros, &steps) {
        panic!("{}: {e}", p.render());
    }
}

#[test]
fn wrong_capture_is_falsified_with_a_replayable_minimal_trace() {
    let design = listing_one();
    let sva = "assert property (@(posedge clk) (a && b) |=> (c == $past(d2)));\n";
    let (run, props, macros) = prove(&design, sva);
    let ProofStatus::Falsified { cex } = &run.results[0].status else {
        panic!("{:?}", run.results[0].status)
    };
    assert_eq!(cex.len(), 2);
    replay_violates(&Sim::new(design.unit()), &props[0], &macros, cex);
}

/// Flip the consequent's relation to manufacture failing properties.
fn mutate(p: &SvaProperty) -> Option<SvaProperty> {
    let mut m = p.clone();
    m.name = format!("{}_mut", p.name);
    if p.consequent.contains("==") {
        m.consequent = p.consequent.replacen("==", "!=", 1);
    } else if p.consequent.trim() == "1'b1" {
        return None;
    } else {
        m.consequent = format!("!({})", p.consequent);
    }
    Some(m)
}

#[test]
fn builtin_verdicts_match_exhaustive_enumeration_on_the_corpus() {
    for name in common::CORPUS.iter().chain(&["listing1", "adder", "deadcode"]) {
        let (design, seed) = load(name);
        let closed = run_closure(&design, &seed, &ClosureConfig::default()).unwrap();
        let parsed = parse_sva(&closed.sva_text).unwrap();
        let mut props = parsed.properties.clone();
        props.extend(parsed.properties.iter().filter_map(mutate));
        let text: String = props
            .iter()
            .map(|p| p.render())
            .collect::<Vec<_>>()
            .join("\n");
        let sva = parsed
            .resources
            .macros
            .iter()
            .map(|m| format!("`define {} {}\n", m.name, m.body))
            .collect::<String>()
            + &text;
        let (run, props, macros) = prove(&design, &sva);
        let sim = Sim::new(design.unit());
        let reach = sim.reachable();
        assert_eq!(run.results.len(), props.len());
        for (r, p) in run.results.iter().zip(&props) {
            let want = oracle::verdict(&sim, &reach, p, &macros);
            assert_eq!(r.status.label(), want, "{name}: {}", p.render());
            if let ProofStatus::Falsified { cex } = &r.status {
                replay_violates(&sim, p, &macros, cex);
            }
        }
    }
}

#[test]
fn unreachable_targets_are_exactly_those_never_executed() {
    for name in common::CORPUS.iter().chain(&["listing1", "deadcode"]) {
        let (design, _) = load(name);
        let (run, _, _) = prove(&design, "");
        let sim = Sim::new(design.unit());
        let executed = oracle::executed_spans(&sim, &sim.reachable());
        for t in enumerate_targets(design.unit(), &design.file_name()) {
            if t.kind != TargetKind::Statement {
                continue;
            }
            let hit = executed.iter().any(|s| s.start() == t.span.start());
            let status = run.report.status_of(&t.id).unwrap();
            assert_eq!(status == Status::Unreachable, !hit, "{name}: {}", t.id);
        }
    }
}

const RECORDING: &str = r#"[
  {"design": "listing1", "iteration": 1, "coverage_pct": 0.0,
   "targets": [
     {"id": "listing1.v:listing1:stmt@3.3-3.10", "kind": "STATEMENT", "start": [3, 3], "end": [3, 10], "status": "UNCOVERED"},
     {"id": "listing1.v:listing1:stmt@5.3-5.10", "kind": "STATEMENT", "start": [5, 3], "end": [5, 10], "status": "UNCOVERED"}
   ],
   "proofs": {}},
  {"design": "listing1", "iteration": 2, "coverage_pct": 100.0,
   "targets": [
     {"id": "listing1.v:listing1:stmt@3.3-3.10", "kind": "STATEMENT", "start": [3, 3], "end": [3, 10], "status": "COVERED"},
     {"id": "listing1.v:listing1:stmt@5.3-5.10", "kind": "STATEMENT", "start": [5, 3], "end": [5, 10], "status": "COVERED"}
   ],
   "proofs": {"branch_captures_d1": "PROVEN", "other": "UNDETERMINED"}}
]"#;

#[test]
fn replay_returns_recorded_runs_in_order_then_runs_out() {
    let design = listing_one();
    let mut b = ReplayBackend::from_json(RECORDING).unwrap();
    let job = ProofJob {
        unit: design.unit(),
        file: "listing1.v",
        properties: &[],
        macros: &[],
        iteration: 1,
        exclude_unreachable: false,
    };
    assert_eq!(b.remaining(), 2);
    assert_eq!(b.run(&job).unwrap().report.coverage_pct, 0.0);
    let second = b.run(&job).unwrap();
    assert_eq!(second.report.coverage_pct, 100.0);
    let labels: Vec<_> = second.results.iter().map(|r| (r.name.as_str(), r.status.label())).collect();
    assert_eq!(labels, [("branch_captures_d1", "PROVEN"), ("other", "UNDETERMINED")]);
    assert!(matches!(b.run(&job), Err(FormalError::RecordingExhausted { used: 2 })));
}

#[test]
fn replay_rejects_unknown_targets_and_bad_statuses() {
    let design = listing_one();
    let job = ProofJob {
        unit: design.unit(),
        file: "listing1.v",
        properties: &[],
        macros: &[],
        iteration: 1,
        exclude_unreachable: false,
    };
    let bad_id = RECORDING.replace("stmt@5.3-5.10", "stmt@9.1-9.2");
    let mut b = ReplayBackend::from_json(&bad_id).unwrap();
    assert!(matches!(b.run(&job), Err(FormalError::UnknownTarget { .. })));
    let bad_status = RECORDING.replace("\"UNDETERMINED\"", "\"MAYBE\"");
    assert!(matches!(ReplayBackend::from_json(&bad_status), Err(FormalError::Schema { .. })));
}

#[test]
fn budgets_are_enforced() {
    let src = "module wide(input clk, input [31:0] d, output reg [31:0] q); always @(posedge clk) q <= d; endmodule\n";
    let design = Design::parse("wide.v", src).unwrap();
    let err = elaborate(design.unit(), "wide.v", &ElabConfig::default()).unwrap_err();
    assert!(
        matches!(err, FormalError::StateBudgetExceeded { .. } | FormalError::InputBudgetExceeded { .. }),
        "{err:?}"
    );
}
