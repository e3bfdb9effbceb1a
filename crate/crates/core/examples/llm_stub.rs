//! Model-backed generation against an offline chat stub. The first reply
//! names a signal the design lacks and is rejected; the second is accepted.

use covloop::analyzer::{analyze_report, consolidate};
use covloop::closure::{bind_design, Design};
use covloop::coverage::{enumerate_targets, CoverageReport, Status};
use covloop::rtl::resolve_signals;
use covloop::sva::{llm_generate, parse_sva, ChatBackend, ChatMessage, GenOptions, LlmConfig, SvaError};

struct Stub(Vec<&'static str>);

impl ChatBackend for Stub {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, SvaError> {
        eprintln!("--- prompt ({} chars)", messages.iter().map(|m| m.content.len()).sum::<usize>());
        Ok(self.0.remove(0).to_string())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/extra/adder.v");
    let design = Design::load(&[path], None)?;
    let file = design.file_name();
    let targets = enumerate_targets(design.unit(), &file);
    let report = CoverageReport::from_statuses(&design.unit().name, 0, &targets, &vec![Status::Uncovered; targets.len()], false);
    let contexts = consolidate(analyze_report(&report, &targets, design.unit(), design.source(), &file)?);
    let ctx = contexts.iter().find(|c| c.code == "c <= a + b").expect("adder has a sum hole");

    let mut res = parse_sva("")?.resources;
    bind_design(&mut res, &resolve_signals(design.unit())?);
    let mut stub = Stub(vec![
        "```systemverilog\nproperty p_sum;\n  @(posedge clk) disable iff (!rst)\n  1'b1 |=> sum == $past(a + b);\nendproperty\nassert property (p_sum);\n```",
        "```systemverilog\nproperty p_sum;\n  @(posedge clk) disable iff (!rst)\n  1'b1 |=> c == $past(a + b);\nendproperty\nassert property (p_sum);\n```",
    ]);
    let out = llm_generate(ctx, &res, &mut stub, &LlmConfig::default(), &GenOptions::default())?;
    for r in &out.rejected {
        println!("rejected attempt {}: {}", r.attempt, r.error);
    }
    println!("accepted after {} calls (fallback: {})", out.calls, out.fell_back);
    for p in &out.properties {
        print!("{}", p.render_with_trace());
    }
    Ok(())
}
