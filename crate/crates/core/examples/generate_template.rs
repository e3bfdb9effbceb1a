//! Template generation for every hole of the adder, named and merged.

use covloop::analyzer::{analyze_report, consolidate};
use covloop::closure::{bind_design, Design};
use covloop::coverage::{enumerate_targets, CoverageReport, Status};
use covloop::rtl::resolve_signals;
use covloop::sva::{generate_property, merge_into_file, name_and_dedup, parse_sva, GenOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/extra/adder.v");
    let design = Design::load(&[path], None)?;
    let file = design.file_name();
    let targets = enumerate_targets(design.unit(), &file);
    // Nothing proven yet: every target is a hole.
    let report = CoverageReport::from_statuses(&design.unit().name, 0, &targets, &vec![Status::Uncovered; targets.len()], false);
    let contexts = consolidate(analyze_report(&report, &targets, design.unit(), design.source(), &file)?);

    let mut res = parse_sva("")?.resources;
    bind_design(&mut res, &resolve_signals(design.unit())?);
    let mut props = Vec::new();
    for ctx in &contexts {
        props.extend(generate_property(ctx, &res, &GenOptions::default())?);
    }
    let named = name_and_dedup(props, &res, 0);
    print!("{}", merge_into_file("", &named)?);
    Ok(())
}
