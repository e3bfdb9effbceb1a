//! Parse a design and list its ports, parameters and processes.

use covloop::closure::Design;
use covloop::rtl::ast::Item;
use covloop::rtl::resolve_signals;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/fsm4.v");
    let design = Design::load(&[path], None)?;
    let unit = design.unit();
    println!("module {}", unit.name);
    let table = resolve_signals(unit)?;
    for s in &table.signals {
        println!("  {:<10} {:?} width {}", s.name, s.direction, s.width);
    }
    for (name, value, width) in &table.params {
        println!("  localparam {name} = {value} ({width} bits)");
    }
    for item in &unit.items {
        match item {
            Item::Always(b) => println!("  {:?} process at line {}", b.timing, b.span.start_line),
            Item::Assign(a) => println!("  assign {} at line {}", a.lhs.name, a.span.start_line),
        }
    }
    Ok(())
}
