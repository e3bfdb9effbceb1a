#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use covloop::closure::Design;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// The five designs of the closure benchmark.
pub const CORPUS: [&str; 5] = ["alu", "counter3", "fsm4", "handshake", "mux2"];

pub fn corpus_path(name: &str) -> PathBuf {
    let main = corpus_dir().join(format!("{name}.v"));
    if main.exists() {
        main
    } else {
        corpus_dir().join("extra").join(format!("{name}.v"))
    }
}

pub fn load(name: &str) -> (Design, String) {
    let path = corpus_path(name);
    let design = Design::load(std::slice::from_ref(&path), None).expect("corpus design loads");
    let sva = std::fs::read_to_string(path.with_file_name(format!("{name}_sva.sv"))).unwrap_or_default();
    (design, sva)
}

pub const LISTING_ONE: &str = "module listing1(input clk, input a, input b, input d1, input d2, output reg c); always @(posedge clk) begin\n if (a && b)\n  c <= d1;\n else\n  c <= d2;\nend\nendmodule\n";

pub const LISTING_TWO: &str = "property branch_captures_d1;\n  @(posedge clk)\n   (a && b) |=> (c == $past(d1));\nendproperty\nassert property (branch_captures_d1);\n";
