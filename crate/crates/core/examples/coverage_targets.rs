//! Enumerate statement and branch targets with their path conditions.

use covloop::closure::Design;
use covloop::coverage::enumerate_targets;

const SOURCE: &str = "module listing1(input clk, input a, input b, input d1, input d2, output reg c); always @(posedge clk) begin
 if (a && b)
  c <= d1;
 else
  c <= d2;
end
endmodule
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let design = Design::parse("listing1.v", SOURCE)?;
    for t in enumerate_targets(design.unit(), &design.file_name()) {
        println!("{:<36} {:?} when {}", t.id, t.kind, t.path_condition);
    }
    Ok(())
}
