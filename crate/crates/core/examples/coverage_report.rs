//! Convert a tab-separated coverage export into a canonical report.

use covloop::closure::Design;
use covloop::coverage::adapter::import_tsv;
use covloop::coverage::enumerate_targets;

const EXPORT: &str = "# kind\tfile\tstart\tend\tstatus
stmt\tlisting1.v\t3:3\t3:10\thit
branch\tlisting1.v\t3:3\t3:10\thit
stmt\tlisting1.v\t5:3\t5:10\tmiss
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/extra/listing1.v");
    let design = Design::load(&[path], None)?;
    let targets = enumerate_targets(design.unit(), &design.file_name());
    let report = import_tsv(EXPORT, &design.unit().name, 0, &targets, false)?;
    println!("{}", report.to_json());
    Ok(())
}
