//! Close every corpus design with and without generation.

use covloop::closure::{benchmark, ClosureConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let table = benchmark(&dir, &ClosureConfig::default())?;
    print!("{}", table.render_text());
    Ok(())
}
