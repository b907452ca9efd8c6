//! Regenerates the data files under `configs/` from their fixed seeds.
//!
//! cargo run --example export_fixtures [-- <dir>]

use std::path::PathBuf;

fn main() -> reconfig::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;
    for (name, bytes) in reconfig::fixtures::shipped_files()? {
        std::fs::write(dir.join(name), bytes)?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
