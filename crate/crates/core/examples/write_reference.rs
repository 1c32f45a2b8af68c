//! Regenerates the synthetic reference trajectories under `data/reference`.

use std::path::PathBuf;

fn main() -> crosswalk_core::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/reference"));
    crosswalk_core::calibration::write_reference_files(&dir)?;
    println!("wrote reference trajectories to {}", dir.display());
    Ok(())
}
