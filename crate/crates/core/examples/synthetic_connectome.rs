//! Writes the bundled synthetic lateral-horn edge list.
//!
//! cargo run -p ffesn --example synthetic_connectome -- fixtures/synthetic_lh.csv

use std::path::PathBuf;

use ffesn::fixture::{synthetic_csv, BUNDLED};

fn main() -> std::io::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures/synthetic_lh.csv"));
    std::fs::write(&path, synthetic_csv(&BUNDLED))?;
    println!("wrote {}", path.display());
    Ok(())
}
