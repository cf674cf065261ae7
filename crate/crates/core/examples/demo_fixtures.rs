//! Writes the offline demo (FDC export, stub transcripts, manifest, config).
//!
//! `cargo run --example demo_fixtures -- <dir> [seed]`

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "demo".into()));
    let seed = args.next().map_or(42, |s| s.parse().expect("seed must be an integer"));
    let layout = mealbench::demo::write_demo(&dir, seed, 200, 10)?;
    println!("demo written; run: mealbench all --config {}", layout.config.display());
    Ok(())
}
