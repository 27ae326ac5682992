//! Drives a TOML run specification through the same code path as
//! `nsensemble run`, then prints the summary and the written artifacts.
//!
//! `cargo run --release --example run_spec [-- path/to/spec.toml]`

use std::path::PathBuf;

use nsensemble::cli::{run_spec, Options, RunSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs/mms_a1_smoke.toml"));
    let spec = RunSpec::from_path(&path)?;
    let out = std::env::temp_dir().join("nsensemble_run_spec");
    let outcome = run_spec(&spec, &Options { out_dir: Some(out), seed: None })?;
    print!("{}", outcome.render());
    for a in &outcome.artifacts {
        println!("  {}", a.display());
    }
    Ok(())
}
