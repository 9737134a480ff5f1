//! Runs a scenario file through the same path as `bflow run` and prints
//! the manifest. Defaults to the standard-map scenario, which is quick.
//!
//!     cargo run --release --example scenario_runner [scenario.toml] [out_dir]

use branchflow::io::{parse_scenario, run_scenario};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig4_standard_map.toml"));
    let scenario = match parse_scenario(&std::fs::read_to_string(&path)?) {
        Ok(s) => s,
        Err(errs) => {
            eprintln!("{}:\n{errs}", path.display());
            std::process::exit(2);
        }
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("target/examples/runs").join(&scenario.name));
    let manifest = run_scenario(&scenario, &out)?;
    println!("{}", manifest.to_json());
    Ok(())
}
