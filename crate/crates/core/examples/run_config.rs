//! Runs one of the JSON case files through the library entry point, the
//! same path the `degen` binary takes.
//!
//! ```text
//! cargo run --release --example run_config -- examples/configs/perpetual_put.json
//! ```

use std::path::PathBuf;

use degen::runner::{parse_config, run_case, RunOptions};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/heston_bvp.json")));
    let out = std::env::temp_dir().join("degen-run-config");
    let result = parse_config(&path).and_then(|cfg| {
        run_case(
            &cfg,
            &RunOptions {
                out_dir: out.clone(),
                ..RunOptions::default()
            },
        )
    });
    match result {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report["results"]).unwrap());
            for a in outcome.artifacts {
                println!("wrote {}", a.display());
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
