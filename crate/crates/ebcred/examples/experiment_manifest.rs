//! Drive a full experiment from a TOML manifest, exactly as the `ebcred`
//! binary does, and inspect the run directory it writes.
//!
//! Run with: cargo run --release --example experiment_manifest

use ebcred::experiments::{run, ExperimentSpec};

const MANIFEST: &str = r#"
mode = "coverage"
n_list = [1e3, 1e4]
reps = 50
seed = 7
l = 1.0
out = "run_manifest_demo"

[truth]
name = "selfsim"

[model]
kappa = "volterra"
a = 5.0
gamma = 0.05
"#;

fn main() -> ebcred::Result<()> {
    let spec = ExperimentSpec::from_toml_str(MANIFEST)?;
    let artifacts = run(&spec)?;
    println!("run directory: {}", artifacts.dir.display());
    for f in &artifacts.files {
        println!("  {}", f.display());
    }
    let summary = std::fs::read_to_string(&artifacts.summary_path)
        .map_err(|e| ebcred::Error::io(&artifacts.summary_path, e))?;
    println!("summary.json:\n{summary}");
    Ok(())
}
