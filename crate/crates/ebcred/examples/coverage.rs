//! Seeded Monte Carlo coverage of the credible ball across sample sizes:
//! honest coverage for the self-similar truth, collapse for the bad one.
//!
//! Run with: cargo run --release --example coverage

use ebcred::experiments::{run_coverage, ExperimentSpec, Mode, ModelSpec, TruthSpec};

fn spec(truth: &str, n_list: Vec<f64>) -> ExperimentSpec {
    ExperimentSpec {
        mode: Mode::Coverage,
        truth: TruthSpec { name: truth.into(), alpha: None, path: None, len: None },
        model: ModelSpec { kappa: "volterra".into(), p: None, a: 5.0, gamma: 0.05, trunc: None },
        n_list,
        l: 1.0,
        reps: 100,
        seed: 2024,
        out: None,
        beta: 1.0,
        m: 1.0,
    }
}

fn show(title: &str, spec: &ExperimentSpec) -> ebcred::Result<()> {
    println!("{title} (reps = {}, L = {}):", spec.reps, spec.l);
    println!("  {:>10}  {:>8}  {:>11}  {:>9}", "n", "coverage", "mean radius", "mean a^");
    for r in run_coverage(spec)? {
        println!(
            "  {:>10.0}  {:>8.2}  {:>11.5}  {:>9.3}",
            r.n, r.coverage, r.mean_radius, r.mean_alpha_hat
        );
    }
    Ok(())
}

fn main() -> ebcred::Result<()> {
    show("self-similar truth", &spec("selfsim", vec![1e4, 1e6]))?;
    show("bad truth", &spec("bad", vec![20.0, 50.0, 1e3, 6e4]))?;
    Ok(())
}
