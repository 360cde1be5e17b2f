//! Build an adaptive credible ball and test whether it covers the truth,
//! for a well-behaved truth and for the inconvenient one.
//!
//! Run with: cargo run --release --example credible_ball

use ebcred::credible::{contains, credible_ball, mc_radius, radius};
use ebcred::rng::Seed;
use ebcred::sequence_model::{synthesize, KappaSpec, ModelConfig};
use ebcred::truths::{make_bad_truth, make_selfsim_truth, TruthSequence};

fn one(label: &str, truth: &TruthSequence, cfg: &ModelConfig, seed: u64) -> ebcred::Result<()> {
    let obs = synthesize(truth, cfg, Seed::new(seed))?;
    let ball = credible_ball(&obs, cfg, 1.0)?;
    let covered = contains(&ball, truth);
    println!(
        "{label}: alpha_hat = {:.3}, radius = {:.5}, covers truth: {covered}",
        ball.alpha_used, ball.radius
    );
    Ok(())
}

fn main() -> ebcred::Result<()> {
    let n = 6e4;
    let cfg = ModelConfig::with_default_trunc(n, KappaSpec::Volterra, 5.0, 0.05)?;
    println!("n = {n:.0}, gamma = {}, truncation = {}", cfg.gamma(), cfg.trunc());

    // the exact radius vs its Monte Carlo cross-check at a fixed alpha
    let a = 1.0;
    let exact = radius(a, &cfg)?;
    let mc = mc_radius(a, &cfg, 200_000, Seed::new(7))?;
    println!("radius at alpha={a}: inversion {exact:.6}, monte carlo {mc:.6}");

    one("self-similar truth", &make_selfsim_truth(cfg.trunc())?, &cfg, 1)?;
    one("bad truth        ", &make_bad_truth(cfg.trunc(), true)?, &cfg, 1)?;
    Ok(())
}
