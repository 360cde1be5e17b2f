//! Estimate the prior smoothness by marginal likelihood and look at the
//! resulting posterior.
//!
//! Run with: cargo run --release --example fit_alpha

use ebcred::rng::Seed;
use ebcred::sequence_model::{synthesize, KappaSpec, ModelConfig};
use ebcred::truths::make_selfsim_truth;
use ebcred::{empirical_bayes_posterior, estimate_alpha};

fn main() -> ebcred::Result<()> {
    let n = 1e6;
    let cfg = ModelConfig::with_default_trunc(n, KappaSpec::Volterra, 5.0, 0.05)?;
    let truth = make_selfsim_truth(cfg.trunc())?;
    let obs = synthesize(&truth, &cfg, Seed::new(42))?;

    let fit = estimate_alpha(&obs, &cfg)?;
    println!("n = {n:.0}, truncation = {}", cfg.trunc());
    println!("alpha_hat = {:.4} (log-likelihood {:.3})", fit.alpha_hat, fit.loglik_at_hat);

    let (_, post) = empirical_bayes_posterior(&obs, &cfg)?;
    let err: f64 = post
        .mean
        .iter()
        .enumerate()
        .map(|(k, &m)| (m - truth.coeff(k + 1)).powi(2))
        .sum::<f64>()
        .sqrt();
    println!("|posterior mean - truth| = {err:.5}");
    println!("first five posterior coordinates (mean, sd):");
    for i in 0..5 {
        println!("  i={}  {:+.5}  {:.5}", i + 1, post.mean[i], post.var[i].sqrt());
    }
    Ok(())
}
