//! Reconstruct the unknown function on [0,1] with a sample-based 95%
//! credible band and write the plot data as CSV.
//!
//! Run with: cargo run --release --example band_figure

use ebcred::credible::{band_to_csv, sample_band};
use ebcred::rng::Seed;
use ebcred::sequence_model::{synthesize, KappaSpec, ModelConfig};
use ebcred::truths::make_selfsim_truth;

fn main() -> ebcred::Result<()> {
    let n = 1e6;
    let cfg = ModelConfig::with_default_trunc(n, KappaSpec::Volterra, 5.0, 0.05)?;
    let truth = make_selfsim_truth(cfg.trunc())?;
    let obs = synthesize(&truth, &cfg, Seed::new(5))?;

    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let band = sample_band(&obs, &cfg, 2000, 0.95, &grid, Some(&truth), Seed::new(6))?;
    println!("alpha_hat = {:.3}, kept {} of 2000 draws", band.alpha_hat, band.kept);

    let inside = grid
        .iter()
        .enumerate()
        .filter(|&(k, _)| {
            let tc = band.truth.as_ref().unwrap()[k];
            band.lower[k] <= tc && tc <= band.upper[k]
        })
        .count();
    println!("truth inside band at {inside}/{} grid points", grid.len());

    let path = "band.csv";
    let file = std::fs::File::create(path).map_err(|e| ebcred::Error::io(path, e))?;
    band_to_csv(&band, file).map_err(|e| ebcred::Error::io(path, e))?;
    println!("wrote {path}");
    Ok(())
}
