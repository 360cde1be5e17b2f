//! Theory-side diagnostics for a fixed truth: the h_n profile and its
//! threshold crossings, bias/variance, oracle and minimax risks.
//!
//! Run with: cargo run --release --example diagnostics_report

use ebcred::diagnostics::{diagnostics_report, minimax_linear_risk};
use ebcred::sequence_model::{KappaSpec, ModelConfig};
use ebcred::truths::make_selfsim_truth;

fn main() -> ebcred::Result<()> {
    // direct-observation setup (p = 0, C = 1), where the h_n thresholds
    // 1/16 and 8 are meaningful at desk-scale n
    let cfg = ModelConfig::with_default_trunc(1e6, KappaSpec::power_law(0.0)?, 5.0, 0.05)?;
    let truth = make_selfsim_truth(cfg.trunc())?;

    let mut report = diagnostics_report(&truth, &cfg, 51)?;
    report.minimax_linear = Some(minimax_linear_risk(1.0, 1.0, &cfg)?);

    println!("alpha bounds: [{:.4}, {:.4}]", report.alpha_lower, report.alpha_upper);
    println!(
        "oracle: risk {:.6} at alpha = {:.4}; minimax linear risk {:.6}",
        report.oracle_risk,
        report.oracle_alpha,
        report.minimax_linear.unwrap()
    );
    println!("thresholds degenerate: {}", report.thresholds_degenerate);
    println!("h_n profile (every 10th grid point):");
    for (a, h) in report.h_profile.iter().step_by(10) {
        println!("  alpha = {a:>5.2}  h_n = {h:12.6}");
    }
    println!();
    println!("full report as JSON:");
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
