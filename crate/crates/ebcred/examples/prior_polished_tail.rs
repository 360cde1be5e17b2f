//! How often does a draw from the smoothness prior satisfy the
//! polished-tail condition? (It should: almost surely, for every alpha.)
//!
//! Run with: cargo run --release --example prior_polished_tail

use ebcred::experiments::{run_prior_check, ExperimentSpec, Mode, ModelSpec, TruthSpec};

fn main() -> ebcred::Result<()> {
    for alpha in [0.5, 1.0, 2.0] {
        let spec = ExperimentSpec {
            mode: Mode::PriorCheck,
            truth: TruthSpec {
                name: "prior".into(),
                alpha: Some(alpha),
                path: None,
                len: Some(1 << 14),
            },
            model: ModelSpec { kappa: "volterra".into(), p: None, a: 5.0, gamma: 0.05, trunc: None },
            n_list: vec![1.0],
            l: 1.0,
            reps: 1000,
            seed: 99,
            out: None,
            beta: 1.0,
            m: 1.0,
        };
        let s = run_prior_check(&spec)?;
        println!(
            "alpha = {alpha}: {:.1}% of {} draws (T = {}) are polished-tail \
             with L0 = {:.2}, rho = {}, some N0 <= {}",
            100.0 * s.pass_fraction,
            s.reps,
            s.t,
            s.l0,
            s.rho,
            s.n0_grid.last().unwrap()
        );
    }
    Ok(())
}
