//! Membership of the stock truths in the function classes: hyperrectangle,
//! Sobolev, polished-tail, self-similar. Checks are conservative: Holds and
//! Fails are certified, anything the tail envelope cannot settle is
//! Undecidable.
//!
//! Run with: cargo run --release --example truth_classes

use ebcred::truths::{is_in_class, make_bad_truth, make_selfsim_truth, ClassParams, TruthSequence};

fn report(theta: &TruthSequence, params: &ClassParams) -> ebcred::Result<()> {
    let check = is_in_class(theta, params)?;
    let witness = check
        .witness
        .map(|w| format!(" (witness index {w})"))
        .unwrap_or_default();
    println!(
        "  {:?} -> {:?}{witness}, margin {:.4}, checked up to {}",
        params, check.verdict, check.margin, check.checked_up_to
    );
    Ok(())
}

fn main() -> ebcred::Result<()> {
    let selfsim = make_selfsim_truth(10_000)?;
    let bad = make_bad_truth(10_000, true)?;

    println!("self-similar truth ({}):", selfsim.label());
    report(&selfsim, &ClassParams::Hyperrectangle { beta: 1.0, m: 1.0 })?;
    report(&selfsim, &ClassParams::Sobolev { beta: 0.9, m: 10.0 })?;
    report(&selfsim, &ClassParams::PolishedTail { l0: 20.0, n0: 2, rho: 2.0 })?;
    report(
        &selfsim,
        &ClassParams::SelfSimilar { beta: 1.0, m: 1.0, eps: 0.05, n0: 10, rho: 2.0 },
    )?;

    println!("bad truth ({}):", bad.label());
    report(&bad, &ClassParams::Hyperrectangle { beta: 1.0, m: 1.0 })?;
    report(&bad, &ClassParams::PolishedTail { l0: 20.0, n0: 2, rho: 2.0 })?;
    Ok(())
}
