//! Deterministic theory-side quantities: the functional h_n whose threshold
//! crossings bracket the likelihood maximizer, the bias/variance split of
//! the posterior mean, the oracle risk over the estimator family, and the
//! linear minimax risk over a hyperrectangle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::grid_then_refine_min;
use crate::sequence_model::ModelConfig;
use crate::truths::{Tail, TruthSequence};

/// Scan resolution for the threshold bounds.
pub const BOUNDS_GRID: usize = 2001;
const BISECT_ITERS: usize = 60;

/// h_n(alpha; theta0): the truncated sum
/// `((1+2a+2p)/(n^(1/(1+2a+2p)) log n)) * sum_i n^2 i^(1+2a) (log i) theta_i^2 / (i^(1+2a+2p)+n)^2`,
/// over the truth's explicit coefficients. The power-law decay uses the
/// certified exponent p through the exact envelope `i^(-2p)`, not the raw
/// kappa values. See [`h_n_tail_bound`] for the neglected tail.
pub fn h_n(alpha: f64, theta0: &TruthSequence, cfg: &ModelConfig) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Precondition(format!("alpha must be nonnegative, got {alpha}")));
    }
    let n = cfg.n();
    if n < 2.0 {
        return Err(Error::Precondition(format!("h_n needs n >= 2 (log n > 0), got {n}")));
    }
    let (p, _) = cfg.kappa().certified();
    let e = 1.0 + 2.0 * alpha;
    let ep = e + 2.0 * p;
    let mut sum = 0.0f64;
    for i in 2..=theta0.len() {
        let th = theta0.coeff(i);
        if th == 0.0 {
            continue;
        }
        let x = i as f64;
        let li = x.ln();
        let denom = x.powf(ep) + n;
        sum += n * n * x.powf(e) * li * th * th / (denom * denom);
    }
    Ok((ep / (n.powf(1.0 / ep) * n.ln())) * sum)
}

/// Upper bound on the part of h_n dropped by truncating at the truth's
/// explicit length, using the truth's tail envelope.
pub fn h_n_tail_bound(alpha: f64, theta0: &TruthSequence, cfg: &ModelConfig) -> f64 {
    let amp_exp = match theta0.tail() {
        Tail::Zero => return 0.0,
        Tail::PowerLaw { amplitude, exponent } => (*amplitude, *exponent),
    };
    let (amp, ex) = amp_exp;
    let n = cfg.n();
    let (p, _) = cfg.kappa().certified();
    let e = 1.0 + 2.0 * alpha;
    let ep = e + 2.0 * p;
    let from = (theta0.len() + 1) as f64;
    // termwise: n^2 i^e ln(i) amp^2 i^(-2ex) / i^(2ep) <= n^2 amp^2 ln(i) i^(e - 2ex - 2ep)
    // integral bound with ln i <= i^(1/2) for crude safety at the exponents in use
    let pow = e - 2.0 * ex - 2.0 * ep + 0.5;
    if pow >= -1.0 {
        return f64::INFINITY;
    }
    let integral = from.powf(pow + 1.0) / (-(pow + 1.0));
    (ep / (n.powf(1.0 / ep) * n.ln())) * n * n * amp * amp * integral
}

/// The lower/upper alpha bounds defined by the crossings of h_n with the
/// thresholds `1/(16 C^8)` and `8 C^8`:
/// `alpha_lower = inf { a in [0,A] : h_n(a) >= 1/(16 C^8) }` (A when empty),
/// `alpha_upper = sup { a in [0,A] : h_n(a) <= 8 C^8 }` (0 when empty).
/// Dense 2001-point scan plus bisection on the bracketing interval.
pub fn alpha_bounds(theta0: &TruthSequence, cfg: &ModelConfig) -> Result<(f64, f64)> {
    let (_, c) = cfg.kappa().certified();
    let c8 = c.powi(8);
    let t_lo = 1.0 / (16.0 * c8);
    let t_hi = 8.0 * c8;
    let a_max = cfg.a();
    let step = a_max / (BOUNDS_GRID - 1) as f64;
    let h = |a: f64| h_n(a, theta0, cfg);

    // alpha_lower: first grid point in {h >= t_lo}, refined backwards
    let mut lower = a_max;
    let mut prev = h(0.0)?;
    if prev >= t_lo {
        lower = 0.0;
    } else {
        for k in 1..BOUNDS_GRID {
            let a = step * k as f64;
            let v = h(a)?;
            if v >= t_lo {
                let (mut lo, mut hi) = (a - step, a);
                for _ in 0..BISECT_ITERS {
                    let mid = 0.5 * (lo + hi);
                    if h(mid)? >= t_lo {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                lower = hi;
                break;
            }
            prev = v;
        }
        let _ = prev;
    }

    // alpha_upper: last grid point in {h <= t_hi}, refined forwards
    let mut upper = 0.0;
    if h(a_max)? <= t_hi {
        upper = a_max;
    } else {
        for k in (0..BOUNDS_GRID - 1).rev() {
            let a = step * k as f64;
            if h(a)? <= t_hi {
                let (mut lo, mut hi) = (a, a + step);
                for _ in 0..BISECT_ITERS {
                    let mid = 0.5 * (lo + hi);
                    if h(mid)? <= t_hi {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                upper = lo;
                break;
            }
        }
    }
    Ok((lower, upper))
}

/// Squared bias and expected squared spread of the posterior mean at a
/// fixed alpha:
/// `bias_sq = sum_i (i^(1+2a) theta_i / (i^(1+2a) + n kappa_i^2))^2` over
/// the estimated range, plus the full energy of truth coordinates beyond
/// the truncation (those are estimated by zero) and the analytic tail
/// bound; `var_sq = sum_{i<=trunc} n kappa_i^2 / (i^(1+2a) + n kappa_i^2)^2`.
pub fn bias_variance(alpha: f64, theta0: &TruthSequence, cfg: &ModelConfig) -> Result<(f64, f64)> {
    if !(alpha >= 0.0) {
        return Err(Error::Precondition(format!("alpha must be nonnegative, got {alpha}")));
    }
    let n = cfg.n();
    let e = 1.0 + 2.0 * alpha;
    let mut bias = 0.0f64;
    let mut var = 0.0f64;
    for i in 1..=cfg.trunc() {
        let x = i as f64;
        let k = cfg.kappa().kappa(i)?;
        let denom = x.powf(e) + n * k * k;
        let th = theta0.coeff(i);
        bias += (x.powf(e) * th / denom).powi(2);
        var += n * k * k / (denom * denom);
    }
    for i in (cfg.trunc() + 1)..=theta0.len() {
        bias += theta0.coeff(i).powi(2);
    }
    bias += theta0.tail_norm_sq_upper(theta0.len().max(cfg.trunc()) + 1);
    Ok((bias, var))
}

/// Minimum of `bias_sq + var_sq` over alpha in [0, A] within the posterior
/// mean family; returns (risk, argmin), ties to the smallest alpha.
pub fn oracle_risk(theta0: &TruthSequence, cfg: &ModelConfig) -> Result<(f64, f64)> {
    let mut err = None;
    let (a_star, risk) = grid_then_refine_min(
        |a| match bias_variance(a, theta0, cfg) {
            Ok((b, v)) => b + v,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        0.0,
        cfg.a(),
        513,
        1e-6,
    );
    match err {
        Some(e) => Err(e),
        None => Ok((risk, a_star)),
    }
}

/// Linear minimax risk over the hyperrectangle `sup_i i^(1+2b) theta_i^2 <= M`:
/// `sum_i M_i sigma_i^2 / (M_i + sigma_i^2)` with `M_i = M i^(-1-2b)` and
/// `sigma_i^2 = kappa_i^-2 / n`, truncated at cfg.trunc (exact sum, no tail
/// added; see [`minimax_tail_bound`]).
pub fn minimax_linear_risk(beta: f64, m: f64, cfg: &ModelConfig) -> Result<f64> {
    if !(beta > 0.0 && m > 0.0) {
        return Err(Error::Precondition(format!(
            "need beta > 0 and M > 0, got beta={beta}, M={m}"
        )));
    }
    let n = cfg.n();
    let e = 1.0 + 2.0 * beta;
    let mut sum = 0.0f64;
    for i in 1..=cfg.trunc() {
        let x = i as f64;
        let k = cfg.kappa().kappa(i)?;
        let mi = m * x.powf(-e);
        let s2 = 1.0 / (n * k * k);
        sum += mi * s2 / (mi + s2);
    }
    Ok(sum)
}

/// Upper bound on the minimax-risk mass beyond the truncation
/// (each term is at most `M_i`).
pub fn minimax_tail_bound(beta: f64, m: f64, cfg: &ModelConfig) -> f64 {
    m * (cfg.trunc() as f64).powf(-2.0 * beta) / (2.0 * beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    /// (alpha, h_n(alpha)) pairs on a uniform grid.
    pub h_profile: Vec<(f64, f64)>,
    /// (alpha, bias_sq) pairs on the same grid.
    pub bias_profile: Vec<(f64, f64)>,
    /// (alpha, var_sq) pairs on the same grid.
    pub var_profile: Vec<(f64, f64)>,
    pub oracle_risk: f64,
    pub oracle_alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub minimax_linear: Option<f64>,
    /// True when C^8 makes the h_n thresholds vacuous at this n
    /// (1/(16 C^8) and 8 C^8 both far outside the attained range).
    pub thresholds_degenerate: bool,
}

/// Assemble the full report on a `grid_points`-point alpha grid.
pub fn diagnostics_report(
    theta0: &TruthSequence,
    cfg: &ModelConfig,
    grid_points: usize,
) -> Result<DiagnosticsReport> {
    if grid_points < 2 {
        return Err(Error::Precondition("need at least 2 grid points".into()));
    }
    let (alpha_lower, alpha_upper) = alpha_bounds(theta0, cfg)?;
    let step = cfg.a() / (grid_points - 1) as f64;
    let mut h_profile = Vec::with_capacity(grid_points);
    let mut bias_profile = Vec::with_capacity(grid_points);
    let mut var_profile = Vec::with_capacity(grid_points);
    let mut h_max = 0.0f64;
    for k in 0..grid_points {
        let a = step * k as f64;
        let h = h_n(a, theta0, cfg)?;
        let (b, v) = bias_variance(a, theta0, cfg)?;
        h_max = h_max.max(h);
        h_profile.push((a, h));
        bias_profile.push((a, b));
        var_profile.push((a, v));
    }
    let (risk, alpha_star) = oracle_risk(theta0, cfg)?;
    let (_, c) = cfg.kappa().certified();
    let c8 = c.powi(8);
    let thresholds_degenerate = h_max < 1.0 / (16.0 * c8) || h_max > 0.0 && 8.0 * c8 > 1e3 * h_max;
    Ok(DiagnosticsReport {
        n: cfg.n(),
        alpha_lower,
        alpha_upper,
        h_profile,
        bias_profile,
        var_profile,
        oracle_risk: risk,
        oracle_alpha: alpha_star,
        minimax_linear: None,
        thresholds_degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eb_inference::posterior;
    use crate::rng::Seed;
    use crate::sequence_model::{synthesize, KappaSpec};
    use crate::truths::make_selfsim_truth;

    fn volterra_cfg(n: f64, trunc: usize) -> ModelConfig {
        ModelConfig::new(n, KappaSpec::Volterra, 5.0, 0.05, trunc).unwrap()
    }

    fn zero_truth(t: usize) -> TruthSequence {
        TruthSequence::new(vec![0.0; t], Tail::Zero, "zero").unwrap()
    }

    #[test]
    fn h_zero_for_first_coordinate_only() {
        let cfg = volterra_cfg(1e4, 100);
        let mut c = vec![0.0; 100];
        c[0] = 0.0; // index 1 stays zero by construction
        let mut c2 = vec![0.0; 100];
        c2[1] = 0.0;
        let th = TruthSequence::new(c, Tail::Zero, "e1").unwrap();
        assert_eq!(h_n(1.0, &th, &cfg).unwrap(), 0.0);
        let th0 = TruthSequence::new(c2, Tail::Zero, "z").unwrap();
        assert_eq!(h_n(0.3, &th0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn h_matches_direct_summation() {
        // independent accumulation in reverse order with the literal formula
        let cfg = volterra_cfg(1e5, 2000);
        let th = make_selfsim_truth(2000).unwrap();
        let alpha = 0.7;
        let n = cfg.n();
        let ep = 1.0 + 2.0 * alpha + 2.0;
        let mut s = 0.0f64;
        for i in (1..=2000usize).rev() {
            let x = i as f64;
            let t = th.coeff(i);
            s += n * n * x.powf(1.0 + 2.0 * alpha) * x.ln() * t * t / (x.powf(ep) + n).powi(2);
        }
        let want = ep / (n.powf(1.0 / ep) * n.ln()) * s;
        let got = h_n(alpha, &th, &cfg).unwrap();
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn h_lower_bound_for_self_similar_truth() {
        // block-energy lower bound with M=1, eps=0.05, rho=2 for the
        // i^(-3/2) sin(i) truth, valid while n^(1/(1+2a+2p)) stays in range
        let cfg = volterra_cfg(1e6, 10_000);
        let th = make_selfsim_truth(10_000).unwrap();
        let (eps, m, rho, beta, p) = (0.05, 1.0, 2.0f64, 1.0, 1.0);
        for alpha in [0.5, 1.0, 1.5] {
            let ep = 1.0 + 2.0 * alpha + 2.0 * p;
            let bound = eps * m * cfg.n().powf((2.0 * alpha - 2.0 * beta) / ep)
                / (rho.powf(ep) + 1.0).powi(2);
            let h = h_n(alpha, &th, &cfg).unwrap();
            assert!(h >= bound, "alpha={alpha}: h={h} < bound={bound}");
        }
    }

    #[test]
    fn zero_truth_bounds_are_full_range() {
        let cfg = ModelConfig::new(500.0, KappaSpec::power_law(0.0).unwrap(), 5.0, 0.05, 500).unwrap();
        let th = zero_truth(500);
        let (lo, hi) = alpha_bounds(&th, &cfg).unwrap();
        assert_eq!(lo, cfg.a());
        assert_eq!(hi, cfg.a());
    }

    #[test]
    fn bounds_stable_under_grid_halving() {
        // coarse manual scan at half resolution must agree within one step
        let cfg = ModelConfig::new(2000.0, KappaSpec::power_law(0.0).unwrap(), 5.0, 0.05, 2000).unwrap();
        let th = make_selfsim_truth(2000).unwrap();
        let (lo, hi) = alpha_bounds(&th, &cfg).unwrap();
        let step = cfg.a() / (BOUNDS_GRID - 1) as f64;
        let coarse = cfg.a() / ((BOUNDS_GRID - 1) / 2) as f64;
        let t_lo = 1.0 / 16.0;
        let t_hi = 8.0;
        let mut lo2 = cfg.a();
        let mut k = 0;
        loop {
            let a = (coarse * k as f64).min(cfg.a());
            if h_n(a, &th, &cfg).unwrap() >= t_lo {
                lo2 = a;
                break;
            }
            if a >= cfg.a() {
                break;
            }
            k += 1;
        }
        let mut hi2 = 0.0;
        let mut k = ((cfg.a() / coarse) as i64).max(0);
        while k >= 0 {
            let a = (coarse * k as f64).min(cfg.a());
            if h_n(a, &th, &cfg).unwrap() <= t_hi {
                hi2 = a;
                break;
            }
            k -= 1;
        }
        assert!((lo - lo2).abs() <= coarse + step, "{lo} vs {lo2}");
        assert!((hi - hi2).abs() <= coarse + step, "{hi} vs {hi2}");
    }

    #[test]
    fn bias_zero_for_zero_truth_and_monotonicities() {
        let cfg = volterra_cfg(1e4, 1000);
        let th = zero_truth(1000);
        let (b, _) = bias_variance(1.0, &th, &cfg).unwrap();
        assert_eq!(b, 0.0);

        let ts = make_selfsim_truth(1000).unwrap();
        let mut prev_b = -1.0;
        let mut prev_v = f64::INFINITY;
        for k in 0..=40 {
            let a = 5.0 * k as f64 / 40.0;
            let (b, v) = bias_variance(a, &ts, &cfg).unwrap();
            assert!(b >= prev_b - 1e-14, "bias not nondecreasing at alpha={a}");
            assert!(v < prev_v + 1e-14, "variance not decreasing at alpha={a}");
            prev_b = b;
            prev_v = v;
        }
    }

    #[test]
    fn bias_variance_match_monte_carlo() {
        // n large enough that the spread has a few dozen effective degrees
        // of freedom; otherwise 5% needs far more replications
        let cfg = volterra_cfg(1e5, 1000);
        let th = make_selfsim_truth(1000).unwrap();
        let alpha = 1.0;
        let (bias, var) = bias_variance(alpha, &th, &cfg).unwrap();
        let reps = 400;
        let mut mean_acc = vec![0.0f64; 1000];
        let mut means = Vec::with_capacity(reps);
        for r in 0..reps {
            let obs = synthesize(&th, &cfg, Seed::new(900).split(r as u64)).unwrap();
            let post = posterior(alpha, &obs, &cfg).unwrap();
            for (k, &mv) in post.mean.iter().enumerate() {
                mean_acc[k] += mv;
            }
            means.push(post.mean);
        }
        for m in &mut mean_acc {
            *m /= reps as f64;
        }
        let mut spread = 0.0f64;
        for m in &means {
            let d: f64 = m.iter().zip(&mean_acc).map(|(a, b)| (a - b).powi(2)).sum();
            spread += d;
        }
        spread /= reps as f64;
        let bias_hat: f64 = mean_acc
            .iter()
            .enumerate()
            .map(|(k, &m)| (m - th.coeff(k + 1)).powi(2))
            .sum();
        assert!(((spread - var) / var).abs() < 0.05, "spread {spread} vs var {var}");
        assert!(((bias_hat - bias) / bias).abs() < 0.05, "bias {bias_hat} vs {bias}");
    }

    #[test]
    fn oracle_prefers_max_alpha_for_zero_truth() {
        let cfg = volterra_cfg(1e4, 1000);
        let th = zero_truth(1000);
        let (risk, a_star) = oracle_risk(&th, &cfg).unwrap();
        assert!((a_star - cfg.a()).abs() < 1e-5);
        let (_, v) = bias_variance(cfg.a(), &th, &cfg).unwrap();
        assert!((risk - v).abs() < 1e-12);
    }

    #[test]
    fn oracle_beats_grid() {
        let cfg = volterra_cfg(1e5, 2000);
        let th = make_selfsim_truth(2000).unwrap();
        let (risk, a_star) = oracle_risk(&th, &cfg).unwrap();
        for k in 0..=100 {
            let a = cfg.a() * k as f64 / 100.0;
            let (b, v) = bias_variance(a, &th, &cfg).unwrap();
            assert!(risk <= b + v + 1e-10, "alpha={a}");
        }
        assert!(a_star >= 0.0 && a_star <= cfg.a());
    }

    #[test]
    fn minimax_single_coordinate() {
        // p=0, n=1 gives sigma_1^2 = 1; beta anything, M=1 gives M_1 = 1
        let cfg = ModelConfig::new(1.0, KappaSpec::power_law(0.0).unwrap(), 5.0, 0.05, 1).unwrap();
        let r = minimax_linear_risk(1.0, 1.0, &cfg).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn minimax_scaling_exponents() {
        let beta = 1.0;
        let p = 1.0;
        let denom = 1.0 + 2.0 * beta + 2.0 * p;
        let kappa = KappaSpec::power_law(p).unwrap();
        let n = 1e6;
        let big = ModelConfig::new(2.0 * n, kappa.clone(), 5.0, 0.05, 20_000).unwrap();
        let small = ModelConfig::new(n, kappa.clone(), 5.0, 0.05, 20_000).unwrap();
        let ratio = minimax_linear_risk(beta, 1.0, &big).unwrap()
            / minimax_linear_risk(beta, 1.0, &small).unwrap();
        let want = (2.0f64).powf(-2.0 * beta / denom);
        assert!(((ratio - want) / want).abs() < 0.03, "{ratio} vs {want}");

        let mut scaled = Vec::new();
        for m in [1.0, 4.0, 16.0] {
            let r = minimax_linear_risk(beta, m, &small).unwrap();
            scaled.push(r / m.powf((1.0 + 2.0 * p) / denom));
        }
        for w in scaled.windows(2) {
            assert!(((w[1] - w[0]) / w[0]).abs() < 0.10, "{scaled:?}");
        }
    }

    #[test]
    fn report_roundtrips_and_flags_volterra() {
        let cfg = volterra_cfg(1e4, 500);
        let th = make_selfsim_truth(500).unwrap();
        let rep = diagnostics_report(&th, &cfg, 41).unwrap();
        assert!(rep.thresholds_degenerate, "pi^8 thresholds should be flagged");
        let json = serde_json::to_string(&rep).unwrap();
        let back: DiagnosticsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(rep, back);
    }
}
