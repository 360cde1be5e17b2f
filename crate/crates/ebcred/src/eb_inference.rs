//! Marginal likelihood for the prior scale, its score, the empirical Bayes
//! maximizer, and the conjugate posterior.
//!
//! With `t_i = i^(1+2 alpha) kappa_i^-2` the marginal log-likelihood is
//!
//! ```text
//! l_n(alpha) = -1/2 sum_i [ log(1 + n/t_i) - n^2 x_i^2 / (t_i + n) ]
//! ```
//!
//! and the posterior factorizes coordinatewise with mean
//! `n kappa_i^-1 x_i / (t_i + n)` and variance `kappa_i^-2 / (t_i + n)`.

use crate::error::{Error, Result};
use crate::optimize::grid_then_refine_max;
use crate::sequence_model::{ModelConfig, Observation};

/// Number of grid points for the global likelihood scan.
pub const ALPHA_GRID: usize = 513;
/// Refinement tolerance on alpha.
pub const ALPHA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EBFit {
    pub alpha_hat: f64,
    pub loglik_at_hat: f64,
    /// (alpha, loglik) over the scan grid, when requested.
    pub profile: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub alpha: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Precondition(format!("alpha must be nonnegative, got {alpha}")));
    }
    Ok(())
}

fn check_pair(obs: &Observation, cfg: &ModelConfig) -> Result<()> {
    if obs.x().len() != cfg.trunc() {
        return Err(Error::Precondition(format!(
            "observation length {} does not match model truncation {}",
            obs.x().len(),
            cfg.trunc()
        )));
    }
    Ok(())
}

pub fn log_marginal_likelihood(alpha: f64, obs: &Observation, cfg: &ModelConfig) -> Result<f64> {
    check_alpha(alpha)?;
    check_pair(obs, cfg)?;
    let n = cfg.n();
    let e = 1.0 + 2.0 * alpha;
    let ln_i = cfg.ln_i();
    let inv_k2 = cfg.inv_kappa_sq();
    let x = obs.x();
    let mut acc = 0.0;
    for i in 0..x.len() {
        let t = (e * ln_i[i]).exp() * inv_k2[i];
        acc += (n / t).ln_1p() - n * n * x[i] * x[i] / (t + n);
    }
    Ok(-0.5 * acc)
}

/// Derivative of the marginal log-likelihood in alpha.
pub fn score(alpha: f64, obs: &Observation, cfg: &ModelConfig) -> Result<f64> {
    check_alpha(alpha)?;
    check_pair(obs, cfg)?;
    let n = cfg.n();
    let e = 1.0 + 2.0 * alpha;
    let ln_i = cfg.ln_i();
    let inv_k2 = cfg.inv_kappa_sq();
    let x = obs.x();
    let mut acc = 0.0;
    for i in 0..x.len() {
        let li = ln_i[i];
        if li == 0.0 {
            continue; // i = 1 contributes nothing
        }
        let t = (e * li).exp() * inv_k2[i];
        let denom = t + n;
        acc += n * li / denom - n * n * t * li * x[i] * x[i] / (denom * denom);
    }
    Ok(acc)
}

/// Maximize the marginal likelihood over [0, A]: 513-point grid scan plus
/// golden-section refinement; ties go to the smallest alpha.
pub fn estimate_alpha(obs: &Observation, cfg: &ModelConfig) -> Result<EBFit> {
    estimate_alpha_with_profile(obs, cfg, false)
}

pub fn estimate_alpha_with_profile(
    obs: &Observation,
    cfg: &ModelConfig,
    keep_profile: bool,
) -> Result<EBFit> {
    check_pair(obs, cfg)?;
    let mut profile = if keep_profile { Some(Vec::with_capacity(ALPHA_GRID)) } else { None };
    let mut grid_count = 0usize;
    let (alpha_hat, loglik_at_hat) = grid_then_refine_max(
        |a| {
            let v = log_marginal_likelihood(a, obs, cfg).expect("alpha in [0,A] is valid");
            if grid_count < ALPHA_GRID {
                if let Some(p) = profile.as_mut() {
                    p.push((a, v));
                }
                grid_count += 1;
            }
            v
        },
        0.0,
        cfg.a(),
        ALPHA_GRID,
        ALPHA_TOL,
    );
    Ok(EBFit { alpha_hat, loglik_at_hat, profile })
}

pub fn posterior(alpha: f64, obs: &Observation, cfg: &ModelConfig) -> Result<PosteriorSummary> {
    check_alpha(alpha)?;
    check_pair(obs, cfg)?;
    let n = cfg.n();
    let e = 1.0 + 2.0 * alpha;
    let ln_i = cfg.ln_i();
    let inv_k2 = cfg.inv_kappa_sq();
    let kappa = cfg.kappa_at();
    let x = obs.x();
    let mut mean = Vec::with_capacity(x.len());
    let mut var = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let t = (e * ln_i[i]).exp() * inv_k2[i];
        let denom = t + n;
        mean.push(n / kappa[i] / denom * x[i]);
        var.push(inv_k2[i] / denom);
    }
    Ok(PosteriorSummary { alpha, mean, var })
}

/// Posterior at the data-driven alpha.
pub fn empirical_bayes_posterior(
    obs: &Observation,
    cfg: &ModelConfig,
) -> Result<(EBFit, PosteriorSummary)> {
    let fit = estimate_alpha(obs, cfg)?;
    let post = posterior(fit.alpha_hat, obs, cfg)?;
    Ok((fit, post))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use crate::sequence_model::{synthesize, KappaSpec};
    use crate::truths::{make_selfsim_truth, Tail, TruthSequence};

    fn tiny_cfg(n: f64, trunc: usize) -> ModelConfig {
        ModelConfig::new(n, KappaSpec::power_law(0.0).unwrap(), 5.0, 0.05, trunc).unwrap()
    }

    fn zero_obs(cfg: &ModelConfig) -> Observation {
        Observation::from_parts(vec![0.0; cfg.trunc()], cfg.n(), cfg.kappa().clone())
    }

    #[test]
    fn single_coordinate_is_alpha_free() {
        let cfg = tiny_cfg(1.0, 1);
        let v = 0.7;
        let obs = Observation::from_parts(vec![v], 1.0, cfg.kappa().clone());
        let expect = -0.5 * (2f64.ln() - v * v / 2.0);
        for a in [0.0, 0.5, 1.0, 4.9] {
            let l = log_marginal_likelihood(a, &obs, &cfg).unwrap();
            assert!((l - expect).abs() < 1e-14, "alpha={a}");
        }
    }

    #[test]
    fn zero_data_likelihood_increases_to_zero() {
        let cfg = tiny_cfg(100.0, 200);
        let obs = zero_obs(&cfg);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=20 {
            let a = k as f64 * 0.25;
            let l = log_marginal_likelihood(a, &obs, &cfg).unwrap();
            assert!(l >= prev);
            assert!(l <= 0.0);
            prev = l;
        }
        // far out the prior concentrates at zero; every term vanishes except
        // the alpha-free i = 1 term, which stays at -log(1+n)/2
        let big = log_marginal_likelihood(40.0, &obs, &cfg).unwrap();
        let limit = -0.5 * (1.0 + cfg.n()).ln();
        assert!((big - limit).abs() < 1e-4, "{big} vs {limit}");
    }

    #[test]
    fn likelihood_matches_double_truncation_oracle() {
        // brute-force oracle: Kahan summation at twice the truncation; the
        // shared seed stream makes the first trunc coordinates identical
        let n = 1e6;
        let a_cap = 5.0;
        let cfg = ModelConfig::new(n, KappaSpec::Volterra, a_cap, 0.05, 1000).unwrap();
        let cfg2 = ModelConfig::new(n, KappaSpec::Volterra, a_cap, 0.05, 2000).unwrap();
        let th = make_selfsim_truth(2000).unwrap();
        let seed = Seed::new(42);
        let obs2 = synthesize(&th, &cfg2, seed).unwrap();
        let obs1 = Observation::from_parts(obs2.x()[..1000].to_vec(), n, KappaSpec::Volterra);
        for alpha in [0.5, 1.0, 1.5] {
            // oracle: direct Kahan sum over 2000 coordinates
            let e = 1.0 + 2.0 * alpha;
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for i in 1..=2000usize {
                let k = KappaSpec::Volterra.kappa(i).unwrap();
                let t = (i as f64).powf(e) / (k * k);
                let x = obs2.x()[i - 1];
                let term = (1.0 + n / t).ln() - n * n * x * x / (t + n);
                let y = term - comp;
                let s = sum + y;
                comp = (s - sum) - y;
                sum = s;
            }
            let oracle = -0.5 * sum;
            let got = log_marginal_likelihood(alpha, &obs1, &cfg).unwrap();
            assert!(
                ((got - oracle) / oracle).abs() < 1e-6,
                "alpha={alpha}: {got} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn score_single_coordinate_is_zero() {
        let cfg = tiny_cfg(1.0, 1);
        let obs = Observation::from_parts(vec![2.5], 1.0, cfg.kappa().clone());
        for a in [0.0, 1.0, 3.0] {
            assert_eq!(score(a, &obs, &cfg).unwrap(), 0.0);
        }
    }

    #[test]
    fn score_positive_for_zero_data() {
        let cfg = tiny_cfg(100.0, 100);
        let obs = zero_obs(&cfg);
        for a in [0.0, 0.5, 2.0, 4.5] {
            assert!(score(a, &obs, &cfg).unwrap() > 0.0);
        }
    }

    #[test]
    fn score_matches_finite_difference() {
        let cfg = ModelConfig::new(1e4, KappaSpec::Volterra, 5.0, 0.05, 1000).unwrap();
        let th = make_selfsim_truth(1000).unwrap();
        let obs = synthesize(&th, &cfg, Seed::new(8)).unwrap();
        let h = 1e-5;
        for k in 0..20 {
            let a = 0.05 + 0.24 * k as f64;
            let fd = (log_marginal_likelihood(a + h, &obs, &cfg).unwrap()
                - log_marginal_likelihood(a - h, &obs, &cfg).unwrap())
                / (2.0 * h);
            let s = score(a, &obs, &cfg).unwrap();
            assert!((fd - s).abs() < 1e-4, "alpha={a}: fd={fd} score={s}");
        }
    }

    #[test]
    fn zero_data_maximizer_is_cap() {
        let cfg = tiny_cfg(100.0, 200);
        let obs = zero_obs(&cfg);
        let fit = estimate_alpha(&obs, &cfg).unwrap();
        assert!((fit.alpha_hat - cfg.a()).abs() < 1e-5, "{}", fit.alpha_hat);
    }

    #[test]
    fn flat_likelihood_returns_zero() {
        let cfg = tiny_cfg(1.0, 1);
        let obs = Observation::from_parts(vec![0.3], 1.0, cfg.kappa().clone());
        let fit = estimate_alpha(&obs, &cfg).unwrap();
        assert_eq!(fit.alpha_hat, 0.0);
    }

    #[test]
    fn maximizer_beats_dense_grid() {
        let cfg = ModelConfig::new(1e4, KappaSpec::Volterra, 5.0, 0.05, 1000).unwrap();
        let th = make_selfsim_truth(1000).unwrap();
        let obs = synthesize(&th, &cfg, Seed::new(13)).unwrap();
        let fit = estimate_alpha(&obs, &cfg).unwrap();
        let mut grid_best = f64::NEG_INFINITY;
        for k in 0..2001 {
            let a = cfg.a() * k as f64 / 2000.0;
            grid_best = grid_best.max(log_marginal_likelihood(a, &obs, &cfg).unwrap());
        }
        assert!(fit.loglik_at_hat >= grid_best - 1e-8);
    }

    #[test]
    fn posterior_zero_data() {
        let cfg = tiny_cfg(50.0, 100);
        let obs = zero_obs(&cfg);
        let post = posterior(1.0, &obs, &cfg).unwrap();
        assert!(post.mean.iter().all(|&m| m == 0.0));
        for i in 1..=100usize {
            let expect = 1.0 / ((i as f64).powf(3.0) + 50.0);
            assert!((post.var[i - 1] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn posterior_direct_substitution() {
        let cfg = tiny_cfg(1.0, 1);
        let obs = Observation::from_parts(vec![1.0], 1.0, cfg.kappa().clone());
        let post = posterior(0.0, &obs, &cfg).unwrap();
        assert!((post.mean[0] - 0.5).abs() < 1e-15);
        assert!((post.var[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn posterior_large_n_asymptotics() {
        let cfg = ModelConfig::new(1e10, KappaSpec::Volterra, 5.0, 0.05, 25_000).unwrap();
        let mut x = vec![0.0; cfg.trunc()];
        x[4] = 0.3;
        let obs = Observation::from_parts(x, cfg.n(), cfg.kappa().clone());
        let post = posterior(1.0, &obs, &cfg).unwrap();
        let i = 5usize;
        let kappa = cfg.kappa_at()[i - 1];
        let ratio = post.mean[i - 1] / obs.x()[i - 1] * kappa;
        assert!((ratio - 1.0).abs() < 1e-3, "{ratio}");
        let scaled = cfg.n() * post.var[i - 1] * kappa * kappa;
        assert!((scaled - 1.0).abs() < 1e-3, "{scaled}");
    }

    #[test]
    fn shrinkage_and_variance_monotone() {
        let cfg = ModelConfig::new(1e4, KappaSpec::Volterra, 5.0, 0.05, 1000).unwrap();
        let th = make_selfsim_truth(1000).unwrap();
        let obs = synthesize(&th, &cfg, Seed::new(21)).unwrap();
        let lo = posterior(0.4, &obs, &cfg).unwrap();
        let hi = posterior(1.7, &obs, &cfg).unwrap();
        for i in 1..=1000usize {
            let naive = obs.x()[i - 1] / cfg.kappa_at()[i - 1];
            assert!(lo.mean[i - 1].abs() <= naive.abs() + 1e-15);
            if i >= 2 {
                assert!(hi.var[i - 1] < lo.var[i - 1], "i={i}");
            }
        }
        // i = 1 is alpha-free
        assert_eq!(lo.var[0], hi.var[0]);
    }

    #[test]
    fn composition_contract() {
        let cfg = ModelConfig::new(1e4, KappaSpec::Volterra, 5.0, 0.05, 1000).unwrap();
        let th = make_selfsim_truth(1000).unwrap();
        let obs = synthesize(&th, &cfg, Seed::new(5)).unwrap();
        let (fit, post) = empirical_bayes_posterior(&obs, &cfg).unwrap();
        let fit2 = estimate_alpha(&obs, &cfg).unwrap();
        let post2 = posterior(fit2.alpha_hat, &obs, &cfg).unwrap();
        assert_eq!(fit, fit2);
        assert_eq!(post, post2);
    }

    #[test]
    fn rate_of_posterior_mean_error() {
        // || mean - theta || <= 10 n^(-beta/(1+2beta+2p)) for beta = p = 1
        let n = 1e6;
        let cfg = ModelConfig::with_default_trunc(n, KappaSpec::Volterra, 5.0, 0.05).unwrap();
        let th = make_selfsim_truth(cfg.trunc()).unwrap();
        let obs = synthesize(&th, &cfg, Seed::new(2)).unwrap();
        let (_, post) = empirical_bayes_posterior(&obs, &cfg).unwrap();
        let err: f64 = (1..=cfg.trunc())
            .map(|i| (post.mean[i - 1] - th.coeff(i)).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 10.0 * n.powf(-0.2), "err={err}");
    }

    #[test]
    fn posterior_mean_norm_bounded_by_variance_budget() {
        // zero truth: ||mean||^2 should be on the scale of E||W(A)||^2
        let n = 1e4;
        let cfg = ModelConfig::with_default_trunc(n, KappaSpec::Volterra, 5.0, 0.05).unwrap();
        let zero = TruthSequence::new(vec![0.0; cfg.trunc()], Tail::Zero, "zero").unwrap();
        // E||W(alpha)||^2 at alpha = A
        let var_budget: f64 = (1..=cfg.trunc())
            .map(|i| {
                let k2 = cfg.kappa_at()[i - 1].powi(2);
                let t = (i as f64).powf(1.0 + 2.0 * cfg.a()) / k2;
                n / k2 / (t + n) / (t + n)
            })
            .sum();
        let mut hits = 0;
        for r in 0..50u64 {
            let obs = synthesize(&zero, &cfg, Seed::new(99).split(r)).unwrap();
            let (_, post) = empirical_bayes_posterior(&obs, &cfg).unwrap();
            let norm: f64 = post.mean.iter().map(|m| m * m).sum::<f64>().sqrt();
            if norm <= 3.0 * var_budget.sqrt() {
                hits += 1;
            }
        }
        assert!(hits >= 45, "{hits}/50");
    }
}
