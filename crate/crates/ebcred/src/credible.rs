//! Credible balls around the empirical Bayes posterior mean.
//!
//! The centered posterior at scale alpha is Gaussian and data-free, so the
//! ball radius solves `P(sum_i s_i Z_i^2 <= r^2) = 1 - gamma` with
//! `s_i = kappa_i^-2 / (i^(1+2 alpha) kappa_i^-2 + n)`; it is computed by
//! Imhof inversion ([`crate::wchi2`]) and cross-checkable against the
//! Monte Carlo fallback. At alpha = 0 the radius is defined to be infinite.
//!
//! [`sample_band`] reproduces the simulation study's display device: sample
//! the posterior, keep the draws closest to the mean, plot their pointwise
//! envelope on a time grid. That is a different object from the exact ball
//! and both are exposed.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::eb_inference::{empirical_bayes_posterior, PosteriorSummary};
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::sequence_model::{KappaSpec, ModelConfig, Observation};
use crate::truths::TruthSequence;
use crate::wchi2::{mc_quantile, WeightedChiSquare};

#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBall {
    pub center: Vec<f64>,
    /// Radius at inflation 1; effective radius is `l * radius`.
    pub radius: f64,
    pub l: f64,
    pub gamma: f64,
    pub alpha_used: f64,
}

/// Posterior spread weights s_i for i = 1..=trunc.
pub fn spread_weights(alpha: f64, cfg: &ModelConfig) -> Vec<f64> {
    let n = cfg.n();
    let e = 1.0 + 2.0 * alpha;
    (1..=cfg.trunc())
        .map(|i| {
            let x = i as f64;
            let k = cfg.kappa().kappa(i).expect("i >= 1");
            1.0 / (x.powf(e) + n * k * k)
        })
        .collect()
}

/// Credible radius r with `P(U <= r^2) = 1 - gamma`; infinite at alpha = 0.
pub fn radius(alpha: f64, cfg: &ModelConfig) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Precondition(format!("alpha must be nonnegative, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(f64::INFINITY);
    }
    let w = spread_weights(alpha, cfg);
    let q = WeightedChiSquare::new(&w)?.quantile(1.0 - cfg.gamma())?;
    Ok(q.sqrt())
}

/// Monte Carlo fallback for the radius.
pub fn mc_radius(alpha: f64, cfg: &ModelConfig, draws: usize, seed: Seed) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(f64::INFINITY);
    }
    let w = spread_weights(alpha, cfg);
    Ok(mc_quantile(&w, 1.0 - cfg.gamma(), draws, seed).sqrt())
}

/// Ball centered at the empirical Bayes posterior mean with radius taken
/// at the estimated alpha.
pub fn credible_ball(obs: &Observation, cfg: &ModelConfig, l: f64) -> Result<CredibleBall> {
    if !(l > 0.0) {
        return Err(Error::Precondition(format!("inflation factor must be positive, got {l}")));
    }
    let (fit, post) = empirical_bayes_posterior(obs, cfg)?;
    let r = radius(fit.alpha_hat, cfg)?;
    Ok(CredibleBall {
        center: post.mean,
        radius: r,
        l,
        gamma: cfg.gamma(),
        alpha_used: fit.alpha_hat,
    })
}

/// Squared distance between the ball center and a truth, over the common
/// range plus the truth's analytic tail-norm bound (conservative).
pub fn distance_sq(center: &[f64], theta: &TruthSequence) -> f64 {
    let m = center.len().max(theta.len());
    let mut d = 0.0;
    for i in 1..=m {
        let c = if i <= center.len() { center[i - 1] } else { 0.0 };
        d += (c - theta.coeff(i)).powi(2);
    }
    d + theta.tail_norm_sq_upper(theta.len() + 1)
}

pub fn contains(ball: &CredibleBall, theta: &TruthSequence) -> bool {
    if ball.radius.is_infinite() {
        return true;
    }
    distance_sq(&ball.center, theta).sqrt() <= ball.l * ball.radius
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSummary {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub truth: Option<Vec<f64>>,
    pub kept: usize,
    pub alpha_hat: f64,
}

/// Basis functions of the integration operator on [0,1].
pub fn volterra_basis(i: usize, t: f64) -> f64 {
    (2.0f64).sqrt() * (PI * (i as f64 - 0.5) * t).cos()
}

/// Synthesize a coefficient sequence on a time grid in the Volterra basis.
pub fn synthesize_curve(coeffs: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * volterra_basis(k + 1, t))
                .sum()
        })
        .collect()
}

/// Sample-and-rank credible band: draw from the empirical Bayes posterior,
/// keep the fraction closest to the posterior mean in l2, and return the
/// pointwise envelope of the kept draws on the time grid.
pub fn sample_band(
    obs: &Observation,
    cfg: &ModelConfig,
    draws: usize,
    keep: f64,
    grid: &[f64],
    truth: Option<&TruthSequence>,
    seed: Seed,
) -> Result<BandSummary> {
    if *cfg.kappa() != KappaSpec::Volterra {
        return Err(Error::Unsupported(
            "sample bands are defined for the Volterra setup (cosine basis)".into(),
        ));
    }
    if draws == 0 || !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::Precondition("need draws >= 1 and keep in (0, 1]".into()));
    }
    if grid.is_empty() {
        return Err(Error::Precondition("empty time grid".into()));
    }
    let (fit, post) = empirical_bayes_posterior(obs, cfg)?;
    let sd: Vec<f64> = post.var.iter().map(|v| v.sqrt()).collect();

    // pass 1: distances only; pass 2 regenerates the kept draws from their
    // per-draw streams, so the full draw matrix never has to be held
    let mut dist: Vec<(f64, usize)> = (0..draws)
        .map(|d| {
            let mut rng = seed.split(d as u64).rng();
            let mut acc = 0.0;
            for s in &sd {
                let z: f64 = rng.sample(StandardNormal);
                acc += s * s * z * z;
            }
            (acc, d)
        })
        .collect();
    dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let kept = ((draws as f64 * keep).round() as usize).clamp(1, draws);

    let mean_curve = synthesize_curve(&post.mean, grid);
    let mut lower = mean_curve.clone();
    let mut upper = mean_curve.clone();
    let mut coeffs = vec![0.0; post.mean.len()];
    for &(_, d) in dist.iter().take(kept) {
        let mut rng = seed.split(d as u64).rng();
        for (k, c) in coeffs.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *c = post.mean[k] + sd[k] * z;
        }
        let curve = synthesize_curve(&coeffs, grid);
        for (k, v) in curve.into_iter().enumerate() {
            lower[k] = lower[k].min(v);
            upper[k] = upper[k].max(v);
        }
    }
    let truth_curve = truth.map(|th| synthesize_curve(th.coeffs(), grid));
    Ok(BandSummary {
        t: grid.to_vec(),
        mean: mean_curve,
        lower,
        upper,
        truth: truth_curve,
        kept,
        alpha_hat: fit.alpha_hat,
    })
}

/// CSV export with columns `t,mean,lower,upper,truth` (truth blank when
/// not supplied).
pub fn band_to_csv<W: Write>(band: &BandSummary, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,mean,lower,upper,truth")?;
    for k in 0..band.t.len() {
        let truth = band
            .truth
            .as_ref()
            .map(|tc| tc[k].to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            band.t[k], band.mean[k], band.lower[k], band.upper[k], truth
        )?;
    }
    Ok(())
}

/// Posterior mass of the centered ball of squared radius `r_sq`, by
/// sampling the spread weights (test and calibration helper).
pub fn mc_ball_mass(alpha: f64, cfg: &ModelConfig, r_sq: f64, draws: usize, seed: Seed) -> f64 {
    let w = spread_weights(alpha, cfg);
    let mut rng = seed.rng();
    let mut hits = 0usize;
    for _ in 0..draws {
        let mut s = 0.0;
        for &wi in &w {
            let z: f64 = rng.sample(StandardNormal);
            s += wi * z * z;
        }
        if s <= r_sq {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

pub fn posterior_summary_at(alpha: f64, obs: &Observation, cfg: &ModelConfig) -> Result<PosteriorSummary> {
    crate::eb_inference::posterior(alpha, obs, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence_model::synthesize;
    use crate::truths::{make_selfsim_truth, Tail};

    fn cfg(n: f64, trunc: usize) -> ModelConfig {
        ModelConfig::new(n, KappaSpec::Volterra, 5.0, 0.05, trunc).unwrap()
    }

    #[test]
    fn radius_infinite_at_zero() {
        let c = cfg(1e4, 1000);
        assert!(radius(0.0, &c).unwrap().is_infinite());
    }

    #[test]
    fn radius_monotone_in_alpha_and_n() {
        let c = cfg(1e4, 1000);
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let a = 0.3 * k as f64;
            let r = radius(a, &c).unwrap();
            assert!(r <= prev + 1e-9, "alpha={a}");
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for n in [1e2, 1e3, 1e4, 1e5] {
            let c = cfg(n, 1000);
            let r = radius(1.0, &c).unwrap();
            assert!(r <= prev + 1e-9, "n={n}");
            prev = r;
        }
    }

    #[test]
    fn radius_agrees_with_monte_carlo() {
        for (k, (a, n)) in [(0.5, 500.0), (1.0, 5e3), (2.0, 1e4)].iter().enumerate() {
            let c = cfg(*n, 1000);
            let r = radius(*a, &c).unwrap();
            let mc = mc_radius(*a, &c, 100_000, Seed::new(k as u64)).unwrap();
            assert!(((r - mc) / mc).abs() < 0.02, "a={a} n={n}: {r} vs {mc}");
        }
    }

    #[test]
    fn defining_mass_property() {
        let c = cfg(2e3, 1000);
        let r = radius(0.8, &c).unwrap();
        let mass = mc_ball_mass(0.8, &c, r * r, 100_000, Seed::new(7));
        assert!((mass - 0.95).abs() < 0.01, "{mass}");
    }

    #[test]
    fn ball_fields_and_l_scaling() {
        let c = cfg(1e4, 1000);
        let th = make_selfsim_truth(1000).unwrap();
        let obs = synthesize(&th, &c, Seed::new(3)).unwrap();
        let b1 = credible_ball(&obs, &c, 1.0).unwrap();
        let b2 = credible_ball(&obs, &c, 2.0).unwrap();
        assert_eq!(b1.radius, b2.radius);
        assert_eq!(b1.center, b2.center);
        assert_eq!(b2.l, 2.0);
        assert_eq!(b1.gamma, 0.05);
    }

    #[test]
    fn contains_edges() {
        let c = cfg(1e4, 100);
        let ball = CredibleBall {
            center: vec![0.0; 100],
            radius: 0.5,
            l: 1.0,
            gamma: 0.05,
            alpha_used: 1.0,
        };
        let center_truth = TruthSequence::new(vec![0.0; 100], Tail::Zero, "c").unwrap();
        assert!(contains(&ball, &center_truth));

        let mut outside = vec![0.0; 100];
        outside[1] = ball.l * ball.radius * 1.01;
        let out = TruthSequence::new(outside, Tail::Zero, "out").unwrap();
        assert!(!contains(&ball, &out));

        let infinite = CredibleBall { radius: f64::INFINITY, alpha_used: 0.0, ..ball };
        assert!(contains(&infinite, &out));
        let _ = c;
    }

    #[test]
    fn containment_monotone_in_l() {
        let c = cfg(1e3, 1000);
        let th = make_selfsim_truth(1000).unwrap();
        for r in 0..10u64 {
            let obs = synthesize(&th, &c, Seed::new(40).split(r)).unwrap();
            let mut prev = false;
            for l in [0.25, 0.5, 1.0, 2.0, 4.0] {
                let ball = credible_ball(&obs, &c, l).unwrap();
                let now = contains(&ball, &th);
                assert!(!prev || now, "containment flipped true->false as L grew");
                prev = now;
            }
        }
    }

    #[test]
    fn band_keeps_exact_fraction() {
        let c = cfg(1e4, 1000);
        let th = make_selfsim_truth(1000).unwrap();
        let obs = synthesize(&th, &c, Seed::new(5)).unwrap();
        let grid: Vec<f64> = (0..21).map(|k| k as f64 / 20.0).collect();
        let band = sample_band(&obs, &c, 2000, 0.95, &grid, Some(&th), Seed::new(6)).unwrap();
        assert_eq!(band.kept, 1900);
    }

    #[test]
    fn band_envelope_contains_mean_when_keeping_all() {
        let c = cfg(1e4, 1000);
        let th = make_selfsim_truth(1000).unwrap();
        let obs = synthesize(&th, &c, Seed::new(5)).unwrap();
        let grid: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        let band = sample_band(&obs, &c, 100, 1.0, &grid, None, Seed::new(6)).unwrap();
        for k in 0..grid.len() {
            assert!(band.lower[k] <= band.mean[k] && band.mean[k] <= band.upper[k]);
        }
    }

    #[test]
    fn band_requires_volterra() {
        let c = ModelConfig::new(100.0, KappaSpec::power_law(1.0).unwrap(), 5.0, 0.05, 1000).unwrap();
        let obs = Observation::from_parts(vec![0.0; 1000], 100.0, c.kappa().clone());
        let err = sample_band(&obs, &c, 10, 0.5, &[0.5], None, Seed::new(0)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn band_csv_header() {
        let band = BandSummary {
            t: vec![0.0],
            mean: vec![1.0],
            lower: vec![0.5],
            upper: vec![1.5],
            truth: Some(vec![0.9]),
            kept: 1,
            alpha_hat: 1.0,
        };
        let mut buf = Vec::new();
        band_to_csv(&band, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,mean,lower,upper,truth\n"));
        assert!(s.contains("0,1,0.5,1.5,0.9"));
    }
}
