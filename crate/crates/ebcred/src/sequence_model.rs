//! The observation model `X_i = kappa_i theta_i + n^(-1/2) Z_i` with a
//! mildly ill-posed forward sequence `kappa_i ~ i^(-p)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::truths::{Tail, TruthSequence};

/// Series truncation cap for desk-scale runs. The default truncation rule
/// is `max(1000, ceil(10 n^(1/(1+2p))))` clipped to this cap; explicit
/// truncations must reach at least `min(ceil(n^(1/(1+2p))), cap)` so the
/// effective dimension is always inside the stored range.
pub const TRUNC_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum KappaSpec {
    /// `kappa_i = i^(-p)` exactly; the certified envelope constant is 1.
    PowerLaw { p: f64, c: f64 },
    /// `kappa_i = 1/((i - 1/2) pi)`, the eigenvalues of the integration
    /// operator on [0,1]; certified envelope (p, C) = (1, pi).
    Volterra,
}

impl KappaSpec {
    pub fn power_law(p: f64) -> Result<Self> {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::Config(format!("power-law decay p must be >= 0, got {p}")));
        }
        Ok(KappaSpec::PowerLaw { p, c: 1.0 })
    }

    /// Certified envelope pair (p, C) with
    /// `C^-2 i^(-2p) <= kappa_i^2 <= C^2 i^(-2p)` for all i >= 1.
    pub fn certified(&self) -> (f64, f64) {
        match *self {
            KappaSpec::PowerLaw { p, c } => (p, c),
            KappaSpec::Volterra => (1.0, PI),
        }
    }

    /// kappa_i for 1-based i.
    pub fn kappa(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return Err(Error::Domain("kappa index is 1-based".into()));
        }
        Ok(match *self {
            KappaSpec::PowerLaw { p, .. } => (i as f64).powf(-p),
            KappaSpec::Volterra => 1.0 / ((i as f64 - 0.5) * PI),
        })
    }
}

#[derive(Debug)]
struct Tables {
    /// ln(i) for i = 1..=trunc (index 0 holds ln 1 = 0)
    ln_i: Vec<f64>,
    /// kappa_i
    kappa: Vec<f64>,
    /// kappa_i^-2
    inv_kappa_sq: Vec<f64>,
}

/// Model configuration plus precomputed per-coordinate tables, cheap to
/// clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    n: f64,
    kappa: KappaSpec,
    a: f64,
    gamma: f64,
    trunc: usize,
    tables: Arc<Tables>,
}

impl ModelConfig {
    pub fn new(n: f64, kappa: KappaSpec, a: f64, gamma: f64, trunc: usize) -> Result<Self> {
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::Config(format!("signal-to-noise n must be >= 1, got {n}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Config(format!("credibility level gamma must be in (0,1), got {gamma}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Config(format!("hyperparameter cap A must be positive, got {a}")));
        }
        let (p, _) = kappa.certified();
        let needed = effective_dim_bound(n, p).min(TRUNC_CAP);
        if trunc < needed {
            return Err(Error::Config(format!(
                "truncation {trunc} below required minimum {needed} (effective dimension bound)"
            )));
        }
        let mut ln_i = Vec::with_capacity(trunc);
        let mut kap = Vec::with_capacity(trunc);
        let mut inv_kappa_sq = Vec::with_capacity(trunc);
        for i in 1..=trunc {
            ln_i.push((i as f64).ln());
            let k = kappa.kappa(i)?;
            kap.push(k);
            inv_kappa_sq.push(1.0 / (k * k));
        }
        Ok(ModelConfig {
            n,
            kappa,
            a,
            gamma,
            trunc,
            tables: Arc::new(Tables { ln_i, kappa: kap, inv_kappa_sq }),
        })
    }

    /// Uses the default truncation `max(1000, ceil(10 n^(1/(1+2p))))`,
    /// clipped to [`TRUNC_CAP`].
    pub fn with_default_trunc(n: f64, kappa: KappaSpec, a: f64, gamma: f64) -> Result<Self> {
        let (p, _) = kappa.certified();
        let trunc = default_trunc(n, p);
        Self::new(n, kappa, a, gamma, trunc)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn kappa(&self) -> &KappaSpec {
        &self.kappa
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// ln(i), 1-based tables used by the likelihood inner loops.
    pub(crate) fn ln_i(&self) -> &[f64] {
        &self.tables.ln_i
    }

    pub(crate) fn kappa_at(&self) -> &[f64] {
        &self.tables.kappa
    }

    pub(crate) fn inv_kappa_sq(&self) -> &[f64] {
        &self.tables.inv_kappa_sq
    }
}

pub fn default_trunc(n: f64, p: f64) -> usize {
    let eff = n.powf(1.0 / (1.0 + 2.0 * p));
    (((10.0 * eff).ceil() as usize).max(1000)).min(TRUNC_CAP)
}

fn effective_dim_bound(n: f64, p: f64) -> usize {
    n.powf(1.0 / (1.0 + 2.0 * p)).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    x: Vec<f64>,
    n: f64,
    kappa: KappaSpec,
}

impl Observation {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn kappa(&self) -> &KappaSpec {
        &self.kappa
    }

    /// Assemble an observation from raw coordinates (testing and file I/O).
    pub fn from_parts(x: Vec<f64>, n: f64, kappa: KappaSpec) -> Self {
        Observation { x, n, kappa }
    }
}

/// Draw `x_i = kappa_i theta_i + n^(-1/2) z_i` for i = 1..=trunc from the
/// seed's own generator stream; pure in (theta, cfg, seed).
pub fn synthesize(theta: &TruthSequence, cfg: &ModelConfig, seed: Seed) -> Result<Observation> {
    if theta.len() < cfg.trunc() && *theta.tail() != Tail::Zero {
        return Err(Error::Precondition(format!(
            "truth truncated at {} with nonzero tail but model needs {} coordinates",
            theta.len(),
            cfg.trunc()
        )));
    }
    let mut rng = seed.rng();
    let sd = 1.0 / cfg.n().sqrt();
    let kappa = cfg.kappa_at();
    let mut x = Vec::with_capacity(cfg.trunc());
    for i in 1..=cfg.trunc() {
        let z: f64 = rng.sample(StandardNormal);
        x.push(kappa[i - 1] * theta.coeff(i) + sd * z);
    }
    Ok(Observation { x, n: cfg.n(), kappa: cfg.kappa().clone() })
}
