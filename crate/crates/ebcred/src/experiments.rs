//! Batch experiment runner: coverage studies, figure-data reproduction,
//! diagnostics reports, prior polished-tail checks, and minimax tables.
//!
//! A run is described by an [`ExperimentSpec`] (TOML manifest, flags can
//! override the file) and produces one directory containing `spec.json`
//! (the resolved config), per-n CSV files, and `summary.json`. Everything
//! is deterministic given the master seed: replication r of the n_idx-th
//! sample size always uses the substream `seed.split(n_idx).split(r)`, so
//! the results do not depend on execution order.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::credible::{contains, credible_ball, sample_band};
use crate::diagnostics::{diagnostics_report, minimax_linear_risk, DiagnosticsReport};
use crate::eb_inference::estimate_alpha;
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::sequence_model::{default_trunc, synthesize, KappaSpec, ModelConfig, TRUNC_CAP};
use crate::truths::{
    is_in_class, make_bad_truth, make_selfsim_truth, prior_draw, ClassParams, Tail,
    TruthSequence, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Coverage,
    Figures,
    Diagnose,
    PriorCheck,
    Minimax,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coverage" => Ok(Mode::Coverage),
            "figures" => Ok(Mode::Figures),
            "diagnose" => Ok(Mode::Diagnose),
            "prior-check" => Ok(Mode::PriorCheck),
            "minimax" => Ok(Mode::Minimax),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected coverage, figures, diagnose, prior-check or minimax)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    /// One of: selfsim | bad | bad-zero-first | zero | prior | file.
    pub name: String,
    /// Prior smoothness, for `name = "prior"`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    /// CSV path, for `name = "file"`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<String>,
    /// Coefficient count; defaults to the model truncation.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// "volterra" or "powerlaw".
    pub kappa: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// 0 or absent: rate-adaptive default, capped at 10^5.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trunc: Option<usize>,
}

fn default_a() -> f64 {
    5.0
}
fn default_gamma() -> f64 {
    0.05
}
fn default_reps() -> usize {
    200
}
fn default_l() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_m() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub truth: TruthSpec,
    pub model: ModelSpec,
    pub n_list: Vec<f64>,
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<String>,
    /// Hyperrectangle regularity, minimax mode only.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Hyperrectangle size, minimax mode only.
    #[serde(default = "default_m")]
    pub m: f64,
}

/// CLI flag overrides; `None` keeps the manifest value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<String>,
    pub n_list: Option<Vec<f64>>,
    pub truth: Option<String>,
    pub l: Option<f64>,
}

impl ExperimentSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(s).map_err(|e| Error::Config(format!("manifest parse error: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn apply_overrides(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(r) = ov.reps {
            self.reps = r;
        }
        if let Some(o) = &ov.out {
            self.out = Some(o.clone());
        }
        if let Some(ns) = &ov.n_list {
            self.n_list = ns.clone();
        }
        if let Some(l) = ov.l {
            self.l = l;
        }
        if let Some(t) = &ov.truth {
            if let Some(path) = t.strip_prefix("file:") {
                self.truth.name = "file".into();
                self.truth.path = Some(path.to_string());
            } else {
                self.truth.name = t.clone();
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must be nonempty".into()));
        }
        if self.n_list.iter().any(|&n| !(n >= 1.0) || !n.is_finite()) {
            return Err(Error::Config("every n must be a finite real >= 1".into()));
        }
        if !(self.l > 0.0) {
            return Err(Error::Config("L must be positive".into()));
        }
        match self.model.kappa.as_str() {
            "volterra" => {}
            "powerlaw" => {
                let p = self.model.p.ok_or_else(|| {
                    Error::Config("powerlaw kappa requires model.p".into())
                })?;
                if !(p >= 0.0) {
                    return Err(Error::Config("model.p must be >= 0".into()));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown kappa '{other}' (expected volterra or powerlaw)"
                )))
            }
        }
        match self.truth.name.as_str() {
            "selfsim" | "bad" | "bad-zero-first" | "zero" => Ok(()),
            "prior" => match self.truth.alpha {
                Some(a) if a > 0.0 => Ok(()),
                _ => Err(Error::Config("truth 'prior' requires positive truth.alpha".into())),
            },
            "file" => match &self.truth.path {
                Some(_) => Ok(()),
                None => Err(Error::Config("truth 'file' requires truth.path".into())),
            },
            other => Err(Error::Config(format!(
                "unknown truth '{other}' (expected selfsim, bad, bad-zero-first, zero, prior or file)"
            ))),
        }
    }

    fn kappa_spec(&self) -> Result<KappaSpec> {
        match self.model.kappa.as_str() {
            "volterra" => Ok(KappaSpec::Volterra),
            "powerlaw" => KappaSpec::power_law(self.model.p.unwrap_or(1.0)),
            other => Err(Error::Config(format!("unknown kappa '{other}'"))),
        }
    }

    pub fn model_config(&self, n: f64) -> Result<ModelConfig> {
        let kappa = self.kappa_spec()?;
        let (p, _) = kappa.certified();
        let trunc = match self.model.trunc {
            Some(t) if t > 0 => t.min(TRUNC_CAP),
            _ => default_trunc(n, p),
        };
        ModelConfig::new(n, kappa, self.model.a, self.model.gamma, trunc)
    }

    /// Build the truth at length >= the model truncation (or truth.len).
    pub fn resolve_truth(&self, trunc: usize, seed: Seed) -> Result<TruthSequence> {
        let t = self.truth.len.unwrap_or(trunc).max(trunc);
        match self.truth.name.as_str() {
            "selfsim" => make_selfsim_truth(t),
            "bad" => make_bad_truth(t.max(50), true),
            "bad-zero-first" => make_bad_truth(t.max(50), false),
            "zero" => TruthSequence::new(vec![0.0; t], Tail::Zero, "zero"),
            "prior" => prior_draw(self.truth.alpha.unwrap(), t, seed),
            "file" => {
                let path = PathBuf::from(self.truth.path.as_ref().unwrap());
                let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
                TruthSequence::from_csv(std::io::BufReader::new(file))
            }
            other => Err(Error::Config(format!("unknown truth '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub n: f64,
    pub coverage: f64,
    /// Mean over the finite-radius replications (an alpha_hat of exactly 0
    /// gives an infinite ball, which always covers but has no finite mean).
    pub mean_radius: f64,
    pub mean_alpha_hat: f64,
    pub reps: usize,
    pub infinite_radius_reps: usize,
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub rep: usize,
    pub alpha_hat: f64,
    pub radius: f64,
    pub covered: bool,
}

/// All replications for one sample size; pure computation, no I/O.
pub fn coverage_for_n(
    spec: &ExperimentSpec,
    n: f64,
    n_idx: usize,
) -> Result<(CoverageResult, Vec<Replication>)> {
    let cfg = spec.model_config(n)?;
    let base = Seed::new(spec.seed).split(n_idx as u64);
    let truth = spec.resolve_truth(cfg.trunc(), base.split(u64::MAX))?;
    let mut rows = Vec::with_capacity(spec.reps);
    let mut hits = 0usize;
    let mut sum_r = 0.0f64;
    let mut finite_r = 0usize;
    let mut sum_a = 0.0f64;
    for rep in 0..spec.reps {
        let run = || -> Result<Replication> {
            let obs = synthesize(&truth, &cfg, base.split(rep as u64))?;
            let ball = credible_ball(&obs, &cfg, spec.l)?;
            Ok(Replication {
                rep,
                alpha_hat: ball.alpha_used,
                radius: ball.radius,
                covered: contains(&ball, &truth),
            })
        };
        let row = run().map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!("replication {rep} (n={n}): {msg}")),
            other => other,
        })?;
        hits += row.covered as usize;
        if row.radius.is_finite() {
            sum_r += row.radius;
            finite_r += 1;
        }
        sum_a += row.alpha_hat;
        rows.push(row);
    }
    let reps = spec.reps;
    let coverage = hits as f64 / reps as f64;
    Ok((
        CoverageResult {
            n,
            coverage,
            mean_radius: if finite_r > 0 { sum_r / finite_r as f64 } else { 0.0 },
            mean_alpha_hat: sum_a / reps as f64,
            reps,
            infinite_radius_reps: reps - finite_r,
            ci_halfwidth: 1.96 * (coverage * (1.0 - coverage) / reps as f64).sqrt(),
        },
        rows,
    ))
}

pub fn run_coverage(spec: &ExperimentSpec) -> Result<Vec<CoverageResult>> {
    spec.n_list
        .iter()
        .enumerate()
        .map(|(idx, &n)| coverage_for_n(spec, n, idx).map(|(r, _)| r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseSummary {
    pub report: DiagnosticsReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub capture_frequency: Option<f64>,
}

pub fn run_diagnose(spec: &ExperimentSpec, n: f64, n_idx: usize) -> Result<DiagnoseSummary> {
    let cfg = spec.model_config(n)?;
    let base = Seed::new(spec.seed).split(n_idx as u64);
    let truth = spec.resolve_truth(cfg.trunc(), base.split(u64::MAX))?;
    let mut report = diagnostics_report(&truth, &cfg, 101)?;
    report.minimax_linear = Some(minimax_linear_risk(spec.beta, spec.m, &cfg)?);
    let capture_frequency = if spec.reps > 1 {
        let mut captured = 0usize;
        for rep in 0..spec.reps {
            let obs = synthesize(&truth, &cfg, base.split(rep as u64))?;
            let fit = estimate_alpha(&obs, &cfg)?;
            if report.alpha_lower <= fit.alpha_hat && fit.alpha_hat <= report.alpha_upper {
                captured += 1;
            }
        }
        Some(captured as f64 / spec.reps as f64)
    } else {
        None
    };
    Ok(DiagnoseSummary { report, capture_frequency })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCheckSummary {
    pub alpha: f64,
    pub reps: usize,
    pub t: usize,
    pub l0: f64,
    pub rho: f64,
    pub n0_grid: Vec<usize>,
    /// Fraction of draws that are polished-tail for at least one N0.
    pub pass_fraction: f64,
}

pub fn run_prior_check(spec: &ExperimentSpec) -> Result<PriorCheckSummary> {
    let alpha = spec
        .truth
        .alpha
        .ok_or_else(|| Error::Config("prior-check requires truth.alpha".into()))?;
    let t = spec.truth.len.unwrap_or(1 << 14);
    let l0 = 2.0 / alpha + 1.0;
    let rho = 2.0;
    let n0_grid: Vec<usize> = (1..=32).map(|k| 2 * k).collect();
    let base = Seed::new(spec.seed);
    let mut passes = 0usize;
    for rep in 0..spec.reps {
        let draw = prior_draw(alpha, t, base.split(rep as u64))?;
        let ok = n0_grid.iter().any(|&n0| {
            matches!(
                is_in_class(&draw, &ClassParams::PolishedTail { l0, n0, rho }),
                Ok(check) if check.verdict == Verdict::Holds
            )
        });
        passes += ok as usize;
    }
    Ok(PriorCheckSummary {
        alpha,
        reps: spec.reps,
        t,
        l0,
        rho,
        n0_grid,
        pass_fraction: passes as f64 / spec.reps as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxRow {
    pub n: f64,
    pub risk: f64,
}

pub fn run_minimax(spec: &ExperimentSpec) -> Result<Vec<MinimaxRow>> {
    spec.n_list
        .iter()
        .map(|&n| {
            let cfg = spec.model_config(n)?;
            Ok(MinimaxRow { n, risk: minimax_linear_risk(spec.beta, spec.m, &cfg)? })
        })
        .collect()
}

/// Figure data for one n: time grid, truth curve, posterior mean, band.
pub fn figure_for_n(spec: &ExperimentSpec, n: f64, n_idx: usize) -> Result<String> {
    let cfg = spec.model_config(n)?;
    let base = Seed::new(spec.seed).split(n_idx as u64);
    let truth = spec.resolve_truth(cfg.trunc(), base.split(u64::MAX))?;
    let obs = synthesize(&truth, &cfg, base.split(0))?;
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let band = sample_band(&obs, &cfg, 2000, 0.95, &grid, Some(&truth), base.split(1))?;
    let tc = band.truth.as_ref().expect("truth curve requested");
    let mut out = String::from("t,truth,mean,lower,upper\n");
    for k in 0..grid.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            band.t[k], tc[k], band.mean[k], band.lower[k], band.upper[k]
        ));
    }
    Ok(out)
}

fn n_label(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 9e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary_path: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Execute the spec's mode and write the run directory:
/// `spec.json`, per-n CSVs, `summary.json`.
pub fn run(spec: &ExperimentSpec) -> Result<RunArtifacts> {
    let dir = PathBuf::from(spec.out.as_deref().unwrap_or("run"));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let spec_json = serde_json::to_vec_pretty(spec).expect("spec serializes");
    write_file(&dir.join("spec.json"), &spec_json)?;
    let mut files = vec![dir.join("spec.json")];

    let summary: serde_json::Value = match spec.mode {
        Mode::Coverage => {
            let mut results = Vec::new();
            for (idx, &n) in spec.n_list.iter().enumerate() {
                let (res, rows) = coverage_for_n(spec, n, idx)?;
                let mut csv = String::from("rep,alpha_hat,radius,covered\n");
                for r in &rows {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        r.rep,
                        r.alpha_hat,
                        r.radius,
                        r.covered as u8
                    ));
                }
                let path = dir.join(format!("coverage_n{}.csv", n_label(n)));
                write_file(&path, csv.as_bytes())?;
                files.push(path);
                results.push(res);
            }
            serde_json::to_value(&results).expect("results serialize")
        }
        Mode::Figures => {
            let mut written = Vec::new();
            for (idx, &n) in spec.n_list.iter().enumerate() {
                let csv = figure_for_n(spec, n, idx)?;
                let path = dir.join(format!("figure_n{}.csv", n_label(n)));
                write_file(&path, csv.as_bytes())?;
                written.push(path.display().to_string());
                files.push(path);
            }
            serde_json::json!({ "figures": written })
        }
        Mode::Diagnose => {
            let mut summaries = Vec::new();
            for (idx, &n) in spec.n_list.iter().enumerate() {
                let s = run_diagnose(spec, n, idx)?;
                let path = dir.join(format!("diagnose_n{}.json", n_label(n)));
                write_file(&path, &serde_json::to_vec_pretty(&s).expect("report serializes"))?;
                files.push(path);
                summaries.push(s);
            }
            serde_json::to_value(&summaries).expect("summaries serialize")
        }
        Mode::PriorCheck => {
            let s = run_prior_check(spec)?;
            serde_json::to_value(&s).expect("summary serializes")
        }
        Mode::Minimax => {
            let rows = run_minimax(spec)?;
            let mut csv = String::from("n,risk\n");
            for r in &rows {
                csv.push_str(&format!("{},{}\n", r.n, r.risk));
            }
            let path = dir.join("minimax.csv");
            write_file(&path, csv.as_bytes())?;
            files.push(path);
            serde_json::to_value(&rows).expect("rows serialize")
        }
    };
    let summary_path = dir.join("summary.json");
    write_file(&summary_path, &serde_json::to_vec_pretty(&summary).expect("summary serializes"))?;
    files.push(summary_path.clone());
    Ok(RunArtifacts { dir, summary_path, files })
}
