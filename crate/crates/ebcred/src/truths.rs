//! Truth sequences and parameter-class checkers.
//!
//! A [`TruthSequence`] stores finitely many coefficients plus a tail
//! descriptor. A `PowerLaw` tail is an *envelope*: it asserts
//! `|theta_i| <= amplitude * i^(-exponent)` beyond the truncation, which is
//! enough for the conservative bounds used by the class checkers and the
//! credible-ball membership test. Checks that would need exact tail values
//! report [`Verdict::Undecidable`] rather than guessing.
//!
//! All constructors force the first coefficient to zero (the prior puts an
//! alpha-independent N(0,1) on coordinate 1, so the likelihood carries no
//! information about it); the one deliberate exception is the spiked
//! variant of [`make_bad_truth`].

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq)]
pub enum Tail {
    Zero,
    /// Envelope `|theta_i| <= amplitude * i^(-exponent)` for i beyond the
    /// stored coefficients. `exponent > 1/2` keeps the tail square-summable.
    PowerLaw { amplitude: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSequence {
    coeffs: Vec<f64>,
    tail: Tail,
    label: String,
}

impl TruthSequence {
    pub fn new(coeffs: Vec<f64>, tail: Tail, label: impl Into<String>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("truth needs at least one coefficient".into()));
        }
        if coeffs[0] != 0.0 {
            return Err(Error::Precondition(
                "first coefficient must be zero (prior carries no information about it)".into(),
            ));
        }
        Self::new_unchecked(coeffs, tail, label)
    }

    /// Skips the first-coordinate convention; used by the spiked bad
    /// truth whose first coefficient is 8.
    pub(crate) fn new_unchecked(
        coeffs: Vec<f64>,
        tail: Tail,
        label: impl Into<String>,
    ) -> Result<Self> {
        if let Tail::PowerLaw { amplitude, exponent } = tail {
            if !(exponent > 0.5) || !(amplitude >= 0.0) || !amplitude.is_finite() {
                return Err(Error::Precondition(
                    "power-law tail needs exponent > 1/2 and finite amplitude >= 0".into(),
                ));
            }
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Precondition("non-finite coefficient".into()));
        }
        Ok(TruthSequence {
            coeffs,
            tail,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient theta_i, 1-based. Beyond the truncation this is exact
    /// only for a zero tail; callers needing tail mass use the envelope.
    pub fn coeff(&self, i: usize) -> f64 {
        if i >= 1 && i <= self.coeffs.len() {
            self.coeffs[i - 1]
        } else {
            0.0
        }
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Upper bound on `sum_{i >= from, i > len} theta_i^2`.
    pub fn tail_norm_sq_upper(&self, from: usize) -> f64 {
        match self.tail {
            Tail::Zero => 0.0,
            Tail::PowerLaw { amplitude, exponent } => {
                let start = from.max(self.coeffs.len() + 1) as f64;
                // first term + integral bound for the rest
                let s = 2.0 * exponent;
                amplitude * amplitude * (start.powf(-s) + start.powf(1.0 - s) / (s - 1.0))
            }
        }
    }

    /// Exact `sum_{i=lo..=hi} theta_i^2` over stored coefficients
    /// (indices past the truncation contribute zero).
    fn stored_block_sq(&self, lo: usize, hi: usize) -> f64 {
        let lo = lo.max(1);
        let hi = hi.min(self.coeffs.len());
        if lo > hi {
            return 0.0;
        }
        self.coeffs[lo - 1..hi].iter().map(|c| c * c).sum()
    }

    pub fn to_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match self.tail {
            Tail::Zero => writeln!(w, "# tail=zero")?,
            Tail::PowerLaw { amplitude, exponent } => {
                writeln!(w, "# tail=powerlaw amplitude={amplitude} exponent={exponent}")?
            }
        }
        writeln!(w, "# label={}", self.label)?;
        writeln!(w, "i,theta")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            writeln!(w, "{},{}", k + 1, c)?;
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut tail = Tail::Zero;
        let mut label = String::new();
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::Numerical(format!("csv read: {e}")))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(spec) = rest.strip_prefix("tail=") {
                    tail = parse_tail(spec)?;
                } else if let Some(l) = rest.strip_prefix("label=") {
                    label = l.to_string();
                }
                continue;
            }
            if line.starts_with("i,") {
                continue;
            }
            let (i_str, v_str) = line
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("bad truth csv row: {line}")))?;
            let i: usize = i_str
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad index in truth csv: {i_str}")))?;
            let v: f64 = v_str
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value in truth csv: {v_str}")))?;
            coeffs.push((i, v));
        }
        coeffs.sort_by_key(|&(i, _)| i);
        let t = coeffs.last().map(|&(i, _)| i).unwrap_or(0);
        let mut v = vec![0.0; t];
        for (i, c) in coeffs {
            if i == 0 {
                return Err(Error::Config("truth csv indices are 1-based".into()));
            }
            v[i - 1] = c;
        }
        TruthSequence::new_unchecked(v, tail, label)
    }
}

fn parse_tail(spec: &str) -> Result<Tail> {
    if spec == "zero" {
        return Ok(Tail::Zero);
    }
    let mut amplitude = None;
    let mut exponent = None;
    for tok in spec.split_whitespace() {
        if tok == "powerlaw" {
            continue;
        }
        if let Some(v) = tok.strip_prefix("amplitude=") {
            amplitude = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("exponent=") {
            exponent = v.parse::<f64>().ok();
        }
    }
    match (spec.starts_with("powerlaw"), amplitude, exponent) {
        (true, Some(amplitude), Some(exponent)) => Ok(Tail::PowerLaw { amplitude, exponent }),
        _ => Err(Error::Config(format!("unparseable tail descriptor: {spec}"))),
    }
}

/// The simulation example's self-similar truth: theta_i = i^(-3/2) sin(i),
/// regularity beta = 1, first coefficient zero.
pub fn make_selfsim_truth(t: usize) -> Result<TruthSequence> {
    if t < 2 {
        return Err(Error::Precondition("need at least two coefficients".into()));
    }
    let mut coeffs = vec![0.0; t];
    for i in 2..=t {
        let x = i as f64;
        coeffs[i - 1] = x.powf(-1.5) * x.sin();
    }
    TruthSequence::new(
        coeffs,
        Tail::PowerLaw { amplitude: 1.0, exponent: 1.5 },
        "self-similar sine (beta=1)",
    )
}

/// True iff i lies in one of the sparse blocks `2^(4^j) < i <= 2*2^(4^j)`,
/// j >= 3. The first block starts at 2^64, far beyond any in-memory
/// truncation, so at practical lengths this is always false; it is kept so
/// the formula is implemented as stated.
fn in_bad_truth_block(i: usize) -> bool {
    if i < 2 {
        return false;
    }
    let lg = (i as f64).log2();
    let mut block = 64.0; // 4^3
    while block <= lg {
        if lg > block && lg <= block + 1.0 {
            return true;
        }
        block *= 4.0;
    }
    false
}

/// The "inconvenient truth" of the simulation study: spikes at coordinates
/// 1, 3 and 50 plus sparse far blocks of i^(-3/2). `spiked_first_coord`
/// selects the value 8 at coordinate 1; `false` zeroes it to
/// match the first-coordinate convention.
pub fn make_bad_truth(t: usize, spiked_first_coord: bool) -> Result<TruthSequence> {
    if t < 50 {
        return Err(Error::Precondition(
            "bad truth needs at least 50 coefficients (spike at i=50)".into(),
        ));
    }
    let mut coeffs = vec![0.0; t];
    coeffs[0] = if spiked_first_coord { 8.0 } else { 0.0 };
    coeffs[2] = 2.0;
    coeffs[49] = -2.0;
    for i in 2..=t {
        if in_bad_truth_block(i) {
            coeffs[i - 1] = (i as f64).powf(-1.5);
        }
    }
    TruthSequence::new_unchecked(coeffs, Tail::Zero, "bad truth (spikes + far blocks)")
}

/// Hyperrectangle truth with gaps of zeros around the effective dimensions
/// `N_j = n_j^(1/(1+2 beta+2p))`, which fool the likelihood-based choice of
/// the smoothing parameter along the subsequence (n_j). Positive square
/// roots; first coefficient zero.
pub fn make_counterexample_truth(
    beta: f64,
    m: f64,
    rho_seq: &[f64],
    n_seq: &[u64],
    p: f64,
    t: usize,
) -> Result<TruthSequence> {
    if !(beta > 0.0) || !(m > 0.0) || !(p >= 0.0) {
        return Err(Error::Precondition("need beta > 0, M > 0, p >= 0".into()));
    }
    if rho_seq.len() != n_seq.len() || rho_seq.is_empty() {
        return Err(Error::Precondition("rho_seq and n_seq must be nonempty, same length".into()));
    }
    for (j, w) in rho_seq.windows(2).enumerate() {
        if !(w[0] >= 1.0) || w[1] < w[0] {
            return Err(Error::Precondition(format!(
                "rho_seq must be increasing and >= 1; fails at j={}",
                j + 1
            )));
        }
    }
    let exp = 1.0 + 2.0 * beta + 2.0 * p;
    for j in 0..n_seq.len() - 1 {
        let need = (2.0 * rho_seq[j + 1] * rho_seq[j + 1]).powf(exp) * n_seq[j] as f64;
        if (n_seq[j + 1] as f64) < need {
            return Err(Error::Precondition(format!(
                "growth condition n_(j+1) >= (2 rho_(j+1)^2)^(1+2b+2p) n_j fails at j={}",
                j + 1
            )));
        }
    }
    let bands: Vec<(f64, f64, f64)> = n_seq
        .iter()
        .zip(rho_seq)
        .map(|(&n, &rho)| {
            let nj = (n as f64).powf(1.0 / exp);
            (nj, rho, 2.0 * nj)
        })
        .collect();
    let in_gap = |i: f64| {
        bands.iter().any(|&(nj, rho, two_nj)| {
            (i >= nj / rho && i < nj) || (i > two_nj && i <= rho * nj)
        })
    };
    let mut coeffs = vec![0.0; t];
    for i in 2..=t {
        let x = i as f64;
        if !in_gap(x) {
            coeffs[i - 1] = m.sqrt() * x.powf(-0.5 - beta);
        }
    }
    TruthSequence::new(coeffs, Tail::Zero, "counterexample (gapped hyperrectangle)")
}

/// Draw from the prior with coordinate variances i^(-1-2 alpha); the first
/// coordinate is forced to zero.
pub fn prior_draw(alpha: f64, t: usize, seed: Seed) -> Result<TruthSequence> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition("prior draw needs alpha > 0".into()));
    }
    let mut rng = seed.rng();
    let mut coeffs = vec![0.0; t];
    let half = -(1.0 + 2.0 * alpha) / 2.0;
    for i in 2..=t {
        let z: f64 = rng.sample(StandardNormal);
        coeffs[i - 1] = z * (i as f64).powf(half);
    }
    TruthSequence::new(coeffs, Tail::Zero, format!("prior draw (alpha={alpha})"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassParams {
    Hyperrectangle { beta: f64, m: f64 },
    Sobolev { beta: f64, m: f64 },
    PolishedTail { l0: f64, n0: usize, rho: f64 },
    SelfSimilar { beta: f64, m: f64, eps: f64, n0: usize, rho: f64 },
    CZeroZero { n0: usize, m: f64 },
    SuperSmooth { c: f64, d: f64, m: f64 },
}

impl ClassParams {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClassParams::Hyperrectangle { beta, m } | ClassParams::Sobolev { beta, m } => {
                beta > 0.0 && m > 0.0
            }
            ClassParams::PolishedTail { l0, n0, rho } => l0 > 0.0 && n0 >= 1 && rho >= 2.0,
            ClassParams::SelfSimilar { beta, m, eps, n0, rho } => {
                beta > 0.0 && m > 0.0 && eps > 0.0 && n0 >= 1 && rho >= 2.0
            }
            ClassParams::CZeroZero { n0, m } => n0 >= 1 && m > 0.0,
            ClassParams::SuperSmooth { c, d, m } => c > 0.0 && d > 0.0 && m > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("invalid class parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The defining inequality could not be decided from the stored
    /// coefficients and the tail envelope.
    Undecidable,
}

/// Outcome of a class-membership check, with the witnessing index and the
/// worst margin (positive slack for `Holds`, the violation for `Fails`).
/// `checked_up_to` records the largest N (or i) actually examined; the
/// verdict is only asserted on that range plus whatever the tail envelope
/// decides analytically.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCheck {
    pub verdict: Verdict,
    pub witness: Option<usize>,
    pub margin: f64,
    pub checked_up_to: usize,
}

pub fn is_in_class(theta: &TruthSequence, params: &ClassParams) -> Result<ClassCheck> {
    params.validate()?;
    Ok(match *params {
        ClassParams::Hyperrectangle { beta, m } => check_hyperrectangle(theta, beta, m),
        ClassParams::Sobolev { beta, m } => check_sobolev(theta, beta, m),
        ClassParams::PolishedTail { l0, n0, rho } => check_polished_tail(theta, l0, n0, rho),
        ClassParams::SelfSimilar { beta, m, eps, n0, rho } => {
            check_self_similar(theta, beta, m, eps, n0, rho)
        }
        ClassParams::CZeroZero { n0, m } => check_czerozero(theta, n0, m),
        ClassParams::SuperSmooth { c, d, m } => check_supersmooth(theta, c, d, m),
    })
}

fn check_hyperrectangle(theta: &TruthSequence, beta: f64, m: f64) -> ClassCheck {
    let t = theta.len();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = 0usize;
    for i in 1..=t {
        let v = (i as f64).powf(1.0 + 2.0 * beta) * theta.coeff(i).powi(2);
        if v > worst {
            worst = v;
            witness = i;
        }
    }
    // boundary slack: truths constructed to sit exactly on the constraint
    // must not flip to Fails over a rounding ulp
    if worst > m * (1.0 + 1e-9) {
        return ClassCheck { verdict: Verdict::Fails, witness: Some(witness), margin: worst - m, checked_up_to: t };
    }
    // tail envelope: sup over i > t of i^(1+2b) amp^2 i^(-2e)
    match *theta.tail() {
        Tail::Zero => ClassCheck { verdict: Verdict::Holds, witness: Some(witness), margin: m - worst, checked_up_to: t },
        Tail::PowerLaw { amplitude, exponent } => {
            let g = 1.0 + 2.0 * beta - 2.0 * exponent;
            let tail_sup = if g <= 0.0 {
                amplitude * amplitude * ((t + 1) as f64).powf(g)
            } else {
                f64::INFINITY
            };
            if tail_sup <= m {
                let worst = worst.max(tail_sup);
                ClassCheck { verdict: Verdict::Holds, witness: Some(witness), margin: m - worst, checked_up_to: t }
            } else {
                ClassCheck { verdict: Verdict::Undecidable, witness: None, margin: 0.0, checked_up_to: t }
            }
        }
    }
}

fn check_sobolev(theta: &TruthSequence, beta: f64, m: f64) -> ClassCheck {
    let t = theta.len();
    let exact: f64 = (1..=t)
        .map(|i| (i as f64).powf(2.0 * beta) * theta.coeff(i).powi(2))
        .sum();
    if exact > m * (1.0 + 1e-9) {
        return ClassCheck { verdict: Verdict::Fails, witness: Some(t), margin: exact - m, checked_up_to: t };
    }
    let tail_upper = match *theta.tail() {
        Tail::Zero => 0.0,
        Tail::PowerLaw { amplitude, exponent } => {
            let s = 2.0 * exponent - 2.0 * beta;
            if s > 1.0 {
                let start = (t + 1) as f64;
                amplitude * amplitude * (start.powf(-s) + start.powf(1.0 - s) / (s - 1.0))
            } else {
                f64::INFINITY
            }
        }
    };
    if exact + tail_upper <= m {
        ClassCheck { verdict: Verdict::Holds, witness: Some(t), margin: m - exact - tail_upper, checked_up_to: t }
    } else {
        ClassCheck { verdict: Verdict::Undecidable, witness: None, margin: 0.0, checked_up_to: t }
    }
}

fn check_polished_tail(theta: &TruthSequence, l0: f64, n0: usize, rho: f64) -> ClassCheck {
    let t = theta.len();
    // suffix[k] = sum_{i >= k} theta_i^2 over stored coefficients (1-based)
    let mut suffix = vec![0.0; t + 2];
    for i in (1..=t).rev() {
        suffix[i] = suffix[i + 1] + theta.coeff(i).powi(2);
    }
    let n_max = ((t as f64) / rho).floor() as usize;
    let mut worst_margin = f64::INFINITY;
    let mut witness = None;
    let mut undecided = None;
    for n in n0..=n_max.max(n0.saturating_sub(1)) {
        if n > n_max {
            break;
        }
        let hi = ((n as f64) * rho).floor() as usize;
        let block = suffix[n] - suffix[(hi + 1).min(t + 1)];
        let tail_lower = suffix[n];
        let tail_upper = suffix[n] + theta.tail_norm_sq_upper(t + 1);
        if tail_lower > l0 * block {
            return ClassCheck {
                verdict: Verdict::Fails,
                witness: Some(n),
                margin: tail_lower - l0 * block,
                checked_up_to: n,
            };
        }
        if tail_upper > l0 * block {
            undecided.get_or_insert(n);
            continue;
        }
        let margin = l0 * block - tail_upper;
        if margin < worst_margin {
            worst_margin = margin;
            witness = Some(n);
        }
    }
    if let Some(n) = undecided {
        return ClassCheck { verdict: Verdict::Undecidable, witness: Some(n), margin: 0.0, checked_up_to: n_max };
    }
    if n_max < n0 {
        // nothing checkable at this truncation
        return ClassCheck { verdict: Verdict::Undecidable, witness: None, margin: 0.0, checked_up_to: n_max };
    }
    ClassCheck { verdict: Verdict::Holds, witness, margin: worst_margin, checked_up_to: n_max }
}

fn check_self_similar(
    theta: &TruthSequence,
    beta: f64,
    m: f64,
    eps: f64,
    n0: usize,
    rho: f64,
) -> ClassCheck {
    let rect = check_hyperrectangle(theta, beta, m);
    if rect.verdict != Verdict::Holds {
        return rect;
    }
    let t = theta.len();
    let n_max = ((t as f64) / rho).floor() as usize;
    if n_max < n0 {
        return ClassCheck { verdict: Verdict::Undecidable, witness: None, margin: 0.0, checked_up_to: n_max };
    }
    let mut worst_margin = f64::INFINITY;
    let mut witness = None;
    for n in n0..=n_max {
        let hi = ((n as f64) * rho).floor() as usize;
        let block = theta.stored_block_sq(n, hi);
        let need = eps * m * (n as f64).powf(-2.0 * beta);
        let margin = block - need;
        if margin < 0.0 {
            return ClassCheck { verdict: Verdict::Fails, witness: Some(n), margin: -margin, checked_up_to: n };
        }
        if margin < worst_margin {
            worst_margin = margin;
            witness = Some(n);
        }
    }
    ClassCheck { verdict: Verdict::Holds, witness, margin: worst_margin, checked_up_to: n_max }
}

fn check_czerozero(theta: &TruthSequence, n0: usize, m: f64) -> ClassCheck {
    let t = theta.len();
    if matches!(theta.tail(), Tail::PowerLaw { amplitude, .. } if *amplitude > 0.0) && t <= n0 {
        // envelope permits either zero or nonzero coordinates past n0
        return ClassCheck { verdict: Verdict::Undecidable, witness: None, margin: 0.0, checked_up_to: t };
    }
    let bound = m.sqrt();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = 0usize;
    for i in 1..=t {
        let v = theta.coeff(i).abs();
        if i <= n0 {
            if v - bound > worst {
                worst = v - bound;
                witness = i;
            }
        } else if v > 0.0 {
            return ClassCheck { verdict: Verdict::Fails, witness: Some(i), margin: v, checked_up_to: t };
        }
    }
    if matches!(theta.tail(), Tail::PowerLaw { amplitude, .. } if *amplitude > 0.0) {
        return ClassCheck { verdict: Verdict::Undecidable, witness: None, margin: 0.0, checked_up_to: t };
    }
    if worst > 0.0 {
        ClassCheck { verdict: Verdict::Fails, witness: Some(witness), margin: worst, checked_up_to: t }
    } else {
        ClassCheck { verdict: Verdict::Holds, witness: Some(witness), margin: -worst, checked_up_to: t }
    }
}

fn check_supersmooth(theta: &TruthSequence, c: f64, d: f64, m: f64) -> ClassCheck {
    let t = theta.len();
    let mut exact = 0.0;
    for i in 1..=t {
        exact += (c * (i as f64).powf(d)).exp() * theta.coeff(i).powi(2);
        if !exact.is_finite() {
            break;
        }
    }
    if !(exact <= m) {
        // may be Fails or overflow; both mean the partial sum already exceeds M
        return ClassCheck { verdict: Verdict::Fails, witness: Some(t), margin: exact - m, checked_up_to: t };
    }
    match *theta.tail() {
        Tail::Zero => {
            ClassCheck { verdict: Verdict::Holds, witness: Some(t), margin: m - exact, checked_up_to: t }
        }
        Tail::PowerLaw { amplitude, .. } if amplitude == 0.0 => {
            ClassCheck { verdict: Verdict::Holds, witness: Some(t), margin: m - exact, checked_up_to: t }
        }
        // exp weight against a power-law envelope: the tail sum is unbounded,
        // so membership cannot be certified at this truncation
        Tail::PowerLaw { .. } => {
            ClassCheck { verdict: Verdict::Undecidable, witness: None, margin: 0.0, checked_up_to: t }
        }
    }
}
