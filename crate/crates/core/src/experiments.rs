//! Seeded Monte-Carlo experiments: local law on short intervals, ESD
//! distance, regularity probability of `G(m, n, p)`, regular-factor
//! frequency, Lipschitz trace-statistic tails, and a convergence-rate sweep.
//!
//! Every trial draws from its own RNG seeded by [`trial_seed`], and results
//! are collected by trial index, so reports do not depend on thread count.

use std::fmt::Write as _;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{self, DegreeSpec};
use crate::mplaw::{self, Interval, LimitLaw};
use crate::spectra::{self, Spectrum};
use crate::{factors, BipartiteGraph};

pub const SCHEMA_VERSION: u32 = 1;

/// Master seed used by the regression baselines.
pub const DEFAULT_SEED: u64 = 1729;

pub const DEFAULT_TRIALS: usize = 50;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

fn rng_for(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, index))
}

/// Runs `f` on a pool of `threads` workers (0 = rayon default).
fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Which count the observed `N_I` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountConvention {
    /// `(m + n)·mu(I)`: mu integrates to one over all `m + n` eigenvalues.
    #[default]
    Total,
    /// `n·mu(I)` as written in the local-law statement.
    Literal,
}

impl CountConvention {
    pub fn predicted(self, m: usize, n: usize, mass: f64) -> f64 {
        match self {
            CountConvention::Total => (m + n) as f64 * mass,
            CountConvention::Literal => n as f64 * mass,
        }
    }
}

/// Factor applied to the normalized matrix before counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleConvention {
    /// `1/sqrt(max(m, n))`, under which the spectrum converges to mu.
    #[default]
    LargerSide,
    /// `1/sqrt(n)` with `n` the right side.
    RightSide,
}

impl ScaleConvention {
    pub fn factor(self, m: usize, n: usize) -> f64 {
        match self {
            ScaleConvention::LargerSide => 1.0 / (m.max(n) as f64).sqrt(),
            ScaleConvention::RightSide => 1.0 / (n as f64).sqrt(),
        }
    }
}

/// Random graph model for a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Ensemble {
    /// Biregular graphs, sampled by the switch chain.
    Regular { m: usize, n: usize, dl: usize },
    /// `G(m, n, p)`.
    Er { m: usize, n: usize, p: f64 },
}

impl Ensemble {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Ensemble::Regular { m, n, .. } | Ensemble::Er { m, n, .. } => (m, n),
        }
    }

    /// Expected left degree (`dl` or `n·p`).
    pub fn left_degree(&self) -> f64 {
        match *self {
            Ensemble::Regular { dl, .. } => dl as f64,
            Ensemble::Er { n, p, .. } => n as f64 * p,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Ensemble::Regular { m, n, dl } => {
                let spec = DegreeSpec::from_left(m, n, dl)?;
                if spec.dl == 0 || spec.dl >= n {
                    return Err(Error::infeasible(format!(
                        "dl = {dl} leaves the normalized matrix undefined (need 0 < dl < n)"
                    )));
                }
            }
            Ensemble::Er { m, n, p } => {
                if m == 0 || n == 0 {
                    return Err(Error::Config("both sides need a vertex".into()));
                }
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Config(format!("need 0 < p < 1, got {p}")));
                }
            }
        }
        Ok(())
    }

    /// Normalized block spectrum of one sample, before scaling.
    pub fn sample_spectrum(&self, rng: &mut ChaCha8Rng, mixing_steps: Option<usize>) -> Result<Spectrum> {
        let matrix = match *self {
            Ensemble::Regular { m, n, dl } => {
                let spec = DegreeSpec::from_left(m, n, dl)?;
                let g = graphs::sample_regular_with(m, n, spec, mixing_steps, rng)?;
                graphs::normalized_regular(&g, spec)?
            }
            Ensemble::Er { m, n, p } => {
                let g = graphs::sample_er_with(m, n, p, rng)?;
                graphs::normalized_er(&g, p)?
            }
        };
        spectra::block_spectrum(&matrix)
    }
}

/// Shortest interval covered by the local law: `(ln d / (δ³ sqrt(d)))^{1/4}`.
pub fn theorem_min_length(degree: f64, delta: f64) -> f64 {
    (degree.ln() / (delta.powi(3) * degree.sqrt())).powf(0.25)
}

/// Intervals on which counts are compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IntervalGrid {
    /// `per_side` intervals inside `[a + margin·(b-a), b - margin·(b-a)]`,
    /// mirrored to the negative side.
    Bulk {
        per_side: usize,
        margin: f64,
    },
    Explicit {
        intervals: Vec<Interval>,
    },
}

impl Default for IntervalGrid {
    fn default() -> Self {
        IntervalGrid::Bulk {
            per_side: 4,
            margin: 0.1,
        }
    }
}

impl IntervalGrid {
    /// Bulk intervals have length `min(min_length, cell)`, centred in equal
    /// cells; when the theorem's length exceeds a cell they tile the bulk.
    pub fn build(&self, law: &LimitLaw, min_length: f64) -> Result<Vec<Interval>> {
        let intervals = match self {
            IntervalGrid::Bulk { per_side, margin } => {
                if *per_side == 0 || !(0.0..0.5).contains(margin) {
                    return Err(Error::Config(format!(
                        "bulk grid needs per_side >= 1 and margin in [0, 0.5), got {per_side}, {margin}"
                    )));
                }
                let w = law.b() - law.a();
                let (lo, hi) = (law.a() + margin * w, law.b() - margin * w);
                let cell = (hi - lo) / *per_side as f64;
                let len = if min_length.is_finite() {
                    min_length.min(cell)
                } else {
                    cell
                };
                let mut pos = Vec::with_capacity(*per_side);
                for k in 0..*per_side {
                    let centre = lo + (k as f64 + 0.5) * cell;
                    let (l, h) = if len == cell {
                        (lo + k as f64 * cell, lo + (k + 1) as f64 * cell)
                    } else {
                        (centre - 0.5 * len, centre + 0.5 * len)
                    };
                    pos.push(Interval::new(l, h)?);
                }
                let mut all: Vec<Interval> = pos.iter().rev().map(Interval::mirrored).collect();
                all.extend(pos);
                all
            }
            IntervalGrid::Explicit { intervals } => intervals.clone(),
        };
        for iv in &intervals {
            if !iv.avoids_zero() {
                return Err(Error::Config(format!(
                    "interval {iv} contains 0; local-law intervals must avoid the origin"
                )));
            }
        }
        if intervals.is_empty() {
            return Err(Error::Config("interval grid is empty".into()));
        }
        Ok(intervals)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawConfig {
    #[serde(flatten)]
    pub ensemble: Ensemble,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub grid: IntervalGrid,
    #[serde(default)]
    pub count_convention: CountConvention,
    #[serde(default)]
    pub scale_convention: ScaleConvention,
    /// Switch-chain length; `None` uses [`graphs::default_mixing_steps`].
    #[serde(default)]
    pub mixing_steps: Option<usize>,
    /// Aggregate pass rate required for success.
    #[serde(default = "default_min_pass_rate")]
    pub min_pass_rate: f64,
}

fn default_min_pass_rate() -> f64 {
    0.95
}

impl LocalLawConfig {
    pub fn new(ensemble: Ensemble, delta: f64, trials: usize, seed: u64) -> Self {
        LocalLawConfig {
            ensemble,
            delta,
            trials,
            seed,
            grid: IntervalGrid::default(),
            count_convention: CountConvention::default(),
            scale_convention: ScaleConvention::default(),
            mixing_steps: None,
            min_pass_rate: default_min_pass_rate(),
        }
    }

    /// Parses and validates a JSON config, including the interval grid.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: LocalLawConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        let (m, n) = cfg.ensemble.shape();
        let law = LimitLaw::for_shape(m, n)?;
        cfg.grid
            .build(&law, theorem_min_length(cfg.ensemble.left_degree(), cfg.delta))?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.delta.is_nan() || self.delta <= 0.0 {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.trials == 0 {
            return Err(Error::Config("need at least one trial".into()));
        }
        if !(0.0..=1.0).contains(&self.min_pass_rate) {
            return Err(Error::Config("min_pass_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub rng: String,
    pub sampler: String,
}

impl Environment {
    fn current(ensemble: &Ensemble) -> Self {
        let sampler = match ensemble {
            Ensemble::Regular { .. } => "switch chain from circulant start; approximately uniform".to_string(),
            Ensemble::Er { .. } => "independent Bernoulli edges".to_string(),
        };
        Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: "ChaCha8, per-trial splitmix64 seeds".to_string(),
            sampler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub lo: f64,
    pub hi: f64,
    pub measure: f64,
    pub predicted: f64,
    /// `mu(I) = 0`: no relative comparison is possible.
    pub zero_measure: bool,
    /// Shorter than the local law's minimum length.
    pub below_min_length: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub counts: Vec<usize>,
    /// `None` for zero-measure intervals.
    pub pass: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub evaluated: usize,
    pub passed: usize,
    pub pass_rate: f64,
    pub max_rel_dev: f64,
    pub meets_threshold: bool,
}

/// Full record of a local-law run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub experiment: String,
    pub config: LocalLawConfig,
    pub environment: Environment,
    pub law: LimitLaw,
    pub scale: f64,
    pub theorem_min_length: f64,
    pub intervals: Vec<IntervalRecord>,
    pub trials: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    pub warnings: Vec<String>,
}

/// `|N - predicted| < delta · predicted`; `None` when nothing is predicted.
pub fn local_law_pass(count: usize, predicted: f64, delta: f64) -> Option<bool> {
    if predicted <= 0.0 {
        return None;
    }
    Some((count as f64 - predicted).abs() < delta * predicted)
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Re-derives every pass flag from the stored counts and interval masses.
    pub fn flags_consistent(&self) -> bool {
        let (m, n) = self.config.ensemble.shape();
        self.trials.iter().all(|t| {
            t.counts.iter().zip(&t.pass).zip(&self.intervals).all(|((&c, &p), iv)| {
                let predicted = self.config.count_convention.predicted(m, n, iv.measure);
                predicted == iv.predicted && local_law_pass(c, predicted, self.config.delta) == p
            })
        })
    }

    /// Summary CSV: `trial,interval_lo,interval_hi,N_I,predicted,rel_dev,pass`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("trial,interval_lo,interval_hi,N_I,predicted,rel_dev,pass\n");
        for t in &self.trials {
            for ((&count, pass), iv) in t.counts.iter().zip(&t.pass).zip(&self.intervals) {
                let (rel, flag) = match pass {
                    Some(p) => (
                        format!("{:.16e}", (count as f64 - iv.predicted) / iv.predicted),
                        p.to_string(),
                    ),
                    None => (String::new(), "zero-measure".to_string()),
                };
                writeln!(
                    out,
                    "{},{:.16e},{:.16e},{},{:.16e},{},{}",
                    t.trial, iv.lo, iv.hi, count, iv.predicted, rel, flag
                )
                .expect("write to String");
            }
        }
        out
    }
}

/// Local law for either ensemble.
pub fn run_local_law(cfg: &LocalLawConfig, threads: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (m, n) = cfg.ensemble.shape();
    let law = LimitLaw::for_shape(m, n)?;
    let degree = cfg.ensemble.left_degree();
    let min_length = theorem_min_length(degree, cfg.delta);
    let intervals = cfg.grid.build(&law, min_length)?;
    let scale = cfg.scale_convention.factor(m, n);

    let mut warnings = Vec::new();
    let log_n = (m.max(n) as f64).ln();
    if degree <= log_n {
        warnings.push(format!(
            "left degree {degree} does not exceed ln(max(m, n)) = {log_n:.3}; outside the local-law regime"
        ));
    }

    let mut records = Vec::with_capacity(intervals.len());
    for iv in &intervals {
        let mass = mplaw::measure(iv, &law)?;
        let predicted = cfg.count_convention.predicted(m, n, mass);
        records.push(IntervalRecord {
            lo: iv.lo(),
            hi: iv.hi(),
            measure: mass,
            predicted,
            zero_measure: predicted <= 0.0,
            below_min_length: iv.len() < min_length,
        });
    }
    if records.iter().any(|r| r.below_min_length) {
        warnings.push(format!(
            "some intervals are shorter than the local-law minimum length {min_length:.6}"
        ));
    }

    let trials: Vec<TrialRecord> = with_pool(threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(cfg.seed, trial as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let spectrum = cfg
                    .ensemble
                    .sample_spectrum(&mut rng, cfg.mixing_steps)?
                    .with_scale(scale);
                let counts: Vec<usize> = intervals
                    .iter()
                    .map(|iv| spectra::count_in_interval(&spectrum, iv))
                    .collect();
                let pass = counts
                    .iter()
                    .zip(&records)
                    .map(|(&c, r)| local_law_pass(c, r.predicted, cfg.delta))
                    .collect();
                Ok(TrialRecord {
                    trial,
                    seed,
                    counts,
                    pass,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut evaluated = 0;
    let mut passed = 0;
    let mut max_rel_dev: f64 = 0.0;
    for t in &trials {
        for ((&c, p), r) in t.counts.iter().zip(&t.pass).zip(&records) {
            if let Some(ok) = p {
                evaluated += 1;
                passed += usize::from(*ok);
                max_rel_dev = max_rel_dev.max((c as f64 - r.predicted).abs() / r.predicted);
            }
        }
    }
    let pass_rate = if evaluated == 0 {
        1.0
    } else {
        passed as f64 / evaluated as f64
    };
    let experiment = match cfg.ensemble {
        Ensemble::Regular { .. } => "local_law_regular",
        Ensemble::Er { .. } => "local_law_er",
    };
    Ok(ExperimentReport {
        schema: SCHEMA_VERSION,
        experiment: experiment.to_string(),
        config: cfg.clone(),
        environment: Environment::current(&cfg.ensemble),
        law,
        scale,
        theorem_min_length: min_length,
        intervals: records,
        trials,
        aggregate: Aggregate {
            evaluated,
            passed,
            pass_rate,
            max_rel_dev,
            meets_threshold: pass_rate >= cfg.min_pass_rate,
        },
        warnings,
    })
}

/// Local law on the biregular ensemble.
pub fn run_local_law_regular(cfg: &LocalLawConfig, threads: usize) -> Result<ExperimentReport> {
    match cfg.ensemble {
        Ensemble::Regular { .. } => run_local_law(cfg, threads),
        Ensemble::Er { .. } => Err(Error::Config("expected the regular ensemble".into())),
    }
}

/// Local law on `G(m, n, p)` standardized entrywise.
pub fn run_local_law_er(cfg: &LocalLawConfig, threads: usize) -> Result<ExperimentReport> {
    match cfg.ensemble {
        Ensemble::Er { .. } => run_local_law(cfg, threads),
        Ensemble::Regular { .. } => Err(Error::Config("expected the ER ensemble".into())),
    }
}

/// Kolmogorov distance between the empirical distribution of the scaled
/// spectrum and `law`, checking both one-sided limits at each jump.
pub fn kolmogorov_distance(s: &Spectrum, law: &LimitLaw) -> Result<f64> {
    let values: Vec<f64> = s.values().collect();
    let total = values.len() as f64;
    let mut dist: f64 = 0.0;
    let mut i = 0;
    while i < values.len() {
        let x = values[i];
        let mut j = i;
        while j < values.len() && values[j] == x {
            j += 1;
        }
        let below = i as f64 / total;
        let at = j as f64 / total;
        dist = dist
            .max((mplaw::cdf_left(x, law)? - below).abs())
            .max((mplaw::cdf(x, law)? - at).abs());
        i = j;
    }
    Ok(dist)
}

/// Wilson score interval at 95%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilson {
    pub lo: f64,
    pub hi: f64,
}

impl Wilson {
    pub fn new(successes: usize, trials: usize) -> Self {
        if trials == 0 {
            return Wilson { lo: 0.0, hi: 1.0 };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Wilson {
            lo: (centre - half).max(0.0),
            hi: (centre + half).min(1.0),
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Trials per independently seeded block in the cheap per-sample experiments.
const BLOCK: usize = 10_000;

fn integral_degree(value: f64, what: &str) -> Result<usize> {
    let r = value.round();
    if (value - r).abs() > 1e-9 || r < 0.0 {
        return Err(Error::infeasible(format!(
            "{what} = {value} is not an integer; the regularity probability is 0"
        )));
    }
    Ok(r as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    pub schema: u32,
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub dl: usize,
    pub dr: usize,
    pub trials: usize,
    pub seed: u64,
    pub hits: usize,
    pub estimate: f64,
    pub wilson: Wilson,
}

/// Fraction of `G(m, n, p)` samples that are `(np, mp)`-biregular.
pub fn estimate_regularity_probability(
    m: usize,
    n: usize,
    p: f64,
    trials: usize,
    seed: u64,
    threads: usize,
) -> Result<RegularityEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("p must lie in [0, 1], got {p}")));
    }
    if m == 0 || n == 0 || trials == 0 {
        return Err(Error::Config("need nonempty sides and at least one trial".into()));
    }
    let dl = integral_degree(n as f64 * p, "n·p")?;
    let dr = integral_degree(m as f64 * p, "m·p")?;
    let spec = DegreeSpec::new(m, n, dl, dr)?;
    let blocks = trials.div_ceil(BLOCK);
    let hits: usize = with_pool(threads, || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = rng_for(seed, b as u64);
                let count = BLOCK.min(trials - b * BLOCK);
                let mut hits = 0;
                for _ in 0..count {
                    let g = graphs::sample_er_with(m, n, p, &mut rng)?;
                    hits += usize::from(graphs::is_regular(&g, spec));
                }
                Ok(hits)
            })
            .collect::<Result<Vec<_>>>()
    })??
    .into_iter()
    .sum();
    Ok(RegularityEstimate {
        schema: SCHEMA_VERSION,
        m,
        n,
        p,
        dl,
        dr,
        trials,
        seed,
        hits,
        estimate: hits as f64 / trials as f64,
        wilson: Wilson::new(hits, trials),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorFrequency {
    pub schema: u32,
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub delta: f64,
    pub dl_prime: usize,
    pub dr_prime: usize,
    pub trials: usize,
    pub seed: u64,
    pub found: usize,
    pub frequency: f64,
    pub wilson: Wilson,
}

/// Reduced demands `dl' = floor(n·p·(1 - delta))`, `dr' = m·dl'/n`.
pub fn reduced_degrees(m: usize, n: usize, p: f64, delta: f64) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Config(format!("delta must lie in [0, 1), got {delta}")));
    }
    // Tolerate representation error such as 40·0.9 = 35.999...
    let dl = (n as f64 * p * (1.0 - delta) + 1e-9).floor() as usize;
    if !(m * dl).is_multiple_of(n) {
        return Err(Error::infeasible(format!(
            "dl' = {dl} gives non-integral dr' = {m}·{dl}/{n}"
        )));
    }
    Ok((dl, m * dl / n))
}

/// Frequency with which `G(m, n, p)` contains a `(dl', dr')`-regular factor.
pub fn regular_factor_frequency(
    m: usize,
    n: usize,
    p: f64,
    delta: f64,
    trials: usize,
    seed: u64,
    threads: usize,
) -> Result<FactorFrequency> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("p must lie in [0, 1], got {p}")));
    }
    if m == 0 || n == 0 || trials == 0 {
        return Err(Error::Config("need nonempty sides and at least one trial".into()));
    }
    let (dl, dr) = reduced_degrees(m, n, p, delta)?;
    let outcomes: Vec<bool> = with_pool(threads, || {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(seed, t as u64);
                let g = graphs::sample_er_with(m, n, p, &mut rng)?;
                factors::regular_factor_check(&g, dl, dr)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let found = outcomes.iter().filter(|&&b| b).count();
    Ok(FactorFrequency {
        schema: SCHEMA_VERSION,
        m,
        n,
        p,
        delta,
        dl_prime: dl,
        dr_prime: dr,
        trials,
        seed,
        found,
        frequency: found as f64 / trials as f64,
        wilson: Wilson::new(found, trials),
    })
}

/// Setup for the trace-statistic tail experiment on standardized `G(m, n, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub t_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Lipschitz constant of the statistic's function.
    pub lipschitz: f64,
    /// Constant of the reference bound `4 exp(-c T²/(K² L²))`.
    pub bound_c: f64,
    #[serde(default)]
    pub scale_convention: ScaleConvention,
    /// Free-form description of the function, carried into the report.
    pub function: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub tail: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub schema: u32,
    pub config: TailConfig,
    /// Entry bound `K` of the standardized matrix.
    pub k: f64,
    pub mean: f64,
    pub rows: Vec<TailRow>,
    /// `min_T -ln(tail/4)·K²L²/T²` over grid points with a nonzero tail.
    pub fitted_c: Option<f64>,
    pub samples: Vec<f64>,
}

/// Empirical `P(|Z - mean Z| >= T)` for `Z = Σ f(λᵢ)`.
pub fn concentration_tail_check<F>(cfg: &TailConfig, f: F, threads: usize) -> Result<TailTable>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(cfg.lipschitz > 0.0 && cfg.lipschitz.is_finite()) {
        return Err(Error::domain(
            "degenerate function: Lipschitz constant must be positive",
        ));
    }
    if cfg.trials < 2 {
        return Err(Error::Config("need at least two trials".into()));
    }
    if cfg.t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Config("T grid must hold positive finite values".into()));
    }
    let ensemble = Ensemble::Er {
        m: cfg.m,
        n: cfg.n,
        p: cfg.p,
    };
    ensemble.validate()?;
    let scale = cfg.scale_convention.factor(cfg.m, cfg.n);
    let samples: Vec<f64> = with_pool(threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(cfg.seed, t as u64);
                let s = ensemble.sample_spectrum(&mut rng, None)?.with_scale(scale);
                Ok(spectra::trace_statistic(&s, &f))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let k = graphs::er_entry_bound(cfg.p);
    let kl2 = (k * cfg.lipschitz).powi(2);
    let mut fitted: Option<f64> = None;
    let rows = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let hits = samples.iter().filter(|z| (*z - mean).abs() >= t).count();
            let tail = hits as f64 / samples.len() as f64;
            if tail > 0.0 {
                let c = -(tail / 4.0).ln() * kl2 / (t * t);
                fitted = Some(fitted.map_or(c, |best: f64| best.min(c)));
            }
            TailRow {
                t,
                tail,
                bound: (4.0 * (-cfg.bound_c * t * t / kl2).exp()).min(1.0),
            }
        })
        .collect();
    Ok(TailTable {
        schema: SCHEMA_VERSION,
        config: cfg.clone(),
        k,
        mean,
        rows,
        fitted_c: fitted,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweepConfig {
    pub ns: Vec<usize>,
    pub alpha: f64,
    pub p: f64,
    pub interval: Interval,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub count_convention: CountConvention,
    #[serde(default)]
    pub scale_convention: ScaleConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub m: usize,
    pub predicted: f64,
    pub mean_count: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    /// Standard error of `mean_count / predicted`.
    pub rel_std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub schema: u32,
    pub config: RateSweepConfig,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of ln(abs_dev) on ln(n), over rows with nonzero deviation.
    pub gamma: Option<f64>,
}

impl RateSweep {
    /// Relative deviation never rises by more than `k` combined standard errors.
    pub fn non_increasing_within(&self, k: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].rel_dev <= w[0].rel_dev + k * (w[0].rel_std_err + w[1].rel_std_err))
    }
}

/// `|mean N_I - predicted|` against `n` for standardized `G(round(alpha·n), n, p)`.
pub fn convergence_rate_sweep(cfg: &RateSweepConfig, threads: usize) -> Result<RateSweep> {
    if cfg.ns.len() < 3 {
        return Err(Error::Config("rate sweep needs at least three sizes to fit".into()));
    }
    if cfg.trials < 2 {
        return Err(Error::Config("need at least two trials per size".into()));
    }
    let law = LimitLaw::new(cfg.alpha)?;
    let mass = mplaw::measure(&cfg.interval, &law)?;
    let mut rows = Vec::with_capacity(cfg.ns.len());
    for (k, &n) in cfg.ns.iter().enumerate() {
        let m = (cfg.alpha * n as f64).round() as usize;
        let ensemble = Ensemble::Er { m, n, p: cfg.p };
        ensemble.validate()?;
        let scale = cfg.scale_convention.factor(m, n);
        let size_seed = trial_seed(cfg.seed, k as u64);
        let counts: Vec<usize> = with_pool(threads, || {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = rng_for(size_seed, t as u64);
                    let s = ensemble.sample_spectrum(&mut rng, None)?.with_scale(scale);
                    Ok(spectra::count_in_interval(&s, &cfg.interval))
                })
                .collect::<Result<Vec<_>>>()
        })??;
        let trials = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / trials;
        let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (trials - 1.0);
        let predicted = cfg.count_convention.predicted(m, n, mass);
        let abs_dev = (mean - predicted).abs();
        let (rel_dev, rel_std_err) = if predicted > 0.0 {
            (abs_dev / predicted, (var / trials).sqrt() / predicted)
        } else {
            (0.0, 0.0)
        };
        rows.push(RateRow {
            n,
            m,
            predicted,
            mean_count: mean,
            abs_dev,
            rel_dev,
            rel_std_err,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_dev > 0.0)
        .map(|r| ((r.n as f64).ln(), r.abs_dev.ln()))
        .collect();
    let gamma = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(RateSweep {
        schema: SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
        gamma,
    })
}

/// Samples one graph from `ensemble` with the given seed, for CLI use.
pub fn sample_graph(ensemble: &Ensemble, seed: u64, mixing_steps: Option<usize>) -> Result<BipartiteGraph> {
    match *ensemble {
        Ensemble::Regular { m, n, dl } => {
            let spec = DegreeSpec::from_left(m, n, dl)?;
            graphs::sample_regular(m, n, spec, seed, mixing_steps)
        }
        Ensemble::Er { m, n, p } => graphs::sample_er(m, n, p, seed),
    }
}
