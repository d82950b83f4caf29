//! Command-line front end for the `bipspec` library.
//!
//! Exit codes are a stable contract: 0 success, 1 internal numerical failure,
//! 2 argument error, 3 infeasible input, 4 experiment threshold failure.
//!
//! Every subcommand accepts `--config PATH`, a JSON object whose keys are the
//! subcommand's long flag names. Flags given on the command line win.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bipspec::experiments::{
    self, CountConvention, Ensemble, IntervalGrid, LocalLawConfig, RateSweepConfig, ScaleConvention, TailConfig,
};
use bipspec::factors::{self, FactorSearch, FactorSpec, ORE_RYSER_MAX_LEFT};
use bipspec::{graphs, mplaw, spectra, DegreeSpec, Interval, LimitLaw, WindowKind, WindowPair};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_THRESHOLD: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] bipspec::Error),
    #[error("{0}")]
    Threshold(String),
    #[error("{0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use bipspec::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Threshold(_) => EXIT_THRESHOLD,
            CliError::Output(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                E::Domain(_) | E::Config(_) | E::Parse { .. } | E::Io(_) | E::Json(_) => EXIT_USAGE,
                E::Infeasible(_) | E::Capacity { .. } => EXIT_INFEASIBLE,
                E::Quadrature { .. } | E::NoConvergence(_) => EXIT_INTERNAL,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "bipspec",
    version,
    about = "Spectra of random bipartite graphs against the limit law"
)]
pub struct Cli {
    /// Worker threads for experiments (0 = all cores).
    #[arg(long, global = true, env = "BIPSPEC_THREADS")]
    pub threads: Option<usize>,

    /// JSON file whose keys mirror the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the limit density (and optionally the CDF) as CSV.
    MpEval(MpEvalArgs),
    /// Sample a graph and write its edge list.
    Sample(SampleArgs),
    /// Spectrum of an edge-list graph as CSV.
    Spectrum(SpectrumArgs),
    /// Local-law experiment; exits 4 when the pass rate misses the threshold.
    LocalLaw(LocalLawArgs),
    /// Decide whether a graph has an f-factor.
    FactorCheck(FactorCheckArgs),
    /// Monte-Carlo probability that G(m, n, p) is biregular.
    RegularityProb(RegularityArgs),
    /// Frequency of a reduced-degree regular factor in G(m, n, p).
    FactorFreq(FactorFreqArgs),
    /// Tail table of a Lipschitz trace statistic.
    Concentration(ConcentrationArgs),
    /// Deviation of mean interval counts as n grows.
    RateSweep(RateSweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Er,
    Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalize {
    Regular,
    Er,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountArg {
    Total,
    Literal,
}

impl From<CountArg> for CountConvention {
    fn from(c: CountArg) -> Self {
        match c {
            CountArg::Total => CountConvention::Total,
            CountArg::Literal => CountConvention::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleArg {
    LargerSide,
    RightSide,
}

impl From<ScaleArg> for ScaleConvention {
    fn from(c: ScaleArg) -> Self {
        match c {
            ScaleArg::LargerSide => ScaleConvention::LargerSide,
            ScaleArg::RightSide => ScaleConvention::RightSide,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatFunction {
    /// Upper window `f1` of the interval.
    F1,
    Identity,
    Abs,
    Constant,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MpEvalArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Add a `cdf` column.
    #[arg(long)]
    #[serde(default)]
    pub cdf: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub dl: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Switch-chain proposals for the regular model.
    #[arg(long)]
    pub mixing_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SpectrumArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub normalize: Option<Normalize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub dl: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a histogram with this many bins next to `--out`.
    #[arg(long)]
    pub hist: Option<usize>,
    /// Scale applied to normalized spectra (default larger-side).
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LocalLawArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dl: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for `report.json` and `summary.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bulk grid: intervals per side of the origin.
    #[arg(long)]
    pub per_side: Option<usize>,
    /// Bulk grid: fraction of `[a, b]` trimmed from each edge.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Explicit interval `LO,HI`; repeatable. Replaces the bulk grid.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub interval: Vec<String>,
    #[arg(long, value_enum)]
    pub count_convention: Option<CountArg>,
    #[arg(long, value_enum)]
    pub scale_convention: Option<ScaleArg>,
    #[arg(long)]
    pub mixing_steps: Option<usize>,
    #[arg(long)]
    pub min_pass_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FactorCheckArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Left demands, comma separated; a single value applies to every vertex.
    #[arg(long)]
    pub fa: Option<String>,
    /// Right demands, comma separated; a single value applies to every vertex.
    #[arg(long)]
    pub fb: Option<String>,
    /// Write the factor's edge list here when one exists.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub json: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RegularityArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub json: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FactorFreqArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Relative degree reduction of the sought factor.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub json: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConcentrationArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Deviation thresholds `T`, comma separated.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub function: Option<StatFunction>,
    /// Window interval `LO,HI` for `f1`.
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    /// Window flank parameter for `f1`.
    #[arg(long)]
    pub c: Option<f64>,
    /// Override the function's Lipschitz constant.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Constant of the reference bound curve.
    #[arg(long)]
    pub bound_c: Option<f64>,
    #[arg(long, value_enum)]
    pub scale_convention: Option<ScaleArg>,
    #[arg(long)]
    #[serde(default)]
    pub json: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RateSweepArgs {
    /// Right-side sizes, comma separated.
    #[arg(long)]
    pub ns: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Counting interval `LO,HI`.
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub count_convention: Option<CountArg>,
    #[arg(long, value_enum)]
    pub scale_convention: Option<ScaleArg>,
    /// Allowed rise in relative deviation, in combined standard errors.
    #[arg(long)]
    pub noise_k: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub json: bool,
}

/// Overlays the flags given on the command line onto a config-file object.
/// Absent options and unset switches leave the file's values in place.
pub fn merge_config<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&str>) -> CliResult<T> {
    let Some(text) = file else {
        return Ok(
            serde_json::from_value(serde_json::to_value(flags).map_err(bipspec::Error::from)?)
                .map_err(bipspec::Error::from)?,
        );
    };
    let mut base: Value = serde_json::from_str(text).map_err(|e| usage(format!("config: {e}")))?;
    let Value::Object(base_map) = &mut base else {
        return Err(usage("config: top level must be a JSON object"));
    };
    let Value::Object(flag_map) = serde_json::to_value(flags).map_err(bipspec::Error::from)? else {
        unreachable!("argument structs serialize to objects");
    };
    for (k, v) in flag_map {
        let unset = v.is_null() || v == Value::Bool(false) || v.as_array().is_some_and(Vec::is_empty);
        if !unset {
            base_map.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| usage(format!("config: {e}")))
}

fn need<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("missing required --{flag}")))
}

/// Parses `LO,HI`.
pub fn parse_interval(text: &str) -> CliResult<Interval> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| usage(format!("interval {text:?} is not LO,HI")))?;
    let num = |s: &str| -> CliResult<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("interval bound {s:?} is not a number")))
    };
    Ok(Interval::new(num(lo)?, num(hi)?)?)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| usage(format!("{what}: {s:?} is not a valid number")))
        })
        .collect()
}

/// Demand list for `size` vertices; one value is broadcast.
fn demands(text: &str, size: usize, side: &str) -> CliResult<Vec<usize>> {
    let list = factors::parse_demands(text)?;
    match list.len() {
        1 => Ok(vec![list[0]; size]),
        k if k == size => Ok(list),
        k => Err(usage(format!("--{side} lists {k} demands for {size} vertices"))),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn json_line<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(bipspec::Error::from)?;
    s.push('\n');
    Ok(s)
}

/// Parses `args` and runs the subcommand, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "bipspec: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => {
            Some(fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?)
        }
        None => None,
    };
    let file = file.as_deref();
    let threads = cli.threads.unwrap_or(0);
    match &cli.command {
        Command::MpEval(a) => mp_eval(&merge_config(a, file)?, out),
        Command::Sample(a) => sample(&merge_config(a, file)?, out),
        Command::Spectrum(a) => spectrum(&merge_config(a, file)?, out),
        Command::LocalLaw(a) => local_law(&merge_config(a, file)?, threads, out),
        Command::FactorCheck(a) => factor_check(&merge_config(a, file)?, out),
        Command::RegularityProb(a) => regularity(&merge_config(a, file)?, threads, out),
        Command::FactorFreq(a) => factor_freq(&merge_config(a, file)?, threads, out),
        Command::Concentration(a) => concentration(&merge_config(a, file)?, threads, out),
        Command::RateSweep(a) => rate_sweep(&merge_config(a, file)?, threads, out),
    }
}

fn mp_eval(a: &MpEvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let law = LimitLaw::new(need(a.alpha, "alpha")?)?;
    let (from, to) = (need(a.from, "from")?, need(a.to, "to")?);
    let points = need(a.points, "points")?;
    if from.partial_cmp(&to) != Some(std::cmp::Ordering::Less) || points < 2 {
        return Err(usage("need --from < --to and --points >= 2"));
    }
    let mut csv = String::from(if a.cdf { "x,density,cdf\n" } else { "x,density\n" });
    let step = (to - from) / (points - 1) as f64;
    for k in 0..points {
        let x = if k + 1 == points { to } else { from + k as f64 * step };
        let d = mplaw::sym_density(x, &law);
        if a.cdf {
            csv.push_str(&format!("{x:.16e},{d:.16e},{:.16e}\n", mplaw::cdf(x, &law)?));
        } else {
            csv.push_str(&format!("{x:.16e},{d:.16e}\n"));
        }
    }
    out.write_all(csv.as_bytes())?;
    Ok(())
}

fn ensemble(model: Model, m: usize, n: usize, p: Option<f64>, dl: Option<usize>) -> CliResult<Ensemble> {
    match (model, p, dl) {
        (Model::Er, Some(p), None) => Ok(Ensemble::Er { m, n, p }),
        (Model::Regular, None, Some(dl)) => Ok(Ensemble::Regular { m, n, dl }),
        (Model::Er, _, _) => Err(usage("model er takes --p and not --dl")),
        (Model::Regular, _, _) => Err(usage("model regular takes --dl and not --p")),
    }
}

fn sample(a: &SampleArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = need(a.model, "model")?;
    let (m, n) = (need(a.m, "m")?, need(a.n, "n")?);
    let seed = need(a.seed, "seed")?;
    let path = need(a.out.as_ref(), "out")?;
    let g = match ensemble(model, m, n, a.p, a.dl)? {
        Ensemble::Er { p, .. } => graphs::sample_er(m, n, p, seed)?,
        Ensemble::Regular { dl, .. } => {
            let spec = DegreeSpec::from_left(m, n, dl)?;
            graphs::sample_regular(m, n, spec, seed, a.mixing_steps)?
        }
    };
    let mut text = Vec::new();
    graphs::write_edge_list(&g, &mut text)?;
    fs::write(path, &text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    let name = match model {
        Model::Er => "er",
        Model::Regular => "regular",
    };
    writeln!(out, "{name} {m} {n} {} {seed}", g.edge_count())?;
    Ok(())
}

/// `out.csv` becomes `out.hist.csv`.
pub fn histogram_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.hist.csv"))
}

fn spectrum(a: &SpectrumArgs, out: &mut dyn Write) -> CliResult<()> {
    let input = need(a.input.as_ref(), "in")?;
    let path = need(a.out.as_ref(), "out")?;
    let normalize = need(a.normalize, "normalize")?;
    let g = graphs::load_edge_list(input)?;
    let (m, n) = (g.m(), g.n());
    let scale = ScaleConvention::from(a.scale.unwrap_or(ScaleArg::LargerSide)).factor(m, n);
    let s = match (normalize, a.p, a.dl) {
        (Normalize::None, None, None) => spectra::bipartite_spectrum(&g.biadjacency())?,
        (Normalize::Er, Some(p), None) => spectra::block_spectrum(&graphs::normalized_er(&g, p)?)?.with_scale(scale),
        (Normalize::Regular, None, Some(dl)) => {
            let spec = DegreeSpec::from_left(m, n, dl)?;
            spectra::block_spectrum(&graphs::normalized_regular(&g, spec)?)?.with_scale(scale)
        }
        (Normalize::None, _, _) => return Err(usage("--normalize none takes neither --p nor --dl")),
        (Normalize::Er, _, _) => return Err(usage("--normalize er takes --p only")),
        (Normalize::Regular, _, _) => return Err(usage("--normalize regular takes --dl only")),
    };
    write_file(path, &spectra::spectrum_csv(&s))?;
    if let Some(bins) = a.hist {
        let hist = spectra::histogram(&s, bins)?;
        write_file(&histogram_path(path), &spectra::histogram_csv(&hist))?;
    }
    writeln!(out, "{} eigenvalues written to {}", s.len(), path.display())?;
    Ok(())
}

/// Resolves local-law flags into a library config.
pub fn local_law_config(a: &LocalLawArgs) -> CliResult<LocalLawConfig> {
    let model = need(a.model, "model")?;
    let (m, n) = (need(a.m, "m")?, need(a.n, "n")?);
    let ens = ensemble(model, m, n, a.p, a.dl)?;
    let mut cfg = LocalLawConfig::new(
        ens,
        need(a.delta, "delta")?,
        a.trials.unwrap_or(experiments::DEFAULT_TRIALS),
        need(a.seed, "seed")?,
    );
    cfg.grid = if a.interval.is_empty() {
        let IntervalGrid::Bulk { per_side, margin } = IntervalGrid::default() else {
            unreachable!("default grid is bulk")
        };
        IntervalGrid::Bulk {
            per_side: a.per_side.unwrap_or(per_side),
            margin: a.margin.unwrap_or(margin),
        }
    } else {
        if a.per_side.is_some() || a.margin.is_some() {
            return Err(usage("--interval replaces the bulk grid; drop --per-side/--margin"));
        }
        let intervals = a.interval.iter().map(|s| parse_interval(s)).collect::<CliResult<_>>()?;
        IntervalGrid::Explicit { intervals }
    };
    if let Some(c) = a.count_convention {
        cfg.count_convention = c.into();
    }
    if let Some(s) = a.scale_convention {
        cfg.scale_convention = s.into();
    }
    cfg.mixing_steps = a.mixing_steps;
    if let Some(r) = a.min_pass_rate {
        cfg.min_pass_rate = r;
    }
    Ok(cfg)
}

fn local_law(a: &LocalLawArgs, threads: usize, out: &mut dyn Write) -> CliResult<()> {
    let cfg = local_law_config(a)?;
    let dir = need(a.out.as_ref(), "out")?;
    let report = experiments::run_local_law(&cfg, threads)?;
    fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    write_file(&dir.join("report.json"), &report.to_json()?)?;
    write_file(&dir.join("summary.csv"), &report.summary_csv())?;
    let agg = &report.aggregate;
    writeln!(
        out,
        "{}: {}/{} interval checks passed (rate {:.4}, max relative deviation {:.4})",
        report.experiment, agg.passed, agg.evaluated, agg.pass_rate, agg.max_rel_dev
    )?;
    if agg.meets_threshold {
        Ok(())
    } else {
        Err(CliError::Threshold(format!(
            "pass rate {:.4} below threshold {}",
            agg.pass_rate, cfg.min_pass_rate
        )))
    }
}

#[derive(Serialize)]
struct FactorVerdict<'a> {
    exists: bool,
    reason: Option<&'a str>,
    ore_ryser: Option<bool>,
    edges: Option<usize>,
}

fn factor_check(a: &FactorCheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let g = graphs::load_edge_list(need(a.input.as_ref(), "in")?)?;
    let spec = FactorSpec::new(
        demands(need(a.fa.as_deref(), "fa")?, g.m(), "fa")?,
        demands(need(a.fb.as_deref(), "fb")?, g.n(), "fb")?,
    );
    if !spec.is_balanced() {
        let (sa, sb): (usize, usize) = (spec.fa.iter().sum(), spec.fb.iter().sum());
        return Err(bipspec::Error::Infeasible(format!("unbalanced: left demands sum to {sa}, right to {sb}")).into());
    }
    let ore_ryser = if g.m() <= ORE_RYSER_MAX_LEFT {
        Some(factors::ore_ryser_check(&g, &spec)?)
    } else {
        None
    };
    let search = factors::find_f_factor(&g, &spec)?;
    let verdict = match &search {
        FactorSearch::Found(f) => {
            if let Some(path) = &a.out {
                graphs::save_edge_list(f, path)?;
            }
            FactorVerdict {
                exists: true,
                reason: None,
                ore_ryser,
                edges: Some(f.edge_count()),
            }
        }
        FactorSearch::Absent(why) => FactorVerdict {
            exists: false,
            reason: Some(why.code()),
            ore_ryser,
            edges: None,
        },
    };
    if a.json {
        out.write_all(json_line(&verdict)?.as_bytes())?;
    } else if verdict.exists {
        writeln!(out, "factor exists")?;
    } else {
        writeln!(out, "no factor: {}", verdict.reason.unwrap_or("unknown"))?;
    }
    Ok(())
}

fn regularity(a: &RegularityArgs, threads: usize, out: &mut dyn Write) -> CliResult<()> {
    let est = experiments::estimate_regularity_probability(
        need(a.m, "m")?,
        need(a.n, "n")?,
        need(a.p, "p")?,
        need(a.trials, "trials")?,
        need(a.seed, "seed")?,
        threads,
    )?;
    if a.json {
        out.write_all(json_line(&est)?.as_bytes())?;
    } else {
        writeln!(out, "trials,hits,estimate,wilson_lo,wilson_hi")?;
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e}",
            est.trials, est.hits, est.estimate, est.wilson.lo, est.wilson.hi
        )?;
    }
    Ok(())
}

fn factor_freq(a: &FactorFreqArgs, threads: usize, out: &mut dyn Write) -> CliResult<()> {
    let r = experiments::regular_factor_frequency(
        need(a.m, "m")?,
        need(a.n, "n")?,
        need(a.p, "p")?,
        need(a.delta, "delta")?,
        need(a.trials, "trials")?,
        need(a.seed, "seed")?,
        threads,
    )?;
    if a.json {
        out.write_all(json_line(&r)?.as_bytes())?;
    } else {
        writeln!(out, "dl_prime,dr_prime,trials,found,frequency,wilson_lo,wilson_hi")?;
        writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e}",
            r.dl_prime, r.dr_prime, r.trials, r.found, r.frequency, r.wilson.lo, r.wilson.hi
        )?;
    }
    Ok(())
}

fn concentration(a: &ConcentrationArgs, threads: usize, out: &mut dyn Write) -> CliResult<()> {
    let function = need(a.function, "function")?;
    let window = match function {
        StatFunction::F1 => {
            let iv = parse_interval(need(a.interval.as_deref(), "interval")?)?;
            Some(WindowPair::new(iv, need(a.c, "c")?, WindowKind::Upper)?)
        }
        _ => None,
    };
    let natural = match (function, &window) {
        (StatFunction::F1, Some(w)) => w.slope(),
        (StatFunction::Identity | StatFunction::Abs, _) => 1.0,
        _ => 0.0,
    };
    let (name, f): (String, Box<dyn Fn(f64) -> f64 + Sync>) = match (function, window) {
        (StatFunction::F1, Some(w)) => (format!("f1 window on {}", w.interval()), Box::new(move |x| w.first(x))),
        (StatFunction::Identity, _) => ("identity".into(), Box::new(|x| x)),
        (StatFunction::Abs, _) => ("abs".into(), Box::new(f64::abs)),
        _ => ("constant".into(), Box::new(|_| 1.0)),
    };
    let cfg = TailConfig {
        m: need(a.m, "m")?,
        n: need(a.n, "n")?,
        p: need(a.p, "p")?,
        t_grid: parse_list(need(a.t.as_deref(), "t")?, "--t")?,
        trials: need(a.trials, "trials")?,
        seed: need(a.seed, "seed")?,
        lipschitz: a.lipschitz.unwrap_or(natural),
        bound_c: a.bound_c.unwrap_or(1.0),
        scale_convention: a.scale_convention.map_or(ScaleConvention::default(), Into::into),
        function: name,
    };
    let table = experiments::concentration_tail_check(&cfg, f, threads)?;
    if a.json {
        out.write_all(json_line(&table)?.as_bytes())?;
    } else {
        writeln!(out, "t,tail,bound")?;
        for r in &table.rows {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", r.t, r.tail, r.bound)?;
        }
    }
    Ok(())
}

fn rate_sweep(a: &RateSweepArgs, threads: usize, out: &mut dyn Write) -> CliResult<()> {
    let cfg = RateSweepConfig {
        ns: parse_list(need(a.ns.as_deref(), "ns")?, "--ns")?,
        alpha: need(a.alpha, "alpha")?,
        p: need(a.p, "p")?,
        interval: parse_interval(need(a.interval.as_deref(), "interval")?)?,
        trials: need(a.trials, "trials")?,
        seed: need(a.seed, "seed")?,
        count_convention: a.count_convention.map_or(CountConvention::default(), Into::into),
        scale_convention: a.scale_convention.map_or(ScaleConvention::default(), Into::into),
    };
    let k = a.noise_k.unwrap_or(2.0);
    let sweep = experiments::convergence_rate_sweep(&cfg, threads)?;
    if a.json {
        out.write_all(json_line(&sweep)?.as_bytes())?;
    } else {
        writeln!(out, "n,m,predicted,mean_count,abs_dev,rel_dev,rel_std_err")?;
        for r in &sweep.rows {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.m, r.predicted, r.mean_count, r.abs_dev, r.rel_dev, r.rel_std_err
            )?;
        }
    }
    if sweep.non_increasing_within(k) {
        Ok(())
    } else {
        Err(CliError::Threshold(format!(
            "relative deviation rises by more than {k} standard errors"
        )))
    }
}
