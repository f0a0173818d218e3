//! Command-line front end: `state-info`, `entropy-curve`, `qber-curve` and
//! `simulate`.
//!
//! Exit codes: 0 on success, 2 for usage or validation problems, 3 for
//! numeric or I/O failures at run time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::alphabet::{alphabet_entropy, AlphabetSize};
use crate::eavesdrop::{
    analytic_qber, lambda_for_mean, CloneAttack, Estimator, ResendSource, DEFAULT_SOLVER_TOLERANCE,
};
use crate::error::Error;
use crate::photon_stats::{build_distribution, max_info, TmccState};
use crate::sim::{Attack, Session, SessionConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

// Errors raised after the inputs were validated are numeric failures.
fn runtime(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "tmcc-qkd",
    version,
    about = "Photon-number key distribution over TMCC beams: statistics, capacities, QBER and Monte Carlo sessions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Photon statistics of a single TMCC state
    StateInfo(StateInfoArgs),
    /// Alphabet entropies (bits per measurement) over a sweep of lambda
    EntropyCurve(EntropyCurveArgs),
    /// Analytic QBER of the cloning attack over a sweep of lambda
    QberCurve(QberCurveArgs),
    /// Run a seeded Monte Carlo key-distribution session
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct StateInfoArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XAxis {
    /// Points equally spaced in lambda
    Lambda,
    /// Points equally spaced in mean photon number between the means at the bounds
    Mean,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 61)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = XAxis::Lambda)]
    pub x_axis: XAxis,
}

#[derive(Debug, Args)]
pub struct EntropyCurveArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Columns to emit, any of 2, 4, 8, max
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,max")]
    pub alphabets: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Tmcc,
    Poisson,
}

impl From<SourceArg> for ResendSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Tmcc => ResendSource::Tmcc,
            SourceArg::Poisson => ResendSource::Poisson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    PaperLiteral,
    Weighted,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::PaperLiteral => Estimator::PaperLiteral,
            EstimatorArg::Weighted => Estimator::ProbabilityWeighted,
        }
    }
}

#[derive(Debug, Args)]
pub struct QberCurveArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = SourceArg::Tmcc)]
    pub source: SourceArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Weighted)]
    pub estimator: EstimatorArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub slots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// none, clone-tmcc or clone-poisson
    #[arg(long)]
    pub attack: Option<String>,
    /// Plain `key = value` file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; the result does not depend on this
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// Also emit per-slot records as CSV
    #[arg(long)]
    pub dump: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, writing to `--out` or to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::StateInfo(args) => {
            let text = state_info(args.lambda)?;
            emit(args.out.as_deref(), stdout, &text)
        }
        Command::EntropyCurve(args) => {
            let csv = entropy_curve(&args)?;
            emit(args.out.as_deref(), stdout, &csv)
        }
        Command::QberCurve(args) => {
            let csv = qber_curve(&args)?;
            emit(args.out.as_deref(), stdout, &csv)
        }
        Command::Simulate(args) => simulate(&args, stdout),
    }
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn state(lambda: f64) -> Result<TmccState, CliError> {
    TmccState::new(lambda).map_err(usage)
}

pub fn state_info(lambda: f64) -> Result<String, CliError> {
    let state = state(lambda)?;
    let dist = build_distribution(&state).map_err(runtime)?;
    let mean = dist.mean();
    let variance = dist.variance();
    let q = if mean > 0.0 {
        format!("{:.6}", (variance - mean) / mean)
    } else {
        "undefined".to_string()
    };
    let bits = max_info(&state).map_err(runtime)?;
    let mut s = String::new();
    writeln!(s, "lambda: {lambda:.6}").unwrap();
    writeln!(s, "mean: {mean:.6}").unwrap();
    writeln!(s, "variance: {variance:.6}").unwrap();
    writeln!(s, "mandel_q: {q}").unwrap();
    writeln!(s, "max_info_bits: {bits:.6}").unwrap();
    writeln!(s, "n_max: {}", dist.n_max()).unwrap();
    writeln!(s, "tail_mass: {:e}", dist.tail_mass()).unwrap();
    Ok(s)
}

/// Sweep points as `(lambda, mean)` pairs in sweep order.
pub fn sweep_points(sweep: &SweepArgs) -> Result<Vec<(f64, f64)>, CliError> {
    let (lo, hi) = (sweep.lambda_min, sweep.lambda_max);
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo >= hi {
        return Err(CliError::Usage(format!(
            "sweep needs 0 <= lambda-min < lambda-max, got {lo} and {hi}"
        )));
    }
    if sweep.points < 2 {
        return Err(CliError::Usage("sweep needs at least 2 points".into()));
    }
    let mean_at = |l: f64| -> Result<f64, CliError> {
        Ok(build_distribution(&state(l)?).map_err(runtime)?.mean())
    };
    let (mean_lo, mean_hi) = (mean_at(lo)?, mean_at(hi)?);
    let last = (sweep.points - 1) as f64;
    let grid = |a: f64, b: f64, i: usize| {
        if i == sweep.points - 1 {
            b
        } else {
            a + (b - a) * i as f64 / last
        }
    };
    par_map(&(0..sweep.points).collect::<Vec<_>>(), |&i| {
        match sweep.x_axis {
            XAxis::Lambda => {
                let l = grid(lo, hi, i);
                Ok((l, mean_at(l)?))
            }
            XAxis::Mean => {
                let target = grid(mean_lo, mean_hi, i);
                let l = match i {
                    0 => lo,
                    _ if i == sweep.points - 1 => hi,
                    _ => lambda_for_mean(target, 1e-12).map_err(runtime)?,
                };
                Ok((l, mean_at(l)?))
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EntropyColumn {
    Alphabet(AlphabetSize),
    Max,
}

fn entropy_columns(names: &[String]) -> Result<Vec<EntropyColumn>, CliError> {
    let mut cols = Vec::new();
    for name in names {
        let col = match name.trim() {
            "max" => EntropyColumn::Max,
            other => {
                let m: usize = other
                    .parse()
                    .map_err(|_| CliError::Usage(format!("unknown alphabet column '{other}'")))?;
                EntropyColumn::Alphabet(AlphabetSize::try_from(m).map_err(usage)?)
            }
        };
        if !cols.contains(&col) {
            cols.push(col);
        }
    }
    // fixed column order H2, H4, H8, Hmax
    cols.sort_by_key(|c| match c {
        EntropyColumn::Alphabet(size) => size.letters(),
        EntropyColumn::Max => usize::MAX,
    });
    Ok(cols)
}

pub fn entropy_curve(args: &EntropyCurveArgs) -> Result<String, CliError> {
    let cols = entropy_columns(&args.alphabets)?;
    let points = sweep_points(&args.sweep)?;
    let rows = par_map(&points, |&(lambda, mean)| {
        let state = state(lambda)?;
        let mut row = format!("{lambda:.6},{mean:.6}");
        for col in &cols {
            let h = match col {
                EntropyColumn::Alphabet(size) => alphabet_entropy(&state, *size),
                EntropyColumn::Max => max_info(&state),
            }
            .map_err(runtime)?;
            write!(row, ",{h:.6}").unwrap();
        }
        Ok(row)
    })?;
    let mut csv = String::from("lambda,mean");
    for col in &cols {
        match col {
            EntropyColumn::Alphabet(size) => write!(csv, ",H{}", size.letters()).unwrap(),
            EntropyColumn::Max => csv.push_str(",Hmax"),
        }
    }
    csv.push('\n');
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    Ok(csv)
}

pub fn qber_curve(args: &QberCurveArgs) -> Result<String, CliError> {
    let size = AlphabetSize::try_from(args.m).map_err(usage)?;
    let attack = CloneAttack::new(args.source.into());
    let estimator: Estimator = args.estimator.into();
    let points = sweep_points(&args.sweep)?;
    let rows = par_map(&points, |&(lambda, mean)| {
        let report = analytic_qber(&state(lambda)?, size, attack, estimator).map_err(runtime)?;
        let hamming = report.p_err_per_bit_hamming.unwrap_or(f64::NAN);
        Ok(format!(
            "{lambda:.6},{mean:.6},{:.6},{:.6},{hamming:.6}",
            report.p_err, report.p_err_per_bit
        ))
    })?;
    let mut csv = String::from("lambda,mean,p_err_letter,p_err_bit_eq14,p_err_bit_hamming\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    Ok(csv)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {}: expected 'key = value'",
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_attack(s: &str) -> Result<Attack, CliError> {
    match s {
        "none" => Ok(Attack::None),
        "clone-tmcc" => Ok(Attack::Clone(ResendSource::Tmcc)),
        "clone-poisson" => Ok(Attack::Clone(ResendSource::Poisson)),
        other => Err(CliError::Usage(format!(
            "unknown attack '{other}' (expected none, clone-tmcc or clone-poisson)"
        ))),
    }
}

fn attack_name(a: Attack) -> &'static str {
    match a {
        Attack::None => "none",
        Attack::Clone(ResendSource::Tmcc) => "clone-tmcc",
        Attack::Clone(ResendSource::Poisson) => "clone-poisson",
    }
}

/// Merges the config file (if any) with command-line flags.
pub fn session_config(args: &SimulateArgs) -> Result<SessionConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    if let Some(key) = file
        .keys()
        .find(|k| !matches!(k.as_str(), "lambda" | "m" | "slots" | "seed" | "attack"))
    {
        return Err(CliError::Usage(format!("unknown config key '{key}'")));
    }
    fn from_file<T: std::str::FromStr>(
        file: &BTreeMap<String, String>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        file.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("config key '{key}': bad value '{v}'")))
            })
            .transpose()
    }

    let lambda = match args.lambda {
        Some(v) => v,
        None => from_file(&file, "lambda")?
            .ok_or_else(|| CliError::Usage("--lambda is required".into()))?,
    };
    let m = match args.m {
        Some(v) => v,
        None => from_file(&file, "m")?.unwrap_or(2),
    };
    let slots = match args.slots {
        Some(v) => v,
        None => from_file(&file, "slots")?.unwrap_or(100_000),
    };
    let seed = match args.seed {
        Some(v) => v,
        None => from_file(&file, "seed")?.unwrap_or(0),
    };
    let attack = match args
        .attack
        .as_deref()
        .or(file.get("attack").map(String::as_str))
    {
        Some(a) => parse_attack(a)?,
        None => Attack::None,
    };
    let config = SessionConfig {
        lambda,
        alphabet_size: AlphabetSize::try_from(m).map_err(usage)?,
        slots,
        seed,
        attack,
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

pub fn simulate_report(session: &Session, shards: usize) -> Result<String, CliError> {
    let config = session.config();
    let result = session.run_sharded(shards);
    let mut s = String::new();
    writeln!(s, "lambda: {:.6}", config.lambda).unwrap();
    writeln!(s, "alphabet_size: {}", config.alphabet_size).unwrap();
    writeln!(s, "center: {}", result.center).unwrap();
    writeln!(s, "slots: {}", result.slots).unwrap();
    writeln!(s, "seed: {}", config.seed).unwrap();
    writeln!(s, "attack: {}", attack_name(config.attack)).unwrap();
    writeln!(s, "letter_error_rate: {:.6}", result.letter_error_rate).unwrap();
    writeln!(s, "bit_error_rate_eq14: {:.6}", result.bit_error_rate_eq14).unwrap();
    writeln!(
        s,
        "bit_error_rate_hamming: {:.6}",
        result.bit_error_rate_hamming
    )
    .unwrap();
    let freq: Vec<String> = result
        .empirical_letter_freq
        .iter()
        .map(|f| format!("{f:.6}"))
        .collect();
    writeln!(s, "empirical_letter_freq: {}", freq.join(",")).unwrap();
    writeln!(s, "empirical_mean: {:.6}", result.empirical_mean).unwrap();
    match result.empirical_mandel_q {
        Some(q) => writeln!(s, "empirical_mandel_q: {q:.6}").unwrap(),
        None => writeln!(s, "empirical_mandel_q: undefined").unwrap(),
    }
    if let Attack::Clone(source) = config.attack {
        let state = TmccState::new(config.lambda).map_err(runtime)?;
        let attack =
            CloneAttack::with_tolerance(source, DEFAULT_SOLVER_TOLERANCE).map_err(runtime)?;
        let analytic = analytic_qber(
            &state,
            config.alphabet_size,
            attack,
            Estimator::ProbabilityWeighted,
        )
        .map_err(runtime)?;
        let p = analytic.p_err;
        let se = (p * (1.0 - p) / result.slots as f64).sqrt();
        writeln!(s, "analytic_letter_error_rate: {p:.6}").unwrap();
        writeln!(s, "binomial_standard_error: {se:.6}").unwrap();
    }
    Ok(s)
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = session_config(args)?;
    let session = Session::new(config).map_err(runtime)?;
    let empty = session.spec().empty_letters();
    if !empty.is_empty() {
        eprintln!(
            "warning: letters {empty:?} have no photon-number support at center {}",
            session.spec().center()
        );
    }
    let report = simulate_report(&session, args.shards)?;
    if !args.dump {
        return emit(args.out.as_deref(), stdout, &report);
    }
    // report on stdout; per-slot CSV to --out, or after the report
    stdout.write_all(report.as_bytes())?;
    let mut sink: Box<dyn Write + '_> = match &args.out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::BufWriter::new(&mut *stdout)),
    };
    writeln!(sink, "slot,n_alice,n_bob,letter_alice,letter_bob")?;
    for r in session.records(0..config.slots) {
        writeln!(
            sink,
            "{},{},{},{},{}",
            r.slot, r.n_alice, r.n_bob, r.letter_alice, r.letter_bob
        )?;
    }
    sink.flush()?;
    Ok(())
}

// Order-preserving parallel map over a slice.
fn par_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>, CliError>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U, CliError> + Sync,
{
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| scope.spawn(move || c.iter().map(f).collect::<Result<Vec<U>, CliError>>()))
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().expect("sweep worker panicked")?);
        }
        Ok(out)
    })
}
