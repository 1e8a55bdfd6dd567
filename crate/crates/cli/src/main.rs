//! `bml`: run learning experiments, audit separability, inspect classes.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bml::classes::decision_list::{structure_count, DecisionListClass, MAX_ENUMERATED_N};
use bml::classfile::ClassSpec;
use bml::experiment::{
    memory_constant, workers_from_env, write_csv, Experiment, ExperimentConfig, KChoice, LearnerKind, OracleKind,
    Summary,
};
use bml::graph::density;
use bml::oracle::audit::{revalidate, AuditEntry};
use bml::oracle::{check_separability, ClassKind, SearchMode, Verdict};
use bml::rational::{fmt_rational, parse_rational, to_f64};
use bml::{Error, ExampleSubset, HypothesisClass, HypothesisSubset, Rational};

const EXIT_MISS: u8 = 1;
const EXIT_INPUT: u8 = 2;

/// Exhaustive audits enumerate every subset of H.
const EXHAUSTIVE_CLASS_CAP: usize = 20;
/// Largest |H|·|X| for which class-info prints the density table.
const TABLE_CAP: usize = 4096;

#[derive(Parser)]
#[command(name = "bml", version, about = "Bounded-memory learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded learning trials and write one CSV row per trial.
    Learn(LearnArgs),
    /// Check that every candidate set is tight or separable.
    CheckSeparability(CheckArgs),
    /// Print sizes and, for small classes, the density table.
    ClassInfo {
        #[arg(long)]
        class: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    General,
    Threshold,
    EqualPiece,
    DecisionList,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    BruteForce,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(clap::Args)]
struct LearnArgs {
    #[arg(long)]
    class: PathBuf,
    #[arg(long, value_enum)]
    learner: LearnerArg,
    #[arg(long)]
    epsilon: String,
    #[arg(long)]
    alpha: Option<String>,
    /// Repetition count, or `auto`.
    #[arg(long, default_value = "auto")]
    k: String,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "0")]
    noise: String,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "0.9")]
    min_success: String,
    /// Largest distance counted as a success (default 3·epsilon).
    #[arg(long)]
    accept: Option<String>,
    #[arg(long, value_enum, default_value = "brute-force")]
    oracle: OracleArg,
    /// Record wall time per trial in the `ms` column.
    #[arg(long)]
    timing: bool,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[arg(long)]
    class: PathBuf,
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    epsilon: String,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Number of random candidate sets in sampled mode.
    #[arg(long, default_value_t = 100)]
    budget: usize,
    /// Random regions tried per candidate set in sampled mode.
    #[arg(long, default_value_t = 256)]
    s_budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Witness log destination; standard output when absent.
    #[arg(long)]
    log: Option<PathBuf>,
}

fn read_class(path: &Path) -> Result<ClassSpec, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    ClassSpec::parse(&text)
}

fn rational(flag: &str, s: &str) -> Result<Rational, Error> {
    parse_rational(s).map_err(|e| Error::Input(format!("--{flag}: {e}")))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Input(format!("cannot create {}: {e}", path.display())))
}

fn io_err(e: io::Error) -> Error {
    Error::Input(format!("write failed: {e}"))
}

fn learn(a: LearnArgs) -> Result<u8, Error> {
    let class = read_class(&a.class)?;
    let learner = match a.learner {
        LearnerArg::General => LearnerKind::General,
        LearnerArg::Threshold => LearnerKind::Threshold,
        LearnerArg::EqualPiece => LearnerKind::EqualPiece,
        LearnerArg::DecisionList => LearnerKind::DecisionList,
    };
    let mut cfg = ExperimentConfig::new(class, learner, rational("epsilon", &a.epsilon)?);
    cfg.alpha = a.alpha.as_deref().map(|s| rational("alpha", s)).transpose()?;
    cfg.k = match a.k.as_str() {
        "auto" => KChoice::Auto,
        s => KChoice::Fixed(s.parse().map_err(|_| Error::Input(format!("--k must be an integer or `auto`, got `{s}`")))?),
    };
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.noise = rational("noise", &a.noise)?;
    cfg.accept = a.accept.as_deref().map(|s| rational("accept", s)).transpose()?;
    cfg.oracle = match a.oracle {
        OracleArg::BruteForce => OracleKind::BruteForce,
        OracleArg::Structured => OracleKind::Structured,
    };
    cfg.timing = a.timing;
    let min_success = to_f64(rational("min-success", &a.min_success)?);
    let auto = cfg.k == KChoice::Auto;
    let noisy = cfg.noise != Rational::from_integer(0);
    let exp = Experiment::new(cfg)?;
    let reports = exp.run(workers_from_env()?)?;

    // With the CSV on stdout, the human-readable lines go to stderr.
    let mut info: Box<dyn Write> = match &a.out {
        Some(path) => {
            write_csv(&reports, create(path)?)?;
            Box::new(io::stdout())
        }
        None => {
            write_csv(&reports, io::stdout().lock())?;
            Box::new(io::stderr())
        }
    };
    if let Some(k) = exp.k() {
        let how = match (auto, noisy) {
            (true, true) => " (auto, inflated by (1-2eta)^-2 for label noise)",
            (true, false) => " (auto)",
            _ => "",
        };
        writeln!(info, "k = {k}{how}").map_err(io_err)?;
    }
    let summary = Summary::of(&reports);
    writeln!(info, "{summary}").map_err(io_err)?;
    if let (Some(bound), Some(size), Some(alpha)) = (exp.iteration_bound(), exp.class_size(), exp.config().alpha) {
        writeln!(
            info,
            "iteration bound {bound}; memory constant C = bits*alpha^2/log2|H| = {:.3}",
            memory_constant(summary.max_bits_semantic, alpha, size)
        )
        .map_err(io_err)?;
    }
    Ok(if summary.success_rate() >= min_success { 0 } else { EXIT_MISS })
}

fn check(a: CheckArgs) -> Result<u8, Error> {
    let spec = read_class(&a.class)?;
    let alpha = rational("alpha", &a.alpha)?;
    let epsilon = rational("epsilon", &a.epsilon)?;
    let class = spec.enumerate()?;
    let h = class.len();
    let mut log: Box<dyn Write> = match &a.log {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout()),
    };
    let mut record = |t: BTreeSet<usize>, mode: SearchMode| -> Result<bool, Error> {
        let verdict = check_separability(class.as_ref(), &HypothesisSubset::Explicit(t.clone()), alpha, epsilon, mode)?;
        let entry = AuditEntry { t, verdict };
        let line = entry.to_string();
        // Every line is re-parsed and re-checked before it is trusted.
        revalidate(class.as_ref(), &line.parse()?, alpha, epsilon)?;
        writeln!(log, "{line}").map_err(io_err)?;
        Ok(entry.verdict == Verdict::Counterexample)
    };
    match a.mode {
        ModeArg::Exhaustive => {
            if h > EXHAUSTIVE_CLASS_CAP {
                return Err(Error::Input(format!("exhaustive audit needs |H| <= {EXHAUSTIVE_CLASS_CAP}, got {h}")));
            }
            for bits in 1u64..1 << h {
                let t: BTreeSet<usize> = (0..h).filter(|&i| bits >> i & 1 == 1).collect();
                if record(t.clone(), SearchMode::Exhaustive)? {
                    drop(record);
                    log.flush().map_err(io_err)?;
                    println!("counterexample: T={}", bml::class::fmt_set(t.iter()));
                    return Ok(EXIT_MISS);
                }
            }
            drop(record);
            log.flush().map_err(io_err)?;
            println!("verified: all {} non-empty subsets of H are tight or separable", (1u64 << h) - 1);
        }
        ModeArg::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            for i in 0..a.budget {
                let mut t: BTreeSet<usize> = (0..h).filter(|_| rng.gen()).collect();
                if t.is_empty() {
                    t.insert(rng.gen_range(0..h));
                }
                let mode = SearchMode::Sampled { seed: a.seed.wrapping_add(i as u64), budget: a.s_budget };
                if record(t.clone(), mode)? {
                    drop(record);
                    log.flush().map_err(io_err)?;
                    println!("no witness found for T={} (sampled search)", bml::class::fmt_set(t.iter()));
                    return Ok(EXIT_MISS);
                }
            }
            drop(record);
            log.flush().map_err(io_err)?;
            println!(
                "no counterexample found in {} sampled sets (sampled audit: absence is evidence, not proof)",
                a.budget
            );
        }
    }
    Ok(0)
}

fn class_info(path: &Path) -> Result<u8, Error> {
    let spec = read_class(path)?;
    let domain = spec.domain();
    println!("class: {}", spec.describe());
    println!("|X| = {}", domain.size());
    match spec.kind {
        ClassKind::Threshold => {
            let h = spec.n + 1;
            println!("|H| = {h}");
            println!("log2|H| = {:.4}", (h as f64).log2());
        }
        ClassKind::EqualPiece => {
            let c = spec.equal_piece()?;
            let count = c.count();
            println!("|H| = {count}");
            println!("log2|H| = {:.4}", (count as f64).log2());
        }
        ClassKind::DecisionList => {
            let n = spec.n as u32;
            let bound = structure_count(n);
            let log_bound = n as f64 * (n as f64).log2() + 2.0 * n as f64;
            if n <= MAX_ENUMERATED_N {
                let c = DecisionListClass::new(n)?;
                println!("|H| = {} lists ({} distinct functions)", c.len(), c.distinct_functions());
                println!("log2|H| = {:.4}", (c.len() as f64).log2());
            } else {
                println!("|H| <= n!*4^n = {bound} (not enumerated)");
                println!("log2|H| <= {:.4}", (bound as f64).log2());
            }
            println!("bound: log2|H| <= n log2 n + 2n = {log_bound:.4}");
        }
    }
    if let Ok(class) = spec.enumerate() {
        if class.len() * domain.size() as usize <= TABLE_CAP {
            println!("density table: hypothesis, d(X,{{h}}), labels");
            let all = ExampleSubset::all(domain);
            for h in 0..class.len() {
                let d = density(class.as_ref(), &all, &HypothesisSubset::explicit([h]))?;
                let row: String = domain.points().map(|x| if class.evaluate(h, x) { '1' } else { '0' }).collect();
                println!("{h}\t{}\t{}\t{row}", class.describe(h), fmt_rational(d));
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Learn(a) => learn(a),
        Command::CheckSeparability(a) => check(a),
        Command::ClassInfo { class } => class_info(&class),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Input(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_MISS)
        }
    }
}
