//! Seeded batches of learning trials and their CSV records.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::class::HypothesisClass;
use crate::classes::decision_list::{DecisionList, DlLearner};
use crate::classes::equal_piece::{EqualPieceClass, EqualPieceLearner};
use crate::classes::threshold::{ThresholdClass, ThresholdLearner};
use crate::classfile::ClassSpec;
use crate::error::{input, Error, Result};
use crate::general::{auto_k, iteration_bound, run_general, BruteForceOracle, GeneralLearner, SeparationOracle, ThresholdOracle};
use crate::graph::distance;
use crate::oracle::{ClassKind, SearchMode};
use crate::rational::{int, ratio, to_f64, Rational};
use crate::runtime::learner::{account_memory, MemoryReport, Streaming};
use crate::runtime::stream::Stream;
use crate::runtime::subroutines::Noise;
use crate::runtime::DEFAULT_STEP_CAP;

/// Confidence used when sizing `k` automatically.
pub const AUTO_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    General,
    Threshold,
    EqualPiece,
    DecisionList,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::General => "general",
            LearnerKind::Threshold => "threshold",
            LearnerKind::EqualPiece => "equal-piece",
            LearnerKind::DecisionList => "decision-list",
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(LearnerKind::General),
            "threshold" => Ok(LearnerKind::Threshold),
            "equal-piece" => Ok(LearnerKind::EqualPiece),
            "decision-list" => Ok(LearnerKind::DecisionList),
            _ => input(format!("unknown learner `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    BruteForce,
    Structured,
}

impl std::str::FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute-force" => Ok(OracleKind::BruteForce),
            "structured" => Ok(OracleKind::Structured),
            _ => input(format!("unknown oracle `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Auto,
    Fixed(u64),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub class: ClassSpec,
    pub learner: LearnerKind,
    pub oracle: OracleKind,
    pub epsilon: Rational,
    pub alpha: Option<Rational>,
    pub k: KChoice,
    pub trials: u64,
    pub seed: u64,
    pub noise: Rational,
    /// Largest distance counted as a success; `3ε` when absent.
    pub accept: Option<Rational>,
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(class: ClassSpec, learner: LearnerKind, epsilon: Rational) -> Self {
        ExperimentConfig {
            class,
            learner,
            oracle: OracleKind::BruteForce,
            epsilon,
            alpha: None,
            k: KChoice::Auto,
            trials: 1,
            seed: 0,
            noise: int(0),
            accept: None,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialReport {
    pub trial: u64,
    pub seed: u64,
    pub learner: String,
    pub class: String,
    pub epsilon: Rational,
    pub alpha: Option<Rational>,
    pub k: Option<u64>,
    pub samples: u64,
    pub bits_semantic: usize,
    pub bits_physical: usize,
    pub distance: Rational,
    pub success: bool,
    pub ms: u64,
    pub iterations: Option<usize>,
    /// Why the trial produced no hypothesis, if it failed outright.
    pub error: Option<String>,
}

/// The parts of a configuration resolved once for every trial.
pub struct Experiment {
    cfg: ExperimentConfig,
    noise: Noise,
    k: Option<u64>,
    enumerated: Option<Arc<dyn HypothesisClass>>,
    general: Option<Arc<dyn SeparationOracle>>,
}

struct Shared(Arc<dyn SeparationOracle>);

impl SeparationOracle for Shared {
    fn respond(&self, t: &fixedbitset::FixedBitSet) -> Result<crate::oracle::OracleResponse> {
        self.0.respond(t)
    }

    fn floors(&self) -> crate::oracle::WitnessFloors {
        self.0.floors()
    }
}

struct Outcome {
    distance: Rational,
    samples: u64,
    bits_semantic: usize,
    bits_physical: usize,
    iterations: Option<usize>,
}

fn outcome<O>(r: &MemoryReport<O>, distance: Rational) -> Outcome {
    Outcome {
        distance,
        samples: r.samples,
        bits_semantic: r.max_semantic_bits,
        bits_physical: r.max_bits,
        iterations: None,
    }
}

impl Experiment {
    /// Checks the configuration and sizes `k`; every input error surfaces here.
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        if cfg.trials == 0 {
            return input("at least one trial is required");
        }
        if cfg.epsilon <= int(0) || cfg.epsilon >= int(1) {
            return input("epsilon must lie in (0, 1)");
        }
        let noise = Noise::new(cfg.noise)?;
        let kind = cfg.class.kind;
        let mut enumerated = None;
        let mut general = None;
        let mut k = match cfg.k {
            KChoice::Fixed(0) => return input("k must be at least 1"),
            KChoice::Fixed(k) => Some(k),
            KChoice::Auto => None,
        };
        match (cfg.learner, kind) {
            (LearnerKind::General, _) => {
                let Some(alpha) = cfg.alpha else { return input("the general learner needs --alpha") };
                let class = cfg.class.enumerate()?;
                let oracle: Arc<dyn SeparationOracle> = match (cfg.oracle, kind) {
                    (OracleKind::BruteForce, _) => {
                        Arc::new(BruteForceOracle::new(class.clone(), alpha, cfg.epsilon, SearchMode::Exhaustive)?)
                    }
                    (OracleKind::Structured, ClassKind::Threshold) => {
                        Arc::new(ThresholdOracle::new(cfg.class.threshold()?, cfg.epsilon)?)
                    }
                    (OracleKind::Structured, other) => {
                        return input(format!("no structured oracle for {other:?}; use brute-force"))
                    }
                };
                let base = match k {
                    Some(k) => k,
                    None => noise.inflate(auto_k(class.len(), alpha, AUTO_CONFIDENCE)?),
                };
                k = Some(base);
                GeneralLearner::new(class.clone(), Shared(oracle.clone()), alpha, cfg.epsilon, base)?;
                enumerated = Some(class);
                general = Some(oracle);
            }
            (LearnerKind::Threshold, ClassKind::Threshold) => {
                ThresholdLearner::new(cfg.class.threshold()?, cfg.epsilon)?;
                k = None;
            }
            (LearnerKind::EqualPiece, ClassKind::EqualPiece) => {
                EqualPieceLearner::new(cfg.class.equal_piece()?, cfg.epsilon, cfg.alpha)?;
                k = None;
            }
            (LearnerKind::DecisionList, ClassKind::DecisionList) => {
                let l = DlLearner::new(cfg.class.n as u32, cfg.epsilon, k, cfg.noise)?;
                k = Some(l.k_estimate());
            }
            (l, c) => return input(format!("learner {} does not apply to {c:?} classes", l.name())),
        }
        Ok(Experiment { cfg, noise, k, enumerated, general })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Repetition count in use, when the learner has one.
    pub fn k(&self) -> Option<u64> {
        self.k
    }

    pub fn accept(&self) -> Rational {
        self.cfg.accept.unwrap_or(self.cfg.epsilon * 3)
    }

    /// Seed of trial `id`.
    pub fn trial_seed(&self, id: u64) -> u64 {
        self.cfg.seed.wrapping_add(id)
    }

    /// Target RNG: a separate ChaCha stream so it never replays the example stream.
    fn target_rng(&self, seed: u64) -> ChaCha8Rng {
        let mixed = seed ^ self.cfg.class.seed_class.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(mixed);
        rng.set_stream(1);
        rng
    }

    fn attempt(&self, seed: u64) -> Result<Outcome> {
        let cfg = &self.cfg;
        let mut rng = self.target_rng(seed);
        match cfg.learner {
            LearnerKind::General => {
                let class = self.enumerated.clone().expect("resolved in new");
                let oracle = Shared(self.general.clone().expect("resolved in new"));
                let alpha = cfg.alpha.expect("checked in new");
                let f = rng.gen_range(0..class.len());
                let learner = GeneralLearner::new(class.clone(), oracle, alpha, cfg.epsilon, self.k.expect("sized"))?
                    .with_noise(self.noise);
                let mut stream = Stream::for_class(class.clone(), f, cfg.noise, seed)?;
                let r = run_general(learner, &mut stream)?;
                let mut o = outcome(&r, distance(class.as_ref(), r.output.hypothesis, f)?);
                o.iterations = Some(r.output.iterations);
                Ok(o)
            }
            LearnerKind::Threshold => {
                let class: ThresholdClass = cfg.class.threshold()?;
                let f = rng.gen_range(0..=class.n()) as usize;
                let mut stream = Stream::for_class(Arc::new(class), f, cfg.noise, seed)?;
                let learner = Streaming(ThresholdLearner::new(class, cfg.epsilon)?);
                let r = account_memory(&learner, &mut stream, DEFAULT_STEP_CAP)?;
                Ok(outcome(&r, ratio(r.output.abs_diff(f) as i64, class.n() as i64)))
            }
            LearnerKind::EqualPiece => {
                let class: EqualPieceClass = cfg.class.equal_piece()?;
                let most = (int(1) / class.p()).floor().to_integer().clamp(1, 2) as usize;
                let starts = class.random(rng.gen_range(1..=most), &mut rng)?;
                let mut stream = Stream::new(class.domain(), class.target(&starts)?, cfg.noise, seed)?;
                let learner = Streaming(EqualPieceLearner::new(class, cfg.epsilon, cfg.alpha)?);
                let r = account_memory(&learner, &mut stream, DEFAULT_STEP_CAP)?;
                Ok(outcome(&r, class.disagreement(&r.output, &class.values(&starts))))
            }
            LearnerKind::DecisionList => {
                let n = cfg.class.n as u32;
                let f = DecisionList::random(n, &mut rng);
                let mut stream = Stream::new(cfg.class.domain(), f.target(), cfg.noise, seed)?;
                let learner = Streaming(DlLearner::new(n, cfg.epsilon, self.k, cfg.noise)?);
                let r = account_memory(&learner, &mut stream, DEFAULT_STEP_CAP)?;
                Ok(outcome(&r, r.output.distance(&f)))
            }
        }
    }

    /// Runs trial `id`. Learner failures are recorded as unsuccessful trials.
    pub fn run_trial(&self, id: u64) -> TrialReport {
        let seed = self.trial_seed(id);
        let started = Instant::now();
        let result = self.attempt(seed);
        let ms = if self.cfg.timing { started.elapsed().as_millis() as u64 } else { 0 };
        let (o, error) = match result {
            Ok(o) => (o, None),
            Err(e) => (
                Outcome { distance: int(1), samples: 0, bits_semantic: 0, bits_physical: 0, iterations: None },
                Some(e.to_string()),
            ),
        };
        TrialReport {
            trial: id,
            seed,
            learner: self.cfg.learner.name().to_string(),
            class: self.cfg.class.describe(),
            epsilon: self.cfg.epsilon,
            alpha: self.cfg.alpha,
            k: self.k,
            samples: o.samples,
            bits_semantic: o.bits_semantic,
            bits_physical: o.bits_physical,
            success: error.is_none() && o.distance <= self.accept(),
            distance: o.distance,
            ms,
            iterations: o.iterations,
            error,
        }
    }

    /// Runs every trial on `workers` threads; reports come back in trial order.
    pub fn run(&self, workers: usize) -> Result<Vec<TrialReport>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(|| (0..self.cfg.trials).into_par_iter().map(|id| self.run_trial(id)).collect()))
    }

    /// `⌈ln|H| / ln(1/(1−α²/2))⌉` for the general learner.
    pub fn iteration_bound(&self) -> Option<u64> {
        Some(iteration_bound(self.enumerated.as_ref()?.len(), self.cfg.alpha?))
    }

    pub fn class_size(&self) -> Option<usize> {
        self.enumerated.as_ref().map(|c| c.len())
    }
}

/// Worker count from `BML_WORKERS`, else the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var("BML_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => input(format!("BML_WORKERS must be a positive integer, got `{v}`")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

pub const CSV_HEADER: [&str; 9] =
    ["trial", "seed", "samples", "bits_semantic", "bits_physical", "distance_num", "distance_den", "success", "ms"];

pub fn write_csv<W: Write>(reports: &[TrialReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Input(format!("cannot write CSV: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.samples.to_string(),
            r.bits_semantic.to_string(),
            r.bits_physical.to_string(),
            r.distance.numer().to_string(),
            r.distance.denom().to_string(),
            u8::from(r.success).to_string(),
            r.ms.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Input(format!("cannot write CSV: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub successes: usize,
    pub median_samples: u64,
    pub max_bits_semantic: usize,
    pub max_bits_physical: usize,
    pub max_iterations: Option<usize>,
    pub failures: usize,
}

impl Summary {
    pub fn of(reports: &[TrialReport]) -> Self {
        let mut samples: Vec<u64> = reports.iter().map(|r| r.samples).collect();
        samples.sort_unstable();
        Summary {
            trials: reports.len(),
            successes: reports.iter().filter(|r| r.success).count(),
            median_samples: samples.get(samples.len() / 2).copied().unwrap_or(0),
            max_bits_semantic: reports.iter().map(|r| r.bits_semantic).max().unwrap_or(0),
            max_bits_physical: reports.iter().map(|r| r.bits_physical).max().unwrap_or(0),
            max_iterations: reports.iter().filter_map(|r| r.iterations).max(),
            failures: reports.iter().filter(|r| r.error.is_some()).count(),
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes as f64 / self.trials as f64
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "success {}/{} ({:.3}), median samples {}, max bits {} semantic / {} physical",
            self.successes,
            self.trials,
            self.success_rate(),
            self.median_samples,
            self.max_bits_semantic,
            self.max_bits_physical
        )?;
        if let Some(i) = self.max_iterations {
            write!(f, ", max iterations {i}")?;
        }
        if self.failures > 0 {
            write!(f, ", {} trials aborted", self.failures)?;
        }
        Ok(())
    }
}

/// `C = bits·α² / log₂|H|`, the constant a memory reading implies.
pub fn memory_constant(bits: usize, alpha: Rational, class_size: usize) -> f64 {
    let a = to_f64(alpha);
    bits as f64 * a * a / (class_size as f64).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, learner: LearnerKind, eps: Rational) -> ExperimentConfig {
        ExperimentConfig::new(ClassSpec::parse(text).unwrap(), learner, eps)
    }

    #[test]
    fn csv_is_reproducible() {
        let mut c = cfg("kind = threshold\nn = 256", LearnerKind::Threshold, ratio(1, 10));
        c.trials = 6;
        c.seed = 40;
        let e = Experiment::new(c).unwrap();
        let render = |w| {
            let mut buf = Vec::new();
            write_csv(&e.run(w).unwrap(), &mut buf).unwrap();
            buf
        };
        let a = render(1);
        assert_eq!(a, render(3));
        assert!(String::from_utf8(a).unwrap().starts_with("trial,seed,samples,bits_semantic"));
    }

    #[test]
    fn mismatched_learner_is_an_input_error() {
        let c = cfg("kind = threshold\nn = 8", LearnerKind::DecisionList, ratio(1, 10));
        assert!(matches!(Experiment::new(c), Err(Error::Input(_))));
        let mut z = cfg("kind = threshold\nn = 8", LearnerKind::Threshold, ratio(1, 10));
        z.trials = 0;
        assert!(matches!(Experiment::new(z), Err(Error::Input(_))));
        let g = cfg("kind = threshold\nn = 8", LearnerKind::General, ratio(1, 10));
        assert!(matches!(Experiment::new(g), Err(Error::Input(_))));
    }

    #[test]
    fn noise_inflates_auto_k() {
        let mut c = cfg("kind = threshold\nn = 16", LearnerKind::General, ratio(1, 4));
        c.alpha = Some(ratio(3, 10));
        let plain = Experiment::new(c.clone()).unwrap().k().unwrap();
        c.noise = ratio(1, 10);
        let noisy = Experiment::new(c).unwrap().k().unwrap();
        assert_eq!(noisy, (plain as f64 / 0.64).ceil() as u64);
    }

    #[test]
    fn general_trials_report_iterations() {
        let mut c = cfg("kind = threshold\nn = 16", LearnerKind::General, ratio(1, 4));
        c.alpha = Some(ratio(3, 10));
        c.trials = 3;
        let e = Experiment::new(c).unwrap();
        for r in e.run(1).unwrap() {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!(r.iterations.unwrap() as u64 <= e.iteration_bound().unwrap());
        }
    }
}
