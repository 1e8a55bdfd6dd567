//! The oracle-driven learner for arbitrary finite classes.
//!
//! The candidate set `T` starts as all of `H`. Each round asks an oracle
//! whether `T` is tight or separated: a tight center is tested with
//! Is-close and either returned or has its ball removed; a separation
//! witness is resolved with one Estimate call that decides which side
//! cannot contain the target.

use std::collections::BTreeSet;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::class::{HypothesisClass, HypothesisSubset};
use crate::classes::threshold::{Interval, ThresholdClass};
use crate::domain::DomainSpec;
use crate::error::{input, Error, Result};
use crate::graph::{check_alpha, check_epsilon, HypothesisGraph};
use crate::oracle::separability::{find_region, Criterion, MaskGraph};
use crate::oracle::structured::{threshold_floors, threshold_response};
use crate::oracle::{localize_witness, validate_response, OracleResponse, SearchMode, SeparationWitness, WitnessFloors};
use crate::rational::{bits_for, int, to_f64, Rational};
use crate::runtime::bits::{BitReader, BitWriter};
use crate::runtime::learner::{
    account_memory, run_sq, Action, EstimateMode, MemoryReport, Outcome, Plan, PlanRegion, Planner, Predicate,
    SqRun, Streaming,
};
use crate::runtime::sq::SqOracle;
use crate::runtime::stream::Stream;
use crate::runtime::subroutines::{estimate_cap, Noise};

/// Answers tightness/separation queries about a candidate set.
pub trait SeparationOracle: Send + Sync {
    fn respond(&self, t: &FixedBitSet) -> Result<OracleResponse>;
    /// Floors every separated response meets.
    fn floors(&self) -> WitnessFloors;
}

/// Searches the materialised hypotheses graph: a tight center if there is
/// one, else the first region whose localised witness meets the floors.
pub struct BruteForceOracle {
    class: Arc<dyn HypothesisClass>,
    graph: HypothesisGraph,
    masks: MaskGraph,
    alpha: Rational,
    epsilon: Rational,
    mode: SearchMode,
}

impl BruteForceOracle {
    pub fn new(class: Arc<dyn HypothesisClass>, alpha: Rational, epsilon: Rational, mode: SearchMode) -> Result<Self> {
        check_alpha(alpha)?;
        check_epsilon(epsilon)?;
        let graph = HypothesisGraph::new(class.as_ref())?;
        let masks = MaskGraph::new(&graph, class.domain())?;
        Ok(BruteForceOracle { class, graph, masks, alpha, epsilon, mode })
    }

    pub fn graph(&self) -> &HypothesisGraph {
        &self.graph
    }
}

impl SeparationOracle for BruteForceOracle {
    fn respond(&self, t: &FixedBitSet) -> Result<OracleResponse> {
        if t.count_ones(..) == 0 {
            return input("oracle queried on an empty set");
        }
        if let Some(h) = self.graph.tight_center(t, self.alpha, self.epsilon) {
            return Ok(OracleResponse::Tight(h));
        }
        let members: Vec<usize> = t.ones().collect();
        let crit = Criterion { alpha: self.alpha, local: true };
        let s = find_region(&self.masks, &members, crit, self.mode)
            .ok_or_else(|| Error::Contract(format!("T of size {} is neither tight nor separable", members.len())))?;
        let w = localize_witness(self.class.as_ref(), &s, &HypothesisSubset::explicit(members), self.alpha)?;
        Ok(OracleResponse::Separated(w))
    }

    fn floors(&self) -> WitnessFloors {
        WitnessFloors::localized(self.alpha)
    }
}

/// The interval oracle for thresholds; `T` must stay an interval.
pub struct ThresholdOracle {
    class: ThresholdClass,
    epsilon: Rational,
}

impl ThresholdOracle {
    pub fn new(class: ThresholdClass, epsilon: Rational) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(ThresholdOracle { class, epsilon })
    }
}

impl SeparationOracle for ThresholdOracle {
    fn respond(&self, t: &FixedBitSet) -> Result<OracleResponse> {
        let (Some(lo), Some(hi)) = (t.ones().next(), t.ones().last()) else {
            return input("oracle queried on an empty set");
        };
        if t.count_ones(..) != hi - lo + 1 {
            return input("threshold oracle needs an interval of hypotheses");
        }
        threshold_response(self.class.n(), Interval { lo: lo as u64, hi: hi as u64 }, self.epsilon)
    }

    fn floors(&self) -> WitnessFloors {
        threshold_floors(self.epsilon)
    }
}

/// `⌈ln|H| / ln(1/(1−α²/2))⌉`: rounds after which `T` has at most one member.
pub fn iteration_bound(class_size: usize, alpha: Rational) -> u64 {
    if class_size <= 1 {
        return 0;
    }
    let a = to_f64(alpha);
    let shrink = -(1.0 - a * a / 2.0).ln();
    ((class_size as f64).ln() / shrink).ceil() as u64
}

/// Smallest `k` for which the union bound over all rounds,
/// `s·2(e^{−kα} + e^{−2k(α/8)²})`, is at most `1 − confidence`.
pub fn auto_k(class_size: usize, alpha: Rational, confidence: f64) -> Result<u64> {
    check_alpha(alpha)?;
    if !(confidence > 0.0 && confidence < 1.0) {
        return input("confidence must lie in (0, 1)");
    }
    let s = iteration_bound(class_size, alpha).max(1) as f64;
    let a = to_f64(alpha);
    let fails = |k: u64| {
        let k = k as f64;
        s * 2.0 * ((-k * a).exp() + (-2.0 * k * (a / 8.0).powi(2)).exp()) > 1.0 - confidence
    };
    let mut hi = 1u64;
    while fails(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if fails(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Candidate set plus the removal log that reproduces it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralState {
    pub t: FixedBitSet,
    /// One bit per round: for separated rounds `true` removed `T₀`.
    pub log: Vec<bool>,
    pub accepted: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneralOutput {
    pub hypothesis: usize,
    /// Rounds that removed hypotheses.
    pub iterations: usize,
}

pub enum GeneralNote {
    Tight(usize),
    Separated(SeparationWitness, u64),
}

pub struct GeneralLearner<O> {
    class: Arc<dyn HypothesisClass>,
    oracle: O,
    alpha: Rational,
    epsilon: Rational,
    k: u64,
    noise: Noise,
    /// Re-check every oracle response before acting on it.
    pub validate: bool,
}

impl<O: SeparationOracle> GeneralLearner<O> {
    pub fn new(class: Arc<dyn HypothesisClass>, oracle: O, alpha: Rational, epsilon: Rational, k: u64) -> Result<Self> {
        check_alpha(alpha)?;
        check_epsilon(epsilon)?;
        if k == 0 {
            return input("repetition count k must be at least 1");
        }
        Ok(GeneralLearner { class, oracle, alpha, epsilon, k, noise: Noise::NONE, validate: true })
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    /// Log entries allowed before `T` must have run empty.
    fn log_cap(&self) -> u64 {
        let side = self.oracle.floors().side.min(self.alpha);
        let a = to_f64(side);
        let shrink = -(1.0 - a).ln();
        let len = self.class.len();
        if len <= 1 {
            return 1;
        }
        ((len as f64).ln() / shrink).ceil() as u64 + 1
    }

    fn log_width(&self) -> usize {
        bits_for(self.log_cap())
    }

    fn full(&self) -> FixedBitSet {
        let mut t = FixedBitSet::with_capacity(self.class.len());
        t.insert_range(..);
        t
    }

    fn ball(&self, center: usize, t: &FixedBitSet) -> FixedBitSet {
        let domain = self.class.domain();
        let limit = self.epsilon * domain.size() as i64;
        let mut out = FixedBitSet::with_capacity(self.class.len());
        for h in t.ones() {
            let diff = domain.points().filter(|&x| self.class.evaluate(h, x) != self.class.evaluate(center, x)).count();
            if int(diff as i64) <= limit {
                out.insert(h);
            }
        }
        out
    }

    fn response(&self, t: &FixedBitSet) -> Result<OracleResponse> {
        let r = self.oracle.respond(t)?;
        if self.validate {
            let members: BTreeSet<usize> = t.ones().collect();
            validate_response(self.class.as_ref(), &members, self.alpha, self.epsilon, &r, self.oracle.floors())?;
        }
        Ok(r)
    }

    fn remove(&self, t: &mut FixedBitSet, r: &OracleResponse, bit: bool) {
        match r {
            OracleResponse::Tight(h) => {
                let b = self.ball(*h, t);
                t.difference_with(&b);
            }
            OracleResponse::Separated(w) => {
                let side = if bit { &w.t0 } else { &w.t1 };
                for h in side.expand() {
                    t.set(h, false);
                }
            }
        }
    }

    /// Rebuilds `T` from `H` by replaying a removal log against the oracle.
    pub fn replay(&self, log: &[bool]) -> Result<FixedBitSet> {
        let mut t = self.full();
        for &bit in log {
            let r = self.response(&t)?;
            self.remove(&mut t, &r, bit);
        }
        Ok(t)
    }
}

impl<O: SeparationOracle> Planner for GeneralLearner<O> {
    type Decision = GeneralState;
    type Note = GeneralNote;
    type Output = GeneralOutput;

    fn domain(&self) -> DomainSpec {
        self.class.domain()
    }

    fn noise(&self) -> Noise {
        self.noise
    }

    fn initial(&self) -> GeneralState {
        GeneralState { t: self.full(), log: Vec::new(), accepted: None }
    }

    fn plan(&self, d: &GeneralState) -> Result<Plan<GeneralOutput, GeneralNote>> {
        if let Some(h) = d.accepted {
            return Ok(Plan::Done(GeneralOutput { hypothesis: h, iterations: d.log.len() }));
        }
        if d.t.count_ones(..) == 0 {
            return Err(Error::Soundness);
        }
        match self.response(&d.t)? {
            OracleResponse::Tight(h) => {
                let class = self.class.clone();
                let hypothesis: Predicate = Arc::new(move |x| class.evaluate(h, x));
                Ok(Plan::Query {
                    action: Action::IsClose { hypothesis, epsilon: self.epsilon, k: self.k },
                    note: GeneralNote::Tight(h),
                })
            }
            OracleResponse::Separated(w) => {
                let region = PlanRegion::new(w.s.clone(), self.domain())?;
                let size = region.size;
                let tau = (w.d1 - w.d0) / (2 * size as i64);
                let cap = estimate_cap(self.k, self.oracle.floors().region);
                Ok(Plan::Query {
                    action: Action::Estimate { region, tau, k: self.k, mode: EstimateMode::Window { cap } },
                    note: GeneralNote::Separated(w, size),
                })
            }
        }
    }

    fn apply(&self, d: &mut GeneralState, note: &GeneralNote, outcome: Outcome) -> Result<()> {
        let (response, bit) = match (note, outcome) {
            (GeneralNote::Tight(h), Outcome::Close(true)) => {
                d.accepted = Some(*h);
                return Ok(());
            }
            (GeneralNote::Tight(h), Outcome::Close(false)) => (OracleResponse::Tight(*h), false),
            (GeneralNote::Separated(w, size), Outcome::Density(r)) => {
                let heavy = r * *size as i64 > (w.d1 + w.d0) / 2;
                (OracleResponse::Separated(w.clone()), heavy)
            }
            _ => return Err(Error::LearnerFailure("outcome does not match the pending call".into())),
        };
        if d.log.len() as u64 >= self.log_cap() {
            return Err(Error::NonTermination { cap: self.log_cap() });
        }
        self.remove(&mut d.t, &response, bit);
        d.log.push(bit);
        Ok(())
    }

    fn encode_decision(&self, d: &GeneralState, w: &mut BitWriter) {
        for h in 0..self.class.len() {
            w.push_bool(d.t.contains(h));
        }
        w.push_uint(d.log.len() as u64, self.log_width());
        for &b in &d.log {
            w.push_bool(b);
        }
        w.push_bool(d.accepted.is_some());
        w.push_uint(d.accepted.unwrap_or(0) as u64, bits_for(self.class.len() as u64));
    }

    fn decode_decision(&self, r: &mut BitReader) -> Result<GeneralState> {
        let mut t = FixedBitSet::with_capacity(self.class.len());
        for h in 0..self.class.len() {
            t.set(h, r.read_bool()?);
        }
        let len = r.read_uint(self.log_width())?;
        if len > self.log_cap() {
            return Err(Error::Decode(format!("removal log of length {len} exceeds the cap")));
        }
        let log = (0..len).map(|_| r.read_bool()).collect::<Result<Vec<_>>>()?;
        let has = r.read_bool()?;
        let h = r.read_uint(bits_for(self.class.len() as u64))? as usize;
        if h >= self.class.len() {
            return Err(Error::Decode(format!("accepted index {h} out of range")));
        }
        Ok(GeneralState { t, log, accepted: has.then_some(h) })
    }

    /// The removal log and its length field; the bitset is physical only.
    fn semantic_bits(&self, d: &GeneralState) -> usize {
        self.log_width() + d.log.len()
    }

    fn counter_bound(&self) -> u64 {
        estimate_cap(self.k, self.oracle.floors().region).max(self.k)
    }
}

/// Runs the learner on a stream until it accepts a center.
pub fn run_general<O: SeparationOracle>(learner: GeneralLearner<O>, stream: &mut Stream) -> Result<MemoryReport<GeneralOutput>> {
    account_memory(&Streaming(learner), stream, crate::runtime::DEFAULT_STEP_CAP)
}

/// Runs the learner with each subroutine answered by one statistical query.
pub fn run_general_sq<O: SeparationOracle>(learner: &GeneralLearner<O>, oracle: &mut SqOracle) -> Result<SqRun<GeneralOutput>> {
    let cap = learner.log_cap() + 1;
    run_sq(learner, oracle, cap)
}
