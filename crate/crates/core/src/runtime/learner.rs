//! Streaming learners as explicit state machines, and the two ways of
//! running them: one labelled example at a time, or one statistical query
//! per subroutine call.
//!
//! Concrete learners implement [`Planner`]: given their decision state they
//! name the next subroutine call ([`Plan`]) and fold its outcome back into
//! the state. [`Streaming`] turns a planner into a [`StreamingLearner`]
//! whose state is the decision plus the counters of the call in progress.

use std::fmt::Debug;
use std::sync::Arc;

use crate::class::{ExampleSubset, Region};
use crate::domain::{DomainSpec, Point};
use crate::error::{input, Error, Result};
use crate::rational::{bits_for, ratio, Rational};
use crate::runtime::bits::{BitReader, BitString, BitWriter};
use crate::runtime::sq::{estimate_sq, is_close_sq, SqOracle};
use crate::runtime::stream::{LabeledExample, Stream};
use crate::runtime::subroutines::{rejection_cap, CloseCounter, EstimateCounter, Noise};

pub type Predicate = Arc<dyn Fn(Point) -> bool + Send + Sync>;

/// A region of the domain together with its compiled membership test.
#[derive(Debug, Clone)]
pub struct PlanRegion {
    pub subset: ExampleSubset,
    pub region: Region,
    pub size: u64,
}

impl PlanRegion {
    pub fn new(subset: ExampleSubset, domain: DomainSpec) -> Result<Self> {
        subset.validate(domain)?;
        let size = subset.len(domain);
        if size == 0 {
            return input("subroutine region is empty");
        }
        Ok(PlanRegion { region: subset.region(domain), subset, size })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    /// Draw at most `cap` examples, stop once `k` fell in the region.
    Window { cap: u64 },
    /// Rejection-sample `k` examples from the region.
    Conditioned,
}

/// One subroutine call.
#[derive(Clone)]
pub enum Action {
    IsClose { hypothesis: Predicate, epsilon: Rational, k: u64 },
    Estimate { region: PlanRegion, tau: Rational, k: u64, mode: EstimateMode },
    /// The label of a single example drawn from the region.
    Probe { region: PlanRegion },
}

impl Debug for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::IsClose { epsilon, k, .. } => write!(f, "IsClose(eps={epsilon}, k={k})"),
            Action::Estimate { region, tau, k, mode } => {
                write!(f, "Estimate({}, tau={tau}, k={k}, {mode:?})", region.subset)
            }
            Action::Probe { region } => write!(f, "Probe({})", region.subset),
        }
    }
}

pub enum Plan<O, N> {
    Done(O),
    Query { action: Action, note: N },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Close(bool),
    Density(Rational),
    Label(bool),
}

/// The decision logic of a bounded-memory learner.
pub trait Planner: Send + Sync {
    type Decision: Clone + Debug + PartialEq + Send;
    /// Data a plan carries to `apply` (e.g. the witness behind an estimate).
    type Note: Send + Sync;
    type Output: Clone + Debug;

    fn domain(&self) -> DomainSpec;

    /// Known label-noise rate the subroutines correct for.
    fn noise(&self) -> Noise {
        Noise::NONE
    }

    fn initial(&self) -> Self::Decision;
    fn plan(&self, decision: &Self::Decision) -> Result<Plan<Self::Output, Self::Note>>;
    fn apply(&self, decision: &mut Self::Decision, note: &Self::Note, outcome: Outcome) -> Result<()>;

    fn encode_decision(&self, decision: &Self::Decision, w: &mut BitWriter);
    fn decode_decision(&self, r: &mut BitReader) -> Result<Self::Decision>;

    /// Bits of the decision state charged by the memory bound.
    fn semantic_bits(&self, decision: &Self::Decision) -> usize;

    /// Upper bound on every counter value a plan can reach; fixes the
    /// width of counter fields.
    fn counter_bound(&self) -> u64;
}

pub enum Transition<S, O> {
    Continue(S),
    Done(O),
}

/// A learner that only remembers what is in its state.
pub trait StreamingLearner {
    type State: Clone;
    type Output;

    fn start(&self) -> Result<Transition<Self::State, Self::Output>>;
    fn step(&self, state: Self::State, example: LabeledExample) -> Result<Transition<Self::State, Self::Output>>;
    fn encode(&self, state: &Self::State) -> BitString;
    fn decode(&self, bits: &BitString) -> Result<Self::State>;

    /// `encode(state).len()`, possibly computed without encoding.
    fn physical_bits(&self, state: &Self::State) -> usize {
        self.encode(state).len()
    }

    fn semantic_bits(&self, state: &Self::State) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Close(CloseCounter),
    Estimate(EstimateCounter),
    Probe { wait: u64 },
}

impl Phase {
    fn fresh(action: &Action) -> Phase {
        match action {
            Action::IsClose { .. } => Phase::Close(CloseCounter::default()),
            Action::Estimate { .. } => Phase::Estimate(EstimateCounter::default()),
            Action::Probe { .. } => Phase::Probe { wait: 0 },
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Phase::Close(_) => 0,
            Phase::Estimate(_) => 1,
            Phase::Probe { .. } => 2,
        }
    }
}

const TAG_BITS: usize = 2;

/// State of a planner-driven streaming learner.
pub struct DriverState<P: Planner> {
    pub decision: P::Decision,
    phase: Phase,
    // Re-derivable from `decision`, hence never encoded.
    plan: Option<Arc<Plan<P::Output, P::Note>>>,
    decision_bits: usize,
    decision_semantic: usize,
    conditioned: bool,
}

impl<P: Planner> Clone for DriverState<P> {
    fn clone(&self) -> Self {
        DriverState {
            decision: self.decision.clone(),
            phase: self.phase,
            plan: self.plan.clone(),
            decision_bits: self.decision_bits,
            decision_semantic: self.decision_semantic,
            conditioned: self.conditioned,
        }
    }
}

impl<P: Planner> Debug for DriverState<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DriverState").field("decision", &self.decision).field("phase", &self.phase).finish()
    }
}

impl<P: Planner> PartialEq for DriverState<P> {
    fn eq(&self, other: &Self) -> bool {
        self.decision == other.decision && self.phase == other.phase
    }
}

/// Runs a [`Planner`] on a labelled stream.
#[derive(Debug, Clone)]
pub struct Streaming<P>(pub P);

impl<P: Planner> Streaming<P> {
    fn counter_width(&self) -> usize {
        bits_for(self.0.counter_bound())
    }

    fn decision_sizes(&self, d: &P::Decision) -> (usize, usize) {
        let mut w = BitWriter::new();
        self.0.encode_decision(d, &mut w);
        (w.len(), self.0.semantic_bits(d))
    }

    /// Plans from a fresh decision and builds the matching state.
    fn enter(&self, decision: P::Decision) -> Result<Transition<DriverState<P>, P::Output>> {
        let plan = self.0.plan(&decision)?;
        let (action, plan) = match plan {
            Plan::Done(o) => return Ok(Transition::Done(o)),
            Plan::Query { action, note } => (action.clone(), Arc::new(Plan::Query { action, note })),
        };
        let (decision_bits, decision_semantic) = self.decision_sizes(&decision);
        Ok(Transition::Continue(DriverState {
            decision,
            phase: Phase::fresh(&action),
            plan: Some(plan),
            decision_bits,
            decision_semantic,
            conditioned: matches!(action, Action::Estimate { mode: EstimateMode::Conditioned, .. }),
        }))
    }

    fn plan_of(&self, state: &DriverState<P>) -> Result<Arc<Plan<P::Output, P::Note>>> {
        match &state.plan {
            Some(p) => Ok(p.clone()),
            None => Ok(Arc::new(self.0.plan(&state.decision)?)),
        }
    }
}

impl<P: Planner> StreamingLearner for Streaming<P> {
    type State = DriverState<P>;
    type Output = P::Output;

    fn start(&self) -> Result<Transition<Self::State, Self::Output>> {
        self.enter(self.0.initial())
    }

    fn step(&self, mut state: Self::State, e: LabeledExample) -> Result<Transition<Self::State, Self::Output>> {
        let plan = self.plan_of(&state)?;
        let Plan::Query { action, note } = plan.as_ref() else {
            return Err(Error::Decode("state of a finished learner".into()));
        };
        let noise = self.0.noise();
        let domain = self.0.domain();
        let outcome = match (action, &mut state.phase) {
            (Action::IsClose { hypothesis, epsilon, k }, Phase::Close(c)) => {
                c.feed(hypothesis(e.x) != e.y, *k, *epsilon, noise).map(Outcome::Close)
            }
            (Action::Estimate { region, k, mode: EstimateMode::Window { cap }, .. }, Phase::Estimate(c)) => {
                match c.feed(region.region.contains(e.x), e.y, *k, *cap, noise) {
                    Some(r) => Some(Outcome::Density(r?)),
                    None => None,
                }
            }
            (Action::Estimate { region, k, mode: EstimateMode::Conditioned, .. }, Phase::Estimate(c)) => {
                // `draws` is the rejection watchdog: draws since the last hit.
                if region.region.contains(e.x) {
                    c.draws = 0;
                    c.in_region += 1;
                    c.ones += e.y as u64;
                    (c.in_region >= *k).then(|| Outcome::Density(noise.debias(ratio(c.ones as i64, c.in_region as i64))))
                } else {
                    c.draws += 1;
                    let cap = rejection_cap(domain, region.size);
                    if c.draws >= cap {
                        return Err(Error::NonTermination { cap });
                    }
                    None
                }
            }
            (Action::Probe { region }, Phase::Probe { wait }) => {
                if region.region.contains(e.x) {
                    Some(Outcome::Label(e.y))
                } else {
                    *wait += 1;
                    let cap = rejection_cap(domain, region.size);
                    if *wait >= cap {
                        return Err(Error::NonTermination { cap });
                    }
                    None
                }
            }
            _ => return Err(Error::Decode("phase does not match the planned action".into())),
        };
        match outcome {
            None => {
                state.plan = Some(plan);
                Ok(Transition::Continue(state))
            }
            Some(o) => {
                let mut decision = state.decision;
                self.0.apply(&mut decision, note, o)?;
                self.enter(decision)
            }
        }
    }

    fn encode(&self, state: &Self::State) -> BitString {
        let w_c = self.counter_width();
        let mut w = BitWriter::new();
        self.0.encode_decision(&state.decision, &mut w);
        w.push_uint(state.phase.tag(), TAG_BITS);
        match state.phase {
            Phase::Close(c) => {
                w.push_uint(c.seen, w_c);
                w.push_uint(c.disagreements, w_c);
            }
            Phase::Estimate(c) => {
                w.push_uint(c.draws, w_c);
                w.push_uint(c.in_region, w_c);
                w.push_uint(c.ones, w_c);
            }
            Phase::Probe { wait } => w.push_uint(wait, w_c),
        }
        w.finish()
    }

    fn decode(&self, bits: &BitString) -> Result<Self::State> {
        let w_c = self.counter_width();
        let mut r = BitReader::new(bits);
        let decision = self.0.decode_decision(&mut r)?;
        let phase = match r.read_uint(TAG_BITS)? {
            0 => Phase::Close(CloseCounter { seen: r.read_uint(w_c)?, disagreements: r.read_uint(w_c)? }),
            1 => Phase::Estimate(EstimateCounter {
                draws: r.read_uint(w_c)?,
                in_region: r.read_uint(w_c)?,
                ones: r.read_uint(w_c)?,
            }),
            2 => Phase::Probe { wait: r.read_uint(w_c)? },
            t => return Err(Error::Decode(format!("unknown phase tag {t}"))),
        };
        r.finish()?;
        let conditioned = match self.0.plan(&decision)? {
            Plan::Done(_) => return Err(Error::Decode("decision state is terminal".into())),
            Plan::Query { action, .. } => {
                if Phase::fresh(&action).tag() != phase.tag() {
                    return Err(Error::Decode("phase tag does not match the decision".into()));
                }
                matches!(action, Action::Estimate { mode: EstimateMode::Conditioned, .. })
            }
        };
        let (decision_bits, decision_semantic) = self.decision_sizes(&decision);
        Ok(DriverState { decision, phase, plan: None, decision_bits, decision_semantic, conditioned })
    }

    fn physical_bits(&self, state: &Self::State) -> usize {
        let counters = match state.phase {
            Phase::Close(_) => 2,
            Phase::Estimate(_) => 3,
            Phase::Probe { .. } => 1,
        };
        state.decision_bits + TAG_BITS + counters * self.counter_width()
    }

    /// Decision bits plus the subroutine counters, excluding the
    /// rejection-sampling watchdogs.
    fn semantic_bits(&self, state: &Self::State) -> usize {
        let counters = match state.phase {
            Phase::Close(_) => 2,
            Phase::Estimate(_) if state.conditioned => 2,
            Phase::Estimate(_) => 3,
            Phase::Probe { .. } => 0,
        };
        state.decision_semantic + TAG_BITS + counters * self.counter_width()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryReport<O> {
    pub output: O,
    /// Stream draw counter at termination.
    pub samples: u64,
    pub steps: u64,
    /// Largest `|encode(state)|` over the run.
    pub max_bits: usize,
    pub max_semantic_bits: usize,
}

impl<O> MemoryReport<O> {
    /// Whether the run needed more than `budget` bits of state.
    pub fn exceeds(&self, budget: usize) -> bool {
        self.max_bits > budget
    }
}

/// Runs `learner` on `stream` to completion, recording the largest state.
pub fn account_memory<L: StreamingLearner>(
    learner: &L,
    stream: &mut Stream,
    step_cap: u64,
) -> Result<MemoryReport<L::Output>> {
    let mut max_bits = 0;
    let mut max_semantic_bits = 0;
    let mut steps = 0u64;
    let mut t = learner.start()?;
    loop {
        match t {
            Transition::Done(output) => {
                return Ok(MemoryReport { output, samples: stream.draws(), steps, max_bits, max_semantic_bits });
            }
            Transition::Continue(state) => {
                max_bits = max_bits.max(learner.physical_bits(&state));
                max_semantic_bits = max_semantic_bits.max(learner.semantic_bits(&state));
                if steps >= step_cap {
                    return Err(Error::NonTermination { cap: step_cap });
                }
                steps += 1;
                t = learner.step(state, stream.draw())?;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqRun<O> {
    pub output: O,
    pub queries: u64,
    pub rounds: u64,
}

/// Runs a planner with every subroutine call answered by one statistical
/// query. A probe is answered by the majority label of its region.
pub fn run_sq<P: Planner>(planner: &P, oracle: &mut SqOracle, round_cap: u64) -> Result<SqRun<P::Output>> {
    let start = oracle.queries();
    let mut decision = planner.initial();
    let mut rounds = 0;
    loop {
        let (action, note) = match planner.plan(&decision)? {
            Plan::Done(output) => return Ok(SqRun { output, queries: oracle.queries() - start, rounds }),
            Plan::Query { action, note } => (action, note),
        };
        if rounds >= round_cap {
            return Err(Error::NonTermination { cap: round_cap });
        }
        rounds += 1;
        let outcome = match &action {
            Action::IsClose { hypothesis, epsilon, .. } => Outcome::Close(is_close_sq(oracle, hypothesis.as_ref(), *epsilon)?),
            Action::Estimate { region, tau, .. } => Outcome::Density(estimate_sq(oracle, &region.subset, *tau)?),
            Action::Probe { region } => {
                let d = estimate_sq(oracle, &region.subset, ratio(1, 2))?;
                Outcome::Label(d > ratio(1, 2))
            }
        };
        planner.apply(&mut decision, &note, outcome)?;
    }
}
