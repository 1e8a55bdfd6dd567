//! Thresholds on the grid `{1/n, …, n/n}` and the ternary-search learner.

use crate::class::HypothesisClass;
use crate::domain::{DomainSpec, Point};
use crate::error::{input, Error, Result};
use crate::rational::{bits_for, fmt_rational, int, ratio, Rational};
use crate::runtime::bits::{BitReader, BitWriter};
use crate::runtime::learner::{account_memory, Action, MemoryReport, Outcome, Plan, PlanRegion, Planner, Streaming};
use crate::runtime::stream::Stream;
use crate::class::ExampleSubset;

/// `h_i(x) = [x ≤ (2i+1)/(2n)]` for `i ∈ 0..=n`; index `i` labels exactly
/// the grid points `j < i` (point `j` is the value `(j+1)/n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdClass {
    n: u64,
}

impl ThresholdClass {
    pub fn new(n: u64) -> Result<Self> {
        DomainSpec::unit_grid(n)?;
        if n > (1 << 30) {
            return input("threshold grid too large");
        }
        Ok(ThresholdClass { n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// The threshold value `b` of hypothesis `i`.
    pub fn threshold(&self, i: usize) -> Rational {
        ratio(2 * i as i64 + 1, 2 * self.n as i64)
    }

    /// The hypothesis whose threshold is `b`, if `b` is one of them.
    pub fn index_of(&self, b: Rational) -> Option<usize> {
        let t = b * (2 * self.n as i64) - int(1);
        if !t.is_integer() || t < int(0) || t.to_integer() % 2 != 0 {
            return None;
        }
        let i = (t.to_integer() / 2) as usize;
        (i <= self.n as usize).then_some(i)
    }
}

impl HypothesisClass for ThresholdClass {
    fn domain(&self) -> DomainSpec {
        DomainSpec::UnitGrid(self.n)
    }

    fn len(&self) -> usize {
        self.n as usize + 1
    }

    #[inline]
    fn evaluate(&self, h: usize, x: Point) -> bool {
        x < h as u64
    }

    fn describe(&self, h: usize) -> String {
        format!("h_{}", fmt_rational(self.threshold(h)))
    }
}

/// Ternary search over the candidate interval `[lo, hi]` of threshold
/// indices: probe the middle third, cut a third on each label.
#[derive(Debug, Clone)]
pub struct ThresholdLearner {
    class: ThresholdClass,
    epsilon: Rational,
}

/// Candidate hypothesis indices `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    /// Grid points `[c1, c2)` of the middle third.
    pub fn middle_third(self) -> (u64, u64) {
        let third = (self.hi - self.lo) / 3;
        (self.lo + third, self.hi - third)
    }

    pub fn midpoint(self) -> u64 {
        (self.lo + self.hi) / 2
    }
}

impl ThresholdLearner {
    pub fn new(class: ThresholdClass, epsilon: Rational) -> Result<Self> {
        if epsilon <= int(0) {
            return input("epsilon must be positive");
        }
        Ok(ThresholdLearner { class, epsilon })
    }

    fn width(&self) -> usize {
        bits_for(self.class.n)
    }

    fn narrow_enough(&self, t: Interval) -> bool {
        int((t.hi - t.lo) as i64) <= self.epsilon * self.class.n as i64
    }
}

impl Planner for ThresholdLearner {
    type Decision = Interval;
    type Note = ();
    type Output = usize;

    fn domain(&self) -> DomainSpec {
        self.class.domain()
    }

    fn initial(&self) -> Interval {
        Interval { lo: 0, hi: self.class.n }
    }

    fn plan(&self, t: &Interval) -> Result<Plan<usize, ()>> {
        if self.narrow_enough(*t) {
            return Ok(Plan::Done(t.midpoint() as usize));
        }
        let (start, end) = t.middle_third();
        let region = PlanRegion::new(ExampleSubset::GridRange { start, end }, self.domain())?;
        Ok(Plan::Query { action: Action::Probe { region }, note: () })
    }

    fn apply(&self, t: &mut Interval, _: &(), outcome: Outcome) -> Result<()> {
        let Outcome::Label(y) = outcome else {
            return Err(Error::LearnerFailure("threshold learner expects a label".into()));
        };
        let (c1, c2) = t.middle_third();
        if y {
            t.lo = c1 + 1;
        } else {
            t.hi = c2 - 1;
        }
        Ok(())
    }

    fn encode_decision(&self, t: &Interval, w: &mut BitWriter) {
        w.push_uint(t.lo, self.width());
        w.push_uint(t.hi, self.width());
    }

    fn decode_decision(&self, r: &mut BitReader) -> Result<Interval> {
        let lo = r.read_uint(self.width())?;
        let hi = r.read_uint(self.width())?;
        if lo > hi || hi > self.class.n {
            return Err(Error::Decode(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    fn semantic_bits(&self, _: &Interval) -> usize {
        2 * self.width()
    }

    fn counter_bound(&self) -> u64 {
        crate::runtime::subroutines::REJECTION_FACTOR * self.class.n
    }
}

/// Learns a threshold from `stream` to accuracy `ε`; the output is a
/// hypothesis index of `class`.
pub fn learn_threshold(class: ThresholdClass, stream: &mut Stream, epsilon: Rational) -> Result<MemoryReport<usize>> {
    let learner = Streaming(ThresholdLearner::new(class, epsilon)?);
    account_memory(&learner, stream, crate::runtime::DEFAULT_STEP_CAP)
}
