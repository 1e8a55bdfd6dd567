//! Unions of equal-length intervals `[a_i, a_i + p]` with start points on
//! the `1/n` grid, and the window-scanning learner.

use rand::Rng;

use crate::class::{ExampleSubset, HypothesisClass};
use crate::domain::{DomainSpec, Point};
use crate::error::{input, Error, Result};
use crate::rational::{bits_for, fmt_rational, int, ratio, Rational};
use crate::runtime::bits::{BitReader, BitWriter};
use crate::runtime::learner::{account_memory, Action, MemoryReport, Outcome, Plan, PlanRegion, Planner, Streaming};
use crate::runtime::stream::{Stream, Target};

/// Largest class `hypotheses()` will materialise.
pub const ENUMERATION_CAP: u128 = 1 << 20;

/// Parameters of the class: grid size `n` and piece length `p`.
///
/// A hypothesis is a strictly increasing list of start indices `s_i`
/// (start value `s_i/n`) with `s_i/n + p < s_{i+1}/n` and `s_k/n + p < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EqualPieceClass {
    n: u64,
    p: Rational,
    /// Minimum index distance between consecutive starts.
    gap: u64,
}

impl EqualPieceClass {
    pub fn new(n: u64, p: Rational) -> Result<Self> {
        DomainSpec::unit_grid(n)?;
        if p <= int(0) || p >= int(1) {
            return input("piece length p must lie in (0,1)");
        }
        let gap = (p * n as i64).floor().to_integer() as u64 + 1;
        Ok(EqualPieceClass { n, p, gap })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> Rational {
        self.p
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec::UnitGrid(self.n)
    }

    /// Whether `starts` is a valid start-index tuple.
    pub fn is_valid(&self, starts: &[u64]) -> bool {
        starts.windows(2).all(|w| w[1] >= w[0] + self.gap) && starts.last().is_none_or(|&s| s + self.gap <= self.n)
    }

    /// `h(x)` for start indices `starts` at grid point `x`.
    pub fn contains(&self, starts: &[u64], x: Point) -> bool {
        let v = ratio(x as i64 + 1, self.n as i64);
        starts.iter().any(|&s| {
            let a = ratio(s as i64, self.n as i64);
            a <= v && v <= a + self.p
        })
    }

    /// `h(x)` for arbitrary rational start values.
    pub fn contains_values(&self, starts: &[Rational], x: Point) -> bool {
        let v = ratio(x as i64 + 1, self.n as i64);
        starts.iter().any(|&a| a <= v && v <= a + self.p)
    }

    pub fn values(&self, starts: &[u64]) -> Vec<Rational> {
        starts.iter().map(|&s| ratio(s as i64, self.n as i64)).collect()
    }

    /// Fraction of grid points where the two start lists disagree.
    pub fn disagreement(&self, a: &[Rational], b: &[Rational]) -> Rational {
        let d = (0..self.n).filter(|&x| self.contains_values(a, x) != self.contains_values(b, x)).count();
        ratio(d as i64, self.n as i64)
    }

    /// Number of hypotheses, saturating.
    pub fn count(&self) -> u128 {
        // ways[s]: valid tuples whose first start is at least s.
        let last = match self.n.checked_sub(self.gap) {
            Some(l) => l,
            None => return 1,
        };
        let len = last as usize + 1;
        let mut ways = vec![1u128; len + 1];
        for s in (0..len).rev() {
            let after = s + self.gap as usize;
            let tail = if after <= len { ways[after] } else { 1 };
            ways[s] = ways[s + 1].saturating_add(tail);
        }
        ways[0]
    }

    /// All hypotheses in lexicographic order of their start lists.
    pub fn hypotheses(&self) -> Result<EqualPieceHypotheses> {
        if self.count() > ENUMERATION_CAP {
            return input(format!("equal-piece class with {} hypotheses is too large to enumerate", self.count()));
        }
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.extend(0, &mut cur, &mut out);
        Ok(EqualPieceHypotheses { class: *self, list: out })
    }

    fn extend(&self, from: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        out.push(cur.clone());
        let mut s = from;
        while s + self.gap <= self.n {
            cur.push(s);
            self.extend(s + self.gap, cur, out);
            cur.pop();
            s += 1;
        }
    }

    /// A uniformly placed valid hypothesis with exactly `pieces` pieces.
    pub fn random(&self, pieces: usize, rng: &mut impl Rng) -> Result<Vec<u64>> {
        // Place `pieces` starts in the slack left after reserving the gaps.
        let reserved = self.gap * pieces as u64;
        if reserved > self.n {
            return input(format!("{pieces} pieces of length p do not fit"));
        }
        let slack = self.n - reserved;
        let mut offsets: Vec<u64> = (0..pieces).map(|_| rng.gen_range(0..=slack)).collect();
        offsets.sort_unstable();
        Ok(offsets.iter().enumerate().map(|(i, &o)| o + i as u64 * self.gap).collect())
    }

    pub fn target(&self, starts: &[u64]) -> Result<Target> {
        if !self.is_valid(starts) {
            return Err(Error::InvalidHypothesis(format!("{starts:?} is not a valid start list")));
        }
        let class = *self;
        let starts = starts.to_vec();
        Ok(std::sync::Arc::new(move |x| class.contains(&starts, x)))
    }

    /// The window-width parameter `α`: `p²ε/48`, or when that is not above
    /// `2/|X|`, the midpoint of `(2/|X|, p²ε/24)`.
    pub fn default_alpha(&self, epsilon: Rational) -> Result<Rational> {
        let floor = ratio(2, self.n as i64);
        let upper = self.p * self.p * epsilon / 24;
        let a = upper / 2;
        if a > floor {
            return Ok(a);
        }
        if upper <= floor {
            return input(format!(
                "no alpha in (2/|X|, p²ε/24) = ({}, {}); refine the grid",
                fmt_rational(floor),
                fmt_rational(upper)
            ));
        }
        Ok((floor + upper) / 2)
    }
}

/// An enumerated equal-piece class, indexable as a [`HypothesisClass`].
#[derive(Debug, Clone)]
pub struct EqualPieceHypotheses {
    class: EqualPieceClass,
    list: Vec<Vec<u64>>,
}

impl EqualPieceHypotheses {
    pub fn params(&self) -> EqualPieceClass {
        self.class
    }

    pub fn starts(&self, h: usize) -> &[u64] {
        &self.list[h]
    }
}

impl HypothesisClass for EqualPieceHypotheses {
    fn domain(&self) -> DomainSpec {
        self.class.domain()
    }

    fn len(&self) -> usize {
        self.list.len()
    }

    fn evaluate(&self, h: usize, x: Point) -> bool {
        self.class.contains(&self.list[h], x)
    }

    fn describe(&self, h: usize) -> String {
        let v: Vec<String> = self.class.values(&self.list[h]).into_iter().map(fmt_rational).collect();
        format!("[{}]", v.join(","))
    }
}

/// Scans windows `[jump, jump + α/2]` left to right, one probe each.
#[derive(Debug, Clone)]
pub struct EqualPieceLearner {
    class: EqualPieceClass,
    alpha: Rational,
    windows: u64,
}

/// Window counter `t` and the window counters at which starts were recorded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WindowState {
    pub t: u64,
    pub recorded: Vec<u64>,
}

impl EqualPieceLearner {
    pub fn new(class: EqualPieceClass, epsilon: Rational, alpha: Option<Rational>) -> Result<Self> {
        if epsilon <= int(0) || epsilon >= int(1) {
            return input("epsilon must lie in (0,1)");
        }
        let alpha = match alpha {
            Some(a) => a,
            None => class.default_alpha(epsilon)?,
        };
        if alpha <= ratio(2, class.n as i64) || alpha >= int(1) {
            return input("alpha must lie in (2/|X|, 1)");
        }
        let windows = (int(2) / alpha).ceil().to_integer() as u64;
        Ok(EqualPieceLearner { class, alpha, windows })
    }

    pub fn alpha(&self) -> Rational {
        self.alpha
    }

    fn jump(&self, t: u64, r: usize) -> Rational {
        self.alpha / 2 * t as i64 + self.class.p * r as i64
    }

    /// Start values of the recorded windows.
    pub fn starts(&self, s: &WindowState) -> Vec<Rational> {
        s.recorded.iter().enumerate().map(|(i, &t)| self.jump(t, i)).collect()
    }

    /// Grid points `[start, end)` whose value lies in `[jump, jump + α/2]`.
    fn window(&self, jump: Rational) -> (u64, u64) {
        let n = self.class.n as i64;
        let start = ((jump * n).ceil().to_integer() - 1).max(0) as u64;
        let end = ((jump + self.alpha / 2) * n).floor().to_integer().min(n) as u64;
        (start, end)
    }

    fn max_pieces(&self) -> u64 {
        (int(1) / self.class.p).floor().to_integer() as u64 + 1
    }

    fn t_width(&self) -> usize {
        bits_for(self.windows)
    }
}

impl Planner for EqualPieceLearner {
    type Decision = WindowState;
    type Note = ();
    type Output = Vec<Rational>;

    fn domain(&self) -> DomainSpec {
        self.class.domain()
    }

    fn initial(&self) -> WindowState {
        WindowState::default()
    }

    fn plan(&self, s: &WindowState) -> Result<Plan<Vec<Rational>, ()>> {
        let jump = self.jump(s.t, s.recorded.len());
        if jump + self.alpha / 2 > int(1) || s.t >= self.windows {
            return Ok(Plan::Done(self.starts(s)));
        }
        let (start, end) = self.window(jump);
        let region = PlanRegion::new(ExampleSubset::GridRange { start, end }, self.domain())?;
        Ok(Plan::Query { action: Action::Probe { region }, note: () })
    }

    fn apply(&self, s: &mut WindowState, _: &(), outcome: Outcome) -> Result<()> {
        let Outcome::Label(y) = outcome else {
            return Err(Error::LearnerFailure("equal-piece learner expects a label".into()));
        };
        if y {
            s.recorded.push(s.t);
        }
        s.t += 1;
        Ok(())
    }

    fn encode_decision(&self, s: &WindowState, w: &mut BitWriter) {
        w.push_uint(s.t, self.t_width());
        w.push_uint(s.recorded.len() as u64, bits_for(self.max_pieces()));
        for &t in &s.recorded {
            w.push_uint(t, self.t_width());
        }
    }

    fn decode_decision(&self, r: &mut BitReader) -> Result<WindowState> {
        let t = r.read_uint(self.t_width())?;
        let k = r.read_uint(bits_for(self.max_pieces()))?;
        if k > self.max_pieces() {
            return Err(Error::Decode("too many recorded starts".into()));
        }
        let recorded = (0..k).map(|_| r.read_uint(self.t_width())).collect::<Result<Vec<_>>>()?;
        if recorded.windows(2).any(|w| w[0] >= w[1]) || recorded.last().is_some_and(|&l| l >= t) {
            return Err(Error::Decode("recorded windows out of order".into()));
        }
        Ok(WindowState { t, recorded })
    }

    fn semantic_bits(&self, s: &WindowState) -> usize {
        self.t_width() + bits_for(self.max_pieces()) + s.recorded.len() * self.t_width()
    }

    fn counter_bound(&self) -> u64 {
        crate::runtime::subroutines::REJECTION_FACTOR * self.class.n
    }
}

pub fn learn_equal_piece(
    class: EqualPieceClass,
    stream: &mut Stream,
    epsilon: Rational,
    alpha: Option<Rational>,
) -> Result<MemoryReport<Vec<Rational>>> {
    let learner = Streaming(EqualPieceLearner::new(class, epsilon, alpha)?);
    account_memory(&learner, stream, crate::runtime::DEFAULT_STEP_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn count_recursive(c: &EqualPieceClass, from: u64) -> u128 {
        let mut total = 1;
        let mut s = from;
        while s + c.gap <= c.n {
            total += count_recursive(c, s + c.gap);
            s += 1;
        }
        total
    }

    #[test]
    fn counts_agree() {
        for n in 1..=14 {
            for (a, b) in [(1, 2), (1, 3), (1, 4), (2, 5)] {
                let c = EqualPieceClass::new(n, ratio(a, b)).unwrap();
                let listed = c.hypotheses().unwrap();
                assert_eq!(listed.len() as u128, c.count());
                assert_eq!(c.count(), count_recursive(&c, 0));
                for h in 0..listed.len() {
                    assert!(c.is_valid(listed.starts(h)));
                }
            }
        }
        assert_eq!(EqualPieceClass::new(8, ratio(1, 2)).unwrap().count(), 5);
    }

    #[test]
    fn membership_matches_interval_definition() {
        let c = EqualPieceClass::new(10, ratio(3, 10)).unwrap();
        // Piece [0.2, 0.5] covers grid values 0.2 .. 0.5, i.e. indices 1..=4.
        let got: Vec<u64> = (0..10).filter(|&x| c.contains(&[2], x)).collect();
        assert_eq!(got, vec![1, 2, 3, 4]);
        assert!(c.is_valid(&[2, 6]));
        assert!(!c.is_valid(&[2, 5]));
        assert!(!c.is_valid(&[7]));
    }

    #[test]
    fn shatters_one_over_p_points() {
        // p = 1/4 on a fine grid: the points 1/8, 3/8, 5/8, 7/8 are shattered.
        let c = EqualPieceClass::new(64, ratio(1, 4)).unwrap();
        let hs = c.hypotheses().unwrap();
        let pts: Vec<u64> = [8u64, 24, 40, 56].iter().map(|v| v - 1).collect();
        for mask in 0u32..16 {
            let hit = (0..hs.len()).any(|h| pts.iter().enumerate().all(|(i, &x)| hs.evaluate(h, x) == (mask >> i & 1 == 1)));
            assert!(hit, "pattern {mask:04b} not realised");
        }
    }

    #[test]
    fn default_alpha_rules() {
        let c = EqualPieceClass::new(4096, ratio(1, 4)).unwrap();
        assert_eq!(c.default_alpha(ratio(1, 5)).unwrap(), ratio(31, 61440));
        let fine = EqualPieceClass::new(1 << 16, ratio(1, 4)).unwrap();
        assert_eq!(fine.default_alpha(ratio(1, 5)).unwrap(), ratio(1, 3840));
        let coarse = EqualPieceClass::new(64, ratio(1, 4)).unwrap();
        assert!(coarse.default_alpha(ratio(1, 5)).is_err());
    }

    #[test]
    fn random_targets_are_valid() {
        let c = EqualPieceClass::new(4096, ratio(1, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..=3 {
            for _ in 0..50 {
                let s = c.random(k, &mut rng).unwrap();
                assert_eq!(s.len(), k);
                assert!(c.is_valid(&s));
            }
        }
        assert!(c.random(4, &mut rng).is_err());
    }

    #[test]
    fn empty_target_records_nothing() {
        let c = EqualPieceClass::new(1024, ratio(1, 2)).unwrap();
        let mut s = Stream::new(c.domain(), c.target(&[]).unwrap(), int(0), 3).unwrap();
        let r = learn_equal_piece(c, &mut s, ratio(1, 2), None).unwrap();
        assert!(r.output.is_empty());
    }

    #[test]
    fn learns_one_piece_on_small_grid() {
        let c = EqualPieceClass::new(1024, ratio(1, 2)).unwrap();
        let f = [307u64];
        let mut s = Stream::new(c.domain(), c.target(&f).unwrap(), int(0), 5).unwrap();
        let r = learn_equal_piece(c, &mut s, ratio(1, 2), None).unwrap();
        let err = c.disagreement(&r.output, &c.values(&f));
        assert!(err <= ratio(1, 20), "error {err}, starts {:?}", r.output);
    }
}
