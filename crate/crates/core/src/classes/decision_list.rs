//! Decision lists over `n` boolean variables and the level-by-level learner.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::class::{ExampleSubset, HypothesisClass};
use crate::domain::{DomainSpec, Literal, LiteralConstraints, Point};
use crate::error::{input, Error, Result};
use crate::rational::{bits_for, int, ratio, to_f64, Rational};
use crate::runtime::bits::{BitReader, BitWriter};
use crate::runtime::learner::{
    account_memory, Action, EstimateMode, MemoryReport, Outcome, Plan, PlanRegion, Planner, Streaming,
};
use crate::runtime::stream::{Stream, Target};
use crate::runtime::subroutines::{Noise, REJECTION_FACTOR};

/// "if ℓ₁ then b₁ else if ℓ₂ then b₂ … else default".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecisionList {
    n: u32,
    levels: Vec<(Literal, bool)>,
    default: bool,
}

impl DecisionList {
    /// Fails if a variable repeats or lies outside `0..n`.
    pub fn new(n: u32, levels: Vec<(Literal, bool)>, default: bool) -> Result<Self> {
        let mut seen = HashSet::new();
        for (l, _) in &levels {
            if l.var >= n as usize {
                return Err(Error::InvalidHypothesis(format!("variable {} outside 1..={n}", l.var + 1)));
            }
            if !seen.insert(l.var) {
                return Err(Error::InvalidHypothesis(format!("variable {} appears twice", l.var + 1)));
            }
        }
        Ok(DecisionList { n, levels, default })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn levels(&self) -> &[(Literal, bool)] {
        &self.levels
    }

    pub fn default_bit(&self) -> bool {
        self.default
    }

    #[inline]
    pub fn evaluate(&self, x: Point) -> bool {
        self.levels.iter().find(|(l, _)| l.holds(x, self.n)).map_or(self.default, |&(_, b)| b)
    }

    /// Evaluates on an explicit assignment `(x₁, …, xₙ)`.
    pub fn evaluate_bits(&self, assignment: &[bool]) -> Result<bool> {
        if assignment.len() != self.n as usize {
            return input(format!("assignment has {} bits, expected {}", assignment.len(), self.n));
        }
        let x = assignment.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Ok(self.evaluate(x))
    }

    /// Values on every cube point in enumeration order.
    pub fn truth_table(&self) -> Vec<bool> {
        DomainSpec::BooleanCube(self.n).points().map(|x| self.evaluate(x)).collect()
    }

    pub fn distance(&self, other: &DecisionList) -> Rational {
        let d = DomainSpec::BooleanCube(self.n).points().filter(|&x| self.evaluate(x) != other.evaluate(x)).count();
        ratio(d as i64, 1i64 << self.n)
    }

    /// A uniformly random full-length list.
    pub fn random(n: u32, rng: &mut impl Rng) -> Self {
        let mut vars: Vec<usize> = (0..n as usize).collect();
        vars.shuffle(rng);
        let levels = vars.into_iter().map(|v| (Literal { var: v, negated: rng.gen() }, rng.gen())).collect();
        DecisionList { n, levels, default: rng.gen() }
    }

    pub fn target(&self) -> Target {
        let me = self.clone();
        Arc::new(move |x| me.evaluate(x))
    }

    /// Parses `[(+3,1),(-1,0)]:0` for a list over `n` variables.
    pub fn parse(n: u32, s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, default) = s.rsplit_once(':').ok_or_else(|| Error::Input(format!("`{s}`: missing `:default`")))?;
        let default = parse_bit(default)?;
        let inner = body
            .trim()
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| Error::Input(format!("`{body}`: levels must be in brackets")))?
            .trim();
        let mut levels = Vec::new();
        let mut rest = inner;
        while !rest.is_empty() {
            let r = rest.strip_prefix('(').ok_or_else(|| Error::Input(format!("expected `(` at `{rest}`")))?;
            let (pair, tail) = r.split_once(')').ok_or_else(|| Error::Input("unclosed level".into()))?;
            let (lit, bit) = pair.split_once(',').ok_or_else(|| Error::Input(format!("bad level `({pair})`")))?;
            levels.push((Literal::parse(lit)?, parse_bit(bit)?));
            rest = tail.trim_start();
            if let Some(t) = rest.strip_prefix(',') {
                rest = t.trim_start();
            } else if !rest.is_empty() {
                return input(format!("unexpected `{rest}`"));
            }
        }
        DecisionList::new(n, levels, default)
    }
}

fn parse_bit(s: &str) -> Result<bool> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        o => input(format!("`{o}` is not a bit")),
    }
}

impl fmt::Display for DecisionList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.levels.iter().map(|(l, b)| format!("({l},{})", *b as u8)).collect();
        write!(f, "[{}]:{}", parts.join(","), self.default as u8)
    }
}

/// Parses the text form, taking `n` from the largest variable mentioned.
impl FromStr for DecisionList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let probe = DecisionList::parse(40, s)?;
        let n = probe.levels.iter().map(|(l, _)| l.var as u32 + 1).max().unwrap_or(1);
        DecisionList::new(n, probe.levels, probe.default)
    }
}

/// `n!·4ⁿ`, saturating.
pub fn structure_count(n: u32) -> u128 {
    (1..=n as u128).fold(1u128, |acc, k| acc.saturating_mul(k)).saturating_mul(1u128 << (2 * n.min(60)))
}

/// Largest `n` the class enumerates.
pub const MAX_ENUMERATED_N: u32 = 5;

/// All canonical lists over `n` variables: every variable used once,
/// the last level's literal positive. There are exactly `n!·4ⁿ` of them;
/// distinct indices may denote the same function.
#[derive(Debug, Clone)]
pub struct DecisionListClass {
    n: u32,
    lists: Vec<DecisionList>,
}

impl DecisionListClass {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_ENUMERATED_N {
            return input(format!("decision-list enumeration supports 1 <= n <= {MAX_ENUMERATED_N}"));
        }
        let mut lists = Vec::new();
        let mut perm: Vec<usize> = (0..n as usize).collect();
        permutations(&mut perm, 0, &mut |order| {
            let levels = order.len();
            for signs in 0u32..1 << (levels - 1) {
                for bits in 0u32..1 << levels {
                    for default in [false, true] {
                        let ls = order
                            .iter()
                            .enumerate()
                            .map(|(i, &v)| (Literal { var: v, negated: signs >> i & 1 == 1 }, bits >> i & 1 == 1))
                            .collect();
                        lists.push(DecisionList { n, levels: ls, default });
                    }
                }
            }
        });
        Ok(DecisionListClass { n, lists })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn list(&self, h: usize) -> &DecisionList {
        &self.lists[h]
    }

    /// Number of distinct boolean functions among the lists.
    pub fn distinct_functions(&self) -> usize {
        self.lists.iter().map(|l| l.truth_table()).collect::<HashSet<_>>().len()
    }
}

fn permutations(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

impl HypothesisClass for DecisionListClass {
    fn domain(&self) -> DomainSpec {
        DomainSpec::BooleanCube(self.n)
    }

    fn len(&self) -> usize {
        self.lists.len()
    }

    fn evaluate(&self, h: usize, x: Point) -> bool {
        self.lists[h].evaluate(x)
    }

    fn describe(&self, h: usize) -> String {
        self.lists[h].to_string()
    }
}

/// A variable fixed by the frozen prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frozen {
    /// 1-based level.
    pub level: usize,
    pub negated: bool,
    pub bit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Next same-level test: `(lit a, 0)` against `(lit b, 1)`.
    Same { a: usize, b: usize },
    /// Survivors are `(ℓ,0), (¬ℓ,1)`: test the list ending in `¬ℓ → 1`.
    SpecialClose,
    SpecialEstimate,
    /// All survivors share a bit; scanning them for a monochromatic one.
    Select { cursor: usize, fallback: Option<usize> },
    Accepted,
    Finished,
}

/// Frozen prefix, surviving `(literal, bit)` pairs of the current level
/// and the scan position. `C` (all frozen literals false) is implied by
/// the prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DlState {
    pub frozen: Vec<Option<Frozen>>,
    /// Bit `2·literal_code + bit` set when the pair survives.
    pub alive: FixedBitSet,
    pub stage: Stage,
}

impl DlState {
    pub fn level(&self) -> usize {
        self.frozen.iter().flatten().count() + 1
    }

    pub fn is_alive(&self, lit: usize, bit: bool) -> bool {
        self.alive.contains(2 * lit + bit as usize)
    }

    /// Literals forced false by the prefix.
    pub fn constraints(&self) -> LiteralConstraints {
        let lits = self
            .frozen
            .iter()
            .enumerate()
            .filter_map(|(v, f)| f.map(|f| Literal { var: v, negated: !f.negated }));
        LiteralConstraints::from_literals(lits).expect("one literal per variable")
    }

    /// Frozen levels in order.
    pub fn prefix(&self) -> Vec<(Literal, bool)> {
        let mut p: Vec<(usize, Literal, bool)> = self
            .frozen
            .iter()
            .enumerate()
            .filter_map(|(v, f)| f.map(|f| (f.level, Literal { var: v, negated: f.negated }, f.bit)))
            .collect();
        p.sort_unstable_by_key(|t| t.0);
        p.into_iter().map(|(_, l, b)| (l, b)).collect()
    }

    /// Surviving pairs as `(literal code, bit)`.
    pub fn survivors(&self) -> Vec<(usize, bool)> {
        self.alive.ones().map(|p| (p / 2, p % 2 == 1)).collect()
    }
}

/// Builds a decision list level by level. At each level, conflicting
/// candidates `(ℓ,0)` and `(ℓ',1)` are resolved by estimating the label
/// density on `{ℓ, ℓ', C}`; a lone complementary pair is settled with
/// Is-close; when the survivors agree on the output bit, the first one
/// whose region looks monochromatic is frozen.
#[derive(Debug, Clone)]
pub struct DlLearner {
    n: u32,
    epsilon: Rational,
    levels: usize,
    k_estimate: u64,
    k_close: u64,
    noise: Noise,
}

impl DlLearner {
    /// `k = None` sizes the repetition counts from a total failure budget
    /// of 0.1 split across every subroutine call.
    pub fn new(n: u32, epsilon: Rational, k: Option<u64>, eta: Rational) -> Result<Self> {
        DomainSpec::boolean_cube(n)?;
        if epsilon >= int(1) || epsilon <= ratio(1, 1i64 << n) {
            return input("epsilon must lie in (2^-n, 1)");
        }
        let levels = (1.0 / to_f64(epsilon)).log2().ceil().max(1.0) as usize;
        let noise = Noise::new(eta)?;
        let (k_estimate, k_close) = match k {
            Some(0) => return input("k must be at least 1"),
            Some(k) => (k, k),
            None => {
                let delta = 0.1 / (levels as f64 * (6.0 * n as f64 + 2.0));
                let e = to_f64(epsilon);
                let reps = |tau: f64| ((2.0 / delta).ln() / (2.0 * tau * tau)).ceil() as u64;
                (noise.inflate(reps(e / 2.0)), noise.inflate(reps(e)))
            }
        };
        Ok(DlLearner { n, epsilon, levels, k_estimate, k_close, noise })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn k_estimate(&self) -> u64 {
        self.k_estimate
    }

    fn lit_count(&self) -> usize {
        2 * self.n as usize
    }

    fn fresh_level(&self, frozen: Vec<Option<Frozen>>) -> Result<DlState> {
        let mut alive = FixedBitSet::with_capacity(4 * self.n as usize);
        for (v, f) in frozen.iter().enumerate() {
            if f.is_none() {
                for p in 4 * v..4 * v + 4 {
                    alive.insert(p);
                }
            }
        }
        self.normalize(DlState { frozen, alive, stage: Stage::Same { a: 0, b: 0 } })
    }

    fn freeze(&self, mut d: DlState, lit: usize, bit: bool) -> Result<DlState> {
        let level = d.level();
        let l = Literal::from_code(lit);
        if d.frozen[l.var].is_some() {
            return Err(Error::LearnerFailure(format!("variable {} frozen twice", l.var + 1)));
        }
        d.frozen[l.var] = Some(Frozen { level, negated: l.negated, bit });
        if level >= self.levels {
            d.alive.clear();
            d.stage = Stage::Finished;
            return Ok(d);
        }
        self.fresh_level(d.frozen)
    }

    /// Moves the scan to the next state that needs a subroutine call.
    fn normalize(&self, mut d: DlState) -> Result<DlState> {
        let lits = self.lit_count();
        match d.stage {
            Stage::Same { a, b } => {
                for a2 in a..lits {
                    if !d.is_alive(a2, false) {
                        continue;
                    }
                    let from = if a2 == a { b } else { 0 };
                    if let Some(b2) = (from..lits).find(|&b2| b2 != (a2 ^ 1) && d.is_alive(b2, true)) {
                        d.stage = Stage::Same { a: a2, b: b2 };
                        return Ok(d);
                    }
                }
                self.resolve(d)
            }
            Stage::Select { cursor, fallback } => {
                let bit = d.survivors().first().map(|s| s.1).unwrap_or(false);
                match (cursor..lits).find(|&c| d.is_alive(c, bit)) {
                    Some(c) => {
                        d.stage = Stage::Select { cursor: c, fallback };
                        Ok(d)
                    }
                    None => match fallback {
                        Some(f) => self.freeze(d, f, bit),
                        None => Err(Error::LearnerFailure(format!("no monochromatic candidate at level {}", d.level()))),
                    },
                }
            }
            _ => Ok(d),
        }
    }

    /// Decides what to do once no same-level conflict is left.
    fn resolve(&self, mut d: DlState) -> Result<DlState> {
        let s = d.survivors();
        match s.as_slice() {
            [] => Err(Error::LearnerFailure(format!("every candidate for level {} was deleted", d.level()))),
            [(lit, bit)] => self.freeze(d, *lit, *bit),
            [(a, false), (b, true)] | [(b, true), (a, false)] if *b == (*a ^ 1) => {
                d.stage = Stage::SpecialClose;
                Ok(d)
            }
            _ if s.iter().all(|p| p.1 == s[0].1) => {
                d.stage = Stage::Select { cursor: 0, fallback: None };
                self.normalize(d)
            }
            _ => Err(Error::LearnerFailure("unresolved conflicting candidates".into())),
        }
    }

    /// `ℓ` of the special pair `(ℓ,0), (¬ℓ,1)`.
    fn special_literal(d: &DlState) -> Result<usize> {
        d.survivors()
            .iter()
            .find(|p| !p.1)
            .map(|p| p.0)
            .ok_or_else(|| Error::LearnerFailure("special case without a 0-pair".into()))
    }

    /// Prefix, then `¬ℓ → 1`, then each remaining variable `→ 0`, default 0.
    pub fn special_hypothesis(&self, d: &DlState, lit: usize) -> DecisionList {
        let l = Literal::from_code(lit);
        let mut levels = d.prefix();
        levels.push((l.complement(), true));
        for v in 0..self.n as usize {
            if v != l.var && d.frozen[v].is_none() {
                levels.push((Literal::pos(v), false));
            }
        }
        DecisionList { n: self.n, levels, default: false }
    }

    pub fn output(&self, d: &DlState) -> DecisionList {
        let levels = d.prefix();
        let default = levels.last().is_some_and(|l| l.1);
        DecisionList { n: self.n, levels, default }
    }

    fn estimate_on(&self, d: &DlState, extra: &[usize]) -> Result<Action> {
        let mut c = d.constraints();
        for &e in extra {
            c.insert(Literal::from_code(e))?;
        }
        let region = PlanRegion::new(ExampleSubset::Subcube(c), self.domain())?;
        Ok(Action::Estimate { region, tau: self.epsilon / 2, k: self.k_estimate, mode: EstimateMode::Conditioned })
    }

    fn level_width(&self) -> usize {
        bits_for(self.levels as u64)
    }

    fn lit_width(&self) -> usize {
        bits_for(self.lit_count() as u64)
    }
}

const STAGE_BITS: usize = 3;

impl Planner for DlLearner {
    type Decision = DlState;
    type Note = ();
    type Output = DecisionList;

    fn domain(&self) -> DomainSpec {
        DomainSpec::BooleanCube(self.n)
    }

    fn noise(&self) -> Noise {
        self.noise
    }

    fn initial(&self) -> DlState {
        self.fresh_level(vec![None; self.n as usize]).expect("the first level always has a test")
    }

    fn plan(&self, d: &DlState) -> Result<Plan<DecisionList, ()>> {
        let action = match d.stage {
            Stage::Same { a, b } if a == b => self.estimate_on(d, &[a])?,
            Stage::Same { a, b } => self.estimate_on(d, &[a, b])?,
            Stage::SpecialClose => {
                let h = self.special_hypothesis(d, Self::special_literal(d)?);
                Action::IsClose { hypothesis: Arc::new(move |x| h.evaluate(x)), epsilon: self.epsilon, k: self.k_close }
            }
            Stage::SpecialEstimate => self.estimate_on(d, &[Self::special_literal(d)?])?,
            Stage::Select { cursor, .. } => self.estimate_on(d, &[cursor])?,
            Stage::Accepted => return Ok(Plan::Done(self.special_hypothesis(d, Self::special_literal(d)?))),
            Stage::Finished => return Ok(Plan::Done(self.output(d))),
        };
        Ok(Plan::Query { action, note: () })
    }

    fn apply(&self, d: &mut DlState, _: &(), outcome: Outcome) -> Result<()> {
        let eps = self.epsilon;
        let mut next = d.clone();
        match (d.stage, outcome) {
            (Stage::Same { a, b }, Outcome::Density(r)) => {
                if r < eps {
                    next.alive.set(2 * b + 1, false);
                    next.stage = Stage::Same { a, b: b + 1 };
                } else {
                    next.alive.set(2 * a, false);
                    next.stage = Stage::Same { a: a + 1, b: 0 };
                }
                next = self.normalize(next)?;
            }
            (Stage::SpecialClose, Outcome::Close(accept)) => {
                next.stage = if accept { Stage::Accepted } else { Stage::SpecialEstimate };
            }
            (Stage::SpecialEstimate, Outcome::Density(r)) => {
                let l = Self::special_literal(d)?;
                if r < eps {
                    next.alive.set(2 * (l ^ 1) + 1, false);
                } else {
                    next.alive.set(2 * l, false);
                }
                next = self.resolve(next)?;
            }
            (Stage::Select { cursor, fallback }, Outcome::Density(r)) => {
                let bit = d.is_alive(cursor, true);
                let minority = if bit { int(1) - r } else { r };
                if minority == int(0) {
                    next = self.freeze(next, cursor, bit)?;
                } else {
                    let fallback = fallback.or((minority < eps / 2).then_some(cursor));
                    next.stage = Stage::Select { cursor: cursor + 1, fallback };
                    next = self.normalize(next)?;
                }
            }
            (stage, o) => return Err(Error::LearnerFailure(format!("outcome {o:?} does not fit stage {stage:?}"))),
        }
        *d = next;
        Ok(())
    }

    fn encode_decision(&self, d: &DlState, w: &mut BitWriter) {
        for f in &d.frozen {
            match f {
                Some(f) => {
                    w.push_uint(f.level as u64, self.level_width());
                    w.push_bool(f.negated);
                    w.push_bool(f.bit);
                }
                None => w.push_uint(0, self.level_width() + 2),
            }
        }
        for p in 0..4 * self.n as usize {
            w.push_bool(d.alive.contains(p));
        }
        let lw = self.lit_width();
        match d.stage {
            Stage::Same { a, b } => {
                w.push_uint(0, STAGE_BITS);
                w.push_uint(a as u64, lw);
                w.push_uint(b as u64, lw);
            }
            Stage::SpecialClose => w.push_uint(1, STAGE_BITS),
            Stage::SpecialEstimate => w.push_uint(2, STAGE_BITS),
            Stage::Select { cursor, fallback } => {
                w.push_uint(3, STAGE_BITS);
                w.push_uint(cursor as u64, lw);
                w.push_bool(fallback.is_some());
                w.push_uint(fallback.unwrap_or(0) as u64, lw);
            }
            Stage::Accepted => w.push_uint(4, STAGE_BITS),
            Stage::Finished => w.push_uint(5, STAGE_BITS),
        }
    }

    fn decode_decision(&self, r: &mut BitReader) -> Result<DlState> {
        let n = self.n as usize;
        let mut frozen = Vec::with_capacity(n);
        let mut levels_seen = HashSet::new();
        for _ in 0..n {
            let level = r.read_uint(self.level_width())? as usize;
            let negated = r.read_bool()?;
            let bit = r.read_bool()?;
            if level == 0 {
                if negated || bit {
                    return Err(Error::Decode("non-canonical free variable".into()));
                }
                frozen.push(None);
            } else {
                if level > self.levels || !levels_seen.insert(level) {
                    return Err(Error::Decode(format!("bad frozen level {level}")));
                }
                frozen.push(Some(Frozen { level, negated, bit }));
            }
        }
        if (1..=levels_seen.len()).any(|l| !levels_seen.contains(&l)) {
            return Err(Error::Decode("frozen levels are not contiguous".into()));
        }
        let mut alive = FixedBitSet::with_capacity(4 * n);
        for p in 0..4 * n {
            if r.read_bool()? {
                if frozen[p / 4].is_some() {
                    return Err(Error::Decode("pair on a frozen variable".into()));
                }
                alive.insert(p);
            }
        }
        let lw = self.lit_width();
        let lit = |r: &mut BitReader| -> Result<usize> {
            let v = r.read_uint(lw)? as usize;
            if v > self.lit_count() {
                return Err(Error::Decode("literal code out of range".into()));
            }
            Ok(v)
        };
        let stage = match r.read_uint(STAGE_BITS)? {
            0 => Stage::Same { a: lit(r)?, b: lit(r)? },
            1 => Stage::SpecialClose,
            2 => Stage::SpecialEstimate,
            3 => {
                let cursor = lit(r)?;
                let has = r.read_bool()?;
                let fb = lit(r)?;
                if !has && fb != 0 {
                    return Err(Error::Decode("non-canonical empty fallback".into()));
                }
                Stage::Select { cursor, fallback: has.then_some(fb) }
            }
            4 => Stage::Accepted,
            5 => Stage::Finished,
            t => return Err(Error::Decode(format!("unknown stage {t}"))),
        };
        Ok(DlState { frozen, alive, stage })
    }

    fn semantic_bits(&self, d: &DlState) -> usize {
        let mut w = BitWriter::new();
        self.encode_decision(d, &mut w);
        w.len()
    }

    fn counter_bound(&self) -> u64 {
        let widest_wait = REJECTION_FACTOR << (self.levels + 1).min(self.n as usize);
        self.k_estimate.max(self.k_close).max(widest_wait)
    }
}

/// Learns a decision list over `n` variables from `stream`.
pub fn learn_decision_list(
    stream: &mut Stream,
    n: u32,
    epsilon: Rational,
    k: Option<u64>,
) -> Result<MemoryReport<DecisionList>> {
    let learner = Streaming(DlLearner::new(n, epsilon, k, stream.noise())?);
    account_memory(&learner, stream, crate::runtime::DEFAULT_STEP_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::bit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table_eval(l: &DecisionList, assignment: &[bool]) -> bool {
        // Second evaluator: walk levels over an explicit assignment vector.
        for (lit, b) in l.levels() {
            if assignment[lit.var] != lit.negated {
                return *b;
            }
        }
        l.default_bit()
    }

    #[test]
    fn spec_examples() {
        let l = DecisionList::new(3, vec![(Literal::pos(0), true), (Literal::neg(1), false)], true).unwrap();
        assert!(l.evaluate_bits(&[true, false, true]).unwrap());
        assert!(l.evaluate_bits(&[false, true, false]).unwrap());
        assert!(!l.evaluate_bits(&[false, false, false]).unwrap());
        assert!(DecisionList::new(3, vec![(Literal::pos(0), true), (Literal::neg(0), false)], true).is_err());
    }

    #[test]
    fn evaluators_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let l = DecisionList::random(4, &mut rng);
            for x in 0..16u64 {
                let a: Vec<bool> = (0..4).map(|v| bit(x, 4, v)).collect();
                assert_eq!(l.evaluate(x), table_eval(&l, &a));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let l = DecisionList::parse(3, "[(+3,1),(-1,0)]:0").unwrap();
        assert_eq!(l.levels(), &[(Literal::pos(2), true), (Literal::neg(0), false)]);
        assert_eq!(l.to_string(), "[(+3,1),(-1,0)]:0");
        assert_eq!("[]:1".parse::<DecisionList>().unwrap().to_string(), "[]:1");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let l = DecisionList::random(5, &mut rng);
            assert_eq!(DecisionList::parse(5, &l.to_string()).unwrap(), l);
        }
        assert!(DecisionList::parse(3, "[(+4,1)]:0").is_err());
        assert!(DecisionList::parse(3, "[(+1,2)]:0").is_err());
    }

    #[test]
    fn enumeration_counts() {
        for n in 1..=4 {
            let c = DecisionListClass::new(n).unwrap();
            assert_eq!(c.len() as u128, structure_count(n));
            let log_bound = (n as f64) * (n as f64).log2() + 2.0 * n as f64;
            assert!((c.distinct_functions() as f64).log2() <= log_bound);
        }
        assert_eq!(DecisionListClass::new(2).unwrap().len(), 32);
    }

    #[test]
    fn learner_state_round_trips() {
        let learner = DlLearner::new(5, ratio(1, 10), Some(40), int(0)).unwrap();
        let s = learner.initial();
        let mut w = BitWriter::new();
        learner.encode_decision(&s, &mut w);
        let bits = w.finish();
        let mut r = BitReader::new(&bits);
        assert_eq!(learner.decode_decision(&mut r).unwrap(), s);
        r.finish().unwrap();
    }

    #[test]
    fn rejects_epsilon_outside_range() {
        assert!(DlLearner::new(3, ratio(1, 8), None, int(0)).is_err());
        assert!(DlLearner::new(3, int(1), None, int(0)).is_err());
        assert_eq!(DlLearner::new(3, ratio(3, 4), None, int(0)).unwrap().levels(), 1);
    }

    /// Pair `(lit, bit)` is consistent with `f` below the prefix when every
    /// point reaching the level with `lit` true has label `bit`.
    fn consistent(f: &DecisionList, d: &DlState, lit: usize, bit: bool) -> bool {
        let c = d.constraints();
        let l = Literal::from_code(lit);
        DomainSpec::BooleanCube(f.n()).points().filter(|&x| c.satisfied(x, f.n()) && l.holds(x, f.n())).all(|x| f.evaluate(x) == bit)
    }

    #[test]
    fn exact_replay_never_deletes_consistent_pairs() {
        use crate::runtime::learner::{Outcome, Plan};
        use crate::runtime::sq::{estimate_sq, is_close_sq, SqBackend, SqOracle};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let f = DecisionList::random(6, &mut rng);
            let learner = DlLearner::new(6, ratio(1, 10), Some(10), int(0)).unwrap();
            let mut o = SqOracle::new(learner.domain(), f.target(), int(0), ratio(1, 1 << 30), SqBackend::exact()).unwrap();
            let mut d = learner.initial();
            let out = loop {
                let action = match learner.plan(&d).unwrap() {
                    Plan::Done(h) => break h,
                    Plan::Query { action, .. } => action,
                };
                let outcome = match &action {
                    Action::IsClose { hypothesis, epsilon, .. } => Outcome::Close(is_close_sq(&mut o, hypothesis.as_ref(), *epsilon).unwrap()),
                    Action::Estimate { region, tau, .. } => Outcome::Density(estimate_sq(&mut o, &region.subset, *tau).unwrap()),
                    Action::Probe { .. } => unreachable!(),
                };
                let before = d.clone();
                learner.apply(&mut d, &(), outcome).unwrap();
                if before.level() == d.level() {
                    for (lit, bit) in before.survivors() {
                        if !d.is_alive(lit, bit) && d.stage != Stage::Accepted {
                            assert!(!consistent(&f, &before, lit, bit), "deleted consistent ({}, {bit})", Literal::from_code(lit));
                        }
                    }
                } else {
                    let (l, b) = *d.prefix().last().unwrap();
                    assert!(consistent(&f, &before, l.code(), b));
                }
            };
            // Is-close under the exact backend accepts up to distance 2ε.
            assert!(out.distance(&f) <= ratio(1, 5), "{out} vs {f}");
        }
    }

    #[test]
    fn constant_zero_target() {
        let f = DecisionList::new(4, vec![(Literal::pos(0), false), (Literal::neg(2), false)], false).unwrap();
        let mut s = Stream::new(DomainSpec::BooleanCube(4), f.target(), int(0), 3).unwrap();
        let r = learn_decision_list(&mut s, 4, ratio(1, 4), Some(200)).unwrap();
        assert!(DomainSpec::BooleanCube(4).points().all(|x| !r.output.evaluate(x)));
    }

    #[test]
    fn streaming_run_succeeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ok = 0;
        for seed in 0..10 {
            let f = DecisionList::random(6, &mut rng);
            let mut s = Stream::new(DomainSpec::BooleanCube(6), f.target(), int(0), seed).unwrap();
            let r = learn_decision_list(&mut s, 6, ratio(1, 10), None).unwrap();
            ok += (r.output.distance(&f) <= ratio(3, 10)) as u32;
        }
        assert!(ok >= 9);
    }
}
