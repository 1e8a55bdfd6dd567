//! Is-close and Estimate over a labelled stream, plus rejection sampling.
//!
//! The counters are exposed as small state machines so that streaming
//! learners can drive them one example at a time and serialize them.

use crate::class::{ExampleSubset, Region};
use crate::domain::{DomainSpec, Literal, LiteralConstraints, Point};
use crate::error::{input, Error, Result};
use crate::rational::{int, ratio, to_f64, Rational};
use crate::runtime::stream::{LabeledExample, Stream};

/// Rejection sampling gives up after this many times the expected wait.
pub const REJECTION_FACTOR: u64 = 64;

/// Known classification-noise rate used to de-bias the subroutines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Noise(Rational);

impl Noise {
    pub const NONE: Noise = Noise(Rational::new_raw(0, 1));

    pub fn new(eta: Rational) -> Result<Self> {
        if eta < int(0) || eta >= ratio(1, 2) {
            return input("noise rate must lie in [0, 1/2)");
        }
        Ok(Noise(eta))
    }

    pub fn eta(self) -> Rational {
        self.0
    }

    /// `1 − 2η`, the factor by which noise shrinks every correlation.
    pub fn contraction(self) -> Rational {
        int(1) - self.0 * 2
    }

    /// Disagreement rate Is-close accepts: `η + (1−2η)·2ε`.
    pub fn close_threshold(self, epsilon: Rational) -> Rational {
        self.0 + self.contraction() * epsilon * 2
    }

    /// Maps an observed positive rate back to the noiseless one, clamped to `[0,1]`.
    pub fn debias(self, observed: Rational) -> Rational {
        if self.0 == int(0) {
            return observed;
        }
        ((observed - self.0) / self.contraction()).max(int(0)).min(int(1))
    }

    /// Sample-size inflation `(1−2η)^{-2}` for a repetition count `k`.
    pub fn inflate(self, k: u64) -> u64 {
        let c = to_f64(self.contraction());
        (k as f64 / (c * c)).ceil() as u64
    }
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        return input("repetition count k must be at least 1");
    }
    Ok(())
}

fn check_open_unit(name: &str, r: Rational) -> Result<()> {
    if r <= int(0) || r >= int(1) {
        return input(format!("{name} must lie in (0,1)"));
    }
    Ok(())
}

/// Running state of one Is-close call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CloseCounter {
    pub seen: u64,
    pub disagreements: u64,
}

impl CloseCounter {
    /// Feeds one example; returns the verdict after the `k`-th.
    pub fn feed(&mut self, disagrees: bool, k: u64, epsilon: Rational, noise: Noise) -> Option<bool> {
        self.seen += 1;
        self.disagreements += disagrees as u64;
        (self.seen >= k).then(|| int(self.disagreements as i64) <= noise.close_threshold(epsilon) * k as i64)
    }
}

/// Running state of one Estimate call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimateCounter {
    pub draws: u64,
    pub in_region: u64,
    pub ones: u64,
}

impl EstimateCounter {
    /// Feeds one example; returns the estimate once `k` examples fell in
    /// `S`, or an error when the draw cap is reached with none inside.
    pub fn feed(&mut self, inside: bool, y: bool, k: u64, cap: u64, noise: Noise) -> Option<Result<Rational>> {
        self.draws += 1;
        if inside {
            self.in_region += 1;
            self.ones += y as u64;
        }
        if self.in_region >= k || self.draws >= cap {
            return Some(self.result(noise));
        }
        None
    }

    fn result(&self, noise: Noise) -> Result<Rational> {
        if self.in_region == 0 {
            return Err(Error::EstimationFailure { draws: self.draws });
        }
        Ok(noise.debias(ratio(self.ones as i64, self.in_region as i64)))
    }
}

/// Draw cap `⌈2k/α_min⌉` of Estimate.
pub fn estimate_cap(k: u64, alpha_min: Rational) -> u64 {
    let c = (int(2 * k as i64) / alpha_min).ceil();
    c.to_integer() as u64
}

/// Algorithm "Is-close": draws exactly `k` examples and accepts when the
/// disagreement rate is at most `2ε` (noise-corrected with the stream's
/// known rate).
pub fn is_close(stream: &mut Stream, h: &dyn Fn(Point) -> bool, epsilon: Rational, k: u64) -> Result<bool> {
    check_k(k)?;
    if epsilon < int(0) || epsilon > int(1) {
        return input("epsilon must lie in [0,1]");
    }
    let noise = Noise::new(stream.noise())?;
    let mut c = CloseCounter::default();
    loop {
        let e = stream.draw();
        if let Some(v) = c.feed(h(e.x) != e.y, k, epsilon, noise) {
            return Ok(v);
        }
    }
}

/// Algorithm "Estimate": returns the fraction of positive labels among the
/// first `k` examples that land in `S`, drawing at most `⌈2k/α_min⌉`.
pub fn estimate(stream: &mut Stream, s: &ExampleSubset, tau: Rational, k: u64, alpha_min: Rational) -> Result<Rational> {
    let domain = stream.domain();
    check_k(k)?;
    check_open_unit("tau", tau)?;
    if alpha_min <= int(0) || alpha_min > int(1) {
        return input("alpha_min must lie in (0,1]");
    }
    s.validate(domain)?;
    let size = s.len(domain);
    if size == 0 {
        return input("estimate over an empty region");
    }
    if int(size as i64) < alpha_min * domain.size() as i64 {
        return input(format!("region of {size} points is below the weight floor alpha_min·|X|"));
    }
    let noise = Noise::new(stream.noise())?;
    let region = s.region(domain);
    let cap = estimate_cap(k, alpha_min);
    let mut c = EstimateCounter::default();
    loop {
        let e = stream.draw();
        if let Some(r) = c.feed(region.contains(e.x), e.y, k, cap, noise) {
            return r;
        }
    }
}

/// Estimate variant that rejection-samples `k` examples inside `S`
/// instead of bounding total draws; only the `2e^{-2kτ²}` term applies.
pub fn estimate_conditioned(stream: &mut Stream, s: &ExampleSubset, tau: Rational, k: u64) -> Result<Rational> {
    check_k(k)?;
    check_open_unit("tau", tau)?;
    let domain = stream.domain();
    s.validate(domain)?;
    let size = s.len(domain);
    if size == 0 {
        return input("estimate over an empty region");
    }
    let noise = Noise::new(stream.noise())?;
    let region = s.region(domain);
    let cap = rejection_cap(domain, size);
    let mut ones = 0u64;
    for _ in 0..k {
        ones += sample_in(stream, &region, cap)?.y as u64;
    }
    Ok(noise.debias(ratio(ones as i64, k as i64)))
}

/// Draw budget for one rejection-sampled example from a region of `size`.
pub fn rejection_cap(domain: DomainSpec, size: u64) -> u64 {
    REJECTION_FACTOR * domain.size().div_ceil(size.max(1))
}

/// Draws until an example lands in `region`, giving up after `cap` draws.
pub fn sample_in(stream: &mut Stream, region: &Region, cap: u64) -> Result<LabeledExample> {
    for _ in 0..cap {
        let e = stream.draw();
        if region.contains(e.x) {
            return Ok(e);
        }
    }
    Err(Error::NonTermination { cap })
}

/// Rejection-samples an example whose point satisfies every literal.
pub fn sample_conditioned(stream: &mut Stream, literals: &[Literal]) -> Result<LabeledExample> {
    let DomainSpec::BooleanCube(n) = stream.domain() else {
        return input("conditioned sampling needs a boolean-cube domain");
    };
    let c = LiteralConstraints::from_literals(literals.iter().copied())?;
    let s = ExampleSubset::Subcube(c);
    s.validate(stream.domain())?;
    let size = s.len(stream.domain());
    let cap = rejection_cap(DomainSpec::BooleanCube(n), size);
    sample_in(stream, &s.region(stream.domain()), cap)
}

/// Failure bound `2e^{-2kε²}` of Is-close.
pub fn is_close_failure_bound(epsilon: f64, k: u64) -> f64 {
    2.0 * (-2.0 * k as f64 * epsilon * epsilon).exp()
}

/// Failure bound `2(e^{-kα} + e^{-2kτ²})` of Estimate.
pub fn estimate_failure_bound(alpha: f64, tau: f64, k: u64) -> f64 {
    let k = k as f64;
    2.0 * ((-k * alpha).exp() + (-2.0 * k * tau * tau).exp())
}
