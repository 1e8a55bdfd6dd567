//! Statistical-query access to a labelled distribution, with optional
//! random classification noise, and the one-query forms of Is-close and
//! Estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::class::ExampleSubset;
use crate::domain::{DomainSpec, Point};
use crate::error::{input, Result};
use crate::rational::{int, ratio, Rational};
use crate::runtime::stream::{Stream, Target};
use crate::runtime::subroutines::Noise;

/// A statistical query `ψ(x, y)`.
pub type SqPredicate<'a> = &'a dyn Fn(Point, bool) -> bool;

/// Resolution of the adversarial perturbation: multiples of `τ/PERTURB_STEPS`.
const PERTURB_STEPS: i64 = 1024;

pub enum SqBackend {
    /// Exact expectation plus a seeded perturbation in `[-scale·τ, scale·τ]`.
    ExactAdversarial { rng: ChaCha8Rng, scale: Rational },
    /// Empirical mean over `samples` fresh stream draws per query.
    Sampled { stream: Box<Stream>, samples: u64 },
}

impl SqBackend {
    /// The exact backend with no perturbation.
    pub fn exact() -> Self {
        SqBackend::ExactAdversarial { rng: ChaCha8Rng::seed_from_u64(0), scale: int(0) }
    }

    pub fn adversarial(seed: u64, scale: Rational) -> Result<Self> {
        if scale < int(0) || scale > int(1) {
            return input("perturbation scale must lie in [0,1]");
        }
        Ok(SqBackend::ExactAdversarial { rng: ChaCha8Rng::seed_from_u64(seed), scale })
    }

    /// Samples per query so that one answer is within `τ` except with
    /// probability `δ` (Hoeffding).
    pub fn sampled(stream: Stream, tolerance: Rational, delta: f64) -> Self {
        let t = crate::rational::to_f64(tolerance);
        let samples = ((2.0 / delta).ln() / (2.0 * t * t)).ceil().max(1.0) as u64;
        SqBackend::Sampled { stream: Box::new(stream), samples }
    }
}

/// Answers `E[ψ(x,y)]` within additive tolerance `τ`, where `x` is uniform
/// and `y = f(x)` flipped with probability `η`.
pub struct SqOracle {
    domain: DomainSpec,
    target: Target,
    noise: Noise,
    tolerance: Rational,
    backend: SqBackend,
    queries: u64,
}

impl SqOracle {
    pub fn new(domain: DomainSpec, target: Target, eta: Rational, tolerance: Rational, backend: SqBackend) -> Result<Self> {
        if tolerance <= int(0) || tolerance >= int(1) {
            return input("SQ tolerance must lie in (0,1)");
        }
        if let SqBackend::Sampled { stream, .. } = &backend {
            if stream.noise() != eta || stream.domain() != domain {
                return input("sampled backend stream must share the oracle's domain and noise rate");
            }
        }
        Ok(SqOracle { domain, target, noise: Noise::new(eta)?, tolerance, backend, queries: 0 })
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn tolerance(&self) -> Rational {
        self.tolerance
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    /// Number of queries answered so far.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// The noisy expectation computed by summing over the whole domain.
    pub fn exact_expectation(&self, psi: SqPredicate<'_>) -> Rational {
        let eta = self.noise.eta();
        let mut clean = 0i64;
        let mut flipped = 0i64;
        for x in self.domain.points() {
            let y = (self.target)(x);
            clean += psi(x, y) as i64;
            flipped += psi(x, !y) as i64;
        }
        ((int(1) - eta) * clean + eta * flipped) / self.domain.size() as i64
    }

    pub fn answer(&mut self, psi: SqPredicate<'_>) -> Rational {
        self.queries += 1;
        let tol = self.tolerance;
        let exact = match &self.backend {
            SqBackend::ExactAdversarial { .. } => Some(self.exact_expectation(psi)),
            SqBackend::Sampled { .. } => None,
        };
        match &mut self.backend {
            SqBackend::ExactAdversarial { rng, scale } => {
                let e = exact.unwrap_or_default();
                if *scale == int(0) {
                    return e;
                }
                let step = rng.gen_range(-PERTURB_STEPS..=PERTURB_STEPS);
                (e + tol * *scale * ratio(step, PERTURB_STEPS)).max(int(0)).min(int(1))
            }
            SqBackend::Sampled { stream, samples } => {
                let mut hits = 0i64;
                for _ in 0..*samples {
                    let e = stream.draw();
                    hits += psi(e.x, e.y) as i64;
                }
                ratio(hits, *samples as i64)
            }
        }
    }
}

/// Is-close with the single query `ψ(x,y) = [h(x) = y]`.
pub fn is_close_sq(oracle: &mut SqOracle, h: &dyn Fn(Point) -> bool, epsilon: Rational) -> Result<bool> {
    if epsilon < int(0) || epsilon > int(1) {
        return input("epsilon must lie in [0,1]");
    }
    let agree = oracle.answer(&|x, y| h(x) == y);
    let noise = oracle.noise();
    let dist = (int(1) - noise.eta() - agree) / noise.contraction();
    Ok(dist <= epsilon * 2)
}

/// Estimate with the single query `ψ(x,y) = [x ∈ S ∧ y = 1]`, rescaled by
/// `|X|/|S|`.
pub fn estimate_sq(oracle: &mut SqOracle, s: &ExampleSubset, tau: Rational) -> Result<Rational> {
    let domain = oracle.domain();
    s.validate(domain)?;
    let size = s.len(domain);
    if size == 0 {
        return input("estimate over an empty region");
    }
    if tau <= int(0) || tau >= int(1) {
        return input("tau must lie in (0,1)");
    }
    let noise = oracle.noise();
    let weight = ratio(size as i64, domain.size() as i64);
    if oracle.tolerance() > tau * weight * noise.contraction() {
        return input("SQ tolerance exceeds tau·|S|/|X|·(1−2η)");
    }
    let region = s.region(domain);
    let a = oracle.answer(&|x, y| y && region.contains(x));
    Ok(noise.debias(a / weight))
}
