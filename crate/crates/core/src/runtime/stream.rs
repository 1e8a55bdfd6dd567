//! Labelled-example streams under the uniform distribution.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::class::HypothesisClass;
use crate::domain::{DomainSpec, Point};
use crate::error::{input, Result};
use crate::rational::{int, ratio, Rational};

pub type Target = Arc<dyn Fn(Point) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledExample {
    pub x: Point,
    pub y: bool,
}

/// Draws `x` uniformly from the domain and labels it `f(x)`, flipped
/// independently with probability `η`. `draws()` is the sample meter.
#[derive(Clone)]
pub struct Stream {
    domain: DomainSpec,
    target: Target,
    eta: Rational,
    flip: Option<(u32, u32)>,
    rng: ChaCha8Rng,
    draws: u64,
}

impl std::fmt::Debug for Stream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stream")
            .field("domain", &self.domain)
            .field("eta", &self.eta)
            .field("draws", &self.draws)
            .finish()
    }
}

impl Stream {
    pub fn new(domain: DomainSpec, target: Target, eta: Rational, seed: u64) -> Result<Self> {
        if eta < int(0) || eta >= ratio(1, 2) {
            return input("noise rate must lie in [0, 1/2)");
        }
        let flip = if eta == int(0) {
            None
        } else {
            let (n, d) = (*eta.numer(), *eta.denom());
            if d > u32::MAX as i64 {
                return input("noise rate denominator too large");
            }
            Some((n as u32, d as u32))
        };
        Ok(Stream { domain, target, eta, flip, rng: ChaCha8Rng::seed_from_u64(seed), draws: 0 })
    }

    /// Stream labelled by hypothesis `f` of `class`.
    pub fn for_class(class: Arc<dyn HypothesisClass>, f: usize, eta: Rational, seed: u64) -> Result<Self> {
        crate::class::check_index(class.as_ref(), f)?;
        let domain = class.domain();
        Stream::new(domain, Arc::new(move |x| class.evaluate(f, x)), eta, seed)
    }

    pub fn draw(&mut self) -> LabeledExample {
        self.draws += 1;
        let x = self.rng.gen_range(0..self.domain.size());
        let mut y = (self.target)(x);
        if let Some((n, d)) = self.flip {
            if self.rng.gen_ratio(n, d) {
                y = !y;
            }
        }
        LabeledExample { x, y }
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn noise(&self) -> Rational {
        self.eta
    }

    /// Noise-free label of `x`; for test oracles and reports only.
    pub fn target_label(&self, x: Point) -> bool {
        (self.target)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::threshold::ThresholdClass;

    fn th_stream(eta: Rational, seed: u64) -> Stream {
        let c: Arc<dyn HypothesisClass> = Arc::new(ThresholdClass::new(64).unwrap());
        Stream::for_class(c, 20, eta, seed).unwrap()
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = th_stream(ratio(1, 5), 9);
        let mut b = th_stream(ratio(1, 5), 9);
        for _ in 0..1000 {
            assert_eq!(a.draw(), b.draw());
        }
        assert_eq!(a.draws(), 1000);
    }

    #[test]
    fn noiseless_labels_match_target() {
        let mut s = th_stream(int(0), 3);
        for _ in 0..500 {
            let e = s.draw();
            assert_eq!(e.y, e.x < 20);
        }
    }

    #[test]
    fn flip_rate_matches_eta() {
        let mut s = th_stream(ratio(1, 5), 11);
        let n = 100_000;
        let flips = (0..n).filter(|_| {
            let e = s.draw();
            e.y != s.target_label(e.x)
        });
        let rate = flips.count() as f64 / n as f64;
        assert!((rate - 0.2).abs() <= 0.02, "flip rate {rate}");
    }

    #[test]
    fn rejects_bad_noise() {
        let c: Arc<dyn HypothesisClass> = Arc::new(ThresholdClass::new(4).unwrap());
        assert!(Stream::for_class(c.clone(), 0, ratio(1, 2), 0).is_err());
        assert!(Stream::for_class(c, 9, int(0), 0).is_err());
    }
}
