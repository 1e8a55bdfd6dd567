//! Exhaustive and sampled search for tightness or separation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::SeparationWitness;
use crate::class::{ExampleSubset, HypothesisClass, HypothesisSubset};
use crate::domain::{DomainSpec, Literal, LiteralConstraints};
use crate::error::{input, Error, Result};
use crate::graph::{check_alpha, check_epsilon, HypothesisGraph};
use crate::rational::{ceil_times, int, Rational};

/// Largest `|T|` and `|X|` for exhaustive search.
pub const EXHAUSTIVE_LIMIT: usize = 24;
/// Sampled search still needs each neighbourhood to fit in one word.
pub const MASK_LIMIT: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Sampled { seed: u64, budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `|T₀| = |T₁| = ⌈α|T|⌉`, `|S| ≥ α|X|`, density gap at least `α`.
    Separable { s: ExampleSubset, t0: HypothesisSubset, t1: HypothesisSubset },
    Tight(usize),
    /// Neither tight nor separable (exhaustive), or no witness found (sampled).
    Counterexample,
}

/// Neighbourhoods of a class over a domain of at most 64 points, one word each.
#[derive(Debug, Clone)]
pub(crate) struct MaskGraph {
    pub domain: DomainSpec,
    pub rows: Vec<u64>,
}

impl MaskGraph {
    pub fn new(graph: &HypothesisGraph, domain: DomainSpec) -> Result<Self> {
        if domain.size() > MASK_LIMIT {
            return input(format!("search needs |X| <= {MASK_LIMIT}, got {}", domain.size()));
        }
        let rows = (0..graph.len())
            .map(|h| graph.neighbours(h).ones().fold(0u64, |m, x| m | 1 << x))
            .collect();
        Ok(MaskGraph { domain, rows })
    }

    fn full(&self) -> u64 {
        let n = self.domain.size();
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    fn region_mask(&self, s: &ExampleSubset) -> u64 {
        s.expand(self.domain).into_iter().fold(0u64, |m, x| m | 1 << x)
    }

    /// `(e(h, S), h)` for `h ∈ T`, ascending.
    fn ranked(&self, t: &[usize], s: u64) -> Vec<(u32, usize)> {
        let mut v: Vec<(u32, usize)> = t.iter().map(|&h| ((self.rows[h] & s).count_ones(), h)).collect();
        v.sort_unstable();
        v
    }
}

/// Structured regions, largest first: grid intervals or subcubes.
pub(crate) fn structured_regions(domain: DomainSpec) -> Vec<ExampleSubset> {
    let mut out = Vec::new();
    match domain {
        DomainSpec::UnitGrid(n) => {
            for len in (1..=n).rev() {
                for start in 0..=n - len {
                    out.push(ExampleSubset::GridRange { start, end: start + len });
                }
            }
        }
        DomainSpec::BooleanCube(n) => {
            let n = n as usize;
            for fixed in 0..=n {
                for vars in combinations(n, fixed) {
                    for signs in 0u32..1 << fixed {
                        let lits = vars.iter().enumerate().map(|(i, &v)| Literal { var: v, negated: signs >> i & 1 == 1 });
                        out.push(ExampleSubset::Subcube(LiteralConstraints::from_literals(lits).expect("distinct vars")));
                    }
                }
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// What a candidate region must achieve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Criterion {
    pub alpha: Rational,
    /// Also require the localised witness to meet its gap floor.
    pub local: bool,
}

impl Criterion {
    fn accepts(&self, g: &MaskGraph, t: &[usize], s: u64) -> bool {
        let size = s.count_ones() as i64;
        if int(size) < self.alpha * g.domain.size() as i64 {
            return false;
        }
        let ranked = g.ranked(t, s);
        let a = ceil_times(self.alpha, t.len()).max(1);
        let low: i64 = ranked[..a].iter().map(|p| p.0 as i64).sum();
        let high: i64 = ranked[t.len() - a..].iter().map(|p| p.0 as i64).sum();
        if int(high - low) < self.alpha * (a as i64 * size) {
            return false;
        }
        if self.local {
            let m = local_side(self.alpha, t.len());
            let gap = ranked[t.len() - m].0 as i64 - ranked[m - 1].0 as i64;
            if int(gap) < self.alpha / 4 * size {
                return false;
            }
        }
        true
    }
}

fn local_side(alpha: Rational, t: usize) -> usize {
    ceil_times(alpha * alpha / 2, t).max(1)
}

/// First region (structured, then exhaustive or sampled) meeting `crit`.
pub(crate) fn find_region(
    g: &MaskGraph,
    t: &[usize],
    crit: Criterion,
    mode: SearchMode,
) -> Option<ExampleSubset> {
    let a = ceil_times(crit.alpha, t.len()).max(1);
    if 2 * a > t.len() {
        return None;
    }
    for s in structured_regions(g.domain) {
        if crit.accepts(g, t, g.region_mask(&s)) {
            return Some(s);
        }
    }
    let to_subset = |m: u64| ExampleSubset::explicit((0..g.domain.size()).filter(|&x| m >> x & 1 == 1));
    match mode {
        SearchMode::Exhaustive => (1u64..=g.full())
            .into_par_iter()
            .find_first(|&m| crit.accepts(g, t, m))
            .map(to_subset),
        SearchMode::Sampled { seed, budget } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..budget)
                .map(|_| rng.gen::<u64>() & g.full())
                .find(|&m| m != 0 && crit.accepts(g, t, m))
                .map(to_subset)
        }
    }
}

/// Decides whether `T` is `(α, ε)`-tight or `α`-separable.
///
/// Exhaustive mode requires `|T|, |X| ≤ 24`; a `Counterexample` there is
/// conclusive. Sampled mode tries structured regions and then `budget`
/// random subsets.
pub fn check_separability(
    class: &dyn HypothesisClass,
    t: &HypothesisSubset,
    alpha: Rational,
    epsilon: Rational,
    mode: SearchMode,
) -> Result<Verdict> {
    check_alpha(alpha)?;
    check_epsilon(epsilon)?;
    t.validate(class)?;
    if t.is_empty() {
        return input("T must be non-empty");
    }
    let domain = class.domain();
    if mode == SearchMode::Exhaustive && (t.len() > EXHAUSTIVE_LIMIT || domain.size() > EXHAUSTIVE_LIMIT as u64) {
        return input(format!("exhaustive search needs |T|, |X| <= {EXHAUSTIVE_LIMIT}"));
    }
    let graph = HypothesisGraph::new(class)?;
    if let Some(h) = graph.tight_center(&t.to_bitset(class.len()), alpha, epsilon) {
        return Ok(Verdict::Tight(h));
    }
    let masks = MaskGraph::new(&graph, domain)?;
    let members: Vec<usize> = t.expand().into_iter().collect();
    let found = find_region(&masks, &members, Criterion { alpha, local: false }, mode);
    Ok(match found {
        None => Verdict::Counterexample,
        Some(s) => {
            let ranked = masks.ranked(&members, masks.region_mask(&s));
            let a = ceil_times(alpha, members.len()).max(1);
            Verdict::Separable {
                s,
                t0: HypothesisSubset::explicit(ranked[..a].iter().map(|p| p.1)),
                t1: HypothesisSubset::explicit(ranked[members.len() - a..].iter().map(|p| p.1)),
            }
        }
    })
}

/// Turns a density-gap region into an edge-count witness: the
/// `⌈α²|T|/2⌉` hypotheses of `T` with fewest and with most edges into `S`.
pub fn localize_witness(
    class: &dyn HypothesisClass,
    s: &ExampleSubset,
    t: &HypothesisSubset,
    alpha: Rational,
) -> Result<SeparationWitness> {
    check_alpha(alpha)?;
    let domain = class.domain();
    s.validate(domain)?;
    t.validate(class)?;
    let points = s.expand(domain);
    let mut ranked: Vec<(usize, usize)> = t
        .expand()
        .into_iter()
        .map(|h| (points.iter().filter(|&&x| class.evaluate(h, x)).count(), h))
        .collect();
    ranked.sort_unstable();
    let n = ranked.len();
    let m = local_side(alpha, n);
    if 2 * m > n {
        return Err(Error::Contract(format!("|T| = {n} is too small to split into two sides of {m}")));
    }
    let d0 = int(ranked[m - 1].0 as i64);
    let d1 = int(ranked[n - m].0 as i64);
    if d1 - d0 < alpha / 4 * points.len() as i64 {
        return Err(Error::Contract("S does not separate T: edge-count gap below alpha/4 |S|".into()));
    }
    Ok(SeparationWitness {
        s: s.clone(),
        t0: HypothesisSubset::explicit(ranked[..m].iter().map(|p| p.1)),
        t1: HypothesisSubset::explicit(ranked[n - m..].iter().map(|p| p.1)),
        d0,
        d1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::threshold::ThresholdClass;
    use crate::graph::density;
    use crate::oracle::{validate_witness, WitnessFloors};
    use crate::rational::ratio;

    #[test]
    fn thresholds_are_tight_or_separable() {
        for n in 3..=6u64 {
            let class = ThresholdClass::new(n).unwrap();
            let h = class.len();
            for bits in 1u32..1 << h {
                let t = HypothesisSubset::explicit((0..h).filter(|&i| bits >> i & 1 == 1));
                let v = check_separability(&class, &t, ratio(3, 10), ratio(1, 10), SearchMode::Exhaustive).unwrap();
                assert_ne!(v, Verdict::Counterexample, "n={n} T={t:?}");
                if let Verdict::Separable { s, t0, t1 } = v {
                    let gap = density(&class, &s, &t1).unwrap() - density(&class, &s, &t0).unwrap();
                    assert!(gap >= ratio(3, 10));
                }
            }
        }
    }

    #[test]
    fn localized_witness_validates() {
        let class = ThresholdClass::new(16).unwrap();
        let t = HypothesisSubset::all(&class);
        let s = ExampleSubset::all(class.domain());
        let alpha = ratio(3, 10);
        let w = localize_witness(&class, &s, &t, alpha).unwrap();
        validate_witness(&class, &t.expand(), &w, WitnessFloors::localized(alpha)).unwrap();
    }

    #[test]
    fn localize_rejects_flat_regions() {
        let class = ThresholdClass::new(8).unwrap();
        let t = HypothesisSubset::explicit([5, 6, 7, 8]);
        let s = ExampleSubset::GridRange { start: 0, end: 4 };
        assert!(matches!(localize_witness(&class, &s, &t, ratio(1, 2)), Err(Error::Contract(_))));
    }

    #[test]
    fn sampled_mode_is_deterministic() {
        let class = ThresholdClass::new(20).unwrap();
        let t = HypothesisSubset::explicit([0, 3, 7, 12, 19]);
        let mode = SearchMode::Sampled { seed: 9, budget: 100 };
        let a = check_separability(&class, &t, ratio(1, 4), ratio(1, 100), mode).unwrap();
        let b = check_separability(&class, &t, ratio(1, 4), ratio(1, 100), mode).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a, Verdict::Separable { .. }));
    }

    #[test]
    fn cube_regions_start_with_the_whole_cube() {
        let regions = structured_regions(DomainSpec::BooleanCube(3));
        assert_eq!(regions.len(), 27);
        assert_eq!(regions[0].len(DomainSpec::BooleanCube(3)), 8);
    }
}
