//! The hypotheses graph: hypotheses on one side, examples on the other,
//! an edge `(h, x)` whenever `h(x) = 1`.
//!
//! The free functions evaluate hypotheses directly and are the reference
//! definitions. [`HypothesisGraph`] materialises the adjacency as bitsets
//! for the brute-force oracle's inner loops.

use fixedbitset::FixedBitSet;

use crate::class::{check_index, ExampleSubset, HypothesisClass, HypothesisSubset};
use crate::domain::Point;
use crate::error::{input, Result};
use crate::rational::{ratio, Rational};

/// `e(S, T)`: number of pairs `(x, h) ∈ S × T` with `h(x) = 1`.
pub fn edge_count(class: &dyn HypothesisClass, s: &ExampleSubset, t: &HypothesisSubset) -> Result<u64> {
    let domain = class.domain();
    s.validate(domain)?;
    t.validate(class)?;
    let points = s.expand(domain);
    Ok(t.expand()
        .into_iter()
        .map(|h| points.iter().filter(|&&x| class.evaluate(h, x)).count() as u64)
        .sum())
}

/// `d(S, T) = e(S, T) / (|S|·|T|)`.
pub fn density(class: &dyn HypothesisClass, s: &ExampleSubset, t: &HypothesisSubset) -> Result<Rational> {
    let e = edge_count(class, s, t)?;
    let s_len = s.len(class.domain());
    if s_len == 0 || t.is_empty() {
        return input("density of an empty set");
    }
    Ok(ratio(e as i64, (s_len * t.len() as u64) as i64))
}

/// Fraction of domain points on which `h1` and `h2` disagree.
pub fn distance(class: &dyn HypothesisClass, h1: usize, h2: usize) -> Result<Rational> {
    check_index(class, h1)?;
    check_index(class, h2)?;
    let d = class.domain();
    let diff = d.points().filter(|&x| class.evaluate(h1, x) != class.evaluate(h2, x)).count();
    Ok(ratio(diff as i64, d.size() as i64))
}

/// `B_h(ε)`: every hypothesis within distance `ε` of `center`.
pub fn ball(class: &dyn HypothesisClass, center: usize, epsilon: Rational) -> Result<HypothesisSubset> {
    check_epsilon(epsilon)?;
    check_index(class, center)?;
    let mut out = std::collections::BTreeSet::new();
    for h in 0..class.len() {
        if distance(class, center, h)? <= epsilon {
            out.insert(h);
        }
    }
    Ok(HypothesisSubset::Explicit(out))
}

/// Some `h ∈ H` with `|T ∩ B_h(ε)| ≥ α|T|`, scanning centres in index order.
pub fn is_tight(
    class: &dyn HypothesisClass,
    t: &HypothesisSubset,
    alpha: Rational,
    epsilon: Rational,
) -> Result<Option<usize>> {
    check_alpha(alpha)?;
    check_epsilon(epsilon)?;
    t.validate(class)?;
    if t.is_empty() {
        return input("tightness of an empty set");
    }
    let members = t.expand();
    let need = alpha * Rational::from_integer(members.len() as i64);
    for center in 0..class.len() {
        let mut hit = 0i64;
        for &h in &members {
            if distance(class, center, h)? <= epsilon {
                hit += 1;
            }
        }
        if Rational::from_integer(hit) >= need {
            return Ok(Some(center));
        }
    }
    Ok(None)
}

pub(crate) fn check_alpha(alpha: Rational) -> Result<()> {
    if alpha <= Rational::from_integer(0) || alpha > Rational::from_integer(1) {
        return input("alpha must lie in (0, 1]");
    }
    Ok(())
}

pub(crate) fn check_epsilon(epsilon: Rational) -> Result<()> {
    if epsilon < Rational::from_integer(0) || epsilon > Rational::from_integer(1) {
        return input("epsilon must lie in [0, 1]");
    }
    Ok(())
}

/// Upper bound on `|H|·|X|` for materialising the adjacency.
pub const GRAPH_CELL_CAP: u64 = 1 << 28;

/// Bitset adjacency of a small class plus its pairwise disagreement counts.
#[derive(Debug, Clone)]
pub struct HypothesisGraph {
    domain_size: usize,
    rows: Vec<FixedBitSet>,
    /// `diff[a·|H| + b] = |N(a) △ N(b)|`.
    diff: Vec<u32>,
}

impl HypothesisGraph {
    pub fn new(class: &dyn HypothesisClass) -> Result<Self> {
        let size = class.domain().size();
        let h = class.len();
        if (h as u64).saturating_mul(size) > GRAPH_CELL_CAP || h > 8192 {
            return input(format!("class too large to materialise (|H| = {h}, |X| = {size})"));
        }
        let rows: Vec<FixedBitSet> = (0..h)
            .map(|i| {
                let mut row = FixedBitSet::with_capacity(size as usize);
                for x in 0..size {
                    if class.evaluate(i, x) {
                        row.insert(x as usize);
                    }
                }
                row
            })
            .collect();
        let mut diff = vec![0u32; h * h];
        for a in 0..h {
            for b in a + 1..h {
                let d = rows[a].symmetric_difference(&rows[b]).count() as u32;
                diff[a * h + b] = d;
                diff[b * h + a] = d;
            }
        }
        Ok(HypothesisGraph { domain_size: size as usize, rows, diff })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn neighbours(&self, h: usize) -> &FixedBitSet {
        &self.rows[h]
    }

    #[inline]
    pub fn label(&self, h: usize, x: Point) -> bool {
        self.rows[h].contains(x as usize)
    }

    /// `e({h}, S)`.
    pub fn edges_to(&self, h: usize, s: &FixedBitSet) -> u64 {
        self.rows[h].intersection(s).count() as u64
    }

    pub fn disagreements(&self, a: usize, b: usize) -> u32 {
        self.diff[a * self.rows.len() + b]
    }

    pub fn within(&self, a: usize, b: usize, epsilon: Rational) -> bool {
        ratio(self.disagreements(a, b) as i64, self.domain_size as i64) <= epsilon
    }

    pub fn ball(&self, center: usize, epsilon: Rational) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.len());
        for h in 0..self.len() {
            if self.within(center, h, epsilon) {
                out.insert(h);
            }
        }
        out
    }

    /// First centre (in index order) whose ball captures `≥ α|T|` of `t`.
    pub fn tight_center(&self, t: &FixedBitSet, alpha: Rational, epsilon: Rational) -> Option<usize> {
        let members: Vec<usize> = t.ones().collect();
        if members.is_empty() {
            return None;
        }
        let need = alpha * Rational::from_integer(members.len() as i64);
        // Integer disagreement budget: d ≤ ε|X|.
        let budget = (epsilon * Rational::from_integer(self.domain_size as i64)).floor().to_integer();
        (0..self.len()).find(|&c| {
            let hit = members.iter().filter(|&&h| (self.disagreements(c, h) as i64) <= budget).count();
            Rational::from_integer(hit as i64) >= need
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::threshold::ThresholdClass;
    use crate::rational::int;

    // h_b with b = (2i+1)/(2n): index i labels the first i grid points.
    fn th(n: u64) -> ThresholdClass {
        ThresholdClass::new(n).unwrap()
    }

    #[test]
    fn edge_count_examples() {
        let c = th(4);
        // S = {0.25, 0.5}, T = {h_{3/8}, h_{5/8}}.
        let s = ExampleSubset::explicit([0, 1]);
        let t = HypothesisSubset::explicit([1, 2]);
        assert_eq!(edge_count(&c, &s, &t).unwrap(), 3);
        assert_eq!(density(&c, &s, &t).unwrap(), ratio(3, 4));
        assert_eq!(edge_count(&c, &ExampleSubset::explicit([]), &t).unwrap(), 0);
        let all = ExampleSubset::all(c.domain());
        assert_eq!(edge_count(&c, &all, &HypothesisSubset::explicit([4])).unwrap(), 4);
        assert!(edge_count(&c, &all, &HypothesisSubset::explicit([5])).is_err());
        assert!(density(&c, &ExampleSubset::explicit([]), &t).is_err());
        assert_eq!(density(&c, &all, &HypothesisSubset::explicit([0])).unwrap(), int(0));
    }

    #[test]
    fn distance_examples() {
        let c = th(4);
        assert_eq!(distance(&c, 1, 2).unwrap(), ratio(1, 4));
        assert_eq!(distance(&c, 3, 3).unwrap(), int(0));
        assert_eq!(distance(&c, 0, 4).unwrap(), ratio(1, 1));
        // h_{1/8} labels nothing and h_{9/8} labels everything, so they
        // disagree on all four points, 0.25 included.
    }

    #[test]
    fn ball_examples() {
        let c = th(4);
        assert_eq!(ball(&c, 2, ratio(1, 4)).unwrap().expand(), [1, 2, 3].into_iter().collect());
        assert_eq!(ball(&c, 2, int(0)).unwrap().expand(), [2].into_iter().collect());
        assert_eq!(ball(&c, 2, int(1)).unwrap().len(), 5);
    }

    #[test]
    fn tightness_examples() {
        let c = th(4);
        let all = HypothesisSubset::all(&c);
        let center = is_tight(&c, &all, int(1), ratio(1, 2)).unwrap();
        assert_eq!(center, Some(2));
        assert_eq!(is_tight(&c, &HypothesisSubset::explicit([3]), int(1), int(0)).unwrap(), Some(3));
        let c8 = th(8);
        let far = HypothesisSubset::explicit([0, 8]);
        assert_eq!(is_tight(&c8, &far, int(1), ratio(3, 10)).unwrap(), None);
    }

    #[test]
    fn graph_agrees_with_reference() {
        let c = th(6);
        let g = HypothesisGraph::new(&c).unwrap();
        for a in 0..c.len() {
            for b in 0..c.len() {
                assert_eq!(ratio(g.disagreements(a, b) as i64, 6), distance(&c, a, b).unwrap());
            }
        }
        let t = HypothesisSubset::explicit([0, 1, 5, 6]);
        for (al, ep) in [(ratio(1, 2), ratio(1, 6)), (ratio(3, 4), ratio(1, 3)), (int(1), ratio(1, 2))] {
            let fast = g.tight_center(&t.to_bitset(c.len()), al, ep);
            assert_eq!(fast, is_tight(&c, &t, al, ep).unwrap());
        }
    }
}
