//! Hypothesis classes and the subsets of hypotheses/examples the rest of
//! the library talks about.

use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::domain::{DomainSpec, LiteralConstraints, Point};
use crate::error::{input, Result};

/// A finite family of classifiers `h: X → {0,1}` indexed by `0..len()`.
///
/// `evaluate` must be total and deterministic on `0..len() × domain`.
pub trait HypothesisClass: Send + Sync {
    fn domain(&self) -> DomainSpec;
    fn len(&self) -> usize;
    fn evaluate(&self, h: usize, x: Point) -> bool;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Human-readable description of hypothesis `h`.
    fn describe(&self, h: usize) -> String {
        format!("h{h}")
    }
}

pub(crate) fn check_index(class: &dyn HypothesisClass, h: usize) -> Result<()> {
    if h >= class.len() {
        return input(format!("hypothesis index {h} out of range (|H| = {})", class.len()));
    }
    Ok(())
}

/// A set of hypotheses, either listed or as a contiguous index range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypothesisSubset {
    Explicit(BTreeSet<usize>),
    /// Indices `start..end`.
    Range { start: usize, end: usize },
}

impl HypothesisSubset {
    pub fn explicit(items: impl IntoIterator<Item = usize>) -> Self {
        HypothesisSubset::Explicit(items.into_iter().collect())
    }

    pub fn all(class: &dyn HypothesisClass) -> Self {
        HypothesisSubset::Range { start: 0, end: class.len() }
    }

    pub fn expand(&self) -> BTreeSet<usize> {
        match self {
            HypothesisSubset::Explicit(s) => s.clone(),
            HypothesisSubset::Range { start, end } => (*start..*end).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            HypothesisSubset::Explicit(s) => s.len(),
            HypothesisSubset::Range { start, end } => end.saturating_sub(*start),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, h: usize) -> bool {
        match self {
            HypothesisSubset::Explicit(s) => s.contains(&h),
            HypothesisSubset::Range { start, end } => (*start..*end).contains(&h),
        }
    }

    pub fn validate(&self, class: &dyn HypothesisClass) -> Result<()> {
        match self {
            HypothesisSubset::Explicit(s) => match s.iter().next_back() {
                Some(&h) => check_index(class, h),
                None => Ok(()),
            },
            HypothesisSubset::Range { start, end } => {
                if start > end || *end > class.len() {
                    return input(format!("hypothesis range {start}..{end} invalid (|H| = {})", class.len()));
                }
                Ok(())
            }
        }
    }

    pub fn to_bitset(&self, len: usize) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(len);
        for h in self.expand() {
            b.insert(h);
        }
        b
    }
}

/// A set of domain points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExampleSubset {
    Explicit(BTreeSet<Point>),
    /// Grid points with index in `start..end`.
    GridRange { start: Point, end: Point },
    /// Cube points satisfying every literal.
    Subcube(LiteralConstraints),
}

impl ExampleSubset {
    pub fn explicit(items: impl IntoIterator<Item = Point>) -> Self {
        ExampleSubset::Explicit(items.into_iter().collect())
    }

    pub fn all(domain: DomainSpec) -> Self {
        match domain {
            DomainSpec::UnitGrid(n) => ExampleSubset::GridRange { start: 0, end: n },
            DomainSpec::BooleanCube(_) => ExampleSubset::Subcube(LiteralConstraints::new()),
        }
    }

    pub fn validate(&self, domain: DomainSpec) -> Result<()> {
        match (self, domain) {
            (ExampleSubset::Explicit(s), d) => match s.iter().next_back() {
                Some(&x) if !d.contains(x) => input(format!("point {x} outside the domain")),
                _ => Ok(()),
            },
            (ExampleSubset::GridRange { start, end }, DomainSpec::UnitGrid(n)) => {
                if start > end || *end > n {
                    return input(format!("grid range {start}..{end} outside 0..{n}"));
                }
                Ok(())
            }
            (ExampleSubset::Subcube(c), DomainSpec::BooleanCube(n)) => {
                if c.literals().any(|l| l.var >= n as usize) {
                    return input("constraint on a variable outside the cube");
                }
                Ok(())
            }
            _ => input("example subset descriptor does not match the domain kind"),
        }
    }

    pub fn contains(&self, domain: DomainSpec, x: Point) -> bool {
        match (self, domain) {
            (ExampleSubset::Explicit(s), _) => s.contains(&x),
            (ExampleSubset::GridRange { start, end }, _) => (*start..*end).contains(&x),
            (ExampleSubset::Subcube(c), DomainSpec::BooleanCube(n)) => c.satisfied(x, n),
            (ExampleSubset::Subcube(_), DomainSpec::UnitGrid(_)) => false,
        }
    }

    pub fn len(&self, domain: DomainSpec) -> u64 {
        match (self, domain) {
            (ExampleSubset::Explicit(s), _) => s.len() as u64,
            (ExampleSubset::GridRange { start, end }, _) => end.saturating_sub(*start),
            (ExampleSubset::Subcube(c), DomainSpec::BooleanCube(n)) => c.count(n),
            (ExampleSubset::Subcube(_), DomainSpec::UnitGrid(_)) => 0,
        }
    }

    pub fn is_empty(&self, domain: DomainSpec) -> bool {
        self.len(domain) == 0
    }

    pub fn expand(&self, domain: DomainSpec) -> BTreeSet<Point> {
        match self {
            ExampleSubset::Explicit(s) => s.clone(),
            ExampleSubset::GridRange { start, end } => (*start..*end).collect(),
            ExampleSubset::Subcube(_) => domain.points().filter(|&x| self.contains(domain, x)).collect(),
        }
    }

    /// A membership test specialised for hot sampling loops.
    pub fn region(&self, domain: DomainSpec) -> Region {
        match (self, domain) {
            (ExampleSubset::GridRange { start, end }, _) => Region::Range { start: *start, end: *end },
            (ExampleSubset::Subcube(c), DomainSpec::BooleanCube(n)) => {
                let (mask, want) = c.masks(n);
                Region::Mask { mask, want }
            }
            _ => Region::Set(self.expand(domain)),
        }
    }
}

impl fmt::Display for ExampleSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExampleSubset::Explicit(s) => write!(f, "{}", fmt_set(s.iter())),
            ExampleSubset::GridRange { start, end } => write!(f, "[{start}..{end})"),
            ExampleSubset::Subcube(c) => {
                let lits: Vec<String> = c.literals().map(|l| l.to_string()).collect();
                write!(f, "cube({})", lits.join(","))
            }
        }
    }
}

impl std::str::FromStr for ExampleSubset {
    type Err = crate::error::Error;

    /// Parses the [`Display`](fmt::Display) rendering.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(ExampleSubset::Explicit(parse_set(s)?));
        }
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(')')) {
            let bad = || crate::error::Error::Input(format!("bad grid range `{s}`"));
            let (a, b) = inner.split_once("..").ok_or_else(bad)?;
            let start = a.trim().parse().map_err(|_| bad())?;
            let end = b.trim().parse().map_err(|_| bad())?;
            return Ok(ExampleSubset::GridRange { start, end });
        }
        if let Some(inner) = s.strip_prefix("cube(").and_then(|r| r.strip_suffix(')')) {
            let lits = inner
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(crate::domain::Literal::parse)
                .collect::<Result<Vec<_>>>()?;
            return Ok(ExampleSubset::Subcube(LiteralConstraints::from_literals(lits)?));
        }
        input(format!("`{s}` is not an example subset"))
    }
}

/// Compiled membership test for a set of points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Region {
    Range { start: Point, end: Point },
    Mask { mask: u64, want: u64 },
    Set(BTreeSet<Point>),
}

impl Region {
    #[inline]
    pub fn contains(&self, x: Point) -> bool {
        match self {
            Region::Range { start, end } => *start <= x && x < *end,
            Region::Mask { mask, want } => x & mask == *want,
            Region::Set(s) => s.contains(&x),
        }
    }
}

/// `{a,b,c}` rendering used by witness logs.
pub fn fmt_set<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    let parts: Vec<String> = items.map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Parses the `{a,b,c}` rendering back.
pub fn parse_set(s: &str) -> Result<BTreeSet<u64>> {
    let inner = s
        .trim()
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| crate::error::Error::Input(format!("`{s}` is not a set")))?;
    if inner.trim().is_empty() {
        return Ok(BTreeSet::new());
    }
    inner
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| crate::error::Error::Input(format!("bad set element `{p}`"))))
        .collect()
}
