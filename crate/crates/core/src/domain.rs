//! Finite example domains.
//!
//! Points are addressed by index. On the unit grid the index `j` stands for
//! the value `(j+1)/n`; on the boolean cube the index is the assignment read
//! as a binary number with `x₁` as the most significant bit, so ascending
//! index order is lexicographic bit order.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{input, Result};
use crate::rational::{ratio, Rational};

pub type Point = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainSpec {
    /// `{1/n, 2/n, …, n/n}`.
    UnitGrid(u64),
    /// `{0,1}ⁿ`.
    BooleanCube(u32),
}

impl DomainSpec {
    pub fn unit_grid(n: u64) -> Result<Self> {
        if n == 0 {
            return input("unit grid needs n >= 1");
        }
        Ok(DomainSpec::UnitGrid(n))
    }

    pub fn boolean_cube(n: u32) -> Result<Self> {
        if n == 0 || n > 40 {
            return input("boolean cube needs 1 <= n <= 40");
        }
        Ok(DomainSpec::BooleanCube(n))
    }

    pub fn size(&self) -> u64 {
        match *self {
            DomainSpec::UnitGrid(n) => n,
            DomainSpec::BooleanCube(n) => 1u64 << n,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> {
        0..self.size()
    }

    /// Grid value of a point, `(j+1)/n`. Only meaningful on the unit grid.
    pub fn grid_value(&self, x: Point) -> Rational {
        match *self {
            DomainSpec::UnitGrid(n) => ratio(x as i64 + 1, n as i64),
            DomainSpec::BooleanCube(_) => panic!("grid_value on a boolean cube"),
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        x < self.size()
    }
}

/// Value of variable `var` (0-based) in a cube point over `n` variables.
#[inline]
pub fn bit(x: Point, n: u32, var: usize) -> bool {
    (x >> (n as usize - 1 - var)) & 1 == 1
}

/// A literal `xᵥ` or `¬xᵥ`; `var` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    pub fn complement(self) -> Self {
        Literal { var: self.var, negated: !self.negated }
    }

    #[inline]
    pub fn holds(self, x: Point, n: u32) -> bool {
        bit(x, n, self.var) != self.negated
    }

    /// Dense code in `0..2n`: `2·var + negated`.
    pub fn code(self) -> usize {
        2 * self.var + self.negated as usize
    }

    pub fn from_code(code: usize) -> Self {
        Literal { var: code / 2, negated: code % 2 == 1 }
    }

    /// Parses the signed 1-based form `+3` / `-1`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (neg, digits) = match s.as_bytes().first() {
            Some(b'+') => (false, &s[1..]),
            Some(b'-') => (true, &s[1..]),
            _ => return input(format!("literal `{s}` must start with + or -")),
        };
        let v: usize = match digits.parse() {
            Ok(v) if v >= 1 => v,
            _ => return input(format!("bad variable index in literal `{s}`")),
        };
        Ok(Literal { var: v - 1, negated: neg })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.negated { '-' } else { '+' }, self.var + 1)
    }
}

/// A conjunction of literals over the boolean cube: the subcube where all
/// of them are true.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LiteralConstraints {
    lits: BTreeSet<Literal>,
}

impl LiteralConstraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails when the set would contain both `x` and `¬x`.
    pub fn from_literals(lits: impl IntoIterator<Item = Literal>) -> Result<Self> {
        let mut c = Self::new();
        for l in lits {
            c.insert(l)?;
        }
        Ok(c)
    }

    pub fn insert(&mut self, l: Literal) -> Result<()> {
        if self.lits.contains(&l.complement()) {
            return input(format!("contradictory constraints {l} and {}", l.complement()));
        }
        self.lits.insert(l);
        Ok(())
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.lits.iter()
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn constrains(&self, var: usize) -> bool {
        self.lits.contains(&Literal::pos(var)) || self.lits.contains(&Literal::neg(var))
    }

    #[inline]
    pub fn satisfied(&self, x: Point, n: u32) -> bool {
        self.lits.iter().all(|l| l.holds(x, n))
    }

    /// Number of cube points satisfying the constraints.
    pub fn count(&self, n: u32) -> u64 {
        1u64 << (n as usize - self.lits.len())
    }

    /// Masks for a fast membership test: `x & mask == want`.
    pub fn masks(&self, n: u32) -> (u64, u64) {
        let mut mask = 0u64;
        let mut want = 0u64;
        for l in &self.lits {
            let b = 1u64 << (n as usize - 1 - l.var);
            mask |= b;
            if !l.negated {
                want |= b;
            }
        }
        (mask, want)
    }
}
