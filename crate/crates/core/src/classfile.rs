//! Class description files: one `key = value` pair per line.
//!
//! ```text
//! # thresholds on 1024 grid points
//! kind = threshold
//! n = 1024
//! ```
//!
//! Keys are `kind` (`threshold`, `equal-piece`, `decision-list`), `n`,
//! `p` (equal-piece piece length, a rational) and `seed-class` (mixed into
//! the seed of random decision-list targets). `#` starts a comment.

use std::sync::Arc;

use crate::class::HypothesisClass;
use crate::classes::decision_list::{DecisionListClass, MAX_ENUMERATED_N};
use crate::classes::equal_piece::EqualPieceClass;
use crate::classes::threshold::ThresholdClass;
use crate::domain::DomainSpec;
use crate::error::{input, Result};
use crate::oracle::ClassKind;
use crate::rational::{fmt_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    pub kind: ClassKind,
    pub n: u64,
    pub p: Option<Rational>,
    pub seed_class: u64,
}

impl ClassSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (mut kind, mut n, mut p, mut seed_class) = (None, None, None, None);
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return input(format!("line {}: expected `key = value`", no + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            let dup = match key {
                "kind" => kind.replace(value.parse::<ClassKind>()?).is_some(),
                "n" => n.replace(parse_u64(key, value)?).is_some(),
                "p" => p.replace(parse_rational(value)?).is_some(),
                "seed-class" => seed_class.replace(parse_u64(key, value)?).is_some(),
                _ => return input(format!("line {}: unknown key `{key}`", no + 1)),
            };
            if dup {
                return input(format!("line {}: duplicate key `{key}`", no + 1));
            }
        }
        let kind = kind.ok_or_else(|| crate::Error::Input("class file lacks `kind`".into()))?;
        let n = n.ok_or_else(|| crate::Error::Input("class file lacks `n`".into()))?;
        let spec = ClassSpec { kind, n, p, seed_class: seed_class.unwrap_or(0) };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        match self.kind {
            ClassKind::Threshold => {
                ThresholdClass::new(self.n)?;
            }
            ClassKind::EqualPiece => {
                let Some(p) = self.p else { return input("equal-piece classes need `p`") };
                EqualPieceClass::new(self.n, p)?;
            }
            ClassKind::DecisionList => {
                DomainSpec::boolean_cube(u32::try_from(self.n).unwrap_or(u32::MAX))?;
            }
        }
        if self.p.is_some() && self.kind != ClassKind::EqualPiece {
            return input("`p` only applies to equal-piece classes");
        }
        Ok(())
    }

    pub fn domain(&self) -> DomainSpec {
        match self.kind {
            ClassKind::DecisionList => DomainSpec::BooleanCube(self.n as u32),
            _ => DomainSpec::UnitGrid(self.n),
        }
    }

    pub fn threshold(&self) -> Result<ThresholdClass> {
        match self.kind {
            ClassKind::Threshold => ThresholdClass::new(self.n),
            _ => input("not a threshold class"),
        }
    }

    pub fn equal_piece(&self) -> Result<EqualPieceClass> {
        match (self.kind, self.p) {
            (ClassKind::EqualPiece, Some(p)) => EqualPieceClass::new(self.n, p),
            _ => input("not an equal-piece class"),
        }
    }

    /// The class with every hypothesis indexed, when that is feasible.
    pub fn enumerate(&self) -> Result<Arc<dyn HypothesisClass>> {
        Ok(match self.kind {
            ClassKind::Threshold => Arc::new(self.threshold()?),
            ClassKind::EqualPiece => Arc::new(self.equal_piece()?.hypotheses()?),
            ClassKind::DecisionList => {
                if self.n > MAX_ENUMERATED_N as u64 {
                    return input(format!("decision lists are enumerated only for n <= {MAX_ENUMERATED_N}"));
                }
                Arc::new(DecisionListClass::new(self.n as u32)?)
            }
        })
    }

    pub fn describe(&self) -> String {
        match (self.kind, self.p) {
            (ClassKind::Threshold, _) => format!("threshold(n={})", self.n),
            (ClassKind::EqualPiece, Some(p)) => format!("equal-piece(n={},p={})", self.n, fmt_rational(p)),
            (ClassKind::EqualPiece, None) => format!("equal-piece(n={})", self.n),
            (ClassKind::DecisionList, _) => format!("decision-list(n={})", self.n),
        }
    }
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| crate::Error::Input(format!("`{key}` must be a non-negative integer, got `{value}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn parses_with_comments_and_spacing() {
        let s = ClassSpec::parse("# demo\nkind = equal-piece\n n=64 \np = 1/4 # quarter\n").unwrap();
        assert_eq!(s.kind, ClassKind::EqualPiece);
        assert_eq!(s.p, Some(ratio(1, 4)));
        assert_eq!(s.describe(), "equal-piece(n=64,p=1/4)");
    }

    #[test]
    fn rejects_malformed_files() {
        for bad in [
            "kind = threshold",
            "n = 4",
            "kind = circle\nn = 4",
            "kind = threshold\nn = 4\nn = 5",
            "kind = threshold\nn = four",
            "kind = threshold\nn = 4\ncolour = red",
            "kind = equal-piece\nn = 8",
            "kind = threshold\nn = 8\np = 1/2",
            "kind threshold",
        ] {
            assert!(ClassSpec::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn enumerates_small_classes() {
        let s = ClassSpec::parse("kind = decision-list\nn = 2").unwrap();
        assert_eq!(s.enumerate().unwrap().len(), 2 * 2 * 4 * 2);
        let big = ClassSpec::parse("kind = decision-list\nn = 8").unwrap();
        assert!(big.enumerate().is_err());
    }
}
