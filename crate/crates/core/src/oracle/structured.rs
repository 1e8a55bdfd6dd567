//! Oracles that answer from a compact description of `T` without
//! enumerating the class.

use super::{OracleResponse, SeparationWitness, WitnessFloors};
use crate::class::{ExampleSubset, HypothesisSubset};
use crate::classes::threshold::Interval;
use crate::error::{input, Result};
use crate::rational::{int, ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Threshold,
    EqualPiece,
    DecisionList,
}

impl std::str::FromStr for ClassKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(ClassKind::Threshold),
            "equal-piece" => Ok(ClassKind::EqualPiece),
            "decision-list" => Ok(ClassKind::DecisionList),
            _ => input(format!("unknown class kind `{s}`")),
        }
    }
}

/// A compact description of the surviving hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TDescriptor {
    /// Threshold indices `lo..=hi` on a grid of `n` points.
    Interval { n: u64, interval: Interval },
}

/// The threshold oracle: tight at the midpoint once the interval is at
/// most `εn` wide, otherwise separated on the middle third.
pub fn threshold_response(n: u64, t: Interval, epsilon: Rational) -> Result<OracleResponse> {
    if t.lo > t.hi || t.hi > n {
        return input(format!("interval [{}, {}] outside 0..={n}", t.lo, t.hi));
    }
    if int((t.hi - t.lo) as i64) <= epsilon * n as i64 {
        return Ok(OracleResponse::Tight(t.midpoint() as usize));
    }
    let (c1, c2) = t.middle_third();
    let s = ExampleSubset::GridRange { start: c1, end: c2 };
    Ok(OracleResponse::Separated(SeparationWitness {
        s,
        t0: HypothesisSubset::Range { start: t.lo as usize, end: c1 as usize + 1 },
        t1: HypothesisSubset::Range { start: c2 as usize, end: t.hi as usize + 1 },
        d0: int(0),
        d1: int((c2 - c1) as i64),
    }))
}

/// Floors met by [`threshold_response`]: the middle third holds more than
/// `εn/3` points, each side keeps a third of `T`, and the gap is all of `S`.
pub fn threshold_floors(epsilon: Rational) -> WitnessFloors {
    WitnessFloors { region: epsilon / 3, side: ratio(1, 3), gap: int(1) }
}

/// Answers for a structured class. Equal-piece and decision-list learners
/// run their own subroutine schedules and have no separate oracle here.
pub fn structured_oracle(kind: ClassKind, t: &TDescriptor, epsilon: Rational) -> Result<OracleResponse> {
    match (kind, t) {
        (ClassKind::Threshold, TDescriptor::Interval { n, interval }) => threshold_response(*n, *interval, epsilon),
        (other, _) => input(format!("no structured oracle for {other:?} with this descriptor")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::threshold::ThresholdClass;
    use crate::class::HypothesisClass;
    use crate::oracle::validate_response;

    #[test]
    fn full_interval_separates_on_middle_third() {
        let r = threshold_response(99, Interval { lo: 0, hi: 99 }, ratio(1, 10)).unwrap();
        let OracleResponse::Separated(w) = r else { panic!("expected a witness") };
        assert_eq!(w.s, ExampleSubset::GridRange { start: 33, end: 66 });
    }

    #[test]
    fn narrow_interval_is_tight_at_midpoint() {
        let class = ThresholdClass::new(100).unwrap();
        let r = threshold_response(100, Interval { lo: 42, hi: 50 }, ratio(1, 10)).unwrap();
        assert_eq!(r, OracleResponse::Tight(46));
        assert_eq!(class.describe(46), "h_93/200");
    }

    #[test]
    fn every_interval_validates() {
        let n = 30;
        let class = ThresholdClass::new(n).unwrap();
        let eps = ratio(1, 10);
        for lo in 0..=n {
            for hi in lo..=n {
                let iv = Interval { lo, hi };
                let r = threshold_response(n, iv, eps).unwrap();
                let t = (lo as usize..=hi as usize).collect();
                validate_response(&class, &t, ratio(1, 3), eps, &r, threshold_floors(eps)).unwrap();
            }
        }
    }

    #[test]
    fn other_kinds_are_rejected() {
        let t = TDescriptor::Interval { n: 4, interval: Interval { lo: 0, hi: 4 } };
        assert!(structured_oracle(ClassKind::EqualPiece, &t, ratio(1, 10)).is_err());
    }
}
