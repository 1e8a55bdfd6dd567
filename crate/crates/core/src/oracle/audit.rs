//! The witness log: one line per audited `T`, readable and re-checkable.
//!
//! ```text
//! T={0,1,2} tight center=1
//! T={0,3,6} separable S=[0..6) T0={0} T1={6}
//! T={2,5} counterexample
//! ```

use std::collections::BTreeSet;

use num_traits::Signed;

use super::Verdict;
use crate::class::{fmt_set, parse_set, ExampleSubset, HypothesisClass, HypothesisSubset};
use crate::error::{input, Error, Result};
use crate::graph::{ball, density};
use crate::rational::{ceil_times, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEntry {
    pub t: BTreeSet<usize>,
    pub verdict: Verdict,
}

impl std::fmt::Display for AuditEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "T={} ", fmt_set(self.t.iter()))?;
        match &self.verdict {
            Verdict::Tight(h) => write!(f, "tight center={h}"),
            Verdict::Separable { s, t0, t1 } => write!(
                f,
                "separable S={s} T0={} T1={}",
                fmt_set(t0.expand().iter()),
                fmt_set(t1.expand().iter())
            ),
            Verdict::Counterexample => write!(f, "counterexample"),
        }
    }
}

fn field<'a>(part: Option<&'a str>, key: &str) -> Result<&'a str> {
    part.and_then(|p| p.strip_prefix(key))
        .and_then(|p| p.strip_prefix('='))
        .ok_or_else(|| Error::Input(format!("expected `{key}=...`")))
}

fn hyp_set(s: &str) -> Result<BTreeSet<usize>> {
    Ok(parse_set(s)?.into_iter().map(|h| h as usize).collect())
}

impl std::str::FromStr for AuditEntry {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        // Sets contain no spaces, so fields split on whitespace.
        let mut parts = line.split_whitespace();
        let t = hyp_set(field(parts.next(), "T")?)?;
        let verdict = match parts.next() {
            Some("tight") => {
                let h = field(parts.next(), "center")?;
                Verdict::Tight(h.parse().map_err(|_| Error::Input(format!("bad center `{h}`")))?)
            }
            Some("separable") => {
                let s: ExampleSubset = field(parts.next(), "S")?.parse()?;
                let t0 = HypothesisSubset::Explicit(hyp_set(field(parts.next(), "T0")?)?);
                let t1 = HypothesisSubset::Explicit(hyp_set(field(parts.next(), "T1")?)?);
                Verdict::Separable { s, t0, t1 }
            }
            Some("counterexample") => Verdict::Counterexample,
            other => return input(format!("unknown verdict {other:?}")),
        };
        if parts.next().is_some() {
            return input("trailing fields in audit line");
        }
        Ok(AuditEntry { t, verdict })
    }
}

/// Re-checks an entry from scratch: a tight center must cover `α|T|` of
/// `T`, a separation must meet the size floors and the density gap.
/// Counterexamples carry no certificate and pass.
pub fn revalidate(class: &dyn HypothesisClass, e: &AuditEntry, alpha: Rational, epsilon: Rational) -> Result<()> {
    let t = HypothesisSubset::Explicit(e.t.clone());
    t.validate(class)?;
    let bad = |m: String| Err(Error::Contract(m));
    match &e.verdict {
        Verdict::Tight(h) => {
            let covered = e.t.intersection(&ball(class, *h, epsilon)?.expand()).count();
            if int(covered as i64) < alpha * e.t.len() as i64 {
                return bad(format!("center {h} covers {covered} of {}", e.t.len()));
            }
        }
        Verdict::Separable { s, t0, t1 } => {
            let (a, b) = (t0.expand(), t1.expand());
            let need = ceil_times(alpha, e.t.len()).max(1);
            if !a.is_subset(&e.t) || !b.is_subset(&e.t) || !a.is_disjoint(&b) {
                return bad("T0, T1 must be disjoint subsets of T".into());
            }
            if a.len() < need || b.len() < need {
                return bad(format!("sides smaller than {need}"));
            }
            let domain = class.domain();
            if int(s.len(domain) as i64) < alpha * domain.size() as i64 {
                return bad("S below alpha |X|".into());
            }
            let gap = density(class, s, t1)? - density(class, s, t0)?;
            if gap.abs() < alpha {
                return bad(format!("density gap {gap} below alpha"));
            }
        }
        Verdict::Counterexample => {}
    }
    Ok(())
}
