//! Tightness and separation witnesses, and the oracles that produce them.

pub mod audit;
pub mod separability;
pub mod structured;

use std::collections::BTreeSet;

use crate::class::{fmt_set, ExampleSubset, HypothesisClass, HypothesisSubset};
use crate::error::{Error, Result};
use crate::graph::{ball, edge_count};
use crate::rational::{ceil_times, fmt_rational, int, Rational};

pub use separability::{check_separability, localize_witness, SearchMode, Verdict};
pub use structured::{structured_oracle, ClassKind, TDescriptor};

/// `(S, T₀, T₁, d₀, d₁)`: every `h ∈ T₀` has at most `d₀` edges into `S`,
/// every `h ∈ T₁` at least `d₁`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationWitness {
    pub s: ExampleSubset,
    pub t0: HypothesisSubset,
    pub t1: HypothesisSubset,
    pub d0: Rational,
    pub d1: Rational,
}

impl std::fmt::Display for SeparationWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "S={} T0={} T1={} d0={} d1={}",
            self.s,
            fmt_set(self.t0.expand().iter()),
            fmt_set(self.t1.expand().iter()),
            fmt_rational(self.d0),
            fmt_rational(self.d1)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResponse {
    Tight(usize),
    Separated(SeparationWitness),
}

/// Size floors a witness must meet, as fractions: `|S| ≥ region·|X|`,
/// `|T₀|, |T₁| ≥ ⌈side·|T|⌉`, `d₁ − d₀ ≥ gap·|S|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessFloors {
    pub region: Rational,
    pub side: Rational,
    pub gap: Rational,
}

impl WitnessFloors {
    /// The floors of the global-to-local conversion: `α`, `α²/2`, `α/4`.
    pub fn localized(alpha: Rational) -> Self {
        WitnessFloors { region: alpha, side: alpha * alpha / 2, gap: alpha / 4 }
    }
}

fn violation(msg: String) -> Error {
    Error::Contract(msg)
}

/// Checks a separation witness for `T` from scratch: inclusion,
/// disjointness, size floors and the edge-count contract.
pub fn validate_witness(
    class: &dyn HypothesisClass,
    t: &BTreeSet<usize>,
    w: &SeparationWitness,
    floors: WitnessFloors,
) -> Result<()> {
    let domain = class.domain();
    w.s.validate(domain)?;
    let t0 = w.t0.expand();
    let t1 = w.t1.expand();
    if !t0.is_subset(t) || !t1.is_subset(t) {
        return Err(violation("T0 and T1 must be subsets of T".into()));
    }
    if !t0.is_disjoint(&t1) {
        return Err(violation("T0 and T1 intersect".into()));
    }
    let size = w.s.len(domain);
    if int(size as i64) < floors.region * domain.size() as i64 {
        return Err(violation(format!("|S| = {size} is below the region floor")));
    }
    let side = ceil_times(floors.side, t.len()).max(1);
    if t0.len() < side || t1.len() < side {
        return Err(violation(format!("|T0| = {}, |T1| = {} below the floor {side}", t0.len(), t1.len())));
    }
    if w.d1 - w.d0 < floors.gap * size as i64 {
        return Err(violation(format!("gap d1 - d0 = {} is below the floor", fmt_rational(w.d1 - w.d0))));
    }
    for &h in &t0 {
        let e = edge_count(class, &w.s, &HypothesisSubset::explicit([h]))?;
        if int(e as i64) > w.d0 {
            return Err(violation(format!("hypothesis {h} in T0 has {e} edges into S, above d0")));
        }
    }
    for &h in &t1 {
        let e = edge_count(class, &w.s, &HypothesisSubset::explicit([h]))?;
        if int(e as i64) < w.d1 {
            return Err(violation(format!("hypothesis {h} in T1 has {e} edges into S, below d1")));
        }
    }
    Ok(())
}

/// Checks any oracle response for `T` at `(α, ε)`.
pub fn validate_response(
    class: &dyn HypothesisClass,
    t: &BTreeSet<usize>,
    alpha: Rational,
    epsilon: Rational,
    response: &OracleResponse,
    floors: WitnessFloors,
) -> Result<()> {
    match response {
        OracleResponse::Tight(h) => {
            crate::class::check_index(class, *h)?;
            let b = ball(class, *h, epsilon)?.expand();
            let covered = t.intersection(&b).count();
            if int(covered as i64) < alpha * t.len() as i64 {
                return Err(violation(format!("center {h} covers only {covered} of {} hypotheses", t.len())));
            }
            Ok(())
        }
        OracleResponse::Separated(w) => validate_witness(class, t, w, floors),
    }
}
