//! View distances between equal-depth prefixes.
//!
//! All values are dyadic, so they are carried as exponents and compared
//! exactly. A pair whose views never differ within the horizon is reported as
//! [`DyadicDistance::Indistinct`], an upper bound rather than a zero.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{full_mask, PrefixPoint, ProcessId, ValidatedAdversary};
use crate::ptgraph::{process_mask, CausalView, ViewShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DyadicDistance {
    /// Views first differ at time `k`: the distance is exactly `2^-k`.
    Differ(usize),
    /// Views agree at every time up to and including `t`: the distance is at
    /// most `2^-(t+1)`.
    Indistinct(usize),
}

impl DyadicDistance {
    /// `e` such that the distance is (at most) `2^-e`.
    pub fn exponent(self) -> usize {
        match self {
            DyadicDistance::Differ(k) => k,
            DyadicDistance::Indistinct(t) => t + 1,
        }
    }

    pub fn is_resolved(self) -> bool {
        matches!(self, DyadicDistance::Differ(_))
    }

    /// Numeric comparison, reading `Indistinct(t)` as `2^-(t+1)`.
    pub fn cmp_value(self, other: DyadicDistance) -> Ordering {
        other.exponent().cmp(&self.exponent())
    }

    /// Exact check of `self <= a + b` on numeric values.
    pub fn le_sum(self, a: DyadicDistance, b: DyadicDistance) -> bool {
        let (x, y, z) = (self.exponent(), a.exponent(), b.exponent());
        // 2^-x <= 2^-y + 2^-z
        x >= y.min(z) || (y == x + 1 && z == x + 1)
    }

    /// True when the numeric value is strictly below `2^-t`.
    pub fn below(self, t: usize) -> bool {
        self.exponent() > t
    }

    pub fn min(self, other: DyadicDistance) -> DyadicDistance {
        if other.cmp_value(self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for DyadicDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DyadicDistance::Differ(0) => write!(f, "1"),
            DyadicDistance::Differ(k) => write!(f, "1/{}", pow2(*k)),
            DyadicDistance::Indistinct(t) => write!(f, "<= 1/{} (indistinct through {t})", pow2(t + 1)),
        }
    }
}

fn pow2(k: usize) -> String {
    if k < 128 {
        (1u128 << k).to_string()
    } else {
        format!("2^{k}")
    }
}

fn check_pair(a: &PrefixPoint, b: &PrefixPoint) -> Result<()> {
    if a.n() != b.n() || a.depth() != b.depth() {
        return Err(Error::DepthMismatch {
            left_n: a.n(),
            right_n: b.n(),
            left_depth: a.depth(),
            right_depth: b.depth(),
        });
    }
    Ok(())
}

fn view_at(adv: &ValidatedAdversary, point: &PrefixPoint, mask: u64, s: usize) -> CausalView {
    let rounds: Vec<_> = point.word.0[..s].iter().map(|&l| adv.graph(l)).collect();
    ViewShape::compute(&rounds, mask).with_inputs(&point.inputs)
}

fn distance_mask(adv: &ValidatedAdversary, a: &PrefixPoint, b: &PrefixPoint, mask: u64) -> Result<DyadicDistance> {
    check_pair(a, b)?;
    adv.check_point(a)?;
    adv.check_point(b)?;
    let t = a.depth();
    Ok((0..=t)
        .find(|&s| view_at(adv, a, mask, s) != view_at(adv, b, mask, s))
        .map_or(DyadicDistance::Indistinct(t), DyadicDistance::Differ))
}

/// `d_P(a, b)`: first time at which the causal views of `P` differ.
pub fn distance_p(
    adv: &ValidatedAdversary,
    a: &PrefixPoint,
    b: &PrefixPoint,
    processes: &[ProcessId],
) -> Result<DyadicDistance> {
    let mask = process_mask(a.n(), processes)?;
    distance_mask(adv, a, b, mask)
}

/// `d_min(a, b)`: the smallest single-process distance.
pub fn distance_min(adv: &ValidatedAdversary, a: &PrefixPoint, b: &PrefixPoint) -> Result<DyadicDistance> {
    check_pair(a, b)?;
    let mut best: Option<DyadicDistance> = None;
    for p in adv.processes() {
        let d = distance_mask(adv, a, b, p.bit())?;
        best = Some(best.map_or(d, |m| m.min(d)));
    }
    Ok(best.expect("at least two processes"))
}

/// `d_max(a, b) = d_[n](a, b)`.
pub fn distance_max(adv: &ValidatedAdversary, a: &PrefixPoint, b: &PrefixPoint) -> Result<DyadicDistance> {
    check_pair(a, b)?;
    distance_mask(adv, a, b, full_mask(a.n()))
}

/// The process attaining `d_min`, smallest id on ties.
pub fn min_witness(adv: &ValidatedAdversary, a: &PrefixPoint, b: &PrefixPoint) -> Result<(ProcessId, DyadicDistance)> {
    check_pair(a, b)?;
    let mut best: Option<(ProcessId, DyadicDistance)> = None;
    for p in adv.processes() {
        let d = distance_mask(adv, a, b, p.bit())?;
        if best.is_none_or(|(_, m)| d.cmp_value(m) == Ordering::Less) {
            best = Some((p, d));
        }
    }
    Ok(best.expect("at least two processes"))
}
