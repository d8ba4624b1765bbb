//! Slot quorums over a single period and the grid quorum system built from them.
//!
//! A period has `m` slots labelled `0..m`. A [`Quorum`] is a subset of those
//! slots; a node is awake exactly in the slots of its quorum. Clock shifts act
//! on quorums as cyclic rotations, so most questions about asynchronous
//! rendezvous reduce to intersecting one quorum with every rotation of another.

mod demand;
mod grid;
mod load;

pub use demand::{
    demand_lower_bound, demand_sum_feasible, is_occupied, occupancy_threshold,
    sync_rendezvous_bound, async_rendezvous_bound, Demand,
};
pub use grid::{GridPlacement, GridQuorumSystem};
pub use load::{
    compute_access_load, compute_load, estimate_k_round_max_load, load_ceiling_constant, select_with_retries,
    KRoundEstimate, LoadProfile,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuorumError {
    #[error("period must contain at least one slot")]
    EmptyPeriod,
    #[error("slot {slot} is outside a period of {m} slots")]
    SlotOutOfRange { slot: usize, m: usize },
    #[error("quorums belong to different periods ({left} vs {right} slots)")]
    PeriodMismatch { left: usize, right: usize },
    #[error("anchor {anchor} with {rows} rows does not fit a grid of side {side}")]
    AnchorOutOfRange { anchor: usize, rows: usize, side: usize },
    #[error("invalid demand: {0}")]
    InvalidDemand(String),
    #[error("demand lower bound is undefined for m = {0}")]
    BoundUndefined(usize),
    #[error("selection probabilities sum to {0}, expected 1")]
    ProbabilitiesNotNormalized(f64),
    #[error("{quorums} quorums but {probabilities} probabilities")]
    LengthMismatch { quorums: usize, probabilities: usize },
}

/// A period of `m` slots, each `slot_duration` simulation time units long.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period {
    m: usize,
    slot_duration: f64,
}

impl Period {
    pub fn new(m: usize) -> Result<Self, QuorumError> {
        Self::with_slot_duration(m, 1.0)
    }

    pub fn with_slot_duration(m: usize, slot_duration: f64) -> Result<Self, QuorumError> {
        if m == 0 {
            return Err(QuorumError::EmptyPeriod);
        }
        Ok(Period { m, slot_duration })
    }

    pub fn slots(&self) -> usize {
        self.m
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    /// Length of the period in time units.
    pub fn duration(&self) -> f64 {
        self.m as f64 * self.slot_duration
    }
}

/// A set of active slots within a period of `m` slots.
///
/// Slots are kept sorted and unique. Quorums produced by the grid system also
/// remember where in the grid they came from; rotated or hand-built quorums
/// do not.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quorum {
    m: usize,
    slots: Vec<usize>,
    placement: Option<GridPlacement>,
}

impl Quorum {
    /// Builds a quorum from arbitrary slot indices. Duplicates are merged.
    pub fn from_slots(m: usize, slots: impl IntoIterator<Item = usize>) -> Result<Self, QuorumError> {
        if m == 0 {
            return Err(QuorumError::EmptyPeriod);
        }
        let mut slots: Vec<usize> = slots.into_iter().collect();
        if let Some(&slot) = slots.iter().find(|&&s| s >= m) {
            return Err(QuorumError::SlotOutOfRange { slot, m });
        }
        slots.sort_unstable();
        slots.dedup();
        Ok(Quorum { m, slots, placement: None })
    }

    /// Every slot of the period.
    pub fn full(m: usize) -> Result<Self, QuorumError> {
        Self::from_slots(m, 0..m)
    }

    pub(crate) fn with_placement(m: usize, slots: Vec<usize>, placement: GridPlacement) -> Self {
        Quorum { m, slots, placement: Some(placement) }
    }

    pub fn period_len(&self) -> usize {
        self.m
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, slot: usize) -> bool {
        self.slots.binary_search(&slot).is_ok()
    }

    /// Earliest active slot, used to order quorums in time.
    pub fn first_slot(&self) -> Option<usize> {
        self.slots.first().copied()
    }

    pub fn placement(&self) -> Option<GridPlacement> {
        self.placement
    }

    /// 1-based grid anchor, when the quorum came from a grid system.
    pub fn anchor(&self) -> Option<usize> {
        self.placement.map(|p| p.anchor)
    }

    pub fn row_count(&self) -> Option<usize> {
        self.placement.map(|p| p.rows)
    }

    /// Membership mask over the period, handy for hot loops.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.m];
        for &s in &self.slots {
            mask[s] = true;
        }
        mask
    }

    fn check_same_period(&self, other: &Quorum) -> Result<(), QuorumError> {
        if self.m != other.m {
            return Err(QuorumError::PeriodMismatch { left: self.m, right: other.m });
        }
        Ok(())
    }

    /// Slots shared with `other` without any rotation.
    pub fn intersection(&self, other: &Quorum) -> Result<Vec<usize>, QuorumError> {
        self.check_same_period(other)?;
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.slots.len() && j < other.slots.len() {
            match self.slots[i].cmp(&other.slots[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.slots[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Quorum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Reduces an arbitrary (possibly negative) shift into `0..m`.
pub fn normalize_shift(shift: i64, m: usize) -> usize {
    shift.rem_euclid(m as i64) as usize
}

/// `{(s + shift) mod m : s in q}`.
pub fn rotate(q: &Quorum, shift: i64) -> Quorum {
    let m = q.m;
    let shift = normalize_shift(shift, m);
    if shift == 0 {
        return q.clone();
    }
    let mut slots: Vec<usize> = q.slots.iter().map(|&s| (s + shift) % m).collect();
    slots.sort_unstable();
    Quorum { m, slots, placement: None }
}

/// Slots where a node on `qu` meets a node on `qv` whose clock runs
/// `relative_shift` slots apart, i.e. `qu ∩ rotate(qv, relative_shift)`.
pub fn rendezvous(qu: &Quorum, qv: &Quorum, relative_shift: i64) -> Result<Vec<usize>, QuorumError> {
    qu.check_same_period(qv)?;
    qu.intersection(&rotate(qv, relative_shift))
}

/// `profile[s] = |qu ∩ rotate(qv, s)|` for every shift `s` in `0..m`.
///
/// Computed as a cyclic cross-correlation in `O(|qu|·|qv|)`.
pub fn rendezvous_profile(qu: &Quorum, qv: &Quorum) -> Result<Vec<usize>, QuorumError> {
    qu.check_same_period(qv)?;
    let m = qu.m;
    let mut profile = vec![0usize; m];
    for &a in &qu.slots {
        for &b in &qv.slots {
            // b + s ≡ a (mod m)
            profile[(a + m - b) % m] += 1;
        }
    }
    Ok(profile)
}

/// Smallest rendezvous count over every relative shift.
pub fn min_rendezvous_over_rotations(qu: &Quorum, qv: &Quorum) -> Result<usize, QuorumError> {
    Ok(rendezvous_profile(qu, qv)?.into_iter().min().unwrap_or(0))
}

/// A pair of quorums and a shift at which they fail to meet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosureViolation {
    /// Index of the unrotated quorum in the checked list.
    pub first: usize,
    /// Index of the rotated quorum in the checked list.
    pub second: usize,
    pub shift: usize,
}

/// Checks `Q1 ∩ rotate(Q2, i) ≠ ∅` for every ordered pair (including a
/// quorum with itself) and every shift `i` in `0..m`.
///
/// Returns the first violation found in pair-major, shift-minor order.
///
/// # Panics
///
/// If the quorums do not share one period length.
pub fn verify_rotation_closure(quorums: &[Quorum]) -> Result<(), ClosureViolation> {
    for (i, qi) in quorums.iter().enumerate() {
        for (j, qj) in quorums.iter().enumerate() {
            let profile = rendezvous_profile(qi, qj).expect("quorums must share a period");
            if let Some(shift) = profile.iter().position(|&c| c == 0) {
                return Err(ClosureViolation { first: i, second: j, shift });
            }
        }
    }
    Ok(())
}
