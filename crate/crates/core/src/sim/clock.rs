use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-node clock offsets in slots. A node's local time at global slot `t`
/// is `t + shift + drift·⌊t / superframe⌋`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockModel {
    shifts: Vec<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    drift: Vec<i64>,
}

impl ClockModel {
    pub fn synchronized(n: usize) -> Self {
        ClockModel { shifts: vec![0; n], drift: Vec::new() }
    }

    pub fn fixed(shifts: Vec<i64>) -> Self {
        ClockModel { shifts, drift: Vec::new() }
    }

    /// Independent shifts uniform in `[-bound, bound]`.
    pub fn uniform(n: usize, bound: i64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = bound.abs();
        ClockModel { shifts: (0..n).map(|_| rng.gen_range(-bound..=bound)).collect(), drift: Vec::new() }
    }

    /// Slots gained per superframe, per node.
    pub fn with_drift(mut self, drift: Vec<i64>) -> Self {
        self.drift = drift;
        self
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn shift(&self, node: usize) -> i64 {
        self.shifts[node]
    }

    pub fn shifts(&self) -> &[i64] {
        &self.shifts
    }

    pub fn has_drift(&self) -> bool {
        self.drift.iter().any(|&d| d != 0)
    }

    /// `δ(u, v) = δ^u − δ^v` at time zero.
    pub fn relative_shift(&self, u: usize, v: usize) -> i64 {
        self.shifts[u] - self.shifts[v]
    }

    pub fn offset_at(&self, node: usize, t: u64, superframe: u64) -> i64 {
        let drift = self.drift.get(node).copied().unwrap_or(0);
        self.shifts[node] + drift * (t / superframe.max(1)) as i64
    }

    pub fn local_time(&self, node: usize, t: u64, superframe: u64) -> i64 {
        t as i64 + self.offset_at(node, t, superframe)
    }

    /// The clock frozen at the offsets it has reached by global slot `t`.
    pub fn frozen_at(&self, t: u64, superframe: u64) -> ClockModel {
        ClockModel::fixed((0..self.len()).map(|u| self.offset_at(u, t, superframe)).collect())
    }
}

/// How a shifted quorum relates to the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    /// The shift is a whole number of periods: the quorum keeps its slots
    /// but may land in another region's window.
    BetweenPeriods,
    /// The quorum is rotated inside the period.
    WithinQs,
}

pub fn classify_quorum_shift(delta: i64, m: usize) -> ShiftKind {
    if delta.rem_euclid(m as i64) == 0 {
        ShiftKind::BetweenPeriods
    } else {
        ShiftKind::WithinQs
    }
}
