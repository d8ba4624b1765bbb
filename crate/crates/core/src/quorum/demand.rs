use serde::{Deserialize, Serialize};

use super::{Quorum, QuorumError};

// Ratios like (1/3)·6 land a hair above an integer in floating point.
const EPS: f64 = 1e-9;

pub(crate) fn ceil_tol(x: f64) -> usize {
    (x - EPS).ceil().max(0.0) as usize
}

/// Traffic a node must move per unit time, relative to the channel rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    /// `d`, data units per unit time.
    pub rate: f64,
    /// `R`, the channel rate in the same units.
    pub data_rate: f64,
}

impl Demand {
    pub fn new(rate: f64, data_rate: f64) -> Result<Self, QuorumError> {
        if !(data_rate.is_finite() && data_rate > 0.0) {
            return Err(QuorumError::InvalidDemand(format!("channel rate {data_rate} must be positive")));
        }
        if !(rate.is_finite() && rate > 0.0 && rate <= data_rate * (1.0 + EPS)) {
            return Err(QuorumError::InvalidDemand(format!("rate {rate} must lie in (0, {data_rate}]")));
        }
        Ok(Demand { rate, data_rate })
    }

    /// Demand as a fraction of a unit channel rate.
    pub fn fraction_of(fraction: f64) -> Result<Self, QuorumError> {
        Self::new(fraction, 1.0)
    }

    /// `d / R`.
    pub fn fraction(&self) -> f64 {
        self.rate / self.data_rate
    }

    /// Slots per period the demand occupies, `σ = d·m / R`.
    pub fn slot_count(&self, m: usize) -> f64 {
        self.fraction() * m as f64
    }
}

/// Rendezvous slots two grid-assigned nodes are guaranteed with synchronised
/// clocks: `⌈d_u·d_v·m / 2R²⌉`.
pub fn sync_rendezvous_bound(du: &Demand, dv: &Demand, m: usize) -> usize {
    ceil_tol(du.fraction() * dv.fraction() * m as f64 / 2.0).max(1)
}

/// Rendezvous slots guaranteed under an arbitrary clock shift:
/// `⌈d_u·d_v·m / 4R²⌉`.
pub fn async_rendezvous_bound(du: &Demand, dv: &Demand, m: usize) -> usize {
    ceil_tol(du.fraction() * dv.fraction() * m as f64 / 4.0).max(1)
}

/// Overlap above which an earlier selection counts as occupying a quorum.
pub fn occupancy_threshold(di: &Demand, dj: &Demand, m: usize) -> usize {
    sync_rendezvous_bound(di, dj, m)
}

/// `qi` is occupied by `qj` when they overlap in more slots than the two
/// demands need.
pub fn is_occupied(qi: &Quorum, qj: &Quorum, di: &Demand, dj: &Demand) -> Result<bool, QuorumError> {
    let overlap = qi.intersection(qj)?.len();
    Ok(overlap > occupancy_threshold(di, dj, qi.period_len()))
}

/// Whether the demands of one communication set fit the channel once it is
/// shared `rho` ways to stay interference free: `Σ d ≤ R / ρ`.
pub fn demand_sum_feasible(demands: &[Demand], rho: f64) -> bool {
    let total: f64 = demands.iter().map(Demand::fraction).sum();
    total <= 1.0 / rho + EPS
}

/// Smallest demand fraction `c₁ = 1 - √(1 - 1/√m)` whose grid quorum still has
/// at least `√m` slots.
pub fn demand_lower_bound(m: usize) -> Result<f64, QuorumError> {
    if m <= 1 {
        return Err(QuorumError::BoundUndefined(m));
    }
    Ok(1.0 - (1.0 - 1.0 / (m as f64).sqrt()).sqrt())
}
