use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::grid::ceil_sqrt;
use super::{Quorum, QuorumError};

/// Per-slot access frequency induced by a quorum selection strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadProfile {
    pub per_slot_load: Vec<f64>,
    pub max_load: f64,
}

/// Load of each slot when quorum `i` is picked with probability
/// `probabilities[i]`: `L(τ) = Σ_{Q ∋ τ} P(Q)·|Q|/m`.
pub fn compute_load(m: usize, quorums: &[Quorum], probabilities: &[f64]) -> Result<LoadProfile, QuorumError> {
    profile(m, quorums, probabilities, |q| q.len() as f64 / m as f64)
}

/// Plain access frequency `Σ_{Q ∋ τ} P(Q)`. Its maximum is never below
/// `min |Q| / m`.
pub fn compute_access_load(m: usize, quorums: &[Quorum], probabilities: &[f64]) -> Result<LoadProfile, QuorumError> {
    profile(m, quorums, probabilities, |_| 1.0)
}

fn profile(
    m: usize,
    quorums: &[Quorum],
    probabilities: &[f64],
    weight: impl Fn(&Quorum) -> f64,
) -> Result<LoadProfile, QuorumError> {
    if quorums.len() != probabilities.len() {
        return Err(QuorumError::LengthMismatch { quorums: quorums.len(), probabilities: probabilities.len() });
    }
    if !quorums.is_empty() {
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 || probabilities.iter().any(|&p| p < 0.0) {
            return Err(QuorumError::ProbabilitiesNotNormalized(total));
        }
    }
    let mut per_slot_load = vec![0.0; m];
    for (q, &p) in quorums.iter().zip(probabilities) {
        if q.period_len() != m {
            return Err(QuorumError::PeriodMismatch { left: m, right: q.period_len() });
        }
        let w = p * weight(q);
        for &s in q.slots() {
            per_slot_load[s] += w;
        }
    }
    let max_load = per_slot_load.iter().copied().fold(0.0, f64::max);
    Ok(LoadProfile { per_slot_load, max_load })
}

/// `c₄ = ⌈1/ρ⌉ - ⌈1/(4ρ²)⌉`, the constant in the uniform-selection load ceiling
/// `c₄ / |C_u|`. Note that it evaluates to zero for every `ρ ≥ 1`.
pub fn load_ceiling_constant(rho: f64) -> f64 {
    (1.0 / rho).ceil() - (1.0 / (4.0 * rho * rho)).ceil()
}

/// One node's pick under the retrying random selection.
///
/// Draws uniformly among `candidates`; while the pick is occupied
/// (`occupancy(pick) > 0`) and fewer than `budget` picks were made, it is
/// remembered as occupied and a fresh candidate is drawn from the ones not yet
/// tried. When the budget runs out the least occupied pick seen is kept, ties
/// going to the most recent.
pub fn select_with_retries<R: Rng + ?Sized>(
    rng: &mut R,
    candidates: usize,
    budget: usize,
    mut occupancy: impl FnMut(usize) -> usize,
) -> usize {
    assert!(candidates > 0, "nothing to select from");
    let budget = budget.max(1);
    let mut occupied: Vec<usize> = Vec::new();
    let mut pick = rng.gen_range(0..candidates);
    let mut best = (pick, usize::MAX);
    let mut attempts = 1;
    loop {
        let occ = occupancy(pick);
        if occ == 0 {
            return pick;
        }
        if occ <= best.1 {
            best = (pick, occ);
        }
        occupied.push(pick);
        if attempts >= budget || occupied.len() == candidates {
            return best.0;
        }
        let nth = rng.gen_range(0..candidates - occupied.len());
        pick = (0..candidates).filter(|c| !occupied.contains(c)).nth(nth).expect("candidate left");
        attempts += 1;
    }
}

/// Monte-Carlo summary of the largest number of selectors landing on one
/// row-and-column bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KRoundEstimate {
    pub m: usize,
    pub bins: usize,
    pub selectors: usize,
    pub retry_budget: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean_max_load: f64,
    pub std_dev: f64,
    pub p95_max_load: usize,
    pub worst_max_load: usize,
    /// `ln ln √m / ln k`, absent for `k = 1`.
    pub reference: Option<f64>,
}

/// Runs `trials` independent rounds of `n_selectors` nodes each choosing one
/// of the `⌈√m⌉` single-row bins with [`select_with_retries`], and reports the
/// distribution of the per-round maximum bin load.
pub fn estimate_k_round_max_load(m: usize, n_selectors: usize, k: usize, trials: usize, seed: u64) -> KRoundEstimate {
    assert!(k >= 1 && trials >= 1);
    let bins = ceil_sqrt(m).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maxima = Vec::with_capacity(trials);
    let mut load = vec![0usize; bins];
    for _ in 0..trials {
        load.iter_mut().for_each(|l| *l = 0);
        for _ in 0..n_selectors {
            let bin = select_with_retries(&mut rng, bins, k, |b| load[b]);
            load[bin] += 1;
        }
        maxima.push(load.iter().copied().max().unwrap_or(0));
    }
    let mean = maxima.iter().sum::<usize>() as f64 / trials as f64;
    let var = if trials > 1 {
        maxima.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    let mut sorted = maxima.clone();
    sorted.sort_unstable();
    let p95 = sorted[((trials as f64 * 0.95).ceil() as usize).clamp(1, trials) - 1];
    let root = (m as f64).sqrt();
    let reference = (k > 1).then(|| root.ln().ln() / (k as f64).ln());
    KRoundEstimate {
        m,
        bins,
        selectors: n_selectors,
        retry_budget: k,
        trials,
        seed,
        mean_max_load: mean,
        std_dev: var.sqrt(),
        p95_max_load: p95,
        worst_max_load: *sorted.last().unwrap(),
        reference,
    }
}
