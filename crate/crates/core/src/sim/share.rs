use serde::Serialize;

use super::ClockModel;
use crate::scheduling::Schedule;
use crate::topology::{InterferenceModel, Topology};

/// Who is awake when: the schedule seen through every node's clock, plus
/// each node's quorum-share stride `k`.
///
/// A node with stride `k` is awake in its quorum slots during its region's
/// window of every superframe. With `k ≥ 2` it additionally listens, in every
/// `k`-th superframe of its local clock, in the `k − 1` windows on either side
/// of its own; that is how a node whose clock slipped into a neighbouring
/// region's window keeps meeting its own region.
#[derive(Debug, Clone)]
pub struct Activity<'a> {
    schedule: &'a Schedule,
    clock: &'a ClockModel,
    stride: Vec<usize>,
    // Per node: (region index, window, slot mask) for each region it belongs to.
    contexts: Vec<Vec<(usize, usize, Vec<bool>)>>,
}

impl<'a> Activity<'a> {
    pub fn new(schedule: &'a Schedule, clock: &'a ClockModel) -> Self {
        let n = schedule.node_count();
        let contexts = (0..n)
            .map(|u| {
                schedule
                    .contexts(u)
                    .map(|(r, q)| {
                        let idx = schedule.regions().iter().position(|x| x.region_id == r.region_id).unwrap();
                        (idx, r.window.window, q.mask())
                    })
                    .collect()
            })
            .collect();
        Activity { schedule, clock, stride: vec![1; n], contexts }
    }

    pub fn with_stride(mut self, stride: Vec<usize>) -> Self {
        assert_eq!(stride.len(), self.stride.len());
        self.stride = stride;
        self
    }

    pub fn stride(&self, node: usize) -> usize {
        self.stride[node]
    }

    pub fn strides(&self) -> &[usize] {
        &self.stride
    }

    pub fn schedule(&self) -> &Schedule {
        self.schedule
    }

    /// Position of `region_index` among `node`'s contexts.
    pub fn context_of(&self, node: usize, region_index: usize) -> Option<usize> {
        self.contexts[node].iter().position(|c| c.0 == region_index)
    }

    pub fn context_count(&self, node: usize) -> usize {
        self.contexts[node].len()
    }

    pub fn region_of_context(&self, node: usize, ctx: usize) -> usize {
        self.contexts[node][ctx].0
    }

    /// Whether `node` is awake at global slot `t` in its `ctx`-th region.
    pub fn awake_in(&self, node: usize, ctx: usize, t: u64) -> bool {
        let m = self.schedule.m() as i64;
        let local = self.clock.local_time(node, t, self.schedule.superframe_slots() as u64);
        let (period, slot) = (local.div_euclid(m), local.rem_euclid(m) as usize);
        self.contexts[node][ctx].2[slot] && self.period_active(node, ctx, period)
    }

    fn period_active(&self, node: usize, ctx: usize, period: i64) -> bool {
        let w = self.schedule.windows() as i64;
        let (superframe, j) = (period.div_euclid(w), period.rem_euclid(w));
        let window = self.contexts[node][ctx].1 as i64;
        if j == window {
            return true;
        }
        let k = self.stride[node] as i64;
        if k < 2 || superframe.rem_euclid(k) != 0 {
            return false;
        }
        let d = (j - window).rem_euclid(w);
        d.min(w - d) < k
    }

    /// Global slots in `from..to` at which `node` is awake in its `ctx`-th
    /// region, in increasing order.
    pub fn awake_slots(&self, node: usize, ctx: usize, from: u64, to: u64) -> Vec<u64> {
        let m = self.schedule.m() as i64;
        let superframe = self.schedule.superframe_slots() as u64;
        let slots: Vec<i64> = self.contexts[node][ctx].2.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i as i64).collect();
        let mut out = Vec::new();
        let mut start = from;
        // The offset only moves at superframe boundaries.
        while start < to {
            let end = if self.clock.has_drift() { (start / superframe + 1) * superframe } else { to }.min(to);
            let shift = self.clock.offset_at(node, start, superframe);
            let (lo, hi) = (start as i64 + shift, end as i64 + shift);
            for period in (lo.div_euclid(m)..=(hi - 1).div_euclid(m)).filter(|&p| self.period_active(node, ctx, p)) {
                for &slot in &slots {
                    let local = period * m + slot;
                    if local >= lo && local < hi {
                        out.push((local - shift) as u64);
                    }
                }
            }
            start = end;
        }
        out
    }

    pub fn awake(&self, node: usize, t: u64) -> bool {
        (0..self.contexts[node].len()).any(|c| self.awake_in(node, c, t))
    }
}

/// Outcome of [`physical_connectivity_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Connectivity {
    pub connected: bool,
    /// Slots in which both nodes are awake in a region they share, averaged
    /// per superframe over one hyperperiod.
    pub rendezvous_per_superframe: f64,
    pub shared_regions: Vec<usize>,
}

/// Counts the slots in which `u` and `v` are awake together in a region
/// they both belong to, over `lcm(k_u, k_v)` superframes. Clock drift is
/// ignored: pass a clock frozen at the instant of interest.
pub fn physical_connectivity_check(u: usize, v: usize, activity: &Activity<'_>) -> Connectivity {
    let shared: Vec<(usize, usize, usize)> = (0..activity.context_count(u))
        .filter_map(|cu| {
            let region = activity.region_of_context(u, cu);
            activity.context_of(v, region).map(|cv| (region, cu, cv))
        })
        .collect();
    let superframes = lcm(activity.stride(u), activity.stride(v)) as u64;
    let horizon = superframes * activity.schedule().superframe_slots() as u64;
    let mut common: Vec<u64> = shared
        .iter()
        .flat_map(|&(_, cu, cv)| activity.awake_slots(u, cu, 0, horizon).into_iter().filter(move |&t| activity.awake_in(v, cv, t)))
        .collect();
    common.sort_unstable();
    common.dedup();
    let hits = common.len() as u64;
    Connectivity {
        connected: hits > 0,
        rendezvous_per_superframe: hits as f64 / superframes as f64,
        shared_regions: shared.iter().map(|&(r, _, _)| activity.schedule().regions()[r].region_id).collect(),
    }
}

/// Neighbour pairs `(u, v)`, `u < v`, that belong to a common region.
pub fn region_sharing_pairs(schedule: &Schedule, topology: &Topology) -> Vec<(usize, usize)> {
    topology
        .edges()
        .filter(|&(u, v)| schedule.contexts(u).any(|(r, _)| r.quorum_of(v).is_some()))
        .collect()
}

/// Result of running quorum share over the whole network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareOutcome {
    /// Final `k` per node; 1 means the node never engaged.
    pub stride: Vec<usize>,
    /// `L_t` per node: non-neighbours within interference range found awake
    /// together with the node before it engaged, by index.
    pub occupants: Vec<Vec<usize>>,
    pub iterations: usize,
    pub disconnected_before: usize,
    pub disconnected_after: usize,
}

/// Quorum share: every node that has lost a neighbour it shares a region
/// with raises its stride `k` by one, and the check repeats until all such
/// pairs meet again. `k` never needs to exceed `⌊W/2⌋ + 1`, where the
/// widened listening span covers a whole superframe.
pub fn quorum_share(schedule: &Schedule, topology: &Topology, clock: &ClockModel, model: &InterferenceModel) -> ShareOutcome {
    let n = topology.len();
    let pairs = region_sharing_pairs(schedule, topology);
    let cap = schedule.windows() / 2 + 1;
    let mut stride = vec![1; n];
    let mut occupants = vec![Vec::new(); n];
    let mut iterations = 0;
    let mut before = None;
    loop {
        let act = Activity::new(schedule, clock).with_stride(stride.clone());
        let bad: Vec<(usize, usize)> =
            pairs.iter().copied().filter(|&(u, v)| !physical_connectivity_check(u, v, &act).connected).collect();
        before.get_or_insert(bad.len());
        let mut engaged = vec![false; n];
        for &(u, v) in &bad {
            engaged[u] |= stride[u] < cap;
            engaged[v] |= stride[v] < cap;
        }
        if !engaged.contains(&true) {
            return ShareOutcome {
                stride,
                occupants,
                iterations,
                disconnected_before: before.unwrap_or(0),
                disconnected_after: bad.len(),
            };
        }
        if iterations == 0 {
            for u in (0..n).filter(|&u| engaged[u]) {
                occupants[u] = foreign_occupants(u, &act, topology, model);
            }
        }
        for u in 0..n {
            if engaged[u] {
                stride[u] += 1;
            }
        }
        iterations += 1;
    }
}

fn foreign_occupants(u: usize, act: &Activity<'_>, topology: &Topology, model: &InterferenceModel) -> Vec<usize> {
    let horizon = act.schedule().superframe_slots() as u64;
    let mine: Vec<u64> = (0..act.context_count(u)).flat_map(|c| act.awake_slots(u, c, 0, horizon)).collect();
    (0..topology.len())
        .filter(|&x| x != u && !topology.are_adjacent(u, x) && topology.hops(u, x) as usize <= model.phi)
        .filter(|&x| mine.iter().any(|&t| act.awake(x, t)))
        .collect()
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}
