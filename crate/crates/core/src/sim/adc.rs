use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::share::{quorum_share, region_sharing_pairs, Activity};
use super::{finish_totals, AggregationStats, LinkRendezvous, MacKind, MacVariant, NodeFlow, RunOptions, Scenario, SimReport, TrafficMode};

// A tree link and every region both ends belong to, the parent's first.
struct Link {
    child: usize,
    parent: usize,
    contexts: Vec<(usize, usize)>,
}

// Samples held by a node for one aggregation round.
#[derive(Default, Clone, Copy)]
struct Partial {
    reports: usize,
    samples: u64,
}

/// Sample arrivals at one node: a random phase then one every `period` µs.
pub(super) struct Arrivals {
    phase: u64,
    period: u64,
}

impl Arrivals {
    pub(super) fn new(rng: &mut ChaCha8Rng, period_us: u64) -> Self {
        let period = period_us.max(1);
        Arrivals { phase: rng.gen_range(0..period), period }
    }

    /// Samples taken strictly before `t_us`.
    pub(super) fn before(&self, t_us: u64) -> u64 {
        if t_us <= self.phase {
            0
        } else {
            (t_us - self.phase - 1) / self.period + 1
        }
    }

    /// Time of the first sample at or after `t_us`.
    pub(super) fn next_from(&self, t_us: u64) -> u64 {
        self.phase + self.before(t_us) * self.period
    }
}

pub(super) fn micros(seconds: f64) -> u64 {
    (seconds * 1e6).round().max(0.0) as u64
}

pub(super) fn run(s: &Scenario, o: &RunOptions) -> SimReport {
    let topo = &s.topology;
    let tree = &s.plan.tree;
    let schedule = &s.plan.schedule;
    let n = topo.len();
    let sink = topo.sink();
    let superframe = schedule.superframe_slots() as u64;
    let slots = ((o.duration / o.slot_duration).round() as u64).max(1);
    let MacVariant::Adc { guard, bitrate } = o.mac else { unreachable!("dispatched on mac kind") };
    let aggregate = o.traffic.mode == TrafficMode::Aggregate;
    let capacity = if aggregate {
        1
    } else {
        ((o.slot_duration - guard).max(0.0) * bitrate / (8 * o.traffic.payload_bytes.max(1)) as f64).floor() as u64
    };

    let mut stride = vec![1; n];
    if o.quorum_share {
        stride = quorum_share(schedule, topo, &o.clock.frozen_at(0, superframe), &s.model).stride;
    }
    let mut act = Activity::new(schedule, &o.clock).with_stride(stride.clone());

    let shared = |act: &Activity<'_>, u: usize, v: usize| -> Vec<(usize, usize)> {
        (0..act.context_count(u))
            .filter_map(|cu| act.context_of(v, act.region_of_context(u, cu)).map(|cv| (cu, cv)))
            .collect()
    };
    let links: Vec<Link> = (0..n)
        .filter_map(|u| {
            let p = tree.parent(u)?;
            let own = schedule.regions().iter().position(|r| r.center == p)?;
            let mut contexts = shared(&act, u, p);
            contexts.sort_by_key(|&(cu, _)| act.region_of_context(u, cu) != own);
            Some(Link { child: u, parent: p, contexts })
        })
        .collect();
    let mut link_of = vec![usize::MAX; n];
    for (i, l) in links.iter().enumerate() {
        link_of[l.child] = i;
    }
    let interferes: Vec<Vec<bool>> =
        (0..n).map(|x| (0..n).map(|p| x != p && s.model.nodes_interfere(topo, x, p)).collect()).collect();
    let pairs: Vec<(usize, usize, Vec<(usize, usize)>)> =
        region_sharing_pairs(schedule, topo).into_iter().map(|(u, v)| (u, v, shared(&act, u, v))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let slot_us = micros(o.slot_duration);
    let period_us = micros(o.traffic.generation_period);
    let arrivals: Vec<Arrivals> = (0..n).map(|_| Arrivals::new(&mut rng, period_us)).collect();

    let round_interval = ((o.traffic.generation_period / o.slot_duration).round() as u64).max(1);
    let rounds = slots.div_ceil(round_interval);
    let mut next_round = vec![0u64; n];
    let mut partial: Vec<BTreeMap<u64, Partial>> = vec![BTreeMap::new(); n];
    let mut delays: Vec<Option<u64>> = vec![None; if aggregate { rounds as usize } else { 0 }];

    let mut flow: Vec<NodeFlow> = (0..n).map(|u| NodeFlow { node: topo.label(u), ..Default::default() }).collect();
    let mut queue = vec![0u64; n];
    let mut awake: Vec<Vec<bool>> = (0..n).map(|u| vec![false; act.context_count(u)]).collect();
    // Per slot of the current superframe, the (node, context) pairs awake.
    let mut agenda: Vec<Vec<(usize, usize)>> = vec![Vec::new(); superframe as usize];
    let mut active = vec![0u64; n];
    let mut rendezvous = vec![0u64; links.len()];
    let mut met = vec![false; pairs.len()];
    let mut disconnected = Vec::new();
    let mut transmitting = vec![false; n];
    let mut receptions = vec![0u64; n];
    // Rendezvous a node lets pass after a collision, and its failure streak.
    let mut skip = vec![0u32; n];
    let mut streak = vec![0u32; n];
    let mut txs: Vec<usize> = Vec::new();
    let mut wins: Vec<usize> = Vec::new();
    let (mut attempts, mut collisions, mut max_rx, mut delivered) = (0u64, 0u64, 0u64, 0u64);

    for t in 0..slots {
        if t % superframe == 0 {
            if t > 0 {
                disconnected.push(met.iter().filter(|&&m| !m).count() as u64);
                if o.quorum_share && o.clock.has_drift() {
                    stride = quorum_share(schedule, topo, &o.clock.frozen_at(t, superframe), &s.model).stride;
                    act = Activity::new(schedule, &o.clock).with_stride(stride.clone());
                }
            }
            met.iter_mut().for_each(|m| *m = false);
            agenda.iter_mut().for_each(Vec::clear);
            for u in 0..n {
                for c in 0..act.context_count(u) {
                    for x in act.awake_slots(u, c, t, t + superframe) {
                        agenda[(x - t) as usize].push((u, c));
                    }
                }
            }
        }

        let now = &agenda[(t % superframe) as usize];
        for &(u, c) in now {
            awake[u][c] = true;
        }
        for &(u, c) in now {
            if !awake[u].iter().take(c).any(|&a| a) {
                active[u] += 1;
            }
        }
        for (i, (u, v, shared)) in pairs.iter().enumerate() {
            if !met[i] && shared.iter().any(|&(cu, cv)| awake[*u][cu] && awake[*v][cv]) {
                met[i] = true;
            }
        }

        if aggregate {
            if t % round_interval == 0 {
                let r = t / round_interval;
                for f in flow.iter_mut().enumerate().filter(|(u, _)| *u != sink).map(|(_, f)| f) {
                    f.generated += 1;
                }
                if tree.children(sink).is_empty() {
                    delays[r as usize] = Some(0);
                }
            }
        } else {
            let (from, to) = (t * slot_us, (t + 1) * slot_us);
            for u in (0..n).filter(|&u| u != sink) {
                let k = arrivals[u].before(to) - arrivals[u].before(from);
                flow[u].generated += k;
                let kept = k.min(o.traffic.queue_cap.saturating_sub(queue[u]));
                queue[u] += kept;
                flow[u].dropped += k - kept;
            }
        }

        txs.clear();
        for (i, l) in links.iter().enumerate() {
            if !l.contexts.iter().any(|&(cu, cp)| awake[l.child][cu] && awake[l.parent][cp]) {
                continue;
            }
            rendezvous[i] += 1;
            let ready = if aggregate {
                let u = l.child;
                let r = next_round[u];
                r < rounds
                    && r * round_interval <= t
                    && partial[u].get(&r).map_or(0, |p| p.reports) == tree.children(u).len()
            } else {
                capacity > 0 && queue[l.child] > 0
            };
            if ready {
                if skip[l.child] > 0 {
                    skip[l.child] -= 1;
                } else {
                    txs.push(l.child);
                }
            }
        }
        for &u in &txs {
            transmitting[u] = true;
        }
        wins.clear();
        for &u in &txs {
            let p = links[link_of[u]].parent;
            attempts += 1;
            if !transmitting[p] && txs.iter().all(|&x| x == u || !interferes[x][p]) {
                wins.push(u);
                streak[u] = 0;
            } else {
                collisions += 1;
                streak[u] += 1;
                skip[u] = rng.gen_range(0..1u32 << streak[u].min(4));
            }
        }
        for &u in &txs {
            transmitting[u] = false;
        }

        for &u in &wins {
            let p = links[link_of[u]].parent;
            receptions[p] += 1;
            max_rx = max_rx.max(receptions[p]);
            let moved = if aggregate {
                let r = next_round[u];
                next_round[u] += 1;
                let carried = partial[u].remove(&r).map_or(0, |p| p.samples) + 1;
                let entry = partial[p].entry(r).or_default();
                entry.reports += 1;
                entry.samples += carried;
                if p == sink && entry.reports == tree.children(sink).len() {
                    delays[r as usize] = Some(t + 1 - r * round_interval);
                    partial[sink].remove(&r);
                }
                carried
            } else {
                let k = queue[u].min(capacity);
                queue[u] -= k;
                if p != sink {
                    let kept = k.min(o.traffic.queue_cap.saturating_sub(queue[p]));
                    queue[p] += kept;
                    flow[p].dropped += k - kept;
                }
                k
            };
            flow[u].forwarded += moved;
            flow[p].received += moved;
            if p == sink {
                flow[sink].consumed += moved;
                delivered += moved;
            }
        }
        for &u in &wins {
            receptions[links[link_of[u]].parent] = 0;
        }
        for &(u, c) in now {
            awake[u][c] = false;
        }
    }
    if slots % superframe == 0 {
        disconnected.push(met.iter().filter(|&&m| !m).count() as u64);
    }

    for u in 0..n {
        flow[u].queued = if aggregate {
            let own = if u == sink { 0 } else { rounds - next_round[u] };
            let held = if u == sink { 0 } else { partial[u].values().map(|p| p.samples).sum::<u64>() };
            own + held
        } else {
            queue[u]
        };
    }
    let generated = flow.iter().map(|f| f.generated).sum();
    let lost = flow.iter().map(|f| f.dropped).sum();
    let in_flight = flow.iter().map(|f| f.queued).sum();

    let aggregation = aggregate.then(|| {
        let done: Vec<u64> = delays.iter().flatten().copied().collect();
        AggregationStats {
            rounds,
            completed: done.len() as u64,
            incomplete: rounds - done.len() as u64,
            round_interval,
            max_delay: done.iter().copied().max(),
            mean_delay: (!done.is_empty()).then(|| done.iter().sum::<u64>() as f64 / done.len() as f64),
            delays,
        }
    });

    let mut report = SimReport {
        mac: MacKind::Adc,
        seed: o.seed,
        slot_duration: o.slot_duration,
        slots,
        duration: slots as f64 * o.slot_duration,
        generated,
        delivered,
        lost,
        in_flight,
        throughput: 0.0,
        prr: 0.0,
        link_prr: 0.0,
        attempts,
        collision_count: collisions,
        max_receptions_per_slot: max_rx,
        aggregation,
        rendezvous_histogram: links
            .iter()
            .zip(&rendezvous)
            .map(|(l, &slots)| LinkRendezvous { child: topo.label(l.child), parent: topo.label(l.parent), slots })
            .collect(),
        active_slot_fraction: active.iter().map(|&a| a as f64 / slots as f64).collect(),
        mean_active_fraction: 0.0,
        disconnected_pairs: disconnected,
        strides: stride,
        nodes: flow,
        config: None,
    };
    finish_totals(&mut report);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::ScheduleOptions;
    use crate::sim::{compare_to_bound, run, ClockMode, ClockModel, TrafficModel};
    use crate::topology::Topology;

    fn scenario(rows: usize) -> Scenario {
        Scenario::new(Topology::jittered_grid(rows, rows, 1.5, 0.05, 5).unwrap(), &ScheduleOptions::default()).unwrap()
    }

    fn opts(s: &Scenario, traffic: TrafficModel, superframes: u64) -> RunOptions {
        let sf = s.plan.schedule.superframe_slots() as f64;
        RunOptions::new(s.topology.len(), traffic, MacVariant::adc(), 1.0, sf * superframes as f64)
    }

    #[test]
    fn arrivals_count_half_open_intervals() {
        let a = Arrivals { phase: 5, period: 10 };
        assert_eq!((a.before(5), a.before(6), a.before(15), a.before(16)), (0, 1, 1, 2));
        assert_eq!(a.next_from(5), 5);
        assert_eq!(a.next_from(6), 15);
        assert_eq!(a.next_from(0), 5);
    }

    #[test]
    fn synchronous_aggregation_meets_the_bound() {
        let s = scenario(6);
        let b = s.bounds();
        let sf = s.plan.schedule.superframe_slots() as f64;
        let report = run(&s, &opts(&s, TrafficModel::aggregate(sf * 2.0), 12)).unwrap();
        let agg = report.aggregation.as_ref().unwrap();
        assert!(agg.completed >= 1);
        assert!(compare_to_bound(&report, &b, ClockMode::Synchronized), "{:?} vs {}", agg.max_delay, b.sync_bound);
        assert_eq!(report.collision_count, 0);
        assert!(report.conserves_packets());
        assert!(report.disconnected_pairs.iter().all(|&d| d == 0));
    }

    #[test]
    fn raw_forwarding_conserves_and_is_deterministic() {
        let s = scenario(5);
        let mut o = opts(&s, TrafficModel::raw(3.0), 6);
        o.seed = 11;
        o.traffic.queue_cap = 5;
        let a = run(&s, &o).unwrap();
        let b = run(&s, &o).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.conserves_packets());
        assert!(a.delivered > 0 && a.lost > 0);
        assert!(a.max_receptions_per_slot <= 1);
        assert!(a.active_slot_fraction.iter().all(|&f| f > 0.0 && f <= 1.0));
        o.seed = 12;
        assert_ne!(run(&s, &o).unwrap().to_json(), a.to_json());
    }

    #[test]
    fn whole_superframe_shifts_change_nothing() {
        let s = scenario(5);
        let sf = s.plan.schedule.superframe_slots() as i64;
        let base = opts(&s, TrafficModel::aggregate(40.0), 6);
        let sync = run(&s, &base).unwrap();
        let shifts = (0..s.topology.len() as i64).map(|i| (i % 3 - 1) * sf).collect();
        let shifted = run(&s, &RunOptions { clock: ClockModel::fixed(shifts), ..base }).unwrap();
        assert_eq!(sync.aggregation, shifted.aggregation);
        assert_eq!(sync.delivered, shifted.delivered);
    }
}
