use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adc::{micros, Arrivals};
use super::{finish_totals, MacKind, MacVariant, NodeFlow, RunOptions, Scenario, SimError, SimReport};

/// Resolved baseline parameters, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) struct LplParams {
    pub check_interval: f64,
    pub preamble: f64,
    pub backoff_window: f64,
    pub retry_limit: u32,
    pub duty_cycle: f64,
    pub bitrate: f64,
}

impl LplParams {
    pub(super) fn resolve(mac: &MacVariant, slot_duration: f64) -> Result<Self, SimError> {
        let MacVariant::Lpl { check_interval, preamble, backoff_window, retry_limit, duty_cycle, bitrate } = *mac else {
            return Err(SimError::Config("not an LPL configuration".into()));
        };
        let check = check_interval.unwrap_or(slot_duration);
        let preamble = preamble.unwrap_or(check);
        if !(check > 0.0) || preamble < check {
            return Err(SimError::Config(format!(
                "preamble {preamble}s must cover the check interval {check}s"
            )));
        }
        if !(0.0..=1.0).contains(&duty_cycle) || backoff_window < 0.0 || !(bitrate > 0.0) {
            return Err(SimError::Config("duty cycle, backoff window or bitrate out of range".into()));
        }
        Ok(LplParams { check_interval: check, preamble, backoff_window, retry_limit, duty_cycle, bitrate })
    }
}

#[derive(Debug, Clone, Copy)]
struct Tx {
    node: usize,
    receiver: usize,
    start: u64,
    data_start: u64,
    end: u64,
}

impl Tx {
    fn overlaps(&self, from: u64, to: u64) -> bool {
        self.start < to && self.end > from
    }
}

const TX_END: u8 = 0;
const ATTEMPT: u8 = 1;

/// Preamble-sampling CSMA: a sender senses the channel over its interference
/// range, defers while anything there transmits, then sends a preamble spanning one check interval
/// followed by the packet. The packet survives if the receiver stayed silent
/// for the whole transmission and nothing else within interference range of
/// the receiver overlapped the data.
pub(super) fn run(s: &Scenario, o: &RunOptions, p: &LplParams) -> SimReport {
    let topo = &s.topology;
    let tree = &s.plan.tree;
    let n = topo.len();
    let sink = topo.sink();
    let slots = ((o.duration / o.slot_duration).round() as u64).max(1);
    let slot_us = micros(o.slot_duration).max(1);
    let horizon = slots * slot_us;
    let data_us = micros(o.traffic.payload_bytes as f64 * 8.0 / p.bitrate).max(1);
    let preamble_us = micros(p.preamble);
    let tx_us = preamble_us + data_us;
    let backoff_us = micros(p.backoff_window).max(1);
    let cap = o.traffic.queue_cap;

    let interferes: Vec<Vec<bool>> =
        (0..n).map(|x| (0..n).map(|q| x != q && s.model.nodes_interfere(topo, x, q)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let arrivals: Vec<Arrivals> = (0..n).map(|_| Arrivals::new(&mut rng, micros(o.traffic.generation_period))).collect();

    let mut flow: Vec<NodeFlow> = (0..n).map(|u| NodeFlow { node: topo.label(u), ..Default::default() }).collect();
    let mut queue = vec![0u64; n];
    let mut seen = vec![0u64; n];
    let mut retries = vec![0u32; n];
    let mut version = vec![0u64; n];
    let mut pending: Vec<Option<u64>> = vec![None; n];
    let mut sending: Vec<Option<Tx>> = vec![None; n];
    let mut recent: Vec<Tx> = Vec::new();
    let mut airtime = vec![0u64; n];
    let mut last_rx: Vec<(u64, u64)> = vec![(u64::MAX, 0); n];
    let (mut attempts, mut collisions, mut max_rx, mut delivered) = (0u64, 0u64, 0u64, 0u64);

    let mut events: BinaryHeap<Reverse<(u64, u8, usize, u64)>> = BinaryHeap::new();
    let schedule_attempt =
        |events: &mut BinaryHeap<Reverse<(u64, u8, usize, u64)>>, version: &mut [u64], pending: &mut [Option<u64>], u: usize, at: u64| {
            version[u] += 1;
            pending[u] = Some(at);
            events.push(Reverse((at, ATTEMPT, u, version[u])));
        };
    // Pulls every sample taken before `until` into the queue.
    let refresh = |u: usize, until: u64, queue: &mut [u64], seen: &mut [u64], flow: &mut [NodeFlow]| {
        if u == sink {
            return;
        }
        let total = arrivals[u].before(until);
        let k = total - seen[u];
        seen[u] = total;
        flow[u].generated += k;
        let kept = k.min(cap.saturating_sub(queue[u]));
        queue[u] += kept;
        flow[u].dropped += k - kept;
    };

    for u in (0..n).filter(|&u| u != sink) {
        schedule_attempt(&mut events, &mut version, &mut pending, u, arrivals[u].next_from(0));
    }

    while let Some(Reverse((now, kind, u, ver))) = events.pop() {
        if now >= horizon {
            break;
        }
        if kind == ATTEMPT {
            if ver != version[u] || sending[u].is_some() {
                continue;
            }
            pending[u] = None;
            refresh(u, now + 1, &mut queue, &mut seen, &mut flow);
            if queue[u] == 0 {
                let at = arrivals[u].next_from(now + 1);
                schedule_attempt(&mut events, &mut version, &mut pending, u, at);
                continue;
            }
            let busy = (0..n).filter(|&w| interferes[w][u]).filter_map(|w| sending[w].map(|t| t.end)).max();
            if let Some(end) = busy {
                let at = end + rng.gen_range(1..=backoff_us);
                schedule_attempt(&mut events, &mut version, &mut pending, u, at);
                continue;
            }
            let receiver = tree.parent(u).expect("non-sink nodes have parents");
            let tx = Tx { node: u, receiver, start: now, data_start: now + preamble_us, end: now + tx_us };
            airtime[u] += tx_us.min(horizon - now);
            sending[u] = Some(tx);
            events.push(Reverse((tx.end, TX_END, u, 0)));
            continue;
        }

        let tx = sending[u].take().expect("a transmission ends only once");
        recent.retain(|r| r.end + tx_us >= now);
        let live = sending.iter().flatten();
        let q = tx.receiver;
        let deaf = recent.iter().chain(live.clone()).any(|r| r.node == q && r.overlaps(tx.start, tx.end));
        let jammed = recent
            .iter()
            .chain(live)
            .any(|r| r.node != u && r.node != q && interferes[r.node][q] && r.overlaps(tx.data_start, tx.end));
        recent.push(tx);
        attempts += 1;
        if deaf || jammed {
            collisions += 1;
            retries[u] += 1;
            if retries[u] > p.retry_limit {
                retries[u] = 0;
                queue[u] -= 1;
                flow[u].dropped += 1;
            }
            let at = now + rng.gen_range(1..=backoff_us);
            schedule_attempt(&mut events, &mut version, &mut pending, u, at);
            continue;
        }
        retries[u] = 0;
        queue[u] -= 1;
        flow[u].forwarded += 1;
        flow[q].received += 1;
        let bucket = now / slot_us;
        last_rx[q] = if last_rx[q].0 == bucket { (bucket, last_rx[q].1 + 1) } else { (bucket, 1) };
        max_rx = max_rx.max(last_rx[q].1);
        if q == sink {
            flow[q].consumed += 1;
            delivered += 1;
        } else {
            refresh(q, now + 1, &mut queue, &mut seen, &mut flow);
            if queue[q] < cap {
                queue[q] += 1;
            } else {
                flow[q].dropped += 1;
            }
            if sending[q].is_none() && pending[q].is_none_or(|at| at > now) {
                schedule_attempt(&mut events, &mut version, &mut pending, q, now);
            }
        }
        schedule_attempt(&mut events, &mut version, &mut pending, u, now);
    }

    for u in 0..n {
        refresh(u, horizon, &mut queue, &mut seen, &mut flow);
        flow[u].queued = queue[u];
    }
    let generated = flow.iter().map(|f| f.generated).sum();
    let lost = flow.iter().map(|f| f.dropped).sum();
    let in_flight = queue.iter().sum();
    let mut report = SimReport {
        mac: MacKind::Lpl,
        seed: o.seed,
        slot_duration: o.slot_duration,
        slots,
        duration: horizon as f64 / 1e6,
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
        aggregation: None,
        rendezvous_histogram: Vec::new(),
        active_slot_fraction: airtime.iter().map(|&a| (p.duty_cycle + a as f64 / horizon as f64).min(1.0)).collect(),
        mean_active_fraction: 0.0,
        disconnected_pairs: Vec::new(),
        strides: vec![1; n],
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
    use crate::sim::{run, TrafficModel};
    use crate::topology::Topology;

    #[test]
    fn preamble_shorter_than_check_is_rejected() {
        let mac = MacVariant::Lpl {
            check_interval: Some(0.1),
            preamble: Some(0.05),
            backoff_window: 0.01,
            retry_limit: 3,
            duty_cycle: 0.2,
            bitrate: 250e3,
        };
        assert!(LplParams::resolve(&mac, 1.0).is_err());
        let p = LplParams::resolve(&MacVariant::lpl(), 0.5).unwrap();
        assert_eq!((p.check_interval, p.preamble), (0.5, 0.5));
    }

    #[test]
    fn single_link_carries_light_traffic() {
        let t = Topology::from_edges(0, [], [(0, 1)]).unwrap();
        let s = Scenario::new(t, &ScheduleOptions::default()).unwrap();
        let o = RunOptions::new(2, TrafficModel::raw(1.0), MacVariant::lpl(), 0.1, 1000.0);
        let r = run(&s, &o).unwrap();
        assert_eq!(r.collision_count, 0);
        assert!(r.generated >= 999 && r.delivered + r.in_flight == r.generated);
        assert!(r.conserves_packets());
        assert!((r.active_slot_fraction[1] - (0.2 + r.generated as f64 * 0.10128 / 1000.0)).abs() < 1e-3);
    }

    #[test]
    fn contention_loses_packets_but_conserves() {
        let t = Topology::jittered_grid(5, 5, 1.5, 0.05, 1).unwrap();
        let s = Scenario::new(t, &ScheduleOptions::default()).unwrap();
        let mut o = RunOptions::new(25, TrafficModel::raw(0.05), MacVariant::lpl(), 0.05, 200.0);
        o.traffic.queue_cap = 50;
        let r = run(&s, &o).unwrap();
        assert!(r.conserves_packets());
        assert!(r.lost > 0 && r.prr < 0.5);
        assert!(r.max_receptions_per_slot <= 2);
        assert_eq!(r.to_json(), run(&s, &o).unwrap().to_json());
    }
}
