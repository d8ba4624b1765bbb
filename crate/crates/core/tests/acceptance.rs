//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use adc::quorum::{
    async_rendezvous_bound, compute_access_load, compute_load, demand_lower_bound, demand_sum_feasible,
    estimate_k_round_max_load, load_ceiling_constant, min_rendezvous_over_rotations, sync_rendezvous_bound,
    verify_rotation_closure, Demand, GridQuorumSystem, Quorum,
};
use adc::scheduling::{build_plan, validate_schedule, Plan, ScheduleOptions};
use adc::sim::{
    compare_to_bound, physical_connectivity_check, quorum_share, region_sharing_pairs, run, run_baseline_comparison,
    spearman, Activity, ClockMode, ClockModel, MacKind, MacVariant, RunOptions, Scenario, SweepRow, SweepSpec,
    TrafficModel,
};
use adc::topology::{interference_constant, InterferenceModel, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CLOSURE_PERIODS: [usize; 6] = [4, 9, 16, 25, 36, 100];
const DEMAND_STEP: f64 = 0.05;
const CLOSURE_BUDGET: Duration = Duration::from_secs(10);
const PIPELINE_BUDGET: Duration = Duration::from_secs(60);
const SWEEP_BUDGET: Duration = Duration::from_secs(600);
const LOAD_TRIALS: usize = 2000;
const KROUND_TRIALS: usize = 1000;
const KROUND_FACTOR: f64 = 2.0;
const SPEARMAN_MIN: f64 = 0.8;
const TOPOLOGIES: u64 = 20;
const SWEEP_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("rotation closure", c1_rotation_closure),
        ("synchronous rendezvous bound", c2_sync_bound),
        ("asynchronous rendezvous bound", c3_async_bound),
        ("cardinality and closure condition", c4_cardinality),
        ("uniform selection load bounds", c5_load),
        ("k-round load", c6_k_round),
        ("pipeline conflict-freeness and ordering", c7_pipeline),
        ("aggregation delay bounds", c8_delay),
        ("quorum share connectivity", c9_share),
        ("baseline comparison trends", c10_trends),
    ];
    // `cargo test --test acceptance -- 3 8` runs only criteria 3 and 8.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected: Vec<usize> = (1..=criteria.len()).filter(|i| only.is_empty() || only.contains(i)).collect();
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = selected.iter().map(|&i| s.spawn(criteria[i - 1].1)).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| outcome(false, "panicked"))).collect()
    });
    let mut failed = 0;
    for (&i, r) in selected.iter().zip(&results) {
        let name = criteria[i - 1].0;
        println!("criterion {i:>2} {} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += !r.pass as usize;
    }
    println!("{} of {} criteria passed", selected.len() - failed, selected.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// Independent oracle: does `a` meet `b` rotated by `shift`, slot by slot.
fn meets(a: &[bool], b: &[bool], shift: usize) -> usize {
    let m = a.len();
    (0..m).filter(|&t| a[t] && b[(t + m - shift) % m]).count()
}

fn rule_one_quorums(g: &GridQuorumSystem) -> Vec<Quorum> {
    (1..=g.anchor_rows()).flat_map(|rows| g.quorums_with_rows(rows)).collect()
}

fn c1_rotation_closure() -> Outcome {
    let start = Instant::now();
    let mut checked = 0u64;
    for m in CLOSURE_PERIODS {
        let g = GridQuorumSystem::build(m).unwrap();
        let qs = rule_one_quorums(&g);
        if let Err(v) = verify_rotation_closure(&qs) {
            return outcome(false, format!("m={m}: {v:?}"));
        }
        let masks: Vec<Vec<bool>> = qs.iter().map(Quorum::mask).collect();
        for a in &masks {
            for b in &masks {
                for shift in 0..m {
                    if meets(a, b, shift) == 0 {
                        return outcome(false, format!("oracle: m={m} shift {shift} has an empty intersection"));
                    }
                    checked += 1;
                }
            }
        }
    }
    let took = start.elapsed();
    outcome(took < CLOSURE_BUDGET, format!("{checked} pair-shifts, all intersect, {:.2}s", took.as_secs_f64()))
}

fn demand_grid() -> Vec<Demand> {
    (1..=(1.0 / DEMAND_STEP).round() as usize).map(|i| Demand::fraction_of(i as f64 * DEMAND_STEP).unwrap()).collect()
}

// Every feasible demand pair and every anchor pair, with the worst overlap
// found by `measure` compared to `bound`.
fn rendezvous_sweep(measure: impl Fn(&Quorum, &Quorum) -> usize, bound: impl Fn(&Demand, &Demand, usize) -> usize) -> Outcome {
    let mut cases = 0u64;
    let mut tightest = f64::INFINITY;
    for m in [36, 100] {
        let g = GridQuorumSystem::build(m).unwrap();
        let demands = demand_grid();
        for du in &demands {
            for dv in &demands {
                if !demand_sum_feasible(&[*du, *dv], 1.0) {
                    continue;
                }
                let (ru, rv) = (g.rows_for(du), g.rows_for(dv));
                let need = bound(du, dv, m);
                for au in 1..=g.anchor_count(ru) {
                    for av in 1..=g.anchor_count(rv) {
                        let qu = g.quorum_with_rows(au, ru).unwrap();
                        let qv = g.quorum_with_rows(av, rv).unwrap();
                        let got = measure(&qu, &qv);
                        if got < need {
                            return outcome(
                                false,
                                format!("m={m} d=({:.2},{:.2}) anchors ({au},{av}): {got} < {need}", du.fraction(), dv.fraction()),
                            );
                        }
                        tightest = tightest.min(got as f64 / need as f64);
                        cases += 1;
                    }
                }
            }
        }
    }
    outcome(true, format!("{cases} quorum pairs, tightest ratio {tightest:.2}"))
}

fn c2_sync_bound() -> Outcome {
    rendezvous_sweep(|a, b| meets(&a.mask(), &b.mask(), 0), sync_rendezvous_bound)
}

fn c3_async_bound() -> Outcome {
    rendezvous_sweep(
        |a, b| {
            let (ma, mb) = (a.mask(), b.mask());
            let oracle = (0..ma.len()).map(|s| meets(&ma, &mb, s)).min().unwrap();
            assert_eq!(oracle, min_rendezvous_over_rotations(a, b).unwrap());
            oracle
        },
        async_rendezvous_bound,
    )
}

fn c4_cardinality() -> Outcome {
    let m = 100;
    let g = GridQuorumSystem::build(m).unwrap();
    let c1 = demand_lower_bound(m).unwrap();
    let mut fractions = vec![c1];
    fractions.extend(demand_grid().iter().map(Demand::fraction).filter(|&f| f >= c1));
    let mut smallest = usize::MAX;
    for f in fractions {
        let d = Demand::fraction_of(f).unwrap();
        let rows = g.rows_for(&d);
        for a in 1..=g.anchor_count(rows) {
            let q = g.design_quorum(a, &d).unwrap();
            smallest = smallest.min(q.len());
            if q.len() < 10 {
                return outcome(false, format!("d={f:.3} anchor {a}: |Q| = {}", q.len()));
            }
        }
    }
    // Nine consecutive slots miss their own half-period rotation.
    let thin = Quorum::from_slots(m, 0..9).unwrap();
    let witness = verify_rotation_closure(&[thin.clone()]);
    let Err(w) = witness else {
        return outcome(false, "a 9-slot quorum passed the closure check");
    };
    let confirmed = meets(&thin.mask(), &thin.mask(), w.shift) == 0;
    outcome(confirmed, format!("c1={c1:.4}, smallest |Q|={smallest}, 9-slot quorum fails at shift {}", w.shift))
}

fn c5_load() -> Outcome {
    let m = 100;
    let g = GridQuorumSystem::build(m).unwrap();
    let topo = Topology::random_geometric(100, 10.0, 1.8, 0).unwrap();
    let rho = interference_constant(&topo, &InterferenceModel::rts_cts()) as f64;
    let c4 = load_ceiling_constant(rho);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ceiling_ok = true;
    let mut floor_ok = true;
    let mut notes = Vec::new();
    for rows in 1..=3 {
        let qs = g.quorums_with_rows(rows);
        let gamma = qs.len();
        let uniform = vec![1.0 / gamma as f64; gamma];
        let exact = compute_load(m, &qs, &uniform).unwrap();
        let access = compute_access_load(m, &qs, &uniform).unwrap();
        // Monte-Carlo estimate of the weighted load at every slot.
        let mut sum = vec![0.0f64; m];
        let mut sq = vec![0.0f64; m];
        for _ in 0..LOAD_TRIALS {
            let q = &qs[rng.gen_range(0..gamma)];
            let w = q.len() as f64 / m as f64;
            for &s in q.slots() {
                sum[s] += w;
                sq[s] += w * w;
            }
        }
        let n = LOAD_TRIALS as f64;
        let (slot, est) = sum.iter().enumerate().map(|(i, s)| (i, s / n)).fold((0, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        let sigma = ((sq[slot] / n - est * est).max(0.0) / n).sqrt();
        let ceiling = c4 / gamma as f64 + 3.0 * sigma;
        ceiling_ok &= est <= ceiling;
        let smin = qs.iter().map(Quorum::len).min().unwrap() as f64;
        floor_ok &= access.max_load >= smin / m as f64 - 1e-12;
        notes.push(format!(
            "rows {rows}: estimate {est:.4} (exact {:.4}) vs ceiling {ceiling:.4}, access {:.3} >= floor {:.3}",
            exact.max_load,
            access.max_load,
            smin / m as f64
        ));
    }
    outcome(ceiling_ok && floor_ok, format!("rho={rho}, c4={c4}; {}", notes.join("; ")))
}

fn c6_k_round() -> Outcome {
    let two = estimate_k_round_max_load(10_000, 100, 2, KROUND_TRIALS, 42);
    let four = estimate_k_round_max_load(10_000, 100, 4, KROUND_TRIALS, 42);
    let one = estimate_k_round_max_load(10_000, 100, 1, KROUND_TRIALS, 42);
    let monotone = one.mean_max_load >= two.mean_max_load && two.mean_max_load >= four.mean_max_load;
    let within = |e: &adc::quorum::KRoundEstimate| {
        let r = e.mean_max_load / e.reference.unwrap();
        (1.0 / KROUND_FACTOR..=KROUND_FACTOR).contains(&r)
    };
    outcome(
        monotone && within(&two) && within(&four),
        format!(
            "mean max load k=1 {:.2}, k=2 {:.2} (ref {:.2}), k=4 {:.2} (ref {:.2})",
            one.mean_max_load,
            two.mean_max_load,
            two.reference.unwrap(),
            four.mean_max_load,
            four.reference.unwrap()
        ),
    )
}

fn geometric(seed: u64) -> Topology {
    Topology::random_geometric(100, 10.0, 1.8, seed).unwrap()
}

fn c7_pipeline() -> Outcome {
    let start = Instant::now();
    let model = InterferenceModel::rts_cts();
    for seed in 0..TOPOLOGIES {
        let t = geometric(seed);
        let plan = build_plan(&t, &ScheduleOptions::default()).unwrap();
        let report = validate_schedule(&plan.schedule, &plan.regions, &plan.tree, &t, &model);
        if let Some(v) = report.violations.first() {
            return outcome(false, format!("seed {seed}: {v}"));
        }
        for u in 0..t.len() {
            let Some(p) = plan.tree.parent(u) else { continue };
            let r = plan.schedule.region_by_center(p).unwrap();
            let (cu, cp) = (r.quorum_of(u).unwrap().first_slot(), r.quorum_of(p).unwrap().first_slot());
            if cu >= cp {
                return outcome(false, format!("seed {seed}: node {u} starts at {cu:?}, parent at {cp:?}"));
            }
        }
    }
    let took = start.elapsed();
    outcome(took < PIPELINE_BUDGET, format!("{TOPOLOGIES} topologies clean, {:.1}s", took.as_secs_f64()))
}

fn all_connected(plan: &Plan, t: &Topology, clock: &ClockModel, stride: Option<&[usize]>) -> bool {
    let mut act = Activity::new(&plan.schedule, clock);
    if let Some(s) = stride {
        act = act.with_stride(s.to_vec());
    }
    region_sharing_pairs(&plan.schedule, t).into_iter().all(|(u, v)| physical_connectivity_check(u, v, &act).connected)
}

// Small within-period shifts, shrunk until every region-sharing pair meets.
fn connected_async_shifts(plan: &Plan, t: &Topology, seed: u64) -> ClockModel {
    let mut bound = plan.schedule.m() as i64 / 2;
    loop {
        let clock = ClockModel::uniform(t.len(), bound, seed);
        if bound == 0 || all_connected(plan, t, &clock, None) {
            return clock;
        }
        bound /= 2;
    }
}

fn share_vectors(plan: &Plan, t: &Topology, seed: u64) -> [ClockModel; 2] {
    let m = plan.schedule.m() as i64;
    let sf = plan.schedule.superframe_slots() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let whole = (0..t.len()).map(|_| if rng.gen_bool(0.3) { m * rng.gen_range(-2..=2) } else { 0 }).collect();
    let straddling = (0..t.len()).map(|_| rng.gen_range(-sf..=sf)).collect();
    [ClockModel::fixed(whole), ClockModel::fixed(straddling)]
}

fn aggregation_run(scenario: &Scenario, clock: ClockModel, share: bool, bound: u64) -> adc::sim::SimReport {
    let sf = scenario.plan.schedule.superframe_slots() as u64;
    let interval = bound + sf;
    let mut o = RunOptions::new(scenario.topology.len(), TrafficModel::aggregate(interval as f64), MacVariant::adc(), 1.0, interval as f64);
    o.clock = clock;
    o.quorum_share = share;
    run(scenario, &o).unwrap()
}

fn c8_delay() -> Outcome {
    let mut worst = [0.0f64; 3];
    let mut failures = Vec::new();
    for seed in 0..TOPOLOGIES {
        let scenario = Scenario::new(geometric(seed), &ScheduleOptions::default()).unwrap();
        let b = scenario.bounds();
        let (plan, t) = (&scenario.plan, &scenario.topology);
        let [whole, straddling] = share_vectors(plan, t, seed);
        let runs = [
            (ClockMode::Synchronized, ClockModel::synchronized(t.len()), false),
            (ClockMode::AsyncConnected, connected_async_shifts(plan, t, seed), false),
            (ClockMode::AsyncConnected, connected_async_shifts(plan, t, seed + 1000), false),
            (ClockMode::QuorumShare, whole, true),
            (ClockMode::QuorumShare, straddling, true),
        ];
        for (i, (mode, clock, share)) in runs.into_iter().enumerate() {
            let bound = mode.bound(&b);
            let r = aggregation_run(&scenario, clock, share, bound);
            let delay = r.aggregation.as_ref().and_then(|a| a.max_delay);
            if !compare_to_bound(&r, &b, mode) {
                failures.push(format!("seed {seed} vector {i} ({mode:?}): {delay:?} vs {bound}"));
            }
            if let Some(d) = delay {
                let k = match mode {
                    ClockMode::Synchronized => 0,
                    ClockMode::AsyncConnected => 1,
                    ClockMode::QuorumShare => 2,
                };
                worst[k] = worst[k].max(d as f64 / bound as f64);
            }
        }
    }
    let detail = format!(
        "worst delay/bound: sync {:.2}, async {:.2}, share {:.2}; {} of {} runs over",
        worst[0],
        worst[1],
        worst[2],
        failures.len(),
        TOPOLOGIES * 5
    );
    match failures.first() {
        None => outcome(true, detail),
        Some(f) => outcome(false, format!("{detail}; first: {f}")),
    }
}

fn c9_share() -> Outcome {
    let mut vectors = 0;
    let mut broken_before = 0;
    for seed in 0..TOPOLOGIES {
        let t = geometric(seed);
        let plan = build_plan(&t, &ScheduleOptions::default()).unwrap();
        let m = plan.schedule.m() as i64;
        let w = plan.schedule.windows() as i64;
        let side = (m as f64).sqrt() as i64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let [whole, straddling] = share_vectors(&plan, &t, seed);
        let every_period = ClockModel::fixed((0..t.len()).map(|_| m * rng.gen_range(-w..=w)).collect());
        let edge = ClockModel::fixed((0..t.len()).map(|i| if i % 2 == 0 { m - side / 2 } else { -(m - side / 2) }).collect());
        let one_window = ClockModel::fixed((0..t.len() as i64).map(|i| (i % 2) * m).collect());
        for clock in [whole, straddling, every_period, edge, one_window] {
            vectors += 1;
            let out = quorum_share(&plan.schedule, &t, &clock, &InterferenceModel::rts_cts());
            broken_before += out.disconnected_before;
            if out.disconnected_after > 0 || !all_connected(&plan, &t, &clock, Some(&out.stride)) {
                return outcome(false, format!("seed {seed}: {} pairs still apart", out.disconnected_after));
            }
        }
    }
    outcome(true, format!("{vectors} shift vectors, {broken_before} broken pairs repaired"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn c10_trends() -> Outcome {
    let start = Instant::now();
    let spec = SweepSpec { seeds: SWEEP_SEEDS.to_vec(), ..SweepSpec::default() };
    let chunks: Vec<SweepSpec> = SWEEP_SEEDS.iter().map(|&s| SweepSpec { seeds: vec![s], ..spec.clone() }).collect();
    let rows: Vec<SweepRow> = std::thread::scope(|s| {
        let hs: Vec<_> = chunks.iter().map(|c| s.spawn(move || run_baseline_comparison(c, None).unwrap())).collect();
        hs.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let took = start.elapsed();
    let med = |mac: MacKind, slot: f64, period: f64, f: fn(&SweepRow) -> f64| {
        median(
            rows.iter()
                .filter(|r| r.mac == mac && r.slot_duration == slot && r.generation_period == period)
                .map(f)
                .collect(),
        )
    };
    let tput = |r: &SweepRow| r.throughput;
    let prr = |r: &SweepRow| r.prr;
    let periods = &spec.generation_periods;

    let mut a = true;
    for &slot in spec.slot_sizes.iter().filter(|&&s| s >= 1.0) {
        for &p in periods.iter().filter(|&&p| p <= 0.5) {
            a &= med(MacKind::Adc, slot, p, tput) > med(MacKind::Lpl, slot, p, tput);
        }
    }
    let small = spec.slot_sizes[0];
    let lpl_wins = periods.iter().filter(|&&p| med(MacKind::Lpl, small, p, tput) >= med(MacKind::Adc, small, p, tput)).count();
    let b = 2 * lpl_wins >= periods.len();

    let mut c = true;
    let mut weakest = f64::INFINITY;
    for mac in [MacKind::Adc, MacKind::Lpl] {
        for &slot in &spec.slot_sizes {
            let series: Vec<f64> = periods.iter().map(|&p| med(mac, slot, p, prr)).collect();
            // A flat series is trivially non-decreasing.
            let rho = spearman(periods, &series).unwrap_or(1.0);
            weakest = weakest.min(rho);
            c &= rho > SPEARMAN_MIN;
        }
    }

    let range = |mac: MacKind, slots: &[f64], p: f64| {
        let v: Vec<f64> = slots.iter().map(|&s| med(mac, s, p, tput)).collect();
        v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min)
    };
    let large: Vec<f64> = spec.slot_sizes.iter().copied().filter(|&s| s >= 1.0).collect();
    let d_all = periods.iter().filter(|&&p| range(MacKind::Adc, &large, p) < range(MacKind::Lpl, &large, p)).count();
    let d = d_all == periods.len();
    let full = periods.iter().filter(|&&p| range(MacKind::Adc, &spec.slot_sizes, p) < range(MacKind::Lpl, &spec.slot_sizes, p)).count();

    outcome(
        a && b && c && d && took < SWEEP_BUDGET,
        format!(
            "{} runs in {:.0}s; (a) {} (b) LPL >= ADC at {small}s for {lpl_wins}/{} periods (c) min spearman {weakest:.2} \
             (d) narrower ADC range over 1-5s slots at {d_all}/{n} periods, over all slots at {full}/{n}",
            rows.len(),
            took.as_secs_f64(),
            if a { "holds" } else { "violated" },
            periods.len(),
            n = periods.len(),
        ),
    )
}
