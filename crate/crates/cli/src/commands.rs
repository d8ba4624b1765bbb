use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use adc::quorum::{compute_load, demand_sum_feasible, verify_rotation_closure, Demand, GridQuorumSystem, Quorum};
use adc::scheduling::{build_plan, export_schedule, validate_schedule, DelayBound, ScheduleOptions};
use adc::sim::{compare_to_bound, run_config, ClockMode, ClockSpec, SimConfig, SweepRow, SweepSpec, TrafficMode};
use adc::topology::{InterferenceModel, Topology};
use adc::verify::{all_grid_quorums, run_suite, SuiteOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{ModelArg, OutArgs, QsArgs, ScheduleArgs, SimulateArgs, SweepArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or inconsistent input. Exit code 2.
    Input(String),
    /// The input was fine but a checked property does not hold. Exit code 1.
    Validation(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Validation(m) => f.write_str(m),
        }
    }
}

fn input<E: fmt::Display>(context: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", context.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(input(path))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn artifact_path(out: &OutArgs, input: &Path, suffix: &str) -> PathBuf {
    out.output.clone().unwrap_or_else(|| {
        let stem = input.file_stem().unwrap_or_default().to_string_lossy();
        out.out_dir.join(format!("{stem}{suffix}"))
    })
}

#[derive(Serialize)]
struct QuorumEntry {
    anchor: usize,
    slots: Vec<usize>,
}

#[derive(Serialize)]
struct DemandGroup {
    demand: Option<f64>,
    rows: usize,
    quorums: Vec<QuorumEntry>,
}

#[derive(Serialize)]
struct ClosureVerdict {
    passed: bool,
    quorums: usize,
    shifts_checked: u64,
    witness: Option<String>,
}

#[derive(Serialize)]
struct QsOutput {
    m: usize,
    side: usize,
    feasible: bool,
    groups: Vec<DemandGroup>,
    closure: ClosureVerdict,
    max_load: f64,
    per_slot_load: Vec<f64>,
}

pub fn qs(a: &QsArgs, json: bool) -> Result<(), CliError> {
    let bad = |e: adc::quorum::QuorumError| CliError::Input(e.to_string());
    let g = GridQuorumSystem::build(a.m).map_err(bad)?;
    let demands: Vec<Demand> = a.demands.iter().map(|&d| Demand::fraction_of(d)).collect::<Result<_, _>>().map_err(bad)?;
    let mut groups = Vec::new();
    if demands.is_empty() {
        groups.push((None, 1));
    }
    for d in &demands {
        groups.push((Some(d.fraction()), g.rows_for(d)));
    }
    let groups: Vec<DemandGroup> = groups
        .into_iter()
        .map(|(demand, rows)| DemandGroup {
            demand,
            rows,
            quorums: g
                .quorums_with_rows(rows)
                .iter()
                .map(|q| QuorumEntry { anchor: q.anchor().unwrap_or(0), slots: q.slots().to_vec() })
                .collect(),
        })
        .collect();

    let listed: Vec<Quorum> = groups
        .iter()
        .flat_map(|grp| g.quorums_with_rows(grp.rows))
        .collect();
    let checked = if a.verify_closure { all_grid_quorums(&g) } else { listed.clone() };
    let verdict = verify_rotation_closure(&checked);
    let closure = ClosureVerdict {
        passed: verdict.is_ok(),
        quorums: checked.len(),
        shifts_checked: (checked.len() * checked.len() * a.m) as u64,
        witness: verdict.err().map(|v| format!("quorum {} misses quorum {} at shift {}", v.first, v.second, v.shift)),
    };
    let uniform = vec![1.0 / listed.len() as f64; listed.len()];
    let load = compute_load(a.m, &listed, &uniform).map_err(bad)?;
    let out = QsOutput {
        m: a.m,
        side: g.side(),
        feasible: demand_sum_feasible(&demands, 1.0),
        groups,
        closure,
        max_load: load.max_load,
        per_slot_load: load.per_slot_load,
    };

    if json {
        print_json(&out);
    } else {
        println!("m = {} ({}x{} grid)", out.m, out.side, out.side);
        if !out.feasible {
            println!("warning: demands sum past the region capacity");
        }
        for grp in &out.groups {
            let label = grp.demand.map_or("default".to_string(), |d| format!("d = {d:.3}"));
            println!("{label}: {} row(s), {} slots per quorum", grp.rows, grp.quorums[0].slots.len());
            for q in &grp.quorums {
                let slots: Vec<String> = q.slots.iter().map(usize::to_string).collect();
                println!("  anchor {:>2}: {}", q.anchor, slots.join(" "));
            }
        }
        println!(
            "closure = {} over {} quorums, {} pair-shifts",
            out.closure.passed, out.closure.quorums, out.closure.shifts_checked
        );
        if let Some(w) = &out.closure.witness {
            println!("  {w}");
        }
        println!("max load under uniform selection = {:.4}", out.max_load);
    }
    match &out.closure.witness {
        Some(w) => Err(CliError::Validation(format!("rotation closure fails: {w}"))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ScheduleOutput {
    schedule: PathBuf,
    manifest: PathBuf,
    nodes: usize,
    regions: usize,
    colors: usize,
    windows: usize,
    m: usize,
    superframe_slots: usize,
    bounds: DelayBound,
    violations: adc::scheduling::ValidationReport,
}

pub fn schedule(a: &ScheduleArgs, json: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let topo = Topology::parse_edge_list(&read(&a.topology)?).map_err(input(&a.topology))?;
    let model = match a.model {
        ModelArg::RtsCts => InterferenceModel::rts_cts(),
        ModelArg::Protocol => InterferenceModel::protocol(
            a.comm_range.unwrap_or(topo.comm_range()),
            a.interference_range.unwrap_or(topo.interference_range()),
        ),
        ModelArg::Physical => InterferenceModel::physical(a.phi, Vec::new()),
    };
    let options = ScheduleOptions { model: model.clone(), m: a.m, rows: a.rows, palette: None };
    let plan = build_plan(&topo, &options).map_err(input(&a.topology))?;
    let report = validate_schedule(&plan.schedule, &plan.regions, &plan.tree, &topo, &model);

    let path = artifact_path(&a.out, &a.topology, ".schedule");
    let mut manifest = RunManifest::new("schedule", &a.topology, None);
    manifest.write(&path, export_schedule(&plan.schedule, &topo).as_bytes())?;
    let manifest = manifest.finish(started)?;

    let out = ScheduleOutput {
        schedule: path,
        manifest,
        nodes: topo.len(),
        regions: plan.regions.len(),
        colors: plan.colors,
        windows: plan.schedule.windows(),
        m: plan.schedule.m(),
        superframe_slots: plan.schedule.superframe_slots(),
        bounds: plan.delay_bounds(),
        violations: report,
    };
    if json {
        print_json(&out);
    } else {
        println!("{} nodes, {} regions, {} colors", out.nodes, out.regions, out.colors);
        println!("m = {}, windows = {}, superframe = {} slots", out.m, out.windows, out.superframe_slots);
        println!(
            "delay bounds (slots): sync {}, async {}, share {}",
            out.bounds.sync_bound, out.bounds.async_bound, out.bounds.share_bound
        );
        println!("violations: {}", out.violations.violations.len());
        for v in &out.violations.violations {
            println!("  {v:?}");
        }
        println!("wrote {}", out.schedule.display());
    }
    if out.violations.is_clean() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{} schedule violations", out.violations.violations.len())))
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    report: PathBuf,
    manifest: PathBuf,
    seed: u64,
    generated: u64,
    delivered: u64,
    lost: u64,
    in_flight: u64,
    throughput: f64,
    prr: f64,
    link_prr: f64,
    mean_active_fraction: f64,
    conserves_packets: bool,
    max_delay: Option<u64>,
    delay_bound: Option<u64>,
    within_bound: Option<bool>,
}

pub fn simulate(a: &SimulateArgs, json: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = SimConfig::from_json(&read(&a.config)?).map_err(input(&a.config))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let base = a.config.parent();
    let report = run_config(&cfg, base).map_err(input(&a.config))?;

    // Only the synchronized bound holds unconditionally.
    let checked = cfg.traffic.mode == TrafficMode::Aggregate && cfg.clock == ClockSpec::Synchronized && cfg.drift.is_empty();
    let (delay_bound, within_bound) = if checked {
        let bounds = cfg.scenario(base).map_err(input(&a.config))?.bounds();
        (Some(bounds.sync_bound), Some(compare_to_bound(&report, &bounds, ClockMode::Synchronized)))
    } else {
        (None, None)
    };

    let path = artifact_path(&a.out, &a.config, ".report.json");
    let mut manifest = RunManifest::new("simulate", &a.config, Some(cfg.seed));
    manifest.write(&path, report.to_json().as_bytes())?;
    let manifest = manifest.finish(started)?;

    let out = SimulateOutput {
        report: path,
        manifest,
        seed: report.seed,
        generated: report.generated,
        delivered: report.delivered,
        lost: report.lost,
        in_flight: report.in_flight,
        throughput: report.throughput,
        prr: report.prr,
        link_prr: report.link_prr,
        mean_active_fraction: report.mean_active_fraction,
        conserves_packets: report.conserves_packets(),
        max_delay: report.aggregation.as_ref().and_then(|g| g.max_delay),
        delay_bound,
        within_bound,
    };
    if json {
        print_json(&out);
    } else {
        println!("seed {}: {} generated, {} delivered, {} lost, {} in flight", out.seed, out.generated, out.delivered, out.lost, out.in_flight);
        println!("throughput {:.3}/s, prr {:.4}, link prr {:.4}, active {:.4}", out.throughput, out.prr, out.link_prr, out.mean_active_fraction);
        if let (Some(d), Some(b)) = (out.max_delay, out.delay_bound) {
            println!("worst aggregation delay {d} slots, bound {b}");
        }
        println!("wrote {}", out.report.display());
    }
    if !out.conserves_packets {
        return Err(CliError::Validation("packet accounting does not balance".into()));
    }
    if out.within_bound == Some(false) {
        return Err(CliError::Validation("aggregation delay exceeds the synchronized bound".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepOutput {
    csv: PathBuf,
    manifest: PathBuf,
    rows: usize,
    jobs: usize,
}

pub fn sweep(a: &SweepArgs, json: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = SweepSpec::from_json(&read(&a.spec)?).map_err(input(&a.spec))?;
    let scenario = spec.scenario(a.spec.parent()).map_err(input(&a.spec))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let points = spec.points();
    let rows: Vec<SweepRow> = pool
        .install(|| points.par_iter().map(|p| spec.run_point(&scenario, p)).collect::<Result<_, _>>())
        .map_err(input(&a.spec))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    let path = artifact_path(&a.out, &a.spec, ".csv");
    let seed = (spec.seeds.len() == 1).then(|| spec.seeds[0]);
    let mut manifest = RunManifest::new("sweep", &a.spec, seed);
    manifest.write(&path, &bytes)?;
    let manifest = manifest.finish(started)?;

    let out = SweepOutput { csv: path, manifest, rows: rows.len(), jobs: pool.current_num_threads() };
    if json {
        print_json(&out);
    } else {
        println!("{:>4} {:>6} {:>6} {:>10} {:>8}", "mac", "slot", "period", "throughput", "prr");
        for r in &rows {
            let mac = if r.mac == adc::sim::MacKind::Adc { "adc" } else { "lpl" };
            println!("{mac:>4} {:>6} {:>6} {:>10.3} {:>8.4}", r.slot_duration, r.generation_period, r.throughput, r.prr);
        }
        println!("wrote {} rows to {}", out.rows, out.csv.display());
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs, json: bool) -> Result<(), CliError> {
    if !(a.demand_step > 0.0 && a.demand_step <= 1.0) {
        return Err(CliError::Input(format!("demand step {} must lie in (0, 1]", a.demand_step)));
    }
    let options = SuiteOptions { periods: a.periods.clone(), demand_step: a.demand_step };
    let checks = run_suite(&options).map_err(|e| CliError::Input(e.to_string()))?;
    if json {
        print_json(&checks);
    } else {
        for c in &checks {
            let verdict = if c.passed { "ok  " } else { "FAIL" };
            println!("{verdict} m={:<4} {:<32} {:>9} cases  {}", c.m, c.name, c.cases, c.detail);
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Validation(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
