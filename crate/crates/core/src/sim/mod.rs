//! Slot-level simulation of ADC schedules, and an event-driven low-power
//! listening baseline to compare against.
//!
//! Runs are single-threaded and fully determined by their inputs and seed.
//! Time in the ADC engine is an integer slot index; the baseline keeps its
//! own microsecond clock. Both report the same [`SimReport`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheduling::{build_plan, DelayBound, Plan, ScheduleOptions, SchedulingError};
use crate::topology::{InterferenceModel, Topology, TopologyError};

mod adc;
mod clock;
mod lpl;
mod share;
mod sweep;

pub use clock::{classify_quorum_shift, ClockModel, ShiftKind};
pub use share::{physical_connectivity_check, quorum_share, region_sharing_pairs, Activity, Connectivity, ShareOutcome};
pub use sweep::{run_baseline_comparison, spearman, SweepPoint, SweepRow, SweepSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("inconsistent configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scheduling(#[from] SchedulingError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("malformed config: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficMode {
    /// One sample per node per round; a parent forwards a single packet once
    /// all of its children have reported.
    Aggregate,
    /// Every sample travels to the sink as its own packet.
    RawForward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    /// Seconds between samples at each node.
    pub generation_period: f64,
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
    #[serde(default = "default_mode")]
    pub mode: TrafficMode,
    /// Per-node queue limit in packets (raw forwarding only). Unbounded by default.
    #[serde(default = "default_queue_cap")]
    pub queue_cap: u64,
}

fn default_payload() -> usize {
    40
}
fn default_mode() -> TrafficMode {
    TrafficMode::RawForward
}
fn default_queue_cap() -> u64 {
    u64::MAX
}

impl TrafficModel {
    pub fn raw(generation_period: f64) -> Self {
        TrafficModel { generation_period, payload_bytes: 40, mode: TrafficMode::RawForward, queue_cap: u64::MAX }
    }

    pub fn aggregate(generation_period: f64) -> Self {
        TrafficModel { mode: TrafficMode::Aggregate, ..Self::raw(generation_period) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacKind {
    Adc,
    Lpl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MacVariant {
    Adc {
        /// Seconds at the start of every slot lost to wakeup and beaconing.
        #[serde(default = "default_guard")]
        guard: f64,
        #[serde(default = "default_bitrate")]
        bitrate: f64,
    },
    Lpl {
        /// Channel poll interval in seconds; the slot size when absent.
        #[serde(default)]
        check_interval: Option<f64>,
        /// Preamble length in seconds; the check interval when absent.
        #[serde(default)]
        preamble: Option<f64>,
        #[serde(default = "default_backoff")]
        backoff_window: f64,
        #[serde(default = "default_retries")]
        retry_limit: u32,
        #[serde(default = "default_duty")]
        duty_cycle: f64,
        #[serde(default = "default_bitrate")]
        bitrate: f64,
    },
}

fn default_guard() -> f64 {
    0.03
}
fn default_bitrate() -> f64 {
    250_000.0
}
fn default_backoff() -> f64 {
    0.01
}
fn default_retries() -> u32 {
    3
}
fn default_duty() -> f64 {
    0.2
}

impl MacVariant {
    pub fn adc() -> Self {
        MacVariant::Adc { guard: default_guard(), bitrate: default_bitrate() }
    }

    pub fn lpl() -> Self {
        MacVariant::Lpl {
            check_interval: None,
            preamble: None,
            backoff_window: default_backoff(),
            retry_limit: default_retries(),
            duty_cycle: default_duty(),
            bitrate: default_bitrate(),
        }
    }

    pub fn kind(&self) -> MacKind {
        match self {
            MacVariant::Adc { .. } => MacKind::Adc,
            MacVariant::Lpl { .. } => MacKind::Lpl,
        }
    }
}

/// Everything that stays fixed across runs on one network.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub plan: Plan,
    pub model: InterferenceModel,
}

impl Scenario {
    pub fn new(topology: Topology, options: &ScheduleOptions) -> Result<Self, SimError> {
        let plan = build_plan(&topology, options)?;
        Ok(Scenario { topology, plan, model: options.model.clone() })
    }

    pub fn bounds(&self) -> DelayBound {
        self.plan.delay_bounds()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub clock: ClockModel,
    pub traffic: TrafficModel,
    pub mac: MacVariant,
    /// Seconds per slot.
    pub slot_duration: f64,
    /// Seconds of simulated time.
    pub duration: f64,
    pub quorum_share: bool,
    pub seed: u64,
}

impl RunOptions {
    pub fn new(nodes: usize, traffic: TrafficModel, mac: MacVariant, slot_duration: f64, duration: f64) -> Self {
        RunOptions {
            clock: ClockModel::synchronized(nodes),
            traffic,
            mac,
            slot_duration,
            duration,
            quorum_share: false,
            seed: 0,
        }
    }
}

/// Slots to the sink for one aggregation round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationStats {
    pub rounds: u64,
    pub completed: u64,
    pub incomplete: u64,
    /// Slots between rounds.
    pub round_interval: u64,
    /// Per round: slots from sampling to the sink holding every report.
    pub delays: Vec<Option<u64>>,
    pub max_delay: Option<u64>,
    pub mean_delay: Option<f64>,
}

/// Co-awake slots on a tree link over the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkRendezvous {
    pub child: u64,
    pub parent: u64,
    pub slots: u64,
}

/// Packet flow through one node. `generated + received` always equals
/// `forwarded + dropped + queued + consumed`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NodeFlow {
    pub node: u64,
    pub generated: u64,
    pub received: u64,
    pub forwarded: u64,
    pub dropped: u64,
    pub queued: u64,
    /// Packets that ended here: only the sink consumes.
    pub consumed: u64,
}

impl NodeFlow {
    pub fn balanced(&self) -> bool {
        self.generated + self.received == self.forwarded + self.dropped + self.queued + self.consumed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub mac: MacKind,
    pub seed: u64,
    pub slot_duration: f64,
    pub slots: u64,
    pub duration: f64,
    pub generated: u64,
    pub delivered: u64,
    pub lost: u64,
    pub in_flight: u64,
    /// Packets (or samples, when aggregating) reaching the sink per second.
    pub throughput: f64,
    /// Delivered over generated, end to end.
    pub prr: f64,
    /// Successful link transmissions over attempts.
    pub link_prr: f64,
    pub attempts: u64,
    pub collision_count: u64,
    /// Most successful receptions seen at one node within one slot.
    pub max_receptions_per_slot: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationStats>,
    pub rendezvous_histogram: Vec<LinkRendezvous>,
    /// `|A_u| / |T|` per node, in index order.
    pub active_slot_fraction: Vec<f64>,
    pub mean_active_fraction: f64,
    /// Per superframe, neighbour pairs sharing a region that never met.
    pub disconnected_pairs: Vec<u64>,
    /// Quorum-share stride per node at the end of the run.
    pub strides: Vec<usize>,
    pub nodes: Vec<NodeFlow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<SimConfig>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn conserves_packets(&self) -> bool {
        self.generated == self.delivered + self.lost + self.in_flight && self.nodes.iter().all(NodeFlow::balanced)
    }
}

pub(crate) fn finish_totals(report: &mut SimReport) {
    report.throughput = report.delivered as f64 / report.duration;
    report.prr = if report.generated == 0 { 1.0 } else { report.delivered as f64 / report.generated as f64 };
    let successes = report.attempts - report.collision_count;
    report.link_prr = if report.attempts == 0 { 1.0 } else { successes as f64 / report.attempts as f64 };
    let n = report.active_slot_fraction.len().max(1);
    report.mean_active_fraction = report.active_slot_fraction.iter().sum::<f64>() / n as f64;
}

/// Runs one simulation.
pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<SimReport, SimError> {
    let n = scenario.topology.len();
    if !(options.slot_duration > 0.0 && options.slot_duration.is_finite()) {
        return Err(SimError::Config(format!("slot duration {} must be positive", options.slot_duration)));
    }
    if !(options.traffic.generation_period > 0.0 && options.traffic.generation_period.is_finite()) {
        return Err(SimError::Config(format!(
            "generation period {} must be positive",
            options.traffic.generation_period
        )));
    }
    let superframe = scenario.plan.schedule.superframe_slots() as f64 * options.slot_duration;
    if !(options.duration >= superframe - 1e-9) {
        return Err(SimError::Config(format!(
            "duration {}s is shorter than one superframe ({superframe}s)",
            options.duration
        )));
    }
    if options.clock.len() != n {
        return Err(SimError::Config(format!("clock has {} shifts for {n} nodes", options.clock.len())));
    }
    match &options.mac {
        MacVariant::Adc { guard, bitrate } => {
            if *guard < 0.0 || *bitrate <= 0.0 {
                return Err(SimError::Config("guard must be non-negative and bitrate positive".into()));
            }
            Ok(adc::run(scenario, options))
        }
        MacVariant::Lpl { .. } => {
            if options.traffic.mode == TrafficMode::Aggregate {
                return Err(SimError::Config("the LPL baseline only forwards raw packets".into()));
            }
            let params = lpl::LplParams::resolve(&options.mac, options.slot_duration)?;
            Ok(lpl::run(scenario, options, &params))
        }
    }
}

/// Which delay bound applies to a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Synchronized,
    /// Shifted clocks, every region-sharing neighbour pair still meets.
    AsyncConnected,
    QuorumShare,
}

impl ClockMode {
    pub fn bound(self, bounds: &DelayBound) -> u64 {
        match self {
            ClockMode::Synchronized => bounds.sync_bound,
            ClockMode::AsyncConnected => bounds.async_bound,
            ClockMode::QuorumShare => bounds.share_bound,
        }
    }
}

/// Worst completed aggregation delay in slots, or `None` when no round
/// finished or the run did not aggregate.
pub fn measure_aggregation_delay(report: &SimReport) -> Option<u64> {
    report.aggregation.as_ref().and_then(|a| a.max_delay)
}

/// True when every round that had time to finish within the bound did so,
/// and none took longer than the bound.
pub fn compare_to_bound(report: &SimReport, bounds: &DelayBound, mode: ClockMode) -> bool {
    let Some(agg) = &report.aggregation else { return false };
    let bound = mode.bound(bounds);
    agg.delays.iter().enumerate().all(|(r, d)| match d {
        Some(d) => *d <= bound,
        None => r as u64 * agg.round_interval + bound >= report.slots,
    })
}

/// Where a run's topology comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    /// Edge-list file, relative to the config file.
    File { path: PathBuf },
    Geometric { nodes: usize, area: f64, range: f64, seed: u64 },
    Grid {
        rows: usize,
        cols: usize,
        range: f64,
        #[serde(default)]
        jitter: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl TopologySpec {
    pub fn build(&self, base: Option<&Path>) -> Result<Topology, SimError> {
        match self {
            TopologySpec::File { path } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| SimError::Io { path: full.clone(), message: e.to_string() })?;
                Ok(Topology::parse_edge_list(&text)?)
            }
            TopologySpec::Geometric { nodes, area, range, seed } => Ok(Topology::random_geometric(*nodes, *area, *range, *seed)?),
            TopologySpec::Grid { rows, cols, range, jitter, seed } => {
                Ok(Topology::jittered_grid(*rows, *cols, *range, *jitter, *seed)?)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClockSpec {
    #[default]
    Synchronized,
    /// Uniform shifts in `[-bound, bound]` slots; one superframe by default.
    Uniform {
        #[serde(default)]
        bound: Option<i64>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Fixed { shifts: Vec<i64> },
}

/// One simulation, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: TopologySpec,
    #[serde(default = "InterferenceModel::rts_cts")]
    pub interference: InterferenceModel,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_rows")]
    pub rows: usize,
    pub slot_duration: f64,
    pub mac: MacVariant,
    #[serde(default)]
    pub clock: ClockSpec,
    /// Slots gained per superframe, per node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drift: Vec<i64>,
    #[serde(default)]
    pub quorum_share: bool,
    pub traffic: TrafficModel,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_rows() -> usize {
    1
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Json(e.to_string()))
    }

    pub fn schedule_options(&self) -> ScheduleOptions {
        ScheduleOptions { model: self.interference.clone(), m: self.m, rows: self.rows, palette: None }
    }

    pub fn scenario(&self, base: Option<&Path>) -> Result<Scenario, SimError> {
        Scenario::new(self.topology.build(base)?, &self.schedule_options())
    }

    pub fn run_options(&self, scenario: &Scenario) -> Result<RunOptions, SimError> {
        let n = scenario.topology.len();
        let clock = match &self.clock {
            ClockSpec::Synchronized => ClockModel::synchronized(n),
            ClockSpec::Uniform { bound, seed } => {
                let b = bound.unwrap_or(scenario.plan.schedule.superframe_slots() as i64);
                ClockModel::uniform(n, b, seed.unwrap_or(self.seed))
            }
            ClockSpec::Fixed { shifts } => {
                if shifts.len() != n {
                    return Err(SimError::Config(format!("{} shifts given for {n} nodes", shifts.len())));
                }
                ClockModel::fixed(shifts.clone())
            }
        };
        if !self.drift.is_empty() && self.drift.len() != n {
            return Err(SimError::Config(format!("{} drift values given for {n} nodes", self.drift.len())));
        }
        Ok(RunOptions {
            clock: clock.with_drift(self.drift.clone()),
            traffic: self.traffic.clone(),
            mac: self.mac.clone(),
            slot_duration: self.slot_duration,
            duration: self.duration,
            quorum_share: self.quorum_share,
            seed: self.seed,
        })
    }
}

/// Builds the scenario described by `config`, runs it and echoes the config
/// into the report. Relative topology paths resolve against `base`.
pub fn run_config(config: &SimConfig, base: Option<&Path>) -> Result<SimReport, SimError> {
    if !(config.duration > 0.0) {
        return Err(SimError::Config(format!("duration {} must be positive", config.duration)));
    }
    let scenario = config.scenario(base)?;
    let options = config.run_options(&scenario)?;
    let mut report = run(&scenario, &options)?;
    report.config = Some(config.clone());
    Ok(report)
}
