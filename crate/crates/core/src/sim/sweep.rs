use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run, MacKind, MacVariant, RunOptions, Scenario, SimError, TopologySpec, TrafficModel};
use crate::scheduling::ScheduleOptions;
use crate::topology::InterferenceModel;

/// A grid of paired ADC/LPL runs over slot sizes and generation periods, all
/// on one topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub topology: TopologySpec,
    pub interference: InterferenceModel,
    pub m: usize,
    /// Seconds.
    pub slot_sizes: Vec<f64>,
    /// Seconds.
    pub generation_periods: Vec<f64>,
    pub macs: Vec<MacKind>,
    pub seeds: Vec<u64>,
    /// Run length in superframes of the ADC schedule.
    pub superframes: u64,
    pub payload_bytes: usize,
    pub queue_cap: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            topology: TopologySpec::Grid { rows: 10, cols: 10, range: 1.5, jitter: 0.05, seed: 1 },
            interference: InterferenceModel::rts_cts(),
            m: 100,
            slot_sizes: vec![0.05, 1.0, 2.0, 5.0],
            generation_periods: vec![0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 1.5, 2.0],
            macs: vec![MacKind::Adc, MacKind::Lpl],
            seeds: vec![1],
            superframes: 10,
            payload_bytes: 40,
            queue_cap: u64::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mac: MacKind,
    pub slot_duration: f64,
    pub generation_period: f64,
    pub seed: u64,
}

/// One run of a sweep, flattened for CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mac: MacKind,
    pub slot_duration: f64,
    pub generation_period: f64,
    pub seed: u64,
    pub duration: f64,
    pub generated: u64,
    pub delivered: u64,
    pub lost: u64,
    pub in_flight: u64,
    pub throughput: f64,
    pub prr: f64,
    pub link_prr: f64,
    pub collisions: u64,
    pub mean_active_fraction: f64,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Json(e.to_string()))
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &slot_duration in &self.slot_sizes {
            for &generation_period in &self.generation_periods {
                for &mac in &self.macs {
                    for &seed in &self.seeds {
                        out.push(SweepPoint { mac, slot_duration, generation_period, seed });
                    }
                }
            }
        }
        out
    }

    pub fn scenario(&self, base: Option<&Path>) -> Result<Scenario, SimError> {
        let options = ScheduleOptions { model: self.interference.clone(), m: Some(self.m), rows: 1, palette: None };
        Scenario::new(self.topology.build(base)?, &options)
    }

    pub fn run_point(&self, scenario: &Scenario, point: &SweepPoint) -> Result<SweepRow, SimError> {
        let mac = match point.mac {
            MacKind::Adc => MacVariant::adc(),
            MacKind::Lpl => MacVariant::lpl(),
        };
        let traffic = TrafficModel {
            payload_bytes: self.payload_bytes,
            queue_cap: self.queue_cap,
            ..TrafficModel::raw(point.generation_period)
        };
        let duration = (self.superframes * scenario.plan.schedule.superframe_slots() as u64) as f64 * point.slot_duration;
        let mut options = RunOptions::new(scenario.topology.len(), traffic, mac, point.slot_duration, duration);
        options.seed = point.seed;
        let r = run(scenario, &options)?;
        Ok(SweepRow {
            mac: point.mac,
            slot_duration: point.slot_duration,
            generation_period: point.generation_period,
            seed: point.seed,
            duration: r.duration,
            generated: r.generated,
            delivered: r.delivered,
            lost: r.lost,
            in_flight: r.in_flight,
            throughput: r.throughput,
            prr: r.prr,
            link_prr: r.link_prr,
            collisions: r.collision_count,
            mean_active_fraction: r.mean_active_fraction,
        })
    }
}

/// Runs every point of `spec` in order on one thread.
pub fn run_baseline_comparison(spec: &SweepSpec, base: Option<&Path>) -> Result<Vec<SweepRow>, SimError> {
    let scenario = spec.scenario(base)?;
    spec.points().iter().map(|p| spec.run_point(&scenario, p)).collect()
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
