use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Assignment, RegionSchedule, Schedule, SchedulingError, SlotWindow};
use crate::quorum::{GridQuorumSystem, Period, Quorum};
use crate::topology::Topology;

/// Line-oriented rendering of a schedule:
///
/// ```text
/// # period 81
/// # superframe 4
/// # phi 2
/// # region 0 center 12 window 0 first 8 rotations 2
/// node 12 region 0 window 0 anchor 3 slots 2,11,18,19,20,...
/// ```
pub fn export_schedule(schedule: &Schedule, topology: &Topology) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# period {}", schedule.m());
    let _ = writeln!(out, "# superframe {}", schedule.windows());
    let _ = writeln!(out, "# phi {}", schedule.phi());
    for r in schedule.regions() {
        let w = r.window;
        let _ = writeln!(
            out,
            "# region {} center {} window {} first {} rotations {}",
            r.region_id,
            topology.label(r.center),
            w.window,
            w.first_period,
            w.rotations
        );
    }
    for r in schedule.regions() {
        for a in &r.members {
            let slots: Vec<String> = a.quorum.slots().iter().map(usize::to_string).collect();
            let _ = writeln!(
                out,
                "node {} region {} window {} anchor {} slots {}",
                topology.label(a.node),
                r.region_id,
                r.window.window,
                a.quorum.anchor().unwrap_or(0),
                slots.join(",")
            );
        }
    }
    out
}

/// Reads the format written by [`export_schedule`]. Node labels are resolved
/// against `topology`.
pub fn parse_schedule(text: &str, topology: &Topology) -> Result<Schedule, SchedulingError> {
    let mut m = None;
    let mut windows = None;
    let mut phi = 1;
    let mut regions: BTreeMap<usize, RegionSchedule> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| SchedulingError::Parse { line, message };
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("`{s}` is not a number")));
        let node = |s: &str| {
            let label = s.parse::<u64>().map_err(|_| err(format!("`{s}` is not a node id")))?;
            topology.index_of(label).ok_or_else(|| err(format!("unknown node {label}")))
        };
        match toks.as_slice() {
            [] => {}
            ["#", "period", v] => m = Some(num(v)?),
            ["#", "superframe", v] => windows = Some(num(v)?),
            ["#", "phi", v] => phi = num(v)?,
            ["#", "region", id, "center", c, "window", w, "first", f, "rotations", r] => {
                let id = num(id)?;
                let window = SlotWindow { region_id: id, window: num(w)?, first_period: num(f)?, rotations: num(r)? };
                regions.insert(id, RegionSchedule { region_id: id, center: node(c)?, window, members: Vec::new() });
            }
            [first, ..] if first.starts_with('#') => {}
            ["node", n, "region", rid, "window", w, "anchor", a, "slots", csv] => {
                let m = m.ok_or_else(|| err("node line before `# period`".into()))?;
                let (u, rid, w, anchor) = (node(n)?, num(rid)?, num(w)?, num(a)?);
                let region = regions.get_mut(&rid).ok_or_else(|| err(format!("region {rid} has no header")))?;
                if region.window.window != w {
                    return Err(err(format!("window {w} disagrees with region {rid}'s window {}", region.window.window)));
                }
                let slots = csv.split(',').filter(|s| !s.is_empty()).map(num).collect::<Result<Vec<_>, _>>()?;
                let quorum = rebuild(m, anchor, slots).map_err(|e| err(e.to_string()))?;
                region.members.push(Assignment { node: u, quorum });
            }
            _ => return Err(err(format!("unrecognised line `{}`", raw.trim()))),
        }
    }
    let m = m.ok_or(SchedulingError::Parse { line: 0, message: "missing `# period`".into() })?;
    let windows = windows.ok_or(SchedulingError::Parse { line: 0, message: "missing `# superframe`".into() })?;
    let period = Period::new(m)?;
    Ok(Schedule::new(period, windows, phi, topology.len(), regions.into_values().collect()))
}

// Recovers the grid placement when the slots match a band at `anchor`.
fn rebuild(m: usize, anchor: usize, slots: Vec<usize>) -> Result<Quorum, crate::quorum::QuorumError> {
    let plain = Quorum::from_slots(m, slots)?;
    if anchor > 0 {
        let grid = GridQuorumSystem::build(m)?;
        for rows in 1..=grid.anchor_rows() {
            if let Ok(q) = grid.quorum_with_rows(anchor, rows) {
                if q.slots() == plain.slots() {
                    return Ok(q);
                }
            }
        }
    }
    Ok(plain)
}
