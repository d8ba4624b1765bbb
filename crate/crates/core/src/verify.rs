//! The rendezvous property suite behind `adc verify`: rotation closure,
//! synchronous and asynchronous overlap bounds, and the cardinality floor,
//! checked exhaustively over a set of periods.

use serde::Serialize;

use crate::quorum::{
    async_rendezvous_bound, demand_lower_bound, demand_sum_feasible, min_rendezvous_over_rotations,
    sync_rendezvous_bound, verify_rotation_closure, Demand, GridQuorumSystem, Quorum, QuorumError,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub m: usize,
    pub passed: bool,
    pub cases: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub periods: Vec<usize>,
    /// Demand fractions are multiples of this step up to 1.
    pub demand_step: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { periods: vec![4, 9, 16, 25, 36, 100], demand_step: 0.05 }
    }
}

/// Every quorum the grid can produce with 1..=anchor_rows rows.
pub fn all_grid_quorums(g: &GridQuorumSystem) -> Vec<Quorum> {
    (1..=g.anchor_rows()).flat_map(|rows| g.quorums_with_rows(rows)).collect()
}

pub fn closure_check(m: usize) -> Result<Check, QuorumError> {
    let g = GridQuorumSystem::build(m)?;
    let qs = all_grid_quorums(&g);
    let cases = (qs.len() * qs.len() * m) as u64;
    let (passed, detail) = match verify_rotation_closure(&qs) {
        Ok(()) => (true, format!("{} quorums", qs.len())),
        Err(v) => (false, format!("{v:?}")),
    };
    Ok(Check { name: "rotation closure".into(), m, passed, cases, detail })
}

fn demand_grid(step: f64) -> Result<Vec<Demand>, QuorumError> {
    (1..=(1.0 / step).round() as usize).map(|i| Demand::fraction_of((i as f64 * step).min(1.0))).collect()
}

/// Worst-case overlap of every feasible demand pair and anchor pair against
/// `bound`, at shift 0 (`shifted == false`) or over all shifts.
pub fn rendezvous_check(m: usize, step: f64, shifted: bool) -> Result<Check, QuorumError> {
    let g = GridQuorumSystem::build(m)?;
    let demands = demand_grid(step)?;
    let mut cases = 0u64;
    let mut failure = None;
    'outer: for du in &demands {
        for dv in &demands {
            if !demand_sum_feasible(&[*du, *dv], 1.0) {
                continue;
            }
            let (ru, rv) = (g.rows_for(du), g.rows_for(dv));
            let need =
                if shifted { async_rendezvous_bound(du, dv, m) } else { sync_rendezvous_bound(du, dv, m) };
            for au in 1..=g.anchor_count(ru) {
                let qu = g.quorum_with_rows(au, ru)?;
                for av in 1..=g.anchor_count(rv) {
                    let qv = g.quorum_with_rows(av, rv)?;
                    let got = if shifted { min_rendezvous_over_rotations(&qu, &qv)? } else { qu.intersection(&qv)?.len() };
                    cases += 1;
                    if got < need {
                        failure = Some(format!(
                            "d=({:.2},{:.2}) anchors ({au},{av}): {got} < {need}",
                            du.fraction(),
                            dv.fraction()
                        ));
                        break 'outer;
                    }
                }
            }
        }
    }
    let name = if shifted { "asynchronous rendezvous bound" } else { "synchronous rendezvous bound" };
    Ok(Check {
        name: name.into(),
        m,
        passed: failure.is_none(),
        cases,
        detail: failure.unwrap_or_else(|| "all pairs meet the bound".into()),
    })
}

/// Demands at or above the floor give at least ⌈√m⌉ slots, and a quorum one
/// slot short of that fails closure.
pub fn cardinality_check(m: usize, step: f64) -> Result<Check, QuorumError> {
    let g = GridQuorumSystem::build(m)?;
    let floor = demand_lower_bound(m)?;
    let need = g.side();
    let mut fractions = vec![floor];
    fractions.extend(demand_grid(step)?.iter().map(Demand::fraction).filter(|&f| f >= floor));
    let mut cases = 0u64;
    for f in fractions {
        let d = Demand::fraction_of(f)?;
        let rows = g.rows_for(&d);
        for a in 1..=g.anchor_count(rows) {
            let q = g.design_quorum(a, &d)?;
            cases += 1;
            if q.len() < need {
                return Ok(Check {
                    name: "cardinality".into(),
                    m,
                    passed: false,
                    cases,
                    detail: format!("d={f:.3} anchor {a}: |Q|={} < {need}", q.len()),
                });
            }
        }
    }
    let thin_fails = need < 2 || verify_rotation_closure(&[Quorum::from_slots(m, 0..need - 1)?]).is_err();
    Ok(Check {
        name: "cardinality".into(),
        m,
        passed: thin_fails,
        cases,
        detail: if thin_fails {
            format!("floor {floor:.4}, every quorum has at least {need} slots")
        } else {
            format!("a {}-slot run passed closure", need - 1)
        },
    })
}

pub fn run_suite(options: &SuiteOptions) -> Result<Vec<Check>, QuorumError> {
    let mut out = Vec::new();
    for &m in &options.periods {
        out.push(closure_check(m)?);
        out.push(rendezvous_check(m, options.demand_step, false)?);
        out.push(rendezvous_check(m, options.demand_step, true)?);
        out.push(cardinality_check(m, options.demand_step)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let checks = run_suite(&SuiteOptions::default()).unwrap();
        assert_eq!(checks.len(), 24);
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn closure_cases_count_shifts() {
        let c = closure_check(4).unwrap();
        let g = GridQuorumSystem::build(4).unwrap();
        let n = all_grid_quorums(&g).len() as u64;
        assert_eq!(c.cases, n * n * 4);
    }
}
