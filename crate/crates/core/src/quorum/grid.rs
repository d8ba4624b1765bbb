use serde::{Deserialize, Serialize};

use super::{Demand, Period, Quorum, QuorumError};

/// Where a grid quorum sits: its 1-based anchor row/column and how many
/// consecutive rows (and columns) it spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPlacement {
    pub anchor: usize,
    pub rows: usize,
}

/// The slots of a period laid out row-major on a `side × side` grid with
/// `side = ⌈√m⌉`. When `m` is not a perfect square the trailing cells stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridQuorumSystem {
    period: Period,
    side: usize,
    // ⌊√m⌋; anchors must satisfy `anchor + rows - 1 <= full_rows`.
    full_rows: usize,
}

impl GridQuorumSystem {
    pub fn new(period: Period) -> Self {
        let side = ceil_sqrt(period.slots());
        let full_rows = if side * side == period.slots() { side } else { side - 1 };
        GridQuorumSystem { period, side, full_rows }
    }

    /// Grid over a period of `m` unit-length slots.
    pub fn build(m: usize) -> Result<Self, QuorumError> {
        Ok(Self::new(Period::new(m)?))
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn m(&self) -> usize {
        self.period.slots()
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn is_perfect_square(&self) -> bool {
        self.side * self.side == self.m()
    }

    /// Slot held by the 0-based cell `(row, col)`, or `None` for an empty cell.
    pub fn cell(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.side || col >= self.side {
            return None;
        }
        let slot = row * self.side + col;
        (slot < self.m()).then_some(slot)
    }

    /// 0-based `(row, col)` of a slot.
    pub fn position(&self, slot: usize) -> Option<(usize, usize)> {
        (slot < self.m()).then(|| (slot / self.side, slot % self.side))
    }

    /// Largest usable anchor band, `⌊√m⌋`. Equal to [`side`](Self::side) for
    /// perfect squares; otherwise the partially filled last row is never an anchor.
    pub fn anchor_rows(&self) -> usize {
        self.full_rows
    }

    /// Rows (and columns) a demand needs: `⌈d·√m / 2R⌉`, at least one and at
    /// most `⌊√m⌋`.
    pub fn rows_for(&self, demand: &Demand) -> usize {
        let raw = demand.fraction() * (self.m() as f64).sqrt() / 2.0;
        super::demand::ceil_tol(raw).clamp(1, self.full_rows.max(1))
    }

    /// Number of distinct anchors a quorum of `rows` rows can take,
    /// `⌊√m⌋ + 1 - rows`.
    pub fn anchor_count(&self, rows: usize) -> usize {
        (self.full_rows + 1).saturating_sub(rows)
    }

    /// Union of rows and columns `anchor..anchor+rows` (1-based), skipping
    /// empty cells.
    pub fn quorum_with_rows(&self, anchor: usize, rows: usize) -> Result<Quorum, QuorumError> {
        if anchor == 0 || rows == 0 || anchor + rows - 1 > self.full_rows {
            return Err(QuorumError::AnchorOutOfRange { anchor, rows, side: self.full_rows });
        }
        let band = (anchor - 1)..(anchor - 1 + rows);
        let slots = (0..self.m())
            .filter(|&s| {
                let (r, c) = (s / self.side, s % self.side);
                band.contains(&r) || band.contains(&c)
            })
            .collect();
        Ok(Quorum::with_placement(self.m(), slots, GridPlacement { anchor, rows }))
    }

    /// Quorum for `demand` anchored at the 1-based index `anchor`.
    pub fn design_quorum(&self, anchor: usize, demand: &Demand) -> Result<Quorum, QuorumError> {
        self.quorum_with_rows(anchor, self.rows_for(demand))
    }

    /// Every anchor's quorum for a fixed row count.
    pub fn quorums_with_rows(&self, rows: usize) -> Vec<Quorum> {
        (1..=self.anchor_count(rows))
            .map(|a| self.quorum_with_rows(a, rows).expect("anchor in range"))
            .collect()
    }
}

pub(crate) fn ceil_sqrt(m: usize) -> usize {
    let mut s = (m as f64).sqrt() as usize;
    while s * s < m {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= m {
        s -= 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quorum::{rendezvous, verify_rotation_closure};
    use std::collections::BTreeSet;

    #[test]
    fn grid_layout() {
        let g = GridQuorumSystem::build(36).unwrap();
        assert_eq!(g.side(), 6);
        assert_eq!(g.cell(0, 0), Some(0));
        assert_eq!(g.cell(5, 5), Some(35));

        let one = GridQuorumSystem::build(1).unwrap();
        assert_eq!((one.side(), one.cell(0, 0)), (1, Some(0)));

        let ten = GridQuorumSystem::build(10).unwrap();
        assert_eq!(ten.side(), 4);
        let empty = (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).filter(|&(r, c)| ten.cell(r, c).is_none());
        assert_eq!(empty.count(), 6);
    }

    #[test]
    fn cell_map_is_a_bijection() {
        for m in 1..=50 {
            let g = GridQuorumSystem::build(m).unwrap();
            let mut seen = BTreeSet::new();
            for r in 0..g.side() {
                for c in 0..g.side() {
                    if let Some(s) = g.cell(r, c) {
                        assert!(seen.insert(s));
                        assert_eq!(g.position(s), Some((r, c)));
                    }
                }
            }
            assert_eq!(seen.len(), m);
        }
    }

    #[test]
    fn design_examples() {
        let g = GridQuorumSystem::build(36).unwrap();
        let q = g.quorum_with_rows(1, 1).unwrap();
        let expected: BTreeSet<usize> = (0..6).chain([0, 6, 12, 18, 24, 30]).collect();
        assert_eq!(q.slots(), expected.into_iter().collect::<Vec<_>>().as_slice());
        assert_eq!(q.len(), 11);

        assert_eq!(g.quorum_with_rows(1, 6).unwrap().len(), 36);

        let small = GridQuorumSystem::build(4).unwrap();
        assert_eq!(small.quorum_with_rows(2, 1).unwrap().slots(), &[1, 2, 3]);
    }

    #[test]
    fn anchor_must_fit() {
        let g = GridQuorumSystem::build(36).unwrap();
        assert!(matches!(g.quorum_with_rows(5, 3), Err(QuorumError::AnchorOutOfRange { .. })));
        assert!(g.quorum_with_rows(4, 3).is_ok());
        assert!(g.quorum_with_rows(0, 1).is_err());
    }

    #[test]
    fn rows_from_demand() {
        let g = GridQuorumSystem::build(36).unwrap();
        assert_eq!(g.rows_for(&Demand::new(1.0 / 3.0, 1.0).unwrap()), 1);
        assert_eq!(g.rows_for(&Demand::new(1.0, 1.0).unwrap()), 3);
        let h = GridQuorumSystem::build(100).unwrap();
        assert_eq!(h.rows_for(&Demand::new(0.05, 1.0).unwrap()), 1);
        assert_eq!(h.rows_for(&Demand::new(0.45, 1.0).unwrap()), 3);
    }

    #[test]
    fn cardinality_identity_for_perfect_squares() {
        for side in 1..=10usize {
            let g = GridQuorumSystem::build(side * side).unwrap();
            for rows in 1..=side {
                for q in g.quorums_with_rows(rows) {
                    assert_eq!(q.len(), 2 * rows * side - rows * rows);
                }
            }
        }
    }

    #[test]
    fn rule_one_quorums_meet_at_two_cells() {
        let g = GridQuorumSystem::build(36).unwrap();
        let a = g.quorum_with_rows(1, 1).unwrap();
        let b = g.quorum_with_rows(2, 1).unwrap();
        assert_eq!(rendezvous(&a, &b, 0).unwrap(), vec![1, 6]);
        assert_eq!(rendezvous(&a, &a, 0).unwrap(), a.slots().to_vec());
    }

    #[test]
    fn non_square_rendezvous_is_never_empty() {
        for m in [2usize, 3, 5, 7, 10, 12, 20, 27, 40, 50] {
            let g = GridQuorumSystem::build(m).unwrap();
            for rows in 1..=g.anchor_rows() {
                for other in 1..=g.anchor_rows() {
                    // Trailing empty cells break rotation symmetry, so only the
                    // unrotated intersection is guaranteed.
                    for a in g.quorums_with_rows(rows) {
                        for b in g.quorums_with_rows(other) {
                            assert!(!a.intersection(&b).unwrap().is_empty(), "m={m} rows={rows}/{other}");
                        }
                    }
                }
            }
            if g.is_perfect_square() {
                assert!(verify_rotation_closure(&g.quorums_with_rows(1)).is_ok());
            }
        }
    }
}
