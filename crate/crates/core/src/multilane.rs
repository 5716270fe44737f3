//! Multi-lane road: vehicle transfer between adjacent lanes by copy and
//! erase, and the left-to-right update sequence.

use crate::error::{Error, Result};
use crate::lane::{step_lane, StepContext};
use crate::vehicle::{gap, Barrier, Direction, LaneConfiguration, VehicleState};

/// Lanes ordered from the left-most (index 0) to the right-most.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadConfiguration {
    lanes: Vec<LaneConfiguration>,
}

impl RoadConfiguration {
    /// `count` empty lanes with edge flags set by position.
    pub fn empty(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidConfig(format!("a road needs at least 2 lanes, got {count}")));
        }
        Ok(Self { lanes: (0..count).map(|i| LaneConfiguration::new(i > 0, i + 1 < count)).collect() })
    }

    /// Builds a road from per-lane cell lists; flags follow the lane index.
    pub fn from_lanes(cells: Vec<Vec<VehicleState>>) -> Result<Self> {
        let m = cells.len();
        if m < 2 {
            return Err(Error::InvalidConfig(format!("a road needs at least 2 lanes, got {m}")));
        }
        let lanes = cells
            .into_iter()
            .enumerate()
            .map(|(i, c)| LaneConfiguration::from_cells(c, i > 0, i + 1 < m))
            .collect::<Result<_>>()?;
        Ok(Self { lanes })
    }

    pub fn lanes(&self) -> &[LaneConfiguration] {
        &self.lanes
    }

    pub fn lane(&self, i: usize) -> &LaneConfiguration {
        &self.lanes[i]
    }

    pub fn lane_mut(&mut self, i: usize) -> &mut LaneConfiguration {
        &mut self.lanes[i]
    }

    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &VehicleState> {
        self.lanes.iter().flat_map(|l| l.iter())
    }

    /// Number of mobile vehicles on the road.
    pub fn traffic_count(&self) -> usize {
        self.lanes.iter().map(LaneConfiguration::traffic_count).sum()
    }

    pub fn check_physical(&self) -> Result<()> {
        self.lanes.iter().try_for_each(LaneConfiguration::check_physical)
    }

    /// Bitwise equality of every lane and cell.
    pub fn same_bits(&self, other: &Self) -> bool {
        self.lanes.len() == other.lanes.len()
            && self.lanes.iter().zip(&other.lanes).all(|(a, b)| {
                a.left_exists() == b.left_exists()
                    && a.right_exists() == b.right_exists()
                    && a.len() == b.len()
                    && a.iter().zip(b.iter()).all(|(x, y)| x.same_bits(y))
            })
    }
}

/// Copy placed in the target lane: stress divided by 5 and the transfer
/// origin recorded in `d_prime`.
pub fn sigma_cp(sigma: &VehicleState) -> Result<VehicleState> {
    if sigma.d_prime != Direction::Stay {
        return Err(Error::InvalidTransfer(format!("vehicle {} was already transferred", sigma.vid)));
    }
    if sigma.d == Direction::Stay {
        return Err(Error::InvalidTransfer(format!("vehicle {} has no lane-change desire", sigma.vid)));
    }
    Ok(VehicleState { s: sigma.s / 5.0, d_prime: sigma.d.opposite(), ..sigma.clone() })
}

/// Back-gap threshold for entering behind a vehicle moving at `v_back`.
pub fn back_gap_threshold(v_back: f64, v: f64) -> f64 {
    (v_back.powf(1.2) - v + (v_back - v).abs() + 3.0).max(0.0)
}

/// Front-gap threshold for entering behind a vehicle moving at `v_front`.
pub fn front_gap_threshold(v: f64, v_front: f64) -> f64 {
    (v.powf(1.25) - v_front + 3.0).max(0.0)
}

/// Whether `sigma` may be transferred into `target` in `direction`.
pub fn trans_check(sigma: &VehicleState, target: &LaneConfiguration, direction: Direction) -> bool {
    if direction == Direction::Stay
        || sigma.d != direction
        || sigma.d_prime != Direction::Stay
        || sigma.is_obstacle()
    {
        return false;
    }
    let Ok(j) = target.index_of(sigma) else { return false };
    if !target.can_insert(j, sigma) {
        return false;
    }
    if let Some(back) = j.checked_sub(1).map(|b| &target.cells()[b]) {
        if !(gap(back, sigma) > back_gap_threshold(back.v, sigma.v)) {
            return false;
        }
    }
    if let Some(front) = target.get(j) {
        if !(gap(sigma, front) > front_gap_threshold(sigma.v, front.v)) {
            return false;
        }
    }
    true
}

fn copy_in_place(sigma: &VehicleState, target: &mut LaneConfiguration, direction: Direction) {
    if !trans_check(sigma, target, direction) {
        return;
    }
    let j = target.index_of(sigma).expect("checked by trans_check");
    let copy = sigma_cp(sigma).expect("checked by trans_check");
    target.insert(j, copy).expect("checked by trans_check");
}

/// `sigma` copied into `target` when the transfer is allowed, else `target`.
pub fn copy_into(sigma: &VehicleState, target: &LaneConfiguration, direction: Direction) -> LaneConfiguration {
    let mut out = target.clone();
    copy_in_place(sigma, &mut out, direction);
    out
}

fn matches_copy(source: &VehicleState, copy: &VehicleState) -> bool {
    copy.d != Direction::Stay
        && copy.d_prime == copy.d.opposite()
        && source.d == copy.d
        && source.d_prime == Direction::Stay
        && source.vid == copy.vid
        && source.kind.id == copy.kind.id
        && source.x == copy.x
        && source.v == copy.v
        && source.s / 5.0 == copy.s
}

fn erase_in_place(source: &mut LaneConfiguration, omega: &VehicleState) {
    let cells = source.cells();
    let i = cells.partition_point(|c| c.x < omega.x);
    if cells.get(i).is_some_and(|c| matches_copy(c, omega)) {
        source.cells_mut().remove(i);
    }
}

/// Removes from `source` the original of the transferred copy `omega`.
pub fn erase_from(source: &LaneConfiguration, omega: &VehicleState) -> LaneConfiguration {
    let mut out = source.clone();
    erase_in_place(&mut out, omega);
    out
}

/// Copies every eligible vehicle of `source` into `target`, in ascending
/// order.
pub fn copy_config(source: &LaneConfiguration, target: &LaneConfiguration, direction: Direction) -> LaneConfiguration {
    let mut out = target.clone();
    for sigma in source.iter() {
        copy_in_place(sigma, &mut out, direction);
    }
    out
}

/// Erases from `source` every vehicle whose copy is present in `target`.
pub fn erase_config(source: &LaneConfiguration, target: &LaneConfiguration) -> LaneConfiguration {
    let mut out = source.clone();
    for omega in target.iter() {
        erase_in_place(&mut out, omega);
    }
    out
}

/// Moves eligible vehicles of lane `from` into lane `to`.
fn transfer(lanes: &mut [LaneConfiguration], from: usize, to: usize, direction: Direction) {
    let (source, target) = if from < to {
        let (a, b) = lanes.split_at_mut(to);
        (&mut a[from], &mut b[0])
    } else {
        let (a, b) = lanes.split_at_mut(from);
        (&mut b[0], &mut a[to])
    };
    let before = target.len();
    for sigma in source.iter() {
        copy_in_place(sigma, target, direction);
    }
    if target.len() == before {
        return;
    }
    for omega in target.iter() {
        erase_in_place(source, omega);
    }
}

/// Barrier overlay, one optional entry per lane.
pub type Barriers = [Option<Barrier>];

/// One second of the multi-lane model: transfers scanned from the left-most
/// lane to the right-most one, each lane advanced by the single-lane map
/// once no further transfer can touch it.
///
/// # Panics
///
/// If a vehicle ends up in two lanes.
pub fn update_multilane(road: &RoadConfiguration, barriers: &Barriers, ctx: &StepContext<'_>) -> Result<RoadConfiguration> {
    let m = road.lane_count();
    let mut lanes = road.lanes.clone();
    let barrier = |i: usize| barriers.get(i).and_then(Option::as_ref);
    for i in 0..m {
        if i == 0 {
            transfer(&mut lanes, 0, 1, Direction::Right);
        }
        if 0 < i && i < m - 1 {
            transfer(&mut lanes, i, i - 1, Direction::Left);
            transfer(&mut lanes, i, i + 1, Direction::Right);
            lanes[i - 1] = step_lane(&lanes[i - 1], barrier(i - 1), ctx)?;
        }
        if i == m - 1 {
            transfer(&mut lanes, m - 1, m - 2, Direction::Left);
            lanes[m - 2] = step_lane(&lanes[m - 2], barrier(m - 2), ctx)?;
            lanes[m - 1] = step_lane(&lanes[m - 1], barrier(m - 1), ctx)?;
        }
    }
    let out = RoadConfiguration { lanes };
    assert_unique_vids(&out);
    Ok(out)
}

fn assert_unique_vids(road: &RoadConfiguration) {
    let mut vids: Vec<u64> = road.vehicles().map(|c| c.vid).collect();
    let n = vids.len();
    vids.sort_unstable();
    vids.dedup();
    assert_eq!(vids.len(), n, "a vehicle appears in two lanes after the update");
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Copy,
    Erase,
}

/// Cell of the lane-level automaton: a lane configuration, the phase, the
/// lane count, the lane's own index and the step counter.
#[derive(Clone, Debug)]
struct MetaCell {
    config: LaneConfiguration,
    phase: Phase,
    lanes: usize,
    position: usize,
    counter: usize,
}

fn meta_local_rule(
    left: Option<&MetaCell>,
    cell: &MetaCell,
    right: Option<&MetaCell>,
    barriers: &Barriers,
    ctx: &StepContext<'_>,
) -> Result<MetaCell> {
    let mut out = cell.clone();
    let (k, p, m) = (cell.counter, cell.position, cell.lanes);
    let left_config = || &left.expect("lane on the left").config;
    let right_config = || &right.expect("lane on the right").config;

    if k == 0 {
        match cell.phase {
            Phase::Copy => {
                if p == k + 1 {
                    out.config = copy_config(left_config(), &out.config, Direction::Right);
                }
                out.phase = Phase::Erase;
            }
            Phase::Erase => {
                if p == k {
                    out.config = erase_config(&out.config, right_config());
                }
                out.counter = (k + 1) % m;
                out.phase = Phase::Copy;
                return Ok(out);
            }
        }
    }
    if 0 < k && k < m - 1 {
        match cell.phase {
            Phase::Copy => {
                if p + 1 == k {
                    out.config = copy_config(right_config(), &out.config, Direction::Left);
                }
                if p == k + 1 {
                    out.config = copy_config(left_config(), &out.config, Direction::Right);
                }
                out.phase = Phase::Erase;
            }
            Phase::Erase => {
                if p == k {
                    out.config = erase_config(&out.config, left_config());
                    out.config = erase_config(&out.config, right_config());
                }
                out.counter = (k + 1) % m;
                out.phase = Phase::Copy;
                return Ok(out);
            }
        }
    }
    if k == m - 1 {
        match cell.phase {
            Phase::Copy => {
                if p + 1 == k {
                    out.config = copy_config(right_config(), &out.config, Direction::Left);
                }
                out.phase = Phase::Erase;
            }
            Phase::Erase => {
                if p == k {
                    out.config = erase_config(&out.config, left_config());
                }
                // edge flags of the configuration select the lane map
                out.config = step_lane(&out.config, barriers.get(p).and_then(Option::as_ref), ctx)?;
                out.counter = (k + 1) % m;
                out.phase = Phase::Copy;
            }
        }
    }
    Ok(out)
}

/// The same update computed by a synchronous automaton over lanes, whose
/// local rule is applied `2M` times. Kept as an independent check of
/// [`update_multilane`].
pub fn meta_cca_step(road: &RoadConfiguration, barriers: &Barriers, ctx: &StepContext<'_>) -> Result<RoadConfiguration> {
    let m = road.lane_count();
    let mut cells: Vec<MetaCell> = road
        .lanes
        .iter()
        .enumerate()
        .map(|(i, c)| MetaCell { config: c.clone(), phase: Phase::Copy, lanes: m, position: i, counter: 0 })
        .collect();
    for _ in 0..2 * m {
        cells = (0..m)
            .map(|i| {
                let left = i.checked_sub(1).map(|l| &cells[l]);
                meta_local_rule(left, &cells[i], cells.get(i + 1), barriers, ctx)
            })
            .collect::<Result<_>>()?;
    }
    debug_assert!(cells.iter().all(|c| c.phase == Phase::Copy && c.counter == 0));
    Ok(RoadConfiguration { lanes: cells.into_iter().map(|c| c.config).collect() })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fuzzy::RuleBase;
    use crate::lane::DynamicsOptions;
    use crate::rng::KeyedRng;
    use crate::vehicle::Kind;

    fn kind() -> Arc<Kind> {
        Arc::new(Kind::passenger())
    }

    fn car(k: &Arc<Kind>, vid: u64, x: f64, v: f64, s: f64, d: Direction) -> VehicleState {
        VehicleState { s, d, ..VehicleState::new(k.clone(), vid, x, v) }
    }

    #[test]
    fn sigma_cp_arms() {
        let k = kind();
        let cp = sigma_cp(&car(&k, 1, 5.0, 3.0, 10.0, Direction::Left)).unwrap();
        assert_eq!((cp.s, cp.d, cp.d_prime), (2.0, Direction::Left, Direction::Right));
        let cp = sigma_cp(&car(&k, 1, 5.0, 3.0, -50.0, Direction::Right)).unwrap();
        assert_eq!((cp.s, cp.d, cp.d_prime), (-10.0, Direction::Right, Direction::Left));
        assert!(sigma_cp(&car(&k, 1, 5.0, 3.0, 10.0, Direction::Stay)).is_err());
        let mut moved = car(&k, 1, 5.0, 3.0, 10.0, Direction::Left);
        moved.d_prime = Direction::Right;
        assert!(sigma_cp(&moved).is_err());
    }

    #[test]
    fn safety_thresholds() {
        // oracle: direct evaluation of the two formulas
        let back = 20f64.powf(1.2) - 25.0 + 5.0 + 3.0;
        assert!((back_gap_threshold(20.0, 25.0) - back).abs() < 1e-12);
        assert!((back - 19.41).abs() < 0.01);
        let front = 25f64.powf(1.25) - 25.0 + 3.0;
        assert!((front_gap_threshold(25.0, 25.0) - front).abs() < 1e-12);
        assert!((front - 33.90).abs() < 0.01);
        assert!((back_gap_threshold(20.0, 20.0) - (20f64.powf(1.2) - 20.0 + 3.0)).abs() < 1e-12);
        assert_eq!(back_gap_threshold(0.0, 30.0), 3.0);
        assert_eq!(front_gap_threshold(0.0, 30.0), 0.0);
    }

    #[test]
    fn trans_check_gates() {
        let k = kind();
        let target = LaneConfiguration::from_cells(
            vec![car(&k, 10, 100.0, 20.0, 0.0, Direction::Stay), car(&k, 11, 300.0, 25.0, 0.0, Direction::Stay)],
            true,
            true,
        )
        .unwrap();
        let sigma = car(&k, 1, 200.0, 25.0, -100.0, Direction::Left);
        assert!(trans_check(&sigma, &target, Direction::Left));
        assert!(!trans_check(&sigma, &target, Direction::Right));
        let mut moved = sigma.clone();
        moved.d_prime = Direction::Right;
        assert!(!trans_check(&moved, &target, Direction::Left));
        // too close to the back vehicle: gap 16 m < 19.41 m
        let close = car(&k, 1, 120.0, 25.0, -100.0, Direction::Left);
        assert!(!trans_check(&close, &target, Direction::Left));
        // overlapping body
        let overlap = car(&k, 1, 102.0, 25.0, -100.0, Direction::Left);
        assert!(!trans_check(&overlap, &target, Direction::Left));
    }

    #[test]
    fn copy_and_erase() {
        let k = kind();
        let sigma = car(&k, 1, 200.0, 25.0, 10.0, Direction::Left);
        let empty = LaneConfiguration::new(false, true);
        let target = copy_into(&sigma, &empty, Direction::Left);
        assert_eq!(target.len(), 1);
        assert_eq!(target.cells()[0].s, 2.0);
        assert_eq!(copy_into(&sigma, &empty, Direction::Right), empty);

        let source = LaneConfiguration::from_cells(vec![sigma.clone()], true, true).unwrap();
        assert!(erase_from(&source, &target.cells()[0]).is_empty());
        let mut other = target.cells()[0].clone();
        other.s = 3.0;
        assert_eq!(erase_from(&source, &other), source);
        assert!(erase_from(&LaneConfiguration::new(true, true), &target.cells()[0]).is_empty());
    }

    #[test]
    fn config_folds_match_sequential_single_copies() {
        let k = kind();
        let source = LaneConfiguration::from_cells(
            vec![
                car(&k, 1, 100.0, 20.0, -50.0, Direction::Left),
                car(&k, 2, 400.0, 20.0, -50.0, Direction::Left),
                car(&k, 3, 700.0, 20.0, 50.0, Direction::Right),
            ],
            true,
            true,
        )
        .unwrap();
        let target = LaneConfiguration::new(false, true);
        let folded = copy_config(&source, &target, Direction::Left);
        let sequential = source.iter().fold(target.clone(), |acc, s| copy_into(s, &acc, Direction::Left));
        assert_eq!(folded, sequential);
        assert_eq!(folded.iter().map(|c| c.vid).collect::<Vec<_>>(), vec![1, 2]);
        let erased = erase_config(&source, &folded);
        assert_eq!(erased.iter().map(|c| c.vid).collect::<Vec<_>>(), vec![3]);
        assert_eq!(copy_config(&LaneConfiguration::new(true, true), &target, Direction::Left), target);
    }

    fn ctx(rules: &RuleBase) -> StepContext<'_> {
        StepContext {
            rules,
            rng: KeyedRng::new(1, 0),
            t: 1,
            options: DynamicsOptions { noise: false, accel_override: None, parallel: false },
        }
    }

    #[test]
    fn empty_road_is_fixed() {
        let rules = RuleBase::standard();
        let road = RoadConfiguration::empty(3).unwrap();
        assert_eq!(update_multilane(&road, &[], &ctx(&rules)).unwrap(), road);
        assert_eq!(meta_cca_step(&road, &[], &ctx(&rules)).unwrap(), road);
    }

    #[test]
    fn left_mover_with_room_changes_lane() {
        let rules = RuleBase::standard();
        let k = kind();
        let road = RoadConfiguration::from_lanes(vec![
            vec![],
            vec![car(&k, 1, 1000.0, 28.0, -100.0, Direction::Left)],
            vec![],
        ])
        .unwrap();
        let next = update_multilane(&road, &[], &ctx(&rules)).unwrap();
        assert_eq!(next.lane(0).len(), 1);
        assert!(next.lane(1).is_empty());
        let moved = &next.lane(0).cells()[0];
        assert_eq!(moved.vid, 1);
        assert_eq!(moved.d_prime, Direction::Stay);
        assert!(meta_cca_step(&road, &[], &ctx(&rules)).unwrap().same_bits(&next));
    }

    #[test]
    fn staying_vehicle_is_only_advanced() {
        let rules = RuleBase::standard();
        let k = kind();
        let road = RoadConfiguration::from_lanes(vec![vec![], vec![car(&k, 1, 1000.0, 28.0, 0.0, Direction::Stay)]])
            .unwrap();
        let c = ctx(&rules);
        let next = update_multilane(&road, &[], &c).unwrap();
        let expected = step_lane(road.lane(1), None, &c).unwrap();
        assert_eq!(next.lane(1), &expected);
        assert!(next.lane(0).is_empty());
    }

    #[test]
    fn road_needs_two_lanes() {
        assert!(RoadConfiguration::empty(1).is_err());
    }
}
