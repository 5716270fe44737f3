//! Vehicle kinds, cell states, lane configurations and perception.

use std::sync::{Arc, OnceLock};

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::fuzzy::{Inputs, MembershipTable, RuleBase, Variable};

/// Absolute tolerance (m) for gap and ordering checks.
pub const GAP_TOLERANCE: f64 = 1e-9;

/// Monotone map `[0, 1] -> [0, 1]` with `p(0) = 0` and `p(1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbabilityCurve {
    /// `p(x) = x^e`, `e > 0`.
    Power(f64),
}

impl ProbabilityCurve {
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match *self {
            ProbabilityCurve::Power(e) => x.powf(e),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            ProbabilityCurve::Power(e) if e > 0.0 && e.is_finite() => Ok(()),
            ProbabilityCurve::Power(e) => Err(format!("power curve exponent {e} must be positive")),
        }
    }
}

fn default_service_time() -> u32 {
    2
}

/// Parameter bundle shared by all vehicles of one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kind {
    pub id: String,
    /// m/s
    pub v_max: f64,
    /// m/s
    pub v_opt: f64,
    /// m
    pub length: f64,
    /// Standard deviation of the acceleration noise, m/s^2.
    pub accel_noise: f64,
    pub s_max: f64,
    pub s_min: f64,
    pub p_left: ProbabilityCurve,
    pub p_right: ProbabilityCurve,
    /// Seconds a stopped vehicle is held at the plaza booth.
    #[serde(default = "default_service_time")]
    pub service_time: u32,
    /// Permanent obstacles never move, transfer or count as traffic.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub immobile: bool,
    pub memberships: MembershipTable,
}

#[derive(Serialize, Deserialize)]
struct KindFile {
    kind: Vec<Kind>,
}

const DEFAULT_KINDS: &str = include_str!("../config/kinds.toml");

impl Kind {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidKind { id: self.id.clone(), reason });
        if !(self.length > 0.0) {
            return fail(format!("length {} must be positive", self.length));
        }
        if self.immobile {
            return Ok(());
        }
        if !(0.0 < self.v_opt && self.v_opt <= self.v_max) {
            return fail(format!("need 0 < v_opt ({}) <= v_max ({})", self.v_opt, self.v_max));
        }
        if !(self.s_min < 0.0 && 0.0 < self.s_max) {
            return fail(format!("need s_min ({}) < 0 < s_max ({})", self.s_min, self.s_max));
        }
        if !(self.accel_noise >= 0.0) {
            return fail(format!("accel_noise {} must be non-negative", self.accel_noise));
        }
        if let Err(reason) = self.p_left.validate().and_then(|_| self.p_right.validate()) {
            return fail(reason);
        }
        RuleBase::standard().validate(&self.memberships).or_else(|e| fail(e.to_string()))
    }

    pub fn half_length(&self) -> f64 {
        self.length / 2.0
    }

    /// Parses a `[[kind]]` list and validates every entry.
    pub fn load_all(text: &str) -> Result<Vec<Kind>> {
        let file: KindFile = toml::from_str(text)?;
        for k in &file.kind {
            k.validate()?;
        }
        Ok(file.kind)
    }

    pub fn save_all(kinds: &[Kind]) -> Result<String> {
        Ok(toml::to_string(&KindFile { kind: kinds.to_vec() })?)
    }

    /// Shipped passenger and long-vehicle kinds.
    pub fn defaults() -> Vec<Kind> {
        static DEFAULTS: OnceLock<Vec<Kind>> = OnceLock::new();
        DEFAULTS
            .get_or_init(|| Self::load_all(DEFAULT_KINDS).expect("shipped kinds.toml is valid"))
            .clone()
    }

    pub fn passenger() -> Kind {
        Self::defaults().into_iter().find(|k| k.id == "passenger").expect("passenger kind")
    }

    pub fn long_vehicle() -> Kind {
        Self::defaults().into_iter().find(|k| k.id == "long").expect("long kind")
    }

    /// Immobile pseudo-vehicle of the given length.
    pub fn obstacle(length: f64) -> Kind {
        let template = Self::passenger();
        Kind {
            id: "obstacle".into(),
            v_max: 0.0,
            v_opt: 0.0,
            length,
            accel_noise: 0.0,
            s_max: 1.0,
            s_min: -1.0,
            p_left: ProbabilityCurve::Power(1.0),
            p_right: ProbabilityCurve::Power(1.0),
            service_time: 0,
            immobile: true,
            memberships: template.memberships,
        }
    }
}

/// Lane-change desire or transfer origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "L")]
    Left,
    #[default]
    #[serde(rename = "0")]
    Stay,
    #[serde(rename = "R")]
    Right,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Stay => Direction::Stay,
            Direction::Right => Direction::Left,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Left => "L",
            Direction::Stay => "0",
            Direction::Right => "R",
        }
    }
}

/// State of one occupied cell.
#[derive(Clone, Debug)]
pub struct VehicleState {
    pub kind: Arc<Kind>,
    /// Midpoint position, m.
    pub x: f64,
    pub v: f64,
    /// Stress, m.
    pub s: f64,
    pub d: Direction,
    pub d_prime: Direction,
    pub vid: u64,
    pub entry_time: u64,
}

impl PartialEq for VehicleState {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.kind, &other.kind) || self.kind.id == other.kind.id)
            && self.x == other.x
            && self.v == other.v
            && self.s == other.s
            && self.d == other.d
            && self.d_prime == other.d_prime
            && self.vid == other.vid
            && self.entry_time == other.entry_time
    }
}

impl VehicleState {
    pub fn new(kind: Arc<Kind>, vid: u64, x: f64, v: f64) -> Self {
        Self { kind, x, v, s: 0.0, d: Direction::Stay, d_prime: Direction::Stay, vid, entry_time: 0 }
    }

    pub fn half_length(&self) -> f64 {
        self.kind.half_length()
    }

    pub fn front_bumper(&self) -> f64 {
        self.x + self.half_length()
    }

    pub fn rear_bumper(&self) -> f64 {
        self.x - self.half_length()
    }

    pub fn is_obstacle(&self) -> bool {
        self.kind.immobile
    }

    /// Bitwise equality of every field, used by equivalence checks.
    pub fn same_bits(&self, other: &Self) -> bool {
        self.kind.id == other.kind.id
            && self.x.to_bits() == other.x.to_bits()
            && self.v.to_bits() == other.v.to_bits()
            && self.s.to_bits() == other.s.to_bits()
            && self.d == other.d
            && self.d_prime == other.d_prime
            && self.vid == other.vid
            && self.entry_time == other.entry_time
    }
}

/// Bumper-to-bumper distance from `back` to `front`.
#[inline]
pub fn gap(back: &VehicleState, front: &VehicleState) -> f64 {
    front.x - back.x - front.half_length() - back.half_length()
}

/// Finite ordered sequence of occupied cells of one lane, with the flags
/// telling whether a lane exists on the left and on the right.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LaneConfiguration {
    cells: Vec<VehicleState>,
    left_exists: bool,
    right_exists: bool,
}

impl LaneConfiguration {
    pub fn new(left_exists: bool, right_exists: bool) -> Self {
        Self { cells: Vec::new(), left_exists, right_exists }
    }

    pub fn from_cells(cells: Vec<VehicleState>, left_exists: bool, right_exists: bool) -> Result<Self> {
        let lane = Self { cells, left_exists, right_exists };
        lane.check_physical()?;
        Ok(lane)
    }

    pub(crate) fn from_cells_unchecked(
        cells: Vec<VehicleState>,
        left_exists: bool,
        right_exists: bool,
    ) -> Self {
        Self { cells, left_exists, right_exists }
    }

    pub fn cells(&self) -> &[VehicleState] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut Vec<VehicleState> {
        &mut self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&VehicleState> {
        self.cells.get(i)
    }

    pub fn left_exists(&self) -> bool {
        self.left_exists
    }

    pub fn right_exists(&self) -> bool {
        self.right_exists
    }

    pub fn iter(&self) -> std::slice::Iter<'_, VehicleState> {
        self.cells.iter()
    }

    /// Strictly increasing midpoints and non-negative gaps (within
    /// [`GAP_TOLERANCE`]).
    pub fn check_physical(&self) -> Result<()> {
        for (n, w) in self.cells.windows(2).enumerate() {
            if !(w[0].x < w[1].x) {
                return Err(Error::NotPhysical(format!(
                    "cells {n} and {} out of order ({} >= {})",
                    n + 1,
                    w[0].x,
                    w[1].x
                )));
            }
            let g = gap(&w[0], &w[1]);
            if g < -GAP_TOLERANCE {
                return Err(Error::NotPhysical(format!(
                    "cells {n} and {} overlap by {} m",
                    n + 1,
                    -g
                )));
            }
        }
        Ok(())
    }

    /// Smallest bumper-to-bumper gap between adjacent cells.
    pub fn min_gap(&self) -> Option<f64> {
        self.cells.windows(2).map(|w| gap(&w[0], &w[1])).reduce(f64::min)
    }

    /// Index at which `sigma` would be inserted: the first cell with a
    /// larger midpoint. Equal midpoints are not insertable.
    pub fn index_of(&self, sigma: &VehicleState) -> Result<usize> {
        let j = self.cells.partition_point(|c| c.x < sigma.x);
        if self.cells.get(j).is_some_and(|c| c.x == sigma.x) {
            return Err(Error::PositionTie(sigma.x));
        }
        Ok(j)
    }

    /// Whether inserting `sigma` at `n` keeps the lane physical.
    pub fn can_insert(&self, n: usize, sigma: &VehicleState) -> bool {
        if n > self.cells.len() {
            return false;
        }
        if n > 0 {
            let back = &self.cells[n - 1];
            if !(back.x < sigma.x) || gap(back, sigma) < -GAP_TOLERANCE {
                return false;
            }
        }
        if let Some(front) = self.cells.get(n) {
            if !(sigma.x < front.x) || gap(sigma, front) < -GAP_TOLERANCE {
                return false;
            }
        }
        true
    }

    /// In-place insertion.
    pub fn insert(&mut self, n: usize, sigma: VehicleState) -> Result<()> {
        if n > self.cells.len() {
            return Err(Error::IndexOutOfRange { index: n, len: self.cells.len() });
        }
        if !self.can_insert(n, &sigma) {
            return Err(Error::NotPhysical(format!(
                "vehicle {} at x = {} cannot be inserted at index {n}",
                sigma.vid, sigma.x
            )));
        }
        self.cells.insert(n, sigma);
        Ok(())
    }

    /// In-place deletion.
    pub fn remove(&mut self, n: usize) -> Result<VehicleState> {
        if n >= self.cells.len() {
            return Err(Error::EmptyCell(n));
        }
        Ok(self.cells.remove(n))
    }

    /// Inserting operator: shifts cells from `n` on and stores `sigma` at `n`.
    pub fn insert_at(&self, n: usize, sigma: VehicleState) -> Result<Self> {
        let mut out = self.clone();
        out.insert(n, sigma)?;
        Ok(out)
    }

    /// Deleting operator, the right-inverse of [`insert_at`](Self::insert_at).
    pub fn delete_at(&self, n: usize) -> Result<Self> {
        let mut out = self.clone();
        out.remove(n)?;
        Ok(out)
    }

    /// Number of mobile vehicles (obstacles excluded).
    pub fn traffic_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_obstacle()).count()
    }
}

/// Virtual stationary vehicle of zero length standing at `x` (a toll
/// booth). It limits every lane leader's velocity; it enters perception
/// only for vehicles whose front bumper is within `visible_within` of it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barrier {
    pub x: f64,
    pub visible_within: f64,
}

impl Barrier {
    fn visible_to(&self, vehicle: &VehicleState) -> bool {
        self.x - vehicle.front_bumper() <= self.visible_within
    }
}

/// Distances (m) and collision times (s) perceived by one vehicle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perception {
    pub bd: ExtReal,
    pub fd: ExtReal,
    pub nfd: ExtReal,
    pub fct: ExtReal,
    pub pfct: ExtReal,
    pub wfct: ExtReal,
    pub nfct: ExtReal,
    pub bct: ExtReal,
    pub zeta: ExtReal,
}

impl Perception {
    /// Fuzzy inputs for a vehicle moving at `v`.
    pub fn inputs(&self, v: f64) -> Inputs {
        Inputs::new()
            .with(Variable::FrontDistance, self.fd)
            .with(Variable::NextFrontDistance, self.nfd)
            .with(Variable::BackDistance, self.bd)
            .with(Variable::PerceivedFrontCollisionTime, self.pfct)
            .with(Variable::WorstFrontCollisionTime, self.wfct)
            .with(Variable::NextFrontCollisionTime, self.nfct)
            .with(Variable::BackCollisionTime, self.bct)
            .with(Variable::Velocity, v)
    }
}

#[derive(Clone, Copy)]
struct Neighbour {
    x: f64,
    half_length: f64,
    v: f64,
}

impl From<&VehicleState> for Neighbour {
    fn from(c: &VehicleState) -> Self {
        Neighbour { x: c.x, half_length: c.half_length(), v: c.v }
    }
}

/// Perception of cell `i` from the lane snapshot, optionally seeing a
/// barrier ahead of the last vehicle.
pub fn compute_perception(
    lane: &LaneConfiguration,
    i: usize,
    barrier: Option<&Barrier>,
) -> Result<Perception> {
    let cells = lane.cells();
    let me = cells.get(i).ok_or(Error::EmptyCell(i))?;
    let half = me.half_length();

    let mut fronts: ArrayVec<Neighbour, 2> =
        cells[i + 1..cells.len().min(i + 3)].iter().map(Neighbour::from).collect();
    if fronts.len() < 2 {
        if let Some(b) = barrier.filter(|b| b.visible_to(me)) {
            fronts.push(Neighbour { x: b.x, half_length: 0.0, v: 0.0 });
        }
    }

    let distance_to = |n: &Neighbour| ExtReal::Finite(n.x - me.x - n.half_length - half);
    let (fd, fct) = match fronts.first() {
        Some(f) => {
            let fd = distance_to(f);
            (fd, ExtReal::ratio(fd, me.v - f.v))
        }
        None => (ExtReal::PosInf, ExtReal::PosInf),
    };
    let (nfd, nfct) = match fronts.get(1) {
        Some(f) => {
            let nfd = distance_to(f);
            (nfd, ExtReal::ratio(nfd, me.v - f.v))
        }
        None => (ExtReal::PosInf, ExtReal::PosInf),
    };
    let (bd, bct) = match i.checked_sub(1).map(|b| &cells[b]) {
        Some(b) => {
            let bd = ExtReal::Finite(me.x - b.x - half - b.half_length());
            (bd, ExtReal::ratio(bd, b.v - me.v))
        }
        None => (ExtReal::PosInf, ExtReal::PosInf),
    };
    let wfct = ExtReal::ratio(fd, me.v);
    let zeta = ExtReal::ratio(ExtReal::Finite(me.kind.s_max - me.s), me.v);
    let pfct = if fct.is_negative() { zeta } else { zeta.min(fct) };

    Ok(Perception { bd, fd, nfd, fct, pfct, wfct, nfct, bct, zeta })
}

/// Largest distance cell `i` may travel this step: the gap to the real
/// front vehicle, or to the barrier when it leads its lane.
pub fn front_gap_limit(lane: &LaneConfiguration, i: usize, barrier: Option<&Barrier>) -> ExtReal {
    let cells = lane.cells();
    let me = &cells[i];
    match cells.get(i + 1) {
        Some(front) => ExtReal::Finite(gap(me, front)),
        None => match barrier {
            Some(b) => ExtReal::Finite(b.x - me.front_bumper()),
            None => ExtReal::PosInf,
        },
    }
}
