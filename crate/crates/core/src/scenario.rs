//! Experiment configuration and the top-level run loop: emission at the
//! road entrance, the off-toll plaza, the obstacle and repetitions.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{sample, Exit, MetricsSeries, WindowStats};
use crate::error::{Error, Result};
use crate::fuzzy::RuleBase;
use crate::lane::{DynamicsOptions, StepContext};
use crate::multilane::{front_gap_threshold, update_multilane, RoadConfiguration};
use crate::rng::{KeyedRng, Purpose};
use crate::vehicle::{Barrier, Kind, LaneConfiguration, VehicleState};

/// Marker value of `influence_radius` for open road tolling.
pub const OPEN_TOLLING: f64 = -1.0;

/// A vehicle stopped below this speed (m/s) at the booth is served.
pub const STOPPED_SPEED: f64 = 0.5;

/// Front bumper distance (m) to the booth within which service starts.
pub const BOOTH_REACH: f64 = 2.0;

const OBSTACLE_VID: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstaclePlacement {
    #[default]
    None,
    LeftMost,
    RightMost,
}

impl ObstaclePlacement {
    pub fn lane(self, lanes: usize) -> Option<usize> {
        match self {
            ObstaclePlacement::None => None,
            ObstaclePlacement::LeftMost => Some(0),
            ObstaclePlacement::RightMost => Some(lanes - 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObstaclePlacement::None => "none",
            ObstaclePlacement::LeftMost => "left-most",
            ObstaclePlacement::RightMost => "right-most",
        }
    }
}

impl std::str::FromStr for ObstaclePlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ObstaclePlacement::None),
            "left-most" => Ok(ObstaclePlacement::LeftMost),
            "right-most" => Ok(ObstaclePlacement::RightMost),
            other => Err(Error::InvalidConfig(format!("unknown obstacle placement {other:?}"))),
        }
    }
}

fn default_road_length() -> f64 {
    5000.0
}
fn default_lanes() -> usize {
    3
}
fn default_iterations() -> u64 {
    1000
}
fn default_repetitions() -> u64 {
    100
}
fn default_influence_radius() -> f64 {
    10.0
}
fn default_true() -> bool {
    true
}
fn default_bin_width() -> f64 {
    0.005
}
fn default_kinds() -> Vec<Kind> {
    Kind::defaults()
}

/// Parameters of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// m
    #[serde(default = "default_road_length")]
    pub road_length: f64,
    #[serde(default = "default_lanes")]
    pub lanes: usize,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
    /// Vehicles per second over the whole entrance.
    pub emission_rate: f64,
    /// Probability that an emitted vehicle is a long vehicle.
    #[serde(default)]
    pub long_fraction: f64,
    /// Plaza influence radius in m, or -1 for open road tolling.
    #[serde(default = "default_influence_radius")]
    pub influence_radius: f64,
    #[serde(default)]
    pub obstacle: ObstaclePlacement,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub noise: bool,
    /// Density bin width of the fundamental diagram, veh/m/lane.
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Vehicle kinds; must provide ids `passenger` and `long`.
    #[serde(default = "default_kinds", rename = "kind")]
    pub kinds: Vec<Kind>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            road_length: default_road_length(),
            lanes: default_lanes(),
            iterations: default_iterations(),
            repetitions: default_repetitions(),
            emission_rate: 1.0,
            long_fraction: 0.0,
            influence_radius: default_influence_radius(),
            obstacle: ObstaclePlacement::None,
            seed: 0,
            noise: true,
            bin_width: default_bin_width(),
            kinds: default_kinds(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// `None` for open road tolling.
    pub fn plaza_radius(&self) -> Option<f64> {
        (self.influence_radius != OPEN_TOLLING).then_some(self.influence_radius)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if !(self.road_length > 0.0 && self.road_length.is_finite()) {
            return fail(format!("road_length {} must be positive", self.road_length));
        }
        if self.lanes < 2 {
            return fail(format!("lanes {} must be at least 2", self.lanes));
        }
        if !(self.emission_rate >= 0.0 && self.emission_rate.is_finite()) {
            return fail(format!("emission_rate {} must be non-negative", self.emission_rate));
        }
        if !(0.0..=1.0).contains(&self.long_fraction) {
            return fail(format!("long_fraction {} must lie in [0, 1]", self.long_fraction));
        }
        if !(self.influence_radius > 0.0 && self.influence_radius.is_finite())
            && self.influence_radius != OPEN_TOLLING
        {
            return fail(format!("influence_radius {} must be positive or -1", self.influence_radius));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return fail(format!("bin_width {} must be positive", self.bin_width));
        }
        for k in &self.kinds {
            k.validate()?;
        }
        self.kind("passenger")?;
        if self.long_fraction > 0.0 {
            self.kind("long")?;
        }
        Ok(())
    }

    fn kind(&self, id: &str) -> Result<&Kind> {
        self.kinds.iter().find(|k| k.id == id).ok_or_else(|| Error::UnknownKind(id.into()))
    }

    /// Probability that a lane sees at least one arrival in one second.
    pub fn lane_emission_probability(&self) -> f64 {
        1.0 - (-self.emission_rate / self.lanes as f64).exp()
    }
}

/// Counters of one repetition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub emitted: u64,
    pub dropped: u64,
    pub processed: u64,
}

/// A running repetition, advanced one second at a time.
pub struct Simulation {
    cfg: ExperimentConfig,
    rules: Arc<RuleBase>,
    passenger: Arc<Kind>,
    long: Option<Arc<Kind>>,
    rng: KeyedRng,
    road: RoadConfiguration,
    barriers: Vec<Option<Barrier>>,
    held: BTreeMap<u64, u64>,
    next_vid: u64,
    t: u64,
    tally: Tally,
    window: WindowStats,
    options: DynamicsOptions,
}

impl Simulation {
    pub fn new(cfg: &ExperimentConfig, repetition: u64) -> Result<Self> {
        cfg.validate()?;
        let passenger = Arc::new(cfg.kind("passenger")?.clone());
        let long = cfg.kind("long").ok().map(|k| Arc::new(k.clone()));
        let mut road = RoadConfiguration::empty(cfg.lanes)?;
        obstacle_install(&mut road, cfg)?;
        let barriers = cfg
            .plaza_radius()
            .map(|r| Barrier { x: cfg.road_length, visible_within: r });
        Ok(Self {
            cfg: cfg.clone(),
            rules: Arc::new(RuleBase::standard()),
            passenger,
            long,
            rng: KeyedRng::new(cfg.seed, repetition),
            road,
            barriers: vec![barriers; cfg.lanes],
            held: BTreeMap::new(),
            next_vid: 0,
            t: 0,
            tally: Tally::default(),
            window: WindowStats::default(),
            options: DynamicsOptions { noise: cfg.noise, accel_override: None, parallel: true },
        })
    }

    pub fn set_parallel(&mut self, parallel: bool) {
        self.options.parallel = parallel;
    }

    pub fn road(&self) -> &RoadConfiguration {
        &self.road
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn tally(&self) -> Tally {
        self.tally
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Advances one second and returns the vehicles that left the road.
    pub fn step(&mut self) -> Result<Vec<Exit>> {
        self.t += 1;
        let t = self.t;
        self.emit();
        let ctx = StepContext { rules: &self.rules, rng: self.rng, t, options: self.options };
        self.road = update_multilane(&self.road, &self.barriers, &ctx)?;
        let exits = self.exits();
        self.tally.processed += exits.len() as u64;
        Ok(exits)
    }

    /// Advances one second and samples the macroscopic state.
    pub fn step_and_sample(&mut self) -> Result<crate::analysis::MetricsSample> {
        let exits = self.step()?;
        self.window.record(self.t, &exits);
        Ok(sample(&self.road, self.t, self.cfg.road_length, &self.window))
    }

    fn emit(&mut self) {
        let p = self.cfg.lane_emission_probability();
        for lane in 0..self.cfg.lanes {
            let id = lane as u64;
            if !self.rng.bernoulli(self.t, id, Purpose::Emit, p) {
                continue;
            }
            self.tally.emitted += 1;
            let kind = match &self.long {
                Some(long) if self.rng.bernoulli(self.t, id, Purpose::KindChoice, self.cfg.long_fraction) => {
                    long.clone()
                }
                _ => self.passenger.clone(),
            };
            match entry_state(self.road.lane(lane), kind, self.next_vid, self.t) {
                Some(vehicle) => {
                    self.next_vid += 1;
                    self.road.lane_mut(lane).insert(0, vehicle).expect("entry checked");
                }
                None => self.tally.dropped += 1,
            }
        }
    }

    fn exits(&mut self) -> Vec<Exit> {
        let t = self.t;
        let l = self.cfg.road_length;
        let mut exits = Vec::new();
        match self.cfg.plaza_radius() {
            None => {
                for i in 0..self.cfg.lanes {
                    let lane = self.road.lane_mut(i);
                    while let Some(last) = lane.cells().last() {
                        if last.is_obstacle() || !(last.rear_bumper() > l) {
                            break;
                        }
                        let gone = lane.remove(lane.len() - 1).expect("non-empty");
                        exits.push(Exit { vid: gone.vid, entry_time: gone.entry_time, exit_time: t });
                    }
                }
            }
            Some(_) => {
                for c in self.road.vehicles() {
                    if !c.is_obstacle()
                        && c.v < STOPPED_SPEED
                        && l - c.front_bumper() <= BOOTH_REACH
                        && !self.held.contains_key(&c.vid)
                    {
                        self.held.insert(c.vid, t + u64::from(c.kind.service_time));
                    }
                }
                let due: Vec<u64> = self.held.iter().filter(|(_, &r)| r <= t).map(|(&v, _)| v).collect();
                if due.is_empty() {
                    return exits;
                }
                for i in 0..self.cfg.lanes {
                    let lane = self.road.lane_mut(i);
                    let mut j = 0;
                    while j < lane.len() {
                        let c = &lane.cells()[j];
                        if due.binary_search(&c.vid).is_ok() {
                            let gone = lane.remove(j).expect("occupied");
                            exits.push(Exit { vid: gone.vid, entry_time: gone.entry_time, exit_time: t });
                        } else {
                            j += 1;
                        }
                    }
                }
                for vid in due {
                    self.held.remove(&vid);
                }
            }
        }
        exits.sort_by_key(|e| e.vid);
        exits
    }
}

/// Largest entry speed not above `v_opt` that satisfies the front safety
/// gap, or `None` when even a standing entry is unsafe.
fn entry_state(lane: &LaneConfiguration, kind: Arc<Kind>, vid: u64, t: u64) -> Option<VehicleState> {
    let x = kind.half_length();
    let v_opt = kind.v_opt;
    let mut vehicle = VehicleState::new(kind, vid, x, v_opt);
    vehicle.entry_time = t;
    let Some(front) = lane.get(0) else { return Some(vehicle) };
    if !lane.can_insert(0, &vehicle) || front.x <= x {
        return None;
    }
    let gap = crate::vehicle::gap(&vehicle, front);
    let budget = (gap + front.v - 3.0).max(0.0);
    let safe = budget.powf(0.8) * (1.0 - 1e-9);
    for v in [v_opt.min(safe), 0.0] {
        if gap > front_gap_threshold(v, front.v) {
            vehicle.v = v;
            return Some(vehicle);
        }
    }
    None
}

/// Places the permanent obstacle of length `2L/5` centred at `L/2`.
pub fn obstacle_install(road: &mut RoadConfiguration, cfg: &ExperimentConfig) -> Result<()> {
    let Some(lane) = cfg.obstacle.lane(cfg.lanes) else { return Ok(()) };
    let l = cfg.road_length;
    let kind = Arc::new(Kind::obstacle(2.0 * l / 5.0));
    let body = VehicleState::new(kind, OBSTACLE_VID, l / 2.0, 0.0);
    let target = road.lane_mut(lane);
    let j = target.index_of(&body)?;
    target.insert(j, body)
}

/// Outcome of one repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct RepetitionResult {
    pub repetition: u64,
    pub series: MetricsSeries,
    pub tally: Tally,
    pub in_road: u64,
}

/// Runs one repetition to completion.
pub fn run_repetition(cfg: &ExperimentConfig, repetition: u64, parallel_lanes: bool) -> Result<RepetitionResult> {
    let mut sim = Simulation::new(cfg, repetition)?;
    sim.set_parallel(parallel_lanes);
    let mut series = MetricsSeries::default();
    for _ in 0..cfg.iterations {
        series.samples.push(sim.step_and_sample()?);
    }
    Ok(RepetitionResult {
        repetition,
        series,
        tally: sim.tally(),
        in_road: sim.road().traffic_count() as u64,
    })
}

/// Runs every repetition, on `threads` workers (0 = all cores). Results are
/// identical for any thread count.
pub fn run(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<RepetitionResult>> {
    cfg.validate()?;
    let parallel = threads != 1;
    let work = || {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|r| run_repetition(cfg, r, parallel))
            .collect::<Result<Vec<_>>>()
    };
    if threads == 1 {
        return (0..cfg.repetitions).map(|r| run_repetition(cfg, r, false)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(work)
}
