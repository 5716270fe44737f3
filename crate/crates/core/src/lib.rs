//! Multi-lane continuous cellular automaton traffic simulator with fuzzy
//! driver decisions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod ext;
pub mod fuzzy;
pub mod lane;
pub mod multilane;
pub mod output;
pub mod rng;
pub mod scenario;
pub mod vehicle;
pub mod verify;

pub use analysis::{MetricsSample, MetricsSeries};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use lane::{step_lane, DynamicsOptions, StepContext};
pub use multilane::{meta_cca_step, update_multilane, RoadConfiguration};
pub use rng::{KeyedRng, Purpose};
pub use scenario::{run, ExperimentConfig, ObstaclePlacement, Simulation};
pub use vehicle::{Barrier, Direction, Kind, LaneConfiguration, Perception, VehicleState};
