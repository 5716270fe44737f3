//! Property suites shared by the `verify` command and the test targets.

use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::fuzzy::{gwaf, MembershipFunction, RuleBase};
use crate::lane::{DynamicsOptions, StepContext};
use crate::multilane::{meta_cca_step, update_multilane, RoadConfiguration};
use crate::rng::{KeyedRng, Purpose, Stream};
use crate::scenario::{run, run_repetition, ExperimentConfig};
use crate::vehicle::{Direction, Kind, VehicleState, GAP_TOLERANCE};

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

/// Random physical road with `lanes` lanes and up to `max_per_lane`
/// vehicles per lane, drawn from passenger and long kinds.
pub fn random_road(rng: &mut Stream, lanes: usize, max_per_lane: usize) -> RoadConfiguration {
    let kinds = [Arc::new(Kind::passenger()), Arc::new(Kind::long_vehicle())];
    let mut vid = 0;
    let cells = (0..lanes)
        .map(|_| {
            let n = rng.random_range(0..=max_per_lane);
            let mut x = rng.random_range(0.0..50.0);
            let mut out: Vec<VehicleState> = Vec::with_capacity(n);
            for _ in 0..n {
                let kind = kinds[usize::from(rng.random_bool(0.2))].clone();
                if let Some(prev) = out.last() {
                    let spacing = if rng.random_bool(0.2) { rng.random_range(0.0..3.0) } else { rng.random_range(3.0..80.0) };
                    x = prev.front_bumper() + spacing + kind.half_length();
                }
                let mut v = VehicleState::new(kind.clone(), vid, x, rng.random_range(0.0..=kind.v_max));
                v.s = rng.random_range(kind.s_min..=kind.s_max);
                v.d = [Direction::Left, Direction::Stay, Direction::Right][rng.random_range(0..3)];
                vid += 1;
                out.push(v);
            }
            out
        })
        .collect();
    RoadConfiguration::from_lanes(cells).expect("generated road is physical")
}

/// Compares the lane-level automaton with the sequential update on
/// `cases` random roads. Returns the number of mismatches.
pub fn prop1_mismatches(cases: u64, seed: u64) -> Result<u64> {
    let rules = RuleBase::standard();
    let mut mismatches = 0;
    for case in 0..cases {
        let mut stream = KeyedRng::new(seed, 0).stream(case, 0, Purpose::Scratch(1));
        let lanes = 2 + (case % 3) as usize;
        let road = random_road(&mut stream, lanes, 20);
        let ctx = StepContext {
            rules: &rules,
            rng: KeyedRng::new(seed, case),
            t: case + 1,
            options: DynamicsOptions { noise: true, accel_override: None, parallel: false },
        };
        let a = update_multilane(&road, &[], &ctx)?;
        let b = meta_cca_step(&road, &[], &ctx)?;
        if !a.same_bits(&b) {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

/// Largest relative deviation between GWAF and the weighted mean of peaks
/// over `cases` random firings of symmetric output triangles.
pub fn gwaf_symmetry_deviation(cases: u64, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for case in 0..cases {
        let mut rng = KeyedRng::new(seed, 0).stream(case, 0, Purpose::Scratch(2));
        let rules = rng.random_range(1..=8);
        let mut fired = Vec::with_capacity(rules);
        let (mut num, mut den) = (0.0, 0.0);
        for _ in 0..rules {
            let peak = rng.random_range(-6.0..6.0);
            let half = rng.random_range(0.1..3.0);
            let mf = MembershipFunction::triangular(peak - half, peak, peak + half)?;
            let w: f64 = rng.random_range(0.0..=1.0);
            if w > 0.0 {
                num += w * peak;
                den += w;
            }
            fired.push((w, mf.preimage(w)?));
        }
        let got = gwaf(fired.iter().map(|(w, p)| (*w, p.as_slice())));
        let want = if den > 0.0 { num / den } else { 0.0 };
        let scale = want.abs().max(1.0);
        worst = worst.max((got - want).abs() / scale);
    }
    Ok(worst)
}

/// Runs the scenario and returns the most negative adjacent gap observed.
pub fn min_gap_over_run(cfg: &ExperimentConfig, repetition: u64) -> Result<f64> {
    let mut sim = crate::scenario::Simulation::new(cfg, repetition)?;
    let mut worst = f64::INFINITY;
    for _ in 0..cfg.iterations {
        sim.step()?;
        for lane in sim.road().lanes() {
            if let Some(g) = lane.min_gap() {
                worst = worst.min(g);
            }
        }
    }
    Ok(worst)
}

/// The suites run by `verify`.
pub fn run_suites() -> Result<Vec<SuiteReport>> {
    let mut out = Vec::new();

    let cfg = ExperimentConfig { repetitions: 2, iterations: 300, emission_rate: 2.0, ..Default::default() };
    let mut worst = f64::INFINITY;
    for r in 0..cfg.repetitions {
        worst = worst.min(min_gap_over_run(&cfg, r)?);
    }
    out.push(SuiteReport {
        name: "collision freedom",
        passed: worst >= -GAP_TOLERANCE,
        detail: format!("smallest gap {worst:.6} m over {} steps", cfg.iterations * cfg.repetitions),
    });

    let cases = 1000;
    let mismatches = prop1_mismatches(cases, 7)?;
    out.push(SuiteReport {
        name: "lane automaton equivalence",
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches in {cases} random roads"),
    });

    let dev = gwaf_symmetry_deviation(1000, 11)?;
    out.push(SuiteReport {
        name: "GWAF symmetry",
        passed: dev <= 1e-12,
        detail: format!("max relative deviation {dev:e}"),
    });

    let cfg = ExperimentConfig { repetitions: 3, iterations: 200, emission_rate: 1.5, ..Default::default() };
    let sequential = run(&cfg, 1)?;
    let parallel = run(&cfg, 0)?;
    let again = run_repetition(&cfg, 0, true)?;
    out.push(SuiteReport {
        name: "determinism",
        passed: sequential == parallel && again == sequential[0],
        detail: "sequential, parallel and repeated runs compared".into(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_physical_and_unique() {
        for case in 0..50 {
            let mut s = KeyedRng::new(3, 0).stream(case, 0, Purpose::Scratch(1));
            let road = random_road(&mut s, 3, 20);
            road.check_physical().unwrap();
            let mut vids: Vec<u64> = road.vehicles().map(|c| c.vid).collect();
            let n = vids.len();
            vids.dedup();
            assert_eq!(vids.len(), n);
        }
    }

    #[test]
    fn small_equivalence_sample() {
        assert_eq!(prop1_mismatches(60, 5).unwrap(), 0);
    }

    #[test]
    fn gwaf_symmetric_sample() {
        assert!(gwaf_symmetry_deviation(200, 1).unwrap() <= 1e-12);
    }
}
