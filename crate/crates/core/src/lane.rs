//! Single-lane dynamics: the local rule applied synchronously to every
//! vehicle of a lane, plus the stress and lane-change desire processes.

use rayon::prelude::*;

use crate::error::Result;
use crate::ext::ExtReal;
use crate::fuzzy::{Decision, MembershipTable, RuleBase, Term, Variable};
use crate::rng::{KeyedRng, Purpose};
use crate::vehicle::{
    compute_perception, front_gap_limit, Barrier, Direction, Kind, LaneConfiguration, Perception,
    VehicleState,
};

/// Lanes at least this long are updated data-parallel.
pub const PARALLEL_MIN_CELLS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsOptions {
    /// Add Gaussian acceleration noise with the kind's standard deviation.
    pub noise: bool,
    /// Replace the fuzzy decision by a constant acceleration.
    pub accel_override: Option<f64>,
    /// Allow data-parallel evaluation of long lanes.
    pub parallel: bool,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self { noise: true, accel_override: None, parallel: true }
    }
}

/// Everything a lane update needs besides the lane itself.
#[derive(Clone, Copy, Debug)]
pub struct StepContext<'a> {
    pub rules: &'a RuleBase,
    pub rng: KeyedRng,
    pub t: u64,
    pub options: DynamicsOptions,
}

/// Fuzzy acceleration decision plus noise for a vehicle with the given
/// perception.
pub fn decide_acceleration(
    vehicle: &VehicleState,
    perception: &Perception,
    ctx: &StepContext<'_>,
) -> Result<f64> {
    let a = match ctx.options.accel_override {
        Some(a) => a,
        None => {
            let table = &vehicle.kind.memberships;
            let degrees = table.degrees(&perception.inputs(vehicle.v));
            Decision::evaluate(ctx.rules, &degrees, table)?.combined
        }
    };
    let noise = if ctx.options.noise && vehicle.kind.accel_noise > 0.0 {
        vehicle.kind.accel_noise * ctx.rng.standard_normal(ctx.t, vehicle.vid, Purpose::Noise)
    } else {
        0.0
    };
    Ok(a + noise)
}

/// Acceleration of cell `i` for this step.
pub fn acceleration(
    lane: &LaneConfiguration,
    i: usize,
    barrier: Option<&Barrier>,
    ctx: &StepContext<'_>,
) -> Result<f64> {
    let perception = compute_perception(lane, i, barrier)?;
    decide_acceleration(&lane.cells()[i], &perception, ctx)
}

/// `min(v_max, fd, max(0, v + a))`; an unbounded `fd` drops that clamp.
pub fn update_velocity(v: f64, v_max: f64, fd: ExtReal, a: f64) -> f64 {
    let free = v_max.min((v + a).max(0.0));
    match fd {
        ExtReal::Finite(gap) => free.min(gap.max(0.0)),
        ExtReal::PosInf => free,
        ExtReal::NegInf => 0.0,
    }
}

pub fn update_position(x: f64, v_next: f64) -> f64 {
    x + v_next
}

/// Degree to which the front vehicle is close and slower:
/// `(fct VS & fd M) | (fct VS & fd S) | (fct S & fd M) | (fct S & fd S)`.
pub fn phi(fct: ExtReal, fd: ExtReal, table: &MembershipTable) -> f64 {
    let time = |t| {
        table.input(Variable::PerceivedFrontCollisionTime, t).map_or(0.0, |mf| mf.degree(fct))
    };
    let dist = |t| table.input(Variable::FrontDistance, t).map_or(0.0, |mf| mf.degree(fd));
    let (tvs, ts) = (time(Term::VerySmall), time(Term::Small));
    let (dm, ds) = (dist(Term::Medium), dist(Term::Small));
    tvs.min(dm).max(tvs.min(ds)).max(ts.min(dm)).max(ts.min(ds))
}

/// Stress update for a given uniform draw `u ~ U(0, 1)`.
pub fn update_stress(s: f64, v_next: f64, kind: &Kind, fct: ExtReal, phi: f64, u: f64) -> f64 {
    let s_acc = s + (v_next - kind.v_opt) * u;
    let in_window = kind.s_min / 2.0 < s_acc && s_acc < 0.0;
    let updated = if in_window && fct.is_negative() {
        s_acc / 2.0
    } else if in_window {
        s_acc * (1.0 + phi)
    } else {
        s_acc
    };
    updated.clamp(kind.s_min, kind.s_max)
}

/// Lane-change desire for the next step.
///
/// Positive stress may ask for the right lane, negative stress for the left
/// one; in a jam the edge lanes can only go inward and interior lanes pick
/// left with probability 0.7. Draws are keyed by `(t, vid)`, one purpose
/// per trial, and only the executed branch draws.
#[allow(clippy::too_many_arguments)]
pub fn eval_lane_desire(
    kind: &Kind,
    v: f64,
    s: f64,
    left_exists: bool,
    right_exists: bool,
    rng: &KeyedRng,
    t: u64,
    vid: u64,
) -> Direction {
    if s >= 0.0 {
        let ns = s / kind.s_max;
        if rng.bernoulli(t, vid, Purpose::LaneRight, kind.p_right.eval(ns)) {
            Direction::Right
        } else {
            Direction::Stay
        }
    } else {
        let ns = s / kind.s_min;
        if !rng.bernoulli(t, vid, Purpose::LaneLeft, kind.p_left.eval(ns)) {
            return Direction::Stay;
        }
        let slow = kind
            .memberships
            .input(Variable::Velocity, Term::Small)
            .map_or(0.0, |mf| mf.degree_at(v));
        if !rng.bernoulli(t, vid, Purpose::Jam, slow) {
            return Direction::Left;
        }
        if !right_exists {
            Direction::Left
        } else if !left_exists {
            Direction::Right
        } else if rng.bernoulli(t, vid, Purpose::Side, 0.7) {
            Direction::Left
        } else {
            Direction::Right
        }
    }
}

fn next_state(
    lane: &LaneConfiguration,
    i: usize,
    barrier: Option<&Barrier>,
    ctx: &StepContext<'_>,
) -> Result<VehicleState> {
    let me = &lane.cells()[i];
    if me.is_obstacle() {
        return Ok(VehicleState { d: Direction::Stay, d_prime: Direction::Stay, ..me.clone() });
    }
    let kind = &me.kind;
    let perception = compute_perception(lane, i, barrier)?;
    let a = decide_acceleration(me, &perception, ctx)?;
    let v_next = update_velocity(me.v, kind.v_max, front_gap_limit(lane, i, barrier), a);
    let closeness = phi(perception.fct, perception.fd, &kind.memberships);
    let u = ctx.rng.uniform(ctx.t, me.vid, Purpose::Stress);
    let s_next = update_stress(me.s, v_next, kind, perception.fct, closeness, u);
    let d_next = eval_lane_desire(
        kind,
        me.v,
        s_next,
        lane.left_exists(),
        lane.right_exists(),
        &ctx.rng,
        ctx.t,
        me.vid,
    );
    Ok(VehicleState {
        kind: kind.clone(),
        x: update_position(me.x, v_next),
        v: v_next,
        s: s_next,
        d: d_next,
        d_prime: Direction::Stay,
        vid: me.vid,
        entry_time: me.entry_time,
    })
}

/// Global lane map: every cell is updated from the time-`t` snapshot.
///
/// # Panics
///
/// If the updated lane is not physical, which would mean the
/// collision-freedom clamp is broken.
pub fn step_lane(
    lane: &LaneConfiguration,
    barrier: Option<&Barrier>,
    ctx: &StepContext<'_>,
) -> Result<LaneConfiguration> {
    let n = lane.len();
    let cells: Vec<VehicleState> = if ctx.options.parallel && n >= PARALLEL_MIN_CELLS {
        (0..n).into_par_iter().map(|i| next_state(lane, i, barrier, ctx)).collect::<Result<_>>()?
    } else {
        (0..n).map(|i| next_state(lane, i, barrier, ctx)).collect::<Result<_>>()?
    };
    let next =
        LaneConfiguration::from_cells_unchecked(cells, lane.left_exists(), lane.right_exists());
    if let Err(e) = next.check_physical() {
        panic!("collision freedom violated at t = {}: {e}", ctx.t);
    }
    Ok(next)
}

/// Same map, evaluating cells in the given order. Used to check that the
/// update does not depend on visiting order.
pub fn step_lane_in_order(
    lane: &LaneConfiguration,
    barrier: Option<&Barrier>,
    ctx: &StepContext<'_>,
    order: &[usize],
) -> Result<LaneConfiguration> {
    let mut slots: Vec<Option<VehicleState>> = vec![None; lane.len()];
    for &i in order {
        slots[i] = Some(next_state(lane, i, barrier, ctx)?);
    }
    let cells = slots.into_iter().map(|c| c.expect("order covers every cell")).collect();
    Ok(LaneConfiguration::from_cells_unchecked(cells, lane.left_exists(), lane.right_exists()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn ctx(rules: &RuleBase, noise: bool) -> StepContext<'_> {
        StepContext {
            rules,
            rng: KeyedRng::new(11, 0),
            t: 1,
            options: DynamicsOptions { noise, accel_override: None, parallel: false },
        }
    }

    #[test]
    fn velocity_clamps() {
        assert_eq!(update_velocity(30.0, 36.0, ExtReal::Finite(10.0), 2.0), 10.0);
        assert_eq!(update_velocity(2.0, 36.0, ExtReal::Finite(50.0), -5.0), 0.0);
        assert_eq!(update_velocity(30.0, 36.0, ExtReal::PosInf, 7.5), 36.0);
    }

    #[test]
    fn position_update() {
        assert_eq!(update_position(100.0, 10.0), 110.0);
        assert_eq!(update_position(100.0, 0.0), 100.0);
        let x = [10.0, 12.5, 7.25].iter().fold(0.0, |x, &v| update_position(x, v));
        assert_eq!(x, 29.75);
    }

    #[test]
    fn phi_examples() {
        let table = Kind::passenger().memberships;
        assert_eq!(phi(ExtReal::PosInf, ExtReal::PosInf, &table), 0.0);
        // fct = 0.5 s is VERY SMALL with degree 1, fd = 15 m is SMALL with degree 1
        assert_eq!(phi(ExtReal::Finite(0.5), ExtReal::Finite(15.0), &table), 1.0);
    }

    #[test]
    fn stress_branches() {
        let kind = Kind::passenger();
        // s_acc = 0 + (30 - 28) * 0.5 = 1 > 0
        assert_eq!(update_stress(0.0, 30.0, &kind, ExtReal::PosInf, 0.0, 0.5), 1.0);
        // s_acc = -100 with fct < 0 halves
        assert_eq!(update_stress(-100.0, 28.0, &kind, ExtReal::Finite(-2.0), 0.0, 0.5), -50.0);
        // s_acc = -100 with fct >= 0 and phi = 0.5
        assert_eq!(update_stress(-100.0, 28.0, &kind, ExtReal::Finite(5.0), 0.5, 0.5), -150.0);
        // s_acc = 600 clamps to s_max
        assert_eq!(update_stress(600.0, 28.0, &kind, ExtReal::PosInf, 0.0, 0.5), 500.0);
        // below the window: unchanged
        assert_eq!(update_stress(-300.0, 28.0, &kind, ExtReal::Finite(-2.0), 0.0, 0.5), -300.0);
        // clamp at s_min
        assert_eq!(update_stress(-440.0, 0.0, &kind, ExtReal::PosInf, 0.0, 1.0), -450.0);
    }

    #[test]
    fn degenerate_desires() {
        let kind = Kind::passenger();
        let rng = KeyedRng::new(3, 0);
        for t in 0..200 {
            assert_eq!(eval_lane_desire(&kind, 30.0, kind.s_max, true, true, &rng, t, 1), Direction::Right);
            assert_eq!(eval_lane_desire(&kind, 30.0, 0.0, true, true, &rng, t, 1), Direction::Stay);
            // v = 30 m/s is not slow at all: the jam trial always fails
            assert_eq!(eval_lane_desire(&kind, 30.0, kind.s_min, true, true, &rng, t, 1), Direction::Left);
            // stopped in a jam on the edge lanes
            assert_eq!(eval_lane_desire(&kind, 0.0, kind.s_min, false, true, &rng, t, 1), Direction::Right);
            assert_eq!(eval_lane_desire(&kind, 0.0, kind.s_min, true, false, &rng, t, 1), Direction::Left);
        }
    }

    #[test]
    fn jam_side_choice_prefers_left() {
        let kind = Kind::passenger();
        let rng = KeyedRng::new(5, 0);
        let n = 10_000;
        let left = (0..n)
            .filter(|&t| eval_lane_desire(&kind, 0.0, kind.s_min, true, true, &rng, t, 9) == Direction::Left)
            .count();
        let p = left as f64 / n as f64;
        assert!((p - 0.7).abs() < 3.0 * (0.7f64 * 0.3 / n as f64).sqrt(), "p = {p}");
    }

    #[test]
    fn constant_override_and_combination() {
        let rules = RuleBase::standard();
        let kind = Arc::new(Kind::passenger());
        let lane = LaneConfiguration::from_cells(
            vec![VehicleState::new(kind.clone(), 1, 100.0, 30.0)],
            true,
            true,
        )
        .unwrap();
        let mut c = ctx(&rules, false);
        c.options.accel_override = Some(7.5);
        assert_eq!(acceleration(&lane, 0, None, &c).unwrap(), 7.5);
        c.options.accel_override = Some(0.0);
        assert_eq!(acceleration(&lane, 0, None, &c).unwrap(), 0.0);
    }

    #[test]
    fn free_vehicle_at_optimal_speed() {
        // hand evaluation with the shipped passenger tables: FD = +inf is BIG,
        // PFCT = zeta = 500 / 28 s is MEDIUM with degree 62/63 and SMALL with
        // degree 1/63, so Z and NM fire (module 2 is silent). The Z preimage
        // sums to 0 and the NM preimage at w sums to -4.75 + 0.75 w, giving
        // A = (1/63)(-4.75 + 0.75/63) / 2 = -298.5 / 7938
        let rules = RuleBase::standard();
        let kind = Arc::new(Kind::passenger());
        let lane = LaneConfiguration::from_cells(
            vec![VehicleState::new(kind.clone(), 1, 1000.0, 28.0)],
            true,
            true,
        )
        .unwrap();
        let c = ctx(&rules, false);
        let expected = -298.5 / 7938.0;
        let a = acceleration(&lane, 0, None, &c).unwrap();
        assert!((a - expected).abs() < 1e-12, "{a}");
        let next = step_lane(&lane, None, &c).unwrap();
        let car = &next.cells()[0];
        assert!((car.v - (28.0 + expected)).abs() < 1e-12);
        assert_eq!(car.x, 1000.0 + car.v);
        // in the negative window with no closing front vehicle, Phi = 0
        let u = c.rng.uniform(1, 1, Purpose::Stress);
        assert!((car.s - expected * u).abs() < 1e-12);
        assert_eq!(car.d_prime, Direction::Stay);
    }

    #[test]
    fn close_follower_brakes() {
        // gap 3 m at equal speed 20 m/s: PFCT = zeta = 25 s is BIG (7/18) and
        // MEDIUM (11/18); with FD VERY SMALL these give Z and NS, and WCT =
        // 0.15 s is SMALL so NM fires with weight 1. Preimage sums: Z 0 over
        // two points, NS -2 + 0.5 w over two, NM -2 at its peak, so module 1
        // returns ((11/18)(-2 + 11/36) - 2) / 3 = -1967/1944
        let rules = RuleBase::standard();
        let kind = Arc::new(Kind::passenger());
        let lane = LaneConfiguration::from_cells(
            vec![
                VehicleState::new(kind.clone(), 1, 100.0, 20.0),
                VehicleState::new(kind.clone(), 2, 107.0, 20.0),
            ],
            true,
            true,
        )
        .unwrap();
        let c = ctx(&rules, false);
        let p = compute_perception(&lane, 0, None).unwrap();
        let table = &kind.memberships;
        let d = Decision::evaluate(&rules, &table.degrees(&p.inputs(20.0)), table).unwrap();
        assert!((d.module1 + 1967.0 / 1944.0).abs() < 1e-12, "{}", d.module1);
        assert!(acceleration(&lane, 0, None, &c).unwrap() < 0.0);
    }

    #[test]
    fn empty_lane_steps_to_empty_lane() {
        let rules = RuleBase::standard();
        let lane = LaneConfiguration::new(true, false);
        assert!(step_lane(&lane, None, &ctx(&rules, true)).unwrap().is_empty());
    }
}
