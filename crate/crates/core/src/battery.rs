//! Battery bookkeeping and energy feasibility.
//!
//! Between events the harvest is constant and the drain is constant, so the
//! level is affine and its extremes over `[0, horizon]` occur at event
//! instants. Checking events only is therefore exact.

use serde::{Deserialize, Serialize};

use crate::policy::PowerPolicy;
use crate::scenario::HarvestScenario;

/// Relative tolerance applied to feasibility checks, scaled by total harvest.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatteryMode {
    /// Unbounded bookkeeping; levels below zero or above capacity are reported, not corrected.
    Strict,
    /// Physical battery: excess harvest is discarded and the drain stops at zero.
    Clipping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryEvent {
    pub t: f64,
    /// Level just before any arrival at `t`.
    pub level_before: f64,
    /// Energy arriving at `t` (zero for pure policy breakpoints).
    pub arrived: f64,
    /// Level just after the arrival.
    pub level_after: f64,
    /// Strict: amount by which `level_after` exceeds capacity.
    /// Clipping: energy discarded at this instant.
    pub overflow: f64,
    /// Strict: amount by which `level_before` is negative.
    /// Clipping: demanded energy that was not available during the preceding interval.
    pub shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryTrajectory {
    pub mode: BatteryMode,
    pub e_max: f64,
    pub events: Vec<BatteryEvent>,
}

impl BatteryTrajectory {
    pub fn total_overflow(&self) -> f64 {
        self.events.iter().map(|e| e.overflow).sum()
    }

    pub fn total_shortfall(&self) -> f64 {
        self.events.iter().map(|e| e.shortfall).sum()
    }

    /// Level at the last event (the horizon).
    pub fn final_level(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.level_after)
    }

    pub fn event_at(&self, t: f64) -> Option<&BatteryEvent> {
        self.events.iter().find(|e| e.t == t)
    }
}

/// Sorted, deduplicated event instants: `0`, the horizon, every arrival up to
/// the horizon and every policy breakpoint.
fn event_times(scenario: &HarvestScenario, policy: &PowerPolicy) -> Vec<f64> {
    let mut times: Vec<f64> = std::iter::once(0.0)
        .chain(std::iter::once(policy.horizon))
        .chain(
            scenario
                .arrivals()
                .iter()
                .map(|a| a.t)
                .filter(|&t| t <= policy.horizon),
        )
        .chain(policy.breakpoints())
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

pub fn battery_trajectory(
    scenario: &HarvestScenario,
    policy: &PowerPolicy,
    mode: BatteryMode,
) -> BatteryTrajectory {
    let times = event_times(scenario, policy);
    let arrivals = scenario.arrivals();
    let e_max = scenario.e_max();
    let mut events = Vec::with_capacity(times.len());

    match mode {
        BatteryMode::Strict => {
            // Prefix sums, not running updates, so rounding does not accumulate.
            let mut harvested = 0.0;
            let mut k = 0;
            for &t in &times {
                while k < arrivals.len() && arrivals[k].t < t {
                    harvested += arrivals[k].e;
                    k += 1;
                }
                let arrived: f64 = arrivals[k..]
                    .iter()
                    .take_while(|a| a.t == t)
                    .map(|a| a.e)
                    .sum();
                let spent = policy.energy_spent_by(t);
                let level_before = harvested - spent;
                let level_after = level_before + arrived;
                events.push(BatteryEvent {
                    t,
                    level_before,
                    arrived,
                    level_after,
                    overflow: (level_after - e_max).max(0.0),
                    shortfall: (-level_before).max(0.0),
                });
            }
        }
        BatteryMode::Clipping => {
            let mut level = 0.0;
            let mut prev_t = 0.0;
            let mut k = 0;
            for &t in &times {
                let demand = policy.energy_spent_by(t) - policy.energy_spent_by(prev_t);
                let shortfall = (demand - level).max(0.0);
                let level_before = (level - demand).max(0.0);
                let mut arrived = 0.0;
                while k < arrivals.len() && arrivals[k].t <= t {
                    if arrivals[k].t == t {
                        arrived += arrivals[k].e;
                    }
                    k += 1;
                }
                let raw_after = level_before + arrived;
                let level_after = raw_after.min(e_max);
                events.push(BatteryEvent {
                    t,
                    level_before,
                    arrived,
                    level_after,
                    overflow: raw_after - level_after,
                    shortfall,
                });
                level = level_after;
                prev_t = t;
            }
        }
    }

    BatteryTrajectory {
        mode,
        e_max,
        events,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Deficit,
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Feasibility {
    Ok,
    Violated(Violation),
}

impl Feasibility {
    pub fn is_ok(&self) -> bool {
        matches!(self, Feasibility::Ok)
    }

    pub fn violation(&self) -> Option<Violation> {
        match self {
            Feasibility::Ok => None,
            Feasibility::Violated(v) => Some(*v),
        }
    }
}

/// Strict-mode check of `0 <= harvested - spent <= e_max` at every event,
/// with slack `tol * total harvest`. A deficit is reported ahead of an
/// overflow at the same instant.
pub fn is_feasible(scenario: &HarvestScenario, policy: &PowerPolicy, tol: f64) -> Feasibility {
    let slack = tol * scenario.energy_through(policy.horizon);
    let trajectory = battery_trajectory(scenario, policy, BatteryMode::Strict);
    for ev in &trajectory.events {
        if ev.level_before < -slack {
            return Feasibility::Violated(Violation {
                kind: ViolationKind::Deficit,
                t: ev.t,
                magnitude: -ev.level_before,
            });
        }
        if ev.level_after > scenario.e_max() + slack {
            return Feasibility::Violated(Violation {
                kind: ViolationKind::Overflow,
                t: ev.t,
                magnitude: ev.level_after - scenario.e_max(),
            });
        }
    }
    Feasibility::Ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Segment;
    use crate::scenario::Arrival;

    fn reference() -> HarvestScenario {
        HarvestScenario::from_pairs(
            10.0,
            &[0.0, 2.0, 4.0, 5.0, 7.0, 11.0],
            &[2.0, 1.0, 6.0, 4.0, 8.0, 1.0],
        )
        .unwrap()
    }

    fn optimal() -> PowerPolicy {
        PowerPolicy::new(
            12.0,
            vec![
                Segment::new(4.0, 0.75),
                Segment::new(7.0, 8.0 / 3.0),
                Segment::new(12.0, 2.2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn reference_schedule_trajectory() {
        let traj = battery_trajectory(&reference(), &optimal(), BatteryMode::Strict);
        let at = |t: f64| *traj.event_at(t).unwrap();
        assert!(at(4.0).level_before.abs() < 1e-12);
        assert!((at(7.0).level_before - 2.0).abs() < 1e-12);
        assert!((at(7.0).level_after - 10.0).abs() < 1e-12);
        assert!(at(12.0).level_before.abs() < 1e-12);
        assert_eq!(traj.total_overflow(), 0.0);
        assert!(is_feasible(&reference(), &optimal(), FEASIBILITY_TOL).is_ok());
    }

    #[test]
    fn idle_schedule_overflows_at_five() {
        let idle = PowerPolicy::idle(12.0);
        let traj = battery_trajectory(&reference(), &idle, BatteryMode::Strict);
        let first = traj.events.iter().find(|e| e.overflow > 0.0).unwrap();
        assert_eq!(first.t, 5.0);
        assert_eq!(first.level_before, 9.0);
        assert_eq!(first.arrived, 4.0);
        assert_eq!(first.overflow, 3.0);

        let v = is_feasible(&reference(), &idle, FEASIBILITY_TOL)
            .violation()
            .unwrap();
        assert_eq!(v.kind, ViolationKind::Overflow);
        assert_eq!(v.t, 5.0);
    }

    #[test]
    fn aggressive_schedule_runs_dry_at_two() {
        let p = PowerPolicy::constant(12.0, 3.0).unwrap();
        let v = is_feasible(&reference(), &p, FEASIBILITY_TOL)
            .violation()
            .unwrap();
        assert_eq!(v.kind, ViolationKind::Deficit);
        assert_eq!(v.t, 2.0);
        assert_eq!(v.magnitude, 4.0);
    }

    #[test]
    fn linear_drain_of_single_packet() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0], &[4.0]).unwrap();
        let p = PowerPolicy::constant(4.0, 1.0).unwrap();
        let traj = battery_trajectory(&s, &p, BatteryMode::Clipping);
        assert_eq!(traj.events[0].level_after, 4.0);
        assert_eq!(traj.final_level(), 0.0);
        assert_eq!(traj.total_overflow(), 0.0);
        assert_eq!(traj.total_shortfall(), 0.0);
    }

    #[test]
    fn clipping_discards_excess_and_floors_at_zero() {
        let idle = PowerPolicy::idle(12.0);
        let traj = battery_trajectory(&reference(), &idle, BatteryMode::Clipping);
        // 2, 3, 9, 13 -> 10 (3 lost), 18 -> 10 (8 lost), 11 -> 10 (1 lost)
        assert_eq!(traj.total_overflow(), 12.0);
        assert_eq!(traj.final_level(), 10.0);
        for ev in &traj.events {
            assert!(ev.level_after <= 10.0 && ev.level_before >= 0.0);
        }

        let greedy = PowerPolicy::constant(12.0, 3.0).unwrap();
        let traj = battery_trajectory(&reference(), &greedy, BatteryMode::Clipping);
        assert!(traj.total_shortfall() > 0.0);
        assert!(traj.events.iter().all(|e| e.level_before >= 0.0));
    }

    #[test]
    fn deficit_reported_before_overflow_at_same_instant() {
        // drained to -1 by t=1, then an untruncated 12-unit packet lands
        let s = HarvestScenario::new(10.0, vec![Arrival::new(1.0, 12.0)]);
        let p = PowerPolicy::new(2.0, vec![Segment::new(1.0, 1.0)]).unwrap();
        let v = is_feasible(&s, &p, FEASIBILITY_TOL).violation().unwrap();
        assert_eq!(v.kind, ViolationKind::Deficit);
        assert_eq!(v.t, 1.0);
    }
}
