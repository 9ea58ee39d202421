//! Reference schedules the optimum is compared against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::policy::{PowerPolicy, Segment};
use crate::rate::RateFunction;
use crate::scenario::HarvestScenario;

/// How the on-off baseline picks its transmit level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OnOffLevel {
    /// Harvested energy before the deadline divided by the deadline.
    Realized,
    /// Mean packet energy over mean inter-arrival time.
    Expected { mean_energy: f64, mean_gap: f64 },
}

/// Greedy baseline: transmit at the average harvest rate while the battery
/// holds energy, stay silent while it is empty. Excess harvest is lost.
pub fn on_off_policy(scenario: &HarvestScenario, deadline: f64) -> Result<PowerPolicy> {
    on_off_policy_with(scenario, deadline, OnOffLevel::Realized)
}

pub fn on_off_policy_with(
    scenario: &HarvestScenario,
    deadline: f64,
    level: OnOffLevel,
) -> Result<PowerPolicy> {
    if !(deadline.is_finite() && deadline > 0.0) {
        return Err(Error::InvalidDeadline(deadline));
    }
    let scenario = scenario.normalize()?;
    let usable: Vec<_> = scenario
        .arrivals()
        .iter()
        .copied()
        .filter(|a| a.t < deadline)
        .collect();
    let p_on = match level {
        OnOffLevel::Realized => usable.iter().map(|a| a.e).sum::<f64>() / deadline,
        OnOffLevel::Expected {
            mean_energy,
            mean_gap,
        } => mean_energy / mean_gap,
    };
    if !(p_on.is_finite() && p_on > 0.0) {
        return Ok(PowerPolicy::idle(deadline));
    }

    let e_max = scenario.e_max();
    let mut battery = 0.0f64;
    let mut segments: Vec<Segment> = Vec::new();
    let mut push = |until: f64, power: f64| match segments.last_mut() {
        Some(last) if last.power == power => last.until = until,
        Some(last) if until <= last.until => {}
        _ => segments.push(Segment::new(until, power)),
    };

    for (k, a) in usable.iter().enumerate() {
        battery = (battery + a.e).min(e_max);
        let next = usable.get(k + 1).map_or(deadline, |b| b.t);
        let empty_at = a.t + battery / p_on;
        if empty_at < next {
            if empty_at > a.t {
                push(empty_at, p_on);
            }
            push(next, 0.0);
            battery = 0.0;
        } else {
            push(next, p_on);
            battery = (battery - p_on * (next - a.t)).max(0.0);
        }
    }

    PowerPolicy::new(deadline, segments).map(|p| p.trimmed())
}

/// Bits of a transmitter with no battery limit and all energy available at
/// `t = 0`: `T * r(E / T)` with `E` the untruncated harvest before `T`.
pub fn unconstrained_bound(
    raw: &HarvestScenario,
    deadline: f64,
    rate: &dyn RateFunction,
) -> Result<f64> {
    Ok(unconstrained_policy(raw, deadline)?.throughput(rate))
}

/// The constant schedule achieving [`unconstrained_bound`]. Generally not
/// energy-feasible.
pub fn unconstrained_policy(raw: &HarvestScenario, deadline: f64) -> Result<PowerPolicy> {
    if !(deadline.is_finite() && deadline > 0.0) {
        return Err(Error::InvalidDeadline(deadline));
    }
    // validation only; the truncated copy is not used
    raw.normalize()?;
    let energy = raw.energy_before(deadline);
    PowerPolicy::constant(deadline, energy / deadline)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub id: String,
    pub bits_optimal: f64,
    pub bits_onoff: f64,
    pub bits_unconstrained: f64,
}

impl ComparisonRow {
    /// Fraction of the unconstrained bound lost by the optimal schedule.
    pub fn loss_optimal(&self) -> f64 {
        loss(self.bits_optimal, self.bits_unconstrained)
    }

    pub fn loss_onoff(&self) -> f64 {
        loss(self.bits_onoff, self.bits_unconstrained)
    }

    /// Relative gain of the optimum over on-off.
    pub fn gain_over_onoff(&self) -> f64 {
        if self.bits_optimal > 0.0 {
            (self.bits_optimal - self.bits_onoff) / self.bits_optimal
        } else {
            0.0
        }
    }

    /// `onoff <= optimal <= unconstrained`, each comparison with relative slack `tol`.
    pub fn is_ordered(&self, tol: f64) -> bool {
        let slack = tol * self.bits_unconstrained.abs().max(1.0);
        self.bits_onoff <= self.bits_optimal + slack
            && self.bits_optimal <= self.bits_unconstrained + slack
    }

    pub fn mean(id: impl Into<String>, rows: &[ComparisonRow]) -> ComparisonRow {
        let n = rows.len().max(1) as f64;
        ComparisonRow {
            id: id.into(),
            bits_optimal: rows.iter().map(|r| r.bits_optimal).sum::<f64>() / n,
            bits_onoff: rows.iter().map(|r| r.bits_onoff).sum::<f64>() / n,
            bits_unconstrained: rows.iter().map(|r| r.bits_unconstrained).sum::<f64>() / n,
        }
    }
}

fn loss(bits: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        1.0 - bits / bound
    } else {
        0.0
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("id,bits_opt,bits_onoff,bits_unc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id,
            fmt_num(r.bits_optimal),
            fmt_num(r.bits_onoff),
            fmt_num(r.bits_unconstrained)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::{battery_trajectory, BatteryMode};
    use crate::rate::Awgn;
    use crate::scenario::Arrival;
    use crate::solver::solve_max_throughput;

    fn reference() -> HarvestScenario {
        HarvestScenario::from_pairs(
            10.0,
            &[0.0, 2.0, 4.0, 5.0, 7.0, 11.0],
            &[2.0, 1.0, 6.0, 4.0, 8.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn on_off_two_epochs() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0, 4.0], &[2.0, 8.0]).unwrap();
        let p = on_off_policy(&s, 5.0).unwrap();
        assert_eq!(
            p.segments,
            vec![
                Segment::new(1.0, 2.0),
                Segment::new(4.0, 0.0),
                Segment::new(5.0, 2.0)
            ]
        );
        assert_eq!(p.total_energy(), 4.0);
        assert!((p.throughput(&Awgn) - 1.584962500721).abs() < 1e-11);
        let opt = solve_max_throughput(&s, 5.0).unwrap().throughput(&Awgn);
        assert!((opt - 2.754887502163).abs() < 1e-11);
    }

    #[test]
    fn on_off_single_packet_depletes_at_deadline() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0], &[10.0]).unwrap();
        let p = on_off_policy(&s, 10.0).unwrap();
        assert_eq!(p.segments, vec![Segment::new(10.0, 1.0)]);
        let traj = battery_trajectory(&s, &p, BatteryMode::Clipping);
        assert_eq!(traj.final_level(), 0.0);
    }

    #[test]
    fn on_off_is_clipping_feasible() {
        let p = on_off_policy(&reference(), 12.0).unwrap();
        let traj = battery_trajectory(&reference(), &p, BatteryMode::Clipping);
        assert!(traj.total_shortfall() < 1e-12);
        assert!(p.total_energy() <= reference().total_energy() + 1e-12);
    }

    #[test]
    fn expected_level_mode() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0, 4.0], &[2.0, 8.0]).unwrap();
        let level = OnOffLevel::Expected {
            mean_energy: 5.0,
            mean_gap: 4.0,
        };
        let p = on_off_policy_with(&s, 5.0, level).unwrap();
        assert_eq!(p.segments[0], Segment::new(1.6, 1.25));
    }

    #[test]
    fn unconstrained_reference_bound() {
        let b = unconstrained_bound(&reference(), 12.0, &Awgn).unwrap();
        assert!((b - 6.0 * (34.0f64 / 12.0).log2()).abs() < 1e-12);
        assert!((b - 9.015002043175).abs() < 1e-11);
        let opt = solve_max_throughput(&reference(), 12.0)
            .unwrap()
            .throughput(&Awgn);
        assert!(opt < b);
    }

    #[test]
    fn unconstrained_uses_untruncated_energy() {
        let raw = HarvestScenario::new(10.0, vec![Arrival::new(0.0, 30.0)]);
        let b = unconstrained_bound(&raw, 10.0, &Awgn).unwrap();
        assert!((b - 10.0 * Awgn.eval(3.0)).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_trivial_cases() {
        let empty = HarvestScenario::new(10.0, vec![]);
        assert_eq!(unconstrained_bound(&empty, 5.0, &Awgn).unwrap(), 0.0);
        let single = HarvestScenario::from_pairs(10.0, &[0.0], &[6.0]).unwrap();
        let opt = solve_max_throughput(&single, 3.0)
            .unwrap()
            .throughput(&Awgn);
        assert_eq!(unconstrained_bound(&single, 3.0, &Awgn).unwrap(), opt);
    }

    #[test]
    fn comparison_rows() {
        let row = ComparisonRow {
            id: "0".into(),
            bits_optimal: 8.0,
            bits_onoff: 6.0,
            bits_unconstrained: 10.0,
        };
        assert!(row.is_ordered(1e-9));
        assert!((row.loss_optimal() - 0.2).abs() < 1e-12);
        assert!((row.gain_over_onoff() - 0.25).abs() < 1e-12);
        let csv = comparison_csv(&[row]);
        assert_eq!(csv, "id,bits_opt,bits_onoff,bits_unc\n0,8,6,10\n");
    }
}
