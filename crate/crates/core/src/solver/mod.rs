//! Optimal offline schedules.
//!
//! Both solvers grow the schedule one constant-power segment at a time. For
//! the current subproblem (initial battery `E0` at relative time 0, later
//! packets, an end instant), each packet `n` before the end defines the range
//! of constant powers that neither run dry just before it nor overflow just
//! after it:
//!
//! ```text
//! p_hi[n] = (E0 + ... + E_{n-1}) / s_n          empty at s_n-
//! p_lo[n] = (E0 + ... + E_n - e_max) / s_n      full at s_n+
//! ```
//!
//! The end instant contributes the singleton `{total energy / end}`. The
//! longest constant run from the origin is bounded by the first index where
//! the running intersection of these ranges becomes empty. Which side the
//! offending range falls on decides whether the first segment ends on an
//! empty battery (next power is higher) or a full one (next power is lower).
//! After committing the segment the problem restarts at its end.

mod max_throughput;
mod min_time;

pub use max_throughput::{solve_max_throughput, solve_max_throughput_traced};
pub use min_time::{solve_min_time, solve_min_time_traced, virtual_deadline, MinTimeSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Arrival, HarvestScenario};

/// Relative tolerance of interval comparisons. Each range is widened by this
/// fraction of the subproblem's energy divided by the range's time, so
/// "touching" ranges overlap and every accepted corner is met to within a
/// fixed energy slack.
pub const INTERVAL_TOL: f64 = 1e-9;

/// Range of constant powers that are energy-feasible at one arrival, ignoring
/// every other arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleInterval {
    /// 1-based arrival index; the end marker carries the last index.
    pub index: usize,
    /// Arrival instant, relative to the subproblem origin.
    pub time: f64,
    /// Power that fills the battery exactly at `time+`. May be negative.
    pub p_lo: f64,
    /// Power that empties the battery exactly at `time-`.
    pub p_hi: f64,
    /// Comparison slack in power units.
    pub slack: f64,
    /// The end-of-transmission marker, whose range is a single point.
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// The first unreachable range lies above: the run ends on an empty battery.
    Above,
    /// The first unreachable range lies below: the run ends on a full battery.
    Below,
    /// A constant run to the end is feasible.
    Terminal,
}

/// Outcome of one segment-selection round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentDecision {
    pub branch: Branch,
    pub power: f64,
    /// End of the segment relative to the subproblem origin.
    pub until: f64,
    /// Last index whose range still intersects all earlier ones.
    pub n_ub: usize,
    /// Index of the arrival where the segment ends (the end marker when terminal).
    pub n_1: usize,
}

impl SegmentDecision {
    pub fn is_terminal(&self) -> bool {
        self.branch == Branch::Terminal
    }
}

/// Ranges for the packets in `later` (times relative to the origin, all
/// strictly between 0 and `end`) followed by the end marker.
pub(crate) fn interval_iter<'a>(
    e_max: f64,
    initial: f64,
    later: &'a [Arrival],
    origin: f64,
    end: f64,
) -> impl Iterator<Item = FeasibleInterval> + 'a {
    let total = initial + later.iter().map(|a| a.e).sum::<f64>();
    let energy_slack = INTERVAL_TOL * total;
    let mut before = initial;
    let arrivals = later.iter().enumerate().map(move |(k, a)| {
        let s = a.t - origin;
        let through = before + a.e;
        let iv = FeasibleInterval {
            index: k + 1,
            time: s,
            p_lo: (through - e_max) / s,
            p_hi: before / s,
            slack: energy_slack / s,
            terminal: false,
        };
        before = through;
        iv
    });
    let marker = FeasibleInterval {
        index: later.len() + 1,
        time: end,
        p_lo: total / end,
        p_hi: total / end,
        slack: energy_slack / end,
        terminal: true,
    };
    arrivals.chain(std::iter::once(marker))
}

/// Feasible power ranges of a scenario with the given deadline. Packets at
/// `t = 0` form the initial battery; packets at or after the deadline are
/// unusable and excluded. The last entry is the deadline marker.
pub fn feasible_intervals(
    scenario: &HarvestScenario,
    deadline: f64,
) -> Result<Vec<FeasibleInterval>> {
    if !(deadline.is_finite() && deadline > 0.0) {
        return Err(Error::InvalidDeadline(deadline));
    }
    let scenario = scenario.normalize()?;
    let later: Vec<Arrival> = scenario
        .arrivals()
        .iter()
        .copied()
        .filter(|a| a.t > 0.0 && a.t < deadline)
        .collect();
    Ok(interval_iter(
        scenario.e_max(),
        scenario.initial_energy(),
        &later,
        0.0,
        deadline,
    )
    .collect())
}

/// Picks the first constant-power segment from ranges in index order. Only
/// consumes the iterator up to the first range that breaks the intersection.
pub fn first_segment<I>(intervals: I) -> Result<SegmentDecision>
where
    I: IntoIterator<Item = FeasibleInterval>,
{
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut n_ub = 0;
    // last index whose empty-battery / full-battery power lies in the
    // running intersection through that index
    let mut empty_end: Option<FeasibleInterval> = None;
    let mut full_end: Option<FeasibleInterval> = None;

    for iv in intervals {
        let (iv_lo, iv_hi) = (iv.p_lo - iv.slack, iv.p_hi + iv.slack);
        let next_lo = lo.max(iv_lo);
        let next_hi = hi.min(iv_hi);

        if next_lo <= next_hi {
            if iv.terminal {
                return Ok(SegmentDecision {
                    branch: Branch::Terminal,
                    power: iv.p_hi.max(0.0),
                    until: iv.time,
                    n_ub: iv.index,
                    n_1: iv.index,
                });
            }
            lo = next_lo;
            hi = next_hi;
            n_ub = iv.index;
            if (lo..=hi).contains(&iv.p_hi) {
                empty_end = Some(iv);
            }
            if (lo..=hi).contains(&iv.p_lo) {
                full_end = Some(iv);
            }
            continue;
        }

        let (branch, end) = if iv_lo > hi {
            (Branch::Above, empty_end)
        } else if iv_hi < lo {
            (Branch::Below, full_end)
        } else {
            return Err(Error::invariant(format!(
                "range {} [{}, {}] neither above nor below intersection [{lo}, {hi}]",
                iv.index, iv.p_lo, iv.p_hi
            )));
        };
        let end = end.ok_or_else(|| {
            Error::invariant(format!(
                "no admissible segment end before range {}",
                iv.index
            ))
        })?;
        let power = match branch {
            Branch::Above => end.p_hi,
            _ => end.p_lo,
        };
        if power < -end.slack {
            return Err(Error::invariant(format!(
                "negative first-segment power {power} at index {}",
                end.index
            )));
        }
        return Ok(SegmentDecision {
            branch,
            power: power.max(0.0),
            until: end.time,
            n_ub,
            n_1: end.index,
        });
    }

    Err(Error::invariant("interval list has no end marker"))
}

/// Battery level right after a committed step: energy harvested through the
/// step end (inclusive) minus energy spent. Checked against `[0, e_max]` up
/// to the interval slack, then clamped.
pub(crate) fn carried_energy(
    e_max: f64,
    harvested_through: f64,
    spent: f64,
    scale: f64,
) -> Result<f64> {
    let level = harvested_through - spent;
    let slack = 10.0 * INTERVAL_TOL * scale.max(e_max);
    if level < -slack || level > e_max + slack {
        return Err(Error::invariant(format!(
            "carried battery level {level} outside [0, {e_max}]"
        )));
    }
    Ok(level.clamp(0.0, e_max))
}

/// The residual problem after committing a step: the battery level at the
/// step end becomes the packet at `t = 0` and later packets move earlier by
/// the step length. The caller shortens its deadline by `decision.until`.
pub fn shift_problem(
    scenario: &HarvestScenario,
    decision: &SegmentDecision,
) -> Result<HarvestScenario> {
    if decision.is_terminal() {
        return Err(Error::invariant("cannot shift past a terminal segment"));
    }
    let scenario = scenario.normalize()?;
    let cut = decision.until;
    if !scenario.arrivals().iter().any(|a| a.t == cut) {
        return Err(Error::invariant(format!(
            "step end {cut} is not an arrival instant"
        )));
    }
    let harvested = scenario.energy_through(cut);
    let carried = carried_energy(
        scenario.e_max(),
        harvested,
        cut * decision.power,
        scenario.total_energy(),
    )?;
    let arrivals = std::iter::once(Arrival::new(0.0, carried))
        .chain(
            scenario
                .arrivals()
                .iter()
                .filter(|a| a.t > cut)
                .map(|a| Arrival::new(a.t - cut, a.e)),
        )
        .collect();
    HarvestScenario::new(scenario.e_max(), arrivals).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> HarvestScenario {
        HarvestScenario::from_pairs(
            10.0,
            &[0.0, 2.0, 4.0, 5.0, 7.0, 11.0],
            &[2.0, 1.0, 6.0, 4.0, 8.0, 1.0],
        )
        .unwrap()
    }

    fn ranges(ivs: &[FeasibleInterval]) -> Vec<(f64, f64)> {
        ivs.iter().map(|iv| (iv.p_lo, iv.p_hi)).collect()
    }

    fn assert_ranges(actual: &[(f64, f64)], expected: &[(f64, f64)]) {
        assert_eq!(actual.len(), expected.len(), "{actual:?}");
        for (a, e) in actual.iter().zip(expected) {
            assert!(
                (a.0 - e.0).abs() < 1e-12 && (a.1 - e.1).abs() < 1e-12,
                "{a:?} vs {e:?}"
            );
        }
    }

    #[test]
    fn reference_ranges() {
        // frozen from exact rational evaluation
        let ivs = feasible_intervals(&reference(), 12.0).unwrap();
        assert_ranges(
            &ranges(&ivs),
            &[
                (-3.5, 1.0),
                (-0.25, 0.75),
                (0.6, 1.8),
                (11.0 / 7.0, 13.0 / 7.0),
                (12.0 / 11.0, 21.0 / 11.0),
                (22.0 / 12.0, 22.0 / 12.0),
            ],
        );
        assert!(ivs.last().unwrap().terminal);
        assert!(ivs.iter().all(|iv| iv.p_lo <= iv.p_hi));
    }

    #[test]
    fn single_packet_has_only_marker() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0], &[6.0]).unwrap();
        let ivs = feasible_intervals(&s, 3.0).unwrap();
        assert_eq!(ivs.len(), 1);
        assert_eq!((ivs[0].p_lo, ivs[0].p_hi), (2.0, 2.0));
    }

    #[test]
    fn packets_at_or_after_deadline_ignored() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0, 3.0, 4.0], &[6.0, 5.0, 5.0]).unwrap();
        let ivs = feasible_intervals(&s, 3.0).unwrap();
        assert_eq!(ivs.len(), 1);
        assert_eq!(ivs[0].p_hi, 2.0);
    }

    #[test]
    fn bad_deadline_rejected() {
        for t in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                feasible_intervals(&reference(), t),
                Err(Error::InvalidDeadline(_))
            ));
        }
    }

    #[test]
    fn reference_first_round() {
        let d = first_segment(feasible_intervals(&reference(), 12.0).unwrap()).unwrap();
        assert_eq!(d.n_ub, 3);
        assert_eq!(d.branch, Branch::Above);
        assert_eq!(d.n_1, 2);
        assert_eq!(d.power, 0.75);
        assert_eq!(d.until, 4.0);
    }

    #[test]
    fn reference_second_and_third_rounds() {
        let first = first_segment(feasible_intervals(&reference(), 12.0).unwrap()).unwrap();
        let shifted = shift_problem(&reference(), &first).unwrap();
        let pairs: Vec<(f64, f64)> = shifted.arrivals().iter().map(|a| (a.t, a.e)).collect();
        assert_eq!(pairs, vec![(0.0, 6.0), (1.0, 4.0), (3.0, 8.0), (7.0, 1.0)]);

        let ivs = feasible_intervals(&shifted, 8.0).unwrap();
        assert_ranges(
            &ranges(&ivs[..3]),
            &[(0.0, 6.0), (8.0 / 3.0, 10.0 / 3.0), (9.0 / 7.0, 18.0 / 7.0)],
        );
        let second = first_segment(ivs).unwrap();
        assert_eq!(second.branch, Branch::Below);
        assert!((second.power - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(second.until, 3.0);

        let shifted = shift_problem(&shifted, &second).unwrap();
        let pairs: Vec<(f64, f64)> = shifted.arrivals().iter().map(|a| (a.t, a.e)).collect();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].1 - 10.0).abs() < 1e-12);
        assert_eq!(pairs[1], (4.0, 1.0));

        let third = first_segment(feasible_intervals(&shifted, 5.0).unwrap()).unwrap();
        assert!(third.is_terminal());
        assert!((third.power - 2.2).abs() < 1e-12);
    }

    #[test]
    fn touching_ranges_extend_the_run() {
        // constant power 2 empties the battery exactly at t = 1-
        let s = HarvestScenario::from_pairs(10.0, &[0.0, 1.0], &[2.0, 2.0]).unwrap();
        let ivs = feasible_intervals(&s, 2.0).unwrap();
        assert_ranges(&ranges(&ivs), &[(-6.0, 2.0), (2.0, 2.0)]);
        let d = first_segment(ivs).unwrap();
        assert!(d.is_terminal());
        assert_eq!(d.power, 2.0);
    }

    #[test]
    fn depleting_step_shifts_to_empty_battery() {
        // nothing at t = 0 besides an empty battery
        let s = HarvestScenario::from_pairs(10.0, &[1.0], &[4.0]).unwrap();
        let d = first_segment(feasible_intervals(&s, 3.0).unwrap()).unwrap();
        assert_eq!(d.branch, Branch::Above);
        assert_eq!((d.power, d.until), (0.0, 1.0));
        let shifted = shift_problem(&s, &d).unwrap();
        assert_eq!(shifted.arrivals(), &[Arrival::new(0.0, 4.0)]);

        // a step that uses every harvested unit leaves E0' = 0 legally
        let s = HarvestScenario::from_pairs(10.0, &[0.0, 2.0], &[2.0, 1.0]).unwrap();
        let d = SegmentDecision {
            branch: Branch::Above,
            power: 1.5,
            until: 2.0,
            n_ub: 1,
            n_1: 1,
        };
        let shifted = shift_problem(&s, &d).unwrap();
        assert_eq!(shifted.arrivals(), &[Arrival::new(0.0, 0.0)]);
    }

    #[test]
    fn shift_rejects_impossible_carry() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0, 2.0], &[2.0, 1.0]).unwrap();
        let d = SegmentDecision {
            branch: Branch::Above,
            power: 5.0,
            until: 2.0,
            n_ub: 1,
            n_1: 1,
        };
        assert!(matches!(
            shift_problem(&s, &d),
            Err(Error::AlgorithmInvariantViolated(_))
        ));
    }

    #[test]
    fn missing_marker_is_a_defect() {
        let iv = FeasibleInterval {
            index: 1,
            time: 1.0,
            p_lo: 0.0,
            p_hi: 1.0,
            slack: 0.0,
            terminal: false,
        };
        assert!(matches!(
            first_segment([iv]),
            Err(Error::AlgorithmInvariantViolated(_))
        ));
    }
}
