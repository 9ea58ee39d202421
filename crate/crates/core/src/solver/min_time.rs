use super::{carried_energy, first_segment, interval_iter, SegmentDecision};
use crate::error::{Error, Result};
use crate::policy::{PowerPolicy, Segment};
use crate::rate::RateFunction;
use crate::scenario::{Arrival, HarvestScenario};

/// Relative bisection tolerance on the virtual deadline.
pub const VIRTUAL_DEADLINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MinTimeSolution {
    pub policy: PowerPolicy,
    pub completion_time: f64,
}

/// Earliest candidate end for a single constant-power run.
///
/// Within the epoch after the `count`-th later packet, `f(s) = s * r(A / s)`
/// with `A` the energy harvested so far is strictly increasing, so the first
/// epoch whose right end reaches `bits` contains the root. Returns the root
/// (relative to `origin`) and the number of later packets inside it.
fn virtual_end(
    initial: f64,
    later: &[Arrival],
    origin: f64,
    bits: f64,
    rate: &dyn RateFunction,
) -> Result<(f64, usize)> {
    let reach = |s: f64, energy: f64| s * rate.eval(energy / s);
    let total = initial + later.iter().map(|a| a.e).sum::<f64>();
    let bound = rate.derivative_at_zero() * total;
    if bits >= bound {
        return Err(Error::UnreachableBitTarget {
            target: bits,
            bound,
        });
    }

    let mut energy = initial;
    let mut start = 0.0;
    for count in 0..=later.len() {
        if count > 0 {
            energy += later[count - 1].e;
            start = later[count - 1].t - origin;
        }
        let end = later.get(count).map(|a| a.t - origin);
        if energy <= 0.0 {
            continue;
        }
        let admissible = match end {
            Some(end) => reach(end, energy) >= bits,
            None => rate.derivative_at_zero() * energy > bits,
        };
        if !admissible {
            continue;
        }
        if start > 0.0 && reach(start, energy) >= bits {
            return Ok((start, count));
        }

        let mut lo = start;
        let mut hi = match end {
            Some(end) => end,
            None => {
                let mut hi = start.max(1.0);
                while reach(hi, energy) < bits {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return Err(Error::invariant("virtual deadline bracket overflowed"));
                    }
                }
                hi
            }
        };
        for _ in 0..400 {
            if hi - lo <= VIRTUAL_DEADLINE_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if reach(mid, energy) < bits {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok((hi, count));
    }
    Err(Error::UnreachableBitTarget {
        target: bits,
        bound,
    })
}

/// Earliest time at which a constant-power run spending everything harvested
/// before it departs `bits`. Ignores the battery, so it lower-bounds the
/// minimum completion time.
pub fn virtual_deadline(
    scenario: &HarvestScenario,
    bits: f64,
    rate: &dyn RateFunction,
) -> Result<f64> {
    if !(bits.is_finite() && bits > 0.0) {
        return Err(Error::InvalidBitTarget(bits));
    }
    let scenario = scenario.normalize()?;
    let later: Vec<Arrival> = scenario
        .arrivals()
        .iter()
        .copied()
        .filter(|a| a.t > 0.0)
        .collect();
    virtual_end(scenario.initial_energy(), &later, 0.0, bits, rate).map(|(s, _)| s)
}

/// Minimum-completion-time schedule departing exactly `bits`.
pub fn solve_min_time(
    scenario: &HarvestScenario,
    bits: f64,
    rate: &dyn RateFunction,
) -> Result<MinTimeSolution> {
    solve_min_time_traced(scenario, bits, rate).map(|(solution, _)| solution)
}

pub fn solve_min_time_traced(
    scenario: &HarvestScenario,
    bits: f64,
    rate: &dyn RateFunction,
) -> Result<(MinTimeSolution, Vec<SegmentDecision>)> {
    if !(bits.is_finite() && bits >= 0.0) {
        return Err(Error::InvalidBitTarget(bits));
    }
    let scenario = scenario.normalize()?;
    if bits == 0.0 {
        let solution = MinTimeSolution {
            policy: PowerPolicy::idle(0.0),
            completion_time: 0.0,
        };
        return Ok((solution, Vec::new()));
    }

    let e_max = scenario.e_max();
    let later: Vec<Arrival> = scenario
        .arrivals()
        .iter()
        .copied()
        .filter(|a| a.t > 0.0)
        .collect();
    let scale = scenario.total_energy();

    let mut initial = scenario.initial_energy();
    let mut origin = 0.0;
    let mut rest = &later[..];
    let mut residual = bits;
    let mut segments = Vec::new();
    let mut trace = Vec::new();

    for _ in 0..=later.len() {
        let (end, count) =
            virtual_end(initial, rest, origin, residual, rate).map_err(|e| match e {
                // after committed steps the remaining target can exceed what the
                // battery-limited tail can deliver
                Error::UnreachableBitTarget { bound, .. } => Error::UnreachableBitTarget {
                    target: bits,
                    bound: bits - residual + bound,
                },
                other => other,
            })?;
        let decision = first_segment(interval_iter(e_max, initial, &rest[..count], origin, end))?;
        trace.push(decision);

        if decision.is_terminal() {
            let completion_time = origin + end;
            segments.push(Segment::new(completion_time, decision.power));
            let policy = PowerPolicy::new(completion_time, segments)?;
            return Ok((
                MinTimeSolution {
                    policy,
                    completion_time,
                },
                trace,
            ));
        }

        let (step, tail) = rest.split_at(decision.n_1);
        let step_end = step[step.len() - 1].t;
        let length = step_end - origin;
        let harvested = initial + step.iter().map(|a| a.e).sum::<f64>();
        initial = carried_energy(e_max, harvested, decision.power * length, scale)?;
        segments.push(Segment::new(step_end, decision.power));
        residual -= length * rate.eval(decision.power);
        origin = step_end;
        rest = tail;

        if residual <= VIRTUAL_DEADLINE_TOL * bits {
            let policy = PowerPolicy::new(origin, segments)?;
            return Ok((
                MinTimeSolution {
                    policy,
                    completion_time: origin,
                },
                trace,
            ));
        }
    }

    Err(Error::invariant(format!(
        "no terminal segment after {} rounds",
        later.len() + 1
    )))
}
