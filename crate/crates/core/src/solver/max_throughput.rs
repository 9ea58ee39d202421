use super::{carried_energy, first_segment, interval_iter};
use crate::error::{Error, Result};
use crate::policy::{PowerPolicy, Segment};
use crate::scenario::HarvestScenario;

/// Maximum-throughput schedule on `[0, deadline]`.
///
/// Purely geometric: the result depends on energies and times only, never on
/// the rate function, as long as that function is strictly concave.
pub fn solve_max_throughput(scenario: &HarvestScenario, deadline: f64) -> Result<PowerPolicy> {
    solve_max_throughput_traced(scenario, deadline).map(|(policy, _)| policy)
}

/// Like [`solve_max_throughput`], also returning the decision taken in each
/// round (times relative to that round's origin).
pub fn solve_max_throughput_traced(
    scenario: &HarvestScenario,
    deadline: f64,
) -> Result<(PowerPolicy, Vec<super::SegmentDecision>)> {
    if !(deadline.is_finite() && deadline > 0.0) {
        return Err(Error::InvalidDeadline(deadline));
    }
    let scenario = scenario.normalize()?;
    let e_max = scenario.e_max();
    let usable: Vec<_> = scenario
        .arrivals()
        .iter()
        .copied()
        .filter(|a| a.t > 0.0 && a.t < deadline)
        .collect();
    let scale = scenario.energy_before(deadline);

    let mut initial = scenario.initial_energy();
    let mut origin = 0.0;
    let mut rest = &usable[..];
    let mut segments = Vec::new();
    let mut trace = Vec::new();

    for _ in 0..=usable.len() {
        let decision = first_segment(interval_iter(
            e_max,
            initial,
            rest,
            origin,
            deadline - origin,
        ))?;
        trace.push(decision);
        if decision.is_terminal() {
            segments.push(Segment::new(deadline, decision.power));
            let policy = PowerPolicy::new(deadline, segments)?;
            return Ok((policy, trace));
        }

        let (step, tail) = rest.split_at(decision.n_1);
        let end = step[step.len() - 1].t;
        let harvested = initial + step.iter().map(|a| a.e).sum::<f64>();
        initial = carried_energy(e_max, harvested, decision.power * (end - origin), scale)?;
        segments.push(Segment::new(end, decision.power));
        origin = end;
        rest = tail;
    }

    Err(Error::invariant(format!(
        "no terminal segment after {} rounds",
        usable.len() + 1
    )))
}
