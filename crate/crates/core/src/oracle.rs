//! Independent checks of solver optimality.
//!
//! Nothing here shares code with the solver's interval logic: the grid search
//! and the perturbation test only use the battery bookkeeping and the
//! throughput formula.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battery::{is_feasible, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::policy::{PowerPolicy, Segment};
use crate::rate::RateFunction;
use crate::scenario::HarvestScenario;
use crate::solver::{solve_max_throughput, solve_min_time};

/// Largest epoch count the grid search accepts.
pub const MAX_ORACLE_EPOCHS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub best_bits: f64,
    pub best_policy: PowerPolicy,
    pub solver_bits: f64,
    /// `solver_bits - best_bits`; at least `-tolerance` when the solver is optimal.
    pub gap: f64,
    pub grid_step: f64,
    /// Discretization error bound `T * r'(0) * grid_step`.
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl OracleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Epoch {
    length: f64,
    /// Packet landing at the epoch's right end, if it is not the deadline.
    next_energy: Option<f64>,
}

struct Search<'a> {
    epochs: &'a [Epoch],
    e_max: f64,
    step: f64,
    max_index: usize,
    rates: &'a [f64],
    rate: &'a dyn RateFunction,
    slack: f64,
    /// Energy arriving after each epoch start, for the Jensen bound.
    future_energy: Vec<f64>,
    remaining_time: Vec<f64>,
}

impl Search<'_> {
    /// Grid indices of powers feasible in epoch `k` starting at `level`.
    fn range(&self, k: usize, level: f64) -> Option<(usize, usize)> {
        let ep = &self.epochs[k];
        let hi = (level + self.slack) / ep.length;
        let lo = match ep.next_energy {
            Some(e) => (level + e - self.e_max - self.slack) / ep.length,
            None => 0.0,
        };
        let j_hi = ((hi / self.step).floor() as usize).min(self.max_index);
        let j_lo = (lo.max(0.0) / self.step).ceil() as usize;
        (j_lo <= j_hi).then_some((j_lo, j_hi))
    }

    /// Upper bound on the bits collectable from epoch `k` on. Each later
    /// arrival splits the remaining time in two; the energy spent before the
    /// split is limited by what has arrived and by what would overflow, and
    /// Jensen's inequality bounds each side.
    fn bound(&self, k: usize, level: f64) -> f64 {
        let total = level + self.future_energy[k];
        let span = self.remaining_time[k];
        let mut best = span * self.rate.eval(total / span);
        let (mut arrived, mut through) = (level, level);
        for m in k..self.epochs.len() - 1 {
            let e = self.epochs[m].next_energy.unwrap_or(0.0);
            through += e;
            let before = span - self.remaining_time[m + 1];
            let after = self.remaining_time[m + 1];
            let hi = arrived + self.slack;
            let lo = (through - self.e_max - self.slack).max(0.0).min(hi);
            let x = (total * before / span).clamp(lo, hi).min(total);
            let cut =
                before * self.rate.eval(x / before) + after * self.rate.eval((total - x) / after);
            best = best.min(cut);
            arrived = through;
        }
        best
    }

    /// Candidate indices in `lo..=hi`, starting at the power that spreads the
    /// remaining energy evenly and moving outward.
    fn order(&self, k: usize, level: f64, lo: usize, hi: usize) -> impl Iterator<Item = usize> {
        let even = (level + self.future_energy[k]) / self.remaining_time[k] / self.step;
        let center = (even.round().max(0.0) as usize).clamp(lo, hi);
        let up = center..=hi;
        let down = (lo..center).rev();
        let mut up = up.peekable();
        let mut down = down.peekable();
        std::iter::from_fn(move || {
            let take_up = match (up.peek(), down.peek()) {
                (Some(&u), Some(&d)) => u - center <= center - d,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => return None,
            };
            if take_up {
                up.next()
            } else {
                down.next()
            }
        })
    }

    /// Best bits from epoch `k` on that beat `incumbent`; writes the argmax into
    /// `choice[k..]`. `shared` is the best total found by any thread so far,
    /// `done` the bits already collected before epoch `k`.
    fn dfs(
        &self,
        k: usize,
        level: f64,
        done: f64,
        incumbent: f64,
        shared: &AtomicU64,
        choice: &mut [usize],
    ) -> Option<f64> {
        let bound = self.bound(k, level);
        // strict comparisons keep every branch that could tie the optimum
        let global = f64::from_bits(shared.load(Ordering::Relaxed)) - done;
        if bound < incumbent || bound < global {
            return None;
        }
        let (j_lo, j_hi) = self.range(k, level)?;
        let ep = &self.epochs[k];
        if k + 1 == self.epochs.len() {
            // nothing to save energy for: the largest feasible power wins
            choice[k] = j_hi;
            let bits = ep.length * self.rates[j_hi];
            if bits > incumbent {
                raise(shared, done + bits);
                return Some(bits);
            }
            return None;
        }

        let mut best: Option<f64> = None;
        let mut local = incumbent;
        let mut scratch = choice.to_vec();
        for j in self.order(k, level, j_lo, j_hi) {
            let here = ep.length * self.rates[j];
            let spent = j as f64 * self.step * ep.length;
            let next_level = level - spent + ep.next_energy.unwrap_or(0.0);
            if let Some(rest) = self.dfs(
                k + 1,
                next_level,
                done + here,
                local - here,
                shared,
                &mut scratch,
            ) {
                let total = here + rest;
                if total > local {
                    local = total;
                    best = Some(total);
                    choice[k] = j;
                    choice[k + 1..].copy_from_slice(&scratch[k + 1..]);
                }
            }
        }
        best
    }
}

fn raise(shared: &AtomicU64, value: f64) {
    let mut current = shared.load(Ordering::Relaxed);
    while value > f64::from_bits(current) {
        match shared.compare_exchange_weak(
            current,
            value.to_bits(),
            Ordering::Relaxed,
            Ordering::Relaxed,
        ) {
            Ok(_) => break,
            Err(seen) => current = seen,
        }
    }
}

/// Default grid ceiling: total harvest over the shortest epoch.
pub fn default_power_cap(scenario: &HarvestScenario, deadline: f64) -> f64 {
    let mut bounds: Vec<f64> = scenario
        .arrivals()
        .iter()
        .map(|a| a.t)
        .filter(|&t| t > 0.0 && t < deadline)
        .collect();
    bounds.insert(0, 0.0);
    bounds.push(deadline);
    let shortest = bounds
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    scenario.energy_before(deadline) / shortest
}

/// Exhaustive search over per-epoch constant powers on the grid
/// `{0, step, 2 step, ..., cap}`, pruned by the Jensen bound
/// `remaining time * r(remaining energy / remaining time)`.
pub fn brute_force_max_throughput(
    scenario: &HarvestScenario,
    deadline: f64,
    rate: &dyn RateFunction,
    grid_step: f64,
    power_cap: Option<f64>,
) -> Result<OracleReport> {
    if !(deadline.is_finite() && deadline > 0.0) {
        return Err(Error::InvalidDeadline(deadline));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::InvalidPolicy(format!(
            "grid step {grid_step} must be positive"
        )));
    }
    let scenario = scenario.normalize()?;

    let inner: Vec<_> = scenario
        .arrivals()
        .iter()
        .filter(|a| a.t > 0.0 && a.t < deadline)
        .collect();
    if inner.len() + 1 > MAX_ORACLE_EPOCHS {
        return Err(Error::OracleTooExpensive {
            epochs: inner.len() + 1,
            max: MAX_ORACLE_EPOCHS,
        });
    }
    let mut starts = vec![0.0];
    starts.extend(inner.iter().map(|a| a.t));
    let epochs: Vec<Epoch> = (0..starts.len())
        .map(|k| {
            let end = inner.get(k).map_or(deadline, |a| a.t);
            Epoch {
                length: end - starts[k],
                next_energy: inner.get(k).map(|a| a.e),
            }
        })
        .collect();

    let cap = power_cap.unwrap_or_else(|| default_power_cap(&scenario, deadline));
    let max_index = (cap / grid_step).floor().max(0.0) as usize;
    let rates: Vec<f64> = (0..=max_index)
        .map(|j| rate.eval(j as f64 * grid_step))
        .collect();
    let future_energy: Vec<f64> = (0..epochs.len())
        .map(|k| inner[k..].iter().map(|a| a.e).sum())
        .collect();
    let remaining_time: Vec<f64> = starts.iter().map(|s| deadline - s).collect();

    let search = Search {
        epochs: &epochs,
        e_max: scenario.e_max(),
        step: grid_step,
        max_index,
        rates: &rates,
        rate,
        // half the checker's slack so grid points on a wall stay accepted
        slack: 0.5 * FEASIBILITY_TOL * scenario.energy_before(deadline),
        future_energy,
        remaining_time,
    };

    let initial = scenario.initial_energy();
    let n = epochs.len();
    let shared = AtomicU64::new(f64::NEG_INFINITY.to_bits());
    let (best_bits, best_choice) = match search.range(0, initial) {
        None => (0.0, vec![0; n]),
        Some((j_lo, j_hi)) => {
            let first = &epochs[0];
            (j_lo..=j_hi)
                .into_par_iter()
                .filter_map(|j| {
                    let here = first.length * rates[j];
                    let mut choice = vec![0; n];
                    choice[0] = j;
                    if n == 1 {
                        return (j == j_hi).then_some((here, choice));
                    }
                    let level = initial - j as f64 * grid_step * first.length
                        + first.next_energy.unwrap_or(0.0);
                    search
                        .dfs(1, level, here, f64::NEG_INFINITY, &shared, &mut choice)
                        .map(|rest| (here + rest, choice))
                })
                // ties go to the smaller first-epoch power, independent of scheduling
                .reduce(
                    || (f64::NEG_INFINITY, vec![0; n]),
                    |a, b| {
                        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                            b
                        } else {
                            a
                        }
                    },
                )
        }
    };

    let mut segments = Vec::with_capacity(n);
    let mut t = 0.0;
    for (ep, &j) in epochs.iter().zip(&best_choice) {
        t += ep.length;
        segments.push(Segment::new(t, j as f64 * grid_step));
    }
    if let Some(last) = segments.last_mut() {
        last.until = deadline;
    }
    let best_policy = PowerPolicy::new(deadline, segments)?;
    if !is_feasible(&scenario, &best_policy, FEASIBILITY_TOL).is_ok() {
        return Err(Error::invariant(
            "grid search returned an infeasible policy",
        ));
    }
    let best_bits = best_bits.max(best_policy.throughput(rate));

    let solver_bits = solve_max_throughput(&scenario, deadline)?.throughput(rate);
    let tolerance = deadline * rate.derivative_at_zero() * grid_step;
    let gap = solver_bits - best_bits;
    Ok(OracleReport {
        best_bits,
        best_policy,
        solver_bits,
        gap,
        grid_step,
        tolerance,
        verdict: if gap >= -tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationOutcome {
    /// No improving transfer among `feasible` feasible ones out of `trials` draws.
    Pass { trials: usize, feasible: usize },
    Counterexample {
        policy: PowerPolicy,
        bits: f64,
        baseline_bits: f64,
    },
}

impl PerturbationOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, PerturbationOutcome::Pass { .. })
    }
}

/// Splits every segment at arrival instants so each piece lies in one epoch.
fn refine(scenario: &HarvestScenario, policy: &PowerPolicy) -> Vec<(f64, f64, f64)> {
    let cuts: Vec<f64> = scenario.arrivals().iter().map(|a| a.t).collect();
    let mut pieces = Vec::new();
    for (start, end, power) in policy.pieces() {
        let mut a = start;
        for &c in cuts.iter().filter(|&&c| c > start && c < end) {
            pieces.push((a, c, power));
            a = c;
        }
        pieces.push((a, end, power));
    }
    pieces
}

fn with_power_added(
    pieces: &[(f64, f64, f64)],
    horizon: f64,
    windows: [(f64, f64, f64); 2],
) -> Option<PowerPolicy> {
    let mut cuts: Vec<f64> = pieces.iter().map(|p| p.1).collect();
    for (a, b, _) in windows {
        cuts.push(a);
        cuts.push(b);
    }
    cuts.retain(|&c| c > 0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut segments = Vec::with_capacity(cuts.len());
    let mut prev = 0.0;
    for c in cuts {
        let mid = 0.5 * (prev + c);
        let mut power = pieces
            .iter()
            .find(|p| mid > p.0 && mid <= p.1)
            .map_or(0.0, |p| p.2);
        for (a, b, delta) in windows {
            if mid > a && mid < b {
                power += delta;
            }
        }
        if power < 0.0 {
            return None;
        }
        segments.push(Segment::new(c, power));
        prev = c;
    }
    PowerPolicy::new(horizon, segments).ok()
}

/// Randomized local-optimality test: moves `delta * length` energy between
/// random sub-windows of two pieces, keeps moves that stay feasible with zero
/// slack and reports the first one that increases throughput.
pub fn perturbation_check(
    scenario: &HarvestScenario,
    policy: &PowerPolicy,
    rate: &dyn RateFunction,
    delta: f64,
    trials: usize,
    seed: u64,
) -> PerturbationOutcome {
    let baseline_bits = policy.throughput(rate);
    let pieces = refine(scenario, policy);
    let mut feasible = 0;
    if pieces.len() < 2 {
        return PerturbationOutcome::Pass { trials, feasible };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let improve_tol = 1e-12 * baseline_bits.abs().max(1.0);

    for _ in 0..trials {
        let i = rng.gen_range(0..pieces.len());
        let mut j = rng.gen_range(0..pieces.len() - 1);
        if j >= i {
            j += 1;
        }
        let mut window = |k: usize| {
            let (a, b, _) = pieces[k];
            let u = a + (b - a) * rng.gen::<f64>() * 0.5;
            let v = u + (b - u) * (0.5 + 0.5 * rng.gen::<f64>());
            (u, v)
        };
        let (ua, va) = window(i);
        let (ub, vb) = window(j);
        let moved = delta * (va - ua).min(vb - ub);
        // donor i, receiver j
        let windows = [(ua, va, -moved / (va - ua)), (ub, vb, moved / (vb - ub))];
        let Some(candidate) = with_power_added(&pieces, policy.horizon, windows) else {
            continue;
        };
        if !is_feasible(scenario, &candidate, 0.0).is_ok() {
            continue;
        }
        feasible += 1;
        let bits = candidate.throughput(rate);
        if bits > baseline_bits + improve_tol {
            return PerturbationOutcome::Counterexample {
                policy: candidate,
                bits,
                baseline_bits,
            };
        }
    }
    PerturbationOutcome::Pass { trials, feasible }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub deadline: f64,
    pub bits: f64,
    pub recovered_time: f64,
    pub recovered_bits: f64,
    pub time_error: f64,
    pub bits_error: f64,
    pub policies_match: bool,
    pub pass: bool,
}

/// Deadline to bits to deadline: max-throughput bits for `deadline`, then the
/// minimum completion time for those bits, which must give back the same
/// deadline and the same schedule.
pub fn roundtrip_check(
    scenario: &HarvestScenario,
    deadline: f64,
    rate: &dyn RateFunction,
    tol: f64,
) -> Result<RoundTripReport> {
    let forward = solve_max_throughput(scenario, deadline)?;
    let bits = forward.throughput(rate);
    let back = solve_min_time(scenario, bits, rate)?;
    let recovered_bits = back.policy.throughput(rate);
    let time_error = (back.completion_time - deadline).abs() / deadline;
    let bits_error = (recovered_bits - bits).abs() / bits.abs().max(f64::MIN_POSITIVE);
    let policies_match = forward.trimmed().approx_eq(&back.policy.trimmed(), tol);
    Ok(RoundTripReport {
        deadline,
        bits,
        recovered_time: back.completion_time,
        recovered_bits,
        time_error,
        bits_error,
        policies_match,
        pass: time_error <= tol && policies_match,
    })
}

/// Bits to deadline to bits.
pub fn bits_roundtrip_check(
    scenario: &HarvestScenario,
    bits: f64,
    rate: &dyn RateFunction,
    tol: f64,
) -> Result<RoundTripReport> {
    let back = solve_min_time(scenario, bits, rate)?;
    let forward = solve_max_throughput(scenario, back.completion_time)?;
    let recovered_bits = forward.throughput(rate);
    let bits_error = (recovered_bits - bits).abs() / bits.abs().max(f64::MIN_POSITIVE);
    let policies_match = forward.trimmed().approx_eq(&back.policy.trimmed(), tol);
    Ok(RoundTripReport {
        deadline: back.completion_time,
        bits,
        recovered_time: back.completion_time,
        recovered_bits,
        time_error: 0.0,
        bits_error,
        policies_match,
        pass: bits_error <= tol && policies_match,
    })
}
