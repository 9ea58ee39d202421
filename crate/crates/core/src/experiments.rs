//! Batch runs behind the comparison and sweep tables.

use rayon::prelude::*;

use crate::baselines::ComparisonRow;
use crate::error::Result;
use crate::generate::{generate_random, GenParams};
use crate::io::fmt_num;
use crate::rate::RateFunction;
use crate::scenario::HarvestScenario;
use crate::solver::{solve_max_throughput, solve_min_time};
use crate::strategy::SchedulerRegistry;

/// Bits of the `optimal`, `onoff` and `unconstrained` schedulers on one raw scenario.
pub fn compare_scenario(
    id: impl Into<String>,
    raw: &HarvestScenario,
    deadline: f64,
    rate: &dyn RateFunction,
    registry: &SchedulerRegistry,
) -> Result<ComparisonRow> {
    let bits = |name: &str| -> Result<f64> {
        Ok(registry
            .get(name)?
            .schedule(raw, deadline)?
            .throughput(rate))
    };
    Ok(ComparisonRow {
        id: id.into(),
        bits_optimal: bits("optimal")?,
        bits_onoff: bits("onoff")?,
        bits_unconstrained: bits("unconstrained")?,
    })
}

/// One row per generated scenario, ids `0..count`, scenario `i` seeded with
/// `params.seed ^ i` and solved with deadline `params.horizon`.
pub fn compare_batch(
    params: &GenParams,
    count: u64,
    rate: &dyn RateFunction,
    registry: &SchedulerRegistry,
) -> Result<Vec<ComparisonRow>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let p = params.split(i);
            let raw = generate_random(&p)?;
            compare_scenario(i.to_string(), &raw, p.horizon, rate, registry)
        })
        .collect()
}

/// A point `(deadline, bits)` on the throughput/completion-time curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub deadline: f64,
    pub bits: f64,
}

/// Maximum bits for each deadline.
pub fn throughput_curve(
    scenario: &HarvestScenario,
    deadlines: &[f64],
    rate: &dyn RateFunction,
) -> Result<Vec<CurvePoint>> {
    deadlines
        .iter()
        .map(|&deadline| {
            Ok(CurvePoint {
                deadline,
                bits: solve_max_throughput(scenario, deadline)?.throughput(rate),
            })
        })
        .collect()
}

/// Minimum completion time for each bit target.
pub fn completion_curve(
    scenario: &HarvestScenario,
    targets: &[f64],
    rate: &dyn RateFunction,
) -> Result<Vec<CurvePoint>> {
    targets
        .iter()
        .map(|&bits| {
            Ok(CurvePoint {
                deadline: solve_min_time(scenario, bits, rate)?.completion_time,
                bits,
            })
        })
        .collect()
}

/// `n` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n)
            .map(|k| from + (to - from) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Strictly increasing in both coordinates.
pub fn is_strictly_monotone(curve: &[CurvePoint]) -> bool {
    curve
        .windows(2)
        .all(|w| w[1].deadline > w[0].deadline && w[1].bits > w[0].bits)
}

/// Rows `curve,deadline,bits` with `curve` either `throughput` (deadline
/// grid) or `mintime` (bit grid).
pub fn sweep_csv(throughput: &[CurvePoint], mintime: &[CurvePoint]) -> String {
    let mut out = String::from("curve,deadline,bits\n");
    for (name, curve) in [("throughput", throughput), ("mintime", mintime)] {
        for p in curve {
            out.push_str(&format!(
                "{name},{},{}\n",
                fmt_num(p.deadline),
                fmt_num(p.bits)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::Awgn;

    fn reference() -> HarvestScenario {
        HarvestScenario::from_pairs(
            10.0,
            &[0.0, 2.0, 4.0, 5.0, 7.0, 11.0],
            &[2.0, 1.0, 6.0, 4.0, 8.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn linspace_edges() {
        assert!(linspace(1.0, 2.0, 0).is_empty());
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        assert_eq!(
            linspace(1.0, 12.0, 12),
            (1..=12).map(f64::from).collect::<Vec<_>>()
        );
    }

    #[test]
    fn reference_curves_coincide() {
        let curve = throughput_curve(&reference(), &linspace(1.0, 12.0, 12), &Awgn).unwrap();
        assert!(is_strictly_monotone(&curve));
        let bits: Vec<f64> = curve.iter().map(|p| p.bits).collect();
        let back = completion_curve(&reference(), &bits, &Awgn).unwrap();
        for (a, b) in curve.iter().zip(&back) {
            assert!(
                (a.deadline - b.deadline).abs() <= 1e-6 * a.deadline,
                "{a:?} {b:?}"
            );
        }
    }

    #[test]
    fn single_point_sweep() {
        let curve = throughput_curve(&reference(), &[12.0], &Awgn).unwrap();
        let csv = sweep_csv(&curve, &[]);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("curve,deadline,bits\nthroughput,12,8.62159328377\n"));
    }

    #[test]
    fn single_packet_batch_has_no_battery_loss() {
        // one packet at t = 0 and nothing else before the horizon
        let params = GenParams::new(100.0, 1e9, 50.0, 3);
        let rows = compare_batch(&params, 4, &Awgn, &SchedulerRegistry::with_defaults()).unwrap();
        for r in rows {
            assert!((r.bits_optimal - r.bits_unconstrained).abs() < 1e-12);
            assert!((r.bits_onoff - r.bits_optimal).abs() < 1e-12);
        }
    }
}
