//! Problem instances: a battery capacity and a list of energy arrivals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One harvested energy packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    /// Arrival instant.
    pub t: f64,
    /// Packet energy.
    pub e: f64,
}

impl Arrival {
    pub fn new(t: f64, e: f64) -> Self {
        Self { t, e }
    }
}

/// An energy-harvesting instance.
///
/// Raw scenarios may be unsorted, carry duplicate instants or exceed the
/// battery capacity. [`HarvestScenario::normalize`] produces the canonical
/// form every solver consumes:
///
/// - arrivals sorted by strictly increasing time, starting with one at `t = 0`
///   (energy zero if the raw scenario had nothing there: the battery starts empty),
/// - simultaneous arrivals merged by summing before truncation,
/// - every packet truncated to `e_max`,
/// - zero-energy packets after `t = 0` dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestScenario {
    e_max: f64,
    arrivals: Vec<Arrival>,
    normalized: bool,
}

impl HarvestScenario {
    /// Builds a raw scenario. Values are checked in [`Self::normalize`].
    pub fn new(e_max: f64, arrivals: Vec<Arrival>) -> Self {
        Self {
            e_max,
            arrivals,
            normalized: false,
        }
    }

    /// Convenience constructor from parallel slices, normalized.
    pub fn from_pairs(e_max: f64, times: &[f64], energies: &[f64]) -> Result<Self> {
        if times.len() != energies.len() {
            return Err(Error::InvalidScenario(format!(
                "{} times but {} energies",
                times.len(),
                energies.len()
            )));
        }
        let arrivals = times
            .iter()
            .zip(energies)
            .map(|(&t, &e)| Arrival::new(t, e))
            .collect();
        Self::new(e_max, arrivals).normalize()
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn arrivals(&self) -> &[Arrival] {
        &self.arrivals
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Sum of all packet energies.
    pub fn total_energy(&self) -> f64 {
        self.arrivals.iter().map(|a| a.e).sum()
    }

    /// Energy of packets arriving strictly before `t`.
    pub fn energy_before(&self, t: f64) -> f64 {
        self.arrivals.iter().filter(|a| a.t < t).map(|a| a.e).sum()
    }

    /// Energy of packets arriving at or before `t`.
    pub fn energy_through(&self, t: f64) -> f64 {
        self.arrivals.iter().filter(|a| a.t <= t).map(|a| a.e).sum()
    }

    /// Energy available at `t = 0` (zero when the battery starts empty).
    pub fn initial_energy(&self) -> f64 {
        self.arrivals
            .iter()
            .filter(|a| a.t == 0.0)
            .map(|a| a.e)
            .sum()
    }

    /// Number of constant-power epochs in `[0, deadline)`: one per arrival
    /// strictly before the deadline.
    pub fn epochs_before(&self, deadline: f64) -> usize {
        self.arrivals
            .iter()
            .filter(|a| a.t < deadline)
            .count()
            .max(1)
    }

    pub fn normalize(&self) -> Result<HarvestScenario> {
        if self.normalized {
            return Ok(self.clone());
        }
        if !(self.e_max.is_finite() && self.e_max > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "e_max must be finite and positive, got {}",
                self.e_max
            )));
        }
        for (i, a) in self.arrivals.iter().enumerate() {
            if !a.t.is_finite() || !a.e.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "arrival {i} has a non-finite value (t={}, e={})",
                    a.t, a.e
                )));
            }
            if a.t < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "arrival {i} has negative time {}",
                    a.t
                )));
            }
            if a.e < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "arrival {i} has negative energy {}",
                    a.e
                )));
            }
        }

        let mut sorted = self.arrivals.clone();
        sorted.sort_by(|a, b| a.t.total_cmp(&b.t));

        let mut merged: Vec<Arrival> = Vec::with_capacity(sorted.len() + 1);
        merged.push(Arrival::new(0.0, 0.0));
        for a in sorted {
            // -0.0 sorts before 0.0 but is the same instant
            let t = if a.t == 0.0 { 0.0 } else { a.t };
            match merged.last_mut() {
                Some(last) if last.t == t => last.e += a.e,
                _ => merged.push(Arrival::new(t, a.e)),
            }
        }

        let e_max = self.e_max;
        let arrivals = merged
            .into_iter()
            .enumerate()
            .filter(|(i, a)| *i == 0 || a.e > 0.0)
            .map(|(_, a)| Arrival::new(a.t, a.e.min(e_max)))
            .collect();

        Ok(HarvestScenario {
            e_max,
            arrivals,
            normalized: true,
        })
    }

    /// Multiplies every energy and the battery capacity by `factor`.
    pub fn scale_energy(&self, factor: f64) -> HarvestScenario {
        HarvestScenario {
            e_max: self.e_max * factor,
            arrivals: self
                .arrivals
                .iter()
                .map(|a| Arrival::new(a.t, a.e * factor))
                .collect(),
            normalized: self.normalized,
        }
    }

    /// Multiplies every arrival time by `factor`.
    pub fn scale_time(&self, factor: f64) -> HarvestScenario {
        HarvestScenario {
            e_max: self.e_max,
            arrivals: self
                .arrivals
                .iter()
                .map(|a| Arrival::new(a.t * factor, a.e))
                .collect(),
            normalized: self.normalized,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: &HarvestScenario) -> Vec<(f64, f64)> {
        s.arrivals().iter().map(|a| (a.t, a.e)).collect()
    }

    #[test]
    fn reference_instance_is_already_canonical() {
        let s = HarvestScenario::from_pairs(
            10.0,
            &[0.0, 2.0, 4.0, 5.0, 7.0, 11.0],
            &[2.0, 1.0, 6.0, 4.0, 8.0, 1.0],
        )
        .unwrap();
        assert_eq!(
            pairs(&s),
            vec![
                (0.0, 2.0),
                (2.0, 1.0),
                (4.0, 6.0),
                (5.0, 4.0),
                (7.0, 8.0),
                (11.0, 1.0)
            ]
        );
        assert_eq!(s.total_energy(), 22.0);
    }

    #[test]
    fn oversized_packet_truncated() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0], &[15.0]).unwrap();
        assert_eq!(pairs(&s), vec![(0.0, 10.0)]);
    }

    #[test]
    fn simultaneous_packets_merged_then_truncated() {
        let s = HarvestScenario::from_pairs(10.0, &[5.0, 5.0], &[3.0, 4.0]).unwrap();
        assert_eq!(pairs(&s), vec![(0.0, 0.0), (5.0, 7.0)]);
        let s = HarvestScenario::from_pairs(10.0, &[5.0, 5.0], &[6.0, 7.0]).unwrap();
        assert_eq!(pairs(&s), vec![(0.0, 0.0), (5.0, 10.0)]);
    }

    #[test]
    fn unsorted_input_sorted_and_zero_packets_dropped() {
        let s = HarvestScenario::from_pairs(10.0, &[3.0, 1.0, 2.0, 0.0], &[1.0, 0.0, 2.0, 4.0])
            .unwrap();
        assert_eq!(pairs(&s), vec![(0.0, 4.0), (2.0, 2.0), (3.0, 1.0)]);
        assert_eq!(s.initial_energy(), 4.0);
    }

    #[test]
    fn missing_initial_arrival_means_empty_battery() {
        let s = HarvestScenario::from_pairs(10.0, &[1.0], &[3.0]).unwrap();
        assert_eq!(pairs(&s), vec![(0.0, 0.0), (1.0, 3.0)]);
        assert_eq!(s.initial_energy(), 0.0);
    }

    #[test]
    fn invalid_values_rejected() {
        let cases: Vec<(f64, Vec<Arrival>)> = vec![
            (0.0, vec![]),
            (f64::INFINITY, vec![]),
            (10.0, vec![Arrival::new(-1.0, 1.0)]),
            (10.0, vec![Arrival::new(1.0, -1.0)]),
            (10.0, vec![Arrival::new(f64::NAN, 1.0)]),
            (10.0, vec![Arrival::new(1.0, f64::INFINITY)]),
        ];
        for (e_max, arrivals) in cases {
            let err = HarvestScenario::new(e_max, arrivals)
                .normalize()
                .unwrap_err();
            assert!(matches!(err, Error::InvalidScenario(_)), "{err}");
        }
    }

    #[test]
    fn energy_prefix_queries() {
        let s = HarvestScenario::from_pairs(10.0, &[0.0, 2.0, 4.0], &[2.0, 1.0, 6.0]).unwrap();
        assert_eq!(s.energy_before(2.0), 2.0);
        assert_eq!(s.energy_through(2.0), 3.0);
        assert_eq!(s.energy_before(100.0), 9.0);
        assert_eq!(s.epochs_before(4.0), 2);
        assert_eq!(s.epochs_before(4.5), 3);
    }
}
