//! Seeded random scenarios: uniform packet energies, exponential gaps.
//!
//! Uses ChaCha8, whose output stream is fixed across platforms and crate
//! versions. Batch runs derive one seed per scenario as `seed ^ index`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Arrival, HarvestScenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Battery capacity.
    pub e_max: f64,
    /// Packet energies are uniform on `[0, energy_peak)`; defaults to `e_max`.
    pub energy_peak: Option<f64>,
    /// Mean inter-arrival time.
    pub mean_gap: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn new(e_max: f64, mean_gap: f64, horizon: f64, seed: u64) -> Self {
        Self {
            e_max,
            energy_peak: None,
            mean_gap,
            horizon,
            seed,
        }
    }

    pub fn with_energy_peak(mut self, peak: f64) -> Self {
        self.energy_peak = Some(peak);
        self
    }

    /// Parameters for the `index`-th scenario of a batch.
    pub fn split(&self, index: u64) -> Self {
        Self {
            seed: self.seed ^ index,
            ..*self
        }
    }

    pub fn peak(&self) -> f64 {
        self.energy_peak.unwrap_or(self.e_max)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.e_max) || !positive(self.peak()) {
            return Err(Error::InvalidScenario("energies must be positive".into()));
        }
        if !positive(self.mean_gap) {
            return Err(Error::InvalidScenario("mean gap must be positive".into()));
        }
        if !positive(self.horizon) {
            return Err(Error::InvalidDeadline(self.horizon));
        }
        Ok(())
    }

    /// Parses `emax=100,mu=5,T=10000[,peak=50]`.
    pub fn parse_spec(spec: &str, seed: u64) -> Result<Self> {
        let (mut e_max, mut mu, mut horizon, mut peak) = (None, None, None, None);
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("--gen '{part}'"), "expected key=value"))?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::parse(format!("--gen {key}"), format!("not a number: {value}"))
            })?;
            match key.trim() {
                "emax" => e_max = Some(value),
                "mu" => mu = Some(value),
                "T" => horizon = Some(value),
                "peak" => peak = Some(value),
                other => {
                    return Err(Error::parse(
                        format!("--gen {other}"),
                        "unknown key (expected emax, mu, T, peak)",
                    ))
                }
            }
        }
        let missing = |k: &str| Error::parse(format!("--gen {k}"), "missing");
        let params = Self {
            e_max: e_max.ok_or_else(|| missing("emax"))?,
            energy_peak: peak,
            mean_gap: mu.ok_or_else(|| missing("mu"))?,
            horizon: horizon.ok_or_else(|| missing("T"))?,
            seed,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Raw scenario: a packet at `t = 0`, then cumulative exponential gaps until
/// the horizon is passed; the overshooting arrival is discarded.
pub fn generate_random(params: &GenParams) -> Result<HarvestScenario> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let gap = Exp::new(1.0 / params.mean_gap).expect("positive rate");
    let peak = params.peak();

    let mut arrivals = vec![Arrival::new(0.0, rng.gen::<f64>() * peak)];
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t > params.horizon {
            break;
        }
        arrivals.push(Arrival::new(t, rng.gen::<f64>() * peak));
    }
    Ok(HarvestScenario::new(params.e_max, arrivals))
}
