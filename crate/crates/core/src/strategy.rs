//! Named schedulers behind a common trait, selectable at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::baselines::{on_off_policy_with, unconstrained_policy, OnOffLevel};
use crate::error::{Error, Result};
use crate::policy::PowerPolicy;
use crate::scenario::HarvestScenario;
use crate::solver::solve_max_throughput;

/// Produces a schedule on `[0, deadline]` from a raw (possibly unnormalized)
/// scenario. Schedulers that need the canonical form normalize themselves.
pub trait Scheduler: Send + Sync {
    fn name(&self) -> &str;

    fn description(&self) -> &str;

    fn schedule(&self, raw: &HarvestScenario, deadline: f64) -> Result<PowerPolicy>;
}

/// The maximum-throughput schedule.
#[derive(Debug, Clone, Copy, Default)]
pub struct Optimal;

impl Scheduler for Optimal {
    fn name(&self) -> &str {
        "optimal"
    }

    fn description(&self) -> &str {
        "maximum bits by the deadline under battery and causality limits"
    }

    fn schedule(&self, raw: &HarvestScenario, deadline: f64) -> Result<PowerPolicy> {
        solve_max_throughput(raw, deadline)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OnOff {
    pub level: OnOffLevel,
}

impl Default for OnOff {
    fn default() -> Self {
        Self {
            level: OnOffLevel::Realized,
        }
    }
}

impl Scheduler for OnOff {
    fn name(&self) -> &str {
        "onoff"
    }

    fn description(&self) -> &str {
        "average harvest rate while the battery holds energy, silent otherwise"
    }

    fn schedule(&self, raw: &HarvestScenario, deadline: f64) -> Result<PowerPolicy> {
        on_off_policy_with(raw, deadline, self.level)
    }
}

/// All untruncated energy spread evenly from `t = 0`. An upper bound, not a
/// feasible schedule.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

impl Scheduler for Unconstrained {
    fn name(&self) -> &str {
        "unconstrained"
    }

    fn description(&self) -> &str {
        "no battery or arrival limits (upper bound)"
    }

    fn schedule(&self, raw: &HarvestScenario, deadline: f64) -> Result<PowerPolicy> {
        unconstrained_policy(raw, deadline)
    }
}

#[derive(Clone, Default)]
pub struct SchedulerRegistry {
    entries: BTreeMap<String, Arc<dyn Scheduler>>,
}

impl SchedulerRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `optimal`, `onoff` (realized level) and `unconstrained`.
    pub fn with_defaults() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(Optimal));
        registry.register(Arc::new(OnOff::default()));
        registry.register(Arc::new(Unconstrained));
        registry
    }

    /// Adds or replaces the scheduler registered under its name.
    pub fn register(&mut self, scheduler: Arc<dyn Scheduler>) {
        self.entries.insert(scheduler.name().to_string(), scheduler);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Scheduler>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownName {
                kind: "scheduler",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}
