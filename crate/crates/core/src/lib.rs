//! Offline transmit-power scheduling for an energy-harvesting transmitter
//! with a finite battery.
//!
//! Energy arrives in packets at known instants; the battery holds at most
//! `e_max`. Two dual problems are solved exactly:
//!
//! - [`solve_max_throughput`]: most bits departed by a deadline,
//! - [`solve_min_time`]: earliest completion of a given bit count.
//!
//! Both return piecewise-constant [`PowerPolicy`] values whose power changes
//! only at arrival instants. The [`oracle`] module checks optimality
//! independently, [`baselines`] provides reference schedules and
//! [`generate`] builds seeded random instances.

pub mod baselines;
pub mod battery;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod io;
pub mod oracle;
pub mod policy;
pub mod rate;
pub mod scenario;
pub mod solver;
pub mod strategy;

pub use battery::{battery_trajectory, is_feasible, BatteryMode, BatteryTrajectory, Feasibility};
pub use error::{Error, Result};
pub use policy::{throughput, PowerPolicy, Segment};
pub use rate::{rate_by_name, Awgn, RateFunction, SqrtRate};
pub use scenario::{Arrival, HarvestScenario};
pub use solver::{solve_max_throughput, solve_min_time, MinTimeSolution};
pub use strategy::{Scheduler, SchedulerRegistry};
