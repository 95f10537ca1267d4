//! Lifetime-maximizing uplink scheduling for machine-type devices in a
//! single cell: energy/lifetime models, max-min schedulers with a
//! cooperation-incentive reward, distributed grouping, an LTE-discretized
//! scheduler, underlay interference budgets, and a reproducible
//! Monte Carlo experiment harness.

pub mod error;
pub mod grouping;
pub mod harness;
pub mod interference;
pub mod lambert;
pub mod lte;
pub mod model;
pub mod scenario;
pub mod scheduler;

pub use error::Error;
pub use model::{Allocation, NodeState, RadioConfig};
pub use scheduler::{Policy, ScheduleProblem, ScheduleResult};
