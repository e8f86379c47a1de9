//! Job-shop simulation of an MRP-planned production system whose machines
//! are switched on and off by an energy-price and workload dispatching rule.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`]: static description of machines, items, routings and costs.
//! * [`stochastics`]: keyed random streams and mean/CV lognormal sampling.
//! * [`energyprice`]: hourly price series and monthly thresholds.
//! * [`mrp`]: netting, fixed-order-period lot sizing, backward scheduling.
//! * [`dispatch`]: the machine on/off rule.
//! * [`shopfloor`]: the discrete-event engine tying everything together.
//! * [`costing`]: cost ledgers and per-run KPI records.
//! * [`experiment`]: factorial grids, parallel sweeps, aggregation, Pareto fronts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costing;
pub mod csvfmt;
pub mod dispatch;
pub mod energyprice;
pub mod error;
pub mod experiment;
pub mod mrp;
pub mod scenario;
pub mod shopfloor;
pub mod stochastics;

pub use error::{Error, Result};

/// Minutes in one simulated day (one planning period).
pub const MINUTES_PER_DAY: f64 = 1440.0;
/// Minutes in one hour of the price series.
pub const MINUTES_PER_HOUR: f64 = 60.0;
