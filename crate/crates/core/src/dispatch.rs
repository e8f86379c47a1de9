//! Energy-price and workload dispatching rule.
//!
//! A machine runs when the current price is strictly below the monthly
//! average times the energy factor. Otherwise it runs only if the planned
//! work waiting in its queue strictly exceeds its daily capacity times the
//! capacity factor.

use crate::energyprice::PriceSeries;
use crate::scenario::{DispatchParams, MachineSpec};
use crate::Result;

/// Planned minutes of one waiting order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedWork {
    pub order_id: u64,
    /// Lot quantity times mean processing time per piece.
    pub planned_processing: f64,
    /// Mean setup of the machine.
    pub planned_setup: f64,
}

pub type QueueSnapshot = [QueuedWork];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    PriceLow,
    WorkloadHigh,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchDecision {
    pub machine_on: bool,
    pub price: f64,
    pub energy_threshold: f64,
    /// Zero when the price branch decided.
    pub workload: f64,
    pub workload_threshold: f64,
    pub reason: Reason,
}

impl DispatchDecision {
    /// The price was not below the threshold, so the machine was a
    /// candidate for switching off.
    pub fn price_exceeded(&self) -> bool {
        self.reason != Reason::PriceLow
    }
}

pub fn current_workload(queue: &QueueSnapshot) -> f64 {
    queue
        .iter()
        .map(|w| w.planned_processing + w.planned_setup)
        .sum()
}

/// The rule on already-resolved inputs. The workload is computed lazily,
/// only when the price branch does not switch the machine on.
pub fn decide(
    price: f64,
    energy_threshold: f64,
    workload: impl FnOnce() -> f64,
    workload_threshold: f64,
) -> DispatchDecision {
    if price < energy_threshold {
        return DispatchDecision {
            machine_on: true,
            price,
            energy_threshold,
            workload: 0.0,
            workload_threshold,
            reason: Reason::PriceLow,
        };
    }
    let workload = workload();
    let machine_on = workload > workload_threshold;
    DispatchDecision {
        machine_on,
        price,
        energy_threshold,
        workload,
        workload_threshold,
        reason: if machine_on { Reason::WorkloadHigh } else { Reason::Off },
    }
}

pub fn decide_state(
    now: f64,
    machine: &MachineSpec,
    queue: &QueueSnapshot,
    prices: &PriceSeries,
    params: &DispatchParams,
) -> Result<DispatchDecision> {
    let price = prices.price_at(now)?;
    let threshold = prices.energy_threshold(now, params.energy_factor)?;
    Ok(decide(
        price,
        threshold,
        || current_workload(queue),
        machine.daily_capacity * params.capacity_factor,
    ))
}

/// What prompted a dispatching check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// An order finished processing on the machine.
    Completion,
    /// The periodic check elapsed.
    Tick,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEvent {
    pub time: f64,
    pub trigger: Trigger,
    /// Orders waiting at the machine when the trigger fires.
    pub queue_len: usize,
}

/// Gate deciding whether a trigger leads to a rule evaluation: only with
/// orders waiting, and at most once per timestamp.
#[derive(Debug, Clone, Default)]
pub struct TriggerGate {
    last: Option<f64>,
}

impl TriggerGate {
    pub fn admit(&mut self, time: f64, queue_len: usize) -> bool {
        if queue_len == 0 || self.last == Some(time) {
            return false;
        }
        self.last = Some(time);
        true
    }
}

/// Times at which the rule is evaluated for one machine's trigger stream.
pub fn trigger_points(events: &[TriggerEvent]) -> Vec<f64> {
    let mut gate = TriggerGate::default();
    events
        .iter()
        .filter(|e| gate.admit(e.time, e.queue_len))
        .map(|e| e.time)
        .collect()
}

/// Per-machine dispatching counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DispatchCounters {
    pub decisions: u64,
    pub price_exceeded: u64,
    pub switch_offs: u64,
}

impl DispatchCounters {
    pub fn record(&mut self, d: &DispatchDecision) {
        self.decisions += 1;
        if d.price_exceeded() {
            self.price_exceeded += 1;
        }
        if !d.machine_on {
            self.switch_offs += 1;
        }
    }
}
