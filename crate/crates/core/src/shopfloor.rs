//! Discrete-event shop floor: customer demand, daily MRP and order
//! release, FIFO machine queues gated by the dispatching rule, setup and
//! processing, routing, delivery and cost accrual.
//!
//! Events run in `(time, priority, seq)` order. At a day boundary the MRP
//! run precedes release checks, and both precede any other event at that
//! instant. A completion and a periodic tick at the same instant lead to a
//! single rule evaluation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use crate::costing::{self, CostCategory, CostLedger, MachineKpi, RunResult};
use crate::dispatch::{self, DispatchCounters, DispatchDecision, QueuedWork, Reason, TriggerGate};
use crate::energyprice::PriceSeries;
use crate::mrp::{self, BookedDemand, InventoryState, MrpRow, ScheduledReceipt};
use crate::scenario::{
    validate_scenario, DemandParams, DispatchParams, ItemSpec, PlanningParams, Scenario, Severity,
};
use crate::stochastics::{lognormal_from_mean_cv, LognormalSpec, RngStream, StreamKey, StreamRole};
use crate::{Error, Result, MINUTES_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub planning: PlanningParams,
    pub dispatch: DispatchParams,
    /// When false, machines stay on and the rule is never evaluated.
    pub dispatch_enabled: bool,
    pub seed: u64,
    pub replication: u64,
    pub days: u32,
    pub warmup_days: u32,
    /// Charge energy for setup minutes as well as processing minutes.
    pub setup_energy: bool,
    pub mrp_horizon: usize,
    pub event_log: bool,
    pub mrp_dump: bool,
}

impl SimConfig {
    pub fn new(planning: PlanningParams, dispatch: DispatchParams) -> Self {
        SimConfig {
            planning,
            dispatch,
            dispatch_enabled: true,
            seed: 0,
            replication: 0,
            days: 400,
            warmup_days: 150,
            setup_energy: false,
            mrp_horizon: mrp::DEFAULT_HORIZON,
            event_log: false,
            mrp_dump: false,
        }
    }
}

/// A customer order as generated, before it enters the simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerOrderSpec {
    pub item: usize,
    pub quantity: u64,
    /// Minutes.
    pub arrival: f64,
    /// Minutes.
    pub due: f64,
}

/// Customer orders for one item until `horizon_minutes`. Each order draws
/// its interarrival gap, quantity and variable lead time, in that order,
/// from `stream`.
pub fn generate_demand(
    stream: &mut RngStream,
    demand: &DemandParams,
    item: usize,
    spec: &ItemSpec,
    horizon_minutes: f64,
) -> Result<Vec<CustomerOrderSpec>> {
    let gap = lognormal_from_mean_cv(demand.mean_interarrival, demand.cv_interarrival)?;
    let qty = lognormal_from_mean_cv(spec.expected_order_qty, demand.cv_quantity)?;
    let lead = lognormal_from_mean_cv(demand.mean_var_lead, demand.cv_var_lead)?;
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(stream) * MINUTES_PER_DAY;
        if t >= horizon_minutes {
            break;
        }
        let quantity = qty.sample(stream).round().max(1.0) as u64;
        let lead_days = demand.fixed_lead + lead.sample(stream);
        out.push(CustomerOrderSpec {
            item,
            quantity,
            arrival: t,
            due: t + lead_days * MINUTES_PER_DAY,
        });
    }
    Ok(out)
}

/// Customer orders of every end item for one replication. Depends only on
/// the scenario, seed and replication.
pub fn generate_all_demand(
    scenario: &Scenario,
    seed: u64,
    replication: u64,
    horizon_minutes: f64,
) -> Result<Vec<CustomerOrderSpec>> {
    let mut all = Vec::new();
    for item in scenario.end_items() {
        let mut stream = RngStream::new(seed, StreamKey::new(replication, StreamRole::Demand, item as u64));
        all.extend(generate_demand(
            &mut stream,
            &scenario.demand,
            item,
            &scenario.items[item],
            horizon_minutes,
        )?);
    }
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Priority {
    DayStart = 0,
    Arrival = 3,
    Completion = 4,
    DueDate = 5,
    DispatchTick = 6,
    Accounting = 7,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    DayStart(i64),
    Arrival(usize),
    Completion(usize),
    DueDate(usize),
    Tick,
    WarmupEnd,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    priority: Priority,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn key(&self) -> (f64, Priority, u64) {
        (self.time, self.priority, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.priority.cmp(&self.priority))
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderState {
    Queued,
    InProcess,
    Finished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductionOrderRecord {
    pub order_id: u64,
    pub item: usize,
    pub quantity: u64,
    pub routing_position: usize,
    pub state: OrderState,
    pub release_time: f64,
    pub completion_time: Option<f64>,
    /// Day the MRP expects the order; used as its scheduled receipt date.
    pub due_day: i64,
    pub step_entry_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomerOrderRecord {
    pub item: usize,
    pub quantity: u64,
    pub arrival: f64,
    pub due: f64,
    pub delivered: Option<f64>,
}

/// One setup-and-processing step on a machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub machine: usize,
    pub order_id: u64,
    pub start: f64,
    pub setup_minutes: f64,
    pub processing_minutes: f64,
    pub energy_cu: f64,
}

impl StepRecord {
    pub fn end(&self) -> f64 {
        self.start + self.setup_minutes + self.processing_minutes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateChange {
    pub time: f64,
    pub machine: usize,
    pub on: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub time: f64,
    pub event: &'static str,
    pub entity: String,
    pub detail: String,
}

pub const EVENT_LOG_HEADER: &str = "time,event,entity,detail";

pub fn write_event_log(entries: &[LogEntry]) -> String {
    let mut out = String::from(EVENT_LOG_HEADER);
    out.push('\n');
    for e in entries {
        let _ = writeln!(out, "{},{},{},{}", e.time, e.event, e.entity, e.detail);
    }
    out
}

/// Everything a run leaves behind besides its KPIs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub orders: Vec<ProductionOrderRecord>,
    pub customers: Vec<CustomerOrderRecord>,
    pub steps: Vec<StepRecord>,
    pub state_changes: Vec<StateChange>,
    /// WIP pieces held by the engine's level counter at horizon end.
    pub final_wip_pieces: u64,
    pub warmup_end: f64,
    pub horizon_end: f64,
    /// Late plans observed by MRP (start clamped to the planning day).
    pub late_plans: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub result: RunResult,
    pub ledger: CostLedger,
    pub trace: RunTrace,
    pub event_log: Vec<LogEntry>,
    pub mrp_rows: Vec<MrpRow>,
}

struct Busy {
    order: usize,
    start: f64,
    end: f64,
}

struct MachineRt {
    queue: VecDeque<usize>,
    on: bool,
    pending_on: Option<bool>,
    busy: Option<Busy>,
    gate: TriggerGate,
    counters: DispatchCounters,
    observed_busy: f64,
}

struct StepSpecs {
    processing: LognormalSpec,
    setup: Option<LognormalSpec>,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    prices: &'a PriceSeries,
    cfg: &'a SimConfig,
    heap: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    last_popped: (f64, Priority, u64),
    warmup_end: f64,
    horizon_end: f64,
    end_items: Vec<bool>,
    specs: Vec<Vec<StepSpecs>>,
    machines: Vec<MachineRt>,
    proc_streams: Vec<RngStream>,
    setup_streams: Vec<RngStream>,
    orders: Vec<ProductionOrderRecord>,
    next_order_id: u64,
    stock: Vec<u64>,
    customers: Vec<CustomerOrderRecord>,
    booked: Vec<bool>,
    past_due: Vec<bool>,
    undelivered: Vec<VecDeque<usize>>,
    wip_pieces: u64,
    fgi_pieces: u64,
    backlog_pieces: u64,
    last_accrual: f64,
    ledger: CostLedger,
    steps: Vec<StepRecord>,
    state_changes: Vec<StateChange>,
    log: Vec<LogEntry>,
    mrp_rows: Vec<MrpRow>,
    late_plans: u64,
}

pub fn run_simulation(scenario: &Scenario, prices: &PriceSeries, cfg: &SimConfig) -> Result<SimOutput> {
    cfg.planning.validate()?;
    cfg.dispatch.validate()?;
    if let Some(f) = validate_scenario(scenario)
        .into_iter()
        .find(|f| f.severity == Severity::Hard)
    {
        return Err(Error::Semantic(f.to_string()));
    }
    if cfg.days == 0 || cfg.warmup_days >= cfg.days {
        return Err(Error::InvalidParam(format!(
            "warmup ({} days) must be shorter than the run ({} days)",
            cfg.warmup_days, cfg.days
        )));
    }
    let horizon_end = cfg.days as f64 * MINUTES_PER_DAY;
    if prices.covers_minutes() < horizon_end {
        return Err(Error::Prices(format!(
            "series covers {} hours but the run needs {}",
            prices.hours(),
            cfg.days as usize * 24
        )));
    }
    let horizon = cfg
        .mrp_horizon
        .max((cfg.planning.planned_lead_time + cfg.planning.fop_period) as usize + 1);
    let cfg_eff = SimConfig {
        mrp_horizon: horizon,
        ..cfg.clone()
    };
    Engine::new(scenario, prices, &cfg_eff)?.run()
}

fn spec_or_zero(mean: f64, cv: f64) -> Result<Option<LognormalSpec>> {
    if mean > 0.0 {
        Ok(Some(lognormal_from_mean_cv(mean, cv)?))
    } else {
        Ok(None)
    }
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario, prices: &'a PriceSeries, cfg: &'a SimConfig) -> Result<Self> {
        let n_items = scenario.items.len();
        let n_machines = scenario.machines.len();
        let v = scenario.variability;
        let specs = scenario
            .items
            .iter()
            .map(|item| {
                item.routing
                    .iter()
                    .map(|s| -> Result<StepSpecs> {
                        Ok(StepSpecs {
                            processing: lognormal_from_mean_cv(s.mean_proc_per_unit, v.proc_cv)?,
                            setup: spec_or_zero(s.mean_setup, v.setup_cv)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let stream = |role, m: usize| RngStream::new(cfg.seed, StreamKey::new(cfg.replication, role, m as u64));
        Ok(Engine {
            scenario,
            prices,
            cfg,
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            last_popped: (f64::NEG_INFINITY, Priority::DayStart, 0),
            warmup_end: cfg.warmup_days as f64 * MINUTES_PER_DAY,
            horizon_end: cfg.days as f64 * MINUTES_PER_DAY,
            end_items: (0..n_items).map(|i| scenario.is_end_item(i)).collect(),
            specs,
            machines: (0..n_machines)
                .map(|_| MachineRt {
                    queue: VecDeque::new(),
                    on: true,
                    pending_on: None,
                    busy: None,
                    gate: TriggerGate::default(),
                    counters: DispatchCounters::default(),
                    observed_busy: 0.0,
                })
                .collect(),
            proc_streams: (0..n_machines).map(|m| stream(StreamRole::Processing, m)).collect(),
            setup_streams: (0..n_machines).map(|m| stream(StreamRole::Setup, m)).collect(),
            orders: Vec::new(),
            next_order_id: 0,
            stock: vec![0; n_items],
            customers: Vec::new(),
            booked: Vec::new(),
            past_due: Vec::new(),
            undelivered: vec![VecDeque::new(); n_items],
            wip_pieces: 0,
            fgi_pieces: 0,
            backlog_pieces: 0,
            last_accrual: 0.0,
            ledger: CostLedger::default(),
            steps: Vec::new(),
            state_changes: Vec::new(),
            log: Vec::new(),
            mrp_rows: Vec::new(),
            late_plans: 0,
        })
    }

    fn schedule(&mut self, time: f64, priority: Priority, kind: EventKind) {
        debug_assert!(time >= self.now, "event scheduled in the past");
        if time >= self.horizon_end {
            return;
        }
        self.heap.push(Event {
            time,
            priority,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    fn log(&mut self, event: &'static str, entity: impl Into<String>, detail: impl FnOnce() -> String) {
        if self.cfg.event_log {
            self.log.push(LogEntry {
                time: self.now,
                event,
                entity: entity.into(),
                detail: detail(),
            });
        }
    }

    fn run(mut self) -> Result<SimOutput> {
        let demand = generate_all_demand(self.scenario, self.cfg.seed, self.cfg.replication, self.horizon_end)?;
        let mut demand = demand;
        demand.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.item.cmp(&b.item)));
        for d in demand {
            let idx = self.customers.len();
            self.customers.push(CustomerOrderRecord {
                item: d.item,
                quantity: d.quantity,
                arrival: d.arrival,
                due: d.due,
                delivered: None,
            });
            self.booked.push(false);
            self.past_due.push(false);
            self.schedule(d.arrival, Priority::Arrival, EventKind::Arrival(idx));
        }
        self.schedule(0.0, Priority::DayStart, EventKind::DayStart(0));
        if self.cfg.dispatch_enabled {
            self.schedule(0.0, Priority::DispatchTick, EventKind::Tick);
        }
        self.schedule(self.warmup_end, Priority::Accounting, EventKind::WarmupEnd);

        while let Some(ev) = self.heap.pop() {
            assert!(ev.key() > self.last_popped, "event order violated");
            self.last_popped = ev.key();
            self.now = ev.time;
            let before = self.levels();
            if matches!(ev.kind, EventKind::WarmupEnd) {
                self.accrue(before, ev.time)?;
            }
            match ev.kind {
                EventKind::DayStart(day) => self.on_day_start(day)?,
                EventKind::Arrival(c) => self.on_arrival(c),
                EventKind::Completion(m) => self.on_completion(m)?,
                EventKind::DueDate(c) => self.on_due(c),
                EventKind::Tick => self.on_tick()?,
                EventKind::WarmupEnd => self.on_warmup_end(),
            }
            // Levels are piecewise constant; integrate only at changes so
            // events that change nothing do not split the sums.
            if self.levels() != before {
                self.accrue(before, ev.time)?;
            }
        }
        self.now = self.horizon_end;
        self.accrue(self.levels(), self.horizon_end)?;
        self.finish()
    }

    /// WIP, FGI and backlog pieces.
    fn levels(&self) -> [u64; 3] {
        [self.wip_pieces, self.fgi_pieces, self.backlog_pieces]
    }

    /// Integrates `levels` from the last accrual up to `t`.
    fn accrue(&mut self, levels: [u64; 3], t: f64) -> Result<()> {
        let from = self.last_accrual;
        if t > from {
            let c = self.scenario.costs;
            let [wip, fgi, backlog] = levels;
            self.ledger
                .accrue_inventory(CostCategory::Wip, wip as f64, from, t, c.wip_rate)?;
            self.ledger
                .accrue_inventory(CostCategory::Fgi, fgi as f64, from, t, c.fgi_rate)?;
            self.ledger
                .accrue_inventory(CostCategory::Tardiness, backlog as f64, from, t, c.tardiness_rate)?;
            self.last_accrual = t;
        }
        Ok(())
    }

    fn on_warmup_end(&mut self) {
        self.ledger.reset();
        for m in &mut self.machines {
            m.counters = DispatchCounters::default();
        }
        self.log("warmup-end", "-", || "statistics reset".into());
    }

    fn on_day_start(&mut self, day: i64) -> Result<()> {
        let state = InventoryState {
            on_hand: self.stock.clone(),
            receipts: self
                .orders
                .iter()
                .filter(|o| o.state != OrderState::Finished)
                .map(|o| ScheduledReceipt {
                    item: o.item,
                    quantity: o.quantity,
                    day: o.due_day,
                })
                .collect(),
            demand: self
                .customers
                .iter()
                .enumerate()
                .filter(|(i, c)| self.booked[*i] && c.delivered.is_none())
                .map(|(_, c)| BookedDemand {
                    item: c.item,
                    quantity: c.quantity,
                    due_day: (c.due / MINUTES_PER_DAY).floor() as i64,
                })
                .collect(),
            next_order_id: self.next_order_id,
        };
        let run = mrp::run_mrp_detailed(
            self.scenario,
            &state,
            &self.cfg.planning,
            day,
            self.cfg.mrp_horizon,
            self.cfg.mrp_dump,
        );
        self.mrp_rows.extend(run.rows);
        for planned in &run.orders {
            if planned.late && planned.planned_start == day {
                self.late_plans += 1;
            }
            if mrp::release_check(self.scenario, planned, day, &mut self.stock) {
                self.release(planned.item, planned.quantity, planned.due_day)?;
            }
        }
        self.schedule((day + 1) as f64 * MINUTES_PER_DAY, Priority::DayStart, EventKind::DayStart(day + 1));
        Ok(())
    }

    fn release(&mut self, item: usize, quantity: u64, due_day: i64) -> Result<()> {
        let idx = self.orders.len();
        let order_id = self.next_order_id;
        self.next_order_id += 1;
        self.orders.push(ProductionOrderRecord {
            order_id,
            item,
            quantity,
            routing_position: 0,
            state: OrderState::Queued,
            release_time: self.now,
            completion_time: None,
            due_day,
            step_entry_times: vec![self.now],
        });
        self.wip_pieces += quantity;
        let item_id = &self.scenario.items[item].id;
        self.log("release", format!("P{order_id}"), || {
            format!("item={item_id} qty={quantity} due_day={due_day}")
        });
        let machine = self.scenario.items[item].routing[0].machine;
        self.machines[machine].queue.push_back(idx);
        self.try_start(machine)
    }

    fn on_arrival(&mut self, c: usize) {
        self.booked[c] = true;
        let (item, qty, due) = (self.customers[c].item, self.customers[c].quantity, self.customers[c].due);
        self.undelivered[item].push_back(c);
        let item_id = &self.scenario.items[item].id;
        self.log("arrival", format!("C{c}"), || format!("item={item_id} qty={qty} due={due}"));
        self.schedule(due, Priority::DueDate, EventKind::DueDate(c));
    }

    fn on_due(&mut self, c: usize) {
        let item = self.customers[c].item;
        self.try_deliver(item);
        if self.customers[c].delivered.is_none() {
            self.past_due[c] = true;
            self.backlog_pieces += self.customers[c].quantity;
            self.log("overdue", format!("C{c}"), String::new);
        }
    }

    /// Allocates finished stock to customer orders of `item` in arrival
    /// order and ships every fully covered order whose due time has come.
    fn try_deliver(&mut self, item: usize) {
        let mut remaining = self.stock[item];
        let mut shipped = Vec::new();
        for &c in &self.undelivered[item] {
            let cust = &self.customers[c];
            if remaining < cust.quantity {
                break;
            }
            remaining -= cust.quantity;
            if cust.due <= self.now {
                shipped.push(c);
            }
        }
        if shipped.is_empty() {
            return;
        }
        for &c in &shipped {
            let qty = self.customers[c].quantity;
            self.stock[item] -= qty;
            if self.end_items[item] {
                self.fgi_pieces -= qty;
            }
            if self.past_due[c] {
                self.backlog_pieces -= qty;
            }
            self.customers[c].delivered = Some(self.now);
            let due = self.customers[c].due;
            self.log("deliver", format!("C{c}"), || format!("qty={qty} due={due}"));
        }
        self.undelivered[item].retain(|c| !shipped.contains(c));
    }

    fn queue_snapshot(&self, machine: usize) -> Vec<QueuedWork> {
        self.machines[machine]
            .queue
            .iter()
            .map(|&o| {
                let order = &self.orders[o];
                let step = &self.scenario.items[order.item].routing[order.routing_position];
                QueuedWork {
                    order_id: order.order_id,
                    planned_processing: order.quantity as f64 * step.mean_proc_per_unit,
                    planned_setup: step.mean_setup,
                }
            })
            .collect()
    }

    /// Evaluates the rule for `machine` if a trigger is admitted. The new
    /// state applies immediately to an idle machine and after the current
    /// step to a busy one.
    fn evaluate(&mut self, machine: usize) -> Result<()> {
        if !self.cfg.dispatch_enabled {
            return Ok(());
        }
        let qlen = self.machines[machine].queue.len();
        if !self.machines[machine].gate.admit(self.now, qlen) {
            return Ok(());
        }
        let snapshot = self.queue_snapshot(machine);
        let decision: DispatchDecision = dispatch::decide_state(
            self.now,
            &self.scenario.machines[machine],
            &snapshot,
            self.prices,
            &self.cfg.dispatch,
        )?;
        let m = &mut self.machines[machine];
        m.counters.record(&decision);
        if m.busy.is_some() {
            m.pending_on = Some(decision.machine_on);
        } else {
            self.set_state(machine, decision.machine_on);
        }
        let mid = &self.scenario.machines[machine].id;
        self.log("decision", mid.clone(), || {
            let reason = match decision.reason {
                Reason::PriceLow => "price-low",
                Reason::WorkloadHigh => "workload-high",
                Reason::Off => "off",
            };
            format!(
                "on={} reason={reason} price={} threshold={} workload={}",
                decision.machine_on, decision.price, decision.energy_threshold, decision.workload
            )
        });
        Ok(())
    }

    fn set_state(&mut self, machine: usize, on: bool) {
        if self.machines[machine].on != on {
            self.machines[machine].on = on;
            self.state_changes.push(StateChange {
                time: self.now,
                machine,
                on,
            });
        }
    }

    fn try_start(&mut self, machine: usize) -> Result<()> {
        let m = &mut self.machines[machine];
        if m.busy.is_some() || !m.on {
            return Ok(());
        }
        let Some(idx) = m.queue.pop_front() else {
            return Ok(());
        };
        let (item, pos, qty, order_id) = {
            let o = &self.orders[idx];
            (o.item, o.routing_position, o.quantity, o.order_id)
        };
        let specs = &self.specs[item][pos];
        let setup = match &specs.setup {
            Some(s) => s.sample(&mut self.setup_streams[machine]),
            None => 0.0,
        };
        let processing = qty as f64 * specs.processing.sample(&mut self.proc_streams[machine]);
        let energized = if self.cfg.setup_energy {
            setup + processing
        } else {
            processing
        };
        let energy_cu =
            self.ledger
                .accrue_energy(&self.scenario.machines[machine], self.now, energized, self.prices)?;
        let end = self.now + setup + processing;
        self.orders[idx].state = OrderState::InProcess;
        self.machines[machine].busy = Some(Busy {
            order: idx,
            start: self.now,
            end,
        });
        self.steps.push(StepRecord {
            machine,
            order_id,
            start: self.now,
            setup_minutes: setup,
            processing_minutes: processing,
            energy_cu,
        });
        let mid = &self.scenario.machines[machine].id;
        self.log("start", mid.clone(), || {
            format!("order=P{order_id} setup={setup} processing={processing} energy={energy_cu}")
        });
        self.schedule(end, Priority::Completion, EventKind::Completion(machine));
        Ok(())
    }

    fn observe_busy(&mut self, machine: usize, start: f64, end: f64) {
        let lo = start.max(self.warmup_end);
        let hi = end.min(self.horizon_end);
        if hi > lo {
            self.machines[machine].observed_busy += hi - lo;
        }
    }

    fn on_completion(&mut self, machine: usize) -> Result<()> {
        let busy = self.machines[machine]
            .busy
            .take()
            .expect("completion event for an idle machine");
        self.observe_busy(machine, busy.start, busy.end);
        if let Some(on) = self.machines[machine].pending_on.take() {
            self.set_state(machine, on);
        }
        let idx = busy.order;
        let order_id = self.orders[idx].order_id;
        let mid = &self.scenario.machines[machine].id;
        self.log("complete", mid.clone(), || format!("order=P{order_id}"));

        let item = self.orders[idx].item;
        let routing = &self.scenario.items[item].routing;
        self.orders[idx].routing_position += 1;
        let pos = self.orders[idx].routing_position;
        let mut next_machine = None;
        if pos < routing.len() {
            let nm = routing[pos].machine;
            self.orders[idx].state = OrderState::Queued;
            self.orders[idx].step_entry_times.push(self.now);
            self.machines[nm].queue.push_back(idx);
            next_machine = Some(nm);
        } else {
            let qty = self.orders[idx].quantity;
            self.orders[idx].state = OrderState::Finished;
            self.orders[idx].completion_time = Some(self.now);
            self.wip_pieces -= qty;
            self.stock[item] += qty;
            if self.end_items[item] {
                self.fgi_pieces += qty;
            }
            self.log("finish", format!("P{order_id}"), || format!("qty={qty}"));
            self.try_deliver(item);
        }

        self.evaluate(machine)?;
        self.try_start(machine)?;
        if let Some(nm) = next_machine {
            if nm != machine {
                self.try_start(nm)?;
            }
        }
        Ok(())
    }

    fn on_tick(&mut self) -> Result<()> {
        for m in 0..self.machines.len() {
            self.evaluate(m)?;
            self.try_start(m)?;
        }
        self.schedule(self.now + self.cfg.dispatch.check_interval, Priority::DispatchTick, EventKind::Tick);
        Ok(())
    }

    fn finish(mut self) -> Result<SimOutput> {
        for m in 0..self.machines.len() {
            if let Some(b) = self.machines[m].busy.as_ref().map(|b| (b.start, b.end)) {
                self.observe_busy(m, b.0, b.1);
            }
        }
        for c in &self.customers {
            if c.due >= self.warmup_end && c.due < self.horizon_end {
                self.ledger.total_due += 1;
                if matches!(c.delivered, Some(t) if t <= c.due) {
                    self.ledger.on_time += 1;
                }
            }
        }
        let observed_minutes = self.horizon_end - self.warmup_end;
        let machines = self
            .machines
            .iter()
            .zip(&self.scenario.machines)
            .map(|(rt, spec)| MachineKpi {
                machine: spec.id.clone(),
                decisions: rt.counters.decisions,
                price_exceeded: rt.counters.price_exceeded,
                switch_offs: rt.counters.switch_offs,
                utilization: rt.observed_busy / observed_minutes,
            })
            .collect();
        let mut result = costing::finalize(&self.ledger, observed_minutes / MINUTES_PER_DAY, machines)?;
        result.replication = self.cfg.replication;
        result.planned_lead_time = self.cfg.planning.planned_lead_time;
        result.safety_stock_prop = self.cfg.planning.safety_stock_prop;
        result.fop_period = self.cfg.planning.fop_period;
        result.energy_factor = self.cfg.dispatch.energy_factor;
        result.capacity_factor = self.cfg.dispatch.capacity_factor;
        Ok(SimOutput {
            result,
            ledger: self.ledger,
            trace: RunTrace {
                orders: self.orders,
                customers: self.customers,
                steps: self.steps,
                state_changes: self.state_changes,
                final_wip_pieces: self.wip_pieces,
                warmup_end: self.warmup_end,
                horizon_end: self.horizon_end,
                late_plans: self.late_plans,
            },
            event_log: self.log,
            mrp_rows: self.mrp_rows,
        })
    }
}
