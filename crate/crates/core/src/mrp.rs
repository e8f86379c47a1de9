//! Regenerative MRP: netting against a safety-stock target, fixed order
//! period (FOP) lot sizing, backward scheduling with a fixed planned lead
//! time and BOM explosion. All quantities are whole pieces and all dates
//! are day indices.

use std::fmt::Write as _;

use crate::scenario::{Component, PlanningParams, Scenario};

/// Default planning horizon in days.
pub const DEFAULT_HORIZON: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedOrder {
    pub order_id: u64,
    /// Index into [`Scenario::items`].
    pub item: usize,
    pub quantity: u64,
    pub planned_start: i64,
    /// Always `planned_start + planned_lead_time`.
    pub planned_end: i64,
    /// Day the lot is needed. Equals `planned_end` unless the start was
    /// clamped to today.
    pub due_day: i64,
    pub released: bool,
    /// Backward scheduling wanted a start in the past.
    pub late: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledReceipt {
    pub item: usize,
    pub quantity: u64,
    /// Day the receipt is expected, i.e. the released order's `due_day`.
    pub day: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BookedDemand {
    pub item: usize,
    pub quantity: u64,
    pub due_day: i64,
}

/// Planning inputs of one MRP run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InventoryState {
    /// Pieces on hand per item (finished goods or component stock).
    pub on_hand: Vec<u64>,
    /// Open released production orders.
    pub receipts: Vec<ScheduledReceipt>,
    /// Undelivered customer orders.
    pub demand: Vec<BookedDemand>,
    /// First id handed to newly planned orders.
    pub next_order_id: u64,
}

impl InventoryState {
    pub fn empty(items: usize) -> Self {
        InventoryState {
            on_hand: vec![0; items],
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lot {
    pub quantity: u64,
    /// Offset of the due day from the first bucket.
    pub due: usize,
}

/// Safety stock in pieces, rounded to the nearest piece.
pub fn safety_stock(prop: f64, expected_order_qty: f64) -> u64 {
    (prop * expected_order_qty).round().max(0.0) as u64
}

/// Net requirements per bucket: the shortfall of projected inventory below
/// `safety_stock`, where earlier net requirements count as covered.
pub fn net_requirements(gross: &[u64], on_hand: u64, receipts: &[u64], safety_stock: u64) -> Vec<u64> {
    let ss = safety_stock as i64;
    let mut projected = on_hand as i64;
    let mut net = Vec::with_capacity(gross.len());
    for (d, &g) in gross.iter().enumerate() {
        projected += receipts.get(d).copied().unwrap_or(0) as i64 - g as i64;
        let shortfall = (ss - projected).max(0);
        projected += shortfall;
        net.push(shortfall as u64);
    }
    net
}

/// Fixed order period lot sizing.
pub fn fop_lots(net: &[u64], fop_period: u32) -> Vec<Lot> {
    let period = fop_period.max(1) as usize;
    let mut lots = Vec::new();
    let mut d = 0;
    while d < net.len() {
        if net[d] == 0 {
            d += 1;
            continue;
        }
        let end = (d + period).min(net.len());
        lots.push(Lot {
            quantity: net[d..end].iter().sum(),
            due: d,
        });
        d = end;
    }
    lots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub planned_start: i64,
    pub planned_end: i64,
    pub late: bool,
}

/// Offsets the due day by the planned lead time, clamping a start in the
/// past to `today`.
pub fn backward_schedule(due_day: i64, planned_lead_time: u32, today: i64) -> Schedule {
    let lt = planned_lead_time as i64;
    let wanted = due_day - lt;
    let planned_start = wanted.max(today);
    Schedule {
        planned_start,
        planned_end: planned_start + lt,
        late: wanted < today,
    }
}

/// One row of the MRP record, for debug dumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrpRow {
    pub run_day: i64,
    pub item: usize,
    pub day: i64,
    pub gross: u64,
    pub projected: i64,
    pub net: u64,
    pub lot: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MrpRun {
    pub orders: Vec<PlannedOrder>,
    pub rows: Vec<MrpRow>,
}

impl MrpRun {
    pub fn write_rows_csv(&self, scenario: &Scenario, out: &mut String) {
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.run_day, scenario.items[r.item].id, r.day, r.gross, r.projected, r.net, r.lot
            );
        }
    }
}

pub const MRP_DUMP_HEADER: &str = "run_day,item,day,gross,projected,net,lot";

fn bucket(day: i64, today: i64, horizon: usize) -> Option<usize> {
    let offset = (day - today).max(0) as usize;
    (offset < horizon).then_some(offset)
}

/// Plans every item over `horizon` days starting at `today`. The result
/// depends only on the arguments, so repeated runs on the same state give
/// the same orders.
pub fn run_mrp(
    scenario: &Scenario,
    state: &InventoryState,
    params: &PlanningParams,
    today: i64,
    horizon: usize,
) -> Vec<PlannedOrder> {
    run_mrp_detailed(scenario, state, params, today, horizon, false).orders
}

pub fn run_mrp_detailed(
    scenario: &Scenario,
    state: &InventoryState,
    params: &PlanningParams,
    today: i64,
    horizon: usize,
    with_rows: bool,
) -> MrpRun {
    let n = scenario.items.len();
    let mut gross = vec![vec![0u64; horizon]; n];
    for d in &state.demand {
        if let Some(b) = bucket(d.due_day, today, horizon) {
            gross[d.item][b] += d.quantity;
        }
    }
    let mut receipts = vec![vec![0u64; horizon]; n];
    for r in &state.receipts {
        if let Some(b) = bucket(r.day, today, horizon) {
            receipts[r.item][b] += r.quantity;
        }
    }

    let mut run = MrpRun::default();
    let mut next_id = state.next_order_id;
    for item in scenario.planning_order() {
        let spec = &scenario.items[item];
        let ss = safety_stock(params.safety_stock_prop, spec.expected_order_qty);
        let on_hand = state.on_hand.get(item).copied().unwrap_or(0);
        let net = net_requirements(&gross[item], on_hand, &receipts[item], ss);
        let lots = fop_lots(&net, params.fop_period);

        if with_rows {
            let mut projected = on_hand as i64;
            let mut lot_at = vec![0u64; horizon];
            for l in &lots {
                lot_at[l.due] = l.quantity;
            }
            for d in 0..horizon {
                projected += receipts[item][d] as i64 - gross[item][d] as i64 + net[d] as i64;
                run.rows.push(MrpRow {
                    run_day: today,
                    item,
                    day: today + d as i64,
                    gross: gross[item][d],
                    projected,
                    net: net[d],
                    lot: lot_at[d],
                });
            }
        }

        for lot in lots {
            let due_day = today + lot.due as i64;
            let sched = backward_schedule(due_day, params.planned_lead_time, today);
            for line in &spec.bom_children {
                if let Component::Item(child) = line.child {
                    if let Some(b) = bucket(sched.planned_start, today, horizon) {
                        gross[child][b] += component_need(lot.quantity, line.qty_per);
                    }
                }
            }
            run.orders.push(PlannedOrder {
                order_id: next_id,
                item,
                quantity: lot.quantity,
                planned_start: sched.planned_start,
                planned_end: sched.planned_end,
                due_day,
                released: false,
                late: sched.late,
            });
            next_id += 1;
        }
    }
    run
}

/// Component pieces needed for `quantity` parents.
pub fn component_need(quantity: u64, qty_per: f64) -> u64 {
    (quantity as f64 * qty_per).ceil() as u64
}

/// Releases `order` if its planned start has been reached and every
/// planned component is in stock; component stock is consumed on release.
pub fn release_check(scenario: &Scenario, order: &PlannedOrder, today: i64, stock: &mut [u64]) -> bool {
    if order.released || today < order.planned_start {
        return false;
    }
    let needs: Vec<(usize, u64)> = scenario.items[order.item]
        .bom_children
        .iter()
        .filter_map(|l| match l.child {
            Component::Item(c) => Some((c, component_need(order.quantity, l.qty_per))),
            Component::AlwaysAvailable(_) => None,
        })
        .collect();
    if needs.iter().any(|&(c, q)| stock[c] < q) {
        return false;
    }
    for (c, q) in needs {
        stock[c] -= q;
    }
    true
}
