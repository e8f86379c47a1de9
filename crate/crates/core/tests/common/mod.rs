//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use edsim::energyprice::PriceSeries;
use edsim::mrp::{BookedDemand, InventoryState, ScheduledReceipt};
use edsim::scenario::{PlanningParams, Scenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// MRP projection oracle

/// A planned order reduced to the fields the oracle predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlanTuple {
    pub item: usize,
    pub due_day: i64,
    pub quantity: u64,
    pub start: i64,
    pub end: i64,
    pub late: bool,
}

/// A small multi-level instance. Item `i` may consume items `j > i`.
#[derive(Debug, Clone)]
pub struct MrpInstance {
    pub items: usize,
    /// (parent, child, qty_per)
    pub bom: Vec<(usize, usize, u32)>,
    pub expected_qty: Vec<u32>,
    pub state: InventoryState,
    pub params: PlanningParams,
    pub today: i64,
    pub horizon: usize,
}

impl MrpInstance {
    pub fn random(r: &mut ChaCha8Rng) -> MrpInstance {
        let items = r.random_range(1..=3usize);
        let mut bom = Vec::new();
        for p in 0..items {
            for c in p + 1..items {
                if r.random_bool(0.5) {
                    bom.push((p, c, r.random_range(1..=3u32)));
                }
            }
        }
        let horizon = r.random_range(1..=20usize);
        let today = r.random_range(0..30i64);
        let mut state = InventoryState::empty(items);
        for i in 0..items {
            state.on_hand[i] = r.random_range(0..60);
        }
        for _ in 0..r.random_range(0..8) {
            state.demand.push(BookedDemand {
                item: r.random_range(0..items),
                quantity: r.random_range(1..40),
                // Some demand lies in the past and some beyond the horizon.
                due_day: today + r.random_range(-3..horizon as i64 + 3),
            });
        }
        for _ in 0..r.random_range(0..4) {
            state.receipts.push(ScheduledReceipt {
                item: r.random_range(0..items),
                quantity: r.random_range(1..40),
                day: today + r.random_range(-2..horizon as i64 + 2),
            });
        }
        state.next_order_id = r.random_range(0..100);
        MrpInstance {
            items,
            bom,
            expected_qty: (0..items).map(|_| r.random_range(1..60)).collect(),
            state,
            params: PlanningParams {
                planned_lead_time: r.random_range(1..=10),
                fop_period: r.random_range(1..=6),
                safety_stock_prop: [0.0, 0.5, 1.0, 1.5, 2.0][r.random_range(0..5)],
            },
            today,
            horizon,
        }
    }

    pub fn scenario(&self) -> Scenario {
        let mut text = String::from("[machines]\nmachine\nM\n[items]\nitem,expected_order_qty\n");
        for i in 0..self.items {
            text.push_str(&format!("{},{}\n", 100 + i, self.expected_qty[i]));
        }
        text.push_str("[routing]\nitem,step,machine,proc_per_unit,setup\n");
        for i in 0..self.items {
            text.push_str(&format!("{},0,M,1,0\n", 100 + i));
        }
        text.push_str("[bom]\nparent,child,qty_per,always_available\n");
        for &(p, c, q) in &self.bom {
            text.push_str(&format!("{},{},{},false\n", 100 + p, 100 + c, q));
        }
        for i in 0..self.items {
            text.push_str(&format!("{},900,1,true\n", 100 + i));
        }
        Scenario::parse(&text).expect("instance scenario parses")
    }
}

/// Cumulative shortfall of projected stock below the safety level:
/// `C(t) = max(0, max_{s<=t} (ss - P0(s)))` with `P0` the projection
/// without new orders. Net requirements are the increments of `C`.
pub fn cumulative_cover(gross: &[i64], receipts: &[i64], on_hand: i64, ss: i64) -> Vec<i64> {
    let mut p0 = on_hand;
    let mut worst = 0i64;
    let mut c = Vec::with_capacity(gross.len());
    for t in 0..gross.len() {
        p0 += receipts[t] - gross[t];
        worst = worst.max(ss - p0);
        c.push(worst);
    }
    c
}

/// Plans `inst` by projection, FOP windows over the cover increments and
/// explicit top-down explosion.
pub fn mrp_oracle(inst: &MrpInstance) -> Vec<PlanTuple> {
    let h = inst.horizon;
    let clamp = |day: i64| -> Option<usize> {
        let off = if day < inst.today { 0 } else { (day - inst.today) as usize };
        (off < h).then_some(off)
    };
    let mut gross = vec![vec![0i64; h]; inst.items];
    let mut receipts = vec![vec![0i64; h]; inst.items];
    for d in &inst.state.demand {
        if let Some(b) = clamp(d.due_day) {
            gross[d.item][b] += d.quantity as i64;
        }
    }
    for r in &inst.state.receipts {
        if let Some(b) = clamp(r.day) {
            receipts[r.item][b] += r.quantity as i64;
        }
    }
    // Parents have lower indices, so ascending order is top-down.
    let mut plans = Vec::new();
    let lt = inst.params.planned_lead_time as i64;
    for item in 0..inst.items {
        let ss = (inst.params.safety_stock_prop * inst.expected_qty[item] as f64).round() as i64;
        let c = cumulative_cover(&gross[item], &receipts[item], inst.state.on_hand[item] as i64, ss);
        let covered_before = |t: usize| if t == 0 { 0 } else { c[t - 1] };
        let fop = inst.params.fop_period as usize;
        let mut t = 0;
        while t < h {
            if c[t] == covered_before(t) {
                t += 1;
                continue;
            }
            let last = (t + fop - 1).min(h - 1);
            let qty = c[last] - covered_before(t);
            let due = inst.today + t as i64;
            let start = (due - lt).max(inst.today);
            plans.push(PlanTuple {
                item,
                due_day: due,
                quantity: qty as u64,
                start,
                end: start + lt,
                late: due - lt < inst.today,
            });
            for &(p, child, q) in &inst.bom {
                if p == item {
                    if let Some(b) = clamp(start) {
                        gross[child][b] += qty * q as i64;
                    }
                }
            }
            t = last + 1;
        }
    }
    plans.sort();
    plans
}

/// Net requirements read off the cover increments, for the lot-for-lot check.
pub fn oracle_net(gross: &[i64], receipts: &[i64], on_hand: i64, ss: i64) -> Vec<i64> {
    let c = cumulative_cover(gross, receipts, on_hand, ss);
    (0..c.len()).map(|t| c[t] - if t == 0 { 0 } else { c[t - 1] }).collect()
}

// ---------------------------------------------------------------------------
// Dispatching pseudo-code interpreter

#[derive(Debug, Clone, Copy, PartialEq)]
enum Val {
    Num(f64),
    Bool(bool),
}

/// Inputs visible to the pseudo-code.
pub struct RuleWorld<'a> {
    pub hourly: &'a [f64],
    pub start: NaiveDate,
    pub now_minutes: f64,
    pub queue: &'a [(f64, f64)],
    pub daily_capacity: f64,
    pub energy_factor: f64,
    pub capacity_factor: f64,
}

/// Long-term average as the plain mean of all hours falling into the
/// calendar month of `now`.
fn month_average(hourly: &[f64], start: NaiveDate, now_hour: usize) -> f64 {
    let month_of = |h: usize| {
        let d = start + Duration::days((h / 24) as i64);
        (d.year(), d.month())
    };
    let target = month_of(now_hour);
    let (sum, n) = hourly
        .iter()
        .enumerate()
        .filter(|(h, _)| month_of(*h) == target)
        .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
    sum / n as f64
}

/// Executes the rule's function body line by line over a variable store.
/// Returns `(machineOn, currentWorkload)`; the workload is zero when the
/// price branch decided.
pub fn interpret_rule(w: &RuleWorld) -> (bool, f64) {
    let mut vars: BTreeMap<&str, Val> = BTreeMap::new();
    let num = |vars: &BTreeMap<&str, Val>, k: &str| match vars[k] {
        Val::Num(x) => x,
        Val::Bool(_) => panic!("{k} is not a number"),
    };
    let now_hour = (w.now_minutes / 60.0).floor() as usize;
    let mut pc = 8;
    loop {
        match pc {
            8 => {
                vars.insert("currentEnergyPrice", Val::Num(w.hourly[now_hour]));
                pc = 9;
            }
            9 => {
                let avg = month_average(w.hourly, w.start, now_hour);
                vars.insert("energyThreshold", Val::Num(avg * w.energy_factor));
                pc = 10;
            }
            10 => {
                vars.insert("machineOn", Val::Bool(false));
                pc = 11;
            }
            11 => {
                pc = if num(&vars, "currentEnergyPrice") < num(&vars, "energyThreshold") { 12 } else { 14 };
            }
            12 => {
                vars.insert("machineOn", Val::Bool(true));
                pc = 25;
            }
            14 => {
                vars.insert("currentWorkload", Val::Num(0.0));
                pc = 15;
            }
            15 => {
                for &(processing, setup) in w.queue {
                    let cur = num(&vars, "currentWorkload");
                    vars.insert("currentWorkload", Val::Num(cur + (processing + setup)));
                }
                pc = 18;
            }
            18 => {
                vars.insert("workloadThreshold", Val::Num(w.daily_capacity * w.capacity_factor));
                pc = 19;
            }
            19 => {
                pc = if num(&vars, "currentWorkload") > num(&vars, "workloadThreshold") { 20 } else { 22 };
            }
            20 => {
                vars.insert("machineOn", Val::Bool(true));
                pc = 25;
            }
            22 => {
                vars.insert("machineOn", Val::Bool(false));
                pc = 25;
            }
            25 => {
                let on = matches!(vars["machineOn"], Val::Bool(true));
                let workload = match vars.get("currentWorkload") {
                    Some(Val::Num(x)) => *x,
                    _ => 0.0,
                };
                return (on, workload);
            }
            other => unreachable!("no line {other}"),
        }
    }
}

/// Prices drawn from a small integer set so that ties with the threshold
/// occur.
pub fn random_prices(r: &mut ChaCha8Rng, hours: usize) -> Vec<f64> {
    (0..hours).map(|_| (r.random_range(0..8) * 20) as f64).collect()
}

// ---------------------------------------------------------------------------
// Desk-scale scenarios

/// Two items on two machines with random routings and moderate load.
pub fn desk_scenario(r: &mut ChaCha8Rng) -> Scenario {
    let mut text = String::from("[machines]\nmachine,daily_capacity,power_kw\nA,1440,1.5\nB,1440,0.8\n");
    text.push_str("[items]\nitem,expected_order_qty\n1,20\n2,30\n");
    text.push_str("[routing]\nitem,step,machine,proc_per_unit,setup\n");
    for item in 1..=2 {
        let steps = r.random_range(1..=2);
        let first = r.random_range(0..2);
        for s in 0..steps {
            let m = ["A", "B"][(first + s) % 2];
            let proc = r.random_range(50..150) as f64 / 10.0;
            text.push_str(&format!("{item},{s},{m},{proc},{}\n", r.random_range(0..120)));
        }
    }
    text.push_str("[bom]\nparent,child,qty_per,always_available\n1,9,1,true\n2,9,1,true\n");
    Scenario::parse(&text).expect("desk scenario parses")
}

pub fn flat_prices(days: usize, level: f64) -> PriceSeries {
    PriceSeries::from_hourly(vec![level; days * 24]).unwrap()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
