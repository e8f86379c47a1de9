mod common;

use proptest::prelude::*;
use rand::Rng;

use edsim::energyprice::{synthetic_series, SyntheticPriceParams};
use edsim::mrp::{run_mrp, InventoryState};
use edsim::scenario::{expected_machine_load, DispatchParams, PlanningParams, Scenario};
use edsim::shopfloor::{generate_all_demand, run_simulation, write_event_log, SimConfig};

use common::*;

fn arrivals(log: &str) -> Vec<String> {
    log.lines().filter(|l| l.contains(",arrival,")).map(String::from).collect()
}

#[test]
fn replication_shares_demand_across_points() {
    let scenario = Scenario::bundled_default();
    let prices = synthetic_series(&SyntheticPriceParams::default(), 0).unwrap();
    let mut logs = Vec::new();
    for (lt, ef) in [(2, 0.5), (9, 1.3)] {
        let planning = PlanningParams {
            planned_lead_time: lt,
            fop_period: 2,
            safety_stock_prop: 1.0,
        };
        let mut cfg = SimConfig::new(planning, DispatchParams::new(ef, 1.0));
        cfg.seed = 77;
        cfg.replication = 4;
        cfg.event_log = true;
        let out = run_simulation(&scenario, &prices, &cfg).unwrap();
        logs.push(arrivals(&write_event_log(&out.event_log)));
    }
    assert!(logs[0].len() > 200);
    assert_eq!(logs[0], logs[1]);

    let other = generate_all_demand(&scenario, 77, 5, 400.0 * 1440.0).unwrap();
    let same = generate_all_demand(&scenario, 77, 4, 400.0 * 1440.0).unwrap();
    assert_ne!(other, same);
}

#[test]
fn utilization_tracks_expected_load() {
    // Dispatching never holds a machine, so busy time follows the offered load.
    let scenario = Scenario::bundled_default();
    let prices = synthetic_series(&SyntheticPriceParams::default(), 1).unwrap();
    let planning = PlanningParams {
        planned_lead_time: 10,
        fop_period: 1,
        safety_stock_prop: 0.0,
    };
    let mut cfg = SimConfig::new(planning, DispatchParams::new(1.0, 1.0));
    cfg.dispatch_enabled = false;
    let loads = expected_machine_load(&scenario);
    let reps = 4;
    let mut util = vec![0.0; loads.len()];
    for rep in 0..reps {
        cfg.replication = rep;
        let r = run_simulation(&scenario, &prices, &cfg).unwrap().result;
        for (u, m) in util.iter_mut().zip(&r.machines) {
            *u += m.utilization / reps as f64;
        }
    }
    for (u, l) in util.iter().zip(&loads) {
        let want = l.total() / 1440.0;
        assert!((u - want).abs() / want < 0.05, "{}: utilization {u:.4} vs load {want:.4}", l.machine);
    }
}

#[test]
fn price_scaling_keeps_decisions() {
    let mut r = rng(9);
    let scenario = desk_scenario(&mut r);
    let prices = synthetic_series(&SyntheticPriceParams { days: 90, ..Default::default() }, 2).unwrap();
    let planning = PlanningParams {
        planned_lead_time: 3,
        fop_period: 1,
        safety_stock_prop: 0.0,
    };
    let mut cfg = SimConfig::new(planning, DispatchParams::new(0.9, 0.5));
    cfg.days = 90;
    cfg.warmup_days = 10;
    let a = run_simulation(&scenario, &prices, &cfg).unwrap();
    let b = run_simulation(&scenario, &prices.scaled(4.0).unwrap(), &cfg).unwrap();
    assert_eq!(a.trace.state_changes, b.trace.state_changes);
    assert_eq!(a.result.machines, b.result.machines);
    let ratio = b.result.energy_per_day / a.result.energy_per_day;
    assert!((ratio - 4.0).abs() < 1e-9, "{ratio}");
}

#[test]
fn mrp_dump_rows_satisfy_balance() {
    let mut r = rng(3);
    let scenario = desk_scenario(&mut r);
    let prices = synthetic_series(&SyntheticPriceParams { days: 60, ..Default::default() }, 2).unwrap();
    let planning = PlanningParams {
        planned_lead_time: 4,
        fop_period: 3,
        safety_stock_prop: 1.0,
    };
    let mut cfg = SimConfig::new(planning, DispatchParams::new(1.0, 1.0));
    cfg.days = 60;
    cfg.warmup_days = 0;
    cfg.mrp_dump = true;
    let out = run_simulation(&scenario, &prices, &cfg).unwrap();
    assert!(!out.mrp_rows.is_empty());
    // Projected stock never ends a day below safety stock once planned.
    for row in &out.mrp_rows {
        let ss = (scenario.items[row.item].expected_order_qty).round() as i64;
        assert!(row.projected >= ss, "{row:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mrp_is_idempotent(seed in any::<u64>()) {
        let inst = MrpInstance::random(&mut rng(seed));
        let s = inst.scenario();
        let a = run_mrp(&s, &inst.state, &inst.params, inst.today, inst.horizon);
        let b = run_mrp(&s, &inst.state, &inst.params, inst.today, inst.horizon);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn no_overplanning_from_stock(seed in any::<u64>()) {
        // Without receipts, single-level plans cover demand plus safety
        // stock and never exceed it.
        let mut r = rng(seed);
        let mut inst = MrpInstance::random(&mut r);
        inst.bom.clear();
        inst.state.receipts.clear();
        let s = inst.scenario();
        let plans = run_mrp(&s, &inst.state, &inst.params, inst.today, inst.horizon);
        for item in 0..inst.items {
            let demand: u64 = inst
                .state
                .demand
                .iter()
                .filter(|d| d.item == item && d.due_day < inst.today + inst.horizon as i64)
                .map(|d| d.quantity)
                .sum();
            let ss = (inst.params.safety_stock_prop * inst.expected_qty[item] as f64).round() as u64;
            let planned: u64 = plans.iter().filter(|p| p.item == item).map(|p| p.quantity).sum();
            let need = (demand + ss).saturating_sub(inst.state.on_hand[item]);
            prop_assert_eq!(planned, need);
        }
    }

    #[test]
    fn matches_projection_oracle(seed in any::<u64>()) {
        let inst = MrpInstance::random(&mut rng(seed));
        let s = inst.scenario();
        let mut got: Vec<PlanTuple> = run_mrp(&s, &inst.state, &inst.params, inst.today, inst.horizon)
            .iter()
            .map(|o| PlanTuple {
                item: o.item,
                due_day: o.due_day,
                quantity: o.quantity,
                start: o.planned_start,
                end: o.planned_end,
                late: o.late,
            })
            .collect();
        got.sort();
        prop_assert_eq!(got, mrp_oracle(&inst));
    }

    #[test]
    fn empty_state_plans_nothing_without_safety_stock(items in 1usize..4, today in 0i64..50) {
        let mut inst = MrpInstance::random(&mut rng(today as u64));
        inst.items = items;
        inst.expected_qty = vec![10; items];
        inst.bom.clear();
        inst.params.safety_stock_prop = 0.0;
        inst.state = InventoryState::empty(items);
        let s = inst.scenario();
        prop_assert!(run_mrp(&s, &inst.state, &inst.params, today, 20).is_empty());
    }
}

#[test]
fn step_energy_sums_to_ledger() {
    let mut r = rng(31);
    for run in 0..10 {
        let scenario = desk_scenario(&mut r);
        let prices = synthetic_series(&SyntheticPriceParams { days: 100, ..Default::default() }, run).unwrap();
        let planning = PlanningParams {
            planned_lead_time: r.random_range(1..8),
            fop_period: r.random_range(1..4),
            safety_stock_prop: 0.5,
        };
        let mut cfg = SimConfig::new(planning, DispatchParams::new(r.random_range(0.5..1.5), 1.0));
        cfg.days = 100;
        cfg.warmup_days = 20;
        let out = run_simulation(&scenario, &prices, &cfg).unwrap();
        let delivered = out.trace.customers.iter().filter(|c| c.delivered.is_some()).count() as u64;
        assert!(delivered <= out.trace.customers.len() as u64);
        for c in &out.trace.customers {
            if let Some(d) = c.delivered {
                assert!(d >= c.arrival);
            }
        }
        let energy: f64 = out
            .trace
            .steps
            .iter()
            // Steps entering at the warm-up instant precede the statistics reset.
            .filter(|s| s.start > out.trace.warmup_end)
            .map(|s| s.energy_cu)
            .sum();
        assert!((energy - out.ledger.energy_cu).abs() <= 1e-9 * energy.max(1.0));
    }
}
