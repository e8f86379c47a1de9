//! Static production-system description: machines, items, routings, bill of
//! materials, demand statistics and cost rates.
//!
//! Scenario files use the sectioned CSV dialect from [`crate::csvfmt`]:
//!
//! | section         | columns                                                   |
//! |-----------------|-----------------------------------------------------------|
//! | `[machines]`    | `machine[,daily_capacity][,power_kw]`                     |
//! | `[items]`       | `item,expected_order_qty`                                 |
//! | `[routing]`     | `item,step,machine,proc_per_unit,setup`                   |
//! | `[bom]`         | `parent,child,qty_per[,always_available]`                 |
//! | `[demand]`      | `mean_interarrival,cv_interarrival,cv_quantity,fixed_lead,mean_var_lead,cv_var_lead` |
//! | `[costs]`       | `wip_rate,fgi_rate,tardiness_rate`                        |
//! | `[variability]` | `proc_cv,setup_cv`                                        |
//!
//! `[bom]`, `[demand]`, `[costs]` and `[variability]` are optional and fall
//! back to the defaults below. Times are minutes, demand parameters days.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::csvfmt::{self, Section};
use crate::{Error, Result, MINUTES_PER_DAY};

const DEFAULT_SCENARIO: &str = include_str!("../data/default.scn");

#[derive(Debug, Clone, PartialEq)]
pub struct MachineSpec {
    pub id: String,
    /// Minutes per day.
    pub daily_capacity: f64,
    /// Kilowatts drawn while processing.
    pub power_kw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingStep {
    /// Index into [`Scenario::machines`].
    pub machine: usize,
    /// Minutes per piece.
    pub mean_proc_per_unit: f64,
    /// Minutes per lot.
    pub mean_setup: f64,
    pub sequence_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// Index into [`Scenario::items`]; planned and produced like any item.
    Item(usize),
    /// Purchased part with unlimited stock; never planned.
    AlwaysAvailable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BomLine {
    pub child: Component,
    pub qty_per: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemSpec {
    pub id: String,
    pub routing: Vec<RoutingStep>,
    pub expected_order_qty: f64,
    pub bom_children: Vec<BomLine>,
}

/// Customer demand statistics, all durations in days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandParams {
    pub mean_interarrival: f64,
    pub cv_interarrival: f64,
    pub cv_quantity: f64,
    pub fixed_lead: f64,
    pub mean_var_lead: f64,
    pub cv_var_lead: f64,
}

impl Default for DemandParams {
    fn default() -> Self {
        DemandParams {
            mean_interarrival: 10.0,
            cv_interarrival: 0.2,
            cv_quantity: 0.5,
            fixed_lead: 10.0,
            mean_var_lead: 5.0,
            cv_var_lead: 0.5,
        }
    }
}

/// Cost units per piece per day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub wip_rate: f64,
    pub fgi_rate: f64,
    pub tardiness_rate: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            wip_rate: 1.0,
            fgi_rate: 2.0,
            tardiness_rate: 38.0,
        }
    }
}

/// Coefficients of variation of realized shop-floor times around their means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variability {
    pub proc_cv: f64,
    pub setup_cv: f64,
}

impl Default for Variability {
    fn default() -> Self {
        Variability {
            proc_cv: 0.25,
            setup_cv: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningParams {
    /// Days between planned start and planned end.
    pub planned_lead_time: u32,
    /// Days of net requirements aggregated into one lot.
    pub fop_period: u32,
    /// Safety stock as a multiple of the expected order quantity.
    pub safety_stock_prop: f64,
}

impl PlanningParams {
    pub fn validate(&self) -> Result<()> {
        if self.planned_lead_time < 1 {
            return Err(Error::InvalidParam("planned lead time must be >= 1 day".into()));
        }
        if self.fop_period < 1 {
            return Err(Error::InvalidParam("FOP period must be >= 1 day".into()));
        }
        if !(self.safety_stock_prop >= 0.0) || !self.safety_stock_prop.is_finite() {
            return Err(Error::InvalidParam("safety stock proportion must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchParams {
    pub energy_factor: f64,
    pub capacity_factor: f64,
    /// Minutes between periodic dispatching checks.
    pub check_interval: f64,
}

impl DispatchParams {
    pub fn new(energy_factor: f64, capacity_factor: f64) -> Self {
        DispatchParams {
            energy_factor,
            capacity_factor,
            check_interval: 60.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.energy_factor > 0.0) || !self.energy_factor.is_finite() {
            return Err(Error::InvalidParam("energy factor must be > 0".into()));
        }
        if !(self.capacity_factor >= 0.0) || !self.capacity_factor.is_finite() {
            return Err(Error::InvalidParam("capacity factor must be >= 0".into()));
        }
        if !(self.check_interval > 0.0) || !self.check_interval.is_finite() {
            return Err(Error::InvalidParam("check interval must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub machines: Vec<MachineSpec>,
    pub items: Vec<ItemSpec>,
    pub demand: DemandParams,
    pub costs: CostParams,
    pub variability: Variability,
}

impl Scenario {
    /// The bundled eight-item, four-machine job shop.
    pub fn bundled_default() -> Scenario {
        Scenario::parse(DEFAULT_SCENARIO).expect("bundled scenario is valid")
    }

    pub fn bundled_default_text() -> &'static str {
        DEFAULT_SCENARIO
    }

    pub fn machine_index(&self, id: &str) -> Option<usize> {
        self.machines.iter().position(|m| m.id == id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.id == id)
    }

    /// Items that are not a component of any other item; these receive
    /// customer demand.
    pub fn is_end_item(&self, item: usize) -> bool {
        !self.items.iter().any(|p| {
            p.bom_children
                .iter()
                .any(|l| l.child == Component::Item(item))
        })
    }

    pub fn end_items(&self) -> Vec<usize> {
        (0..self.items.len()).filter(|&i| self.is_end_item(i)).collect()
    }

    /// Item indices ordered so every parent precedes its planned children.
    pub fn planning_order(&self) -> Vec<usize> {
        let n = self.items.len();
        let mut level = vec![0usize; n];
        // Longest path from an end item; acyclicity is checked on load.
        for _ in 0..n {
            let mut changed = false;
            for (p, item) in self.items.iter().enumerate() {
                for line in &item.bom_children {
                    if let Component::Item(c) = line.child {
                        if level[c] < level[p] + 1 {
                            level[c] = level[p] + 1;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (level[i], i));
        order
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Scenario> {
        let sections = csvfmt::parse_sections(text)?;
        let known = ["machines", "items", "routing", "bom", "demand", "costs", "variability"];
        for s in &sections {
            if !known.contains(&s.name.as_str()) {
                return Err(Error::parse(s.line, format!("unknown section [{}]", s.name)));
            }
        }
        let find = |name: &str| sections.iter().find(|s| s.name == name);

        let machines = match find("machines") {
            Some(s) => parse_machines(s)?,
            None => return Err(Error::Semantic("missing [machines] section".into())),
        };
        if machines.is_empty() {
            return Err(Error::Semantic("no machines defined".into()));
        }
        let mut items = match find("items") {
            Some(s) => parse_items(s)?,
            None => return Err(Error::Semantic("missing [items] section".into())),
        };
        if items.is_empty() {
            return Err(Error::Semantic("no items defined".into()));
        }
        match find("routing") {
            Some(s) => parse_routing(s, &machines, &mut items)?,
            None => return Err(Error::Semantic("missing [routing] section".into())),
        }
        if let Some(s) = find("bom") {
            parse_bom(s, &mut items)?;
        }
        let demand = match find("demand") {
            Some(s) => parse_demand(s)?,
            None => DemandParams::default(),
        };
        let costs = match find("costs") {
            Some(s) => parse_costs(s)?,
            None => CostParams::default(),
        };
        let variability = match find("variability") {
            Some(s) => parse_variability(s)?,
            None => Variability::default(),
        };
        let scenario = Scenario {
            machines,
            items,
            demand,
            costs,
            variability,
        };
        scenario.check_bom_acyclic()?;
        Ok(scenario)
    }

    fn check_bom_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        fn visit(s: &Scenario, i: usize, mark: &mut [u8]) -> Result<()> {
            match mark[i] {
                1 => {
                    return Err(Error::Semantic(format!(
                        "bill of materials has a cycle through item {}",
                        s.items[i].id
                    )))
                }
                2 => return Ok(()),
                _ => {}
            }
            mark[i] = 1;
            for line in &s.items[i].bom_children {
                if let Component::Item(c) = line.child {
                    visit(s, c, mark)?;
                }
            }
            mark[i] = 2;
            Ok(())
        }
        let mut mark = vec![0u8; self.items.len()];
        for i in 0..self.items.len() {
            visit(self, i, &mut mark)?;
        }
        Ok(())
    }

    /// Serializes back into the scenario file dialect.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str("[machines]\nmachine,daily_capacity,power_kw\n");
        for m in &self.machines {
            let _ = writeln!(out, "{},{},{}", m.id, m.daily_capacity, m.power_kw);
        }
        out.push_str("\n[items]\nitem,expected_order_qty\n");
        for i in &self.items {
            let _ = writeln!(out, "{},{}", i.id, i.expected_order_qty);
        }
        out.push_str("\n[routing]\nitem,step,machine,proc_per_unit,setup\n");
        for i in &self.items {
            for s in &i.routing {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    i.id, s.sequence_index, self.machines[s.machine].id, s.mean_proc_per_unit, s.mean_setup
                );
            }
        }
        out.push_str("\n[bom]\nparent,child,qty_per,always_available\n");
        for i in &self.items {
            for l in &i.bom_children {
                let (child, always) = match &l.child {
                    Component::Item(c) => (self.items[*c].id.as_str(), false),
                    Component::AlwaysAvailable(id) => (id.as_str(), true),
                };
                let _ = writeln!(out, "{},{},{},{}", i.id, child, l.qty_per, always);
            }
        }
        let d = &self.demand;
        let _ = write!(
            out,
            "\n[demand]\nmean_interarrival,cv_interarrival,cv_quantity,fixed_lead,mean_var_lead,cv_var_lead\n{},{},{},{},{},{}\n",
            d.mean_interarrival, d.cv_interarrival, d.cv_quantity, d.fixed_lead, d.mean_var_lead, d.cv_var_lead
        );
        let c = &self.costs;
        let _ = write!(
            out,
            "\n[costs]\nwip_rate,fgi_rate,tardiness_rate\n{},{},{}\n",
            c.wip_rate, c.fgi_rate, c.tardiness_rate
        );
        let v = &self.variability;
        let _ = write!(out, "\n[variability]\nproc_cv,setup_cv\n{},{}\n", v.proc_cv, v.setup_cv);
        out
    }

    /// Expected customer order rate in lots per day and pieces per day for
    /// each item. Component rates follow from their parents.
    fn item_rates(&self) -> Vec<(f64, f64)> {
        let mut rates = vec![(0.0, 0.0); self.items.len()];
        for i in self.planning_order() {
            if self.is_end_item(i) {
                rates[i] = (
                    1.0 / self.demand.mean_interarrival,
                    self.items[i].expected_order_qty / self.demand.mean_interarrival,
                );
            }
            let (lots, pieces) = rates[i];
            for line in &self.items[i].bom_children {
                if let Component::Item(c) = line.child {
                    rates[c].0 += lots;
                    rates[c].1 += pieces * line.qty_per;
                }
            }
        }
        rates
    }
}

fn parse_machines(s: &Section) -> Result<Vec<MachineSpec>> {
    let id_col = s.require_column("machine")?;
    let cap_col = s.column("daily_capacity");
    let pow_col = s.column("power_kw");
    let mut out: Vec<MachineSpec> = Vec::new();
    for (line, row) in &s.rows {
        let id = row[id_col].clone();
        if !csvfmt::is_identifier(&id) {
            return Err(Error::parse(*line, format!("`{id}` is not a valid machine identifier")));
        }
        if out.iter().any(|m| m.id == id) {
            return Err(Error::Semantic(format!("duplicate machine id {id}")));
        }
        let daily_capacity = match cap_col {
            Some(c) => csvfmt::parse_f64(*line, "daily_capacity", &row[c])?,
            None => MINUTES_PER_DAY,
        };
        let power_kw = match pow_col {
            Some(c) => csvfmt::parse_f64(*line, "power_kw", &row[c])?,
            None => 1.0,
        };
        out.push(MachineSpec {
            id,
            daily_capacity,
            power_kw,
        });
    }
    Ok(out)
}

fn parse_items(s: &Section) -> Result<Vec<ItemSpec>> {
    let id_col = s.require_column("item")?;
    let qty_col = s.require_column("expected_order_qty")?;
    let mut out: Vec<ItemSpec> = Vec::new();
    for (line, row) in &s.rows {
        let id = row[id_col].clone();
        if !csvfmt::is_identifier(&id) {
            return Err(Error::parse(*line, format!("`{id}` is not a valid item identifier")));
        }
        if out.iter().any(|i| i.id == id) {
            return Err(Error::Semantic(format!("duplicate item id {id}")));
        }
        out.push(ItemSpec {
            id,
            routing: Vec::new(),
            expected_order_qty: csvfmt::parse_f64(*line, "expected_order_qty", &row[qty_col])?,
            bom_children: Vec::new(),
        });
    }
    Ok(out)
}

fn parse_routing(s: &Section, machines: &[MachineSpec], items: &mut [ItemSpec]) -> Result<()> {
    let item_col = s.require_column("item")?;
    let step_col = s.require_column("step")?;
    let machine_col = s.require_column("machine")?;
    let proc_col = s.require_column("proc_per_unit")?;
    let setup_col = s.require_column("setup")?;
    for (line, row) in &s.rows {
        let item = items
            .iter()
            .position(|i| i.id == row[item_col])
            .ok_or_else(|| Error::Semantic(format!("routing references unknown item {}", row[item_col])))?;
        let machine = machines
            .iter()
            .position(|m| m.id == row[machine_col])
            .ok_or_else(|| {
                Error::Semantic(format!(
                    "routing of item {} references unknown machine {}",
                    row[item_col], row[machine_col]
                ))
            })?;
        items[item].routing.push(RoutingStep {
            machine,
            mean_proc_per_unit: csvfmt::parse_f64(*line, "proc_per_unit", &row[proc_col])?,
            mean_setup: csvfmt::parse_f64(*line, "setup", &row[setup_col])?,
            sequence_index: csvfmt::parse_usize(*line, "step", &row[step_col])?,
        });
    }
    for item in items.iter_mut() {
        if item.routing.is_empty() {
            return Err(Error::Semantic(format!("item {} has no routing", item.id)));
        }
        item.routing.sort_by_key(|s| s.sequence_index);
        for (expected, step) in item.routing.iter().enumerate() {
            if step.sequence_index != expected {
                return Err(Error::Semantic(format!(
                    "routing of item {} must number steps 0..{} without gaps or repeats",
                    item.id,
                    item.routing.len() - 1
                )));
            }
        }
    }
    Ok(())
}

fn parse_bom(s: &Section, items: &mut [ItemSpec]) -> Result<()> {
    let parent_col = s.require_column("parent")?;
    let child_col = s.require_column("child")?;
    let qty_col = s.require_column("qty_per")?;
    let always_col = s.column("always_available");
    let index: HashMap<String, usize> = items.iter().enumerate().map(|(i, it)| (it.id.clone(), i)).collect();
    for (line, row) in &s.rows {
        let parent = *index
            .get(&row[parent_col])
            .ok_or_else(|| Error::Semantic(format!("bom references unknown parent {}", row[parent_col])))?;
        let always = match always_col {
            Some(c) => csvfmt::parse_bool(*line, "always_available", &row[c])?,
            None => false,
        };
        let child_id = &row[child_col];
        let child = if always {
            if !csvfmt::is_identifier(child_id) {
                return Err(Error::parse(*line, format!("`{child_id}` is not a valid identifier")));
            }
            Component::AlwaysAvailable(child_id.clone())
        } else {
            let c = *index.get(child_id).ok_or_else(|| {
                Error::Semantic(format!(
                    "bom child {child_id} is neither a defined item nor flagged always_available"
                ))
            })?;
            Component::Item(c)
        };
        if items[parent].bom_children.iter().any(|l| l.child == child) {
            return Err(Error::Semantic(format!(
                "duplicate bom line {} -> {child_id}",
                row[parent_col]
            )));
        }
        items[parent].bom_children.push(BomLine {
            child,
            qty_per: csvfmt::parse_f64(*line, "qty_per", &row[qty_col])?,
        });
    }
    Ok(())
}

fn single_row(s: &Section) -> Result<(usize, &[String])> {
    match s.rows.as_slice() {
        [(line, row)] => Ok((*line, row.as_slice())),
        _ => Err(Error::parse(s.line, format!("section [{}] needs exactly one data row", s.name))),
    }
}

fn parse_demand(s: &Section) -> Result<DemandParams> {
    let (line, row) = single_row(s)?;
    let get = |name: &str| -> Result<f64> { csvfmt::parse_f64(line, name, &row[s.require_column(name)?]) };
    Ok(DemandParams {
        mean_interarrival: get("mean_interarrival")?,
        cv_interarrival: get("cv_interarrival")?,
        cv_quantity: get("cv_quantity")?,
        fixed_lead: get("fixed_lead")?,
        mean_var_lead: get("mean_var_lead")?,
        cv_var_lead: get("cv_var_lead")?,
    })
}

fn parse_costs(s: &Section) -> Result<CostParams> {
    let (line, row) = single_row(s)?;
    let get = |name: &str| -> Result<f64> { csvfmt::parse_f64(line, name, &row[s.require_column(name)?]) };
    Ok(CostParams {
        wip_rate: get("wip_rate")?,
        fgi_rate: get("fgi_rate")?,
        tardiness_rate: get("tardiness_rate")?,
    })
}

fn parse_variability(s: &Section) -> Result<Variability> {
    let (line, row) = single_row(s)?;
    let get = |name: &str| -> Result<f64> { csvfmt::parse_f64(line, name, &row[s.require_column(name)?]) };
    Ok(Variability {
        proc_cv: get("proc_cv")?,
        setup_cv: get("setup_cv")?,
    })
}

/// Expected daily load of one machine, split into processing and setup.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineLoad {
    pub machine: String,
    pub processing: f64,
    pub setup: f64,
}

impl MachineLoad {
    pub fn total(&self) -> f64 {
        self.processing + self.setup
    }
}

/// Expected minutes of work per day on each machine, assuming one lot per
/// customer order (lot-for-lot) for the setup share.
pub fn expected_machine_load(scenario: &Scenario) -> Vec<MachineLoad> {
    let mut loads: Vec<MachineLoad> = scenario
        .machines
        .iter()
        .map(|m| MachineLoad {
            machine: m.id.clone(),
            processing: 0.0,
            setup: 0.0,
        })
        .collect();
    for (item, (lots, pieces)) in scenario.items.iter().zip(scenario.item_rates()) {
        for step in &item.routing {
            loads[step.machine].processing += pieces * step.mean_proc_per_unit;
            loads[step.machine].setup += lots * step.mean_setup;
        }
    }
    loads
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Hard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Hard => "error",
        };
        write!(f, "{sev}: {}: {}", self.subject, self.message)
    }
}

/// Checks value invariants and capacity feasibility. Returns an empty list
/// for a clean scenario.
pub fn validate_scenario(scenario: &Scenario) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut hard = |subject: &str, message: String| {
        findings.push(Finding {
            severity: Severity::Hard,
            subject: subject.to_string(),
            message,
        })
    };
    for m in &scenario.machines {
        if !(m.daily_capacity > 0.0) {
            hard(&m.id, format!("daily capacity {} must be positive", m.daily_capacity));
        }
        if !(m.power_kw > 0.0) {
            hard(&m.id, format!("power draw {} kW must be positive", m.power_kw));
        }
    }
    for item in &scenario.items {
        if !(item.expected_order_qty > 0.0) {
            hard(&item.id, format!("expected order quantity {} must be positive", item.expected_order_qty));
        }
        for step in &item.routing {
            if !(step.mean_proc_per_unit > 0.0) {
                hard(
                    &item.id,
                    format!("step {} processing time must be positive", step.sequence_index),
                );
            }
            if !(step.mean_setup >= 0.0) {
                hard(&item.id, format!("step {} setup time must be >= 0", step.sequence_index));
            }
        }
        for line in &item.bom_children {
            if !(line.qty_per > 0.0) {
                hard(&item.id, format!("bom quantity per {} must be positive", line.qty_per));
            }
        }
    }
    let d = &scenario.demand;
    for (name, v) in [
        ("mean_interarrival", d.mean_interarrival),
        ("fixed_lead", d.fixed_lead),
        ("mean_var_lead", d.mean_var_lead),
    ] {
        if !(v > 0.0) {
            hard("demand", format!("{name} must be positive"));
        }
    }
    for (name, v) in [
        ("cv_interarrival", d.cv_interarrival),
        ("cv_quantity", d.cv_quantity),
        ("cv_var_lead", d.cv_var_lead),
        ("proc_cv", scenario.variability.proc_cv),
        ("setup_cv", scenario.variability.setup_cv),
    ] {
        if !(v >= 0.0) {
            hard("demand", format!("{name} must be >= 0"));
        }
    }
    let c = &scenario.costs;
    for (name, v) in [
        ("wip_rate", c.wip_rate),
        ("fgi_rate", c.fgi_rate),
        ("tardiness_rate", c.tardiness_rate),
    ] {
        if !(v >= 0.0) {
            hard("costs", format!("{name} must be >= 0"));
        }
    }
    if findings.is_empty() {
        for (m, load) in scenario.machines.iter().zip(expected_machine_load(scenario)) {
            if load.total() > m.daily_capacity {
                findings.push(Finding {
                    severity: Severity::Warning,
                    subject: m.id.clone(),
                    message: format!(
                        "expected load {:.1} min/day exceeds capacity {} min/day",
                        load.total(),
                        m.daily_capacity
                    ),
                });
            }
        }
    }
    findings
}
