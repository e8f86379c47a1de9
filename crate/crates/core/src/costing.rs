//! Cost accrual and per-run KPI records.
//!
//! Inventory costs are piece-day integrals times a rate in CU per piece per
//! day. Energy costs multiply the machine's power draw by the realized
//! processing time and the price at machine entry:
//! `kW * (minutes / 60) * (CU/MWh / 1000) = CU`.

use std::fmt::Write as _;

use crate::energyprice::PriceSeries;
use crate::scenario::MachineSpec;
use crate::{Error, Result, MINUTES_PER_DAY, MINUTES_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostCategory {
    Wip,
    Fgi,
    Tardiness,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostLedger {
    pub wip_cu: f64,
    pub fgi_cu: f64,
    pub tardiness_cu: f64,
    pub energy_cu: f64,
    pub wip_piece_days: f64,
    pub fgi_piece_days: f64,
    pub tardy_piece_days: f64,
    /// kWh consumed.
    pub energy_kwh: f64,
    pub on_time: u64,
    pub total_due: u64,
}

impl CostLedger {
    /// Adds `pieces * (to - from) * rate`, with times in minutes and the
    /// rate per piece-day.
    pub fn accrue_inventory(
        &mut self,
        category: CostCategory,
        pieces: f64,
        from: f64,
        to: f64,
        rate: f64,
    ) -> Result<()> {
        if to < from {
            return Err(Error::InvalidParam(format!("negative accrual span {from}..{to}")));
        }
        let piece_days = pieces * (to - from) / MINUTES_PER_DAY;
        let cost = piece_days * rate;
        match category {
            CostCategory::Wip => {
                self.wip_piece_days += piece_days;
                self.wip_cu += cost;
            }
            CostCategory::Fgi => {
                self.fgi_piece_days += piece_days;
                self.fgi_cu += cost;
            }
            CostCategory::Tardiness => {
                self.tardy_piece_days += piece_days;
                self.tardiness_cu += cost;
            }
        }
        Ok(())
    }

    /// Charges `minutes` of machine time at the price of the hour
    /// containing `entry_time`. Returns the cost added.
    pub fn accrue_energy(
        &mut self,
        machine: &MachineSpec,
        entry_time: f64,
        minutes: f64,
        prices: &PriceSeries,
    ) -> Result<f64> {
        let price = prices.price_at(entry_time)?;
        let kwh = machine.power_kw * minutes / MINUTES_PER_HOUR;
        let cost = kwh * price / 1000.0;
        self.energy_kwh += kwh;
        self.energy_cu += cost;
        Ok(cost)
    }

    pub fn reset(&mut self) {
        *self = CostLedger::default();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineKpi {
    pub machine: String,
    pub decisions: u64,
    pub price_exceeded: u64,
    pub switch_offs: u64,
    /// Busy (setup and processing) share of the observed window.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub param_point_id: u64,
    pub replication: u64,
    pub planned_lead_time: u32,
    pub safety_stock_prop: f64,
    pub fop_period: u32,
    pub energy_factor: f64,
    pub capacity_factor: f64,
    pub wip_per_day: f64,
    pub fgi_per_day: f64,
    pub tardiness_per_day: f64,
    pub energy_per_day: f64,
    pub prod_logistics_per_day: f64,
    pub overall_per_day: f64,
    pub service_level: f64,
    pub machines: Vec<MachineKpi>,
}

/// Normalizes the ledger by the observed (post-warmup) days.
pub fn finalize(ledger: &CostLedger, observed_days: f64, machines: Vec<MachineKpi>) -> Result<RunResult> {
    if !(observed_days > 0.0) {
        return Err(Error::InvalidParam("observed horizon must be positive".into()));
    }
    let wip = ledger.wip_cu / observed_days;
    let fgi = ledger.fgi_cu / observed_days;
    let tardiness = ledger.tardiness_cu / observed_days;
    let energy = ledger.energy_cu / observed_days;
    let prod_logistics = wip + fgi + tardiness;
    Ok(RunResult {
        param_point_id: 0,
        replication: 0,
        planned_lead_time: 0,
        safety_stock_prop: 0.0,
        fop_period: 0,
        energy_factor: 0.0,
        capacity_factor: 0.0,
        wip_per_day: wip,
        fgi_per_day: fgi,
        tardiness_per_day: tardiness,
        energy_per_day: energy,
        prod_logistics_per_day: prod_logistics,
        overall_per_day: prod_logistics + energy,
        service_level: if ledger.total_due == 0 {
            1.0
        } else {
            ledger.on_time as f64 / ledger.total_due as f64
        },
        machines,
    })
}

const FIXED_COLUMNS: [&str; 14] = [
    "param_point_id",
    "replication",
    "planned_lead_time",
    "safety_stock",
    "fop_period",
    "energy_factor",
    "capacity_factor",
    "wip",
    "fgi",
    "tardiness",
    "energy",
    "prod_logistics",
    "overall",
    "service_level",
];

const MACHINE_FIELDS: [&str; 4] = ["decisions", "price_exceeded", "switch_offs", "utilization"];

impl RunResult {
    pub fn csv_header(machine_ids: &[String]) -> String {
        let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        for id in machine_ids {
            for f in MACHINE_FIELDS {
                cols.push(format!("{id}:{f}"));
            }
        }
        cols.join(",")
    }

    pub fn machine_ids(&self) -> Vec<String> {
        self.machines.iter().map(|m| m.machine.clone()).collect()
    }

    pub fn to_csv_row(&self) -> String {
        let mut row = String::new();
        let _ = write!(
            row,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.param_point_id,
            self.replication,
            self.planned_lead_time,
            self.safety_stock_prop,
            self.fop_period,
            self.energy_factor,
            self.capacity_factor,
            self.wip_per_day,
            self.fgi_per_day,
            self.tardiness_per_day,
            self.energy_per_day,
            self.prod_logistics_per_day,
            self.overall_per_day,
            self.service_level
        );
        for m in &self.machines {
            let _ = write!(
                row,
                ",{},{},{},{}",
                m.decisions, m.price_exceeded, m.switch_offs, m.utilization
            );
        }
        row
    }

    pub fn total_switch_offs(&self) -> u64 {
        self.machines.iter().map(|m| m.switch_offs).sum()
    }

    pub fn total_price_exceeded(&self) -> u64 {
        self.machines.iter().map(|m| m.price_exceeded).sum()
    }
}

/// Writes results with a header derived from the first row's machines.
pub fn write_results_csv(results: &[RunResult]) -> String {
    let ids = results.first().map(|r| r.machine_ids()).unwrap_or_default();
    let mut out = RunResult::csv_header(&ids);
    out.push('\n');
    for r in results {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn read_results_csv(text: &str) -> Result<Vec<RunResult>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Aggregate(format!("results file lacks column `{name}`")))
    };
    let fixed: Vec<usize> = FIXED_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut machine_ids: Vec<String> = Vec::new();
    for h in headers.iter() {
        if let Some(id) = h.strip_suffix(":decisions") {
            machine_ids.push(id.to_string());
        }
    }
    let machine_cols: Vec<[usize; 4]> = machine_ids
        .iter()
        .map(|id| -> Result<[usize; 4]> {
            Ok([
                col(&format!("{id}:decisions"))?,
                col(&format!("{id}:price_exceeded"))?,
                col(&format!("{id}:switch_offs"))?,
                col(&format!("{id}:utilization"))?,
            ])
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = n + 2;
        let f = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| Error::parse(line, format!("`{}` is not a number", &record[i])))
        };
        let u = |i: usize| -> Result<u64> {
            record[i]
                .parse::<u64>()
                .map_err(|_| Error::parse(line, format!("`{}` is not an integer", &record[i])))
        };
        let machines = machine_ids
            .iter()
            .zip(&machine_cols)
            .map(|(id, c)| -> Result<MachineKpi> {
                Ok(MachineKpi {
                    machine: id.clone(),
                    decisions: u(c[0])?,
                    price_exceeded: u(c[1])?,
                    switch_offs: u(c[2])?,
                    utilization: f(c[3])?,
                })
            })
            .collect::<Result<_>>()?;
        out.push(RunResult {
            param_point_id: u(fixed[0])?,
            replication: u(fixed[1])?,
            planned_lead_time: u(fixed[2])? as u32,
            safety_stock_prop: f(fixed[3])?,
            fop_period: u(fixed[4])? as u32,
            energy_factor: f(fixed[5])?,
            capacity_factor: f(fixed[6])?,
            wip_per_day: f(fixed[7])?,
            fgi_per_day: f(fixed[8])?,
            tardiness_per_day: f(fixed[9])?,
            energy_per_day: f(fixed[10])?,
            prod_logistics_per_day: f(fixed[11])?,
            overall_per_day: f(fixed[12])?,
            service_level: f(fixed[13])?,
            machines,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn machine() -> MachineSpec {
        MachineSpec {
            id: "M".into(),
            daily_capacity: 1440.0,
            power_kw: 1.0,
        }
    }

    #[test]
    fn inventory_examples() {
        let mut l = CostLedger::default();
        l.accrue_inventory(CostCategory::Wip, 1.0, 0.0, 2.0 * 1440.0, 1.0).unwrap();
        assert!((l.wip_cu - 2.0).abs() < 1e-12);
        l.accrue_inventory(CostCategory::Tardiness, 1.0, 0.0, 1440.0, 38.0).unwrap();
        assert!((l.tardiness_cu - 38.0).abs() < 1e-12);
        l.accrue_inventory(CostCategory::Fgi, 10.0, 100.0, 100.0 + 720.0, 2.0).unwrap();
        assert!((l.fgi_cu - 10.0).abs() < 1e-12);
        assert!(l.accrue_inventory(CostCategory::Wip, 1.0, 5.0, 4.0, 1.0).is_err());
    }

    #[test]
    fn energy_examples() {
        let prices = PriceSeries::from_hourly(vec![120.0; 24]).unwrap();
        let mut l = CostLedger::default();
        let c = l.accrue_energy(&machine(), 30.0, 120.0, &prices).unwrap();
        assert!((c - 0.24).abs() < 1e-12);
        assert_eq!(l.accrue_energy(&machine(), 30.0, 0.0, &prices).unwrap(), 0.0);
        let doubled = prices.scaled(2.0).unwrap();
        let c2 = CostLedger::default().accrue_energy(&machine(), 30.0, 120.0, &doubled).unwrap();
        assert!((c2 - 0.48).abs() < 1e-12);
    }

    #[test]
    fn finalize_rates() {
        let l = CostLedger {
            wip_cu: 500.0,
            on_time: 4,
            total_due: 4,
            ..Default::default()
        };
        let r = finalize(&l, 250.0, vec![]).unwrap();
        assert_eq!(r.wip_per_day, 2.0);
        assert_eq!(r.service_level, 1.0);
        assert_eq!(r.overall_per_day, r.prod_logistics_per_day + r.energy_per_day);
        assert!(finalize(&l, 0.0, vec![]).is_err());
        assert_eq!(finalize(&CostLedger::default(), 1.0, vec![]).unwrap().service_level, 1.0);
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            wip in 0.0f64..1e4, fgi in 0.0f64..1e4, tard in 0.0f64..1e5, energy in 0.0f64..1e4,
            sl in 0.0f64..1.0, d in 0u64..10_000, util in 0.0f64..1.0,
        ) {
            let mut l = CostLedger { wip_cu: wip, fgi_cu: fgi, tardiness_cu: tard, energy_cu: energy, ..Default::default() };
            l.on_time = (sl * 100.0) as u64;
            l.total_due = 100;
            let mut r = finalize(&l, 250.0, vec![
                MachineKpi { machine: "M1.1".into(), decisions: d, price_exceeded: d / 2, switch_offs: d / 3, utilization: util },
                MachineKpi { machine: "M1.2".into(), decisions: 1, price_exceeded: 0, switch_offs: 0, utilization: 0.5 },
            ]).unwrap();
            r.param_point_id = 17;
            r.replication = 2;
            r.safety_stock_prop = 0.5;
            r.energy_factor = 0.9;
            let text = write_results_csv(std::slice::from_ref(&r));
            let back = read_results_csv(&text).unwrap();
            prop_assert_eq!(back, vec![r]);
        }
    }
}
