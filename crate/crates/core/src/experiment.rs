//! Full-factorial parameter grids, replicated parallel sweeps, aggregation
//! over replications and extraction of the energy / production-logistics
//! Pareto front.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::costing::RunResult;
use crate::csvfmt;
use crate::energyprice::PriceSeries;
use crate::scenario::{DispatchParams, PlanningParams, Scenario};
use crate::shopfloor::{run_simulation, SimConfig};
use crate::{Error, Result};

const CI_GRID: &str = include_str!("../data/ci.grid");
const FULL_GRID: &str = include_str!("../data/full.grid");

/// The five swept parameters, in grid order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dimension {
    PlannedLeadTime,
    SafetyStock,
    FopPeriod,
    EnergyFactor,
    CapacityFactor,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::PlannedLeadTime,
        Dimension::SafetyStock,
        Dimension::FopPeriod,
        Dimension::EnergyFactor,
        Dimension::CapacityFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::PlannedLeadTime => "planned_lead_time",
            Dimension::SafetyStock => "safety_stock",
            Dimension::FopPeriod => "fop_period",
            Dimension::EnergyFactor => "energy_factor",
            Dimension::CapacityFactor => "capacity_factor",
        }
    }

    pub fn from_name(name: &str) -> Option<Dimension> {
        Dimension::ALL.into_iter().find(|d| d.name() == name)
    }

    fn integral(self) -> bool {
        matches!(self, Dimension::PlannedLeadTime | Dimension::FopPeriod)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range {
    pub fn single(v: f64) -> Range {
        Range { min: v, max: v, step: 1.0 }
    }

    /// Inclusive values `min, min + step, ..., max`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min <= self.max) || !(self.step > 0.0) {
            return Err(Error::InvalidParam(format!(
                "range {}..{} step {} needs min <= max and step > 0",
                self.min, self.max, self.step
            )));
        }
        let span = (self.max - self.min) / self.step;
        let n = span.round();
        if (span - n).abs() > 1e-6 {
            return Err(Error::InvalidParam(format!(
                "step {} does not divide {}..{}",
                self.step, self.min, self.max
            )));
        }
        Ok((0..=n as usize)
            .map(|k| round10(self.min + k as f64 * self.step))
            .collect())
    }
}

fn round10(v: f64) -> f64 {
    (v * 1e10).round() / 1e10
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub planned_lead_time: Range,
    pub safety_stock: Range,
    pub fop_period: Range,
    pub energy_factor: Range,
    pub capacity_factor: Range,
}

impl GridSpec {
    /// The desk-scale 3 x 2 x 2 x 4 x 4 subsample.
    pub fn ci() -> GridSpec {
        GridSpec::parse(CI_GRID).expect("bundled grid is valid")
    }

    /// The complete 10 x 5 x 6 x 10 x 10 design.
    pub fn full() -> GridSpec {
        GridSpec::parse(FULL_GRID).expect("bundled grid is valid")
    }

    pub fn range(&self, d: Dimension) -> &Range {
        match d {
            Dimension::PlannedLeadTime => &self.planned_lead_time,
            Dimension::SafetyStock => &self.safety_stock,
            Dimension::FopPeriod => &self.fop_period,
            Dimension::EnergyFactor => &self.energy_factor,
            Dimension::CapacityFactor => &self.capacity_factor,
        }
    }

    fn range_mut(&mut self, d: Dimension) -> &mut Range {
        match d {
            Dimension::PlannedLeadTime => &mut self.planned_lead_time,
            Dimension::SafetyStock => &mut self.safety_stock,
            Dimension::FopPeriod => &mut self.fop_period,
            Dimension::EnergyFactor => &mut self.energy_factor,
            Dimension::CapacityFactor => &mut self.capacity_factor,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GridSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridSpec::parse(&text)
    }

    /// Parses a `[grid]` section with rows `name,min,max,step`.
    pub fn parse(text: &str) -> Result<GridSpec> {
        let sections = csvfmt::parse_sections(text)?;
        let section = sections
            .iter()
            .find(|s| s.name == "grid")
            .ok_or_else(|| Error::InvalidParam("grid file lacks a [grid] section".into()))?;
        let name_col = section.require_column("name")?;
        let cols = [
            section.require_column("min")?,
            section.require_column("max")?,
            section.require_column("step")?,
        ];
        let mut spec = GridSpec {
            planned_lead_time: Range::single(1.0),
            safety_stock: Range::single(0.0),
            fop_period: Range::single(1.0),
            energy_factor: Range::single(1.0),
            capacity_factor: Range::single(1.0),
        };
        let mut seen = Vec::new();
        for (line, row) in &section.rows {
            let dim = Dimension::from_name(&row[name_col])
                .ok_or_else(|| Error::parse(*line, format!("unknown grid dimension `{}`", row[name_col])))?;
            if seen.contains(&dim) {
                return Err(Error::parse(*line, format!("dimension `{}` given twice", dim.name())));
            }
            seen.push(dim);
            *spec.range_mut(dim) = Range {
                min: csvfmt::parse_f64(*line, "min", &row[cols[0]])?,
                max: csvfmt::parse_f64(*line, "max", &row[cols[1]])?,
                step: csvfmt::parse_f64(*line, "step", &row[cols[2]])?,
            };
        }
        if seen.len() != Dimension::ALL.len() {
            let missing: Vec<&str> = Dimension::ALL
                .iter()
                .filter(|d| !seen.contains(d))
                .map(|d| d.name())
                .collect();
            return Err(Error::InvalidParam(format!("grid lacks dimensions: {}", missing.join(", "))));
        }
        Ok(spec)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("[grid]\nname,min,max,step\n");
        for d in Dimension::ALL {
            let r = self.range(d);
            let _ = writeln!(out, "{},{},{},{}", d.name(), r.min, r.max, r.step);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    /// Position in the grid's lexicographic order.
    pub id: u64,
    pub planning: PlanningParams,
    pub energy_factor: f64,
    pub capacity_factor: f64,
}

impl ParamPoint {
    pub fn value(&self, d: Dimension) -> f64 {
        match d {
            Dimension::PlannedLeadTime => self.planning.planned_lead_time as f64,
            Dimension::SafetyStock => self.planning.safety_stock_prop,
            Dimension::FopPeriod => self.planning.fop_period as f64,
            Dimension::EnergyFactor => self.energy_factor,
            Dimension::CapacityFactor => self.capacity_factor,
        }
    }
}

/// Cartesian product of the grid, lead time varying slowest and capacity
/// factor fastest.
pub fn grid_generate(spec: &GridSpec) -> Result<Vec<ParamPoint>> {
    let mut values = Vec::new();
    for d in Dimension::ALL {
        let v = spec.range(d).values()?;
        if d.integral() && v.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
            return Err(Error::InvalidParam(format!("{} needs whole values >= 1", d.name())));
        }
        values.push(v);
    }
    let total: usize = values.iter().map(Vec::len).product();
    let mut points = Vec::with_capacity(total);
    for &lt in &values[0] {
        for &ss in &values[1] {
            for &fop in &values[2] {
                for &ef in &values[3] {
                    for &cf in &values[4] {
                        points.push(ParamPoint {
                            id: points.len() as u64,
                            planning: PlanningParams {
                                planned_lead_time: lt as u32,
                                fop_period: fop as u32,
                                safety_stock_prop: ss,
                            },
                            energy_factor: ef,
                            capacity_factor: cf,
                        });
                    }
                }
            }
        }
    }
    for p in &points {
        p.planning.validate()?;
        DispatchParams::new(p.energy_factor, p.capacity_factor).validate()?;
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub reps: u64,
    pub base_seed: u64,
    pub days: u32,
    pub warmup_days: u32,
    /// Worker threads; 0 lets the pool decide.
    pub parallelism: usize,
    pub setup_energy: bool,
    pub check_interval: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            reps: 3,
            base_seed: 0,
            days: 400,
            warmup_days: 150,
            parallelism: 0,
            setup_energy: false,
            check_interval: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub param_point_id: u64,
    pub replication: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    /// Ordered by `(param_point_id, replication)`.
    pub results: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
}

pub fn sim_config(point: &ParamPoint, replication: u64, cfg: &SweepConfig) -> SimConfig {
    let mut dispatch = DispatchParams::new(point.energy_factor, point.capacity_factor);
    dispatch.check_interval = cfg.check_interval;
    let mut sim = SimConfig::new(point.planning, dispatch);
    sim.seed = cfg.base_seed;
    sim.replication = replication;
    sim.days = cfg.days;
    sim.warmup_days = cfg.warmup_days;
    sim.setup_energy = cfg.setup_energy;
    sim
}

/// Runs every point for every replication. Output order does not depend
/// on the worker count. `progress` is called with (done, total).
pub fn run_sweep(
    scenario: &Scenario,
    prices: &PriceSeries,
    points: &[ParamPoint],
    cfg: &SweepConfig,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<SweepOutput> {
    let work: Vec<(ParamPoint, u64)> = points
        .iter()
        .flat_map(|p| (0..cfg.reps).map(move |r| (*p, r)))
        .collect();
    let total = work.len();
    let done = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    let outcomes: Vec<std::result::Result<RunResult, RunFailure>> = pool.install(|| {
        work.par_iter()
            .map(|(point, rep)| {
                let sim = sim_config(point, *rep, cfg);
                let out = run_simulation(scenario, prices, &sim)
                    .map(|o| {
                        let mut r = o.result;
                        r.param_point_id = point.id;
                        r
                    })
                    .map_err(|e| RunFailure {
                        param_point_id: point.id,
                        replication: *rep,
                        message: e.to_string(),
                    });
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(cb) = progress {
                    cb(n, total);
                }
                out
            })
            .collect()
    });
    let mut output = SweepOutput::default();
    for o in outcomes {
        match o {
            Ok(r) => output.results.push(r),
            Err(f) => output.failures.push(f),
        }
    }
    Ok(output)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single replication.
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        if values.is_empty() {
            return Stat::default();
        }
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, sd }
    }
}

/// Aggregated metrics, in CSV column order.
pub const METRICS: [&str; 11] = [
    "wip",
    "fgi",
    "tardiness",
    "energy",
    "prod_logistics",
    "overall",
    "service_level",
    "switch_offs",
    "price_exceeded",
    "decisions",
    "utilization",
];

fn metric_values(r: &RunResult) -> [f64; 11] {
    let n = r.machines.len().max(1) as f64;
    [
        r.wip_per_day,
        r.fgi_per_day,
        r.tardiness_per_day,
        r.energy_per_day,
        r.prod_logistics_per_day,
        r.overall_per_day,
        r.service_level,
        r.total_switch_offs() as f64,
        r.total_price_exceeded() as f64,
        r.machines.iter().map(|m| m.decisions).sum::<u64>() as f64,
        r.machines.iter().map(|m| m.utilization).sum::<f64>() / n,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub param_point_id: u64,
    pub planned_lead_time: u32,
    pub safety_stock_prop: f64,
    pub fop_period: u32,
    pub energy_factor: f64,
    pub capacity_factor: f64,
    pub replications: usize,
    /// Indexed like [`METRICS`]. Switch-off, price-exceeded and decision
    /// counts are totals over machines; utilization is the machine mean.
    pub stats: [Stat; 11],
}

impl AggregateResult {
    pub fn stat(&self, metric: &str) -> Option<Stat> {
        METRICS.iter().position(|m| *m == metric).map(|i| self.stats[i])
    }

    pub fn energy(&self) -> Stat {
        self.stats[3]
    }

    pub fn prod_logistics(&self) -> Stat {
        self.stats[4]
    }

    pub fn overall(&self) -> Stat {
        self.stats[5]
    }

    pub fn switch_offs(&self) -> Stat {
        self.stats[7]
    }

    pub fn price_exceeded(&self) -> Stat {
        self.stats[8]
    }

    pub fn value(&self, d: Dimension) -> f64 {
        match d {
            Dimension::PlannedLeadTime => self.planned_lead_time as f64,
            Dimension::SafetyStock => self.safety_stock_prop,
            Dimension::FopPeriod => self.fop_period as f64,
            Dimension::EnergyFactor => self.energy_factor,
            Dimension::CapacityFactor => self.capacity_factor,
        }
    }
}

/// Means and standard deviations per parameter point. Every point must
/// carry the same set of replications `0..reps`; `expected_reps` pins the
/// count when known.
pub fn aggregate(results: &[RunResult], expected_reps: Option<usize>) -> Result<Vec<AggregateResult>> {
    let mut groups: BTreeMap<u64, Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.param_point_id).or_default().push(r);
    }
    let reps = match expected_reps {
        Some(n) => n,
        None => groups.values().map(Vec::len).max().unwrap_or(0),
    };
    let mut out = Vec::with_capacity(groups.len());
    for (id, runs) in groups {
        let mut seen: Vec<u64> = runs.iter().map(|r| r.replication).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != runs.len() {
            return Err(Error::Aggregate(format!("point {id} has duplicate replications")));
        }
        if runs.len() != reps || seen.iter().any(|&r| r as usize >= reps) {
            return Err(Error::Aggregate(format!(
                "point {id} has {} of {reps} replications",
                runs.len()
            )));
        }
        let first = runs[0];
        let columns: Vec<[f64; 11]> = runs.iter().map(|r| metric_values(r)).collect();
        let mut stats = [Stat::default(); 11];
        for (k, stat) in stats.iter_mut().enumerate() {
            let vals: Vec<f64> = columns.iter().map(|c| c[k]).collect();
            *stat = Stat::of(&vals);
        }
        out.push(AggregateResult {
            param_point_id: id,
            planned_lead_time: first.planned_lead_time,
            safety_stock_prop: first.safety_stock_prop,
            fop_period: first.fop_period,
            energy_factor: first.energy_factor,
            capacity_factor: first.capacity_factor,
            replications: runs.len(),
            stats,
        });
    }
    Ok(out)
}

/// For one parameter value, the point with the lowest mean overall cost
/// among all points sharing that value.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub dimension: Dimension,
    pub value: f64,
    pub best: AggregateResult,
}

pub fn best_partner_marginals(aggs: &[AggregateResult]) -> Vec<Marginal> {
    let mut out = Vec::new();
    for d in Dimension::ALL {
        let mut values: Vec<f64> = aggs.iter().map(|a| a.value(d)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for v in values {
            let best = aggs
                .iter()
                .filter(|a| a.value(d) == v)
                .min_by(|a, b| {
                    a.overall()
                        .mean
                        .total_cmp(&b.overall().mean)
                        .then(a.param_point_id.cmp(&b.param_point_id))
                })
                .expect("value taken from the set");
            out.push(Marginal {
                dimension: d,
                value: v,
                best: best.clone(),
            });
        }
    }
    out
}

/// Point with the lowest mean overall cost (lowest id on ties).
pub fn global_optimum(aggs: &[AggregateResult]) -> Option<&AggregateResult> {
    aggs.iter().min_by(|a, b| {
        a.overall()
            .mean
            .total_cmp(&b.overall().mean)
            .then(a.param_point_id.cmp(&b.param_point_id))
    })
}

/// Points that vary `d` while every other parameter stays at the global
/// optimum's value, ordered by the value of `d`.
pub fn slice_at_optimum(aggs: &[AggregateResult], d: Dimension) -> Vec<AggregateResult> {
    let Some(best) = global_optimum(aggs) else {
        return Vec::new();
    };
    let mut slice: Vec<AggregateResult> = aggs
        .iter()
        .filter(|a| {
            Dimension::ALL
                .iter()
                .all(|&o| o == d || a.value(o) == best.value(o))
        })
        .cloned()
        .collect();
    slice.sort_by(|a, b| a.value(d).total_cmp(&b.value(d)));
    slice
}

/// Non-dominated points in the (energy, production logistics) mean-cost
/// plane, sorted by energy. A point is dominated when another is no worse
/// in both objectives and strictly better in one; exact ties are kept.
pub fn pareto_front(aggs: &[AggregateResult]) -> Result<Vec<AggregateResult>> {
    if aggs.is_empty() {
        return Err(Error::Aggregate("pareto front of an empty set".into()));
    }
    let mut idx: Vec<usize> = (0..aggs.len()).collect();
    let key = |i: usize| (aggs[i].energy().mean, aggs[i].prod_logistics().mean);
    idx.sort_by(|&a, &b| {
        let (ea, la) = key(a);
        let (eb, lb) = key(b);
        ea.total_cmp(&eb)
            .then(la.total_cmp(&lb))
            .then(aggs[a].param_point_id.cmp(&aggs[b].param_point_id))
    });
    let mut front = Vec::new();
    // Lowest logistics cost among points with strictly lower energy.
    let mut best_before = f64::INFINITY;
    let mut g = 0;
    while g < idx.len() {
        let energy = key(idx[g]).0;
        let mut end = g;
        while end < idx.len() && key(idx[end]).0 == energy {
            end += 1;
        }
        let group_min = key(idx[g]).1;
        if group_min < best_before {
            for &i in &idx[g..end] {
                if key(i).1 == group_min {
                    front.push(aggs[i].clone());
                }
            }
        }
        best_before = best_before.min(group_min);
        g = end;
    }
    Ok(front)
}

pub fn aggregates_header() -> String {
    let mut cols = vec![
        "param_point_id".to_string(),
        "planned_lead_time".into(),
        "safety_stock".into(),
        "fop_period".into(),
        "energy_factor".into(),
        "capacity_factor".into(),
        "replications".into(),
    ];
    for m in METRICS {
        cols.push(format!("{m}_mean"));
        cols.push(format!("{m}_sd"));
    }
    cols.join(",")
}

pub fn write_aggregates_csv(aggs: &[AggregateResult]) -> String {
    let mut out = aggregates_header();
    out.push('\n');
    for a in aggs {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            a.param_point_id,
            a.planned_lead_time,
            a.safety_stock_prop,
            a.fop_period,
            a.energy_factor,
            a.capacity_factor,
            a.replications
        );
        for s in &a.stats {
            let _ = write!(out, ",{},{}", s.mean, s.sd);
        }
        out.push('\n');
    }
    out
}

pub fn read_aggregates_csv(text: &str) -> Result<Vec<AggregateResult>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let expected = aggregates_header();
    if headers.iter().collect::<Vec<_>>().join(",") != expected {
        return Err(Error::Aggregate("unexpected aggregates header".into()));
    }
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
        let mut stats = [Stat::default(); 11];
        for (k, s) in stats.iter_mut().enumerate() {
            *s = Stat {
                mean: f(7 + 2 * k)?,
                sd: f(8 + 2 * k)?,
            };
        }
        out.push(AggregateResult {
            param_point_id: u(0)?,
            planned_lead_time: u(1)? as u32,
            safety_stock_prop: f(2)?,
            fop_period: u(3)? as u32,
            energy_factor: f(4)?,
            capacity_factor: f(5)?,
            replications: u(6)? as usize,
            stats,
        });
    }
    Ok(out)
}

pub fn write_marginals_csv(marginals: &[Marginal]) -> String {
    let mut out = String::from(
        "parameter,value,param_point_id,overall_mean,energy_mean,prod_logistics_mean,switch_offs_mean,price_exceeded_mean\n",
    );
    for m in marginals {
        let b = &m.best;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.dimension.name(),
            m.value,
            b.param_point_id,
            b.overall().mean,
            b.energy().mean,
            b.prod_logistics().mean,
            b.switch_offs().mean,
            b.price_exceeded().mean
        );
    }
    out
}

pub fn write_failures_csv(failures: &[RunFailure]) -> String {
    let mut out = String::from("param_point_id,replication,message\n");
    for f in failures {
        let msg = f.message.replace(['\n', ','], " ");
        let _ = writeln!(out, "{},{},{}", f.param_point_id, f.replication, msg);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costing::MachineKpi;
    use proptest::prelude::*;

    pub(crate) fn agg(id: u64, energy: f64, logistics: f64) -> AggregateResult {
        let mut stats = [Stat::default(); 11];
        stats[3].mean = energy;
        stats[4].mean = logistics;
        stats[5].mean = energy + logistics;
        AggregateResult {
            param_point_id: id,
            planned_lead_time: 1,
            safety_stock_prop: 0.0,
            fop_period: 1,
            energy_factor: 1.0,
            capacity_factor: 1.0,
            replications: 1,
            stats,
        }
    }

    fn run(id: u64, rep: u64, overall: f64) -> RunResult {
        RunResult {
            param_point_id: id,
            replication: rep,
            planned_lead_time: 3,
            safety_stock_prop: 0.5,
            fop_period: 2,
            energy_factor: 0.8,
            capacity_factor: 1.0,
            wip_per_day: overall,
            fgi_per_day: 0.0,
            tardiness_per_day: 0.0,
            energy_per_day: 0.0,
            prod_logistics_per_day: overall,
            overall_per_day: overall,
            service_level: 1.0,
            machines: vec![MachineKpi {
                machine: "M".into(),
                decisions: 4,
                price_exceeded: 2,
                switch_offs: 1,
                utilization: 0.5,
            }],
        }
    }

    fn brute_front(aggs: &[AggregateResult]) -> Vec<u64> {
        let dominates = |q: &AggregateResult, p: &AggregateResult| {
            let (qe, ql) = (q.energy().mean, q.prod_logistics().mean);
            let (pe, pl) = (p.energy().mean, p.prod_logistics().mean);
            qe <= pe && ql <= pl && (qe < pe || ql < pl)
        };
        let mut ids: Vec<u64> = aggs
            .iter()
            .filter(|p| !aggs.iter().any(|q| dominates(q, p)))
            .map(|p| p.param_point_id)
            .collect();
        ids.sort_unstable();
        ids
    }

    #[test]
    fn full_grid_has_30000_points() {
        let pts = grid_generate(&GridSpec::full()).unwrap();
        assert_eq!(pts.len(), 30_000);
        assert_eq!(GridSpec::full().planned_lead_time.values().unwrap().len(), 10);
        let ef = GridSpec::full().energy_factor.values().unwrap();
        assert_eq!(ef.len(), 10);
        assert_eq!(ef[4], 0.9);
        assert_eq!(pts[0].planning.planned_lead_time, 1);
        assert_eq!(pts[1].capacity_factor, 0.5);
        assert_eq!(pts.last().unwrap().planning.planned_lead_time, 10);
    }

    #[test]
    fn ci_grid_has_192_points() {
        assert_eq!(grid_generate(&GridSpec::ci()).unwrap().len(), 192);
    }

    #[test]
    fn single_value_grid() {
        let text = "[grid]\nname,min,max,step\nplanned_lead_time,4,4,1\nsafety_stock,0,0,0.5\n\
                    fop_period,1,1,1\nenergy_factor,1,1,0.1\ncapacity_factor,1,1,0.25\n";
        let pts = grid_generate(&GridSpec::parse(text).unwrap()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].planning.planned_lead_time, 4);
    }

    #[test]
    fn inconsistent_grid_rejected() {
        assert!(Range { min: 2.0, max: 1.0, step: 1.0 }.values().is_err());
        assert!(Range { min: 0.0, max: 1.0, step: 0.0 }.values().is_err());
        assert!(Range { min: 0.0, max: 1.0, step: 0.3 }.values().is_err());
        let mut g = GridSpec::ci();
        g.fop_period = Range { min: 0.5, max: 1.5, step: 0.5 };
        assert!(grid_generate(&g).is_err());
        assert!(GridSpec::parse("[grid]\nname,min,max,step\nplanned_lead_time,1,2,1\n").is_err());
    }

    #[test]
    fn grid_file_round_trip() {
        let g = GridSpec::full();
        assert_eq!(GridSpec::parse(&g.to_file_string()).unwrap(), g);
    }

    #[test]
    fn aggregate_means_and_sd() {
        let agg = aggregate(&[run(0, 0, 10.0), run(0, 1, 20.0)], Some(2)).unwrap();
        assert_eq!(agg[0].overall().mean, 15.0);
        let same = aggregate(&[run(0, 0, 7.0), run(0, 1, 7.0), run(0, 2, 7.0)], None).unwrap();
        assert_eq!(same[0].overall().sd, 0.0);
        assert_eq!(same[0].switch_offs().mean, 1.0);
    }

    #[test]
    fn aggregate_missing_replication() {
        assert!(aggregate(&[run(0, 0, 1.0), run(1, 0, 1.0), run(1, 1, 1.0)], None).is_err());
        assert!(aggregate(&[run(0, 0, 1.0)], Some(2)).is_err());
        assert!(aggregate(&[run(0, 0, 1.0), run(0, 0, 2.0)], None).is_err());
    }

    #[test]
    fn marginals_on_2x2() {
        // Lead time {1, 2} x energy factor {0.5, 1.0}.
        let mk = |id, lt, ef, cost| {
            let mut a = agg(id, cost, 0.0);
            a.planned_lead_time = lt;
            a.energy_factor = ef;
            a
        };
        let aggs = vec![mk(0, 1, 0.5, 9.0), mk(1, 1, 1.0, 4.0), mk(2, 2, 0.5, 3.0), mk(3, 2, 1.0, 8.0)];
        let m = best_partner_marginals(&aggs);
        let pick = |d: Dimension, v: f64| m.iter().find(|x| x.dimension == d && x.value == v).unwrap().best.param_point_id;
        assert_eq!(pick(Dimension::PlannedLeadTime, 1.0), 1);
        assert_eq!(pick(Dimension::PlannedLeadTime, 2.0), 2);
        assert_eq!(pick(Dimension::EnergyFactor, 0.5), 2);
        assert_eq!(pick(Dimension::EnergyFactor, 1.0), 1);
        assert_eq!(global_optimum(&aggs).unwrap().param_point_id, 2);
        let slice = slice_at_optimum(&aggs, Dimension::EnergyFactor);
        assert_eq!(slice.iter().map(|a| a.param_point_id).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn pareto_examples() {
        assert_eq!(pareto_front(&[agg(0, 1.0, 1.0)]).unwrap().len(), 1);
        let front = pareto_front(&[agg(0, 1.0, 5.0), agg(1, 2.0, 4.0), agg(2, 3.0, 6.0)]).unwrap();
        assert_eq!(front.iter().map(|a| a.param_point_id).collect::<Vec<_>>(), vec![0, 1]);
        let dup = pareto_front(&[agg(0, 1.0, 5.0), agg(1, 1.0, 5.0), agg(2, 1.0, 6.0)]).unwrap();
        assert_eq!(dup.len(), 2);
        assert!(pareto_front(&[]).is_err());
    }

    #[test]
    fn aggregates_csv_round_trip() {
        let aggs = aggregate(&[run(3, 0, 10.0), run(3, 1, 12.5)], None).unwrap();
        let back = read_aggregates_csv(&write_aggregates_csv(&aggs)).unwrap();
        assert_eq!(back, aggs);
    }

    proptest! {
        #[test]
        fn front_matches_brute_force(pts in proptest::collection::vec((0u8..20, 0u8..20), 1..200)) {
            let aggs: Vec<AggregateResult> = pts
                .iter()
                .enumerate()
                .map(|(i, &(e, l))| agg(i as u64, e as f64, l as f64))
                .collect();
            let mut got: Vec<u64> = pareto_front(&aggs).unwrap().iter().map(|a| a.param_point_id).collect();
            got.sort_unstable();
            prop_assert_eq!(got, brute_front(&aggs));
            let best = global_optimum(&aggs).unwrap().param_point_id;
            let front = pareto_front(&aggs).unwrap();
            prop_assert!(front.iter().any(|a| a.param_point_id == best));
            prop_assert!(front.windows(2).all(|w| w[0].energy().mean <= w[1].energy().mean));
        }
    }
}
