//! C ABI over the edsim library.
//!
//! Objects cross the boundary as opaque handles created by `*_load`,
//! `*_default` or `edsim_simulate` and released by the matching `*_free`.
//! Every fallible function returns an [`EdsimStatus`]; on failure the
//! message is available from [`edsim_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use edsim::costing::RunResult;
use edsim::dispatch::{decide_state, QueuedWork, Reason};
use edsim::energyprice::{load_prices, synthetic_series, PriceSeries, SyntheticPriceParams};
use edsim::experiment::{pareto_front, AggregateResult, Stat};
use edsim::scenario::{
    expected_machine_load, validate_scenario, DispatchParams, PlanningParams, Scenario, Severity,
};
use edsim::shopfloor::{run_simulation, SimConfig};
use edsim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Semantic = 5,
    Prices = 6,
    OutOfRange = 7,
    Aggregate = 8,
    Panic = 9,
}

/// Scenario handle.
pub struct EdsimScenario(Scenario);

/// Hourly price series handle.
pub struct EdsimPrices(PriceSeries);

/// Result handle of one simulation run.
pub struct EdsimResult(RunResult);

/// Parameters of one simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EdsimSimParams {
    pub planned_lead_time: u32,
    pub safety_stock: f64,
    pub fop_period: u32,
    pub energy_factor: f64,
    pub capacity_factor: f64,
    pub seed: u64,
    pub replication: u64,
    pub days: u32,
    pub warmup_days: u32,
    pub setup_energy: bool,
    pub dispatch_enabled: bool,
}

/// Cost KPIs in CU per day.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EdsimKpis {
    pub wip: f64,
    pub fgi: f64,
    pub tardiness: f64,
    pub energy: f64,
    pub prod_logistics: f64,
    pub overall: f64,
    pub service_level: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EdsimMachineKpis {
    pub decisions: u64,
    pub price_exceeded: u64,
    pub switch_offs: u64,
    pub utilization: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdsimReason {
    PriceLow = 0,
    WorkloadHigh = 1,
    Off = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EdsimDecision {
    pub machine_on: bool,
    pub reason: EdsimReason,
    pub price: f64,
    pub energy_threshold: f64,
    pub workload: f64,
    pub workload_threshold: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> EdsimStatus {
    match e {
        Error::Io { .. } => EdsimStatus::Io,
        Error::Parse { .. } | Error::Csv(_) => EdsimStatus::Parse,
        Error::Semantic(_) => EdsimStatus::Semantic,
        Error::Prices(_) => EdsimStatus::Prices,
        Error::OutOfRange { .. } => EdsimStatus::OutOfRange,
        Error::InvalidParam(_) => EdsimStatus::InvalidArgument,
        Error::Aggregate(_) => EdsimStatus::Aggregate,
    }
}

struct Fail(EdsimStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EdsimStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(EdsimStatus::InvalidArgument, msg.into())
}

/// Runs `f`, records any failure and maps it to a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EdsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EdsimStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EdsimStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))
}

unsafe fn out_arg<'a, T>(out: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    out.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Fail> {
    h.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn edsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// The bundled eight-item, four-machine scenario.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_scenario_default(out: *mut *mut EdsimScenario) -> EdsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(EdsimScenario(Scenario::bundled_default())));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_scenario_load(
    path: *const c_char,
    out: *mut *mut EdsimScenario,
) -> EdsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let scenario = Scenario::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(EdsimScenario(scenario)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn edsim_scenario_free(scenario: *mut EdsimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn edsim_scenario_machine_count(scenario: *const EdsimScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.machines.len())
}

/// Expected processing and setup minutes per day on machine `machine`.
///
/// # Safety
/// `scenario` must be a live handle; `processing` and `setup` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn edsim_scenario_expected_load(
    scenario: *const EdsimScenario,
    machine: usize,
    processing: *mut f64,
    setup: *mut f64,
) -> EdsimStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let processing = out_arg(processing, "processing")?;
        let setup = out_arg(setup, "setup")?;
        let loads = expected_machine_load(&s.0);
        let load = loads
            .get(machine)
            .ok_or_else(|| invalid(format!("machine index {machine} out of range")))?;
        *processing = load.processing;
        *setup = load.setup;
        Ok(())
    })
}

/// Counts validation findings by severity.
///
/// # Safety
/// `scenario` must be a live handle; `hard` and `warnings` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn edsim_scenario_validate(
    scenario: *const EdsimScenario,
    hard: *mut usize,
    warnings: *mut usize,
) -> EdsimStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let hard = out_arg(hard, "hard")?;
        let warnings = out_arg(warnings, "warnings")?;
        let findings = validate_scenario(&s.0);
        *hard = findings.iter().filter(|f| f.severity == Severity::Hard).count();
        *warnings = findings.len() - *hard;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_prices_load(path: *const c_char, out: *mut *mut EdsimPrices) -> EdsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let series = load_prices(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(EdsimPrices(series)));
        Ok(())
    })
}

/// Seeded synthetic hourly series of `days` days starting 2023-01-01.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_prices_synthetic(days: usize, seed: u64, out: *mut *mut EdsimPrices) -> EdsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let params = SyntheticPriceParams {
            days,
            ..SyntheticPriceParams::default()
        };
        *out = Box::into_raw(Box::new(EdsimPrices(synthetic_series(&params, seed)?)));
        Ok(())
    })
}

/// Series from `len` hourly prices in CU/MWh starting 2023-01-01.
///
/// # Safety
/// `hourly` must point to `len` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_prices_from_hourly(
    hourly: *const f64,
    len: usize,
    out: *mut *mut EdsimPrices,
) -> EdsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if hourly.is_null() {
            return Err(null("hourly"));
        }
        let values = std::slice::from_raw_parts(hourly, len).to_vec();
        *out = Box::into_raw(Box::new(EdsimPrices(PriceSeries::from_hourly(values)?)));
        Ok(())
    })
}

/// # Safety
/// `prices` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn edsim_prices_hours(prices: *const EdsimPrices) -> usize {
    prices.as_ref().map_or(0, |p| p.0.hours())
}

/// # Safety
/// `prices` must come from this library and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn edsim_prices_free(prices: *mut EdsimPrices) {
    if !prices.is_null() {
        drop(Box::from_raw(prices));
    }
}

/// Fills `out` with the library defaults (400 days, 150 warm-up days,
/// dispatching on).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_sim_params_default(out: *mut EdsimSimParams) -> EdsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = SimConfig::new(
            PlanningParams {
                planned_lead_time: 5,
                fop_period: 1,
                safety_stock_prop: 0.0,
            },
            DispatchParams::new(1.0, 1.0),
        );
        *out = EdsimSimParams {
            planned_lead_time: cfg.planning.planned_lead_time,
            safety_stock: cfg.planning.safety_stock_prop,
            fop_period: cfg.planning.fop_period,
            energy_factor: cfg.dispatch.energy_factor,
            capacity_factor: cfg.dispatch.capacity_factor,
            seed: cfg.seed,
            replication: cfg.replication,
            days: cfg.days,
            warmup_days: cfg.warmup_days,
            setup_energy: cfg.setup_energy,
            dispatch_enabled: cfg.dispatch_enabled,
        };
        Ok(())
    })
}

/// Runs one replication.
///
/// # Safety
/// `scenario` and `prices` must be live handles; `params` and `out` valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn edsim_simulate(
    scenario: *const EdsimScenario,
    prices: *const EdsimPrices,
    params: *const EdsimSimParams,
    out: *mut *mut EdsimResult,
) -> EdsimStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let p = handle(prices, "prices")?;
        let params = handle(params, "params")?;
        let out = out_arg(out, "out")?;
        let mut cfg = SimConfig::new(
            PlanningParams {
                planned_lead_time: params.planned_lead_time,
                fop_period: params.fop_period,
                safety_stock_prop: params.safety_stock,
            },
            DispatchParams::new(params.energy_factor, params.capacity_factor),
        );
        cfg.seed = params.seed;
        cfg.replication = params.replication;
        cfg.days = params.days;
        cfg.warmup_days = params.warmup_days;
        cfg.setup_energy = params.setup_energy;
        cfg.dispatch_enabled = params.dispatch_enabled;
        let result = run_simulation(&s.0, &p.0, &cfg)?.result;
        *out = Box::into_raw(Box::new(EdsimResult(result)));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_result_kpis(result: *const EdsimResult, out: *mut EdsimKpis) -> EdsimStatus {
    guard(|| {
        let r = &handle(result, "result")?.0;
        *out_arg(out, "out")? = EdsimKpis {
            wip: r.wip_per_day,
            fgi: r.fgi_per_day,
            tardiness: r.tardiness_per_day,
            energy: r.energy_per_day,
            prod_logistics: r.prod_logistics_per_day,
            overall: r.overall_per_day,
            service_level: r.service_level,
        };
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn edsim_result_machine_count(result: *const EdsimResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.machines.len())
}

/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edsim_result_machine(
    result: *const EdsimResult,
    machine: usize,
    out: *mut EdsimMachineKpis,
) -> EdsimStatus {
    guard(|| {
        let r = &handle(result, "result")?.0;
        let out = out_arg(out, "out")?;
        let m = r
            .machines
            .get(machine)
            .ok_or_else(|| invalid(format!("machine index {machine} out of range")))?;
        *out = EdsimMachineKpis {
            decisions: m.decisions,
            price_exceeded: m.price_exceeded,
            switch_offs: m.switch_offs,
            utilization: m.utilization,
        };
        Ok(())
    })
}

/// # Safety
/// `result` must come from this library and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn edsim_result_free(result: *mut EdsimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Evaluates the dispatching rule for a machine of `daily_capacity`
/// minutes at `now_minutes`. The queue is given as `len` pairs of planned
/// processing and setup minutes.
///
/// # Safety
/// `prices` must be a live handle; `processing` and `setup` must point to
/// `len` doubles (either may be null when `len` is 0); `out` valid.
#[no_mangle]
pub unsafe extern "C" fn edsim_decide_state(
    prices: *const EdsimPrices,
    now_minutes: f64,
    daily_capacity: f64,
    processing: *const f64,
    setup: *const f64,
    len: usize,
    energy_factor: f64,
    capacity_factor: f64,
    out: *mut EdsimDecision,
) -> EdsimStatus {
    guard(|| {
        let p = handle(prices, "prices")?;
        let out = out_arg(out, "out")?;
        let queue: Vec<QueuedWork> = if len == 0 {
            Vec::new()
        } else {
            if processing.is_null() || setup.is_null() {
                return Err(null("queue"));
            }
            let proc = std::slice::from_raw_parts(processing, len);
            let set = std::slice::from_raw_parts(setup, len);
            proc.iter()
                .zip(set)
                .enumerate()
                .map(|(i, (&p, &s))| QueuedWork {
                    order_id: i as u64,
                    planned_processing: p,
                    planned_setup: s,
                })
                .collect()
        };
        let machine = edsim::scenario::MachineSpec {
            id: String::new(),
            daily_capacity,
            power_kw: 1.0,
        };
        let params = DispatchParams::new(energy_factor, capacity_factor);
        params.validate()?;
        let d = decide_state(now_minutes, &machine, &queue, &p.0, &params)?;
        *out = EdsimDecision {
            machine_on: d.machine_on,
            reason: match d.reason {
                Reason::PriceLow => EdsimReason::PriceLow,
                Reason::WorkloadHigh => EdsimReason::WorkloadHigh,
                Reason::Off => EdsimReason::Off,
            },
            price: d.price,
            energy_threshold: d.energy_threshold,
            workload: d.workload,
            workload_threshold: d.workload_threshold,
        };
        Ok(())
    })
}

/// Non-dominated subset of `len` (energy, logistics) cost pairs. Writes
/// the input indices of the front, sorted by energy, into `indices`
/// (capacity `len`) and their count into `front_len`.
///
/// # Safety
/// `energy` and `logistics` must point to `len` doubles, `indices` to room
/// for `len` values and `front_len` be valid.
#[no_mangle]
pub unsafe extern "C" fn edsim_pareto_front(
    energy: *const f64,
    logistics: *const f64,
    len: usize,
    indices: *mut usize,
    front_len: *mut usize,
) -> EdsimStatus {
    guard(|| {
        if energy.is_null() || logistics.is_null() || indices.is_null() {
            return Err(null("array"));
        }
        let front_len = out_arg(front_len, "front_len")?;
        let e = std::slice::from_raw_parts(energy, len);
        let l = std::slice::from_raw_parts(logistics, len);
        let points: Vec<AggregateResult> = (0..len)
            .map(|i| {
                let mut stats = [Stat::default(); 11];
                stats[3].mean = e[i];
                stats[4].mean = l[i];
                stats[5].mean = e[i] + l[i];
                AggregateResult {
                    param_point_id: i as u64,
                    planned_lead_time: 0,
                    safety_stock_prop: 0.0,
                    fop_period: 0,
                    energy_factor: 0.0,
                    capacity_factor: 0.0,
                    replications: 1,
                    stats,
                }
            })
            .collect();
        let front = pareto_front(&points)?;
        let out = std::slice::from_raw_parts_mut(indices, len);
        for (slot, a) in out.iter_mut().zip(&front) {
            *slot = a.param_point_id as usize;
        }
        *front_len = front.len();
        Ok(())
    })
}
