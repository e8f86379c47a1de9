use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edsim::costing::{read_results_csv, write_results_csv};
use edsim::energyprice::{convert_market_export, load_prices, synthetic_series, PriceSeries, SyntheticPriceParams};
use edsim::experiment::{
    aggregate, best_partner_marginals, grid_generate, pareto_front, read_aggregates_csv, run_sweep,
    write_aggregates_csv, write_failures_csv, write_marginals_csv, GridSpec, SweepConfig,
};
use edsim::mrp::{MrpRun, MRP_DUMP_HEADER};
use edsim::scenario::{validate_scenario, DispatchParams, PlanningParams, Scenario, Severity};
use edsim::shopfloor::{run_simulation, write_event_log, SimConfig};
use edsim::Error;

/// Energy-price and workload aware job-shop simulator.
#[derive(Parser, Debug)]
#[command(name = "edsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a scenario for invalid values and machine overload.
    Validate(ValidateArgs),
    /// Run one replication at one parameter point.
    Simulate(SimulateArgs),
    /// Run a replicated full-factorial sweep.
    Sweep(SweepArgs),
    /// Aggregate a results file over replications.
    Aggregate(AggregateArgs),
    /// Extract the energy / production-logistics Pareto front.
    Pareto(ParetoArgs),
    /// Write a seeded synthetic hourly price series or convert a market export.
    GenPrices(GenPricesArgs),
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario file; the bundled eight-item shop when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Coefficient of variation of processing times [default: scenario value, 0.25 when unset].
    #[arg(long)]
    proc_cv: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Hourly price series (CSV `hour,price`).
    #[arg(long)]
    prices: PathBuf,
    /// Base seed for all random streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulated days.
    #[arg(long, default_value_t = 400)]
    days: u32,
    /// Warm-up days excluded from the KPIs.
    #[arg(long, default_value_t = 150)]
    warmup: u32,
    /// Charge energy for setup time as well as processing time.
    #[arg(long)]
    setup_energy: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Findings CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Replication index, selects the random streams.
    #[arg(long, default_value_t = 0)]
    replication: u64,
    /// Planned lead time in days.
    #[arg(long)]
    lead_time: u32,
    /// Safety stock as a multiple of the expected order quantity.
    #[arg(long)]
    safety_stock: f64,
    /// Fixed order period in days.
    #[arg(long)]
    fop_period: u32,
    /// Multiplier on the monthly average price.
    #[arg(long)]
    energy_factor: f64,
    /// Multiplier on the daily machine capacity.
    #[arg(long)]
    capacity_factor: f64,
    /// Keep every machine on and never evaluate the dispatching rule.
    #[arg(long)]
    no_dispatch: bool,
    /// Results CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the event log CSV here.
    #[arg(long)]
    event_log: Option<PathBuf>,
    /// Write every MRP run's planning table CSV here.
    #[arg(long)]
    mrp_dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Grid file, or `ci` / `full` for the bundled grids.
    #[arg(long, default_value = "ci")]
    grid: String,
    /// Replications per parameter point.
    #[arg(long, default_value_t = 3)]
    reps: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    /// Results CSV written by `sweep` or `simulate`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Required replications per point; inferred when omitted.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory for aggregates.csv and marginals.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ParetoArgs {
    /// Results or aggregates CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Front CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenPricesArgs {
    /// Seed of the noise stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Days of hourly prices.
    #[arg(long, default_value_t = 400)]
    days: usize,
    /// Convert an hourly market export (`timestamp;price`) instead of generating.
    #[arg(long, conflicts_with_all = ["seed", "days"])]
    from: Option<PathBuf>,
    /// Price CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// Validation findings or failed runs.
    Findings(String),
    /// I/O, parse or specification errors.
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(a) => validate(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Aggregate(a) => aggregate_cmd(a),
        Command::Pareto(a) => pareto(a),
        Command::GenPrices(a) => gen_prices(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Findings(msg)) => {
            eprintln!("edsim: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("edsim: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let mut scenario = match &args.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::bundled_default(),
    };
    if let Some(cv) = args.proc_cv {
        scenario.variability.proc_cv = cv;
    }
    Ok(scenario)
}

/// Loads and checks the scenario; hard findings abort with exit code 1.
fn checked_scenario(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let scenario = load_scenario(args)?;
    let findings = validate_scenario(&scenario);
    for f in &findings {
        eprintln!("{f}");
    }
    if findings.iter().any(|f| f.severity == Severity::Hard) {
        return Err(Failure::Findings("scenario has errors".into()));
    }
    Ok(scenario)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn validate(a: ValidateArgs) -> CliResult {
    let scenario = load_scenario(&a.scenario)?;
    let findings = validate_scenario(&scenario);
    let mut csv = String::from("severity,subject,message\n");
    for f in &findings {
        let sev = match f.severity {
            Severity::Warning => "warning",
            Severity::Hard => "error",
        };
        csv.push_str(&format!("{sev},{},{}\n", f.subject, f.message.replace(',', ";")));
    }
    emit(a.out.as_deref(), &csv)?;
    if findings.iter().any(|f| f.severity == Severity::Hard) {
        return Err(Failure::Findings(format!("{} finding(s)", findings.len())));
    }
    Ok(())
}

fn load_series(path: &Path) -> Result<PriceSeries, Failure> {
    Ok(load_prices(path)?)
}

fn simulate(a: SimulateArgs) -> CliResult {
    let scenario = checked_scenario(&a.scenario)?;
    let prices = load_series(&a.run.prices)?;
    let planning = PlanningParams {
        planned_lead_time: a.lead_time,
        fop_period: a.fop_period,
        safety_stock_prop: a.safety_stock,
    };
    let mut cfg = SimConfig::new(planning, DispatchParams::new(a.energy_factor, a.capacity_factor));
    cfg.dispatch_enabled = !a.no_dispatch;
    cfg.seed = a.run.seed;
    cfg.replication = a.replication;
    cfg.days = a.run.days;
    cfg.warmup_days = a.run.warmup;
    cfg.setup_energy = a.run.setup_energy;
    cfg.event_log = a.event_log.is_some();
    cfg.mrp_dump = a.mrp_dump.is_some();
    let out = run_simulation(&scenario, &prices, &cfg)?;
    if let Some(p) = &a.event_log {
        write(p, &write_event_log(&out.event_log))?;
    }
    if let Some(p) = &a.mrp_dump {
        let mut text = format!("{MRP_DUMP_HEADER}\n");
        MrpRun { orders: Vec::new(), rows: out.mrp_rows }.write_rows_csv(&scenario, &mut text);
        write(p, &text)?;
    }
    emit(a.out.as_deref(), &write_results_csv(&[out.result]))
}

fn grid_spec(arg: &str) -> Result<GridSpec, Failure> {
    Ok(match arg {
        "ci" => GridSpec::ci(),
        "full" => GridSpec::full(),
        path => GridSpec::load(path)?,
    })
}

fn sweep(a: SweepArgs) -> CliResult {
    let scenario = checked_scenario(&a.scenario)?;
    let prices = load_series(&a.run.prices)?;
    let points = grid_generate(&grid_spec(&a.grid)?)?;
    if a.reps == 0 {
        return Err(Failure::Input("--reps must be at least 1".into()));
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let cfg = SweepConfig {
        reps: a.reps,
        base_seed: a.run.seed,
        days: a.run.days,
        warmup_days: a.run.warmup,
        parallelism: a.parallelism,
        setup_energy: a.run.setup_energy,
        ..SweepConfig::default()
    };
    eprintln!("sweep: {} points x {} replications", points.len(), a.reps);
    let step = (points.len() * a.reps as usize / 20).max(1);
    let progress = move |done: usize, total: usize| {
        if done.is_multiple_of(step) || done == total {
            eprintln!("sweep: {done}/{total} runs");
        }
    };
    let output = run_sweep(&scenario, &prices, &points, &cfg, Some(&progress))?;
    write(&a.out.join("results.csv"), &write_results_csv(&output.results))?;

    // Points with a failed replication are left out of the aggregation.
    let mut results = output.results;
    results.retain(|r| !output.failures.iter().any(|f| f.param_point_id == r.param_point_id));
    if !results.is_empty() {
        let aggs = aggregate(&results, Some(a.reps as usize))?;
        write(&a.out.join("aggregates.csv"), &write_aggregates_csv(&aggs))?;
        write(&a.out.join("marginals.csv"), &write_marginals_csv(&best_partner_marginals(&aggs)))?;
        write(&a.out.join("pareto.csv"), &write_aggregates_csv(&pareto_front(&aggs)?))?;
    }
    if !output.failures.is_empty() {
        write(&a.out.join("failures.csv"), &write_failures_csv(&output.failures))?;
        return Err(Failure::Findings(format!(
            "{} run(s) failed, see failures.csv",
            output.failures.len()
        )));
    }
    Ok(())
}

fn aggregate_cmd(a: AggregateArgs) -> CliResult {
    let results = read_results_csv(&read(&a.input)?)?;
    let aggs = aggregate(&results, a.reps)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write(&a.out.join("aggregates.csv"), &write_aggregates_csv(&aggs))?;
    write(&a.out.join("marginals.csv"), &write_marginals_csv(&best_partner_marginals(&aggs)))
}

fn pareto(a: ParetoArgs) -> CliResult {
    let text = read(&a.input)?;
    let is_results = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .is_some_and(|h| h.starts_with("param_point_id,replication,"));
    let aggs = if is_results {
        aggregate(&read_results_csv(&text)?, None)?
    } else {
        read_aggregates_csv(&text)?
    };
    emit(a.out.as_deref(), &write_aggregates_csv(&pareto_front(&aggs)?))
}

fn gen_prices(a: GenPricesArgs) -> CliResult {
    let series = match &a.from {
        Some(path) => convert_market_export(&read(path)?)?,
        None => {
            let params = SyntheticPriceParams {
                days: a.days,
                ..SyntheticPriceParams::default()
            };
            synthetic_series(&params, a.seed)?
        }
    };
    let mut buf = Vec::new();
    series
        .write_csv(&mut buf)
        .map_err(|e| Failure::Input(e.to_string()))?;
    emit(a.out.as_deref(), &String::from_utf8_lossy(&buf))
}
