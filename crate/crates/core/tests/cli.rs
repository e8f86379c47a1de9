use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

fn edsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edsim"))
        .args(args)
        .output()
        .expect("spawn edsim")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn prices(dir: &Path, days: &str) -> std::path::PathBuf {
    let path = dir.join("prices.csv");
    let out = edsim(&["gen-prices", "--seed", "3", "--days", days, "--out", s(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn validate_bundled_scenario() {
    let out = edsim(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("severity,subject,message"));
}

#[test]
fn validate_rejects_broken_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    let text = edsim::scenario::Scenario::bundled_default_text().replace("M1.2,1440,1.0", "M1.2,0,1.0");
    std::fs::write(&path, text).unwrap();
    let out = edsim(&["validate", "--scenario", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    let out = edsim(&["sweep", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--prices"));

    let out = edsim(&["validate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));

    let out = edsim(&["simulate", "--prices", "/nonexistent/prices.csv", "--lead-time", "3",
        "--safety-stock", "0", "--fop-period", "1", "--energy-factor", "1", "--capacity-factor", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_prices_is_reproducible() {
    let a = edsim(&["gen-prices", "--seed", "5", "--days", "3"]);
    let b = edsim(&["gen-prices", "--seed", "5", "--days", "3"]);
    let c = edsim(&["gen-prices", "--seed", "6", "--days", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# start_date=2023-01-01"));
    assert_eq!(lines.next(), Some("hour,price"));
    assert_eq!(lines.count(), 72);
}

#[test]
fn gen_prices_converts_market_export() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("export.csv");
    let mut text = String::from("Datum;Preis\n");
    for h in 0..24 {
        text.push_str(&format!("2024-03-01 {h:02}:00;{},5\n", 50 + h));
    }
    std::fs::write(&export, text).unwrap();
    let out = edsim(&["gen-prices", "--from", s(&export)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# start_date=2024-03-01\nhour,price\n0,50.5\n"));

    let out = edsim(&["gen-prices", "--from", s(&export), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_writes_logs() {
    let dir = tempfile::tempdir().unwrap();
    let p = prices(dir.path(), "60");
    let run = |tag: &str| {
        let log = dir.path().join(format!("events{tag}.csv"));
        let dump = dir.path().join(format!("mrp{tag}.csv"));
        let out = edsim(&["simulate", "--prices", s(&p), "--days", "60", "--warmup", "10",
            "--lead-time", "4", "--safety-stock", "0.5", "--fop-period", "2",
            "--energy-factor", "1.1", "--capacity-factor", "1",
            "--event-log", s(&log), "--mrp-dump", s(&dump)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (out.stdout, std::fs::read_to_string(log).unwrap(), std::fs::read_to_string(dump).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let results = String::from_utf8(a.0).unwrap();
    assert_eq!(results.lines().count(), 2);
    assert!(results.starts_with("param_point_id,replication,planned_lead_time,"));
    assert!(a.1.starts_with("time,event,entity,detail\n"));
    assert!(a.1.contains(",warmup-end,"));
    assert!(a.2.starts_with("run_day,item,day,gross,projected,net,lot\n"));
}

fn write_grid(path: &Path) {
    std::fs::write(
        path,
        "[grid]\nname,min,max,step\n\
         planned_lead_time,3,3,1\nsafety_stock,0,0,1\nfop_period,1,1,1\n\
         energy_factor,0.8,1.2,0.4\ncapacity_factor,1,1,1\n",
    )
    .unwrap();
}

#[test]
fn sweep_aggregate_and_pareto_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = prices(dir.path(), "40");
    let grid = dir.path().join("small.grid");
    write_grid(&grid);
    let out_dir = dir.path().join("run");
    let out = edsim(&["sweep", "--prices", s(&p), "--days", "40", "--warmup", "10",
        "--grid", s(&grid), "--reps", "2", "--parallelism", "2", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["results.csv", "aggregates.csv", "marginals.csv", "pareto.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2);

    let again = dir.path().join("again");
    let out = edsim(&["aggregate", "--in", s(&out_dir.join("results.csv")), "--reps", "2", "--out", s(&again)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(again.join("aggregates.csv")).unwrap(),
        std::fs::read(out_dir.join("aggregates.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(again.join("marginals.csv")).unwrap(),
        std::fs::read(out_dir.join("marginals.csv")).unwrap()
    );

    let out = edsim(&["aggregate", "--in", s(&out_dir.join("results.csv")), "--reps", "3", "--out", s(&again)]);
    assert_eq!(out.status.code(), Some(2));

    let from_results = edsim(&["pareto", "--in", s(&out_dir.join("results.csv"))]);
    let from_aggregates = edsim(&["pareto", "--in", s(&out_dir.join("aggregates.csv"))]);
    assert!(from_results.status.success());
    assert_eq!(from_results.stdout, from_aggregates.stdout);
    assert_eq!(from_results.stdout, std::fs::read(out_dir.join("pareto.csv")).unwrap());
}

#[test]
fn pareto_on_aggregates_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let header = edsim::experiment::aggregates_header();
    let mut text = format!("{header}\n");
    let ncols = header.split(',').count();
    let energy = header.split(',').position(|c| c == "energy_mean").unwrap();
    let logistics = header.split(',').position(|c| c == "prod_logistics_mean").unwrap();
    for (id, (e, l)) in [(1.0, 5.0), (2.0, 4.0), (3.0, 6.0)].into_iter().enumerate() {
        let mut row = vec!["0".to_string(); ncols];
        row[0] = id.to_string();
        row[6] = "1".into();
        row[energy] = e.to_string();
        row[logistics] = l.to_string();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.path().join("agg.csv");
    std::fs::write(&path, text).unwrap();
    let out = edsim(&["pareto", "--in", s(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let front = String::from_utf8(out.stdout).unwrap();
    let ids: Vec<&str> = front.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["0", "1"]);
}

fn help_flags(sub: &str) -> BTreeSet<String> {
    let out = edsim(&[sub, "--help"]);
    assert!(out.status.success());
    flags_in(&String::from_utf8(out.stdout).unwrap())
}

fn flags_in(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
        .filter(|t| t.starts_with("--") && t.len() > 2 && t.as_bytes()[2].is_ascii_alphabetic())
        .filter(|t| *t != "--help" && *t != "--version")
        .map(String::from)
        .collect()
}

#[test]
fn readme_documents_every_flag() {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md")).unwrap();
    for sub in ["validate", "simulate", "sweep", "aggregate", "pareto", "gen-prices"] {
        let heading = format!("### `edsim {sub}`");
        let start = readme.find(&heading).unwrap_or_else(|| panic!("README lacks {heading}"));
        let body = &readme[start + heading.len()..];
        let end = body.find("\n#").unwrap_or(body.len());
        let table: String = body[..end]
            .lines()
            .filter(|l| l.starts_with('|'))
            .filter_map(|l| l.split('|').nth(1).map(str::to_string))
            .collect::<Vec<_>>()
            .join(" ");
        assert_eq!(flags_in(&table), help_flags(sub), "flags of `{sub}`");
    }
}
