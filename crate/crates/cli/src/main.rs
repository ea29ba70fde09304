//! `cor`: command-line front end over the synthesis and simulation library.
//! The subcommands mirror the experiment lifecycle: certify a design,
//! integrate the closed loop, rebuild the bundled benchmark study, compare
//! observer gain sets, and vet attack schedules against duration budgets.
//!
//! Exit codes are a stable contract: 0 success, 2 parse or validation
//! failure, 3 design-condition failure, 4 runtime failure, 5 bound
//! violation.

mod compare;
mod report;
mod schedule_doc;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cor_core::dos::{attacked_duration, validate_budget, AttackBudget, AttackSchedule, BudgetVerdict};
use cor_core::scenario::{
    benchmark_config, build_scenario, write_summary, BuiltScenario, ScenarioConfig, ScenarioError,
    ScheduleConfig,
};
use cor_core::sim::{run, write_csv, SimulationResult};

#[derive(Parser)]
#[command(
    name = "cor",
    version,
    about = "Design, certify, and simulate resilient cooperative output regulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the design conditions and print the settling certificate
    Design(DesignArgs),
    /// Integrate the closed loop, write CSV and summary files, check bounds
    Simulate(SimulateArgs),
    /// Rebuild the bundled benchmark and check it against recorded values
    ReproducePaper(ReproduceArgs),
    /// Settling-time table: configured observer versus the linear baseline
    CompareObservers(CompareArgs),
    /// Check an attack schedule file against a duration budget
    ValidateSchedule(ValidateArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Scenario description (JSON)
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario description (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Replaces the generated-schedule seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's out_dir, else the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integration step override, seconds
    #[arg(long)]
    h: Option<f64>,
    /// Horizon override, seconds
    #[arg(long)]
    horizon: Option<f64>,
    /// Settling tolerance override
    #[arg(long)]
    tol: Option<f64>,
    /// Integrate even if the design conditions fail
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Schedule seed (default 1)
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory (default "reproduction")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integration step override, seconds
    #[arg(long)]
    h: Option<f64>,
    /// Horizon override, seconds
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario description (JSON)
    #[arg(long)]
    config: PathBuf,
    /// First seed of the ten-seed sweep (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Also writes comparison.csv into this directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integration step override, seconds
    #[arg(long)]
    h: Option<f64>,
    /// Horizon override, seconds
    #[arg(long)]
    horizon: Option<f64>,
    /// Settling threshold (default 1e-4)
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Schedule file: {"intervals": [[start, end], ...], ...} or a bare array
    #[arg(long)]
    config: PathBuf,
    /// Duration allowance in seconds (falls back to the file's nu_d_seconds)
    #[arg(long)]
    nu_d: Option<f64>,
    /// Duration ratio (falls back to the file's p_d_ratio)
    #[arg(long)]
    p_d: Option<f64>,
}

/// One variant per exit code class; the payload is the operator-facing
/// message.
enum Failure {
    Parse(String),
    Design(String),
    Runtime(String),
    Bound(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Design(_) => 3,
            Failure::Runtime(_) => 4,
            Failure::Bound(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Parse(m) | Failure::Design(m) | Failure::Runtime(m) | Failure::Bound(m) => {
                f.write_str(m)
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design(args) => cmd_design(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::ReproducePaper(args) => cmd_reproduce(&args),
        Command::CompareObservers(args) => cmd_compare(&args),
        Command::ValidateSchedule(args) => cmd_validate(&args),
    };
    if let Err(failure) = outcome {
        eprintln!("error: {failure}");
        std::process::exit(failure.code());
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text).map_err(|e| Failure::Parse(e.to_string()))
}

fn build_checked(config: &ScenarioConfig) -> Result<BuiltScenario, Failure> {
    build_scenario(config).map_err(|e| match e {
        ScenarioError::Invalid { .. } => Failure::Parse(e.to_string()),
        ScenarioError::Synthesis { .. } => Failure::Design(e.to_string()),
    })
}

fn cmd_design(args: &DesignArgs) -> Result<(), Failure> {
    let config = load_config(&args.config)?;
    let built = build_checked(&config)?;
    print!("{}", report::design_report(&built));
    match &built.certificate_issue {
        None => Ok(()),
        Some(issue) => Err(Failure::Design(issue.clone())),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        match &mut config.schedule {
            ScheduleConfig::Generated(g) => g.seed = seed,
            ScheduleConfig::Explicit(_) => {
                eprintln!("note: --seed ignored, the schedule is explicit");
            }
        }
    }
    if let Some(h) = args.h {
        config.run.h_seconds = h;
    }
    if let Some(horizon) = args.horizon {
        config.run.horizon_seconds = horizon;
    }
    if let Some(tol) = args.tol {
        config.run.settle_tol = tol;
    }

    let built = build_checked(&config)?;
    if let Some(issue) = &built.certificate_issue {
        if !args.force {
            return Err(Failure::Design(format!(
                "{issue}; pass --force to integrate without a certificate"
            )));
        }
        eprintln!("warning: {issue}; integrating without a certificate");
    }

    let result =
        run(&built.design, &built.initial_state, &built.run).map_err(runtime)?;

    let out_dir = args
        .out
        .clone()
        .or_else(|| built.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let (csv_path, summary_path) = write_run_artifacts(&out_dir, &built, &result)?;

    let mut summary = Vec::new();
    write_summary(&built, &result, &mut summary).map_err(runtime)?;
    print!("{}", String::from_utf8_lossy(&summary));
    println!("wrote {}", csv_path.display());
    println!("wrote {}", summary_path.display());

    report_bounds(&built, &result)
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<(), Failure> {
    let seed = args.seed.unwrap_or(1);
    let mut config = benchmark_config(seed);
    if let Some(h) = args.h {
        config.run.h_seconds = h;
    }
    if let Some(horizon) = args.horizon {
        config.run.horizon_seconds = horizon;
    }
    let built = build_checked(&config)?;
    if let Some(issue) = &built.certificate_issue {
        return Err(Failure::Design(format!("benchmark no longer certifies: {issue}")));
    }

    let rows = report::reference_rows(&built);
    let (table, all_ok) = report::format_reference_table(&rows);
    print!("{table}");

    let budget = &built.design.budget;
    let verdict = validate_budget(&built.design.schedule, budget, built.run.t0);
    match &verdict {
        BudgetVerdict::Valid => println!(
            "schedule: valid under allowance {} s plus t/{} (seed {seed}, {} intervals)",
            budget.nu_d(),
            budget.p_d(),
            built.design.schedule.intervals().len()
        ),
        BudgetVerdict::Violation { at, excess } => {
            println!("schedule: violation at t = {at} (excess {excess:.4} s)");
        }
    }

    let result =
        run(&built.design, &built.initial_state, &built.run).map_err(runtime)?;

    match result.settling.observer_settle {
        Some(t) => println!("estimation errors settle at {t:.4} s (tolerance {:.1e})", result.settling.tol),
        None => println!("estimation errors do not settle within the horizon"),
    }
    match result.settling.output_settle {
        Some(t) => println!("regulated outputs settle at {t:.4} s (tolerance {:.1e})", result.settling.tol),
        None => println!("regulated outputs do not settle within the horizon"),
    }
    if let Some((_, t_a)) = built.settling_bounds() {
        let horizon = result.times.last().copied().unwrap_or(0.0);
        if t_a <= horizon {
            let worst = result
                .times
                .iter()
                .zip(&result.output_norm)
                .filter(|(t, _)| **t >= t_a)
                .map(|(_, n)| *n)
                .fold(0.0_f64, f64::max);
            println!("largest output error beyond the certified bound {t_a:.4} s: {worst:.3e}");
        }
    }

    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("reproduction"));
    let (csv_path, summary_path) = write_run_artifacts(&out_dir, &built, &result)?;
    let report_path = out_dir.join("report.txt");
    let mut report_text = report::design_report(&built);
    report_text.push('\n');
    report_text.push_str(&table);
    fs::write(&report_path, report_text).map_err(runtime)?;
    let schedule_path = out_dir.join("schedule.json");
    fs::write(&schedule_path, schedule_artifact(&built)).map_err(runtime)?;
    for path in [&report_path, &csv_path, &summary_path, &schedule_path] {
        println!("wrote {}", path.display());
    }

    if all_ok && verdict.is_valid() {
        Ok(())
    } else {
        Err(Failure::Design("recorded reference values were not reproduced".into()))
    }
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let mut config = load_config(&args.config)?;
    if let Some(h) = args.h {
        config.run.h_seconds = h;
    }
    if let Some(horizon) = args.horizon {
        config.run.horizon_seconds = horizon;
    }
    let built = build_checked(&config)?;
    if let Some(issue) = &built.certificate_issue {
        eprintln!("note: {issue}; the comparison needs no certificate");
    }

    let threshold = args.tol.unwrap_or(1e-4);
    let base_seed = args.seed.unwrap_or(0);
    let rows = compare::run_comparison(&built.design, &built.run, base_seed, 10, threshold)
        .map_err(Failure::Runtime)?;

    println!("settling threshold: {threshold:.1e}, horizon: {} s", built.run.horizon);
    for row in &rows {
        println!(
            "seed {:>3}: full {}, baseline {}",
            row.seed,
            compare::fmt_settle(row.full),
            compare::fmt_settle(row.baseline)
        );
    }
    let full = compare::spread(rows.iter().map(|r| r.full));
    let base = compare::spread(rows.iter().map(|r| r.baseline));
    println!(
        "spread: full std {} over {} settled, baseline std {} over {} settled",
        compare::fmt_std(&full),
        full.count,
        compare::fmt_std(&base),
        base.count
    );
    match (full.std, base.std) {
        (Some(f), Some(b)) if b > 0.0 => println!("spread ratio: {:.3}", f / b),
        _ => println!("spread ratio: not available"),
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(runtime)?;
        let path = dir.join("comparison.csv");
        let mut csv = String::from("seed,full_settle_seconds,baseline_settle_seconds\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{}\n",
                row.seed,
                compare::fmt_csv(row.full),
                compare::fmt_csv(row.baseline)
            ));
        }
        fs::write(&path, csv).map_err(runtime)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Parse(format!("{}: {e}", args.config.display())))?;
    let doc = schedule_doc::parse(&text).map_err(Failure::Parse)?;
    let nu_d = args.nu_d.or(doc.nu_d_seconds).ok_or_else(|| {
        Failure::Parse("duration allowance missing: pass --nu-d or add nu_d_seconds to the file".into())
    })?;
    let p_d = args.p_d.or(doc.p_d_ratio).ok_or_else(|| {
        Failure::Parse("duration ratio missing: pass --p-d or add p_d_ratio to the file".into())
    })?;

    let pairs: Vec<(f64, f64)> = doc.intervals.iter().map(|i| i.bounds()).collect();
    let horizon = doc
        .horizon_seconds
        .unwrap_or_else(|| pairs.iter().map(|p| p.1).fold(1.0_f64, f64::max));
    let schedule =
        AttackSchedule::new(pairs, horizon).map_err(|e| Failure::Parse(e.to_string()))?;
    let budget = AttackBudget::new(nu_d, p_d).map_err(|e| Failure::Parse(e.to_string()))?;

    match validate_budget(&schedule, &budget, 0.0) {
        BudgetVerdict::Valid => {
            let attacked = attacked_duration(&schedule, 0.0, horizon).unwrap_or(0.0);
            println!(
                "valid: {} interval(s), {attacked:.4} s attacked over [0, {horizon}], within {nu_d} + t/{p_d}",
                schedule.intervals().len()
            );
            Ok(())
        }
        BudgetVerdict::Violation { at, excess } => {
            println!("violation at t = {at}: attacked duration exceeds {nu_d} + t/{p_d} by {excess:.4} s");
            Err(Failure::Bound(format!("attack budget violated at t = {at}")))
        }
    }
}

fn runtime(e: impl fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_run_artifacts(
    dir: &Path,
    built: &BuiltScenario,
    result: &SimulationResult,
) -> Result<(PathBuf, PathBuf), Failure> {
    fs::create_dir_all(dir).map_err(runtime)?;
    let csv_path = dir.join("results.csv");
    let mut csv = fs::File::create(&csv_path).map_err(runtime)?;
    write_csv(result, &mut csv).map_err(runtime)?;
    let summary_path = dir.join("summary.txt");
    let mut summary = fs::File::create(&summary_path).map_err(runtime)?;
    write_summary(built, result, &mut summary).map_err(runtime)?;
    Ok((csv_path, summary_path))
}

/// Prints one line per certified bound and collects violations. A bound
/// beyond the horizon cannot be assessed and is reported as such rather than
/// treated as a violation; the summary's settling line already flags runs
/// that have not settled.
fn report_bounds(built: &BuiltScenario, result: &SimulationResult) -> Result<(), Failure> {
    let Some(cert) = built.design.certificate.as_ref() else {
        println!("bounds: not assessed (no certificate)");
        return Ok(());
    };
    let Some((_, t_a)) = built.settling_bounds() else {
        println!("bounds: not assessed (no feedback channels)");
        return Ok(());
    };
    let tol = result.settling.tol;
    let horizon = result.times.last().copied().unwrap_or(0.0);
    let checks = [
        ("estimation", cert.times.t_o, &result.observer_norm, result.settling.observer_settle),
        ("output", t_a, &result.output_norm, result.settling.output_settle),
    ];
    let mut violations = Vec::new();
    for (label, bound, norms, settle) in checks {
        if bound > horizon {
            let note = match settle {
                Some(t) => format!("settled empirically at {t:.4} s"),
                None => "not settled within horizon".to_string(),
            };
            println!("{label} bound {bound:.4} s lies beyond the horizon {horizon:.4} s: not assessed; {note}");
            continue;
        }
        let mut worst = 0.0_f64;
        let mut at = bound;
        for (k, &t) in result.times.iter().enumerate() {
            if t >= bound && norms[k] > worst {
                worst = norms[k];
                at = t;
            }
        }
        if worst >= tol {
            println!(
                "{label} bound violated: error {worst:.3e} at t = {at:.4} s (tolerance {tol:.1e}, bound {bound:.4} s)"
            );
            violations.push(format!(
                "{label} error {worst:.3e} at t = {at:.4} s exceeds {tol:.1e} beyond the bound {bound:.4} s"
            ));
        } else {
            println!(
                "{label} bound holds: worst error {worst:.3e} beyond {bound:.4} s (tolerance {tol:.1e})"
            );
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Bound(violations.join("; ")))
    }
}

/// Schedule in the standalone file format `validate-schedule` reads back.
fn schedule_artifact(built: &BuiltScenario) -> String {
    #[derive(serde::Serialize)]
    struct Artifact<'a> {
        nu_d_seconds: f64,
        p_d_ratio: f64,
        horizon_seconds: f64,
        intervals: &'a [(f64, f64)],
    }
    let artifact = Artifact {
        nu_d_seconds: built.design.budget.nu_d(),
        p_d_ratio: built.design.budget.p_d(),
        horizon_seconds: built.design.schedule.horizon(),
        intervals: built.design.schedule.intervals(),
    };
    let mut text = serde_json::to_string_pretty(&artifact).expect("schedule serializes");
    text.push('\n');
    text
}
