//! Command-line front end: run benchmark scenarios, inspect specialized IR,
//! and summarize CSV traces.

use clap::{Parser, Subcommand};
use hotpin::ir::{parse_program, pretty_print, stmt_count, Value};
use hotpin::report::report_dir;
use hotpin::scenario::{run_scenario, RunConfig};
use hotpin::specializer::{pin_and_specialize, GuardSelection, PinSet, SpecializeOpts};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hotpin", about = "runtime specialization toolbox", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a workload scenario and write metrics.csv, exploration.csv, and
    /// summary.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall-clock timings in the summary (informational only;
        /// CSVs stay byte-identical across runs).
        #[arg(long)]
        wallclock: bool,
    },
    /// Print the generic and specialized IR of one pinned point plus the
    /// pass log.
    Specialize {
        #[arg(long)]
        program: PathBuf,
        /// Point as FUNCTION:VARIABLE.
        #[arg(long)]
        point: String,
        /// Pinned value: integer, float, or true/false.
        #[arg(long)]
        value: String,
        #[arg(long)]
        no_guard: bool,
        #[arg(long)]
        unroll_cap: Option<u32>,
    },
    /// Summarize the metrics CSV of a previous run.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            seed,
            wallclock,
        } => cmd_run(&config, &out, seed, wallclock),
        Command::Specialize {
            program,
            point,
            value,
            no_guard,
            unroll_cap,
        } => cmd_specialize(&program, &point, &value, no_guard, unroll_cap),
        Command::Report { dir } => cmd_report(&dir),
    }
}

fn cmd_run(config: &PathBuf, out: &PathBuf, seed: Option<u64>, wallclock: bool) -> ExitCode {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = seed {
        cfg.override_seed(seed);
    }
    match run_scenario(&cfg, wallclock) {
        Ok(output) => {
            if let Err(e) = output.write_to(out) {
                eprintln!("error: cannot write outputs: {e}");
                return ExitCode::from(1);
            }
            print!("{}", output.summary);
            ExitCode::SUCCESS
        }
        Err(e) if e.is_trap() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_value(text: &str) -> Option<Value> {
    if text == "true" {
        return Some(Value::Bool(true));
    }
    if text == "false" {
        return Some(Value::Bool(false));
    }
    if let Ok(i) = text.parse::<i64>() {
        return Some(Value::Int(i));
    }
    text.parse::<f64>().ok().map(Value::Float)
}

fn cmd_specialize(
    program: &PathBuf,
    point: &str,
    value: &str,
    no_guard: bool,
    unroll_cap: Option<u32>,
) -> ExitCode {
    let text = match std::fs::read_to_string(program) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", program.display());
            return ExitCode::from(1);
        }
    };
    let parsed = match parse_program(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let Some((function, variable)) = point.split_once(':') else {
        eprintln!("error: --point takes FUNCTION:VARIABLE");
        return ExitCode::from(1);
    };
    let Some(pin_value) = parse_value(value) else {
        eprintln!("error: cannot parse value `{value}`");
        return ExitCode::from(1);
    };
    let mut opts = SpecializeOpts::default();
    if let Some(cap) = unroll_cap {
        opts.unroll_cap = cap;
    }
    if no_guard {
        opts.guards = GuardSelection::None;
    }
    let pins = PinSet::single(function, variable, pin_value);
    let variant = match pin_and_specialize(&parsed, &pins, opts) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let generic = parsed.function(function).expect("pin target exists");
    let mut generic_only = parsed.clone();
    generic_only.functions.retain(|f| f.name == function);
    generic_only.spec_points.clear();
    println!("; generic");
    print!("{}", pretty_print(&generic_only));
    println!();
    println!("; specialized as {}", variant.id);
    let mut specialized = generic_only.clone();
    specialized.functions[0] = variant.code.clone();
    print!("{}", pretty_print(&specialized));
    println!();
    println!("; pass log (nodes before -> after)");
    for entry in &variant.pass_log {
        println!(";   {entry}");
    }
    let before = stmt_count(&generic.body);
    let after = stmt_count(&variant.code.body);
    println!("; statements: {before} -> {after}");
    ExitCode::SUCCESS
}

fn cmd_report(dir: &PathBuf) -> ExitCode {
    match report_dir(dir) {
        Ok(table) => {
            print!("{table}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
