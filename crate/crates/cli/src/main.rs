//! Command-line front end for density-estimation experiments on sampled
//! stationary processes.

mod commands;
mod config;
mod error;

use config::Config;
use error::{CliError, Result};

const USAGE: &str = "\
sampden - density estimation risk experiments for sampled stationary processes

USAGE:
    sampden <COMMAND> [ARGS] [OPTIONS]

COMMANDS:
    plan                 bandwidth / minimal-step / observation-time table
    sweep                Monte Carlo MISE sweep over a sample-size grid
    ratefit <csv>        fit the empirical rate from a sweep CSV (exit 4
                         when the slope misses its theoretical window)
    pointwise            scaled pointwise variance vs its analytic limit
    constants            design constants C, C_gamma0 and optimal c

OPTIONS:
    --config <path>      flat key = value configuration file
    --seed <u64>         override the config seed
    --out <path>         write the report to a file (atomic) instead of stdout
    --threads <k>        worker threads for replications (default: all cores)

EXIT CODES:
    0 success, 1 I/O error, 2 configuration error, 3 numerical failure,
    4 acceptance-check failure (ratefit)
";

struct Cli {
    command: String,
    positional: Vec<String>,
    config: Option<String>,
    seed: Option<u64>,
    out: Option<String>,
    threads: Option<usize>,
}

fn parse_args(args: &[String]) -> Result<Cli> {
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        std::process::exit(if args.is_empty() { 2 } else { 0 });
    }
    let command = args[0].clone();
    let mut cli = Cli {
        command,
        positional: Vec::new(),
        config: None,
        seed: None,
        out: None,
        threads: None,
    };
    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        let mut flag_value = |name: &str| -> Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::config(format!("flag {name} needs a value")))
        };
        match arg.as_str() {
            "--config" => cli.config = Some(flag_value("--config")?),
            "--out" => cli.out = Some(flag_value("--out")?),
            "--seed" => {
                let v = flag_value("--seed")?;
                cli.seed = Some(
                    v.parse()
                        .map_err(|e| CliError::config(format!("bad --seed '{v}': {e}")))?,
                );
            }
            "--threads" => {
                let v = flag_value("--threads")?;
                cli.threads = Some(
                    v.parse()
                        .map_err(|e| CliError::config(format!("bad --threads '{v}': {e}")))?,
                );
            }
            other if other.starts_with("--") => {
                return Err(CliError::config(format!("unknown flag '{other}'")));
            }
            other => cli.positional.push(other.to_string()),
        }
    }
    Ok(cli)
}

fn load_config(cli: &Cli) -> Result<Config> {
    match &cli.config {
        Some(path) => Config::load(path),
        None => Err(CliError::config("this command needs --config <path>")),
    }
}

fn run(args: &[String]) -> Result<()> {
    let cli = parse_args(args)?;
    if let Some(k) = cli.threads {
        // ignore the error if a pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let out = cli.out.as_deref();
    match cli.command.as_str() {
        "plan" => commands::cmd_plan(&load_config(&cli)?, cli.seed, out),
        "sweep" => commands::cmd_sweep(&load_config(&cli)?, cli.seed, out),
        "pointwise" => commands::cmd_pointwise(&load_config(&cli)?, cli.seed, out),
        "constants" => commands::cmd_constants(&load_config(&cli)?, out),
        "ratefit" => {
            let csv = cli
                .positional
                .first()
                .ok_or_else(|| CliError::config("ratefit needs a CSV path argument"))?;
            commands::cmd_ratefit(csv, out)
        }
        other => Err(CliError::config(format!("unknown command '{other}'; see --help"))),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
