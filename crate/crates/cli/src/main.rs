mod args;
mod commands;
mod error;
mod output;

use std::io::Write;
use std::time::Instant;

use clap::Parser;

use args::{merge_config, reproducible_argv, Cli, Command};
use commands::{dispatch, Context};
use error::CliError;
use output::Manifest;

fn main() {
    std::process::exit(run(std::env::args().collect()));
}

fn run(argv: Vec<String>) -> i32 {
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{}", CliError::usage("config", msg).line());
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.code
        }
    }
}

fn execute(cli: Cli, argv: &[String]) -> Result<(), CliError> {
    let start = Instant::now();
    let (cli, argv) = match &cli.command {
        Command::Replay(r) => {
            let recorded = Manifest::read(&r.manifest)?;
            let mut inner_argv = vec!["perclab".to_string()];
            inner_argv.extend(recorded.argv);
            let mut inner = Cli::try_parse_from(&inner_argv)
                .map_err(|e| CliError::usage("invalid_manifest", e.to_string().lines().next().unwrap_or("").to_string()))?;
            inner.out = cli.out.clone();
            inner.workers = cli.workers;
            (inner, inner_argv)
        }
        _ => (cli, argv.to_vec()),
    };
    let ctx = Context {
        seed: cli.seed,
        workers: cli.workers,
    };
    let outcome = dispatch(&cli.command, &ctx)?;
    let manifest = Manifest {
        tool: "perclab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        argv: reproducible_argv(&argv, cli.seed),
        seed: cli.seed,
        workers: cli.workers,
        settings: serde_json::to_value(&cli.command).map_err(CliError::runtime)?,
        derived: outcome.derived,
        artifacts: outcome
            .artifacts
            .names()
            .map(|n| (n.to_string(), outcome.artifacts.get(n).map_or(0, <[u8]>::len)))
            .collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let written = outcome.artifacts.commit(&cli.out, &manifest)?;
    // Artifacts are already on disk, so a closed stdout is not a failure.
    let mut stdout = std::io::stdout().lock();
    let _ = match outcome.report {
        Some(report) => writeln!(stdout, "{}", serde_json::to_string_pretty(&report).map_err(CliError::runtime)?),
        None => written.iter().try_for_each(|p| writeln!(stdout, "{}", p.display())),
    };
    Ok(())
}
