mod args;
mod commands;
mod envelope;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command, Format};
use envelope::{cache_key, sidecar_path, Cache, ResultEnvelope, VERSION};

const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_FAILED: u8 = 4;

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if cli.workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    if let Some(seed) = cli.command.seed_mut() {
        seed.get_or_insert_with(rand::random::<u64>);
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[derive(Debug)]
enum RunError {
    Core(umpteen::Error),
    Io(std::io::Error),
    Csv(csv::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => e.fmt(f),
            RunError::Io(e) => write!(f, "i/o: {e}"),
            RunError::Csv(e) => write!(f, "csv: {e}"),
        }
    }
}

fn exit_code(e: &RunError) -> u8 {
    use umpteen::Error::*;
    match e {
        RunError::Core(e) if e.is_budget() => EXIT_BUDGET,
        RunError::Core(
            InvalidArgument(_)
            | DimensionOutOfRange(_)
            | IndexOutOfRange { .. }
            | InvalidTransposition(_)
            | NotFlippable { .. },
        ) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn seed_of(command: &Command) -> Option<u64> {
    let mut copy = command.clone();
    copy.seed_mut().and_then(|s| *s)
}

fn execute(cli: &Cli) -> Result<ExitCode, RunError> {
    let config = serde_json::to_value(&cli.command).expect("serializable config");
    let cache = match (&cli.command, cli.no_cache) {
        (Command::Verify(_), _) | (_, true) => None,
        _ => Cache::from_env(),
    };
    let key = cache_key(&config);

    let start = Instant::now();
    let (envelope, failed) = match cache.as_ref().and_then(|c| c.lookup(&key, &config)) {
        Some(mut hit) => {
            hit.cached = true;
            (hit, false)
        }
        None => {
            let outcome = commands::run(&cli.command, cli.workers).map_err(RunError::Core)?;
            let env = ResultEnvelope {
                tool: "umpteen".into(),
                version: VERSION.into(),
                command: cli.command.name().into(),
                config,
                seed: seed_of(&cli.command),
                workers: cli.workers,
                wall_time_secs: start.elapsed().as_secs_f64(),
                cached: false,
                payload: outcome.payload,
            };
            if !outcome.failed {
                if let Some(c) = &cache {
                    if let Err(e) = c.store(&key, &env) {
                        eprintln!("warning: could not write cache entry: {e}");
                    }
                }
            }
            if !outcome.summary.is_empty() {
                summary_line(cli, &env, &outcome.summary);
            }
            (env, outcome.failed)
        }
    };
    if envelope.cached {
        summary_line(cli, &envelope, "served from cache");
    }

    let body = match cli.format {
        Format::Json => envelope.to_json(),
        Format::Csv => envelope.to_csv().map_err(RunError::Csv)?,
    };
    match &cli.output {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(RunError::Io)?;
            }
            fs::write(path, body).map_err(RunError::Io)?;
            if cli.format == Format::Csv {
                fs::write(sidecar_path(path), envelope.to_json()).map_err(RunError::Io)?;
            }
        }
        None => print!("{body}"),
    }
    Ok(if failed {
        ExitCode::from(EXIT_FAILED)
    } else {
        ExitCode::SUCCESS
    })
}

/// One summary line per run; on standard output when the data goes to a file.
fn summary_line(cli: &Cli, env: &ResultEnvelope, summary: &str) {
    let seed = env.seed.map_or(String::new(), |s| format!(" seed={s}"));
    let line = format!("{}: {summary}{seed} cached={}", env.command, env.cached);
    if cli.output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}
