use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use holdfeel_harness::config::BotsSection;
use holdfeel_harness::{check_invariants, metrics, replay, run_session, sweep, BotPolicy, SessionConfig, SessionLog};
use holdfeel_service::{Server, ServiceOptions};

#[derive(Parser)]
#[command(name = "holdfeel", version, about = "Headless sessions, replay and the live game service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one bot session and write its log.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Two policy names separated by a comma, e.g. haptic_chaser,haptic_chaser
        #[arg(long)]
        bots: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a log's inputs and check it reproduces every event.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Summary numbers and invariant checks for a log.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a seed range in parallel, one log per seed.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Half-open range, e.g. 0..100
        #[arg(long, value_parser = parse_range)]
        seeds: Range<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Host a live two-player session over websockets.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Write the session log here when the session ends.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = ServiceOptions::default().grace_ms)]
        grace_ms: u64,
    },
    /// Print the default config as TOML.
    Defaults,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("end: {e}"))?;
    if a >= b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok(a..b)
}

fn parse_bots(s: &str) -> Result<BotsSection> {
    let names: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = names[..] else { bail!("--bots takes two policy names, got {s:?}") };
    let policy = |n: &str| {
        BotPolicy::from_name(n)
            .with_context(|| format!("unknown bot policy {n:?} (hold_and_chase, haptic_chaser, random_releaser, never_touch)"))
    };
    Ok(BotsSection { player1: policy(a)?, player2: policy(b)? })
}

fn load_config(path: Option<&Path>) -> Result<SessionConfig> {
    match path {
        Some(p) => SessionConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SessionConfig::default()),
    }
}

fn read_log(path: &Path) -> Result<SessionLog> {
    SessionLog::read_from(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, bots, out } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(bots) = bots {
                cfg.bots = parse_bots(&bots)?;
            }
            let log = run_session(&cfg)?;
            log.write_to(&out).with_context(|| format!("writing {}", out.display()))?;
            println!("{}", metrics(&log));
        }
        Command::Replay { log } => {
            let log = read_log(&log)?;
            let outcome = replay(&log)?;
            println!("replayed {} game steps, {} events match", outcome.game_steps, outcome.events);
        }
        Command::Metrics { log, format } => {
            let log = read_log(&log)?;
            let m = metrics(&log);
            let violations = check_invariants(&log).err().unwrap_or_default();
            match format {
                Format::Text => {
                    println!("{m}");
                    for v in &violations {
                        println!("violation: {v}");
                    }
                }
                Format::Json => {
                    let doc = serde_json::json!({ "metrics": m, "violations": violations });
                    println!("{}", serde_json::to_string_pretty(&doc)?);
                }
            }
            if !violations.is_empty() {
                eprintln!("error: {} invariant violation(s)", violations.len());
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Sweep { config, seeds, out } => {
            let cfg = load_config(config.as_deref())?;
            let results = sweep(&cfg, seeds, &out)?;
            println!("seed\tscore\tnight_catch_rate");
            for r in &results {
                let rate = r.metrics.night_catch_rate.map_or("-".to_string(), |x| format!("{x:.3}"));
                println!("{}\t{}\t{rate}", r.seed, r.metrics.final_score);
            }
            let mean = results.iter().map(|r| r.metrics.final_score as f64).sum::<f64>() / results.len() as f64;
            println!("mean score {mean:.2} over {} sessions", results.len());
        }
        Command::Serve { config, bind, log, grace_ms } => {
            let cfg = load_config(config.as_deref())?;
            let opts = ServiceOptions { grace_ms, log_path: log, ..ServiceOptions::default() };
            let rt = tokio::runtime::Runtime::new()?;
            let outcome = rt.block_on(async {
                let server = Server::bind(cfg, &bind, opts).await?;
                eprintln!("listening on ws://{}{}", server.local_addr()?, holdfeel_service::SESSION_PATH);
                anyhow::Ok(server.run().await?)
            })?;
            println!("session ended ({:?}), final score {}", outcome.reason, outcome.final_score);
        }
        Command::Defaults => print!("{}", SessionConfig::default().to_toml_string()),
    }
    Ok(ExitCode::SUCCESS)
}
