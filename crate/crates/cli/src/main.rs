//! `hunt`: batch front-end for building strategies, certifying equilibria
//! and simulating treasure-hunt games.
//!
//! Exit codes: 0 on success, 1 on an internal numeric failure, 2 on invalid
//! input, 3 when `--expect-equilibrium` is given and the profile is not one.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hunt_core::{
    astar, birkhoff_decompose, certify, eps_sgreedy, format, poa_metrics, pure_equilibrium_search,
    robustness_eval, robustness_eval_with, simulate, BoxDistribution, CongestionPolicy, GameConfig,
    GameError, PartialPermutation, Profile, StrategyMatrix,
};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "hunt",
    version,
    about = "Strategies, equilibria and simulation for competitive treasure hunts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Game configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output format; csv is available for strategy matrices only.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Players {
    /// Strategy matrix (JSON, or CSV by extension) played by all k players.
    #[arg(long)]
    strategy: Option<PathBuf>,
    /// Profile JSON with one matrix per player.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// The optimal symmetric strategy A*.
    Astar {
        #[command(flatten)]
        common: Common,
    },
    /// Approximate symmetric equilibrium for any policy.
    Sgreedy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        theta: f64,
    },
    /// Best-response ratio of a profile.
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        players: Players,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Exit with status 3 unless the profile is an equilibrium.
        #[arg(long)]
        expect_equilibrium: bool,
    },
    /// Monte Carlo estimate of success and utilities.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        players: Players,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Success of a profile against the coordinated optimum.
    Poa {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        players: Players,
    },
    /// Equilibrium ratio of a k-player strategy played by k + extra players.
    Robustness {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        extra: usize,
        /// Comma-separated C(1..k+extra), required for table policies.
        #[arg(long, value_delimiter = ',')]
        extended_rewards: Option<Vec<f64>>,
    },
    /// Convex combination of deterministic strategies.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: PathBuf,
    },
    /// All deterministic equilibria of a small game.
    PureSearch {
        #[command(flatten)]
        common: Common,
    },
}

/// What a successful run leaves behind besides its output.
enum Verdict {
    Done,
    NotEquilibrium,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path) -> Result<GameConfig> {
    format::parse_config(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_matrix(path: &Path, config: &GameConfig) -> Result<StrategyMatrix> {
    let text = read(path)?;
    let f = config.distribution();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let matrix = if is_csv {
        format::parse_matrix_csv(&text, f)
    } else {
        format::parse_matrix(&text, f)
    }
    .with_context(|| format!("in {}", path.display()))?;
    config
        .check_matrix(&matrix)
        .with_context(|| format!("in {}", path.display()))?;
    Ok(matrix)
}

fn load_players(players: &Players, config: &GameConfig) -> Result<Profile> {
    let profile = match (&players.strategy, &players.profile) {
        (Some(path), None) => Profile::symmetric(load_matrix(path, config)?, config.players())?,
        (None, Some(path)) => format::parse_profile(&read(path)?, config.distribution())
            .with_context(|| format!("in {}", path.display()))?,
        _ => bail!("exactly one of --strategy and --profile is required"),
    };
    config.check_profile(&profile)?;
    Ok(profile)
}

fn config_hash(config: &GameConfig) -> String {
    hex::encode(Sha256::digest(format::config_to_json(config).as_bytes()))
}

fn ratio_value(ratio: f64) -> Value {
    if ratio.is_finite() {
        json!(ratio)
    } else {
        json!("inf")
    }
}

/// `{"1": label, ...}` for the rounds in which a box is opened.
fn visits_value(p: &PartialPermutation, f: &BoxDistribution) -> Value {
    let mut map = Map::new();
    for (t, x) in p.visits().iter().enumerate() {
        if let Some(x) = x {
            map.insert((t + 1).to_string(), json!(f.labels()[*x] + 1));
        }
    }
    Value::Object(map)
}

struct Output {
    text: String,
    verdict: Verdict,
}

fn report(
    command: &str,
    config: &GameConfig,
    seed: u64,
    inputs: Value,
    body: Value,
) -> Result<String> {
    let envelope = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config_hash": config_hash(config),
        "inputs": inputs,
        "report": body,
    });
    Ok(serde_json::to_string_pretty(&envelope)?)
}

fn matrix_output(
    matrix: &StrategyMatrix,
    config: &GameConfig,
    fmt: OutputFormat,
) -> Result<String> {
    let f = config.distribution();
    Ok(match fmt {
        OutputFormat::Json => format::matrix_to_json(matrix, f)?,
        OutputFormat::Csv => format::matrix_to_csv(matrix, f)?,
    })
}

fn json_only(fmt: OutputFormat, command: &str) -> Result<()> {
    if fmt == OutputFormat::Csv {
        bail!(GameError::InvalidParameter(format!(
            "csv output is available for strategy matrices only, not for {command}"
        )));
    }
    Ok(())
}

fn path_value(p: &Option<PathBuf>) -> Value {
    p.as_ref()
        .map_or(Value::Null, |p| json!(p.display().to_string()))
}

fn run(command: Command) -> Result<(Common, Output)> {
    let done = |text: String| Output {
        text,
        verdict: Verdict::Done,
    };
    Ok(match command {
        Command::Astar { common } => {
            let config = load_config(&common.config)?;
            let a = astar(config.distribution(), config.players(), config.rounds())?;
            let text = matrix_output(&a, &config, common.format)?;
            (common, done(text))
        }
        Command::Sgreedy { common, theta } => {
            let config = load_config(&common.config)?;
            let a = eps_sgreedy(&config, theta)?;
            let text = matrix_output(&a, &config, common.format)?;
            (common, done(text))
        }
        Command::Certify {
            common,
            players,
            tolerance,
            expect_equilibrium,
        } => {
            json_only(common.format, "certify")?;
            let config = load_config(&common.config)?;
            let profile = load_players(&players, &config)?;
            let cert = certify(&config, &profile, tolerance)?;
            let inputs = json!({
                "strategy": path_value(&players.strategy),
                "profile": path_value(&players.profile),
                "tolerance": tolerance,
            });
            let text = report("certify", &config, 0, inputs, serde_json::to_value(&cert)?)?;
            let verdict = if expect_equilibrium && !cert.is_equilibrium {
                Verdict::NotEquilibrium
            } else {
                Verdict::Done
            };
            (common, Output { text, verdict })
        }
        Command::Simulate {
            common,
            players,
            trials,
            seed,
        } => {
            json_only(common.format, "simulate")?;
            let config = load_config(&common.config)?;
            let profile = load_players(&players, &config)?;
            let rep = simulate(&config, &profile, trials, seed)?;
            let inputs = json!({
                "strategy": path_value(&players.strategy),
                "profile": path_value(&players.profile),
                "trials": trials,
            });
            let text = report(
                "simulate",
                &config,
                seed,
                inputs,
                serde_json::to_value(&rep)?,
            )?;
            (common, done(text))
        }
        Command::Poa { common, players } => {
            json_only(common.format, "poa")?;
            let config = load_config(&common.config)?;
            let profile = load_players(&players, &config)?;
            let rep = poa_metrics(&config, &profile)?;
            let inputs = json!({
                "strategy": path_value(&players.strategy),
                "profile": path_value(&players.profile),
            });
            let text = report("poa", &config, 0, inputs, serde_json::to_value(&rep)?)?;
            (common, done(text))
        }
        Command::Robustness {
            common,
            strategy,
            extra,
            extended_rewards,
        } => {
            json_only(common.format, "robustness")?;
            let config = load_config(&common.config)?;
            let a = load_matrix(&strategy, &config)?;
            let k = config.players();
            let ratio = match &extended_rewards {
                Some(rewards) => {
                    if rewards.len() != k + extra {
                        bail!(GameError::InvalidPolicy(format!(
                            "--extended-rewards has {} entries, expected k + extra = {}",
                            rewards.len(),
                            k + extra
                        )));
                    }
                    robustness_eval_with(&config, &a, CongestionPolicy::table(rewards.clone())?)?
                }
                None => robustness_eval(&config, &a, extra)?,
            };
            let inputs = json!({
                "strategy": strategy.display().to_string(),
                "extra": extra,
                "extended_rewards": extended_rewards,
            });
            let body = json!({ "players": k, "extra": extra, "ratio": ratio_value(ratio) });
            let text = report("robustness", &config, 0, inputs, body)?;
            (common, done(text))
        }
        Command::Decompose { common, strategy } => {
            json_only(common.format, "decompose")?;
            let config = load_config(&common.config)?;
            let a = load_matrix(&strategy, &config)?;
            let d = birkhoff_decompose(&a)?;
            let text = format::decomposition_to_json(&d, config.distribution())?;
            (common, done(text))
        }
        Command::PureSearch { common } => {
            json_only(common.format, "pure-search")?;
            let config = load_config(&common.config)?;
            let found = pure_equilibrium_search(&config)?;
            eprintln!("{} pure equilibria", found.len());
            let f = config.distribution();
            let equilibria: Vec<Value> = found
                .iter()
                .map(|eq| Value::Array(eq.iter().map(|p| visits_value(p, f)).collect()))
                .collect();
            let body = json!({ "count": found.len(), "equilibria": equilibria });
            let text = report("pure-search", &config, 0, json!({}), body)?;
            (common, done(text))
        }
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// 1 for numeric failures inside the library, 2 for everything caused by
/// the input.
fn failure_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<GameError>() {
        Some(GameError::NoConvergence(_) | GameError::Numeric(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = run(cli.command).and_then(|(common, output)| {
        emit(&common.out, &output.text)?;
        Ok(output.verdict)
    });
    match result {
        Ok(Verdict::Done) => ExitCode::SUCCESS,
        Ok(Verdict::NotEquilibrium) => {
            eprintln!("not an equilibrium");
            ExitCode::from(3)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(failure_code(&err))
        }
    }
}
