use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use market_trust::engine::{self, MatchConfig, TrajectoryLog};
use market_trust::game::GameSpec;
use market_trust::inference::{self, RegimePolicy, SearchSpace};
use market_trust::scenarios::{self, ParetoParams, ScenarioOptions};

#[derive(Parser)]
#[command(name = "market-trust", version, about = "Repeated market games with trust and punishment dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a match from a TOML configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output stem; writes `<stem>.jsonl` and `<stem>.csv`.
        #[arg(long, default_value = "trajectory")]
        out: PathBuf,
    },
    /// Recover per-round (θ, γ) from a trajectory file.
    Extract {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value_t = RegimeArg::Threshold)]
        regime: RegimeArg,
        /// Trailing window for `--regime joint`.
        #[arg(long, default_value_t = 3)]
        window: usize,
        /// Punishment threshold for `--regime threshold`.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit dynamics constants to a set of trajectory files.
    Fit {
        /// Glob pattern, e.g. `runs/*.jsonl`.
        #[arg(long)]
        logs: String,
        /// TOML file describing the search space.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the two-agent payoff cloud and its Pareto front.
    Pareto {
        #[arg(long, value_enum)]
        game: GameArg,
        /// Private parameters of the two agents, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 2.0])]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        capacity: f64,
        #[arg(long, default_value_t = 400)]
        resolution: usize,
        #[arg(long, default_value_t = 0.1)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long, default_value = "pareto")]
        out: PathBuf,
    },
    /// Run a named scenario and check its checkpoints.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(scenarios::NAMES))]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run independent sweep points concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Threshold,
    Trust,
    Punishment,
    Recorded,
    Joint,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameArg {
    Kelly,
    Cournot,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn with_extension(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_outputs(log: &TrajectoryLog, stem: &Path) -> Result<(), Failure> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    engine::persist(log, with_extension(stem, "jsonl"))?;
    let mut csv = Vec::new();
    engine::export_csv(log, &[], &mut csv)?;
    fs::write(with_extension(stem, "csv"), csv)?;
    Ok(())
}

fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Simulate { config, out } => {
            let config = MatchConfig::from_toml_file(&config).map_err(|e| Failure::Usage(e.to_string()))?;
            let log = engine::run_match(&config)?;
            write_outputs(&log, &out)?;
            for r in &log.rounds {
                println!("round {:>3}: actions {:?} welfare {:.6}", r.round, r.actions, r.outcome.welfare());
            }
            println!("status: {:?}", log.status);
            Ok(log.is_complete())
        }
        Command::Extract { log, regime, window, threshold, out } => {
            let log = engine::load(&log)?;
            let policy = match regime {
                RegimeArg::Threshold => RegimePolicy::Threshold { threshold, coop_action: None },
                RegimeArg::Trust => RegimePolicy::Trust,
                RegimeArg::Punishment => RegimePolicy::Punishment,
                RegimeArg::Recorded => RegimePolicy::Recorded,
                RegimeArg::Joint => RegimePolicy::JointWindow { window },
            };
            let result = inference::extract_trajectory(&log, &policy)?;
            match out {
                Some(path) => result.write_csv(fs::File::create(path)?)?,
                None => result.write_csv(std::io::stdout().lock())?,
            }
            Ok(true)
        }
        Command::Fit { logs, space, out } => {
            let space: SearchSpace = match space {
                Some(path) => toml::from_str(&fs::read_to_string(path)?).map_err(|e| Failure::Usage(e.to_string()))?,
                None => SearchSpace::default(),
            };
            let paths: Vec<PathBuf> = glob::glob(&logs)
                .map_err(|e| Failure::Usage(e.to_string()))?
                .collect::<Result<_, _>>()?;
            if paths.is_empty() {
                return Err(Failure::Usage(format!("no files match `{logs}`")));
            }
            let logs = paths.iter().map(engine::load).collect::<Result<Vec<_>, _>>()?;
            let fit = inference::fit_dynamics(&logs, &space)?;
            let text = serde_json::to_string_pretty(&fit)?;
            match out {
                Some(path) => fs::write(path, &text)?,
                None => println!("{text}"),
            }
            let flat = fit.flat_dimensions();
            if !flat.is_empty() {
                eprintln!("not identified by these logs: {}", flat.join(", "));
            }
            Ok(true)
        }
        Command::Pareto { game, values, capacity, resolution, lo, hi, out } => {
            if values.len() != 2 {
                return Err(Failure::Usage(format!("--values needs exactly two numbers, got {}", values.len())));
            }
            let spec = match game {
                GameArg::Kelly => GameSpec::kelly(capacity, values),
                GameArg::Cournot => GameSpec::cournot(values),
            }
            .map_err(|e| Failure::Usage(e.to_string()))?;
            if !(lo < hi) || resolution < 2 {
                return Err(Failure::Usage("need lo < hi and resolution >= 2".into()));
            }
            let params = ParetoParams { game: spec, resolution, range: (lo, hi), ..ParetoParams::default() };
            let figure = scenarios::pareto_figure(&params)?;
            report(&figure.report, Some(&out))
        }
        Command::Scenario { name, out, parallel } => {
            let report_ = scenarios::run(&name, &ScenarioOptions { parallel })?;
            report(&report_, out.as_deref())
        }
    }
}

fn report(report: &scenarios::ScenarioReport, out: Option<&Path>) -> Result<bool, Failure> {
    for line in &report.summary {
        println!("{line}");
    }
    if let Some(dir) = out {
        for path in report.write_to(dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(report.passed())
}
