//! Command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error (including inconsistent
//! inputs to `compare`), 3 I/O error, 4 missing Q-table.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mapdes_core::agents::{moving_average, train, QTable, CURVE_WINDOW};
use mapdes_core::metrics::{build_comparison, daily_aggregates, summarize, summarize_rows, DailyAggregates, FigureKind};
use mapdes_core::simulator::{run_scenario, ScenarioKind};

use crate::config::{load_community, sha256_file, Community};
use crate::output::{write_atomic, RunManifest};
use crate::qtable_file::{load_qtable, save_qtable, QTableFileError};
use crate::reports::{
    comparison_text, curve_csv, figure_csv, figure_file_name, read_ledger_csv, read_summary_json,
    write_comparison_json, write_ledger_csv, write_summary_json, SummaryDocument,
};

#[derive(Debug, Parser)]
#[command(name = "mapdes", version, about = "Peer-to-peer energy trading simulator for dairy-farm communities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the Q-learning agent of a community.
    Train(TrainArgs),
    /// Run one scenario over the full horizon.
    Simulate(SimulateArgs),
    /// Build the comparison table and figure data from three scenario runs.
    Compare(CompareArgs),
    /// Train, simulate all three scenarios, and compare, under one directory.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[training] episodes` (300000 when neither is set).
    #[arg(long)]
    pub episodes: Option<u64>,
    #[arg(long, env = "MAPDES_SEED")]
    pub seed: Option<u64>,
    /// Q-table file; the learning curve and run manifest are written next to
    /// it as `<out>.curve.csv` and `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: ScenarioKind,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub qtable: Option<PathBuf>,
    #[arg(long, env = "MAPDES_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub no_re: PathBuf,
    #[arg(long)]
    pub re_only: PathBuf,
    #[arg(long)]
    pub re_p2p: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub episodes: Option<u64>,
    #[arg(long, env = "MAPDES_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    MissingQTable(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::MissingQTable(_) => 4,
        }
    }

    fn config(e: impl Display) -> Self {
        CliError::Config(e.to_string())
    }

    fn io(path: &Path, e: impl Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::MissingQTable(m) => write!(f, "missing Q-table: {m}"),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(a) => cmd_train(a).map(print_final_average),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

fn print_final_average(avg: Option<f64>) {
    match avg {
        Some(v) => println!("final moving-average reward (window {CURVE_WINDOW}): {v:.6}"),
        None => println!("no episodes trained"),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load(config: &Path, seed: Option<u64>) -> Result<Community, CliError> {
    load_community(config, seed).map_err(CliError::config)
}

fn manifest(command: &str, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<RunManifest, CliError> {
    let mut m = RunManifest::new(command, config, seed, out);
    if let Some(c) = config {
        m.config_sha256 = Some(sha256_file(c).map_err(|e| CliError::io(c, e))?);
    }
    Ok(m)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Trains and writes the table; returns the final moving-average reward.
pub fn cmd_train(a: &TrainArgs) -> Result<Option<f64>, CliError> {
    let community = load(&a.config, a.seed)?;
    let mut hp = community.training;
    if let Some(n) = a.episodes {
        hp.episodes = n;
    }
    let farm = community.training_farm();
    let spec = farm.battery.unwrap_or(community.battery);
    let m = manifest("train", Some(&a.config), Some(community.seed), &a.out)?;
    let manifest_path = with_suffix(&a.out, ".manifest.json");
    m.write(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;

    let outcome = train(&farm.dataset, &spec, &community.tariff, community.feed_in, &hp, community.seed)
        .map_err(CliError::config)?;
    save_qtable(&outcome.table, &a.out).map_err(|e| CliError::io(&a.out, e))?;
    write(&with_suffix(&a.out, ".curve.csv"), curve_csv(&outcome.curve).as_bytes())?;
    Ok(moving_average(&outcome.curve, CURVE_WINDOW).last().copied())
}

fn read_qtable(path: Option<&Path>) -> Result<QTable, CliError> {
    let path = path.ok_or_else(|| {
        CliError::MissingQTable("the community has a Q-learning farm; pass --qtable".into())
    })?;
    load_qtable(path).map_err(|e| match e {
        QTableFileError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            CliError::MissingQTable(format!("{} does not exist", path.display()))
        }
        QTableFileError::Io(io) => CliError::io(path, io),
        other => CliError::Config(format!("{}: {other}", path.display())),
    })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let community = load(&a.config, a.seed)?;
    let cfg = community.simulation(a.scenario);
    let qtable = if cfg.needs_qtable() {
        Some(read_qtable(a.qtable.as_deref())?)
    } else {
        None
    };
    let result = run_scenario(&cfg, qtable.as_ref()).map_err(CliError::config)?;

    let mut ledger = Vec::new();
    write_ledger_csv(&result.ledger_rows(), &mut ledger).map_err(CliError::config)?;
    let doc = SummaryDocument {
        scenario: a.scenario,
        seed: community.seed,
        community: community.fingerprint(),
        tariff: community.tariff,
        metrics: summarize(&result, &community.tariff),
    };
    let mut summary = Vec::new();
    write_summary_json(&doc, &mut summary).map_err(CliError::config)?;

    let m = manifest("simulate", Some(&a.config), Some(community.seed), &a.out)?;
    let manifest_path = a.out.join("manifest.json");
    m.write(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    write(&a.out.join("ledger.csv"), &ledger)?;
    write(&a.out.join("summary.json"), &summary)
}

struct RunDir {
    doc: SummaryDocument,
    daily: DailyAggregates,
}

fn read_run(dir: &Path, expected: ScenarioKind) -> Result<RunDir, CliError> {
    let summary_path = dir.join("summary.json");
    let ledger_path = dir.join("ledger.csv");
    let summary = fs::File::open(&summary_path).map_err(|e| CliError::io(&summary_path, e))?;
    let doc = read_summary_json(summary).map_err(|e| CliError::Config(format!("{}: {e}", summary_path.display())))?;
    if doc.scenario != expected {
        return Err(CliError::Config(format!(
            "{} holds a {} run, expected {expected}",
            dir.display(),
            doc.scenario
        )));
    }
    let ledger = fs::File::open(&ledger_path).map_err(|e| CliError::io(&ledger_path, e))?;
    let rows = read_ledger_csv(ledger).map_err(|e| CliError::Config(format!("{}: {e}", ledger_path.display())))?;
    let resummed = summarize_rows(&rows, &doc.tariff).map_err(CliError::config)?;
    if resummed != doc.metrics {
        return Err(CliError::Config(format!(
            "{}: ledger and summary disagree",
            dir.display()
        )));
    }
    let daily = daily_aggregates(&rows, &doc.tariff).map_err(CliError::config)?;
    Ok(RunDir { doc, daily })
}

pub fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let inputs = [
        (a.no_re.as_path(), ScenarioKind::NoReNoP2p),
        (a.re_only.as_path(), ScenarioKind::ReNoP2p),
        (a.re_p2p.as_path(), ScenarioKind::ReP2p),
    ];
    let runs: Vec<RunDir> = std::thread::scope(|s| {
        let handles: Vec<_> = inputs.iter().map(|&(dir, kind)| s.spawn(move || read_run(dir, kind))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("summarizing thread panicked"))
            .collect::<Result<_, _>>()
    })?;
    if runs.iter().any(|r| r.doc.community != runs[0].doc.community) {
        return Err(CliError::Config("the three runs come from different community configs".into()));
    }
    let rows = build_comparison(&runs[0].doc.metrics, &runs[1].doc.metrics, &runs[2].doc.metrics);
    let mut json = Vec::new();
    write_comparison_json(&rows, &mut json).map_err(CliError::config)?;

    let m = manifest("compare", None, Some(runs[0].doc.seed), &a.out)?;
    let manifest_path = a.out.join("manifest.json");
    m.write(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    write(&a.out.join("comparison.json"), &json)?;
    write(&a.out.join("comparison.txt"), comparison_text(&rows).as_bytes())?;
    for run in &runs {
        for kind in FigureKind::ALL {
            let name = figure_file_name(kind, run.doc.scenario);
            write(&a.out.join("figures").join(name), figure_csv(&run.daily, kind).as_bytes())?;
        }
    }
    print!("{}", comparison_text(&rows));
    Ok(())
}

pub fn cmd_reproduce(a: &ReproduceArgs) -> Result<(), CliError> {
    let qtable = a.out.join("q.tbl");
    let avg = cmd_train(&TrainArgs {
        config: a.config.clone(),
        episodes: a.episodes,
        seed: a.seed,
        out: qtable.clone(),
    })?;
    print_final_average(avg);
    for scenario in ScenarioKind::ALL {
        cmd_simulate(&SimulateArgs {
            scenario,
            config: a.config.clone(),
            qtable: Some(qtable.clone()),
            seed: a.seed,
            out: a.out.join(scenario.as_str()),
        })?;
    }
    cmd_compare(&CompareArgs {
        no_re: a.out.join(ScenarioKind::NoReNoP2p.as_str()),
        re_only: a.out.join(ScenarioKind::ReNoP2p.as_str()),
        re_p2p: a.out.join(ScenarioKind::ReP2p.as_str()),
        out: a.out.join("comparison"),
    })
}
