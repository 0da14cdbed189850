use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gibbsmax::config::{parse_grid, read_json};
use gibbsmax::error::EXIT_CONFIG;
use gibbsmax::{CliError, Command, EnsembleDef, EnsembleSpec, ExperimentConfig, Format};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Estimate,
    Bounds,
    RemSweep,
    OracleCheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

/// Smoothed maxima of Gaussian processes: Monte Carlo estimates, bound
/// checks and REM pressure sweeps.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Command to run; may instead come from the config file.
    command: Option<Cmd>,
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Monte Carlo sample count.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inverse temperature; repeatable.
    #[arg(long)]
    beta: Vec<f64>,
    /// Inclusive grid "start:stop:step".
    #[arg(long = "beta-grid")]
    beta_grid: Option<String>,
    /// Sudakov constant.
    #[arg(long)]
    c: Option<f64>,
    /// Output path prefix (".csv", ".json", ".svg" are appended).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart (rem-sweep).
    #[arg(long)]
    plot: bool,
    #[arg(long, value_enum)]
    format: Option<Fmt>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Ensemble JSON, inline or as a file path.
    #[arg(long)]
    ensemble: Option<String>,
    /// I.i.d. ensemble "n,variance".
    #[arg(long)]
    iid: Option<String>,
    /// REM with this many spins.
    #[arg(long)]
    spins: Option<usize>,
    /// Observable for `estimate`; repeatable.
    #[arg(long)]
    observable: Vec<String>,
    /// Packing scale for the soft super-Sudakov check.
    #[arg(long = "packing-scale")]
    packing_scale: Option<f64>,
    /// Gauss–Hermite nodes per dimension for `oracle-check`.
    #[arg(long)]
    nodes: Option<usize>,
}

fn to_command(c: Cmd) -> Command {
    match c {
        Cmd::Estimate => Command::Estimate,
        Cmd::Bounds => Command::Bounds,
        Cmd::RemSweep => Command::RemSweep,
        Cmd::OracleCheck => Command::OracleCheck,
    }
}

fn ensemble_arg(s: &str) -> Result<EnsembleSpec, CliError> {
    if s.trim_start().starts_with('{') {
        let def: EnsembleDef =
            serde_json::from_str(s).map_err(|e| CliError::Config(format!("bad inline ensemble: {e}")))?;
        Ok(EnsembleSpec::Inline(def))
    } else {
        Ok(EnsembleSpec::File(PathBuf::from(s)))
    }
}

fn iid_arg(s: &str) -> Result<EnsembleSpec, CliError> {
    let bad = || CliError::Config(format!("--iid expects \"n,variance\", got `{s}`"));
    let (n, v) = s.split_once(',').ok_or_else(bad)?;
    Ok(EnsembleSpec::Inline(EnsembleDef::Iid {
        n: n.trim().parse().map_err(|_| bad())?,
        variance: v.trim().parse().map_err(|_| bad())?,
    }))
}

fn assemble(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), _) => read_json::<ExperimentConfig>(path)?,
        (None, Some(c)) => ExperimentConfig::new(to_command(c)),
        (None, None) => return Err(CliError::Config("no command given".into())),
    };
    if let Some(c) = cli.command {
        cfg.command = to_command(c);
    }
    let ensembles = [cli.ensemble.is_some(), cli.iid.is_some(), cli.spins.is_some()];
    if ensembles.iter().filter(|b| **b).count() > 1 {
        return Err(CliError::Config(
            "give at most one of --ensemble, --iid, --spins".into(),
        ));
    }
    if let Some(s) = &cli.ensemble {
        cfg.ensemble = Some(ensemble_arg(s)?);
    }
    if let Some(s) = &cli.iid {
        cfg.ensemble = Some(iid_arg(s)?);
    }
    if let Some(n) = cli.spins {
        cfg.ensemble = Some(EnsembleSpec::Inline(EnsembleDef::Rem { n_spins: n }));
    }
    if cli.beta_grid.is_some() || !cli.beta.is_empty() {
        let mut grid = match &cli.beta_grid {
            Some(g) => parse_grid(g)?,
            None => Vec::new(),
        };
        grid.extend(&cli.beta);
        cfg.beta_grid = grid;
    }
    if let Some(n) = cli.n {
        cfg.n_samples = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(c) = cli.c {
        cfg.c = c;
    }
    if let Some(o) = cli.out {
        cfg.output = Some(o);
    }
    if cli.plot {
        cfg.plot = true;
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            Fmt::Csv => Format::Csv,
            Fmt::Json => Format::Json,
        };
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if !cli.observable.is_empty() {
        cfg.observables = cli.observable;
    }
    if cli.packing_scale.is_some() {
        cfg.packing_scale = cli.packing_scale;
    }
    if let Some(n) = cli.nodes {
        cfg.quadrature_nodes = n;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", CliError::Config(first.to_string()).to_json_line());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let result = assemble(cli).and_then(|cfg| {
        let outcome = gibbsmax::run(&cfg)?;
        gibbsmax::emit(&cfg, &outcome)?;
        eprintln!(
            "{}",
            serde_json::json!({ "status": outcome.exit_code, "meta": outcome.meta })
        );
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
