//! `rdcert`: certify spatial uniformity and network synchronization from
//! Jacobian envelopes, search thresholds, and cross-check by simulation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Outcome, EXIT_ERROR};
use config::{InitConfig, MethodConfig, MethodName, RunConfig, StructureName};

#[derive(Parser)]
#[command(name = "rdcert", version, about = "Contraction certificates for reaction-diffusion systems and coupled networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the certificate conditions at one value of lambda2.
    Certify(Common),
    /// Bisect for the smallest certifying lambda2.
    Threshold(Common),
    /// Simulate the PDE on an interval and write a CSV trace.
    SimulatePde(Common),
    /// Simulate the coupled network and write a CSV trace.
    SimulateNet(Common),
    /// Compute lambda2 of a domain or graph.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Edge list file ("u v" per line, 0-indexed) instead of a config.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long)]
        directed: bool,
    },
    /// Tabulate thresholds of every method on one model.
    Compare(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodName>,
    #[arg(long, value_enum)]
    structure: Option<StructureName>,
    /// Use this lambda2 instead of the configured domain or graph.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Report path (TOML), or CSV trace path for simulations.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial conditions.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Toml,
}

fn load(common: &Common) -> Result<RunConfig, String> {
    let path = common.config.as_ref().ok_or("--config is required")?;
    let mut cfg = config::load(path)?;
    if common.method.is_some() || common.structure.is_some() {
        let m = cfg.method.get_or_insert_with(MethodConfig::default);
        m.kind = common.method.or(m.kind);
        m.structure = common.structure.or(m.structure);
    }
    if let Some(l) = common.lambda2 {
        let s = cfg.spatial.get_or_insert_with(Default::default);
        s.lambda2 = Some(l);
        s.interval = None;
        s.rectangle = None;
        s.graph = None;
    }
    if let Some(seed) = common.seed {
        match cfg.simulation.as_mut().and_then(|s| s.init.as_mut()) {
            Some(InitConfig::Random { seed: s, .. }) => *s = seed,
            _ => return Err("--seed needs a random initial condition in [simulation.init]".into()),
        }
    }
    Ok(cfg)
}

fn report_document(cfg: Option<&RunConfig>, out: &Outcome) -> String {
    let mut doc = match cfg {
        Some(c) => toml::Table::try_from(c).expect("config serializes"),
        None => toml::Table::new(),
    };
    doc.insert("report".into(), toml::Value::Table(out.report.clone()));
    toml::to_string(&doc).expect("report serializes")
}

fn run(cli: Cli) -> Result<i32, String> {
    let (common, cfg, outcome) = match cli.command {
        Command::Spectral { common, edges, directed } => {
            let cfg = match (&edges, &common.config) {
                (Some(_), _) => None,
                _ => Some(load(&common)?),
            };
            let out = commands::spectral(cfg.as_ref(), edges.as_deref(), directed)?;
            (common, cfg, out)
        }
        Command::Certify(common) => {
            let cfg = load(&common)?;
            let out = commands::certify(&cfg)?;
            (common, Some(cfg), out)
        }
        Command::Threshold(common) => {
            let cfg = load(&common)?;
            let out = commands::threshold(&cfg)?;
            (common, Some(cfg), out)
        }
        Command::Compare(common) => {
            let cfg = load(&common)?;
            let out = commands::compare(&cfg)?;
            (common, Some(cfg), out)
        }
        Command::SimulatePde(common) => {
            if common.lambda2.is_some() {
                return Err("--lambda2 does not apply to simulations".into());
            }
            let cfg = load(&common)?;
            let out = commands::simulate_pde_cmd(&cfg)?;
            (common, Some(cfg), out)
        }
        Command::SimulateNet(common) => {
            if common.lambda2.is_some() {
                return Err("--lambda2 does not apply to simulations".into());
            }
            let cfg = load(&common)?;
            let out = commands::simulate_net_cmd(&cfg)?;
            (common, Some(cfg), out)
        }
    };
    let doc = report_document(cfg.as_ref(), &outcome);
    match common.format {
        Format::Text => print!("{}", outcome.text),
        Format::Toml => print!("{doc}"),
    }
    if let Some(path) = &common.out {
        let body = outcome.csv.as_deref().unwrap_or(&doc);
        std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
