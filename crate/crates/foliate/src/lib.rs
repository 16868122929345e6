//! Command-line front end for `foliate-core`: JSON model descriptors in,
//! deterministic JSON or CSV reports out.

pub mod commands;
pub mod descriptor;
pub mod expr;
pub mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foliate_core::scalar::DEFAULT_TOLERANCE;

use commands::{CmdResult, ScalarChoice, VariantChoice};
use descriptor::Descriptor;
use report::{exit_code, ErrorInfo, ErrorKind, RunReport, Status, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "foliate", version, about = "Basic, twisted and compactly supported cohomology of model Riemannian foliations")]
#[command(after_help = "Exit codes: 0 success/taut/pass, 1 check failed or not taut, 2 model error, \
3 numerical instability or inconclusive, 4 descriptor schema error, 5 output not written.")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Relative rank tolerance for float complexes.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Scalar field for `analyze`; `auto` keeps the model's own.
    #[arg(long, global = true, value_enum, default_value_t = ScalarChoice::Auto)]
    pub scalar: ScalarChoice,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here (atomically) instead of to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add wall-clock timings to the report; the output is then no longer reproducible.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the basic complex, compute its cohomology and sweep truncations.
    Analyze {
        #[arg(long)]
        model: PathBuf,
        /// Ascending truncations for the stability sweep, e.g. 4,8,16.
        #[arg(long, value_delimiter = ',')]
        truncations: Option<Vec<u32>>,
    },
    /// Decide tautness. Exit 0 taut, 1 not taut, 3 inconclusive.
    Taut {
        #[arg(long)]
        model: PathBuf,
    },
    /// Integration pairing between compact and twisted classes.
    Pairing {
        #[arg(long)]
        model: PathBuf,
    },
    /// Mayer–Vietoris exactness over the descriptor's cover.
    Mv {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantChoice::All)]
        variant: VariantChoice,
    },
    /// Check an embedded table (only `sphere`).
    Table {
        name: String,
        #[arg(long)]
        d: u32,
        /// Also check the complementary-perversity duality.
        #[arg(long)]
        check_bic: bool,
        /// Use this fixture file instead of the embedded one.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Mean curvature, Rummler residual and optional flow and conformal checks
    /// for the descriptor's chart metric.
    Curvature {
        #[arg(long)]
        model: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Taut { .. } => "taut",
            Command::Pairing { .. } => "pairing",
            Command::Mv { .. } => "mv",
            Command::Table { .. } => "table",
            Command::Curvature { .. } => "curvature",
        }
    }

    fn model_path(&self) -> Option<&PathBuf> {
        match self {
            Command::Analyze { model, .. }
            | Command::Taut { model }
            | Command::Pairing { model }
            | Command::Mv { model, .. }
            | Command::Curvature { model } => Some(model),
            Command::Table { .. } => None,
        }
    }
}

fn dispatch(cli: &Cli, desc: Option<&Descriptor>) -> CmdResult {
    let g = &cli.global;
    let desc = || desc.expect("descriptor loaded for model commands");
    match &cli.command {
        Command::Analyze { truncations, .. } => commands::analyze(desc(), truncations.as_deref(), g.scalar, g.tolerance),
        Command::Taut { .. } => commands::taut(desc()),
        Command::Pairing { .. } => commands::pairing(desc()),
        Command::Mv { variant, .. } => commands::mv(desc(), *variant),
        Command::Table { name, d, check_bic, fixture } => commands::table(name, *d, *check_bic, fixture.as_deref()),
        Command::Curvature { .. } => commands::curvature(desc()),
    }
}

/// Run one command and assemble its report. Never panics on bad input.
pub fn run(cli: &Cli) -> RunReport {
    let start = Instant::now();
    let mut timings = BTreeMap::new();
    let loaded = cli.command.model_path().map(|p| Descriptor::load(p));
    timings.insert("load".to_string(), start.elapsed().as_secs_f64());

    let (descriptor, outcome) = match loaded {
        Some(Err(e)) => (None, Err(ErrorInfo { kind: ErrorKind::Schema, message: e.to_string() })),
        Some(Ok(d)) => {
            let out = dispatch(cli, Some(&d));
            (Some(d), out)
        }
        None => (None, dispatch(cli, None)),
    };
    timings.insert("total".to_string(), start.elapsed().as_secs_f64());

    let (status, error, result, table) = match outcome {
        Ok(o) => (o.status, None, o.result, o.table),
        Err(e) => (Status::Fail, Some(e), serde_json::Value::Null, Table::default()),
    };
    RunReport {
        tool: "foliate",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        descriptor,
        scalar: cli.global.scalar.as_str().to_string(),
        tolerance: cli.global.tolerance,
        status,
        exit_code: exit_code(status, error.as_ref()),
        error,
        result,
        timings: cli.global.timings.then_some(timings),
        table,
    }
}

impl RunReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}
