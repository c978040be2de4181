use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ftcal::pipeline::{run, Command, RunOptions};

/// Simulation, calibration and evaluation of six-axis force/torque sensors.
///
/// Every command writes `manifest.toml` and the resolved `config.toml` into
/// the output directory. Exit codes: 0 success, 1 validation failure
/// (invalid config or input, failed check), 2 runtime error.
#[derive(Parser)]
#[command(name = "ftcal", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML). Defaults are used when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `trajectory.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct Methods {
    /// Overrides `calibration.methods`: pinv, qp, ridge, mlp. Repeat the flag
    /// or give a comma-separated list.
    #[arg(long = "method", value_name = "NAME")]
    methods: Vec<String>,
}

#[derive(Args)]
struct Inputs {
    /// Training dataset CSV instead of simulating one.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Held-out dataset CSV instead of simulating one.
    #[arg(long, value_name = "PATH")]
    test: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a simulated training dataset and a held-out dataset.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the configured methods and write matrices, KKT report and QP dumps.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        methods: Methods,
        /// Training dataset CSV instead of simulating one.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// Fit and evaluate each method, or evaluate a given matrix, on held-out data.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        methods: Methods,
        #[command(flatten)]
        inputs: Inputs,
        /// Calibration matrix CSV to evaluate instead of fitting.
        #[arg(long, value_name = "PATH")]
        matrix: Option<PathBuf>,
    },
    /// Compare methods on the same training and held-out data.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        methods: Methods,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Check a matrix against the nominal sign pattern; exit 1 on violations.
    CheckSigns {
        #[command(flatten)]
        common: Common,
        /// Calibration matrix CSV.
        #[arg(long, value_name = "PATH", conflicts_with = "fixture")]
        matrix: Option<PathBuf>,
        /// Built-in published matrix.
        #[arg(long, value_parser = ["pseudo-inverse", "constrained"])]
        fixture: Option<String>,
    },
    /// Train on degenerate excitation and compare pinv and QP on full excitation.
    DemoNullspace {
        #[command(flatten)]
        common: Common,
    },
}

fn options(common: Common) -> RunOptions {
    RunOptions { config: common.config, seed: common.seed, out: common.out, ..RunOptions::default() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, opts) = match cli.command {
        Cmd::Simulate { common } => (Command::Simulate, options(common)),
        Cmd::Calibrate { common, methods, data } => {
            (Command::Calibrate, RunOptions { methods: methods.methods, data, ..options(common) })
        }
        Cmd::Evaluate { common, methods, inputs, matrix } => (
            Command::Evaluate,
            RunOptions { methods: methods.methods, data: inputs.data, test: inputs.test, matrix, ..options(common) },
        ),
        Cmd::Compare { common, methods, inputs } => (
            Command::Compare,
            RunOptions { methods: methods.methods, data: inputs.data, test: inputs.test, ..options(common) },
        ),
        Cmd::CheckSigns { common, matrix, fixture } => {
            (Command::CheckSigns, RunOptions { matrix, fixture, ..options(common) })
        }
        Cmd::DemoNullspace { common } => (Command::DemoNullspace, options(common)),
    };
    let outcome = run(cmd, &opts);
    print!("{}", outcome.summary);
    for e in &outcome.manifest.errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
