use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lsarmax::config::{
    run_diagnose, run_fit, run_mc, run_simulate, run_theory, DiagnoseArgs, RunOutput, TheoryArgs,
    OUTPUT_DIR_ENV,
};
use lsarmax::data::ColumnMapping;

#[derive(Parser)]
#[command(
    name = "lsarmax",
    version,
    about = "Median-regression time series with log-symmetric errors and ARMA dynamics",
    after_help = format!(
        "Files are written to --output, then the config's output.dir, then ${OUTPUT_DIR_ENV}, then the working directory."
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a model from a TOML config and write the fit report.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed (used for restart jitter).
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw one series from a configured model and write it as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a bias/MSE replication experiment over an n-by-dispersion grid.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Residual diagnostics for a stored fit report against its data file.
    Diagnose {
        /// Fit report JSON produced by the fit subcommand.
        #[arg(long)]
        fit: PathBuf,
        /// CSV file the model was fitted on.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Seed for the envelope simulation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        envelope_replicates: usize,
        /// Envelope coverage level in [0, 1).
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Lags for the correlogram and portmanteau statistic.
        #[arg(long, default_value_t = 20)]
        lags: usize,
        /// Re-estimate the model on every envelope replicate.
        #[arg(long)]
        refit: bool,
        /// Response column, when the report lacks a column mapping.
        #[arg(long)]
        y: Option<String>,
        /// Location covariate columns, comma separated.
        #[arg(long, value_delimiter = ',')]
        x: Vec<String>,
        /// Dispersion covariate columns, comma separated.
        #[arg(long, value_delimiter = ',')]
        w: Vec<String>,
        /// Drop the implicit location intercept of the override mapping.
        #[arg(long)]
        no_x_intercept: bool,
        /// Drop the implicit dispersion intercept of the override mapping.
        #[arg(long)]
        no_w_intercept: bool,
    },
    /// Stationarity, moving-average weights, and marginal moments.
    Theory {
        /// Autoregressive coefficients, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        kappa: Vec<f64>,
        /// Moving-average coefficients, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        zeta: Vec<f64>,
        /// Constant dispersion of the log-scale innovations.
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        /// Autocovariance lags to report.
        #[arg(long, default_value_t = 10)]
        lags: usize,
        #[arg(long, default_value = "log-normal")]
        family: String,
        /// Extra kernel parameter for the families that take one.
        #[arg(long)]
        theta: Option<f64>,
        /// text or json.
        #[arg(long, default_value = "text")]
        format: String,
        /// Directory to also write the report into; stdout only if absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> lsarmax::Result<RunOutput> {
    match command {
        Command::Fit {
            config,
            seed,
            output,
        } => run_fit(&config, seed, output.as_deref()),
        Command::Simulate {
            config,
            seed,
            output,
        } => run_simulate(&config, seed, output.as_deref()),
        Command::Mc {
            config,
            seed,
            output,
        } => run_mc(&config, seed, output.as_deref()),
        Command::Diagnose {
            fit,
            data,
            output,
            seed,
            envelope_replicates,
            level,
            lags,
            refit,
            y,
            x,
            w,
            no_x_intercept,
            no_w_intercept,
        } => {
            let mapping = y.map(|y| ColumnMapping {
                y,
                x,
                w,
                x_intercept: !no_x_intercept,
                w_intercept: !no_w_intercept,
            });
            run_diagnose(
                &fit,
                &data,
                &DiagnoseArgs {
                    seed,
                    envelope_replicates,
                    level,
                    lags,
                    refit,
                    mapping,
                    output,
                },
            )
        }
        Command::Theory {
            kappa,
            zeta,
            phi,
            lags,
            family,
            theta,
            format,
            output,
        } => run_theory(&TheoryArgs {
            kappa,
            zeta,
            phi,
            lags,
            family,
            theta,
            format,
            output,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            if !out.summary.is_empty() {
                print!("{}", out.summary);
                if !out.summary.ends_with('\n') {
                    println!();
                }
            }
            for p in &out.paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
