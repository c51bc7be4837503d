//! Command-line experiment runner.
//!
//! `run <experiment>` solves the configured sweep and writes one CSV row per
//! `(h, mu, lambda)`; the thermo experiment also writes sampled displacement
//! grids, and `--plot` adds a log-log SVG.

mod config;
mod output;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{
    elements_name, method_name, parse_lambda_list, parse_list, parse_refinement, Experiment, ExperimentConfig,
};
pub use output::{grid_to_csv, loglog_svg, rows_to_csv, CSV_HEADER};
pub use run::{run, write_outputs, Row, RunError, RunOutput};

use crate::problems::{Elements, Method};

#[derive(Debug, Parser)]
#[command(name = "gradrobust", version, about = "Gradient-robust mixed FEM experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a named experiment.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// ex1_incompressible | ex2_gradient_poly | ex3_gradient_cubic |
    /// ex4_nearly_incompressible | thermo
    pub experiment: String,
    /// robust | naive
    #[arg(long, default_value = "robust")]
    pub method: String,
    /// q2_dgp1 | q2_q1
    #[arg(long, default_value = "q2_dgp1")]
    pub elements: String,
    /// Comma separated refinement levels r (2^r cells per side).
    #[arg(long)]
    pub refine: Option<String>,
    /// Comma separated shear moduli.
    #[arg(long)]
    pub mu: Option<String>,
    /// Comma separated Lamé lambdas, or `inf`.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a log-log SVG next to the CSV.
    #[arg(long)]
    pub plot: bool,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunArgs {
    pub fn into_config(self) -> Result<ExperimentConfig, String> {
        let experiment: Experiment = self.experiment.parse()?;
        let mut c = ExperimentConfig::new(experiment);
        c.method = match self.method.as_str() {
            "robust" => Method::Robust,
            "naive" => Method::Naive,
            other => return Err(format!("unknown method '{other}' (robust | naive)")),
        };
        c.elements = match self.elements.as_str() {
            "q2_dgp1" => Elements::Q2Dgp1,
            "q2_q1" => Elements::Q2Q1,
            other => return Err(format!("unknown elements '{other}' (q2_dgp1 | q2_q1)")),
        };
        if let Some(r) = self.refine {
            c.refinement = parse_refinement(&r)?;
        }
        if let Some(m) = self.mu {
            c.mu_list = parse_list(&m)?;
        }
        if let Some(l) = self.lambda {
            c.lambda_list = parse_lambda_list(&l)?;
        }
        if let Some(o) = self.out {
            c.out_path = o;
        }
        c.plot = self.plot;
        c.seed = self.seed;
        c.validate()?;
        Ok(c)
    }
}

/// Parses arguments, runs and writes outputs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let Command::Run(args) = cli.command;
    let config = match args.into_config() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("configuration error: {msg}");
            return 2;
        }
    };
    let result = run(&config).and_then(|out| write_outputs(&config, &out));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
