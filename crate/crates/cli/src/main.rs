// SPDX-License-Identifier: Apache-2.0

//! `al-lab`: run active-learning experiments and analyse their curves.

use al_lab::eval::{aggregate, efficiency_curve, read_curve_any, welch_t_test, write_efficiency_csv, GroupStats};
use al_lab::runner::{
    aggregate_by_strategy, load_config_file, read_rounds_csv, render_curves_svg, run_experiment_with, RunOptions,
};
use clap::{Parser, Subcommand};
use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

const SEED_ENV: &str = "AL_LAB_SEED";

#[derive(Parser)]
#[command(name = "al-lab", version, about = "Active-learning benchmark laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `run.out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent (seed, strategy) runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Labeling efficiency of one curve against a random-sampling curve.
    Efficiency {
        #[arg(long)]
        al: PathBuf,
        #[arg(long)]
        rs: PathBuf,
        /// Comma-separated target accuracies.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
    },
    /// Two-sided Welch t-test from summary statistics.
    Ttest {
        /// `mean,std,n` of the first group.
        #[arg(long)]
        a: String,
        /// `mean,std,n` of the second group.
        #[arg(long)]
        b: String,
    },
    /// Plot the aggregate curves of a rounds.csv as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn config(e: impl Display) -> Self {
        Failure::Config(e.to_string())
    }

    fn runtime(e: impl Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn parse_group(s: &str) -> Result<GroupStats, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Failure::config(format!("expected mean,std,n but got {s:?}"));
    let [m, sd, n] = parts.as_slice() else { return Err(bad()) };
    Ok(GroupStats::new(m.parse().map_err(|_| bad())?, sd.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?))
}

fn read_text(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, jobs } => {
            let mut cfg = load_config_file(&config).map_err(Failure::config)?;
            if let Some(out) = out {
                cfg.run.out_dir = out;
            }
            if let Ok(v) = std::env::var(SEED_ENV) {
                let seed = v.trim().parse().map_err(|_| Failure::config(format!("{SEED_ENV}={v:?} is not a u64")))?;
                cfg.run.seeds = vec![seed];
            }
            if jobs == 0 {
                return Err(Failure::config("--jobs must be at least 1"));
            }
            let records = run_experiment_with(&cfg, &RunOptions { jobs, round_limit: None }).map_err(|e| {
                if e.is_config_error() {
                    Failure::config(e)
                } else {
                    Failure::runtime(e)
                }
            })?;
            let curves = aggregate_by_strategy(&records).map_err(Failure::runtime)?;
            for (strategy, agg) in &curves {
                let last = agg.last();
                println!("{strategy:>16}  labels {:>7}  accuracy {:.4} +- {:.4}  (n={})", last.labels, last.mean, last.std, last.n);
            }
            println!("outputs written to {}", cfg.run.out_dir.display());
        }
        Command::Efficiency { al, rs, targets } => {
            let al = read_curve_any(&read_text(&al)?).map_err(Failure::runtime)?;
            let rs = read_curve_any(&read_text(&rs)?).map_err(Failure::runtime)?;
            let al = aggregate(&[al]).map_err(Failure::runtime)?;
            let rs = aggregate(&[rs]).map_err(Failure::runtime)?;
            let points = efficiency_curve(&al, &rs, &targets).map_err(Failure::runtime)?;
            write_efficiency_csv(&points, std::io::stdout().lock()).map_err(Failure::runtime)?;
        }
        Command::Ttest { a, b } => {
            let res = welch_t_test(parse_group(&a)?, parse_group(&b)?).map_err(Failure::config)?;
            println!("t = {:.6}", res.t);
            println!("dof = {:.6}", res.dof);
            println!("p = {:.6}", res.p);
            println!("significant at 0.05: {}", res.significant(0.05));
            if res.degenerate {
                println!("note: both standard deviations are zero; p set by convention");
            }
        }
        Command::Plot { input, out } => {
            let text = read_text(&input)?;
            let records = read_rounds_csv(text.as_bytes()).map_err(Failure::runtime)?;
            let curves = aggregate_by_strategy(&records).map_err(Failure::runtime)?;
            let named: Vec<_> = curves.into_iter().map(|(s, a)| (s.to_string(), a)).collect();
            fs::write(&out, render_curves_svg(&named)).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
