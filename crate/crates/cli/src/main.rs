//! `relclust`: cluster the results of a join query given as CSV relations.

mod ingest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use relclust::clustering::{Mode, Objective, Strategy};
use relclust::coreset::Builder;
use relclust::ghd::{validate_ghd, DEFAULT_BAG_BUDGET};
use relclust::oracle::{discrete_opt, exact_cost, materialize, DEFAULT_JOIN_BUDGET};
use relclust::pipeline::{run, RunConfig};

use crate::ingest::ingest;
use crate::report::{DiscreteOptimum, OracleReport, RunReport, Settings};

/// k-median and k-means clustering of join results without materializing the join.
#[derive(Debug, Parser)]
#[command(name = "relclust", version)]
struct Cli {
    /// Query specification (.toml or .json) listing the relations and their CSV files.
    spec: PathBuf,
    /// Number of centers.
    #[arg(long)]
    k: usize,
    /// Accuracy parameter in (0, 1).
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// median or means.
    #[arg(long, default_value = "median")]
    objective: Objective,
    /// geometric (centers anywhere) or discrete (centers among join results).
    #[arg(long, default_value = "geometric")]
    mode: Mode,
    /// Coreset builder at internal nodes: slow or fast.
    #[arg(long, default_value = "fast")]
    algorithm: Builder,
    /// Clustering routine: exhaustive or iterative.
    #[arg(long, default_value = "exhaustive")]
    solver: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Materialize the join and embed the exact cost and discrete optimum in the report.
    #[arg(long)]
    oracle: bool,
    /// Largest number of tuples materialized for a decomposition bag or the oracle join.
    #[arg(long)]
    budget: Option<usize>,
    /// Ceiling on the samples drawn per cell by the fast builder.
    #[arg(long)]
    max_samples: Option<u64>,
}

fn execute(cli: &Cli) -> anyhow::Result<RunReport> {
    let loaded = ingest(&cli.spec)?;
    let db = &loaded.db;
    let width = match &loaded.ghd {
        Some(ghd) => validate_ghd(&db.query(), ghd)?.width,
        None => None,
    };
    let mut config = RunConfig::new(cli.k, cli.epsilon, cli.objective)
        .with_mode(cli.mode)
        .with_builder(cli.algorithm)
        .with_strategy(cli.solver)
        .with_seed(cli.seed)
        .with_sample_cap(cli.max_samples);
    config.bag_budget = cli.budget.unwrap_or(DEFAULT_BAG_BUDGET);

    let start = Instant::now();
    let solution = run(db, &config, loaded.ghd.as_ref()).context("clustering failed")?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    log::info!("clustered {} join results in {wall_time_ms:.1} ms", solution.join_size);

    let settings = Settings {
        k: cli.k,
        epsilon: cli.epsilon,
        objective: cli.objective.to_string(),
        mode: cli.mode.to_string(),
        algorithm: cli.algorithm.to_string(),
        solver: cli.solver.to_string(),
        seed: cli.seed,
        max_samples: cli.max_samples,
    };
    let mut report = RunReport::new(settings, db, solution, width, wall_time_ms);
    if cli.oracle {
        let join = materialize(db, cli.budget.unwrap_or(DEFAULT_JOIN_BUDGET)).context("oracle materialization failed")?;
        let attrs: Vec<usize> = (0..db.dim()).collect();
        let cost = exact_cost(&join, &attrs, &report.centers, cli.objective);
        let (discrete_optimum, note) = match discrete_opt(&join, &attrs, cli.k, cli.objective) {
            Ok((centers, cost)) => (Some(DiscreteOptimum { centers, cost }), None),
            Err(e @ relclust::Error::EnumerationLimit { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e).context("oracle enumeration failed"),
        };
        report.oracle = Some(OracleReport { join_size: join.len(), cost, discrete_optimum, note });
    }
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("RELCLUST_LOG")).init();
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|report| {
        let json = serde_json::to_string_pretty(&report)?;
        match &cli.output {
            Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("cannot write {}", path.display())),
            None => {
                println!("{json}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
