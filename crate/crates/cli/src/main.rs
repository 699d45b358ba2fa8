use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mgcn_core::graph::Metric;

mod commands;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Multi-view graph convolution with learned fusion and node selection.
#[derive(Debug, Parser)]
#[command(name = "mgcn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and cache the renormalized KNN graph of every view.
    Prepare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = Metric::Euclidean)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train `repeats` models on random splits and write metrics and artifacts.
    Train {
        /// JSON run configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory written by `prepare`, used instead of rebuilding graphs.
        #[arg(long)]
        graphs: Option<PathBuf>,
        /// Maximum number of repeats trained concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write the refined and selected adjacency of every repeat.
        #[arg(long)]
        dump_graphs: bool,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        graphs: Option<PathBuf>,
    },
    /// Mean and std of test accuracy over a grid of one hyperparameter.
    Sweep {
        /// One of k, gamma, tau, label-ratio.
        #[arg(long)]
        param: String,
        /// Comma separated grid values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Accuracy with each of the graph learning and node selection stages on and off.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Write a synthetic multi-view dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        views: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prepare { data, k, metric, out } => commands::prepare(&data, k, metric, &out),
        Command::Train {
            config,
            data,
            out,
            graphs,
            jobs,
            dump_graphs,
        } => commands::train(config.as_deref(), &data, &out, graphs.as_deref(), jobs, dump_graphs),
        Command::Eval { checkpoint, data, graphs } => commands::eval(&checkpoint, &data, graphs.as_deref()),
        Command::Sweep {
            param,
            values,
            config,
            data,
            out,
            jobs,
        } => commands::sweep(&param, &values, config.as_deref(), &data, &out, jobs),
        Command::Ablate { config, data, out, jobs } => commands::ablate(config.as_deref(), &data, &out, jobs),
        Command::Synth {
            out,
            samples,
            views,
            classes,
            noise,
            seed,
        } => commands::synth(&out, samples, views, classes, noise, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<commands::Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
