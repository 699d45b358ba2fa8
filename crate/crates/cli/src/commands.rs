use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use mgcn_core::checkpoint::Checkpoint;
use mgcn_core::config::RunConfig;
use mgcn_core::data::{load_dataset, make_synthetic, save_dataset, write_matrix_csv, MultiViewDataset};
use mgcn_core::experiment::{
    ablate as run_ablation, ablation_csv, history_csv, model_inputs, prepare_graphs, run_repeats, sweep as run_sweep,
    sweep_csv, Metrics, SweepParam,
};
use mgcn_core::fusion::FusedGraph;
use mgcn_core::graph::{Graph, Metric};
use mgcn_core::model::{evaluate, ModelInputs};
use mgcn_core::prepared::{load_prepared, save_prepared};
use mgcn_core::{Error, Tape};
use serde_json::json;

pub const SEED_ENV: &str = "MGCN_SEED";

/// Bad arguments or configuration; reported with exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl fmt::Display) -> anyhow::Error {
    Usage(msg.to_string()).into()
}

/// Config validation and parse failures count as usage errors.
fn config_error(err: Error) -> anyhow::Error {
    match err {
        Error::Config { .. } | Error::Param(_) | Error::Json(_) => usage(err),
        other => other.into(),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p).map_err(config_error).with_context(|| format!("config {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Ok(seed) = std::env::var(SEED_ENV) {
        cfg.seed = seed
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}: `{seed}` is not an unsigned integer")))?;
    }
    Ok(cfg)
}

fn check_jobs(jobs: usize) -> Result<()> {
    if jobs == 0 {
        return Err(usage("--jobs must be >= 1"));
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn graphs_for(data: &MultiViewDataset, cfg: &RunConfig, prepared: Option<&Path>) -> Result<Vec<Graph>> {
    match prepared {
        None => Ok(prepare_graphs(data, cfg.k, cfg.metric)?),
        Some(dir) => {
            let (manifest, graphs) = load_prepared(dir)?;
            if manifest.k != cfg.k || manifest.metric != cfg.metric {
                return Err(usage(format!(
                    "prepared graphs use k = {}, metric = {}; config has k = {}, metric = {}",
                    manifest.k, manifest.metric, cfg.k, cfg.metric
                )));
            }
            if graphs.len() != data.views.len() || manifest.nodes != data.samples() {
                return Err(usage(format!(
                    "prepared graphs cover {} views of {} nodes, dataset has {} views of {} samples",
                    graphs.len(),
                    manifest.nodes,
                    data.views.len(),
                    data.samples()
                )));
            }
            Ok(graphs)
        }
    }
}

fn inputs_for(data: &MultiViewDataset, cfg: &RunConfig, prepared: Option<&Path>) -> Result<ModelInputs> {
    Ok(model_inputs(data, graphs_for(data, cfg, prepared)?)?)
}

pub fn prepare(data: &Path, k: usize, metric: Metric, out: &Path) -> Result<()> {
    let dataset = load_dataset(data)?;
    if k == 0 || k >= dataset.samples() {
        return Err(usage(format!("--k must lie in [1, {}]", dataset.samples() - 1)));
    }
    let graphs = prepare_graphs(&dataset, k, metric)?;
    let manifest = save_prepared(out, &graphs, k, metric)?;
    println!("wrote {} graphs of {} nodes to {}", manifest.graphs.len(), manifest.nodes, out.display());
    Ok(())
}

pub fn train(
    config: Option<&Path>,
    data: &Path,
    out: &Path,
    prepared: Option<&Path>,
    jobs: usize,
    dump_graphs: bool,
) -> Result<()> {
    check_jobs(jobs)?;
    let cfg = load_config(config)?;
    let dataset = load_dataset(data)?;
    let inputs = inputs_for(&dataset, &cfg, prepared)?;
    let outcomes = run_repeats(&dataset, &inputs, &cfg, jobs)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let metrics = Metrics::from_outcomes(&dataset, &cfg, &outcomes);
    write(&out.join("metrics.json"), &metrics.to_json())?;

    let model_cfg = cfg.model_config();
    let mut fusion = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let r = o.repeat + 1;
        write(&out.join(format!("history_{r}.csv")), &history_csv(&o.history))?;
        write(&out.join(format!("split_{r}.json")), &serde_json::to_string_pretty(&o.split)?)?;
        Checkpoint::new(&cfg, dataset.classes, o.split.labeled.clone(), o.model.clone())
            .save(&out.join(format!("checkpoint_{r}.json")))?;
        let fused = FusedGraph::compute(&inputs.graphs, &o.model.fusion)?;
        let rows: Vec<Vec<f64>> = (0..fused.weights.rows()).map(|i| fused.weights.row_slice(i).to_vec()).collect();
        fusion.push(json!({ "repeat": r, "weights": rows, "alpha": fused.alpha }));
        if dump_graphs {
            let mut tape = Tape::new();
            let vars = o.model.forward(&mut tape, &inputs, &model_cfg)?;
            write_matrix_csv(&out.join(format!("refined_{r}.csv")), tape.value(vars.refined))?;
            write_matrix_csv(&out.join(format!("selected_{r}.csv")), tape.value(vars.adjacency))?;
        }
    }
    write(&out.join("fusion_weights.json"), &(serde_json::to_string_pretty(&fusion)? + "\n"))?;
    println!(
        "{}: test accuracy {:.4} ± {:.4} over {} repeats",
        dataset.name, metrics.mean_test_accuracy, metrics.std_test_accuracy, metrics.repeats
    );
    Ok(())
}

pub fn eval(checkpoint: &Path, data: &Path, prepared: Option<&Path>) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let dataset = load_dataset(data)?;
    if dataset.classes != ck.classes {
        return Err(usage(format!(
            "checkpoint has {} classes, dataset has {}",
            ck.classes, dataset.classes
        )));
    }
    let inputs = inputs_for(&dataset, &ck.config, prepared)?;
    let z = ck.model.predict(&inputs, &ck.config.model_config())?;
    let all: Vec<usize> = (0..dataset.samples()).collect();
    let mut labeled_flag = vec![false; dataset.samples()];
    for &i in &ck.labeled {
        *labeled_flag
            .get_mut(i)
            .ok_or_else(|| usage(format!("checkpoint labels sample {i}, dataset has {}", dataset.samples())))? = true;
    }
    let unlabeled: Vec<usize> = all.iter().copied().filter(|&i| !labeled_flag[i]).collect();
    let report = json!({
        "samples": dataset.samples(),
        "accuracy": evaluate(&z, &dataset.labels, &all)?,
        "train_accuracy": evaluate(&z, &dataset.labels, &ck.labeled)?,
        "test_accuracy": if unlabeled.is_empty() { None } else { Some(evaluate(&z, &dataset.labels, &unlabeled)?) },
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn parse_values(list: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--values: `{}` is not a number", s.trim())))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(usage("--values must not be empty"));
    }
    Ok(values)
}

pub fn sweep(param: &str, values: &str, config: Option<&Path>, data: &Path, out: &Path, jobs: usize) -> Result<()> {
    check_jobs(jobs)?;
    let param: SweepParam = param.parse().map_err(usage)?;
    let values = parse_values(values)?;
    let cfg = load_config(config)?;
    for &v in &values {
        param.apply(&cfg, v).map_err(config_error)?;
    }
    let dataset = load_dataset(data)?;
    let rows = run_sweep(&dataset, &cfg, param, &values, jobs)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(format!("sweep_{param}.csv"));
    write(&path, &sweep_csv(param, &rows))?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

pub fn ablate(config: Option<&Path>, data: &Path, out: &Path, jobs: usize) -> Result<()> {
    check_jobs(jobs)?;
    let cfg = load_config(config)?;
    let dataset = load_dataset(data)?;
    let inputs = inputs_for(&dataset, &cfg, None)?;
    let rows = run_ablation(&dataset, &inputs, &cfg, jobs)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let table = ablation_csv(&rows);
    write(&out.join("ablation.csv"), &table)?;
    print!("{table}");
    Ok(())
}

pub fn synth(out: &Path, samples: usize, views: usize, classes: usize, noise: f64, seed: u64) -> Result<()> {
    let data = make_synthetic(samples, views, classes, noise, seed).map_err(config_error)?;
    save_dataset(&data, out)?;
    println!("wrote {samples} samples in {views} views to {}", out.display());
    Ok(())
}
