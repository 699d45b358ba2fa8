//! Repeated runs, sweeps and ablations over one dataset.
//!
//! Every repeat draws its own split and initialization from seeds derived
//! from the base seed and the repeat index, so runs are independent and may
//! execute in parallel without changing any result.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{make_split, MultiViewDataset, Split, SplitSpec};
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, Graph, Metric};
use crate::model::{evaluate, train, HistoryRow, ModelInputs, ModelState};
use crate::parallel;

/// Standardizes each view, builds its KNN graph and renormalizes it.
pub fn prepare_graphs(data: &MultiViewDataset, k: usize, metric: Metric) -> Result<Vec<Graph>> {
    parallel::map_indices(data.views.len(), |v| {
        let x = data.views[v].standardized();
        build_knn_graph(&x, k, metric)?.renormalize()
    })
    .into_iter()
    .collect()
}

pub fn model_inputs(data: &MultiViewDataset, graphs: Vec<Graph>) -> Result<ModelInputs> {
    ModelInputs::new(graphs, data.concatenated_features()?)
}

/// SplitMix64 finalizer, used to derive per-repeat seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split_seed(base: u64, repeat: usize) -> u64 {
    mix(mix(base) ^ (2 * repeat as u64))
}

pub fn model_seed(base: u64, repeat: usize) -> u64 {
    mix(mix(base) ^ (2 * repeat as u64 + 1))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub repeat: usize,
    pub split: Split,
    pub history: Vec<HistoryRow>,
    pub model: ModelState,
    /// Accuracy on the unlabeled samples after the last iteration.
    pub test_accuracy: f64,
    pub train_accuracy: f64,
}

/// Trains one repeat from scratch.
pub fn run_single(data: &MultiViewDataset, inputs: &ModelInputs, config: &RunConfig, repeat: usize) -> Result<RunOutcome> {
    config.validate()?;
    let split = make_split(
        data,
        &SplitSpec {
            ratio: config.label_ratio,
            seed: split_seed(config.seed, repeat),
            stratified: config.stratified,
        },
    )?;
    let labels = split.label_set(data)?;
    let model_cfg = config.model_config();
    let mut model = ModelState::init(
        &model_cfg,
        inputs.nodes(),
        inputs.features.cols(),
        inputs.views(),
        data.classes,
        model_seed(config.seed, repeat),
    )?;
    let history = train(&mut model, inputs, &labels, &data.labels, &model_cfg)?;
    let z = model.predict(inputs, &model_cfg)?;
    let test_mask = labels.unlabeled();
    let test_accuracy = if test_mask.is_empty() {
        f64::NAN
    } else {
        evaluate(&z, &data.labels, &test_mask)?
    };
    let train_accuracy = evaluate(&z, &data.labels, &labels.labeled)?;
    Ok(RunOutcome {
        repeat,
        split,
        history,
        model,
        test_accuracy,
        train_accuracy,
    })
}

/// `config.repeats` independent runs, at most `jobs` at a time.
pub fn run_repeats(data: &MultiViewDataset, inputs: &ModelInputs, config: &RunConfig, jobs: usize) -> Result<Vec<RunOutcome>> {
    config.validate()?;
    parallel::map_indices_bounded(config.repeats, jobs, |r| run_single(data, inputs, config, r))
        .into_iter()
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub dataset: String,
    pub config_hash: String,
    pub repeats: usize,
    pub mean_test_accuracy: f64,
    pub std_test_accuracy: f64,
    pub test_accuracies: Vec<f64>,
    pub final_train_accuracies: Vec<f64>,
    pub final_losses: Vec<f64>,
    pub config: RunConfig,
}

impl Metrics {
    pub fn from_outcomes(data: &MultiViewDataset, config: &RunConfig, outcomes: &[RunOutcome]) -> Self {
        let test: Vec<f64> = outcomes.iter().map(|o| o.test_accuracy).collect();
        let (mean, std) = mean_std(&test);
        Metrics {
            dataset: data.name.clone(),
            config_hash: config.hash(),
            repeats: outcomes.len(),
            mean_test_accuracy: mean,
            std_test_accuracy: std,
            test_accuracies: test,
            final_train_accuracies: outcomes.iter().map(|o| o.train_accuracy).collect(),
            final_losses: outcomes
                .iter()
                .map(|o| o.history.last().map_or(f64::NAN, |h| h.loss))
                .collect(),
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}

/// History rows as CSV with header `iter,loss,train_acc,test_acc`.
pub fn history_csv(history: &[HistoryRow]) -> String {
    let mut out = String::from("iter,loss,train_acc,test_acc\n");
    for h in history {
        out.push_str(&format!("{},{},{},{}\n", h.iter, h.loss, h.train_acc, h.test_acc));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    K,
    Gamma,
    Tau,
    LabelRatio,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::K => "k",
            SweepParam::Gamma => "gamma",
            SweepParam::Tau => "tau",
            SweepParam::LabelRatio => "label-ratio",
        })
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepParam::K),
            "gamma" => Ok(SweepParam::Gamma),
            "tau" => Ok(SweepParam::Tau),
            "label-ratio" | "label_ratio" => Ok(SweepParam::LabelRatio),
            other => Err(Error::Param(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl SweepParam {
    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::K => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config {
                        field: "k",
                        msg: format!("sweep value {value} is not a positive integer"),
                    });
                }
                cfg.k = value as usize;
            }
            SweepParam::Gamma => cfg.gamma = value,
            SweepParam::Tau => cfg.tau = value,
            SweepParam::LabelRatio => cfg.label_ratio = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Runs `repeats` trainings per grid value, all sharing the base seed.
pub fn sweep(data: &MultiViewDataset, base: &RunConfig, param: SweepParam, values: &[f64], jobs: usize) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Param("sweep needs at least one value".into()));
    }
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|&v| param.apply(base, v))
        .collect::<Result<_>>()?;
    let shared = if param == SweepParam::K {
        None
    } else {
        Some(model_inputs(data, prepare_graphs(data, base.k, base.metric)?)?)
    };
    let mut rows = Vec::with_capacity(values.len());
    for (cfg, &value) in configs.iter().zip(values) {
        let owned;
        let inputs = match &shared {
            Some(i) => i,
            None => {
                owned = model_inputs(data, prepare_graphs(data, cfg.k, cfg.metric)?)?;
                &owned
            }
        };
        let outcomes = run_repeats(data, inputs, cfg, jobs)?;
        let acc: Vec<f64> = outcomes.iter().map(|o| o.test_accuracy).collect();
        let (mean, std) = mean_std(&acc);
        rows.push(SweepRow {
            value,
            mean_accuracy: mean,
            std_accuracy: std,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("{param},mean_acc,std_acc\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.value, r.mean_accuracy, r.std_accuracy));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub glm: bool,
    pub dns: bool,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub accuracies: Vec<f64>,
}

/// The four {GLM off/on} × {DNS off/on} variants, in the order
/// neither, GLM only, DNS only, full.
pub fn ablate(data: &MultiViewDataset, inputs: &ModelInputs, base: &RunConfig, jobs: usize) -> Result<Vec<AblationRow>> {
    let grid = [(false, false), (true, false), (false, true), (true, true)];
    grid.iter()
        .map(|&(glm, dns)| {
            let cfg = RunConfig {
                glm,
                dns,
                ..base.clone()
            };
            let outcomes = run_repeats(data, inputs, &cfg, jobs)?;
            let acc: Vec<f64> = outcomes.iter().map(|o| o.test_accuracy).collect();
            let (mean, std) = mean_std(&acc);
            Ok(AblationRow {
                glm,
                dns,
                mean_accuracy: mean,
                std_accuracy: std,
                accuracies: acc,
            })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("glm,dns,mean_acc,std_acc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            if r.glm { "on" } else { "off" },
            if r.dns { "on" } else { "off" },
            r.mean_accuracy,
            r.std_accuracy
        ));
    }
    out
}
