//! Graph convolutional classifier over the fused, refined and selected graph,
//! trained full-batch with Adam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{self, FusionParams, FusionVars};
use crate::graph::{self, Graph};
use crate::learning::{self, GlmParams};
use crate::matrix::Matrix;
use crate::selection::{self, SelectionVars};
use crate::tape::{Gradients, Tape, Var};

/// Lower clamp applied to probabilities inside the log of the cross-entropy.
pub const LOG_EPS: f64 = 1e-12;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DnsMode {
    /// Differentiable selection with a learned threshold.
    #[default]
    Soft,
    /// Per-row hard top-k on Â (non-differentiable comparison baseline).
    HardTopk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    SoftmaxRows,
    None,
}

/// Hyperparameters that shape one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub layers: usize,
    pub gamma: f64,
    pub tau: f64,
    pub lr: f64,
    pub epochs: usize,
    pub glm: bool,
    pub dns: bool,
    pub dns_mode: DnsMode,
    /// Neighbour count for [`DnsMode::HardTopk`].
    pub topk: usize,
    pub renormalize_after_selection: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_dim: 64,
            layers: 2,
            gamma: 1.0,
            tau: 0.5,
            lr: 0.1,
            epochs: 300,
            glm: true,
            dns: true,
            dns_mode: DnsMode::Soft,
            topk: 10,
            renormalize_after_selection: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Param(format!("{field}: {msg}")));
        if self.epochs == 0 {
            return bad("epochs", "must be >= 1".into());
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("lr", format!("must be > 0, got {}", self.lr));
        }
        if !(self.gamma > 0.0) {
            return bad("gamma", format!("must be > 0, got {}", self.gamma));
        }
        if !(self.tau > 0.0) {
            return bad("tau", format!("must be > 0, got {}", self.tau));
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim", "must be >= 1".into());
        }
        if self.layers < 1 {
            return bad("layers", "must be >= 1".into());
        }
        if self.topk == 0 {
            return bad("topk", "must be >= 1".into());
        }
        Ok(())
    }
}

/// Renormalized per-view graphs plus the GCN input features.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub graphs: Vec<Graph>,
    pub features: Matrix,
}

impl ModelInputs {
    pub fn new(graphs: Vec<Graph>, features: Matrix) -> Result<Self> {
        fusion::check_graphs(&graphs)?;
        if features.rows() != graphs[0].nodes() {
            return Err(Error::shape("model inputs", graphs[0].adjacency().shape(), features.shape()));
        }
        Ok(ModelInputs { graphs, features })
    }

    pub fn nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn views(&self) -> usize {
        self.graphs.len()
    }
}

/// One-hot targets restricted to the labeled set Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub targets: Matrix,
    pub labeled: Vec<usize>,
}

impl LabelSet {
    pub fn new(labels: &[usize], classes: usize, labeled: Vec<usize>) -> Result<Self> {
        if labeled.is_empty() {
            return Err(Error::Param("labeled set must not be empty".into()));
        }
        let mut targets = Matrix::zeros(labels.len(), classes);
        for &i in &labeled {
            let y = *labels
                .get(i)
                .ok_or_else(|| Error::Param(format!("labeled index {i} out of range")))?;
            if y >= classes {
                return Err(Error::Param(format!("label {y} out of range for {classes} classes")));
            }
            targets.set(i, y, 1.0);
        }
        Ok(LabelSet { targets, labeled })
    }

    pub fn classes(&self) -> usize {
        self.targets.cols()
    }

    /// Indices not in Ω.
    pub fn unlabeled(&self) -> Vec<usize> {
        let mut flags = vec![false; self.targets.rows()];
        for &i in &self.labeled {
            flags[i] = true;
        }
        (0..flags.len()).filter(|&i| !flags[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Moments {
    first: Matrix,
    second: Matrix,
}

/// Adam state for a fixed list of parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    step: u64,
    moments: Vec<Moments>,
}

impl AdamState {
    pub fn new(shapes: &[(usize, usize)]) -> Self {
        AdamState {
            step: 0,
            moments: shapes
                .iter()
                .map(|&(r, c)| Moments {
                    first: Matrix::zeros(r, c),
                    second: Matrix::zeros(r, c),
                })
                .collect(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn update(&mut self, params: &mut [&mut Matrix], grads: &[Matrix], lr: f64) -> Result<()> {
        if params.len() != self.moments.len() || grads.len() != params.len() {
            return Err(Error::Param(format!(
                "adam: {} moments, {} params, {} grads",
                self.moments.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        for ((p, g), mo) in params.iter_mut().zip(grads).zip(&mut self.moments) {
            if p.shape() != g.shape() {
                return Err(Error::shape("adam", p.shape(), g.shape()));
            }
            let (pd, gd) = (p.as_mut_slice(), g.as_slice());
            let (m1, m2) = (mo.first.as_mut_slice(), mo.second.as_mut_slice());
            for e in 0..pd.len() {
                m1[e] = ADAM_BETA1 * m1[e] + (1.0 - ADAM_BETA1) * gd[e];
                m2[e] = ADAM_BETA2 * m2[e] + (1.0 - ADAM_BETA2) * gd[e] * gd[e];
                let mhat = m1[e] / c1;
                let vhat = m2[e] / c2;
                pd[e] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
        }
        Ok(())
    }
}

/// All trainable parameters plus optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub fusion: FusionParams,
    pub glm: Option<GlmParams>,
    pub raw_threshold: f64,
    pub weights: Vec<Matrix>,
    pub optimizer: AdamState,
}

/// Tape handles for the trainable parameters of one forward pass.
#[derive(Debug, Clone)]
pub struct ParamVars {
    pub fusion_raw: Var,
    pub s1: Option<Var>,
    pub s2: Option<Var>,
    pub raw_threshold: Option<Var>,
    pub weights: Vec<Var>,
}

/// Everything a forward pass leaves on the tape.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub params: ParamVars,
    pub fusion: FusionVars,
    pub refined: Var,
    pub selection: Option<SelectionVars>,
    /// Adjacency actually used by the convolutions.
    pub adjacency: Var,
    pub logits: Var,
    pub probabilities: Var,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..limit))
}

impl ModelState {
    /// Fresh parameters: uniform fusion, random S1/S2, θ = 0.5, Glorot GCN
    /// weights.
    pub fn init(config: &ModelConfig, nodes: usize, features: usize, views: usize, classes: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if classes == 0 || views == 0 || nodes == 0 {
            return Err(Error::Param("nodes, views and classes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let glm = if config.glm {
            Some(GlmParams::random(nodes, config.gamma, &mut rng)?)
        } else {
            None
        };
        let mut dims = vec![features];
        dims.extend(std::iter::repeat_n(config.hidden_dim, config.layers - 1));
        dims.push(classes);
        let weights: Vec<Matrix> = dims.windows(2).map(|w| glorot(w[0], w[1], &mut rng)).collect();
        let mut state = ModelState {
            fusion: FusionParams::uniform(views),
            glm,
            raw_threshold: 0.0,
            weights,
            optimizer: AdamState::new(&[]),
        };
        let shapes: Vec<_> = state.parameters().iter().map(|(_, m)| m.shape()).collect();
        state.optimizer = AdamState::new(&shapes);
        Ok(state)
    }

    /// Named trainable parameters in a fixed order.
    pub fn parameters(&self) -> Vec<(String, Matrix)> {
        let mut out = vec![("fusion.raw".to_string(), self.fusion.raw.clone())];
        if let Some(g) = &self.glm {
            out.push(("glm.s1".into(), g.s1.clone()));
            out.push(("glm.s2".into(), g.s2.clone()));
        }
        out.push(("selection.raw_threshold".into(), Matrix::scalar(self.raw_threshold)));
        for (l, w) in self.weights.iter().enumerate() {
            out.push((format!("gcn.w{}", l + 1), w.clone()));
        }
        out
    }

    /// Overwrites parameters from a list in [`ModelState::parameters`] order.
    pub fn set_parameters(&mut self, values: &[Matrix]) -> Result<()> {
        let expected = self.parameters();
        if values.len() != expected.len() {
            return Err(Error::Param(format!("expected {} parameters, got {}", expected.len(), values.len())));
        }
        for ((name, old), new) in expected.iter().zip(values) {
            if old.shape() != new.shape() {
                return Err(Error::Param(format!("{name}: shape {:?} != {:?}", new.shape(), old.shape())));
            }
        }
        let mut it = values.iter().cloned();
        self.fusion.raw = it.next().expect("fusion");
        if let Some(g) = &mut self.glm {
            g.s1 = it.next().expect("s1");
            g.s2 = it.next().expect("s2");
        }
        self.raw_threshold = it.next().expect("threshold").item();
        for w in &mut self.weights {
            *w = it.next().expect("weight");
        }
        Ok(())
    }

    fn check_inputs(&self, inputs: &ModelInputs) -> Result<()> {
        if inputs.views() != self.fusion.views() {
            return Err(Error::shape("forward", (inputs.views(), inputs.views()), self.fusion.raw.shape()));
        }
        if inputs.features.cols() != self.weights[0].rows() {
            return Err(Error::shape("forward", inputs.features.shape(), self.weights[0].shape()));
        }
        if let Some(g) = &self.glm {
            if g.s1.rows() != inputs.nodes() {
                return Err(Error::shape("forward", (inputs.nodes(), inputs.nodes()), g.s1.shape()));
            }
        }
        Ok(())
    }

    /// Fusion → refinement → selection → L-layer GCN with row softmax output.
    pub fn forward(&self, tape: &mut Tape, inputs: &ModelInputs, config: &ModelConfig) -> Result<ForwardVars> {
        self.check_inputs(inputs)?;
        let fusion_raw = tape.leaf(self.fusion.raw.clone());
        let graphs: Vec<Var> = inputs.graphs.iter().map(|g| tape.leaf(g.adjacency().clone())).collect();
        let fusion = fusion::fuse_on_tape(tape, &graphs, fusion_raw)?;

        let (refined, s1, s2) = match &self.glm {
            Some(glm) => {
                let s1 = tape.leaf(glm.s1.clone());
                let s2 = tape.leaf(glm.s2.clone());
                let refined = learning::refine_graph(tape, fusion.fused, s1, s2, glm.gamma)?;
                (refined, Some(s1), Some(s2))
            }
            None => (fusion.fused, None, None),
        };

        let (mut adjacency, selection, raw_threshold) = if !config.dns {
            (refined, None, None)
        } else {
            match config.dns_mode {
                DnsMode::Soft => {
                    let th = tape.scalar(self.raw_threshold);
                    let sel = selection::select_on_tape(tape, refined, th, config.tau)?;
                    (sel.selected, Some(sel), Some(th))
                }
                DnsMode::HardTopk => {
                    let value = tape.value(refined);
                    let k = config.topk.min(value.cols());
                    let kept = selection::hard_topk_baseline(value, k)?;
                    let mask = kept.map(|x| if x != 0.0 { 1.0 } else { 0.0 });
                    (tape.mul_const(refined, mask)?, None, None)
                }
            }
        };
        if config.renormalize_after_selection {
            adjacency = graph::renormalize_on_tape(tape, adjacency)?;
        }

        let weights: Vec<Var> = self.weights.iter().map(|w| tape.leaf(w.clone())).collect();
        let mut h = tape.leaf(inputs.features.clone());
        let last = weights.len() - 1;
        let mut logits = h;
        for (l, &w) in weights.iter().enumerate() {
            if l == last {
                logits = gcn_layer(tape, adjacency, h, w, Activation::None)?;
            } else {
                h = gcn_layer(tape, adjacency, h, w, Activation::Relu)?;
            }
        }
        let probabilities = tape.softmax_rows(logits);
        Ok(ForwardVars {
            params: ParamVars {
                fusion_raw,
                s1,
                s2,
                raw_threshold,
                weights,
            },
            fusion,
            refined,
            selection,
            adjacency,
            logits,
            probabilities,
        })
    }

    /// Gradients in [`ModelState::parameters`] order. Parameters that did not
    /// take part in the pass (θ with selection off) get zeros.
    pub fn collect_gradients(&self, vars: &ForwardVars, grads: &Gradients) -> Vec<Matrix> {
        let p = &vars.params;
        let mut out = vec![grads.get(p.fusion_raw).clone()];
        if let (Some(s1), Some(s2)) = (p.s1, p.s2) {
            out.push(grads.get(s1).clone());
            out.push(grads.get(s2).clone());
        }
        out.push(match p.raw_threshold {
            Some(t) => grads.get(t).clone(),
            None => Matrix::scalar(0.0),
        });
        out.extend(p.weights.iter().map(|&w| grads.get(w).clone()));
        out
    }

    /// Adam update with all parameter gradients; non-finite gradients abort
    /// before anything is modified.
    pub fn adam_step(&mut self, grads: &[Matrix], lr: f64) -> Result<()> {
        let names = self.parameters();
        if grads.len() != names.len() {
            return Err(Error::Param(format!("expected {} gradients, got {}", names.len(), grads.len())));
        }
        for ((name, _), g) in names.iter().zip(grads) {
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(name.clone()));
            }
        }
        let mut threshold = Matrix::scalar(self.raw_threshold);
        {
            let mut params: Vec<&mut Matrix> = vec![&mut self.fusion.raw];
            if let Some(g) = &mut self.glm {
                params.push(&mut g.s1);
                params.push(&mut g.s2);
            }
            params.push(&mut threshold);
            params.extend(self.weights.iter_mut());
            self.optimizer.update(&mut params, grads, lr)?;
        }
        self.raw_threshold = threshold.item();
        Ok(())
    }

    /// Class probabilities for every node.
    pub fn predict(&self, inputs: &ModelInputs, config: &ModelConfig) -> Result<Matrix> {
        let mut tape = Tape::new();
        let vars = self.forward(&mut tape, inputs, config)?;
        Ok(tape.value(vars.probabilities).clone())
    }
}

/// σ(A·H·W), evaluated as A·(H·W).
pub fn gcn_layer(tape: &mut Tape, a: Var, h: Var, w: Var, activation: Activation) -> Result<Var> {
    let (m, m2) = tape.shape(a);
    if m != m2 || tape.shape(h).0 != m {
        return Err(Error::shape("gcn_layer", tape.shape(a), tape.shape(h)));
    }
    let hw = tape.matmul(h, w)?;
    let out = tape.matmul(a, hw)?;
    Ok(match activation {
        Activation::Relu => tape.relu(out),
        Activation::SoftmaxRows => tape.softmax_rows(out),
        Activation::None => out,
    })
}

/// −Σ_{i∈Ω} Σ_j Y_ij ln(max(Z_ij, ε)).
pub fn masked_cross_entropy(tape: &mut Tape, probabilities: Var, labels: &LabelSet) -> Result<Var> {
    if labels.labeled.is_empty() {
        return Err(Error::Param("labeled set must not be empty".into()));
    }
    let clamped = tape.max_const(probabilities, LOG_EPS);
    let logs = tape.ln(clamped)?;
    let total = tape.masked_sum(logs, labels.targets.clone())?;
    Ok(tape.scale(total, -1.0))
}

/// Fraction of `mask` whose row argmax (lowest class on ties) equals `truth`.
pub fn evaluate(probabilities: &Matrix, truth: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::Param("evaluation mask must not be empty".into()));
    }
    let correct = mask
        .iter()
        .filter(|&&i| probabilities.row_argmax(i) == truth[i])
        .count();
    Ok(correct as f64 / mask.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

/// Read-only view of one training iteration, handed to observers before the
/// parameter update.
pub struct IterationView<'a> {
    pub iter: usize,
    pub tape: &'a Tape,
    pub vars: &'a ForwardVars,
    pub loss: f64,
}

/// Full-batch training for `config.epochs` iterations.
pub fn train(
    model: &mut ModelState,
    inputs: &ModelInputs,
    labels: &LabelSet,
    truth: &[usize],
    config: &ModelConfig,
) -> Result<Vec<HistoryRow>> {
    train_with_observer(model, inputs, labels, truth, config, |_| Ok(()))
}

/// [`train`] with a callback run at every iteration.
pub fn train_with_observer<F>(
    model: &mut ModelState,
    inputs: &ModelInputs,
    labels: &LabelSet,
    truth: &[usize],
    config: &ModelConfig,
    mut observer: F,
) -> Result<Vec<HistoryRow>>
where
    F: FnMut(&IterationView<'_>) -> Result<()>,
{
    config.validate()?;
    if truth.len() != inputs.nodes() {
        return Err(Error::Param(format!("{} labels for {} nodes", truth.len(), inputs.nodes())));
    }
    let test_mask = labels.unlabeled();
    let mut history = Vec::with_capacity(config.epochs);
    for iter in 0..config.epochs {
        let mut tape = Tape::new();
        let vars = model.forward(&mut tape, inputs, config)?;
        let loss_var = masked_cross_entropy(&mut tape, vars.probabilities, labels)?;
        let loss = tape.value(loss_var).item();
        if !loss.is_finite() {
            return Err(Error::Domain(format!("loss is not finite at iteration {iter}")));
        }
        observer(&IterationView {
            iter,
            tape: &tape,
            vars: &vars,
            loss,
        })?;
        let z = tape.value(vars.probabilities);
        let train_acc = evaluate(z, truth, &labels.labeled)?;
        let test_acc = if test_mask.is_empty() {
            f64::NAN
        } else {
            evaluate(z, truth, &test_mask)?
        };
        history.push(HistoryRow {
            iter,
            loss,
            train_acc,
            test_acc,
        });
        let grads = tape.backward(loss_var)?;
        let grads = model.collect_gradients(&vars, &grads);
        model.adam_step(&grads, config.lr)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layer_passes_features() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::identity(3));
        let h0 = Matrix::from_fn(3, 3, |i, j| i as f64 - 2.0 * j as f64);
        let h = t.leaf(h0.clone());
        let w = t.leaf(Matrix::identity(3));
        let out = gcn_layer(&mut t, a, h, w, Activation::None).unwrap();
        assert_eq!(t.value(out), &h0);
    }

    #[test]
    fn zero_features_give_zero_relu_output() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::filled(3, 3, 0.3));
        let h = t.leaf(Matrix::zeros(3, 2));
        let w = t.leaf(Matrix::ones(2, 4));
        let out = gcn_layer(&mut t, a, h, w, Activation::Relu).unwrap();
        assert_eq!(t.value(out), &Matrix::zeros(3, 4));
    }

    #[test]
    fn layer_shape_mismatch() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::identity(3));
        let h = t.leaf(Matrix::zeros(2, 2));
        let w = t.leaf(Matrix::zeros(2, 2));
        assert!(matches!(gcn_layer(&mut t, a, h, w, Activation::None), Err(Error::Shape { .. })));
    }

    #[test]
    fn perfect_prediction_has_near_zero_loss() {
        let labels = LabelSet::new(&[0, 1, 1], 2, vec![0, 1, 2]).unwrap();
        let mut t = Tape::new();
        let z = t.leaf(labels.targets.clone());
        let l = masked_cross_entropy(&mut t, z, &labels).unwrap();
        assert!(t.value(l).item() >= 0.0 && t.value(l).item() <= 3.0 * 1e-12);
    }

    #[test]
    fn uniform_prediction_loss_is_ln_c() {
        let labels = LabelSet::new(&[0, 2, 1, 0], 3, vec![0, 1, 3]).unwrap();
        let mut t = Tape::new();
        let z = t.leaf(Matrix::filled(4, 3, 1.0 / 3.0));
        let l = masked_cross_entropy(&mut t, z, &labels).unwrap();
        assert!((t.value(l).item() - 3.0 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn empty_label_set_rejected() {
        assert!(LabelSet::new(&[0, 1], 2, vec![]).is_err());
    }

    #[test]
    fn accuracy_extremes_and_empty_mask() {
        let z = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(evaluate(&z, &[0, 1], &[0, 1]).unwrap(), 1.0);
        assert_eq!(evaluate(&z, &[1, 0], &[0, 1]).unwrap(), 0.0);
        assert!(evaluate(&z, &[0, 1], &[]).is_err());
    }

    #[test]
    fn argmax_ties_go_to_lowest_class() {
        let z = Matrix::from_rows(&[vec![0.5, 0.5]]);
        assert_eq!(evaluate(&z, &[0], &[0]).unwrap(), 1.0);
    }

    #[test]
    fn zero_gradient_adam_step_is_noop() {
        let mut adam = AdamState::new(&[(2, 2)]);
        let mut p = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]);
        let before = p.clone();
        adam.update(&mut [&mut p], &[Matrix::zeros(2, 2)], 0.1).unwrap();
        assert_eq!(p, before);
        assert_eq!(adam.step(), 1);
    }

    #[test]
    fn first_adam_step_moves_by_lr() {
        for g in [1e-3, 0.7, -25.0] {
            let mut adam = AdamState::new(&[(1, 1)]);
            let mut p = Matrix::scalar(0.0);
            adam.update(&mut [&mut p], &[Matrix::scalar(g)], 0.1).unwrap();
            assert!((p.item().abs() - 0.1).abs() < 1e-4, "g = {g}: {}", p.item());
            assert_eq!(p.item().signum(), -g.signum());
        }
    }

    #[test]
    fn adam_three_step_scalar_trajectory() {
        // hand recurrence with constant gradient 1
        let mut expected = 0.0;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=3 {
            m = 0.9 * m + 0.1;
            v = 0.999 * v + 0.001;
            let mhat = m / (1.0 - 0.9f64.powi(t));
            let vhat = v / (1.0 - 0.999f64.powi(t));
            expected -= 0.1 * mhat / (vhat.sqrt() + 1e-8);
        }
        let mut adam = AdamState::new(&[(1, 1)]);
        let mut p = Matrix::scalar(0.0);
        for _ in 0..3 {
            adam.update(&mut [&mut p], &[Matrix::scalar(1.0)], 0.1).unwrap();
        }
        assert!((p.item() - expected).abs() < 1e-15);
        assert!((p.item() + 0.3).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let cfg = ModelConfig {
            hidden_dim: 2,
            ..ModelConfig::default()
        };
        let mut model = ModelState::init(&cfg, 3, 2, 1, 2, 0).unwrap();
        let mut grads: Vec<Matrix> = model.parameters().iter().map(|(_, p)| Matrix::zeros(p.rows(), p.cols())).collect();
        grads[1].set(0, 0, f64::NAN);
        match model.adam_step(&grads, 0.1) {
            Err(Error::NonFiniteGradient(name)) => assert_eq!(name, "glm.s1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = ModelConfig {
            epochs: 0,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
