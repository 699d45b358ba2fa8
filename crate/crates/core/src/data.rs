//! Multi-view datasets: CSV directory layout, label splits, synthetic data.
//!
//! A dataset directory holds `view_1.csv` … `view_V.csv` (headerless, one
//! sample per row) and `labels.csv` (one integer class per row).

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;
use crate::matrix::Matrix;
use crate::model::LabelSet;

/// Latent dimension of the synthetic cluster centers.
pub const SYNTHETIC_LATENT_DIM: usize = 8;
/// Feature dimension of every synthetic view.
pub const SYNTHETIC_VIEW_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    pub name: String,
    pub views: Vec<FeatureMatrix>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl MultiViewDataset {
    pub fn new(name: impl Into<String>, views: Vec<FeatureMatrix>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Param("dataset needs at least one view".into()));
        }
        let m = labels.len();
        for v in &views {
            if v.samples() != m {
                return Err(Error::Param(format!(
                    "view {} has {} samples, labels have {m}",
                    v.view + 1,
                    v.samples()
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::Param(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(MultiViewDataset {
            name: name.into(),
            views,
            labels,
            classes,
        })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Column-standardized views concatenated side by side.
    pub fn concatenated_features(&self) -> Result<Matrix> {
        let std: Vec<Matrix> = self.views.iter().map(|v| v.standardized().values).collect();
        Matrix::hstack(&std.iter().collect::<Vec<_>>())
    }
}

fn view_path(dir: &Path, v: usize) -> PathBuf {
    dir.join(format!("view_{}.csv", v + 1))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn load_error(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Load {
        file: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn read_matrix(path: &Path) -> Result<Matrix> {
    let mut rdr = reader(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            load_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(rows as u64 + 1, |p| p.line());
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(load_error(path, line, format!("expected {c} fields, found {}", rec.len())))
            }
            _ => {}
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| load_error(path, line, format!("non-numeric value `{field}`")))?;
            if !v.is_finite() {
                return Err(load_error(path, line, format!("non-finite value `{field}`")));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(load_error(path, 0, "file is empty"));
    }
    Matrix::from_vec(rows, cols.unwrap_or(0), data)
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut rdr = reader(path)?;
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| load_error(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(labels.len() as u64 + 1, |p| p.line());
        if rec.len() != 1 {
            return Err(load_error(path, line, format!("expected 1 field, found {}", rec.len())));
        }
        let y: usize = rec[0]
            .parse()
            .map_err(|_| load_error(path, line, format!("invalid label `{}`", &rec[0])))?;
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(load_error(path, 0, "file is empty"));
    }
    Ok(labels)
}

/// Loads a dataset directory. The class count is one past the largest label
/// unless `classes` is given, in which case labels must be below it.
pub fn load_dataset_with_classes(dir: &Path, classes: Option<usize>) -> Result<MultiViewDataset> {
    let labels_path = dir.join("labels.csv");
    let labels = read_labels(&labels_path)?;
    let mut views = Vec::new();
    while view_path(dir, views.len()).exists() {
        let path = view_path(dir, views.len());
        let values = read_matrix(&path)?;
        if values.rows() != labels.len() {
            return Err(Error::Format {
                file: path,
                msg: format!(
                    "inconsistent sample count: {} rows, labels.csv has {}",
                    values.rows(),
                    labels.len()
                ),
            });
        }
        let v = views.len();
        views.push(FeatureMatrix::new(values, v));
    }
    if views.is_empty() {
        return Err(Error::io(view_path(dir, 0), std::io::ErrorKind::NotFound.into()));
    }
    let max_label = labels.iter().copied().max().unwrap_or(0);
    let classes = match classes {
        Some(c) => {
            if let Some(line) = labels.iter().position(|&y| y >= c) {
                return Err(load_error(
                    &labels_path,
                    line as u64 + 1,
                    format!("label {} out of range for {c} classes", labels[line]),
                ));
            }
            c
        }
        None => max_label + 1,
    };
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    MultiViewDataset::new(name, views, labels, classes)
}

/// Loads a dataset directory, see [`load_dataset_with_classes`]. A
/// `classes.txt` file, when present, fixes the class count.
pub fn load_dataset(dir: &Path) -> Result<MultiViewDataset> {
    let classes_path = dir.join("classes.txt");
    let classes = if classes_path.exists() {
        let text = fs::read_to_string(&classes_path).map_err(|e| Error::io(&classes_path, e))?;
        Some(
            text.trim()
                .parse()
                .map_err(|_| load_error(&classes_path, 1, format!("invalid class count `{}`", text.trim())))?,
        )
    } else {
        None
    };
    load_dataset_with_classes(dir, classes)
}

/// Writes a dataset in the directory layout read by [`load_dataset`]. Values
/// are printed with 17 significant digits.
pub fn save_dataset(data: &MultiViewDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for v in &data.views {
        write_matrix_csv(&view_path(dir, v.view), &v.values)?;
    }
    let labels: String = data.labels.iter().map(|y| format!("{y}\n")).collect();
    let path = dir.join("labels.csv");
    fs::write(&path, labels).map_err(|e| Error::io(&path, e))?;
    let path = dir.join("classes.txt");
    fs::write(&path, format!("{}\n", data.classes)).map_err(|e| Error::io(&path, e))
}

/// Formats a float with 17 significant digits (exact round trip).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::with_capacity(m.len() * 24);
    for i in 0..m.rows() {
        let row: Vec<String> = m.row_slice(i).iter().map(|&x| format_f64(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    read_matrix(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

/// Labeled indices with the spec that produced them (split export format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub labeled: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
    pub stratified: bool,
}

impl Split {
    pub fn label_set(&self, data: &MultiViewDataset) -> Result<LabelSet> {
        LabelSet::new(&data.labels, data.classes, self.labeled.clone())
    }
}

/// Samples the labeled set Ω. Stratified splits apportion round(ratio·m)
/// labels across classes by largest remainder, with at least one per class.
pub fn make_split(data: &MultiViewDataset, spec: &SplitSpec) -> Result<Split> {
    let m = data.samples();
    if !(spec.ratio > 0.0 && spec.ratio < 1.0) {
        return Err(Error::Param(format!("label ratio must lie in (0, 1), got {}", spec.ratio)));
    }
    let total = ((spec.ratio * m as f64).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labeled = if spec.stratified {
        if spec.ratio * (m as f64) < data.classes as f64 {
            return Err(Error::Param(format!(
                "ratio {} labels {:.1} samples, fewer than the {} classes",
                spec.ratio,
                spec.ratio * m as f64,
                data.classes
            )));
        }
        let counts = data.class_counts();
        let quotas = apportion(&counts, total);
        let mut out = Vec::with_capacity(total);
        for (class, &quota) in quotas.iter().enumerate() {
            let mut members: Vec<usize> = (0..m).filter(|&i| data.labels[i] == class).collect();
            members.shuffle(&mut rng);
            out.extend(members.into_iter().take(quota));
        }
        out
    } else {
        let mut all: Vec<usize> = (0..m).collect();
        all.shuffle(&mut rng);
        all.truncate(total);
        all
    };
    labeled.sort_unstable();
    Ok(Split {
        labeled,
        seed: spec.seed,
        ratio: spec.ratio,
        stratified: spec.stratified,
    })
}

fn apportion(counts: &[usize], total: usize) -> Vec<usize> {
    let m: usize = counts.iter().sum();
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * total as f64 / m as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = total.saturating_sub(quotas.iter().sum());
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in &order {
        if left == 0 {
            break;
        }
        if quotas[c] < counts[c] {
            quotas[c] += 1;
            left -= 1;
        }
    }
    for (q, &c) in quotas.iter_mut().zip(counts) {
        if *q == 0 && c > 0 {
            *q = 1;
        }
    }
    quotas
}

/// Gaussian-cluster multi-view data.
///
/// Class centers are drawn in a latent space; sample i belongs to class
/// i mod c and sits at its class center. Every view applies its own random
/// linear projection to the latent point and adds independent Gaussian noise
/// with standard deviation `noise`.
pub fn make_synthetic(m: usize, views: usize, classes: usize, noise: f64, seed: u64) -> Result<MultiViewDataset> {
    if classes == 0 || views == 0 || m < 2 * classes {
        return Err(Error::Param(format!(
            "need views >= 1, classes >= 1 and m >= 2·classes (m = {m}, V = {views}, c = {classes})"
        )));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::Param(format!("noise must be finite and >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent = SYNTHETIC_LATENT_DIM;
    let centers = Matrix::from_fn(classes, latent, |_, _| StandardNormal.sample(&mut rng));
    let labels: Vec<usize> = (0..m).map(|i| i % classes).collect();
    let proj_dist = Normal::new(0.0, 1.0 / (latent as f64).sqrt()).expect("valid normal");
    let mut out = Vec::with_capacity(views);
    for v in 0..views {
        let projection = Matrix::from_fn(latent, SYNTHETIC_VIEW_DIM, |_, _| proj_dist.sample(&mut rng));
        let projected = centers.matmul(&projection)?;
        let values = Matrix::from_fn(m, SYNTHETIC_VIEW_DIM, |i, j| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            projected.get(labels[i], j) + noise * eps
        });
        out.push(FeatureMatrix::new(values, v));
    }
    MultiViewDataset::new(format!("synthetic-m{m}-v{views}-c{classes}-s{seed}"), out, labels, classes)
}
