use std::fs;

use mgcn_core::data::{load_dataset, make_split, make_synthetic, save_dataset, MultiViewDataset, SplitSpec};
use mgcn_core::experiment::prepare_graphs;
use mgcn_core::graph::{build_knn_graph, nearest_neighbors, FeatureMatrix, Metric};
use mgcn_core::Error;

#[test]
fn dataset_round_trips_through_csv() {
    let data = make_synthetic(30, 2, 3, 0.4, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&data, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.views, data.views);
    assert_eq!(back.labels, data.labels);
    assert_eq!(back.classes, 3);
}

fn write_minimal(dir: &std::path::Path, view: &str, labels: &str) {
    fs::write(dir.join("view_1.csv"), view).unwrap();
    fs::write(dir.join("labels.csv"), labels).unwrap();
}

#[test]
fn non_numeric_field_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write_minimal(dir.path(), "1,2\n3,x\n", "0\n1\n");
    match load_dataset(dir.path()) {
        Err(Error::Load { file, line, .. }) => {
            assert!(file.ends_with("view_1.csv"));
            assert_eq!(line, 2);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn ragged_rows_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_minimal(dir.path(), "1,2\n3\n", "0\n1\n");
    assert!(matches!(load_dataset(dir.path()), Err(Error::Load { line: 2, .. })));
}

#[test]
fn sample_count_mismatch_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    write_minimal(dir.path(), "1,2\n3,4\n", "0\n1\n1\n");
    assert!(matches!(load_dataset(dir.path()), Err(Error::Format { .. })));
}

#[test]
fn missing_view_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("labels.csv"), "0\n").unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Io { .. })));
}

#[test]
fn proportional_split_is_within_one_per_class() {
    let data = make_synthetic(200, 1, 4, 0.5, 3).unwrap();
    for seed in 0..5 {
        let split = make_split(&data, &SplitSpec { ratio: 0.1, seed, stratified: true }).unwrap();
        assert_eq!(split.labeled.len(), 20);
        for class in 0..4 {
            let n = split.labeled.iter().filter(|&&i| data.labels[i] == class).count();
            assert!((4..=6).contains(&n), "class {class} got {n}");
        }
        let mut sorted = split.labeled.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), split.labeled.len());
    }
}

#[test]
fn bbc_sized_split_has_expected_size() {
    // five unbalanced classes totalling 544 samples
    let counts = [124, 87, 104, 118, 111];
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
    let view = mgcn_core::Matrix::from_fn(544, 2, |i, j| (i * 7 + j) as f64);
    let data = MultiViewDataset::new("bbc-shape", vec![FeatureMatrix::new(view, 0)], labels, 5).unwrap();
    let split = make_split(&data, &SplitSpec { ratio: 0.1, seed: 0, stratified: true }).unwrap();
    assert!(split.labeled.len() == 54 || split.labeled.len() == 55);
}

fn intra_class_fraction(data: &MultiViewDataset, view: usize, k: usize) -> f64 {
    let x = data.views[view].standardized();
    let g = build_knn_graph(&x, k, Metric::Euclidean).unwrap();
    let a = g.adjacency();
    let (mut intra, mut total) = (0usize, 0usize);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if a.get(i, j) != 0.0 {
                total += 1;
                intra += usize::from(data.labels[i] == data.labels[j]);
            }
        }
    }
    intra as f64 / total as f64
}

#[test]
fn synthetic_graphs_are_mostly_intra_class() {
    let data = make_synthetic(200, 3, 4, 0.5, 0).unwrap();
    for v in 0..3 {
        let f = intra_class_fraction(&data, v, 10);
        assert!(f >= 0.7, "view {v}: {f}");
    }
}

#[test]
fn noiseless_synthetic_views_are_separable() {
    let data = make_synthetic(40, 2, 4, 0.0, 6).unwrap();
    for v in &data.views {
        let nn = nearest_neighbors(&v.values, 1, Metric::Euclidean).unwrap();
        for (i, n) in nn.iter().enumerate() {
            assert_eq!(data.labels[n[0]], data.labels[i]);
        }
    }
}

#[test]
fn prepared_graphs_have_expected_degrees() {
    let data = make_synthetic(200, 2, 4, 0.5, 2).unwrap();
    for v in &data.views {
        let g = build_knn_graph(&v.standardized(), 10, Metric::Euclidean).unwrap();
        for i in 0..200 {
            let nnz = g.adjacency().row_slice(i).iter().filter(|&&x| x != 0.0).count();
            assert!((10..=199).contains(&nnz));
        }
    }
    for g in prepare_graphs(&data, 10, Metric::Euclidean).unwrap() {
        assert!(g.is_renormalized());
        assert!(g.adjacency().is_symmetric(1e-12));
        for i in 0..200 {
            assert!(g.adjacency().get(i, i) > 0.0);
        }
    }
}
