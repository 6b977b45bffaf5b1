use std::path::Path;

use sbnn::data::{load_csv_with, Schema};
use sbnn::{load_csv, split, Scaler};

fn insurance() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/insurance.csv")
}

#[test]
fn loads_canonical_file() {
    let ds = load_csv(&insurance()).unwrap();
    assert_eq!(ds.n, 1338);
    assert_eq!(ds.x.shape(), (1338, 6));
    assert_eq!(ds.x.row(0), &[19.0, 0.0, 27.9, 0.0, 1.0, 3.0]);
    assert_eq!(ds.y.get(0, 0), 16884.924);
}

#[test]
fn one_hot_region_adds_columns() {
    let ds = load_csv_with(&insurance(), &Schema::Insurance { one_hot_region: true }).unwrap();
    assert_eq!(ds.x.cols(), 9);
    for r in 0..ds.n {
        let hot: f64 = ds.x.row(r)[5..].iter().sum();
        assert_eq!(hot, 1.0);
    }
}

#[test]
fn scaler_sees_only_training_rows() {
    let ds = load_csv(&insurance()).unwrap();
    let s = split(ds.n, 3).unwrap();
    let scaler = Scaler::fit(&ds, &s.train()).unwrap();
    assert!(scaler.fitted_on_rows(&s.train()));
    assert!(!scaler.fitted_on_rows(&s.test));
    let train = scaler.apply(&ds).samples(&s.train());
    let n = train.len() as f64;
    let mean: f64 = train.y.as_slice().iter().sum::<f64>() / n;
    let var: f64 = train.y.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
}
