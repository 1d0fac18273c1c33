//! Tabular classification datasets, 3:1:1 partitioning and mini-batch sampling.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::net::{LabeledBatch, NetError};

const IRIS_CSV: &str = include_str!("../data/iris.csv");

/// Smallest dataset that still gives every partition one row.
pub const MIN_ROWS: usize = 5;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {row}, column {column}: '{value}' is not a number")]
    NonNumeric { row: usize, column: usize, value: String },
    #[error("dataset has a single class")]
    SingleClass,
    #[error("dataset has {0} rows, need at least {MIN_ROWS}")]
    TooSmall(usize),
    #[error("unknown builtin dataset '{0}'")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Shape(#[from] NetError),
}

/// Features and class labels for `M` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    features: Vec<f64>,
    labels: Vec<usize>,
    feature_dim: usize,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        labels: Vec<usize>,
        feature_dim: usize,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let rows = labels.len();
        if feature_dim == 0 || features.len() != rows * feature_dim {
            return Err(DataError::Malformed { row: 0, message: "feature matrix does not match label count".into() });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(DataError::Malformed { row: 0, message: format!("label {bad} outside class list") });
        }
        if class_names.len() < 2 {
            return Err(DataError::SingleClass);
        }
        if rows < MIN_ROWS {
            return Err(DataError::TooSmall(rows));
        }
        Ok(Self { name: name.into(), features, labels, feature_dim, class_names })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    /// Rows `indices` with one-hot targets.
    pub fn batch(&self, indices: &[usize]) -> Result<LabeledBatch, DataError> {
        let mut inputs = Vec::with_capacity(indices.len() * self.feature_dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Ok(LabeledBatch::from_labels(inputs, &labels, self.feature_dim, self.class_count())?)
    }

    /// Reads a CSV whose last column is the class label.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::parse_csv(name, &text)
    }

    /// Parses CSV text. A first row whose feature columns are not all numeric
    /// is treated as a header. Labels map to `0..K` in order of first appearance.
    pub fn parse_csv(name: impl Into<String>, text: &str) -> Result<Self, DataError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut class_index: HashMap<String, usize> = HashMap::new();
        let mut class_names = Vec::new();
        let mut width: Option<usize> = None;

        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| DataError::Malformed { row, message: e.to_string() })?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() < 2 {
                return Err(DataError::Malformed { row, message: "need at least one feature and a label".into() });
            }
            let n_features = record.len() - 1;
            if i == 0 && record.iter().take(n_features).any(|f| f.parse::<f64>().is_err()) {
                width = Some(n_features);
                continue;
            }
            match width {
                Some(w) if w != n_features => {
                    return Err(DataError::Malformed {
                        row,
                        message: format!("expected {} columns, found {}", w + 1, record.len()),
                    })
                }
                _ => width = Some(n_features),
            }
            for (column, field) in record.iter().take(n_features).enumerate() {
                let v: f64 = field.parse().map_err(|_| DataError::NonNumeric {
                    row,
                    column: column + 1,
                    value: field.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(DataError::NonNumeric { row, column: column + 1, value: field.to_string() });
                }
                features.push(v);
            }
            let label = &record[n_features];
            let next = class_names.len();
            let idx = *class_index.entry(label.to_string()).or_insert_with(|| {
                class_names.push(label.to_string());
                next
            });
            labels.push(idx);
        }
        let width = width.ok_or(DataError::TooSmall(0))?;
        Self::new(name, features, labels, width, class_names)
    }

    /// The bundled 150 x 4 x 3 iris corpus.
    pub fn iris() -> Self {
        Self::parse_csv("iris", IRIS_CSV).expect("bundled iris csv parses")
    }

    /// Three well separated Gaussian blobs in four dimensions.
    pub fn blobs(rows: usize, seed: u64) -> Result<Self, DataError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).expect("valid sd");
        let centers = [[0.0, 0.0, 0.0, 0.0], [3.0, 3.0, 0.0, 0.0], [0.0, 3.0, 3.0, 3.0]];
        let mut features = Vec::with_capacity(rows * 4);
        let mut labels = Vec::with_capacity(rows);
        for i in 0..rows {
            let c = i % centers.len();
            features.extend(centers[c].iter().map(|m| m + noise.sample(&mut rng)));
            labels.push(c);
        }
        let names = (0..centers.len()).map(|c| format!("blob{c}")).collect();
        Self::new("blobs", features, labels, 4, names)
    }

    /// Two features; the class is whether a noisy quadratic score exceeds its threshold.
    pub fn noisy_quadratic(rows: usize, seed: u64) -> Result<Self, DataError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.3).expect("valid sd");
        let mut features = Vec::with_capacity(rows * 2);
        let mut labels = Vec::with_capacity(rows);
        for _ in 0..rows {
            let x: f64 = rng.gen_range(-2.0..2.0);
            let y: f64 = rng.gen_range(-2.0..2.0);
            let score = x * x + y * y + noise.sample(&mut rng);
            features.extend([x, y]);
            labels.push(usize::from(score > 2.0));
        }
        Self::new("noisy-quadratic", features, labels, 2, vec!["inside".into(), "outside".into()])
    }

    /// Resolves `iris`, `blobs`, `noisy-quadratic`, or a CSV path.
    pub fn builtin_or_path(name: &str, seed: u64) -> Result<Self, DataError> {
        match name {
            "iris" => Ok(Self::iris()),
            "blobs" => Self::blobs(150, seed),
            "noisy-quadratic" => Self::noisy_quadratic(150, seed),
            other if Path::new(other).exists() => Self::load_csv(other),
            other => Err(DataError::UnknownBuiltin(other.to_string())),
        }
    }
}

/// Disjoint train / validation / test row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

/// Shuffles `0..rows` and partitions 60/20/20. Validation and test get
/// `floor(rows / 5)` rows each; the remainder goes to training.
pub fn split_3_1_1(rows: usize, seed: u64) -> Result<Split, DataError> {
    if rows < MIN_ROWS {
        return Err(DataError::TooSmall(rows));
    }
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held_out = rows / 5;
    let train_len = rows - 2 * held_out;
    let test = order.split_off(train_len + held_out);
    let validation = order.split_off(train_len);
    Ok(Split { train: order, validation, test })
}

/// Row indices drawn for one loss or gradient evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBatch(pub Vec<usize>);

/// Draws fixed-size batches without replacement from one partition.
/// Successive draws are independent.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    partition: Vec<usize>,
    batch_size: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    /// `batch_size` is capped at the partition size.
    pub fn new(partition: Vec<usize>, batch_size: usize, seed: u64) -> Self {
        assert!(!partition.is_empty(), "sampler partition must be nonempty");
        let batch_size = batch_size.clamp(1, partition.len());
        Self { partition, batch_size, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn sample(&mut self) -> MiniBatch {
        let picks = index::sample(&mut self.rng, self.partition.len(), self.batch_size);
        MiniBatch(picks.into_iter().map(|i| self.partition[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_shape_and_label_order() {
        let text = "1,2,a\n3,4,b\n5,6,a\n7,8,b\n9,1,a\n2,3,b\n";
        let ds = Dataset::parse_csv("t", text).unwrap();
        assert_eq!((ds.len(), ds.feature_dim(), ds.class_count()), (6, 2, 2));
        assert_eq!(&ds.labels()[..3], &[0, 1, 0]);
    }

    #[test]
    fn header_is_detected() {
        let text = "x,y,label\n1,2,a\n3,4,b\n5,6,a\n7,8,b\n9,1,a\n";
        let ds = Dataset::parse_csv("t", text).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn bad_rows_report_row_numbers() {
        let err = Dataset::parse_csv("t", "1,2,a\n3,x,b\n").unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { row: 2, column: 2, .. }), "{err}");
        let err = Dataset::parse_csv("t", "1,2,a\n3,b\n").unwrap_err();
        assert!(matches!(err, DataError::Malformed { row: 2, .. }), "{err}");
        let err = Dataset::parse_csv("t", "1,a\n2,a\n3,a\n4,a\n5,a\n").unwrap_err();
        assert!(matches!(err, DataError::SingleClass));
    }

    #[test]
    fn iris_shape() {
        let ds = Dataset::iris();
        assert_eq!((ds.len(), ds.feature_dim(), ds.class_count()), (150, 4, 3));
    }

    #[test]
    fn split_sizes() {
        assert_eq!(split_3_1_1(150, 0).unwrap().sizes(), (90, 30, 30));
        assert_eq!(split_3_1_1(5, 0).unwrap().sizes(), (3, 1, 1));
        assert_eq!(split_3_1_1(7, 0).unwrap().sizes(), (5, 1, 1));
        assert!(matches!(split_3_1_1(4, 0), Err(DataError::TooSmall(4))));
        assert_eq!(split_3_1_1(150, 9).unwrap(), split_3_1_1(150, 9).unwrap());
    }

    #[test]
    fn exhausting_batch_is_a_permutation() {
        let part: Vec<usize> = (20..30).collect();
        let mut s = BatchSampler::new(part.clone(), 10, 3);
        let mut b = s.sample().0;
        b.sort_unstable();
        assert_eq!(b, part);
    }

    #[test]
    fn sampler_is_deterministic() {
        let mut a = BatchSampler::new((0..90).collect(), 10, 5);
        let mut b = BatchSampler::new((0..90).collect(), 10, 5);
        for _ in 0..20 {
            assert_eq!(a.sample(), b.sample());
        }
    }

    #[test]
    fn sampling_frequencies_are_uniform() {
        let draws = 10_000;
        let mut s = BatchSampler::new((0..90).collect(), 10, 17);
        let mut counts = [0usize; 90];
        for _ in 0..draws {
            for i in s.sample().0 {
                counts[i] += 1;
            }
        }
        let p = 10.0 / 90.0;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!((c as f64 - mean).abs() <= 3.0 * sd + 1.0, "index {i}: {c} vs {mean}");
        }
    }

    #[test]
    fn builtins_resolve() {
        assert_eq!(Dataset::builtin_or_path("blobs", 1).unwrap().class_count(), 3);
        assert_eq!(Dataset::builtin_or_path("noisy-quadratic", 1).unwrap().feature_dim(), 2);
        assert!(matches!(Dataset::builtin_or_path("nope", 1), Err(DataError::UnknownBuiltin(_))));
    }

    proptest! {
        #[test]
        fn split_is_a_partition(rows in 5usize..400, seed in any::<u64>()) {
            let s = split_3_1_1(rows, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..rows).collect::<Vec<_>>());
            prop_assert!(s.train.len() >= 3 * s.validation.len());
        }

        #[test]
        fn batches_stay_in_partition(start in 0usize..50, len in 1usize..40, bs in 1usize..60, seed in any::<u64>()) {
            let part: Vec<usize> = (start..start + len).collect();
            let mut s = BatchSampler::new(part, bs, seed);
            let mut b = s.sample().0;
            prop_assert_eq!(b.len(), bs.min(len));
            prop_assert!(b.iter().all(|i| (start..start + len).contains(i)));
            b.sort_unstable();
            b.dedup();
            prop_assert_eq!(b.len(), bs.min(len));
        }
    }
}
