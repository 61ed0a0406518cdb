//! Linear max-margin classification with stratified cross-validation.
//!
//! The trainer is a from-scratch primal solver for the L2-regularized hinge
//! loss (the linear support-vector objective), one binary problem per class
//! in a one-vs-rest arrangement. Each problem runs seeded stochastic
//! subgradient descent with the 1/(λt) step schedule, a ball projection, and
//! iterate averaging, so training is deterministic to the bit for a given
//! seed and fast enough to cross-validate a full study dataset in well under
//! a second.
//!
//! Cross-validation is stratified: each class is shuffled with its own
//! label-keyed stream and dealt across folds so fold sizes per class differ
//! by at most one. The report carries per-fold accuracies, their mean and
//! sample standard deviation, the pooled confusion matrix, and a per-cell
//! accuracy map when rows carry grid-cell provenance.
//!
//! Keying every derived RNG stream by class *label* (not index) makes the
//! whole pipeline equivariant under class reordering: permuting the class
//! list permutes confusion rows and columns and changes nothing else.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::{standardize, FeatureVector, Scaler};
use crate::seed::{fnv1a, mix2, salt};
use crate::{Error, Result};

/// Default hinge-loss regularization strength.
pub const DEFAULT_LAMBDA: f64 = 1e-4;
/// Default number of training passes over the data.
pub const DEFAULT_EPOCHS: u32 = 200;
/// Default fold count for cross-validation.
pub const DEFAULT_FOLDS: usize = 10;

/// A labeled feature dataset with an explicit class order.
///
/// Invariants: at least one row, all rows share one dimensionality, every
/// row is labeled, and every label appears in `classes` (which has no
/// duplicates).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<FeatureVector>,
    classes: Vec<String>,
}

impl Dataset {
    /// Build a dataset, deriving the class order as the sorted set of
    /// labels present.
    pub fn new(rows: Vec<FeatureVector>) -> Result<Dataset> {
        let mut classes: Vec<String> = Vec::new();
        for row in &rows {
            match &row.label {
                Some(label) if !classes.contains(label) => classes.push(label.clone()),
                Some(_) => {}
                None => {
                    return Err(Error::DegenerateDataset(
                        "unlabeled row cannot join a training dataset".into(),
                    ))
                }
            }
        }
        classes.sort();
        Dataset::with_classes(rows, classes)
    }

    /// Build a dataset with an explicit class order (e.g. read back from a
    /// file). Classes without rows are allowed; rows whose label is missing
    /// from `classes` are not.
    pub fn with_classes(rows: Vec<FeatureVector>, classes: Vec<String>) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::DegenerateDataset("dataset has no rows".into()));
        }
        for (i, class) in classes.iter().enumerate() {
            if class.is_empty() || class.chars().any(char::is_whitespace) {
                return Err(Error::DegenerateDataset(format!(
                    "class name `{class}` must be nonempty and whitespace-free"
                )));
            }
            if classes[..i].contains(class) {
                return Err(Error::DegenerateDataset(format!("duplicate class `{class}`")));
            }
        }
        let dim = rows[0].len();
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "dataset rows".into(),
                    expected: dim,
                    got: row.len(),
                });
            }
            match &row.label {
                Some(label) if classes.contains(label) => {}
                Some(label) => {
                    return Err(Error::DegenerateDataset(format!(
                        "row labeled `{label}` but class list is {classes:?}"
                    )))
                }
                None => {
                    return Err(Error::DegenerateDataset(
                        "unlabeled row cannot join a training dataset".into(),
                    ))
                }
            }
        }
        Ok(Dataset { rows, classes })
    }

    /// The rows, in insertion order.
    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    /// The class order used for tie-breaking and report layout.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Feature dimensionality.
    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    /// Row count per class, in class order.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        self.classes
            .iter()
            .map(|c| {
                let n = self.rows.iter().filter(|r| r.label.as_deref() == Some(c)).count();
                (c.clone(), n)
            })
            .collect()
    }
}

/// A trained one-vs-rest linear classifier with its input scaler.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    classes: Vec<String>,
    scaler: Scaler,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    lambda: f64,
    epochs: u32,
    seed: u64,
}

impl ClassifierModel {
    /// Rebuild a model from stored parameters (e.g. a model file),
    /// validating all dimensionalities.
    pub fn from_parts(
        classes: Vec<String>,
        scaler: Scaler,
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        lambda: f64,
        epochs: u32,
        seed: u64,
    ) -> Result<ClassifierModel> {
        if classes.len() < 2 {
            return Err(Error::DegenerateDataset(format!(
                "a classifier needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        if weights.len() != classes.len() || biases.len() != classes.len() {
            return Err(Error::DimensionMismatch {
                context: "per-class weights/biases vs class list".into(),
                expected: classes.len(),
                got: weights.len().min(biases.len()),
            });
        }
        for w in &weights {
            if w.len() != scaler.len() {
                return Err(Error::DimensionMismatch {
                    context: "weight vector vs scaler".into(),
                    expected: scaler.len(),
                    got: w.len(),
                });
            }
        }
        Ok(ClassifierModel { classes, scaler, weights, biases, lambda, epochs, seed })
    }

    /// Class labels in score order.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// The input scaler fitted at training time.
    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    /// Per-class weight vectors, in class order.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Per-class biases, in class order.
    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Training hyperparameters `(lambda, epochs, seed)`.
    pub fn hyperparameters(&self) -> (f64, u32, u64) {
        (self.lambda, self.epochs, self.seed)
    }

    /// Feature dimensionality the model accepts.
    pub fn dim(&self) -> usize {
        self.scaler.len()
    }

    /// Per-class decision scores for a raw (unscaled) feature row.
    pub fn scores(&self, values: &[f64]) -> Result<Vec<f64>> {
        let z = self.scaler.transform(values)?;
        Ok(self.weights.iter().zip(&self.biases).map(|(w, b)| dot(w, &z) + b).collect())
    }
}

/// Choose the highest-scoring class for a feature row.
///
/// Ties break toward the earliest class in the model's class order; this is
/// load-bearing for reproducible reports and documented as such.
pub fn predict(model: &ClassifierModel, row: &FeatureVector) -> Result<String> {
    let scores = model.scores(&row.values)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(model.classes[best].clone())
}

/// Train a one-vs-rest linear classifier; see [`train_with_objective`].
///
/// ```
/// use magprints::classifier::{predict, train, Dataset};
/// use magprints::features::{FeatureVector, RowMeta};
///
/// let point = |x: f64, y: f64, label: &str| FeatureVector {
///     values: vec![x, y],
///     label: Some(label.into()),
///     meta: RowMeta { session: 0, timestamp: 0.0, cell: None },
/// };
/// let data = Dataset::new(vec![
///     point(-3.0, 0.5, "left"),
///     point(-2.5, -1.0, "left"),
///     point(-3.5, 1.5, "left"),
///     point(3.0, -0.5, "right"),
///     point(2.5, 1.0, "right"),
///     point(3.5, -1.5, "right"),
/// ])?;
/// let model = train(&data, 1e-4, 200, 7)?;
/// for row in data.rows() {
///     assert_eq!(row.label.clone(), Some(predict(&model, row)?));
/// }
/// # Ok::<(), magprints::Error>(())
/// ```
pub fn train(data: &Dataset, lambda: f64, epochs: u32, seed: u64) -> Result<ClassifierModel> {
    let (model, _) = run_training(data, lambda, epochs, seed, false)?;
    Ok(model)
}

/// Train and also return the per-epoch training objective.
///
/// The objective is the summed one-vs-rest value of
/// `λ/2·‖w‖² + mean hinge loss`, evaluated on the averaged iterate after
/// each pass; its tail is non-increasing to within small tolerance, which
/// is the cheap way to see that training converged.
pub fn train_with_objective(
    data: &Dataset,
    lambda: f64,
    epochs: u32,
    seed: u64,
) -> Result<(ClassifierModel, Vec<f64>)> {
    let (model, history) = run_training(data, lambda, epochs, seed, true)?;
    Ok((model, history.expect("requested history")))
}

fn run_training(
    data: &Dataset,
    lambda: f64,
    epochs: u32,
    seed: u64,
    record_objective: bool,
) -> Result<(ClassifierModel, Option<Vec<f64>>)> {
    if data.classes.len() < 2 {
        return Err(Error::DegenerateDataset(format!(
            "training needs at least 2 classes, got {:?}",
            data.classes
        )));
    }
    for (class, count) in data.class_counts() {
        if count == 0 {
            return Err(Error::DegenerateDataset(format!("class `{class}` has no rows")));
        }
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidHyperparameter(format!("lambda {lambda} must be positive")));
    }
    if epochs == 0 {
        return Err(Error::InvalidHyperparameter("epochs must be at least 1".into()));
    }
    let (scaler, std_rows) = standardize(data.rows())?;
    let xs: Vec<&[f64]> = std_rows.iter().map(|r| r.values.as_slice()).collect();
    let mut weights = Vec::with_capacity(data.classes.len());
    let mut biases = Vec::with_capacity(data.classes.len());
    let mut history = if record_objective { Some(vec![0.0; epochs as usize]) } else { None };
    for label in &data.classes {
        let ys: Vec<f64> = data
            .rows
            .iter()
            .map(|r| if r.label.as_deref() == Some(label) { 1.0 } else { -1.0 })
            .collect();
        let class_seed = mix2(seed, salt::CLASS, fnv1a(label));
        let (w, b, class_history) = descend(&xs, &ys, lambda, epochs, class_seed, record_objective);
        weights.push(w);
        biases.push(b);
        if let (Some(total), Some(per_class)) = (&mut history, class_history) {
            for (t, c) in total.iter_mut().zip(per_class) {
                *t += c;
            }
        }
    }
    let model = ClassifierModel {
        classes: data.classes.clone(),
        scaler,
        weights,
        biases,
        lambda,
        epochs,
        seed,
    };
    Ok((model, history))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L2-regularized hinge objective at `(w, b)`.
fn objective(w: &[f64], b: f64, xs: &[&[f64]], ys: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (dot(w, w) + b * b);
    let hinge: f64 = xs.iter().zip(ys).map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0)).sum();
    reg + hinge / xs.len() as f64
}

/// Seeded primal subgradient descent on one binary hinge problem.
///
/// Step `t` scales the iterate by `(1 − 1/t)`, adds `η_t·y·x` on a margin
/// violation with `η_t = 1/(λt)`, projects onto the ball of radius `1/√λ`,
/// and accumulates the running average, which is returned as the solution.
/// The bias rides along as an always-one augmented coordinate.
fn descend(
    xs: &[&[f64]],
    ys: &[f64],
    lambda: f64,
    epochs: u32,
    seed: u64,
    record_objective: bool,
) -> (Vec<f64>, f64, Option<Vec<f64>>) {
    let n = xs.len();
    let d = xs[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut w_sum = vec![0.0; d];
    let mut b_sum = 0.0;
    let mut t: u64 = 0;
    let radius = 1.0 / lambda.sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history =
        if record_objective { Some(Vec::with_capacity(epochs as usize)) } else { None };
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let violated = ys[i] * (dot(&w, xs[i]) + b) < 1.0;
            let keep = 1.0 - 1.0 / t as f64;
            for v in &mut w {
                *v *= keep;
            }
            b *= keep;
            if violated {
                let step = eta * ys[i];
                for (wv, xv) in w.iter_mut().zip(xs[i]) {
                    *wv += step * xv;
                }
                b += step;
            }
            let norm2 = dot(&w, &w) + b * b;
            if norm2 > radius * radius {
                let shrink = radius / norm2.sqrt();
                for v in &mut w {
                    *v *= shrink;
                }
                b *= shrink;
            }
            for (s, v) in w_sum.iter_mut().zip(&w) {
                *s += v;
            }
            b_sum += b;
        }
        if let Some(history) = &mut history {
            let inv = 1.0 / t as f64;
            let w_avg: Vec<f64> = w_sum.iter().map(|s| s * inv).collect();
            history.push(objective(&w_avg, b_sum * inv, xs, ys, lambda));
        }
    }
    let inv = 1.0 / t as f64;
    (w_sum.iter().map(|s| s * inv).collect(), b_sum * inv, history)
}

/// Accuracy accumulated per target grid cell: `(correct, total)`.
pub type CellAccuracy = BTreeMap<(u32, u32), (u64, u64)>;

/// Cross-validation results in the shape study tables report them.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Class order shared by the confusion matrix axes.
    pub classes: Vec<String>,
    /// Accuracy of each fold, percent.
    pub fold_accuracies: Vec<f64>,
    /// Mean of the fold accuracies, percent.
    pub mean_accuracy: f64,
    /// Sample standard deviation of the fold accuracies, percentage points.
    pub std_dev: f64,
    /// Pooled accuracy: confusion-matrix trace over total, percent.
    pub pooled_accuracy: f64,
    /// Pooled confusion counts; rows = true class, columns = predicted.
    pub confusion: Vec<Vec<u64>>,
    /// Per-cell accuracy for rows carrying grid-cell provenance.
    pub cell_accuracy: CellAccuracy,
}

impl CvReport {
    /// Total number of test predictions (= dataset rows).
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    /// Correct predictions: the confusion-matrix trace.
    pub fn trace(&self) -> u64 {
        self.confusion.iter().enumerate().map(|(i, row)| row[i]).sum()
    }
}

/// Assign each row to a fold, stratified by class.
///
/// Each class's row indices are shuffled with a label-keyed stream and dealt
/// into `k` contiguous chunks whose sizes differ by at most one (the first
/// `n mod k` chunks take the extra row). Returns `fold_of[row] ∈ 0..k`.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidFolds(k));
    }
    let mut fold_of = vec![0usize; data.rows.len()];
    for label in &data.classes {
        let mut indices: Vec<usize> = data
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label.as_deref() == Some(label))
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            continue;
        }
        if indices.len() < k {
            return Err(Error::Stratification {
                class: label.clone(),
                rows: indices.len(),
                folds: k,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix2(seed, salt::STRATIFY, fnv1a(label)));
        indices.shuffle(&mut rng);
        let base = indices.len() / k;
        let extra = indices.len() % k;
        let mut cursor = 0;
        for fold in 0..k {
            let take = base + usize::from(fold < extra);
            for &row in &indices[cursor..cursor + take] {
                fold_of[row] = fold;
            }
            cursor += take;
        }
    }
    Ok(fold_of)
}

/// Stratified k-fold cross-validation.
///
/// Each fold serves once as the test set while a model is trained from
/// scratch (scaler included) on the remaining rows with a fold-keyed seed.
/// Accuracies are in percent; `std_dev` is the sample standard deviation
/// across folds, matching how study tables quote "accuracy (SD)".
pub fn cross_validate(
    data: &Dataset,
    k: usize,
    lambda: f64,
    epochs: u32,
    seed: u64,
) -> Result<CvReport> {
    let fold_of = stratified_folds(data, k, seed)?;
    let n_classes = data.classes.len();
    let class_index: BTreeMap<&str, usize> =
        data.classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    let mut cell_accuracy = CellAccuracy::new();
    let mut fold_accuracies = Vec::with_capacity(k);
    for fold in 0..k {
        let train_rows: Vec<FeatureVector> = data
            .rows
            .iter()
            .zip(&fold_of)
            .filter(|(_, f)| **f != fold)
            .map(|(r, _)| r.clone())
            .collect();
        let test_rows: Vec<&FeatureVector> =
            data.rows.iter().zip(&fold_of).filter(|(_, f)| **f == fold).map(|(r, _)| r).collect();
        let train_set = Dataset::with_classes(train_rows, data.classes.clone())?;
        let model = train(&train_set, lambda, epochs, mix2(seed, salt::FOLD, fold as u64))?;
        let mut correct = 0u64;
        for row in &test_rows {
            let predicted = predict(&model, row)?;
            let true_label = row.label.as_deref().expect("dataset rows are labeled");
            let hit = predicted == true_label;
            confusion[class_index[true_label]][class_index[predicted.as_str()]] += 1;
            if hit {
                correct += 1;
            }
            if let Some(cell) = row.meta.cell {
                let entry = cell_accuracy.entry(cell).or_insert((0, 0));
                entry.1 += 1;
                if hit {
                    entry.0 += 1;
                }
            }
        }
        fold_accuracies.push(100.0 * correct as f64 / test_rows.len() as f64);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    let var =
        fold_accuracies.iter().map(|a| (a - mean_accuracy).powi(2)).sum::<f64>() / (k - 1) as f64;
    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = confusion.iter().enumerate().map(|(i, row)| row[i]).sum();
    Ok(CvReport {
        classes: data.classes.clone(),
        fold_accuracies,
        mean_accuracy,
        std_dev: var.sqrt(),
        pooled_accuracy: 100.0 * trace as f64 / total as f64,
        confusion,
        cell_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::RowMeta;
    use rand::Rng;

    fn row(values: Vec<f64>, label: &str) -> FeatureVector {
        FeatureVector { values, label: Some(label.into()), meta: RowMeta::default() }
    }

    fn row_in_cell(values: Vec<f64>, label: &str, cell: (u32, u32)) -> FeatureVector {
        FeatureVector {
            values,
            label: Some(label.into()),
            meta: RowMeta { session: 0, timestamp: 0.0, cell: Some(cell) },
        }
    }

    /// Two seeded Gaussian blobs in `dim` dimensions, `n` points per class,
    /// centers ±`sep`/2 along every axis.
    fn blob_dataset(n: usize, dim: usize, sep: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for (label, sign) in [("a", -1.0), ("b", 1.0)] {
            for _ in 0..n {
                let values =
                    (0..dim).map(|_| sign * sep / 2.0 + rng.gen_range(-1.0..1.0)).collect();
                rows.push(row(values, label));
            }
        }
        Dataset::new(rows).unwrap()
    }

    fn training_accuracy(model: &ClassifierModel, data: &Dataset) -> f64 {
        let correct = data
            .rows()
            .iter()
            .filter(|r| predict(model, r).unwrap() == *r.label.as_ref().unwrap())
            .count();
        100.0 * correct as f64 / data.rows().len() as f64
    }

    /// Exhaustive search over discretized linear separators in 2-D: all
    /// angles (720 steps) crossed with every threshold midpoint between
    /// consecutive projected points. Returns the best achievable training
    /// accuracy of any line, in percent.
    fn best_line_accuracy(data: &Dataset) -> f64 {
        let rows = data.rows();
        let mut best = 0usize;
        for step in 0..720 {
            let theta = step as f64 * std::f64::consts::PI / 720.0;
            let (dx, dy) = (theta.cos(), theta.sin());
            let mut projected: Vec<(f64, bool)> = rows
                .iter()
                .map(|r| (r.values[0] * dx + r.values[1] * dy, r.label.as_deref() == Some("a")))
                .collect();
            projected.sort_by(|p, q| p.0.total_cmp(&q.0));
            // Sweep thresholds; count "a" left of the cut (and its mirror).
            let total_a = projected.iter().filter(|p| p.1).count();
            let mut a_left = 0usize;
            for cut in 0..=projected.len() {
                let b_right = (projected.len() - cut) - (total_a - a_left);
                let correct = a_left + b_right;
                best = best.max(correct).max(projected.len() - correct);
                if cut < projected.len() && projected[cut].1 {
                    a_left += 1;
                }
            }
        }
        100.0 * best as f64 / rows.len() as f64
    }

    #[test]
    fn separable_four_points_reach_full_training_accuracy() {
        let data = Dataset::new(vec![
            row(vec![0.0, 0.0], "a"),
            row(vec![0.0, 1.0], "a"),
            row(vec![10.0, 10.0], "b"),
            row(vec![10.0, 9.0], "b"),
        ])
        .unwrap();
        let model = train(&data, DEFAULT_LAMBDA, DEFAULT_EPOCHS, 1).unwrap();
        assert_eq!(training_accuracy(&model, &data), 100.0);
    }

    /// The trainer matches an exhaustive search over line classifiers on a
    /// separable 20-point set (both must reach 100%).
    #[test]
    fn trainer_matches_brute_force_line_search() {
        // Hand-placed separable set: class a lower-left, class b upper-right.
        let data = Dataset::new(vec![
            row(vec![0.2, 0.1], "a"),
            row(vec![1.0, 0.8], "a"),
            row(vec![0.4, 1.2], "a"),
            row(vec![1.5, 0.3], "a"),
            row(vec![0.9, 1.6], "a"),
            row(vec![1.8, 1.1], "a"),
            row(vec![0.1, 1.9], "a"),
            row(vec![1.2, 1.4], "a"),
            row(vec![2.0, 0.6], "a"),
            row(vec![0.7, 0.5], "a"),
            row(vec![4.1, 4.3], "b"),
            row(vec![5.0, 3.8], "b"),
            row(vec![4.6, 5.2], "b"),
            row(vec![5.5, 4.4], "b"),
            row(vec![4.0, 5.8], "b"),
            row(vec![5.9, 5.1], "b"),
            row(vec![4.8, 4.0], "b"),
            row(vec![5.3, 5.6], "b"),
            row(vec![6.0, 4.7], "b"),
            row(vec![4.4, 4.9], "b"),
        ])
        .unwrap();
        let oracle = best_line_accuracy(&data);
        assert_eq!(oracle, 100.0, "the set is separable by construction");
        let model = train(&data, DEFAULT_LAMBDA, DEFAULT_EPOCHS, 7).unwrap();
        assert_eq!(training_accuracy(&model, &data), oracle);
    }

    #[test]
    fn identical_data_and_seed_give_bit_identical_models() {
        let data = blob_dataset(40, 5, 3.0, 11);
        let a = train(&data, DEFAULT_LAMBDA, 50, 9).unwrap();
        let b = train(&data, DEFAULT_LAMBDA, 50, 9).unwrap();
        assert_eq!(a, b);
        let c = train(&data, DEFAULT_LAMBDA, 50, 10).unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn single_class_data_is_rejected() {
        let data = Dataset::new(vec![row(vec![1.0], "a"), row(vec![2.0], "a")]).unwrap();
        assert!(matches!(train(&data, DEFAULT_LAMBDA, 10, 0), Err(Error::DegenerateDataset(_))));
    }

    #[test]
    fn bad_hyperparameters_are_rejected() {
        let data = blob_dataset(8, 2, 4.0, 0);
        assert!(matches!(train(&data, 0.0, 10, 0), Err(Error::InvalidHyperparameter(_))));
        assert!(matches!(train(&data, -1.0, 10, 0), Err(Error::InvalidHyperparameter(_))));
        assert!(matches!(train(&data, DEFAULT_LAMBDA, 0, 0), Err(Error::InvalidHyperparameter(_))));
    }

    #[test]
    fn prediction_is_invariant_under_positive_weight_scaling() {
        let data = blob_dataset(30, 4, 2.5, 21);
        let model = train(&data, DEFAULT_LAMBDA, 60, 2).unwrap();
        let scaled = ClassifierModel::from_parts(
            model.classes().to_vec(),
            model.scaler().clone(),
            model.weights().iter().map(|w| w.iter().map(|v| v * 3.7).collect()).collect(),
            model.biases().iter().map(|b| b * 3.7).collect(),
            DEFAULT_LAMBDA,
            60,
            2,
        )
        .unwrap();
        for r in data.rows() {
            assert_eq!(predict(&model, r).unwrap(), predict(&scaled, r).unwrap());
        }
    }

    #[test]
    fn exact_score_ties_break_toward_the_earliest_class() {
        let scaler = Scaler::from_parts(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let model = ClassifierModel::from_parts(
            vec!["first".into(), "second".into()],
            scaler,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
            DEFAULT_LAMBDA,
            1,
            0,
        )
        .unwrap();
        let zero = FeatureVector { values: vec![0.0, 0.0], label: None, meta: RowMeta::default() };
        assert_eq!(predict(&model, &zero).unwrap(), "first");
    }

    #[test]
    fn predict_rejects_wrong_dimensionality() {
        let data = blob_dataset(10, 3, 4.0, 3);
        let model = train(&data, DEFAULT_LAMBDA, 20, 0).unwrap();
        let bad = FeatureVector { values: vec![1.0, 2.0], label: None, meta: RowMeta::default() };
        assert!(matches!(predict(&model, &bad), Err(Error::DimensionMismatch { .. })));
    }

    /// Objective tail: after the first 90% of epochs the averaged-iterate
    /// objective stops increasing (tolerance one part in a million).
    #[test]
    fn objective_tail_is_non_increasing() {
        let data = blob_dataset(60, 6, 1.5, 31);
        let (_, history) = train_with_objective(&data, DEFAULT_LAMBDA, 200, 5).unwrap();
        assert_eq!(history.len(), 200);
        let tail_start = history.len() - history.len() / 10;
        for i in tail_start..history.len() - 1 {
            assert!(
                history[i + 1] <= history[i] + 1e-6,
                "objective rose at epoch {}: {} -> {}",
                i,
                history[i],
                history[i + 1]
            );
        }
    }

    #[test]
    fn stratified_folds_partition_with_balanced_sizes() {
        let data = blob_dataset(240, 3, 2.0, 41); // 480 rows, 240 per class
        let fold_of = stratified_folds(&data, 10, 77).unwrap();
        assert_eq!(fold_of.len(), 480);
        let mut sizes = vec![0usize; 10];
        for f in &fold_of {
            sizes[*f] += 1;
        }
        assert_eq!(sizes, vec![48; 10]);
        // Per-class balance: each fold holds exactly 24 of each class.
        for class in ["a", "b"] {
            let mut per_fold = vec![0usize; 10];
            for (r, f) in data.rows().iter().zip(&fold_of) {
                if r.label.as_deref() == Some(class) {
                    per_fold[*f] += 1;
                }
            }
            assert_eq!(per_fold, vec![24; 10]);
        }
    }

    #[test]
    fn uneven_classes_differ_by_at_most_one_per_fold() {
        let mut rows = Vec::new();
        for i in 0..25 {
            rows.push(row(vec![i as f64, 0.0], "a"));
        }
        for i in 0..13 {
            rows.push(row(vec![i as f64, 10.0], "b"));
        }
        let data = Dataset::new(rows).unwrap();
        let fold_of = stratified_folds(&data, 4, 5).unwrap();
        for class in ["a", "b"] {
            let mut per_fold = vec![0usize; 4];
            for (r, f) in data.rows().iter().zip(&fold_of) {
                if r.label.as_deref() == Some(class) {
                    per_fold[*f] += 1;
                }
            }
            let min = per_fold.iter().min().unwrap();
            let max = per_fold.iter().max().unwrap();
            assert!(max - min <= 1, "class {class}: {per_fold:?}");
        }
    }

    #[test]
    fn too_small_classes_fail_stratification() {
        let data = Dataset::new(vec![
            row(vec![0.0], "a"),
            row(vec![1.0], "a"),
            row(vec![10.0], "b"),
            row(vec![11.0], "b"),
            row(vec![12.0], "b"),
        ])
        .unwrap();
        match stratified_folds(&data, 3, 0) {
            Err(Error::Stratification { class, rows, folds }) => {
                assert_eq!(class, "a");
                assert_eq!((rows, folds), (2, 3));
            }
            other => panic!("expected stratification error, got {other:?}"),
        }
        assert!(matches!(stratified_folds(&data, 1, 0), Err(Error::InvalidFolds(1))));
    }

    #[test]
    fn separable_data_cross_validates_perfectly() {
        // 10 copies of a separable pattern → every fold is separable.
        let mut rows = Vec::new();
        for i in 0..10 {
            let jitter = i as f64 * 0.01;
            rows.push(row(vec![0.0 + jitter, 0.0], "a"));
            rows.push(row(vec![0.0, 1.0 + jitter], "a"));
            rows.push(row(vec![10.0 + jitter, 10.0], "b"));
            rows.push(row(vec![10.0, 9.0 - jitter], "b"));
        }
        let data = Dataset::new(rows).unwrap();
        let report = cross_validate(&data, 10, DEFAULT_LAMBDA, DEFAULT_EPOCHS, 3).unwrap();
        assert_eq!(report.mean_accuracy, 100.0);
        assert_eq!(report.std_dev, 0.0);
        assert_eq!(report.pooled_accuracy, 100.0);
    }

    #[test]
    fn report_invariants_hold_on_a_noisy_dataset() {
        let data = blob_dataset(60, 4, 1.0, 51); // overlapping blobs
        let report = cross_validate(&data, 6, DEFAULT_LAMBDA, 80, 13).unwrap();
        // Mean is the average of fold accuracies.
        let mean = report.fold_accuracies.iter().sum::<f64>() / 6.0;
        assert_eq!(report.mean_accuracy, mean);
        // Pooled accuracy is the confusion trace over the total.
        assert_eq!(report.pooled_accuracy, 100.0 * report.trace() as f64 / report.total() as f64);
        // Equal fold sizes → pooled and mean agree (up to float re-association).
        assert!((report.pooled_accuracy - report.mean_accuracy).abs() < 1e-9);
        // Row sums = per-class test counts (every row tested exactly once).
        for (i, (class, count)) in data.class_counts().iter().enumerate() {
            let row_sum: u64 = report.confusion[i].iter().sum();
            assert_eq!(row_sum, *count as u64, "class {class}");
        }
        assert!(report.mean_accuracy < 100.0, "blobs overlap; accuracy should drop");
    }

    #[test]
    fn cross_validation_is_deterministic() {
        let data = blob_dataset(30, 3, 1.2, 61);
        let a = cross_validate(&data, 5, DEFAULT_LAMBDA, 50, 17).unwrap();
        let b = cross_validate(&data, 5, DEFAULT_LAMBDA, 50, 17).unwrap();
        assert_eq!(a, b);
        let c = cross_validate(&data, 5, DEFAULT_LAMBDA, 50, 18).unwrap();
        assert_ne!(a.fold_accuracies, c.fold_accuracies);
    }

    /// Permuting the class order permutes confusion rows/columns and leaves
    /// all accuracies unchanged.
    #[test]
    fn class_reordering_only_permutes_the_report() {
        let data = blob_dataset(30, 4, 1.0, 71);
        let reversed =
            Dataset::with_classes(data.rows().to_vec(), vec!["b".into(), "a".into()]).unwrap();
        let forward = cross_validate(&data, 5, DEFAULT_LAMBDA, 60, 23).unwrap();
        let backward = cross_validate(&reversed, 5, DEFAULT_LAMBDA, 60, 23).unwrap();
        assert_eq!(forward.fold_accuracies, backward.fold_accuracies);
        assert_eq!(forward.mean_accuracy, backward.mean_accuracy);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(forward.confusion[i][j], backward.confusion[1 - i][1 - j]);
            }
        }
    }

    #[test]
    fn cell_accuracy_map_counts_every_cell_tested() {
        let mut rows = Vec::new();
        for i in 0..12 {
            let cell = (i % 3, i % 4);
            rows.push(row_in_cell(vec![0.0 + i as f64 * 0.01, 0.0], "a", cell));
            rows.push(row_in_cell(vec![10.0, 10.0 - i as f64 * 0.01], "b", cell));
        }
        let data = Dataset::new(rows).unwrap();
        let report = cross_validate(&data, 4, DEFAULT_LAMBDA, 50, 2).unwrap();
        let tested: u64 = report.cell_accuracy.values().map(|(_, t)| t).sum();
        assert_eq!(tested, 24);
        for ((col, x_row), (correct, total)) in &report.cell_accuracy {
            assert!(*col < 3 && *x_row < 4);
            assert!(correct <= total);
        }
    }

    #[test]
    fn dataset_validation_rejects_bad_rows() {
        assert!(Dataset::new(Vec::new()).is_err());
        let unlabeled = FeatureVector { values: vec![1.0], label: None, meta: RowMeta::default() };
        assert!(Dataset::new(vec![unlabeled]).is_err());
        let mixed = vec![row(vec![1.0], "a"), row(vec![1.0, 2.0], "b")];
        assert!(matches!(Dataset::new(mixed), Err(Error::DimensionMismatch { .. })));
        assert!(Dataset::with_classes(vec![row(vec![1.0], "a")], vec!["b".into()],).is_err());
        assert!(Dataset::with_classes(vec![row(vec![1.0], "a")], vec!["a".into(), "a".into()],)
            .is_err());
        assert!(Dataset::with_classes(
            vec![row(vec![1.0], "a")],
            vec!["a".into(), "has space".into()],
        )
        .is_err());
    }

    #[test]
    fn derived_class_order_is_sorted() {
        let data = Dataset::new(vec![
            row(vec![0.0], "zeta"),
            row(vec![1.0], "alpha"),
            row(vec![2.0], "mid"),
        ])
        .unwrap();
        assert_eq!(data.classes(), ["alpha", "mid", "zeta"]);
        assert_eq!(
            data.class_counts(),
            vec![("alpha".into(), 1), ("mid".into(), 1), ("zeta".into(), 1)]
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            /// Folds always partition the dataset with per-class balance.
            #[test]
            fn folds_partition(seed in any::<u64>(), k in 2usize..6, na in 8usize..20, nb in 8usize..20) {
                let mut rows = Vec::new();
                for i in 0..na { rows.push(row(vec![i as f64, 0.0], "a")); }
                for i in 0..nb { rows.push(row(vec![i as f64, 5.0], "b")); }
                let data = Dataset::new(rows).unwrap();
                prop_assume!(na >= k && nb >= k);
                let fold_of = stratified_folds(&data, k, seed).unwrap();
                prop_assert_eq!(fold_of.len(), na + nb);
                prop_assert!(fold_of.iter().all(|f| *f < k));
                for class in ["a", "b"] {
                    let mut per_fold = vec![0usize; k];
                    for (r, f) in data.rows().iter().zip(&fold_of) {
                        if r.label.as_deref() == Some(class) { per_fold[*f] += 1; }
                    }
                    let min = per_fold.iter().min().unwrap();
                    let max = per_fold.iter().max().unwrap();
                    prop_assert!(max - min <= 1);
                }
            }

            /// Training never panics and always produces finite weights.
            #[test]
            fn training_is_total_on_blobs(seed in any::<u64>(), sep in 0.1f64..6.0) {
                let data = blob_dataset(12, 3, sep, seed);
                let model = train(&data, DEFAULT_LAMBDA, 30, seed).unwrap();
                for w in model.weights() {
                    prop_assert!(w.iter().all(|v| v.is_finite()));
                }
                prop_assert!(model.biases().iter().all(|b| b.is_finite()));
            }
        }
    }
}
