//! Baseline classifiers over flattened sentiment images (logistic
//! regression, linear SVM, KNN), the confusion-matrix metric suite, and
//! the comparison harness that pits them against the GAN across training
//! fractions.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::corpus::Label;
use crate::gan::{self, TrainConfig};
use crate::imaging::{flatten_image, SentimentImage};
use crate::seeds::stage_rng;
use crate::tensornet::Tensor;

pub const FEATURE_DIM: usize = 200;

/// Flattened 2x10x10 image, channel-major — the exact layout every
/// classifier (including the GAN) consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<FeatureVector, BaselineError> {
        if values.len() != FEATURE_DIM {
            return Err(BaselineError::BadDimension(values.len()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(BaselineError::NonFinite);
        }
        Ok(FeatureVector { values })
    }

    pub fn from_image(image: &SentimentImage) -> FeatureVector {
        FeatureVector { values: flatten_image(image) }
    }
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("feature vector has {0} entries, expected 200")]
    BadDimension(usize),
    #[error("feature vector contains non-finite values")]
    NonFinite,
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("k = {k} out of range for {n} training points")]
    BadK { k: usize, n: usize },
    #[error("predictions and truth differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty evaluation set")]
    EmptyEvaluation,
    #[error("fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("labels must be relapsed or abstinent")]
    Unlabeled,
    #[error(transparent)]
    Gan(#[from] gan::GanError),
}

/// Binary example: features plus class (true = Relapsed, the positive class).
pub type Example = (FeatureVector, bool);

fn check_two_classes(train: &[Example]) -> Result<(), BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    let pos = train.iter().any(|(_, y)| *y);
    let neg = train.iter().any(|(_, y)| !*y);
    if pos && neg {
        Ok(())
    } else {
        Err(BaselineError::SingleClass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &FeatureVector) -> f64 {
        self.weights.iter().zip(&x.values).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &FeatureVector) -> bool {
        self.decision(x) >= 0.0
    }

    /// Sigmoid of the decision value (meaningful for logistic models).
    pub fn probability(&self, x: &FeatureVector) -> f64 {
        1.0 / (1.0 + (-self.decision(x)).exp())
    }
}

/// Full-batch gradient descent on the L2-regularized logistic loss.
/// The seed only fixes auxiliary choices; the optimization itself is
/// deterministic, so identical inputs give identical models.
pub fn logreg_train(
    train: &[Example],
    lr: f64,
    epochs: usize,
    l2: f64,
    _seed: u64,
) -> Result<LinearModel, BaselineError> {
    check_two_classes(train)?;
    let n = train.len() as f64;
    let mut model = LinearModel { weights: vec![0.0; FEATURE_DIM], bias: 0.0 };
    for _ in 0..epochs {
        let mut gw = vec![0.0; FEATURE_DIM];
        let mut gb = 0.0;
        for (x, y) in train {
            let target = if *y { 1.0 } else { 0.0 };
            let err = model.probability(x) - target;
            for (g, v) in gw.iter_mut().zip(&x.values) {
                *g += err * v;
            }
            gb += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= lr * (g / n + l2 * *w);
        }
        model.bias -= lr * gb / n;
    }
    Ok(model)
}

/// Full-batch subgradient descent on `0.5*||w||^2 + c * mean hinge`,
/// margin 1, labels in {-1, +1}. The bias is unregularized.
pub fn linsvm_train(
    train: &[Example],
    lr: f64,
    epochs: usize,
    c: f64,
    _seed: u64,
) -> Result<LinearModel, BaselineError> {
    check_two_classes(train)?;
    let n = train.len() as f64;
    let mut model = LinearModel { weights: vec![0.0; FEATURE_DIM], bias: 0.0 };
    for _ in 0..epochs {
        let mut gw = model.weights.clone();
        let mut gb = 0.0;
        for (x, y) in train {
            let sign = if *y { 1.0 } else { -1.0 };
            if sign * model.decision(x) < 1.0 {
                for (g, v) in gw.iter_mut().zip(&x.values) {
                    *g -= c * sign * v / n;
                }
                gb -= c * sign / n;
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= lr * g;
        }
        model.bias -= lr * gb;
    }
    Ok(model)
}

pub const DEFAULT_KNN_K: usize = 5;

/// Majority vote of the k Euclidean-nearest training points. Distance
/// ties break toward the earlier training index; vote ties break toward
/// Relapsed (the costlier miss).
pub fn knn_predict(
    train: &[Example],
    query: &FeatureVector,
    k: usize,
) -> Result<Label, BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    if k == 0 || k > train.len() {
        return Err(BaselineError::BadK { k, n: train.len() });
    }
    let mut ranked: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, (x, _))| {
            let d2: f64 =
                x.values.iter().zip(&query.values).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let votes = ranked[..k].iter().filter(|(_, i)| train[*i].1).count();
    if 2 * votes >= k {
        Ok(Label::Relapsed)
    } else {
        Ok(Label::Abstinent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    ratio(2.0 * precision * recall, precision + recall)
}

/// Confusion-matrix metrics with positive class = Relapsed and the
/// zero-denominator-to-zero convention.
pub fn compute_metrics(
    predictions: &[Label],
    truth: &[Label],
) -> Result<MetricsReport, BaselineError> {
    if predictions.len() != truth.len() {
        return Err(BaselineError::LengthMismatch(predictions.len(), truth.len()));
    }
    if predictions.is_empty() {
        return Err(BaselineError::EmptyEvaluation);
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (p, t) in predictions.iter().zip(truth) {
        if *p == Label::Unlabeled || *t == Label::Unlabeled {
            return Err(BaselineError::Unlabeled);
        }
        match (*p == Label::Relapsed, *t == Label::Relapsed) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp as f64, (tp + fp) as f64);
    let recall = ratio(tp as f64, (tp + fn_) as f64);
    let accuracy = (tp + tn) as f64 / predictions.len() as f64;
    Ok(MetricsReport {
        tp,
        tn,
        fp,
        fn_,
        precision,
        recall,
        accuracy,
        f1: f1_score(precision, recall),
    })
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub logreg_lr: f64,
    pub logreg_epochs: usize,
    pub logreg_l2: f64,
    pub svm_lr: f64,
    pub svm_epochs: usize,
    pub svm_c: f64,
    pub knn_k: usize,
    pub gan: TrainConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            logreg_lr: 0.5,
            logreg_epochs: 300,
            logreg_l2: 1e-4,
            svm_lr: 0.01,
            svm_epochs: 300,
            svm_c: 10.0,
            knn_k: DEFAULT_KNN_K,
            gan: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessRow {
    pub method: String,
    pub fraction: f64,
    pub seed: u64,
    pub acc: f64,
    pub f1: f64,
}

pub const HARNESS_METHODS: [&str; 4] = ["LogReg", "SVM", "KNN", "GAN"];

/// Labeled image set for the harness: features plus relapse flag.
pub type LabeledSet = Vec<Example>;

/// Stratified split: round(fraction * n) per class into train, rest held
/// out; order within each side is deterministic given the seed.
pub fn stratified_split(
    data: &[Example],
    fraction: f64,
    seed: u64,
) -> Result<(LabeledSet, LabeledSet), BaselineError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(BaselineError::BadFraction(fraction));
    }
    let mut rng = stage_rng(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut members: Vec<usize> =
            (0..data.len()).filter(|&i| data[i].1 == class).collect();
        members.shuffle(&mut rng);
        let take = (fraction * members.len() as f64).round() as usize;
        for (rank, &i) in members.iter().enumerate() {
            if rank < take {
                train.push(data[i].clone());
            } else {
                test.push(data[i].clone());
            }
        }
    }
    Ok((train, test))
}

fn bool_label(relapsed: bool) -> Label {
    if relapsed {
        Label::Relapsed
    } else {
        Label::Abstinent
    }
}

fn evaluate_linear(model: &LinearModel, test: &[Example]) -> Result<MetricsReport, BaselineError> {
    let predictions: Vec<Label> =
        test.iter().map(|(x, _)| bool_label(model.predict(x))).collect();
    let truth: Vec<Label> = test.iter().map(|(_, y)| bool_label(*y)).collect();
    compute_metrics(&predictions, &truth)
}

fn gan_examples(set: &[Example]) -> Vec<(Tensor, usize)> {
    set.iter()
        .map(|(x, y)| {
            let class = if *y { gan::CLASS_RELAPSED } else { gan::CLASS_ABSTINENT };
            (Tensor::from_vec(&[2, 10, 10], x.values.clone()), class)
        })
        .collect()
}

/// Train and evaluate all four methods for every (fraction, seed) pair.
pub fn compare_harness(
    data: &[Example],
    fractions: &[f64],
    seeds: &[u64],
    config: &HarnessConfig,
) -> Result<Vec<HarnessRow>, BaselineError> {
    let mut rows = Vec::new();
    for &fraction in fractions {
        for &seed in seeds {
            let (train, test) = stratified_split(data, fraction, seed)?;
            if test.is_empty() {
                return Err(BaselineError::EmptyEvaluation);
            }
            let truth: Vec<Label> = test.iter().map(|(_, y)| bool_label(*y)).collect();

            let logreg =
                logreg_train(&train, config.logreg_lr, config.logreg_epochs, config.logreg_l2, seed)?;
            let m = evaluate_linear(&logreg, &test)?;
            rows.push(HarnessRow {
                method: "LogReg".into(), fraction, seed, acc: m.accuracy, f1: m.f1,
            });

            let svm = linsvm_train(&train, config.svm_lr, config.svm_epochs, config.svm_c, seed)?;
            let m = evaluate_linear(&svm, &test)?;
            rows.push(HarnessRow {
                method: "SVM".into(), fraction, seed, acc: m.accuracy, f1: m.f1,
            });

            let k = config.knn_k.min(train.len());
            let predictions: Vec<Label> = test
                .iter()
                .map(|(x, _)| knn_predict(&train, x, k))
                .collect::<Result<_, _>>()?;
            let m = compute_metrics(&predictions, &truth)?;
            rows.push(HarnessRow {
                method: "KNN".into(), fraction, seed, acc: m.accuracy, f1: m.f1,
            });

            let mut gan_config = config.gan.clone();
            gan_config.seed = seed;
            gan_config.batch_size = gan_config.batch_size.min(gan_examples(&train).len());
            let (model, _) = gan::train(&gan_examples(&train), &[], &gan_config)?;
            let predictions: Vec<Label> = test
                .iter()
                .map(|(x, _)| {
                    let t = Tensor::from_vec(&[2, 10, 10], x.values.clone());
                    gan::predict_relapse_tensor(&model, &t).map(|p| bool_label(p >= 0.5))
                })
                .collect::<Result<_, _>>()?;
            let m = compute_metrics(&predictions, &truth)?;
            rows.push(HarnessRow {
                method: "GAN".into(), fraction, seed, acc: m.accuracy, f1: m.f1,
            });
        }
    }
    Ok(rows)
}

/// Harness CSV: method,fraction,seed,acc,f1 with 4 decimal places.
pub fn harness_to_csv(rows: &[HarnessRow]) -> String {
    let mut out = String::from("method,fraction,seed,acc,f1\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{},{:.4},{:.4}\n",
            r.method, r.fraction, r.seed, r.acc, r.f1
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fv(f: impl FnMut(usize) -> f64) -> FeatureVector {
        FeatureVector::new((0..FEATURE_DIM).map(f).collect()).unwrap()
    }

    fn separable(n: usize, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let y = i % 2 == 0;
                let base = if y { 0.8 } else { 0.2 };
                (fv(|_| base + rng.gen::<f64>() * 0.1), y)
            })
            .collect()
    }

    #[test]
    fn feature_vector_validation() {
        assert!(FeatureVector::new(vec![0.0; 200]).is_ok());
        assert!(matches!(
            FeatureVector::new(vec![0.0; 199]),
            Err(BaselineError::BadDimension(199))
        ));
        let mut bad = vec![0.0; 200];
        bad[7] = f64::NAN;
        assert!(matches!(FeatureVector::new(bad), Err(BaselineError::NonFinite)));
    }

    #[test]
    fn logreg_separates_two_points() {
        let train = vec![(fv(|_| 1.0), true), (fv(|_| -1.0), false)];
        let model = logreg_train(&train, 0.5, 500, 0.0, 0).unwrap();
        assert!(model.predict(&train[0].0));
        assert!(!model.predict(&train[1].0));
        assert!(model.probability(&train[0].0) > 0.9);
    }

    #[test]
    fn logreg_identical_features_mixed_labels_near_half() {
        let train = vec![(fv(|_| 0.3), true), (fv(|_| 0.3), false)];
        let model = logreg_train(&train, 0.1, 200, 0.0, 0).unwrap();
        let p = model.probability(&train[0].0);
        assert!((p - 0.5).abs() < 0.05, "p = {p}");
    }

    #[test]
    fn logreg_huge_l2_kills_weights() {
        // Stationary point is w = -(grad/n)/l2, so a huge l2 pins the
        // weights near zero (keep lr*l2 <= 1 so descent stays stable).
        let train = separable(10, 1);
        let model = logreg_train(&train, 1e-5, 100, 1e5, 0).unwrap();
        let norm: f64 = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "||w|| = {norm}");
    }

    #[test]
    fn logreg_rejects_single_class() {
        let train = vec![(fv(|_| 1.0), true), (fv(|_| 0.0), true)];
        assert!(matches!(
            logreg_train(&train, 0.1, 10, 0.0, 0),
            Err(BaselineError::SingleClass)
        ));
    }

    #[test]
    fn svm_zero_hinge_on_separable_set() {
        let train = vec![(fv(|_| 1.0), true), (fv(|_| -1.0), false)];
        let model = linsvm_train(&train, 0.05, 2000, 10.0, 0).unwrap();
        for (x, y) in &train {
            let sign = if *y { 1.0 } else { -1.0 };
            let margin = sign * model.decision(x);
            assert!(margin >= 1.0 - 1e-6, "margin = {margin}");
        }
    }

    #[test]
    fn svm_c_zero_collapses_weights() {
        let train = separable(8, 2);
        let model = linsvm_train(&train, 0.1, 500, 0.0, 0).unwrap();
        let norm: f64 = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-10);
    }

    #[test]
    fn svm_label_flip_flips_decision() {
        let train = separable(10, 3);
        let flipped: Vec<Example> = train.iter().map(|(x, y)| (x.clone(), !y)).collect();
        let a = linsvm_train(&train, 0.05, 200, 5.0, 0).unwrap();
        let b = linsvm_train(&flipped, 0.05, 200, 5.0, 0).unwrap();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa + wb).abs() < 1e-9);
        }
        assert!((a.bias + b.bias).abs() < 1e-9);
    }

    #[test]
    fn knn_exact_match_wins_at_k1() {
        let train = separable(6, 4);
        for (x, y) in &train {
            let label = knn_predict(&train, x, 1).unwrap();
            assert_eq!(label, bool_label(*y));
        }
    }

    #[test]
    fn knn_full_k_is_global_majority() {
        let mut train = separable(6, 5);
        train.push((fv(|_| 0.5), false)); // 3 pos, 4 neg
        let label = knn_predict(&train, &fv(|_| 0.5), train.len()).unwrap();
        assert_eq!(label, Label::Abstinent);
    }

    #[test]
    fn knn_three_point_hand_case() {
        // Distances from origin: 1, 2, 3 -> k=2 picks labels (true, false),
        // a tie, which breaks toward Relapsed.
        let train = vec![
            (fv(|i| if i == 0 { 1.0 } else { 0.0 }), true),
            (fv(|i| if i == 0 { 2.0 } else { 0.0 }), false),
            (fv(|i| if i == 0 { 3.0 } else { 0.0 }), false),
        ];
        let query = fv(|_| 0.0);
        assert_eq!(knn_predict(&train, &query, 2).unwrap(), Label::Relapsed);
        assert_eq!(knn_predict(&train, &query, 3).unwrap(), Label::Abstinent);
    }

    #[test]
    fn knn_distance_tie_prefers_earlier_index() {
        let train = vec![
            (fv(|i| if i == 0 { 1.0 } else { 0.0 }), false),
            (fv(|i| if i == 0 { -1.0 } else { 0.0 }), true),
        ];
        // Equidistant; k=1 must pick index 0.
        assert_eq!(knn_predict(&train, &fv(|_| 0.0), 1).unwrap(), Label::Abstinent);
    }

    #[test]
    fn knn_rejects_bad_k_and_empty() {
        let train = separable(4, 6);
        assert!(matches!(
            knn_predict(&train, &fv(|_| 0.0), 0),
            Err(BaselineError::BadK { .. })
        ));
        assert!(matches!(
            knn_predict(&train, &fv(|_| 0.0), 5),
            Err(BaselineError::BadK { .. })
        ));
        assert!(matches!(
            knn_predict(&[], &fv(|_| 0.0), 1),
            Err(BaselineError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn metrics_perfect_predictions() {
        let labels = vec![Label::Relapsed, Label::Abstinent];
        let m = compute_metrics(&labels, &labels).unwrap();
        assert_eq!((m.tp, m.tn, m.fp, m.fn_), (1, 1, 0, 0));
        assert_eq!((m.precision, m.recall, m.accuracy, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn metrics_zero_denominator_convention() {
        let preds = vec![Label::Abstinent, Label::Abstinent];
        let truth = vec![Label::Relapsed, Label::Relapsed];
        let m = compute_metrics(&preds, &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn metrics_f1_from_table_values() {
        let f1 = f1_score(0.9346, 0.9429);
        assert!((f1 - 0.9388).abs() < 1e-4, "f1 = {f1}");
    }

    #[test]
    fn metrics_accuracy_matches_independent_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..30);
            let draw = |rng: &mut ChaCha8Rng| -> Vec<Label> {
                (0..n)
                    .map(|_| if rng.gen::<bool>() { Label::Relapsed } else { Label::Abstinent })
                    .collect()
            };
            let preds = draw(&mut rng);
            let truth = draw(&mut rng);
            let m = compute_metrics(&preds, &truth).unwrap();
            let agree = preds.iter().zip(&truth).filter(|(p, t)| p == t).count();
            assert!((m.accuracy - agree as f64 / n as f64).abs() < 1e-12);
            assert_eq!(m.tp + m.tn + m.fp + m.fn_, n);
            if m.precision == m.recall {
                assert!((m.f1 - m.precision).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn metrics_rejects_mismatch_and_unlabeled() {
        assert!(matches!(
            compute_metrics(&[Label::Relapsed], &[]),
            Err(BaselineError::LengthMismatch(1, 0))
        ));
        assert!(matches!(
            compute_metrics(&[Label::Unlabeled], &[Label::Relapsed]),
            Err(BaselineError::Unlabeled)
        ));
    }

    #[test]
    fn stratified_split_respects_class_counts() {
        let mut data = separable(20, 8); // 10/10
        data.truncate(20);
        let (train, test) = stratified_split(&data, 0.7, 1).unwrap();
        assert_eq!(train.iter().filter(|(_, y)| *y).count(), 7);
        assert_eq!(train.iter().filter(|(_, y)| !*y).count(), 7);
        assert_eq!(train.len() + test.len(), 20);
        let (train2, _) = stratified_split(&data, 0.7, 1).unwrap();
        assert_eq!(train, train2);
        assert!(matches!(
            stratified_split(&data, 1.0, 1),
            Err(BaselineError::BadFraction(_))
        ));
    }

    #[test]
    fn harness_is_deterministic_and_complete() {
        let data = separable(30, 9);
        let config = HarnessConfig {
            logreg_epochs: 50,
            svm_epochs: 50,
            gan: TrainConfig {
                epochs: 2,
                batch_size: 8,
                noise_dim: 8,
                ..TrainConfig::default()
            },
            ..HarnessConfig::default()
        };
        let rows = compare_harness(&data, &[0.8], &[5], &config).unwrap();
        assert_eq!(rows.len(), 4);
        let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods, HARNESS_METHODS.to_vec());
        let again = compare_harness(&data, &[0.8], &[5], &config).unwrap();
        assert_eq!(rows, again);
        let csv = harness_to_csv(&rows);
        assert!(csv.starts_with("method,fraction,seed,acc,f1\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("LogReg,0.8000,5,"));
    }
}
