//! Confusion matrices, one-vs-rest metrics and stratified cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{Dataset, EncodedDataset, TrainingSetup};
use crate::clonal::{evolve, EvolutionConfig};
use crate::error::{Error, Result};
use crate::features::{fit_scaler, FeatureConfig};
use crate::rng::{derive_seed, stream};

const TAG_FOLDS: u64 = 11;
const TAG_FOLD_TRAIN: u64 = 12;

/// `counts[actual][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Adds another matrix of the same size.
    pub fn accumulate(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }

    /// `(tp, fn, fp, tn)` with `positive` against all other classes.
    pub fn one_vs_rest(&self, positive: usize) -> (u64, u64, u64, u64) {
        let mut tp = 0;
        let mut fal_neg = 0;
        let mut fal_pos = 0;
        let mut tn = 0;
        for (a, row) in self.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                match (a == positive, p == positive) {
                    (true, true) => tp += n,
                    (true, false) => fal_neg += n,
                    (false, true) => fal_pos += n,
                    (false, false) => tn += n,
                }
            }
        }
        (tp, fal_neg, fal_pos, tn)
    }
}

pub fn confusion(predictions: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut m = ConfusionMatrix::zeros(classes);
    for (&p, &y) in predictions.iter().zip(labels) {
        if p >= classes || y >= classes {
            return Err(Error::Argument(format!("class index outside 0..{classes}")));
        }
        m.counts[y][p] += 1;
    }
    Ok(m)
}

/// Ratios whose denominator was zero; they are reported as 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndefinedFlags {
    pub sensitivity: bool,
    pub specificity: bool,
    pub precision: bool,
    pub mcc: bool,
}

impl UndefinedFlags {
    pub fn any(&self) -> bool {
        self.sensitivity || self.specificity || self.precision || self.mcc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub mcc: f64,
    pub undefined: UndefinedFlags,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

pub fn metrics(m: &ConfusionMatrix, positive: usize) -> Result<Metrics> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Argument("metrics need a non-empty confusion matrix".into()));
    }
    if positive >= m.classes() {
        return Err(Error::Argument(format!("positive class {positive} outside the matrix")));
    }
    let (tp, fal_neg, fal_pos, tn) = m.one_vs_rest(positive);
    let (tp, fal_neg, fal_pos, tn) = (tp as f64, fal_neg as f64, fal_pos as f64, tn as f64);
    let mut undefined = UndefinedFlags::default();
    let mcc_den = ((tp + fal_pos) * (tp + fal_neg) * (tn + fal_pos) * (tn + fal_neg)).sqrt();
    Ok(Metrics {
        accuracy: m.trace() as f64 / total as f64,
        sensitivity: ratio(tp, tp + fal_neg, &mut undefined.sensitivity),
        specificity: ratio(tn, tn + fal_pos, &mut undefined.specificity),
        precision: ratio(tp, tp + fal_pos, &mut undefined.precision),
        mcc: ratio(tp * tn - fal_pos * fal_neg, mcc_den, &mut undefined.mcc),
        undefined,
    })
}

/// Stratified fold index for every example.
///
/// Each class is shuffled with a seeded stream, then all classes are dealt
/// round-robin into `k` folds with one running counter, so fold sizes differ
/// by at most one and every class is spread as evenly as possible.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Argument(format!("cross-validation needs k >= 2 (got {k})")));
    }
    let counts = data.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < k {
            return Err(Error::Stratification {
                class: data.class_names[class].clone(),
                count,
                folds: k,
            });
        }
    }
    let mut fold_of = vec![0; data.len()];
    let mut dealt = 0;
    for class in 0..data.class_count() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.examples[i].label == class).collect();
        members.shuffle(&mut stream(seed, &[TAG_FOLDS, class as u64]));
        for i in members {
            fold_of[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(fold_of)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub training_affinity: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stddev: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MetricSummary {
        mean,
        stddev: var.sqrt(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub folds: Vec<FoldResult>,
    pub positive_class: usize,
    pub accuracy: MetricSummary,
    pub sensitivity: MetricSummary,
    pub specificity: MetricSummary,
    pub precision: MetricSummary,
    pub mcc: MetricSummary,
}

/// Parameters shared by every fold.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidationSetup {
    pub folds: usize,
    pub positive_class: usize,
    pub feature_config: FeatureConfig,
    pub engine: crate::ca::EngineConfig,
    pub evolution: EvolutionConfig,
}

/// Trains on `k - 1` folds and tests on the held-out one, for every fold.
/// Fold training seeds derive from the evolution seed and the fold index.
pub fn cross_validate(data: &Dataset, setup: &CrossValidationSetup) -> Result<CrossValidationReport> {
    let window_len = data.window_len()?;
    let k = setup.folds;
    let fold_of = stratified_folds(data, k, setup.evolution.seed)?;
    let folds = (0..k)
        .into_par_iter()
        .map(|fold| {
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] != fold).collect();
            let test_idx: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] == fold).collect();
            let train = data.subset(&train_idx);
            let test = data.subset(&test_idx);
            let features = fit_scaler(train.examples.iter().map(|e| &e.window), &setup.feature_config)?;
            let seed = derive_seed(setup.evolution.seed, &[TAG_FOLD_TRAIN, fold as u64]);
            let training = TrainingSetup {
                feature_config: features.clone(),
                engine: setup.engine,
                class_names: data.class_names.clone(),
                window_len,
                seed,
            };
            let evo = EvolutionConfig {
                seed,
                ..setup.evolution.clone()
            };
            let encoded = EncodedDataset::encode(&train, &features)?;
            let outcome = evolve(&encoded, &training, &evo)?;
            let predicted = test
                .examples
                .iter()
                .map(|e| crate::classifier::classify(&outcome.best, &e.window).map(|p| p.class))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<usize> = test.examples.iter().map(|e| e.label).collect();
            let cm = confusion(&predicted, &labels, data.class_count())?;
            Ok(FoldResult {
                fold,
                train_size: train.len(),
                test_size: test.len(),
                training_affinity: outcome.best_affinity,
                metrics: metrics(&cm, setup.positive_class)?,
                confusion: cm,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pick = |f: fn(&Metrics) -> f64| summarize(&folds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    Ok(CrossValidationReport {
        positive_class: setup.positive_class,
        accuracy: pick(|m| m.accuracy),
        sensitivity: pick(|m| m.sensitivity),
        specificity: pick(|m| m.specificity),
        precision: pick(|m| m.precision),
        mcc: pick(|m| m.mcc),
        folds,
    })
}
