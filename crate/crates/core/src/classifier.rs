//! Attractor-basin classification.
//!
//! A rule vector partitions inputs by the attractor their trajectory falls
//! into. Training labels each attractor with the majority class of the
//! training windows that reach it; prediction runs a new window to its
//! attractor and reads the label back, falling back to the nearest known
//! attractor (L1 over signature levels) when the attractor is new.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ca::{find_attractor, AttractorResult, AttractorSignature, EngineConfig, RuleVector, StateVector};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureConfig, SequenceWindow};

/// Weight of the excess-attractor penalty in [`fitness`].
pub const ATTRACTOR_PENALTY: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    pub window: SequenceWindow,
    pub label: usize,
}

/// Labeled windows plus the class-name table their labels index into.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>, class_names: Vec<String>) -> Result<Self> {
        if let Some(ex) = examples.iter().find(|e| e.label >= class_names.len()) {
            return Err(Error::Argument(format!(
                "example {:?} has label {} but only {} classes exist",
                ex.id,
                ex.label,
                class_names.len()
            )));
        }
        Ok(Dataset { examples, class_names })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }

    /// The shared window length; an error when windows differ in length.
    pub fn window_len(&self) -> Result<usize> {
        let first = self
            .examples
            .first()
            .ok_or_else(|| Error::Argument("dataset is empty".into()))?
            .window
            .len();
        if let Some(e) = self.examples.iter().find(|e| e.window.len() != first) {
            return Err(Error::Shape {
                expected: first,
                found: e.window.len(),
            });
        }
        Ok(first)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }
}

/// Training windows already turned into initial states.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDataset {
    states: Vec<StateVector>,
    labels: Vec<usize>,
    class_count: usize,
}

impl EncodedDataset {
    pub fn encode(data: &Dataset, cfg: &FeatureConfig) -> Result<Self> {
        let states = data
            .examples
            .iter()
            .map(|e| extract_features(&e.window, cfg))
            .collect::<Result<Vec<_>>>()?;
        EncodedDataset::from_parts(
            states,
            data.examples.iter().map(|e| e.label).collect(),
            data.class_count(),
        )
    }

    pub fn from_parts(states: Vec<StateVector>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if states.len() != labels.len() {
            return Err(Error::Shape {
                expected: states.len(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Argument(format!("label {bad} outside {class_count} classes")));
        }
        if let Some(first) = states.first() {
            if let Some(s) = states.iter().find(|s| s.len() != first.len()) {
                return Err(Error::Shape {
                    expected: first.len(),
                    found: s.len(),
                });
            }
        }
        Ok(EncodedDataset {
            states,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.states.first().map_or(0, StateVector::len)
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorEntry {
    pub class: usize,
    /// Majority count over support.
    pub purity: f64,
    pub support: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttractorMap {
    entries: BTreeMap<AttractorSignature, AttractorEntry>,
}

impl AttractorMap {
    /// Labels each attractor by the majority of the class counts that reached
    /// it; ties go to the lowest class index.
    pub fn from_counts(counts: BTreeMap<AttractorSignature, Vec<usize>>) -> Self {
        let entries = counts
            .into_iter()
            .map(|(sig, per_class)| {
                let support: usize = per_class.iter().sum();
                let (class, &majority) = per_class
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .expect("at least one class");
                let entry = AttractorEntry {
                    class,
                    purity: majority as f64 / support as f64,
                    support,
                };
                (sig, entry)
            })
            .collect();
        AttractorMap { entries }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (AttractorSignature, AttractorEntry)>) -> Self {
        AttractorMap {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, sig: &AttractorSignature) -> Option<&AttractorEntry> {
        self.entries.get(sig)
    }

    /// Entries in signature order.
    pub fn iter(&self) -> impl Iterator<Item = (&AttractorSignature, &AttractorEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_support(&self) -> usize {
        self.entries.values().map(|e| e.support).sum()
    }

    /// Closest entry by L1 distance; equal distances resolve to the smaller signature.
    pub fn nearest(&self, sig: &AttractorSignature) -> Option<(&AttractorSignature, &AttractorEntry)> {
        let mut best: Option<(u64, (&AttractorSignature, &AttractorEntry))> = None;
        for (s, e) in &self.entries {
            let d = s.l1_distance(sig);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, (s, e)));
            }
        }
        best.map(|(_, hit)| hit)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessReport {
    pub score: f64,
    pub raw_accuracy: f64,
    pub map: AttractorMap,
    pub non_converged: usize,
}

fn trajectories(rv: &RuleVector, data: &EncodedDataset, cfg: &EngineConfig) -> Result<Vec<AttractorResult>> {
    data.states.par_iter().map(|s| find_attractor(s, rv, cfg)).collect()
}

/// Penalized training accuracy of `rv`.
///
/// Accuracy counts non-converged examples as misses. The score subtracts
/// `0.05 * max(0, A - C) / A` for `A` attractors and `C` classes and is
/// clamped at zero.
pub fn fitness(rv: &RuleVector, data: &EncodedDataset, cfg: &EngineConfig) -> Result<FitnessReport> {
    if data.is_empty() {
        return Err(Error::Argument("fitness needs at least one example".into()));
    }
    let results = trajectories(rv, data, cfg)?;
    let mut counts: BTreeMap<AttractorSignature, Vec<usize>> = BTreeMap::new();
    let mut non_converged = 0;
    for (res, &label) in results.into_iter().zip(&data.labels) {
        if !res.converged {
            non_converged += 1;
            continue;
        }
        counts.entry(res.signature).or_insert_with(|| vec![0; data.class_count])[label] += 1;
    }
    let correct: usize = counts.values().map(|c| c.iter().copied().max().unwrap_or(0)).sum();
    let map = AttractorMap::from_counts(counts);
    let raw_accuracy = correct as f64 / data.len() as f64;
    let attractors = map.len();
    let penalty = if attractors == 0 {
        0.0
    } else {
        ATTRACTOR_PENALTY * attractors.saturating_sub(data.class_count) as f64 / attractors as f64
    };
    Ok(FitnessReport {
        score: (raw_accuracy - penalty).max(0.0),
        raw_accuracy,
        map,
        non_converged,
    })
}

/// Everything besides the rule vector that a trained model carries.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSetup {
    pub feature_config: FeatureConfig,
    pub engine: EngineConfig,
    pub class_names: Vec<String>,
    pub window_len: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedClassifier {
    pub rule_vector: RuleVector,
    pub attractor_map: AttractorMap,
    pub feature_config: FeatureConfig,
    pub engine: EngineConfig,
    pub class_names: Vec<String>,
    /// Training examples per class; the fallback prior.
    pub class_counts: Vec<usize>,
    pub window_len: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingDiagnostics {
    pub examples: usize,
    pub non_converged: usize,
    pub attractors: usize,
}

pub fn build_classifier(
    rv: RuleVector,
    data: &EncodedDataset,
    setup: &TrainingSetup,
) -> Result<(TrainedClassifier, TrainingDiagnostics)> {
    if setup.class_names.len() != data.class_count {
        return Err(Error::Argument(format!(
            "{} class names for {} classes",
            setup.class_names.len(),
            data.class_count
        )));
    }
    let expected = setup.feature_config.state_len(setup.window_len);
    if data.cells() != expected || rv.len() != expected {
        return Err(Error::Shape {
            expected,
            found: if rv.len() != expected { rv.len() } else { data.cells() },
        });
    }
    let report = fitness(&rv, data, &setup.engine)?;
    if report.map.is_empty() {
        return Err(Error::TrainingFailure(format!(
            "none of the {} training examples reached an attractor within {} steps",
            data.len(),
            setup.engine.max_steps
        )));
    }
    let mut class_counts = vec![0; data.class_count];
    for &l in &data.labels {
        class_counts[l] += 1;
    }
    let diagnostics = TrainingDiagnostics {
        examples: data.len(),
        non_converged: report.non_converged,
        attractors: report.map.len(),
    };
    let clf = TrainedClassifier {
        rule_vector: rv,
        attractor_map: report.map,
        feature_config: setup.feature_config.clone(),
        engine: setup.engine,
        class_names: setup.class_names.clone(),
        class_counts,
        window_len: setup.window_len,
        seed: setup.seed,
    };
    Ok((clf, diagnostics))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Nearest,
    Fallback,
}

impl std::fmt::Display for MatchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatchKind::Exact => "exact",
            MatchKind::Nearest => "nearest",
            MatchKind::Fallback => "fallback",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub probability: f64,
    pub matched: MatchKind,
}

impl Prediction {
    /// Probability mass assigned to `positive`; the remainder of a
    /// prediction for another class is shared evenly by the other classes.
    pub fn probability_of(&self, positive: usize, class_count: usize) -> f64 {
        if self.class == positive {
            self.probability
        } else if class_count > 1 {
            (1.0 - self.probability) / (class_count - 1) as f64
        } else {
            0.0
        }
    }
}

impl TrainedClassifier {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn cells(&self) -> usize {
        self.rule_vector.len()
    }

    fn fallback(&self) -> Prediction {
        let total: usize = self.class_counts.iter().sum();
        let (class, &count) = self
            .class_counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("at least one class");
        Prediction {
            class,
            probability: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            matched: MatchKind::Fallback,
        }
    }

    /// Classifies an already encoded state.
    pub fn classify_state(&self, state: &StateVector) -> Result<Prediction> {
        let res = find_attractor(state, &self.rule_vector, &self.engine)?;
        if !res.converged {
            return Ok(self.fallback());
        }
        if let Some(e) = self.attractor_map.get(&res.signature) {
            return Ok(Prediction {
                class: e.class,
                probability: e.purity,
                matched: MatchKind::Exact,
            });
        }
        match self.attractor_map.nearest(&res.signature) {
            Some((_, e)) => Ok(Prediction {
                class: e.class,
                probability: e.purity,
                matched: MatchKind::Nearest,
            }),
            None => Ok(self.fallback()),
        }
    }
}

pub fn classify(clf: &TrainedClassifier, w: &SequenceWindow) -> Result<Prediction> {
    if w.len() != clf.window_len {
        return Err(Error::Shape {
            expected: clf.window_len,
            found: w.len(),
        });
    }
    let state = extract_features(w, &clf.feature_config)?;
    clf.classify_state(&state)
}
