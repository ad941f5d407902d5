//! Fuzzy multiple-attractor cellular automata classifiers for DNA windows.
//!
//! A hybrid cellular automaton (one elementary rule per cell) is run from an
//! encoded window until it settles into an attractor; attractors are
//! labelled with the majority class of the training windows that reach
//! them. The rule vector itself is searched with a clonal-selection
//! optimizer. On top of the classifier sit a sliding-window genome scanner,
//! cross-validation, and the parsers and report writers used by the CLI.

pub mod ca;
pub mod classifier;
pub mod clonal;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod rng;
pub mod scan;
pub mod synthetic;

pub use ca::{
    decode_rule, enumerate_basins, eval_rule_fuzzy, find_attractor, quantize, step, AttractorResult,
    AttractorSignature, BasinCensus, EngineConfig, Rule, RuleVector, StateVector,
};
pub use classifier::{
    build_classifier, classify, fitness, AttractorMap, Dataset, EncodedDataset, LabeledExample, Prediction,
    TrainedClassifier,
};
pub use clonal::{evolve, EvolutionConfig, EvolutionTrace};
pub use error::{Error, Result};
pub use evaluation::{confusion, cross_validate, metrics, ConfusionMatrix, Metrics};
pub use features::{
    encode_nucleotides, extract_features, fit_scaler, FeatureConfig, InputMode, Measure, SequenceWindow,
};
pub use scan::{exon_table, merge_regions, probability_track, scan_windows, RegionRecord};
