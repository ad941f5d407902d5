//! Trains on the synthetic planted-motif set and reports held-out accuracy.

use std::time::Instant;

use maca_core::classifier::{classify, EncodedDataset, TrainingSetup};
use maca_core::clonal::{evolve, EvolutionConfig};
use maca_core::synthetic::{holdout_split, planted_motif_dataset, MotifSpec};
use maca_core::{EngineConfig, FeatureConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(7), |s| s.parse())?;
    let spec = MotifSpec::default();
    let data = planted_motif_dataset(&spec, seed)?;
    let (train, test) = holdout_split(&data, 50);
    let setup = TrainingSetup {
        feature_config: FeatureConfig::nucleotide(),
        engine: EngineConfig::default(),
        class_names: data.class_names.clone(),
        window_len: spec.window_len,
        seed,
    };
    let encoded = EncodedDataset::encode(&train, &setup.feature_config)?;
    let start = Instant::now();
    let out = evolve(
        &encoded,
        &setup,
        &EvolutionConfig {
            seed,
            ..EvolutionConfig::default()
        },
    )?;
    let correct = test
        .examples
        .iter()
        .filter(|e| {
            classify(&out.best, &e.window)
                .map(|p| p.class == e.label)
                .unwrap_or(false)
        })
        .count();
    print!("{}", out.trace.to_tsv());
    println!("rules: {}", out.best.rule_vector);
    println!(
        "affinity {:.4}  attractors {}  held-out accuracy {:.3}  ({:.1?})",
        out.best_affinity,
        out.best.attractor_map.len(),
        correct as f64 / test.len() as f64,
        start.elapsed()
    );
    Ok(())
}
