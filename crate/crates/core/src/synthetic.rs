//! Seeded synthetic datasets with a known class signal.
//!
//! Each window is uniform random DNA with one of two class-specific motifs
//! written at a fixed offset. The motif block is the only place where the
//! classes differ, so its projection is separable by construction.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::ca::StateVector;
use crate::classifier::{Dataset, EncodedDataset, LabeledExample};
use crate::error::{Error, Result};
use crate::features::{encode_nucleotides, SequenceWindow};
use crate::rng::{stream, StreamRng};

const TAG_WINDOW: u64 = 21;
const TAG_SEQUENCE: u64 = 22;

#[derive(Clone, Debug, PartialEq)]
pub struct MotifSpec {
    pub window_len: usize,
    pub offset: usize,
    /// Motif for class 0 and class 1; equal lengths.
    pub motifs: [String; 2],
    pub class_names: [String; 2],
    pub per_class: usize,
}

impl Default for MotifSpec {
    fn default() -> Self {
        MotifSpec {
            window_len: 54,
            offset: 18,
            motifs: ["AACAACAACAACAACAAC".into(), "TTGTTGTTGTTGTTGTTG".into()],
            class_names: ["background".into(), "motif".into()],
            per_class: 200,
        }
    }
}

impl MotifSpec {
    pub fn motif_len(&self) -> usize {
        self.motifs[0].len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.motif_len();
        if m == 0 || self.motifs[1].len() != m {
            return Err(Error::Config("motifs must be non-empty and of equal length".into()));
        }
        if self.offset + m > self.window_len {
            return Err(Error::Config("motif does not fit inside the window".into()));
        }
        for motif in &self.motifs {
            SequenceWindow::new(motif)?;
        }
        Ok(())
    }
}

pub fn random_dna(len: usize, rng: &mut StreamRng) -> String {
    (0..len)
        .map(|_| *b"ACGT".choose(rng).expect("four bases") as char)
        .collect()
}

/// `per_class` windows of each class, interleaved class 0, class 1, ...
pub fn planted_motif_dataset(spec: &MotifSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut examples = Vec::with_capacity(2 * spec.per_class);
    for i in 0..spec.per_class {
        for label in 0..2 {
            let mut rng = stream(seed, &[TAG_WINDOW, i as u64, label as u64]);
            let mut seq = random_dna(spec.window_len, &mut rng);
            seq.replace_range(spec.offset..spec.offset + spec.motif_len(), &spec.motifs[label]);
            examples.push(LabeledExample {
                id: format!("{}_{i}", spec.class_names[label]),
                window: SequenceWindow::new(&seq)?,
                label,
            });
        }
    }
    Dataset::new(examples, spec.class_names.to_vec())
}

/// Encodes only `cells` bases starting at the motif offset.
pub fn motif_projection(data: &Dataset, spec: &MotifSpec, cells: usize) -> Result<EncodedDataset> {
    if cells == 0 || cells > spec.motif_len() {
        return Err(Error::Config(format!(
            "projection width {cells} must lie in 1..={}",
            spec.motif_len()
        )));
    }
    let states = data
        .examples
        .iter()
        .map(|e| {
            let part = &e.window.as_str()[spec.offset..spec.offset + cells];
            Ok(encode_nucleotides(&SequenceWindow::new(part)?))
        })
        .collect::<Result<Vec<StateVector>>>()?;
    EncodedDataset::from_parts(
        states,
        data.examples.iter().map(|e| e.label).collect(),
        data.class_count(),
    )
}

/// A random genome with motif-class windows planted at the given 0-based
/// offsets; everything else is random background.
pub fn genome_with_motifs(len: usize, spec: &MotifSpec, offsets: &[usize], seed: u64) -> Result<String> {
    spec.validate()?;
    let mut rng = stream(seed, &[TAG_SEQUENCE]);
    let mut seq = random_dna(len, &mut rng);
    for &o in offsets {
        if o + spec.window_len > len {
            return Err(Error::Config(format!("window at {o} does not fit in {len} bases")));
        }
        let start = o + spec.offset;
        seq.replace_range(start..start + spec.motif_len(), &spec.motifs[1]);
    }
    Ok(seq)
}

/// Stratified split: the first `test_per_class` windows of every class form
/// the held-out set.
pub fn holdout_split(data: &Dataset, test_per_class: usize) -> (Dataset, Dataset) {
    let mut seen = vec![0; data.class_count()];
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, e) in data.examples.iter().enumerate() {
        if seen[e.label] < test_per_class {
            test.push(i);
        } else {
            train.push(i);
        }
        seen[e.label] += 1;
    }
    (data.subset(&train), data.subset(&test))
}

/// Uniformly random window of `len` bases, for probing classifiers.
pub fn random_window(len: usize, rng: &mut StreamRng) -> SequenceWindow {
    SequenceWindow::new(&random_dna(len, rng)).expect("ACGT only")
}

/// Point-mutates each base with probability `rate`.
pub fn mutate_window(w: &SequenceWindow, rate: f64, rng: &mut StreamRng) -> SequenceWindow {
    let seq: String = w
        .as_str()
        .chars()
        .map(|c| {
            if rng.random_bool(rate) {
                *b"ACGT".choose(rng).expect("four bases") as char
            } else {
                c
            }
        })
        .collect();
    SequenceWindow::new(&seq).expect("ACGT only")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_shape_and_determinism() {
        let spec = MotifSpec::default();
        let d = planted_motif_dataset(&spec, 7).unwrap();
        assert_eq!(d.len(), 400);
        assert_eq!(d.class_counts(), vec![200, 200]);
        assert_eq!(d.window_len().unwrap(), 54);
        for e in &d.examples {
            assert_eq!(&e.window.as_str()[18..36], spec.motifs[e.label]);
        }
        assert_eq!(d, planted_motif_dataset(&spec, 7).unwrap());
    }

    #[test]
    fn projection_width_checked() {
        let spec = MotifSpec::default();
        let d = planted_motif_dataset(
            &MotifSpec {
                per_class: 2,
                ..spec.clone()
            },
            1,
        )
        .unwrap();
        assert_eq!(motif_projection(&d, &spec, 8).unwrap().cells(), 8);
        assert!(motif_projection(&d, &spec, 0).is_err());
        assert!(motif_projection(&d, &spec, 19).is_err());
    }

    #[test]
    fn holdout_is_stratified() {
        let d = planted_motif_dataset(
            &MotifSpec {
                per_class: 10,
                ..MotifSpec::default()
            },
            1,
        )
        .unwrap();
        let (train, test) = holdout_split(&d, 3);
        assert_eq!(test.class_counts(), vec![3, 3]);
        assert_eq!(train.class_counts(), vec![7, 7]);
    }
}
