//! Sliding-window scanning of long sequences and region reporting.

use serde::{Deserialize, Serialize};

use crate::classifier::{Prediction, TrainedClassifier};
use crate::error::{Error, Result};
use crate::features::{extract_features, SequenceWindow};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    /// 0-based start.
    pub offset: usize,
    pub length: usize,
    pub prediction: Prediction,
}

/// Number of windows of length `window` at the given stride.
pub fn window_count(sequence_len: usize, window: usize, stride: usize) -> usize {
    if stride == 0 || window == 0 || sequence_len < window {
        0
    } else {
        (sequence_len - window) / stride + 1
    }
}

pub fn scan_windows(
    clf: &TrainedClassifier,
    sequence: &SequenceWindow,
    stride: usize,
) -> Result<Vec<WindowPrediction>> {
    if stride == 0 {
        return Err(Error::Argument("stride must be at least 1".into()));
    }
    let w = clf.window_len;
    if sequence.len() < w {
        return Err(Error::Scan {
            sequence: sequence.len(),
            window: w,
        });
    }
    let bytes = sequence.as_bytes();
    (0..window_count(sequence.len(), w, stride))
        .map(|i| {
            let offset = i * stride;
            let window = SequenceWindow::from_validated(&bytes[offset..offset + w]);
            let state = extract_features(&window, &clf.feature_config)?;
            Ok(WindowPrediction {
                offset,
                length: w,
                prediction: clf.classify_state(&state)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strand {
    #[serde(rename = "+")]
    Forward,
    #[serde(rename = "-")]
    Reverse,
}

impl Strand {
    pub fn symbol(self) -> &'static str {
        match self {
            Strand::Forward => "+",
            Strand::Reverse => "-",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+" => Some(Strand::Forward),
            "-" => Some(Strand::Reverse),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    /// First coding segment.
    CDSf,
    /// Internal coding segment.
    CDSi,
    Promoter,
}

impl FeatureKind {
    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::CDSf => "CDSf",
            FeatureKind::CDSi => "CDSi",
            FeatureKind::Promoter => "promoter",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CDSf" => Some(FeatureKind::CDSf),
            "CDSi" => Some(FeatureKind::CDSi),
            "promoter" => Some(FeatureKind::Promoter),
            _ => None,
        }
    }
}

/// What kind of element the positive class stands for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionModel {
    #[default]
    Coding,
    Promoter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub gene: u32,
    pub strand: Strand,
    pub feature: FeatureKind,
    /// 1-based inclusive.
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeConfig {
    pub min_prob: f64,
    pub max_gap: usize,
    pub model: RegionModel,
    pub strand: Strand,
    pub gene: u32,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            min_prob: 0.5,
            max_gap: 0,
            model: RegionModel::Coding,
            strand: Strand::Forward,
            gene: 1,
        }
    }
}

/// `log2(p / (1 - p))` with `p` clamped to `[0.01, 0.99]`.
pub fn log_odds(p: f64) -> f64 {
    let p = p.clamp(0.01, 0.99);
    (p / (1.0 - p)).log2()
}

/// Merges qualifying windows into 1-based inclusive regions.
///
/// A window qualifies when it predicts `positive_class` with probability at
/// least `cfg.min_prob`. Qualifying windows that overlap, touch, or sit no
/// more than `cfg.max_gap` bases apart form one region, scored by the sum of
/// their clamped log-odds.
pub fn merge_regions(
    preds: &[WindowPrediction],
    positive_class: usize,
    cfg: &MergeConfig,
) -> Result<Vec<RegionRecord>> {
    if preds.windows(2).any(|p| p[1].offset < p[0].offset) {
        return Err(Error::Argument("window predictions must be sorted by offset".into()));
    }
    let mut regions: Vec<RegionRecord> = Vec::new();
    // end is 1-based inclusive, equal to the 0-based exclusive end
    for wp in preds
        .iter()
        .filter(|wp| wp.prediction.class == positive_class && wp.prediction.probability >= cfg.min_prob)
    {
        let score = log_odds(wp.prediction.probability);
        let end = wp.offset + wp.length;
        match regions.last_mut() {
            Some(last) if wp.offset <= last.end + cfg.max_gap => {
                last.end = last.end.max(end);
                last.score += score;
            }
            _ => {
                let feature = match (cfg.model, regions.is_empty()) {
                    (RegionModel::Promoter, _) => FeatureKind::Promoter,
                    (RegionModel::Coding, true) => FeatureKind::CDSf,
                    (RegionModel::Coding, false) => FeatureKind::CDSi,
                };
                regions.push(RegionRecord {
                    gene: cfg.gene,
                    strand: cfg.strand,
                    feature,
                    start: wp.offset + 1,
                    end,
                    score,
                });
            }
        }
    }
    Ok(regions)
}

/// Maps regions found on the reverse complement of a sequence of length
/// `sequence_len` back onto forward coordinates, keeping them sorted.
pub fn to_forward_coordinates(regions: &mut [RegionRecord], sequence_len: usize) {
    for r in regions.iter_mut() {
        let (s, e) = (r.start, r.end);
        r.start = sequence_len - e + 1;
        r.end = sequence_len - s + 1;
    }
    regions.reverse();
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExonKind {
    Internal,
}

impl ExonKind {
    pub fn label(self) -> &'static str {
        "Internal"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExonRow {
    pub gene: u32,
    pub element: u32,
    pub kind: ExonKind,
    pub strand: Strand,
    pub left: usize,
    pub right: usize,
    pub length: usize,
    /// 1..=3, rendered `+1`..`+3`.
    pub phase: u8,
    pub frame: u8,
}

/// Exon boundary rows for sorted, disjoint regions.
///
/// Elements are numbered per gene. Phase is one plus the coding length of
/// the gene's earlier elements modulo 3; frame is one plus `(left - 1) mod 3`.
pub fn exon_table(regions: &[RegionRecord]) -> Result<Vec<ExonRow>> {
    for r in regions {
        if r.start == 0 || r.start > r.end {
            return Err(Error::Argument(format!(
                "region [{}, {}] is not a valid 1-based interval",
                r.start, r.end
            )));
        }
    }
    for pair in regions.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.gene == b.gene && b.start <= a.end {
            return Err(Error::Argument(format!(
                "regions [{}, {}] and [{}, {}] overlap or are unsorted",
                a.start, a.end, b.start, b.end
            )));
        }
    }
    let mut rows = Vec::with_capacity(regions.len());
    let mut current_gene = None;
    let mut element = 0;
    let mut coding = 0usize;
    for r in regions {
        if current_gene != Some(r.gene) {
            current_gene = Some(r.gene);
            element = 0;
            coding = 0;
        }
        element += 1;
        let length = r.end - r.start + 1;
        rows.push(ExonRow {
            gene: r.gene,
            element,
            kind: ExonKind::Internal,
            strand: r.strand,
            left: r.start,
            right: r.end,
            length,
            phase: (coding % 3) as u8 + 1,
            frame: ((r.start - 1) % 3) as u8 + 1,
        });
        coding += length;
    }
    Ok(rows)
}

/// Mean positive-class probability of the windows covering each position;
/// uncovered positions get 0.
pub fn probability_track(
    preds: &[WindowPrediction],
    sequence_len: usize,
    positive_class: usize,
    class_count: usize,
) -> Vec<f64> {
    // difference arrays for running sum and coverage
    let mut sum = vec![0.0; sequence_len + 1];
    let mut cover = vec![0i64; sequence_len + 1];
    for wp in preds {
        let end = (wp.offset + wp.length).min(sequence_len);
        if wp.offset >= end {
            continue;
        }
        let p = wp.prediction.probability_of(positive_class, class_count);
        sum[wp.offset] += p;
        sum[end] -= p;
        cover[wp.offset] += 1;
        cover[end] -= 1;
    }
    let mut running_sum = 0.0;
    let mut running_cover = 0;
    let mut track = Vec::with_capacity(sequence_len);
    for i in 0..sequence_len {
        running_sum += sum[i];
        running_cover += cover[i];
        track.push(if running_cover > 0 {
            (running_sum / running_cover as f64).clamp(0.0, 1.0)
        } else {
            0.0
        });
    }
    track
}

/// Per-position count of covering windows.
pub fn coverage_counts(preds: &[WindowPrediction], sequence_len: usize) -> Vec<usize> {
    let mut counts = vec![0; sequence_len];
    for wp in preds {
        for c in counts.iter_mut().skip(wp.offset).take(wp.length) {
            *c += 1;
        }
    }
    counts
}
