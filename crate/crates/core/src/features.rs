//! DNA windows and their encodings as cell states.
//!
//! Two input modes exist. In nucleotide mode every base becomes one cell.
//! In features mode a window is summarized by a fixed list of coding
//! measures, each min-max scaled against the training set. New measures go
//! into [`Measure`], [`Measure::width`] and [`Measure::compute`]; the scaler
//! and model format pick them up from there.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ca::StateVector;
use crate::error::{Error, Result};

/// Window lengths the classifier is designed around.
pub const STANDARD_WINDOW_LENGTHS: [usize; 5] = [54, 108, 162, 252, 354];

const BASES: [u8; 4] = *b"ACGT";

/// A stretch of DNA over `A`, `C`, `G`, `T` and `N`, stored uppercase.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SequenceWindow {
    symbols: Vec<u8>,
}

impl SequenceWindow {
    pub fn new(text: &str) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::InsufficientLength { needed: 1, found: 0 });
        }
        let mut symbols = Vec::with_capacity(text.len());
        for (i, ch) in text.chars().enumerate() {
            let up = ch.to_ascii_uppercase();
            match up {
                'A' | 'C' | 'G' | 'T' | 'N' => symbols.push(up as u8),
                _ => {
                    return Err(Error::IllegalSymbol {
                        position: i + 1,
                        symbol: ch,
                    })
                }
            }
        }
        Ok(SequenceWindow { symbols })
    }

    /// Wraps bytes already known to be uppercase `ACGTN`.
    pub(crate) fn from_validated(symbols: &[u8]) -> Self {
        debug_assert!(symbols.iter().all(|b| b"ACGTN".contains(b)));
        SequenceWindow {
            symbols: symbols.to_vec(),
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.symbols
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.symbols).expect("ASCII symbols")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn reverse_complement(&self) -> Self {
        let symbols = self
            .symbols
            .iter()
            .rev()
            .map(|&b| match b {
                b'A' => b'T',
                b'C' => b'G',
                b'G' => b'C',
                b'T' => b'A',
                other => other,
            })
            .collect();
        SequenceWindow { symbols }
    }
}

impl std::fmt::Display for SequenceWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn nucleotide_level(b: u8) -> f64 {
    match b {
        b'A' => 0.0,
        b'C' => 1.0 / 3.0,
        b'G' => 2.0 / 3.0,
        b'T' => 1.0,
        _ => 0.5,
    }
}

/// A→0, C→1/3, G→2/3, T→1, N→0.5.
pub fn encode_nucleotides(w: &SequenceWindow) -> StateVector {
    StateVector::new(w.symbols.iter().map(|&b| nucleotide_level(b)).collect()).expect("nucleotide levels lie in [0, 1]")
}

/// Maps each cell back to the nearest of the four base levels.
pub fn decode_nucleotides(state: &StateVector) -> SequenceWindow {
    let symbols = state
        .cells()
        .iter()
        .map(|&v| BASES[((v * 3.0).round() as usize).min(3)])
        .collect();
    SequenceWindow { symbols }
}

fn base_index(b: u8) -> Option<usize> {
    BASES.iter().position(|&x| x == b)
}

/// Per-base codon-position asymmetry `max_p c / (min_p c + 1)`, in ACGT order.
///
/// Codon positions are counted from the first base of the window.
pub fn position_asymmetry(w: &SequenceWindow) -> Result<[f64; 4]> {
    if w.len() < 3 {
        return Err(Error::InsufficientLength {
            needed: 3,
            found: w.len(),
        });
    }
    let mut counts = [[0u32; 3]; 4];
    for (i, &b) in w.symbols.iter().enumerate() {
        if let Some(k) = base_index(b) {
            counts[k][i % 3] += 1;
        }
    }
    Ok(counts.map(|c| {
        let max = c.iter().copied().max().unwrap_or(0);
        let min = c.iter().copied().min().unwrap_or(0);
        f64::from(max) / f64::from(min + 1)
    }))
}

/// Base frequencies among the non-`N` symbols, in ACGT order.
pub fn base_composition(w: &SequenceWindow) -> [f64; 4] {
    let mut counts = [0u32; 4];
    for &b in &w.symbols {
        if let Some(k) = base_index(b) {
            counts[k] += 1;
        }
    }
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return [0.0; 4];
    }
    counts.map(|c| f64::from(c) / f64::from(total))
}

/// Normalized spectral energy of the base indicator sequences at period 3.
pub fn periodicity3(w: &SequenceWindow) -> f64 {
    let n = w.len();
    if n == 0 {
        return 0.0;
    }
    // e^{-2πij/3} only takes three values
    let phase: [(f64, f64); 3] = [0, 1, 2].map(|j| {
        let theta = -2.0 * PI * f64::from(j) / 3.0;
        (theta.cos(), theta.sin())
    });
    let mut acc = [(0.0f64, 0.0f64); 4];
    for (j, &b) in w.symbols.iter().enumerate() {
        if let Some(k) = base_index(b) {
            let (re, im) = phase[j % 3];
            acc[k].0 += re;
            acc[k].1 += im;
        }
    }
    let energy: f64 = acc.iter().map(|(re, im)| re * re + im * im).sum();
    (energy / (n as f64 * n as f64)).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    PositionAsymmetry,
    BaseComposition,
    Periodicity3,
}

impl Measure {
    /// Declaration order; features are always concatenated in this order.
    pub const ALL: [Measure; 3] = [
        Measure::PositionAsymmetry,
        Measure::BaseComposition,
        Measure::Periodicity3,
    ];

    pub fn width(self) -> usize {
        match self {
            Measure::PositionAsymmetry | Measure::BaseComposition => 4,
            Measure::Periodicity3 => 1,
        }
    }

    pub fn compute(self, w: &SequenceWindow, out: &mut Vec<f64>) -> Result<()> {
        match self {
            Measure::PositionAsymmetry => out.extend(position_asymmetry(w)?),
            Measure::BaseComposition => out.extend(base_composition(w)),
            Measure::Periodicity3 => out.push(periodicity3(w)),
        }
        Ok(())
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::PositionAsymmetry => "position_asymmetry",
            Measure::BaseComposition => "base_composition",
            Measure::Periodicity3 => "periodicity3",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown measure {name:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    #[default]
    Nucleotide,
    Features,
}

impl std::str::FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nucleotide" => Ok(InputMode::Nucleotide),
            "features" => Ok(InputMode::Features),
            other => Err(Error::Config(format!("unknown input mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
    pub constant: bool,
}

impl FeatureRange {
    pub fn scale(&self, v: f64) -> f64 {
        if self.constant {
            0.5
        } else {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub mode: InputMode,
    pub measures: Vec<Measure>,
    pub scaler: Option<Vec<FeatureRange>>,
}

impl FeatureConfig {
    pub fn nucleotide() -> Self {
        FeatureConfig {
            mode: InputMode::Nucleotide,
            measures: Vec::new(),
            scaler: None,
        }
    }

    /// Unfitted features-mode configuration; measures are put in declaration order.
    pub fn features(measures: &[Measure]) -> Result<Self> {
        let mut measures = measures.to_vec();
        measures.sort();
        measures.dedup();
        if measures.is_empty() {
            return Err(Error::Config("features mode needs at least one measure".into()));
        }
        Ok(FeatureConfig {
            mode: InputMode::Features,
            measures,
            scaler: None,
        })
    }

    pub fn feature_width(&self) -> usize {
        self.measures.iter().map(|m| m.width()).sum()
    }

    /// Number of cells produced for a window of `window_len` bases.
    pub fn state_len(&self, window_len: usize) -> usize {
        match self.mode {
            InputMode::Nucleotide => window_len,
            InputMode::Features => self.feature_width(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == InputMode::Features {
            if self.measures.is_empty() {
                return Err(Error::Config("features mode needs at least one measure".into()));
            }
            let mut sorted = self.measures.clone();
            sorted.sort();
            sorted.dedup();
            if sorted != self.measures {
                return Err(Error::Config("measures must be unique and in declaration order".into()));
            }
            if let Some(ranges) = &self.scaler {
                if ranges.len() != self.feature_width() {
                    return Err(Error::Config(format!(
                        "scaler has {} ranges for {} features",
                        ranges.len(),
                        self.feature_width()
                    )));
                }
                for r in ranges {
                    let ok = r.min.is_finite()
                        && r.max.is_finite()
                        && if r.constant { r.min == r.max } else { r.min < r.max };
                    if !ok {
                        return Err(Error::Config(format!("invalid scaler range [{}, {}]", r.min, r.max)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Unscaled measure values in declaration order.
pub fn raw_features(w: &SequenceWindow, measures: &[Measure]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for m in measures {
        m.compute(w, &mut out)?;
    }
    Ok(out)
}

pub fn extract_features(w: &SequenceWindow, cfg: &FeatureConfig) -> Result<StateVector> {
    match cfg.mode {
        InputMode::Nucleotide => Ok(encode_nucleotides(w)),
        InputMode::Features => {
            let ranges = cfg
                .scaler
                .as_ref()
                .ok_or_else(|| Error::Config("feature scaler has not been fitted".into()))?;
            let raw = raw_features(w, &cfg.measures)?;
            if raw.len() != ranges.len() {
                return Err(Error::Shape {
                    expected: ranges.len(),
                    found: raw.len(),
                });
            }
            let scaled = raw.iter().zip(ranges).map(|(&v, r)| r.scale(v)).collect();
            StateVector::new(scaled)
        }
    }
}

/// Learns per-feature ranges over `windows`. Nucleotide mode needs no scaler
/// and is returned unchanged.
pub fn fit_scaler<'a, I>(windows: I, cfg: &FeatureConfig) -> Result<FeatureConfig>
where
    I: IntoIterator<Item = &'a SequenceWindow>,
{
    let mut windows = windows.into_iter().peekable();
    if windows.peek().is_none() {
        return Err(Error::Config("cannot fit a scaler on an empty training set".into()));
    }
    if cfg.mode == InputMode::Nucleotide {
        return Ok(FeatureConfig {
            scaler: None,
            ..cfg.clone()
        });
    }
    let width = cfg.feature_width();
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for w in windows {
        let raw = raw_features(w, &cfg.measures)?;
        for (k, v) in raw.into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let ranges = lo
        .into_iter()
        .zip(hi)
        .map(|(min, max)| FeatureRange {
            min,
            max,
            constant: min >= max,
        })
        .map(|r| {
            if r.constant {
                FeatureRange { max: r.min, ..r }
            } else {
                r
            }
        })
        .collect();
    Ok(FeatureConfig {
        scaler: Some(ranges),
        ..cfg.clone()
    })
}
