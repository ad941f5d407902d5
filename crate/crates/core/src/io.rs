//! Input parsers, the model file format and report writers.
//!
//! Readers accept LF and CRLF line endings; writers emit LF. Report
//! coordinates are 1-based inclusive.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::ca::{AttractorSignature, Boundary, EngineConfig, Rule, RuleVector};
use crate::classifier::{AttractorEntry, AttractorMap, Dataset, LabeledExample, TrainedClassifier};
use crate::error::{Error, Result};
use crate::evaluation::CrossValidationReport;
use crate::features::{FeatureConfig, FeatureRange, InputMode, Measure, SequenceWindow};
use crate::scan::{ExonKind, ExonRow, FeatureKind, RegionRecord, Strand};

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FastaRecord {
    pub id: String,
    pub description: String,
    pub sequence: String,
}

impl FastaRecord {
    pub fn window(&self) -> SequenceWindow {
        SequenceWindow::new(&self.sequence).expect("parse_fasta validates residues")
    }
}

pub fn parse_fasta(text: &str) -> Result<Vec<FastaRecord>> {
    let mut records: Vec<(usize, FastaRecord)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            let header = header.trim();
            let (id, description) = match header.split_once(char::is_whitespace) {
                Some((id, rest)) => (id, rest.trim()),
                None => (header, ""),
            };
            if id.is_empty() {
                return Err(format_err(line_no, "header without an identifier"));
            }
            records.push((
                line_no,
                FastaRecord {
                    id: id.to_string(),
                    description: description.to_string(),
                    sequence: String::new(),
                },
            ));
            continue;
        }
        let Some((_, current)) = records.last_mut() else {
            return Err(format_err(line_no, "sequence data before the first '>' header"));
        };
        for ch in line.chars() {
            let up = ch.to_ascii_uppercase();
            if !matches!(up, 'A' | 'C' | 'G' | 'T' | 'N') {
                return Err(format_err(line_no, format!("illegal residue {ch:?}")));
            }
            current.sequence.push(up);
        }
    }
    records
        .into_iter()
        .map(|(line, r)| {
            if r.sequence.is_empty() {
                Err(format_err(line, format!("record {:?} has no sequence", r.id)))
            } else {
                Ok(r)
            }
        })
        .collect()
}

pub fn write_fasta(records: &[FastaRecord], width: usize) -> String {
    let width = width.max(1);
    let mut out = String::new();
    for r in records {
        out.push('>');
        out.push_str(&r.id);
        if !r.description.is_empty() {
            out.push(' ');
            out.push_str(&r.description);
        }
        out.push('\n');
        for chunk in r.sequence.as_bytes().chunks(width) {
            out.push_str(std::str::from_utf8(chunk).expect("ASCII"));
            out.push('\n');
        }
    }
    out
}

/// Parses `id<TAB>label<TAB>sequence` lines; `#` starts a comment line.
/// Class indices follow the order in which labels first appear.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut class_names: Vec<String> = Vec::new();
    let mut examples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(format_err(
                line_no,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        let (id, label, seq) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        if label.is_empty() {
            return Err(format_err(line_no, "empty label"));
        }
        if seq.is_empty() {
            return Err(format_err(line_no, "empty sequence"));
        }
        let window = SequenceWindow::new(seq).map_err(|e| format_err(line_no, e.to_string()))?;
        let label = match class_names.iter().position(|c| c == label) {
            Some(i) => i,
            None => {
                class_names.push(label.to_string());
                class_names.len() - 1
            }
        };
        examples.push(LabeledExample {
            id: id.to_string(),
            window,
            label,
        });
    }
    Dataset::new(examples, class_names)
}

pub fn write_dataset(data: &Dataset) -> String {
    let mut out = String::new();
    for e in &data.examples {
        out.push_str(&format!("{}\t{}\t{}\n", e.id, data.class_names[e.label], e.window));
    }
    out
}

/// A real number written with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite real"));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v.is_finite() {
            Ok(Real(v))
        } else {
            Err(D::Error::custom("non-finite real"))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EngineSection {
    max_steps: usize,
    q: u8,
    epsilon: Real,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeSection {
    min: Real,
    max: Real,
    constant: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttractorSection {
    signature: String,
    class: usize,
    purity: Real,
    support: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    mode: InputMode,
    window_length: usize,
    rule_vector: Vec<u32>,
    boundary: Boundary,
    engine: EngineSection,
    class_names: Vec<String>,
    class_counts: Vec<usize>,
    measures: Vec<Measure>,
    scaler: Option<Vec<RangeSection>>,
    attractors: Vec<AttractorSection>,
    seed: u64,
}

fn hex_width(q: u8) -> usize {
    usize::from(q).div_ceil(4)
}

pub fn signature_to_hex(sig: &AttractorSignature) -> String {
    let width = hex_width(sig.depth());
    sig.levels().iter().map(|l| format!("{l:0width$x}")).collect()
}

pub fn signature_from_hex(text: &str, q: u8, cells: usize) -> Result<AttractorSignature> {
    let width = hex_width(q);
    if width == 0 || text.len() != width * cells || !text.is_ascii() {
        return Err(Error::Malformed(format!(
            "signature {text:?} does not hold {cells} levels of {width} hex digits"
        )));
    }
    let levels = (0..cells)
        .map(|i| {
            u16::from_str_radix(&text[i * width..(i + 1) * width], 16)
                .map_err(|_| Error::Malformed(format!("bad hex in signature {text:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    AttractorSignature::new(levels, q).map_err(|e| Error::Malformed(e.to_string()))
}

/// Canonical text form of a trained classifier.
pub fn save_model(clf: &TrainedClassifier) -> Result<String> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        mode: clf.feature_config.mode,
        window_length: clf.window_len,
        rule_vector: clf.rule_vector.rules().iter().map(|&r| u32::from(r)).collect(),
        boundary: clf.rule_vector.boundary(),
        engine: EngineSection {
            max_steps: clf.engine.max_steps,
            q: clf.engine.q,
            epsilon: Real(clf.engine.epsilon),
        },
        class_names: clf.class_names.clone(),
        class_counts: clf.class_counts.clone(),
        measures: clf.feature_config.measures.clone(),
        scaler: clf.feature_config.scaler.as_ref().map(|ranges| {
            ranges
                .iter()
                .map(|r| RangeSection {
                    min: Real(r.min),
                    max: Real(r.max),
                    constant: r.constant,
                })
                .collect()
        }),
        attractors: clf
            .attractor_map
            .iter()
            .map(|(sig, e)| AttractorSection {
                signature: signature_to_hex(sig),
                class: e.class,
                purity: Real(e.purity),
                support: e.support,
            })
            .collect(),
        seed: clf.seed,
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Malformed(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn json_error(e: serde_json::Error) -> Error {
    match e.classify() {
        serde_json::error::Category::Eof => Error::Truncated,
        _ => Error::Malformed(e.to_string()),
    }
}

pub fn load_model(text: &str) -> Result<TrainedClassifier> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing format_version".into()))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::Version(u32::try_from(version).unwrap_or(u32::MAX)));
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))?;

    let rule_vector = RuleVector::from_numbers(&file.rule_vector)?;
    let engine = EngineConfig {
        max_steps: file.engine.max_steps,
        q: file.engine.q,
        epsilon: file.engine.epsilon.0,
    };
    engine.validate().map_err(|e| Error::Malformed(e.to_string()))?;
    let feature_config = FeatureConfig {
        mode: file.mode,
        measures: file.measures,
        scaler: file.scaler.map(|ranges| {
            ranges
                .into_iter()
                .map(|r| FeatureRange {
                    min: r.min.0,
                    max: r.max.0,
                    constant: r.constant,
                })
                .collect()
        }),
    };
    let malformed = |m: String| Err(Error::Malformed(m));
    feature_config.validate().map_err(|e| Error::Malformed(e.to_string()))?;
    match feature_config.mode {
        InputMode::Nucleotide if feature_config.scaler.is_some() || !feature_config.measures.is_empty() => {
            return malformed("nucleotide mode carries no measures or scaler".into())
        }
        InputMode::Features if feature_config.scaler.is_none() => {
            return malformed("features mode requires a fitted scaler".into())
        }
        _ => {}
    }
    if file.window_length == 0 {
        return malformed("window length must be positive".into());
    }
    let cells = feature_config.state_len(file.window_length);
    if rule_vector.len() != cells {
        return malformed(format!("rule vector has {} cells, expected {cells}", rule_vector.len()));
    }
    let classes = file.class_names.len();
    if classes == 0 || file.class_counts.len() != classes {
        return malformed(format!(
            "{} class names with {} class counts",
            classes,
            file.class_counts.len()
        ));
    }
    if file.attractors.is_empty() {
        return malformed("attractor map is empty".into());
    }
    let mut entries = Vec::with_capacity(file.attractors.len());
    for a in &file.attractors {
        let sig = signature_from_hex(&a.signature, engine.q, cells)?;
        if a.class >= classes {
            return malformed(format!("attractor class {} outside {classes} classes", a.class));
        }
        if a.support == 0 || !(a.purity.0 > 0.0 && a.purity.0 <= 1.0) {
            return malformed(format!(
                "attractor {} has support {} and purity {}",
                a.signature, a.support, a.purity.0
            ));
        }
        if let Some((prev, _)) = entries.last() {
            if &sig <= prev {
                return malformed("attractor entries are not in strictly increasing signature order".into());
            }
        }
        entries.push((
            sig,
            AttractorEntry {
                class: a.class,
                purity: a.purity.0,
                support: a.support,
            },
        ));
    }

    Ok(TrainedClassifier {
        rule_vector,
        attractor_map: AttractorMap::from_entries(entries),
        feature_config,
        engine,
        class_names: file.class_names,
        class_counts: file.class_counts,
        window_len: file.window_length,
        seed: file.seed,
    })
}

pub const SPLICE_HEADER: [&str; 6] = ["G", "Str", "Feature", "Start", "End", "Score"];
pub const EXON_HEADER: [&str; 9] = [
    "Gene number",
    "Element number",
    "Exons/UTR",
    "Strand",
    "Left end",
    "Right end",
    "Length",
    "Phase",
    "Frame",
];
pub const TRACK_HEADER: [&str; 2] = ["position", "probability"];
pub const METRICS_HEADER: [&str; 2] = ["key", "value"];

/// Rows for one of the report layouts.
#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Splice(Vec<RegionRecord>),
    Exons(Vec<ExonRow>),
    /// Per-position probabilities, position 1 first.
    Track(Vec<f64>),
    Metrics(Vec<(String, String)>),
}

fn push_row<S: AsRef<str>>(out: &mut String, cols: &[S]) {
    for (i, c) in cols.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(c.as_ref());
    }
    out.push('\n');
}

fn check_regions(rows: &[RegionRecord]) -> Result<()> {
    for r in rows {
        if r.start == 0 || r.start > r.end {
            return Err(Error::Emit(format!(
                "region [{}, {}] is not a 1-based interval",
                r.start, r.end
            )));
        }
        if !r.score.is_finite() {
            return Err(Error::Emit(format!(
                "region [{}, {}] has a non-finite score",
                r.start, r.end
            )));
        }
    }
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.gene == b.gene && a.strand == b.strand && b.start <= a.end {
            return Err(Error::Emit(format!(
                "regions [{}, {}] and [{}, {}] are unsorted or overlap",
                a.start, a.end, b.start, b.end
            )));
        }
    }
    Ok(())
}

fn phase_label(p: u8) -> Result<String> {
    if (1..=3).contains(&p) {
        Ok(format!("+{p}"))
    } else {
        Err(Error::Emit(format!("phase/frame {p} outside 1..=3")))
    }
}

pub fn emit_report(report: &Report) -> Result<String> {
    let mut out = String::new();
    match report {
        Report::Splice(rows) => {
            check_regions(rows)?;
            push_row(&mut out, &SPLICE_HEADER);
            for r in rows {
                push_row(
                    &mut out,
                    &[
                        r.gene.to_string(),
                        r.strand.symbol().to_string(),
                        r.feature.label().to_string(),
                        r.start.to_string(),
                        r.end.to_string(),
                        format!("{:.2}", r.score),
                    ],
                );
            }
        }
        Report::Exons(rows) => {
            push_row(&mut out, &EXON_HEADER);
            for r in rows {
                if r.left == 0 || r.left > r.right || r.length != r.right - r.left + 1 {
                    return Err(Error::Emit(format!(
                        "exon [{}, {}] with length {} violates length = right - left + 1",
                        r.left, r.right, r.length
                    )));
                }
                push_row(
                    &mut out,
                    &[
                        r.gene.to_string(),
                        r.element.to_string(),
                        r.kind.label().to_string(),
                        r.strand.symbol().to_string(),
                        r.left.to_string(),
                        r.right.to_string(),
                        r.length.to_string(),
                        phase_label(r.phase)?,
                        phase_label(r.frame)?,
                    ],
                );
            }
        }
        Report::Track(values) => {
            push_row(&mut out, &TRACK_HEADER);
            for (i, &v) in values.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Emit(format!(
                        "track value {v} at position {} outside [0, 1]",
                        i + 1
                    )));
                }
                push_row(&mut out, &[(i + 1).to_string(), format!("{v:.4}")]);
            }
        }
        Report::Metrics(pairs) => {
            push_row(&mut out, &METRICS_HEADER);
            for (k, v) in pairs {
                let bad = |s: &str| s.is_empty() || s.contains(['\t', '\n', '\r']);
                if bad(k) || v.contains(['\t', '\n', '\r']) {
                    return Err(Error::Emit(format!(
                        "metric {k:?} cannot be written as a key-value line"
                    )));
                }
                push_row(&mut out, &[k.as_str(), v.as_str()]);
            }
        }
    }
    Ok(out)
}

fn report_lines<'a>(text: &'a str, header: &[&str]) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
    let (_, first) = lines.next().ok_or_else(|| format_err(1, "missing header"))?;
    if first.split('\t').collect::<Vec<_>>() != header {
        return Err(format_err(1, format!("unexpected header {first:?}")));
    }
    let width = header.len();
    let rows: Vec<(usize, Vec<&str>)> = lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l.split('\t').collect::<Vec<_>>()))
        .collect();
    if let Some((line, cols)) = rows.iter().find(|(_, c)| c.len() != width) {
        return Err(format_err(
            *line,
            format!("expected {width} columns, found {}", cols.len()),
        ));
    }
    Ok(rows.into_iter())
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| format_err(line, format!("cannot parse {s:?}")))
}

fn parse_phase(line: usize, s: &str) -> Result<u8> {
    match s {
        "+1" => Ok(1),
        "+2" => Ok(2),
        "+3" => Ok(3),
        _ => Err(format_err(line, format!("bad phase/frame {s:?}"))),
    }
}

pub fn parse_splice_report(text: &str) -> Result<Vec<RegionRecord>> {
    report_lines(text, &SPLICE_HEADER)?
        .map(|(line, c)| {
            Ok(RegionRecord {
                gene: num(line, c[0])?,
                strand: Strand::parse(c[1]).ok_or_else(|| format_err(line, "bad strand"))?,
                feature: FeatureKind::parse(c[2]).ok_or_else(|| format_err(line, "bad feature"))?,
                start: num(line, c[3])?,
                end: num(line, c[4])?,
                score: num(line, c[5])?,
            })
        })
        .collect()
}

pub fn parse_exon_report(text: &str) -> Result<Vec<ExonRow>> {
    report_lines(text, &EXON_HEADER)?
        .map(|(line, c)| {
            if c[2] != "Internal" {
                return Err(format_err(line, format!("unknown element kind {:?}", c[2])));
            }
            Ok(ExonRow {
                gene: num(line, c[0])?,
                element: num(line, c[1])?,
                kind: ExonKind::Internal,
                strand: Strand::parse(c[3]).ok_or_else(|| format_err(line, "bad strand"))?,
                left: num(line, c[4])?,
                right: num(line, c[5])?,
                length: num(line, c[6])?,
                phase: parse_phase(line, c[7])?,
                frame: parse_phase(line, c[8])?,
            })
        })
        .collect()
}

pub fn parse_track_report(text: &str) -> Result<Vec<f64>> {
    report_lines(text, &TRACK_HEADER)?
        .enumerate()
        .map(|(i, (line, c))| {
            let pos: usize = num(line, c[0])?;
            if pos != i + 1 {
                return Err(format_err(line, format!("expected position {}, found {pos}", i + 1)));
            }
            num(line, c[1])
        })
        .collect()
}

pub fn parse_metrics_report(text: &str) -> Result<Vec<(String, String)>> {
    Ok(report_lines(text, &METRICS_HEADER)?
        .map(|(_, c)| (c[0].to_string(), c[1].to_string()))
        .collect())
}

/// Flat key-value listing of a cross-validation run.
pub fn cross_validation_pairs(report: &CrossValidationReport) -> Vec<(String, String)> {
    let mut pairs = vec![
        ("folds".to_string(), report.folds.len().to_string()),
        ("positive_class".to_string(), report.positive_class.to_string()),
    ];
    for (name, s) in [
        ("accuracy", report.accuracy),
        ("sensitivity", report.sensitivity),
        ("specificity", report.specificity),
        ("precision", report.precision),
        ("mcc", report.mcc),
    ] {
        pairs.push((format!("{name}_mean"), format!("{:.6}", s.mean)));
        pairs.push((format!("{name}_stddev"), format!("{:.6}", s.stddev)));
    }
    for f in &report.folds {
        let m = &f.metrics;
        let p = format!("fold{}", f.fold);
        pairs.push((format!("{p}_train"), f.train_size.to_string()));
        pairs.push((format!("{p}_test"), f.test_size.to_string()));
        pairs.push((format!("{p}_training_affinity"), format!("{:.6}", f.training_affinity)));
        for (name, v) in [
            ("accuracy", m.accuracy),
            ("sensitivity", m.sensitivity),
            ("specificity", m.specificity),
            ("precision", m.precision),
            ("mcc", m.mcc),
        ] {
            pairs.push((format!("{p}_{name}"), format!("{v:.6}")));
        }
        let mut undefined = Vec::new();
        for (name, flag) in [
            ("sensitivity", m.undefined.sensitivity),
            ("specificity", m.undefined.specificity),
            ("precision", m.undefined.precision),
            ("mcc", m.undefined.mcc),
        ] {
            if flag {
                undefined.push(name);
            }
        }
        let flags = if undefined.is_empty() {
            "none".to_string()
        } else {
            undefined.join(",")
        };
        pairs.push((format!("{p}_undefined"), flags));
    }
    pairs
}

/// Parses a comma-separated rule list such as `204,204,51`.
pub fn parse_rule_list(text: &str) -> Result<RuleVector> {
    let numbers = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Argument(format!("rule {t:?} is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    RuleVector::from_numbers(&numbers)
}

/// Accepts a single rule for convenience in `parse_rule_list` callers.
pub fn rule_from_str(text: &str) -> Result<Rule> {
    let n: u32 = text
        .trim()
        .parse()
        .map_err(|_| Error::Argument(format!("rule {text:?} is not a number")))?;
    Rule::new(n)
}
