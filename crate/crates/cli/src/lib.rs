//! `maca` command-line front end.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 for usage errors, 2 for data and format
//! errors. Output files are written to a temporary sibling and renamed into
//! place only once the whole subcommand has succeeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use maca_core::classifier::{classify, EncodedDataset, TrainingSetup};
use maca_core::clonal::{evolve, EvolutionConfig};
use maca_core::evaluation::{cross_validate, CrossValidationSetup};
use maca_core::features::STANDARD_WINDOW_LENGTHS;
use maca_core::io::{
    cross_validation_pairs, emit_report, load_model, parse_dataset, parse_fasta, parse_rule_list, save_model, Report,
};
use maca_core::scan::{
    exon_table, merge_regions, probability_track, scan_windows, to_forward_coordinates, MergeConfig, RegionModel,
    Strand,
};
use maca_core::{enumerate_basins, fit_scaler, EngineConfig, FeatureConfig, Measure, Rule, SequenceWindow};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "MACA_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "maca", version, about = "Cellular-automata classifiers for DNA windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a rule vector on a labeled dataset and save the model.
    Train(TrainArgs),
    /// Classify a single window.
    Predict(PredictArgs),
    /// Classify every record of a FASTA file as one window.
    PredictBatch(PredictBatchArgs),
    /// Slide a model along FASTA sequences and write a region report.
    Scan(ScanArgs),
    /// Stratified k-fold cross-validation.
    Eval(EvalArgs),
    /// Exhaustive Boolean basin census of a rule vector.
    Basins(BasinsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Nucleotide,
    Features,
}

#[derive(Debug, Args)]
struct WorkerArgs {
    /// Worker threads [default: all cores].
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct EncodingArgs {
    /// Window length in bases.
    #[arg(long)]
    window: usize,
    #[arg(long, value_enum, default_value = "nucleotide")]
    mode: ModeArg,
    /// Comma-separated measures for features mode.
    #[arg(long, value_delimiter = ',', default_values = ["position_asymmetry", "base_composition", "periodicity3"])]
    measures: Vec<String>,
    /// Accept window lengths outside 54, 108, 162, 252, 354.
    #[arg(long)]
    allow_any_window: bool,
    #[arg(long, default_value_t = 64)]
    max_steps: usize,
    /// Quantization bit depth for attractor signatures.
    #[arg(long, default_value_t = 8)]
    q: u8,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct EvolutionArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    population: usize,
    /// Antibodies selected for cloning [default: 10, capped at the population].
    #[arg(long)]
    selection: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    clone_factor: f64,
    #[arg(long, default_value_t = 3.0)]
    mutation_decay: f64,
    /// Random newcomers per generation [default: population / 10, rounded up].
    #[arg(long)]
    newcomers: Option<usize>,
    #[arg(long, default_value_t = 100)]
    generations: usize,
    /// Stop after this many generations without improvement (0 disables).
    #[arg(long, default_value_t = 20)]
    stagnation: usize,
    #[arg(long, default_value_t = 0.99)]
    target: f64,
    /// Comma-separated rule numbers the search may use [default: all 256].
    #[arg(long, value_delimiter = ',')]
    rules: Vec<u32>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Labeled windows: id<TAB>label<TAB>sequence.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the generation log here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[command(flatten)]
    evolution: EvolutionArgs,
    #[command(flatten)]
    workers: WorkerArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    sequence: String,
}

#[derive(Debug, Args)]
struct PredictBatchArgs {
    #[arg(long)]
    model: PathBuf,
    /// FASTA file; each record is one window.
    #[arg(long)]
    input: PathBuf,
    /// Output file [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    workers: WorkerArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportArg {
    Splice,
    Exons,
    Track,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegionModelArg {
    Coding,
    Promoter,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    stride: usize,
    #[arg(long, value_enum)]
    report: ReportArg,
    #[arg(long)]
    out: PathBuf,
    /// Class treated as the element of interest [default: the second class].
    #[arg(long)]
    positive_class: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    min_prob: f64,
    #[arg(long, default_value_t = 0)]
    max_gap: usize,
    #[arg(long, value_enum, default_value = "coding")]
    region_model: RegionModelArg,
    /// Also scan the reverse complement and report its regions on strand '-'.
    #[arg(long)]
    both_strands: bool,
    #[command(flatten)]
    workers: WorkerArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Key-value metrics report.
    #[arg(long)]
    out: PathBuf,
    /// Structured copy of the full report.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    positive_class: Option<String>,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[command(flatten)]
    evolution: EvolutionArgs,
    #[command(flatten)]
    workers: WorkerArgs,
}

#[derive(Debug, Args)]
struct BasinsArgs {
    #[arg(long)]
    cells: usize,
    /// Comma-separated rule per cell.
    #[arg(long)]
    rules: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<maca_core::Error> for Failure {
    fn from(e: maca_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

/// Files staged in temporaries, renamed into place by [`Outputs::commit`].
#[derive(Default)]
struct Outputs {
    staged: Vec<(tempfile::NamedTempFile, PathBuf)>,
}

impl Outputs {
    fn stage(&mut self, path: &Path, contents: &str) -> CliResult<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let io_err = |e: std::io::Error| Failure::Data(format!("cannot write {}: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
        tmp.write_all(contents.as_bytes()).map_err(io_err)?;
        self.staged.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn commit(self) -> CliResult<()> {
        for (tmp, path) in self.staged {
            tmp.persist(&path)
                .map_err(|e| Failure::Data(format!("cannot write {}: {}", path.display(), e.error)))?;
        }
        Ok(())
    }
}

fn pool(workers: &WorkerArgs) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers.workers {
        if n == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))
}

impl EncodingArgs {
    fn check_window(&self) -> CliResult<()> {
        if self.window == 0 {
            return Err(Failure::Usage("--window must be positive".into()));
        }
        if !self.allow_any_window && !STANDARD_WINDOW_LENGTHS.contains(&self.window) {
            return Err(Failure::Usage(format!(
                "window length {} is not one of {:?}; pass --allow-any-window to use it",
                self.window, STANDARD_WINDOW_LENGTHS
            )));
        }
        Ok(())
    }

    fn feature_config(&self) -> CliResult<FeatureConfig> {
        match self.mode {
            ModeArg::Nucleotide => Ok(FeatureConfig::nucleotide()),
            ModeArg::Features => {
                let measures = self
                    .measures
                    .iter()
                    .map(|m| Measure::parse(m.trim()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Failure::Usage(e.to_string()))?;
                FeatureConfig::features(&measures).map_err(|e| Failure::Usage(e.to_string()))
            }
        }
    }

    fn engine(&self) -> CliResult<EngineConfig> {
        let cfg = EngineConfig {
            max_steps: self.max_steps,
            q: self.q,
            epsilon: self.epsilon,
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

impl EvolutionArgs {
    fn config(&self) -> CliResult<EvolutionConfig> {
        let mut cfg = EvolutionConfig::with_population(self.population);
        if let Some(n) = self.selection {
            cfg.selection = n;
        }
        cfg.clone_factor = self.clone_factor;
        cfg.mutation_decay = self.mutation_decay;
        if let Some(d) = self.newcomers {
            cfg.newcomers = d;
        }
        cfg.generations = self.generations;
        cfg.stagnation = self.stagnation;
        cfg.target_fitness = self.target;
        cfg.seed = self.seed;
        if !self.rules.is_empty() {
            cfg.rule_set = self
                .rules
                .iter()
                .map(|&n| Rule::new(n))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Usage(e.to_string()))?;
        }
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn load_dataset(path: &Path, window: usize) -> CliResult<maca_core::Dataset> {
    let data = parse_dataset(&read(path)?)?;
    if data.is_empty() {
        return Err(Failure::Data(format!("{} contains no examples", path.display())));
    }
    if let Some(e) = data.examples.iter().find(|e| e.window.len() != window) {
        return Err(Failure::Data(format!(
            "example {:?} has length {}, expected window length {window}",
            e.id,
            e.window.len()
        )));
    }
    Ok(data)
}

fn train(args: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    args.encoding.check_window()?;
    let features = args.encoding.feature_config()?;
    let engine = args.encoding.engine()?;
    let evo = args.evolution.config()?;
    let pool = pool(&args.workers)?;
    let data = load_dataset(&args.data, args.encoding.window)?;

    let features = fit_scaler(data.examples.iter().map(|e| &e.window), &features)?;
    let setup = TrainingSetup {
        feature_config: features.clone(),
        engine,
        class_names: data.class_names.clone(),
        window_len: args.encoding.window,
        seed: evo.seed,
    };
    let encoded = EncodedDataset::encode(&data, &features)?;
    let outcome = pool.install(|| evolve(&encoded, &setup, &evo))?;

    let mut outputs = Outputs::default();
    outputs.stage(&args.out, &save_model(&outcome.best)?)?;
    if let Some(trace) = &args.trace {
        outputs.stage(trace, &outcome.trace.to_tsv())?;
    }
    outputs.commit()?;
    let _ = writeln!(
        out,
        "generations\t{}\naffinity\t{:.6}\nattractors\t{}",
        outcome.trace.generations.len(),
        outcome.best_affinity,
        outcome.best.attractor_map.len()
    );
    Ok(())
}

fn predict(args: &PredictArgs, out: &mut dyn Write) -> CliResult<()> {
    let clf = load_model(&read(&args.model)?)?;
    let window = SequenceWindow::new(&args.sequence)?;
    let p = classify(&clf, &window)?;
    let _ = writeln!(
        out,
        "class\t{}\nprobability\t{:.4}\nmatched\t{}",
        clf.class_names[p.class], p.probability, p.matched
    );
    Ok(())
}

fn predict_batch(args: &PredictBatchArgs, out: &mut dyn Write) -> CliResult<()> {
    let clf = load_model(&read(&args.model)?)?;
    let records = parse_fasta(&read(&args.input)?)?;
    let pool = pool(&args.workers)?;
    let predictions = pool.install(|| {
        use rayon::prelude::*;
        records
            .par_iter()
            .map(|r| classify(&clf, &r.window()))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut text = String::from("id\tclass\tprobability\tmatched\n");
    for (r, p) in records.iter().zip(&predictions) {
        text.push_str(&format!(
            "{}\t{}\t{:.4}\t{}\n",
            r.id, clf.class_names[p.class], p.probability, p.matched
        ));
    }
    match &args.out {
        Some(path) => {
            let mut outputs = Outputs::default();
            outputs.stage(path, &text)?;
            outputs.commit()?;
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(())
}

fn positive_index(class_names: &[String], requested: Option<&str>) -> CliResult<usize> {
    match requested {
        Some(name) => class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Failure::Usage(format!("unknown class {name:?}; model classes are {class_names:?}"))),
        None => Ok(usize::from(class_names.len() > 1)),
    }
}

fn scan(args: &ScanArgs) -> CliResult<()> {
    if args.stride == 0 {
        return Err(Failure::Usage("--stride must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&args.min_prob) {
        return Err(Failure::Usage("--min-prob must lie in [0, 1]".into()));
    }
    let pool = pool(&args.workers)?;
    let clf = load_model(&read(&args.model)?)?;
    let positive = positive_index(&clf.class_names, args.positive_class.as_deref())?;
    let records = parse_fasta(&read(&args.input)?)?;
    if matches!(args.report, ReportArg::Track) && records.len() != 1 {
        return Err(Failure::Data(format!(
            "a track report needs exactly one sequence, {} found",
            records.len()
        )));
    }
    let model = match args.region_model {
        RegionModelArg::Coding => RegionModel::Coding,
        RegionModelArg::Promoter => RegionModel::Promoter,
    };

    struct Scanned {
        regions: Vec<maca_core::RegionRecord>,
        track: Vec<f64>,
    }
    let scanned = pool.install(|| {
        use rayon::prelude::*;
        records
            .par_iter()
            .enumerate()
            .map(|(i, record)| -> Result<Scanned, maca_core::Error> {
                let seq = record.window();
                let preds = scan_windows(&clf, &seq, args.stride)?;
                let cfg = MergeConfig {
                    min_prob: args.min_prob,
                    max_gap: args.max_gap,
                    model,
                    strand: Strand::Forward,
                    gene: (i + 1) as u32,
                };
                let mut regions = merge_regions(&preds, positive, &cfg)?;
                if args.both_strands {
                    let rc = seq.reverse_complement();
                    let rc_preds = scan_windows(&clf, &rc, args.stride)?;
                    let rc_cfg = MergeConfig {
                        strand: Strand::Reverse,
                        ..cfg
                    };
                    let mut rc_regions = merge_regions(&rc_preds, positive, &rc_cfg)?;
                    to_forward_coordinates(&mut rc_regions, seq.len());
                    regions.extend(rc_regions);
                }
                let track = probability_track(&preds, seq.len(), positive, clf.class_count());
                Ok(Scanned { regions, track })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let report = match args.report {
        ReportArg::Splice => Report::Splice(scanned.into_iter().flat_map(|s| s.regions).collect()),
        ReportArg::Exons => {
            let mut rows = Vec::new();
            for s in &scanned {
                let forward: Vec<_> = s
                    .regions
                    .iter()
                    .filter(|r| r.strand == Strand::Forward)
                    .cloned()
                    .collect();
                let reverse: Vec<_> = s
                    .regions
                    .iter()
                    .filter(|r| r.strand == Strand::Reverse)
                    .cloned()
                    .collect();
                rows.extend(exon_table(&forward)?);
                rows.extend(exon_table(&reverse)?);
            }
            Report::Exons(rows)
        }
        ReportArg::Track => Report::Track(scanned.into_iter().next().map(|s| s.track).unwrap_or_default()),
    };
    let mut outputs = Outputs::default();
    outputs.stage(&args.out, &emit_report(&report)?)?;
    outputs.commit()
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    args.encoding.check_window()?;
    let features = args.encoding.feature_config()?;
    let engine = args.encoding.engine()?;
    let evolution = args.evolution.config()?;
    if args.folds < 2 {
        return Err(Failure::Usage("--folds must be at least 2".into()));
    }
    let pool = pool(&args.workers)?;
    let data = load_dataset(&args.data, args.encoding.window)?;
    let positive = positive_index(&data.class_names, args.positive_class.as_deref())?;
    let setup = CrossValidationSetup {
        folds: args.folds,
        positive_class: positive,
        feature_config: features,
        engine,
        evolution,
    };
    let report = pool.install(|| cross_validate(&data, &setup))?;
    let pairs = cross_validation_pairs(&report);
    let mut outputs = Outputs::default();
    outputs.stage(&args.out, &emit_report(&Report::Metrics(pairs))?)?;
    if let Some(json) = &args.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Data(e.to_string()))?;
        outputs.stage(json, &(text + "\n"))?;
    }
    outputs.commit()?;
    let _ = writeln!(
        out,
        "accuracy_mean\t{:.6}\naccuracy_stddev\t{:.6}",
        report.accuracy.mean, report.accuracy.stddev
    );
    Ok(())
}

fn basins(args: &BasinsArgs, out: &mut dyn Write) -> CliResult<()> {
    let rv = parse_rule_list(&args.rules).map_err(|e| Failure::Usage(e.to_string()))?;
    let census = enumerate_basins(&rv, args.cells)?;
    let sizes = census.basin_sizes();
    let _ = writeln!(out, "basin_count\t{}", census.basin_count());
    for (id, cycle) in census.attractor_cycles.iter().enumerate() {
        let states: Vec<String> = cycle
            .iter()
            .map(|&s| {
                (0..args.cells)
                    .map(|i| if (s >> i) & 1 == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect();
        let _ = writeln!(out, "basin\t{id}\tsize\t{}\tcycle\t{}", sizes[id], states.join(","));
    }
    Ok(())
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => train(a, out),
        Command::Predict(a) => predict(a, out),
        Command::PredictBatch(a) => predict_batch(a, out),
        Command::Scan(a) => scan(a),
        Command::Eval(a) => eval(a, out),
        Command::Basins(a) => basins(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}
