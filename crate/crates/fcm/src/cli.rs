//! Command-line surface.
//!
//! Every command that writes files also writes `manifest.json` next to
//! them; `fcm rerun --manifest <file>` replays the recorded invocation and
//! checks that the outputs come out byte-identical.
//!
//! Failures print one line on stderr,
//! `error: kind=<kind> code=<code> exit=<n> message="<text>"`, and exit with
//! 2 (configuration), 3 (data) or 4 (runtime).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fcm_core::baseline::BaselineError;
use fcm_core::concept::ConceptError;
use fcm_core::encoding::{Binarization, EncodingMatrix};
use fcm_core::evaluation::{
    bootstrap_eval_with, build_balanced_split, sweep_complexity_with, sweep_num_examples_with, sweep_threshold_with,
    trial_fit_seed, trial_split_seed, EvalError, EvalPlan, EvalReport, MetricKind, SplitPlan, SweepParameter,
    SweepTable,
};
use fcm_core::graph::{GraphError, PatternOrder};
use fcm_core::rng::{derive_seed, rng_from_seed, sample_prefix_stable, Stream};
use fcm_core::synth::{generate, generate_random_masks, SynthError, SynthSpec};
use fcm_core::{
    detect, extract_concept, sparsity_report, train_linear, FcmConfig, FcmLearner, LabeledDataset, LinearConfig,
    LinearLearner,
};
use serde::{Deserialize, Serialize};

use crate::codec::{self, CodecError, EncodingFormat, LabelTable};
use crate::formats::{self, FormatError};
use crate::manifest::{FileDigest, Manifest, MANIFEST_FILE};
use crate::runner::{workers_from_env, RayonRunner};

#[derive(Debug, Parser)]
#[command(name = "fcm", version, about = "Few-shot concept mapping over sparse activation patterns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Sparsity statistics of binarized encodings
    Stats(StatsArgs),
    /// Extract a concept definition from a few labeled frames
    Extract(ExtractArgs),
    /// Score encodings against concept definitions
    Detect(DetectArgs),
    /// Repeated few-shot evaluation of one concept
    Eval(EvalArgs),
    /// Evaluate one concept over a grid of one parameter
    Sweep(SweepArgs),
    /// Generate a planted-concept corpus or its random-representation control
    Synth(SynthArgs),
    /// Repeated evaluation of the linear separator baseline
    Baseline(BaselineArgs),
    /// Convert encodings between the text and binary layouts
    Convert(ConvertArgs),
    /// Replay a recorded run and verify its outputs
    Rerun(RerunArgs),
}

/// `adaptive` or `fixed:<t>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BinarizeArg(pub Binarization);

impl FromStr for BinarizeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "adaptive" {
            return Ok(Self(Binarization::Adaptive));
        }
        let t = s
            .strip_prefix("fixed:")
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| format!("expected `adaptive` or `fixed:<t>`, got `{s}`"))?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(format!("fixed threshold must be a finite non-negative number, got {t}"));
        }
        Ok(Self(Binarization::Fixed(t)))
    }
}

impl fmt::Display for BinarizeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Binarization::Adaptive => f.write_str("adaptive"),
            Binarization::Fixed(t) => write!(f, "fixed:{t}"),
        }
    }
}

impl TryFrom<String> for BinarizeArg {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<BinarizeArg> for String {
    fn from(b: BinarizeArg) -> String {
        b.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Encodings file (text or FCME binary)
    #[arg(long)]
    pub encodings: PathBuf,
    /// Labels file with header `frame_id,<concept>,...`
    #[arg(long)]
    pub labels: PathBuf,
    /// `adaptive` (per-neuron mean absolute activation) or `fixed:<t>`
    #[arg(long, default_value = "adaptive")]
    pub binarize: BinarizeArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FcmArgs {
    /// Number of strongest connections kept in a definition
    #[arg(long, default_value_t = 10)]
    pub complexity: usize,
    /// Evidence that must be strictly exceeded for a detection
    #[arg(long, default_value_t = 0.20)]
    pub threshold: f64,
    /// Tuple order: 1 singles, 2 pairs, 3 triplets
    #[arg(long, default_value_t = 2)]
    pub order: usize,
}

impl FcmArgs {
    fn config(&self) -> Result<FcmConfig, Failure> {
        let order = PatternOrder::from_arity(self.order).map_err(|e| Failure::config("invalid_config", e))?;
        FcmConfig::new(self.complexity, self.threshold, order).map_err(|e| Failure::config("invalid_config", e))
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PlanArgs {
    /// Positive examples per trial
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Positive test frames per trial
    #[arg(long, default_value_t = 250)]
    pub n_pos: usize,
    /// Negative test frames per trial
    #[arg(long, default_value_t = 250)]
    pub n_neg: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Bootstrap resamples for confidence intervals
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PlanArgs {
    fn plan(&self) -> EvalPlan {
        EvalPlan { k: self.k, n_pos: self.n_pos, n_neg: self.n_neg, trials: self.trials, resamples: self.resamples }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub encodings: PathBuf,
    #[arg(long, default_value = "adaptive")]
    pub binarize: BinarizeArg,
    /// Also write `stats.json` and a manifest here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub concept: String,
    /// Number of example frames drawn from the concept's positives
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Explicit example frame ids (overrides the random draw)
    #[arg(long, value_delimiter = ',')]
    pub frames: Vec<String>,
    #[command(flatten)]
    pub fcm: FcmArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    #[arg(long)]
    pub encodings: PathBuf,
    #[arg(long, default_value = "adaptive")]
    pub binarize: BinarizeArg,
    /// Definition file; repeat for several concepts
    #[arg(long = "definition", required = true)]
    pub definitions: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.20)]
    pub threshold: f64,
    /// Also write `detections.csv` and a manifest here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub concept: String,
    #[command(flatten)]
    pub fcm: FcmArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Complexity,
    Threshold,
    Examples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fcm,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub concept: String,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated grid values
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Learner; `linear` is only meaningful for the examples sweep
    #[arg(long, value_enum, default_value_t = Method::Fcm)]
    pub method: Method,
    #[command(flatten)]
    pub fcm: FcmArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Text,
    Binary,
}

impl From<FileFormat> for EncodingFormat {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Text => EncodingFormat::Text,
            FileFormat::Binary => EncodingFormat::Binary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    /// Number of planted concepts (the first six carry the default names)
    #[arg(long, default_value_t = 6)]
    pub concepts: usize,
    #[arg(long, default_value_t = 6)]
    pub concept_size: usize,
    #[arg(long, default_value_t = 300)]
    pub frames_per_concept: usize,
    /// Mean number of spurious active neurons per frame
    #[arg(long, default_value_t = 2.0)]
    pub noise: f64,
    /// Probability that a concept neuron fails to fire
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// Probability that a frame also carries a second concept
    #[arg(long, default_value_t = 0.0)]
    pub co_occurrence: f64,
    /// Replace the masks with independent Bernoulli bits of this probability
    #[arg(long)]
    pub random: Option<f64>,
    #[arg(long, value_enum, default_value_t = FileFormat::Text)]
    pub format: FileFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub concept: String,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, default_value_t = 0.01)]
    pub regularization: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Published activation exports must first be brought into one of the two
/// encoding layouts: a table with header `frame_id,n0,...,n{D-1}` or the
/// FCME binary. Labels go in a `frame_id,<concept>,...` table of 0/1 cells.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub format: FileFormat,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the manifest's directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Config,
    Data,
    Runtime,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Config => 2,
            FailureKind::Data => 3,
            FailureKind::Runtime => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FailureKind::Config => "config",
            FailureKind::Data => "data",
            FailureKind::Runtime => "runtime",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub kind: FailureKind,
    pub code: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(kind: FailureKind, code: &'static str, message: impl fmt::Display) -> Self {
        Self { kind, code, message: message.to_string() }
    }

    fn config(code: &'static str, message: impl fmt::Display) -> Self {
        Self::new(FailureKind::Config, code, message)
    }

    fn data(code: &'static str, message: impl fmt::Display) -> Self {
        Self::new(FailureKind::Data, code, message)
    }

    fn runtime(code: &'static str, message: impl fmt::Display) -> Self {
        Self::new(FailureKind::Runtime, code, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// The single stderr line describing this failure.
    pub fn line(&self) -> String {
        let message = serde_json::to_string(&self.message).unwrap_or_else(|_| "\"\"".into());
        format!("error: kind={} code={} exit={} message={message}", self.kind.name(), self.code, self.exit_code())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        let kind = if matches!(e, CodecError::NotFound(_)) { FailureKind::Config } else { FailureKind::Data };
        Failure::new(kind, e.code(), e)
    }
}

fn concept_failure(e: &ConceptError) -> (FailureKind, &'static str) {
    match e {
        ConceptError::ZeroComplexity | ConceptError::InvalidThreshold(_) | ConceptError::Graph(GraphError::InvalidOrder(_)) => {
            (FailureKind::Config, "invalid_config")
        }
        ConceptError::DimMismatch { .. } | ConceptError::MixedDims { .. } => (FailureKind::Data, "dimension_mismatch"),
        ConceptError::NotExpressible { .. } => (FailureKind::Data, "not_expressible"),
        _ => (FailureKind::Data, "invalid_definition"),
    }
}

fn eval_failure(e: &EvalError) -> (FailureKind, &'static str) {
    match e {
        EvalError::Trial { source, .. } => eval_failure(source),
        EvalError::Fit { .. } => (FailureKind::Runtime, "fit_failed"),
        EvalError::UnknownConcept(_) => (FailureKind::Data, "unknown_concept"),
        EvalError::InsufficientPositives { .. } => (FailureKind::Data, "insufficient_positives"),
        EvalError::InsufficientNegatives { .. } => (FailureKind::Data, "insufficient_negatives"),
        EvalError::InvalidPlan(_) => (FailureKind::Config, "invalid_plan"),
        EvalError::EmptyGrid => (FailureKind::Config, "empty_grid"),
        EvalError::Concept(c) => concept_failure(c),
        EvalError::Baseline(BaselineError::InvalidConfig(_)) => (FailureKind::Config, "invalid_config"),
        EvalError::Baseline(_) => (FailureKind::Runtime, "baseline_failed"),
        EvalError::DuplicateFrameId(_) => (FailureKind::Data, "duplicate_frame_id"),
        EvalError::MixedDims { .. } => (FailureKind::Data, "dimension_mismatch"),
        _ => (FailureKind::Data, "invalid_dataset"),
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let (kind, code) = eval_failure(&e);
        Failure::new(kind, code, e)
    }
}

impl From<ConceptError> for Failure {
    fn from(e: ConceptError) -> Self {
        let (kind, code) = concept_failure(&e);
        Failure::new(kind, code, e)
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Dataset(inner) => inner.into(),
            SynthError::MissingReferenceLabels => Failure::data("invalid_dataset", e),
            other => Failure::config("invalid_config", other),
        }
    }
}

fn format_failure(code: &'static str) -> impl FnOnce(FormatError) -> Failure {
    move |e| Failure::data(code, e)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let failure = Failure::config("usage", first);
            eprintln!("{}", failure.line());
            return failure.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("{}", failure.line());
            failure.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Rerun(args) => rerun(&args),
        Command::Convert(args) => convert(&args),
        other => {
            let out = output_dir(&other);
            execute_recorded(other, out)
        }
    }
}

fn output_dir(command: &Command) -> Option<PathBuf> {
    match command {
        Command::Stats(a) => a.out.clone(),
        Command::Detect(a) => a.out.clone(),
        Command::Extract(a) => Some(a.out.clone()),
        Command::Eval(a) => Some(a.out.clone()),
        Command::Sweep(a) => Some(a.out.clone()),
        Command::Synth(a) => Some(a.out.clone()),
        Command::Baseline(a) => Some(a.out.clone()),
        Command::Convert(_) | Command::Rerun(_) => None,
    }
}

fn absolute(path: &Path) -> Result<PathBuf, Failure> {
    std::fs::canonicalize(path).map_err(|_| Failure::config("file_not_found", format!("{}: file not found", path.display())))
}

fn absolute_data(data: &mut DataArgs) -> Result<(), Failure> {
    data.encodings = absolute(&data.encodings)?;
    data.labels = absolute(&data.labels)?;
    Ok(())
}

/// Resolves input paths so the recorded invocation works from any
/// directory. The output directory is not part of the recorded identity.
fn canonical(mut command: Command) -> Result<Command, Failure> {
    match &mut command {
        Command::Stats(a) => {
            a.encodings = absolute(&a.encodings)?;
            a.out = None;
        }
        Command::Detect(a) => {
            a.encodings = absolute(&a.encodings)?;
            for d in &mut a.definitions {
                *d = absolute(d)?;
            }
            a.out = None;
        }
        Command::Extract(a) => {
            absolute_data(&mut a.data)?;
            a.out = PathBuf::new();
        }
        Command::Eval(a) => {
            absolute_data(&mut a.data)?;
            a.out = PathBuf::new();
        }
        Command::Sweep(a) => {
            absolute_data(&mut a.data)?;
            a.out = PathBuf::new();
        }
        Command::Baseline(a) => {
            absolute_data(&mut a.data)?;
            a.out = PathBuf::new();
        }
        Command::Synth(a) => a.out = PathBuf::new(),
        Command::Convert(_) | Command::Rerun(_) => {}
    }
    Ok(command)
}

/// Inputs read and outputs produced by one run.
struct Run {
    out: Option<PathBuf>,
    inputs: Vec<FileDigest>,
    outputs: Vec<(String, Vec<u8>)>,
    seeds: BTreeMap<String, u64>,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = codec::read_file(path)?;
        self.inputs.push(FileDigest::of(path, &bytes));
        Ok(bytes)
    }

    fn emit(&mut self, name: &str, bytes: Vec<u8>) {
        self.outputs.push((name.to_string(), bytes));
    }

    fn load_dataset(&mut self, data: &DataArgs) -> Result<LabeledDataset, Failure> {
        let matrix = codec::decode_encodings(&self.read(&data.encodings)?)?;
        let labels = codec::decode_labels(&self.read(&data.labels)?)?;
        Ok(codec::assemble_dataset(&matrix, &labels, data.binarize.0)?)
    }

    /// Writes the outputs and the manifest; the manifest goes last.
    fn finish(self, invocation: Command) -> Result<(), Failure> {
        let Some(dir) = self.out else { return Ok(()) };
        let mut digests = Vec::new();
        for (name, bytes) in &self.outputs {
            write(&dir.join(name), bytes)?;
            digests.push(FileDigest::of(Path::new(name), bytes));
        }
        let manifest = Manifest::new(invocation, self.seeds, self.inputs, digests);
        let bytes = formats::encode_json(&manifest).map_err(|e| Failure::runtime("write_failed", e))?;
        write(&dir.join(MANIFEST_FILE), &bytes)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    formats::write_atomic(path, bytes).map_err(|e| Failure::runtime("write_failed", format!("{}: {e}", path.display())))
}

fn execute_recorded(command: Command, out: Option<PathBuf>) -> Result<(), Failure> {
    let recorded = canonical(command.clone())?;
    let mut run = Run { out, inputs: Vec::new(), outputs: Vec::new(), seeds: BTreeMap::new() };
    match &recorded {
        Command::Stats(a) => stats(&mut run, a)?,
        Command::Extract(a) => extract(&mut run, a)?,
        Command::Detect(a) => detect_cmd(&mut run, a)?,
        Command::Eval(a) => eval(&mut run, a)?,
        Command::Sweep(a) => sweep(&mut run, a)?,
        Command::Synth(a) => synth(&mut run, a)?,
        Command::Baseline(a) => baseline(&mut run, a)?,
        Command::Convert(_) | Command::Rerun(_) => unreachable!("not recorded"),
    }
    run.finish(recorded)
}

fn runner() -> Result<RayonRunner, Failure> {
    let workers = workers_from_env().map_err(|e| Failure::config("invalid_workers", e))?;
    RayonRunner::new(workers).map_err(|e| Failure::runtime("thread_pool", e))
}

fn record_plan_seeds(run: &mut Run, seed: u64) {
    run.seeds.insert("master".into(), seed);
    run.seeds.insert("bootstrap".into(), derive_seed(seed, Stream::Bootstrap, 0));
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn stats(run: &mut Run, a: &StatsArgs) -> Result<(), Failure> {
    let matrix = codec::decode_encodings(&run.read(&a.encodings)?)?;
    let masks = a.binarize.0.apply(&matrix).map_err(CodecError::from)?;
    let report = sparsity_report(&masks).map_err(CodecError::from)?;
    println!("frames                {}", report.frames);
    println!("neurons               {}", report.dim);
    println!("binarization          {}", a.binarize);
    println!("mean active           {:.4} ({} of neurons)", report.mean_active, pct(report.pct_active));
    println!("active range          {}..={}", report.min_active, report.max_active);
    println!("active variance       {:.4}", report.var_active);
    println!("ever active           {}", pct(report.ever_active_fraction));
    println!("most active neuron    {} of frames", pct(report.max_neuron_frequency));
    run.emit("stats.json", formats::encode_json(&report).map_err(|e| Failure::runtime("write_failed", e))?);
    Ok(())
}

fn extract(run: &mut Run, a: &ExtractArgs) -> Result<(), Failure> {
    let config = a.fcm.config()?;
    let data = run.load_dataset(&a.data)?;
    let concept = data.concept_index(&a.concept)?;
    let examples: Vec<usize> = if a.frames.is_empty() {
        if a.k == 0 {
            return Err(Failure::config("invalid_plan", "at least one example is required"));
        }
        let positives = data.positives(concept);
        if positives.len() < a.k {
            return Err(EvalError::InsufficientPositives { concept: a.concept.clone(), needed: a.k, available: positives.len() }.into());
        }
        let seed = derive_seed(a.seed, Stream::Examples, 0);
        run.seeds.insert("master".into(), a.seed);
        run.seeds.insert("examples".into(), seed);
        let mut rng = rng_from_seed(seed);
        sample_prefix_stable(&mut rng, positives.len(), a.k).into_iter().map(|i| positives[i]).collect()
    } else {
        a.frames
            .iter()
            .map(|id| {
                data.frame_ids()
                    .iter()
                    .position(|f| f == id)
                    .ok_or_else(|| Failure::data("unknown_frame", format!("frame `{id}` not in the encodings")))
            })
            .collect::<Result<_, _>>()?
    };
    let def = extract_concept(&a.concept, examples.iter().map(|&f| data.mask(f)), &config)?;
    let ids: Vec<&str> = examples.iter().map(|&f| data.frame_ids()[f].as_str()).collect();
    println!("concept `{}` from {} examples: {}", a.concept, ids.len(), ids.join(", "));
    for e in def.entries() {
        println!("  {:<16} count {:>4}  weight {:.4}", e.tuple.to_string(), e.count, e.weight);
    }
    for w in &def.meta().warnings {
        println!("warning: {w}");
    }
    run.emit("definition.json", formats::encode_definition(&def).map_err(|e| Failure::runtime("write_failed", e))?);
    Ok(())
}

fn detect_cmd(run: &mut Run, a: &DetectArgs) -> Result<(), Failure> {
    let mut definitions = Vec::new();
    for path in &a.definitions {
        let bytes = run.read(path)?;
        definitions.push(formats::decode_definition(&bytes).map_err(format_failure("malformed_definition"))?);
    }
    let matrix = codec::decode_encodings(&run.read(&a.encodings)?)?;
    let masks = a.binarize.0.apply(&matrix).map_err(CodecError::from)?;
    let mut table = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::runtime("write_failed", e);
    table.write_record(["frame_id", "concept", "evidence", "present"]).map_err(csv_err)?;
    let mut present = vec![0usize; definitions.len()];
    for (id, mask) in matrix.frame_ids().iter().zip(&masks) {
        for (j, result) in detect(&definitions, mask, a.threshold)?.into_iter().enumerate() {
            present[j] += usize::from(result.present);
            let row = [id.clone(), result.concept, result.evidence.to_string(), u8::from(result.present).to_string()];
            table.write_record(&row).map_err(csv_err)?;
        }
    }
    for (def, n) in definitions.iter().zip(&present) {
        println!("{:<20} present in {n} of {} frames", def.name(), masks.len());
    }
    let bytes = table.into_inner().map_err(|e| Failure::runtime("write_failed", e.into_error()))?;
    run.emit("detections.csv", bytes);
    Ok(())
}

fn print_report(report: &EvalReport) {
    println!(
        "concept `{}`: {} trials, {} positive and {} negative examples per trial",
        report.concept, report.plan.trials, report.accounting.positive_examples, report.accounting.negative_examples
    );
    println!("{:<10} {:>8} {:>8} {:>8} {:>8}", "metric", "mean", "ci_low", "ci_high", "median");
    for kind in MetricKind::ALL {
        let s = report.summary.get(kind);
        println!("{:<10} {:>8.4} {:>8.4} {:>8.4} {:>8.4}", kind.name(), s.mean, s.ci_low, s.ci_high, s.median);
    }
}

fn emit_report(run: &mut Run, report: &EvalReport) -> Result<(), Failure> {
    let to_failure = |e: FormatError| Failure::runtime("write_failed", e);
    run.emit("report.csv", formats::report_csv(report).map_err(to_failure)?);
    run.emit("report.json", formats::encode_json(report).map_err(to_failure)?);
    Ok(())
}

fn eval(run: &mut Run, a: &EvalArgs) -> Result<(), Failure> {
    let config = a.fcm.config()?;
    let runner = runner()?;
    let data = run.load_dataset(&a.data)?;
    record_plan_seeds(run, a.plan.seed);
    let report = bootstrap_eval_with(&runner, &data, &a.concept, &FcmLearner::new(config), &a.plan.plan(), a.plan.seed)?;
    print_report(&report);
    emit_report(run, &report)
}

fn linear_config(regularization: f64, epochs: usize, learning_rate: f64) -> Result<LinearConfig, Failure> {
    let config = LinearConfig { regularization, epochs, learning_rate };
    config.validate().map_err(|e| Failure::config("invalid_config", e))?;
    Ok(config)
}

fn integer_grid(values: &[f64]) -> Result<Vec<usize>, Failure> {
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Failure::config("invalid_grid", format!("grid value {v} is not a positive integer")))
            }
        })
        .collect()
}

fn sweep(run: &mut Run, a: &SweepArgs) -> Result<(), Failure> {
    let config = a.fcm.config()?;
    if a.method == Method::Linear && a.param != SweepParam::Examples {
        return Err(Failure::config("invalid_config", "the linear learner only supports the examples sweep"));
    }
    let grid_ints = match a.param {
        SweepParam::Threshold => Vec::new(),
        _ => integer_grid(&a.values)?,
    };
    let runner = runner()?;
    let data = run.load_dataset(&a.data)?;
    record_plan_seeds(run, a.plan.seed);
    let plan = a.plan.plan();
    let seed = a.plan.seed;
    let table: SweepTable = match (a.param, a.method) {
        (SweepParam::Complexity, _) => sweep_complexity_with(&runner, &data, &a.concept, &grid_ints, &config, &plan, seed)?,
        (SweepParam::Threshold, _) => sweep_threshold_with(&runner, &data, &a.concept, &a.values, &config, &plan, seed)?,
        (SweepParam::Examples, Method::Fcm) => {
            sweep_num_examples_with(&runner, &data, &a.concept, &grid_ints, &FcmLearner::new(config), &plan, seed)?
        }
        (SweepParam::Examples, Method::Linear) => {
            let learner = LinearLearner::new(LinearConfig::default());
            sweep_num_examples_with(&runner, &data, &a.concept, &grid_ints, &learner, &plan, seed)?
        }
    };
    debug_assert!(matches!(
        (a.param, table.parameter),
        (SweepParam::Complexity, SweepParameter::PatternComplexity)
            | (SweepParam::Threshold, SweepParameter::Threshold)
            | (SweepParam::Examples, SweepParameter::NumExamples)
    ));
    println!("{:<12} {:>8} {:>8} {:>8} {:>8}", table.parameter.name(), "accuracy", "precision", "recall", "f1");
    for row in &table.rows {
        let s = &row.report.summary;
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            row.value, s.accuracy.mean, s.precision.mean, s.recall.mean, s.f1.mean
        );
    }
    let to_failure = |e: FormatError| Failure::runtime("write_failed", e);
    run.emit("sweep.csv", formats::sweep_csv(&table).map_err(to_failure)?);
    run.emit("sweep.json", formats::encode_json(&table).map_err(to_failure)?);
    Ok(())
}

fn synth(run: &mut Run, a: &SynthArgs) -> Result<(), Failure> {
    let mut spec = SynthSpec::blocks(a.dim, a.concepts, a.concept_size, a.frames_per_concept);
    spec.noise_on = a.noise;
    spec.dropout = a.dropout;
    spec.co_occurrence_prob = a.co_occurrence;
    spec.seed = a.seed;
    run.seeds.insert("master".into(), a.seed);
    run.seeds.insert("synth".into(), derive_seed(a.seed, Stream::Synth, 0));
    let (planted, truth) = generate(&spec)?;
    let data = match a.random {
        Some(p) => {
            run.seeds.insert("random_masks".into(), derive_seed(a.seed, Stream::Synth, 1));
            generate_random_masks(&planted, a.dim, p, a.seed)?
        }
        None => planted,
    };
    let matrix: EncodingMatrix = codec::indicator_matrix(&data)?;
    let format = EncodingFormat::from(a.format);
    let name = match format {
        EncodingFormat::Text => "encodings.csv",
        EncodingFormat::Binary => "encodings.bin",
    };
    run.emit(name, codec::encode_encodings(&matrix, format)?);
    let labels: LabelTable = codec::labels_of(&data);
    run.emit("labels.csv", codec::encode_labels(&labels)?);
    #[derive(Serialize)]
    struct Truth<'a> {
        spec: &'a SynthSpec,
        random_activation_prob: Option<f64>,
        frames: &'a [fcm_core::synth::FrameTruth],
    }
    let doc = Truth { spec: &spec, random_activation_prob: a.random, frames: &truth.frames };
    run.emit("truth.json", formats::encode_json(&doc).map_err(|e| Failure::runtime("write_failed", e))?);
    println!(
        "{} frames, {} neurons, {} concepts{}",
        data.len(),
        data.dim(),
        data.concepts().len(),
        a.random.map_or(String::new(), |p| format!(", random masks with p = {p}"))
    );
    Ok(())
}

fn baseline(run: &mut Run, a: &BaselineArgs) -> Result<(), Failure> {
    let config = linear_config(a.regularization, a.epochs, a.learning_rate)?;
    let runner = runner()?;
    let data = run.load_dataset(&a.data)?;
    record_plan_seeds(run, a.plan.seed);
    let plan = a.plan.plan();
    let learner = LinearLearner::new(config);
    let report = bootstrap_eval_with(&runner, &data, &a.concept, &learner, &plan, a.plan.seed)?;
    // model of the first trial, kept for inspection
    let split_plan = SplitPlan { k: plan.k, k_neg: plan.k, n_pos: plan.n_pos, n_neg: plan.n_neg };
    let split = build_balanced_split(&data, &a.concept, &split_plan, trial_split_seed(a.plan.seed, 0))?;
    let pos: Vec<_> = split.example_frames.iter().map(|&f| data.mask(f)).collect();
    let neg: Vec<_> = split.negative_example_frames.iter().map(|&f| data.mask(f)).collect();
    let model = train_linear(&pos, &neg, &config, trial_fit_seed(a.plan.seed, 0)).map_err(EvalError::from)?;
    print_report(&report);
    println!("trial 0 training accuracy {:.4}{}", model.training_accuracy, if model.degenerate { " (degenerate)" } else { "" });
    emit_report(run, &report)?;
    run.emit("model.json", formats::encode_model(&model).map_err(|e| Failure::runtime("write_failed", e))?);
    Ok(())
}

fn convert(a: &ConvertArgs) -> Result<(), Failure> {
    let matrix = codec::read_encodings(&a.input)?;
    let bytes = codec::encode_encodings(&matrix, a.format.into())?;
    write(&a.output, &bytes)?;
    println!("{} frames of {} neurons written to {}", matrix.frames(), matrix.dim(), a.output.display());
    Ok(())
}

fn rerun(a: &RerunArgs) -> Result<(), Failure> {
    let bytes = codec::read_file(&a.manifest)?;
    let manifest: Manifest =
        serde_json::from_slice(&bytes).map_err(|e| Failure::config("malformed_manifest", e))?;
    for input in &manifest.inputs {
        let current = codec::read_file(Path::new(&input.path))?;
        if crate::manifest::sha256_hex(&current) != input.sha256 {
            return Err(Failure::data("input_digest_mismatch", format!("{} changed since the recorded run", input.path)));
        }
    }
    let out = match &a.out {
        Some(dir) => dir.clone(),
        None => a.manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    let mut invocation = manifest.invocation.clone();
    set_output_dir(&mut invocation, &out)?;
    execute_recorded(invocation, Some(out.clone()))?;
    for output in &manifest.outputs {
        let produced = codec::read_file(&out.join(&output.path))?;
        if crate::manifest::sha256_hex(&produced) != output.sha256 {
            return Err(Failure::runtime("output_mismatch", format!("{} differs from the recorded run", output.path)));
        }
    }
    println!("{} output files reproduced byte-identically in {}", manifest.outputs.len(), out.display());
    Ok(())
}

fn set_output_dir(command: &mut Command, out: &Path) -> Result<(), Failure> {
    let out = out.to_path_buf();
    match command {
        Command::Stats(a) => a.out = Some(out),
        Command::Detect(a) => a.out = Some(out),
        Command::Extract(a) => a.out = out,
        Command::Eval(a) => a.out = out,
        Command::Sweep(a) => a.out = out,
        Command::Synth(a) => a.out = out,
        Command::Baseline(a) => a.out = out,
        Command::Convert(_) | Command::Rerun(_) => {
            return Err(Failure::config("malformed_manifest", "manifest does not record a reproducible command"))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_flag() {
        assert_eq!("adaptive".parse::<BinarizeArg>().unwrap().0, Binarization::Adaptive);
        assert_eq!("fixed:0.5".parse::<BinarizeArg>().unwrap().0, Binarization::Fixed(0.5));
        assert!("fixed:-1".parse::<BinarizeArg>().is_err());
        assert!("fixed".parse::<BinarizeArg>().is_err());
        assert_eq!(BinarizeArg(Binarization::Fixed(0.25)).to_string(), "fixed:0.25");
    }

    #[test]
    fn defaults_match_the_method_settings() {
        let cli = Cli::try_parse_from(["fcm", "eval", "--encodings", "e", "--labels", "l", "--concept", "key", "--out", "o"]).unwrap();
        let Command::Eval(a) = cli.command else { panic!("expected eval") };
        assert_eq!((a.fcm.complexity, a.fcm.threshold, a.fcm.order), (10, 0.20, 2));
        assert_eq!((a.plan.k, a.plan.n_pos, a.plan.n_neg, a.plan.trials, a.plan.resamples), (5, 250, 250, 100, 1000));
        assert_eq!(a.data.binarize.0, Binarization::Adaptive);
    }

    #[test]
    fn invocation_round_trips_through_json() {
        let cli = Cli::try_parse_from([
            "fcm", "sweep", "--encodings", "e", "--labels", "l", "--concept", "key", "--param", "threshold",
            "--values", "0.1,0.2", "--binarize", "fixed:0.5", "--out", "o",
        ])
        .unwrap();
        let json = serde_json::to_string(&cli.command).unwrap();
        let back: Command = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cli.command);
    }

    #[test]
    fn failure_line_is_single_line() {
        let f = Failure::data("malformed_header", "bad\nheader \"x\"");
        let line = f.line();
        assert!(!line.contains('\n'));
        assert_eq!(line, r#"error: kind=data code=malformed_header exit=3 message="bad\nheader \"x\"""#);
    }
}
