use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "hitopic", version, about = "Hierarchical topic models and entropy-based tuning")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Load a plaintext or UCI corpus and write a portable UCI dump.
    #[command(args_override_self = true)]
    Ingest(IngestArgs),
    /// Generate a corpus with a planted two-level topic hierarchy.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Train one model and dump its matrices and entropy table.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Sweep topic counts and eta with restarts.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Curve CSVs and a markdown table from a finished sweep.
    #[command(args_override_self = true)]
    Report(ReportArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ingest(_) => "ingest",
            Self::Synth(_) => "synth",
            Self::Train(_) => "train",
            Self::Sweep(_) => "sweep",
            Self::Report(_) => "report",
            Self::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CorpusArgs {
    /// Plaintext file (one document per line) or a directory holding
    /// docword.txt and vocab.txt.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Vocabulary file; makes --corpus a UCI docword file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Minimum corpus frequency of plaintext tokens.
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// key=value file with defaults for any flag.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Level-1 (parent) topics.
    #[arg(long, default_value_t = 5)]
    pub parents: usize,
    /// Children per parent; 1 gives a flat corpus.
    #[arg(long, default_value_t = 3)]
    pub children: usize,
    /// Token share drawn from the parent block. Defaults to 1 − noise for
    /// flat corpora and 0.4 otherwise.
    #[arg(long)]
    pub parent_share: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 2000)]
    pub docs: usize,
    #[arg(long, default_value_t = 80)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 3000)]
    pub vocab_size: usize,
    /// Zipf exponent of word frequencies inside a block.
    #[arg(long, default_value_t = 1.0)]
    pub zipf: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainModel {
    Lda,
    Em,
    Hlda,
    Hpam,
    Hartm,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(value_enum)]
    pub model: TrainModel,
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Topic count of lda and em.
    #[arg(long, default_value_t = 10)]
    pub topics: usize,
    #[arg(long, default_value_t = 5)]
    pub t1: usize,
    #[arg(long, default_value_t = 1)]
    pub t2: usize,
    /// hARTM topic counts per level, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,15")]
    pub levels: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Defaults: 0.1 for lda/em, 1.0 for hlda/hpam.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Defaults: 0.01 for lda/em/hpam, 0.1 for hlda.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub tau_link: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sparsing: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Top words per topic in JSON dumps.
    #[arg(long, default_value_t = 10)]
    pub top_words: usize,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepModel {
    Hlda,
    Hpam,
    Hartm,
}

/// `lo:hi:step` (inclusive, step defaults to 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSpan {
    pub lo: usize,
    pub hi: usize,
    pub step: usize,
}

impl TopicSpan {
    pub fn values(&self) -> Vec<usize> {
        (self.lo..=self.hi).step_by(self.step).collect()
    }
}

impl FromStr for TopicSpan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("bad number {p:?} in range {s:?}"));
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (num(lo)?, num(hi)?, 1),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => return Err(format!("range {s:?} is not lo:hi[:step]")),
        };
        if lo == 0 || hi < lo || step == 0 {
            return Err(format!("range {s:?} needs 1 <= lo <= hi and step >= 1"));
        }
        Ok(Self { lo, hi, step })
    }
}

impl fmt::Display for TopicSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub model: SweepModel,
    #[arg(long, default_value_t = 1)]
    pub stage: u8,
    /// Required unless the stage-1 sweep is read with --from.
    #[command(flatten)]
    pub input: OptionalCorpus,
    #[arg(long)]
    pub out: PathBuf,
    /// Swept topic counts (ignored by hlda).
    #[arg(long)]
    pub t_range: Option<TopicSpan>,
    /// Defaults to the model's own eta (ignored by hartm).
    #[arg(long, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Defaults: 10 for hlda, 6 otherwise.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses available parallelism.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    /// Skip runs already present in the output's raw log.
    #[arg(long)]
    #[serde(skip)]
    pub resume: bool,
    /// Stage-1 output directory to derive a stage-2 sweep from.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Fixed level-2 topic count for a stage-2 sweep without --from.
    #[arg(long)]
    pub t1: Option<usize>,
    /// Stage-1 cells carried into stage 2 (lowest entropy first).
    #[arg(long, default_value_t = 1)]
    pub top_k: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau_link: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sparsing: f64,
    /// Smoothing window of the minima detector.
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    #[arg(long, default_value_t = 2)]
    pub neighbors: usize,
    /// Qualifying minimum depth as a fraction of the curve range.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OptionalCorpus {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Sweep output directory.
    #[arg(long)]
    pub from: PathBuf,
    /// Defaults to the sweep directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset label of the markdown table.
    #[arg(long, default_value = "corpus")]
    pub dataset: String,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Output directory; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
