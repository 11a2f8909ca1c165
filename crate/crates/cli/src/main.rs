mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fusekit::fusion::{FusionMethod, Normalization};

#[derive(Parser)]
#[command(
    name = "fusekit",
    version,
    about = "Hybrid retrieval pipeline: index, search, fuse, tune, evaluate, profile and analyze",
    after_help = "Exit status: 0 ok, 1 usage error, 2 data error, 3 internal error.\n\
                  Errors are printed on one line as `error[<kind>]: <message>`."
)]
struct Cli {
    /// Sectioned key = value config file; every flag overrides it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic benchmark (corpus, queries, qrels, embeddings)
    Synth(SynthArgs),
    /// Build an index from a corpus or precomputed document embeddings
    Index(IndexArgs),
    /// Retrieve the top-k documents for every query into a TREC run file
    Search(SearchArgs),
    /// Fuse several run files into one
    Fuse(FuseArgs),
    /// Grid-search NSF weights on a qrels set
    Tune(TuneArgs),
    /// Compute R@k, MRR@10 and R-precision of a run
    Eval(EvalArgs),
    /// Report FLOPs, index footprint and latency
    Profile(ProfileArgs),
    /// Export score histograms, paired samples and region counts as CSV
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Lexical,
    Dense,
    Sparse,
    Multivector,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Lexical => "lexical",
            Kind::Dense => "dense",
            Kind::Sparse => "sparse",
            Kind::Multivector => "multivector",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Preset {
    /// k1 = 0.9, b = 0.4
    General,
    /// k1 = 2.5, b = 0.2
    Legal,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Random seed [config: synth.seed]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of queries; each owns ten documents [config: synth.queries]
    #[arg(long)]
    pub queries: Option<usize>,
}

#[derive(Args)]
pub struct IndexArgs {
    pub kind: Kind,
    /// Corpus JSONL for `lexical`, document embeddings JSONL otherwise
    /// [config: paths.corpus | paths.dense_docs | paths.sparse_docs | paths.multi_docs]
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Index file to write
    #[arg(long)]
    pub out: PathBuf,
    /// L2-normalize dense and token vectors so inner product is cosine [config: vectors.cosine, default true]
    #[arg(long)]
    pub cosine: Option<bool>,
}

#[derive(Args)]
pub struct SearchArgs {
    pub kind: Kind,
    /// Index file built by `index`
    #[arg(long)]
    pub index: PathBuf,
    /// Queries JSONL: `{id,text}` for lexical, embeddings otherwise
    /// [config: paths.queries | paths.dense_queries | paths.sparse_queries | paths.multi_queries]
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Run file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Documents per query [config: search.k, default 100]
    #[arg(short, long)]
    pub k: Option<usize>,
    /// BM25 parameter preset [config: bm25.preset, default general]
    #[arg(long)]
    pub preset: Option<Preset>,
    /// BM25 k1, overriding the preset [config: bm25.k1]
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 b, overriding the preset [config: bm25.b]
    #[arg(long)]
    pub b: Option<f64>,
    /// Normalize query vectors [config: vectors.cosine, default true]
    #[arg(long)]
    pub cosine: Option<bool>,
    /// Run tag in the last column (default: the kind)
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Args)]
pub struct FuseArgs {
    /// Input run files, one per system
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// bcf, rrf or nsf [config: fusion.method, default nsf]
    #[arg(long)]
    pub method: Option<FusionMethod>,
    /// minmax, zscore or percentile [config: fusion.norm, default zscore]
    #[arg(long)]
    pub norm: Option<Normalization>,
    /// Comma-separated NSF weights summing to 1 [config: fusion.weights, default equal]
    #[arg(long)]
    pub weights: Option<String>,
    /// RRF smoothing constant [config: fusion.rrf_k, default 60]
    #[arg(long)]
    pub rrf_k: Option<f64>,
    /// Truncate every input run to this depth first [config: fusion.depth]
    #[arg(long)]
    pub depth: Option<usize>,
    /// Run tag (default: the method label)
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Args)]
pub struct TuneArgs {
    /// Two to four run files
    #[arg(required = true, num_args = 2..=4)]
    pub runs: Vec<PathBuf>,
    /// [config: paths.qrels]
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// [config: fusion.norm, default zscore]
    #[arg(long)]
    pub norm: Option<Normalization>,
    /// Objective such as R@10, MRR@10 or RP [config: tune.metric, default R@10]
    #[arg(long)]
    pub metric: Option<String>,
    /// Grid step dividing 1 [config: tune.step, default 0.05]
    #[arg(long)]
    pub step: Option<f64>,
    /// [config: fusion.depth]
    #[arg(long)]
    pub depth: Option<usize>,
    /// Write the full report (every grid point) as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a `[fusion]` config section with the tuned weights
    #[arg(long)]
    pub write_config: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    pub run: PathBuf,
    /// [config: paths.qrels]
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Strictly increasing recall cutoffs [config: eval.cutoffs, default 1,5,10,20,50,100]
    #[arg(long)]
    pub cutoffs: Option<String>,
    /// Print JSON instead of a table
    #[arg(long)]
    pub json: bool,
    /// Also write the report to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ProfileArgs {
    /// Measure a live index instead of only evaluating the cost model
    #[arg(long, requires_all = ["index", "queries"])]
    pub kind: Option<Kind>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Corpus JSONL, for the index-to-plaintext ratio
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Unrecorded calls before timing [config: profile.warmup, default 3]
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(short, long)]
    pub k: Option<usize>,
    /// [config: cost.avg_query_len, default 15]
    #[arg(long)]
    pub avg_query_len: Option<f64>,
    /// [config: cost.avg_doc_len, default 157]
    #[arg(long)]
    pub avg_doc_len: Option<f64>,
    /// [config: cost.corpus_size, default 27942]
    #[arg(long)]
    pub corpus_size: Option<u64>,
    /// [config: cost.dim, default 768]
    #[arg(long)]
    pub dim: Option<u64>,
    /// [config: cost.token_dim, default 128]
    #[arg(long)]
    pub token_dim: Option<u64>,
    /// [config: cost.bits, default 32]
    #[arg(long)]
    pub bits: Option<u64>,
    /// Encoder forward pass [config: cost.forward_flops, default 2.6e9]
    #[arg(long)]
    pub forward_flops: Option<f64>,
    /// Cross-encoder forward pass [config: cost.cross_forward_flops, default 2.2e10]
    #[arg(long)]
    pub cross_forward_flops: Option<f64>,
    /// [config: cost.avg_query_nonzeros, default 178]
    #[arg(long)]
    pub avg_query_nonzeros: Option<f64>,
    /// [config: cost.avg_posting_len, default 378]
    #[arg(long)]
    pub avg_posting_len: Option<f64>,
    /// [config: cost.rerank_depth, default 1000]
    #[arg(long)]
    pub rerank_depth: Option<u64>,
    /// Print JSON instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Run files; the first two define the quadrant regions
    #[arg(required = true, num_args = 2..)]
    pub runs: Vec<PathBuf>,
    /// [config: paths.qrels]
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Corpus JSONL; negatives are drawn from it instead of the runs' documents
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory for the CSV bundle
    #[arg(long)]
    pub out: PathBuf,
    /// [config: analysis.seed, default 13]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Positive pairs [config: analysis.n_pos, default min(1500, available)]
    #[arg(long)]
    pub n_pos: Option<usize>,
    /// Negative pairs [config: analysis.n_neg, default n_pos]
    #[arg(long)]
    pub n_neg: Option<usize>,
    /// Histogram bins [config: analysis.bins, default 50]
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Internal(_) => "internal",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<fusekit::Error> for CliError {
    fn from(e: fusekit::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let message = text.split("\n\n").next().unwrap_or("invalid usage");
            eprintln!("error[usage]: {}", one_line(message.trim_start_matches("error: ")));
            return ExitCode::from(1);
        }
    };
    // Panics surface as one-line internal errors below, not as a backtrace.
    std::panic::set_hook(Box::new(|_| {}));
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| commands::run(cli)));
    let err = match result {
        Ok(Ok(())) => return ExitCode::SUCCESS,
        Ok(Err(e)) => e,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            CliError::Internal(msg)
        }
    };
    eprintln!("error[{}]: {}", err.kind(), one_line(err.message()));
    ExitCode::from(err.code())
}
