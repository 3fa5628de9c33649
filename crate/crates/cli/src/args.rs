use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use topic_score::{SvdMethod, SynthConfig, Variant};

#[derive(Debug, Parser)]
#[command(name = "topic-score", version, about = "Spectral topic model estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate topics from a word-count corpus.
    Fit(FitArgs),
    /// Monte Carlo evaluation on synthetic corpora.
    Synth(SynthArgs),
    /// Fit the noiseless expected frequencies of a synthetic model and check
    /// that the topics are recovered exactly.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Uci,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SvdArg {
    Auto,
    Dense,
    Randomized,
}

impl From<SvdArg> for SvdMethod {
    fn from(s: SvdArg) -> Self {
        match s {
            SvdArg::Auto => SvdMethod::Auto,
            SvdArg::Dense => SvdMethod::Dense,
            SvdArg::Randomized => SvdMethod::Randomized,
        }
    }
}

/// Ratio clamp: a positive real or `inf`.
#[derive(Debug, Clone, Copy)]
pub struct Threshold(pub f64);

impl std::str::FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => f64::INFINITY,
            other => other.parse::<f64>().map_err(|e| format!("{e}"))?,
        };
        if t > 0.0 {
            Ok(Threshold(t))
        } else {
            Err(format!("threshold must be positive or 'inf', got {s}"))
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Number of topics.
    #[arg(long)]
    pub k: usize,
    /// Clamp for the entry-wise singular vector ratios (`inf` disables it).
    #[arg(long, default_value = "inf")]
    pub t: Threshold,
    /// Number of k-means clusters [default: 10 * k].
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub kmeans_restarts: usize,
    #[arg(long, default_value_t = 300)]
    pub kmeans_max_iter: usize,
    #[arg(long, value_enum, default_value_t = SvdArg::Auto)]
    pub svd: SvdArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Uci)]
    pub format: Format,
    /// One word per line, in row order.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// One stopword per line; needs --vocab.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub keep_top_words: Option<usize>,
    /// Fraction of the shortest documents to drop.
    #[arg(long, default_value_t = 0.0)]
    pub drop_short_docs: f64,
    #[command(flatten)]
    pub est: EstimatorArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Include wall-clock timings in the outputs (makes them nondeterministic).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Basic,
    Zipf,
    TwoScale,
    NearAnchorHomog,
    NearAnchorZipf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Document length.
    #[arg(long, default_value_t = 500)]
    pub big_n: u64,
    /// Anchor words per topic.
    #[arg(long, default_value_t = 5)]
    pub m_p: usize,
    /// Mass of each anchor word.
    #[arg(long, default_value_t = 0.01)]
    pub delta_p: f64,
    /// Pure documents per topic.
    #[arg(long, default_value_t = 5)]
    pub m_n: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Basic)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 100.0)]
    pub ps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub hmax: f64,
    #[arg(long, default_value_t = 0.0)]
    pub pd: f64,
}

impl ModelArgs {
    pub fn config(&self, k: usize, seed: u64) -> SynthConfig {
        let variant = match self.variant {
            VariantArg::Basic => Variant::Basic,
            VariantArg::Zipf => Variant::Zipf { p_s: self.ps },
            VariantArg::TwoScale => Variant::TwoScale { h_max: self.hmax },
            VariantArg::NearAnchorHomog => Variant::NearAnchorHomog { p_d: self.pd },
            VariantArg::NearAnchorZipf => Variant::NearAnchorZipf {
                p_s: self.ps,
                p_d: self.pd,
            },
        };
        SynthConfig {
            p: self.p,
            n: self.n,
            big_n: self.big_n,
            k,
            m_p: self.m_p,
            delta_p: self.delta_p,
            m_n: self.m_n,
            variant,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub est: EstimatorArgs,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub est: EstimatorArgs,
    #[arg(long)]
    pub out: PathBuf,
}
