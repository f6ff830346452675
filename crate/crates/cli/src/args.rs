use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use spade_core::{Algorithm, Mode, SpadeParams, TransformConfig, WindowKind};

#[derive(Debug, Parser)]
#[command(name = "spade", version, about = "Sparse audio declipping")]
pub struct Cli {
    /// Run every block on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Peak-normalize and hard-clip a WAV file, writing the clipped audio and its mask.
    Clip(ClipArgs),
    /// Restore a clipped WAV file.
    Declip(DeclipArgs),
    /// Compare original, clipped and restored signals.
    Eval(EvalArgs),
    /// Run a batch experiment from a preset or JSON config.
    Experiment(ExperimentArgs),
    /// Write a synthetic test signal.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ClipArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Mask sidecar path; defaults to OUT with a `.mask.json` extension.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, default_value_t = 1024)]
    pub win_len: usize,
    #[arg(long, default_value_t = 0.75)]
    pub overlap: f64,
    #[arg(long, default_value = "hann")]
    pub window: WindowKind,
    #[arg(long, default_value_t = 1)]
    pub redundancy: usize,
    #[arg(long, default_value = "segmented")]
    pub mode: Mode,
}

impl TransformArgs {
    pub fn config(&self) -> TransformConfig {
        TransformConfig {
            win_len: self.win_len,
            overlap_fraction: self.overlap,
            window_kind: self.window,
            redundancy: self.redundancy,
            mode: self.mode,
        }
    }
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Sparsity step; 1 in segmented mode, 100 in whole mode when omitted.
    #[arg(long = "s")]
    pub s: Option<usize>,
    #[arg(long = "r", default_value_t = 1)]
    pub r: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 3000)]
    pub max_iter: usize,
}

impl ParamArgs {
    pub fn params(&self, mode: Mode) -> SpadeParams {
        let base = match mode {
            Mode::Segmented => SpadeParams::default(),
            Mode::WholeSignal => SpadeParams::whole_signal(),
        };
        SpadeParams {
            s: self.s.unwrap_or(base.s),
            r: self.r,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Args)]
pub struct DeclipArgs {
    pub input: PathBuf,
    /// Mask sidecar written by `spade clip`.
    #[arg(long, conflicts_with = "theta", required_unless_present = "theta")]
    pub mask: Option<PathBuf>,
    /// Detect the mask from the input at this threshold instead.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value = "aspade")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub transform: TransformArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Stats JSON path; defaults to OUT with a `.stats.json` extension.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Include per-iteration residual traces in the stats file.
    #[arg(long)]
    pub traces: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub original: PathBuf,
    pub clipped: PathBuf,
    pub restored: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Append the report row to this CSV (header written when new).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-block SDR with this block length.
    #[arg(long)]
    pub blockwise_len: Option<usize>,
    #[arg(long, requires = "blockwise_len")]
    pub blockwise_hop: Option<usize>,
    /// Destination of the per-block CSV.
    #[arg(long, requires = "blockwise_len")]
    pub blockwise_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in layout: whole, segmented, window_length or overlap.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the clipping thresholds.
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// Override the corpus duration of synthetic entries, in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Override the algorithm list.
    #[arg(long, value_delimiter = ',')]
    pub algo: Option<Vec<Algorithm>>,
    /// Write per-block SDR with this block length.
    #[arg(long)]
    pub blockwise_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// sparse_sines[:COUNT[:FMIN:FMAX]], chirp[:F0:F1] or noise_mix[:SPARSITY].
    #[arg(long, default_value = "sparse_sines:5")]
    pub generator: String,
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 16_000)]
    pub rate: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
